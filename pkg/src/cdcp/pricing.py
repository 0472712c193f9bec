"""Crude Monte Carlo stop-loss premiums and Esscher-parameter sweeps."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, replace
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import CDCPError, InsufficientPaths
from .esscher import LAMBDA_TILDE, EsscherParams, PhysicalModel, TiltedModel, solve_B, tilt_model
from .moments import mean_C_P, mean_C_star
from .simulate import DEFAULT_DT_MAX, terminal_losses

Z95 = 1.959963984540054
DEFAULT_PATHS = 10_000



@dataclass(frozen=True)
class PremiumEstimate:
    value: float
    stderr: float
    ci95: tuple[float, float]
    n_paths: int
    seed: int
    measure: str
    retention: float
    horizon: float

    @classmethod
    def from_payoffs(cls, payoffs: np.ndarray, *, seed, measure, retention, horizon) -> "PremiumEstimate":
        n = payoffs.size
        if n < 2:
            raise InsufficientPaths("need at least two paths for a standard error")
        value = float(np.mean(payoffs))
        stderr = float(np.std(payoffs, ddof=1) / math.sqrt(n))
        return cls(value, stderr, (value - Z95 * stderr, value + Z95 * stderr), n, seed, measure, retention, horizon)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["ci_lo"], d["ci_hi"] = d.pop("ci95")
        return d


def measure_of(model) -> str:
    return "Pstar" if isinstance(model, TiltedModel) else "P"


def stop_loss_payoff(losses: np.ndarray, L: float) -> np.ndarray:
    return np.maximum(losses - L, 0.0)


def stop_loss_premium(
    model,
    L: float,
    t: float = 1.0,
    n_paths: int = DEFAULT_PATHS,
    seed: int = 0,
    dt_max: float = DEFAULT_DT_MAX,
    workers: int = 1,
    losses: Optional[np.ndarray] = None,
) -> PremiumEstimate:
    """Estimate E[(C_t - L)^+] under the measure the model describes."""
    if L < 0:
        raise ValueError("retention must be >= 0")
    if n_paths < 2:
        raise InsufficientPaths("need at least two paths")
    if losses is None:
        losses = terminal_losses(model, t, n_paths, seed, dt_max, workers)
    return PremiumEstimate.from_payoffs(
        stop_loss_payoff(losses, L), seed=seed, measure=measure_of(model), retention=float(L), horizon=t
    )


def premium_table(
    model,
    retentions: Sequence[float],
    t: float = 1.0,
    n_paths: int = DEFAULT_PATHS,
    seed: int = 0,
    dt_max: float = DEFAULT_DT_MAX,
    workers: int = 1,
) -> list[PremiumEstimate]:
    """One estimate per retention, all from the same simulated losses."""
    if not len(retentions):
        return []
    losses = terminal_losses(model, t, n_paths, seed, dt_max, workers)
    return [stop_loss_premium(model, L, t, n_paths, seed, losses=losses) for L in retentions]


@dataclass(frozen=True)
class SweepRow:
    param: str
    value: float
    analytic: Optional[float] = None
    mean: Optional[PremiumEstimate] = None
    stop_loss: Optional[PremiumEstimate] = None
    skipped: Optional[str] = None


def sensitivity_sweep(
    model: PhysicalModel,
    esscher: EsscherParams,
    param: str,
    values: Iterable[float],
    t: float = 1.0,
    n_paths: int = DEFAULT_PATHS,
    seed: int = 0,
    retention: float = 25.0,
    dt_max: float = DEFAULT_DT_MAX,
    representation: str = LAMBDA_TILDE,
    n_grid: Optional[int] = None,
    workers: int = 1,
) -> list[SweepRow]:
    """Tilted mean and stop-loss premium as one parameter moves.

    ``param`` is one of theta, psi, nu (B is re-solved per value) or L
    (retention; the tilted model is fixed).  Values that break the
    parameter constraints are reported as skipped rather than raised.
    The same master seed is used for every value.
    """
    if param not in ("theta", "psi", "nu", "L"):
        raise ValueError(f"cannot sweep {param!r}")
    rows = []
    cached = None
    for v in values:
        v = float(v)
        try:
            if param == "L":
                if cached is None:
                    cached = _tilted(model, esscher, t, representation, n_grid)
                    cached = (cached, terminal_losses(cached, t, n_paths, seed, dt_max, workers))
                tm, losses = cached
                L = v
            else:
                e = replace(esscher, **{param: v})
                tm = _tilted(model, e, t, representation, n_grid)
                losses = terminal_losses(tm, t, n_paths, seed, dt_max, workers)
                L = retention
        except CDCPError as exc:
            rows.append(SweepRow(param, v, skipped=f"{type(exc).__name__}: {exc}"))
            continue
        rows.append(
            SweepRow(
                param,
                v,
                analytic=mean_C_star(t, tm),
                mean=stop_loss_premium(tm, 0.0, t, n_paths, seed, losses=losses),
                stop_loss=stop_loss_premium(tm, L, t, n_paths, seed, losses=losses),
            )
        )
    return rows


def _tilted(m, e, t, representation, n_grid) -> TiltedModel:
    return tilt_model(m, e, solve_B(m, e, t, n_grid), representation)


def analytic_mean(model, t: float) -> float:
    return mean_C_star(t, model) if isinstance(model, TiltedModel) else mean_C_P(t, model)


CSV_COLUMNS = ("param_value", "L", "measure", "estimate", "stderr", "ci_lo", "ci_hi", "analytic")


def estimate_rows(estimates: Sequence[PremiumEstimate], param_value="", analytic=None) -> list[dict]:
    rows = []
    for est in estimates:
        rows.append(
            {
                "param_value": param_value,
                "L": est.retention,
                "measure": est.measure,
                "estimate": est.value,
                "stderr": est.stderr,
                "ci_lo": est.ci95[0],
                "ci_hi": est.ci95[1],
                "analytic": "" if analytic is None else analytic,
            }
        )
    return rows


def sweep_rows(rows: Sequence[SweepRow]) -> list[dict]:
    out = []
    for r in rows:
        if r.skipped:
            out.append({"param_value": r.value, "L": "", "measure": "Pstar", "estimate": "", "stderr": "",
                        "ci_lo": "", "ci_hi": "", "analytic": "", "skipped": r.skipped})
            continue
        for est in (r.mean, r.stop_loss):
            out.extend(estimate_rows([est], r.value, r.analytic))
    return out


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.9g}"
    return str(x)


def rows_to_csv(rows: Sequence[dict], columns: Sequence[str] = CSV_COLUMNS, header: Sequence[str] = ()) -> str:
    buf = io.StringIO()
    for line in header:
        buf.write(f"# {line}\n")
    extra = sorted({k for r in rows for k in r} - set(columns))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(columns) + extra)
    for r in rows:
        w.writerow([_fmt(r.get(c, "")) for c in list(columns) + extra])
    return buf.getvalue()
