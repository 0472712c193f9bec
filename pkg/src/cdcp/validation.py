"""Self-checks that tie the analytic and simulation sides together.

Each check returns a :class:`Check`; ``run_all`` is what the ``validate``
subcommand prints.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from . import esscher as es
from .moments import InhomParams, mean_C_inhom, mean_C_P, mean_C_tilted
from .simulate import DEFAULT_DT_MAX, simulate_paths, terminal_losses


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    value: float
    target: float
    tolerance: float
    detail: str = ""

    def to_dict(self) -> dict:
        return asdict(self)

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return f"{flag} {self.name}: value={self.value:.9g} target={self.target:.9g} tol={self.tolerance:.3g} {self.detail}".rstrip()


def bcurve_identity(m, e, bcurve, tol: float = 1e-6) -> Check:
    """G(B(t)) = t on every grid node."""
    if m.G.kind == "exponential":
        g = es.g_of_B_exponential(bcurve.values, m, e)
    else:
        g = np.array([es.g_of_B(v, m, e, bcurve.b_plus) if v > e.b else 0.0 for v in bcurve.values])
    err = float(np.max(np.abs(g - bcurve.grid)))
    return Check("bcurve_identity", err <= tol, err, 0.0, tol, f"{bcurve.grid.size} nodes")


def b_plus_agreement(m, e, tol: float = 1e-10) -> Check:
    closed = es.b_plus(m, e)
    bis = es.b_plus_bisect(m, e)
    return Check("b_plus_closed_vs_bisection", abs(closed - bis) <= tol, closed, bis, tol)


def inhom_reduction(m, t: float, rtol: float = 1e-8) -> Check:
    exact = mean_C_P(t, m)
    quad = mean_C_inhom(t, InhomParams.constant(m))
    rel = abs(quad - exact) / abs(exact)
    return Check("inhomogeneous_reduces_to_closed_form", rel <= rtol, quad, exact, rtol, "relative")


def _mc_mean_check(name, losses, target, k=3.0) -> Check:
    mean = float(np.mean(losses))
    se = float(np.std(losses, ddof=1) / math.sqrt(losses.size))
    return Check(name, abs(mean - target) <= k * se, mean, target, k * se, f"n={losses.size} stderr={se:.3g}")


def moment_vs_mc(model, t: float, n_paths: int, seed: int, dt_max=DEFAULT_DT_MAX, workers=1) -> Check:
    """MC mean of C_t against the quadrature/closed-form mean, 3 stderr."""
    losses = terminal_losses(model, t, n_paths, seed, dt_max, workers)
    if isinstance(model, es.TiltedModel):
        return _mc_mean_check("mean_C_tilted_vs_mc", losses, mean_C_tilted(t, model))
    return _mc_mean_check("mean_C_P_vs_mc", losses, mean_C_P(t, model))


def martingale_means(m, e, times: Sequence[float], n_paths: int, seed: int, dt_max=DEFAULT_DT_MAX):
    """Sample mean and stderr of the exponential martingale at each time, under P."""
    times = np.asarray(times, dtype=float)
    bc = es.solve_B(m, e, float(times.max()))
    kc = es.solve_K(m, e, bc)
    vals = np.empty((n_paths, times.size))
    for i, p in enumerate(simulate_paths(m, float(times.max()), n_paths, seed, dt_max)):
        vals[i] = es.martingale_statistic(p, bc, kc, e, times)
    return vals.mean(axis=0), vals.std(axis=0, ddof=1) / math.sqrt(n_paths)


def martingale_check(m, e, times=(0.25, 0.5, 1.0), n_paths=10_000, seed=0, dt_max=DEFAULT_DT_MAX) -> list[Check]:
    target = math.exp(e.b * m.lambda0)
    means, ses = martingale_means(m, e, times, n_paths, seed, dt_max)
    return [
        Check(f"martingale_t={t:g}", abs(mu - target) <= 3 * se, float(mu), target, float(3 * se),
              f"n={n_paths} stderr={se:.3g}")
        for t, mu, se in zip(times, means, ses)
    ]


def run_all(cfg, workers: int = 1) -> list[Check]:
    m, e = cfg.model, cfg.esscher
    tm = cfg.tilted()
    checks = [
        bcurve_identity(m, e, tm.bcurve),
        b_plus_agreement(m, e),
        Check("regime", tm.bcurve.regime.kind in (1, 2), tm.bcurve.regime.kind, 1, 0, str(tm.bcurve.regime)),
        inhom_reduction(m, cfg.t),
        moment_vs_mc(m, cfg.t, cfg.n_paths, cfg.seed, cfg.dt_max, workers),
        moment_vs_mc(tm, cfg.t, cfg.n_paths, cfg.seed, cfg.dt_max, workers),
    ]
    times = [0.25 * cfg.t, 0.5 * cfg.t, cfg.t]
    checks += martingale_check(m, e, times, cfg.n_paths, cfg.seed, cfg.dt_max)
    return checks
