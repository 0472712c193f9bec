"""JSON run configuration: defaults, loading and cross-field validation."""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

from . import distributions as dist
from .errors import ConfigInvalid
from .esscher import (
    GRID_PER_YEAR,
    LAMBDA,
    LAMBDA_TILDE,
    EsscherParams,
    PhysicalModel,
    TiltedModel,
    solve_B,
    tilt_model,
)

REFERENCE_RETENTIONS = [0.0, 25.0, 38.15, 50.0, 75.0, 100.0]

# the parameter grids of the three sensitivity tables
REFERENCE_SWEEPS = {
    "theta": [1.0, 1.25, 1.5, 1.75],
    "psi": [1.0, 1.25, 1.5, 1.75],
    "nu": [-0.01, -0.05, -0.08, -0.1],
}

DEFAULTS: dict[str, Any] = {
    "model": {
        "lambda0": 1.0,
        "a": 1.0,
        "delta": 3.0,
        "rho": 4.0,
        "G": {"kind": "exponential", "rate": 1.0},
        "H": {"kind": "exponential", "rate": 2.0},
        "J": {"kind": "gamma", "rate": 0.4, "shape": 3.0},
    },
    "esscher": {
        "theta": 1.25,
        "psi": 1.25,
        "nu": -0.05,
        "b": 0.01,
        "grid_points": GRID_PER_YEAR,
        "representation": LAMBDA_TILDE,
    },
    "run": {
        "t": 1.0,
        "dt_max": 0.1,
        "n_paths": 10_000,
        "seed": 20240601,
        "retentions": REFERENCE_RETENTIONS,
        "sweep": {"param": "theta", "values": REFERENCE_SWEEPS["theta"], "retention": 25.0},
        "n_trajectories": 25,
        "out_dir": None,
        "format": "csv",
    },
}


def _merge(base: dict, override: dict, where: str = "") -> dict:
    out = copy.deepcopy(base)
    for k, v in override.items():
        if k not in base:
            raise ConfigInvalid(f"unknown config key {where}{k!r}")
        if isinstance(base[k], dict) and k not in ("G", "H", "J"):
            if not isinstance(v, dict):
                raise ConfigInvalid(f"{where}{k} must be an object")
            out[k] = _merge(base[k], v, f"{where}{k}.")
        else:
            out[k] = copy.deepcopy(v)
    return out


def _number(block: dict, key: str, where: str) -> float:
    v = block[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigInvalid(f"{where}.{key} must be a finite number, got {v!r}")
    return float(v)


def _int(block: dict, key: str, where: str, lo: int) -> int:
    v = block[key]
    if isinstance(v, bool) or not isinstance(v, int) or v < lo:
        raise ConfigInvalid(f"{where}.{key} must be an integer >= {lo}, got {v!r}")
    return v


@dataclass(frozen=True, eq=False)
class RunConfig:
    """A fully resolved run: every default filled, every constraint checked."""

    raw: dict
    model: PhysicalModel
    esscher: EsscherParams
    grid_points: int
    representation: str
    t: float
    dt_max: float
    n_paths: int
    seed: int
    retentions: list
    sweep: dict
    n_trajectories: int
    out_dir: Optional[str]
    fmt: str
    _tilted: dict = field(default_factory=dict, repr=False)

    @property
    def n_grid(self) -> int:
        return max(2, math.ceil(self.grid_points * self.t))

    def tilted(self, esscher: Optional[EsscherParams] = None) -> TiltedModel:
        e = esscher or self.esscher
        key = (e.theta, e.psi, e.nu, e.b)
        if key not in self._tilted:
            bc = solve_B(self.model, e, self.t, self.n_grid)
            self._tilted[key] = tilt_model(self.model, e, bc, self.representation)
        return self._tilted[key]

    def to_json(self) -> str:
        """Canonical single-line form, embedded in every output."""
        return json.dumps(self.raw, sort_keys=True, separators=(",", ":"))

    def with_overrides(self, **run_fields) -> "RunConfig":
        raw = copy.deepcopy(self.raw)
        for k, v in run_fields.items():
            if v is not None:
                raw["run"][k] = v
        return from_dict(raw)


def from_dict(data: dict, check_regime: bool = True) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigInvalid("config must be a JSON object")
    raw = _merge(DEFAULTS, data)
    mb, eb, rb = raw["model"], raw["esscher"], raw["run"]

    try:
        model = PhysicalModel(
            lambda0=_number(mb, "lambda0", "model"),
            a=_number(mb, "a", "model"),
            delta=_number(mb, "delta", "model"),
            rho=_number(mb, "rho", "model"),
            G=dist.from_dict(mb["G"]),
            H=dist.from_dict(mb["H"]),
            J=dist.from_dict(mb["J"]),
        )
    except (KeyError, TypeError) as exc:
        raise ConfigInvalid(f"bad distribution descriptor: {exc}") from exc
    esscher = EsscherParams(
        theta=_number(eb, "theta", "esscher"),
        psi=_number(eb, "psi", "esscher"),
        nu=_number(eb, "nu", "esscher"),
        b=_number(eb, "b", "esscher"),
    )
    esscher.excitation(model)  # nu against the claim law
    rep = eb["representation"]
    if rep not in (LAMBDA, LAMBDA_TILDE):
        raise ConfigInvalid(f"esscher.representation must be {LAMBDA!r} or {LAMBDA_TILDE!r}")

    t = _number(rb, "t", "run")
    dt_max = _number(rb, "dt_max", "run")
    if not t > 0:
        raise ConfigInvalid("run.t must be positive")
    if not dt_max > 0:
        raise ConfigInvalid("run.dt_max must be positive")
    retentions = rb["retentions"]
    if not isinstance(retentions, list) or any(
        isinstance(L, bool) or not isinstance(L, (int, float)) or not L >= 0 for L in retentions
    ):
        raise ConfigInvalid("run.retentions must be a list of numbers >= 0")
    sweep = rb["sweep"]
    if not isinstance(sweep, dict) or sweep.get("param") not in ("theta", "psi", "nu", "L"):
        raise ConfigInvalid("run.sweep.param must be one of theta, psi, nu, L")
    if not isinstance(sweep.get("values"), list):
        raise ConfigInvalid("run.sweep.values must be a list")
    if rb["format"] not in ("csv", "json"):
        raise ConfigInvalid("run.format must be csv or json")

    cfg = RunConfig(
        raw=raw,
        model=model,
        esscher=esscher,
        grid_points=_int(eb, "grid_points", "esscher", 2),
        representation=rep,
        t=t,
        dt_max=dt_max,
        n_paths=_int(rb, "n_paths", "run", 2),
        seed=_int(rb, "seed", "run", 0),
        retentions=[float(L) for L in retentions],
        sweep=sweep,
        n_trajectories=_int(rb, "n_trajectories", "run", 0),
        out_dir=rb["out_dir"],
        fmt=rb["format"],
    )
    if check_regime:
        cfg.tilted()  # positive root, regime and horizon
    return cfg


def load(path: str | Path | None = None, check_regime: bool = True) -> RunConfig:
    if path is None:
        return from_dict({}, check_regime)
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigInvalid(f"{path}: not valid JSON ({exc})") from exc
    except OSError as exc:
        raise ConfigInvalid(f"{path}: {exc.strerror}") from exc
    return from_dict(data, check_regime)


def default_config() -> RunConfig:
    return from_dict({})
