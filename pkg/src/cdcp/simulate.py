"""Thinning simulation of the (possibly tilted) compound dynamic contagion process.

External (shot-noise) arrivals come first from a thinned Poisson stream;
self-excited arrivals then follow by Ogata-style thinning against a local
bound that is recomputed at every candidate and never looks further ahead
than ``dt_max``.
"""

from __future__ import annotations

import bisect
import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterator, Optional, Sequence

import numpy as np

from .distributions import JumpDist
from .errors import ConfigInvalid, DominationViolated, OutOfHorizon, UnboundedRate
from .esscher import PhysicalModel, TiltedModel

DEFAULT_DT_MAX = 0.1
_BOUND_SLACK = 1.0 + 1e-12
_BUF = 64


def path_rng(seed: int, index: int) -> np.random.Generator:
    """Independent Philox stream for path ``index`` under master ``seed``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(index),))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(eq=False)
class SimPath:
    """One realised trajectory on [0, horizon].

    ``level`` is the mean-reversion level: a float, or values on the
    uniform grid ``level_grid`` (piecewise linear in between).
    ``accept_intensity`` keeps the pre-jump intensity used when each
    self-event was accepted.
    """

    horizon: float
    lambda0: float
    delta: float
    ext_times: np.ndarray
    ext_marks: np.ndarray
    self_times: np.ndarray
    self_marks: np.ndarray
    claims: np.ndarray
    level: float | np.ndarray = 0.0
    level_grid: Optional[np.ndarray] = None
    accept_intensity: Optional[np.ndarray] = None

    def _check(self, t):
        t_arr = np.asarray(t, dtype=float)
        if np.any(t_arr < 0) or np.any(t_arr > self.horizon * (1 + 1e-12)):
            raise OutOfHorizon(f"t outside [0, {self.horizon}]")
        return t_arr

    def level_at(self, t):
        if self.level_grid is None:
            return np.full(np.shape(t), float(self.level)) if np.ndim(t) else float(self.level)
        return np.interp(t, self.level_grid, self.level)

    def N_at(self, t):
        n = np.searchsorted(self.self_times, t, side="right")
        return int(n) if np.ndim(t) == 0 else n

    def M_at(self, t):
        n = np.searchsorted(self.ext_times, t, side="right")
        return int(n) if np.ndim(t) == 0 else n

    def C_at(self, t):
        csum = np.concatenate([[0.0], np.cumsum(self.claims)])
        out = csum[self.N_at(t)]
        return float(out) if np.ndim(t) == 0 else out

    @property
    def C_T(self) -> float:
        return float(self.claims.sum())

    def lambda_at(self, t):
        """Intensity at t, right-continuous (a jump at t is included)."""
        t_arr = self._check(t)
        a_t = self.level_at(t_arr)
        out = a_t + (self.lambda0 - a_t) * np.exp(-self.delta * t_arr)
        for times, marks in ((self.ext_times, self.ext_marks), (self.self_times, self.self_marks)):
            if times.size:
                lag = t_arr[..., None] - times
                out = out + np.sum(np.where(lag >= 0, marks * np.exp(-self.delta * np.maximum(lag, 0.0)), 0.0), axis=-1)
        return float(out) if np.ndim(t) == 0 else out

    def Lambda_at(self, t):
        """Integrated intensity over [0, t], exact term by term."""
        t_arr = self._check(t)
        d = self.delta
        total = self.lambda0 * -np.expm1(-d * t_arr) / d
        if self.level_grid is None:
            total = total + self._level_integral(t_arr)
        else:
            total = total + np.vectorize(self._level_integral, otypes=[float])(t_arr)
        for times, marks in ((self.ext_times, self.ext_marks), (self.self_times, self.self_marks)):
            if times.size:
                lag = np.maximum(t_arr[..., None] - times, 0.0)
                total = total + np.sum(marks * -np.expm1(-d * lag), axis=-1) / d
        return float(total) if np.ndim(t) == 0 else total

    def _level_integral(self, t: float) -> float:
        # int_0^t a(s) (1 - exp(-delta s)) ds
        d = self.delta
        if self.level_grid is None:
            a = float(self.level)
            return a * t - a * -np.expm1(-d * t) / d
        g = self.level_grid
        k = int(np.searchsorted(g, t, side="right"))
        knots = np.append(g[:k], t) if g[k - 1] < t else g[:k]
        vals = np.interp(knots, g, self.level)
        s0, s1 = knots[:-1], knots[1:]
        a0, a1 = vals[:-1], vals[1:]
        slope = (a1 - a0) / (s1 - s0)
        plain = 0.5 * (a0 + a1) * (s1 - s0)

        def prim(s, a_s):
            # antiderivative of (a0 + slope*(s - s0)) * exp(-d s)
            return -np.exp(-d * s) * (a_s / d + slope / d**2)

        weighted = prim(s1, a1) - prim(s0, a0)
        return float(np.sum(plain - weighted))

    def trajectory(self, grid: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
        """Intensity and aggregate loss sampled on ``grid``."""
        grid = np.asarray(grid, dtype=float)
        lam = self.lambda_at(grid)
        idx = np.searchsorted(self.self_times, grid, side="right")
        csum = np.concatenate([[0.0], np.cumsum(self.claims)])
        return lam, csum[idx]

    def event_rows(self, path_id: int) -> list[tuple]:
        rows = [(path_id, "external", t, x) for t, x in zip(self.ext_times, self.ext_marks)]
        for t, y, xi in zip(self.self_times, self.self_marks, self.claims):
            rows.append((path_id, "self", t, y))
            rows.append((path_id, "claim", t, xi))
        rows.sort(key=lambda r: (r[2], r[1]))
        return rows


class _Grid1D:
    """Piecewise-linear function on a uniform grid, cheap scalar evaluation."""

    __slots__ = ("h", "v", "n")

    def __init__(self, h: float, values: np.ndarray):
        self.h = h
        self.v = [float(x) for x in values]
        self.n = len(self.v) - 1

    def __call__(self, t: float) -> float:
        x = t / self.h
        i = int(x)
        if i >= self.n:
            return self.v[self.n]
        w = x - i
        return self.v[i] + w * (self.v[i + 1] - self.v[i])


def _const(c: float) -> Callable[[float], float]:
    return lambda t: c


@dataclass
class _Dynamics:
    lambda0: float
    delta: float
    level: Callable[[float], float]
    multiplier: Callable[[float], float]
    ext_rate_grid: Optional[np.ndarray]
    ext_rate_const: float
    grid: Optional[np.ndarray]
    ext_mark_rate: Callable[[float], float]
    ext_mark_shape: float
    self_mark_rate: Callable[[float], float]
    self_mark_shape: float
    claims: JumpDist
    level_values: Optional[np.ndarray]
    const_level: float


def _dynamics(model, T: float) -> _Dynamics:
    if isinstance(model, PhysicalModel):
        return _Dynamics(
            model.lambda0, model.delta, _const(model.a), _const(1.0),
            None, model.rho, None,
            _const(model.H.rate), model.H.shape,
            _const(model.G.rate), model.G.shape,
            model.J, None, model.a,
        )
    if isinstance(model, TiltedModel):
        if T > model.horizon * (1 + 1e-12):
            raise OutOfHorizon(f"simulation horizon {T} beyond the B grid ({model.horizon})")
        grid, B = model.bcurve.grid, model.bcurve.values
        h = model.bcurve.step
        c = model.rate_multiplier(grid)
        m = model.base
        ext_rate = model.external_rate(grid)
        ext_mark = m.H.rate - B
        self_mark = m.G.rate - B
        if model.representation == "lambda_tilde":
            level = c * m.a
            mult = np.ones_like(c)
            ext_mark = ext_mark / c
            self_mark = self_mark / c
        else:
            level = np.full_like(c, m.a)
            mult = c
        return _Dynamics(
            m.lambda0, m.delta, _Grid1D(h, level), _Grid1D(h, mult),
            ext_rate, 0.0, grid,
            _Grid1D(h, ext_mark), 1.0,
            _Grid1D(h, self_mark), 1.0,
            model.claims, level, 0.0,
        )
    raise ConfigInvalid(f"cannot simulate a {type(model).__name__}")


def sample_inhomogeneous_poisson(
    T: float,
    rate_fn: Callable,
    rng: np.random.Generator,
    grid: Optional[np.ndarray] = None,
    n_scan: int = 4001,
) -> np.ndarray:
    """Thinned Poisson arrivals on [0, T] for a bounded, vectorised rate function.

    The dominating rate is the maximum over ``grid`` (or an ``n_scan``
    point scan) inflated by a relative 1e-12; for rates that are monotone
    or piecewise linear on the grid this is an exact bound.
    """
    scan = np.linspace(0.0, T, n_scan) if grid is None else np.asarray(grid)
    vals = np.asarray(rate_fn(scan), dtype=float)
    if not np.all(np.isfinite(vals)):
        raise UnboundedRate("rate function is not finite on [0, T]")
    if np.any(vals < 0):
        raise ConfigInvalid("rate function must be non-negative")
    rmax = float(vals.max()) * _BOUND_SLACK
    if rmax <= 0:
        return np.empty(0)
    n = rng.poisson(rmax * T)
    cand = np.sort(rng.random(n) * T)
    u = rng.random(n)
    r = np.asarray(rate_fn(cand), dtype=float)
    if np.any(r > rmax):
        raise UnboundedRate("rate exceeds its grid maximum between scan points")
    return cand[u < r / rmax]


class _Stream:
    """Buffered scalar draws from a generator (uniforms and unit exponentials)."""

    __slots__ = ("rng", "_u", "_e")

    def __init__(self, rng):
        self.rng = rng
        self._u: list = []
        self._e: list = []

    def uniform(self) -> float:
        if not self._u:
            self._u = self.rng.random(_BUF).tolist()
            self._u.reverse()
        return self._u.pop()

    def exponential(self) -> float:
        if not self._e:
            self._e = self.rng.standard_exponential(_BUF).tolist()
            self._e.reverse()
        return self._e.pop()


def _mark(stream: _Stream, rate: float, shape: float) -> float:
    if shape == 1.0:
        return stream.exponential() / rate
    return stream.rng.gamma(shape) / rate


def simulate_cdcp(model, T: float, dt_max: float = DEFAULT_DT_MAX, rng: Optional[np.random.Generator] = None, *, _dyn: Optional[_Dynamics] = None) -> SimPath:
    """Simulate one path on [0, T] under the law of ``model``.

    ``model`` is a :class:`PhysicalModel` or a :class:`TiltedModel`; for
    the latter the representation flag decides the coordinates.
    """
    if not dt_max > 0:
        raise ConfigInvalid("dt_max must be positive")
    if not T > 0:
        raise ConfigInvalid("horizon must be positive")
    if rng is None:
        rng = np.random.default_rng()
    dyn = _dyn if _dyn is not None else _dynamics(model, T)
    d = dyn.delta
    exp = math.exp

    if dyn.ext_rate_grid is None:
        rate = dyn.ext_rate_const
        ext_t = sample_inhomogeneous_poisson(T, lambda s: np.full(np.shape(s), rate), rng, grid=np.array([0.0, T]))
    else:
        g, r = dyn.grid, dyn.ext_rate_grid
        ext_t = sample_inhomogeneous_poisson(T, lambda s: np.interp(s, g, r), rng, grid=np.append(g[g < T], T))
    stream = _Stream(rng)
    ext_x = [_mark(stream, dyn.ext_mark_rate(s), dyn.ext_mark_shape) for s in ext_t.tolist()]
    ext_list = ext_t.tolist()
    cum_x = [0.0]
    for x in ext_x:
        cum_x.append(cum_x[-1] + x)
    n_ext = len(ext_list)

    lam0, level, mult = dyn.lambda0, dyn.level, dyn.multiplier
    self_rate, self_shape = dyn.self_mark_rate, dyn.self_mark_shape
    t = 0.0
    ext_sum = 0.0  # external shot noise at time t
    haw = 0.0      # self-excited part at time t
    k = 0          # external events with time <= t
    self_t, self_y, accept = [], [], []

    def advance(t_old, t_new, ext_sum, haw, k):
        decay = exp(-d * (t_new - t_old))
        ext_sum *= decay
        haw *= decay
        while k < n_ext and ext_list[k] <= t_new:
            ext_sum += ext_x[k] * exp(-d * (t_new - ext_list[k]))
            k += 1
        return ext_sum, haw, k

    while t <= T:
        t1 = min(t + dt_max, T)
        k1 = bisect.bisect_right(ext_list, t1, lo=k)
        base_bound = level(t1) * -math.expm1(-d * t1) + lam0 * exp(-d * t)
        lam_max = mult(t1) * (base_bound + ext_sum + (cum_x[k1] - cum_x[k]) + haw) * _BOUND_SLACK
        dt = stream.exponential() / lam_max if lam_max > 0 else math.inf
        t_new = t + min(dt, dt_max)
        if t_new > T:
            break
        ext_sum, haw, k = advance(t, t_new, ext_sum, haw, k)
        t = t_new
        if dt > dt_max:
            continue
        a_t = level(t)
        lam = a_t + (lam0 - a_t) * exp(-d * t) + ext_sum + haw
        lam_eff = mult(t) * lam
        if lam_eff > lam_max:
            raise DominationViolated(f"intensity {lam_eff} above local bound {lam_max} at t={t}")
        if stream.uniform() * lam_max < lam_eff:
            y = _mark(stream, self_rate(t), self_shape)
            haw += y
            self_t.append(t)
            self_y.append(y)
            accept.append(lam)

    n_self = len(self_t)
    claims = np.asarray(dyn.claims.sample(rng, n_self), dtype=float).reshape(n_self)
    return SimPath(
        horizon=T,
        lambda0=lam0,
        delta=d,
        ext_times=ext_t,
        ext_marks=np.asarray(ext_x, dtype=float),
        self_times=np.asarray(self_t, dtype=float),
        self_marks=np.asarray(self_y, dtype=float),
        claims=claims,
        level=dyn.const_level if dyn.level_values is None else dyn.level_values,
        level_grid=dyn.grid,
        accept_intensity=np.asarray(accept, dtype=float),
    )


def simulate_paths(model, T: float, n_paths: int, seed: int, dt_max: float = DEFAULT_DT_MAX, start: int = 0) -> Iterator[SimPath]:
    """Paths ``start .. start + n_paths - 1`` of the stream family under ``seed``."""
    dyn = _dynamics(model, T)
    for i in range(start, start + n_paths):
        yield simulate_cdcp(model, T, dt_max, path_rng(seed, i), _dyn=dyn)


def _loss_block(args) -> np.ndarray:
    model, T, lo, hi, seed, dt_max = args
    out = np.empty(hi - lo)
    for j, p in enumerate(simulate_paths(model, T, hi - lo, seed, dt_max, start=lo)):
        out[j] = p.C_T
    return out


def terminal_losses(model, T: float, n_paths: int, seed: int, dt_max: float = DEFAULT_DT_MAX, workers: int = 1) -> np.ndarray:
    """C_T for paths 0..n_paths-1; identical for any worker count."""
    if workers <= 1 or n_paths < 2 * workers:
        return _loss_block((model, T, 0, n_paths, seed, dt_max))
    edges = np.linspace(0, n_paths, 4 * workers + 1).astype(int)
    jobs = [(model, T, int(lo), int(hi), seed, dt_max) for lo, hi in zip(edges[:-1], edges[1:]) if hi > lo]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(_loss_block, jobs))
    return np.concatenate(parts)


def event_log_csv(paths: Sequence[SimPath]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["path_id", "event_type", "time", "mark"])
    for i, p in enumerate(paths):
        for pid, kind, t, x in p.event_rows(i):
            w.writerow([pid, kind, f"{t:.9g}", f"{x:.9g}"])
    return buf.getvalue()


def lambda_at(path: SimPath, t):
    return path.lambda_at(t)


def Lambda_at(path: SimPath, t) -> float:
    return path.Lambda_at(t)
