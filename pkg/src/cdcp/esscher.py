"""Esscher measure change for the compound dynamic contagion process.

The exponential martingale

    exp(K(t)) theta^N_t exp(B(t) lambda_t) exp(-nu C_t) exp(phi Lambda_t) psi^M_t

needs the deterministic curves B and K.  B solves dB/dt = f1(B) with
B(0) = b and rises monotonically towards B_plus, the first positive root
of f1; K is a running integral of a functional of B.  Under the tilted
measure the process is again a (time-inhomogeneous) CDCP whose parameters
are read off B(t).
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.special import expit

from . import distributions as dist
from .distributions import JumpDist
from .errors import (
    ConfigInvalid,
    DivergentTransform,
    GridTooCoarse,
    HorizonExceedsRegime,
    InvalidTilt,
    NoPositiveRoot,
    OutOfDomain,
    OutOfHorizon,
    StatisticOverflow,
)
from .numerics import adaptive_simpson, cumulative, rk4

GRID_PER_YEAR = 2000
SATURATION = 1e-9
DEFAULT_B0 = 0.01
LAMBDA = "lambda"
LAMBDA_TILDE = "lambda_tilde"

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(12)


@dataclass(frozen=True)
class PhysicalModel:
    lambda0: float
    a: float
    delta: float
    rho: float
    G: JumpDist
    H: JumpDist
    J: JumpDist

    def __post_init__(self):
        if not self.lambda0 >= 0:
            raise ConfigInvalid("lambda0 must be >= 0")
        if not self.a >= 0:
            raise ConfigInvalid("mean-reversion level a must be >= 0")
        if not self.delta > 0:
            raise ConfigInvalid("decay rate delta must be positive")
        if not self.rho >= 0:
            raise ConfigInvalid("external arrival rate rho must be >= 0")

    @property
    def kappa(self) -> float:
        return self.delta - self.G.mean

    @property
    def stationary(self) -> bool:
        return self.kappa > 0


@dataclass(frozen=True)
class EsscherParams:
    theta: float = 1.25
    psi: float = 1.25
    nu: float = -0.05
    b: float = DEFAULT_B0

    def __post_init__(self):
        if not (self.theta >= 1 and self.psi >= 1):
            raise ConfigInvalid("theta and psi must be >= 1")
        if not self.nu <= 0:
            raise InvalidTilt(f"nu must be negative (or 0 for no claim tilt), got {self.nu}")
        if not self.b > 0:
            raise ConfigInvalid("initial condition b must be positive")

    def excitation(self, m: PhysicalModel) -> float:
        """theta * j_hat(nu): the factor multiplying the self-exciting rate."""
        if not self.nu > -m.J.rate:
            raise InvalidTilt(f"nu={self.nu} must exceed -rate(J)={-m.J.rate}")
        return self.theta * m.J.laplace(self.nu)

    def phi(self, m: PhysicalModel) -> float:
        return -(self.excitation(m) - 1.0)


@dataclass(frozen=True)
class Regime:
    kind: int
    t_star: Optional[float] = None

    def __str__(self) -> str:
        if self.kind == 2:
            return f"Type2(t_star={self.t_star:.9g})"
        return f"Type{self.kind}"


def f1(B, m: PhysicalModel, e: EsscherParams):
    """Right-hand side of the B ODE: delta*B - theta*j(nu)*(g(-B) - 1)."""
    return m.delta * B - e.excitation(m) * (m.G.laplace(-B) - 1.0)


def _f1_fast(delta: float, k: float, G: JumpDist):
    beta, shape = G.rate, G.shape

    def rhs(B):
        if B >= beta:
            raise DivergentTransform(f"B={B} reached rate(G)={beta}")
        return delta * B - k * ((beta / (beta - B)) ** shape - 1.0)

    return rhs


def _check_positive_root(m: PhysicalModel, e: EsscherParams) -> float:
    k = e.excitation(m)
    if not m.delta > k * m.G.mean:
        raise NoPositiveRoot(
            f"need delta > theta*j(nu)*mu_G: {m.delta} <= {k * m.G.mean:.9g}"
        )
    return k


def b_plus_bisect(m: PhysicalModel, e: EsscherParams, tol: float = 1e-13) -> float:
    """Smallest positive root of f1 by bracketed bisection."""
    k = _check_positive_root(m, e)
    rhs = _f1_fast(m.delta, k, m.G)
    beta = m.G.rate
    # f1 > 0 just right of 0 (positive slope) and -> -inf as B -> rate(G)
    lo = beta * 1e-9
    while rhs(lo) <= 0:
        lo *= 0.5
        if lo < 1e-300:
            raise NoPositiveRoot("f1 not positive near 0")
    hi = None
    for j in range(1, 200):
        cand = beta * (1.0 - 2.0 ** (-j))
        if rhs(cand) < 0:
            hi = cand
            break
        lo = cand
    if hi is None:
        raise NoPositiveRoot("could not bracket the root of f1")
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        if rhs(mid) > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo < tol:
            break
    return 0.5 * (lo + hi)


def b_plus(m: PhysicalModel, e: EsscherParams) -> float:
    """Attracting root of f1.  Closed form for exponential G."""
    k = _check_positive_root(m, e)
    if m.G.kind == dist.EXPONENTIAL:
        return m.G.rate - k / m.delta
    return b_plus_bisect(m, e)


def g_of_B(B: float, m: PhysicalModel, e: EsscherParams, bp: Optional[float] = None) -> float:
    """Time needed for the B ODE to climb from b to B.

    Integrates 1/f1 after the substitution z = log(B / (B_plus - B)), which
    turns the logarithmic end-point behaviour at 0 and B_plus into a
    bounded, smooth integrand.
    """
    if bp is None:
        bp = b_plus(m, e)
    if B < e.b or B >= bp:
        raise OutOfDomain(f"B={B} outside [b, B_plus) = [{e.b}, {bp})")
    if B == e.b:
        return 0.0
    rhs = _f1_fast(m.delta, e.excitation(m), m.G)
    beta = m.G.rate

    def integrand(z):
        u = bp * expit(z)
        gap = bp * expit(-z)
        if m.G.kind == dist.EXPONENTIAL:
            # f1 = delta*u*(B_plus - u)/(beta - u), free of cancellation near B_plus
            return (beta - u) / (bp * m.delta)
        return u * gap / (bp * rhs(u))

    z0 = math.log(e.b) - math.log(bp - e.b)
    z1 = math.log(B) - math.log(bp - B)
    return adaptive_simpson(integrand, z0, z1, rtol=1e-12, atol=1e-14)


def g_of_B_exponential(B, m: PhysicalModel, e: EsscherParams):
    """Closed form of g_of_B when G is exponential (partial fractions of 1/f1)."""
    if m.G.kind != dist.EXPONENTIAL:
        raise ConfigInvalid("closed form needs exponential G")
    beta, bp = m.G.rate, b_plus(m, e)
    B = np.asarray(B, dtype=float)
    out = (beta / bp * np.log(B / e.b) - (beta - bp) / bp * np.log((bp - B) / (bp - e.b))) / m.delta
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True, eq=False)
class BCurve:
    grid: np.ndarray
    values: np.ndarray
    b: float
    b_plus: float
    delta: float
    excitation: float
    G: JumpDist
    regime: Regime = field(default_factory=lambda: Regime(1))

    @property
    def horizon(self) -> float:
        return float(self.grid[-1])

    @property
    def step(self) -> float:
        return float(self.grid[1] - self.grid[0])

    @property
    def phi(self) -> float:
        return 1.0 - self.excitation

    def f1(self, B):
        return self.delta * B - self.excitation * (self.G.laplace(-B) - 1.0)

    def __call__(self, t):
        t_arr = np.asarray(t, dtype=float)
        if np.any(t_arr < -1e-12) or np.any(t_arr > self.horizon * (1 + 1e-12)):
            raise OutOfHorizon(f"t outside [0, {self.horizon}]")
        out = np.interp(t_arr, self.grid, self.values)
        return float(out) if np.ndim(t) == 0 else out

    def upto(self, t: float) -> tuple[np.ndarray, np.ndarray]:
        """Uniform grid over [0, t] and B on it, ending exactly at t.

        Off-grid t re-integrates from b with the same step size instead of
        interpolating.
        """
        if t < 0 or t > self.horizon * (1 + 1e-12):
            raise OutOfHorizon(f"t={t} outside [0, {self.horizon}]")
        h = self.step
        pos = t / h
        i = int(round(pos))
        if abs(pos - i) < 1e-9:
            i = min(i, self.grid.size - 1)
            return self.grid[: i + 1].copy(), self.values[: i + 1].copy()
        n = max(2, int(math.ceil(pos)))
        rhs = _f1_fast(self.delta, self.excitation, self.G)
        return np.linspace(0.0, t, n + 1), rk4(rhs, self.b, t, n)

    def to_csv(self, kcurve: Optional["KCurve"] = None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "B"] + (["K"] if kcurve is not None else []))
        for i, (t, B) in enumerate(zip(self.grid, self.values)):
            row = [f"{t:.9g}", f"{B:.9g}"]
            if kcurve is not None:
                row.append(f"{kcurve.values[i]:.9g}")
            w.writerow(row)
        return buf.getvalue()


def _segment_G(rhs, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Gauss-Legendre integral of 1/f1 over each [lo_i, hi_i]."""
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    u = mid[:, None] + half[:, None] * _GL_NODES[None, :]
    vals = 1.0 / np.vectorize(rhs)(u)
    return half * (vals @ _GL_WEIGHTS)


def solve_B(
    m: PhysicalModel,
    e: EsscherParams,
    T: float,
    n_grid: Optional[int] = None,
    tol: float = 1e-6,
) -> BCurve:
    """B on a uniform grid over [0, T] by RK4, cross-checked against the inverse of g_of_B."""
    if not T > 0:
        raise ConfigInvalid("horizon T must be positive")
    bp = b_plus(m, e)
    if not e.b < bp:
        raise OutOfDomain(f"b={e.b} must lie below B_plus={bp:.9g}")
    if n_grid is None:
        n_grid = max(2, int(math.ceil(GRID_PER_YEAR * T)))
    k = e.excitation(m)
    rhs = _f1_fast(m.delta, k, m.G)
    grid = np.linspace(0.0, T, n_grid + 1)
    try:
        values = rk4(rhs, e.b, T, n_grid)
        ok = bool(np.all(np.isfinite(values)))
    except DivergentTransform:
        ok = False
    if ok:
        # RK4 may round onto the fixed point; keep every value strictly below it
        values = np.minimum(values, np.nextafter(bp, 0.0))
    else:
        values = np.full(n_grid + 1, np.nan)
    values[0] = e.b
    # once B sits within SATURATION of B_plus, G(B) = t is ill-conditioned
    # (dB/dt ~ 0) and the check is made in B instead of t
    saturated = np.isfinite(values) & (bp - values <= SATURATION * bp)
    live = ~saturated
    bad = ~np.isfinite(values)
    if ok:
        n_live = int(np.argmax(saturated)) if saturated.any() else values.size
        g_at = np.concatenate([[0.0], np.cumsum(_segment_G(rhs, values[: n_live - 1], values[1:n_live]))])
        bad[:n_live] = np.abs(g_at - grid[:n_live]) > tol
    bad[0] = False
    if np.any(bad):
        # the ODE stiffens next to B_plus; invert the time integral directly there
        for i in np.flatnonzero(bad):
            values[i] = _invert_G(grid[i], m, e, bp, rhs)
        live = bp - values > SATURATION * bp
        g_at = np.array([g_of_B(v, m, e, bp) if v > e.b else 0.0 for v in values[live]])
        err = np.abs(g_at - grid[live])
        if np.any(err > tol):
            raise GridTooCoarse(f"B grid fails G(B(t)) = t to {tol} (max error {np.max(err):.3e})")
    if np.any(np.diff(values)[live[:-1]] <= 0):
        raise GridTooCoarse("B grid is not strictly increasing")
    curve = BCurve(grid, values, e.b, bp, m.delta, k, m.G)
    object.__setattr__(curve, "regime", classify_regime(m, e, curve))
    return curve


def _invert_G(t: float, m, e, bp, rhs) -> float:
    lo, hi = e.b, bp
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if g_of_B(mid, m, e, bp) < t:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def classify_regime(m: PhysicalModel, e: EsscherParams, bcurve: BCurve) -> Regime:
    """Where the external-jump rate alpha sits relative to (b, B_plus)."""
    alpha = m.H.rate
    if alpha >= bcurve.b_plus:
        return Regime(1)
    if alpha > e.b:
        return Regime(2, g_of_B(alpha, m, e, bcurve.b_plus))
    return Regime(3)


@dataclass(frozen=True, eq=False)
class KCurve:
    grid: np.ndarray
    values: np.ndarray

    def __call__(self, t):
        out = np.interp(np.asarray(t, dtype=float), self.grid, self.values)
        return float(out) if np.ndim(t) == 0 else out


def solve_K(m: PhysicalModel, e: EsscherParams, bcurve: BCurve) -> KCurve:
    """K(t) = -a*delta*int B + rho*int (1 - psi*h(-B)), K(0) = 0."""
    B = bcurve.values
    if np.any(B >= m.H.rate):
        raise DivergentTransform(f"B(t) reaches rate(H)={m.H.rate} inside the horizon")
    integrand = -m.a * m.delta * B + m.rho * (1.0 - e.psi * m.H.laplace(-B))
    return KCurve(bcurve.grid, cumulative(integrand, bcurve.step))


@dataclass(frozen=True, eq=False)
class TiltedModel:
    """Parameters of the process under the Esscher measure.

    ``representation`` selects the simulation coordinates: ``"lambda"``
    keeps the physical intensity dynamics and multiplies the event rate by
    c(t) = theta*j(nu)*g(-B(t)); ``"lambda_tilde"`` works with the scaled
    intensity c(t)*lambda_t directly (level c(t)*a, jump laws scaled by
    c(t), event rate equal to the state), starting from lambda0.
    """

    base: PhysicalModel
    esscher: EsscherParams
    bcurve: BCurve
    representation: str = LAMBDA_TILDE

    @property
    def horizon(self) -> float:
        return self.bcurve.horizon

    @property
    def delta(self) -> float:
        return self.base.delta

    @property
    def lambda0(self) -> float:
        return self.base.lambda0

    @property
    def excitation(self) -> float:
        return self.bcurve.excitation

    def B(self, t):
        return self.bcurve(t)

    def rate_multiplier(self, t):
        """c(t) = theta * j(nu) * g(-B(t))."""
        return self.excitation * self.base.G.laplace(-self.B(t))

    def external_rate(self, t):
        """psi * h(-B(t)) * rho."""
        return self.esscher.psi * self.base.H.laplace(-self.B(t)) * self.base.rho

    @property
    def claims(self) -> JumpDist:
        return dist.tilt_claim(self.base.J, self.esscher.nu)

    def external_jumps(self, t: float) -> JumpDist:
        law = dist.exp_tilt(self.base.H, float(self.B(t)))
        if self.representation == LAMBDA_TILDE:
            law = dist.scale(law, float(self.rate_multiplier(t)))
        return law

    def self_jumps(self, t: float) -> JumpDist:
        law = dist.exp_tilt(self.base.G, float(self.B(t)))
        if self.representation == LAMBDA_TILDE:
            law = dist.scale(law, float(self.rate_multiplier(t)))
        return law

    def level(self, t):
        if self.representation == LAMBDA_TILDE:
            return self.rate_multiplier(t) * self.base.a
        return np.full(np.shape(t), self.base.a) if np.ndim(t) else self.base.a

    def event_multiplier(self, t):
        if self.representation == LAMBDA_TILDE:
            return np.ones(np.shape(t)) if np.ndim(t) else 1.0
        return self.rate_multiplier(t)

    def lambda_h(self, t):
        """Rate of the scaled external jump law: (alpha - B) / c(t)."""
        return (self.base.H.rate - self.B(t)) / self.rate_multiplier(t)

    def lambda_g(self, t):
        """Rate of the scaled self jump law: (beta - B) / c(t)."""
        return (self.base.G.rate - self.B(t)) / self.rate_multiplier(t)

    def stationarity(self) -> dict:
        """Tilted-measure stationarity condition at the largest B on the horizon.

        ``full`` uses theta*j(nu)*beta/(beta-B)^2 (the complete j(nu));
        ``as_displayed`` uses gamma/(gamma+nu) without the shape exponent;
        ``at_zero`` is delta > theta*j(nu)/beta.
        """
        beta = self.base.G.rate
        gam, nu = self.base.J.rate, self.esscher.nu
        Bmax = float(np.max(self.bcurve.values))
        full = self.esscher.theta * self.base.J.laplace(nu) * beta / (beta - Bmax) ** 2
        shown = self.esscher.theta * (gam / (gam + nu)) * beta / (beta - Bmax) ** 2
        at0 = self.excitation / beta
        return {
            "delta": self.delta,
            "full_bound": full,
            "full": bool(self.delta > full),
            "as_displayed_bound": shown,
            "as_displayed": bool(self.delta > shown),
            "at_zero_bound": at0,
            "at_zero": bool(self.delta > at0),
        }


def tilt_model(
    m: PhysicalModel,
    e: EsscherParams,
    bcurve: BCurve,
    representation: str = LAMBDA_TILDE,
) -> TiltedModel:
    if representation not in (LAMBDA, LAMBDA_TILDE):
        raise ConfigInvalid(f"unknown representation {representation!r}")
    if m.H.kind != dist.EXPONENTIAL or m.G.kind != dist.EXPONENTIAL:
        raise ConfigInvalid("the tilted model needs exponential H and G")
    dist.tilt_claim(m.J, e.nu)
    regime = bcurve.regime
    if regime.kind == 3:
        raise HorizonExceedsRegime("alpha <= b: no admissible B(t) below alpha")
    if regime.kind == 2 and bcurve.horizon >= regime.t_star:
        raise HorizonExceedsRegime(
            f"horizon {bcurve.horizon} reaches t*={regime.t_star:.9g} where B hits alpha"
        )
    if np.max(bcurve.values) >= min(m.H.rate, m.G.rate):
        raise HorizonExceedsRegime("B(t) reaches min(alpha, beta) on the horizon")
    return TiltedModel(m, e, bcurve, representation)


def log_martingale_statistic(path, bcurve: BCurve, kcurve: KCurve, e: EsscherParams, t):
    """Log of exp(K) theta^N exp(B lambda) exp(-nu C) exp(phi Lambda) psi^M at time t.

    ``t`` may be an array of times.
    """
    return (
        kcurve(t)
        + path.N_at(t) * math.log(e.theta)
        + bcurve(t) * path.lambda_at(t)
        - e.nu * path.C_at(t)
        + bcurve.phi * path.Lambda_at(t)
        + path.M_at(t) * math.log(e.psi)
    )


def martingale_statistic(path, bcurve: BCurve, kcurve: KCurve, e: EsscherParams, t):
    x = log_martingale_statistic(path, bcurve, kcurve, e, t)
    if np.any(np.asarray(x) > 709.0):
        raise StatisticOverflow(f"log statistic {np.max(x):.3f} exceeds double range; use the log form")
    return np.exp(x) if np.ndim(x) else math.exp(x)
