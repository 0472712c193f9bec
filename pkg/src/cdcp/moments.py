"""First moments of lambda_t, N_t and C_t.

Closed forms for the time-homogeneous process under the physical measure,
grid quadrature for time-varying parameters and for the tilted measure.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Callable, Optional

import numpy as np

from .errors import QuadratureNotConverged
from .esscher import LAMBDA_TILDE, PhysicalModel, TiltedModel
from .numerics import cumulative

KAPPA_ZERO = 1e-12


@dataclass(frozen=True)
class MomentReport:
    t: float
    mean_lambda: float
    mean_N: float
    mean_C: float
    measure: str
    method: str

    def to_dict(self) -> dict:
        return asdict(self)


def _source(m: PhysicalModel) -> float:
    return m.H.mean * m.rho + m.a * m.delta


def mean_lambda_P(t, m: PhysicalModel):
    kappa, src = m.kappa, _source(m)
    t = np.asarray(t, dtype=float)
    if abs(kappa) < KAPPA_ZERO:
        out = m.lambda0 + src * t
    else:
        mu1 = src / kappa
        out = mu1 + (m.lambda0 - mu1) * np.exp(-kappa * t)
    return float(out) if out.ndim == 0 else out


def mean_N_P(t, m: PhysicalModel):
    kappa, src = m.kappa, _source(m)
    t = np.asarray(t, dtype=float)
    if abs(kappa) < KAPPA_ZERO:
        out = m.lambda0 * t + 0.5 * src * t**2
    else:
        mu1 = src / kappa
        out = mu1 * t + (m.lambda0 - mu1) * (-np.expm1(-kappa * t)) / kappa
    return float(out) if out.ndim == 0 else out


def mean_C_P(t, m: PhysicalModel):
    return m.J.mean * mean_N_P(t, m)


def stationary_mean_lambda(m: PhysicalModel) -> float:
    return _source(m) / m.kappa


@dataclass(frozen=True)
class InhomParams:
    """Time-varying parameter functions (vectorised callables of time).

    ``rate_multiplier`` scales the event rate to r(s)*lambda_s; leave it
    as None for the plain process where events arrive at rate lambda_s.
    """

    lambda0: float
    delta: float
    a: Callable
    rho: Callable
    mu_H: Callable
    mu_G: Callable
    mu_J: float
    rate_multiplier: Optional[Callable] = None

    @classmethod
    def constant(cls, m: PhysicalModel) -> "InhomParams":
        return cls(
            m.lambda0,
            m.delta,
            a=lambda s: np.full(np.shape(s), m.a),
            rho=lambda s: np.full(np.shape(s), m.rho),
            mu_H=lambda s: np.full(np.shape(s), m.H.mean),
            mu_G=lambda s: np.full(np.shape(s), m.G.mean),
            mu_J=m.J.mean,
        )

    @classmethod
    def from_tilted(cls, tm: TiltedModel) -> "InhomParams":
        """Parameter functions of the tilted process in its own coordinates."""
        m = tm.base
        alpha, beta = m.H.rate, m.G.rate
        if tm.representation == LAMBDA_TILDE:
            return cls(
                m.lambda0,
                m.delta,
                a=lambda s: tm.rate_multiplier(s) * m.a,
                rho=tm.external_rate,
                mu_H=lambda s: tm.rate_multiplier(s) / (alpha - tm.B(s)),
                mu_G=lambda s: tm.rate_multiplier(s) / (beta - tm.B(s)),
                mu_J=tm.claims.mean,
            )
        return cls(
            m.lambda0,
            m.delta,
            a=lambda s: np.full(np.shape(s), m.a),
            rho=tm.external_rate,
            mu_H=lambda s: 1.0 / (alpha - tm.B(s)),
            mu_G=lambda s: 1.0 / (beta - tm.B(s)),
            mu_J=tm.claims.mean,
            rate_multiplier=tm.rate_multiplier,
        )


def _inhom_profile(t: float, p: InhomParams, n: int) -> tuple[float, float]:
    s = np.linspace(0.0, t, n + 1)
    h = t / n
    r = np.ones_like(s) if p.rate_multiplier is None else np.asarray(p.rate_multiplier(s))
    kappa = p.delta - r * p.mu_G(s)
    int_kappa = cumulative(kappa, h)
    forcing = p.rho(s) * p.mu_H(s) + p.a(s) * p.delta
    inner = cumulative(np.exp(int_kappa) * forcing, h)
    mu = np.exp(-int_kappa) * (p.lambda0 + inner)
    return float(mu[-1]), float(cumulative(r * mu, h)[-1])


def _refined(t: float, p: InhomParams, rtol: float, n0: int = 64, max_n: int = 2**17):
    if t == 0:
        return p.lambda0, 0.0
    if t < 0:
        raise ValueError("t must be >= 0")
    n = n0
    prev = _inhom_profile(t, p, n)
    while n < max_n:
        n *= 2
        cur = _inhom_profile(t, p, n)
        if all(abs(c - q) <= rtol * max(abs(c), 1e-300) for c, q in zip(cur, prev)):
            return cur
        prev = cur
    raise QuadratureNotConverged(f"inhomogeneous moments did not settle to {rtol} by n={max_n}")


def mean_lambda_inhom(t: float, p: InhomParams, rtol: float = 1e-11) -> float:
    return _refined(t, p, rtol)[0]


def mean_N_inhom(t: float, p: InhomParams, rtol: float = 1e-11) -> float:
    return _refined(t, p, rtol)[1]


def mean_C_inhom(t: float, p: InhomParams, rtol: float = 1e-11) -> float:
    return p.mu_J * _refined(t, p, rtol)[1]


def _star_profile(s: np.ndarray, B: np.ndarray, tm: TiltedModel):
    m, e = tm.base, tm.esscher
    alpha, beta = m.H.rate, m.G.rate
    h = s[1] - s[0] if s.size > 1 else 0.0
    c = tm.excitation * beta / (beta - B)
    I = m.delta - c / (beta - B)
    int_I = cumulative(I, h)
    forcing = c * (e.psi * alpha * m.rho / (alpha - B) ** 2 + m.a * m.delta)
    mu = np.exp(-int_I) * (m.lambda0 + cumulative(np.exp(int_I) * forcing, h))
    return mu, cumulative(mu, h)


def _star(t: float, tm: TiltedModel, check: bool = True):
    s, B = tm.bcurve.upto(t)
    mu, N = _star_profile(s, B, tm)
    if check and s.size >= 9 and (s.size - 1) % 2 == 0:
        mu2, N2 = _star_profile(s[::2], B[::2], tm)
        if abs(N2[-1] - N[-1]) > 1e-6 * abs(N[-1]):
            raise QuadratureNotConverged("B grid too coarse for the tilted moments")
    return float(mu[-1]), float(N[-1])


def mean_lambda_star(t: float, tm: TiltedModel) -> float:
    """Tilted-measure mean intensity (scaled coordinates, exponential/gamma case)."""
    return _star(t, tm)[0]


def mean_N_star(t: float, tm: TiltedModel) -> float:
    return _star(t, tm)[1]


def mean_C_star(t: float, tm: TiltedModel) -> float:
    """E*[C_t]: tilted claim mean eta/(gamma+nu) times the integrated tilted intensity."""
    return tm.claims.mean * _star(t, tm)[1]


def mean_C_tilted(t: float, tm: TiltedModel) -> float:
    """Mean of C_t for the process simulated in ``tm.representation`` coordinates."""
    return mean_C_inhom(t, InhomParams.from_tilted(tm))


def moment_report(t: float, model) -> MomentReport:
    if isinstance(model, TiltedModel):
        lam, N = _star(t, model)
        return MomentReport(t, lam, N, model.claims.mean * N, "Pstar", "quadrature")
    N = mean_N_P(t, model)
    return MomentReport(t, mean_lambda_P(t, model), N, model.J.mean * N, "P", "closed_form")

