"""Positive jump-size laws (exponential and gamma) and their exponential tilts."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

import numpy as np
from scipy.stats import gamma as gamma_law

from .errors import ConfigInvalid, DivergentTransform, InvalidTilt

EXPONENTIAL = "exponential"
GAMMA = "gamma"


@dataclass(frozen=True)
class JumpDist:
    """Exponential or gamma law parameterised by rate (and shape for gamma).

    Exponential is the gamma law with unit shape; it is kept as its own
    kind because the measure change only has closed forms for it.
    """

    kind: str
    rate: float
    shape: float = 1.0

    def __post_init__(self):
        if self.kind not in (EXPONENTIAL, GAMMA):
            raise ConfigInvalid(f"unknown distribution kind {self.kind!r}")
        if not (self.rate > 0 and math.isfinite(self.rate)):
            raise ConfigInvalid(f"rate must be positive and finite, got {self.rate}")
        if not self.shape >= 1:
            raise ConfigInvalid(f"shape must be >= 1, got {self.shape}")
        if self.kind == EXPONENTIAL and self.shape != 1.0:
            raise ConfigInvalid("exponential law has shape 1")

    @property
    def mean(self) -> float:
        return self.shape / self.rate

    def laplace(self, s: float | np.ndarray) -> float | np.ndarray:
        """E[exp(-s X)], finite only for s > -rate."""
        s_arr = np.asarray(s, dtype=float)
        if np.any(s_arr <= -self.rate):
            raise DivergentTransform(
                f"Laplace transform diverges for s <= -rate ({-self.rate})"
            )
        out = (self.rate / (self.rate + s_arr)) ** self.shape
        return float(out) if np.ndim(s) == 0 else out

    def pdf(self, x: float | np.ndarray) -> float | np.ndarray:
        out = gamma_law.pdf(x, self.shape, scale=1.0 / self.rate)
        return float(out) if np.ndim(x) == 0 else out

    def sample(self, rng: np.random.Generator, size=None):
        if self.kind == EXPONENTIAL:
            return rng.standard_exponential(size) / self.rate
        return rng.gamma(self.shape, 1.0 / self.rate, size)

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind, "rate": self.rate, "shape": self.shape}


def Exponential(rate: float) -> JumpDist:
    return JumpDist(EXPONENTIAL, float(rate), 1.0)


def Gamma(rate: float, shape: float) -> JumpDist:
    return JumpDist(GAMMA, float(rate), float(shape))


def from_dict(spec: dict[str, Any]) -> JumpDist:
    """Build a law from its config form ``{"kind", "rate", "shape"}``."""
    try:
        kind = str(spec["kind"]).lower()
        rate = float(spec["rate"])
        shape = float(spec["shape"]) if kind == "gamma" else float(spec.get("shape", 1.0))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigInvalid(f"bad distribution spec {spec!r}") from exc
    return JumpDist(kind, rate, shape)


def mean(d: JumpDist) -> float:
    return d.mean


def laplace(d: JumpDist, s):
    return d.laplace(s)


def sample(d: JumpDist, rng: np.random.Generator, size=None):
    return d.sample(rng, size)


def exp_tilt(d: JumpDist, B: float) -> JumpDist:
    """Law with density proportional to exp(B x) * density(d, x).

    For both families this only moves the rate: rate -> rate - B.
    """
    if B >= d.rate:
        raise InvalidTilt(f"tilt {B} must stay below the rate {d.rate}")
    return JumpDist(d.kind, d.rate - B, d.shape)


def tilt_claim(J: JumpDist, nu: float) -> JumpDist:
    """Claim-size law after weighting by exp(-nu x); nu in (-rate, 0]."""
    if J.kind != GAMMA and J.kind != EXPONENTIAL:
        raise InvalidTilt("claim tilt needs a gamma or exponential law")
    if not (-J.rate < nu <= 0):
        raise InvalidTilt(f"nu={nu} outside (-{J.rate}, 0]")
    return JumpDist(J.kind, J.rate + nu, J.shape)


def scale(d: JumpDist, c: float) -> JumpDist:
    """Law of c * X."""
    if not c > 0:
        raise ConfigInvalid(f"scale factor must be positive, got {c}")
    return JumpDist(d.kind, d.rate / c, d.shape)
