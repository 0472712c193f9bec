"""Small numerical kernels: adaptive Simpson, cumulative grid quadrature, RK4."""

from __future__ import annotations

import math
from typing import Callable

import numpy as np
from scipy.integrate import cumulative_simpson

from .errors import QuadratureNotConverged

_EPS = float(np.finfo(float).eps)


def adaptive_simpson(
    f: Callable[[float], float],
    a: float,
    b: float,
    rtol: float = 1e-10,
    atol: float = 1e-13,
    max_depth: int = 50,
) -> float:
    """Adaptive Simpson with Richardson extrapolation on each accepted panel."""
    if a == b:
        return 0.0
    sign = 1.0
    if b < a:
        a, b, sign = b, a, -1.0

    fa, fb = f(a), f(b)
    m = 0.5 * (a + b)
    fm = f(m)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    tol = max(atol, rtol * abs(whole))

    total = 0.0
    # explicit stack instead of recursion; panels are (a, b, fa, fm, fb, S, tol, depth)
    stack = [(a, b, fa, fm, fb, whole, tol, 0)]
    while stack:
        a_, b_, fa_, fm_, fb_, s, tol_, depth = stack.pop()
        m_ = 0.5 * (a_ + b_)
        lm, rm = 0.5 * (a_ + m_), 0.5 * (m_ + b_)
        flm, frm = f(lm), f(rm)
        left = (m_ - a_) / 6.0 * (fa_ + 4.0 * flm + fm_)
        right = (b_ - m_) / 6.0 * (fm_ + 4.0 * frm + fb_)
        diff = left + right - s
        # below this the error estimate is pure roundoff
        floor = 64.0 * _EPS * (abs(left) + abs(right))
        if abs(diff) <= max(15.0 * tol_, floor) or depth >= max_depth:
            if depth >= max_depth and abs(diff) > max(15.0 * tol_, floor):
                raise QuadratureNotConverged(
                    f"adaptive Simpson stalled on [{a_}, {b_}] (error estimate {diff / 15:.3e})"
                )
            total += left + right + diff / 15.0
        else:
            stack.append((a_, m_, fa_, flm, fm_, left, 0.5 * tol_, depth + 1))
            stack.append((m_, b_, fm_, frm, fb_, right, 0.5 * tol_, depth + 1))
    if not math.isfinite(total):
        raise QuadratureNotConverged("non-finite integral")
    return sign * total


def cumulative(y: np.ndarray, h: float) -> np.ndarray:
    """Running integral of samples on a uniform grid, starting at 0.

    Composite Simpson on even panels; odd end points use the three-point
    single-interval rule.  Falls back to the trapezoid for two samples.
    """
    y = np.asarray(y, dtype=float)
    if y.size == 1:
        return np.zeros(1)
    if y.size == 2:
        return np.array([0.0, 0.5 * h * (y[0] + y[1])])
    return cumulative_simpson(y, dx=h, initial=0.0)


def rk4(
    rhs: Callable[[float], float], y0: float, t_end: float, n_steps: int
) -> np.ndarray:
    """Fixed-step classical RK4 for an autonomous scalar ODE y' = rhs(y).

    Returns the n_steps + 1 states on the uniform grid over [0, t_end].
    """
    h = t_end / n_steps
    out = np.empty(n_steps + 1)
    y = float(y0)
    out[0] = y
    for i in range(n_steps):
        k1 = rhs(y)
        k2 = rhs(y + 0.5 * h * k1)
        k3 = rhs(y + 0.5 * h * k2)
        k4 = rhs(y + h * k3)
        y = y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        out[i + 1] = y
    return out
