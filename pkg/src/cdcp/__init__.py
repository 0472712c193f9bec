"""Compound dynamic contagion claims under an Esscher-tilted measure."""

from .distributions import Exponential, Gamma, JumpDist
from .errors import CDCPError
from .esscher import (
    BCurve,
    EsscherParams,
    KCurve,
    PhysicalModel,
    Regime,
    TiltedModel,
    b_plus,
    classify_regime,
    g_of_B,
    solve_B,
    solve_K,
    tilt_model,
)
from .moments import mean_C_P, mean_C_star, mean_lambda_P, mean_N_P, moment_report
from .pricing import PremiumEstimate, premium_table, sensitivity_sweep, stop_loss_premium
from .simulate import simulate_cdcp, simulate_paths, terminal_losses

__version__ = "0.1.0"

__all__ = [
    "BCurve",
    "CDCPError",
    "EsscherParams",
    "Exponential",
    "Gamma",
    "JumpDist",
    "KCurve",
    "PhysicalModel",
    "PremiumEstimate",
    "Regime",
    "TiltedModel",
    "b_plus",
    "classify_regime",
    "g_of_B",
    "mean_C_P",
    "mean_C_star",
    "mean_N_P",
    "mean_lambda_P",
    "moment_report",
    "premium_table",
    "sensitivity_sweep",
    "simulate_cdcp",
    "simulate_paths",
    "solve_B",
    "solve_K",
    "stop_loss_premium",
    "terminal_losses",
    "tilt_model",
]
