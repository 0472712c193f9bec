import time

import numpy as np
import pytest

from cdcp.config import default_config
from cdcp.distributions import Exponential, Gamma
from cdcp.esscher import EsscherParams, PhysicalModel, solve_B, solve_K, tilt_model
from cdcp.simulate import terminal_losses

# path count and seed shared by the large Monte Carlo fixtures
BIG_N = 100_000
BIG_SEED = 20240601

# wall-clock seconds spent building each large loss sample
TIMINGS: dict[str, float] = {}


def table_model(**kw) -> PhysicalModel:
    base = dict(lambda0=1.0, a=1.0, delta=3.0, rho=4.0, G=Exponential(1.0), H=Exponential(2.0), J=Gamma(0.4, 3.0))
    base.update(kw)
    return PhysicalModel(**base)


@pytest.fixture(scope="session")
def model():
    return table_model()


@pytest.fixture(scope="session")
def esscher():
    return EsscherParams()


@pytest.fixture(scope="session")
def bcurve(model, esscher):
    return solve_B(model, esscher, 1.0)


@pytest.fixture(scope="session")
def kcurve(model, esscher, bcurve):
    return solve_K(model, esscher, bcurve)


@pytest.fixture(scope="session")
def tilted(model, esscher, bcurve):
    return tilt_model(model, esscher, bcurve)


@pytest.fixture(scope="session")
def cfg():
    return default_config()


@pytest.fixture(scope="session")
def losses_P(model):
    return _timed("P", model)


@pytest.fixture(scope="session")
def losses_Pstar(tilted):
    return _timed("Pstar", tilted)


def _timed(name, m):
    start = time.perf_counter()
    out = terminal_losses(m, 1.0, BIG_N, BIG_SEED)
    TIMINGS[name] = time.perf_counter() - start
    return out


def stderr(x) -> float:
    return float(np.std(x, ddof=1) / np.sqrt(len(x)))
