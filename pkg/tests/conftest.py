import json
import math

import numpy as np
import pytest

from fpcascade.coefficients import CoefficientProfile, CoefficientSpec
from fpcascade.initial_conditions import InitialCondition, eval_log


@pytest.fixture
def anchor_profile():
    """a = 1, c = 0.5: beta0 = 2, beta1 = 2.5, gamma = 0.5 at lambda = 1"""
    return CoefficientProfile.constant(1.0, 0.5, 4.0)


@pytest.fixture
def linear_profile():
    """a(lambda) = 1 + lambda, c = 0.5"""
    return CoefficientProfile(
        CoefficientSpec('polynomial', coefficients=(1.0, 1.0)),
        CoefficientSpec('constant', value=0.5),
        2.0,
    )


@pytest.fixture
def tabulated_profile():
    return CoefficientProfile(
        CoefficientSpec('tabulated', knots=((0.0, 1.0), (0.5, 1.5), (2.0, 0.8))),
        CoefficientSpec('tabulated', knots=((0.0, 0.3), (1.0, 0.6), (2.0, 0.4))),
        2.0,
    )


@pytest.fixture
def lognormal_ic():
    return InitialCondition.lognormal(0.0, 0.25)


@pytest.fixture
def grid_ic():
    """Lognormal(0.2, 0.3) resampled on a fine uniform grid"""
    y = np.linspace(-6.0, 6.0, 4801)
    samples = eval_log(InitialCondition.lognormal(0.2, 0.3), y)
    return InitialCondition.grid(y[0], y[-1], samples)


@pytest.fixture
def write_scenario(tmp_path):
    def _write(d: dict, name: str = 'scenario.json') -> str:
        path = tmp_path / name
        path.write_text(json.dumps(d, indent=2))
        return str(path)
    return _write


def delta_density(a, c, lam, v0, y):
    """Closed-form delta solution for constant rates"""
    beta0, beta1, gamma = (a + 2 * c) * lam, (a + 3 * c) * lam, c * lam
    z = np.asarray(y) - math.log(v0) + beta1
    return np.exp(beta0 - z * z / (4 * gamma)) / (v0 * math.sqrt(4 * math.pi * gamma))


def random_profiles(n: int, seed: int = 0, lambda_max: float = 2.0) -> list:
    """Positive constant, polynomial (degree <= 3) and tabulated profiles"""
    rng = np.random.default_rng(seed)
    profiles = []
    for i in range(n):
        specs = []
        for _ in range(2):
            kind = ('constant', 'polynomial', 'tabulated')[i % 3]
            if kind == 'constant':
                specs.append(CoefficientSpec('constant', value=rng.uniform(0.1, 2.0)))
            elif kind == 'polynomial':
                deg = int(rng.integers(0, 4))
                coefs = tuple(rng.uniform(0.05, 1.0, deg + 1))
                specs.append(CoefficientSpec('polynomial', coefficients=coefs))
            else:
                lams = np.linspace(0.0, lambda_max, 6)
                vals = rng.uniform(0.1, 2.0, 6)
                specs.append(CoefficientSpec('tabulated', knots=tuple(zip(lams, vals))))
        profiles.append(CoefficientProfile(specs[0], specs[1], lambda_max))
    return profiles
