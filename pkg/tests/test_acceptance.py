"""End-to-end checks across modules, anchored on closed-form identities"""
import itertools
import math

import numpy as np
import pytest
from click.testing import CliRunner
from conftest import random_profiles

from fpcascade.analysis import fit_scaling_exponent, moment
from fpcascade.coefficients import (CoefficientProfile, CoefficientSpec,
                                    integrate, integrate_between)
from fpcascade.config import ENV_N_JOBS, MC_BLOCK_SIZE
from fpcascade.initial_conditions import InitialCondition
from fpcascade.montecarlo import (ensemble_moment, ks_distance, ks_test,
                                  sample_em, sample_exact)
from fpcascade.oracle import FdConfig, compare, convergence_study, residual
from fpcascade.propagator import (QuadratureConfig, auto_y_grid, delta_cdf,
                                  evaluator, heat_kernel_apply, log_law_at,
                                  solve_grid)
from fpcascade.scripts.cli import cli

SWEEP_LAMBDAS = np.linspace(0.1, 2.0, 20)


@pytest.fixture(scope='module')
def profiles():
    return random_profiles(50, seed=2024)


def test_normalization_identity(profiles):
    for profile in profiles:
        for lam in SWEEP_LAMBDAS:
            coeffs = integrate(profile, lam)
            assert abs(coeffs.normalization_defect) <= 1e-12 * (1 + abs(coeffs.beta1))


def test_mass_conservation(profiles):
    ic = InitialCondition.lognormal(0.0, 0.25)
    for profile in profiles:
        for lam in SWEEP_LAMBDAS:
            y = auto_y_grid(profile, ic, lam, n_points=801)
            assert solve_grid(profile, ic, lam, y).mass == pytest.approx(1.0, abs=1e-8)


def test_powers_of_v_are_eigenfunctions():
    y = np.linspace(-1.0, 1.0, 5)
    for n, gamma in itertools.product(range(5), (0.01, 0.25, 1.0)):
        out = heat_kernel_apply(lambda u: np.exp(n * u), gamma, y, QuadratureConfig(64))
        np.testing.assert_allclose(out, np.exp(gamma * n * n + n * y), rtol=1e-10)


@pytest.mark.parametrize('a, c', itertools.product((0.5, 1.0, 2.0), repeat=2))
def test_delta_solution_solves_the_equation(a, c):
    profile = CoefficientProfile.constant(a, c, 2.0)
    field = evaluator(profile, InitialCondition.dirac(1.0))
    for lam in (0.5, 1.0):
        mean, var = log_law_at(integrate(profile, lam), InitialCondition.dirac(1.0))
        sd = math.sqrt(var)
        y = np.linspace(mean - var - 3 * sd, mean + 3 * sd, 100)
        assert np.max(residual(profile, field, lam, y).relative) < 1e-5


def test_crank_nicolson_oracle():
    profile = CoefficientProfile.constant(1.0, 0.5, 2.0)
    ic = InitialCondition.lognormal(0.0, 0.04)
    report = compare(profile, ic, 1.0, FdConfig(n_y=2048, n_steps=2000))
    assert report.max_relative_deviation < 1e-3
    study = convergence_study(profile, ic, 1.0, FdConfig(n_y=513, n_steps=500))
    assert min(study.orders) >= 1.9


@pytest.mark.parametrize('a, c', itertools.product((0.5, 1.0, 2.0), repeat=2))
@pytest.mark.parametrize('lam', [0.25, 1.0, 4.0])
def test_monte_carlo_law(a, c, lam):
    profile = CoefficientProfile.constant(a, c, 4.0)
    ens = sample_exact(profile, 1.0, lam, 100000, seed=0)
    ks_test(ens, delta_cdf(profile, 1.0, lam), alpha=1e-3).require()


def test_euler_maruyama_distance_shrinks():
    profile = CoefficientProfile(
        CoefficientSpec('polynomial', coefficients=(1.0, 4.0)),
        CoefficientSpec('constant', value=0.5),
        1.0,
    )
    cdf = delta_cdf(profile, 1.0, 1.0)
    distances = [
        ks_distance(sample_em(profile, 1.0, 1.0, 100000, n_steps, seed=0), cdf)
        for n_steps in (16, 32, 64)
    ]
    assert distances[0] > distances[1] > distances[2]


def test_moments_triangle():
    profile = CoefficientProfile.constant(1.0, 0.5, 2.0)
    ic = InitialCondition.dirac(1.0)
    ens = sample_exact(profile, 1.0, 0.1, 200000, seed=3)
    for n in range(5):
        closed = moment(profile, ic, n, 0.1, method='closed_form')
        quad = moment(profile, ic, n, 0.1, method='quadrature')
        assert quad == pytest.approx(closed, rel=1e-6)
        mean, stderr = ensemble_moment(ens, n)
        assert abs(mean - closed) <= 4 * stderr


@pytest.mark.parametrize('n', [1, 2, 3])
def test_scaling_exponent_regression(n):
    profile = CoefficientProfile.constant(1.0, 0.5, 2.0)
    fit = fit_scaling_exponent(profile, InitialCondition.dirac(1.0), n,
                               np.linspace(0.25, 2.0, 8), method='quadrature')
    assert abs(fit.zeta - (n * 1.5 - n * n * 0.5)) < 1e-4


def test_semigroup_composition(linear_profile, lognormal_ic):
    y_half = np.linspace(-10.0, 8.0, 18001)
    half = solve_grid(linear_profile, lognormal_ic, 0.5, y_half)
    restart = InitialCondition.from_field(half)

    y = auto_y_grid(linear_profile, lognormal_ic, 1.0, n_points=401)
    one_shot = solve_grid(linear_profile, lognormal_ic, 1.0, y)
    two_stage = solve_grid(linear_profile, restart, 1.0, y,
                           coeffs=integrate_between(linear_profile, 0.5, 1.0))
    assert np.max(np.abs(two_stage.values - one_shot.values)) <= 1e-6


def test_cli_mc_is_deterministic(tmp_path, write_scenario):
    path = write_scenario({
        'profile': {'a': 1.0, 'c': 0.5, 'lambda_max': 4.0},
        'initial_condition': {'kind': 'dirac', 'v0': 1.0},
        'lambda': 1.0,
        'mc': {'n': 3 * MC_BLOCK_SIZE + 100, 'seed': 11},
    })
    outputs = []
    for n_jobs in ('1', '4', '16'):
        out = tmp_path / f'jobs{n_jobs}'
        result = CliRunner().invoke(cli, ['mc', '-s', path, '-o', str(out)],
                                    env={ENV_N_JOBS: n_jobs})
        assert result.exit_code == 0, result.output
        outputs.append(b''.join(
            (out / name).read_bytes() for name in ('ensemble.csv', 'histogram.csv',
                                                  'ks.csv')
        ))
    assert outputs[0] == outputs[1] == outputs[2]
