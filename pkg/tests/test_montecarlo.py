import math

import numpy as np
import pytest

from fpcascade.coefficients import CoefficientProfile, CoefficientSpec
from fpcascade.config import ENV_N_JOBS, MC_BLOCK_SIZE
from fpcascade.exceptions import ContractError, KsRejectedError, ScenarioError
from fpcascade.montecarlo import (PathEnsemble, ensemble_moment, histogram,
                                  ks_distance, ks_test, sample, sample_em,
                                  sample_exact)
from fpcascade.propagator import delta_cdf


################################################################
# samplers
################################################################
def test_zero_scale_returns_initial_velocity(anchor_profile):
    assert np.all(sample_exact(anchor_profile, 2.0, 0.0, 100).samples == 2.0)
    assert np.all(sample_em(anchor_profile, 2.0, 0.0, 100, 16).samples == 2.0)


@pytest.mark.parametrize('n_jobs', ['1', '4', '16'])
def test_ensemble_does_not_depend_on_threads(anchor_profile, monkeypatch, n_jobs):
    n = 3 * MC_BLOCK_SIZE + 100
    monkeypatch.setenv(ENV_N_JOBS, '1')
    reference = sample_exact(anchor_profile, 1.0, 1.0, n, seed=7).samples
    monkeypatch.setenv(ENV_N_JOBS, n_jobs)
    got = sample_exact(anchor_profile, 1.0, 1.0, n, seed=7).samples
    assert np.array_equal(got, reference)


def test_blocks_are_keyed_by_seed_and_index(anchor_profile):
    long = sample_exact(anchor_profile, 1.0, 1.0, 2 * MC_BLOCK_SIZE, seed=3).samples
    short = sample_exact(anchor_profile, 1.0, 1.0, MC_BLOCK_SIZE + 5, seed=3).samples
    assert np.array_equal(long[:MC_BLOCK_SIZE], short[:MC_BLOCK_SIZE])
    other = sample_exact(anchor_profile, 1.0, 1.0, MC_BLOCK_SIZE, seed=4).samples
    assert not np.array_equal(long[:MC_BLOCK_SIZE], other)


def test_log_velocity_is_gaussian(anchor_profile):
    ens = sample_exact(anchor_profile, 1.0, 1.0, 200000, seed=0)
    log_v = ens.log_samples
    assert log_v.mean() == pytest.approx(-1.5, abs=0.02)
    assert log_v.var() == pytest.approx(1.0, abs=0.02)
    assert np.all(ens.samples > 0)


def test_lognormal_and_grid_data_are_sampled(anchor_profile, lognormal_ic, grid_ic):
    ens = sample_exact(anchor_profile, lognormal_ic, 1.0, 100000, seed=0)
    assert ens.log_samples.mean() == pytest.approx(-1.5, abs=0.02)
    assert ens.log_samples.var() == pytest.approx(1.25, abs=0.03)

    start = sample_exact(anchor_profile, grid_ic, 0.0, 100000, seed=0)
    assert start.log_samples.mean() == pytest.approx(0.2, abs=0.01)
    assert start.log_samples.var() == pytest.approx(0.3, abs=0.01)


################################################################
# Kolmogorov-Smirnov
################################################################
def test_exact_sampler_passes_ks(anchor_profile):
    ens = sample_exact(anchor_profile, 1.0, 1.0, 100000, seed=0)
    result = ks_test(ens, delta_cdf(anchor_profile, 1.0, 1.0))
    assert result.passed
    assert result.statistic < result.critical_value
    assert result.require() is result
    assert list(result.to_frame().columns) == [
        'n', 'statistic', 'p_value', 'critical_value', 'alpha', 'passed']


def test_shifted_ensemble_is_rejected(anchor_profile):
    ens = sample_exact(anchor_profile, 1.0, 1.0, 100000, seed=0)
    shifted = PathEnsemble(ens.lam, ens.samples * 1.1, ens.seed, ens.scheme)
    result = ks_test(shifted, delta_cdf(anchor_profile, 1.0, 1.0))
    assert not result.passed
    with pytest.raises(KsRejectedError):
        result.require()


def test_ks_distance_contract():
    ens = PathEnsemble(1.0, np.array([1.0, 2.0]), 0, 'exact_gaussian')
    with pytest.raises(ContractError):
        ks_distance(PathEnsemble(1.0, np.array([]), 0, 'exact_gaussian'), np.tanh)
    with pytest.raises(ContractError):
        ks_distance(ens, lambda v: v)
    with pytest.raises(ContractError):
        ks_distance(ens, lambda v: 1.0 / (1.0 + v))
    with pytest.raises(ScenarioError):
        ks_test(ens, np.tanh, alpha=1.5)


def test_em_with_constant_rates_is_exact(anchor_profile):
    ens = sample_em(anchor_profile, 1.0, 1.0, 50000, n_steps=16, seed=1)
    assert ens.scheme == 'euler_maruyama'
    assert ens.n_steps == 16
    ks_test(ens, delta_cdf(anchor_profile, 1.0, 1.0)).require()


def test_em_bias_is_first_order():
    # a = 1 + 4 lambda: left sums undershoot int a by 2 / n_steps
    profile = CoefficientProfile(
        CoefficientSpec('polynomial', coefficients=(1.0, 4.0)),
        CoefficientSpec('constant', value=0.5),
        1.0,
    )
    for n_steps in (16, 32, 64):
        ens = sample_em(profile, 1.0, 1.0, 200000, n_steps=n_steps, seed=0)
        bias = ens.log_samples.mean() + 3.5
        assert bias == pytest.approx(2.0 / n_steps, abs=0.01)


@pytest.mark.parametrize('kwargs', [
    {'scheme': 'milstein'},
    {'scheme': 'euler_maruyama', 'n_steps': 8},
    {'scheme': 'euler_maruyama', 'n_steps': None},
    {'n': 0},
    {'v0': -1.0},
])
def test_sampler_rejects_bad_arguments(anchor_profile, kwargs):
    args = {'v0': 1.0, 'lam': 1.0, 'n': 10, **kwargs}
    with pytest.raises(ScenarioError):
        sample(anchor_profile, **args)


################################################################
# moments and histogram
################################################################
@pytest.mark.parametrize('order', [1, 2])
def test_ensemble_moment_within_standard_error(anchor_profile, order):
    ens = sample_exact(anchor_profile, 1.0, 0.5, 200000, seed=2)
    mean, stderr = ensemble_moment(ens, order)
    exact = math.exp(-(order * 1.5 - order * order * 0.5) * 0.5)
    assert abs(mean - exact) < 4 * stderr


def test_histogram_is_a_density(anchor_profile):
    ens = sample_exact(anchor_profile, 1.0, 1.0, 20000, seed=0)
    hist = histogram(ens, n_bins=50)
    assert list(hist.columns) == ['bin_center', 'density']
    assert len(hist) == 50
    assert np.all(np.diff(hist['bin_center']) > 0)
    assert np.all(hist['density'] >= 0)
    # log-spaced bins share one width ratio
    centers = hist['bin_center'].to_numpy()
    ratio = centers[1:] / centers[:-1]
    np.testing.assert_allclose(ratio, ratio[0], rtol=1e-9)


def test_histogram_of_degenerate_ensemble(anchor_profile):
    ens = sample_exact(anchor_profile, 1.0, 0.0, 10)
    assert len(histogram(ens, n_bins=4)) == 4
