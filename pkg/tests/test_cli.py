import json
import math

import numpy as np
import pandas as pd
import pytest
from click.testing import CliRunner

from fpcascade import exceptions, scenario
from fpcascade.config import EXIT_CODES
from fpcascade.scripts.cli import cli

ANCHOR = {
    'profile': {'a': 1.0, 'c': 0.5, 'lambda_max': 4.0},
    'initial_condition': {'kind': 'dirac', 'v0': 1.0},
    'lambda': 1.0,
}


def run(command, path, out_dir, *extra):
    return CliRunner().invoke(cli, [command, '-s', path, '-o', str(out_dir), *extra])


def error_of(result) -> dict:
    lines = [_ for _ in result.stderr.splitlines() if _.strip()]
    return json.loads(lines[-1])


################################################################
# solve
################################################################
def test_solve_grid_datum_at_zero_scale_is_identity(tmp_path, write_scenario, grid_ic):
    pd.DataFrame({'y': grid_ic.grid_y, 'phi': grid_ic.grid_values}).to_csv(
        tmp_path / 'phi.csv', index=False)
    path = write_scenario({**ANCHOR, 'lambda': 0.0,
                           'initial_condition': {'kind': 'grid', 'csv': 'phi.csv'}})
    result = run('solve', path, tmp_path / 'out')
    assert result.exit_code == 0, result.output

    df = pd.read_csv(tmp_path / 'out' / 'solve.csv', float_precision='round_trip')
    assert list(df.columns) == ['y', 'v', 'P']
    ic = scenario.load(path).ic
    np.testing.assert_array_equal(df['P'].to_numpy(), ic.grid_values)


def test_solve_delta_on_fixed_grid(tmp_path, write_scenario):
    path = write_scenario({**ANCHOR, 'grid': {'y_min': -1.0, 'y_max': 1.0,
                                              'n_points': 3}})
    result = run('solve', path, tmp_path, '--refine')
    assert result.exit_code == 0, result.output
    df = pd.read_csv(tmp_path / 'solve.csv')
    assert df['P'][1] == pytest.approx(0.129517, abs=1e-6)
    assert 'P_err' in df.columns


def test_solve_reports_atom(tmp_path, write_scenario):
    path = write_scenario({**ANCHOR, 'lambda': 0.0})
    result = run('solve', path, tmp_path)
    assert result.exit_code == 8
    err = error_of(result)
    assert err['error'] == 'DegenerateMeasureError'
    assert err['exit_code'] == 8


################################################################
# oracle
################################################################
def test_oracle_on_delta_anchor(tmp_path, write_scenario):
    path = write_scenario(ANCHOR)
    result = run('oracle', path, tmp_path)
    assert result.exit_code == 0, result.output
    summary = pd.read_csv(tmp_path / 'oracle_summary.csv')
    assert summary['max_relative_deviation'][0] < 1e-3
    assert abs(summary['mass_drift'][0]) < 1e-4
    for name in ('fd.csv', 'oracle_comparison.csv'):
        assert (tmp_path / name).is_file()


def test_oracle_convergence_study(tmp_path, write_scenario):
    path = write_scenario({**ANCHOR,
                           'initial_condition': {'kind': 'lognormal', 'mu': 0.0,
                                                 'sigma2': 0.04},
                           'fd': {'n_y': 2049, 'n_steps': 2000}})
    result = run('oracle', path, tmp_path, '--convergence')
    assert result.exit_code == 0, result.output
    conv = pd.read_csv(tmp_path / 'convergence.csv')
    assert conv['n_y'].tolist() == [513, 1025, 2049]
    assert conv['order'].dropna().min() >= 1.9


################################################################
# mc
################################################################
def test_mc_seed_override(tmp_path, write_scenario):
    path = write_scenario({**ANCHOR, 'mc': {'n': 1000}})
    run('mc', path, tmp_path / 'a', '--seed', '1')
    run('mc', path, tmp_path / 'b', '--seed', '2')
    assert (tmp_path / 'a' / 'ensemble.csv').read_bytes() != \
        (tmp_path / 'b' / 'ensemble.csv').read_bytes()


def test_mc_ks_report(tmp_path, write_scenario):
    path = write_scenario({**ANCHOR, 'mc': {'n': 20000, 'n_bins': 40}})
    result = run('mc', path, tmp_path)
    assert result.exit_code == 0, result.output
    ks = pd.read_csv(tmp_path / 'ks.csv')
    assert bool(ks['passed'][0])
    assert len(pd.read_csv(tmp_path / 'histogram.csv')) == 40


def test_mc_rejection_exit_code(tmp_path, write_scenario):
    path = write_scenario({**ANCHOR, 'mc': {'n': 2000, 'alpha': 0.999999}})
    result = run('mc', path, tmp_path)
    assert result.exit_code == 11
    assert error_of(result)['error'] == 'KsRejectedError'
    assert (tmp_path / 'ks.csv').is_file()


def test_mc_atom_skips_ks(tmp_path, write_scenario):
    path = write_scenario({**ANCHOR, 'lambda': 0.0, 'mc': {'n': 100}})
    result = run('mc', path, tmp_path)
    assert result.exit_code == 0, result.output
    assert not (tmp_path / 'ks.csv').exists()
    assert (pd.read_csv(tmp_path / 'ensemble.csv')['v'] == 1.0).all()


################################################################
# moments and residual
################################################################
def test_moments_and_exponents(tmp_path, write_scenario):
    path = write_scenario(ANCHOR)
    result = run('moments', path, tmp_path)
    assert result.exit_code == 0, result.output

    df = pd.read_csv(tmp_path / 'moments.csv')
    assert list(df.columns) == ['n', 'moment', 'closed_form', 'mc_estimate']
    assert df['n'].tolist() == [0, 1, 2, 3, 4]
    assert df['moment'][2] == pytest.approx(math.exp(-1.0), rel=1e-12)
    np.testing.assert_allclose(df['moment'], df['closed_form'], rtol=1e-12)
    assert df['mc_estimate'].isna().all()

    exps = pd.read_csv(tmp_path / 'exponents.csv')
    assert exps['zeta_n'].tolist() == [0.0, 1.0, 1.0, 0.0, -2.0]


def test_moments_with_ensemble(tmp_path, write_scenario):
    path = write_scenario({**ANCHOR, 'lambda': 0.1, 'moments': [1, 2, 3, 4],
                           'mc': {'n': 100000}})
    result = run('moments', path, tmp_path)
    assert result.exit_code == 0, result.output
    df = pd.read_csv(tmp_path / 'moments.csv')
    np.testing.assert_allclose(df['mc_estimate'], df['moment'], rtol=0.05)


def test_varying_profile_has_no_exponents(tmp_path, write_scenario):
    path = write_scenario({
        **ANCHOR,
        'profile': {'a': {'kind': 'polynomial', 'coefficients': [1.0, 1.0]},
                    'c': 0.5, 'lambda_max': 2.0},
        'initial_condition': {'kind': 'lognormal', 'mu': 0.0, 'sigma2': 0.25},
        'moments': [0, 2],
    })
    result = run('moments', path, tmp_path)
    assert result.exit_code == 0, result.output
    assert not (tmp_path / 'exponents.csv').exists()
    df = pd.read_csv(tmp_path / 'moments.csv')
    np.testing.assert_allclose(df['moment'], df['closed_form'], rtol=1e-6)


def test_residual_command(tmp_path, write_scenario):
    path = write_scenario({**ANCHOR, 'residual_points': 7})
    result = run('residual', path, tmp_path)
    assert result.exit_code == 0, result.output
    df = pd.read_csv(tmp_path / 'residual.csv')
    assert list(df.columns) == ['lambda', 'y', 'residual', 'scale']
    assert len(df) == 7
    assert (df['residual'].abs() / df['scale']).max() < 1e-5


################################################################
# failures
################################################################
def test_invalid_scenario_exit_code(tmp_path, write_scenario):
    path = write_scenario({**ANCHOR, 'lambda': 5.0})
    result = run('solve', path, tmp_path)
    assert result.exit_code == 3
    err = error_of(result)
    assert err['error'] == 'ScenarioError'
    assert err['message'].startswith('[ERROR]')


@pytest.mark.parametrize('extra', [['--gh-order', '7'], []])
def test_bad_inputs_are_scenario_errors(tmp_path, write_scenario, extra):
    path = write_scenario(ANCHOR) if extra else str(tmp_path / 'missing.json')
    result = run('solve', path, tmp_path / 'out', *extra)
    assert result.exit_code == 3


def test_exit_code_table():
    assert sorted(EXIT_CODES.values()) == list(range(3, 12))
    for name, code in EXIT_CODES.items():
        assert getattr(exceptions, name)('x').exit_code == code
    assert exceptions.FpCascadeError('x').exit_code == 1
