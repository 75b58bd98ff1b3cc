import functools
import json
import logging
import math
import os
import sys
from dataclasses import replace

import click
import numpy as np
import pandas as pd
from rich.console import Console

from ..analysis import closed_form_moment, exponents_frame, moment
from ..coefficients import integrate
from ..config import EXIT_UNEXPECTED, FD_MIN_NODES, FD_MIN_STEPS, H_LAMBDA
from ..exceptions import FpCascadeError, ScenarioError, \
    UnsupportedOperationError
from ..misc import _uniform_grid
from ..montecarlo import ensemble_moment, histogram, ks_test, sample
from ..oracle import FdConfig, compare, convergence_study, prepare, residual
from ..propagator import (auto_y_grid, delta_cdf, evaluator, field_cdf,
                          log_law_at, solve_grid)
from ..rich_print import rich_outputs, rich_table, setup_logging
from ..scenario import McSpec, load

logger = logging.getLogger(__name__)

PREVIEW = 5


################################################################
# CLI helpers
################################################################
# (helper) _common_options
def _common_options(func):
    options = [
        click.option(
            '-s', '--scenario', 'scenario_path', required=True,
            type=click.Path(dir_okay=False),
            help='JSON scenario file.'
        ),
        click.option(
            '-o', '--out', 'out_dir', required=True,
            type=click.Path(file_okay=False),
            help='Output directory (created if missing).'
        ),
        click.option(
            '--seed', type=int, default=None,
            help='Override the Monte-Carlo seed.'
        ),
        click.option(
            '--gh-order', type=int, default=None,
            help='Override the Gauss-Hermite order.'
        ),
        click.option(
            '--refine/--no-refine', default=None,
            help='Override the order-doubling error estimate.'
        ),
    ]
    for option in reversed(options):
        func = option(func)
    return func


# (helper) _handle_errors
def _handle_errors(func):
    """Error JSON on stderr, exit code per failure class"""
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except FpCascadeError as e:
            click.echo(json.dumps(e.to_dict(), default=float), err=True)
            sys.exit(e.exit_code)
        except click.ClickException:
            raise
        except Exception as e:
            logger.debug("Unexpected failure", exc_info=True)
            click.echo(json.dumps({
                'error': type(e).__name__,
                'message': f"[ERROR] {e}",
                'exit_code': EXIT_UNEXPECTED,
            }), err=True)
            sys.exit(EXIT_UNEXPECTED)
    return wrapper


# (helper) _start
def _start(name, scenario_path, out_dir, seed, gh_order, refine):
    console = Console()
    console.print(
        f"[yellow][Start][/yellow] {name} {os.path.abspath(scenario_path)}"
    )
    sc = load(scenario_path).with_overrides(
        seed=seed, gh_order=gh_order, refine=refine,
    )
    os.makedirs(out_dir, exist_ok=True)
    return console, sc, []


# (helper) _write
def _write(df: pd.DataFrame, out_dir: str, name: str, written: list) -> str:
    path = os.path.join(out_dir, name)
    df.to_csv(path, index=False)
    written.append(path)
    return path


# (helper) _done
def _done(console, out_dir, written):
    rich_outputs(out_dir, written, console=console)
    console.print(f"[yellow][Done][/yellow] {len(written)} file(s) saved.\n")


# (helper) _output_grid
def _output_grid(sc) -> np.ndarray:
    if not sc.grid.auto:
        return _uniform_grid(sc.grid.y_min, sc.grid.y_max, sc.grid.n_points)
    if sc.ic.kind == 'grid' and sc.lam == 0.0:
        return sc.ic.grid_y
    return auto_y_grid(sc.profile, sc.ic, sc.lam, n_points=sc.grid.n_points)


################################################################
# Commands
################################################################
@click.group()
@click.option('-v', '--verbose', is_flag=True, help='Debug logging.')
def cli(verbose):
    "Exact solution of the turbulent-cascade Fokker-Planck equation"
    setup_logging(verbose)


# solve
@cli.command()
@_common_options
@_handle_errors
def solve(scenario_path, out_dir, seed, gh_order, refine):
    "Exact density P(lambda, v) on a y = ln v grid"
    console, sc, written = _start(
        'solve', scenario_path, out_dir, seed, gh_order, refine,
    )

    field = solve_grid(sc.profile, sc.ic, sc.lam, _output_grid(sc), sc.quad)
    df = field.to_frame()
    _write(df, out_dir, 'solve.csv', written)

    rich_table(
        df,
        title=f"\n[bold][Result][/bold] P at lambda={sc.lam:g} "
              f"(mass {field.mass:.10g})",
        head=PREVIEW, tail=PREVIEW, console=console,
    )
    if field.errors is not None:
        console.print(f"error estimate (order doubling): {field.error_estimate:.3e}")
    _done(console, out_dir, written)


# oracle
@cli.command()
@_common_options
@click.option(
    '--convergence', is_flag=True,
    help='Append a grid-halving convergence study.'
)
@_handle_errors
def oracle(scenario_path, out_dir, seed, gh_order, refine, convergence):
    "Crank-Nicolson solution compared with the exact one"
    console, sc, written = _start(
        'oracle', scenario_path, out_dir, seed, gh_order, refine,
    )

    ic, cfg = prepare(sc.profile, sc.ic, sc.lam, sc.fd or FdConfig())
    report = compare(sc.profile, ic, sc.lam, cfg, sc.quad)

    _write(report.fd.to_frame(), out_dir, 'fd.csv', written)
    _write(report.to_frame(), out_dir, 'oracle_comparison.csv', written)
    summary = report.summary_frame()
    _write(summary, out_dir, 'oracle_summary.csv', written)
    rich_table(summary, title="\n[bold][Result][/bold] Oracle summary",
               console=console)

    if convergence:
        coarse = replace(
            cfg,
            n_y=max((cfg.n_y - 1) // 4 + 1, FD_MIN_NODES),
            n_steps=max(cfg.n_steps // 4, FD_MIN_STEPS),
        )
        study = convergence_study(sc.profile, ic, sc.lam, coarse, 3, sc.quad)
        df = study.to_frame()
        _write(df, out_dir, 'convergence.csv', written)
        rich_table(df, title="\n[bold][Result][/bold] Convergence",
                   console=console)

    _done(console, out_dir, written)
    report.audit_mass()


# mc
@cli.command()
@_common_options
@_handle_errors
def mc(scenario_path, out_dir, seed, gh_order, refine):
    "Monte-Carlo ensemble and KS test against the exact law"
    console, sc, written = _start(
        'mc', scenario_path, out_dir, seed, gh_order, refine,
    )
    spec = sc.mc or McSpec()

    ensemble = sample(sc.profile, sc.ic, sc.lam, spec.n, spec.scheme,
                      spec.n_steps, spec.seed)
    _write(ensemble.to_frame(), out_dir, 'ensemble.csv', written)
    _write(histogram(ensemble, spec.n_bins), out_dir, 'histogram.csv', written)

    result = None
    if sc.ic.kind == 'dirac':
        if integrate(sc.profile, sc.lam).gamma == 0.0:
            logger.warning("Law at lambda=%g is an atom; KS test skipped.", sc.lam)
        else:
            result = ks_test(ensemble, delta_cdf(sc.profile, sc.ic.v0, sc.lam),
                             spec.alpha)
    else:
        field = solve_grid(sc.profile, sc.ic, sc.lam, _output_grid(sc), sc.quad)
        result = ks_test(ensemble, field_cdf(field), spec.alpha)

    if result is not None:
        df = result.to_frame()
        _write(df, out_dir, 'ks.csv', written)
        rich_table(df, title="\n[bold][Result][/bold] Kolmogorov-Smirnov",
                   console=console)
    _done(console, out_dir, written)
    if result is not None:
        result.require()


# moments
@cli.command()
@_common_options
@_handle_errors
def moments(scenario_path, out_dir, seed, gh_order, refine):
    "Moments <v^n>: solver, closed form and Monte-Carlo"
    console, sc, written = _start(
        'moments', scenario_path, out_dir, seed, gh_order, refine,
    )

    ensemble = None
    if sc.mc is not None:
        ensemble = sample(sc.profile, sc.ic, sc.lam, sc.mc.n, sc.mc.scheme,
                          sc.mc.n_steps, sc.mc.seed)

    rows = []
    for n in sc.moments:
        try:
            closed = closed_form_moment(sc.profile, sc.ic, n, sc.lam)
        except UnsupportedOperationError:
            closed = math.nan
        rows.append({
            'n': n,
            'moment': moment(sc.profile, sc.ic, n, sc.lam, sc.quad),
            'closed_form': closed,
            'mc_estimate': ensemble_moment(ensemble, n)[0]
            if ensemble is not None else math.nan,
        })
    df = pd.DataFrame(rows, columns=['n', 'moment', 'closed_form', 'mc_estimate'])
    _write(df, out_dir, 'moments.csv', written)
    rich_table(df, title="\n[bold][Result][/bold] Moments", console=console)

    if sc.profile.is_constant:
        exps = exponents_frame(sc.profile.a_spec.value, sc.profile.c_spec.value,
                               sc.moments)
        _write(exps, out_dir, 'exponents.csv', written)
        rich_table(exps, title="\n[bold][Result][/bold] Scaling exponents",
                   console=console)
    _done(console, out_dir, written)


# residual
@cli.command(name='residual')
@_common_options
@_handle_errors
def residual_cmd(scenario_path, out_dir, seed, gh_order, refine):
    "Pointwise PDE residual of the exact solution"
    console, sc, written = _start(
        'residual', scenario_path, out_dir, seed, gh_order, refine,
    )

    lam = min(sc.lam, sc.profile.lambda_max - H_LAMBDA)
    if not lam > H_LAMBDA:
        raise ScenarioError(
            f"Residual needs {H_LAMBDA} < lambda < lambda_max - {H_LAMBDA}, "
            f"got lambda={sc.lam}."
        )
    mean, var = log_law_at(integrate(sc.profile, lam), sc.ic)
    sd = math.sqrt(var)
    y = np.linspace(mean - var - 3.0 * sd, mean - var + 3.0 * sd,
                    sc.residual_points)

    res = residual(sc.profile, evaluator(sc.profile, sc.ic, sc.quad), lam, y)
    df = pd.DataFrame({
        'lambda': np.full(len(y), lam),
        'y': res.y,
        'residual': res.value,
        'scale': res.scale,
    })
    _write(df, out_dir, 'residual.csv', written)
    rich_table(
        df,
        title=f"\n[bold][Result][/bold] Residual, max relative "
              f"{float(np.max(res.relative)):.3e}",
        head=PREVIEW, tail=PREVIEW, console=console,
    )
    _done(console, out_dir, written)
