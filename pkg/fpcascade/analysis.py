"""Moments and structure-function scaling exponents

Sign convention: ⟨vⁿ⟩(λ) = v0ⁿ e^{-ζₙ λ}, λ growing toward small scales.
For constant rates and a dirac datum ζₙ = n(a + c) - n²c.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np
import pandas as pd
from scipy.integrate import trapezoid

from .coefficients import CoefficientProfile, integrate
from .config import (AUTO_GRID_GROWTH, AUTO_GRID_POINTS, AUTO_GRID_RETRIES,
                     BOUNDARY_RATIO, MAX_MOMENT, N_SIGMA)
from .exceptions import IntegrationRangeError, ScenarioError, \
    UnsupportedOperationError
from .initial_conditions import InitialCondition
from .propagator import QuadratureConfig, auto_y_grid, log_law_at, solve_grid

logger = logging.getLogger(__name__)

METHODS = ('auto', 'closed_form', 'quadrature')


##############################################################################
# moments
##############################################################################
def moment(
    profile: CoefficientProfile,
    ic: InitialCondition,
    n: int,
    lam: float,
    quad: QuadratureConfig = None,
    method: str = 'auto',
    n_points: int = AUTO_GRID_POINTS,
) -> float:
    """⟨vⁿ⟩ at scale λ

    'auto' uses the closed form for dirac data and grid quadrature
    otherwise. The closed form exp(n m + n² s² / 2), with (m, s²) the law
    of ln v after evolution, also holds for lognormal data.

    Examples:
        >>> profile = CoefficientProfile.constant(1.0, 0.5, 2.0)
        >>> round(moment(profile, InitialCondition.dirac(1.0), 2, 1.0), 6)
        0.367879

    Args:
        profile (CoefficientProfile): Rates.
        ic (InitialCondition): Datum.
        n (int): Order, 0 <= n <= 8.
        lam (float): Scale.
        quad (QuadratureConfig, optional): Heat-kernel quadrature.
        method (str, optional): 'auto', 'closed_form' or 'quadrature'.
        n_points (int, optional): Nodes of the auto-sized grid.

    Raises:
        ScenarioError: n outside [0, 8], unknown method.
        UnsupportedOperationError: closed form requested for grid data.
        IntegrationRangeError: the auto-sized grid misses the integrand.

    Returns:
        float
    """
    if isinstance(n, bool) or int(n) != n or not 0 <= n <= MAX_MOMENT:
        raise ScenarioError(
            f"Moment order must be an integer in [0, {MAX_MOMENT}], got {n!r}."
        )
    n = int(n)
    if method not in METHODS:
        raise ScenarioError(f"Unknown moment method {method!r}.")
    if method == 'auto':
        method = 'closed_form' if ic.kind == 'dirac' else 'quadrature'

    if method == 'closed_form':
        return closed_form_moment(profile, ic, n, lam)
    return quadrature_moment(profile, ic, n, lam, quad, n_points)


def closed_form_moment(
    profile: CoefficientProfile,
    ic: InitialCondition,
    n: int,
    lam: float,
) -> float:
    if ic.kind not in ('dirac', 'lognormal') or ic.shift != 0.0:
        raise UnsupportedOperationError(
            f"No closed-form moments for a '{ic.kind}' datum."
        )
    mean, var = log_law_at(integrate(profile, lam), ic)
    if ic.kind == 'dirac' and mean == math.log(ic.v0) and var == 0.0:
        return ic.v0 ** n
    return math.exp(n * mean + 0.5 * n * n * var)


def quadrature_moment(
    profile: CoefficientProfile,
    ic: InitialCondition,
    n: int,
    lam: float,
    quad: QuadratureConfig = None,
    n_points: int = AUTO_GRID_POINTS,
) -> float:
    """Trapezoid rule for ∫ vⁿ P dv = ∫ e^{(n+1)y} P(λ, e^y) dy

    The grid is widened until the integrand at both ends falls below
    1e-12 of its peak.
    """
    n_sigma = N_SIGMA
    for attempt in range(AUTO_GRID_RETRIES):
        y = auto_y_grid(profile, ic, lam, n_points=n_points,
                        n_sigma=n_sigma, tilt=n)
        field = solve_grid(profile, ic, lam, y, quad)
        integrand = np.exp((n + 1) * y) * field.values
        peak = np.max(np.abs(integrand))
        if peak > 0 and max(abs(integrand[0]), abs(integrand[-1])) <= \
                BOUNDARY_RATIO * peak:
            return float(trapezoid(integrand, y))
        logger.warning(
            "Moment grid [%.3g, %.3g] misses the integrand of order %d; "
            "widening (attempt %d)", y[0], y[-1], n, attempt + 1,
        )
        n_sigma *= AUTO_GRID_GROWTH
    raise IntegrationRangeError(
        f"Could not capture the order-{n} moment integrand after "
        f"{AUTO_GRID_RETRIES} grid enlargements.",
        n=n,
    )


##############################################################################
# scaling exponents
##############################################################################
def scaling_exponents(a: float, c: float, n_list) -> list:
    """ζₙ = n(a + c) - n²c for constant rates

    Examples:
        >>> scaling_exponents(1.0, 0.5, [0, 1, 2, 3])
        [0.0, 1.0, 1.0, 0.0]
    """
    if not a > 0 or not c > 0:
        raise ScenarioError(f"Rates must be > 0, got a={a!r}, c={c!r}.")
    return [float(n * (a + c) - n * n * c) for n in n_list]


def exponents_frame(a: float, c: float, n_list) -> pd.DataFrame:
    return pd.DataFrame({
        'n': list(n_list),
        'zeta_n': scaling_exponents(a, c, n_list),
    })


def is_concave(n_list, zetas) -> bool:
    """Slopes between consecutive orders never increase"""
    n = np.asarray(n_list, dtype=float)
    z = np.asarray(zetas, dtype=float)
    order = np.argsort(n)
    slopes = np.diff(z[order]) / np.diff(n[order])
    return bool(np.all(np.diff(slopes) <= 1e-12 * max(1.0, np.max(np.abs(z)))))


@dataclass(frozen=True)
class ScalingFit:
    n: int
    zeta: float
    intercept: float
    max_residual: float


def fit_scaling_exponent(
    profile: CoefficientProfile,
    ic: InitialCondition,
    n: int,
    lams,
    quad: QuadratureConfig = None,
    method: str = 'auto',
) -> ScalingFit:
    """Least-squares slope of ln⟨vⁿ⟩ against λ, reported as ζₙ = -slope"""
    lams = np.asarray(lams, dtype=float)
    if len(lams) < 2:
        raise ScenarioError("Need at least two scales to fit an exponent.")
    log_m = np.log([moment(profile, ic, n, _lam, quad, method) for _lam in lams])
    slope, intercept = np.polyfit(lams, log_m, 1)
    max_residual = float(np.max(np.abs(log_m - (slope * lams + intercept))))
    return ScalingFit(int(n), float(-slope), float(intercept), max_residual)
