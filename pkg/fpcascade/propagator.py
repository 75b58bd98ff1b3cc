"""Exact solution of the scale-dependent cascade Fokker-Planck equation

P(λ, v) = e^{β₀} e^{β₁ v∂ᵥ} e^{γ (v∂ᵥ)²} φ(v)

The three factors commute, so the solution is a prefactor, a dilation
v -> v e^{β₁} and a Gaussian smoothing of variance 2γ in y = ln v. Every
DensityField holds P as a density in v, sampled on a uniform grid in y.
"""
import logging
import math
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Callable

import numpy as np
import pandas as pd
from scipy.integrate import cumulative_trapezoid, trapezoid
from scipy.special import roots_hermite
from scipy.stats import norm

from .coefficients import CoefficientProfile, IntegratedCoefficients, integrate
from .config import (AUTO_GRID_POINTS, GH_MIN_ORDER, GH_ORDER, GRID_CHUNK,
                     LAW_SAMPLES, N_SIGMA)
from .exceptions import (DegenerateMeasureError, DomainError, ScenarioError,
                         UnsupportedOperationError)
from .initial_conditions import InitialCondition, eval_log, log_law
from .misc import _check_uniform, _chunked_map, _uniform_grid

logger = logging.getLogger(__name__)

SQRT_PI = math.sqrt(math.pi)


##############################################################################
# QuadratureConfig
##############################################################################
@dataclass(frozen=True)
class QuadratureConfig:
    """Gauss-Hermite discretization of the heat-kernel integral

    Args:
        gh_order (int, optional): Number of nodes, even and >= 8.
            Defaults to 64.
        refine (bool, optional): Recompute at twice the order and report the
            pointwise difference as an error estimate; grid data add the
            kernel mass falling outside their support. Defaults to False.
    """

    gh_order: int = GH_ORDER
    refine: bool = False

    def __post_init__(self):
        if isinstance(self.gh_order, bool) or \
                int(self.gh_order) != self.gh_order:
            raise ScenarioError(f"gh_order must be an integer, got {self.gh_order!r}.")
        object.__setattr__(self, 'gh_order', int(self.gh_order))
        if self.gh_order < GH_MIN_ORDER or self.gh_order % 2:
            raise ScenarioError(
                f"gh_order must be even and >= {GH_MIN_ORDER}, "
                f"got {self.gh_order}."
            )
        object.__setattr__(self, 'refine', bool(self.refine))

    def rule(self) -> tuple:
        return _gh_rule(self.gh_order)

    def doubled(self) -> 'QuadratureConfig':
        return replace(self, gh_order=2 * self.gh_order, refine=False)

    def to_dict(self) -> dict:
        return {'gh_order': self.gh_order, 'refine': self.refine}

    @classmethod
    def from_dict(cls, d: dict) -> 'QuadratureConfig':
        d = d or {}
        unknown = set(d) - {'gh_order', 'refine'}
        if unknown:
            raise ScenarioError(f"Unknown quadrature fields {sorted(unknown)}.")
        return cls(**d)


@lru_cache(maxsize=None)
def _gh_rule(order: int) -> tuple:
    t, w = roots_hermite(order)
    t.setflags(write=False)
    w.setflags(write=False)
    return t, w


##############################################################################
# DensityField
##############################################################################
@dataclass(eq=False)
class DensityField:
    """P(λ, e^y) on a uniform y grid, as a density with respect to v

    Args:
        lam (float): Scale of the field.
        y (np.ndarray): Uniform grid in y = ln v.
        values (np.ndarray): P(λ, e^y) at each node.
        errors (np.ndarray, optional): Pointwise order-doubling differences.
        warnings (tuple, optional): Audit messages attached by solvers.
    """

    lam: float
    y: np.ndarray
    values: np.ndarray
    errors: np.ndarray = None
    warnings: tuple = ()

    @property
    def v(self) -> np.ndarray:
        return np.exp(self.y)

    @property
    def y_min(self) -> float:
        return float(self.y[0])

    @property
    def y_max(self) -> float:
        return float(self.y[-1])

    @property
    def n_points(self) -> int:
        return len(self.y)

    @property
    def mass(self) -> float:
        """∫ P dv = ∫ P(λ, e^y) e^y dy (trapezoid)"""
        return float(trapezoid(self.values * np.exp(self.y), self.y))

    @property
    def error_estimate(self) -> float:
        if self.errors is None:
            return None
        return float(np.max(self.errors))

    def to_frame(self) -> pd.DataFrame:
        df = pd.DataFrame({'y': self.y, 'v': self.v, 'P': self.values})
        if self.errors is not None:
            df['P_err'] = self.errors
        return df


##############################################################################
# operator factors
##############################################################################
def dilate(ic: InitialCondition, beta1: float) -> InitialCondition:
    """Precompose the datum with v -> v e^{β₁}

    In log coordinates this shifts the evaluation argument, y -> y + β₁.
    No Jacobian is applied: the operator acts on functions, not measures.

    Raises:
        UnsupportedOperationError: Dirac data are handled by solve_delta.
    """
    if ic.kind == 'dirac':
        raise UnsupportedOperationError(
            "Dirac datum cannot be dilated pointwise; use solve_delta."
        )
    return replace(ic, shift=ic.shift + float(beta1))


def heat_kernel_apply(
    g: Callable,
    gamma: float,
    y,
    quad: QuadratureConfig = None,
):
    """Apply e^{γ (v∂ᵥ)²} to g, as a Gaussian smoothing in y = ln v

    With s = 2√γ t the kernel integral becomes (1/√π) ∫ e^{-t²} g(y - 2√γ t) dt,
    evaluated by Gauss-Hermite quadrature. γ = 0 is the identity.

    Examples:
        >>> round(heat_kernel_apply(lambda y: np.exp(2 * y), 0.25, 0.0), 6)
        2.718282

    Args:
        g (Callable): Vectorized function of y.
        gamma (float): Integrated diffusion rate, >= 0.
        y (float, np.ndarray): Evaluation points.
        quad (QuadratureConfig, optional): Defaults to 64 nodes.

    Raises:
        DomainError: gamma < 0.
    """
    if not gamma >= 0.0:
        raise DomainError(f"gamma must be >= 0, got {gamma!r}.")
    y = np.asarray(y, dtype=float)
    if gamma == 0.0:
        out = np.asarray(g(y), dtype=float)
        return out if out.ndim else float(out)

    t, w = (quad or QuadratureConfig()).rule()
    pts = y[..., None] - 2.0 * math.sqrt(gamma) * t
    out = (np.asarray(g(pts), dtype=float) * w).sum(axis=-1) / SQRT_PI
    return out if out.ndim else float(out)


def propagate(
    ic: InitialCondition,
    coeffs: IntegratedCoefficients,
    y,
    quad: QuadratureConfig = None,
):
    """Evolve the datum with given integrals: e^{β₀} · heat(dilate(φ, β₁), γ)

    Integrals over any [λ₁, λ₂] are accepted, which restarts an evolution
    from a field known at λ₁.
    """
    quad = quad or QuadratureConfig()
    y = np.asarray(y, dtype=float)

    if ic.kind == 'dirac':
        if coeffs.gamma == 0.0:
            raise DegenerateMeasureError(
                "Dirac datum has no density at zero integrated diffusion."
            )
        return _delta_density(ic.v0, coeffs, y)

    dilated = dilate(ic, coeffs.beta1)
    if coeffs.gamma == 0.0:
        out = math.exp(coeffs.beta0) * np.asarray(eval_log(dilated, y))
    elif ic.kind == 'lognormal' and ic.sigma2 < 2.0 * coeffs.gamma:
        out = _lognormal_weighted(dilated, coeffs, y, quad)
    else:
        out = math.exp(coeffs.beta0) * np.asarray(
            heat_kernel_apply(lambda u: eval_log(dilated, u),
                              coeffs.gamma, y, quad)
        )
    return out if np.ndim(out) else float(out)


def _lognormal_weighted(ic, coeffs, y, quad):
    # Gauss-Hermite weight on the datum's Gaussian when it is the narrower
    # factor; the kernel is smooth on that scale.
    t, w = quad.rule()
    sigma = math.sqrt(ic.sigma2)
    gamma = coeffs.gamma
    nodes = ic.mu - ic.shift + math.sqrt(2.0) * sigma * t
    z = y[..., None] - nodes
    expo = coeffs.beta0 - z * z / (4.0 * gamma) - (ic.mu + math.sqrt(2.0) * sigma * t)
    return (np.exp(expo) * w).sum(axis=-1) / (SQRT_PI * math.sqrt(4.0 * math.pi * gamma))


def _delta_density(v0: float, coeffs: IntegratedCoefficients, y):
    gamma = coeffs.gamma
    z = np.asarray(y, dtype=float) - math.log(v0) + coeffs.beta1
    out = np.exp(coeffs.beta0 - z * z / (4.0 * gamma)) / \
        (v0 * math.sqrt(4.0 * math.pi * gamma))
    return out if np.ndim(out) else float(out)


##############################################################################
# solutions
##############################################################################
def solve_at(
    profile: CoefficientProfile,
    ic: InitialCondition,
    lam: float,
    y,
    quad: QuadratureConfig = None,
):
    """Exact solution P(λ, e^y) for a lognormal or grid datum

    Examples:
        >>> profile = CoefficientProfile.constant(1.0, 0.5, 2.0)
        >>> ic = InitialCondition.lognormal(0.0, 1e-4)
        >>> round(solve_at(profile, ic, 1.0, 0.0), 4)
        0.1295

    Raises:
        UnsupportedOperationError: Dirac datum (use solve_delta).
        DomainError: λ outside the profile's interval.
    """
    lam = profile.check_scale(lam)
    if ic.kind == 'dirac':
        raise UnsupportedOperationError(
            "Dirac datum has a closed-form solution; use solve_delta."
        )
    if lam == 0.0:
        return eval_log(ic, y)
    return propagate(ic, integrate(profile, lam), y, quad)


def solve_delta(
    profile: CoefficientProfile,
    v0: float,
    lam: float,
    y,
):
    """Closed-form solution for φ = δ(v - v0)

    P(λ, v) = e^{β₀} / (v0 √(4πγ)) · exp(-(ln(v/v0) + β₁)² / (4γ)), so ln v is
    Gaussian with mean ln v0 + 2γ - β₁ and variance 2γ.

    Raises:
        DegenerateMeasureError: λ = 0, the datum is an atom.
    """
    if not v0 > 0:
        raise ScenarioError(f"v0 must be > 0, got {v0!r}.")
    lam = profile.check_scale(lam)
    if lam == 0.0:
        raise DegenerateMeasureError(
            "The solution at lambda=0 is the atom itself; it has no density.",
            v0=v0,
        )
    return _delta_density(v0, integrate(profile, lam), y)


def solve_grid(
    profile: CoefficientProfile,
    ic: InitialCondition,
    lam: float,
    y_grid,
    quad: QuadratureConfig = None,
    coeffs: IntegratedCoefficients = None,
) -> DensityField:
    """Batched solution over a uniform y grid

    Dirac data use the closed form directly. Other data are evaluated in
    fixed-size node chunks, possibly in parallel; every node is computed
    independently so results do not depend on the worker count.

    Args:
        profile (CoefficientProfile): Rates.
        ic (InitialCondition): Datum.
        lam (float): Target scale.
        y_grid (np.ndarray): Uniform grid in y.
        quad (QuadratureConfig, optional): Defaults to 64 nodes, no refine.
        coeffs (IntegratedCoefficients, optional): Use these integrals
            instead of integrating over [0, lam] (restarted evolution).

    Returns:
        DensityField
    """
    quad = quad or QuadratureConfig()
    y = np.asarray(y_grid, dtype=float)
    _check_uniform(y)
    lam = profile.check_scale(lam)
    if coeffs is None:
        coeffs = integrate(profile, lam)

    if ic.kind == 'dirac':
        if coeffs.gamma == 0.0:
            raise DegenerateMeasureError(
                "The solution at lambda=0 is the atom itself; it has no density."
            )
        values = _delta_density(ic.v0, coeffs, y)
        errors = np.zeros_like(y) if quad.refine else None
        return DensityField(lam, y, np.asarray(values), errors)

    def _solve(q):
        chunks = _chunked_map(
            lambda lo, hi: np.atleast_1d(propagate(ic, coeffs, y[lo:hi], q)),
            len(y), GRID_CHUNK,
        )
        return np.concatenate(chunks)

    logger.debug(
        "solve_grid: %d nodes, gh_order=%d, gamma=%.6g",
        len(y), quad.gh_order, coeffs.gamma,
    )
    values = _solve(quad)
    errors = None
    if quad.refine:
        errors = np.abs(_solve(quad.doubled()) - values)
        if ic.kind == 'grid':
            errors = errors + _truncation_bound(ic, coeffs, y)
    return DensityField(lam, y, values, errors)


def _truncation_bound(ic: InitialCondition, coeffs: IntegratedCoefficients, y):
    # kernel mass falling outside [y_min, y_max], weighted by the largest sample
    if coeffs.gamma == 0.0:
        return np.zeros_like(y)
    scale = math.sqrt(2.0 * coeffs.gamma)
    centre = y + ic.shift + coeffs.beta1
    tails = norm.sf((ic.y_max - centre) / scale) + norm.cdf((ic.y_min - centre) / scale)
    return math.exp(coeffs.beta0) * max(ic.samples) * tails


##############################################################################
# laws and CDFs
##############################################################################
def log_law_at(coeffs: IntegratedCoefficients, ic: InitialCondition) -> tuple:
    """Mean and variance of ln v after evolution: (m + 2γ - β₁, s² + 2γ)"""
    mean, var = log_law(ic)
    return mean + coeffs.log_shift, var + 2.0 * coeffs.gamma


def evolved_lognormal(
    coeffs: IntegratedCoefficients,
    ic: InitialCondition,
) -> InitialCondition:
    """Closed-form evolution of a dirac or lognormal datum (stays lognormal)"""
    if ic.kind not in ('dirac', 'lognormal') or ic.shift != 0.0:
        raise UnsupportedOperationError(
            f"No closed form for a '{ic.kind}' datum."
        )
    mean, var = log_law_at(coeffs, ic)
    if var == 0.0:
        raise DegenerateMeasureError("Evolved law is still an atom.")
    return InitialCondition.lognormal(mean, var)


def auto_y_grid(
    profile: CoefficientProfile,
    ic: InitialCondition,
    lam: float,
    n_points: int = AUTO_GRID_POINTS,
    n_sigma: float = N_SIGMA,
    path: bool = False,
    tilt: float = 0.0,
) -> np.ndarray:
    """Uniform y grid covering P(λ, e^y) to n_sigma standard deviations

    P(e^y) peaks at m - s² when ln v ~ N(m, s²), so the grid spans
    [m - s² - k s, m + k s]. With path=True the envelope is taken over
    scales sampled along [0, lam], as a time-stepping solver needs.
    `tilt` shifts the right edge for integrands weighted by v^tilt.
    """
    lam = profile.check_scale(lam)
    lams = np.linspace(0.0, lam, LAW_SAMPLES) if path else [lam]
    lo, hi = np.inf, -np.inf
    for _lam in lams:
        mean, var = log_law_at(integrate(profile, _lam), ic)
        sd = math.sqrt(var)
        lo = min(lo, mean - var - n_sigma * sd)
        hi = max(hi, mean + tilt * var + n_sigma * sd)
    if not hi > lo:
        raise DegenerateMeasureError(
            "Law of ln v has zero width; no grid can resolve it."
        )
    return _uniform_grid(lo, hi, n_points)


def delta_cdf(profile: CoefficientProfile, v0: float, lam: float) -> Callable:
    """CDF of v under the closed-form delta solution (a step at λ = 0)"""
    coeffs = integrate(profile, lam)
    mean = math.log(v0) + coeffs.log_shift
    sd = math.sqrt(2.0 * coeffs.gamma)

    def _cdf(v):
        v = np.asarray(v, dtype=float)
        if sd == 0.0:
            return (v >= v0).astype(float)
        return norm.cdf((np.log(v) - mean) / sd)

    return _cdf


def field_cdf(field: DensityField) -> Callable:
    """CDF of v from a DensityField by cumulative trapezoid in y"""
    cdf = cumulative_trapezoid(field.values * np.exp(field.y), field.y,
                               initial=0.0)
    total = cdf[-1]
    if not total > 0:
        raise DegenerateMeasureError("Field has zero mass.")
    cdf = np.maximum.accumulate(np.clip(cdf / total, 0.0, 1.0))

    def _cdf(v):
        return np.interp(np.log(np.asarray(v, dtype=float)), field.y, cdf,
                         left=0.0, right=1.0)

    return _cdf


def evaluator(
    profile: CoefficientProfile,
    ic: InitialCondition,
    quad: QuadratureConfig = None,
) -> Callable:
    """P(λ, y) as a function of both arguments, for residual checks"""
    if ic.kind == 'dirac':
        return lambda lam, y: solve_delta(profile, ic.v0, lam, y)
    return lambda lam, y: solve_at(profile, ic, lam, y, quad)
