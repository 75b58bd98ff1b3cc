import logging
import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np
import pandas as pd
from scipy.linalg import solve_banded

from .coefficients import CoefficientProfile, b0_at, b1_at, integrate
from .config import (BOUNDARY_RATIO, FD_MASS_TOL, FD_MIN_NODES,
                     FD_MIN_STEPS, FD_NEGATIVE_FLOOR, H_LAMBDA, H_Y, N_SIGMA)
from .exceptions import (MassAuditError, NegativeDensityError, ScenarioError,
                         UnsupportedOperationError)
from .initial_conditions import InitialCondition, eval_log, mass
from .misc import _uniform_grid
from .propagator import (DensityField, QuadratureConfig, auto_y_grid,
                         propagate, solve_grid)

logger = logging.getLogger(__name__)


##############################################################################
# FdConfig
##############################################################################
@dataclass(frozen=True)
class FdConfig:
    """Crank-Nicolson grid in y = ln v

    Bounds left as None are sized from the evolved law of ln v along
    [0, λ] (see resolve). Boundaries are zero-Dirichlet on both ends.

    Args:
        n_y (int, optional): Spatial nodes, >= 64. Defaults to 2048.
        n_steps (int, optional): Scale steps, >= 64. Defaults to 2000.
        y_min (float, optional): Lower bound. Defaults to None (auto).
        y_max (float, optional): Upper bound. Defaults to None (auto).
        n_sigma (float, optional): Auto-sizing width. Defaults to 9.
    """

    n_y: int = 2048
    n_steps: int = 2000
    y_min: float = None
    y_max: float = None
    n_sigma: float = N_SIGMA
    boundary: str = 'dirichlet'

    def __post_init__(self):
        if int(self.n_y) < FD_MIN_NODES:
            raise ScenarioError(f"n_y must be >= {FD_MIN_NODES}, got {self.n_y}.")
        if int(self.n_steps) < FD_MIN_STEPS:
            raise ScenarioError(
                f"n_steps must be >= {FD_MIN_STEPS}, got {self.n_steps}."
            )
        if self.boundary != 'dirichlet':
            raise ScenarioError(
                f"Only zero-Dirichlet boundaries are supported, "
                f"got {self.boundary!r}."
            )
        if (self.y_min is None) != (self.y_max is None):
            raise ScenarioError("Give both y_min and y_max, or neither.")
        if self.y_min is not None and not self.y_min < self.y_max:
            raise ScenarioError(
                f"FD domain needs y_min < y_max, got [{self.y_min}, {self.y_max}]."
            )
        object.__setattr__(self, 'n_y', int(self.n_y))
        object.__setattr__(self, 'n_steps', int(self.n_steps))

    @property
    def resolved(self) -> bool:
        return self.y_min is not None

    @property
    def spacing(self) -> float:
        if not self.resolved:
            raise ScenarioError("FD domain is not resolved yet.")
        return (self.y_max - self.y_min) / (self.n_y - 1)

    @property
    def y(self) -> np.ndarray:
        return _uniform_grid(self.y_min, self.y_max, self.n_y)

    def resolve(
        self,
        profile: CoefficientProfile,
        ic: InitialCondition,
        lam: float,
    ) -> 'FdConfig':
        if self.resolved:
            return self
        y = auto_y_grid(profile, ic, lam, n_points=2, n_sigma=self.n_sigma,
                        path=True)
        return replace(self, y_min=float(y[0]), y_max=float(y[-1]))

    def refined(self) -> 'FdConfig':
        """Both grid steps halved, keeping coarse nodes"""
        return replace(self, n_y=2 * (self.n_y - 1) + 1,
                       n_steps=2 * self.n_steps)

    def to_dict(self) -> dict:
        return {
            'n_y': self.n_y,
            'n_steps': self.n_steps,
            'y_min': self.y_min,
            'y_max': self.y_max,
            'n_sigma': self.n_sigma,
        }

    @classmethod
    def from_dict(cls, d: dict) -> 'FdConfig':
        d = d or {}
        unknown = set(d) - {'n_y', 'n_steps', 'y_min', 'y_max', 'n_sigma',
                            'boundary'}
        if unknown:
            raise ScenarioError(f"Unknown fd fields {sorted(unknown)}.")
        return cls(**d)


##############################################################################
# PDE residual
##############################################################################
@dataclass(eq=False)
class Residual:
    """∂λP - b₀P - b₁∂yP - c∂yyP and the largest of its four terms"""

    lam: float
    y: np.ndarray
    value: np.ndarray
    scale: np.ndarray

    @property
    def relative(self) -> np.ndarray:
        return np.abs(self.value) / np.where(self.scale > 0, self.scale, 1.0)


def residual(
    profile: CoefficientProfile,
    field: Callable,
    lam: float,
    y,
    h_y: float = H_Y,
    h_lam: float = H_LAMBDA,
) -> Residual:
    """Pointwise residual of the log-coordinate cascade equation

    ∂P/∂λ = b₀P + b₁ v∂ᵥP + c (v∂ᵥ)²P with v∂ᵥ = ∂y. Fourth-order central
    differences in y, second-order central differences in λ.

    Args:
        profile (CoefficientProfile): Rates.
        field (Callable): P(λ, y), vectorized in y.
        lam (float): Interior scale, lam - h_lam >= 0.
        y (float, np.ndarray): Interior log-velocities.

    Raises:
        DomainError: λ ± h_lam leaves the valid interval.
    """
    profile.check_scale(lam - h_lam)
    profile.check_scale(lam + h_lam)
    y = np.atleast_1d(np.asarray(y, dtype=float))

    p_m2, p_m1, p_0, p_p1, p_p2 = (
        np.asarray(field(lam, y + k * h_y), dtype=float) for k in (-2, -1, 0, 1, 2)
    )
    dp_dlam = (np.asarray(field(lam + h_lam, y)) -
               np.asarray(field(lam - h_lam, y))) / (2.0 * h_lam)
    dp_dy = (-p_p2 + 8.0 * p_p1 - 8.0 * p_m1 + p_m2) / (12.0 * h_y)
    d2p_dy2 = (-p_p2 + 16.0 * p_p1 - 30.0 * p_0 + 16.0 * p_m1 - p_m2) / \
        (12.0 * h_y * h_y)

    terms = (
        dp_dlam,
        b0_at(profile, lam) * p_0,
        b1_at(profile, lam) * dp_dy,
        profile.c(lam) * d2p_dy2,
    )
    value = terms[0] - terms[1] - terms[2] - terms[3]
    scale = np.max(np.abs(np.stack(terms)), axis=0)
    return Residual(lam, y, value, scale)


##############################################################################
# Crank-Nicolson solver
##############################################################################
def narrow_lognormal(
    v0: float,
    cfg: FdConfig,
    sigma2: float = None,
) -> InitialCondition:
    """Lognormal stand-in for δ(v - v0) on a resolved FD grid

    The variance is at least 4h², h being the grid spacing.
    """
    floor = 4.0 * cfg.spacing ** 2
    return InitialCondition.lognormal(math.log(v0), max(sigma2 or 0.0, floor))


def prepare(
    profile: CoefficientProfile,
    ic: InitialCondition,
    lam: float,
    cfg: FdConfig,
    sigma2: float = None,
) -> tuple:
    """Resolve the FD domain, replacing dirac data by the narrow stand-in"""
    cfg = cfg.resolve(profile, ic, lam)
    if ic.kind != 'dirac':
        return ic, cfg
    standin = narrow_lognormal(ic.v0, cfg, sigma2)
    logger.info(
        "Dirac datum at v0=%g replaced by lognormal stand-in, sigma2=%.3g",
        ic.v0, standin.sigma2,
    )
    return standin, cfg


def fd_solve(
    profile: CoefficientProfile,
    ic: InitialCondition,
    lam: float,
    cfg: FdConfig = None,
    quad: QuadratureConfig = None,
) -> DensityField:
    """Crank-Nicolson solution of ∂λp = b₀p + b₁∂yp + c∂yyp

    Coefficients are frozen at the midpoint of each λ step. The returned
    field holds P(λ, e^y), a density in v. If the exact solution is not
    negligible at the boundaries, a warning is attached to the field.

    Raises:
        UnsupportedOperationError: Dirac datum (use narrow_lognormal).
        NegativeDensityError: Undershoot below -1e-10 of the peak.
    """
    if ic.kind == 'dirac':
        raise UnsupportedOperationError(
            "Dirac datum is not representable on a grid; "
            "use narrow_lognormal as a stand-in."
        )
    cfg = (cfg or FdConfig()).resolve(profile, ic, lam)
    lam = profile.check_scale(lam)
    y = cfg.y
    h = cfg.spacing
    dlam = lam / cfg.n_steps

    p = np.asarray(eval_log(ic, y), dtype=float).copy()
    p[0] = p[-1] = 0.0

    mids = (np.arange(cfg.n_steps) + 0.5) * dlam
    b0s = np.atleast_1d(b0_at(profile, mids))
    b1s = np.atleast_1d(b1_at(profile, mids))
    cs = np.atleast_1d(profile.c(mids))

    logger.debug("fd_solve: n_y=%d n_steps=%d h=%.4g dlam=%.4g",
                 cfg.n_y, cfg.n_steps, h, dlam)

    n = cfg.n_y - 2
    ab = np.empty((3, n))
    for k in range(cfg.n_steps):
        lower = -b1s[k] / (2.0 * h) + cs[k] / (h * h)
        diag = b0s[k] - 2.0 * cs[k] / (h * h)
        upper = b1s[k] / (2.0 * h) + cs[k] / (h * h)
        r = 0.5 * dlam

        interior = p[1:-1]
        rhs = interior + r * (lower * p[:-2] + diag * interior + upper * p[2:])

        ab[0, :] = -r * upper
        ab[1, :] = 1.0 - r * diag
        ab[2, :] = -r * lower
        ab[0, 0] = 0.0
        ab[2, -1] = 0.0
        p[1:-1] = solve_banded((1, 1), ab, rhs)

    peak = float(np.max(p))
    if np.min(p) < -FD_NEGATIVE_FLOOR * peak:
        raise NegativeDensityError(
            f"Crank-Nicolson density undershoots to {np.min(p)!r} "
            f"(peak {peak!r}).",
            minimum=float(np.min(p)),
        )

    warnings = _boundary_audit(profile, ic, lam, cfg, peak, quad)
    return DensityField(lam, y, p, warnings=tuple(warnings))


def _boundary_audit(profile, ic, lam, cfg, peak, quad):
    coeffs = integrate(profile, lam)
    edges = np.atleast_1d(propagate(ic, coeffs, [cfg.y_min, cfg.y_max], quad))
    warnings = []
    for name, val in zip(('y_min', 'y_max'), edges):
        if abs(val) > BOUNDARY_RATIO * peak:
            msg = (f"Exact solution at {name} is {val:.3e}, more than "
                   f"{BOUNDARY_RATIO:g} of the peak {peak:.3e}; widen the domain.")
            logger.warning(msg)
            warnings.append(msg)
    return warnings


##############################################################################
# comparisons
##############################################################################
def max_relative_deviation(approx, exact) -> float:
    """max|approx - exact| / max|exact|"""
    approx = np.asarray(approx, dtype=float)
    exact = np.asarray(exact, dtype=float)
    return float(np.max(np.abs(approx - exact)) / np.max(np.abs(exact)))


@dataclass(eq=False)
class OracleReport:
    """FD field, exact field on the same nodes, and summary numbers"""

    fd: DensityField
    exact: DensityField
    initial_mass: float

    @property
    def max_relative_deviation(self) -> float:
        return max_relative_deviation(self.fd.values, self.exact.values)

    @property
    def mass_drift(self) -> float:
        return self.fd.mass - self.initial_mass

    def audit_mass(self, tol: float = FD_MASS_TOL):
        """Raise when mass drifts although the boundaries carry none

        Raises:
            MassAuditError: |drift| > tol with a clean boundary audit.
        """
        if self.fd.warnings:
            return
        if abs(self.mass_drift) > tol:
            raise MassAuditError(
                f"Crank-Nicolson run drifted in mass by {self.mass_drift:.3e} "
                f"(tolerance {tol:g}).",
                mass_drift=self.mass_drift,
            )

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            'y': self.fd.y,
            'P_exact': self.exact.values,
            'P_fd': self.fd.values,
            'abs_diff': np.abs(self.fd.values - self.exact.values),
        })

    def summary_frame(self) -> pd.DataFrame:
        return pd.DataFrame([{
            'lambda': self.fd.lam,
            'n_y': self.fd.n_points,
            'max_relative_deviation': self.max_relative_deviation,
            'mass_drift': self.mass_drift,
            'warnings': ' | '.join(self.fd.warnings),
        }])


def compare(
    profile: CoefficientProfile,
    ic: InitialCondition,
    lam: float,
    cfg: FdConfig = None,
    quad: QuadratureConfig = None,
) -> OracleReport:
    """Run fd_solve and the exact solution on the same nodes"""
    fd = fd_solve(profile, ic, lam, cfg, quad)
    exact = solve_grid(profile, ic, lam, fd.y, quad)
    return OracleReport(fd, exact, mass(ic))


@dataclass(eq=False)
class ConvergenceStudy:
    n_y: list
    n_steps: list
    deviations: list

    @property
    def orders(self) -> list:
        return [
            math.log2(a / b) for a, b in zip(self.deviations[:-1],
                                             self.deviations[1:])
        ]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            'n_y': self.n_y,
            'n_steps': self.n_steps,
            'max_relative_deviation': self.deviations,
            'order': [np.nan] + self.orders,
        })


def convergence_study(
    profile: CoefficientProfile,
    ic: InitialCondition,
    lam: float,
    cfg: FdConfig,
    levels: int = 3,
    quad: QuadratureConfig = None,
) -> ConvergenceStudy:
    """Deviation from the exact solution as both grid steps are halved

    `cfg` is the coarsest level; its domain is fixed for every level.
    """
    cfg = cfg.resolve(profile, ic, lam)
    study = ConvergenceStudy([], [], [])
    for _ in range(levels):
        report = compare(profile, ic, lam, cfg, quad)
        study.n_y.append(cfg.n_y)
        study.n_steps.append(cfg.n_steps)
        study.deviations.append(report.max_relative_deviation)
        logger.debug("convergence: n_y=%d deviation=%.3e", cfg.n_y,
                     study.deviations[-1])
        cfg = cfg.refined()
    return study
