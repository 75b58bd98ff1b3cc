import logging
from dataclasses import dataclass
from typing import Union

import numpy as np
from numpy.polynomial import Polynomial
from scipy import integrate as sp_integrate

from .config import LAMBDA_SLACK, POSITIVITY_SAMPLES, QUAD_LIMIT, QUAD_RTOL
from .exceptions import DomainError, ScenarioError

logger = logging.getLogger(__name__)

KINDS = ('constant', 'polynomial', 'tabulated')


##############################################################################
# CoefficientSpec
##############################################################################
@dataclass(frozen=True)
class CoefficientSpec:
    """One scale-dependent rate, a(λ) or c(λ)

    Examples:
        >>> CoefficientSpec('constant', value=0.5)(1.0)
        0.5
        >>> CoefficientSpec('polynomial', coefficients=(1.0, 1.0))(2.0)
        3.0
        >>> CoefficientSpec('tabulated', knots=((0.0, 1.0), (2.0, 3.0)))(1.0)
        2.0

    Args:
        kind (str): 'constant', 'polynomial' or 'tabulated'.
        value (float, optional): Constant value.
        coefficients (tuple, optional): Polynomial coefficients, ascending.
        knots (tuple, optional): Sorted (λ, value) pairs, linear in between.
    """

    kind: str
    value: float = None
    coefficients: tuple = None
    knots: tuple = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ScenarioError(
                f"Unknown coefficient kind {self.kind!r}, expected one of {KINDS}."
            )

        if self.kind == 'constant':
            if self.value is None or not np.isfinite(self.value):
                raise ScenarioError("Constant coefficient needs a finite 'value'.")
            object.__setattr__(self, 'value', float(self.value))

        if self.kind == 'polynomial':
            coefs = tuple(float(_) for _ in (self.coefficients or ()))
            if len(coefs) == 0 or not np.all(np.isfinite(coefs)):
                raise ScenarioError(
                    "Polynomial coefficient needs finite 'coefficients'."
                )
            object.__setattr__(self, 'coefficients', coefs)

        if self.kind == 'tabulated':
            knots = tuple(
                (float(_[0]), float(_[1])) for _ in (self.knots or ())
            )
            if len(knots) < 2:
                raise ScenarioError("Tabulated coefficient needs >= 2 knots.")
            lams = np.array([_[0] for _ in knots])
            if not np.all(np.isfinite(lams)) or np.any(np.diff(lams) <= 0):
                raise ScenarioError(
                    "Tabulated knots must be strictly increasing in lambda."
                )
            if not np.all(np.isfinite([_[1] for _ in knots])):
                raise ScenarioError("Tabulated values must be finite.")
            object.__setattr__(self, 'knots', knots)

    # evaluation
    def __call__(self, lam):
        lam = np.asarray(lam, dtype=float)
        if self.kind == 'constant':
            out = np.full_like(lam, self.value)
        elif self.kind == 'polynomial':
            out = self._poly(lam)
        else:
            out = np.interp(lam, self._knot_lams, self._knot_vals)
        return out if out.ndim else float(out)

    def antiderivative(self, lam):
        """∫_0^λ of the rate, closed form for every kind"""
        lam = np.asarray(lam, dtype=float)
        if self.kind == 'constant':
            out = self.value * lam
        elif self.kind == 'polynomial':
            out = self._poly.integ(lbnd=0.0)(lam)
        else:
            out = self._cumulative(lam) - self._cumulative(np.zeros(()))
        return out if np.ndim(out) else float(out)

    @property
    def breakpoints(self) -> np.ndarray:
        if self.kind == 'tabulated':
            return self._knot_lams
        return np.array([])

    @property
    def degree(self) -> int:
        if self.kind == 'polynomial':
            return self._poly.degree()
        return 0

    def stationary_points(self, lo: float, hi: float) -> np.ndarray:
        """Real roots of the derivative inside [lo, hi] (polynomials only)"""
        if self.kind != 'polynomial' or self.degree < 2:
            return np.array([])
        roots = self._poly.deriv().roots()
        roots = roots[np.abs(roots.imag) < 1e-12].real
        return roots[(roots >= lo) & (roots <= hi)]

    # serialization
    def to_dict(self) -> dict:
        if self.kind == 'constant':
            return {'kind': 'constant', 'value': self.value}
        if self.kind == 'polynomial':
            return {'kind': 'polynomial', 'coefficients': list(self.coefficients)}
        return {'kind': 'tabulated', 'knots': [list(_) for _ in self.knots]}

    @classmethod
    def from_dict(cls, d: Union[dict, float, int]) -> 'CoefficientSpec':
        if isinstance(d, (int, float)):
            return cls('constant', value=d)
        if not isinstance(d, dict) or 'kind' not in d:
            raise ScenarioError(f"Coefficient spec needs a 'kind', got {d!r}.")
        unknown = set(d) - {'kind', 'value', 'coefficients', 'knots'}
        if unknown:
            raise ScenarioError(f"Unknown coefficient fields {sorted(unknown)}.")
        return cls(
            d['kind'],
            value=d.get('value'),
            coefficients=d.get('coefficients'),
            knots=d.get('knots'),
        )

    # internals
    @property
    def _poly(self) -> Polynomial:
        return Polynomial(self.coefficients)

    @property
    def _knot_lams(self) -> np.ndarray:
        return np.array([_[0] for _ in self.knots])

    @property
    def _knot_vals(self) -> np.ndarray:
        return np.array([_[1] for _ in self.knots])

    def _cumulative(self, lam: np.ndarray) -> np.ndarray:
        # exact integral of the piecewise-linear interpolant from the first knot
        x, f = self._knot_lams, self._knot_vals
        seg = np.concatenate([[0.0], np.cumsum(0.5 * (f[1:] + f[:-1]) * np.diff(x))])
        k = np.clip(np.searchsorted(x, lam, side='right') - 1, 0, len(x) - 2)
        d = lam - x[k]
        slope = (f[k + 1] - f[k]) / (x[k + 1] - x[k])
        return seg[k] + f[k] * d + 0.5 * slope * d * d


##############################################################################
# CoefficientProfile
##############################################################################
@dataclass(frozen=True)
class CoefficientProfile:
    """Drift and diffusion rates a(λ) > 0, c(λ) > 0 on [0, lambda_max]

    D¹(λ, v) = -a(λ) v and D²(λ, v) = c(λ) v² are derived views.

    Examples:
        >>> profile = CoefficientProfile.constant(a=1.0, c=0.5, lambda_max=2.0)
        >>> b0_at(profile, 0.7)
        2.0

    Args:
        a_spec (CoefficientSpec): Drift rate a(λ).
        c_spec (CoefficientSpec): Diffusion rate c(λ).
        lambda_max (float): Upper bound of the valid scale interval.
    """

    a_spec: CoefficientSpec
    c_spec: CoefficientSpec
    lambda_max: float

    def __post_init__(self):
        if not np.isfinite(self.lambda_max) or self.lambda_max <= 0:
            raise ScenarioError(
                f"lambda_max must be finite and > 0, got {self.lambda_max}."
            )
        object.__setattr__(self, 'lambda_max', float(self.lambda_max))

        for name, spec in (('a', self.a_spec), ('c', self.c_spec)):
            if spec.kind == 'tabulated':
                lams = spec.breakpoints
                if lams[0] > 0.0 or lams[-1] < self.lambda_max:
                    raise ScenarioError(
                        f"Tabulated {name}(λ) knots [{lams[0]}, {lams[-1]}] "
                        f"do not cover [0, {self.lambda_max}]."
                    )
            self._check_positive(name, spec)

    @classmethod
    def constant(cls, a: float, c: float, lambda_max: float):
        return cls(
            CoefficientSpec('constant', value=a),
            CoefficientSpec('constant', value=c),
            lambda_max,
        )

    def a(self, lam):
        return self.a_spec(self.check_scale(lam))

    def c(self, lam):
        return self.c_spec(self.check_scale(lam))

    @property
    def is_constant(self) -> bool:
        return self.a_spec.kind == 'constant' and self.c_spec.kind == 'constant'

    @property
    def breakpoints(self) -> np.ndarray:
        return np.union1d(self.a_spec.breakpoints, self.c_spec.breakpoints)

    def check_scale(self, lam):
        """Validate λ against [0, lambda_max], clipping round-off excursions"""
        arr = np.asarray(lam, dtype=float)
        slack = LAMBDA_SLACK * max(1.0, self.lambda_max)
        if np.any(~np.isfinite(arr)) or np.any(arr < -slack) or \
                np.any(arr > self.lambda_max + slack):
            bad = arr if arr.ndim == 0 else arr[
                ~((arr >= -slack) & (arr <= self.lambda_max + slack))
            ][0]
            raise DomainError(
                f"lambda={float(bad)!r} is outside the valid interval "
                f"[0, {self.lambda_max}].",
                lambda_min=0.0,
                lambda_max=self.lambda_max,
            )
        arr = np.clip(arr, 0.0, self.lambda_max)
        return arr if arr.ndim else float(arr)

    def to_dict(self) -> dict:
        return {
            'a': self.a_spec.to_dict(),
            'c': self.c_spec.to_dict(),
            'lambda_max': self.lambda_max,
        }

    @classmethod
    def from_dict(cls, d: dict) -> 'CoefficientProfile':
        if not isinstance(d, dict):
            raise ScenarioError(f"Profile must be an object, got {type(d)}.")
        missing = {'a', 'c', 'lambda_max'} - set(d)
        if missing:
            raise ScenarioError(f"Profile is missing {sorted(missing)}.")
        return cls(
            CoefficientSpec.from_dict(d['a']),
            CoefficientSpec.from_dict(d['c']),
            d['lambda_max'],
        )

    def _check_positive(self, name: str, spec: CoefficientSpec):
        lams = np.linspace(0.0, self.lambda_max, POSITIVITY_SAMPLES + 1)
        knots = spec.breakpoints
        knots = knots[(knots >= 0.0) & (knots <= self.lambda_max)]
        extra = spec.stationary_points(0.0, self.lambda_max) \
            if spec.degree <= 3 else np.array([])
        lams = np.concatenate([lams, knots, extra])
        vals = np.asarray(spec(lams))
        bad = ~np.isfinite(vals) | (vals <= 0.0)
        if np.any(bad):
            i = int(np.argmax(bad))
            raise ScenarioError(
                f"{name}(λ) must be > 0 on [0, {self.lambda_max}], "
                f"got {name}({lams[i]!r}) = {vals[i]!r}."
            )


##############################################################################
# IntegratedCoefficients
##############################################################################
@dataclass(frozen=True)
class IntegratedCoefficients:
    """Integrals of b₀, b₁ and c over [lam_from, lam]

    beta0 - beta1 + gamma = 0 holds because b₀ - b₁ = -c.
    """

    beta0: float
    beta1: float
    gamma: float
    lam: float
    lam_from: float = 0.0

    @property
    def normalization_defect(self) -> float:
        return self.beta0 - self.beta1 + self.gamma

    @property
    def log_shift(self) -> float:
        """Shift of the mean of ln v, 2γ - β₁ = -∫(a + c)"""
        return 2.0 * self.gamma - self.beta1


##############################################################################
# operations
##############################################################################
def b0_at(profile: CoefficientProfile, lam):
    """b₀(λ) = a(λ) + 2c(λ)

    Examples:
        >>> b0_at(CoefficientProfile.constant(1.0, 0.5, 2.0), 0.7)
        2.0
    """
    return profile.a(lam) + 2.0 * profile.c(lam)


def b1_at(profile: CoefficientProfile, lam):
    """b₁(λ) = a(λ) + 3c(λ)"""
    return profile.a(lam) + 3.0 * profile.c(lam)


def drift_at(profile: CoefficientProfile, lam, v):
    """D¹(λ, v) = -a(λ) v"""
    return -profile.a(lam) * np.asarray(v, dtype=float)


def diffusion_at(profile: CoefficientProfile, lam, v):
    """D²(λ, v) = c(λ) v²"""
    v = np.asarray(v, dtype=float)
    return profile.c(lam) * v * v


def integrate(
    profile: CoefficientProfile,
    lam: float,
    method: str = 'exact',
) -> IntegratedCoefficients:
    """Integrate the rates over [0, λ]

    Constant and polynomial rates integrate in closed form, tabulated rates
    exactly per trapezoid segment. method='quad' uses adaptive Gauss-Kronrod
    quadrature (relative tolerance 1e-12) instead, as a cross-check.

    Examples:
        >>> integrate(CoefficientProfile.constant(1.0, 0.5, 4.0), 2.0)
        IntegratedCoefficients(beta0=4.0, beta1=5.0, gamma=1.0, lam=2.0, lam_from=0.0)

    Args:
        profile (CoefficientProfile): Rates a(λ), c(λ).
        lam (float): Upper limit λ.
        method (str, optional): 'exact' or 'quad'. Defaults to 'exact'.

    Returns:
        IntegratedCoefficients
    """
    return integrate_between(profile, 0.0, lam, method=method)


def integrate_between(
    profile: CoefficientProfile,
    lam_from: float,
    lam_to: float,
    method: str = 'exact',
) -> IntegratedCoefficients:
    """Integrate the rates over [lam_from, lam_to] (restarted integrals)"""
    lam_from = profile.check_scale(float(lam_from))
    lam_to = profile.check_scale(float(lam_to))
    if lam_to < lam_from:
        raise DomainError(
            f"Integration interval [{lam_from}, {lam_to}] is reversed."
        )

    if method == 'exact':
        int_a = profile.a_spec.antiderivative(lam_to) - \
            profile.a_spec.antiderivative(lam_from)
        int_c = profile.c_spec.antiderivative(lam_to) - \
            profile.c_spec.antiderivative(lam_from)
    elif method == 'quad':
        int_a = _quad(profile.a_spec, lam_from, lam_to)
        int_c = _quad(profile.c_spec, lam_from, lam_to)
    else:
        raise ScenarioError(f"Unknown integration method {method!r}.")

    if lam_to == lam_from:
        int_a, int_c = 0.0, 0.0

    # combine from the two primitive integrals so the identity is exact
    return IntegratedCoefficients(
        beta0=float(int_a + 2.0 * int_c),
        beta1=float(int_a + 3.0 * int_c),
        gamma=float(int_c),
        lam=lam_to,
        lam_from=lam_from,
    )


def _quad(spec: CoefficientSpec, lo: float, hi: float) -> float:
    if hi == lo:
        return 0.0
    points = spec.breakpoints
    points = points[(points > lo) & (points < hi)]
    value, abserr = sp_integrate.quad(
        spec, lo, hi,
        epsabs=0.0, epsrel=QUAD_RTOL, limit=QUAD_LIMIT,
        points=points if len(points) else None,
    )
    if abserr > 10 * QUAD_RTOL * max(abs(value), 1e-300):
        logger.warning(
            "Adaptive quadrature on [%s, %s] reports error %.3g", lo, hi, abserr
        )
    return value
