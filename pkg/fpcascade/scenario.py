import json
import logging
import os
from dataclasses import dataclass, field, replace

from .coefficients import CoefficientProfile
from .config import (AUTO_GRID_POINTS, EM_MIN_STEPS, KS_ALPHA, MAX_MOMENT,
                     N_BINS, SCHEMES)
from .exceptions import FpCascadeError, ScenarioError
from .initial_conditions import InitialCondition
from .misc import _linl
from .oracle import FdConfig
from .propagator import QuadratureConfig

logger = logging.getLogger(__name__)

DEFAULT_MOMENTS = (0, 1, 2, 3, 4)
DEFAULT_RESIDUAL_POINTS = 20


##############################################################################
# sub-configs
##############################################################################
@dataclass(frozen=True)
class GridSpec:
    """Output grid in y; bounds left as None are sized from the solution"""

    y_min: float = None
    y_max: float = None
    n_points: int = AUTO_GRID_POINTS

    def __post_init__(self):
        if (self.y_min is None) != (self.y_max is None):
            raise ScenarioError("Give both grid y_min and y_max, or neither.")
        if self.y_min is not None and not self.y_min < self.y_max:
            raise ScenarioError(
                f"Grid needs y_min < y_max, got [{self.y_min}, {self.y_max}]."
            )
        if isinstance(self.n_points, bool) or int(self.n_points) != self.n_points \
                or self.n_points < 2:
            raise ScenarioError(
                f"Grid n_points must be an integer >= 2, got {self.n_points!r}."
            )
        object.__setattr__(self, 'n_points', int(self.n_points))

    @property
    def auto(self) -> bool:
        return self.y_min is None

    def to_dict(self) -> dict:
        return {'y_min': self.y_min, 'y_max': self.y_max,
                'n_points': self.n_points}

    @classmethod
    def from_dict(cls, d: dict) -> 'GridSpec':
        return cls(**_fields(d, {'y_min', 'y_max', 'n_points'}, 'grid'))


@dataclass(frozen=True)
class McSpec:
    """Monte-Carlo run: sample count, scheme, seed and KS settings"""

    n: int = 100000
    scheme: str = 'exact_gaussian'
    seed: int = 0
    n_steps: int = None
    alpha: float = KS_ALPHA
    n_bins: int = N_BINS

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ScenarioError(
                f"Unknown scheme {self.scheme!r}, expected one of {SCHEMES}."
            )
        for name in ('n', 'seed', 'n_bins'):
            val = getattr(self, name)
            if isinstance(val, bool) or int(val) != val or val < 0:
                raise ScenarioError(f"mc.{name} must be a non-negative integer.")
        if self.n < 1 or self.n_bins < 1:
            raise ScenarioError("mc.n and mc.n_bins must be >= 1.")
        if self.scheme == 'euler_maruyama' and \
                (self.n_steps is None or self.n_steps < EM_MIN_STEPS):
            raise ScenarioError(
                f"euler_maruyama needs n_steps >= {EM_MIN_STEPS}."
            )
        if not 0.0 < self.alpha < 1.0:
            raise ScenarioError(f"mc.alpha must be in (0, 1), got {self.alpha!r}.")

    def to_dict(self) -> dict:
        return {
            'n': self.n,
            'scheme': self.scheme,
            'seed': self.seed,
            'n_steps': self.n_steps,
            'alpha': self.alpha,
            'n_bins': self.n_bins,
        }

    @classmethod
    def from_dict(cls, d: dict) -> 'McSpec':
        return cls(**_fields(
            d, {'n', 'scheme', 'seed', 'n_steps', 'alpha', 'n_bins'}, 'mc'
        ))


##############################################################################
# Scenario
##############################################################################
@dataclass(frozen=True)
class Scenario:
    """Everything one CLI invocation needs

    Examples:
        >>> sc = Scenario.from_dict({
        ...     'profile': {'a': 1.0, 'c': 0.5, 'lambda_max': 2.0},
        ...     'initial_condition': {'kind': 'dirac', 'v0': 1.0},
        ...     'lambda': 1.0,
        ... })
        >>> Scenario.from_dict(sc.to_dict()) == sc
        True
    """

    profile: CoefficientProfile
    ic: InitialCondition
    lam: float
    grid: GridSpec = field(default_factory=GridSpec)
    quad: QuadratureConfig = field(default_factory=QuadratureConfig)
    fd: FdConfig = None
    mc: McSpec = None
    moments: tuple = DEFAULT_MOMENTS
    residual_points: int = DEFAULT_RESIDUAL_POINTS

    def __post_init__(self):
        try:
            lam = float(self.lam)
        except (TypeError, ValueError):
            raise ScenarioError(f"lambda must be a number, got {self.lam!r}.")
        if not 0.0 <= lam <= self.profile.lambda_max:
            raise ScenarioError(
                f"lambda={lam!r} outside [0, {self.profile.lambda_max}]."
            )
        object.__setattr__(self, 'lam', lam)

        moments = tuple(_linl(self.moments, cast=int))
        if any(not 0 <= n <= MAX_MOMENT for n in moments):
            raise ScenarioError(
                f"Moment orders must lie in [0, {MAX_MOMENT}], got {moments}."
            )
        object.__setattr__(self, 'moments', moments)

        if isinstance(self.residual_points, bool) or \
                int(self.residual_points) != self.residual_points or \
                self.residual_points < 1:
            raise ScenarioError("residual_points must be an integer >= 1.")
        object.__setattr__(self, 'residual_points', int(self.residual_points))

    def with_overrides(
        self,
        seed: int = None,
        gh_order: int = None,
        refine: bool = None,
    ) -> 'Scenario':
        """Apply command-line overrides"""
        sc = self
        if seed is not None:
            sc = replace(sc, mc=replace(sc.mc or McSpec(), seed=seed))
        if gh_order is not None:
            sc = replace(sc, quad=replace(sc.quad, gh_order=gh_order))
        if refine is not None:
            sc = replace(sc, quad=replace(sc.quad, refine=refine))
        return sc

    def to_dict(self) -> dict:
        d = {
            'profile': self.profile.to_dict(),
            'initial_condition': self.ic.to_dict(),
            'lambda': self.lam,
            'grid': self.grid.to_dict(),
            'quadrature': self.quad.to_dict(),
            'moments': list(self.moments),
            'residual_points': self.residual_points,
        }
        if self.fd is not None:
            d['fd'] = self.fd.to_dict()
        if self.mc is not None:
            d['mc'] = self.mc.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict, base_dir: str = None) -> 'Scenario':
        if not isinstance(d, dict):
            raise ScenarioError(f"Scenario must be an object, got {type(d).__name__}.")
        keys = {'profile', 'initial_condition', 'lambda', 'grid', 'quadrature',
                'fd', 'mc', 'moments', 'residual_points'}
        unknown = set(d) - keys
        if unknown:
            raise ScenarioError(f"Unknown scenario fields {sorted(unknown)}.")
        missing = {'profile', 'initial_condition', 'lambda'} - set(d)
        if missing:
            raise ScenarioError(f"Scenario is missing {sorted(missing)}.")

        return cls(
            profile=CoefficientProfile.from_dict(d['profile']),
            ic=InitialCondition.from_dict(d['initial_condition'], base_dir),
            lam=d['lambda'],
            grid=GridSpec.from_dict(d.get('grid')),
            quad=QuadratureConfig.from_dict(d.get('quadrature')),
            fd=FdConfig.from_dict(d['fd']) if d.get('fd') is not None else None,
            mc=McSpec.from_dict(d['mc']) if d.get('mc') is not None else None,
            moments=d.get('moments', DEFAULT_MOMENTS),
            residual_points=d.get('residual_points', DEFAULT_RESIDUAL_POINTS),
        )


##############################################################################
# files
##############################################################################
def load(path: str) -> Scenario:
    """Read and validate a JSON scenario; grid CSV paths resolve next to it"""
    if not os.path.isfile(path):
        raise ScenarioError(f"Scenario file {path!r} does not exist.")
    try:
        with open(path, 'r', encoding='utf-8') as f:
            d = json.load(f)
    except json.JSONDecodeError as e:
        raise ScenarioError(f"Scenario file {path!r} is not valid JSON: {e}.")
    try:
        return Scenario.from_dict(d, base_dir=os.path.dirname(os.path.abspath(path)))
    except FpCascadeError:
        raise
    except (TypeError, ValueError) as e:
        raise ScenarioError(f"Invalid scenario {path!r}: {e}.")


def save(scenario: Scenario, path: str):
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(scenario.to_dict(), f, indent=2)
    logger.debug("Scenario written to %s", path)


# (helper) _fields
def _fields(d: dict, allowed: set, name: str) -> dict:
    d = d or {}
    if not isinstance(d, dict):
        raise ScenarioError(f"'{name}' must be an object, got {type(d).__name__}.")
    unknown = set(d) - allowed
    if unknown:
        raise ScenarioError(f"Unknown {name} fields {sorted(unknown)}.")
    return d
