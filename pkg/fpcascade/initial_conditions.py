import math
import os
from dataclasses import dataclass, replace
from functools import cached_property

import numpy as np
import pandas as pd
from scipy.integrate import trapezoid

from .config import MASS_TOL, MIN_GRID_POINTS
from .exceptions import ScenarioError, UnsupportedOperationError
from .misc import _check_uniform

KINDS = ('dirac', 'lognormal', 'grid')


##############################################################################
# InitialCondition
##############################################################################
@dataclass(frozen=True)
class InitialCondition:
    """Cauchy datum φ(v) on v > 0

    Three kinds are supported. 'dirac' is an atom at v0 and is never
    point-evaluated. 'lognormal' has ln v ~ Normal(mu, sigma2). 'grid' holds
    uniform samples of φ(e^y) on [y_min, y_max], linear in y, zero outside.

    `shift` is the dilation already applied: the datum evaluates φ(v e^shift).
    Build instances with the classmethods, which validate normalization.
    """

    kind: str
    v0: float = None
    mu: float = None
    sigma2: float = None
    y_min: float = None
    y_max: float = None
    samples: tuple = None
    probability: bool = True
    shift: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ScenarioError(
                f"Unknown initial condition kind {self.kind!r}, "
                f"expected one of {KINDS}."
            )

        if self.kind == 'dirac':
            if self.v0 is None or not np.isfinite(self.v0) or self.v0 <= 0:
                raise ScenarioError(f"Dirac atom needs v0 > 0, got {self.v0}.")
            if self.shift != 0.0:
                raise ScenarioError("Dirac atom cannot carry a dilation shift.")

        if self.kind == 'lognormal':
            if self.mu is None or not np.isfinite(self.mu):
                raise ScenarioError("Lognormal datum needs a finite 'mu'.")
            if self.sigma2 is None or not np.isfinite(self.sigma2) or \
                    self.sigma2 <= 0:
                raise ScenarioError(
                    f"Lognormal datum needs sigma2 > 0, got {self.sigma2}."
                )

        if self.kind == 'grid':
            samples = tuple(float(_) for _ in (self.samples or ()))
            object.__setattr__(self, 'samples', samples)
            if len(samples) < MIN_GRID_POINTS:
                raise ScenarioError(
                    f"Grid datum needs >= {MIN_GRID_POINTS} samples, "
                    f"got {len(samples)}."
                )
            if not np.all(np.isfinite(samples)) or min(samples) < 0:
                raise ScenarioError("Grid samples must be finite and >= 0.")
            if self.y_min is None or self.y_max is None or \
                    not self.y_min < self.y_max:
                raise ScenarioError(
                    f"Grid datum needs y_min < y_max, "
                    f"got [{self.y_min}, {self.y_max}]."
                )

        if self.probability and self.shift == 0.0 and self.kind != 'dirac':
            total = mass(self)
            if abs(total - 1.0) > MASS_TOL:
                raise ScenarioError(
                    f"Probability datum integrates to {total!r}, expected 1 "
                    f"within {MASS_TOL}.",
                    mass=total,
                )

    # constructors
    @classmethod
    def dirac(cls, v0: float) -> 'InitialCondition':
        return cls('dirac', v0=float(v0))

    @classmethod
    def lognormal(cls, mu: float, sigma2: float) -> 'InitialCondition':
        return cls('lognormal', mu=float(mu), sigma2=float(sigma2))

    @classmethod
    def grid(
        cls,
        y_min: float,
        y_max: float,
        samples,
        probability: bool = True,
    ) -> 'InitialCondition':
        return cls(
            'grid',
            y_min=float(y_min),
            y_max=float(y_max),
            samples=tuple(np.asarray(samples, dtype=float).tolist()),
            probability=probability,
        )

    @classmethod
    def from_csv(cls, path: str, probability: bool = True):
        """Load grid samples from a two-column CSV (y, phi)"""
        if not os.path.isfile(path):
            raise ScenarioError(f"Grid CSV {path!r} does not exist.")
        df = pd.read_csv(path, float_precision='round_trip')
        if not _is_text_header(df.columns):
            df = pd.read_csv(path, header=None, float_precision='round_trip')
        if df.shape[1] != 2:
            raise ScenarioError(
                f"Grid CSV must have two columns (y, phi), got {df.shape[1]}."
            )
        y = df.iloc[:, 0].to_numpy(dtype=float)
        _check_uniform(y)
        return cls.grid(y[0], y[-1], df.iloc[:, 1].to_numpy(dtype=float),
                        probability=probability)

    @classmethod
    def from_field(cls, field, probability: bool = False):
        """Resample a DensityField into a grid datum (restart a propagation)"""
        values = np.clip(np.asarray(field.values, dtype=float), 0.0, None)
        return cls.grid(field.y[0], field.y[-1], values,
                        probability=probability)

    # grid helpers
    @cached_property
    def grid_y(self) -> np.ndarray:
        if self.kind != 'grid':
            raise UnsupportedOperationError(
                f"'{self.kind}' datum has no sample grid."
            )
        return np.linspace(self.y_min, self.y_max, len(self.samples))

    @cached_property
    def grid_values(self) -> np.ndarray:
        return np.asarray(self.samples, dtype=float)

    # serialization
    def to_dict(self) -> dict:
        if self.kind == 'dirac':
            d = {'kind': 'dirac', 'v0': self.v0}
        elif self.kind == 'lognormal':
            d = {'kind': 'lognormal', 'mu': self.mu, 'sigma2': self.sigma2}
        else:
            d = {
                'kind': 'grid',
                'y_min': self.y_min,
                'y_max': self.y_max,
                'samples': list(self.samples),
                'probability': self.probability,
            }
        if self.shift != 0.0:
            d['shift'] = self.shift
        return d

    @classmethod
    def from_dict(cls, d: dict, base_dir: str = None) -> 'InitialCondition':
        if not isinstance(d, dict) or 'kind' not in d:
            raise ScenarioError(f"Initial condition needs a 'kind', got {d!r}.")
        kind = d['kind']
        allowed = {
            'dirac': {'v0'},
            'lognormal': {'mu', 'sigma2'},
            'grid': {'y_min', 'y_max', 'samples', 'csv', 'probability'},
        }.get(kind)
        if allowed is None:
            raise ScenarioError(f"Unknown initial condition kind {kind!r}.")
        unknown = set(d) - allowed - {'kind', 'shift'}
        if unknown:
            raise ScenarioError(
                f"Unknown fields {sorted(unknown)} for '{kind}' datum."
            )

        if kind == 'dirac':
            ic = cls.dirac(_required(d, 'v0'))
        elif kind == 'lognormal':
            ic = cls.lognormal(_required(d, 'mu'), _required(d, 'sigma2'))
        elif 'csv' in d:
            path = d['csv']
            if base_dir is not None and not os.path.isabs(path):
                path = os.path.join(base_dir, path)
            ic = cls.from_csv(path, probability=d.get('probability', True))
        else:
            ic = cls.grid(
                _required(d, 'y_min'), _required(d, 'y_max'),
                _required(d, 'samples'),
                probability=d.get('probability', True),
            )

        if d.get('shift', 0.0) != 0.0:
            ic = replace(ic, shift=float(d['shift']))
        return ic


##############################################################################
# operations
##############################################################################
def eval_log(ic: InitialCondition, y):
    """Evaluate φ(e^y)

    Examples:
        >>> round(eval_log(InitialCondition.lognormal(0.0, 1.0), 0.0), 10)
        0.3989422804

    Args:
        ic (InitialCondition): Lognormal or grid datum.
        y (float, np.ndarray): Log-velocity.

    Raises:
        UnsupportedOperationError: Dirac data are propagated analytically.

    Returns:
        float or np.ndarray
    """
    if ic.kind == 'dirac':
        raise UnsupportedOperationError(
            "Dirac datum cannot be point-evaluated; use solve_delta."
        )

    y = np.asarray(y, dtype=float) + ic.shift

    if ic.kind == 'lognormal':
        z = y - ic.mu
        out = np.exp(-0.5 * z * z / ic.sigma2 - y) / \
            math.sqrt(2.0 * math.pi * ic.sigma2)
    else:
        out = np.interp(y, ic.grid_y, ic.grid_values, left=0.0, right=0.0)

    return out if np.ndim(out) else float(out)


def mass(ic: InitialCondition) -> float:
    """∫ φ(v e^shift) dv"""
    if ic.kind in ('dirac', 'lognormal'):
        return math.exp(-ic.shift)
    y = ic.grid_y
    return float(trapezoid(ic.grid_values * np.exp(y), y)) * math.exp(-ic.shift)


def log_law(ic: InitialCondition) -> tuple:
    """Mean and variance of ln v under the (normalized) datum"""
    if ic.kind == 'dirac':
        return math.log(ic.v0), 0.0
    if ic.kind == 'lognormal':
        return ic.mu - ic.shift, ic.sigma2

    y = ic.grid_y
    w = ic.grid_values * np.exp(y)
    total = trapezoid(w, y)
    if total <= 0:
        raise ScenarioError("Grid datum has zero mass.")
    mean = trapezoid(w * y, y) / total
    var = trapezoid(w * (y - mean) ** 2, y) / total
    return float(mean) - ic.shift, float(max(var, 0.0))


# (helper) _required
def _required(d: dict, key: str):
    if key not in d or d[key] is None:
        raise ScenarioError(f"Initial condition of kind '{d['kind']}' "
                            f"needs field {key!r}.")
    return d[key]


# (helper) _is_text_header
def _is_text_header(columns) -> bool:
    try:
        [float(_) for _ in columns]
    except (TypeError, ValueError):
        return True
    return False
