"""Itô samplers for the cascade diffusion

dv = -a(λ) v dλ + √(2c(λ)) v dW, simulated as
d(ln v) = -(a(λ) + c(λ)) dλ + √(2c(λ)) dW so that v stays positive.

Random numbers come from counter-based Philox streams, one per block of
MC_BLOCK_SIZE samples rather than one per sample, keyed by (seed, block
index). Sample i belongs to block i // MC_BLOCK_SIZE; blocks are fixed by
the sample count alone, so an ensemble is bitwise identical whatever the
number of worker threads.
"""
import logging
import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np
import pandas as pd
from scipy.integrate import cumulative_trapezoid
from scipy.stats import kstest, kstwobign

from .coefficients import CoefficientProfile, integrate
from .config import EM_MIN_STEPS, KS_ALPHA, MC_BLOCK_SIZE, N_BINS, SCHEMES
from .exceptions import ContractError, KsRejectedError, ScenarioError
from .initial_conditions import InitialCondition
from .misc import _chunked_map

logger = logging.getLogger(__name__)


##############################################################################
# PathEnsemble
##############################################################################
@dataclass(eq=False)
class PathEnsemble:
    """Terminal velocities of independent paths

    Args:
        lam (float): Terminal scale.
        samples (np.ndarray): Terminal v, all > 0.
        seed (int): Base seed of the block streams.
        scheme (str): 'exact_gaussian' or 'euler_maruyama'.
        n_steps (int, optional): Euler-Maruyama steps. Defaults to None.
    """

    lam: float
    samples: np.ndarray
    seed: int
    scheme: str
    n_steps: int = None

    @property
    def n(self) -> int:
        return len(self.samples)

    @property
    def log_samples(self) -> np.ndarray:
        return np.log(self.samples)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({'v': self.samples})


@dataclass(frozen=True)
class KsResult:
    statistic: float
    p_value: float
    critical_value: float
    alpha: float
    n: int

    @property
    def passed(self) -> bool:
        return self.p_value >= self.alpha

    def require(self):
        """Raise unless the test passed

        Raises:
            KsRejectedError: p-value below alpha.
        """
        if not self.passed:
            raise KsRejectedError(
                f"KS statistic {self.statistic:.4g} exceeds the critical value "
                f"{self.critical_value:.4g} at alpha={self.alpha:g} "
                f"(p={self.p_value:.3g}).",
                statistic=self.statistic,
                p_value=self.p_value,
            )
        return self

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([{
            'n': self.n,
            'statistic': self.statistic,
            'p_value': self.p_value,
            'critical_value': self.critical_value,
            'alpha': self.alpha,
            'passed': self.passed,
        }])


##############################################################################
# random streams
##############################################################################
def block_generator(seed: int, block: int) -> np.random.Generator:
    """Philox stream for one block of samples"""
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(block),))
    return np.random.Generator(np.random.Philox(ss))


def _initial_velocities(ic: InitialCondition, rng: np.random.Generator,
                        m: int) -> np.ndarray:
    if ic.kind == 'dirac':
        return np.full(m, ic.v0)
    if ic.kind == 'lognormal':
        return np.exp(ic.mu - ic.shift +
                      math.sqrt(ic.sigma2) * rng.standard_normal(m))

    # inverse transform on the piecewise-linear CDF of ln v
    y = ic.grid_y
    cdf = cumulative_trapezoid(ic.grid_values * np.exp(y), y, initial=0.0)
    if not cdf[-1] > 0:
        raise ScenarioError("Grid datum has zero mass.")
    return np.exp(np.interp(rng.random(m), cdf / cdf[-1], y) - ic.shift)


def _as_ic(v0: Union[float, InitialCondition]) -> InitialCondition:
    if isinstance(v0, InitialCondition):
        return v0
    if not np.isfinite(v0) or v0 <= 0:
        raise ScenarioError(f"v0 must be > 0, got {v0!r}.")
    return InitialCondition.dirac(v0)


def _check_n(n) -> int:
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise ScenarioError(f"Sample count must be an integer >= 1, got {n!r}.")
    return int(n)


##############################################################################
# samplers
##############################################################################
def sample_exact(
    profile: CoefficientProfile,
    v0: Union[float, InitialCondition],
    lam: float,
    n: int,
    seed: int = 0,
) -> PathEnsemble:
    """One Gaussian draw of ln v per sample

    Examples:
        >>> profile = CoefficientProfile.constant(1.0, 0.5, 2.0)
        >>> sample_exact(profile, 1.0, 0.0, 3).samples
        array([1., 1., 1.])

    Args:
        profile (CoefficientProfile): Rates.
        v0 (float, InitialCondition): Initial velocity, or a datum from
            which initial velocities are drawn.
        lam (float): Terminal scale.
        n (int): Number of samples.
        seed (int, optional): Base seed. Defaults to 0.

    Returns:
        PathEnsemble
    """
    ic = _as_ic(v0)
    n = _check_n(n)
    coeffs = integrate(profile, lam)
    shift = coeffs.log_shift
    sd = math.sqrt(2.0 * coeffs.gamma)

    def _block(lo, hi):
        rng = block_generator(seed, lo // MC_BLOCK_SIZE)
        start = _initial_velocities(ic, rng, hi - lo)
        return start * np.exp(shift + sd * rng.standard_normal(hi - lo))

    samples = np.concatenate(_chunked_map(_block, n, MC_BLOCK_SIZE))
    logger.debug("sample_exact: n=%d lam=%g shift=%.6g sd=%.6g",
                 n, coeffs.lam, shift, sd)
    return PathEnsemble(coeffs.lam, samples, int(seed), 'exact_gaussian')


def sample_em(
    profile: CoefficientProfile,
    v0: Union[float, InitialCondition],
    lam: float,
    n: int,
    n_steps: int,
    seed: int = 0,
) -> PathEnsemble:
    """Euler-Maruyama on ln v with rates frozen at the left end of each step

    Constant rates make every step exact, so the law then matches
    sample_exact for any n_steps.

    Raises:
        ScenarioError: n_steps < 16.
    """
    ic = _as_ic(v0)
    n = _check_n(n)
    if n_steps is None or isinstance(n_steps, bool) or \
            int(n_steps) != n_steps or n_steps < EM_MIN_STEPS:
        raise ScenarioError(
            f"n_steps must be an integer >= {EM_MIN_STEPS}, got {n_steps!r}."
        )
    n_steps = int(n_steps)
    lam = profile.check_scale(lam)
    dlam = lam / n_steps
    lefts = np.arange(n_steps) * dlam
    a = np.broadcast_to(profile.a(lefts), lefts.shape)
    c = np.broadcast_to(profile.c(lefts), lefts.shape)
    drift = -(a + c) * dlam
    vol = np.sqrt(2.0 * c * dlam)

    def _block(lo, hi):
        rng = block_generator(seed, lo // MC_BLOCK_SIZE)
        start = _initial_velocities(ic, rng, hi - lo)
        x = np.zeros(hi - lo)
        for k in range(n_steps):
            x += drift[k] + vol[k] * rng.standard_normal(hi - lo)
        return start * np.exp(x)

    samples = np.concatenate(_chunked_map(_block, n, MC_BLOCK_SIZE))
    logger.debug("sample_em: n=%d n_steps=%d lam=%g", n, n_steps, lam)
    return PathEnsemble(lam, samples, int(seed), 'euler_maruyama', n_steps)


def sample(
    profile: CoefficientProfile,
    v0: Union[float, InitialCondition],
    lam: float,
    n: int,
    scheme: str = 'exact_gaussian',
    n_steps: int = None,
    seed: int = 0,
) -> PathEnsemble:
    if scheme not in SCHEMES:
        raise ScenarioError(f"Unknown scheme {scheme!r}, expected one of {SCHEMES}.")
    if scheme == 'exact_gaussian':
        return sample_exact(profile, v0, lam, n, seed)
    return sample_em(profile, v0, lam, n, n_steps, seed)


##############################################################################
# statistics
##############################################################################
def ks_distance(ensemble: PathEnsemble, cdf: Callable) -> float:
    """sup |F_n - F| between the empirical and the exact CDF of v

    Examples:
        >>> ens = PathEnsemble(1.0, np.array([2.0]), 0, 'exact_gaussian')
        >>> ks_distance(ens, lambda v: np.full(np.shape(v), 0.5))
        0.5

    Raises:
        ContractError: Empty ensemble, or cdf not monotone in [0, 1].
    """
    x = np.sort(np.asarray(ensemble.samples, dtype=float))
    n = len(x)
    if n == 0:
        raise ContractError("Ensemble is empty.")
    f = np.asarray(cdf(x), dtype=float)
    if f.shape != x.shape or not np.all(np.isfinite(f)) or \
            np.any(f < 0.0) or np.any(f > 1.0):
        raise ContractError("CDF values must be finite and within [0, 1].")
    if np.any(np.diff(f) < 0.0):
        raise ContractError("CDF is not monotone on the sample range.")
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - f), np.max(f - (i - 1) / n)))


def ks_test(
    ensemble: PathEnsemble,
    cdf: Callable,
    alpha: float = KS_ALPHA,
) -> KsResult:
    """One-sample KS test with the asymptotic Kolmogorov distribution"""
    if not 0.0 < alpha < 1.0:
        raise ScenarioError(f"alpha must be in (0, 1), got {alpha!r}.")
    statistic = ks_distance(ensemble, cdf)
    p_value = kstest(ensemble.samples, cdf, method='asymp').pvalue
    critical = kstwobign.ppf(1.0 - alpha) / math.sqrt(ensemble.n)
    return KsResult(statistic, float(p_value), float(critical), alpha,
                    ensemble.n)


def ensemble_moment(ensemble: PathEnsemble, n: float) -> tuple:
    """Sample mean of vⁿ and its standard error"""
    values = ensemble.samples ** n
    if ensemble.n < 2:
        return float(values.mean()), float('nan')
    return (float(values.mean()),
            float(values.std(ddof=1) / math.sqrt(ensemble.n)))


def histogram(ensemble: PathEnsemble, n_bins: int = N_BINS) -> pd.DataFrame:
    """Density of v on log-spaced bins, centres at the geometric midpoints"""
    lo, hi = float(ensemble.samples.min()), float(ensemble.samples.max())
    if lo == hi:
        lo, hi = lo * (1.0 - 1e-9), hi * (1.0 + 1e-9)
    edges = np.geomspace(lo, hi, int(n_bins) + 1)
    density, edges = np.histogram(ensemble.samples, bins=edges, density=True)
    return pd.DataFrame({
        'bin_center': np.sqrt(edges[:-1] * edges[1:]),
        'density': density,
    })
