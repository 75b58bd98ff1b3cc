import os
from typing import Callable, Union

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from .config import ENV_N_JOBS, UNIFORM_RTOL
from .exceptions import ScenarioError


# _linl
def _linl(
    x: Union[str, list],
    sep: str = ',',
    strip: str = ' ',
    cast: Callable = None,
) -> list:
    """To list if x is not list

    Examples:
        >>> _linl('1, 2, 4', cast=int)
        [1, 2, 4]
        >>> _linl([1, 2, 4])
        [1, 2, 4]

    Args:
        x (str, list): Input string.
        sep (str, optional): Separator. Defaults to ','.
        strip (str, optional): Character to strip. Defaults is ' '.
        cast (Callable, optional): Applied to each element. Defaults to None.

    Returns:
        list
    """

    if x is None:
        return None

    if isinstance(x, (list, tuple)):
        x = list(x)
    else:
        x = str(x).strip(sep).split(sep)
        if strip is not None:
            x = [_.strip(strip) for _ in x]
        x = [_ for _ in x if _ != '']

    if cast is not None:
        x = [cast(_) for _ in x]

    return x


# _n_jobs
def _n_jobs() -> int:
    """Number of joblib workers from the environment (default 1)"""
    raw = os.environ.get(ENV_N_JOBS, '1').strip()
    try:
        n = int(raw)
    except ValueError:
        raise ScenarioError(f"{ENV_N_JOBS}={raw!r} is not an integer.")
    if n == 0 or n < -1:
        raise ScenarioError(f"{ENV_N_JOBS} must be >= 1 or -1, got {n}.")
    return n


# _chunked_map
def _chunked_map(func: Callable, n: int, chunk: int) -> list:
    """Apply func(start, stop) over fixed-size chunks of range(n)

    (Note)
        Chunk boundaries depend on n and chunk only, so the concatenated
        result is identical for any number of workers.
    """
    bounds = [(i, min(i + chunk, n)) for i in range(0, n, chunk)]
    n_jobs = _n_jobs()
    if n_jobs == 1 or len(bounds) == 1:
        return [func(lo, hi) for lo, hi in bounds]
    return Parallel(n_jobs=n_jobs, prefer='threads')(
        delayed(func)(lo, hi) for lo, hi in bounds
    )


# _uniform_grid
def _uniform_grid(y_min: float, y_max: float, n_points: int) -> np.ndarray:
    if not np.isfinite(y_min) or not np.isfinite(y_max) or y_max <= y_min:
        raise ScenarioError(
            f"Grid bounds must satisfy y_min < y_max, got [{y_min}, {y_max}]."
        )
    if int(n_points) < 2:
        raise ScenarioError(f"Grid needs at least 2 points, got {n_points}.")
    return np.linspace(y_min, y_max, int(n_points))


# _check_uniform
def _check_uniform(y: np.ndarray) -> float:
    """Return spacing of a strictly increasing uniform grid"""
    y = np.asarray(y, dtype=float)
    steps = np.diff(y)
    if len(steps) == 0 or np.any(steps <= 0):
        raise ScenarioError("Grid must be strictly increasing.")
    h = (y[-1] - y[0]) / (len(y) - 1)
    if np.max(np.abs(steps - h)) > UNIFORM_RTOL * max(1.0, np.max(np.abs(y))):
        raise ScenarioError("Grid must be uniform.")
    return h


# _head_tail
def _head_tail(
    x: Union[np.ndarray, pd.DataFrame],
    head: int = 5,
    tail: int = 5,
):
    """Slice head and tail

    Args:
        x (np.ndarray, pd.DataFrame): Input data.
        head (int, optional): n head. Defaults to 5.
        tail (int, optional): n tail. Defaults to 5.

    Raises:
        TypeError: np.ndarray, pd.DataFrame are only supported.

    Returns:
        tuple: (head records, tail records), tail is None if x is short.
    """
    if head is None and tail is None:
        return x, None
    head = head or 0
    tail = tail or 0

    if head + tail >= len(x):
        return x, None

    if isinstance(x, np.ndarray):
        return x[:head], (x[-tail:] if tail > 0 else x[:0])

    if isinstance(x, pd.DataFrame):
        return x.iloc[:head], (x.iloc[-tail:] if tail > 0 else x.iloc[:0])

    raise TypeError(f"[ERROR] Type {type(x)} is not supported.")

# END
