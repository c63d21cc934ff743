import logging
from typing import Callable
from typing import Tuple

import numpy as np
import scipy.optimize

LOGGER = logging.getLogger(__name__)


def remap_range(
    value: float,
    source_min: float,
    source_max: float,
    target_min: float,
    target_max: float,
) -> float:
    """
    Convert the range of the source to the given target range.

    Example::

        >>> remap_range(0.5, 0, 1, -10, 10)
        0.0

    Args:
        value: value to remap
        source_min: minimum value of the source range
        source_max: maximum value of the source range
        target_min: minimum value of the target range
        target_max: maximum value of the target range

    Returns:
        value remapped
    """
    normalized = (value - source_min) / (source_max - source_min)
    return (target_max - target_min) * normalized + target_min


def log_window_grid(omega_min: float, omega_max: float, size: int) -> np.ndarray:
    """
    ``size`` frequencies evenly spaced in log10 over ``[omega_min, omega_max]``, bounds included.
    """
    if not 0 < omega_min < omega_max:
        raise ValueError(f"expected 0 < omega_min < omega_max, got [{omega_min}, {omega_max}]")
    if size < 2:
        raise ValueError(f"grid needs at least 2 points, got {size}")
    return np.logspace(np.log10(omega_min), np.log10(omega_max), size)


def argmax_on_window(
    function: Callable[[np.ndarray], np.ndarray],
    omega_min: float,
    omega_max: float,
    grid_size: int,
) -> Tuple[float, float]:
    """
    Maximize a scalar function of the frequency over a window.

    The function is first evaluated on a dense log-spaced grid, then the best grid
    point is refined by a golden-section search bracketed by its two neighbours.
    Refinement needs the best point to be strictly above both neighbours, so a
    maximum on a window bound or on a plateau stays on the grid. Ties on the grid
    resolve to the lowest frequency. The refined point is only kept if it strictly
    improves the grid maximum.

    Args:
        function: vectorized function receiving an array of frequencies in rad/s
        omega_min: lower bound of the window in rad/s
        omega_max: upper bound of the window in rad/s
        grid_size: number of log-spaced points of the initial grid

    Returns:
        tuple of (argmax frequency, maximum value)
    """
    grid = log_window_grid(omega_min, omega_max, grid_size)
    values = np.asarray(function(grid), dtype=float)
    # np.argmax returns the first occurrence so ties go to the lowest omega
    best = int(np.argmax(values))
    best_omega = float(grid[best])
    best_value = float(values[best])

    if not 0 < best < len(grid) - 1:
        return best_omega, best_value
    if not values[best - 1] < best_value > values[best + 1]:
        return best_omega, best_value

    low, middle, high = np.log10(grid[best - 1 : best + 2])

    def _negated(log_omega: float) -> float:
        return -float(np.asarray(function(np.array([10.0**log_omega])))[0])

    try:
        refined = scipy.optimize.minimize_scalar(
            _negated,
            bracket=(low, middle, high),
            method="golden",
            options={"xtol": 1e-8},
        )
    except ValueError as error:
        # scalar and vectorized evaluations may differ by rounding and break the bracket
        LOGGER.debug(f"kept grid maximum at omega={best_omega:.5g}: {error}")
        return best_omega, best_value
    refined_value = -float(refined.fun)
    if refined_value > best_value and low <= refined.x <= high:
        return float(10.0**refined.x), refined_value

    return best_omega, best_value
