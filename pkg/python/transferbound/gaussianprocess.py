"""
Gaussian-process regression over scalar frequency inputs.

The kernel is a squared exponential evaluated on ``log10(omega)`` so that a length
scale is expressed in decades. Every public function takes and returns linear
frequencies in rad/s.
"""
import dataclasses
import functools
import itertools
import logging
import math
from typing import List
from typing import Optional
from typing import Sequence
from typing import Tuple

import numpy as np
import scipy.linalg
import scipy.optimize

LOGGER = logging.getLogger(__name__)

JITTER_START = 1e-10
JITTER_MAX = 1e-4

DEFAULT_SIGNAL_VARIANCE_BOUNDS = (1e-6, 1e2)
DEFAULT_LENGTH_SCALE_BOUNDS = (0.05, 10.0)


class GramMatrixError(RuntimeError):
    """
    Raised when ``K + noise I`` cannot be factorized even after the maximum jitter.
    """


def _jitters():
    yield 0.0
    jitter = JITTER_START
    while jitter <= JITTER_MAX * (1 + 1e-9):
        yield jitter
        jitter *= 10


def squared_exponential(
    x1: np.ndarray,
    x2: np.ndarray,
    signal_variance: float,
    length_scale: float,
) -> np.ndarray:
    """
    Squared exponential covariance between two vectors of (log-frequency) inputs.
    """
    distance = np.subtract.outer(np.asarray(x1, dtype=float), np.asarray(x2, dtype=float))
    return signal_variance * np.exp(-0.5 * np.square(distance / length_scale))


def _factorize(gram: np.ndarray) -> Tuple[Tuple[np.ndarray, bool], float]:
    identity = np.eye(len(gram))
    for jitter in _jitters():
        try:
            factor = scipy.linalg.cho_factor(gram + jitter * identity, lower=True)
        except np.linalg.LinAlgError:
            LOGGER.debug(f"cholesky failed with jitter={jitter:g}")
            continue
        return factor, jitter
    raise GramMatrixError(
        f"gram matrix of size {len(gram)} is not positive definite even with jitter {JITTER_MAX:g}"
    )


@dataclasses.dataclass(frozen=True)
class GpModel:
    """
    A GP prior with constant mean and squared-exponential kernel, conditioned on a dataset.

    Args:
        omegas: frequencies of the dataset in rad/s
        values: observed objective values, same length as omegas
        prior_mean_constant: constant prior mean
        signal_variance: kernel amplitude, > 0
        length_scale: kernel length scale in decades of omega, > 0
        noise_variance: observation noise variance, >= 0
        degenerate: True when hyperparameter fitting found no variation in the data
    """

    omegas: Tuple[float, ...]
    values: Tuple[float, ...]
    prior_mean_constant: float = 0.0
    signal_variance: float = 1.0
    length_scale: float = 1.0
    noise_variance: float = 0.0
    degenerate: bool = False

    def __post_init__(self):
        object.__setattr__(self, "omegas", tuple(float(o) for o in self.omegas))
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if len(self.omegas) != len(self.values):
            raise ValueError(f"got {len(self.omegas)} omegas for {len(self.values)} values")
        if not all(math.isfinite(o) and o > 0 for o in self.omegas):
            raise ValueError("dataset frequencies must be finite and > 0")
        if not all(math.isfinite(v) for v in self.values):
            raise ValueError("dataset values must be finite")
        if self.signal_variance <= 0 or self.length_scale <= 0:
            raise ValueError(
                f"kernel hyperparameters must be > 0, got signal_variance={self.signal_variance}"
                f" length_scale={self.length_scale}"
            )
        if self.noise_variance < 0:
            raise ValueError(f"noise variance must be >= 0, got {self.noise_variance}")
        if self.noise_variance == 0 and len(set(self.omegas)) != len(self.omegas):
            raise ValueError("duplicate frequencies require a strictly positive noise variance")

    @classmethod
    def from_dataset(
        cls,
        omegas: Sequence[float],
        values: Sequence[float],
        signal_variance: float = 1.0,
        length_scale: float = 1.0,
        noise_variance: float = 0.0,
        prior_mean: Optional[float] = None,
    ) -> "GpModel":
        """
        Build a model whose prior mean is the dataset mean unless ``prior_mean`` is given.
        """
        if prior_mean is None:
            prior_mean = float(np.mean(values)) if len(values) else 0.0
        return cls(
            omegas=tuple(omegas),
            values=tuple(values),
            prior_mean_constant=prior_mean,
            signal_variance=signal_variance,
            length_scale=length_scale,
            noise_variance=noise_variance,
        )

    @property
    def dataset(self) -> List[Tuple[float, float]]:
        return list(zip(self.omegas, self.values))

    @property
    def size(self) -> int:
        return len(self.omegas)

    @property
    def inputs(self) -> np.ndarray:
        return np.log10(np.array(self.omegas))

    def kernel(self, x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
        return squared_exponential(x1, x2, self.signal_variance, self.length_scale)

    @functools.cached_property
    def _solution(self) -> Tuple[Tuple[np.ndarray, bool], np.ndarray]:
        if not self.size:
            raise ValueError("the GP dataset is empty")
        gram = self.kernel(self.inputs, self.inputs) + self.noise_variance * np.eye(self.size)
        factor, jitter = _factorize(gram)
        if jitter:
            LOGGER.debug(f"factorized gram matrix with jitter={jitter:g}")
        residuals = np.array(self.values) - self.prior_mean_constant
        alpha = scipy.linalg.cho_solve(factor, residuals)
        return factor, alpha

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "GpModel":
        return cls(**data)


def predict(m: GpModel, omegas: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Vectorized posterior mean and variance at the given frequencies.

    Raises:
        ValueError: if the dataset is empty or a frequency is invalid
        GramMatrixError: if the gram matrix can't be factorized
    """
    omegas = np.atleast_1d(np.asarray(omegas, dtype=float))
    if np.any(~np.isfinite(omegas)) or np.any(omegas <= 0):
        raise ValueError("query frequencies must be finite and > 0")
    factor, alpha = m._solution
    cross = m.kernel(m.inputs, np.log10(omegas))
    means = m.prior_mean_constant + cross.T @ alpha
    reduction = scipy.linalg.solve_triangular(factor[0], cross, lower=True)
    variances = m.signal_variance - np.sum(np.square(reduction), axis=0)
    return means, np.maximum(variances, 0.0)


def posterior(m: GpModel, omega_star: float) -> Tuple[float, float]:
    """
    Posterior mean and variance of the objective at a single frequency.

    Returns:
        tuple of (mean, variance), the variance being clamped to >= 0
    """
    means, variances = predict(m, np.array([omega_star]))
    return float(means[0]), float(variances[0])


def log_marginal_likelihood(m: GpModel) -> float:
    factor, alpha = m._solution
    residuals = np.array(m.values) - m.prior_mean_constant
    log_det = 2.0 * np.sum(np.log(np.diag(factor[0])))
    return float(-0.5 * residuals @ alpha - 0.5 * log_det - 0.5 * m.size * math.log(2 * math.pi))


def _is_degenerate(values: Sequence[float]) -> bool:
    values = np.asarray(values)
    return float(np.ptp(values)) <= 1e-10 * max(1.0, float(np.max(np.abs(values))))


def fit_hyperparameters(
    m: GpModel,
    signal_variance_bounds: Tuple[float, float] = DEFAULT_SIGNAL_VARIANCE_BOUNDS,
    length_scale_bounds: Tuple[float, float] = DEFAULT_LENGTH_SCALE_BOUNDS,
    grid_starts: int = 6,
    refined_starts: int = 3,
) -> GpModel:
    """
    Maximize the log marginal likelihood over the signal variance and length scale.

    A bounded log-spaced grid of ``grid_starts x grid_starts`` candidates is scored
    first, then the ``refined_starts`` best ones are refined with L-BFGS-B. The noise
    variance is never changed.

    When all the values are identical there is nothing to learn: the input model is
    returned with its length scale at the upper bound and flagged ``degenerate``.

    Raises:
        ValueError: if the dataset has less than 3 points
    """
    if m.size < 3:
        raise ValueError(f"need at least 3 points to fit hyperparameters, got {m.size}")

    if _is_degenerate(m.values):
        LOGGER.warning(f"degenerate GP dataset of {m.size} identical values, skipping fit")
        return dataclasses.replace(m, length_scale=length_scale_bounds[1], degenerate=True)

    log_bounds = [
        (math.log(signal_variance_bounds[0]), math.log(signal_variance_bounds[1])),
        (math.log(length_scale_bounds[0]), math.log(length_scale_bounds[1])),
    ]

    def _negative_likelihood(log_params: np.ndarray) -> float:
        candidate = dataclasses.replace(
            m,
            signal_variance=float(np.exp(log_params[0])),
            length_scale=float(np.exp(log_params[1])),
        )
        try:
            return -log_marginal_likelihood(candidate)
        except GramMatrixError:
            return 1e300

    grids = [np.linspace(low, high, grid_starts) for low, high in log_bounds]
    candidates = [np.array(point) for point in itertools.product(*grids)]
    scores = [_negative_likelihood(point) for point in candidates]
    order = np.argsort(scores, kind="stable")[:refined_starts]

    best_params = candidates[int(order[0])]
    best_score = scores[int(order[0])]
    for index in order:
        result = scipy.optimize.minimize(
            _negative_likelihood,
            candidates[int(index)],
            method="L-BFGS-B",
            bounds=log_bounds,
        )
        if np.isfinite(result.fun) and result.fun < best_score:
            best_params, best_score = result.x, float(result.fun)

    fitted = dataclasses.replace(
        m,
        signal_variance=float(np.exp(best_params[0])),
        length_scale=float(np.exp(best_params[1])),
        degenerate=False,
    )
    LOGGER.debug(
        f"fitted GP on {m.size} points: signal_variance={fitted.signal_variance:.4g}"
        f" length_scale={fitted.length_scale:.4g} (-loglik={best_score:.4g})"
    )
    return fitted
