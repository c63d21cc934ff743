"""
Proper SISO LTI systems as rational transfer functions, and the sampled signals
they are simulated on.

Polynomial coefficients are always stored highest degree first, the numpy
convention used by :func:`numpy.polyval` and :mod:`scipy.signal`.
"""
import cmath
import dataclasses
import logging
import math
from typing import Callable
from typing import Sequence
from typing import Tuple

import numpy as np
import scipy.signal

LOGGER = logging.getLogger(__name__)

CANCELLATION_TOLERANCE = 1e-8
"""
Relative distance under which a zero and a pole are considered identical and cancel.
"""


class ImproperSystemError(ValueError):
    """
    Raised when an operation needs a proper system (or composition) and doesn't get one.
    """


class UnstableSystemError(ValueError):
    """
    Raised when simulating or probing a system which is not BIBO stable.
    """


class RootFindingError(RuntimeError):
    pass


def _trim_leading_zeros(coeffs: np.ndarray) -> np.ndarray:
    nonzero = np.flatnonzero(coeffs)
    if not len(nonzero):
        return np.zeros(1)
    return coeffs[nonzero[0] :]


@dataclasses.dataclass(frozen=True)
class RationalTransferFunction:
    """
    A SISO continuous-time system ``G(s) = n(s) / d(s)``.

    Coefficients are canonicalized on construction: leading zeros are dropped and
    the denominator is made monic. A zero numerator is stored as ``0 / 1``.

    Improper instances (more zeros than poles) can be built, for example by
    :func:`invert`, but they are refused by :func:`simulate`.

    Args:
        numerator: coefficients of n(s), highest degree first
        denominator: coefficients of d(s), highest degree first
    """

    numerator: Tuple[float, ...]
    denominator: Tuple[float, ...]

    def __post_init__(self):
        num = np.asarray(self.numerator, dtype=float).ravel()
        den = np.asarray(self.denominator, dtype=float).ravel()
        if not len(num) or not len(den):
            raise ValueError("numerator and denominator must have at least one coefficient")
        if not (np.all(np.isfinite(num)) and np.all(np.isfinite(den))):
            raise ValueError(f"non-finite coefficient in {num} / {den}")

        den = _trim_leading_zeros(den)
        if den[0] == 0.0:
            raise ValueError("degenerate denominator: all coefficients are zero")

        num = _trim_leading_zeros(num)
        if num[0] == 0.0:
            num = np.zeros(1)
            den = np.ones(1)
        else:
            lead = den[0]
            num = num / lead
            den = den / lead

        object.__setattr__(self, "numerator", tuple(float(c) for c in num))
        object.__setattr__(self, "denominator", tuple(float(c) for c in den))

    def __str__(self):
        return f"({_format_poly(self.numerator)}) / ({_format_poly(self.denominator)})"

    @classmethod
    def static_gain(cls, gain: float) -> "RationalTransferFunction":
        return cls((gain,), (1.0,))

    @classmethod
    def first_order(cls, tau: float, gain: float = 1.0) -> "RationalTransferFunction":
        """
        The lag ``gain / (tau s + 1)``.
        """
        if tau <= 0:
            raise ValueError(f"time constant must be strictly positive, got {tau}")
        return cls((gain,), (tau, 1.0))

    @property
    def num(self) -> np.ndarray:
        return np.array(self.numerator)

    @property
    def den(self) -> np.ndarray:
        return np.array(self.denominator)

    @property
    def is_zero(self) -> bool:
        return self.numerator == (0.0,)

    @property
    def numerator_degree(self) -> int:
        return len(self.numerator) - 1

    @property
    def denominator_degree(self) -> int:
        return len(self.denominator) - 1

    @property
    def is_proper(self) -> bool:
        return self.numerator_degree <= self.denominator_degree

    def to_dict(self) -> dict:
        return {"numerator": list(self.numerator), "denominator": list(self.denominator)}


def _format_poly(coeffs: Sequence[float]) -> str:
    degree = len(coeffs) - 1
    terms = []
    for index, coeff in enumerate(coeffs):
        power = degree - index
        if coeff == 0.0 and degree:
            continue
        if power == 0:
            terms.append(f"{coeff:g}")
        elif power == 1:
            terms.append(f"{coeff:g}s")
        else:
            terms.append(f"{coeff:g}s^{power}")
    return " + ".join(terms) or "0"


def _roots(coeffs: Sequence[float]) -> np.ndarray:
    # numpy.roots computes the eigenvalues of the companion matrix
    roots = np.roots(np.asarray(coeffs, dtype=float))
    if not np.all(np.isfinite(roots)):
        raise RootFindingError(f"root finding failed for polynomial {list(coeffs)}")
    return roots


def poles(g: RationalTransferFunction) -> np.ndarray:
    return _roots(g.denominator)


def zeros(g: RationalTransferFunction) -> np.ndarray:
    if g.is_zero:
        return np.zeros(0, dtype=complex)
    return _roots(g.numerator)


def relative_degree(g: RationalTransferFunction) -> int:
    """
    Denominator degree minus numerator degree.

    Negative values are only possible for improper systems, such as a bare inverse.
    """
    return g.denominator_degree - g.numerator_degree


def is_bibo_stable(g: RationalTransferFunction) -> bool:
    """
    True if every pole lies strictly in the open left half-plane.

    Poles on the imaginary axis are marginal and thus not BIBO stable.
    """
    return bool(np.all(poles(g).real < 0.0))


def is_minimum_phase(g: RationalTransferFunction) -> bool:
    """
    True if every zero lies strictly in the open left half-plane (so the inverse is stable).
    """
    if g.is_zero:
        return False
    return bool(np.all(zeros(g).real < 0.0))


def dc_gain(g: RationalTransferFunction) -> float:
    return freq_response(g, 0.0).real


def invert(g: RationalTransferFunction) -> RationalTransferFunction:
    """
    Return ``d(s) / n(s)``.

    The result may be improper; it is flagged in the log but allowed since a bare
    inverse is only ever simulated in series with a plant.

    Raises:
        ValueError: if the numerator is zero
    """
    if g.is_zero:
        raise ValueError(f"cannot invert {g}: numerator is zero")
    inverse = RationalTransferFunction(g.denominator, g.numerator)
    if not inverse.is_proper:
        LOGGER.debug(f"inverse {inverse} is improper (relative degree {relative_degree(inverse)})")
    return inverse


def _cancel_common_roots(
    num_roots: np.ndarray,
    den_roots: np.ndarray,
    tolerance: float,
) -> Tuple[np.ndarray, np.ndarray]:
    remaining_den = list(den_roots)
    remaining_num = []
    for zero in num_roots:
        for index, pole in enumerate(remaining_den):
            if abs(zero - pole) <= tolerance * max(abs(pole), abs(zero), 1.0):
                del remaining_den[index]
                break
        else:
            remaining_num.append(zero)
    return np.array(remaining_num, dtype=complex), np.array(remaining_den, dtype=complex)


def series(
    a: RationalTransferFunction,
    b: RationalTransferFunction,
    tolerance: float = CANCELLATION_TOLERANCE,
) -> RationalTransferFunction:
    """
    Cascade two systems: ``a(s) * b(s)``.

    Zero/pole pairs matching within ``tolerance`` relative distance are cancelled,
    so that ``series(g, invert(g))`` collapses to the identity.
    """
    if a.is_zero or b.is_zero:
        return RationalTransferFunction((0.0,), (1.0,))
    num = np.polymul(a.num, b.num)
    den = np.polymul(a.den, b.den)

    num_roots = np.concatenate([zeros(a), zeros(b)])
    den_roots = np.concatenate([poles(a), poles(b)])
    kept_num, kept_den = _cancel_common_roots(num_roots, den_roots, tolerance)
    if len(kept_num) == len(num_roots):
        return RationalTransferFunction(num, den)

    LOGGER.debug(f"cancelled {len(num_roots) - len(kept_num)} zero/pole pairs")
    # rebuild from the remaining roots; the gain is the ratio of leading coefficients
    gain = num[0] / den[0]
    new_num = gain * np.real(np.poly(kept_num)) if len(kept_num) else np.array([gain])
    new_den = np.real(np.poly(kept_den)) if len(kept_den) else np.ones(1)
    return RationalTransferFunction(new_num, new_den)


def error_tf(
    source: RationalTransferFunction,
    target: RationalTransferFunction,
) -> RationalTransferFunction:
    """
    Error dynamics ``E(s) = G_s^-1(s) G_t(s) - 1`` of the target tracking through the
    source inverse, mapping the desired output to the tracking error.

    Raises:
        ImproperSystemError: if the target relative degree is lower than the source one
        ValueError: if the source numerator is zero
    """
    r_source = relative_degree(source)
    r_target = relative_degree(target)
    if r_target < r_source:
        raise ImproperSystemError(
            f"improper composition: target relative degree {r_target} is lower "
            f"than source relative degree {r_source} ({target} through inverse of {source})"
        )
    cascade = series(invert(source), target)
    numerator = np.polysub(cascade.num, cascade.den)
    return RationalTransferFunction(numerator, cascade.den)


def freq_response(g: RationalTransferFunction, omega: float) -> complex:
    """
    Evaluate ``G(j omega)``.

    Raises:
        ValueError: on a negative/non-finite omega or a pole at ``j omega``
    """
    if not np.isfinite(omega) or omega < 0:
        raise ValueError(f"omega must be finite and >= 0, got {omega}")
    s = 1j * omega
    denominator = np.polyval(g.den, s)
    if abs(denominator) < 1e-12:
        raise ValueError(f"{g} has a pole on the imaginary axis at omega={omega}")
    return complex(np.polyval(g.num, s) / denominator)


def frequency_sweep(g: RationalTransferFunction, omegas: np.ndarray) -> np.ndarray:
    """
    Vectorized :func:`freq_response` over an array of frequencies.
    """
    omegas = np.asarray(omegas, dtype=float)
    if np.any(~np.isfinite(omegas)) or np.any(omegas < 0):
        raise ValueError("all omegas must be finite and >= 0")
    s = 1j * omegas
    denominator = np.polyval(g.den, s)
    if np.any(np.abs(denominator) < 1e-12):
        raise ValueError(f"{g} has a pole on the imaginary axis inside the sweep")
    return np.polyval(g.num, s) / denominator


def realizable_inverse(
    g: RationalTransferFunction,
    filter_time_constant: float = 1e-3,
) -> RationalTransferFunction:
    """
    The inverse of ``g`` cascaded with ``1 / (tau_f s + 1)^r`` so it becomes proper.

    ``r`` is the relative degree of ``g``; with a small ``tau_f`` the result matches
    the exact inverse over any practical band and can be simulated on its own.
    """
    order = relative_degree(g)
    inverse = invert(g)
    if order <= 0:
        return inverse
    low_pass = np.array([1.0])
    for _ in range(order):
        low_pass = np.polymul(low_pass, [filter_time_constant, 1.0])
    return series(inverse, RationalTransferFunction((1.0,), low_pass))


@dataclasses.dataclass(frozen=True)
class FrequencyPoint:
    """
    A complex frequency response value ``G(j omega) = M exp(j theta)``.

    ``variance`` is the variance of both the real and imaginary parts of a measured
    response, 0 for an exact one.
    """

    omega: float
    response: complex
    variance: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.omega) and self.omega > 0):
            raise ValueError(f"omega must be finite and > 0, got {self.omega}")
        if not cmath.isfinite(self.response):
            raise ValueError(f"response must be finite, got {self.response}")
        if not (math.isfinite(self.variance) and self.variance >= 0):
            raise ValueError(f"variance must be finite and >= 0, got {self.variance}")
        object.__setattr__(self, "response", complex(self.response))

    @property
    def magnitude(self) -> float:
        return abs(self.response)

    @property
    def phase(self) -> float:
        return cmath.phase(self.response)


@dataclasses.dataclass(frozen=True, eq=False)
class SampledSignal:
    """
    A finite, uniformly sampled real time series starting at ``t = 0``.

    Args:
        samples: finite real values
        sample_period: time between two samples, in seconds
    """

    samples: np.ndarray
    sample_period: float

    def __post_init__(self):
        samples = np.array(self.samples, dtype=float).ravel()
        if not np.all(np.isfinite(samples)):
            raise ValueError("all samples must be finite")
        if not (self.sample_period > 0 and np.isfinite(self.sample_period)):
            raise ValueError(f"sample period must be > 0, got {self.sample_period}")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_period", float(self.sample_period))

    def __len__(self):
        return len(self.samples)

    def _check_compatible(self, other: "SampledSignal"):
        if len(other) != len(self) or other.sample_period != self.sample_period:
            raise ValueError("signals must share length and sample period")

    def __add__(self, other: "SampledSignal") -> "SampledSignal":
        self._check_compatible(other)
        return SampledSignal(self.samples + other.samples, self.sample_period)

    def __sub__(self, other: "SampledSignal") -> "SampledSignal":
        self._check_compatible(other)
        return SampledSignal(self.samples - other.samples, self.sample_period)

    def __mul__(self, factor: float) -> "SampledSignal":
        return SampledSignal(self.samples * factor, self.sample_period)

    __rmul__ = __mul__

    @property
    def duration(self) -> float:
        return len(self.samples) * self.sample_period

    @property
    def times(self) -> np.ndarray:
        return np.arange(len(self.samples)) * self.sample_period

    @classmethod
    def from_function(
        cls,
        function: Callable[[np.ndarray], np.ndarray],
        duration: float,
        sample_period: float,
    ) -> "SampledSignal":
        count = int(round(duration / sample_period))
        times = np.arange(count) * sample_period
        return cls(function(times), sample_period)

    @classmethod
    def sinusoid(
        cls,
        amplitude: float,
        omega: float,
        duration: float,
        sample_period: float,
        phase: float = 0.0,
    ) -> "SampledSignal":
        """
        ``amplitude * sin(omega t + phase)`` over ``[0, duration)``.
        """
        return cls.from_function(
            lambda t: amplitude * np.sin(omega * t + phase),
            duration=duration,
            sample_period=sample_period,
        )

    @classmethod
    def constant(cls, value: float, duration: float, sample_period: float) -> "SampledSignal":
        return cls.from_function(
            lambda t: np.full_like(t, value),
            duration=duration,
            sample_period=sample_period,
        )


def l2_norm(x: SampledSignal) -> float:
    """
    Riemann approximation ``sqrt(sum(x_k^2) dt)`` of the continuous l2 norm.
    """
    if not len(x):
        raise ValueError("cannot compute the norm of an empty signal")
    return float(np.sqrt(np.sum(np.square(x.samples)) * x.sample_period))


def _discretize(
    g: RationalTransferFunction,
    sample_period: float,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Zero-order-hold discretization of the controllable canonical realization of ``g``.

    Returns:
        discrete numerator and denominator usable by :func:`scipy.signal.lfilter`
    """
    a, b, c, d = scipy.signal.tf2ss(g.num, g.den)
    ad, bd, cd, dd, _ = scipy.signal.cont2discrete((a, b, c, d), sample_period, method="zoh")
    num_d, den_d = scipy.signal.ss2tf(ad, bd, cd, dd)
    return np.atleast_2d(num_d)[0], den_d


def simulate(g: RationalTransferFunction, signal: SampledSignal) -> SampledSignal:
    """
    Response of ``g`` to ``signal`` from a zero initial state.

    The input is held constant between samples (zero-order hold) and the
    discretization is exact for that input.

    Raises:
        ImproperSystemError: if g is improper
        UnstableSystemError: if g is not BIBO stable
    """
    if not len(signal):
        raise ValueError("cannot simulate an empty input signal")
    if not g.is_proper:
        raise ImproperSystemError(f"refusing to simulate improper system {g}")
    if not is_bibo_stable(g):
        raise UnstableSystemError(f"refusing to simulate unstable system {g}")

    if g.denominator_degree == 0:
        outputs = signal.samples * g.numerator[0]
        return SampledSignal(outputs, signal.sample_period)

    num_d, den_d = _discretize(g, signal.sample_period)
    outputs = scipy.signal.lfilter(num_d, den_d, signal.samples)
    return SampledSignal(outputs, signal.sample_period)

