"""
From infinity-norm estimates to tracking-error certificates, plus the
symmetric/asymmetric decomposition of the error transfer function.
"""
import dataclasses
import enum
import logging
import math
from typing import List
from typing import Mapping
from typing import Optional
from typing import Tuple

import numpy as np

from transferbound import lti

LOGGER = logging.getLogger(__name__)


class Verdict(enum.Enum):
    """
    ``not_guaranteed`` only states the absence of a guarantee, not a negative transfer.
    """

    positive = "Positive"
    not_guaranteed = "NotGuaranteed"


@dataclasses.dataclass(frozen=True)
class AxisBound:
    axis: str
    e_star: float
    yd_norm: float

    @property
    def bound(self) -> float:
        return self.e_star * self.yd_norm


@dataclasses.dataclass(frozen=True)
class BoundCertificate:
    """
    Tracking error guarantee for one source inverse transferred to the target.

    Args:
        source_name: name of the source whose inverse is transferred
        per_axis: bound of every axis, ``e_star * l2(yd_axis)``
        baseline_error: measured l2 tracking error of the target alone
        safety_margin: factor applied to the combined bound before comparing
    """

    source_name: str
    per_axis: Tuple[AxisBound, ...]
    baseline_error: float
    safety_margin: float = 1.0

    @property
    def combined_bound(self) -> float:
        return combine_axis_bounds([axis.bound for axis in self.per_axis])

    @property
    def verdict(self) -> Verdict:
        if self.safety_margin * self.combined_bound < self.baseline_error:
            return Verdict.positive
        return Verdict.not_guaranteed

    def to_dict(self) -> dict:
        return {
            "source": self.source_name,
            "per_axis": [
                {
                    "axis": axis.axis,
                    "e_star": axis.e_star,
                    "yd_norm": axis.yd_norm,
                    "bound": axis.bound,
                }
                for axis in self.per_axis
            ],
            "combined_bound": self.combined_bound,
            "baseline_error": self.baseline_error,
            "safety_margin": self.safety_margin,
            "verdict": self.verdict.value,
        }


def combine_axis_bounds(bounds: List[float]) -> float:
    """
    Root-sum-square of per-axis bounds.
    """
    return math.sqrt(sum(bound**2 for bound in bounds))


def tracking_error_bound(e_star: float, yd: lti.SampledSignal) -> float:
    """
    Upper bound ``e_star * ||yd||_2`` on the l2 tracking error.
    """
    if e_star < 0:
        raise ValueError(f"e_star must be >= 0, got {e_star}")
    return e_star * lti.l2_norm(yd)


def verdict(
    e_stars: Mapping[str, float],
    yd: Mapping[str, lti.SampledSignal],
    baseline_error: float,
    source_name: str = "",
    safety_margin: float = 1.0,
) -> BoundCertificate:
    """
    Assemble the certificate of one source over every axis of a desired trajectory.

    Positive transfer is guaranteed iff ``safety_margin * combined_bound < baseline_error``.

    Args:
        e_stars: estimated infinity norm by axis
        yd: desired trajectory by axis
        baseline_error: l2 tracking error of the target alone on the same trajectory
        source_name: name reported on the certificate
        safety_margin: factor >= 1 for conservative operation

    Raises:
        ValueError: on mismatching axes or negative inputs
    """
    if set(e_stars) != set(yd):
        raise ValueError(f"axis mismatch: estimates for {sorted(e_stars)}, trajectory for {sorted(yd)}")
    if baseline_error < 0:
        raise ValueError(f"baseline error must be >= 0, got {baseline_error}")
    per_axis = []
    for axis in sorted(e_stars):
        e_star = e_stars[axis]
        if e_star < 0:
            raise ValueError(f"e_star must be >= 0, got {e_star} on axis {axis}")
        per_axis.append(AxisBound(axis=axis, e_star=e_star, yd_norm=lti.l2_norm(yd[axis])))
    return BoundCertificate(
        source_name=source_name,
        per_axis=tuple(per_axis),
        baseline_error=baseline_error,
        safety_margin=safety_margin,
    )


def tracking_errors(
    target: lti.RationalTransferFunction,
    source: lti.RationalTransferFunction,
    yd: lti.SampledSignal,
) -> Tuple[lti.SampledSignal, lti.SampledSignal]:
    """
    Simulate the target with and without the source inverse pre-cascaded.

    The baseline runs the target alone with ``y_r = y_d``.

    Returns:
        tuple of (transfer error, baseline error), both ``y_a - y_d``
    """
    if lti.relative_degree(target) < lti.relative_degree(source):
        raise lti.ImproperSystemError(
            f"cannot pre-cascade the inverse of {source} to {target}: improper composition"
        )
    baseline = lti.simulate(target, yd) - yd
    transferred = lti.simulate(lti.series(lti.invert(source), target), yd) - yd
    return transferred, baseline


def first_order_transfer_error(
    tau_source: float,
    tau_target: float,
    yd: lti.SampledSignal,
) -> Tuple[lti.SampledSignal, lti.SampledSignal]:
    """
    Transfer and baseline errors between two unity-gain first-order lags.

    The transfer error is exactly ``(1 - tau_source / tau_target)`` times the baseline one.
    """
    if tau_source <= 0 or tau_target <= 0:
        raise ValueError(f"time constants must be > 0, got {tau_source} and {tau_target}")
    return tracking_errors(
        target=lti.RationalTransferFunction.first_order(tau_target),
        source=lti.RationalTransferFunction.first_order(tau_source),
        yd=yd,
    )


def reference_amplification(
    source: lti.RationalTransferFunction,
    yd: lti.SampledSignal,
    filter_time_constant: Optional[float] = None,
) -> float:
    """
    Ratio ``||y_r||_2 / ||y_d||_2`` of the reference produced by the source inverse.

    The inverse is made proper with a low-pass filter of ``filter_time_constant``,
    default to 10 sample periods of ``yd`` so the held input stays smooth for it.
    """
    if filter_time_constant is None:
        filter_time_constant = 10 * yd.sample_period
    inverse = lti.realizable_inverse(source, filter_time_constant=filter_time_constant)
    reference = lti.simulate(inverse, yd)
    return lti.l2_norm(reference) / lti.l2_norm(yd)


def chordal_distance(g1: np.ndarray, g2: np.ndarray) -> np.ndarray:
    """
    Chordal distance between the projections of two complex values on the Riemann sphere.
    """
    g1 = np.asarray(g1, dtype=complex)
    g2 = np.asarray(g2, dtype=complex)
    return np.abs(g1 - g2) / np.sqrt((1 + np.abs(g1) ** 2) * (1 + np.abs(g2) ** 2))


@dataclasses.dataclass(frozen=True, eq=False)
class AsymmetryReport:
    """
    Pointwise decomposition ``|E(j omega)| = psi * Psi`` of the error transfer function
    obtained by transferring the inverse of ``g2`` to ``g1``.

    The nu-gap is a supremum over the grid only, so it is restricted to that window.
    """

    omega_grid: np.ndarray
    chordal: np.ndarray
    asym_factor: np.ndarray
    error_mag: np.ndarray
    winding_condition_ok: bool

    @property
    def nu_gap(self) -> float:
        return float(np.max(self.chordal))

    def to_rows(self) -> List[dict]:
        return [
            {"omega": omega, "psi": psi, "Psi": factor, "error_mag": error}
            for omega, psi, factor, error in zip(
                self.omega_grid, self.chordal, self.asym_factor, self.error_mag
            )
        ]


def nu_gap_report(
    g1: lti.RationalTransferFunction,
    g2: lti.RationalTransferFunction,
    grid: np.ndarray,
) -> AsymmetryReport:
    """
    Decompose the error of transferring the inverse of ``g2`` to ``g1`` on a frequency grid.

    The validity condition ``|G2(-j omega) G1(j omega)| < 1`` of the nu-gap formula is
    checked pointwise on the grid and reported instead of being assumed.

    Raises:
        ValueError: if a system is unstable or non minimum phase, or if G2 vanishes on the grid
    """
    for name, system in (("g1", g1), ("g2", g2)):
        if not lti.is_bibo_stable(system) or not lti.is_minimum_phase(system):
            raise ValueError(f"{name}={system} must be stable and minimum phase")

    grid = np.asarray(grid, dtype=float)
    response1 = lti.frequency_sweep(g1, grid)
    response2 = lti.frequency_sweep(g2, grid)

    aggressiveness = chordal_distance(response2, np.zeros_like(response2))
    if np.any(aggressiveness == 0.0):
        raise ValueError(f"{g2} vanishes on the grid, the asymmetric factor is undefined")

    chordal = chordal_distance(response1, response2)
    asym_factor = np.sqrt(1 + np.abs(response1) ** 2) / aggressiveness
    error_mag = np.abs(response1 / response2 - 1.0)

    # for real coefficients G(-j omega) is the conjugate of G(j omega)
    winding_ok = bool(np.all(np.abs(np.conj(response2) * response1) < 1.0))
    if not winding_ok:
        LOGGER.warning(f"nu-gap validity condition violated on the grid for {g1} vs {g2}")

    return AsymmetryReport(
        omega_grid=grid,
        chordal=chordal,
        asym_factor=asym_factor,
        error_mag=error_mag,
        winding_condition_ok=winding_ok,
    )
