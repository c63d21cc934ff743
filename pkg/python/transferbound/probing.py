"""
Periodic probing experiments on simulated baseline systems.

A probe sends ``amplitude * sin(omega t)`` as reference, lets the transient decay,
then fits ``a sin(omega t) + b cos(omega t)`` to the steady-state output to
recover the magnitude and phase of ``G(j omega)``.
"""
import cmath
import dataclasses
import logging
import math
from typing import Dict
from typing import List
from typing import Mapping
from typing import Optional
from typing import Tuple

import numpy as np

from transferbound import lti

LOGGER = logging.getLogger(__name__)

MIN_SAMPLES_PER_PERIOD = 500


@dataclasses.dataclass(frozen=True)
class ProbeConfig:
    """
    Frequency window and excitation settings of the periodic experiments.

    Args:
        omega_min: lower bound of the window of interest, rad/s
        omega_max: upper bound of the window of interest, rad/s
        amplitude: amplitude of the sinusoidal reference, output units
        settle_periods: periods discarded before measuring
        measure_periods: periods used by the sinusoid fit
        sample_period: largest simulation step, seconds
        noise_std: standard deviation of additive gaussian noise on measured outputs
        min_settle_time: lower bound on the discarded duration, seconds
    """

    omega_min: float = 0.1
    omega_max: float = 10.0
    amplitude: float = 0.25
    settle_periods: int = 5
    measure_periods: int = 3
    sample_period: float = 0.002
    noise_std: float = 0.0
    min_settle_time: float = 10.0

    def __post_init__(self):
        if not 0 < self.omega_min < self.omega_max:
            raise ValueError(
                f"expected 0 < omega_min < omega_max, got [{self.omega_min}, {self.omega_max}]"
            )
        if self.amplitude <= 0:
            raise ValueError(f"amplitude must be > 0, got {self.amplitude}")
        if self.settle_periods < 3:
            raise ValueError(f"settle_periods must be >= 3, got {self.settle_periods}")
        if self.measure_periods < 2:
            raise ValueError(f"measure_periods must be >= 2, got {self.measure_periods}")
        if self.sample_period <= 0:
            raise ValueError(f"sample_period must be > 0, got {self.sample_period}")
        if self.noise_std < 0:
            raise ValueError(f"noise_std must be >= 0, got {self.noise_std}")
        if self.min_settle_time < 0:
            raise ValueError(f"min_settle_time must be >= 0, got {self.min_settle_time}")

    def contains(self, omega: float) -> bool:
        return self.omega_min <= omega <= self.omega_max

    def step_for(self, omega: float) -> float:
        """
        Simulation step used to probe at ``omega``.
        """
        period = 2 * math.pi / omega
        return min(self.sample_period, period / MIN_SAMPLES_PER_PERIOD)

    def schedule_for(self, omega: float) -> Tuple[float, float]:
        """
        Returns:
            (discarded duration, measured duration) in seconds for a probe at ``omega``
        """
        period = 2 * math.pi / omega
        settle = max(self.settle_periods * period, self.min_settle_time)
        # round up the settling so the measurement starts on a whole period
        settle = math.ceil(settle / period) * period
        return settle, self.measure_periods * period


@dataclasses.dataclass(frozen=True)
class ProbeResult:
    """
    Outcome of one probing iteration: the target and every source probed at ``omega``.

    Args:
        omega: probed frequency, rad/s
        source_responses: estimated ``G_sn(j omega)`` by source name
        target_response: estimated ``G_t(j omega)``
        objective_values: ``|G_sn^-1(j omega) G_t(j omega) - 1|`` by source name
        probe_time: simulated experiment time spent, seconds
        objective_variances: first-order variance of each objective value under
            measurement noise, 0 for noiseless probes
    """

    omega: float
    source_responses: Dict[str, lti.FrequencyPoint]
    target_response: lti.FrequencyPoint
    objective_values: Dict[str, float]
    probe_time: float = 0.0
    objective_variances: Dict[str, float] = dataclasses.field(default_factory=dict)

    def to_rows(self, target_name: str = "target") -> List[dict]:
        """
        Probe log rows with the columns ``omega, source_name, M, theta, objective_value``.

        The target row has an empty objective value.
        """
        rows = [
            {
                "omega": self.omega,
                "source_name": target_name,
                "M": self.target_response.magnitude,
                "theta": self.target_response.phase,
                "objective_value": "",
            }
        ]
        for name, point in self.source_responses.items():
            rows.append(
                {
                    "omega": self.omega,
                    "source_name": name,
                    "M": point.magnitude,
                    "theta": point.phase,
                    "objective_value": self.objective_values[name],
                }
            )
        return rows


def _fit_sinusoid(
    times: np.ndarray, values: np.ndarray, omega: float
) -> Tuple[float, float, float]:
    """
    Returns:
        (a, b, gain) where ``gain * noise_std**2`` bounds the variance of a and b
    """
    design = np.column_stack([np.sin(omega * times), np.cos(omega * times)])
    (a, b), *_ = np.linalg.lstsq(design, values, rcond=None)
    gain = float(np.max(np.diag(np.linalg.inv(design.T @ design))))
    return float(a), float(b), gain


def probe_duration(omega: float, cfg: ProbeConfig) -> float:
    settle, measure = cfg.schedule_for(omega)
    return settle + measure


def probe_system(
    g: lti.RationalTransferFunction,
    omega: float,
    cfg: ProbeConfig,
    rng: Optional[np.random.Generator] = None,
) -> lti.FrequencyPoint:
    """
    Estimate ``G(j omega)`` from a simulated sinusoidal experiment.

    Args:
        g: stable and proper baseline system
        omega: probed frequency inside the config window, rad/s
        cfg: experiment settings
        rng: generator for the measurement noise, required if ``cfg.noise_std > 0``

    Raises:
        ValueError: if omega is outside the window or the measurement is too short
        lti.UnstableSystemError: if g is unstable
    """
    if not cfg.contains(omega):
        raise ValueError(f"omega={omega} outside probe window [{cfg.omega_min}, {cfg.omega_max}]")

    period = 2 * math.pi / omega
    settle, measure = cfg.schedule_for(omega)
    if measure < period:
        raise ValueError(f"measurement window {measure}s is shorter than one period {period}s")

    step = cfg.step_for(omega)
    reference = lti.SampledSignal.sinusoid(
        amplitude=cfg.amplitude,
        omega=omega,
        duration=settle + measure,
        sample_period=step,
    )
    output = lti.simulate(g, reference).samples
    if cfg.noise_std > 0:
        if rng is None:
            raise ValueError("a random generator is required when noise_std > 0")
        output = output + rng.normal(0.0, cfg.noise_std, size=len(output))

    times = reference.times
    measured = times >= settle - step / 2
    a, b, gain = _fit_sinusoid(times[measured], output[measured], omega)

    magnitude = math.hypot(a, b) / cfg.amplitude
    phase = math.atan2(b, a)
    # the response is (a + jb) / amplitude
    variance = gain * cfg.noise_std**2 / cfg.amplitude**2
    LOGGER.debug(f"probed {g} at omega={omega:.5g}: M={magnitude:.6g} theta={phase:.6g}")
    return lti.FrequencyPoint(omega, cmath.rect(magnitude, phase), variance=variance)


def estimate_inverse_response(p: lti.FrequencyPoint) -> lti.FrequencyPoint:
    """
    Estimate ``G^-1(j omega)`` as ``M^-1 exp(-j theta)``.

    Raises:
        ValueError: if the response magnitude is zero
    """
    magnitude = p.magnitude
    if magnitude == 0.0:
        raise ValueError(f"zero response at omega={p.omega}: the plant blocks this frequency")
    # d(1/G) = -dG / G**2
    variance = p.variance / magnitude**4
    return lti.FrequencyPoint(p.omega, cmath.rect(1.0 / magnitude, -p.phase), variance=variance)


def evaluate_objective(
    sources: List[lti.FrequencyPoint],
    target: lti.FrequencyPoint,
) -> List[float]:
    """
    ``|G_sn^-1(j omega) G_t(j omega) - 1|`` for every source response.

    Raises:
        ValueError: if the points don't share the same frequency
    """
    values = []
    for source in sources:
        if not math.isclose(source.omega, target.omega, rel_tol=1e-12):
            raise ValueError(
                f"frequency mismatch: source at {source.omega}, target at {target.omega}"
            )
        inverse = estimate_inverse_response(source)
        values.append(abs(inverse.response * target.response - 1.0))
    return values


def objective_variance(source: lti.FrequencyPoint, target: lti.FrequencyPoint) -> float:
    """
    First-order variance of ``|G_s^-1 G_t - 1|`` given the variances of both measured responses.

    With ``r = G_t / G_s`` a perturbation gives ``dr = (dG_t - r dG_s) / G_s``, whose
    projection on any direction has a variance ``(v_t + |r|^2 v_s) / |G_s|^2``.

    Raises:
        ValueError: if the source response is zero
    """
    if source.magnitude == 0.0:
        raise ValueError(f"zero response at omega={source.omega}: the plant blocks this frequency")
    ratio = abs(target.response / source.response)
    return (target.variance + ratio**2 * source.variance) / source.magnitude**2


def probe_pair(
    target: lti.RationalTransferFunction,
    sources: Mapping[str, lti.RationalTransferFunction],
    omega: float,
    cfg: ProbeConfig,
    rng: Optional[np.random.Generator] = None,
) -> ProbeResult:
    """
    Probe the target once and every source once at ``omega``.

    Sources are probed in mapping order, which keeps the noise stream deterministic.
    """
    target_point = probe_system(target, omega, cfg, rng=rng)
    source_points = {name: probe_system(g, omega, cfg, rng=rng) for name, g in sources.items()}
    values = evaluate_objective(list(source_points.values()), target_point)
    return ProbeResult(
        omega=omega,
        source_responses=source_points,
        target_response=target_point,
        objective_values=dict(zip(source_points.keys(), values)),
        probe_time=probe_duration(omega, cfg) * (1 + len(source_points)),
        objective_variances={
            name: objective_variance(point, target_point) for name, point in source_points.items()
        },
    )
