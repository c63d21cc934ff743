import dataclasses
import logging
import math
from pathlib import Path
from typing import Dict
from typing import List
from typing import Optional
from typing import Sequence
from typing import Tuple

import numpy as np
import pydantic

from transferbound import lti
from transferbound.mathing import remap_range

LOGGER = logging.getLogger(__name__)


@dataclasses.dataclass(frozen=True)
class Trajectory:
    """
    A desired multi-axis trajectory ``A_axis * sin(omega_axis t)``; the y axis uses a cosine.

    Args:
        name: identifier reported in the tables
        amplitudes: amplitude by axis, meters
        omegas: frequency by axis, rad/s
        duration: seconds
        sample_period: seconds
        seed: seed the frequencies were drawn with, if any
    """

    name: str
    amplitudes: Dict[str, float]
    omegas: Dict[str, float]
    duration: float
    sample_period: float
    seed: Optional[int] = None

    @property
    def axes(self) -> List[str]:
        return sorted(self.omegas)

    def signals(self) -> Dict[str, lti.SampledSignal]:
        signals = {}
        for axis in self.axes:
            phase = math.pi / 2 if axis == "y" else 0.0
            signals[axis] = lti.SampledSignal.sinusoid(
                amplitude=self.amplitudes[axis],
                omega=self.omegas[axis],
                duration=self.duration,
                sample_period=self.sample_period,
                phase=phase,
            )
        return signals


class TrajectoryEntry(pydantic.BaseModel):
    model_config = pydantic.ConfigDict(extra="forbid")

    name: str
    amplitudes: Dict[str, float]
    omegas: Dict[str, pydantic.PositiveFloat]
    duration: pydantic.PositiveFloat
    sample_period: pydantic.PositiveFloat

    @pydantic.model_validator(mode="after")
    def _check_axes(self):
        if set(self.amplitudes) != set(self.omegas):
            raise ValueError("amplitudes and omegas must define the same axes")
        return self


class SuiteFile(pydantic.BaseModel):
    """
    Either an explicit list of trajectories, or the parameters to draw them randomly.
    """

    model_config = pydantic.ConfigDict(extra="forbid")

    trajectories: List[TrajectoryEntry] = []
    count: int = pydantic.Field(default=5, ge=0)
    amplitude: float = pydantic.Field(default=0.25, ge=0)
    omega_min: float = pydantic.Field(default=0.1, gt=0)
    omega_max: float = pydantic.Field(default=2.0, gt=0)
    periods: int = pydantic.Field(default=2, ge=1)
    sample_period: float = pydantic.Field(default=0.005, gt=0)


def random_suite(
    axes: Sequence[str],
    count: int,
    seed: int,
    amplitude: float = 0.25,
    omega_min: float = 0.1,
    omega_max: float = 2.0,
    periods: int = 2,
    sample_period: float = 0.005,
) -> List[Trajectory]:
    """
    Draw ``count`` trajectories with per-axis frequencies uniform in ``(omega_min, omega_max]``.

    Each duration is a whole number of periods of its slowest axis.
    """
    rng = np.random.default_rng(seed)
    suite = []
    for index in range(count):
        # 1 - random() lies in (0, 1] so omega_max is reachable but omega_min is not
        omegas = {
            axis: remap_range(1.0 - rng.random(), 0.0, 1.0, omega_min, omega_max)
            for axis in axes
        }
        slowest_period = 2 * math.pi / min(omegas.values())
        suite.append(
            Trajectory(
                name=f"traj{index + 1:02d}",
                amplitudes={axis: amplitude for axis in axes},
                omegas=omegas,
                duration=periods * slowest_period,
                sample_period=sample_period,
                seed=seed,
            )
        )
    return suite


def load_suite(
    path: Optional[Path],
    axes: Sequence[str],
    seed: int,
    window: Optional[Tuple[float, float]] = None,
) -> List[Trajectory]:
    """
    Read a suite file; if it doesn't list trajectories explicitly they are drawn with ``seed``.

    The default suite (no path) draws 5 trajectories.

    Args:
        path: JSON suite file, None for the default suite
        axes: axes every trajectory must define
        seed: seed of the random draws
        window: ``(omega_min, omega_max)`` the bounds were estimated on. Random draws
            are restricted to it and explicit frequencies outside of it are rejected.

    Raises:
        ValueError: on axes mismatch, on explicit frequencies outside ``window`` or
            if the drawing range doesn't intersect ``window``.
    """
    if path is None:
        content = SuiteFile()
    else:
        LOGGER.debug(f"reading trajectory suite {path}")
        content = SuiteFile.model_validate_json(Path(path).read_text(encoding="utf-8"))

    if content.trajectories:
        suite = []
        for entry in content.trajectories:
            if set(entry.omegas) != set(axes):
                raise ValueError(
                    f"trajectory '{entry.name}' is defined on {sorted(entry.omegas)}"
                    f" but the catalog on {sorted(axes)}"
                )
            if window:
                outside = {
                    axis: omega
                    for axis, omega in entry.omegas.items()
                    if not window[0] <= omega <= window[1]
                }
                if outside:
                    raise ValueError(
                        f"trajectory '{entry.name}' has frequencies {outside} outside the"
                        f" probe window {tuple(window)}"
                    )
            suite.append(Trajectory(seed=None, **entry.model_dump()))
        return suite

    omega_min, omega_max = content.omega_min, content.omega_max
    if window:
        omega_min, omega_max = max(omega_min, window[0]), min(omega_max, window[1])
        if omega_min >= omega_max:
            raise ValueError(
                f"suite frequencies [{content.omega_min}, {content.omega_max}] don't"
                f" intersect the probe window {tuple(window)}"
            )
        if (omega_min, omega_max) != (content.omega_min, content.omega_max):
            LOGGER.info(
                f"drawing suite frequencies in ({omega_min}, {omega_max}], the part of"
                f" [{content.omega_min}, {content.omega_max}] inside the probe window"
            )

    return random_suite(
        axes=axes,
        count=content.count,
        seed=seed,
        amplitude=content.amplitude,
        omega_min=omega_min,
        omega_max=omega_max,
        periods=content.periods,
        sample_period=content.sample_period,
    )
