import hashlib
import json
import logging
from pathlib import Path
from typing import Optional
from typing import Tuple

import pydantic

from transferbound import optimizing
from transferbound import probing

LOGGER = logging.getLogger(__name__)


class ProbeSettings(pydantic.BaseModel):
    model_config = pydantic.ConfigDict(extra="forbid")

    omega_min: float = 0.1
    omega_max: float = 10.0
    amplitude: float = pydantic.Field(default=0.25, gt=0)
    settle_periods: int = pydantic.Field(default=5, ge=3)
    measure_periods: int = pydantic.Field(default=3, ge=2)
    sample_period: float = pydantic.Field(default=0.002, gt=0)
    noise_std: float = pydantic.Field(default=0.0, ge=0)
    min_settle_time: float = pydantic.Field(default=10.0, ge=0)

    @pydantic.model_validator(mode="after")
    def _check_window(self):
        if not 0 < self.omega_min < self.omega_max:
            raise ValueError(
                f"expected 0 < omega_min < omega_max, got [{self.omega_min}, {self.omega_max}]"
            )
        return self

    def build(self) -> probing.ProbeConfig:
        return probing.ProbeConfig(**self.model_dump())


class GpConfig(pydantic.BaseModel):
    model_config = pydantic.ConfigDict(extra="forbid")

    noise_variance: float = pydantic.Field(default=1e-6, gt=0)
    signal_variance: float = pydantic.Field(default=1.0, gt=0)
    length_scale: float = pydantic.Field(default=1.0, gt=0)
    signal_variance_bounds: Tuple[float, float] = (1e-6, 1e2)
    length_scale_bounds: Tuple[float, float] = (0.05, 10.0)
    grid_starts: int = pydantic.Field(default=6, ge=2)

    def build(self) -> optimizing.GpSettings:
        return optimizing.GpSettings(**self.model_dump())


class ConvergenceConfig(pydantic.BaseModel):
    model_config = pydantic.ConfigDict(extra="forbid")

    relative_tolerance: float = pydantic.Field(default=0.01, gt=0)
    absolute_tolerance: float = pydantic.Field(default=1e-6, ge=0)
    patience: int = pydantic.Field(default=3, ge=1)
    min_iterations: int = pydantic.Field(default=4, ge=1)
    max_iterations: int = pydantic.Field(default=40, ge=1)

    def build(self) -> optimizing.ConvergencePolicy:
        return optimizing.ConvergencePolicy(**self.model_dump())


class CampaignConfig(pydantic.BaseModel):
    """
    Every setting of the estimation and verification commands.

    All fields have defaults so an empty JSON object is a valid configuration.
    """

    model_config = pydantic.ConfigDict(extra="forbid")

    probe: ProbeSettings = ProbeSettings()
    gp: GpConfig = GpConfig()
    convergence: ConvergenceConfig = ConvergenceConfig()
    acquisition_grid_size: int = pydantic.Field(default=512, ge=8)
    oracle_grid_size: int = pydantic.Field(default=10000, ge=8)
    safety_margin: float = pydantic.Field(default=1.0, ge=1.0)

    @property
    def hash(self) -> str:
        return config_hash(self)


def config_hash(config: CampaignConfig) -> str:
    """
    A short hash of the configuration that is stable between python sessions.
    """
    canonical = json.dumps(config.model_dump(mode="json"), sort_keys=True)
    return hashlib.sha256(bytes(canonical, "utf-8")).hexdigest()[:16]


def load_config(path: Optional[Path]) -> CampaignConfig:
    """
    Read a JSON configuration file, or return the defaults if no path is given.

    Raises:
        pydantic.ValidationError: listing every invalid field
    """
    if path is None:
        LOGGER.debug("no config file given, using defaults")
        return CampaignConfig()
    LOGGER.debug(f"reading config {path}")
    return CampaignConfig.model_validate_json(Path(path).read_text(encoding="utf-8"))


def override_config(
    config: CampaignConfig,
    max_iterations: Optional[int] = None,
    oracle_grid_size: Optional[int] = None,
) -> CampaignConfig:
    """
    Return a copy of the config with the command-line overrides applied.

    The hash of the returned config reflects the overrides.
    """
    content = config.model_dump()
    if max_iterations is not None:
        content["convergence"]["max_iterations"] = max_iterations
        content["convergence"]["min_iterations"] = min(
            content["convergence"]["min_iterations"], max_iterations
        )
    if oracle_grid_size is not None:
        content["oracle_grid_size"] = oracle_grid_size
    return CampaignConfig.model_validate(content)


def write_config(config: CampaignConfig, path: Path):
    Path(path).write_text(
        json.dumps(config.model_dump(mode="json"), indent=2) + "\n", encoding="utf-8"
    )
