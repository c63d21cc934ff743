from ._catalog import AXES
from ._catalog import Catalog
from ._catalog import CatalogError
from ._catalog import CatalogFile
from ._catalog import SystemEntry
from ._catalog import build_catalog
from ._catalog import default_catalog
from ._catalog import load_catalog
from ._catalog import write_catalog
from ._commands import AsymmetryResult
from ._commands import EstimateResult
from ._commands import VerifyResult
from ._commands import asymmetry
from ._commands import axis_seed
from ._commands import cmd_asymmetry
from ._commands import cmd_estimate
from ._commands import cmd_init
from ._commands import cmd_oracle
from ._commands import cmd_verify
from ._commands import estimate
from ._commands import oracle
from ._commands import verify
from ._config import CampaignConfig
from ._config import config_hash
from ._config import load_config
from ._config import override_config
from ._trajectories import SuiteFile
from ._trajectories import Trajectory
from ._trajectories import load_suite
from ._trajectories import random_suite

__all__ = [
    "AXES",
    "AsymmetryResult",
    "CampaignConfig",
    "Catalog",
    "CatalogError",
    "CatalogFile",
    "EstimateResult",
    "SuiteFile",
    "SystemEntry",
    "Trajectory",
    "VerifyResult",
    "asymmetry",
    "axis_seed",
    "build_catalog",
    "cmd_asymmetry",
    "cmd_estimate",
    "cmd_init",
    "cmd_oracle",
    "cmd_verify",
    "config_hash",
    "default_catalog",
    "estimate",
    "load_catalog",
    "load_config",
    "load_suite",
    "oracle",
    "override_config",
    "random_suite",
    "verify",
    "write_catalog",
]
