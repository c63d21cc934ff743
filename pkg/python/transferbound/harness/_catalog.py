import dataclasses
import json
import logging
from pathlib import Path
from typing import Dict
from typing import List
from typing import Tuple

import numpy as np
import pydantic

from transferbound import lti

LOGGER = logging.getLogger(__name__)

AXES = ("x", "y", "z")


class CatalogError(ValueError):
    """
    Raised when a catalog is invalid, listing every problem found.
    """

    def __init__(self, problems: List[str]):
        self.problems = list(problems)
        message = "\n".join(f"  - {problem}" for problem in self.problems)
        super().__init__(f"invalid catalog ({len(self.problems)} problems):\n{message}")


class SystemEntry(pydantic.BaseModel):
    model_config = pydantic.ConfigDict(extra="forbid")

    name: str = pydantic.Field(min_length=1)
    axis: str = pydantic.Field(pattern="^[xyz]$")
    numerator: List[float] = pydantic.Field(min_length=1)
    denominator: List[float] = pydantic.Field(min_length=1)


class CatalogFile(pydantic.BaseModel):
    """
    Schema of a catalog file: named per-axis systems, one of them being the target.
    """

    model_config = pydantic.ConfigDict(extra="forbid")

    target: str
    systems: List[SystemEntry]
    descriptions: Dict[str, str] = {}


@dataclasses.dataclass(frozen=True)
class Catalog:
    """
    A validated fleet: one target and N sources, each defined on the same axes.

    Every system is stable, proper and minimum phase.

    Args:
        target_name: name of the target system
        systems: transfer function by axis, by system name, target included
        descriptions: optional free text by system name
    """

    target_name: str
    systems: Dict[str, Dict[str, lti.RationalTransferFunction]]
    descriptions: Dict[str, str] = dataclasses.field(default_factory=dict)

    @property
    def axes(self) -> Tuple[str, ...]:
        return tuple(axis for axis in AXES if axis in self.systems[self.target_name])

    @property
    def target(self) -> Dict[str, lti.RationalTransferFunction]:
        return self.systems[self.target_name]

    @property
    def source_names(self) -> List[str]:
        return [name for name in self.systems if name != self.target_name]

    def is_compatible(self, source_name: str, axis: str, target_name: str = None) -> bool:
        """
        True if the inverse of the source can be pre-cascaded to the target on that axis.
        """
        target = self.systems[target_name or self.target_name][axis]
        source = self.systems[source_name][axis]
        return lti.relative_degree(target) >= lti.relative_degree(source)

    def compatible_sources(self, axis: str) -> Dict[str, lti.RationalTransferFunction]:
        return {
            name: self.systems[name][axis]
            for name in self.source_names
            if self.is_compatible(name, axis)
        }

    def compatibility(self) -> Dict[str, Dict[str, bool]]:
        return {
            name: {axis: self.is_compatible(name, axis) for axis in self.axes}
            for name in self.source_names
        }


def _check_system(entry: SystemEntry) -> List[str]:
    label = f"{entry.name}[{entry.axis}]"
    try:
        system = lti.RationalTransferFunction(entry.numerator, entry.denominator)
    except ValueError as error:
        return [f"{label}: {error}"]
    problems = []
    if not system.is_proper:
        problems.append(f"{label}: {system} is improper")
    if not lti.is_bibo_stable(system):
        problems.append(f"{label}: {system} is not BIBO stable")
    if not lti.is_minimum_phase(system):
        problems.append(f"{label}: {system} is not minimum phase (its inverse is unstable)")
    return problems


def build_catalog(content: CatalogFile) -> Catalog:
    """
    Validate a parsed catalog file and convert it.

    Raises:
        CatalogError: listing every problem found, not only the first one
    """
    problems = []
    systems: Dict[str, Dict[str, lti.RationalTransferFunction]] = {}
    for entry in content.systems:
        entry_problems = _check_system(entry)
        problems.extend(entry_problems)
        if entry.axis in systems.get(entry.name, {}):
            problems.append(f"{entry.name}[{entry.axis}]: defined more than once")
        if entry_problems:
            continue
        systems.setdefault(entry.name, {})[entry.axis] = lti.RationalTransferFunction(
            entry.numerator, entry.denominator
        )

    declared = {entry.name: set() for entry in content.systems}
    for entry in content.systems:
        declared[entry.name].add(entry.axis)

    if content.target not in declared:
        problems.append(f"target '{content.target}' is not defined in the systems")
    else:
        target_axes = declared[content.target]
        for name, axes in declared.items():
            if axes != target_axes:
                problems.append(
                    f"{name}: defined on axes {sorted(axes)} but the target is on {sorted(target_axes)}"
                )
        if len(declared) < 2:
            problems.append("the catalog needs at least one source besides the target")

    if problems:
        raise CatalogError(problems)

    catalog = Catalog(
        target_name=content.target,
        systems=systems,
        descriptions=dict(content.descriptions),
    )
    for name, axes in catalog.compatibility().items():
        for axis, compatible in axes.items():
            if not compatible:
                LOGGER.warning(
                    f"{name}[{axis}] has a higher relative degree than the target:"
                    f" its inverse cannot be transferred on that axis"
                )
    return catalog


def load_catalog(path: Path) -> Catalog:
    """
    Read and validate a JSON catalog file.

    Raises:
        CatalogError: listing every problem found
    """
    LOGGER.debug(f"reading catalog {path}")
    try:
        content = CatalogFile.model_validate_json(Path(path).read_text(encoding="utf-8"))
    except pydantic.ValidationError as error:
        raise CatalogError(
            [f"{'.'.join(map(str, item['loc']))}: {item['msg']}" for item in error.errors()]
        ) from error
    return build_catalog(content)


def _second_order(tau1: float, tau2: float, scale: float = 1.0) -> List[float]:
    return list(np.polymul([scale * tau1, 1.0], [scale * tau2, 1.0]))


def _slow_system(tau1: float, tau2: float, scale: float, lag: float) -> Tuple[list, list]:
    # first-order lead-lag standing for a transport delay while staying minimum phase
    numerator = [lag / 2.0, 1.0]
    denominator = list(np.polymul([lag, 1.0], _second_order(tau1, tau2, scale)))
    return numerator, denominator


def default_catalog() -> CatalogFile:
    """
    A fleet of one target and five sources on the x, y and z axes.

    ``Rs1`` and ``Rs2`` are slight perturbations of the target and should give
    small error bounds; ``Rs3`` to ``Rs5`` have time constants 3 to 5 times
    larger plus a lagging lead-lag and should give large ones.
    """
    time_constants = {"x": (0.2, 0.25), "y": (0.2, 0.25), "z": (0.15, 0.2)}
    agile = {
        "Rs1": {"x": (1.03, 1.022), "y": (1.03, 1.022), "z": (1.033, 1.029)},
        "Rs2": {"x": (1.06, 1.056), "y": (1.06, 1.056), "z": (1.05, 1.057)},
    }
    slow = {"Rs3": 3.0, "Rs4": 4.0, "Rs5": 5.0}

    systems = []
    for axis, (tau1, tau2) in time_constants.items():
        a2, a1, _ = _second_order(tau1, tau2)
        systems.append(
            SystemEntry(name="Rt", axis=axis, numerator=[1.0], denominator=[a2, a1, 1.0])
        )
        for name, factors in agile.items():
            second, first = factors[axis]
            systems.append(
                SystemEntry(
                    name=name,
                    axis=axis,
                    numerator=[1.0],
                    denominator=[a2 * second, a1 * first, 1.0],
                )
            )
        for name, scale in slow.items():
            numerator, denominator = _slow_system(tau1, tau2, scale, lag=0.2)
            systems.append(
                SystemEntry(name=name, axis=axis, numerator=numerator, denominator=denominator)
            )

    systems.sort(key=lambda entry: (entry.name, AXES.index(entry.axis)))
    return CatalogFile(
        target="Rt",
        systems=systems,
        descriptions={
            "Rt": "agile target, two real poles per axis",
            "Rs1": "target with ~3% coefficient perturbation",
            "Rs2": "target with ~6% coefficient perturbation",
            "Rs3": "3x slower time constants and a lagging lead-lag",
            "Rs4": "4x slower time constants and a lagging lead-lag",
            "Rs5": "5x slower time constants and a lagging lead-lag",
        },
    )


def write_catalog(content: CatalogFile, path: Path):
    Path(path).write_text(
        json.dumps(content.model_dump(mode="json"), indent=2) + "\n", encoding="utf-8"
    )
