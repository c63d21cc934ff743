"""
End-to-end operations behind the command line: estimate, verify, asymmetry, oracle and init.

Every command reads its inputs from files, writes its artifacts under an output
directory and returns a result object; none of them configures logging or exits.
"""
import concurrent.futures
import dataclasses
import logging
import math
from pathlib import Path
from typing import Dict
from typing import List
from typing import Optional
from typing import Tuple

import numpy as np

from transferbound import analysis
from transferbound import lti
from transferbound import optimizing
from transferbound.mathing import log_window_grid
from ._catalog import Catalog
from ._catalog import build_catalog
from ._catalog import default_catalog
from ._catalog import load_catalog
from ._catalog import write_catalog
from ._config import CampaignConfig
from ._config import load_config
from ._config import override_config
from ._config import write_config
from ._records import read_json
from ._records import write_csv
from ._records import write_json
from ._records import write_jsonl
from ._trajectories import SuiteFile
from ._trajectories import Trajectory
from ._trajectories import load_suite

LOGGER = logging.getLogger(__name__)

ESTIMATES_CSV = "estimates.csv"
ESTIMATES_JSON = "estimates.json"
VERIFICATION_CSV = "verification.csv"
CERTIFICATES_JSON = "certificates.json"
SUMMARY_JSON = "summary.json"
ORACLE_CSV = "oracle.csv"
ASYMMETRY_CSV = "asymmetry_curves.csv"
ASYMMETRY_JSON = "asymmetry.json"


def axis_seed(seed: int, axis_index: int) -> int:
    """
    Independent but reproducible seed of one axis campaign.
    """
    return int(np.random.SeedSequence([seed, axis_index]).generate_state(1)[0])


@dataclasses.dataclass
class AxisCampaignResult:
    """
    Everything an axis campaign produced, collected in the worker then written by the caller.
    """

    axis: str
    seed: int
    converged: bool
    iterations: int
    probe_time: float
    estimates: List[optimizing.BoundEstimate]
    transcript: List[dict]
    probe_rows: List[dict]
    gp_snapshots: Dict[str, dict]

    def estimate_of(self, source_name: str) -> Optional[optimizing.BoundEstimate]:
        for estimate in self.estimates:
            if estimate.source_name == source_name:
                return estimate
        return None


@dataclasses.dataclass
class EstimateResult:
    catalog: Catalog
    config: CampaignConfig
    seed: int
    axes: List[AxisCampaignResult]

    @property
    def converged(self) -> bool:
        return all(axis.converged for axis in self.axes)

    def table_rows(self) -> List[dict]:
        """
        One row per axis and one column per source, empty when the pair is incompatible.
        """
        rows = []
        for axis in self.axes:
            row = {"axis": axis.axis}
            for name in self.catalog.source_names:
                estimate = axis.estimate_of(name)
                row[name] = estimate.e_star if estimate else None
            row.update(
                {
                    "iterations": axis.iterations,
                    "converged": axis.converged,
                    "probe_time": axis.probe_time,
                    "seed": self.seed,
                    "config_hash": self.config.hash,
                }
            )
            rows.append(row)
        return rows

    def to_dict(self) -> dict:
        return {
            "target": self.catalog.target_name,
            "sources": self.catalog.source_names,
            "seed": self.seed,
            "config_hash": self.config.hash,
            "axes": {
                axis.axis: {
                    "seed": axis.seed,
                    "converged": axis.converged,
                    "iterations": axis.iterations,
                    "probe_time": axis.probe_time,
                    "estimates": [estimate.to_dict() for estimate in axis.estimates],
                }
                for axis in self.axes
            },
        }


def run_axis_campaign(
    catalog: Catalog,
    config: CampaignConfig,
    axis: str,
    seed: int,
) -> AxisCampaignResult:
    """
    Run the estimation campaign of every compatible source on a single axis.

    A campaign that exhausts its budget is not an error here: its partial
    estimates are kept and the result is flagged as not converged.
    """
    sources = catalog.compatible_sources(axis)
    skipped = sorted(set(catalog.source_names) - set(sources))
    if skipped:
        LOGGER.warning(f"axis {axis}: skipping incompatible sources {skipped}")

    campaign = optimizing.BoCampaign(
        sources=sources,
        target=catalog.target[axis],
        window=config.probe.build(),
        policy=config.convergence.build(),
        seed=seed,
        gp_settings=config.gp.build(),
        acquisition_grid_size=config.acquisition_grid_size,
    )
    converged = True
    try:
        optimizing.run_campaign(
            sources, catalog.target[axis], config.probe.build(), campaign=campaign
        )
    except optimizing.CampaignNotConvergedError as error:
        LOGGER.error(f"axis {axis}: {error}")
        converged = False

    probe_rows = []
    for iteration, result in enumerate(campaign.sample_history):
        for row in result.to_rows(target_name=catalog.target_name):
            probe_rows.append({"axis": axis, "iteration": iteration + 1, **row})

    return AxisCampaignResult(
        axis=axis,
        seed=seed,
        converged=converged,
        iterations=campaign.iterations,
        probe_time=campaign.probe_time,
        estimates=campaign.estimates(),
        transcript=[{"axis": axis, **row} for row in campaign.transcript_rows()],
        probe_rows=probe_rows,
        gp_snapshots={name: model.to_dict() for name, model in campaign.gp_models.items()},
    )


def estimate(
    catalog: Catalog,
    config: CampaignConfig,
    seed: int,
    jobs: int = 1,
) -> EstimateResult:
    """
    Run one campaign per axis, optionally in a process pool.

    Results are merged in axis order whatever the completion order.
    """
    arguments = [
        (catalog, config, axis, axis_seed(seed, index)) for index, axis in enumerate(catalog.axes)
    ]
    if jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as executor:
            results = list(executor.map(run_axis_campaign, *zip(*arguments)))
    else:
        results = [run_axis_campaign(*argument) for argument in arguments]
    return EstimateResult(catalog=catalog, config=config, seed=seed, axes=results)


def write_estimate_outputs(result: EstimateResult, out_dir: Path):
    out_dir = Path(out_dir)
    columns = ["axis"] + result.catalog.source_names
    columns += ["iterations", "converged", "probe_time", "seed", "config_hash"]
    write_csv(result.table_rows(), out_dir / ESTIMATES_CSV, columns=columns)
    write_json(result.to_dict(), out_dir / ESTIMATES_JSON)
    for axis in result.axes:
        write_csv(axis.transcript, out_dir / "transcripts" / f"{axis.axis}.csv")
        write_jsonl(axis.transcript, out_dir / "transcripts" / f"{axis.axis}.jsonl")
        write_json(axis.gp_snapshots, out_dir / "gp" / f"{axis.axis}.json")
        write_csv(
            [{**row, "seed": axis.seed} for row in axis.probe_rows],
            out_dir / "probes" / f"{axis.axis}.csv",
        )


def cmd_estimate(
    catalog_path: Optional[Path],
    config_path: Optional[Path],
    seed: int,
    out_dir: Path,
    max_iterations: Optional[int] = None,
    jobs: int = 1,
) -> EstimateResult:
    """
    Estimate the error bound of every source on every axis and write the artifacts.

    Outputs, relative to ``out_dir``: ``estimates.csv`` (one row per axis, one column
    per source), ``estimates.json``, and per axis ``transcripts/``, ``gp/`` and
    ``probes/`` files.

    Raises:
        CatalogError: if the catalog is invalid
        pydantic.ValidationError: if the config is invalid
    """
    catalog = load_catalog(catalog_path) if catalog_path else _default_catalog()
    config = override_config(load_config(config_path), max_iterations=max_iterations)
    result = estimate(catalog, config, seed=seed, jobs=jobs)
    write_estimate_outputs(result, out_dir)
    for row in result.table_rows():
        values = ", ".join(
            f"{name}={row[name]:.4g}" for name in catalog.source_names if row[name] is not None
        )
        LOGGER.info(f"axis {row['axis']}: {values} ({row['iterations']} iterations)")
    return result


def _default_catalog() -> Catalog:
    return build_catalog(default_catalog())


@dataclasses.dataclass
class TrajectoryVerification:
    trajectory: Trajectory
    baseline_error: float
    actual_errors: Dict[str, float]
    certificates: Dict[str, analysis.BoundCertificate]

    def violations(self) -> List[str]:
        """
        Sources whose actual tracking error exceeds their bound.
        """
        return [
            name
            for name, certificate in self.certificates.items()
            if self.actual_errors[name] > certificate.combined_bound
        ]

    def false_positives(self) -> List[str]:
        """
        Sources certified positive whose transfer did not actually reduce the error.
        """
        return [
            name
            for name, certificate in self.certificates.items()
            if certificate.verdict is analysis.Verdict.positive
            and self.actual_errors[name] >= self.baseline_error
        ]


@dataclasses.dataclass
class VerifyResult:
    source_names: List[str]
    seed: int
    config_hash: str
    trajectories: List[TrajectoryVerification]

    @property
    def violation_count(self) -> int:
        return sum(
            len(item.violations()) + len(item.false_positives()) for item in self.trajectories
        )

    @property
    def passed(self) -> bool:
        return self.violation_count == 0

    def columns(self) -> List[str]:
        columns = ["trajectory"]
        columns += [f"e[{name}]" for name in self.source_names]
        columns += [f"e*[{name}]" for name in self.source_names]
        columns += ["e_baseline"]
        columns += [f"verdict[{name}]" for name in self.source_names]
        columns += ["omega_x", "omega_y", "omega_z", "seed", "config_hash"]
        return columns

    def table_rows(self) -> List[dict]:
        rows = []
        for item in self.trajectories:
            row = {"trajectory": item.trajectory.name}
            for name, certificate in item.certificates.items():
                row[f"e[{name}]"] = item.actual_errors[name]
                row[f"e*[{name}]"] = certificate.combined_bound
                row[f"verdict[{name}]"] = certificate.verdict.value
            row["e_baseline"] = item.baseline_error
            for axis, omega in item.trajectory.omegas.items():
                row[f"omega_{axis}"] = omega
            row["seed"] = self.seed
            row["config_hash"] = self.config_hash
            rows.append(row)
        return rows

    def summary(self) -> dict:
        checked = sum(len(item.certificates) for item in self.trajectories)
        return {
            "trajectories": len(self.trajectories),
            "pairs_checked": checked,
            "bound_violations": [
                {"trajectory": item.trajectory.name, "source": name}
                for item in self.trajectories
                for name in item.violations()
            ],
            "false_positive_verdicts": [
                {"trajectory": item.trajectory.name, "source": name}
                for item in self.trajectories
                for name in item.false_positives()
            ],
            "positive_verdicts": {
                name: sum(
                    1
                    for item in self.trajectories
                    if name in item.certificates
                    and item.certificates[name].verdict is analysis.Verdict.positive
                )
                for name in self.source_names
            },
            "passed": self.passed,
            "seed": self.seed,
            "config_hash": self.config_hash,
        }


def _combined_error(errors: List[lti.SampledSignal]) -> float:
    return analysis.combine_axis_bounds([lti.l2_norm(error) for error in errors])


def _e_stars_from_file(estimates: dict, catalog: Catalog) -> Dict[str, Dict[str, float]]:
    """
    Per-axis estimates by source name, checking they were produced for this catalog.

    Raises:
        ValueError: on a mismatch between the estimates and the catalog
    """
    problems = []
    if estimates.get("target") != catalog.target_name:
        problems.append(
            f"estimates were produced for target '{estimates.get('target')}'"
            f" but the catalog target is '{catalog.target_name}'"
        )
    if estimates.get("sources") != catalog.source_names:
        problems.append(
            f"estimates sources {estimates.get('sources')} differ from catalog sources"
            f" {catalog.source_names}"
        )
    if sorted(estimates.get("axes", {})) != sorted(catalog.axes):
        problems.append(
            f"estimates axes {sorted(estimates.get('axes', {}))} differ from catalog axes"
            f" {list(catalog.axes)}"
        )
    if problems:
        raise ValueError("estimate/catalog mismatch: " + "; ".join(problems))

    e_stars: Dict[str, Dict[str, float]] = {}
    for axis, content in estimates["axes"].items():
        if not content["converged"]:
            LOGGER.warning(f"axis {axis} estimates come from a campaign that did not converge")
        for item in content["estimates"]:
            e_stars.setdefault(item["source"], {})[axis] = float(item["e_star"])
    return e_stars


def verify(
    catalog: Catalog,
    e_stars: Dict[str, Dict[str, float]],
    suite: List[Trajectory],
    safety_margin: float = 1.0,
    seed: int = 0,
    config_hash: str = "",
    probe_window: Optional[Tuple[float, float]] = None,
) -> VerifyResult:
    """
    Simulate every trajectory on the target, alone and with each source inverse, and
    compare the actual tracking errors against the certified bounds.

    Sources lacking an estimate on some axis are skipped.
    """
    verifiable = []
    for name in catalog.source_names:
        missing = [axis for axis in catalog.axes if axis not in e_stars.get(name, {})]
        if missing:
            LOGGER.warning(f"skipping source {name}: no estimate on axes {missing}")
            continue
        verifiable.append(name)

    verifications = []
    for trajectory in suite:
        if probe_window:
            outside = [
                axis
                for axis, omega in trajectory.omegas.items()
                if not probe_window[0] <= omega <= probe_window[1]
            ]
            if outside:
                LOGGER.warning(
                    f"{trajectory.name}: frequencies of axes {outside} are outside the"
                    f" probed window {probe_window}, the bounds don't cover them"
                )
        signals = trajectory.signals()
        baseline = [
            lti.simulate(catalog.target[axis], signals[axis]) - signals[axis]
            for axis in catalog.axes
        ]
        baseline_error = _combined_error(baseline)

        actual_errors = {}
        certificates = {}
        for name in verifiable:
            transferred = [
                analysis.tracking_errors(
                    target=catalog.target[axis],
                    source=catalog.systems[name][axis],
                    yd=signals[axis],
                )[0]
                for axis in catalog.axes
            ]
            actual_errors[name] = _combined_error(transferred)
            certificates[name] = analysis.verdict(
                e_stars=e_stars[name],
                yd=signals,
                baseline_error=baseline_error,
                source_name=name,
                safety_margin=safety_margin,
            )
        verification = TrajectoryVerification(
            trajectory=trajectory,
            baseline_error=baseline_error,
            actual_errors=actual_errors,
            certificates=certificates,
        )
        for name in verification.violations():
            LOGGER.error(
                f"{trajectory.name}: bound violated for {name}: e={actual_errors[name]:.6g}"
                f" > e*={certificates[name].combined_bound:.6g}"
            )
        verifications.append(verification)

    return VerifyResult(
        source_names=verifiable,
        seed=seed,
        config_hash=config_hash,
        trajectories=verifications,
    )


def cmd_verify(
    catalog_path: Optional[Path],
    estimates_path: Path,
    suite_path: Optional[Path],
    seed: int,
    out_dir: Path,
    config_path: Optional[Path] = None,
) -> VerifyResult:
    """
    Check the estimated bounds on a trajectory suite and write the artifacts.

    Outputs, relative to ``out_dir``: ``verification.csv`` (one row per trajectory),
    ``certificates.json`` and ``summary.json``.

    Raises:
        CatalogError: if the catalog is invalid
        ValueError: if the estimates were not produced for this catalog
    """
    catalog = load_catalog(catalog_path) if catalog_path else _default_catalog()
    config = load_config(config_path)
    estimates = read_json(estimates_path)
    e_stars = _e_stars_from_file(estimates, catalog)
    if estimates.get("config_hash") != config.hash:
        LOGGER.warning(
            f"estimates were produced with config {estimates.get('config_hash')},"
            f" verifying with config {config.hash}"
        )
    window = (config.probe.omega_min, config.probe.omega_max)
    suite = load_suite(suite_path, axes=catalog.axes, seed=seed, window=window)
    result = verify(
        catalog,
        e_stars,
        suite,
        safety_margin=config.safety_margin,
        seed=seed,
        config_hash=config.hash,
        probe_window=window,
    )

    out_dir = Path(out_dir)
    write_csv(result.table_rows(), out_dir / VERIFICATION_CSV, columns=result.columns())
    write_json(
        {
            item.trajectory.name: {
                "baseline_error": item.baseline_error,
                "certificates": [
                    {**certificate.to_dict(), "actual_error": item.actual_errors[name]}
                    for name, certificate in item.certificates.items()
                ],
            }
            for item in result.trajectories
        },
        out_dir / CERTIFICATES_JSON,
    )
    write_json(result.summary(), out_dir / SUMMARY_JSON)
    LOGGER.info(
        f"verified {len(result.trajectories)} trajectories:"
        f" {result.violation_count} violations"
    )
    return result


@dataclasses.dataclass
class DirectionOutcome:
    """
    Outcome of transferring the inverse of ``source_name`` to ``target_name``.
    """

    target_name: str
    source_name: str
    transfer_error: float
    baseline_error: float
    reference_amplification: float

    @property
    def error_ratio(self) -> float:
        if self.baseline_error == 0:
            return 0.0 if self.transfer_error == 0 else math.inf
        return self.transfer_error / self.baseline_error

    @property
    def positive(self) -> bool:
        return self.transfer_error < self.baseline_error

    def to_dict(self) -> dict:
        return {
            "target": self.target_name,
            "source": self.source_name,
            "transfer_error": self.transfer_error,
            "baseline_error": self.baseline_error,
            "error_ratio": self.error_ratio,
            "positive_transfer": self.positive,
            "reference_amplification": self.reference_amplification,
        }


@dataclasses.dataclass
class AsymmetryResult:
    axis: str
    pair: Tuple[str, str]
    report: analysis.AsymmetryReport
    directions: List[DirectionOutcome]

    def to_dict(self) -> dict:
        return {
            "axis": self.axis,
            "pair": list(self.pair),
            "nu_gap": self.report.nu_gap,
            "winding_condition_ok": self.report.winding_condition_ok,
            "directions": [direction.to_dict() for direction in self.directions],
        }


def _direction(
    catalog: Catalog,
    target_name: str,
    source_name: str,
    axis: str,
    yd: lti.SampledSignal,
) -> Optional[DirectionOutcome]:
    target = catalog.systems[target_name][axis]
    source = catalog.systems[source_name][axis]
    if lti.relative_degree(target) < lti.relative_degree(source):
        LOGGER.warning(
            f"{source_name} -> {target_name} on {axis} is an improper composition, skipped"
        )
        return None
    transferred, baseline = analysis.tracking_errors(target=target, source=source, yd=yd)
    return DirectionOutcome(
        target_name=target_name,
        source_name=source_name,
        transfer_error=lti.l2_norm(transferred),
        baseline_error=lti.l2_norm(baseline),
        reference_amplification=analysis.reference_amplification(source, yd),
    )


def asymmetry(
    catalog: Catalog,
    pair: Tuple[str, str],
    axis: str,
    grid: np.ndarray,
    demo_omega: float = 1.0,
    demo_amplitude: float = 0.25,
    demo_periods: int = 10,
    sample_period: float = 0.005,
) -> AsymmetryResult:
    """
    Decompose the error of transferring the inverse of ``pair[1]`` to ``pair[0]``
    and simulate the transfer both ways on a sinusoid.

    The simulation is run even when the nu-gap validity condition fails.
    """
    first, second = pair
    for name in pair:
        if name not in catalog.systems:
            raise ValueError(f"unknown system '{name}', expected one of {list(catalog.systems)}")
    if axis not in catalog.axes:
        raise ValueError(f"unknown axis '{axis}', expected one of {list(catalog.axes)}")

    report = analysis.nu_gap_report(
        catalog.systems[first][axis], catalog.systems[second][axis], grid
    )
    yd = lti.SampledSignal.sinusoid(
        amplitude=demo_amplitude,
        omega=demo_omega,
        duration=demo_periods * 2 * math.pi / demo_omega,
        sample_period=sample_period,
    )
    directions = [
        _direction(catalog, first, second, axis, yd),
        _direction(catalog, second, first, axis, yd),
    ]
    directions = [direction for direction in directions if direction is not None]
    for direction in directions:
        LOGGER.info(
            f"{direction.source_name} -> {direction.target_name}: error ratio"
            f" {direction.error_ratio:.3f} vs baseline"
        )
    return AsymmetryResult(axis=axis, pair=(first, second), report=report, directions=directions)


def cmd_asymmetry(
    catalog_path: Optional[Path],
    pair: Tuple[str, str],
    out_dir: Path,
    axis: str = "x",
    grid_size: int = 1000,
    config_path: Optional[Path] = None,
    demo_omega: float = 1.0,
) -> AsymmetryResult:
    """
    Write ``asymmetry_curves.csv`` and ``asymmetry.json`` for a pair of catalog systems.

    The frequency grid spans the probe window of the config.
    """
    catalog = load_catalog(catalog_path) if catalog_path else _default_catalog()
    config = load_config(config_path)
    grid = log_window_grid(config.probe.omega_min, config.probe.omega_max, grid_size)
    result = asymmetry(catalog, pair, axis, grid, demo_omega=demo_omega)

    out_dir = Path(out_dir)
    write_csv(
        result.report.to_rows(),
        out_dir / ASYMMETRY_CSV,
        columns=["omega", "psi", "Psi", "error_mag"],
    )
    write_json({**result.to_dict(), "config_hash": config.hash}, out_dir / ASYMMETRY_JSON)
    return result


def oracle(
    catalog: Catalog,
    omega_min: float,
    omega_max: float,
    grid_size: int,
) -> Dict[str, Dict[str, float]]:
    """
    Brute-force ``max |E(j omega)|`` on a log-spaced grid, by axis then source name.

    Incompatible pairs are left out.
    """
    grid = log_window_grid(omega_min, omega_max, grid_size)
    values: Dict[str, Dict[str, float]] = {}
    for axis in catalog.axes:
        values[axis] = {}
        for name, source in catalog.compatible_sources(axis).items():
            error = lti.error_tf(source, catalog.target[axis])
            values[axis][name] = float(np.max(np.abs(lti.frequency_sweep(error, grid))))
    return values


def cmd_oracle(
    catalog_path: Optional[Path],
    out_dir: Path,
    grid_size: Optional[int] = None,
    config_path: Optional[Path] = None,
) -> Dict[str, Dict[str, float]]:
    """
    Write ``oracle.csv``, laid out like ``estimates.csv``, from the analytic
    error transfer functions.
    """
    catalog = load_catalog(catalog_path) if catalog_path else _default_catalog()
    config = override_config(load_config(config_path), oracle_grid_size=grid_size)
    values = oracle(
        catalog,
        config.probe.omega_min,
        config.probe.omega_max,
        config.oracle_grid_size,
    )
    rows = [
        {
            "axis": axis,
            **{name: by_source.get(name) for name in catalog.source_names},
            "grid_size": config.oracle_grid_size,
            "config_hash": config.hash,
        }
        for axis, by_source in values.items()
    ]
    columns = ["axis"] + catalog.source_names + ["grid_size", "config_hash"]
    write_csv(rows, Path(out_dir) / ORACLE_CSV, columns=columns)
    return values


def cmd_init(out_dir: Path, force: bool = False) -> List[Path]:
    """
    Write the default ``catalog.json``, ``config.json`` and ``suite.json`` to edit.

    Raises:
        FileExistsError: if a file already exists and ``force`` is False
    """
    out_dir = Path(out_dir)
    paths = [out_dir / "catalog.json", out_dir / "config.json", out_dir / "suite.json"]
    existing = [path for path in paths if path.exists()]
    if existing and not force:
        raise FileExistsError(f"refusing to overwrite existing files {existing}")

    out_dir.mkdir(parents=True, exist_ok=True)
    write_catalog(default_catalog(), paths[0])
    write_config(CampaignConfig(), paths[1])
    write_json(SuiteFile().model_dump(mode="json"), paths[2])
    for path in paths:
        LOGGER.info(f"wrote {path}")
    return paths
