import json
import math

import numpy as np
import pydantic
import pytest

from transferbound import gaussianprocess
from transferbound import harness
from transferbound import lti
from transferbound.cli import EXIT_INVALID_INPUT
from transferbound.cli import EXIT_NOT_CONVERGED
from transferbound.cli import EXIT_NUMERICAL_FAILURE
from transferbound.cli import EXIT_OK
from transferbound.cli import main
from transferbound.harness import _records


def test__load_catalog(data_root_dir):
    catalog = harness.load_catalog(data_root_dir / "catalogs" / "tau_pair.json")
    assert catalog.target_name == "slow"
    assert catalog.source_names == ["agile"]
    assert catalog.axes == ("x", "y", "z")
    assert catalog.target["x"] == lti.RationalTransferFunction.first_order(1.0)
    assert catalog.compatibility() == {"agile": {"x": True, "y": True, "z": True}}


def test__load_catalog__lists_every_problem(data_root_dir):
    with pytest.raises(harness.CatalogError) as error:
        harness.load_catalog(data_root_dir / "catalogs" / "invalid.json")
    problems = "\n".join(error.value.problems)
    assert "unstable[x]" in problems
    assert "nonminimum[x]" in problems
    assert "improper[x]" in problems
    assert "partial" in problems
    assert len(error.value.problems) >= 4


def test__load_catalog__schema_errors(tmp_path):
    path = tmp_path / "catalog.json"
    path.write_text(json.dumps({"target": "Rt", "systems": [{"name": "Rt", "axis": "w"}]}))
    with pytest.raises(harness.CatalogError) as error:
        harness.load_catalog(path)
    assert len(error.value.problems) >= 3


def test__default_catalog():
    catalog = harness.build_catalog(harness.default_catalog())
    assert catalog.source_names == ["Rs1", "Rs2", "Rs3", "Rs4", "Rs5"]
    assert catalog.axes == ("x", "y", "z")
    for axis in catalog.axes:
        assert len(catalog.compatible_sources(axis)) == 5
        for name in catalog.systems:
            assert lti.is_minimum_phase(catalog.systems[name][axis])


def test__default_catalog__oracle_ordering():
    catalog = harness.build_catalog(harness.default_catalog())
    values = harness.oracle(catalog, 0.1, 10.0, 2000)
    for axis, by_source in values.items():
        agile = max(by_source["Rs1"], by_source["Rs2"])
        slow = min(by_source["Rs3"], by_source["Rs4"], by_source["Rs5"])
        assert agile < slow, axis


def test__oracle__tau_pair(data_root_dir):
    catalog = harness.load_catalog(data_root_dir / "catalogs" / "tau_pair.json")
    values = harness.oracle(catalog, 0.1, 10.0, 10000)
    assert values["x"]["agile"] == pytest.approx(0.4975, abs=1e-3)

    reversed_catalog = harness.load_catalog(data_root_dir / "catalogs" / "tau_pair_reversed.json")
    values = harness.oracle(reversed_catalog, 0.1, 10.0, 10000)
    assert values["z"]["slow"] == pytest.approx(10 / (2 * math.sqrt(26)), abs=1e-3)


def test__oracle__self(data_root_dir):
    catalog = harness.load_catalog(data_root_dir / "catalogs" / "self.json")
    values = harness.oracle(catalog, 0.1, 10.0, 1000)
    assert all(by_source["Rt_copy"] == 0.0 for by_source in values.values())


def test__config(tmp_path):
    path = tmp_path / "config.json"
    path.write_text("{}")
    config = harness.load_config(path)
    assert config == harness.CampaignConfig()
    assert config.acquisition_grid_size == 512
    assert config.convergence.max_iterations == 40
    assert config.hash == harness.config_hash(harness.CampaignConfig())
    assert len(config.hash) == 16

    overridden = harness.override_config(config, max_iterations=10, oracle_grid_size=100)
    assert overridden.convergence.max_iterations == 10
    assert overridden.oracle_grid_size == 100
    assert overridden.hash != config.hash

    path.write_text(json.dumps({"probe": {"omega_min": 5.0, "omega_max": 1.0}}))
    with pytest.raises(pydantic.ValidationError):
        harness.load_config(path)
    path.write_text(json.dumps({"unknown": 1}))
    with pytest.raises(pydantic.ValidationError):
        harness.load_config(path)
    path.write_text(json.dumps({"safety_margin": 0.5}))
    with pytest.raises(pydantic.ValidationError):
        harness.load_config(path)


def test__random_suite():
    suite = harness.random_suite(("x", "y", "z"), count=5, seed=3)
    assert suite == harness.random_suite(("x", "y", "z"), count=5, seed=3)
    assert suite != harness.random_suite(("x", "y", "z"), count=5, seed=4)
    for trajectory in suite:
        slowest_period = 2 * math.pi / min(trajectory.omegas.values())
        assert trajectory.duration == pytest.approx(2 * slowest_period)
        for omega in trajectory.omegas.values():
            assert 0.1 < omega <= 2.0

    signals = suite[0].signals()
    assert set(signals) == {"x", "y", "z"}
    # the y axis is a cosine
    assert signals["y"].samples[0] == pytest.approx(0.25)
    assert signals["x"].samples[0] == 0.0


def test__load_suite(data_root_dir):
    suite = harness.load_suite(data_root_dir / "suite_explicit.json", ("x", "y", "z"), seed=0)
    assert [trajectory.name for trajectory in suite] == ["still", "slow_wave"]
    assert suite[1].omegas == {"x": 0.5, "y": 1.0, "z": 2.0}

    assert len(harness.load_suite(None, ("x", "y", "z"), seed=0)) == 5
    with pytest.raises(ValueError):
        harness.load_suite(data_root_dir / "suite_explicit.json", ("x", "y"), seed=0)


def test__load_suite__probe_window(data_root_dir, tmp_path):
    axes = ("x", "y", "z")
    for trajectory in harness.load_suite(None, axes, seed=0, window=(0.5, 1.5)):
        assert all(0.5 < omega <= 1.5 for omega in trajectory.omegas.values())

    explicit = data_root_dir / "suite_explicit.json"
    assert len(harness.load_suite(explicit, axes, seed=0, window=(0.1, 10.0))) == 2
    with pytest.raises(ValueError, match="outside the probe window"):
        harness.load_suite(explicit, axes, seed=0, window=(0.6, 10.0))

    disjoint = tmp_path / "suite.json"
    disjoint.write_text(json.dumps({"omega_min": 0.01, "omega_max": 0.05}))
    with pytest.raises(ValueError):
        harness.load_suite(disjoint, axes, seed=0, window=(0.1, 10.0))


def test__records(tmp_path):
    rows = [{"a": 1, "b": np.float64(0.1)}, {"a": 2, "c": True, "b": None}]
    _records.write_csv(rows, tmp_path / "table.csv")
    assert (tmp_path / "table.csv").read_text() == "a,b,c\n1,0.1,\n2,,true\n"
    assert _records.read_csv(tmp_path / "table.csv")[1] == {"a": "2", "b": "", "c": "true"}

    _records.write_jsonl(rows, tmp_path / "nested" / "records.jsonl")
    lines = (tmp_path / "nested" / "records.jsonl").read_text().splitlines()
    assert json.loads(lines[0]) == {"a": 1, "b": 0.1}

    _records.write_json({"values": np.array([1.0, 2.0])}, tmp_path / "content.json")
    assert _records.read_json(tmp_path / "content.json") == {"values": [1.0, 2.0]}


def _main(*args) -> int:
    return main(["--no-color", *map(str, args)])


def test__cli__estimate_self_transfer(data_root_dir, tmp_path):
    code = _main("estimate", "--catalog", data_root_dir / "catalogs" / "self.json", "--out-dir", tmp_path)
    assert code == EXIT_OK

    rows = _records.read_csv(tmp_path / "estimates.csv")
    assert [row["axis"] for row in rows] == ["x", "y", "z"]
    assert list(rows[0]) == [
        "axis",
        "Rt_copy",
        "iterations",
        "converged",
        "probe_time",
        "seed",
        "config_hash",
    ]
    for row in rows:
        assert float(row["Rt_copy"]) <= 0.05
        assert row["seed"] == "0"
        assert row["config_hash"] == harness.CampaignConfig().hash

    for axis in ("x", "y", "z"):
        assert (tmp_path / "transcripts" / f"{axis}.csv").exists()
        assert (tmp_path / "transcripts" / f"{axis}.jsonl").exists()
        assert (tmp_path / "probes" / f"{axis}.csv").exists()
        snapshot = _records.read_json(tmp_path / "gp" / f"{axis}.json")
        assert snapshot["Rt_copy"]["degenerate"]

    # self-transfer against any non-zero baseline error is positive
    code = _main(
        "verify",
        "--catalog",
        data_root_dir / "catalogs" / "self.json",
        "--estimates",
        tmp_path / "estimates.json",
        "--suite",
        data_root_dir / "suite_explicit.json",
        "--out-dir",
        tmp_path,
    )
    assert code == EXIT_OK
    rows = {row["trajectory"]: row for row in _records.read_csv(tmp_path / "verification.csv")}
    assert rows["slow_wave"]["verdict[Rt_copy]"] == "Positive"
    assert float(rows["slow_wave"]["e[Rt_copy]"]) == pytest.approx(0.0, abs=1e-12)
    # zero amplitude: nothing to gain, and the strict inequality refuses the guarantee
    assert float(rows["still"]["e_baseline"]) == 0.0
    assert float(rows["still"]["e*[Rt_copy]"]) == 0.0
    assert rows["still"]["verdict[Rt_copy]"] == "NotGuaranteed"


def test__cli__pipeline_is_deterministic(data_root_dir, tmp_path):
    catalog = data_root_dir / "catalogs" / "tau_pair.json"
    outputs = []
    for run in ("first", "second"):
        out_dir = tmp_path / run
        assert _main("estimate", "--catalog", catalog, "--seed", 4, "--out-dir", out_dir) == EXIT_OK
        code = _main(
            "verify",
            "--catalog",
            catalog,
            "--estimates",
            out_dir / "estimates.json",
            "--seed",
            4,
            "--out-dir",
            out_dir,
        )
        assert code == EXIT_OK
        outputs.append(out_dir)

    for name in ("estimates.csv", "verification.csv", "transcripts/x.csv", "summary.json"):
        assert (outputs[0] / name).read_bytes() == (outputs[1] / name).read_bytes()


def test__cli__estimate_with_jobs_matches_sequential(data_root_dir, tmp_path):
    catalog = data_root_dir / "catalogs" / "tau_pair.json"
    assert _main("estimate", "--catalog", catalog, "--out-dir", tmp_path / "a") == EXIT_OK
    assert _main("estimate", "--catalog", catalog, "--jobs", 3, "--out-dir", tmp_path / "b") == EXIT_OK
    first = (tmp_path / "a" / "estimates.csv").read_bytes()
    assert first == (tmp_path / "b" / "estimates.csv").read_bytes()


def test__cli__not_converged(data_root_dir, tmp_path):
    catalog = data_root_dir / "catalogs" / "tau_pair.json"
    code = _main("estimate", "--catalog", catalog, "--max-iters", 1, "--out-dir", tmp_path)
    assert code == EXIT_NOT_CONVERGED
    rows = _records.read_csv(tmp_path / "estimates.csv")
    assert all(row["converged"] == "false" for row in rows)


def test__cli__invalid_inputs(data_root_dir, tmp_path):
    code = _main("estimate", "--catalog", data_root_dir / "catalogs" / "invalid.json", "--out-dir", tmp_path)
    assert code == EXIT_INVALID_INPUT

    config = tmp_path / "config.json"
    config.write_text(json.dumps({"convergence": {"patience": 0}}))
    assert _main("oracle", "--config", config, "--out-dir", tmp_path) == EXIT_INVALID_INPUT

    # estimates produced for another catalog
    estimates = tmp_path / "estimates.json"
    estimates.write_text(json.dumps({"target": "slow", "sources": ["agile"], "axes": {}}))
    code = _main("verify", "--estimates", estimates, "--out-dir", tmp_path)
    assert code == EXIT_INVALID_INPUT


def test__cli__oracle(data_root_dir, tmp_path):
    catalog = data_root_dir / "catalogs" / "tau_pair.json"
    assert _main("oracle", "--catalog", catalog, "--grid-size", 10000, "--out-dir", tmp_path) == EXIT_OK
    rows = _records.read_csv(tmp_path / "oracle.csv")
    assert [row["axis"] for row in rows] == ["x", "y", "z"]
    assert float(rows[0]["agile"]) == pytest.approx(0.4975, abs=1e-3)
    assert rows[0]["grid_size"] == "10000"


def _tau_catalog(tmp_path, tau_agile: float, tau_slow: float):
    systems = []
    for name, tau in (("agile", tau_agile), ("slow", tau_slow)):
        for axis in ("x", "y", "z"):
            systems.append(
                harness.SystemEntry(name=name, axis=axis, numerator=[1.0], denominator=[tau, 1.0])
            )
    path = tmp_path / "catalog.json"
    harness.write_catalog(harness.CatalogFile(target="agile", systems=systems), path)
    return path


def test__asymmetry__first_order_pair(tmp_path):
    catalog = harness.load_catalog(_tau_catalog(tmp_path, tau_agile=0.4, tau_slow=1.0))
    result = harness.asymmetry(catalog, ("agile", "slow"), "x", np.logspace(-1, 1, 200))

    slow_on_agile, agile_on_slow = result.directions
    assert (slow_on_agile.target_name, slow_on_agile.source_name) == ("agile", "slow")
    # tau_slow = 1 >= 2 * 0.4: the slow inverse makes the agile system worse
    assert not slow_on_agile.positive
    assert slow_on_agile.error_ratio == pytest.approx(1.5, rel=1e-2)
    assert agile_on_slow.positive
    assert agile_on_slow.error_ratio == pytest.approx(0.6, rel=1e-2)
    # the slow inverse amplifies the reference, the agile one much less
    assert slow_on_agile.reference_amplification > agile_on_slow.reference_amplification
    assert slow_on_agile.reference_amplification > 1.0

    identity = result.report.chordal * result.report.asym_factor
    assert identity == pytest.approx(result.report.error_mag, abs=1e-9)


def test__asymmetry__identical_pair(data_root_dir):
    catalog = harness.load_catalog(data_root_dir / "catalogs" / "self.json")
    result = harness.asymmetry(catalog, ("Rt", "Rt_copy"), "z", np.logspace(-1, 1, 50))
    assert result.report.nu_gap == 0.0
    for direction in result.directions:
        assert direction.transfer_error == pytest.approx(0.0, abs=1e-12)

    with pytest.raises(ValueError):
        harness.asymmetry(catalog, ("Rt", "unknown"), "z", np.logspace(-1, 1, 50))


def test__cli__asymmetry(tmp_path):
    catalog = _tau_catalog(tmp_path, tau_agile=0.4, tau_slow=1.0)
    code = _main("asymmetry", "agile", "slow", "--catalog", catalog, "--grid-size", 100, "--out-dir", tmp_path)
    assert code == EXIT_OK
    rows = _records.read_csv(tmp_path / "asymmetry_curves.csv")
    assert len(rows) == 100
    assert list(rows[0]) == ["omega", "psi", "Psi", "error_mag"]
    content = _records.read_json(tmp_path / "asymmetry.json")
    assert content["pair"] == ["agile", "slow"]
    assert [d["positive_transfer"] for d in content["directions"]] == [False, True]


def test__cli__init(tmp_path):
    assert _main("init", "--out-dir", tmp_path) == EXIT_OK
    catalog = harness.load_catalog(tmp_path / "catalog.json")
    assert catalog.source_names == ["Rs1", "Rs2", "Rs3", "Rs4", "Rs5"]
    assert harness.load_config(tmp_path / "config.json") == harness.CampaignConfig()
    assert len(harness.load_suite(tmp_path / "suite.json", catalog.axes, seed=1)) == 5

    assert _main("init", "--out-dir", tmp_path) == EXIT_INVALID_INPUT
    assert _main("init", "--out-dir", tmp_path, "--force") == EXIT_OK


def test__default_pipeline__bounds_hold(tmp_path):
    """
    The whole fleet on five random trajectories: no bound is violated and the
    sources close to the target are certified positive on every trajectory.
    """
    assert _main("estimate", "--seed", 0, "--out-dir", tmp_path) == EXIT_OK
    code = _main("verify", "--estimates", tmp_path / "estimates.json", "--out-dir", tmp_path)
    assert code == EXIT_OK

    summary = _records.read_json(tmp_path / "summary.json")
    assert summary["bound_violations"] == []
    assert summary["pairs_checked"] == 25
    assert summary["positive_verdicts"]["Rs1"] == 5
    assert summary["positive_verdicts"]["Rs2"] == 5

    estimates = {row["axis"]: row for row in _records.read_csv(tmp_path / "estimates.csv")}
    for row in estimates.values():
        agile = max(float(row["Rs1"]), float(row["Rs2"]))
        assert all(agile < float(row[name]) for name in ("Rs3", "Rs4", "Rs5"))


@pytest.mark.parametrize(
    "error",
    [
        gaussianprocess.GramMatrixError("gram matrix not positive definite"),
        lti.RootFindingError("eigenvalues did not converge"),
    ],
)
def test__cli__numerical_failure(monkeypatch, tmp_path, error):
    def _fail(**kwargs):
        raise error

    monkeypatch.setattr(harness, "cmd_oracle", _fail)
    assert _main("oracle", "--out-dir", tmp_path) == EXIT_NUMERICAL_FAILURE
