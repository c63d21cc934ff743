import cmath
import math

import numpy as np
import pytest

from transferbound import lti
from transferbound import probing
from transferbound.lti import RationalTransferFunction


def test__ProbeConfig():
    cfg = probing.ProbeConfig()
    assert cfg.contains(0.1) and cfg.contains(10.0)
    assert not cfg.contains(10.5)
    # 500 samples per period at high frequency
    assert cfg.step_for(10.0) == pytest.approx(2 * math.pi / 10.0 / 500)
    assert cfg.step_for(0.1) == cfg.sample_period

    settle, measure = cfg.schedule_for(1.0)
    period = 2 * math.pi
    assert settle >= cfg.min_settle_time
    assert settle / period == pytest.approx(round(settle / period))
    assert measure == pytest.approx(3 * period)

    with pytest.raises(ValueError):
        probing.ProbeConfig(omega_min=1.0, omega_max=1.0)
    with pytest.raises(ValueError):
        probing.ProbeConfig(settle_periods=2)
    with pytest.raises(ValueError):
        probing.ProbeConfig(measure_periods=1)


@pytest.mark.parametrize("omega", [0.1, 1.0, 7.0])
def test__probe_system__noiseless(omega):
    g = RationalTransferFunction((1.0,), (0.05, 0.45, 1.0))
    point = probing.probe_system(g, omega, probing.ProbeConfig())
    expected = lti.freq_response(g, omega)
    assert point.omega == omega
    assert point.magnitude == pytest.approx(abs(expected), rel=1e-3)
    assert point.phase == pytest.approx(cmath.phase(expected), abs=1e-2)


def test__probe_system__noise_is_seeded():
    g = RationalTransferFunction.first_order(0.5)
    cfg = probing.ProbeConfig(noise_std=0.01)
    first = probing.probe_system(g, 1.0, cfg, rng=np.random.default_rng(4))
    second = probing.probe_system(g, 1.0, cfg, rng=np.random.default_rng(4))
    assert first == second
    assert first.magnitude == pytest.approx(abs(lti.freq_response(g, 1.0)), rel=2e-2)

    with pytest.raises(ValueError):
        probing.probe_system(g, 1.0, cfg)


def test__probe_system__errors():
    cfg = probing.ProbeConfig()
    with pytest.raises(ValueError):
        probing.probe_system(RationalTransferFunction.first_order(1.0), 20.0, cfg)
    with pytest.raises(lti.UnstableSystemError):
        probing.probe_system(RationalTransferFunction((1.0,), (1.0, -0.5)), 1.0, cfg)


def test__estimate_inverse_response():
    point = lti.FrequencyPoint(2.0, cmath.rect(0.5, -0.3))
    inverse = probing.estimate_inverse_response(point)
    assert inverse.magnitude == pytest.approx(2.0)
    assert inverse.phase == pytest.approx(0.3)
    assert inverse.response * point.response == pytest.approx(1.0)

    with pytest.raises(ValueError):
        probing.estimate_inverse_response(lti.FrequencyPoint(2.0, 0j))


def test__evaluate_objective():
    target = lti.FrequencyPoint(1.0, 0.5 - 0.5j)
    same = lti.FrequencyPoint(1.0, 0.5 - 0.5j)
    other = lti.FrequencyPoint(1.0, 1.0 + 0j)
    values = probing.evaluate_objective([same, other], target)
    assert values[0] == pytest.approx(0.0, abs=1e-15)
    assert values[1] == pytest.approx(abs(0.5 - 0.5j - 1.0))

    with pytest.raises(ValueError):
        probing.evaluate_objective([lti.FrequencyPoint(2.0, 1.0)], target)


def test__probe_pair():
    target = RationalTransferFunction.first_order(1.0)
    sources = {
        "self": RationalTransferFunction.first_order(1.0),
        "agile": RationalTransferFunction.first_order(0.5),
    }
    cfg = probing.ProbeConfig()
    result = probing.probe_pair(target, sources, 2.0, cfg)

    assert list(result.objective_values) == ["self", "agile"]
    assert result.objective_values["self"] == pytest.approx(0.0, abs=1e-9)
    expected = abs(lti.freq_response(lti.error_tf(sources["agile"], target), 2.0))
    assert result.objective_values["agile"] == pytest.approx(expected, rel=1e-3)
    assert result.probe_time == pytest.approx(3 * probing.probe_duration(2.0, cfg))

    rows = result.to_rows(target_name="Rt")
    assert [row["source_name"] for row in rows] == ["Rt", "self", "agile"]
    assert rows[0]["objective_value"] == ""
    assert set(rows[1]) == {"omega", "source_name", "M", "theta", "objective_value"}


def test__probe_system__reported_variance():
    g = RationalTransferFunction.first_order(0.5)
    exact = probing.probe_system(g, 2.0, probing.ProbeConfig())
    assert exact.variance == 0.0

    cfg = probing.ProbeConfig(noise_std=0.02)
    expected = abs(lti.freq_response(g, 2.0))
    points = [
        probing.probe_system(g, 2.0, cfg, rng=np.random.default_rng(seed)) for seed in range(200)
    ]
    reported = points[0].variance
    assert all(point.variance == pytest.approx(reported) for point in points)
    # sin and cos are nearly orthogonal over whole periods: var(a) ~ 2 sigma^2 / N
    _, measure = cfg.schedule_for(2.0)
    samples = measure / cfg.step_for(2.0)
    assert reported == pytest.approx(2 * 0.02**2 / samples / 0.25**2, rel=0.05)

    real_parts = np.array([point.response.real for point in points])
    assert np.var(real_parts) == pytest.approx(reported, rel=0.3)
    assert np.mean([point.magnitude for point in points]) == pytest.approx(expected, rel=2e-3)


def test__objective_variance():
    source = lti.FrequencyPoint(1.0, 0.5 - 0.5j, variance=1e-4)
    target = lti.FrequencyPoint(1.0, 0.8 + 0.0j, variance=4e-4)
    ratio = abs(target.response / source.response)
    expected = (4e-4 + ratio**2 * 1e-4) / abs(source.response) ** 2
    assert probing.objective_variance(source, target) == pytest.approx(expected)
    assert probing.objective_variance(lti.FrequencyPoint(1.0, 1.0), target) == pytest.approx(4e-4)

    inverse = probing.estimate_inverse_response(source)
    assert inverse.variance == pytest.approx(1e-4 / 0.5**2)

    noisy = probing.probe_pair(
        RationalTransferFunction.first_order(1.0),
        {"agile": RationalTransferFunction.first_order(0.5)},
        3.0,
        probing.ProbeConfig(noise_std=0.01),
        rng=np.random.default_rng(0),
    )
    assert noisy.objective_variances["agile"] > 0.0
    with pytest.raises(ValueError):
        probing.objective_variance(lti.FrequencyPoint(1.0, 0j), target)


def test__evaluate_objective__matches_error_transfer_function():
    rng = np.random.default_rng(21)
    for _ in range(10):
        source = RationalTransferFunction((1.0,), np.poly(-rng.uniform(0.2, 5.0, size=2)))
        target = RationalTransferFunction((1.0,), np.poly(-rng.uniform(0.2, 5.0, size=2)))
        for omega in np.logspace(-1, 1, 7):
            points = [lti.FrequencyPoint(omega, lti.freq_response(source, omega))]
            target_point = lti.FrequencyPoint(omega, lti.freq_response(target, omega))
            (value,) = probing.evaluate_objective(points, target_point)
            expected = abs(lti.freq_response(lti.error_tf(source, target), omega))
            assert value == pytest.approx(expected, abs=1e-9)


def test__estimate_inverse_response__involution():
    rng = np.random.default_rng(8)
    for magnitude, phase in zip(rng.uniform(0.05, 20.0, 50), rng.uniform(-3.0, 3.0, 50)):
        point = lti.FrequencyPoint(1.5, cmath.rect(magnitude, phase), variance=1e-6)
        twice = probing.estimate_inverse_response(probing.estimate_inverse_response(point))
        assert abs(twice.response - point.response) <= 1e-12 * max(1.0, magnitude)
        assert twice.variance == pytest.approx(point.variance)
