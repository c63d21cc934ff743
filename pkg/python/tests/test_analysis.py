import math

import numpy as np
import pytest

from transferbound import analysis
from transferbound import lti
from transferbound.lti import RationalTransferFunction


def _sinusoid(omega=1.0, amplitude=0.25, periods=4, sample_period=0.005):
    return lti.SampledSignal.sinusoid(
        amplitude, omega, duration=periods * 2 * math.pi / omega, sample_period=sample_period
    )


def test__tracking_error_bound():
    yd = lti.SampledSignal.constant(1.0, duration=4.0, sample_period=0.01)
    assert analysis.tracking_error_bound(0.5, yd) == pytest.approx(1.0)
    assert analysis.tracking_error_bound(0.0, yd) == 0.0
    with pytest.raises(ValueError):
        analysis.tracking_error_bound(-0.1, yd)


def test__combine_axis_bounds():
    assert analysis.combine_axis_bounds([3.0, 4.0]) == pytest.approx(5.0)
    assert analysis.combine_axis_bounds([]) == 0.0


def test__verdict():
    yd = {"x": _sinusoid(1.0), "y": _sinusoid(2.0)}
    certificate = analysis.verdict({"x": 0.1, "y": 0.2}, yd, baseline_error=10.0, source_name="Rs1")
    assert certificate.verdict is analysis.Verdict.positive
    assert [axis.axis for axis in certificate.per_axis] == ["x", "y"]
    expected = math.hypot(0.1 * lti.l2_norm(yd["x"]), 0.2 * lti.l2_norm(yd["y"]))
    assert certificate.combined_bound == pytest.approx(expected)

    content = certificate.to_dict()
    assert content["verdict"] == "Positive"
    assert content["source"] == "Rs1"

    strict = analysis.verdict({"x": 0.1, "y": 0.2}, yd, baseline_error=expected)
    assert strict.verdict is analysis.Verdict.not_guaranteed

    conservative = analysis.verdict(
        {"x": 0.1, "y": 0.2}, yd, baseline_error=1.5 * expected, safety_margin=2.0
    )
    assert conservative.verdict is analysis.Verdict.not_guaranteed

    with pytest.raises(ValueError):
        analysis.verdict({"x": 0.1}, yd, baseline_error=1.0)
    with pytest.raises(ValueError):
        analysis.verdict({"x": -0.1, "y": 0.1}, yd, baseline_error=1.0)


def test__verdict__zero_trajectory():
    yd = {"x": lti.SampledSignal.constant(0.0, duration=2.0, sample_period=0.01)}
    certificate = analysis.verdict({"x": 0.3}, yd, baseline_error=0.0)
    assert certificate.combined_bound == 0.0
    assert certificate.verdict is analysis.Verdict.not_guaranteed


def test__tracking_errors__self_transfer():
    g = RationalTransferFunction((1.0,), (0.05, 0.45, 1.0))
    transfer, baseline = analysis.tracking_errors(g, g, _sinusoid())
    assert lti.l2_norm(transfer) == pytest.approx(0.0, abs=1e-12)
    assert lti.l2_norm(baseline) > 0.0

    with pytest.raises(lti.ImproperSystemError):
        analysis.tracking_errors(RationalTransferFunction.first_order(1.0), g, _sinusoid())


def test__first_order_transfer_error__exact_ratio():
    rng = np.random.default_rng(12)
    yd = _sinusoid(omega=1.3)
    for tau_source, tau_target in rng.uniform(0.2, 2.0, size=(20, 2)):
        transfer, baseline = analysis.first_order_transfer_error(tau_source, tau_target, yd)
        ratio = lti.l2_norm(transfer) / lti.l2_norm(baseline)
        assert ratio == pytest.approx(abs(1 - tau_source / tau_target), rel=1e-2, abs=1e-9)


def test__first_order_transfer_error__classification():
    yd = _sinusoid(omega=1.0, periods=2, sample_period=0.01)
    taus = np.linspace(0.2, 2.0, 10)
    step = taus[1] - taus[0]
    for tau_target in taus:
        for tau_source in taus:
            if abs(tau_source - 2 * tau_target) <= step:
                continue
            transfer, baseline = analysis.first_order_transfer_error(tau_source, tau_target, yd)
            positive = lti.l2_norm(transfer) < lti.l2_norm(baseline)
            assert positive == (tau_source < 2 * tau_target)

    with pytest.raises(ValueError):
        analysis.first_order_transfer_error(0.0, 1.0, yd)


def test__reference_amplification():
    slow = RationalTransferFunction((1.0,), np.polymul([1.0, 1.0], [1.25, 1.0]))
    agile = RationalTransferFunction((1.0,), (0.05, 0.45, 1.0))
    yd = _sinusoid(omega=1.0, periods=10)
    assert analysis.reference_amplification(slow, yd) > 1.0
    assert analysis.reference_amplification(agile, yd) == pytest.approx(1.0, abs=0.1)


def test__chordal_distance():
    assert analysis.chordal_distance(np.array([1.0]), np.array([1.0]))[0] == 0.0
    # opposite points of the sphere
    assert analysis.chordal_distance(np.array([0.0]), np.array([1e12]))[0] == pytest.approx(1.0)


def _random_stable_minimum_phase(rng) -> RationalTransferFunction:
    poles = rng.uniform(0.2, 5.0, size=2)
    zero = rng.uniform(0.2, 5.0)
    gain = rng.uniform(0.5, 2.0)
    return RationalTransferFunction(gain * np.array([1.0, zero]), np.poly(-poles))


def test__nu_gap_report__decomposition_identity():
    rng = np.random.default_rng(5)
    grid = np.logspace(-2, 2, 1000)
    for _ in range(10):
        g1 = _random_stable_minimum_phase(rng)
        g2 = _random_stable_minimum_phase(rng)
        report = analysis.nu_gap_report(g1, g2, grid)
        product = report.chordal * report.asym_factor
        assert np.max(np.abs(report.error_mag - product)) <= 1e-9

        swapped = analysis.nu_gap_report(g2, g1, grid)
        assert np.max(np.abs(report.chordal - swapped.chordal)) <= 1e-12
        assert 0.0 <= report.nu_gap <= 1.0


def test__nu_gap_report__rows_and_errors():
    g = RationalTransferFunction.first_order(1.0)
    report = analysis.nu_gap_report(g, g, np.array([0.1, 1.0]))
    assert report.nu_gap == 0.0
    assert report.winding_condition_ok
    rows = report.to_rows()
    assert list(rows[0]) == ["omega", "psi", "Psi", "error_mag"]

    with pytest.raises(ValueError):
        analysis.nu_gap_report(RationalTransferFunction((1.0,), (1.0, -1.0)), g, np.array([1.0]))
    with pytest.raises(ValueError):
        analysis.nu_gap_report(g, RationalTransferFunction((-1.0, 1.0), (1.0, 2.0, 1.0)), np.array([1.0]))


def test__nu_gap_report__winding_condition():
    large = RationalTransferFunction.first_order(1.0, gain=3.0)
    report = analysis.nu_gap_report(large, large, np.array([0.1, 1.0]))
    assert not report.winding_condition_ok
