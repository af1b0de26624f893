import json

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, strategies as st

from spikeft import evaluate
from spikeft.encoding import EncoderConfig
from spikeft.errors import CapacityError, DomainError
from spikeft.network import build_dense, build_sdft, build_sfft, run_plan
from spikeft.quantize import QuantSpec, quantize_plan, quantize_weight, smallest_exponent

SPEC = QuantSpec()
CFG = EncoderConfig(1.0, 257)


def test_spec_ranges():
    assert (SPEC.mantissa_min, SPEC.mantissa_max) == (-256, 255)
    assert (SPEC.exponent_min, SPEC.exponent_max) == (-8, 7)
    assert SPEC.max_threshold == 2 ** 23 - 64
    assert SPEC.current_quantum == 64


def test_zero_weight():
    assert quantize_weight(0.0, SPEC, 3) == (0.0, 0, 3)


def test_unit_weight_even_mantissa():
    assert quantize_weight(1.0, SPEC, -7) == (1.0, 128, -7)


def test_even_rule_above_half_range():
    q, m, _ = quantize_weight(129 * 2.0 ** -7, SPEC, -7)
    assert m % 2 == 0
    q, m, _ = quantize_weight(101 * 2.0 ** -7, SPEC, -7)
    assert m == 101


def test_saturation():
    assert quantize_weight(1e9, SPEC, 0)[1] == 254  # largest even mantissa
    assert quantize_weight(-1e9, SPEC, 0)[1] == -256


def test_exponent_range_checked():
    with pytest.raises(DomainError):
        quantize_weight(1.0, SPEC, 8)


@given(st.floats(-2, 2))
def test_weight_error_bound(w):
    exp = smallest_exponent(abs(w), SPEC)
    q, m, e = quantize_weight(w, SPEC, exp)
    limit = 2.0 ** (e + 1) if abs(m) > SPEC.half_range else 2.0 ** e
    assert abs(w - q) <= limit
    assert q == m * 2.0 ** e
    assert SPEC.mantissa_min <= m <= SPEC.mantissa_max


def test_unit_weights_exact():
    qplan, report = quantize_plan(build_sfft(4, CFG))
    assert report.layers[0].exponent == -7
    assert report.max_weight_error == 0.0


def test_identity_plan_unchanged(rng):
    plan = build_dense(np.eye(8), CFG)
    qplan, report = quantize_plan(plan)
    assert report.max_weight_error == 0
    x = rng.uniform(-1, 1, (20, 4)) + 1j * rng.uniform(-1, 1, (20, 4))
    np.testing.assert_array_equal(run_plan(qplan, x).spectrum, run_plan(plan, x).spectrum)


def representable(qplan, report):
    for layer, lr in zip(qplan.layers, report.layers):
        w = layer.weights
        vals = w.data if sp.issparse(w) else np.asarray(w).ravel()
        m = vals / qplan.voltage_scale / 2.0 ** lr.exponent
        if not np.all(m == np.round(m)):
            return False
        if np.any(m < SPEC.mantissa_min) or np.any(m > SPEC.mantissa_max):
            return False
        if lr.even_mantissa and np.any((np.abs(m) > SPEC.half_range) & (m % 2 != 0)):
            return False
        if not SPEC.exponent_min <= lr.exponent <= SPEC.exponent_max:
            return False
    return True


@pytest.mark.parametrize("kind, n", [("SDFT", 64), ("SDFT", 256), ("SFFT", 256), ("SFFT", 1024)])
def test_plans_representable(kind, n):
    plan = build_sdft(n, CFG) if kind == "SDFT" else build_sfft(n, CFG)
    qplan, report = quantize_plan(plan)
    assert representable(qplan, report)
    for layer in qplan.layers:
        assert layer.threshold <= SPEC.max_threshold
        assert layer.drive_current % SPEC.current_quantum == 0
        assert np.all(np.abs(layer.bias) <= 2 ** 23)
        assert layer.threshold == layer.drive_current * 128


def test_frozen_reports():
    # values from running the exponent and voltage-scale search once
    _, r = quantize_plan(build_sdft(256, CFG))
    assert (r.voltage_scale, r.layers[0].exponent, r.layers[0].even_mantissa) == (256, -2, False)
    assert r.layers[0].threshold == 4194304
    _, r = quantize_plan(build_sfft(256, CFG))
    assert r.voltage_scale == 8192
    assert [l.exponent for l in r.layers] == [-7] * 4
    assert all(l.even_mantissa for l in r.layers)
    assert r.layers[-1].max_weight_error == 0
    json.dumps(r.to_dict())


def test_voltage_scale_is_largest(rng):
    plan = build_sfft(64, CFG)
    qplan, _ = quantize_plan(plan)
    top = max(l.threshold for l in qplan.layers)
    # doubling the scale would break the threshold cap
    assert 2 * top > SPEC.max_threshold


def test_capacity_error():
    with pytest.raises(CapacityError):
        quantize_plan(build_dense(np.eye(2) * 1e6, CFG))


def test_requantize_rejected():
    qplan, _ = quantize_plan(build_sdft(16, CFG))
    with pytest.raises(DomainError):
        quantize_plan(qplan)


def test_voltages_stay_in_range():
    qplan = evaluate.cached_plan("SFFT", 256, 257, True, True)
    sig = evaluate.scenario_signal("S4", 256)
    res = run_plan(qplan, sig.samples)
    for st_ in res.states:
        assert np.all(st_.peak_silent <= 2 ** 23) and np.all(st_.trough_silent >= -2 ** 23)


def test_sdft_1024_quantized_s1():
    rep = evaluate.evaluate_scenario("S1", "SDFT", 1024, 257, quantized=True)
    assert rep.rmse <= 0.05
    assert rep.rmse == pytest.approx(0.018949, abs=1e-5)
