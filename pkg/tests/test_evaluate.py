import csv
import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from spikeft import evaluate
from spikeft.encoding import encode, EncoderConfig
from spikeft.errors import UsageError
from spikeft.signal import RadarConfig, Target, synthesize_frame


def test_trim():
    y = np.arange(8)
    assert evaluate.trim_spectrum(y).tolist() == [1, 2, 3]
    assert evaluate.trim_spectrum(y, real_input=False).tolist() == list(range(1, 8))


def test_normalize_identical(rng):
    a = rng.normal(size=16) + 1j * rng.normal(size=16)
    na, nb, meta = evaluate.normalize_pair(a, a.copy())
    np.testing.assert_array_equal(na, nb)
    assert meta["offset_removed"] and meta["half_spectrum"]


def test_normalize_scale_invariant(rng):
    a = rng.normal(size=16) + 1j * rng.normal(size=16)
    na, nb, _ = evaluate.normalize_pair(a, 2 * a)
    np.testing.assert_allclose(na, nb, atol=1e-15)


def test_normalize_zero_flagged():
    na, _, meta = evaluate.normalize_pair(np.zeros(8), np.ones(8) * (1 + 1j))
    assert np.all(na == 0)
    assert meta["zero_parts"]["a"] == [True, True]


def test_normalize_size_mismatch():
    with pytest.raises(UsageError):
        evaluate.normalize_pair(np.zeros(8), np.zeros(16))


def test_rmse_examples():
    assert evaluate.rmse([1, 2, 3], [1, 2, 3]) == 0
    assert evaluate.rmse([1, 0], [0, 0]) == pytest.approx(math.sqrt(0.5))
    assert evaluate.rmse([1j], [0]) == pytest.approx(math.sqrt(0.5))
    with pytest.raises(UsageError):
        evaluate.rmse([1, 2], [1])


vec = arrays(np.float64, 12, elements=st.floats(-5, 5))


@given(vec, vec, vec)
def test_rmse_metric(a, b, c):
    assert evaluate.rmse(a, b) == pytest.approx(evaluate.rmse(b, a))
    assert evaluate.rmse(a, a) == 0
    assert evaluate.rmse(a, c) <= evaluate.rmse(a, b) + evaluate.rmse(b, c) + 1e-12


@given(arrays(np.float64, 20, elements=st.floats(-5, 5)), arrays(np.float64, 20, elements=st.floats(-5, 5)))
def test_normalization_idempotent(re, im):
    once, _ = evaluate.scale_parts(re + 1j * im)
    twice, _ = evaluate.scale_parts(once)
    np.testing.assert_allclose(twice, once, atol=1e-15)


def test_report_invariant():
    rep = evaluate.evaluate_scenario("S1", "SFFT", 64, 129, quantized=False)
    assert rep.rmse ** 2 * rep.errors.size == pytest.approx(np.sum(rep.errors ** 2))
    assert rep.errors.size == 2 * (64 // 2 - 1)
    d = json.loads(rep.to_json())
    assert d["architecture"] == "SFFT" and d["n_T"] == 129


@pytest.mark.parametrize("arch", ["SDFT", "SFFT"])
def test_continuous_is_exact(arch):
    rep = evaluate.evaluate_scenario("S4", arch, 64, 257, quantized=False, mode="continuous")
    assert rep.rmse <= 1e-9


def test_peak_preserved_everywhere():
    for name in ("S1", "S2", "S3", "S4"):
        for arch in ("SDFT", "SFFT"):
            assert evaluate.evaluate_scenario(name, arch, 256, 257).peak_match


def test_sweep_single_row():
    t = evaluate.sweep_steps(evaluate.plan_builder("SFFT"), ["S1"], [129], [64])
    assert len(t.rows) == 1
    assert t.trend == 1.0


def test_sweep_trend_and_csv(tmp_path):
    t = evaluate.sweep_steps(evaluate.plan_builder("SFFT", True), steps_list=[65, 129, 257],
                             n_list=[64])
    assert [r[:2] for r in t.rows] == [(64, 65), (64, 129), (64, 257)]
    assert t.trend == 1.0
    t.write_csv(tmp_path / "s.csv")
    rows = list(csv.reader(open(tmp_path / "s.csv")))
    assert rows[0] == ["n", "n_T", "rmse"] and len(rows) == 4


def test_sweep_needs_values():
    with pytest.raises(UsageError):
        evaluate.sweep_steps(steps_list=[])


def small_frame(velocity):
    cfg = RadarConfig().with_samples(64)
    return cfg, synthesize_frame(cfg, [Target(10.0, velocity)], 0.01, 0)


def test_range_doppler_static():
    cfg, frame = small_frame(0.0)
    res = evaluate.range_doppler(frame)
    assert res.peak == res.oracle_peak
    assert res.peak[1] == 0
    assert int(np.argmax(np.abs(res.doppler_cut))) == 0


def test_range_doppler_moving():
    cfg, frame = small_frame(1.0)
    res = evaluate.range_doppler(frame)
    assert res.peak == res.oracle_peak == (cfg.range_bin(10.0), 15)


def test_range_doppler_negative_velocity():
    cfg, frame = small_frame(-1.0)
    res = evaluate.range_doppler(frame)
    assert evaluate.doppler_index(res.peak[1], 128) == -15


def test_range_doppler_ragged():
    with pytest.raises(UsageError):
        evaluate.range_doppler([np.zeros(16), np.zeros(64)])


def test_spectrum_csv(tmp_path):
    rep, res, exact = evaluate.evaluate_signal(evaluate.scenario_signal("S1", 64), "SDFT", 129, False)
    evaluate.write_spectrum_csv(tmp_path / "s.csv", res.spectrum, exact)
    rows = list(csv.reader(open(tmp_path / "s.csv")))
    assert rows[0] == evaluate.SPECTRUM_HEADER
    assert len(rows) == 1 + 31
    assert all(0 <= float(r[5]) <= 1 for r in rows[1:])


def test_log_magnitude_range(rng):
    lm = evaluate.log_magnitude(rng.normal(size=50))
    assert lm.min() == 0 and lm.max() == 1


def test_zero_spike_fraction():
    cfg = EncoderConfig(1.0, 257)
    f = encode(np.array([0.0, 0.01, 0.9, -0.9]), cfg)
    # imaginary parts are all zero and sit at mid-window too
    assert evaluate.zero_spike_fraction(f, window=5) == pytest.approx(6 / 8)
