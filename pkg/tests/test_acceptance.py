"""
Acceptance suite. Every criterion records one PASS/FAIL line (shown with -s and
in the terminal summary) and then asserts, so a red criterion stays red.

    pytest tests/test_acceptance.py -v -s
"""
import time
from dataclasses import replace

import numpy as np
import pytest

from spikeft import costmodel, evaluate, oracle
from spikeft.encoding import EncoderConfig, decode, encode, split_complex
from spikeft.network import build_plan, build_sfft, run_plan
from spikeft.neuron import run_layer
from spikeft.quantize import QuantSpec, quantize_plan
from spikeft.signal import SCENARIOS, RadarConfig, Target, synthesize_frame

ARCHS = ("SDFT", "SFFT")


def within(value, target, rel):
    return abs(value - target) <= rel * abs(target)


def test_ac1_cost_regression(record):
    sd = costmodel.estimate("SDFT", 1024, 75)
    sf = costmodel.estimate("SFFT", 1024, 75)
    checks = {
        "SDFT E": within(sd.energy_per_frame, 65.5, 0.01),
        "SDFT T_f": within(sd.frame_period, 77.6, 0.01),
        "SDFT tau_f": within(sd.latency, 77.6, 0.01),
        "SDFT P": within(sd.power, 844, 0.01),
        "SFFT E": within(sf.energy_per_frame, 49.9, 0.02),
        "SFFT tau_f": within(sf.latency, 315, 0.05),
        "SFFT T_f": within(sf.frame_period, 105, 0.05),
        "SFFT P": within(sf.power, 158, 0.05),
    }
    ok = all(checks.values())
    record("AC1", ok,
           f"SDFT E={sd.energy_per_frame:.2f}uJ T_f=tau_f={sd.latency:.2f}us P={sd.power:.1f}mW; "
           f"SFFT E={sf.energy_per_frame:.2f}uJ tau_f={sf.latency:.1f}us T_f={sf.frame_period:.1f}us "
           f"P={sf.power:.1f}mW" + ("" if ok else f"; off: {[k for k, v in checks.items() if not v]}"))
    assert ok


def test_ac2_spike_ops(record):
    sd, sf = costmodel.spike_ops("SDFT", 1024), costmodel.spike_ops("SFFT", 1024)
    ok = sd == 2_099_200 and sf == 83_968
    record("AC2", ok, f"SDFT {sd:,} SFFT {sf:,}")
    assert ok


def test_ac3_factorization(record):
    t0 = time.perf_counter()
    errs = {}
    for n in (4, 16, 64, 256):
        plan = build_sfft(n, EncoderConfig(1.0, 257))
        errs[n] = float(np.max(np.abs(plan.composite_matrix() - oracle.real_dft_matrix(n))))
    dt = time.perf_counter() - t0
    ok = max(errs.values()) <= 1e-9 and dt < 10
    record("AC3", ok, "max entry error " + ", ".join(f"n={n}: {e:.1e}" for n, e in errs.items())
           + f" ({dt:.1f}s)")
    assert ok


def test_ac4_continuous_exact(record):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    cfg = EncoderConfig(1.0, 257)
    worst = {}
    for arch in ARCHS:
        plan_c = build_plan(arch, 64, cfg, real_input=False)
        plan_r = build_plan(arch, 64, cfg, real_input=True)
        w = 0.0
        for i in range(20):
            if i % 2:
                x = rng.uniform(-1, 1, 64) + 1j * rng.uniform(-1, 1, 64)
                plan = plan_c
            else:
                x = rng.uniform(-1, 1, 64)
                plan = plan_r
            y = run_plan(plan, x, "continuous", cfg).spectrum
            ref = oracle.dft(x)
            w = max(w, float(np.max(np.abs(y - ref)) / np.max(np.abs(ref))))
        worst[arch] = w
    dt = time.perf_counter() - t0
    ok = max(worst.values()) <= 1e-9 and dt < 10
    record("AC4", ok, ", ".join(f"{a} worst rel err {e:.1e}" for a, e in worst.items())
           + f" over 20 inputs each ({dt:.1f}s)")
    assert ok


def test_ac5_accuracy(record):
    t0 = time.perf_counter()
    cells, bad = [], []
    for arch in ARCHS:
        for name in SCENARIOS:
            rep = evaluate.evaluate_scenario(name, arch, 256, 257, quantized=True)
            cells.append(f"{arch}/{name} {rep.rmse:.4f}")
            if rep.rmse > 0.05 or not rep.peak_match:
                bad.append(f"{arch}/{name} rmse={rep.rmse:.4f} peak {rep.peak_bin} vs {rep.oracle_peak_bin}")
    dt = time.perf_counter() - t0
    ok = not bad and dt < 120
    record("AC5", ok, "; ".join(cells) + f" ({dt:.1f}s)" + (f"; failing: {bad}" if bad else ""))
    assert ok


def test_ac6_step_sweep(record):
    t0 = time.perf_counter()
    table = evaluate.sweep_steps(evaluate.plan_builder("SFFT", quantized=True))
    dt = time.perf_counter() - t0
    ok = table.trend >= 0.8 and dt < 600
    grid = ", ".join(f"({n},{t}) {r:.4f}" for n, t, r in table.rows)
    record("AC6", ok, f"rmse fell on {table.trend:.0%} of n_T doublings ({dt:.0f}s): {grid}")
    assert ok


def _integer_layer():
    plan, _ = quantize_plan(build_sfft(64, EncoderConfig(1.0, 129)))
    # plain ceil of the crossing time; the shipped networks use a half-step lead
    return replace(plan.layers[0], ramp_lead=0.0), EncoderConfig(1.0, 129)


def test_ac7_neuron_invariants(record):
    t0 = time.perf_counter()
    layer, cfg = _integer_layer()
    rng = np.random.default_rng(7)
    x = rng.uniform(-1, 1, (1000, 64)) + 1j * rng.uniform(-1, 1, (1000, 64))
    frame = encode(x, cfg)
    out, st = run_layer(layer, frame, "stepped")
    one_spike = bool(np.all(out.fired)) and out.times.shape == (1000, layer.n_out)
    in_window = bool(np.all((out.relative >= 0) & (out.relative <= cfg.t_max)))
    no_early = bool(np.all(st.peak_silent < layer.threshold))
    # fire step = t_s + ceil((threshold - u(t_s)) / I), integers throughout
    u = st.membrane.astype(np.int64)
    th, drive = int(layer.threshold), int(layer.drive_current)
    assert th == layer.threshold and drive == layer.drive_current
    expected = layer.silent_steps + np.maximum(-((u - th) // drive), 0)
    formula = bool(np.array_equal(st.fire_step, expected))
    back = decode(frame, cfg.x_max)
    rt = float(np.max(np.abs(back - split_complex(x))))
    bound = 2 * cfg.x_max / cfg.t_max + 1e-12
    dt = time.perf_counter() - t0
    ok = one_spike and in_window and no_early and formula and rt <= bound and dt < 60
    record("AC7", ok, f"1000 frames x {layer.n_out} neurons: one spike {one_spike}, in window {in_window}, "
           f"no silent spike {no_early}, fire-step formula {formula}, round trip {rt:.2e} <= {bound:.2e} "
           f"({dt:.1f}s)")
    assert ok


def _representable(plan, report, spec):
    for layer, lrep in zip(plan.layers, report.layers):
        w = layer.dense_weights() / plan.voltage_scale
        m = w / 2.0 ** lrep.exponent
        if not np.array_equal(m, np.round(m)):
            return False
        if m.min() < spec.mantissa_min or m.max() > spec.mantissa_max:
            return False
        if not spec.exponent_min <= lrep.exponent <= spec.exponent_max:
            return False
        if lrep.even_mantissa and np.any(m % 2):
            return False
    return True


def test_ac8_quantization_soundness(record):
    spec = QuantSpec()
    repr_ok, volt_ok, worst_v = True, True, 0.0
    for arch in ARCHS:
        plan, report = quantize_plan(build_plan(arch, 256, EncoderConfig(1.0, 257)), spec)
        repr_ok &= _representable(plan, report, spec)
        for name in SCENARIOS:
            sig = evaluate.scenario_signal(name, 256)
            res = run_plan(plan, sig, "stepped")
            for layer, st in zip(plan.layers, res.states):
                v = max(np.max(np.abs(st.peak_silent)), np.max(np.abs(st.trough_silent)),
                        np.max(np.abs(st.membrane)), layer.threshold)
                worst_v = max(worst_v, float(v))
            volt_ok &= res.clamped == 0
    volt_ok &= worst_v <= 2 ** 23
    mono, cells = True, []
    for arch in ARCHS:
        for name in SCENARIOS:
            q = evaluate.evaluate_scenario(name, arch, 256, 257, quantized=True).rmse
            u = evaluate.evaluate_scenario(name, arch, 256, 257, quantized=False).rmse
            if q < u - 1e-12:
                mono = False
                cells.append(f"{arch}/{name} q={q:.5f} < u={u:.5f}")
    ok = repr_ok and volt_ok and mono
    record("AC8", ok, f"weights representable {repr_ok}; |V| max {worst_v:.3g} <= 2^23 {volt_ok}; "
           f"rmse(q) >= rmse(u) {mono}" + (f" (violations: {'; '.join(cells)})" if cells else ""))
    assert ok


def test_ac9_range_doppler(record):
    t0 = time.perf_counter()
    cfg = RadarConfig()
    frame = synthesize_frame(cfg, [Target(10.0, 1.0)], seed=0)
    res = evaluate.range_doppler(frame)
    dt = time.perf_counter() - t0
    ok = res.peak == res.oracle_peak and dt < 120
    record("AC9", ok, f"snn peak {res.peak}, oracle peak {res.oracle_peak} "
           f"({res.peak[0] * cfg.bin_range_resolution:.2f} m, "
           f"{evaluate.doppler_index(res.peak[1], cfg.chirps_per_frame) * cfg.velocity_resolution:.2f} m/s, "
           f"{dt:.0f}s)")
    assert ok


def test_ac10_accelerator_ratios(record):
    sd = costmodel.compare_accelerators(costmodel.estimate("SDFT", 1024, 75))
    sf = costmodel.compare_accelerators(costmodel.estimate("SFFT", 1024, 75))
    energy = [c.energy_ratio for c in sf]
    periods = [c.period_ratio for c in sd + sf]
    ok = all(100 <= e <= 1000 for e in energy) and all(9 <= round(p) <= 76 for p in periods)
    record("AC10", ok, "SFFT energy x" + "/".join(f"{e:.0f}" for e in energy)
           + "; frame period x" + "/".join(f"{p:.1f}" for p in periods)
           + "; informational: SDFT energy x" + "/".join(f"{c.energy_ratio:.0f}" for c in sd)
           + ", SFFT latency x" + "/".join(f"{c.latency_ratio:.0f}" for c in sf))
    assert ok


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v", "-s"]))
