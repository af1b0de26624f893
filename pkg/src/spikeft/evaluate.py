"""
Accuracy protocol: offset-bin removal, per-part normalisation, RMSE,
step-count sweeps and the 2-D range-Doppler composition.
"""
import csv
import json
import logging
from dataclasses import asdict, dataclass, field
from functools import lru_cache

import numpy as np

from . import oracle
from .encoding import EncoderConfig
from .errors import UsageError
from .network import build_plan, run_plan
from .quantize import quantize_plan
from .signal import SCENARIOS, DEFAULT_NOISE_STD, RadarConfig, scenario, synthesize_chirp

log = logging.getLogger(__name__)


@lru_cache(maxsize=32)
def cached_plan(arch, n, steps_per_stage, real_input=True, quantized=False):
    cfg = EncoderConfig(1.0, steps_per_stage)
    plan = build_plan(arch, n, cfg, real_input)
    if quantized:
        plan, _ = quantize_plan(plan)
    return plan


def plan_builder(arch, quantized=False):
    """Callable (n, steps_per_stage, real_input) -> plan, memoised."""
    def build(n, steps_per_stage, real_input=True):
        return cached_plan(arch.upper().replace("-", ""), n, steps_per_stage, real_input, quantized)
    build.arch = arch
    build.quantized = quantized
    return build


def trim_spectrum(y, real_input=True):
    """Drop the offset bin; for real input keep only the positive half."""
    y = np.asarray(y)
    n = y.shape[-1]
    return y[..., 1:n // 2] if real_input else y[..., 1:]


def scale_parts(y):
    """Scale real and imaginary parts independently to [-1, 1]. Idempotent."""
    y = np.asarray(y, dtype=np.complex128)
    parts, flags = [], []
    for part in (y.real, y.imag):
        peak = float(np.max(np.abs(part))) if part.size else 0.0
        flags.append(peak == 0)
        parts.append(part / peak if peak > 0 else part)
    return parts[0] + 1j * parts[1], flags


def normalize_pair(a, b, real_input=True):
    """Apply the same trimming and per-part scaling to both spectra."""
    if np.shape(a) != np.shape(b):
        raise UsageError(f"spectra differ in size: {np.shape(a)} vs {np.shape(b)}")
    na, fa = scale_parts(trim_spectrum(a, real_input))
    nb, fb = scale_parts(trim_spectrum(b, real_input))
    return na, nb, {"offset_removed": True, "half_spectrum": real_input,
                    "zero_parts": {"a": fa, "b": fb}}


def _flatten(v, as_complex=False):
    v = np.asarray(v)
    if as_complex or np.iscomplexobj(v):
        return np.concatenate([v.real.ravel(), v.imag.ravel()])
    return v.ravel().astype(float)


def rmse(a, b):
    """Root mean square error over concatenated real and imaginary parts."""
    cplx = np.iscomplexobj(a) or np.iscomplexobj(b)
    fa, fb = _flatten(a, cplx), _flatten(b, cplx)
    if fa.size != fb.size or fa.size == 0:
        raise UsageError(f"rmse needs two equal, non-empty inputs ({fa.size} vs {fb.size})")
    return float(np.sqrt(np.mean((fa - fb) ** 2)))


def log_magnitude(y, floor=1e-12):
    """log10 |y| rescaled to [0, 1]."""
    lm = np.log10(np.abs(y) + floor)
    span = lm.max() - lm.min()
    return (lm - lm.min()) / span if span > 0 else np.zeros_like(lm)


@dataclass
class EvalReport:
    scenario: str
    architecture: str
    n_bins: int
    n_T: int
    rmse: float
    quantized: bool
    mode: str
    peak_bin: int
    oracle_peak_bin: int
    errors: np.ndarray = field(repr=False, default=None)
    normalization: dict = field(default_factory=dict)
    missing_spikes: int = 0
    clamped: int = 0

    @property
    def peak_match(self):
        return self.peak_bin == self.oracle_peak_bin

    def to_dict(self, with_errors=False):
        d = asdict(self)
        d["errors"] = self.errors.tolist() if with_errors else None
        d["peak_match"] = self.peak_match
        return d

    def to_json(self, path=None, with_errors=True):
        text = json.dumps(self.to_dict(with_errors), indent=2)
        if path:
            with open(path, "w") as fh:
                fh.write(text + "\n")
        return text


def peak_bin(y, real_input=True):
    """Index (natural bin number) of the largest magnitude, offset bin excluded."""
    mag = np.abs(trim_spectrum(y, real_input))
    return int(np.argmax(mag)) + 1


def evaluate_signal(signal, arch="SFFT", steps_per_stage=257, quantized=True,
                    mode="stepped", name="custom", builder=None):
    """Run one signal through a spiking network and compare with the exact DFT."""
    samples = np.asarray(getattr(signal, "samples", signal), dtype=np.complex128)
    real_input = bool(np.all(samples.imag == 0))
    builder = builder or plan_builder(arch, quantized)
    plan = builder(samples.size, steps_per_stage, real_input)
    result = run_plan(plan, samples, mode, EncoderConfig(1.0, steps_per_stage))
    exact = oracle.dft(samples)
    na, nb, meta = normalize_pair(result.spectrum, exact, real_input)
    return EvalReport(
        scenario=name, architecture=plan.kind, n_bins=samples.size, n_T=steps_per_stage,
        rmse=rmse(na, nb), quantized=plan.quantized, mode=mode,
        peak_bin=peak_bin(result.spectrum, real_input), oracle_peak_bin=peak_bin(exact, real_input),
        errors=_flatten(na) - _flatten(nb), normalization=meta,
        missing_spikes=result.missing, clamped=result.clamped,
    ), result, exact


def scenario_signal(name, n, seed=0, noise_std=DEFAULT_NOISE_STD, config=None):
    config = (config or RadarConfig()).with_samples(n)
    return synthesize_chirp(config, scenario(name, config, seed), noise_std, seed)


def evaluate_scenario(name, arch="SFFT", n=256, steps_per_stage=257, quantized=True,
                      mode="stepped", seed=0, noise_std=DEFAULT_NOISE_STD, config=None):
    sig = scenario_signal(name, n, seed, noise_std, config)
    report, _, _ = evaluate_signal(sig, arch, steps_per_stage, quantized, mode, name)
    return report


@dataclass
class SweepTable:
    rows: list  # (n, n_T, mean rmse over scenarios)
    per_scenario: dict
    trend: float  # fraction of adjacent n_T pairs where the rmse went down

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["n", "n_T", "rmse"])
            for n, n_t, r in self.rows:
                w.writerow([n, n_t, f"{r:.9g}"])


def sweep_steps(builder=None, scenarios=SCENARIOS, steps_list=(65, 129, 257, 513),
                n_list=(64, 256, 1024), seed=0, noise_std=DEFAULT_NOISE_STD):
    """RMSE grid over transform sizes and steps per stage, averaged over scenarios."""
    if not steps_list or not n_list or not scenarios:
        raise UsageError("sweep needs non-empty size, step and scenario lists")
    builder = builder or plan_builder("SFFT", quantized=True)
    rows, per = [], {}
    for n in n_list:
        signals = {s: scenario_signal(s, n, seed, noise_std) for s in scenarios}
        for n_t in steps_list:
            vals = []
            for s, sig in signals.items():
                rep, _, _ = evaluate_signal(sig, steps_per_stage=n_t, builder=builder, name=s)
                per[(n, n_t, s)] = rep.rmse
                vals.append(rep.rmse)
            rows.append((n, n_t, float(np.mean(vals))))
            log.info("sweep n=%d n_T=%d rmse=%.5f", n, n_t, rows[-1][2])
    pairs = down = 0
    for (n0, _, r0), (n1, _, r1) in zip(rows, rows[1:]):
        if n0 == n1:
            pairs += 1
            down += r1 < r0
    return SweepTable(rows, per, down / pairs if pairs else 1.0)


def zero_spike_fraction(frame, window=5):
    """Share of spikes within +-window steps of mid-window, i.e. encoding values near zero."""
    rel = frame.relative
    live = ~np.isnan(rel)
    near = np.abs(rel - frame.t_max / 2) <= window
    return float(np.sum(near & live) / max(np.sum(live), 1))


@dataclass
class RangeDopplerResult:
    magnitude: np.ndarray  # (range bins, doppler bins)
    oracle_magnitude: np.ndarray
    peak: tuple
    oracle_peak: tuple
    range_cut: np.ndarray
    oracle_range_cut: np.ndarray
    doppler_cut: np.ndarray
    oracle_doppler_cut: np.ndarray


def _spiking_ft(batch, builder, steps_per_stage):
    batch = np.asarray(batch, dtype=np.complex128)
    real_input = bool(np.all(batch.imag == 0))
    scale = float(max(np.max(np.abs(batch.real)), np.max(np.abs(batch.imag)), 1e-300))
    plan = builder(batch.shape[-1], steps_per_stage, real_input)
    res = run_plan(plan, batch / scale, "stepped", EncoderConfig(1.0, steps_per_stage))
    return res.spectrum * scale


def range_doppler(frame, range_builder=None, doppler_builder=None, steps_per_stage=257,
                  chirp_index=0):
    """
    Range FT per chirp followed by a Doppler FT per range bin, both spiking.

    The decoded range spectra are re-encoded for the Doppler pass. If no
    Doppler builder is given the range architecture is reused when the chirp
    count allows it, otherwise the dense network is used.
    """
    chirps = [np.asarray(getattr(c, "samples", c)) for c in frame]
    if len({c.size for c in chirps}) != 1:
        raise UsageError("all chirps of a frame must have the same length")
    data = np.stack(chirps)
    n_chirps, n = data.shape
    range_builder = range_builder or plan_builder("SFFT")
    if doppler_builder is None:
        arch = getattr(range_builder, "arch", "SFFT").upper().replace("-", "")
        from .network import is_power_of_four
        if arch == "SFFT" and not is_power_of_four(n_chirps):
            arch = "SDFT"
        doppler_builder = plan_builder(arch, getattr(range_builder, "quantized", False))

    half = n // 2
    range_spec = _spiking_ft(data, range_builder, steps_per_stage)[:, :half]
    rd = _spiking_ft(range_spec.T, doppler_builder, steps_per_stage)  # (range, doppler)

    exact_range = oracle.dft(data)[:, :half]
    exact_rd = oracle.dft(exact_range.T)

    mag, omag = np.abs(rd), np.abs(exact_rd)
    # offset range bin carries no target information
    peak = np.unravel_index(np.argmax(mag[1:]), mag[1:].shape)
    opeak = np.unravel_index(np.argmax(omag[1:]), omag[1:].shape)
    peak = (int(peak[0]) + 1, int(peak[1]))
    opeak = (int(opeak[0]) + 1, int(opeak[1]))
    return RangeDopplerResult(
        mag, omag, peak, opeak,
        range_cut=range_spec[chirp_index], oracle_range_cut=exact_range[chirp_index],
        doppler_cut=rd[opeak[0]], oracle_doppler_cut=exact_rd[opeak[0]],
    )


def doppler_index(bin_, n_chirps):
    """Signed Doppler bin (negative velocities wrap to the upper half)."""
    return bin_ - n_chirps if bin_ >= n_chirps // 2 else bin_


def spectrum_rows(snn, exact, real_input=True):
    """Plot-ready rows: bin, oracle re/im, snn re/im and log magnitudes."""
    na, nb, _ = normalize_pair(snn, exact, real_input)
    lm_s, lm_o = log_magnitude(trim_spectrum(snn, real_input)), log_magnitude(trim_spectrum(exact, real_input))
    rows = []
    for i in range(na.size):
        rows.append((i + 1, nb[i].real, nb[i].imag, na[i].real, na[i].imag, lm_o[i], lm_s[i]))
    return rows


SPECTRUM_HEADER = ["bin", "oracle_re", "oracle_im", "snn_re", "snn_im", "oracle_logmag", "snn_logmag"]


def write_spectrum_csv(path, snn, exact, real_input=True):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SPECTRUM_HEADER)
        for row in spectrum_rows(snn, exact, real_input):
            w.writerow([row[0]] + [f"{v:.9g}" for v in row[1:]])
