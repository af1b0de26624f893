"""
Dense (S-DFT) and radix-4 sparse (S-FFT) spiking Fourier networks.

Both networks use the real-block layout: a length-n complex vector lives on
2n neurons, real parts first. The S-FFT is the decimation-in-frequency
radix-4 factorisation y = P S_L ... S_1 x, where every S_l is built from 8x8
real butterfly blocks and P is the base-4 digit reversal, applied as an index
map when reading the output.
"""
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .encoding import EncoderConfig, decode, encode, merge_complex
from .errors import DomainError, SizeError, UsageError
from .neuron import LayerParams, compute_bias, compute_threshold, run_layer

SDFT = "SDFT"
SFFT = "SFFT"

_BUTTERFLY = np.array([[1, 1, 1, 1],
                       [1, -1j, -1, 1j],
                       [1, -1, 1, -1],
                       [1, 1j, -1, -1j]])


def is_power_of_four(n):
    return n >= 1 and (n & (n - 1)) == 0 and (n.bit_length() - 1) % 2 == 0


def log4(n):
    if not is_power_of_four(n):
        raise SizeError(f"{n} is not a power of 4")
    return (n.bit_length() - 1) // 2


def real_block(c):
    """Embed a complex matrix as [[Re, -Im], [Im, Re]]."""
    c = np.asarray(c)
    return np.block([[c.real, -c.imag], [c.imag, c.real]])


def _unit_root(num, n):
    """exp(-2 pi i num / n) with the argument reduced modulo n first."""
    angle = 2 * math.pi * (num % n) / n
    return complex(math.cos(angle), -math.sin(angle))


def dft_weights(n):
    k = np.arange(n)
    angle = 2 * np.pi * (np.outer(k, k) % n) / n
    return real_block(np.cos(angle) - 1j * np.sin(angle))


def butterfly_block(k, n):
    """
    8x8 real radix-4 butterfly for twiddle index k of an n-point transform.

    The complex kernel is diag(W^0, W^k, W^2k, W^3k) @ B4 with W = exp(-2 pi i / n),
    i.e. the twiddles are applied to the butterfly outputs.
    """
    if not 0 <= k < max(n // 4, 1):
        raise DomainError(f"twiddle index {k} outside [0, {n // 4})")
    twiddle = np.array([_unit_root(k * q, n) for q in range(4)])
    block = real_block(twiddle[:, None] * _BUTTERFLY)
    block[np.abs(block) < 1e-15] = 0.0
    return block


def digit_reverse(n):
    """Base-4 digit reversal permutation of range(n)."""
    digits = log4(n)
    out = np.zeros(n, dtype=int)
    idx = np.arange(n)
    for d in range(digits):
        out = out * 4 + (idx >> (2 * d)) % 4
    return out


def sfft_layer_matrix(stage, n):
    """Sparse real 2n x 2n matrix of radix-4 DIF stage `stage` (1-based)."""
    if not is_power_of_four(n) or n < 4 or not 1 <= stage <= log4(n):
        raise SizeError(f"no radix-4 stage {stage} for n = {n}")
    stride = 4 ** (stage - 1)
    span = n // stride
    quarter = span // 4
    rows, cols, vals = [], [], []
    for start in range(0, n, span):
        for pos in range(quarter):
            block = butterfly_block(pos * stride, n)
            lanes = start + pos + quarter * np.arange(4)
            idx = np.concatenate([lanes, n + lanes])
            r, c = np.nonzero(block)
            rows.append(idx[r])
            cols.append(idx[c])
            vals.append(block[r, c])
    return sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                         shape=(2 * n, 2 * n))


@dataclass
class NetworkPlan:
    layers: list
    kind: str
    n: int
    steps_per_stage: int
    scales: list  # per-layer output range relative to the input range
    output_index: np.ndarray  # natural-order neuron k is read from position output_index[k]
    real_input: bool = True
    threshold_modes: list = field(default_factory=list)
    voltage_scale: float = None  # set on hardware-quantized plans

    @property
    def n_layers(self):
        return len(self.layers)

    @property
    def stage_count(self):
        return self.n_layers + 1

    @property
    def neurons_per_layer(self):
        return 2 * self.n

    @property
    def total_scale(self):
        return float(np.prod(self.scales))

    @property
    def t_max(self):
        return self.steps_per_stage - 1

    @property
    def quantized(self):
        return self.voltage_scale is not None

    def real_matrices(self):
        """Layer matrices in real weight units (hardware scaling undone)."""
        v = self.voltage_scale or 1.0
        return [l.dense_weights() / v for l in self.layers]

    def composite_matrix(self):
        """P S_L ... S_1 as a dense matrix."""
        total = np.eye(2 * self.n)
        for m in self.real_matrices():
            total = m @ total
        return total[self.output_index]

    def summary(self):
        return {
            "kind": self.kind,
            "n": self.n,
            "steps_per_stage": self.steps_per_stage,
            "stage_count": self.stage_count,
            "neurons_per_layer": self.neurons_per_layer,
            "total_neurons": self.neurons_per_layer * self.n_layers,
            "real_input": self.real_input,
            "quantized": self.quantized,
            "voltage_scale": self.voltage_scale,
            "total_scale": self.total_scale,
            "layers": [
                {
                    "shape": list(l.weights.shape),
                    "nonzeros": int(l.nnz_per_row().sum()),
                    "max_inbound": int(l.nnz_per_row().max()),
                    "threshold": float(l.threshold),
                    "threshold_mode": mode,
                    "drive_current": float(l.drive_current),
                    "scale": float(s),
                    "silent_steps": l.silent_steps,
                    "total_steps": l.total_steps,
                }
                for l, s, mode in zip(self.layers, self.scales, self.threshold_modes)
            ],
        }


def _make_layer(weights, cfg, x_max, mode, bias_rows=None, ramp_lead=0.5):
    """Threshold, bias and drive for one layer whose inputs span [-x_max, x_max]."""
    t_max = cfg.t_max
    gamma = t_max / (2 * x_max)
    threshold = compute_threshold(weights, gamma, x_max, mode)
    bias = compute_bias(weights, t_max, gamma, x_max)
    if bias_rows is not None:
        keep = np.zeros(bias.size, dtype=bool)
        keep[bias_rows] = True
        bias = np.where(keep, bias, 0.0)
    layer = LayerParams(weights, bias, threshold, 2 * threshold / t_max, t_max, 2 * t_max,
                        ramp_lead=ramp_lead)
    return layer, threshold / (gamma * x_max)


def build_sdft(n, cfg=None, real_input=True):
    """Single dense layer holding the real-block DFT matrix."""
    cfg = cfg or EncoderConfig()
    if n < 2:
        raise SizeError(f"S-DFT needs n >= 2, got {n}")
    w = dft_weights(n)
    mode = "dft_half" if real_input else "general"
    # only the zero-frequency rows have non-zero weight sums
    layer, scale = _make_layer(w, cfg, cfg.x_max, mode, bias_rows=[0, n])
    return NetworkPlan([layer], SDFT, n, cfg.steps_per_stage, [scale],
                       np.arange(2 * n), real_input, [mode])


def build_sfft(n, cfg=None, real_input=False):
    """
    log4(n) sparse radix-4 layers followed by a digit-reversal read-out.

    With `real_input` the first layer drops the synapses from the imaginary
    input neurons, which always encode zero; its row sums, and hence its
    threshold and output range, shrink from 4*sqrt(2) to 4.
    """
    cfg = cfg or EncoderConfig()
    if n < 4 or not is_power_of_four(n):
        raise SizeError(f"S-FFT needs a power of 4 >= 4, got {n}")
    layers, scales = [], []
    x_max = cfg.x_max
    for stage in range(1, log4(n) + 1):
        w = sfft_layer_matrix(stage, n)
        if stage == 1 and real_input:
            w = sp.csr_matrix(w @ sp.diags(np.r_[np.ones(n), np.zeros(n)]))
            w.eliminate_zeros()
        layer, scale = _make_layer(w, cfg, x_max, "general")
        layers.append(layer)
        scales.append(scale)
        x_max *= scale
    rev = digit_reverse(n)
    return NetworkPlan(layers, SFFT, n, cfg.steps_per_stage, scales,
                       np.concatenate([rev, n + rev]), real_input,
                       ["general"] * len(layers))


def build_dense(weights, cfg=None, mode="general"):
    """One-layer plan for an arbitrary real 2n x 2n matrix, read out in natural order."""
    cfg = cfg or EncoderConfig()
    w = np.asarray(weights, dtype=float)
    if w.ndim != 2 or w.shape[0] != w.shape[1] or w.shape[0] % 2:
        raise SizeError(f"need a square matrix of even size, got shape {w.shape}")
    layer, scale = _make_layer(w, cfg, cfg.x_max, mode)
    return NetworkPlan([layer], "DENSE", w.shape[0] // 2, cfg.steps_per_stage, [scale],
                       np.arange(w.shape[0]), False, [mode])


def build_plan(kind, n, cfg=None, real_input=True):
    kind = kind.upper().replace("-", "")
    if kind == SDFT:
        return build_sdft(n, cfg, real_input)
    if kind == SFFT:
        return build_sfft(n, cfg, real_input)
    raise UsageError(f"unknown architecture {kind!r}")


@dataclass
class RunResult:
    spectrum: np.ndarray
    trace: list
    missing: int = 0
    clamped: int = 0
    states: list = field(default_factory=list)


def run_plan(plan, x, mode="stepped", cfg=None):
    """
    Push one frame (or a batch of frames) through the network.

    Layer l integrates during stage l-1 and fires during stage l, so an
    L-layer plan spans L+1 stages. The returned spectrum is decoded from the
    last stage, scaled by x_max times the product of the layer scales and
    put back into natural bin order.
    """
    cfg = cfg or EncoderConfig(steps_per_stage=plan.steps_per_stage)
    if cfg.steps_per_stage != plan.steps_per_stage:
        raise UsageError(
            f"plan was built for {plan.steps_per_stage} steps, encoder uses {cfg.steps_per_stage}")
    samples = np.asarray(getattr(x, "samples", x), dtype=np.complex128)
    if samples.shape[-1] != plan.n:
        raise UsageError(f"input length {samples.shape[-1]} does not match plan size {plan.n}")
    if plan.real_input and np.any(samples.imag != 0):
        raise UsageError("this plan uses the real-input threshold; build it with real_input=False")
    frame = encode(samples, cfg, stepped=(mode == "stepped"))
    trace = [frame]
    states = []
    clamped = 0
    for layer in plan.layers:
        frame, st = run_layer(layer, frame, mode)
        clamped += st.clamp_count
        trace.append(frame)
        states.append(st)
    values, missing = decode(frame, cfg.x_max * plan.total_scale, return_missing=True)
    values = values[..., plan.output_index]
    return RunResult(merge_complex(values), trace, int(missing.sum()), clamped, states)


def pipeline_schedule(plan, n_frames=1):
    """
    Stage-level timetable for a stream of frames.

    A layer is busy for two consecutive stages per frame (integrate, then
    fire), so a new frame can enter every second stage. Frame f emits its
    input spikes in stage 2f; layer l integrates it in stage 2f+l-1 and fires
    in stage 2f+l.
    """
    if n_frames < 1:
        raise DomainError("n_frames must be >= 1")
    tau_l = plan.steps_per_stage
    n_layers = plan.n_layers
    n_stages = 2 * (n_frames - 1) + n_layers + 1
    stages = []
    for s in range(n_stages):
        layers = {}
        for f in range(n_frames):
            l_silent = s - 2 * f + 1
            if 1 <= l_silent <= n_layers:
                layers[l_silent] = (f, "silent")
            l_spiking = s - 2 * f
            if 1 <= l_spiking <= n_layers:
                layers[l_spiking] = (f, "spiking")
        in_flight = sorted({f for f in range(n_frames) if 2 * f <= s <= 2 * f + n_layers})
        stages.append({
            "stage": s,
            "layers": layers,
            "frames_in_flight": in_flight,
            "integrating_fraction": sum(1 for v in layers.values() if v[1] == "silent") / n_layers,
            "active_fraction": len(layers) / n_layers,
        })
    return {
        "kind": plan.kind,
        "n_layers": n_layers,
        "tau_l": tau_l,
        "frame_period": 2 * tau_l,
        "latency": (n_layers + 1) * tau_l,
        "max_frames_in_flight": max(len(s["frames_in_flight"]) for s in stages),
        "stages": stages,
    }
