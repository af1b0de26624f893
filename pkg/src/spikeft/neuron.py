"""
Two-stage integrate-and-fire dynamics on an integer step grid.

Silent stage: every input j that has already spiked adds w_ij to the slope
of neuron i, so after t_s steps u_i = sum_j w_ij (t_s - t_j) + b_i. No neuron
may reach threshold in this stage.

Spiking stage: a constant drive I_ext ramps every membrane until it reaches
u_th, giving one spike at t_s + ceil((u_th - u_i) / I_ext).

All arrays carry an optional leading batch axis; neurons within a stage are
independent, so they are updated together.
"""
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .encoding import SpikeFrame
from .errors import DomainError, ModeError, PrematureSpikeError

# frames x neurons x steps handled per chunk in the stepped silent stage
_CHUNK_ELEMENTS = 1 << 22


@dataclass
class LayerParams:
    weights: object  # dense ndarray or scipy.sparse matrix, rows = post-synaptic
    bias: np.ndarray
    threshold: float
    drive_current: float
    silent_steps: int
    total_steps: int
    voltage_range: float = None  # symmetric clamp, hardware runs only
    # extra charge, in steps of drive current, given at the stage boundary;
    # 0.5 turns the ceil of the crossing time into a round-to-nearest
    ramp_lead: float = 0.0

    def __post_init__(self):
        self.bias = np.asarray(self.bias, dtype=float)
        if self.bias.shape != (self.n_out,):
            raise DomainError(f"bias shape {self.bias.shape} does not match {self.n_out} neurons")
        if not self.threshold > 0:
            raise DomainError(f"threshold must be positive, got {self.threshold}")
        if not self.drive_current > 0:
            raise DomainError(f"drive current must be positive, got {self.drive_current}")
        if not self.total_steps > self.silent_steps >= 1:
            raise DomainError(
                f"need total_steps > silent_steps >= 1, got {self.total_steps}, {self.silent_steps}")
        if not 0 <= self.ramp_lead < 1:
            raise DomainError(f"ramp_lead must lie in [0, 1), got {self.ramp_lead}")
        needed = 2 * self.threshold / self.spiking_steps
        if self.drive_current < needed * (1 - 1e-12):
            raise DomainError(
                f"drive current {self.drive_current} cannot fire every neuron (needs {needed})")

    @property
    def n_out(self):
        return self.weights.shape[0]

    @property
    def n_in(self):
        return self.weights.shape[1]

    @property
    def spiking_steps(self):
        return self.total_steps - self.silent_steps

    @property
    def is_sparse(self):
        return sp.issparse(self.weights)

    def dense_weights(self):
        return self.weights.toarray() if self.is_sparse else np.asarray(self.weights)

    def row_abs_sum(self):
        return row_abs_sum(self.weights)

    def nnz_per_row(self):
        if self.is_sparse:
            return np.diff(sp.csr_matrix(self.weights).indptr)
        return np.count_nonzero(self.weights, axis=1)


@dataclass
class NeuronStates:
    """Struct-of-arrays view of a layer's neurons after the silent stage."""
    membrane: np.ndarray
    accumulated_weight: np.ndarray
    stage: int
    peak_silent: np.ndarray = None
    trough_silent: np.ndarray = None  # lowest voltage over the whole silent stage
    clamp_count: int = 0
    fired: np.ndarray = None
    fire_step: np.ndarray = None


def row_abs_sum(weights):
    if sp.issparse(weights):
        return np.asarray(abs(weights).sum(axis=1)).ravel()
    return np.abs(np.asarray(weights)).sum(axis=1)


def row_sum(weights):
    if sp.issparse(weights):
        return np.asarray(weights.sum(axis=1)).ravel()
    return np.asarray(weights).sum(axis=1)


def compute_threshold(weights, gamma, x_max, mode="general"):
    """
    Silent-stage threshold.

    general:  max_i gamma * sum_j |w_ij| * x_max, the largest reachable voltage.
    dft_half: gamma / 2 * sum_j w_0j * x_max, valid for Fourier layers on real
              input where every non-zero bin is bounded by half the DC maximum.
    """
    if weights.shape[0] == 0 or weights.shape[1] == 0:
        raise DomainError("weights must be non-empty")
    if mode == "general":
        return float(gamma * row_abs_sum(weights).max() * x_max)
    if mode == "dft_half":
        row0 = weights[0].toarray().ravel() if sp.issparse(weights) else np.asarray(weights)[0]
        if np.any(row0 < 0) or not np.any(row0 > 0):
            raise ModeError("dft_half needs a zero-frequency first row with positive weights")
        return float(gamma / 2 * row0.sum() * x_max)
    raise ModeError(f"unknown threshold mode {mode!r}")


def compute_bias(weights, t_s, gamma, x_max):
    return -(t_s - gamma * x_max) * row_sum(weights)


def _batched(frame):
    rel = np.asarray(frame.relative, dtype=float)
    single = rel.ndim == 1
    return (rel[None, :] if single else rel.reshape(-1, rel.shape[-1])), single


def _premature(peak, threshold, where_step):
    bad = peak >= threshold
    if np.any(bad):
        b, i = np.argwhere(bad)[0]
        step = int(where_step[b, i]) if where_step is not None else None
        raise PrematureSpikeError(
            f"neuron {i} reached threshold {threshold:g} during the silent stage"
            + (f" at step {step}" if step is not None else ""), neuron=int(i), step=step)


def _silent_stepped(params, rel):
    t_s = params.silent_steps
    if np.any(~np.isnan(rel) & ((rel < 0) | (rel > t_s) | (rel != np.round(rel)))):
        raise DomainError("stepped inputs must be integer steps inside the silent window")
    n_frames, n_in = rel.shape
    n_steps = t_s + 1
    w_t = params.weights.T
    w_t = sp.csr_matrix(w_t) if params.is_sparse else np.ascontiguousarray(w_t)

    membrane = np.empty((n_frames, params.n_out))
    accumulated = np.empty((n_frames, params.n_out))
    peak = np.empty((n_frames, params.n_out))
    peak_step = np.empty((n_frames, params.n_out), dtype=int)
    trough = np.empty((n_frames, params.n_out))
    clamps = 0
    chunk = max(1, _CHUNK_ELEMENTS // (params.n_out * n_steps))
    for lo in range(0, n_frames, chunk):
        block = rel[lo:lo + chunk]
        nb = block.shape[0]
        b_idx, j_idx = np.nonzero(~np.isnan(block))
        cols = block[b_idx, j_idx].astype(int)
        # one-hot spike raster: row (frame, step), column input neuron
        raster = sp.csr_matrix((np.ones(b_idx.size), (b_idx * n_steps + cols, j_idx)),
                               shape=(nb * n_steps, n_in))
        drive = raster @ w_t
        if sp.issparse(drive):
            drive = drive.toarray()
        drive = np.asarray(drive).reshape(nb, n_steps, params.n_out)
        # slope[s] = sum of weights of inputs spiked at or before s
        slope = np.cumsum(drive, axis=1)
        u = np.empty((nb, n_steps, params.n_out))
        u[:, 0] = params.bias
        u[:, 1:] = params.bias + np.cumsum(slope[:, :-1], axis=1)
        if params.voltage_range is not None:
            clamps += _clamp_in_place(u, slope, params.bias, params.voltage_range)
        membrane[lo:lo + nb] = u[:, t_s]
        accumulated[lo:lo + nb] = slope[:, t_s - 1] if t_s >= 1 else 0.0
        before = u[:, :t_s]
        # report the first crossing if there is one, else where the peak sits
        crossed = before >= params.threshold
        peak_step[lo:lo + nb] = np.where(crossed.any(axis=1), np.argmax(crossed, axis=1),
                                         np.argmax(before, axis=1))
        peak[lo:lo + nb] = np.max(before, axis=1)
        trough[lo:lo + nb] = np.min(u, axis=1)
    return membrane, accumulated, peak, peak_step, trough, clamps


def _clamp_in_place(u, slope, bias, vmax):
    over = np.any(np.abs(u) > vmax, axis=1)
    if not np.any(over):
        return 0
    count = 0
    for b, i in np.argwhere(over):
        v = bias[i]
        u[b, 0, i] = v
        for t in range(1, u.shape[1]):
            v = v + slope[b, t - 1, i]
            if abs(v) > vmax:
                v = np.clip(v, -vmax, vmax)
                count += 1
            u[b, t, i] = v
    return count


def _silent_continuous(params, rel):
    t_s = params.silent_steps
    if np.any(~np.isnan(rel) & ((rel < 0) | (rel > t_s))):
        raise DomainError("inputs must spike inside the silent window")
    w = params.dense_weights()
    n_frames = rel.shape[0]
    membrane = np.empty((n_frames, params.n_out))
    accumulated = np.empty((n_frames, params.n_out))
    peak = np.empty((n_frames, params.n_out))
    peak_time = np.empty((n_frames, params.n_out))
    trough = np.empty((n_frames, params.n_out))
    for b in range(n_frames):
        t = rel[b]
        live = np.flatnonzero(~np.isnan(t))
        order = live[np.argsort(t[live], kind="stable")]
        ts = t[order]
        ws = w[:, order]
        cum_w = np.cumsum(ws, axis=1)
        cum_wt = np.cumsum(ws * ts, axis=1)
        membrane[b] = params.bias + t_s * cum_w[:, -1] - cum_wt[:, -1] if order.size else params.bias
        accumulated[b] = cum_w[:, -1] if order.size else 0.0
        # the trajectory is piecewise linear: extremes sit on spike arrivals
        early = ts < t_s
        cand = [params.bias[:, None]]
        times = [np.zeros((params.n_out, 1))]
        if order.size > 1:
            at = params.bias[:, None] + ts[None, 1:] * cum_w[:, :-1] - cum_wt[:, :-1]
            keep = early[1:]
            cand.append(at[:, keep])
            times.append(np.broadcast_to(ts[1:][keep], (params.n_out, int(keep.sum()))))
        cand = np.concatenate(cand, axis=1)
        times = np.concatenate(times, axis=1)
        k = np.argmax(cand, axis=1)
        peak[b] = cand[np.arange(params.n_out), k]
        peak_time[b] = times[np.arange(params.n_out), k]
        trough[b] = np.minimum(cand.min(axis=1), membrane[b])
    return membrane, accumulated, peak, peak_time, trough, 0


def run_silent(params, frame, mode="stepped"):
    """Integrate one input frame; raises PrematureSpikeError on an early crossing."""
    if frame.n_neurons != params.n_in:
        raise DomainError(f"frame has {frame.n_neurons} neurons, layer expects {params.n_in}")
    rel, single = _batched(frame)
    if mode == "stepped":
        result = _silent_stepped(params, rel)
    elif mode == "continuous":
        result = _silent_continuous(params, rel)
    else:
        raise ModeError(f"unknown simulation mode {mode!r}")
    membrane, accumulated, peak, where, trough, clamps = result
    _premature(peak, params.threshold, where)
    shape = frame.times.shape[:-1] + (params.n_out,)
    unbatch = (lambda a: a[0]) if single else (lambda a: a.reshape(shape))
    return NeuronStates(unbatch(membrane), unbatch(accumulated), frame.stage,
                        peak_silent=unbatch(peak), trough_silent=unbatch(trough),
                        clamp_count=clamps)


def ramp_steps(membrane, threshold, drive):
    """Smallest m >= 0 with membrane + m * drive >= threshold."""
    m = np.ceil((threshold - membrane) / drive)
    m = np.maximum(m, 0)
    # guard the division against one-ulp misses either way
    m = np.where((m > 0) & (membrane + (m - 1) * drive >= threshold), m - 1, m)
    m = np.where(membrane + m * drive < threshold, m + 1, m)
    return m


def run_spiking(states, params, mode="stepped"):
    """
    Ramp every membrane with the drive current and emit one spike each.

    `states.membrane` keeps the end-of-silent-stage voltage; the hardware
    resets it after the spiking stage, which has no observable effect here.
    """
    window = params.spiking_steps
    u = np.asarray(states.membrane, dtype=float)
    if mode == "stepped":
        lead = params.ramp_lead * params.drive_current
        rel = ramp_steps(u + lead, params.threshold, params.drive_current)
    elif mode == "continuous":
        rel = np.maximum((params.threshold - u) / params.drive_current, 0.0)
    else:
        raise ModeError(f"unknown simulation mode {mode!r}")
    fired = rel <= window * (1 + 1e-12)
    rel = np.where(fired, np.minimum(rel, window), np.nan)
    stage = states.stage + 1
    times = rel + stage * window
    states.fired = fired
    states.fire_step = params.silent_steps + rel
    return SpikeFrame(times, stage, window)


def run_layer(params, frame, mode="stepped"):
    states = run_silent(params, frame, mode)
    out = run_spiking(states, params, mode)
    return out, states
