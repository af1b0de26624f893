"""Time-to-first-spike code: one spike per value, larger values spike earlier."""
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConsistencyError, DomainError, RangeError


@dataclass(frozen=True)
class EncoderConfig:
    x_max: float = 1.0
    steps_per_stage: int = 257

    def __post_init__(self):
        if not (math.isfinite(self.x_max) and self.x_max > 0):
            raise DomainError(f"x_max must be positive, got {self.x_max}")
        if int(self.steps_per_stage) != self.steps_per_stage or self.steps_per_stage < 2:
            raise DomainError(f"steps_per_stage must be an integer >= 2, got {self.steps_per_stage}")

    @property
    def t_max(self):
        return self.steps_per_stage - 1

    @property
    def gamma(self):
        return self.t_max / (2.0 * self.x_max)


@dataclass
class SpikeFrame:
    """
    Spike times of a population, one spike at most per neuron.

    `times` holds absolute step indices (float so that the continuous mode can
    use the same container); NaN marks a neuron that never fired. The frame
    belongs to stage `stage`, whose window is [stage * t_max, (stage + 1) * t_max].
    A leading batch axis is allowed.
    """
    times: np.ndarray
    stage: int
    t_max: int

    @property
    def offset(self):
        return self.stage * self.t_max

    @property
    def relative(self):
        return self.times - self.offset

    @property
    def fired(self):
        return ~np.isnan(self.times)

    @property
    def n_neurons(self):
        return self.times.shape[-1]


def round_half_away(x):
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def spike_time(x, x_min, x_max, t_min, t_max):
    """General linear value-to-time map; the simplified code is its symmetric case."""
    x = np.asarray(x, dtype=float)
    return t_min + (t_max - t_min) / (x_max - x_min) * (x_max - x)


def split_complex(x):
    """Real-block layout: real parts on neurons 0..N-1, imaginary on N..2N-1."""
    x = np.asarray(getattr(x, "samples", x))
    x = x.astype(np.complex128)
    return np.concatenate([x.real, x.imag], axis=-1)


def merge_complex(values):
    n = values.shape[-1] // 2
    return values[..., :n] + 1j * values[..., n:]


def encode(x, cfg, stepped=True, stage=0):
    """
    Encode a (complex) signal as one spike per real component.

    With `stepped` the spike times are rounded half away from zero onto the
    integer step grid; otherwise they stay real-valued.
    """
    values = split_complex(x)
    over = np.abs(values) > cfg.x_max * (1 + 1e-12)
    if np.any(over):
        idx = int(np.flatnonzero(over.reshape(-1))[0])
        flat = values.reshape(-1)
        raise RangeError(
            f"value {flat[idx]} at index {idx} exceeds x_max={cfg.x_max}", index=idx)
    t = cfg.gamma * (cfg.x_max - values)
    if stepped:
        t = round_half_away(t)
    t = np.clip(t, 0, cfg.t_max)
    return SpikeFrame(t + stage * cfg.t_max, stage, cfg.t_max)


def decode(frame, layer_scale, cfg=None, return_missing=False):
    """
    Map spike times back to values: scale * (1 - 2 * relative_step / t_max).

    A neuron without spike decodes to -layer_scale; the mask of such neurons is
    returned alongside when `return_missing` is set.
    """
    if layer_scale <= 0:
        raise DomainError(f"layer_scale must be positive, got {layer_scale}")
    t_max = frame.t_max if cfg is None else cfg.t_max
    rel = frame.times - frame.stage * t_max
    missing = np.isnan(rel)
    bad = ~missing & ((rel < -1e-9) | (rel > t_max + 1e-9))
    if np.any(bad):
        raise ConsistencyError(
            f"{int(bad.sum())} spikes outside the window of stage {frame.stage}")
    values = layer_scale * (1.0 - 2.0 * rel / t_max)
    values = np.where(missing, -layer_scale, values)
    if return_missing:
        return values, missing
    return values
