"""
Synthetic FMCW radar beat signals and sample file I/O.

The beat model is the textbook one: a target at range R produces a tone at
f = 2 B R / (c T_chirp) inside every chirp, and moving targets rotate that
tone's phase by 4 pi v T_chirp / lambda from one chirp to the next.
"""
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DomainError, FormatError, ParseError, UsageError

SPEED_OF_LIGHT = 299_792_458.0
CARRIER_FREQUENCY = 77e9
DEFAULT_NOISE_STD = 0.01


def _largest_power_of_four(n):
    p = 1
    while p * 4 <= n:
        p *= 4
    return p


@dataclass(frozen=True)
class RadarConfig:
    bandwidth: float = 1535e6
    sampling_frequency: float = 5e6
    chirps_per_frame: int = 128
    chirp_time: float = 230e-6
    carrier_frequency: float = CARRIER_FREQUENCY
    samples_per_chirp: int = None

    def __post_init__(self):
        for name in ("bandwidth", "sampling_frequency", "chirps_per_frame",
                     "chirp_time", "carrier_frequency"):
            value = getattr(self, name)
            if not math.isfinite(value) or value <= 0:
                raise DomainError(f"{name} must be finite and positive, got {value}")
        available = int(math.floor(self.sampling_frequency * self.chirp_time + 1e-9))
        if self.samples_per_chirp is None:
            object.__setattr__(self, "samples_per_chirp", _largest_power_of_four(available))
        n = self.samples_per_chirp
        if n < 4:
            raise DomainError(f"samples_per_chirp must be >= 4, got {n}")
        if n > available:
            raise DomainError(f"chirp only holds {available} samples, asked for {n}")

    def with_samples(self, n):
        return replace(self, samples_per_chirp=int(n))

    @property
    def wavelength(self):
        return SPEED_OF_LIGHT / self.carrier_frequency

    @property
    def max_range(self):
        return SPEED_OF_LIGHT * self.sampling_frequency * self.chirp_time / (4 * self.bandwidth)

    @property
    def range_resolution(self):
        """Nominal resolution c / 2B."""
        return SPEED_OF_LIGHT / (2 * self.bandwidth)

    @property
    def bin_range_resolution(self):
        """Range covered by one DFT bin of a `samples_per_chirp`-point transform."""
        return self.max_range / (self.samples_per_chirp / 2)

    @property
    def velocity_resolution(self):
        return self.wavelength / (2 * self.chirps_per_frame * self.chirp_time)

    @property
    def velocity_max(self):
        # largest velocity that still lands on a positive Doppler bin
        return self.velocity_resolution * (self.chirps_per_frame // 2 - 1)

    def beat_frequency(self, rng):
        return 2 * self.bandwidth * rng / (SPEED_OF_LIGHT * self.chirp_time)

    def range_bin(self, rng):
        return int(round(rng / self.bin_range_resolution))

    def doppler_bin(self, velocity):
        return int(round(velocity / self.velocity_resolution))

    def to_dict(self):
        return {
            "bandwidth": self.bandwidth,
            "sampling_frequency": self.sampling_frequency,
            "chirps_per_frame": self.chirps_per_frame,
            "chirp_time": self.chirp_time,
            "carrier_frequency": self.carrier_frequency,
            "samples_per_chirp": self.samples_per_chirp,
        }


@dataclass(frozen=True)
class Target:
    range: float
    radial_velocity: float = 0.0
    amplitude: float = 1.0
    # None means the physical round-trip phase 4 pi R / lambda
    phase: float = None

    def __post_init__(self):
        values = [self.range, self.radial_velocity, self.amplitude]
        if self.phase is not None:
            values.append(self.phase)
        if not all(math.isfinite(v) for v in values):
            raise DomainError(f"non-finite target parameter in {self}")
        if not 0 < self.amplitude <= 1:
            raise DomainError(f"amplitude must lie in (0, 1], got {self.amplitude}")

    def initial_phase(self, config):
        if self.phase is not None:
            return self.phase
        return (4 * math.pi * self.range / config.wavelength) % (2 * math.pi)


@dataclass
class Signal:
    samples: np.ndarray
    sample_rate: float = 1.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.complex128)
        if self.samples.ndim != 1 or self.samples.size < 1:
            raise DomainError("a signal needs a 1-D array with at least one sample")
        if not np.all(np.isfinite(self.samples)):
            raise DomainError("signal samples must be finite")

    def __len__(self):
        return self.samples.size

    @property
    def is_real(self):
        return bool(np.all(self.samples.imag == 0))


def _check_targets(config, targets, velocity=True):
    for t in targets:
        if not 0 < t.range <= config.max_range:
            raise DomainError(
                f"target range {t.range} m outside (0, {config.max_range:.2f}] m")
        if velocity and abs(t.radial_velocity) > config.velocity_max + 1e-12:
            raise DomainError(
                f"radial velocity {t.radial_velocity} m/s exceeds {config.velocity_max:.3f} m/s")


def _beat_samples(config, targets, chirp_index):
    n = config.samples_per_chirp
    t = np.arange(n) / config.sampling_frequency
    out = np.zeros(n)
    for tgt in targets:
        doppler = 4 * math.pi * tgt.radial_velocity * config.chirp_time / config.wavelength
        phase = tgt.initial_phase(config) + chirp_index * doppler
        out += tgt.amplitude * np.cos(2 * math.pi * config.beat_frequency(tgt.range) * t + phase)
    return out


def _scale(chirps):
    peak = max(float(np.max(np.abs(c))) for c in chirps)
    if peak > 0:
        chirps = [c / peak for c in chirps]
    return chirps


def synthesize_frame(config, targets, noise_std=DEFAULT_NOISE_STD, seed=0, _velocity_check=True):
    """All chirps of one frame, scaled together so the largest |sample| is 1."""
    targets = list(targets)
    if not math.isfinite(noise_std) or noise_std < 0:
        raise DomainError(f"noise_std must be finite and >= 0, got {noise_std}")
    _check_targets(config, targets, _velocity_check)
    rng = np.random.default_rng(seed)
    chirps = []
    for m in range(config.chirps_per_frame):
        s = _beat_samples(config, targets, m)
        if noise_std > 0:
            s = s + rng.normal(0.0, noise_std, s.size)
        chirps.append(s)
    chirps = _scale(chirps)
    return [Signal(c, config.sampling_frequency) for c in chirps]


def synthesize_chirp(config, targets, noise_std=DEFAULT_NOISE_STD, seed=0):
    targets = list(targets)
    _check_targets(config, targets)
    single = replace(config, chirps_per_frame=1)
    return synthesize_frame(single, targets, noise_std, seed, _velocity_check=False)[0]


SCENARIOS = ("S1", "S2", "S3", "S4")

_SCENARIO_TARGETS = {
    # strong reflector close by, weak one far away
    "S1": [(5.0, 1.0), (45.0, 0.05)],
    "S2": [(45.0, 0.05)],
    # two equal reflectors 0.3 m apart
    "S3": [(20.0, 0.5), (20.3, 0.5)],
    "S4": [(5.0, 1.0), (12.5, 0.3), (23.0, 0.6), (36.0, 0.15), (50.0, 0.05)],
}


def scenario(name, config=None, seed=0):
    """
    Static target list of one of the four test scenes.

    Phases are drawn uniformly from `seed`; pass seed=None to keep the
    physical round-trip phase of every target instead.
    """
    if name not in _SCENARIO_TARGETS:
        raise UsageError(f"unknown scenario {name!r}, expected one of {', '.join(SCENARIOS)}")
    if seed is None:
        targets = [Target(r, 0.0, a) for r, a in _SCENARIO_TARGETS[name]]
    else:
        rng = np.random.default_rng(seed)
        targets = [Target(r, 0.0, a, float(rng.uniform(0, 2 * math.pi)))
                   for r, a in _SCENARIO_TARGETS[name]]
    if config is not None:
        _check_targets(config, targets)
    return targets


def save_signal(signal, path, fmt="csv"):
    samples = np.asarray(getattr(signal, "samples", signal), dtype=np.complex128)
    if fmt == "csv":
        with open(path, "w", newline="\n") as fh:
            for s in samples:
                fh.write(f"{float(s.real)!r},{float(s.imag)!r}\n")
    elif fmt == "f32":
        inter = np.empty(2 * samples.size, dtype="<f4")
        inter[0::2] = samples.real
        inter[1::2] = samples.imag
        inter.tofile(path)
    else:
        raise UsageError(f"unknown signal format {fmt!r}")


def load_signal(path, fmt="csv", sample_rate=1.0):
    if fmt == "csv":
        values = []
        with open(path) as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                parts = line.split(",")
                if len(parts) != 2:
                    raise ParseError(f"line {lineno}: expected 're,im', got {line!r}", lineno)
                try:
                    values.append(complex(float(parts[0]), float(parts[1])))
                except ValueError:
                    raise ParseError(f"line {lineno}: not a number pair: {line!r}", lineno) from None
        return Signal(np.array(values), sample_rate)
    if fmt == "f32":
        raw = np.fromfile(path, dtype="<f4")
        if raw.size == 0 or raw.size % 2:
            raise FormatError(f"{path}: binary length {raw.size} is not an even number of float32")
        return Signal(raw[0::2].astype(np.float64) + 1j * raw[1::2].astype(np.float64), sample_rate)
    raise UsageError(f"unknown signal format {fmt!r}")


def save_frame(chirps, path):
    """One CSV for a whole frame: 'chirp,re,im' per sample."""
    with open(path, "w", newline="\n") as fh:
        for m, chirp in enumerate(chirps):
            for s in np.asarray(getattr(chirp, "samples", chirp), dtype=np.complex128):
                fh.write(f"{m},{float(s.real)!r},{float(s.imag)!r}\n")


def load_frame(path, sample_rate=1.0):
    rows = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 3:
                raise ParseError(f"line {lineno}: expected 'chirp,re,im', got {line!r}", lineno)
            try:
                m = int(parts[0])
                v = complex(float(parts[1]), float(parts[2]))
            except ValueError:
                raise ParseError(f"line {lineno}: malformed frame row {line!r}", lineno) from None
            rows.setdefault(m, []).append(v)
    if not rows:
        raise FormatError(f"{path}: empty frame file")
    if sorted(rows) != list(range(len(rows))):
        raise FormatError(f"{path}: chirp indices are not 0..{len(rows) - 1}")
    sizes = {len(v) for v in rows.values()}
    if len(sizes) != 1:
        raise FormatError(f"{path}: chirps have different lengths {sorted(sizes)}")
    return [Signal(np.array(rows[m]), sample_rate) for m in range(len(rows))]
