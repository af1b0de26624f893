"""
Analytic event-count cost model: spike ops, energy, frame period, latency
and power of the spiking Fourier networks on a many-core neuromorphic chip.
"""
import math
from dataclasses import asdict, dataclass, replace

from .errors import DomainError, SizeError, UsageError
from .network import SDFT, SFFT, is_power_of_four, log4

PJ = 1e-12
NS = 1e-9

# per-synaptic-event energies of other chips, usable as drop-in spike energies
ALTERNATIVE_SPIKE_ENERGY_PJ = {
    "loihi2_estimate": 0.381,
    "cxquad": 0.134,
    "rolls": 0.077,
}


@dataclass(frozen=True)
class HardwareProfile:
    energy_per_spike: float = 23.6 * PJ
    energy_per_neuron_step: float = 52 * PJ
    time_per_spike: float = 3.5 * NS
    time_per_neuron_step: float = 8.4 * NS
    cores: int = 128

    def __post_init__(self):
        for k, v in asdict(self).items():
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise DomainError(f"hardware profile field {k} must be positive, got {v}")

    def with_spike_energy(self, name_or_pj):
        pj = ALTERNATIVE_SPIKE_ENERGY_PJ.get(name_or_pj, name_or_pj)
        if isinstance(pj, str):
            raise UsageError(f"unknown spike-energy profile {name_or_pj!r}")
        return replace(self, energy_per_spike=float(pj) * PJ)


def _kind(kind):
    k = kind.upper().replace("-", "")
    if k not in (SDFT, SFFT):
        raise UsageError(f"unknown architecture {kind!r}")
    return k


def _check_size(kind, n):
    if not isinstance(n, int) or n < 1:
        raise SizeError(f"transform size must be a positive integer, got {n!r}")
    if kind == SFFT and (n < 4 or not is_power_of_four(n)):
        raise SizeError(f"S-FFT needs a power of 4, got {n}")


def n_layers(kind, n):
    kind = _kind(kind)
    _check_size(kind, n)
    return 1 if kind == SDFT else log4(n)


def n_neurons(kind, n):
    """Compute neurons; the input encoding layer is not counted."""
    return 2 * n * n_layers(kind, n)


def spike_ops(kind, n):
    """
    Synaptic events per frame for a real-valued input.

    Dense: every one of the n real inputs reaches all 2n outputs, plus the 2n
    output spikes. Radix-4: 8 synapses per neuron over 2n neurons per layer.
    """
    kind = _kind(kind)
    _check_size(kind, n)
    if kind == SDFT:
        return n * 2 * n + 2 * n
    return 8 * 2 * n * log4(n) + 2 * n


def table1(kind, n, tau_l=None):
    """Symbolic architecture row; frame period and latency in units of tau_l."""
    kind = _kind(kind)
    layers = n_layers(kind, n)
    row = {
        "architecture": kind,
        "n": n,
        "neurons": n_neurons(kind, n),
        "layers": layers,
        "spike_ops": spike_ops(kind, n),
        "frame_period_tau": 2,
        "latency_tau": 2 if kind == SDFT else layers + 1,
        "neurons_expr": "2N" if kind == SDFT else "2N*log4(N)",
        "spike_ops_expr": "N*2N + 2N" if kind == SDFT else "8*2N*log4(N) + 2N",
        "latency_expr": "2*tau_l" if kind == SDFT else "(log4(N)+1)*tau_l",
    }
    if tau_l is not None:
        row["frame_period"] = row["frame_period_tau"] * tau_l
        row["latency"] = row["latency_tau"] * tau_l
    return row


@dataclass(frozen=True)
class CostReport:
    kind: str
    n: int
    steps_per_stage: int
    n_neurons: int
    n_spike_ops: int
    neuron_steps: float
    spike_energy: float  # uJ
    neuron_energy: float  # uJ
    energy_per_frame: float  # uJ
    frame_period: float  # us
    latency: float  # us
    power: float  # mW

    def to_dict(self):
        return asdict(self)

    def rows(self):
        return [
            ("neurons", self.n_neurons, ""),
            ("spike ops (thousand)", round(self.n_spike_ops / 1000), ""),
            ("energy per frame", self.energy_per_frame, "uJ"),
            ("frame period", self.frame_period, "us"),
            ("latency", self.latency, "us"),
            ("power", self.power, "mW"),
        ]


def estimate(kind, n, steps_per_stage, profile=None):
    """Energy, timing and power of one frame at `steps_per_stage` steps per stage."""
    kind = _kind(kind)
    profile = profile or HardwareProfile()
    if not isinstance(steps_per_stage, int) or steps_per_stage < 1:
        raise DomainError(f"steps_per_stage must be an integer >= 1, got {steps_per_stage!r}")
    layers = n_layers(kind, n)
    neurons = n_neurons(kind, n)
    ops = spike_ops(kind, n)
    per_layer = 2 * n
    if kind == SDFT:
        neuron_steps = 2 * steps_per_stage * per_layer
        latency_steps = period_steps = 2 * steps_per_stage
    else:
        # all L layers update over the L+1 stages a frame spends in flight,
        # and pipelining spreads that cost over L frames
        neuron_steps = (layers + 1) * steps_per_stage * per_layer
        latency_steps = (layers + 1) * steps_per_stage
        period_steps = 2 * steps_per_stage
    e_spike = ops * profile.energy_per_spike
    e_neuron = neuron_steps * profile.energy_per_neuron_step
    spikes_per_core = ops / profile.cores
    neurons_per_core = neurons / profile.cores
    spike_time = spikes_per_core * profile.time_per_spike
    latency = spike_time + latency_steps * neurons_per_core * profile.time_per_neuron_step
    period = spike_time + period_steps * neurons_per_core * profile.time_per_neuron_step
    energy = e_spike + e_neuron
    return CostReport(
        kind=kind, n=n, steps_per_stage=steps_per_stage, n_neurons=neurons, n_spike_ops=ops,
        neuron_steps=neuron_steps, spike_energy=e_spike * 1e6, neuron_energy=e_neuron * 1e6,
        energy_per_frame=energy * 1e6, frame_period=period * 1e6, latency=latency * 1e6,
        power=energy / latency * 1e3,
    )


@dataclass(frozen=True)
class Accelerator:
    name: str
    energy: float  # uJ per transform
    time: float  # us per transform

    @classmethod
    def from_report(cls, report):
        return cls(f"{report.kind}-{report.n}", report.energy_per_frame, report.latency)


# published conventional FFT accelerators for a 1024-point transform
ACCELERATORS = (
    Accelerator("memory-based DSP", 0.484, 2.81),
    Accelerator("low-footprint multi-core DSP", 0.0563, 8.8),
    Accelerator("matrix FFT (LTE)", 0.126, 1.38),
)


@dataclass(frozen=True)
class Comparison:
    accelerator: str
    energy_ratio: float
    latency_ratio: float
    period_ratio: float


def compare_accelerators(report, accelerators=ACCELERATORS):
    """How many times more energy and time the spiking network needs per frame."""
    if report is None:
        raise UsageError("compare_accelerators needs a cost report")
    return [Comparison(a.name, report.energy_per_frame / a.energy,
                       report.latency / a.time, report.frame_period / a.time)
            for a in accelerators]
