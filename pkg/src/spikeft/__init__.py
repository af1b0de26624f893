"""Time-coded spiking Fourier transform simulator (dense and radix-4 networks)."""
from .encoding import EncoderConfig, SpikeFrame, decode, encode
from .errors import (CapacityError, ConsistencyError, DomainError, FormatError, ModeError,
                     ParseError, PrematureSpikeError, RangeError, SizeError, SpikeFTError,
                     UsageError)
from .network import NetworkPlan, build_plan, build_sdft, build_sfft, run_plan
from .quantize import QuantSpec, quantize_plan
from .signal import RadarConfig, Signal, Target, scenario, synthesize_chirp, synthesize_frame

__version__ = "0.1.0"

__all__ = [
    "EncoderConfig", "SpikeFrame", "decode", "encode",
    "CapacityError", "ConsistencyError", "DomainError", "FormatError", "ModeError", "ParseError",
    "PrematureSpikeError", "RangeError", "SizeError", "SpikeFTError", "UsageError",
    "NetworkPlan", "build_plan", "build_sdft", "build_sfft", "run_plan",
    "QuantSpec", "quantize_plan",
    "RadarConfig", "Signal", "Target", "scenario", "synthesize_chirp", "synthesize_frame",
]
