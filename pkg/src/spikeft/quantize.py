"""
Neuromorphic-chip number formats applied to a NetworkPlan.

Weights become m * 2^exp with an 8-bit-plus-sign mantissa and a per-layer
shared exponent. Voltages live on an integer grid obtained by multiplying
real voltages with a global power-of-two scale; the threshold must stay below
the chip's cap and every current (synaptic or drive) is a multiple of the
minimum current quantum.
"""
import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp

from .encoding import round_half_away
from .errors import CapacityError, DomainError
from .neuron import LayerParams, row_sum


@dataclass(frozen=True)
class QuantSpec:
    mantissa_min: int = -256
    mantissa_max: int = 255
    exponent_min: int = -8
    exponent_max: int = 7
    even_mantissa_at_full_range: bool = True
    voltage_limit: int = 2 ** 23
    max_threshold: int = 2 ** 23 - 2 ** 6
    current_quantum: int = 2 ** 6

    @property
    def half_range(self):
        # beyond this magnitude only even mantissas are available
        return (self.mantissa_max + 1) // 2 - 1


@dataclass
class LayerQuantReport:
    exponent: int
    even_mantissa: bool
    max_weight_error: float
    max_mantissa: int
    threshold: int
    drive_current: int

    def to_dict(self):
        return dict(self.__dict__)


@dataclass
class QuantReport:
    voltage_scale: float
    layers: list = field(default_factory=list)

    @property
    def max_weight_error(self):
        return max(l.max_weight_error for l in self.layers)

    def to_dict(self):
        return {
            "voltage_scale": self.voltage_scale,
            "max_weight_error": self.max_weight_error,
            "layers": [l.to_dict() for l in self.layers],
        }


def _mantissa(w, spec, exp, even):
    if even:
        m = 2 * round_half_away(np.asarray(w, dtype=float) / 2.0 ** (exp + 1))
        hi = spec.mantissa_max - (spec.mantissa_max % 2)
        return np.clip(m, spec.mantissa_min, hi)
    m = round_half_away(np.asarray(w, dtype=float) / 2.0 ** exp)
    return np.clip(m, spec.mantissa_min, spec.mantissa_max)


def quantize_weight(w, spec=None, shared_exp=0, force_even=None):
    """
    Round w onto the grid m * 2^shared_exp.

    The even-mantissa rule applies to weights whose mantissa magnitude exceeds
    the half range, unless `force_even` decides for the whole group.
    Returns (quantized weight, mantissa, exponent); saturates instead of raising.
    """
    spec = spec or QuantSpec()
    if not spec.exponent_min <= shared_exp <= spec.exponent_max:
        raise DomainError(f"exponent {shared_exp} outside [{spec.exponent_min}, {spec.exponent_max}]")
    m = _mantissa(w, spec, shared_exp, False)
    if force_even is None:
        even = spec.even_mantissa_at_full_range & (np.abs(m) > spec.half_range)
        m = np.where(even, _mantissa(w, spec, shared_exp, True), m)
    elif force_even and spec.even_mantissa_at_full_range:
        m = _mantissa(w, spec, shared_exp, True)
    q = m * 2.0 ** shared_exp
    if np.ndim(w) == 0:
        return float(q), int(m), shared_exp
    return q, m.astype(int), shared_exp


def smallest_exponent(max_abs, spec, lower=None):
    lo = spec.exponent_min if lower is None else max(spec.exponent_min, lower)
    for exp in range(lo, spec.exponent_max + 1):
        if max_abs / 2.0 ** exp <= spec.mantissa_max:
            return exp
    return None


def _values(weights):
    return weights.data if sp.issparse(weights) else np.asarray(weights).ravel()


def _try_scale(plan, spec, log2_scale):
    """Quantized layers for one voltage scale, or None if it does not fit."""
    v = 2.0 ** log2_scale
    t_max = plan.t_max
    # with an odd window the drive must be even in quanta so that
    # threshold = drive * t_max / 2 stays an integer
    drive_quantum = spec.current_quantum * (1 if t_max % 2 == 0 else 2)
    layers, reports, scales = [], [], []
    for layer in plan.layers:
        real_w = layer.weights
        max_abs = float(np.max(np.abs(_values(real_w)))) if _values(real_w).size else 0.0
        # synaptic currents v * m * 2^exp must be whole current quanta
        floor_exp = int(math.log2(spec.current_quantum)) - log2_scale
        exp = smallest_exponent(max_abs, spec, floor_exp)
        if exp is None:
            return None
        m0 = round_half_away(_values(real_w) / 2.0 ** exp)
        even = spec.even_mantissa_at_full_range and bool(np.any(np.abs(m0) > spec.half_range))
        if sp.issparse(real_w):
            q = sp.csr_matrix(real_w, copy=True)
            q.data = quantize_weight(q.data, spec, exp, even)[0]
        else:
            q = quantize_weight(np.asarray(real_w), spec, exp, even)[0]
        err = float(np.max(np.abs(_values(q - real_w)))) if _values(q - real_w).size else 0.0
        w_int = q * v
        drive = drive_quantum * math.ceil(v * layer.drive_current / drive_quantum - 1e-9)
        threshold = drive * t_max // 2
        if threshold > spec.max_threshold:
            return None
        bias = -round_half_away(row_sum(w_int) * (layer.silent_steps - t_max / 2))
        if np.any(np.abs(bias) > spec.voltage_limit):
            return None
        layers.append(LayerParams(w_int, bias, float(threshold), float(drive),
                                  layer.silent_steps, layer.total_steps,
                                  voltage_range=float(spec.voltage_limit),
                                  ramp_lead=layer.ramp_lead))
        mant = _values(q) / 2.0 ** exp
        reports.append(LayerQuantReport(exp, even, err, int(np.max(np.abs(mant))) if mant.size else 0,
                                        int(threshold), int(drive)))
        scales.append(threshold / (v * t_max / 2))
    return layers, reports, scales


def quantize_plan(plan, spec=None):
    """Return (hardware plan, QuantReport) using the largest voltage scale that fits."""
    spec = spec or QuantSpec()
    if plan.quantized:
        raise DomainError("plan is already quantized")
    top = max(l.threshold for l in plan.layers)
    start = int(math.floor(math.log2(spec.max_threshold / top))) + 1
    floor = int(math.log2(spec.current_quantum)) - spec.exponent_max
    for log2_scale in range(start, floor - 1, -1):
        result = _try_scale(plan, spec, log2_scale)
        if result is not None:
            layers, reports, scales = result
            v = 2.0 ** log2_scale
            qplan = replace(plan, layers=layers, scales=scales, voltage_scale=v)
            return qplan, QuantReport(v, reports)
    raise CapacityError(
        f"no voltage scale maps threshold {top:g} and the weights onto the hardware ranges")
