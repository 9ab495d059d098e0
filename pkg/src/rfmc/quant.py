"""16-bit fixed-point quantization and the integer-only inference path.

Scaling is symmetric power-of-two per layer: a weight format and an input
activation format are calibrated from data, weights/activations are stored
as int16, biases as int32 pre-aligned to the accumulator position
(weight_frac + act_frac), and each hidden layer requantizes its 48-bit
accumulator down to the next layer's activation format with a rounded
right shift. The output layer never requantizes: the classifier decision
is the argmax of the raw integer accumulators (softmax, being monotone,
cannot change an argmax).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import kernels
from .kernels import ACC_LIMIT, INT16_MAX, INT16_MIN, round_shift
from .nn import NetworkParams, relu

INT32_MIN = -(1 << 31)
INT32_MAX = (1 << 31) - 1

# Percentile of |values| that the chosen format must cover.
CALIBRATION_PERCENTILE = 99.9


@dataclass(frozen=True)
class FixedPointFormat:
    """Signed 16-bit format with ``frac_bits`` fractional bits."""

    frac_bits: int

    def __post_init__(self) -> None:
        if not 0 <= self.frac_bits <= 15:
            raise ValueError("frac_bits must be in 0..15")

    @property
    def scale(self) -> int:
        return 1 << self.frac_bits

    @property
    def min_value(self) -> float:
        return -(2.0 ** (15 - self.frac_bits))

    @property
    def max_value(self) -> float:
        return (2.0**15 - 1) / self.scale


def quantize_value(x: float, fmt: FixedPointFormat) -> int:
    """round(x * 2**frac) half away from zero, saturated to int16."""
    if not math.isfinite(x):
        raise ValueError("cannot quantize a non-finite value")
    scaled = math.floor(abs(x) * fmt.scale + 0.5)
    q = scaled if x >= 0 else -scaled
    return max(INT16_MIN, min(INT16_MAX, q))


def quantize_array(x: np.ndarray, fmt: FixedPointFormat) -> np.ndarray:
    """Vectorized quantize_value; returns int16."""
    x = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise ValueError("cannot quantize non-finite values")
    magnitude = np.floor(np.abs(x) * fmt.scale + 0.5)
    q = np.where(x >= 0, magnitude, -magnitude)
    return np.clip(q, INT16_MIN, INT16_MAX).astype(np.int16)


def dequantize_value(q: int, fmt: FixedPointFormat) -> float:
    """Exact: q / 2**frac."""
    return q / fmt.scale


def dequantize_array(q: np.ndarray, fmt: FixedPointFormat) -> np.ndarray:
    return np.asarray(q, dtype=np.float64) / fmt.scale


def fmt_for_magnitude(peak: float) -> FixedPointFormat:
    """Largest frac_bits whose range +-2**(15-frac) covers ``peak``."""
    if peak <= 0:
        return FixedPointFormat(15)
    int_bits = max(0, math.ceil(math.log2(peak)))
    while 2.0**int_bits < peak:  # guard log2 rounding
        int_bits += 1
    return FixedPointFormat(max(0, min(15, 15 - int_bits)))


def choose_formats(
    params: NetworkParams, calibration: np.ndarray
) -> tuple[list[int], list[int]]:
    """Per-layer (weight frac_bits, input activation frac_bits).

    Activation ranges are observed by running the float network over the
    calibration frames; each format covers the 99.9th percentile of the
    absolute values seen, independently for weights and activations.
    """
    cal = np.atleast_2d(np.asarray(calibration, dtype=np.float64))
    if cal.shape[0] == 0:
        raise ValueError("calibration set must be non-empty")
    if cal.shape[1] != params.weights[0].shape[1]:
        raise ValueError("calibration frames do not match the network input dim")

    weight_frac = [
        fmt_for_magnitude(float(np.percentile(np.abs(w), CALIBRATION_PERCENTILE)))
        .frac_bits
        for w in params.weights
    ]

    act_frac = []
    h = cal
    for i in range(params.n_layers):
        peak = float(np.percentile(np.abs(h), CALIBRATION_PERCENTILE))
        act_frac.append(fmt_for_magnitude(peak).frac_bits)
        if i < params.n_layers - 1:
            h = relu(h @ params.weights[i].T + params.biases[i])
    return weight_frac, act_frac


@dataclass
class QuantizedNetwork:
    """int16 network plus per-layer fixed-point bookkeeping.

    ``biases[i]`` is stored pre-aligned at the layer's accumulator
    position ``weight_frac[i] + act_frac[i]`` (int32 range, int64 dtype
    so it feeds the kernels directly).
    """

    weights: list[np.ndarray]
    biases: list[np.ndarray]
    weight_frac: list[int]
    act_frac: list[int]

    @property
    def layer_dims(self) -> tuple[int, ...]:
        return (self.weights[0].shape[1], *(w.shape[0] for w in self.weights))

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    @property
    def input_format(self) -> FixedPointFormat:
        return FixedPointFormat(self.act_frac[0])

    def acc_frac(self, layer: int) -> int:
        """Fixed-point position of the layer's accumulator."""
        return self.weight_frac[layer] + self.act_frac[layer]

    def requant_shift(self, layer: int) -> int:
        """Right shift from accumulator position to the next activation format."""
        return self.acc_frac(layer) - self.act_frac[layer + 1]

    def validate(self) -> None:
        if not (len(self.weights) == len(self.biases) == len(self.weight_frac) == len(self.act_frac)):
            raise ValueError("per-layer lists must have equal length")
        for w, b in zip(self.weights, self.biases):
            if w.dtype != np.int16 or b.dtype != np.int64:
                raise ValueError("weights must be int16 and biases int64")
            if b.shape != (w.shape[0],):
                raise ValueError("bias length must match weight rows")
            if np.any(b < INT32_MIN) or np.any(b > INT32_MAX):
                raise ValueError("aligned biases must fit in int32")
        for f in (*self.weight_frac, *self.act_frac):
            FixedPointFormat(f)


def _align_bias(bias: np.ndarray, acc_frac: int) -> np.ndarray:
    """Quantize a float bias vector at the accumulator position (int32 range)."""
    scale = float(1 << acc_frac)
    magnitude = np.floor(np.abs(bias) * scale + 0.5)
    q = np.where(np.asarray(bias) >= 0, magnitude, -magnitude)
    return np.clip(q, INT32_MIN, INT32_MAX).astype(np.int64)


def quantize_network(params: NetworkParams, calibration: np.ndarray) -> QuantizedNetwork:
    """Quantize a trained float network under calibrated per-layer formats."""
    params.validate()
    weight_frac, act_frac = choose_formats(params, calibration)
    weights = [
        np.ascontiguousarray(quantize_array(w, FixedPointFormat(wf)))
        for w, wf in zip(params.weights, weight_frac)
    ]
    biases = [
        _align_bias(b, wf + af)
        for b, wf, af in zip(params.biases, weight_frac, act_frac)
    ]
    return QuantizedNetwork(weights, biases, weight_frac, act_frac)


def quantize_frame(frame: np.ndarray, fmt: FixedPointFormat) -> np.ndarray:
    """Quantize a 1800-real frame (or any flat frame) to int16."""
    frame = np.asarray(frame)
    if frame.ndim != 1:
        raise ValueError("frame must be a flat vector")
    return quantize_array(frame, fmt)


def _layer_sequential(weights, bias_acc, x, shift, apply_relu, requantize) -> np.ndarray:
    """Reference path: neurons one by one, ascending input index per neuron."""
    out = np.empty(weights.shape[0], dtype=np.int64)
    x64 = x.astype(np.int64)
    for j in range(weights.shape[0]):
        acc = int(weights[j].astype(np.int64) @ x64) + int(bias_acc[j])
        if apply_relu and acc < 0:
            acc = 0
        if requantize:
            acc = int(round_shift(np.array([acc]), shift)[0])
            acc = max(INT16_MIN, min(INT16_MAX, acc))
        out[j] = acc
    return out


def _layer_parallel(weights, bias_acc, x, shift, apply_relu, requantize, max_workers=4) -> np.ndarray:
    """Same arithmetic with neurons fanned out across threads."""
    x64 = x.astype(np.int64)

    def neuron(j: int) -> int:
        acc = int(weights[j].astype(np.int64) @ x64) + int(bias_acc[j])
        if apply_relu and acc < 0:
            acc = 0
        if requantize:
            acc = int(round_shift(np.array([acc]), shift)[0])
            acc = max(INT16_MIN, min(INT16_MAX, acc))
        return acc

    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        results = list(pool.map(neuron, range(weights.shape[0])))
    return np.array(results, dtype=np.int64)


_LAYER_MODES = {
    "vector": lambda *a: kernels.layer_forward(*a),
    "numpy": lambda *a: kernels.layer_forward_numpy(*a),
    "sequential": _layer_sequential,
    "parallel": _layer_parallel,
}


def quantized_forward(
    qnet: QuantizedNetwork,
    frame_q: np.ndarray,
    mode: str = "vector",
    audit: bool = False,
) -> tuple[np.ndarray, int]:
    """Integer forward pass: (int logits, label).

    ``frame_q`` must already be quantized under ``qnet.input_format``.
    ``mode`` selects the engine: "vector" (active kernel backend),
    "numpy" (forced numpy kernel), "sequential" or "parallel"
    (per-neuron reference paths). All produce identical integers.
    ``audit=True`` additionally checks every accumulator against the
    48-bit limit.
    """
    frame_q = np.ascontiguousarray(frame_q)
    if frame_q.dtype != np.int16:
        raise ValueError("frame_q must be int16 (quantized under the input format)")
    if frame_q.shape != (qnet.layer_dims[0],):
        raise ValueError(
            f"frame_q must have shape ({qnet.layer_dims[0]},), got {frame_q.shape}"
        )
    try:
        layer_fn = _LAYER_MODES[mode]
    except KeyError:
        raise ValueError(f"unknown mode {mode!r}") from None

    x = frame_q
    out = None
    for i in range(qnet.n_layers):
        last = i == qnet.n_layers - 1
        shift = 0 if last else qnet.requant_shift(i)
        if audit:
            acc = qnet.weights[i].astype(np.int64) @ x.astype(np.int64) + qnet.biases[i]
            peak = int(np.max(np.abs(acc)))
            if peak >= ACC_LIMIT:
                raise OverflowError(
                    f"layer {i} accumulator |{peak}| exceeds the 48-bit limit"
                )
        out = layer_fn(qnet.weights[i], qnet.biases[i], x, shift, not last, not last)
        if not last:
            x = out.astype(np.int16)
    return out, int(np.argmax(out))


def classify_quantized(qnet: QuantizedNetwork, frame: np.ndarray, mode: str = "vector") -> int:
    """Quantize a float frame under the input format and classify it."""
    frame_q = quantize_frame(frame, qnet.input_format)
    _, label = quantized_forward(qnet, frame_q, mode=mode)
    return label
