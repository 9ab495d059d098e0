"""Integer layer kernels for the fixed-point inference path.

The default backend is a numba-compiled loop; set ``RFMC_NO_NUMBA=1`` (or
run without numba installed) to fall back to vectorized numpy. Both
backends compute identical integers: int16 weights/activations multiply
into an int64 accumulator (modeling a 48-bit DSP accumulator), bias is
added pre-aligned, ReLU clamps the accumulator, and requantization
right-shifts with round-half-away-from-zero then saturates to int16.

``benchmarks/compare_backends.py`` measures the speed difference.
"""

from __future__ import annotations

import os

import numpy as np

INT16_MIN = -32768
INT16_MAX = 32767

# Accumulators must stay within a signed 48-bit register.
ACC_LIMIT = 1 << 47


def round_shift(values: np.ndarray, shift: int) -> np.ndarray:
    """Shift right by ``shift`` bits rounding half away from zero.

    Negative ``shift`` means shift left (exact).
    """
    v = np.asarray(values, dtype=np.int64)
    if shift == 0:
        return v.copy()
    if shift < 0:
        return v << np.int64(-shift)
    half = np.int64(1) << np.int64(shift - 1)
    magnitude = (np.abs(v) + half) >> np.int64(shift)
    return np.where(v >= 0, magnitude, -magnitude)


def layer_forward_numpy(
    weights: np.ndarray,
    bias_acc: np.ndarray,
    x: np.ndarray,
    shift: int,
    apply_relu: bool,
    requantize: bool,
) -> np.ndarray:
    """One quantized layer on int64 accumulators, vectorized numpy."""
    acc = weights.astype(np.int64) @ x.astype(np.int64)
    acc += bias_acc
    if apply_relu:
        np.maximum(acc, 0, out=acc)
    if requantize:
        acc = round_shift(acc, shift)
        np.clip(acc, INT16_MIN, INT16_MAX, out=acc)
    return acc


def _numba_disabled() -> bool:
    return os.environ.get("RFMC_NO_NUMBA", "0") not in ("", "0")


layer_forward_numba = None
if not _numba_disabled():
    try:
        from numba import njit, types

        # readonly array types so buffers mapped straight from model files
        # and sockets are accepted alongside ordinary writable arrays
        _SIG = types.int64[::1](
            types.Array(types.int16, 2, "C", readonly=True),
            types.Array(types.int64, 1, "C", readonly=True),
            types.Array(types.int16, 1, "C", readonly=True),
            types.int64,
            types.boolean,
            types.boolean,
        )

        @njit(_SIG, cache=True, nogil=True)
        def _layer_kernel(weights, bias_acc, x, shift, apply_relu, requantize):  # pragma: no cover
            n_out, n_in = weights.shape
            out = np.empty(n_out, dtype=np.int64)
            for j in range(n_out):
                acc = bias_acc[j]
                for k in range(n_in):
                    acc += np.int64(weights[j, k]) * np.int64(x[k])
                if apply_relu and acc < 0:
                    acc = 0
                if requantize:
                    if shift > 0:
                        half = np.int64(1) << (shift - np.int64(1))
                        if acc >= 0:
                            acc = (acc + half) >> shift
                        else:
                            acc = -((-acc + half) >> shift)
                    elif shift < 0:
                        acc = acc << (-shift)
                    if acc > INT16_MAX:
                        acc = INT16_MAX
                    elif acc < INT16_MIN:
                        acc = INT16_MIN
                out[j] = acc
            return out

        def layer_forward_numba(weights, bias_acc, x, shift, apply_relu, requantize):
            """One quantized layer via the numba kernel."""
            return _layer_kernel(
                weights, bias_acc, x, np.int64(shift), bool(apply_relu), bool(requantize)
            )

    except ImportError:
        layer_forward_numba = None

if layer_forward_numba is not None:
    BACKEND = "numba"
    layer_forward = layer_forward_numba
else:
    BACKEND = "numpy"
    layer_forward = layer_forward_numpy
