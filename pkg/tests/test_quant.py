"""Tests for fixed-point quantization and the integer inference path."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rfmc import nn, quant
from rfmc.kernels import ACC_LIMIT
from rfmc.quant import FixedPointFormat, QuantizedNetwork

FORMATS = st.integers(min_value=0, max_value=15)


def hand_toy_qnet() -> QuantizedNetwork:
    """2-2-2 network with power-of-two values, checkable by hand.

    Formats: input Q2.13 is not used here; a0=14, w0=14, a1=12, w1=13.
    Float view: W0=[[1,-0.5],[0.25,0.25]], b0=[0.5,-0.25] (bias at 2^28),
    W1=[[1,-1],[0.5,1]], b1=[0,0.125] (bias at 2^25).
    """
    return QuantizedNetwork(
        weights=[
            np.array([[16384, -8192], [4096, 4096]], np.int16),
            np.array([[8192, -8192], [4096, 8192]], np.int16),
        ],
        biases=[
            np.array([134217728, -67108864], np.int64),
            np.array([0, 4194304], np.int64),
        ],
        weight_frac=[14, 13],
        act_frac=[14, 12],
    )


class TestQuantizeValue:
    def test_zero(self):
        assert quant.quantize_value(0.0, FixedPointFormat(7)) == 0

    def test_unit_at_q14(self):
        assert quant.quantize_value(1.0, FixedPointFormat(14)) == 16384

    def test_saturates_high(self):
        assert quant.quantize_value(10.0, FixedPointFormat(14)) == 32767

    def test_saturates_low(self):
        assert quant.quantize_value(-10.0, FixedPointFormat(14)) == -32768

    def test_half_away_from_zero(self):
        fmt = FixedPointFormat(1)
        assert quant.quantize_value(0.25, fmt) == 1    # 0.5 scaled -> away
        assert quant.quantize_value(-0.25, fmt) == -1

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            quant.quantize_value(float("nan"), FixedPointFormat(3))

    @given(frac=FORMATS, x=st.floats(-10.0, 10.0, allow_nan=False))
    @settings(max_examples=300, deadline=None)
    def test_monotonic(self, frac, x):
        fmt = FixedPointFormat(frac)
        eps = 2.0 ** (-frac) / 3
        assert quant.quantize_value(x, fmt) <= quant.quantize_value(x + eps, fmt)


class TestDequantizeValue:
    def test_unit(self):
        assert quant.dequantize_value(16384, FixedPointFormat(14)) == 1.0

    def test_range_edge(self):
        assert quant.dequantize_value(-32768, FixedPointFormat(14)) == -2.0

    @given(frac=FORMATS, data=st.data())
    @settings(max_examples=300, deadline=None)
    def test_round_trip_bound_in_range(self, frac, data):
        fmt = FixedPointFormat(frac)
        x = data.draw(st.floats(fmt.min_value, fmt.max_value, allow_nan=False))
        back = quant.dequantize_value(quant.quantize_value(x, fmt), fmt)
        assert abs(x - back) <= 2.0 ** (-frac - 1)

    def test_saturation_edges_exact(self):
        for frac in range(16):
            fmt = FixedPointFormat(frac)
            assert quant.quantize_value(fmt.max_value, fmt) == 32767
            assert quant.quantize_value(fmt.min_value, fmt) == -32768
            assert quant.dequantize_value(-32768, fmt) == fmt.min_value
            assert quant.dequantize_value(32767, fmt) == fmt.max_value


class TestChooseFormats:
    def test_weights_within_unit_get_full_fraction(self):
        assert quant.fmt_for_magnitude(0.999).frac_bits == 15

    def test_activation_example(self):
        # max |activation| 3.2 needs range +-4 -> 13 fractional bits
        assert quant.fmt_for_magnitude(3.2).frac_bits == 13

    def test_power_of_two_boundaries(self):
        assert quant.fmt_for_magnitude(1.0).frac_bits == 15
        assert quant.fmt_for_magnitude(2.0).frac_bits == 14
        assert quant.fmt_for_magnitude(4.0).frac_bits == 13

    def test_all_layers_reported_in_range(self):
        params = nn.init_params((16, 8, 5, 7), seed=0)
        rng = np.random.default_rng(1)
        wf, af = quant.choose_formats(params, rng.standard_normal((32, 16)))
        assert len(wf) == len(af) == 3
        assert all(0 <= f <= 15 for f in wf + af)

    def test_empty_calibration_rejected(self):
        params = nn.init_params((16, 8, 7), seed=0)
        with pytest.raises(ValueError):
            quant.choose_formats(params, np.empty((0, 16)))


class TestQuantizeNetwork:
    def test_zero_network_is_all_zero(self):
        params = nn.NetworkParams(
            [np.zeros((4, 8)), np.zeros((2, 4))],
            [np.zeros(4), np.zeros(2)],
        )
        qnet = quant.quantize_network(params, np.zeros((4, 8)) + 0.5)
        for w, b in zip(qnet.weights, qnet.biases):
            assert not w.any()
            assert not b.any()

    def test_deterministic(self):
        params = nn.init_params((16, 8, 7), seed=4)
        cal = np.random.default_rng(0).standard_normal((64, 16))
        a = quant.quantize_network(params, cal)
        b = quant.quantize_network(params, cal)
        for wa, wb in zip(a.weights + a.biases, b.weights + b.biases):
            assert np.array_equal(wa, wb)
        assert a.weight_frac == b.weight_frac and a.act_frac == b.act_frac

    def test_weight_round_trip_bound(self):
        params = nn.init_params((16, 8, 7), seed=5)
        cal = np.random.default_rng(0).standard_normal((64, 16))
        qnet = quant.quantize_network(params, cal)
        for w_float, w_q, frac in zip(params.weights, qnet.weights, qnet.weight_frac):
            fmt = FixedPointFormat(frac)
            in_range = (w_float >= fmt.min_value) & (w_float <= fmt.max_value)
            err = np.abs(quant.dequantize_array(w_q, fmt) - w_float)
            assert np.all(err[in_range] <= 2.0 ** (-frac - 1) + 1e-15)


class TestQuantizeFrame:
    def test_zero_frame(self):
        fmt = FixedPointFormat(14)
        assert not quant.quantize_frame(np.zeros(1800), fmt).any()

    def test_unit_values(self):
        fmt = FixedPointFormat(14)
        assert np.all(quant.quantize_frame(np.ones(1800), fmt) == 16384)

    def test_length_preserved(self):
        fmt = FixedPointFormat(13)
        out = quant.quantize_frame(np.linspace(-2, 2, 1800), fmt)
        assert out.shape == (1800,)
        assert out.dtype == np.int16


class TestQuantizedForward:
    def test_all_zero_input_yields_bias_argmax(self):
        qnet = hand_toy_qnet()
        x = np.zeros(2, dtype=np.int16)
        logits, label = quant.quantized_forward(qnet, x)
        # layer 0 from biases: acc=(2^27, -2^26) -> relu -> shift 16 -> (2048, 0)
        # layer 1: (8192*2048, 4096*2048 + 4194304) = (16777216, 12582912)
        assert list(logits) == [16777216, 12582912]
        assert label == 0

    def test_hand_toy_exact_integers(self):
        qnet = hand_toy_qnet()
        x = quant.quantize_frame(np.array([0.75, 0.5]), qnet.input_format)
        assert list(x) == [12288, 8192]
        logits, label = quant.quantized_forward(qnet, x)
        assert list(logits) == [31457280, 23068672]
        assert label == 0

    @pytest.mark.parametrize("mode", ["vector", "numpy", "parallel"])
    def test_all_modes_agree_with_sequential(self, mode, rng):
        params = nn.init_params((32, 12, 7), seed=6)
        qnet = quant.quantize_network(params, rng.standard_normal((64, 32)))
        for _ in range(10):
            frame_q = quant.quantize_frame(rng.standard_normal(32), qnet.input_format)
            logits, _ = quant.quantized_forward(qnet, frame_q, mode=mode)
            check, _ = quant.quantized_forward(qnet, frame_q, mode="sequential")
            assert np.array_equal(logits, check)

    def test_ties_break_low(self):
        qnet = QuantizedNetwork(
            weights=[np.zeros((3, 2), np.int16)],
            biases=[np.array([7, 7, 1], np.int64)],
            weight_frac=[10],
            act_frac=[10],
        )
        _, label = quant.quantized_forward(qnet, np.zeros(2, np.int16))
        assert label == 0

    def test_wrong_dtype_rejected(self):
        qnet = hand_toy_qnet()
        with pytest.raises(ValueError):
            quant.quantized_forward(qnet, np.zeros(2, dtype=np.float64))

    def test_wrong_length_rejected(self):
        qnet = hand_toy_qnet()
        with pytest.raises(ValueError):
            quant.quantized_forward(qnet, np.zeros(3, dtype=np.int16))

    def test_unknown_mode_rejected(self):
        qnet = hand_toy_qnet()
        with pytest.raises(ValueError):
            quant.quantized_forward(qnet, np.zeros(2, np.int16), mode="gpu")

    def test_agreement_with_float_on_random_frames(self, small_pipeline):
        # Decision-level analogue of the quantized-gap claim: both paths,
        # 1e4 random frames, trained network.
        params = small_pipeline["params"]
        qnet = small_pipeline["qnet"]
        rng = np.random.default_rng(31)
        n = 10**4
        agree = 0
        for _ in range(n):
            frame = rng.standard_normal(1800) * np.sqrt(0.5)
            float_label = nn.classify(params, frame)
            q_label = quant.classify_quantized(qnet, frame)
            agree += float_label == q_label
        assert agree / n >= 0.98

    def test_audit_passes_on_real_network(self, small_pipeline):
        qnet = small_pipeline["qnet"]
        frame = small_pipeline["test"].frames[0]
        frame_q = quant.quantize_frame(frame, qnet.input_format)
        quant.quantized_forward(qnet, frame_q, audit=True)  # must not raise


class TestAccumulatorBound:
    def test_worst_case_within_48_bits(self):
        # adversarial: every weight and input at +-32767, bias at int32 edge
        n_in = 1800
        weights = np.full((1, n_in), 32767, np.int16)
        x = np.full(n_in, 32767, np.int16)
        bias = np.array([2**31 - 1], np.int64)
        qnet = QuantizedNetwork([weights], [bias], [15], [15])
        logits, _ = quant.quantized_forward(qnet, x, audit=True)
        expected = 1800 * 32767 * 32767 + 2**31 - 1  # python big ints
        assert int(logits[0]) == expected
        assert expected < ACC_LIMIT

    def test_negative_worst_case(self):
        n_in = 1800
        weights = np.full((1, n_in), -32768, np.int16)
        x = np.full(n_in, 32767, np.int16)
        bias = np.array([-(2**31), 0], np.int64)[:1]
        qnet = QuantizedNetwork([weights], [bias], [15], [15])
        logits, _ = quant.quantized_forward(qnet, x, audit=True)
        expected = -1800 * 32768 * 32767 - 2**31
        assert int(logits[0]) == expected
        assert abs(expected) < ACC_LIMIT


class TestArgmaxInvariance:
    def test_rescaled_integer_logits_keep_argmax(self, rng):
        # softmax omission is safe: any shared positive rescale of the
        # integer logits and the float softmax of their dequantized view
        # pick the same class
        for _ in range(200):
            logits = rng.integers(-(2**40), 2**40, size=7)
            scale = float(rng.uniform(0.1, 100.0))
            assert np.argmax(logits) == np.argmax(logits * scale)
            probs = nn.softmax(logits / 2.0**25)
            assert np.argmax(probs) == np.argmax(logits)
