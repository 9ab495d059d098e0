"""Tests for frame synthesis: constellations, waveforms, noise frames."""

import numpy as np
import pytest

from rfmc import sigsynth as ss
from rfmc.sigsynth import ModulationLabel, WaveformParams

ALL_MODULATED = [
    ModulationLabel.BPSK,
    ModulationLabel.QPSK,
    ModulationLabel.CPM,
    ModulationLabel.GFSK,
    ModulationLabel.QAM16,
    ModulationLabel.GMSK,
]


class TestLabels:
    def test_fixed_order(self):
        assert ss.LABEL_NAMES == ("noise", "BPSK", "QPSK", "CPM", "GFSK", "QAM16", "GMSK")
        for cls in range(7):
            assert int(ModulationLabel(cls)) == cls

    def test_bijective_mapping(self):
        for cls, name in enumerate(ss.LABEL_NAMES):
            assert ss.label_name(cls) == name
            assert int(ss.label_from_name(name)) == cls

    def test_unknown_name_rejected(self):
        with pytest.raises(ValueError):
            ss.label_from_name("OFDM")


class TestGenSymbols:
    def test_bpsk_points_are_plus_minus_one(self):
        symbols = ss.gen_symbols(ModulationLabel.BPSK, 4, seed=5)
        assert all(s in (1 + 0j, -1 + 0j) for s in symbols)

    def test_qam16_mean_power_monte_carlo(self):
        # Monte-Carlo oracle over the {+-1,+-3}^2/sqrt(10) grid
        symbols = ss.gen_symbols(ModulationLabel.QAM16, 10**5, seed=7)
        assert np.mean(np.abs(symbols) ** 2) == pytest.approx(1.0, abs=0.02)

    def test_qpsk_unit_modulus(self):
        (point,) = ss.gen_symbols(ModulationLabel.QPSK, 1, seed=11)
        assert abs(point) == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("label", [ModulationLabel.NOISE, ModulationLabel.CPM,
                                       ModulationLabel.GFSK, ModulationLabel.GMSK])
    def test_nonlinear_labels_rejected(self, label):
        with pytest.raises(ValueError):
            ss.gen_symbols(label, 10, seed=0)

    def test_bad_count_rejected(self):
        with pytest.raises(ValueError):
            ss.gen_symbols(ModulationLabel.BPSK, 0, seed=0)

    def test_deterministic(self):
        a = ss.gen_symbols(ModulationLabel.QAM16, 64, seed=9)
        b = ss.gen_symbols(ModulationLabel.QAM16, 64, seed=9)
        assert np.array_equal(a, b)

    def test_constellations_unit_power(self):
        for label in (ModulationLabel.BPSK, ModulationLabel.QPSK, ModulationLabel.QAM16):
            points = ss.constellation(label)
            assert np.mean(np.abs(points) ** 2) == pytest.approx(1.0, abs=1e-12)


class TestModulate:
    @pytest.mark.parametrize("label", ALL_MODULATED)
    def test_frame_shape_and_rms(self, label):
        frame = ss.modulate(label, seed=3)
        assert frame.shape == (ss.FRAME_LEN,)
        assert np.all(np.isfinite(frame))
        power = np.mean(np.abs(ss.deinterleave(frame)) ** 2)
        assert abs(np.sqrt(power) - 1.0) < 1e-6

    def test_gmsk_constant_envelope(self):
        frame = ss.modulate(ModulationLabel.GMSK, seed=1)
        moduli = np.abs(ss.deinterleave(frame))
        assert np.all(np.abs(moduli - 1.0) < 1e-6)

    @pytest.mark.parametrize("label", [ModulationLabel.CPM, ModulationLabel.GFSK,
                                       ModulationLabel.GMSK])
    def test_envelope_coefficient_of_variation(self, label):
        moduli = np.abs(ss.deinterleave(ss.modulate(label, seed=2)))
        assert np.std(moduli) / np.mean(moduli) < 1e-6

    def test_bpsk_custom_params_rms(self):
        params = WaveformParams(samples_per_symbol=4, rrc_rolloff=0.35)
        frame = ss.modulate(ModulationLabel.BPSK, params, seed=8)
        power = np.mean(np.abs(ss.deinterleave(frame)) ** 2)
        assert abs(np.sqrt(power) - 1.0) < 1e-6

    @pytest.mark.parametrize("label", [ModulationLabel.CPM, ModulationLabel.GFSK,
                                       ModulationLabel.GMSK])
    def test_phase_increment_bound(self, label):
        # Oracle: the per-sample bound follows from the frequency pulse
        # before any frame is built (pi*h/sps for unit-sum stride sums).
        params = ss.DEFAULT_WAVEFORM
        bound = ss.max_phase_increment(label, params)
        z = ss.deinterleave(ss.modulate(label, params, seed=21))
        increments = np.abs(np.angle(z[1:] * np.conj(z[:-1])))
        assert increments.max() <= bound + 1e-9

    def test_cpm_bound_matches_closed_form(self):
        params = WaveformParams(samples_per_symbol=4)
        expected = np.pi * params.cpm_mod_index / params.samples_per_symbol
        assert ss.max_phase_increment(ModulationLabel.CPM, params) == pytest.approx(expected)

    def test_phase_continuity_unwrapped(self):
        for label in (ModulationLabel.CPM, ModulationLabel.GFSK, ModulationLabel.GMSK):
            z = ss.deinterleave(ss.modulate(label, seed=4))
            jumps = np.abs(np.diff(np.unwrap(np.angle(z))))
            assert jumps.max() <= ss.max_phase_increment(label) + 1e-9

    def test_noise_label_rejected(self):
        with pytest.raises(ValueError):
            ss.modulate(ModulationLabel.NOISE, seed=0)

    def test_invalid_params_rejected(self):
        with pytest.raises(ValueError):
            ss.modulate(ModulationLabel.BPSK, WaveformParams(samples_per_symbol=7), seed=0)
        with pytest.raises(ValueError):
            ss.modulate(ModulationLabel.BPSK, WaveformParams(rrc_rolloff=0.0), seed=0)
        with pytest.raises(ValueError):
            ss.modulate(ModulationLabel.GMSK, WaveformParams(gmsk_bt=1.5), seed=0)

    @pytest.mark.parametrize("label", ALL_MODULATED)
    def test_deterministic(self, label):
        assert np.array_equal(ss.modulate(label, seed=17), ss.modulate(label, seed=17))

    def test_seed_sensitivity(self):
        assert not np.array_equal(
            ss.modulate(ModulationLabel.QPSK, seed=1),
            ss.modulate(ModulationLabel.QPSK, seed=2),
        )


class TestNoiseFrame:
    def test_bit_identical_for_same_seed(self):
        assert np.array_equal(ss.gen_noise_frame(42), ss.gen_noise_frame(42))

    def test_pooled_component_variance(self):
        # Monte-Carlo variance estimate over 1e4 frames
        pooled = np.concatenate([ss.gen_noise_frame(seed) for seed in range(10**4)])
        assert pooled.var() == pytest.approx(0.5, abs=0.01)

    def test_adjacent_seeds_differ(self):
        assert not np.array_equal(ss.gen_noise_frame(5), ss.gen_noise_frame(6))

    def test_shape(self):
        frame = ss.gen_noise_frame(0)
        assert frame.shape == (ss.FRAME_LEN,)
        assert np.all(np.isfinite(frame))


class TestInterleave:
    def test_round_trip(self, rng):
        z = rng.standard_normal(900) + 1j * rng.standard_normal(900)
        assert np.array_equal(ss.deinterleave(ss.interleave(z)), z)

    def test_layout(self):
        frame = ss.interleave(np.array([1 + 2j, 3 + 4j]))
        assert np.array_equal(frame, [1.0, 2.0, 3.0, 4.0])
