"""Baseband I/Q frame synthesis for six modulation classes plus noise.

A frame is 900 complex samples carried as 1800 interleaved reals
(I, Q, I, Q, ...). Linear classes (BPSK/QPSK/QAM16) are RRC pulse-shaped
constellation streams; CPM/GFSK/GMSK are continuous-phase waveforms built
from a frequency pulse and a running phase integral. Everything is a pure
function of (label, params, seed).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .seeding import rng_from_seed

FRAME_LEN = 1800      # interleaved reals per frame
FRAME_SAMPLES = 900   # complex samples per frame


class ModulationLabel(IntEnum):
    NOISE = 0
    BPSK = 1
    QPSK = 2
    CPM = 3
    GFSK = 4
    QAM16 = 5
    GMSK = 6


LABEL_NAMES = ("noise", "BPSK", "QPSK", "CPM", "GFSK", "QAM16", "GMSK")
NUM_CLASSES = len(LABEL_NAMES)

LINEAR_LABELS = (ModulationLabel.BPSK, ModulationLabel.QPSK, ModulationLabel.QAM16)
PHASE_LABELS = (ModulationLabel.CPM, ModulationLabel.GFSK, ModulationLabel.GMSK)


def label_name(label: int) -> str:
    return LABEL_NAMES[int(label)]


def label_from_name(name: str) -> ModulationLabel:
    try:
        return ModulationLabel(LABEL_NAMES.index(name))
    except ValueError:
        raise ValueError(f"unknown modulation name: {name!r}") from None


@dataclass(frozen=True)
class WaveformParams:
    """Waveform knobs shared by all classes of one dataset.

    GFSK and GMSK differ only by the Gaussian filter's bandwidth-time
    product; both use ``fsk_dev_index`` as the modulation index. CPM uses
    its own index and a rectangular ("rect") or raised-cosine ("rc")
    frequency pulse of ``cpm_pulse_len_symbols`` symbols.

    ``samples_per_symbol`` must divide 900. The default of 90 (10 symbols
    per frame for the linear classes) is what the stock classifier is
    tuned for: denser symbol packing makes held-out accuracy collapse.
    """

    samples_per_symbol: int = 90
    rrc_rolloff: float = 0.35
    rrc_span_symbols: int = 8
    gfsk_bt: float = 0.5
    gmsk_bt: float = 0.3
    gaussian_span_symbols: int = 4
    fsk_dev_index: float = 0.5
    cpm_mod_index: float = 0.5
    cpm_pulse: str = "rect"
    cpm_pulse_len_symbols: int = 1

    def validate(self) -> None:
        if self.samples_per_symbol < 2:
            raise ValueError("samples_per_symbol must be >= 2")
        if FRAME_SAMPLES % self.samples_per_symbol != 0:
            raise ValueError(
                f"{FRAME_SAMPLES} must be an integer multiple of "
                f"samples_per_symbol={self.samples_per_symbol}"
            )
        if not 0.0 < self.rrc_rolloff <= 1.0:
            raise ValueError("rrc_rolloff must be in (0, 1]")
        for name in ("gfsk_bt", "gmsk_bt"):
            bt = getattr(self, name)
            if not 0.0 < bt <= 1.0:
                raise ValueError(f"{name} must be in (0, 1]")
        if self.fsk_dev_index <= 0 or self.cpm_mod_index <= 0:
            raise ValueError("modulation indices must be > 0")
        if self.cpm_pulse not in ("rect", "rc"):
            raise ValueError("cpm_pulse must be 'rect' or 'rc'")
        if self.cpm_pulse_len_symbols < 1:
            raise ValueError("cpm_pulse_len_symbols must be >= 1")
        if self.rrc_span_symbols < 1 or self.gaussian_span_symbols < 1:
            raise ValueError("filter spans must be >= 1 symbol")


DEFAULT_WAVEFORM = WaveformParams()

# Constellations, unit average power.
_BPSK_POINTS = np.array([1.0 + 0.0j, -1.0 + 0.0j])
_QPSK_POINTS = np.array([1 + 1j, -1 + 1j, -1 - 1j, 1 - 1j]) / math.sqrt(2.0)
_QAM16_POINTS = np.array(
    [complex(i, q) for i in (-3, -1, 1, 3) for q in (-3, -1, 1, 3)]
) / math.sqrt(10.0)

_CONSTELLATIONS = {
    ModulationLabel.BPSK: _BPSK_POINTS,
    ModulationLabel.QPSK: _QPSK_POINTS,
    ModulationLabel.QAM16: _QAM16_POINTS,
}


def constellation(label: ModulationLabel) -> np.ndarray:
    """Unit-average-power constellation of a linear modulation."""
    try:
        return _CONSTELLATIONS[ModulationLabel(label)].copy()
    except KeyError:
        raise ValueError(f"{label_name(label)} has no constellation") from None


def interleave(iq: np.ndarray) -> np.ndarray:
    """Complex samples -> interleaved I,Q real vector."""
    out = np.empty(2 * len(iq), dtype=np.float64)
    out[0::2] = iq.real
    out[1::2] = iq.imag
    return out


def deinterleave(frame: np.ndarray) -> np.ndarray:
    """Interleaved I,Q real vector -> complex samples."""
    frame = np.asarray(frame, dtype=np.float64)
    return frame[0::2] + 1j * frame[1::2]


def gen_symbols(label: ModulationLabel, n_symbols: int, seed: int) -> np.ndarray:
    """Draw ``n_symbols`` i.i.d. uniform points from a linear constellation."""
    label = ModulationLabel(label)
    if label not in LINEAR_LABELS:
        raise ValueError(f"gen_symbols: {label_name(label)} is not a linear modulation")
    if n_symbols < 1:
        raise ValueError("n_symbols must be >= 1")
    points = _CONSTELLATIONS[label]
    rng = rng_from_seed(seed)
    return points[rng.integers(0, len(points), size=n_symbols)]


def rrc_taps(sps: int, span_symbols: int, rolloff: float) -> np.ndarray:
    """Root-raised-cosine taps over ``span_symbols`` symbols, unit energy."""
    n = span_symbols * sps + 1
    t = (np.arange(n) - (n - 1) / 2.0) / sps  # in symbol periods
    beta = rolloff

    with np.errstate(divide="ignore", invalid="ignore"):
        num = np.sin(np.pi * t * (1 - beta)) + 4 * beta * t * np.cos(np.pi * t * (1 + beta))
        den = np.pi * t * (1 - (4 * beta * t) ** 2)
        taps = num / den

    taps[np.isclose(t, 0.0, atol=1e-12)] = 1.0 - beta + 4 * beta / np.pi
    singular = np.isclose(np.abs(t), 1.0 / (4 * beta), atol=1e-12)
    taps[singular] = (beta / math.sqrt(2.0)) * (
        (1 + 2 / np.pi) * math.sin(np.pi / (4 * beta))
        + (1 - 2 / np.pi) * math.cos(np.pi / (4 * beta))
    )
    return taps / np.sqrt(np.sum(taps**2))


def gaussian_taps(sps: int, span_symbols: int, bt: float) -> np.ndarray:
    """Gaussian filter taps with unit DC gain; sigma set by the BT product."""
    sigma = math.sqrt(math.log(2.0)) / (2.0 * math.pi * bt)  # in symbol periods
    n = span_symbols * sps + 1
    t = (np.arange(n) - (n - 1) / 2.0) / sps
    taps = np.exp(-(t**2) / (2.0 * sigma**2))
    return taps / taps.sum()


def _frequency_pulse(label: ModulationLabel, params: WaveformParams) -> tuple[np.ndarray, float]:
    """Per-sample frequency pulse (sums to sps) and modulation index."""
    sps = params.samples_per_symbol
    if label == ModulationLabel.CPM:
        length = params.cpm_pulse_len_symbols * sps
        if params.cpm_pulse == "rect":
            pulse = np.full(length, 1.0 / params.cpm_pulse_len_symbols)
        else:  # raised-cosine frequency pulse
            k = np.arange(length) + 0.5
            pulse = (1.0 - np.cos(2.0 * np.pi * k / length)) / params.cpm_pulse_len_symbols
        return pulse, params.cpm_mod_index
    bt = params.gmsk_bt if label == ModulationLabel.GMSK else params.gfsk_bt
    gauss = gaussian_taps(sps, params.gaussian_span_symbols, bt)
    # NRZ shaping folded into the pulse: rect(sps) * gaussian, sum = sps.
    pulse = np.convolve(np.ones(sps), gauss)
    return pulse, params.fsk_dev_index


def max_phase_increment(label: ModulationLabel, params: WaveformParams | None = None) -> float:
    """Analytic per-sample bound on |phase difference| for a CPM-family label.

    Worst case is an all-ones symbol stream: pi*h/sps times the largest
    stride-sps sum of the frequency pulse.
    """
    params = params or DEFAULT_WAVEFORM
    label = ModulationLabel(label)
    if label not in PHASE_LABELS:
        raise ValueError(f"{label_name(label)} is not phase-modulated")
    pulse, h = _frequency_pulse(label, params)
    sps = params.samples_per_symbol
    worst = max(pulse[r::sps].sum() for r in range(sps))
    return math.pi * h / sps * worst


def _modulate_linear(label: ModulationLabel, params: WaveformParams, seed: int) -> np.ndarray:
    sps = params.samples_per_symbol
    n_syms = FRAME_SAMPLES // sps + params.rrc_span_symbols
    symbols = gen_symbols(label, n_syms, seed)
    taps = rrc_taps(sps, params.rrc_span_symbols, params.rrc_rolloff)
    upsampled = np.zeros(n_syms * sps, dtype=np.complex128)
    upsampled[::sps] = symbols
    # "valid" keeps only fully-overlapped outputs, discarding filter transients.
    shaped = np.convolve(upsampled, taps, mode="valid")
    return shaped[:FRAME_SAMPLES]


def _modulate_phase(label: ModulationLabel, params: WaveformParams, seed: int) -> np.ndarray:
    sps = params.samples_per_symbol
    pulse, h = _frequency_pulse(label, params)
    n_extra = -(-(len(pulse) - 1) // sps)  # ceil division
    n_syms = FRAME_SAMPLES // sps + n_extra
    rng = rng_from_seed(seed)
    symbols = rng.integers(0, 2, size=n_syms) * 2 - 1
    impulses = np.zeros(n_syms * sps, dtype=np.float64)
    impulses[::sps] = symbols
    freq = np.convolve(impulses, pulse, mode="valid")[:FRAME_SAMPLES]
    phase = np.cumsum(math.pi * h / sps * freq)
    return np.exp(1j * phase)


def modulate(label: ModulationLabel, params: WaveformParams | None = None, seed: int = 0) -> np.ndarray:
    """Synthesize one 1800-real frame, RMS complex-sample power normalized to 1."""
    label = ModulationLabel(label)
    if label == ModulationLabel.NOISE:
        raise ValueError("modulate: the noise class is generated by gen_noise_frame")
    params = params or DEFAULT_WAVEFORM
    params.validate()

    if label in LINEAR_LABELS:
        iq = _modulate_linear(label, params, seed)
    else:
        iq = _modulate_phase(label, params, seed)

    iq = iq / np.sqrt(np.mean(np.abs(iq) ** 2))
    return interleave(iq)


def gen_noise_frame(seed: int) -> np.ndarray:
    """Noise-class frame: 1800 i.i.d. N(0, 0.5) reals (unit complex variance)."""
    rng = rng_from_seed(seed)
    return rng.standard_normal(FRAME_LEN) * math.sqrt(0.5)
