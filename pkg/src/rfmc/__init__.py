"""RF modulation classifier: synthesis, training, and 16-bit inference."""

from .channel import CLEAN, DEFAULT_SNR_GRID, apply_awgn
from .data import Dataset, DatasetSpec, build_dataset, load_dataset, save_dataset, split
from .nn import ARCH, NetworkParams, TrainConfig, classify, forward, train
from .quant import (
    FixedPointFormat,
    QuantizedNetwork,
    quantize_frame,
    quantize_network,
    quantized_forward,
)
from .sigsynth import (
    FRAME_LEN,
    FRAME_SAMPLES,
    LABEL_NAMES,
    ModulationLabel,
    WaveformParams,
    gen_noise_frame,
    gen_symbols,
    modulate,
)

__version__ = "0.1.0"

__all__ = [
    "ARCH",
    "CLEAN",
    "DEFAULT_SNR_GRID",
    "Dataset",
    "DatasetSpec",
    "FRAME_LEN",
    "FRAME_SAMPLES",
    "FixedPointFormat",
    "LABEL_NAMES",
    "ModulationLabel",
    "NetworkParams",
    "QuantizedNetwork",
    "TrainConfig",
    "WaveformParams",
    "apply_awgn",
    "build_dataset",
    "classify",
    "forward",
    "gen_noise_frame",
    "gen_symbols",
    "load_dataset",
    "modulate",
    "quantize_frame",
    "quantize_network",
    "quantized_forward",
    "save_dataset",
    "split",
    "train",
    "__version__",
]
