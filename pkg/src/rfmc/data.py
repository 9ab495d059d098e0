"""Labeled (frame, label, snr) datasets: build, split, save, load.

Each frame's randomness is keyed by a splittable hash of
(master_seed, class, index), so generation order never matters and the
same spec always produces byte-identical datasets. Frames are stored as
f32; noise-class records carry an n/a flag instead of an SNR.

File layout (little-endian): magic "RFDS" | version u16 | record count
u32 | frame length u16 | records (label u8, snr flag u8 0=valid 1=n/a,
snr_db f32, frame 1800 x f32) | CRC32 of the records, u32.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass

import numpy as np

from . import channel, sigsynth
from .fileio import ChecksumError, FileFormatError, read_exact
from .seeding import frame_seed
from .sigsynth import FRAME_LEN, NUM_CLASSES, ModulationLabel, WaveformParams

DATASET_MAGIC = b"RFDS"
DATASET_VERSION = 1

_RECORD_DTYPE = np.dtype(
    [("label", "u1"), ("snr_flag", "u1"), ("snr_db", "<f4"), ("frame", "<f4", (FRAME_LEN,))]
)


@dataclass(frozen=True)
class DatasetSpec:
    frames_per_class: int = 2000
    snr_grid: tuple[float, ...] = channel.DEFAULT_SNR_GRID
    waveform: WaveformParams = sigsynth.DEFAULT_WAVEFORM
    master_seed: int = 0

    def validate(self) -> None:
        if self.frames_per_class < 1:
            raise ValueError("frames_per_class must be >= 1")
        if not self.snr_grid:
            raise ValueError("snr_grid must be non-empty")
        self.waveform.validate()


@dataclass
class Dataset:
    """Frames as (n, 1800) f32 rows; snr_db is NaN for noise-class records."""

    frames: np.ndarray
    labels: np.ndarray
    snr_db: np.ndarray
    provenance: DatasetSpec | None = None

    def __len__(self) -> int:
        return len(self.labels)

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=NUM_CLASSES)

    def validate(self) -> None:
        n = len(self.labels)
        if self.frames.shape != (n, FRAME_LEN) or self.snr_db.shape != (n,):
            raise ValueError("frames/labels/snr_db shapes disagree")
        if n and (self.labels.min() < 0 or self.labels.max() >= NUM_CLASSES):
            raise ValueError("labels must be in 0..6")
        if not np.all(np.isfinite(self.frames)):
            raise ValueError("frames must be finite")


def build_dataset(spec: DatasetSpec) -> Dataset:
    """Generate frames_per_class frames for all seven classes.

    Modulated classes cycle their SNR over ``spec.snr_grid`` by frame
    index; the noise class is the bare receiver noise floor.
    """
    spec.validate()
    n = NUM_CLASSES * spec.frames_per_class
    frames = np.empty((n, FRAME_LEN), dtype=np.float32)
    labels = np.empty(n, dtype=np.uint8)
    snr_db = np.empty(n, dtype=np.float32)

    grid = spec.snr_grid
    row = 0
    for cls in range(NUM_CLASSES):
        for idx in range(spec.frames_per_class):
            mod_seed = frame_seed(spec.master_seed, cls, idx, stream=0)
            if cls == ModulationLabel.NOISE:
                frame = sigsynth.gen_noise_frame(mod_seed)
                snr = np.nan
            else:
                frame = sigsynth.modulate(ModulationLabel(cls), spec.waveform, seed=mod_seed)
                snr = grid[idx % len(grid)]
                frame = channel.apply_awgn(frame, snr, seed=frame_seed(spec.master_seed, cls, idx, stream=1))
            frames[row] = frame
            labels[row] = cls
            snr_db[row] = snr
            row += 1
    return Dataset(frames, labels, snr_db, provenance=spec)


def split(dataset: Dataset, train_fraction: float, seed: int = 0) -> tuple[Dataset, Dataset]:
    """Stratified split: each class shuffled and cut at the same fraction.

    Train takes floor(n_class * fraction) records per class; together the
    two halves are exactly the original records.
    """
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must be in (0, 1)")
    if len(dataset) == 0:
        raise ValueError("dataset is empty")
    rng = np.random.Generator(np.random.Philox(key=seed & ((1 << 128) - 1)))
    train_idx, test_idx = [], []
    for cls in np.unique(dataset.labels):
        cls_idx = np.flatnonzero(dataset.labels == cls)
        order = rng.permutation(len(cls_idx))
        cut = int(len(cls_idx) * train_fraction)
        train_idx.append(cls_idx[order[:cut]])
        test_idx.append(cls_idx[order[cut:]])
    tr = np.concatenate(train_idx)
    te = np.concatenate(test_idx)

    def take(idx: np.ndarray) -> Dataset:
        return Dataset(
            dataset.frames[idx].copy(),
            dataset.labels[idx].copy(),
            dataset.snr_db[idx].copy(),
            provenance=dataset.provenance,
        )

    return take(tr), take(te)


def save_dataset(dataset: Dataset, path: str) -> None:
    dataset.validate()
    records = np.empty(len(dataset), dtype=_RECORD_DTYPE)
    records["label"] = dataset.labels
    records["snr_flag"] = np.where(np.isnan(dataset.snr_db), 1, 0)
    records["snr_db"] = dataset.snr_db
    records["frame"] = dataset.frames
    body = records.tobytes()
    with open(path, "wb") as f:
        f.write(DATASET_MAGIC)
        f.write(struct.pack("<HIH", DATASET_VERSION, len(dataset), FRAME_LEN))
        f.write(body)
        f.write(struct.pack("<I", zlib.crc32(body) & 0xFFFFFFFF))


def load_dataset(path: str) -> Dataset:
    """Inverse of save_dataset; provenance is not persisted in the file."""
    with open(path, "rb") as f:
        magic = read_exact(f, 4, "magic")
        if magic != DATASET_MAGIC:
            raise FileFormatError(f"not a dataset file: bad magic {magic!r}")
        version, count, frame_len = struct.unpack("<HIH", read_exact(f, 8, "header"))
        if version != DATASET_VERSION:
            raise FileFormatError(f"unsupported dataset version {version}")
        if frame_len != FRAME_LEN:
            raise FileFormatError(f"unexpected frame length {frame_len}")
        body = read_exact(f, count * _RECORD_DTYPE.itemsize, "records")
        (stored,) = struct.unpack("<I", read_exact(f, 4, "checksum"))
    actual = zlib.crc32(body) & 0xFFFFFFFF
    if stored != actual:
        raise ChecksumError(f"dataset CRC mismatch: stored {stored:#x}, computed {actual:#x}")

    records = np.frombuffer(body, dtype=_RECORD_DTYPE, count=count)
    snr = records["snr_db"].astype(np.float32).copy()
    snr[records["snr_flag"] != 0] = np.nan
    ds = Dataset(
        records["frame"].astype(np.float32).copy(),
        records["label"].astype(np.uint8).copy(),
        snr,
    )
    ds.validate()
    return ds
