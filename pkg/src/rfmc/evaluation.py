"""Confusion-matrix evaluation of frame classifiers.

A classifier here is any callable mapping one 1800-real frame to a label
id. Factories wrap the float network and the quantized datapath behind
that signature so both inference paths are scored by the same code.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import nn, quant
from .data import Dataset
from .sigsynth import LABEL_NAMES, NUM_CLASSES

Classifier = Callable[[np.ndarray], int]


def float_classifier(params: nn.NetworkParams) -> Classifier:
    def classify(frame: np.ndarray) -> int:
        return nn.classify(params, frame)

    return classify


def quantized_classifier(qnet: quant.QuantizedNetwork) -> Classifier:
    fmt = qnet.input_format

    def classify(frame: np.ndarray) -> int:
        frame_q = quant.quantize_frame(frame, fmt)
        return quant.quantized_forward(qnet, frame_q)[1]

    return classify


@dataclass
class EvalReport:
    confusion: np.ndarray        # (7, 7) counts, rows = truth, cols = predicted
    overall_accuracy: float
    per_class_error: np.ndarray  # (7,), NaN for classes absent from the data
    by_snr: list[tuple[float, int, float]]  # (snr_db, n, accuracy), sorted

    @property
    def accuracy_by_snr(self) -> dict[float, float]:
        return {snr: acc for snr, _, acc in self.by_snr}


@dataclass
class ReportDelta:
    accuracy_gap: float            # b.overall_accuracy - a.overall_accuracy
    per_class_error_delta: np.ndarray


def evaluate(classifier: Classifier, dataset: Dataset) -> EvalReport:
    """Run the classifier over every record and tally the results.

    Noise-class records (snr = NaN) are excluded from the per-SNR buckets
    but count toward the confusion matrix and overall accuracy.
    """
    if len(dataset) == 0:
        raise ValueError("dataset is empty")
    predictions = np.empty(len(dataset), dtype=np.int64)
    for i in range(len(dataset)):
        predictions[i] = classifier(dataset.frames[i])

    confusion = np.zeros((NUM_CLASSES, NUM_CLASSES), dtype=np.int64)
    np.add.at(confusion, (dataset.labels.astype(np.int64), predictions), 1)

    overall = float(np.trace(confusion)) / len(dataset)
    row_sums = confusion.sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        per_class_error = 1.0 - np.diag(confusion) / row_sums

    correct = predictions == dataset.labels
    by_snr = []
    valid = ~np.isnan(dataset.snr_db)
    for snr in np.unique(dataset.snr_db[valid]):
        mask = dataset.snr_db == snr
        by_snr.append((float(snr), int(mask.sum()), float(correct[mask].mean())))
    return EvalReport(confusion, overall, per_class_error, by_snr)


def oracle_classifier(dataset: Dataset) -> Classifier:
    """Returns ground truth by frame identity; evaluation self-test hook."""
    index = {dataset.frames[i].tobytes(): int(dataset.labels[i]) for i in range(len(dataset))}

    def classify(frame: np.ndarray) -> int:
        return index[np.asarray(frame, dtype=np.float32).tobytes()]

    return classify


def compare_reports(a: EvalReport, b: EvalReport) -> ReportDelta:
    """Accuracy gap (b minus a) and per-class error deltas over the same data."""
    if int(a.confusion.sum()) != int(b.confusion.sum()):
        raise ValueError("reports cover different numbers of records")
    if not np.array_equal(a.confusion.sum(axis=1), b.confusion.sum(axis=1)):
        raise ValueError("reports cover different ground-truth distributions")
    return ReportDelta(
        accuracy_gap=b.overall_accuracy - a.overall_accuracy,
        per_class_error_delta=b.per_class_error - a.per_class_error,
    )


def format_report(report: EvalReport) -> str:
    """Human-readable key-value text plus the matrix and per-SNR CSV rows."""
    lines = [
        f"records {int(report.confusion.sum())}",
        f"overall_accuracy {report.overall_accuracy:.6f}",
        "",
        "confusion (rows = truth, cols = predicted)",
    ]
    header = " ".join(f"{name:>6s}" for name in LABEL_NAMES)
    lines.append(f"{'':8s}{header}")
    for c, name in enumerate(LABEL_NAMES):
        row = " ".join(f"{int(v):6d}" for v in report.confusion[c])
        lines.append(f"{name:>8s}{row}")
    lines.append("")
    lines.append("per_class_error")
    for c, name in enumerate(LABEL_NAMES):
        err = report.per_class_error[c]
        lines.append(f"  {name:>6s} {'n/a' if np.isnan(err) else f'{err:.4f}'}")
    lines.append("")
    lines.append("snr_db,n,accuracy")
    for snr, n, acc in report.by_snr:
        lines.append(f"{snr:g},{n},{acc:.6f}")
    return "\n".join(lines)
