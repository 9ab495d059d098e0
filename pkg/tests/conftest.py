"""Shared fixtures: a small trained pipeline reused by module tests."""

from __future__ import annotations

import numpy as np
import pytest

from rfmc import data, nn, quant


@pytest.fixture(scope="session")
def small_pipeline():
    """Small but real pipeline: dataset, split, trained net, quantized net.

    Sized for speed, not the acceptance accuracy bar (that runs at full
    scale in test_acceptance.py).
    """
    spec = data.DatasetSpec(
        frames_per_class=150,
        snr_grid=(0.0, 6.0, 12.0, 18.0),
        master_seed=777,
    )
    dataset = data.build_dataset(spec)
    train_ds, test_ds = data.split(dataset, 0.8, seed=1)
    config = nn.TrainConfig(epochs=8, seed=3)
    params, history = nn.train(train_ds.frames, train_ds.labels, config)
    qnet = quant.quantize_network(params, train_ds.frames)
    return {
        "dataset": dataset,
        "train": train_ds,
        "test": test_ds,
        "config": config,
        "params": params,
        "history": history,
        "qnet": qnet,
    }


@pytest.fixture
def rng():
    return np.random.default_rng(2024)
