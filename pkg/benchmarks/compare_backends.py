#!/usr/bin/env python3
"""Compare the numba and numpy integer kernels on the production network.

Builds a random 1800-100-20-7 quantized network, times single-frame
inference through each backend (plus the float path for context), and
prints microseconds per frame. Run with RFMC_NO_NUMBA=1 to confirm the
fallback stands alone.
"""

import time

import numpy as np

from rfmc import kernels, nn, quant
from rfmc.seeding import rng_from_seed

N_FRAMES = 300
WARMUP = 30


def random_qnet(seed: int = 0) -> tuple[nn.NetworkParams, quant.QuantizedNetwork]:
    params = nn.init_params(nn.ARCH, seed=seed)
    rng = rng_from_seed(seed + 1)
    calibration = rng.standard_normal((64, nn.ARCH[0]))
    return params, quant.quantize_network(params, calibration)


def time_per_frame(fn, frames) -> float:
    for f in frames[:WARMUP]:
        fn(f)
    t0 = time.perf_counter()
    for f in frames:
        fn(f)
    return (time.perf_counter() - t0) / len(frames) * 1e6


def main() -> None:
    params, qnet = random_qnet()
    rng = rng_from_seed(99)
    float_frames = [rng.standard_normal(nn.ARCH[0]) for _ in range(N_FRAMES)]
    q_frames = [quant.quantize_frame(f, qnet.input_format) for f in float_frames]

    rows = []
    if kernels.layer_forward_numba is not None:
        rows.append((
            "quantized/numba",
            time_per_frame(lambda f: quant.quantized_forward(qnet, f, mode="vector")[1], q_frames),
        ))
    else:
        print("numba backend unavailable (RFMC_NO_NUMBA set or numba missing)")
    rows.append((
        "quantized/numpy",
        time_per_frame(lambda f: quant.quantized_forward(qnet, f, mode="numpy")[1], q_frames),
    ))
    rows.append(("float/numpy", time_per_frame(lambda f: nn.classify(params, f), float_frames)))

    print(f"{'path':18s} {'us/frame':>10s}")
    for name, us in rows:
        print(f"{name:18s} {us:10.1f}")
    if len(rows) >= 2 and rows[0][0] == "quantized/numba":
        print(f"numba speedup over numpy kernel: {rows[1][1] / rows[0][1]:.1f}x")

    # both integer backends must agree bit-for-bit
    for f in q_frames[:20]:
        a, _ = quant.quantized_forward(qnet, f, mode="numpy")
        b, _ = quant.quantized_forward(qnet, f, mode="vector")
        assert np.array_equal(a, b)
    print("integer backends agree on all checked frames")


if __name__ == "__main__":
    main()
