"""Command-line entry point: rfmc <subcommand>.

Subcommands wire the library end to end: gen-data -> train -> quantize ->
eval / bench / classify / serve. Every command exits 0 on success, 1 on a
runtime failure (missing/corrupt files and the like), and 2 on usage
errors. All randomness hangs off --seed, so reruns are byte-identical.
"""

from __future__ import annotations

import argparse
import sys
import time

import numpy as np

from . import bench, data, evaluation, fileio, kernels, nn, quant, sigsynth
from .fileio import ContainerError
from .nn import NetworkParams, TrainConfig
from .quant import QuantizedNetwork
from .sigsynth import LABEL_NAMES, label_name
from .stream import FRAME_BYTES, RAW_FLOAT_FORMAT, StreamServer, make_raw_classifier

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2


class UsageError(Exception):
    """Bad flag combinations detected after argparse."""


def snr_grid_arg(text: str) -> tuple[float, ...]:
    """Parse --snr: 'start:end:step' in dB (inclusive), or one value."""
    try:
        if ":" in text:
            start_s, end_s, step_s = text.split(":")
            start, end, step = float(start_s), float(end_s), float(step_s)
            if step <= 0 or end < start:
                raise ValueError
            count = int(round((end - start) / step)) + 1
            grid = tuple(start + i * step for i in range(count) if start + i * step <= end + 1e-9)
            if not grid:
                raise ValueError
            return grid
        return (float(text),)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"malformed SNR range {text!r}: expected 'start:end:step' in dB"
        ) from None


def _load_model_or_fail(path: str):
    return fileio.load_model(path)


def _pick_path(args_path: str | None, model) -> str:
    """Resolve --path against the model kind; they must agree."""
    kind = "quantized" if isinstance(model, QuantizedNetwork) else "float"
    if args_path is None or args_path == kind:
        return kind
    raise UsageError(f"--path {args_path} does not match the {kind} model file")


def cmd_gen_data(args: argparse.Namespace) -> int:
    spec = data.DatasetSpec(
        frames_per_class=args.frames_per_class,
        snr_grid=args.snr,
        master_seed=args.seed,
    )
    t0 = time.time()
    dataset = data.build_dataset(spec)
    data.save_dataset(dataset, args.out)
    print(f"wrote {args.out}: {len(dataset)} records in {time.time() - t0:.1f}s")
    counts = dataset.class_counts()
    for cls, name in enumerate(LABEL_NAMES):
        print(f"  class {cls} {name:6s} {counts[cls]} frames")
    valid = ~np.isnan(dataset.snr_db)
    for snr in np.unique(dataset.snr_db[valid]):
        print(f"  snr {snr:g} dB: {int((dataset.snr_db == snr).sum())} frames")
    return EXIT_OK


def cmd_train(args: argparse.Namespace) -> int:
    dataset = data.load_dataset(args.dataset)
    train_ds, val_ds = data.split(dataset, args.train_fraction, seed=args.seed)
    config = TrainConfig(
        learning_rate=args.lr,
        batch_size=args.batch,
        epochs=args.epochs,
        weight_decay=args.weight_decay,
        seed=args.seed,
    )
    t0 = time.time()
    params, history = nn.train(train_ds.frames, train_ds.labels, config)
    print(f"trained {len(train_ds)} frames, {args.epochs} epochs in {time.time() - t0:.1f}s")
    for epoch, loss in enumerate(history, 1):
        print(f"  epoch {epoch:3d} loss {loss:.4f}")
    print(f"train_accuracy {nn.accuracy(params, train_ds.frames, train_ds.labels):.4f}")
    print(f"validation_accuracy {nn.accuracy(params, val_ds.frames, val_ds.labels):.4f}")
    fileio.save_float_model(args.out, params)
    print(f"wrote {args.out}")
    return EXIT_OK


def cmd_quantize(args: argparse.Namespace) -> int:
    params = fileio.load_float_model(args.model)
    calibration = data.load_dataset(args.dataset)
    qnet = quant.quantize_network(params, calibration.frames)
    fileio.save_quantized_model(args.out, qnet)
    print(f"wrote {args.out}")
    print(f"input_format Q{15 - qnet.act_frac[0]}.{qnet.act_frac[0]} "
          f"(raw int16 streams must be pre-quantized to this format)")
    for i in range(qnet.n_layers):
        fmt = quant.FixedPointFormat(qnet.weight_frac[i])
        err = np.max(np.abs(
            quant.dequantize_array(qnet.weights[i], fmt) - params.weights[i]
        ))
        print(
            f"  layer {i}: weight_frac {qnet.weight_frac[i]} act_frac {qnet.act_frac[i]} "
            f"bias_shift {qnet.acc_frac(i)} max_weight_roundtrip_err {err:.2e}"
        )
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    dataset = data.load_dataset(args.dataset)
    if args.self_test:
        report = evaluation.evaluate(evaluation.oracle_classifier(dataset), dataset)
        print(evaluation.format_report(report))
        return EXIT_OK

    if args.model is None:
        raise UsageError("--model is required unless --self-test")
    model = _load_model_or_fail(args.model)

    if args.compare is not None:
        if not isinstance(model, NetworkParams):
            raise UsageError("--compare needs a float --model")
        qnet = fileio.load_quantized_model(args.compare)
        float_report = evaluation.evaluate(evaluation.float_classifier(model), dataset)
        quant_report = evaluation.evaluate(evaluation.quantized_classifier(qnet), dataset)
        delta = evaluation.compare_reports(float_report, quant_report)
        print("# float path")
        print(evaluation.format_report(float_report))
        print()
        print("# quantized path")
        print(evaluation.format_report(quant_report))
        print()
        print(f"accuracy_gap_quantized_minus_float {delta.accuracy_gap:+.6f}")
        for cls, name in enumerate(LABEL_NAMES):
            print(f"  error_delta {name:6s} {delta.per_class_error_delta[cls]:+.4f}")
        return EXIT_OK

    path = _pick_path(args.path, model)
    classifier = (
        evaluation.quantized_classifier(model)
        if path == "quantized"
        else evaluation.float_classifier(model)
    )
    report = evaluation.evaluate(classifier, dataset)
    print(f"path {path}")
    print(evaluation.format_report(report))
    return EXIT_OK


def cmd_bench(args: argparse.Namespace) -> int:
    model = _load_model_or_fail(args.model)
    path = _pick_path(args.path, model)
    rng_frames = bench.gaussian_frames(args.frames)
    if path == "quantized":
        fmt = model.input_format

        def classifier(frame_q):
            return quant.quantized_forward(model, frame_q)[1]

        frames = [quant.quantize_frame(f, fmt) for f in rng_frames]
    else:

        def classifier(frame):
            return nn.classify(model, frame)

        frames = rng_frames

    report = bench.bench_inference(
        classifier, args.frames, warmup=args.warmup, threads=args.threads,
        frames=frames, path=path,
    )
    print(f"kernel_backend {kernels.BACKEND}")
    print(bench.format_latency_report(report))
    if args.duration is not None:
        fps = bench.bench_throughput(classifier, args.duration, frames=frames)
        print(f"sustained_frames_per_second {fps:.1f}")
    return EXIT_OK


def _classify_dataset(model, path: str, dataset: data.Dataset) -> None:
    if path == "quantized":
        fmt = model.input_format
        for i in range(len(dataset)):
            frame_q = quant.quantize_frame(dataset.frames[i], fmt)
            label = quant.quantized_forward(model, frame_q)[1]
            print(f"{i}\t{label}\t{label_name(label)}")
    else:
        for i in range(len(dataset)):
            _, probs = nn.forward(model, dataset.frames[i])
            label = int(np.argmax(probs))
            probs_text = " ".join(f"{p:.6f}" for p in probs)
            print(f"{i}\t{label}\t{label_name(label)}\t{probs_text}")


def _classify_raw(model, path: str, blob: bytes) -> None:
    n_complete = len(blob) // FRAME_BYTES
    classify_raw, _ = make_raw_classifier(model)
    for i in range(n_complete):
        frame_q = np.frombuffer(blob, "<i2", 1800, i * FRAME_BYTES)
        if path == "float":
            _, probs = nn.forward(model, quant.dequantize_array(frame_q, RAW_FLOAT_FORMAT))
            label = int(np.argmax(probs))
            probs_text = " ".join(f"{p:.6f}" for p in probs)
            print(f"{i}\t{label}\t{label_name(label)}\t{probs_text}")
        else:
            label = classify_raw(frame_q)
            print(f"{i}\t{label}\t{label_name(label)}")
    remainder = len(blob) - n_complete * FRAME_BYTES
    if remainder:
        print(
            f"warning: truncated frame at byte offset {n_complete * FRAME_BYTES}: "
            f"{remainder} trailing bytes ignored",
            file=sys.stderr,
        )


def cmd_classify(args: argparse.Namespace) -> int:
    if (args.dataset is None) == (args.raw is None):
        raise UsageError("give exactly one of --dataset or --raw")
    model = _load_model_or_fail(args.model)
    path = _pick_path(args.path, model)
    if args.dataset is not None:
        _classify_dataset(model, path, data.load_dataset(args.dataset))
    else:
        blob = sys.stdin.buffer.read() if args.raw == "-" else open(args.raw, "rb").read()
        _classify_raw(model, path, blob)
    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    model = _load_model_or_fail(args.model)
    server = StreamServer(model, host=args.host, port=args.port)
    server.start()
    host, port = server.address
    kind = "quantized" if isinstance(model, QuantizedNetwork) else "float"
    print(f"serving {kind} model on {host}:{port} "
          f"({FRAME_BYTES}-byte int16 frames in, 2-byte replies out)")
    try:
        server.serve_forever()
    finally:
        server.stop()
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rfmc", description="RF modulation classifier pipeline"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="synthesize a labeled dataset file")
    p.add_argument("--out", required=True)
    p.add_argument("--frames-per-class", type=int, default=100)
    p.add_argument("--snr", type=snr_grid_arg, default=snr_grid_arg("0:18:2"))
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("train", help="train the float network on a dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--epochs", type=int, default=TrainConfig.epochs)
    p.add_argument("--lr", type=float, default=TrainConfig.learning_rate)
    p.add_argument("--batch", type=int, default=TrainConfig.batch_size)
    p.add_argument("--weight-decay", type=float, default=TrainConfig.weight_decay)
    p.add_argument("--train-fraction", type=float, default=0.8)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("quantize", help="quantize a float model to int16")
    p.add_argument("--model", required=True)
    p.add_argument("--dataset", required=True, help="calibration dataset file")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_quantize)

    p = sub.add_parser("eval", help="confusion matrix and accuracy report")
    p.add_argument("--model")
    p.add_argument("--dataset", required=True)
    p.add_argument("--path", choices=("float", "quantized"))
    p.add_argument("--compare", metavar="QUANT_MODEL",
                   help="also evaluate this quantized model and print the gap")
    p.add_argument("--self-test", action="store_true",
                   help="evaluate the ground-truth oracle (sanity check)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", help="latency/throughput of an inference path")
    p.add_argument("--model", required=True)
    p.add_argument("--path", choices=("float", "quantized"))
    p.add_argument("--frames", type=int, default=1000)
    p.add_argument("--warmup", type=int, default=100)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--duration", type=float, help="also measure sustained throughput (s)")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("classify", help="print one line per classified frame")
    p.add_argument("--model", required=True)
    p.add_argument("--dataset", help="dataset file input")
    p.add_argument("--raw", help="raw int16 I/Q file, or '-' for stdin")
    p.add_argument("--path", choices=("float", "quantized"))
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("serve", help="TCP stream classifier")
    p.add_argument("--model", required=True)
    p.add_argument("--port", type=int, required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ContainerError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
