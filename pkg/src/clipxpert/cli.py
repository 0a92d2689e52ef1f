"""Command-line front end: predict, synth, bench, eval.

All reports are machine-first JSON/CSV.  Output files are written
atomically (temp + rename).  report.json embeds the run manifest (resolved
config, input hashes, tool version) but not wall-clock timings, so reruns
with identical inputs produce byte-identical reports; timings land in a
separate timings.json.

Exit codes: 0 success, 2 usage/input error, 1 internal error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import sys

import numpy as np

from . import __version__
from .data_io import (
    LabelVector,
    SyntheticConfig,
    _atomic_write_bytes,
    generate_synthetic,
    load_embeddings,
    load_labels,
    save_embeddings,
    save_labels,
)
from .errors import ClipxpertError, DimMismatch
from .metrics import evaluate
from .pipeline import (
    STRATEGIES,
    STRATEGY_BGAT,
    PipelineConfig,
    run_baseline,
    run_clipxpert,
)
from .scoring import SCORERS

DEFAULT_BENCH_SCORERS = ("entropy", "mcm", "var")
DEFAULT_BENCH_STRATEGIES = ("bgat", "mean", "fixed_half_max")


def _str2bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("true", "1", "yes", "on"):
        return True
    if low in ("false", "0", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


def _comma_list(allowed, what):
    def parse(text: str):
        items = [tok.strip() for tok in text.split(",") if tok.strip()]
        for item in items:
            if item not in allowed:
                raise argparse.ArgumentTypeError(
                    f"unknown {what} {item!r}; allowed: {', '.join(allowed)}")
        if not items:
            raise argparse.ArgumentTypeError(f"need at least one {what}")
        return items
    return parse


def _sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _write_json(path, payload) -> None:
    _atomic_write_bytes(path, (json.dumps(payload, indent=2) + "\n").encode("utf-8"))


def _manifest(command: str, config_dict: dict, inputs: dict) -> dict:
    return {
        "tool": "clipxpert",
        "version": __version__,
        "command": command,
        "config": config_dict,
        "inputs": {
            name: ({"path": os.fspath(p), "sha256": _sha256(p)} if p else None)
            for name, p in inputs.items()
        },
    }


def _add_pipeline_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--scorer", choices=SCORERS, default="entropy",
                        help="per-sample unknownness score")
    parser.add_argument("--strategy", choices=STRATEGIES, default="bgat",
                        help="final threshold strategy")
    parser.add_argument("--tau", type=float, default=0.9,
                        help="cumulative variance share kept per subspace")
    parser.add_argument("--temp-softmax", type=float, default=0.01,
                        help="zero-shot softmax temperature")
    parser.add_argument("--temp-alpha", type=float, default=1.0,
                        help="mixing-ratio softmax temperature")
    parser.add_argument("--suff", type=_str2bool, default=True, metavar="BOOL",
                        help="enable subspace feature filtering")
    parser.add_argument("--boxcox", type=_str2bool, default=True, metavar="BOOL",
                        help="enable the power transform inside the threshold fit")
    parser.add_argument("--seed", type=int, default=0,
                        help="seed for stochastic diagnostics (pipeline itself "
                             "is deterministic)")


def _pipeline_config(args) -> PipelineConfig:
    return PipelineConfig(
        scorer=args.scorer,
        softmax_temperature=args.temp_softmax,
        alpha_temperature=args.temp_alpha,
        tau=args.tau,
        use_boxcox=args.boxcox,
        use_suff=args.suff,
        strategy=args.strategy,
        seed=args.seed,
    )


def _run_configured(samples, anchors, config, labels):
    if config.strategy == STRATEGY_BGAT:
        return run_clipxpert(samples, anchors, config)
    return run_baseline(samples, anchors, config, labels=labels)


def cmd_predict(args) -> int:
    samples = load_embeddings(args.embeddings)
    anchors = load_embeddings(args.anchors)
    labels = load_labels(args.labels) if args.labels else None
    if labels is not None and len(labels) != samples.rows:
        raise DimMismatch(
            f"{len(labels)} labels for {samples.rows} embedding rows")

    config = _pipeline_config(args)
    report = _run_configured(samples, anchors, config, labels)

    os.makedirs(args.out, exist_ok=True)
    predictions = [int(v) for v in report.labels.labels]
    _write_json(os.path.join(args.out, "predictions.json"), predictions)

    manifest = _manifest("predict", config.to_json_dict(), {
        "embeddings": args.embeddings,
        "anchors": args.anchors,
        "labels": args.labels,
    })
    report_payload = {
        "manifest": manifest,
        "n_samples": samples.rows,
        "n_known_classes": anchors.rows,
        "threshold_initial": report.threshold_initial.to_json_dict(),
        "threshold_final": report.threshold_final.to_json_dict(),
        "suff_applied": report.suff_applied,
        "n_predicted_unknown": int(sum(1 for v in predictions if v == anchors.rows)),
    }
    _write_json(os.path.join(args.out, "report.json"), report_payload)
    _write_json(os.path.join(args.out, "timings.json"), report.timings)

    if labels is not None:
        result = evaluate(report.labels, labels, anchors.rows)
        _write_json(os.path.join(args.out, "eval.json"), result.to_json_dict())
    return 0


def cmd_synth(args) -> int:
    config = SyntheticConfig(
        n_known=args.c_known,
        n_unknown=args.c_unknown,
        dim=args.dim,
        samples_per_class=args.samples_per_class,
        known_noise_sigma=args.known_noise,
        unknown_noise_sigma=args.unknown_noise,
        tendency_fraction=args.tendency_fraction,
        anchor_perturb_sigma=args.anchor_perturb,
        seed=args.seed,
    )
    samples, anchors, labels = generate_synthetic(config)
    os.makedirs(args.out, exist_ok=True)
    save_embeddings(samples, os.path.join(args.out, "embeddings.emb1"))
    save_embeddings(anchors, os.path.join(args.out, "anchors.emb1"))
    save_labels(labels, os.path.join(args.out, "labels.json"))
    _write_json(os.path.join(args.out, "manifest.json"),
                _manifest("synth", vars(config).copy(), {}))
    return 0


def cmd_bench(args) -> int:
    samples = load_embeddings(args.embeddings)
    anchors = load_embeddings(args.anchors)
    labels = load_labels(args.labels)
    if len(labels) != samples.rows:
        raise DimMismatch(f"{len(labels)} labels for {samples.rows} embedding rows")

    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["scorer", "strategy", "suff", "hos", "acc_known",
                     "acc_unknown"])
    for scorer in args.scorers:
        for strategy in args.strategies:
            for use_suff in (False, True):
                config = PipelineConfig(
                    scorer=scorer,
                    softmax_temperature=args.temp_softmax,
                    alpha_temperature=args.temp_alpha,
                    tau=args.tau,
                    use_boxcox=args.boxcox,
                    use_suff=use_suff,
                    strategy=strategy,
                    seed=args.seed,
                )
                report = _run_configured(samples, anchors, config, labels)
                result = evaluate(report.labels, labels, anchors.rows)
                writer.writerow([
                    scorer, strategy, str(use_suff).lower(),
                    f"{result.hos:.6f}", f"{result.acc_known:.6f}",
                    f"{result.acc_unknown:.6f}",
                ])

    os.makedirs(args.out, exist_ok=True)
    _atomic_write_bytes(os.path.join(args.out, "bench.csv"),
                        buffer.getvalue().encode("utf-8"))
    _write_json(os.path.join(args.out, "manifest.json"), _manifest(
        "bench",
        {"scorers": args.scorers, "strategies": args.strategies,
         "tau": args.tau, "temp_softmax": args.temp_softmax,
         "temp_alpha": args.temp_alpha, "boxcox": args.boxcox,
         "seed": args.seed},
        {"embeddings": args.embeddings, "anchors": args.anchors,
         "labels": args.labels},
    ))
    return 0


def cmd_eval(args) -> int:
    try:
        with open(args.predictions, "r", encoding="utf-8") as fh:
            predictions = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ClipxpertError(f"{args.predictions}: not a JSON array: {exc}") from exc
    if not isinstance(predictions, list):
        raise ClipxpertError(f"{args.predictions}: expected a JSON array of ints")
    labels = load_labels(args.labels)
    preds = LabelVector(np.asarray(predictions, dtype=np.int64), labels.n_known)
    result = evaluate(preds, labels, labels.n_known)
    payload = result.to_json_dict()
    if args.out:
        _write_json(args.out, payload)
    else:
        json.dump(payload, sys.stdout, indent=2)
        sys.stdout.write("\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="clipxpert",
        description="Training-free open-set recognition over embedding files: "
                    "adaptive score thresholding plus SVD subspace feature "
                    "filtering.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("predict", help="classify samples, detect unknowns")
    p.add_argument("--embeddings", required=True, help="sample matrix (EMB1/CSV)")
    p.add_argument("--anchors", required=True, help="class-anchor matrix (EMB1/CSV)")
    p.add_argument("--labels", help="optional ground-truth sidecar (JSON)")
    p.add_argument("--out", required=True, help="output directory")
    _add_pipeline_flags(p)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("synth", help="generate a synthetic open-set dataset")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--c-known", type=int, default=10)
    p.add_argument("--c-unknown", type=int, default=10)
    p.add_argument("--dim", type=int, default=64)
    p.add_argument("--samples-per-class", type=int, default=50)
    p.add_argument("--known-noise", type=float, default=0.1)
    p.add_argument("--unknown-noise", type=float, default=0.3)
    p.add_argument("--tendency-fraction", type=float, default=0.4)
    p.add_argument("--anchor-perturb", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("bench", help="threshold-strategy x scorer x filter grid")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--anchors", required=True)
    p.add_argument("--labels", required=True, help="ground-truth sidecar (JSON)")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--scorers", type=_comma_list(SCORERS, "scorer"),
                   default=list(DEFAULT_BENCH_SCORERS),
                   help="comma-separated scorer list")
    p.add_argument("--strategies", type=_comma_list(STRATEGIES, "strategy"),
                   default=list(DEFAULT_BENCH_STRATEGIES),
                   help="comma-separated strategy list")
    p.add_argument("--tau", type=float, default=0.9)
    p.add_argument("--temp-softmax", type=float, default=0.01)
    p.add_argument("--temp-alpha", type=float, default=1.0)
    p.add_argument("--boxcox", type=_str2bool, default=True, metavar="BOOL")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("eval", help="score a predictions file against labels")
    p.add_argument("--predictions", required=True, help="JSON array of ints")
    p.add_argument("--labels", required=True, help="ground-truth sidecar (JSON)")
    p.add_argument("--out", help="output JSON path (default: stdout)")
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ClipxpertError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
