"""Command-line entry points.

Subcommands: ``synth`` (write a synthetic corpus), ``train`` (two-stage
training; ``--vanilla-only`` stops after stage one), ``predict`` (parse a
corpus file with a checkpoint), ``eval`` (score predictions against
gold), and ``buckets`` (per-length-band scores as plot-ready rows).

Exit codes: 0 success, 1 usage or configuration error, 2 data error
(missing or malformed files). Every run is reproducible from its
arguments and seed; ``--no-timestamp`` suppresses the one generated
header line so outputs are byte-identical across runs.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from datetime import datetime, timezone
from pathlib import Path

from .config import (
    ModelConfig,
    TrainConfig,
    apply_overrides,
    read_config_file,
)
from .errors import AlignmentError, ConfigError, FormatError, GraphError
from .evaluate import buckets_tsv, length_buckets, lf1, report_text, report_tsv
from .encoder import PretrainedVectors
from .model import TrainedModel, load_trained, save_trained
from .sdp import dump_sdp, load_embeddings, load_sdp
from .synth import SynthConfig, gen_synthetic
from .train import train as run_training


class UsageError(Exception):
    pass


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit(2); usage errors are exit 1
        raise UsageError(message)


def _timestamp_header(enabled: bool) -> str | None:
    if not enabled:
        return None
    return f"# generated {datetime.now(timezone.utc).isoformat(timespec='seconds')}"


def _require_file(path: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise FormatError(f"{path}: no such file")
    return p


def _build_parser() -> _ArgumentParser:
    parser = _ArgumentParser(prog="sdparse", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    synth = sub.add_parser("synth", help="generate a synthetic corpus")
    synth.add_argument("--out", required=True)
    synth.add_argument("--sentences", type=int, default=500)
    synth.add_argument("--dev", type=int, default=0, help="extra dev sentences")
    synth.add_argument("--dev-out")
    synth.add_argument("--test", type=int, default=0, help="extra test sentences")
    synth.add_argument("--test-out")
    synth.add_argument("--len-min", type=int)
    synth.add_argument("--len-max", type=int)
    synth.add_argument("--vocab-size", type=int)
    synth.add_argument("--sibling-prob", type=float)
    synth.add_argument("--labels", help="comma-separated sibling label set")
    synth.add_argument("--config")
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--no-timestamp", action="store_true")

    tr = sub.add_parser("train", help="two-stage training")
    tr.add_argument("--train", required=True, dest="train_path")
    tr.add_argument("--dev", required=True, dest="dev_path")
    tr.add_argument("--out", required=True, help="output directory for checkpoints and logs")
    tr.add_argument("--vanilla-only", action="store_true")
    tr.add_argument("--variant", choices=("gcn", "gat"))
    tr.add_argument("--layers", type=int, help="refinement stack depth")
    tr.add_argument("--adjacency", choices=("predicted", "gold", "mixed"))
    tr.add_argument("--lambda", type=float, dest="lam", help="edge-loss weight in (0,1)")
    tr.add_argument("--embeddings", help="pretrained embedding text file")
    tr.add_argument("--config")
    tr.add_argument("--seed", type=int)
    tr.add_argument("--no-timestamp", action="store_true")

    pr = sub.add_parser("predict", help="parse a corpus with a checkpoint")
    pr.add_argument("--model", required=True)
    pr.add_argument("--input", required=True)
    pr.add_argument("--out", required=True)
    pr.add_argument("--batch-size", type=int, default=32)
    pr.add_argument("--no-timestamp", action="store_true")

    ev = sub.add_parser("eval", help="score predictions against gold")
    ev.add_argument("--gold", required=True)
    ev.add_argument("--pred", required=True)
    ev.add_argument("--tsv", action="store_true")
    ev.add_argument("--per-label", action="store_true")

    bu = sub.add_parser("buckets", help="per-sentence-length scores")
    bu.add_argument("--gold", required=True)
    bu.add_argument("--pred", required=True)
    bu.add_argument("--width", type=int, default=10)
    return parser


def _cmd_synth(args) -> int:
    overrides = read_config_file(args.config) if args.config else {}
    total = args.sentences + args.dev + args.test
    cfg = SynthConfig(sentences=total, seed=args.seed)
    cfg = apply_overrides(cfg, overrides, "synth")
    updates = {"sentences": total, "seed": args.seed}
    if args.len_min is not None:
        updates["len_min"] = args.len_min
    if args.len_max is not None:
        updates["len_max"] = args.len_max
    if args.vocab_size is not None:
        updates["vocab_size"] = args.vocab_size
    if args.sibling_prob is not None:
        updates["sibling_prob"] = args.sibling_prob
    if args.labels:
        updates["labels"] = tuple(x.strip() for x in args.labels.split(",") if x.strip())
    cfg = replace(cfg, **updates)
    if (args.dev and not args.dev_out) or (args.test and not args.test_out):
        raise UsageError("--dev/--test require --dev-out/--test-out")
    corpus = gen_synthetic(cfg)
    header = _timestamp_header(not args.no_timestamp)
    cut1 = args.sentences
    cut2 = cut1 + args.dev
    dump_sdp(args.out, corpus[:cut1], header=header)
    if args.dev:
        dump_sdp(args.dev_out, corpus[cut1:cut2], header=header)
    if args.test:
        dump_sdp(args.test_out, corpus[cut2:], header=header)
    return 0


def _cmd_train(args) -> int:
    overrides = read_config_file(args.config) if args.config else {}
    model_cfg = apply_overrides(ModelConfig(), overrides, "model")
    train_cfg = apply_overrides(TrainConfig(), overrides, "train")
    if args.variant:
        model_cfg = replace(model_cfg, gnn_variant=args.variant)
    if args.layers is not None:
        model_cfg = replace(model_cfg, gnn_layers=args.layers)
    if args.adjacency:
        train_cfg = replace(train_cfg, adjacency=args.adjacency)
    if args.lam is not None:
        train_cfg = replace(train_cfg, lam=args.lam)
    if args.seed is not None:
        train_cfg = replace(train_cfg, seed=args.seed)

    train_corpus = load_sdp(_require_file(args.train_path))
    dev_corpus = load_sdp(_require_file(args.dev_path))
    pretrained = None
    if args.embeddings:
        vectors, dim = load_embeddings(_require_file(args.embeddings))
        pretrained = PretrainedVectors(vectors, dim)

    result = run_training(
        train_corpus,
        dev_corpus,
        model_cfg,
        train_cfg,
        pretrained=pretrained,
        vanilla_only=args.vanilla_only,
    )
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    header = _timestamp_header(not args.no_timestamp)

    def write_metrics(path: Path, lines: list[str]) -> None:
        body = "\n".join(lines) + "\n"
        if header:
            body = header + "\n" + body
        path.write_text(body, encoding="utf-8")

    save_trained(out_dir / "vanilla.ckpt", result.vanilla_model)
    write_metrics(out_dir / "vanilla.metrics.tsv", result.vanilla.metrics)
    print(f"vanilla: best dev LF1 {result.vanilla.best_dev_lf1:.4f} "
          f"(epoch {result.vanilla.best_epoch})")
    if result.refined is not None:
        save_trained(out_dir / "refined.ckpt", result.refined_model)
        write_metrics(out_dir / "refined.metrics.tsv", result.refined.metrics)
        print(f"refined: best dev LF1 {result.refined.best_dev_lf1:.4f} "
              f"(epoch {result.refined.best_epoch})")
    return 0


def _cmd_predict(args) -> int:
    model: TrainedModel = load_trained(_require_file(args.model))
    corpus = load_sdp(_require_file(args.input))
    predicted = model.predict_corpus(corpus, batch_size=args.batch_size)
    dump_sdp(args.out, predicted, header=_timestamp_header(not args.no_timestamp))
    return 0


def _cmd_eval(args) -> int:
    gold = load_sdp(_require_file(args.gold))
    pred = load_sdp(_require_file(args.pred))
    report = lf1(pred, gold, per_label=args.per_label)
    print(report_tsv(report) if args.tsv else report_text(report))
    return 0


def _cmd_buckets(args) -> int:
    gold = load_sdp(_require_file(args.gold))
    pred = load_sdp(_require_file(args.pred))
    print(buckets_tsv(length_buckets(pred, gold, width=args.width)))
    return 0


_COMMANDS = {
    "synth": _cmd_synth,
    "train": _cmd_train,
    "predict": _cmd_predict,
    "eval": _cmd_eval,
    "buckets": _cmd_buckets,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except (UsageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (FormatError, AlignmentError, GraphError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
