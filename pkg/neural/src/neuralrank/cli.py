"""Command-line entry point: produce cross-encoder run files and fine-tune."""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys

import yaml

from . import data
from .model import CrossEncoder, EncoderConfig
from .runs import write_run_file
from .train import FinetuneConfig, finetune


def cmd_score(args) -> int:
    encoder = CrossEncoder.load(
        EncoderConfig(
            checkpoint=args.checkpoint,
            representation=args.repr,
            max_length=args.max_length,
            head_seed=args.seed,
        )
    )
    topics = data.read_topics(args.topics)
    docs = data.read_corpus(args.corpus)
    tag = args.tag or f"{args.checkpoint.rstrip('/').rsplit('/', 1)[-1]}-{args.repr}"
    write_run_file(topics, docs, encoder, tag, args.out, batch_size=args.batch_size)
    print(f"scored {len(topics)} topics -> {args.out} (tag {tag}, head seed {args.seed})")
    return 0


def cmd_train(args) -> int:
    tree = {}
    if args.config:
        with open(args.config, encoding="utf-8") as handle:
            tree = yaml.safe_load(handle) or {}
    known = {f.name for f in dataclasses.fields(FinetuneConfig)}
    unknown = set(tree) - known
    if unknown:
        print(f"error: unknown config keys: {sorted(unknown)}", file=sys.stderr)
        return 2
    config = FinetuneConfig(**tree)
    for name in ("checkpoint", "topics", "qrels", "corpus", "out_dir",
                 "epochs", "seed", "learning_rate"):
        value = getattr(args, name, None)
        if value is not None:
            setattr(config, name, value)
    if args.resume:
        config.resume = True
    try:
        config.validate()
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    result = finetune(config)
    print(
        f"trained to step {result.final_step}; "
        f"{len(result.checkpoints)} periodic checkpoint(s) + final -> {result.final_path}"
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="neuralrank", description="Cross-encoder runs for screening prioritisation."
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("score", help="score every topic's candidates into a run file")
    p.add_argument("--checkpoint", required=True, help="model checkpoint directory or name")
    p.add_argument("--topics", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--repr", choices=data.REPRESENTATIONS, default=data.TIAB)
    p.add_argument("--out", required=True)
    p.add_argument("--tag", default=None)
    p.add_argument("--max-length", type=int, default=512)
    p.add_argument("--batch-size", type=int, default=64)
    p.add_argument("--seed", type=int, default=42, help="head init seed for raw encoders")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("train", help="fine-tune a checkpoint with the group contrastive loss")
    p.add_argument("--config", default=None, help="YAML file of FinetuneConfig fields")
    p.add_argument("--checkpoint", default=None)
    p.add_argument("--topics", default=None)
    p.add_argument("--qrels", default=None)
    p.add_argument("--corpus", default=None)
    p.add_argument("--out-dir", dest="out_dir", default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--learning-rate", dest="learning_rate", type=float, default=None)
    p.add_argument("--resume", action="store_true")
    p.set_defaults(func=cmd_train)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
