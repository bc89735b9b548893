"""Command-line entry point wiring ingestion, ranking, evaluation, and
analysis into reproducible pipelines.

Exit codes: 0 success, 1 runtime failure (bad data, failed fetch), 2
usage/config error (missing paths, unknown options).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import re
import sys
from pathlib import Path

from . import analysis, config as config_mod, corpus, lexical, metrics, pubmed, runio
from .errors import ConfigError, ScreenRankError

log = logging.getLogger(__name__)


def _require_files(*pairs: tuple[str, str | None]) -> None:
    for name, value in pairs:
        if not value:
            raise ConfigError(f"missing required {name} path")
        if not Path(value).is_file():
            raise ConfigError(f"{name} path does not exist: {value}")


def _load_dataset(topics_path, qrels_path=None, corpus_path=None):
    topics = corpus.read_topics(topics_path)
    qrels = corpus.read_qrels(qrels_path) if qrels_path else None
    store = corpus.read_corpus(corpus_path) if corpus_path else None
    return topics, qrels, store


def _write_text(path, text: str) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(text)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_fetch(args) -> int:
    if args.pmids:
        _require_files(("pmids", args.pmids))
        with open(args.pmids, encoding="utf-8") as handle:
            pmids = [line.strip() for line in handle if line.strip()]
    else:
        _require_files(("topics", args.topics))
        pmids = []
        seen = set()
        for topic in corpus.read_topics(args.topics):
            for pmid in topic.pmids:
                if pmid not in seen:
                    seen.add(pmid)
                    pmids.append(pmid)
    fetcher = pubmed.PubMedFetcher(
        endpoint=args.endpoint,
        api_key=args.api_key or os.environ.get("PUBMED_API_KEY"),
        batch_size=args.batch_size,
    )
    result = fetcher.fetch(pmids)
    _write_text(args.out, corpus.write_corpus(result.records))
    print(f"fetched {len(result.records)} of {len(pmids)} documents -> {args.out}")
    if result.missing:
        print(f"missing from service ({len(result.missing)}): {' '.join(result.missing)}", file=sys.stderr)
    if result.skipped:
        print(f"skipped (no title) ({len(result.skipped)}): {' '.join(result.skipped)}", file=sys.stderr)
    if args.report:
        report = {"fetched": len(result.records), "missing": result.missing, "skipped": result.skipped}
        _write_text(args.report, json.dumps(report, sort_keys=True) + "\n")
    return 0


def cmd_ingest(args) -> int:
    _require_files(("topics", args.topics), ("qrels", args.qrels), ("corpus", args.corpus))
    topics, qrels, store = _load_dataset(args.topics, args.qrels, args.corpus)
    report = corpus.ingest_report(topics, qrels, store)
    payload = json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"
    if args.out:
        _write_text(args.out, payload)
    else:
        sys.stdout.write(payload)
    n_missing = sum(len(v) for v in report.docs_missing.values())
    print(
        f"ingested {len(topics)} topics, {len(qrels)} judgments, {len(store)} documents; "
        f"{n_missing} candidate pmid(s) lack a document record",
        file=sys.stderr,
    )
    return 0


def cmd_rank(args) -> int:
    _require_files(("topics", args.topics), ("corpus", args.corpus))
    topics, _, store = _load_dataset(args.topics, corpus_path=args.corpus)
    params = lexical.LexicalParams(
        k1=args.k1, b=args.b, jm_lambda=args.jm_lambda, epsilon=args.epsilon
    )
    run = lexical.rank_topics(
        topics,
        store,
        mode=args.repr,
        model=args.model,
        params=params,
        run_tag=args.tag,
        jobs=args.jobs,
    )
    runio.write_run_file(run, args.out)
    if args.seed is not None:
        log.info("seed %d recorded (no effect on lexical ranking)", args.seed)
    print(f"ranked {len(run.topics)} topics ({len(run)} entries) -> {args.out}")
    return 0


def cmd_evaluate(args) -> int:
    _require_files(("run", args.run), ("topics", args.topics), ("qrels", args.qrels))
    topics, qrels, _ = _load_dataset(args.topics, args.qrels)
    run = runio.read_run_file(args.run)
    report = metrics.evaluate(
        run, topics, qrels, metrics.EvalOptions(strict=args.strict)
    )
    sys.stdout.write(metrics.format_table(report))
    if args.out:
        _write_text(args.out, metrics.report_jsonl(report))
    return 0


def cmd_validate(args) -> int:
    _require_files(("run", args.run), ("topics", args.topics), ("qrels", args.qrels))
    topics, qrels, _ = _load_dataset(args.topics, args.qrels)
    run = runio.read_run_file(args.run)
    report = runio.validate_against(run, topics, qrels)
    payload = json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"
    if args.out:
        _write_text(args.out, payload)
    else:
        sys.stdout.write(payload)
    if args.strict and not report.is_complete():
        print("validation failed: run does not rank exactly the candidate sets", file=sys.stderr)
        return 1
    return 0


def cmd_compare(args) -> int:
    _require_files(("topics", args.topics), ("qrels", args.qrels))
    for run_path in args.runs:
        _require_files(("run", run_path))
    if len(args.runs) < 2:
        raise ConfigError("compare needs a focal run and at least one other run")
    topics, qrels, _ = _load_dataset(args.topics, args.qrels)
    opts = metrics.EvalOptions(strict=args.strict)
    reports = [
        metrics.evaluate(runio.read_run_file(path), topics, qrels, opts)
        for path in args.runs
    ]
    results = analysis.compare_reports(reports, args.measure)
    focal = reports[0].run_tag
    lines = [
        f"focal: {focal}  measure: {args.measure}  alpha: {args.alpha}  "
        f"bonferroni_family: {len(results)}"
    ]
    records = []
    for other_tag, cmp_result in results:
        marker = "*" if cmp_result.is_significant(args.alpha) else " "
        note = f"  [{cmp_result.degenerate}]" if cmp_result.degenerate else ""
        lines.append(
            f"{focal} vs {other_tag}: mean {cmp_result.mean_a:.4f} vs {cmp_result.mean_b:.4f}  "
            f"t={cmp_result.t_statistic:.4f} df={cmp_result.df} p={cmp_result.p_value:.6f} "
            f"corrected_p={cmp_result.corrected_p:.6f} {marker}{note}"
        )
        records.append(
            {
                "focal": focal,
                "other": other_tag,
                "measure": cmp_result.measure,
                "n_topics": cmp_result.n_topics,
                "mean_focal": cmp_result.mean_a,
                "mean_other": cmp_result.mean_b,
                "t": cmp_result.t_statistic,
                "df": cmp_result.df,
                "p": cmp_result.p_value,
                "corrected_p": cmp_result.corrected_p,
                "n_comparisons": cmp_result.n_comparisons,
                "significant": cmp_result.is_significant(args.alpha),
                "degenerate": cmp_result.degenerate,
            }
        )
    print("\n".join(lines))
    if args.out:
        _write_text(
            args.out,
            "\n".join(json.dumps(r, sort_keys=True) for r in records) + "\n",
        )
    return 0


def cmd_gainloss(args) -> int:
    _require_files(
        ("run-a", args.run_a), ("run-b", args.run_b),
        ("topics", args.topics), ("qrels", args.qrels),
    )
    topics, qrels, _ = _load_dataset(args.topics, args.qrels)
    opts = metrics.EvalOptions(strict=args.strict)
    report_a = metrics.evaluate(runio.read_run_file(args.run_a), topics, qrels, opts)
    report_b = metrics.evaluate(runio.read_run_file(args.run_b), topics, qrels, opts)
    result = analysis.gain_loss(report_a, report_b, args.measure)
    table = "\n".join(analysis.gain_loss_table(result)) + "\n"
    if args.out:
        _write_text(args.out, table)
    else:
        sys.stdout.write(table)
    print(
        f"{result.run_a} vs {result.run_b} on {result.measure}: "
        f"{result.wins} wins, {result.losses} losses, {result.ties} ties",
        file=sys.stderr,
    )
    return 0


def _discover_series(directory: str, pattern: str) -> list[tuple[int, str]]:
    if pattern.count("*") != 1:
        raise ConfigError("series pattern must contain exactly one '*' capturing the step")
    regex = re.compile("^" + re.escape(pattern).replace(r"\*", r"(\d+)") + "$")
    root = Path(directory)
    if not root.is_dir():
        raise ConfigError(f"series directory does not exist: {directory}")
    series = []
    for entry in root.iterdir():
        match = regex.match(entry.name)
        if match:
            series.append((int(match.group(1)), str(entry)))
    series.sort()
    return series


def cmd_convergence(args) -> int:
    _require_files(("topics", args.topics), ("qrels", args.qrels))
    series_paths = _discover_series(args.series, args.pattern)
    if len(series_paths) < 2:
        raise ConfigError(
            f"found {len(series_paths)} checkpoint run(s) matching {args.pattern!r}; need at least 2"
        )
    topics, qrels, _ = _load_dataset(args.topics, args.qrels)
    series = [(step, runio.read_run_file(path)) for step, path in series_paths]
    result = analysis.convergence(
        series, topics, qrels, measure=args.measure, alpha=args.alpha,
        eval_options=metrics.EvalOptions(strict=args.strict),
    )
    table = "\n".join(analysis.convergence_table(result)) + "\n"
    if args.out:
        _write_text(args.out, table)
    else:
        sys.stdout.write(table)
    saturation = (
        str(result.saturation_step)
        if result.saturation_step is not None
        else "no saturation within series"
    )
    print(f"best step: {result.best_step}", file=sys.stderr)
    print(f"saturation step: {saturation}", file=sys.stderr)
    return 0


def cmd_pipeline(args) -> int:
    cfg = config_mod.load_config(args.config) if args.config else config_mod.PipelineConfig()
    overrides = {
        "topics": args.topics,
        "qrels": args.qrels,
        "corpus": args.corpus,
        "out_dir": args.out_dir,
        "model": args.model,
        "representation": args.repr,
        "k1": args.k1,
        "b": args.b,
        "jm_lambda": args.jm_lambda,
        "epsilon": args.epsilon,
        "tag": args.tag,
        "strict": args.strict or None,
        "alpha": args.alpha,
        "jobs": args.jobs,
        "seed": args.seed,
    }
    for attr, value in overrides.items():
        if value is not None:
            setattr(cfg, attr, value)
    cfg.validate()
    out = Path(cfg.out_dir)
    config_mod.write_effective(cfg, out / "config.yaml")

    topics, qrels, store = _load_dataset(cfg.topics, cfg.qrels, cfg.corpus)
    ingest = corpus.ingest_report(topics, qrels, store)
    _write_text(out / "ingest.json", json.dumps(ingest.to_dict(), indent=2, sort_keys=True) + "\n")

    tag = cfg.effective_tag()
    run = lexical.rank_topics(
        topics,
        store,
        mode=cfg.representation,
        model=cfg.model,
        params=cfg.lexical_params(),
        run_tag=tag,
        jobs=int(cfg.jobs),
    )
    run_path = out / f"{tag}.run"
    runio.write_run_file(run, run_path)

    report = metrics.evaluate(run, topics, qrels, metrics.EvalOptions(strict=bool(cfg.strict)))
    _write_text(out / f"{tag}.eval.jsonl", metrics.report_jsonl(report))
    _write_text(out / f"{tag}.eval.txt", metrics.format_table(report))
    print(f"pipeline complete: {run_path}")
    sys.stdout.write(metrics.format_table(report))
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="screenrank",
        description="Rank, evaluate, and analyse systematic-review screening runs.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log at INFO level")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fetch", help="fetch documents into a local corpus file")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--pmids", help="file with one pmid per line")
    src.add_argument("--topics", help="topics file; fetches all candidate pmids")
    p.add_argument("--out", required=True, help="corpus output path (JSON lines)")
    p.add_argument("--endpoint", default=pubmed.DEFAULT_ENDPOINT)
    p.add_argument("--api-key", default=None, help="defaults to $PUBMED_API_KEY")
    p.add_argument("--batch-size", type=int, default=pubmed.DEFAULT_BATCH_SIZE)
    p.add_argument("--report", default=None, help="write a JSON fetch report here")
    p.set_defaults(func=cmd_fetch)

    p = sub.add_parser("ingest", help="load a dataset and write a consistency report")
    p.add_argument("--topics", required=True)
    p.add_argument("--qrels", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", default=None, help="report path (stdout if omitted)")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("rank", help="rank every topic's candidates with a lexical model")
    p.add_argument("--model", required=True, choices=lexical.MODELS)
    p.add_argument("--repr", required=True, choices=corpus.REPRESENTATIONS)
    p.add_argument("--topics", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True, help="run file output path")
    p.add_argument("--tag", default=None, help="run tag (defaults to model-repr)")
    p.add_argument("--k1", type=float, default=1.5)
    p.add_argument("--b", type=float, default=0.75)
    p.add_argument("--lambda", dest="jm_lambda", type=float, default=0.5)
    p.add_argument("--epsilon", type=float, default=0.25)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--seed", type=int, default=None, help="recorded; no effect on lexical ranking")
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("evaluate", help="compute screening metrics for a run")
    p.add_argument("--run", required=True)
    p.add_argument("--topics", required=True)
    p.add_argument("--qrels", required=True)
    p.add_argument("--out", default=None, help="machine-readable report (JSON lines)")
    p.add_argument("--strict", action="store_true", help="reject incomplete runs")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("validate", help="report run/candidate-set mismatches")
    p.add_argument("--run", required=True)
    p.add_argument("--topics", required=True)
    p.add_argument("--qrels", required=True)
    p.add_argument("--out", default=None)
    p.add_argument("--strict", action="store_true", help="exit 1 when the run is incomplete")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("compare", help="paired t-tests of a focal run against others")
    p.add_argument("--runs", nargs="+", required=True, help="focal run first, then the others")
    p.add_argument("--measure", default="ap")
    p.add_argument("--topics", required=True)
    p.add_argument("--qrels", required=True)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--strict", action="store_true")
    p.add_argument("--out", default=None, help="JSON lines output")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("gainloss", help="per-topic effectiveness difference of two runs")
    p.add_argument("--run-a", required=True)
    p.add_argument("--run-b", required=True)
    p.add_argument("--measure", default="ap")
    p.add_argument("--topics", required=True)
    p.add_argument("--qrels", required=True)
    p.add_argument("--strict", action="store_true")
    p.add_argument("--out", default=None, help="CSV table output (stdout if omitted)")
    p.set_defaults(func=cmd_gainloss)

    p = sub.add_parser("convergence", help="evaluate a checkpoint run series and find saturation")
    p.add_argument("--series", required=True, help="directory holding checkpoint run files")
    p.add_argument("--pattern", default="step-*.run", help="filename pattern; '*' captures the step")
    p.add_argument("--measure", default="ap")
    p.add_argument("--topics", required=True)
    p.add_argument("--qrels", required=True)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--strict", action="store_true")
    p.add_argument("--out", default=None, help="CSV table output (stdout if omitted)")
    p.set_defaults(func=cmd_convergence)

    p = sub.add_parser("pipeline", help="rank + evaluate per a config file, echoing the config")
    p.add_argument("--config", default=None, help="YAML config file")
    p.add_argument("--topics", default=None)
    p.add_argument("--qrels", default=None)
    p.add_argument("--corpus", default=None)
    p.add_argument("--out-dir", default=None)
    p.add_argument("--model", default=None, choices=lexical.MODELS)
    p.add_argument("--repr", default=None, choices=corpus.REPRESENTATIONS)
    p.add_argument("--k1", type=float, default=None)
    p.add_argument("--b", type=float, default=None)
    p.add_argument("--lambda", dest="jm_lambda", type=float, default=None)
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--tag", default=None)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--strict", action="store_true")
    p.add_argument("--jobs", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_pipeline)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ScreenRankError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
