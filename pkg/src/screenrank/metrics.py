"""Screening-prioritisation evaluation measures and the run evaluator.

Per-topic measures: Last_Rel (rank of the deepest relevant document), AP,
Recall@p% for p in {1,5,10,20}, and WSS@k for k in {95,100}, averaged
across evaluated topics.  All measures are ranking-determined: they read
only the candidate order and the binary relevance (grade > 0) of each
document.  Percentage cutoffs use the ceiling so "at least k% found" holds;
exact rational arithmetic keeps the cutoff immune to float noise.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from statistics import fmean
from typing import Iterable, Mapping, Sequence

from . import runio
from .corpus import Qrels, Topic
from .errors import DataError, ScreenRankError


class TopicExcluded(ScreenRankError):
    """Raised for topics that cannot be evaluated (no relevant documents)."""


def _relevant_count(ranking: Sequence[str], relevant: frozenset[str] | set[str]) -> int:
    return sum(1 for pmid in ranking if pmid in relevant)


def last_rel(ranking: Sequence[str], relevant: set[str] | frozenset[str]) -> int:
    """1-based rank of the deepest relevant document."""
    deepest = 0
    for rank, pmid in enumerate(ranking, 1):
        if pmid in relevant:
            deepest = rank
    if deepest == 0:
        raise TopicExcluded("no relevant documents in ranking")
    return deepest


def average_precision(ranking: Sequence[str], relevant: set[str] | frozenset[str]) -> float:
    """(1/R) * sum over relevant documents at rank r of precision@r."""
    hits = 0
    acc = 0.0
    for rank, pmid in enumerate(ranking, 1):
        if pmid in relevant:
            hits += 1
            acc += hits / rank
    if hits == 0:
        raise TopicExcluded("no relevant documents in ranking")
    return acc / hits


def recall_at_percent(
    ranking: Sequence[str], relevant: set[str] | frozenset[str], p: int | float
) -> float:
    """Recall within the top ceil(p% of N) documents."""
    if not 0 < p <= 100:
        raise ValueError("p must be in (0, 100]")
    total = _relevant_count(ranking, relevant)
    if total == 0:
        raise TopicExcluded("no relevant documents in ranking")
    cutoff = math.ceil(Fraction(p) * len(ranking) / 100)
    found = sum(1 for pmid in ranking[:cutoff] if pmid in relevant)
    return found / total


def wss(ranking: Sequence[str], relevant: set[str] | frozenset[str], k: int | float) -> float:
    """Work saved over sampling when stopping once k% of relevant are found.

    With r_k the rank at which ceil(k% of R) relevant documents have been
    found, WSS@k = (N - r_k)/N - (1 - k/100).  Negative values (ranking
    worse than the k% sampling baseline) are not clamped.
    """
    if not 0 < k <= 100:
        raise ValueError("k must be in (0, 100]")
    total = _relevant_count(ranking, relevant)
    if total == 0:
        raise TopicExcluded("no relevant documents in ranking")
    threshold = math.ceil(Fraction(k) * total / 100)
    n = len(ranking)
    found = 0
    for rank, pmid in enumerate(ranking, 1):
        if pmid in relevant:
            found += 1
            if found >= threshold:
                return (n - rank) / n - (1.0 - k / 100.0)
    raise AssertionError("threshold not reached despite R >= threshold")


# ---------------------------------------------------------------------------
# Topic- and report-level evaluation
# ---------------------------------------------------------------------------

DEFAULT_RECALL_POINTS = (1, 5, 10, 20)
DEFAULT_WSS_POINTS = (95, 100)


@dataclass(frozen=True)
class EvalOptions:
    strict: bool = False
    recall_points: tuple = DEFAULT_RECALL_POINTS
    wss_points: tuple = DEFAULT_WSS_POINTS


@dataclass(frozen=True)
class TopicEval:
    topic_id: str
    n: int
    r: int
    last_rel: int
    ap: float
    recall_at: Mapping[int | float, float]
    wss: Mapping[int | float, float]

    def value(self, measure: str) -> float:
        return measure_value(self, measure)


def _parse_point(text: str) -> int | float:
    return int(text) if text.isdigit() else float(text)


def measure_value(ev: TopicEval, measure: str) -> float:
    """Look up a measure by name: last_rel, ap, recall@P, or wss@K."""
    name = measure.lower()
    if name in ("last_rel", "lastrel"):
        return float(ev.last_rel)
    if name == "ap":
        return ev.ap
    if name.startswith("recall@"):
        point = _parse_point(name[len("recall@"):].rstrip("%"))
        if point not in ev.recall_at:
            raise ValueError(f"measure {measure!r} was not computed for this report")
        return ev.recall_at[point]
    if name.startswith("wss@"):
        point = _parse_point(name[len("wss@"):].rstrip("%"))
        if point not in ev.wss:
            raise ValueError(f"measure {measure!r} was not computed for this report")
        return ev.wss[point]
    raise ValueError(f"unknown measure {measure!r}")


@dataclass
class MetricReport:
    run_tag: str
    topic_evals: list[TopicEval]
    means: dict[str, float]
    excluded: list[tuple[str, str]]
    recall_points: tuple = DEFAULT_RECALL_POINTS
    wss_points: tuple = DEFAULT_WSS_POINTS
    notes: dict = field(default_factory=dict)

    def per_topic(self, measure: str) -> dict[str, float]:
        return {ev.topic_id: measure_value(ev, measure) for ev in self.topic_evals}

    def measures(self) -> list[str]:
        return (
            ["last_rel", "ap"]
            + [f"recall@{p}" for p in self.recall_points]
            + [f"wss@{k}" for k in self.wss_points]
        )


def evaluate(
    run: runio.RankedRun,
    topics: Iterable[Topic],
    qrels: Qrels,
    options: EvalOptions | None = None,
) -> MetricReport:
    """Evaluate a run against topics and qrels.

    The run is first completed per the runio rules (append unranked
    candidates, drop foreign documents; strict mode rejects instead).
    Topics with no relevant candidate are excluded from means and reported.
    """
    opts = options or EvalOptions()
    topics = list(topics)
    completed, notes = runio.complete_run(run, topics, strict=opts.strict)
    topic_index = {t.topic_id: t for t in topics}

    excluded: list[tuple[str, str]] = []
    excluded.extend((t, "not in run") for t in notes["absent_topics"])
    excluded.extend((t, "unknown topic (no candidate set)") for t in notes["unknown_topics"])

    evals: list[TopicEval] = []
    for topic_id in sorted(completed.topics):
        topic = topic_index[topic_id]
        ranking = [e.pmid for e in completed.topics[topic_id]]
        relevant = {p for p in topic.pmids if (qrels.grade(topic_id, p) or 0) > 0}
        if not relevant:
            excluded.append((topic_id, "no relevant candidates"))
            continue
        evals.append(
            TopicEval(
                topic_id=topic_id,
                n=len(ranking),
                r=len(relevant),
                last_rel=last_rel(ranking, relevant),
                ap=average_precision(ranking, relevant),
                recall_at={p: recall_at_percent(ranking, relevant, p) for p in opts.recall_points},
                wss={k: wss(ranking, relevant, k) for k in opts.wss_points},
            )
        )
    if not evals:
        raise DataError("run covers no evaluated topic")

    means = {
        "last_rel": fmean(float(ev.last_rel) for ev in evals),
        "ap": fmean(ev.ap for ev in evals),
    }
    for p in opts.recall_points:
        means[f"recall@{p}"] = fmean(ev.recall_at[p] for ev in evals)
    for k in opts.wss_points:
        means[f"wss@{k}"] = fmean(ev.wss[k] for ev in evals)

    return MetricReport(
        run_tag=run.run_tag,
        topic_evals=evals,
        means=means,
        excluded=sorted(excluded),
        recall_points=opts.recall_points,
        wss_points=opts.wss_points,
        notes=notes,
    )


# ---------------------------------------------------------------------------
# Report rendering
# ---------------------------------------------------------------------------

def report_records(report: MetricReport) -> list[dict]:
    """Machine-readable records: one per topic plus a means record."""
    records = []
    for ev in report.topic_evals:
        rec = {
            "record": "topic",
            "topic_id": ev.topic_id,
            "n": ev.n,
            "r": ev.r,
            "last_rel": ev.last_rel,
            "ap": ev.ap,
        }
        for p in report.recall_points:
            rec[f"recall@{p}"] = ev.recall_at[p]
        for k in report.wss_points:
            rec[f"wss@{k}"] = ev.wss[k]
        records.append(rec)
    records.append(
        {
            "record": "means",
            "run_tag": report.run_tag,
            "topics_evaluated": len(report.topic_evals),
            "excluded": [list(pair) for pair in report.excluded],
            **report.means,
        }
    )
    return records


def report_jsonl(report: MetricReport) -> str:
    lines = [json.dumps(rec, sort_keys=True) for rec in report_records(report)]
    return "\n".join(lines) + "\n"


def format_table(report: MetricReport) -> str:
    """Fixed-width human-readable table with a MEAN row and exclusions."""
    headers = (
        ["topic", "N", "R", "last_rel", "AP"]
        + [f"R@{p}%" for p in report.recall_points]
        + [f"WSS@{k}" for k in report.wss_points]
    )
    rows = []
    for ev in report.topic_evals:
        rows.append(
            [ev.topic_id, str(ev.n), str(ev.r), str(ev.last_rel), f"{ev.ap:.4f}"]
            + [f"{ev.recall_at[p]:.4f}" for p in report.recall_points]
            + [f"{ev.wss[k]:.4f}" for k in report.wss_points]
        )
    mean_row = (
        ["MEAN", "-", "-", f"{report.means['last_rel']:.4f}", f"{report.means['ap']:.4f}"]
        + [f"{report.means[f'recall@{p}']:.4f}" for p in report.recall_points]
        + [f"{report.means[f'wss@{k}']:.4f}" for k in report.wss_points]
    )
    widths = [
        max(len(headers[i]), *(len(r[i]) for r in rows + [mean_row]))
        for i in range(len(headers))
    ]
    out = [f"run: {report.run_tag}"]
    out.append("  ".join(h.rjust(w) for h, w in zip(headers, widths)))
    for row in rows + [mean_row]:
        out.append("  ".join(c.rjust(w) for c, w in zip(row, widths)))
    for topic_id, reason in report.excluded:
        out.append(f"excluded {topic_id}: {reason}")
    return "\n".join(out) + "\n"
