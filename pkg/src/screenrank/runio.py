"""Ranked-run interchange: reading, writing, validating, and completing runs.

A run file has one line per (topic, document): ``topic flag pmid rank score
tag``.  On load, entries are renormalised to the canonical order (score
descending, pmid ascending) with contiguous 1-based ranks, so every loaded
run satisfies the RankedRun invariants regardless of how it was produced.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, NamedTuple

from .corpus import Qrels, Topic
from .errors import DataError, ParseError


class RunEntry(NamedTuple):
    pmid: str
    rank: int
    score: float


ACCEPTED_FLAGS = ("Q0", "NF", "AF")
OUTPUT_FLAG = "NF"  # this toolkit only produces no-feedback rankings


def rank_scored(scored: Iterable[tuple[str, float]]) -> list[RunEntry]:
    """Order (pmid, score) pairs canonically and assign 1-based ranks.

    Canonical order is score descending with ties broken by pmid ascending;
    the same rule is applied everywhere a ranking is materialised.
    """
    ordered = sorted(scored, key=lambda ps: (-ps[1], ps[0]))
    return [RunEntry(pmid, rank, score) for rank, (pmid, score) in enumerate(ordered, 1)]


@dataclass
class RankedRun:
    """Per-topic ordered (pmid, rank, score) lists plus a run tag.

    The original flag column is kept for provenance but excluded from
    equality: runs are compared on their tag and ranking content.
    """

    run_tag: str
    topics: dict[str, list[RunEntry]]
    flag: str = field(default=OUTPUT_FLAG, compare=False)

    @classmethod
    def from_scores(
        cls,
        run_tag: str,
        scores_by_topic: Mapping[str, Iterable[tuple[str, float]]],
        flag: str = OUTPUT_FLAG,
    ) -> "RankedRun":
        topics: dict[str, list[RunEntry]] = {}
        for topic_id, pairs in scores_by_topic.items():
            pairs = list(pairs)
            pmids = [p for p, _ in pairs]
            if len(set(pmids)) != len(pmids):
                raise DataError(f"topic {topic_id}: duplicate pmids in scored list")
            topics[topic_id] = rank_scored(pairs)
        return cls(run_tag, topics, flag)

    def topic_ids(self) -> list[str]:
        return sorted(self.topics)

    def __len__(self) -> int:
        return sum(len(entries) for entries in self.topics.values())


def read_run(source: str | Iterable[str]) -> RankedRun:
    """Parse a 6-column run file and renormalise it.

    The stored rank column is validated but then rewritten from the
    canonical ordering; the first flag and tag encountered are recorded.
    """
    if isinstance(source, str):
        lines = source.splitlines()
    else:
        lines = [line.rstrip("\n") for line in source]
    raw: dict[str, list[tuple[str, float]]] = {}
    seen: set[tuple[str, str]] = set()
    tag: str | None = None
    flag: str | None = None
    for lineno, line in enumerate(lines, 1):
        parts = line.split()
        if not parts:
            continue
        if len(parts) != 6:
            raise ParseError(f"expected 6 columns, got {len(parts)}", line=lineno)
        topic_id, line_flag, pmid, rank_text, score_text, line_tag = parts
        if line_flag not in ACCEPTED_FLAGS:
            raise ParseError(
                f"unknown flag {line_flag!r} (expected one of {'/'.join(ACCEPTED_FLAGS)})",
                line=lineno,
            )
        try:
            int(rank_text)
        except ValueError:
            raise ParseError(f"non-integer rank {rank_text!r}", line=lineno) from None
        try:
            score = float(score_text)
        except ValueError:
            raise ParseError(f"non-numeric score {score_text!r}", line=lineno) from None
        if math.isnan(score):
            raise ParseError("score is NaN", line=lineno)
        key = (topic_id, pmid)
        if key in seen:
            raise DataError(f"duplicate run entry for topic {topic_id} pmid {pmid}")
        seen.add(key)
        if tag is None:
            tag = line_tag
        if flag is None:
            flag = line_flag
        raw.setdefault(topic_id, []).append((pmid, score))
    return RankedRun(
        run_tag=tag if tag is not None else "",
        topics={t: rank_scored(pairs) for t, pairs in raw.items()},
        flag=flag if flag is not None else OUTPUT_FLAG,
    )


def write_run(run: RankedRun) -> str:
    """Serialize a run: 6 columns, NF flag, 6-decimal scores, topics ascending."""
    if any(ch.isspace() for ch in run.run_tag):
        raise DataError(f"run tag {run.run_tag!r} must not contain whitespace")
    lines = []
    for topic_id in sorted(run.topics):
        for entry in run.topics[topic_id]:
            lines.append(
                f"{topic_id} {OUTPUT_FLAG} {entry.pmid} {entry.rank} "
                f"{entry.score:.6f} {run.run_tag}"
            )
    return "\n".join(lines) + ("\n" if lines else "")


def read_run_file(path) -> RankedRun:
    with open(path, encoding="utf-8") as handle:
        return read_run(handle)


def write_run_file(run: RankedRun, path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(write_run(run))


# ---------------------------------------------------------------------------
# Validation and completion
# ---------------------------------------------------------------------------

@dataclass
class TopicGap:
    missing: list[str]
    foreign: list[str]
    unranked_relevant: list[str]


@dataclass
class RunReport:
    """Per-topic consistency findings for a run against a dataset."""

    run_tag: str
    gaps: dict[str, TopicGap]
    unknown_topics: list[str]

    def is_complete(self) -> bool:
        """True iff the run ranks exactly the candidate set of every topic."""
        return not self.gaps and not self.unknown_topics

    def to_dict(self) -> dict:
        return {
            "run_tag": self.run_tag,
            "complete": self.is_complete(),
            "unknown_topics": self.unknown_topics,
            "topics": {
                topic_id: {
                    "missing": gap.missing,
                    "foreign": gap.foreign,
                    "unranked_relevant": gap.unranked_relevant,
                }
                for topic_id, gap in sorted(self.gaps.items())
            },
        }


def validate_against(run: RankedRun, topics: Iterable[Topic], qrels: Qrels | None = None) -> RunReport:
    """Report candidates missing from the run, foreign documents, and
    relevant documents left unranked.  A report, not a failure."""
    gaps: dict[str, TopicGap] = {}
    topic_ids = set()
    for topic in topics:
        topic_ids.add(topic.topic_id)
        ranked = {e.pmid for e in run.topics.get(topic.topic_id, [])}
        candidates = set(topic.pmids)
        missing = sorted(candidates - ranked)
        foreign = sorted(ranked - candidates)
        relevant = (qrels.relevant(topic.topic_id) & candidates) if qrels else set()
        unranked_relevant = sorted(relevant - ranked)
        if missing or foreign or unranked_relevant:
            gaps[topic.topic_id] = TopicGap(missing, foreign, unranked_relevant)
    unknown = sorted(set(run.topics) - topic_ids)
    return RunReport(run.run_tag, gaps, unknown)


def complete_run(
    run: RankedRun, topics: Iterable[Topic], strict: bool = False
) -> tuple[RankedRun, dict]:
    """Normalise a run against its dataset for evaluation.

    In append mode (default), foreign documents are dropped and unranked
    candidates are appended after the last ranked document in pmid order,
    all sharing a score strictly below the ranked minimum.  Topics wholly
    absent from the run are skipped and reported, not synthesised.  In
    strict mode any deviation from the candidate permutation is rejected.
    """
    topic_index = {t.topic_id: t for t in topics}
    completed: dict[str, list[RunEntry]] = {}
    notes: dict = {"appended": {}, "dropped_foreign": {}, "unknown_topics": [], "absent_topics": []}

    for topic_id in sorted(run.topics):
        topic = topic_index.get(topic_id)
        if topic is None:
            if strict:
                raise DataError(f"strict mode: run contains unknown topic {topic_id}")
            notes["unknown_topics"].append(topic_id)
            continue
        candidates = set(topic.pmids)
        kept = [e for e in run.topics[topic_id] if e.pmid in candidates]
        foreign = sorted(e.pmid for e in run.topics[topic_id] if e.pmid not in candidates)
        missing = sorted(candidates - {e.pmid for e in kept})
        if strict and (foreign or missing):
            raise DataError(
                f"strict mode: topic {topic_id} does not rank exactly its candidate set "
                f"({len(missing)} missing, {len(foreign)} foreign)"
            )
        if foreign:
            notes["dropped_foreign"][topic_id] = foreign
        entries = [RunEntry(e.pmid, rank, e.score) for rank, e in enumerate(kept, 1)]
        if missing:
            tail_score = (entries[-1].score if entries else 0.0) - 1.0
            start = len(entries) + 1
            entries.extend(
                RunEntry(pmid, rank, tail_score)
                for rank, pmid in enumerate(missing, start)
            )
            notes["appended"][topic_id] = missing
        completed[topic_id] = entries

    absent = sorted(set(topic_index) - set(run.topics))
    if strict and absent:
        raise DataError(f"strict mode: run has no entries for topics {absent}")
    notes["absent_topics"] = absent
    return RankedRun(run.run_tag, completed, flag=run.flag), notes
