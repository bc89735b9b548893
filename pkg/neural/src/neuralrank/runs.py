"""Run-file production in the evaluator's 6-column interchange format."""

from __future__ import annotations

from .data import Doc, Topic, represent
from .model import CrossEncoder

OUTPUT_FLAG = "NF"


def score_topics(
    topics: list[Topic],
    docs: dict[str, Doc],
    encoder: CrossEncoder,
    batch_size: int = 64,
) -> dict[str, list[tuple[str, float]]]:
    """Score every candidate of every topic; missing documents are a
    topic-level error listing the pmids."""
    mode = encoder.config.representation
    scored: dict[str, list[tuple[str, float]]] = {}
    for topic in sorted(topics, key=lambda t: t.topic_id):
        missing = [p for p in topic.pmids if p not in docs]
        if missing:
            raise ValueError(
                f"topic {topic.topic_id}: candidate pmids missing from the corpus: {missing}"
            )
        texts = [represent(docs[p], mode) for p in topic.pmids]
        values = encoder.score_batch(topic.title, texts, batch_size=batch_size)
        scored[topic.topic_id] = list(zip(topic.pmids, values))
    return scored


def format_run(scored: dict[str, list[tuple[str, float]]], tag: str) -> str:
    """Entries ordered score-descending (ties by ascending pmid), ranks
    1-based and contiguous, scores with 6 decimals, flag NF."""
    if any(ch.isspace() for ch in tag):
        raise ValueError(f"run tag {tag!r} must not contain whitespace")
    lines = []
    for topic_id in sorted(scored):
        ordered = sorted(scored[topic_id], key=lambda ps: (-ps[1], ps[0]))
        for rank, (pmid, score) in enumerate(ordered, 1):
            lines.append(f"{topic_id} {OUTPUT_FLAG} {pmid} {rank} {score:.6f} {tag}")
    return "\n".join(lines) + ("\n" if lines else "")


def write_run_file(
    topics: list[Topic],
    docs: dict[str, Doc],
    encoder: CrossEncoder,
    tag: str,
    path,
    batch_size: int = 64,
) -> None:
    scored = score_topics(topics, docs, encoder, batch_size=batch_size)
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(format_run(scored, tag))
