"""Training triples: one positive plus a group of same-topic negatives."""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass

from .data import Doc, Topic, judged_nonrelevant_pmids, relevant_pmids, represent

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainingTriple:
    topic_id: str
    query: str
    positive_pmid: str
    negative_pmids: tuple[str, ...]
    positive: str
    negatives: tuple[str, ...]
    with_replacement: bool  # pool was smaller than the group needed


def build_triples(
    topics: list[Topic],
    grades: dict[tuple[str, str], int],
    docs: dict[str, Doc],
    representation: str,
    group_size: int = 10,
    seed: int = 42,
    epoch: int = 0,
) -> list[TrainingTriple]:
    """One triple per relevant document of each training topic.

    Negatives are sampled uniformly without replacement from the topic's
    judged non-relevant candidates; topics with fewer than group_size-1
    negatives fall back to sampling with replacement and are flagged.
    Fresh negatives are drawn each epoch under a seed derived from
    (seed, epoch), so a fixed seed reproduces the whole stream.
    """
    if group_size < 2:
        raise ValueError("group_size must be >= 2")
    rng = random.Random(f"{seed}:{epoch}")
    n_negatives = group_size - 1
    triples: list[TrainingTriple] = []
    for topic in sorted(topics, key=lambda t: t.topic_id):
        candidates = [p for p in topic.pmids if p in docs]
        positives = sorted(relevant_pmids(grades, topic.topic_id) & set(candidates))
        pool = sorted(judged_nonrelevant_pmids(grades, topic.topic_id) & set(candidates))
        if not positives:
            log.warning("topic %s has no positives; skipped", topic.topic_id)
            continue
        if not pool:
            log.warning("topic %s has no judged negatives; skipped", topic.topic_id)
            continue
        replacement = len(pool) < n_negatives
        if replacement:
            log.warning(
                "topic %s: %d negatives for group size %d; sampling with replacement",
                topic.topic_id, len(pool), group_size,
            )
        for positive in positives:
            if replacement:
                negatives = tuple(rng.choice(pool) for _ in range(n_negatives))
            else:
                negatives = tuple(rng.sample(pool, n_negatives))
            triples.append(
                TrainingTriple(
                    topic_id=topic.topic_id,
                    query=topic.title,
                    positive_pmid=positive,
                    negative_pmids=negatives,
                    positive=represent(docs[positive], representation),
                    negatives=tuple(represent(docs[n], representation) for n in negatives),
                    with_replacement=replacement,
                )
            )
    return triples
