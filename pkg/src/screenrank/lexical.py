"""Lexical rankers: BM25 and Jelinek-Mercer query likelihood.

Both models share one tokenizer and per-topic collection statistics computed
on the chosen document representation.  Statistics are per-topic because the
screening task ranks each review's own retrieved set; cross-topic statistics
would leak other reviews' vocabulary.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from . import runio
from .corpus import SEPARATOR, DocStore, Topic, represent
from .errors import DataError

MODELS = ("bm25", "qlm")

# Alphanumeric runs (unicode-aware, underscore excluded): everything else
# is a separator, per the declared tokenizer contract.
_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


def tokenize(text: str, stopwords: frozenset[str] = frozenset()) -> list[str]:
    """Lowercase, split on any non-alphanumeric character, drop empties.

    The representation separator sentinel is removed before splitting so it
    never leaks a token into the collection.
    """
    cleaned = text.replace(SEPARATOR, " ").lower()
    tokens = _TOKEN_RE.findall(cleaned)
    if stopwords:
        tokens = [t for t in tokens if t not in stopwords]
    return tokens


@dataclass(frozen=True)
class LexicalParams:
    """Shared scoring parameters.

    Defaults follow the toolkit-default constants for BM25 (k1=1.5, b=0.75,
    epsilon=0.25) and the textbook JM default lambda=0.5; all configurable.
    """

    k1: float = 1.5
    b: float = 0.75
    jm_lambda: float = 0.5
    epsilon: float = 0.25

    def __post_init__(self):
        if self.k1 < 0:
            raise ValueError("k1 must be >= 0")
        if not 0.0 <= self.b <= 1.0:
            raise ValueError("b must be in [0, 1]")
        if not 0.0 < self.jm_lambda < 1.0:
            raise ValueError("lambda must be in (0, 1)")
        if self.epsilon < 0:
            raise ValueError("epsilon must be >= 0")


@dataclass
class CollectionStats:
    """Per-topic collection statistics consumed by both scoring formulas."""

    n_docs: int
    doc_len: dict[str, int]
    avg_doc_len: float
    df: dict[str, int]
    cf: dict[str, int]
    total_tokens: int
    term_freqs: dict[str, Mapping[str, int]]
    _idf: dict[str, float] | None = field(default=None, repr=False, compare=False)
    _mean_positive_idf: float | None = field(default=None, repr=False, compare=False)


def build_stats(
    topic: Topic,
    store: DocStore,
    mode: str,
    stopwords: frozenset[str] = frozenset(),
) -> CollectionStats:
    """Compute statistics over the topic's candidate set on one representation."""
    missing = [p for p in topic.pmids if p not in store]
    if missing:
        raise DataError(
            f"topic {topic.topic_id}: candidate pmids missing from the document store: {missing}"
        )
    term_freqs: dict[str, Mapping[str, int]] = {}
    doc_len: dict[str, int] = {}
    df: Counter = Counter()
    cf: Counter = Counter()
    for pmid in topic.pmids:
        tokens = tokenize(represent(store.get(pmid), mode).text, stopwords)
        counts = Counter(tokens)
        term_freqs[pmid] = counts
        doc_len[pmid] = len(tokens)
        for term, n in counts.items():
            df[term] += 1
            cf[term] += n
    total = sum(doc_len.values())
    n_docs = len(topic.pmids)
    return CollectionStats(
        n_docs=n_docs,
        doc_len=doc_len,
        avg_doc_len=total / n_docs,
        df=dict(df),
        cf=dict(cf),
        total_tokens=total,
        term_freqs=term_freqs,
    )


def _idf_table(stats: CollectionStats) -> tuple[dict[str, float], float]:
    # idf(t) = ln((N - df + 0.5) / (df + 0.5)); the mean over positive idfs
    # feeds the negative-idf floor. Cached on the stats object.
    if stats._idf is None:
        n = stats.n_docs
        idf = {
            term: math.log((n - d + 0.5) / (d + 0.5)) for term, d in stats.df.items()
        }
        positives = [v for v in idf.values() if v > 0]
        stats._idf = idf
        stats._mean_positive_idf = sum(positives) / len(positives) if positives else 0.0
    return stats._idf, stats._mean_positive_idf


def bm25_score(
    query: Sequence[str], pmid: str, stats: CollectionStats, params: LexicalParams
) -> float:
    """Okapi BM25 with a floor replacing negative idf.

    Negative idf (common terms in small candidate sets) is replaced by
    epsilon times the mean positive idf of the collection; query terms
    absent from the collection contribute 0.
    """
    idf, mean_positive = _idf_table(stats)
    floor = params.epsilon * mean_positive
    tf = stats.term_freqs[pmid]
    dl = stats.doc_len[pmid]
    ratio = dl / stats.avg_doc_len if stats.avg_doc_len > 0 else 0.0
    norm = params.k1 * (1.0 - params.b + params.b * ratio)
    score = 0.0
    for term in query:
        weight = idf.get(term)
        if weight is None:
            continue
        freq = tf.get(term, 0)
        if freq == 0:
            continue
        if weight < 0:
            weight = floor
        score += weight * freq * (params.k1 + 1.0) / (freq + norm)
    return score


def qlm_score(
    query: Sequence[str], pmid: str, stats: CollectionStats, params: LexicalParams
) -> float:
    """Query likelihood with Jelinek-Mercer smoothing.

    Sum over query terms of ln((1-lambda)*tf/|d| + lambda*cf/total); terms
    unseen in the whole collection are skipped (contribute 0, not -inf).
    """
    tf = stats.term_freqs[pmid]
    dl = stats.doc_len[pmid]
    lam = params.jm_lambda
    score = 0.0
    for term in query:
        coll_freq = stats.cf.get(term, 0)
        if coll_freq == 0:
            continue
        doc_part = tf.get(term, 0) / dl if dl else 0.0
        score += math.log((1.0 - lam) * doc_part + lam * coll_freq / stats.total_tokens)
    return score


def rank_topic(
    topic: Topic,
    store: DocStore,
    mode: str,
    model: str,
    params: LexicalParams = LexicalParams(),
    stopwords: frozenset[str] = frozenset(),
) -> list[runio.RunEntry]:
    """Rank a topic's candidates against its title query.

    Every candidate appears exactly once, ordered by score descending with
    ties broken by pmid ascending; ranks are 1-based and contiguous.
    """
    if model not in MODELS:
        raise ValueError(f"unknown model {model!r}; expected one of {MODELS}")
    stats = build_stats(topic, store, mode, stopwords)
    query = tokenize(topic.title, stopwords)
    scorer = bm25_score if model == "bm25" else qlm_score
    scored = [(pmid, scorer(query, pmid, stats, params)) for pmid in topic.pmids]
    return runio.rank_scored(scored)


def rank_topics(
    topics: Iterable[Topic],
    store: DocStore,
    mode: str,
    model: str,
    params: LexicalParams = LexicalParams(),
    stopwords: frozenset[str] = frozenset(),
    run_tag: str | None = None,
    jobs: int = 1,
) -> runio.RankedRun:
    """Rank every topic into one run; topics are independent and may be
    scored in parallel without shared mutable state."""
    topics = list(topics)
    tag = run_tag or f"{model}-{mode}"
    results: dict[str, list[runio.RunEntry]] = {}
    if jobs > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=jobs) as pool:
            futures = {
                topic.topic_id: pool.submit(
                    rank_topic, topic, store, mode, model, params, stopwords
                )
                for topic in topics
            }
            results = {topic_id: fut.result() for topic_id, fut in futures.items()}
    else:
        results = {
            topic.topic_id: rank_topic(topic, store, mode, model, params, stopwords)
            for topic in topics
        }
    return runio.RankedRun(tag, results)
