"""Dataset ingestion: topics, relevance judgments, and the local document store.

Topics arrive as keyword-block text (``Topic:`` / ``Title:`` / ``Query:`` /
``Pids:``), judgments as 4-column qrels lines, and documents as line-delimited
JSON records keyed by PMID.  Everything is immutable after load and safe to
share across threads.
"""

from __future__ import annotations

import json
import logging
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping

from .errors import DataError, ParseError

log = logging.getLogger(__name__)

# Reserved sentinel joining title and abstract in the TiAb representation.
# The lexical tokenizer strips it; a neural consumer maps it to its own
# segment separator.
SEPARATOR = "[SEP]"

TITLE = "title"
TIAB = "tiab"
REPRESENTATIONS = (TITLE, TIAB)

_HEADER_RE = re.compile(r"^([A-Za-z][A-Za-z0-9_-]*):\s?(.*)$")
_KNOWN_HEADERS = ("Topic", "Title", "Query", "Pids")


def _as_lines(source: str | Iterable[str]) -> list[str]:
    if isinstance(source, str):
        return source.splitlines()
    return [line.rstrip("\n") for line in source]


@dataclass(frozen=True)
class Topic:
    """One systematic review: the title is the ranking query, the pmids are
    the candidate set retrieved by the (opaque) Boolean query."""

    topic_id: str
    title: str
    boolean_query: str
    pmids: tuple[str, ...]
    metadata: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "pmids", tuple(self.pmids))
        if not self.topic_id:
            raise DataError("topic_id must be non-empty")
        if not self.pmids:
            raise DataError(f"topic '{self.topic_id}' has no candidates")
        if len(set(self.pmids)) != len(self.pmids):
            dupes = sorted(p for p, c in Counter(self.pmids).items() if c > 1)
            raise DataError(f"topic '{self.topic_id}' lists duplicate pmids: {dupes}")


@dataclass(frozen=True)
class DocRecord:
    """A PubMed document at abstract level; the abstract may be empty."""

    pmid: str
    title: str
    abstract: str = ""

    def __post_init__(self):
        if not self.pmid:
            raise DataError("document pmid must be non-empty")
        if not self.title:
            raise DataError(f"document {self.pmid}: title must be non-empty")


@dataclass(frozen=True)
class DocRepresentation:
    mode: str
    text: str


class Qrels:
    """Abstract-level relevance grades keyed by (topic_id, pmid).

    Grades are non-negative integers; grade > 0 means relevant.
    """

    def __init__(self, grades: Mapping[tuple[str, str], int]):
        self._grades = dict(grades)
        self._by_topic: dict[str, dict[str, int]] = {}
        for (topic_id, pmid), grade in self._grades.items():
            if grade < 0:
                raise DataError(f"negative grade for topic {topic_id} pmid {pmid}")
            self._by_topic.setdefault(topic_id, {})[pmid] = grade

    def grade(self, topic_id: str, pmid: str) -> int | None:
        return self._grades.get((topic_id, pmid))

    def judged(self, topic_id: str) -> frozenset[str]:
        return frozenset(self._by_topic.get(topic_id, ()))

    def relevant(self, topic_id: str) -> frozenset[str]:
        return frozenset(
            p for p, g in self._by_topic.get(topic_id, {}).items() if g > 0
        )

    def topic_ids(self) -> list[str]:
        return sorted(self._by_topic)

    def items(self) -> Iterator[tuple[str, str, int]]:
        for (topic_id, pmid), grade in self._grades.items():
            yield topic_id, pmid, grade

    def __len__(self) -> int:
        return len(self._grades)

    def __contains__(self, key: tuple[str, str]) -> bool:
        return key in self._grades

    def __eq__(self, other) -> bool:
        return isinstance(other, Qrels) and self._grades == other._grades


class DocStore:
    """Immutable-after-load document store keyed by PMID."""

    def __init__(self, records: Iterable[DocRecord] = ()):
        self._docs: dict[str, DocRecord] = {}
        for rec in records:
            self.add(rec)

    def add(self, record: DocRecord) -> bool:
        """Insert a record; returns True when an existing pmid was replaced."""
        replaced = record.pmid in self._docs
        self._docs[record.pmid] = record
        return replaced

    def get(self, pmid: str) -> DocRecord | None:
        return self._docs.get(pmid)

    def pmids(self) -> list[str]:
        return sorted(self._docs)

    def records(self) -> Iterator[DocRecord]:
        for pmid in sorted(self._docs):
            yield self._docs[pmid]

    def __contains__(self, pmid: str) -> bool:
        return pmid in self._docs

    def __len__(self) -> int:
        return len(self._docs)


# ---------------------------------------------------------------------------
# Topics
# ---------------------------------------------------------------------------

def parse_topics(source: str | Iterable[str]) -> list[Topic]:
    """Parse keyword-block topic files.

    A block starts at a ``Topic:`` line and carries ``Title:``, a multi-line
    ``Query:`` section (preserved verbatim) and a ``Pids:`` section with one
    pmid per line.  Unknown ``Key: value`` lines inside a block are kept as
    opaque metadata so that slightly different dataset vintages still load.
    """
    lines = _as_lines(source)
    topics: list[Topic] = []
    seen: set[str] = set()
    block: dict | None = None

    def close(blk: dict) -> None:
        for key, header in (("title", "Title"), ("query", "Query"), ("pids", "Pids")):
            if blk[key] is None:
                raise ParseError(
                    f"topic block '{blk['topic_id']}' is missing a '{header}:' header",
                    line=blk["line"],
                )
        if not blk["pids"]:
            raise DataError(f"topic '{blk['topic_id']}' has no candidates")
        if blk["topic_id"] in seen:
            raise DataError(f"duplicate topic id '{blk['topic_id']}'")
        seen.add(blk["topic_id"])
        query = "\n".join(blk["query"]).strip("\n")
        topics.append(
            Topic(
                topic_id=blk["topic_id"],
                title=blk["title"],
                boolean_query=query,
                pmids=tuple(blk["pids"]),
                metadata=blk["metadata"],
            )
        )

    for lineno, line in enumerate(lines, 1):
        if line.startswith("Topic:"):
            if block is not None:
                close(block)
            topic_id = line[len("Topic:"):].strip()
            if not topic_id:
                raise ParseError("empty topic id", line=lineno)
            block = {
                "topic_id": topic_id,
                "line": lineno,
                "title": None,
                "query": None,
                "pids": None,
                "metadata": {},
                "section": "preamble",
            }
            continue
        if block is None:
            if line.strip():
                raise ParseError("content before the first 'Topic:' header", line=lineno)
            continue

        if block["section"] == "query":
            if line.startswith("Pids:"):
                block["section"] = "pids"
                block["pids"] = []
            else:
                block["query"].append(line)
            continue

        if block["section"] == "pids":
            token = line.strip()
            if not token:
                continue
            match = _HEADER_RE.match(token)
            if match:
                block["metadata"][match.group(1)] = match.group(2).strip()
            elif " " in token or "\t" in token:
                raise ParseError(f"malformed pid line {token!r}", line=lineno)
            else:
                block["pids"].append(token)
            continue

        # preamble (between Topic: and Query:)
        if not line.strip():
            continue
        if line.startswith("Title:"):
            block["title"] = line[len("Title:"):].strip()
        elif line.startswith("Query:"):
            block["section"] = "query"
            block["query"] = []
            rest = line[len("Query:"):].strip()
            if rest:
                block["query"].append(rest)
        elif line.startswith("Pids:"):
            block["section"] = "pids"
            block["pids"] = []
        else:
            match = _HEADER_RE.match(line)
            if match is None:
                raise ParseError(
                    f"expected a header keyword, got {line.strip()!r}", line=lineno
                )
            block["metadata"][match.group(1)] = match.group(2).strip()

    if block is not None:
        close(block)
    return topics


def write_topics(topics: Iterable[Topic]) -> str:
    """Serialize topics in the keyword-block format (inverse of parse_topics)."""
    chunks = []
    for topic in topics:
        lines = [f"Topic: {topic.topic_id}", "", f"Title: {topic.title}", ""]
        for key, value in topic.metadata.items():
            if key in _KNOWN_HEADERS or not _HEADER_RE.match(f"{key}: {value}"):
                raise DataError(f"metadata key {key!r} cannot be serialized")
            lines.append(f"{key}: {value}")
        if topic.metadata:
            lines.append("")
        lines.append("Query:")
        lines.append(topic.boolean_query)
        lines.append("")
        lines.append("Pids:")
        for pmid in topic.pmids:
            lines.append(f"    {pmid}")
        lines.append("")
        chunks.append("\n".join(lines))
    return "\n".join(chunks)


def read_topics(path) -> list[Topic]:
    with open(path, encoding="utf-8") as handle:
        return parse_topics(handle)


# ---------------------------------------------------------------------------
# Qrels
# ---------------------------------------------------------------------------

def parse_qrels(source: str | Iterable[str]) -> Qrels:
    """Parse 4-column qrels lines: ``topic_id iteration pmid grade``.

    The iteration column is ignored; grades must be non-negative integers.
    """
    grades: dict[tuple[str, str], int] = {}
    for lineno, line in enumerate(_as_lines(source), 1):
        parts = line.split()
        if not parts:
            continue
        if len(parts) != 4:
            raise ParseError(f"expected 4 columns, got {len(parts)}", line=lineno)
        topic_id, _iteration, pmid, grade_text = parts
        try:
            grade = int(grade_text)
        except ValueError:
            raise ParseError(
                f"non-integer relevance grade {grade_text!r}", line=lineno
            ) from None
        if grade < 0:
            raise ParseError(f"negative relevance grade {grade}", line=lineno)
        key = (topic_id, pmid)
        if key in grades:
            raise DataError(f"duplicate qrels entry for topic {topic_id} pmid {pmid}")
        grades[key] = grade
    return Qrels(grades)


def write_qrels(qrels: Qrels) -> str:
    """Serialize qrels with a zero iteration column, sorted for determinism."""
    lines = [
        f"{topic_id} 0 {pmid} {grade}"
        for topic_id, pmid, grade in sorted(qrels.items())
    ]
    return "\n".join(lines) + ("\n" if lines else "")


def read_qrels(path) -> Qrels:
    with open(path, encoding="utf-8") as handle:
        return parse_qrels(handle)


# ---------------------------------------------------------------------------
# Document store
# ---------------------------------------------------------------------------

def load_corpus(source: str | Iterable[str]) -> DocStore:
    """Load line-delimited JSON records with fields pmid/title/abstract.

    A missing abstract defaults to the empty string; a missing or empty
    title rejects the record (the line number is reported).  Duplicate
    pmids are last-write-wins with a warning.
    """
    store = DocStore()
    for lineno, line in enumerate(_as_lines(source), 1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid corpus record: {exc.msg}", line=lineno) from None
        if not isinstance(obj, dict):
            raise ParseError("corpus record is not an object", line=lineno)
        pmid = str(obj.get("pmid") or "").strip()
        title = str(obj.get("title") or "").strip()
        if not pmid:
            raise ParseError("corpus record is missing 'pmid'", line=lineno)
        if not title:
            raise ParseError(
                f"corpus record {pmid}: 'title' is missing or empty", line=lineno
            )
        abstract = str(obj.get("abstract") or "")
        if store.add(DocRecord(pmid=pmid, title=title, abstract=abstract)):
            log.warning("duplicate pmid %s at line %d: keeping the later record", pmid, lineno)
    return store


def write_corpus(records: Iterable[DocRecord]) -> str:
    lines = [
        json.dumps(
            {"pmid": rec.pmid, "title": rec.title, "abstract": rec.abstract},
            ensure_ascii=False,
            sort_keys=True,
        )
        for rec in records
    ]
    return "\n".join(lines) + ("\n" if lines else "")


def read_corpus(path) -> DocStore:
    with open(path, encoding="utf-8") as handle:
        return load_corpus(handle)


# ---------------------------------------------------------------------------
# Representations
# ---------------------------------------------------------------------------

def represent(doc: DocRecord, mode: str) -> DocRepresentation:
    """Build the textual representation used for ranking.

    Title mode is the title alone; TiAb is title, separator sentinel,
    abstract, in that order (degenerating to ``title + sentinel`` when the
    abstract is empty).
    """
    if mode == TITLE:
        return DocRepresentation(TITLE, doc.title)
    if mode == TIAB:
        return DocRepresentation(TIAB, f"{doc.title} {SEPARATOR} {doc.abstract}")
    raise ValueError(f"unknown representation mode {mode!r}; expected one of {REPRESENTATIONS}")


# ---------------------------------------------------------------------------
# Consistency reporting
# ---------------------------------------------------------------------------

@dataclass
class IngestReport:
    """Dataset-level consistency findings (informational, never fatal)."""

    docs_missing: dict[str, list[str]]
    qrels_outside_candidates: dict[str, list[str]]
    qrels_unknown_topics: list[str]
    topics_without_relevant: list[str]

    def is_clean(self) -> bool:
        return not (
            self.docs_missing
            or self.qrels_outside_candidates
            or self.qrels_unknown_topics
            or self.topics_without_relevant
        )

    def to_dict(self) -> dict:
        return {
            "docs_missing": self.docs_missing,
            "qrels_outside_candidates": self.qrels_outside_candidates,
            "qrels_unknown_topics": self.qrels_unknown_topics,
            "topics_without_relevant": self.topics_without_relevant,
            "clean": self.is_clean(),
        }


def ingest_report(topics: Iterable[Topic], qrels: Qrels, store: DocStore) -> IngestReport:
    """Cross-check topics, qrels, and the document store.

    Lists candidate pmids with no DocRecord, judgments outside a topic's
    candidate set (kept in qrels but never counted for R), qrels topics with
    no Topic, and topics with no relevant candidate.
    """
    topic_ids = set()
    docs_missing: dict[str, list[str]] = {}
    outside: dict[str, list[str]] = {}
    no_relevant: list[str] = []
    for topic in topics:
        topic_ids.add(topic.topic_id)
        candidates = set(topic.pmids)
        missing = sorted(p for p in topic.pmids if p not in store)
        if missing:
            docs_missing[topic.topic_id] = missing
        stray = sorted(qrels.judged(topic.topic_id) - candidates)
        if stray:
            outside[topic.topic_id] = stray
        if not (qrels.relevant(topic.topic_id) & candidates):
            no_relevant.append(topic.topic_id)
    unknown = sorted(set(qrels.topic_ids()) - topic_ids)
    return IngestReport(
        docs_missing=docs_missing,
        qrels_outside_candidates=outside,
        qrels_unknown_topics=unknown,
        topics_without_relevant=sorted(no_relevant),
    )
