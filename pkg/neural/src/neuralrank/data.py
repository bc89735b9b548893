"""Readers for the evaluator's file formats and the document representations.

This package talks to the evaluation toolkit only through its published
file formats (keyword-block topics, 4-column qrels, JSON-lines corpus,
6-column run files), so the small readers here are intentionally
self-contained.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable

# Sentinel joining title and abstract in TiAb text; mapped to the
# encoder's segment separator at tokenization time.
SEPARATOR = "[SEP]"

TITLE = "title"
TIAB = "tiab"
REPRESENTATIONS = (TITLE, TIAB)


@dataclass(frozen=True)
class Topic:
    topic_id: str
    title: str
    pmids: tuple[str, ...]


@dataclass(frozen=True)
class Doc:
    pmid: str
    title: str
    abstract: str = ""


def _lines(source: str | Iterable[str]) -> list[str]:
    if isinstance(source, str):
        return source.splitlines()
    return [line.rstrip("\n") for line in source]


def parse_topics(source: str | Iterable[str]) -> list[Topic]:
    """Keyword-block topics; only the fields the scorer needs are kept
    (id, title query, candidate pids) and the Boolean query is skipped."""
    topics: list[Topic] = []
    topic_id = None
    title = ""
    pmids: list[str] = []
    section = None
    for line in _lines(source):
        if line.startswith("Topic:"):
            if topic_id is not None:
                topics.append(Topic(topic_id, title, tuple(pmids)))
            topic_id = line[len("Topic:"):].strip()
            title, pmids, section = "", [], None
        elif line.startswith("Title:") and section != "query":
            title = line[len("Title:"):].strip()
        elif line.startswith("Query:"):
            section = "query"
        elif line.startswith("Pids:"):
            section = "pids"
        elif section == "pids":
            token = line.strip()
            if token and ":" not in token:
                pmids.append(token)
    if topic_id is not None:
        topics.append(Topic(topic_id, title, tuple(pmids)))
    return topics


def parse_qrels(source: str | Iterable[str]) -> dict[tuple[str, str], int]:
    grades: dict[tuple[str, str], int] = {}
    for line in _lines(source):
        parts = line.split()
        if not parts:
            continue
        if len(parts) != 4:
            raise ValueError(f"qrels line must have 4 columns: {line!r}")
        topic_id, _iteration, pmid, grade = parts
        grades[(topic_id, pmid)] = int(grade)
    return grades


def parse_corpus(source: str | Iterable[str]) -> dict[str, Doc]:
    docs: dict[str, Doc] = {}
    for line in _lines(source):
        if not line.strip():
            continue
        obj = json.loads(line)
        pmid = str(obj["pmid"])
        docs[pmid] = Doc(pmid, str(obj.get("title") or ""), str(obj.get("abstract") or ""))
    return docs


def read_topics(path) -> list[Topic]:
    with open(path, encoding="utf-8") as handle:
        return parse_topics(handle)


def read_qrels(path) -> dict[tuple[str, str], int]:
    with open(path, encoding="utf-8") as handle:
        return parse_qrels(handle)


def read_corpus(path) -> dict[str, Doc]:
    with open(path, encoding="utf-8") as handle:
        return parse_corpus(handle)


def represent(doc: Doc, mode: str) -> str:
    """Title is the title alone; TiAb is title, separator, abstract."""
    if mode == TITLE:
        return doc.title
    if mode == TIAB:
        return f"{doc.title} {SEPARATOR} {doc.abstract}"
    raise ValueError(f"unknown representation mode {mode!r}")


def relevant_pmids(grades: dict[tuple[str, str], int], topic_id: str) -> set[str]:
    return {p for (t, p), g in grades.items() if t == topic_id and g > 0}


def judged_nonrelevant_pmids(grades: dict[tuple[str, str], int], topic_id: str) -> set[str]:
    return {p for (t, p), g in grades.items() if t == topic_id and g == 0}
