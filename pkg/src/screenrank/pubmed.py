"""Batched document fetching from the public E-utilities literature service.

Fetching is an explicit step that materialises a local corpus file; nothing
in the evaluator fetches implicitly.  Responses are parsed from the
service's XML document format: the article title plus all abstract sections
concatenated with a single space.
"""

from __future__ import annotations

import logging
import time
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import requests

from .corpus import DocRecord
from .errors import ParseError, ScreenRankError

log = logging.getLogger(__name__)

DEFAULT_ENDPOINT = "https://eutils.ncbi.nlm.nih.gov/entrez/eutils/efetch.fcgi"
DEFAULT_BATCH_SIZE = 200


class FetchError(ScreenRankError):
    """Transport failure that survived retries; lists the unfetched pmids."""

    def __init__(self, message: str, unfetched: Sequence[str] = ()):
        super().__init__(message)
        self.unfetched = list(unfetched)


@dataclass
class FetchResult:
    records: list[DocRecord]
    missing: list[str] = field(default_factory=list)   # not returned by the service
    skipped: list[str] = field(default_factory=list)   # returned without a usable title


def parse_efetch_xml(text: str) -> list[tuple[str, str, str]]:
    """Extract (pmid, title, abstract) triples from an efetch XML payload."""
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        raise ParseError(f"invalid fetch response XML: {exc}") from None
    articles = []
    for article in root.iter("PubmedArticle"):
        citation = article.find("MedlineCitation")
        if citation is None:
            continue
        pmid = (citation.findtext("PMID") or "").strip()
        node = citation.find("Article")
        title = ""
        abstract = ""
        if node is not None:
            title_node = node.find("ArticleTitle")
            if title_node is not None:
                title = " ".join("".join(title_node.itertext()).split())
            sections = [
                " ".join("".join(sec.itertext()).split())
                for sec in node.findall("Abstract/AbstractText")
            ]
            abstract = " ".join(s for s in sections if s)
        if pmid:
            articles.append((pmid, title, abstract))
    return articles


class PubMedFetcher:
    """E-utilities efetch client with batching and bounded exponential backoff.

    A custom session (anything with a requests-compatible ``get``) can be
    injected for testing or throttling.
    """

    def __init__(
        self,
        endpoint: str = DEFAULT_ENDPOINT,
        api_key: str | None = None,
        batch_size: int = DEFAULT_BATCH_SIZE,
        max_retries: int = 3,
        backoff: float = 1.0,
        timeout: float = 30.0,
        session=None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        if batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        self.endpoint = endpoint
        self.api_key = api_key
        self.batch_size = batch_size
        self.max_retries = max_retries
        self.backoff = backoff
        self.timeout = timeout
        self.session = session if session is not None else requests.Session()
        self._sleep = sleep

    def fetch(self, pmids: Iterable[str]) -> FetchResult:
        """Fetch DocRecords for the given pmids.

        Pmids absent from the service are reported in ``missing``, never
        fabricated; no request is issued for an empty input.
        """
        ordered = list(dict.fromkeys(str(p).strip() for p in pmids if str(p).strip()))
        result = FetchResult(records=[])
        if not ordered:
            return result
        batches = [
            ordered[i : i + self.batch_size]
            for i in range(0, len(ordered), self.batch_size)
        ]
        for index, batch in enumerate(batches):
            try:
                payload = self._get_batch(batch)
            except FetchError as exc:
                remaining = [p for later in batches[index:] for p in later]
                raise FetchError(str(exc), unfetched=remaining) from None
            found = {pmid: (title, abstract) for pmid, title, abstract in parse_efetch_xml(payload)}
            for pmid in batch:
                hit = found.get(pmid)
                if hit is None:
                    result.missing.append(pmid)
                elif not hit[0]:
                    log.warning("pmid %s returned without a title; skipping", pmid)
                    result.skipped.append(pmid)
                else:
                    result.records.append(DocRecord(pmid=pmid, title=hit[0], abstract=hit[1]))
        return result

    def _get_batch(self, batch: Sequence[str]) -> str:
        params = {"db": "pubmed", "retmode": "xml", "id": ",".join(batch)}
        if self.api_key:
            params["api_key"] = self.api_key
        delay = self.backoff
        last_error: Exception | None = None
        for attempt in range(self.max_retries + 1):
            try:
                response = self.session.get(self.endpoint, params=params, timeout=self.timeout)
                response.raise_for_status()
                return response.text
            except requests.RequestException as exc:
                last_error = exc
                if attempt == self.max_retries:
                    break
                log.warning("fetch attempt %d failed (%s); retrying in %.1fs", attempt + 1, exc, delay)
                self._sleep(delay)
                delay *= 2
        raise FetchError(
            f"fetch failed after {self.max_retries + 1} attempts: {last_error}",
            unfetched=batch,
        )
