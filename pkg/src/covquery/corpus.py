"""Corpus ingestion, preprocessing, and hashtag-based topic labeling.

A corpus is a JSON-lines file, one object per line:

    {"id": "...", "text": "...", "user": "...", "location": "...", "lang": "en",
     "hashtags": [...], "mentions": [...]}

``id`` and ``text`` are required; the rest are optional.  If ``hashtags`` or
``mentions`` arrays are present they override extraction from the text.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError, DataError

logger = logging.getLogger(__name__)

# A token is an optional "#"/"@" sigil followed by word characters, allowing
# in-word apostrophes ("don't").  Everything else splits.
_TOKEN_RE = re.compile(r"[#@]?\w+(?:'\w+)*")


@dataclass(frozen=True)
class Document:
    """One record with its typed feature occurrences."""

    id: str
    text: str
    author: str = ""
    location: str = ""
    hashtags: tuple[str, ...] = ()
    mentions: tuple[str, ...] = ()
    terms: tuple[str, ...] = ()
    lang: str | None = None


@dataclass
class LabeledCorpus:
    """Documents partitioned into positives P and negatives N for one topic."""

    topic: str
    labeling_hashtags: frozenset[str]
    positives: list[Document] = field(default_factory=list)
    negatives: list[Document] = field(default_factory=list)

    @property
    def n_pos(self) -> int:
        return len(self.positives)

    @property
    def n_neg(self) -> int:
        return len(self.negatives)

    def all_documents(self) -> list[Document]:
        return self.positives + self.negatives


def tokenize(text: str) -> tuple[list[str], list[str], list[str]]:
    """Split lowercased text into (hashtags, mentions, terms), sigils stripped."""
    hashtags: list[str] = []
    mentions: list[str] = []
    terms: list[str] = []
    for tok in _TOKEN_RE.findall(text.lower()):
        if tok.startswith("#"):
            if len(tok) > 1:
                hashtags.append(tok[1:])
        elif tok.startswith("@"):
            if len(tok) > 1:
                mentions.append(tok[1:])
        else:
            terms.append(tok)
    return hashtags, mentions, terms


def _clean_tags(values, sigil: str) -> tuple[str, ...]:
    return tuple(str(v).lower().lstrip(sigil) for v in values)


def document_from_record(rec: dict, line_no: int | None = None) -> Document:
    """Build a Document from one parsed JSONL object."""
    where = f" (line {line_no})" if line_no is not None else ""
    if not isinstance(rec, dict):
        raise DataError(f"record is not an object{where}")
    doc_id = rec.get("id")
    text = rec.get("text")
    if not isinstance(doc_id, str) or not doc_id:
        raise DataError(f"missing or invalid 'id'{where}")
    if not isinstance(text, str):
        raise DataError(f"missing or invalid 'text'{where}")

    hashtags, mentions, terms = tokenize(text)
    if "hashtags" in rec:
        hashtags = _clean_tags(rec["hashtags"], "#")
    if "mentions" in rec:
        mentions = _clean_tags(rec["mentions"], "@")

    return Document(
        id=doc_id,
        text=text,
        author=str(rec.get("user", "")).lower(),
        location=str(rec.get("location", "")).lower(),
        hashtags=tuple(hashtags),
        mentions=tuple(mentions),
        terms=tuple(terms),
        lang=rec.get("lang"),
    )


def ingest(path: str | Path) -> list[Document]:
    """Read a JSONL corpus file; malformed records are logged and skipped."""
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise DataError(f"cannot read corpus file {path}: {exc}") from exc

    docs: list[Document] = []
    n_bad = 0
    for line_no, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
            docs.append(document_from_record(rec, line_no))
        except (json.JSONDecodeError, DataError) as exc:
            n_bad += 1
            logger.warning("skipping malformed record at line %d: %s", line_no, exc)
    if n_bad:
        logger.warning("%s: skipped %d malformed record(s)", path, n_bad)
    return docs


def _normalized_text(doc: Document) -> str:
    return " ".join(doc.text.lower().split())


def preprocess(docs: list[Document], lang: str | None = "en") -> list[Document]:
    """Drop foreign-language, duplicate, and hashtag-less documents.

    Keeps records whose lang tag matches ``lang`` (records without a tag are
    kept; pass ``lang=None`` to skip the check entirely).  Duplicates are
    exact matches of lowercased whitespace-collapsed text; the first
    occurrence survives.  Input order is preserved.
    """
    seen: set[str] = set()
    out: list[Document] = []
    for doc in docs:
        if lang is not None and doc.lang is not None and doc.lang != lang:
            continue
        if not doc.hashtags:
            continue
        key = _normalized_text(doc)
        if key in seen:
            continue
        seen.add(key)
        out.append(doc)
    return out


def label(
    docs: list[Document], labeling_hashtags: set[str] | frozenset[str], topic: str
) -> LabeledCorpus:
    """Partition preprocessed documents into P/N by labeling-hashtag membership."""
    if not labeling_hashtags:
        raise ConfigError("labeling hashtag set is empty")
    tags = frozenset(t.lower().lstrip("#") for t in labeling_hashtags)

    seen_ids: set[str] = set()
    corpus = LabeledCorpus(topic=topic, labeling_hashtags=tags)
    for doc in docs:
        if doc.id in seen_ids:
            raise DataError(f"duplicate document id {doc.id!r}")
        seen_ids.add(doc.id)
        if tags.intersection(doc.hashtags):
            corpus.positives.append(doc)
        else:
            corpus.negatives.append(doc)
    return corpus


def load_labeling_hashtags(path: str | Path) -> set[str]:
    """Read a labeling-hashtag file: one lowercase hashtag per line, "#" tolerated."""
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise DataError(f"cannot read hashtag file {path}: {exc}") from exc
    tags = {line.strip().lstrip("#").lower() for line in lines if line.strip()}
    if not tags:
        raise DataError(f"no labeling hashtags found in {path}")
    return tags


def subset_corpus(corpus: LabeledCorpus, ids: set[str]) -> LabeledCorpus:
    """Restrict a labeled corpus to the given document ids, preserving order."""
    return LabeledCorpus(
        topic=corpus.topic,
        labeling_hashtags=corpus.labeling_hashtags,
        positives=[d for d in corpus.positives if d.id in ids],
        negatives=[d for d in corpus.negatives if d.id in ids],
    )
