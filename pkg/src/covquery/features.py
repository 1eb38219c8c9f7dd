"""Typed candidate query features and their bitset coverage over P and N.

Five feature kinds mirror what a search API can match on: sender, profile
location, hashtags, mentions, and plain terms.  The coverage index stores,
per feature, a dense bitset over the positive documents and one over the
negative documents.
"""

from __future__ import annotations

import base64
import json
import logging
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from . import bitsets
from .corpus import Document, LabeledCorpus
from .errors import DataError

logger = logging.getLogger(__name__)

INDEX_MAGIC = "covquery-index"
INDEX_VERSION = 1


class FeatureKind(str, Enum):
    FROM = "from"
    LOCATION = "location"
    HASHTAG = "hashtag"
    MENTION = "mention"
    TERM = "term"


# Query-string overhead: operator prefix ("from:", "#", "@", "place:", none)
# plus 4 chars per feature for " OR " joining.
_OPERATOR_OVERHEAD = {
    FeatureKind.FROM: 5,
    FeatureKind.LOCATION: 6,
    FeatureKind.HASHTAG: 1,
    FeatureKind.MENTION: 1,
    FeatureKind.TERM: 0,
}
JOIN_OVERHEAD = 4


def char_cost(kind: FeatureKind, value: str) -> int:
    return len(value) + _OPERATOR_OVERHEAD[kind] + JOIN_OVERHEAD


@dataclass(frozen=True)
class Feature:
    """A (kind, value) pair plus the characters it consumes in a query."""

    kind: FeatureKind
    value: str
    char_cost: int

    @classmethod
    def make(cls, kind: FeatureKind, value: str) -> "Feature":
        return cls(kind=kind, value=value, char_cost=char_cost(kind, value))


def document_feature_values(doc: Document) -> set[tuple[FeatureKind, str]]:
    """The distinct (kind, value) pairs a document contains.

    This is the single containment rule shared by index construction and by
    boolean retrieval, so optimization-time coverage and retrieval-time
    matching agree exactly.
    """
    out: set[tuple[FeatureKind, str]] = set()
    if doc.author:
        out.add((FeatureKind.FROM, doc.author))
    if doc.location:
        out.add((FeatureKind.LOCATION, doc.location))
    out.update((FeatureKind.HASHTAG, v) for v in doc.hashtags)
    out.update((FeatureKind.MENTION, v) for v in doc.mentions)
    out.update((FeatureKind.TERM, v) for v in doc.terms)
    return out


@dataclass
class CoverageIndex:
    """Per-feature bitsets over the positives and negatives of one corpus.

    ``pos_words[j]`` has bit ``i`` set iff positive document ``i`` contains
    feature ``j``; likewise ``neg_words`` over the negatives.  Row popcounts
    are cached (``pos_counts``/``neg_counts``).
    """

    features: list[Feature]
    pos_words: np.ndarray  # uint64, shape (|F|, words(|P|))
    neg_words: np.ndarray  # uint64, shape (|F|, words(|N|))
    n_pos: int
    n_neg: int
    pos_counts: np.ndarray  # int64, per-feature popcount of pos_words
    neg_counts: np.ndarray

    @property
    def n_features(self) -> int:
        return len(self.features)

    @classmethod
    def from_membership(
        cls, features: list[Feature], pos_member: np.ndarray, neg_member: np.ndarray
    ) -> "CoverageIndex":
        """Build from boolean membership matrices of shape (|F|, |P|) / (|F|, |N|)."""
        pos_member = np.asarray(pos_member, dtype=bool)
        neg_member = np.asarray(neg_member, dtype=bool)
        pos_words = bitsets.pack_bool(pos_member)
        neg_words = bitsets.pack_bool(neg_member)
        return cls(
            features=features,
            pos_words=pos_words,
            neg_words=neg_words,
            n_pos=pos_member.shape[1],
            n_neg=neg_member.shape[1],
            pos_counts=bitsets.popcount_rows(pos_words),
            neg_counts=bitsets.popcount_rows(neg_words),
        )

    @classmethod
    def from_words(
        cls,
        features: list[Feature],
        pos_words: np.ndarray,
        neg_words: np.ndarray,
        n_pos: int,
        n_neg: int,
    ) -> "CoverageIndex":
        return cls(
            features=features,
            pos_words=pos_words,
            neg_words=neg_words,
            n_pos=n_pos,
            n_neg=n_neg,
            pos_counts=bitsets.popcount_rows(pos_words),
            neg_counts=bitsets.popcount_rows(neg_words),
        )


def extract_features(
    corpus: LabeledCorpus, min_freq: int, exclude_labeling: bool = True
) -> CoverageIndex:
    """Collect all features occurring in >= ``min_freq`` documents and their bitsets.

    Labeling hashtags are excluded by default: including them would leak the
    label straight into the query.  Features are ordered by descending total
    document frequency, ties broken by (kind, value).
    """
    if min_freq < 1:
        raise ValueError("min_freq must be >= 1")

    docs = corpus.all_documents()
    doc_feats = [document_feature_values(d) for d in docs]
    counts: Counter = Counter()
    for feats in doc_feats:
        counts.update(feats)

    if exclude_labeling:
        for tag in corpus.labeling_hashtags:
            counts.pop((FeatureKind.HASHTAG, tag), None)

    kept = [(kv, c) for kv, c in counts.items() if c >= min_freq]
    if not kept:
        raise DataError(
            f"no feature reaches min_freq={min_freq} "
            f"({len(counts)} distinct features seen); lower the threshold"
        )
    kept.sort(key=lambda item: (-item[1], item[0][0].value, item[0][1]))

    features = [Feature.make(kind, value) for (kind, value), _ in kept]
    col_of = {kv: j for j, (kv, _) in enumerate(kept)}

    n_pos, n_neg = corpus.n_pos, corpus.n_neg
    pos_member = np.zeros((len(features), n_pos), dtype=bool)
    neg_member = np.zeros((len(features), n_neg), dtype=bool)
    for i, feats in enumerate(doc_feats):
        is_pos = i < n_pos
        row = i if is_pos else i - n_pos
        member = pos_member if is_pos else neg_member
        for kv in feats:
            j = col_of.get(kv)
            if j is not None:
                member[j, row] = True

    return CoverageIndex.from_membership(features, pos_member, neg_member)


def coverage(index: CoverageIndex, selected) -> tuple[int, int]:
    """(positives covered, negatives covered) by the OR of the selected features."""
    rows = np.asarray(sorted(selected), dtype=np.intp)
    pos_union = bitsets.union_words(index.pos_words, rows)
    neg_union = bitsets.union_words(index.neg_words, rows)
    return bitsets.popcount(pos_union), bitsets.popcount(neg_union)


def _b64(arr: np.ndarray) -> str:
    return base64.b64encode(np.ascontiguousarray(arr).tobytes()).decode("ascii")


def _unb64(s: str, shape: tuple[int, int]) -> np.ndarray:
    return np.frombuffer(base64.b64decode(s), dtype="<u8").reshape(shape).copy()


def dump_index(index: CoverageIndex, path: str | Path) -> None:
    """Write the index to a JSON sidecar (bit-exact round trip)."""
    payload = {
        "magic": INDEX_MAGIC,
        "version": INDEX_VERSION,
        "n_pos": index.n_pos,
        "n_neg": index.n_neg,
        "features": [[f.kind.value, f.value] for f in index.features],
        "pos_shape": list(index.pos_words.shape),
        "neg_shape": list(index.neg_words.shape),
        "pos_words": _b64(index.pos_words.astype("<u8")),
        "neg_words": _b64(index.neg_words.astype("<u8")),
    }
    Path(path).write_text(json.dumps(payload), encoding="utf-8")


def load_index(path: str | Path) -> CoverageIndex:
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read index file {path}: {exc}") from exc
    if payload.get("magic") != INDEX_MAGIC or payload.get("version") != INDEX_VERSION:
        raise DataError(f"{path} is not a covquery index (bad magic/version)")
    features = [Feature.make(FeatureKind(k), v) for k, v in payload["features"]]
    pos_words = _unb64(payload["pos_words"], tuple(payload["pos_shape"]))
    neg_words = _unb64(payload["neg_words"], tuple(payload["neg_shape"]))
    return CoverageIndex.from_words(
        features, pos_words, neg_words, payload["n_pos"], payload["n_neg"]
    )
