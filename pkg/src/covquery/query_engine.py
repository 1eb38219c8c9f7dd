"""Simulated boolean search API: apply a solved query as an OR-filter.

A document is retrieved iff it contains at least one of the solution's
features, using the same containment rules as index construction, so the
simulator works on corpora other than the one the query was optimized on.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

from .corpus import LabeledCorpus
from .features import Feature, FeatureKind, JOIN_OVERHEAD, document_feature_values
from .solvers import QuerySolution

logger = logging.getLogger(__name__)

QUERY_CHAR_LIMIT = 500

_PREFIX = {
    FeatureKind.FROM: "from:",
    FeatureKind.LOCATION: "place:",
    FeatureKind.HASHTAG: "#",
    FeatureKind.MENTION: "@",
    FeatureKind.TERM: "",
}


@dataclass
class RetrievalResult:
    """The subset of a corpus matched by an OR-query."""

    retrieved_ids: set[str]
    retrieved_pos: int
    retrieved_neg: int
    query_chars: int

    def to_dict(self) -> dict:
        return {
            "retrieved": len(self.retrieved_ids),
            "retrieved_pos": self.retrieved_pos,
            "retrieved_neg": self.retrieved_neg,
            "query_chars": self.query_chars,
        }


def render_query(solution: QuerySolution) -> str:
    """The OR-joined query string; logs a warning past the API's 500-char limit."""
    parts = [_PREFIX[f.kind] + f.value for f in solution.features]
    query = " OR ".join(parts)
    if len(query) > QUERY_CHAR_LIMIT:
        logger.warning(
            "rendered query is %d chars, over the %d-char API limit",
            len(query),
            QUERY_CHAR_LIMIT,
        )
    return query


def query_chars(features: list[Feature]) -> int:
    """Rendered length implied by the char-cost accounting."""
    if not features:
        return 0
    return sum(f.char_cost for f in features) - JOIN_OVERHEAD


def retrieve(solution: QuerySolution, corpus: LabeledCorpus) -> RetrievalResult:
    """All documents containing at least one selected feature.

    Matching never reads labels; positives/negatives are tallied afterwards
    from the corpus partition.
    """
    wanted = {(f.kind, f.value) for f in solution.features}

    def matches(doc) -> bool:
        return bool(wanted) and not wanted.isdisjoint(document_feature_values(doc))

    pos_ids = {d.id for d in corpus.positives if matches(d)}
    neg_ids = {d.id for d in corpus.negatives if matches(d)}
    return RetrievalResult(
        retrieved_ids=pos_ids | neg_ids,
        retrieved_pos=len(pos_ids),
        retrieved_neg=len(neg_ids),
        query_chars=len(render_query(solution)),
    )
