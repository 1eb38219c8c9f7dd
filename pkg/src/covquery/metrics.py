"""Retrieval and ranking metrics, with t-based confidence intervals over folds."""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy import stats

from .corpus import LabeledCorpus
from .query_engine import RetrievalResult


@dataclass
class MeanCI:
    mean: float
    halfwidth: float | None  # None when fewer than 2 fold values

    def to_dict(self) -> dict:
        return {"mean": self.mean, "ci95": self.halfwidth}


def stage1_metrics(
    result: RetrievalResult, corpus: LabeledCorpus
) -> tuple[float, float, int]:
    """(recall, precision, retrieved_count) of a retrieval against its corpus.

    Precision is 0 by convention when nothing was retrieved.
    """
    retrieved = result.retrieved_pos + result.retrieved_neg
    recall = result.retrieved_pos / corpus.n_pos if corpus.n_pos else 0.0
    precision = result.retrieved_pos / retrieved if retrieved else 0.0
    return recall, precision, retrieved


def average_precision(ranking: list[str], relevant: set[str]) -> float:
    """Mean of precision at the rank of each retrieved relevant item.

    The denominator is the total number of relevant documents, so relevant
    items missing from the ranking (e.g. lost at the retrieval stage) pull
    the score down.
    """
    if not relevant:
        raise ValueError("average precision is undefined for an empty relevant set")
    hits = 0
    total = 0.0
    for r, doc_id in enumerate(ranking, start=1):
        if doc_id in relevant:
            hits += 1
            total += hits / r
    return total / len(relevant)


def precision_at_k(ranking: list[str], relevant: set[str], k: int) -> float:
    """Relevant fraction of the top k; the denominator stays k for short rankings."""
    if k < 1:
        raise ValueError("k must be >= 1")
    hits = sum(1 for doc_id in ranking[:k] if doc_id in relevant)
    return hits / k


def confidence_interval(values: list[float]) -> MeanCI:
    """Mean and 95% Student-t halfwidth across fold values."""
    n = len(values)
    if n == 0:
        raise ValueError("no values")
    mean = sum(values) / n
    if n < 2:
        return MeanCI(mean=mean, halfwidth=None)
    var = sum((v - mean) ** 2 for v in values) / (n - 1)
    t = float(stats.t.ppf(0.975, n - 1))
    return MeanCI(mean=mean, halfwidth=t * math.sqrt(var / n))
