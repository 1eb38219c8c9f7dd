"""Objective functions over feature subsets: CILP, WILP, and CAILP.

CILP maximizes the raw count of covered positives.  WILP adds a
lambda-weighted sum of the selected features' normalized mutual information
with the label to the normalized coverage.  CAILP trades normalized positive
coverage against normalized negative coverage, weighted by lambda.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .features import CoverageIndex, coverage


class ObjectiveKind(str, Enum):
    CILP = "cilp"
    WILP = "wilp"
    CAILP = "cailp"


@dataclass(frozen=True)
class ObjectiveSpec:
    """Which objective to optimize, with its budget parameters."""

    kind: ObjectiveKind
    k: int
    lam: float = 0.0
    char_budget: int | None = None

    def __post_init__(self):
        if self.k < 0:
            raise ValueError("k must be >= 0")
        if self.lam is not None and self.lam < 0:
            raise ValueError("lambda must be >= 0")


def _entropy(counts: np.ndarray) -> np.ndarray:
    """Entropy (nats) of distributions given as count rows; 0*log(0) treated as 0."""
    counts = np.asarray(counts, dtype=np.float64)
    totals = counts.sum(axis=-1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        p = np.where(totals > 0, counts / totals, 0.0)
        terms = np.where(p > 0, -p * np.log(p), 0.0)
    return terms.sum(axis=-1)


def nmis_from_counts(tp, fp, fn, tn) -> np.ndarray | float:
    """NMIS of feature presence vs. label from 2x2 contingency counts.

    Mutual information normalized by the smaller marginal entropy, which
    guarantees values in [0, 1]; degenerate (zero-entropy) marginals score 0.
    Accepts scalars or aligned arrays.
    """
    tp, fp, fn, tn = np.broadcast_arrays(
        np.asarray(tp, dtype=np.float64),
        np.asarray(fp, dtype=np.float64),
        np.asarray(fn, dtype=np.float64),
        np.asarray(tn, dtype=np.float64),
    )
    joint = np.stack([tp, fp, fn, tn], axis=-1)
    h_joint = _entropy(joint)
    h_x = _entropy(np.stack([tp + fp, fn + tn], axis=-1))  # feature presence
    h_y = _entropy(np.stack([tp + fn, fp + tn], axis=-1))  # label
    mi = h_x + h_y - h_joint
    h_min = np.minimum(h_x, h_y)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(h_min > 0, mi / np.where(h_min > 0, h_min, 1.0), 0.0)
    out = np.clip(out, 0.0, 1.0)
    return float(out) if out.ndim == 0 else out


def nmis(index: CoverageIndex, j: int) -> float:
    """NMIS of feature ``j``'s presence against the topic label."""
    if index.n_pos < 1 or index.n_neg < 1:
        raise ValueError("NMIS requires at least one positive and one negative")
    tp = int(index.pos_counts[j])
    fp = int(index.neg_counts[j])
    return float(nmis_from_counts(tp, fp, index.n_pos - tp, index.n_neg - fp))


def build_nmis_table(index: CoverageIndex) -> np.ndarray:
    """Per-feature NMIS scores for the whole index."""
    if index.n_pos < 1 or index.n_neg < 1:
        raise ValueError("NMIS requires at least one positive and one negative")
    tp = index.pos_counts
    fp = index.neg_counts
    return np.asarray(
        nmis_from_counts(tp, fp, index.n_pos - tp, index.n_neg - fp), dtype=np.float64
    )


def evaluate(
    spec: ObjectiveSpec,
    index: CoverageIndex,
    nmis_table: np.ndarray | None,
    selected,
) -> float:
    """Objective value of a feature subset (cardinality feasibility not checked)."""
    selected = list(selected)
    pos_cov, neg_cov = coverage(index, selected)
    if spec.kind is ObjectiveKind.CILP:
        return float(pos_cov)
    if spec.kind is ObjectiveKind.WILP:
        if nmis_table is None:
            raise ValueError("WILP requires an NMIS table")
        weight = float(np.sum(nmis_table[selected])) if selected else 0.0
        return pos_cov / index.n_pos + spec.lam * weight
    if spec.kind is ObjectiveKind.CAILP:
        return pos_cov / index.n_pos - spec.lam * (neg_cov / index.n_neg)
    raise ValueError(f"unknown objective kind {spec.kind!r}")
