"""Second-stage ranker: L2-regularized logistic regression on binary features.

Documents are encoded as sparse binary bags over all five feature kinds.
Training is deterministic full-batch gradient descent with Armijo
backtracking; the trained model scores documents with a relevance
probability used for ranking.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from scipy.special import expit

from .corpus import Document, LabeledCorpus
from .errors import DataError
from .features import CoverageIndex, FeatureKind, document_feature_values

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    l2: float = 1e-4
    max_epochs: int = 500
    grad_tol: float = 1e-6
    step0: float = 4.0
    pos_weight: float = 1.0
    vocab_min_freq: int = 1
    exclude_labeling: bool = True
    seed: int = 0

    def to_dict(self) -> dict:
        return {
            "l2": self.l2,
            "max_epochs": self.max_epochs,
            "grad_tol": self.grad_tol,
            "step0": self.step0,
            "pos_weight": self.pos_weight,
            "vocab_min_freq": self.vocab_min_freq,
            "exclude_labeling": self.exclude_labeling,
            "seed": self.seed,
        }


@dataclass
class RankerModel:
    """Sparse weight vector over the training vocabulary plus a bias."""

    vocab: dict[tuple[FeatureKind, str], int]
    weights: np.ndarray
    bias: float
    config: TrainConfig = field(default_factory=TrainConfig)


def build_vocab(
    docs: list[Document],
    min_freq: int = 1,
    exclude_hashtags: frozenset[str] = frozenset(),
) -> dict[tuple[FeatureKind, str], int]:
    from collections import Counter

    counts: Counter = Counter()
    for doc in docs:
        counts.update(document_feature_values(doc))
    for tag in exclude_hashtags:
        counts.pop((FeatureKind.HASHTAG, tag), None)
    kept = sorted(
        (kv for kv, c in counts.items() if c >= min_freq),
        key=lambda kv: (kv[0].value, kv[1]),
    )
    return {kv: i for i, kv in enumerate(kept)}


def design_matrix(
    docs: list[Document], vocab: dict[tuple[FeatureKind, str], int]
) -> sp.csr_matrix:
    """Binary presence matrix, one row per document."""
    rows: list[int] = []
    cols: list[int] = []
    for i, doc in enumerate(docs):
        for kv in document_feature_values(doc):
            j = vocab.get(kv)
            if j is not None:
                rows.append(i)
                cols.append(j)
    data = np.ones(len(rows), dtype=np.float64)
    return sp.csr_matrix(
        (data, (rows, cols)), shape=(len(docs), len(vocab)), dtype=np.float64
    )


def loss_and_grad(
    X: sp.csr_matrix,
    y: np.ndarray,
    w: np.ndarray,
    b: float,
    l2: float,
    pos_weight: float = 1.0,
) -> tuple[float, np.ndarray, float]:
    """Mean weighted log-loss plus (l2/2)*||w||^2; bias is not regularized.

    Returns (loss, grad_w, grad_b).
    """
    n = X.shape[0]
    z = X @ w + b
    sw = np.where(y == 1.0, pos_weight, 1.0)
    # log(1 + e^z) - y*z, numerically stable
    loss = float(np.dot(sw, np.logaddexp(0.0, z) - y * z) / n)
    loss += 0.5 * l2 * float(np.dot(w, w))
    resid = sw * (expit(z) - y)
    grad_w = (X.T @ resid) / n + l2 * w
    grad_b = float(resid.sum() / n)
    return loss, np.asarray(grad_w), grad_b


def train(corpus: LabeledCorpus, config: TrainConfig = TrainConfig()) -> RankerModel:
    """Fit the ranker on a labeled corpus with deterministic gradient descent."""
    if corpus.n_pos < 1 or corpus.n_neg < 1:
        raise DataError("ranker training needs at least one positive and one negative")

    docs = corpus.all_documents()
    exclude = corpus.labeling_hashtags if config.exclude_labeling else frozenset()
    vocab = build_vocab(docs, config.vocab_min_freq, exclude)
    X = design_matrix(docs, vocab)
    y = np.zeros(len(docs))
    y[: corpus.n_pos] = 1.0

    w = np.zeros(len(vocab))
    b = 0.0
    step = config.step0
    loss, gw, gb = loss_and_grad(X, y, w, b, config.l2, config.pos_weight)
    for epoch in range(config.max_epochs):
        gnorm2 = float(np.dot(gw, gw)) + gb * gb
        if gnorm2 < config.grad_tol**2:
            break
        # Armijo backtracking from the last accepted step size.
        step = min(step * 2.0, 1e6)
        while True:
            w_new = w - step * gw
            b_new = b - step * gb
            loss_new, gw_new, gb_new = loss_and_grad(
                X, y, w_new, b_new, config.l2, config.pos_weight
            )
            if loss_new <= loss - 0.5 * step * gnorm2 or step < 1e-12:
                break
            step *= 0.5
        w, b, loss, gw, gb = w_new, b_new, loss_new, gw_new, gb_new
        if not np.isfinite(loss) or not np.all(np.isfinite(w)):
            raise DataError(f"ranker training diverged at epoch {epoch}")

    return RankerModel(vocab=vocab, weights=w, bias=b, config=config)


def score(model: RankerModel, doc: Document) -> float:
    """Relevance probability of one document; unseen features contribute 0."""
    z = model.bias
    for kv in document_feature_values(doc):
        j = model.vocab.get(kv)
        if j is not None:
            z += model.weights[j]
    return float(expit(z))


def score_many(model: RankerModel, docs: list[Document]) -> np.ndarray:
    X = design_matrix(docs, model.vocab)
    z = X @ model.weights + model.bias
    return expit(z)


def rank(model: RankerModel, docs: list[Document]) -> list[tuple[str, float]]:
    """Documents ordered by descending score, ties broken by ascending id."""
    if not docs:
        return []
    scores = score_many(model, docs)
    pairs = [(doc.id, float(s)) for doc, s in zip(docs, scores)]
    pairs.sort(key=lambda p: (-p[1], p[0]))
    return pairs


def export_weights(model: RankerModel, index: CoverageIndex) -> np.ndarray:
    """Model weight for every index feature (0 when outside the vocabulary)."""
    out = np.zeros(index.n_features)
    for j, feat in enumerate(index.features):
        col = model.vocab.get((feat.kind, feat.value))
        if col is not None:
            out[j] = model.weights[col]
    return out


def save_model(model: RankerModel, path: str | Path) -> None:
    payload = {
        "vocab": [[k.value, v] for (k, v), _ in sorted(model.vocab.items(), key=lambda it: it[1])],
        "weights": model.weights.tolist(),
        "bias": model.bias,
        "config": model.config.to_dict(),
    }
    Path(path).write_text(json.dumps(payload), encoding="utf-8")


def load_model(path: str | Path) -> RankerModel:
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read model file {path}: {exc}") from exc
    vocab = {
        (FeatureKind(k), v): i for i, (k, v) in enumerate(payload["vocab"])
    }
    return RankerModel(
        vocab=vocab,
        weights=np.array(payload["weights"], dtype=np.float64),
        bias=float(payload["bias"]),
        config=TrainConfig(**payload["config"]),
    )
