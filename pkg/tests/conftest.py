import numpy as np
import pytest

from covquery.corpus import Document, LabeledCorpus, label
from covquery.features import CoverageIndex, Feature, FeatureKind


def make_doc(doc_id, text="", hashtags=(), mentions=(), terms=(), author="", location="", lang=None):
    return Document(
        id=doc_id,
        text=text or " ".join(terms),
        author=author,
        location=location,
        hashtags=tuple(hashtags),
        mentions=tuple(mentions),
        terms=tuple(terms),
        lang=lang,
    )


def random_index(rng, n_feat, n_pos, n_neg, density=None) -> CoverageIndex:
    """Random coverage index with no feature covering zero documents."""
    feats = [Feature.make(FeatureKind.TERM, f"t{j:04d}") for j in range(n_feat)]
    d = density if density is not None else rng.uniform(0.05, 0.5)
    pos = rng.random((n_feat, n_pos)) < d
    neg = rng.random((n_feat, n_neg)) < d
    empty = ~(pos.any(axis=1) | neg.any(axis=1))
    pos[empty, rng.integers(0, n_pos, size=int(empty.sum()))] = True
    return CoverageIndex.from_membership(feats, pos, neg)


def toy_labeled_corpus(n_pos=6, n_neg=10) -> LabeledCorpus:
    """Tiny deterministic corpus: positives carry #topic, negatives don't."""
    docs = []
    for i in range(n_pos):
        docs.append(
            make_doc(
                f"p{i}",
                hashtags=["topic", f"extra{i % 2}"],
                terms=["quake", "hits"] + (["chile"] if i % 2 == 0 else ["peru"]),
                mentions=["bob"] if i % 3 == 0 else [],
                author=f"alice{i % 2}",
            )
        )
    for i in range(n_neg):
        docs.append(
            make_doc(
                f"n{i}",
                hashtags=[f"extra{i % 3}"],
                terms=["monday", "coffee"] + (["hits"] if i % 2 == 0 else []),
                author=f"carol{i % 3}",
                location="springfield" if i % 2 == 0 else "",
            )
        )
    return label(docs, {"topic"}, "toy")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
