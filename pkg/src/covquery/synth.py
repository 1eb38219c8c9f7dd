"""Planted synthetic corpus generator.

Produces a topic-labeled corpus with a known structure so the full pipeline
runs out of the box and the relative behavior of the objectives is
predictable:

* every positive carries the labeling hashtag "plantedtopic";
* "mainstream" positives (75%) carry topical terms with varying
  class-conditional rates; "chatter" positives (25%) carry none, so they are
  reachable only through common features;
* five "common" stopword-like terms appear in ~90% of all documents of both
  classes (high coverage, no precision);
* 25 redundant "subtag" hashtags mark the same 30% slice of mainstream
  positives and almost never appear in negatives (high classifier weight,
  low marginal coverage);
* generic hashtags, locations, mentions, authors, and low-frequency filler
  terms round out the feature space.

Pure-coverage selection therefore favors the common terms (recall ~1, low
precision); coverage/anti-coverage selection favors the topical terms
(lower recall, far higher precision); classifier-weight selection favors
the redundant subtags and topical terms (lowest recall).
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

LABELING_HASHTAG = "plantedtopic"
TOPIC_RATES = [0.9, 0.8, 0.7, 0.6, 0.5, 0.45, 0.4, 0.35, 0.3, 0.25, 0.2, 0.2, 0.2]
TOPIC_NEG_RATE = 0.002
N_SUBTAGS = 25
SUBTAG_RATE = 0.95
N_COMMON = 5
COMMON_RATE = 0.9
N_GENERIC_TAGS = 30
N_LOCATIONS = 15
N_MENTIONS = 50
MENTION_RATE = 0.2
FILLER_VOCAB = 20_000
FILLERS_PER_DOC = 6


def generate_synthetic(
    n_docs: int = 50_000, pos_frac: float = 0.05, seed: int = 0
) -> tuple[list[dict], set[str]]:
    """Return (records, labeling_hashtags) for a planted corpus.

    Records are JSONL-ready dicts; positives come first, then negatives.
    """
    if n_docs < 20:
        raise ValueError("n_docs too small for the planted construction")
    rng = np.random.default_rng(seed)
    n_pos = int(round(n_docs * pos_frac))
    n_neg = n_docs - n_pos
    n_main = int(round(n_pos * 0.75))
    n_slice = int(round(n_main * 0.3))

    topics = [f"topic{i + 1:02d}" for i in range(len(TOPIC_RATES))]
    subtags = [f"subtag{i + 1:02d}" for i in range(N_SUBTAGS)]
    commons = [f"common{i + 1:02d}" for i in range(N_COMMON)]
    tags = [f"tag{i + 1:02d}" for i in range(N_GENERIC_TAGS)]
    cities = [f"city{i + 1:02d}" for i in range(N_LOCATIONS)]
    celebs = [f"celeb{i + 1:02d}" for i in range(N_MENTIONS)]

    # Per-document feature draws, vectorized over the whole corpus.
    topic_main = rng.random((n_main, len(TOPIC_RATES))) < np.array(TOPIC_RATES)
    topic_neg = rng.random((n_neg, len(TOPIC_RATES))) < TOPIC_NEG_RATE
    subtag_hits = rng.random((n_slice, N_SUBTAGS)) < SUBTAG_RATE
    common_hits = rng.random((n_docs, N_COMMON)) < COMMON_RATE
    tag_a = rng.integers(0, N_GENERIC_TAGS, n_docs)
    tag_b = rng.integers(0, N_GENERIC_TAGS, n_docs)
    tag_b_on = rng.random(n_docs) < 0.5
    has_loc = rng.random(n_docs) < 0.5
    loc_idx = rng.integers(0, N_LOCATIONS, n_docs)
    author_idx = rng.integers(0, max(n_docs // 5, 1), n_docs)
    has_mention = rng.random(n_docs) < MENTION_RATE
    mention_idx = rng.integers(0, N_MENTIONS, n_docs)
    fillers = rng.integers(0, FILLER_VOCAB, (n_docs, FILLERS_PER_DOC))

    records: list[dict] = []
    for i in range(n_docs):
        is_pos = i < n_pos
        is_main = i < n_main
        in_slice = i < n_slice

        terms: list[str] = []
        hashtags: list[str] = []
        if is_main:
            terms.extend(t for t, hit in zip(topics, topic_main[i]) if hit)
        elif not is_pos:
            terms.extend(t for t, hit in zip(topics, topic_neg[i - n_pos]) if hit)
        if in_slice:
            hashtags.extend(s for s, hit in zip(subtags, subtag_hits[i]) if hit)
        terms.extend(c for c, hit in zip(commons, common_hits[i]) if hit)
        terms.extend(f"filler{j:05d}" for j in fillers[i])

        if is_pos:
            hashtags.append(LABELING_HASHTAG)
        hashtags.append(tags[tag_a[i]])
        if tag_b_on[i] and tags[tag_b[i]] not in hashtags:
            hashtags.append(tags[tag_b[i]])

        words = terms + ["#" + h for h in hashtags]
        if has_mention[i]:
            words.append("@" + celebs[mention_idx[i]])
        rec = {
            "id": f"d{i:06d}",
            "text": " ".join(words),
            "user": f"user{author_idx[i]:05d}",
            "lang": "en",
        }
        if has_loc[i]:
            rec["location"] = cities[loc_idx[i]]
        records.append(rec)

    return records, {LABELING_HASHTAG}


def write_synthetic(
    out_dir: str | Path, n_docs: int = 50_000, pos_frac: float = 0.05, seed: int = 0
) -> tuple[Path, Path]:
    """Write corpus.jsonl and labeling_hashtags.txt under ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    records, tags = generate_synthetic(n_docs, pos_frac, seed)
    corpus_path = out / "corpus.jsonl"
    with corpus_path.open("w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec) + "\n")
    tags_path = out / "labeling_hashtags.txt"
    tags_path.write_text("".join(t + "\n" for t in sorted(tags)), encoding="utf-8")
    return corpus_path, tags_path
