import json

import pytest
from hypothesis import given, strategies as st

from covquery.corpus import (
    Document,
    document_from_record,
    ingest,
    label,
    load_labeling_hashtags,
    preprocess,
    subset_corpus,
    tokenize,
)
from covquery.errors import ConfigError, DataError

from conftest import make_doc


def write_jsonl(path, records):
    path.write_text("".join(json.dumps(r) + "\n" for r in records), encoding="utf-8")


class TestTokenize:
    def test_sigils_and_terms(self):
        hashtags, mentions, terms = tokenize("RT @bob #quake hits chile")
        assert hashtags == ["quake"]
        assert mentions == ["bob"]
        assert terms == ["rt", "hits", "chile"]

    def test_punctuation_splits_but_apostrophe_kept(self):
        _, _, terms = tokenize("don't stop,now")
        assert terms == ["don't", "stop", "now"]

    def test_lowercasing(self):
        hashtags, _, terms = tokenize("#Quake HITS")
        assert hashtags == ["quake"]
        assert terms == ["hits"]

    def test_bare_sigils_dropped(self):
        hashtags, mentions, terms = tokenize("# @ hello")
        assert hashtags == [] and mentions == []
        assert terms == ["hello"]

    @given(st.text(max_size=200))
    def test_no_sigils_or_uppercase_in_output(self, text):
        hashtags, mentions, terms = tokenize(text)
        for tok in hashtags + mentions + terms:
            assert tok == tok.lower()
            assert not tok.startswith("#") and not tok.startswith("@")
            assert tok


class TestIngest:
    def test_three_valid_records(self, tmp_path):
        path = tmp_path / "c.jsonl"
        write_jsonl(
            path,
            [
                {"id": "a", "text": "one #x"},
                {"id": "b", "text": "two #y"},
                {"id": "c", "text": "three #z"},
            ],
        )
        docs = ingest(path)
        assert [d.id for d in docs] == ["a", "b", "c"]

    def test_field_tokenization(self, tmp_path):
        path = tmp_path / "c.jsonl"
        write_jsonl(path, [{"id": "a", "text": "RT @bob #quake hits chile"}])
        (doc,) = ingest(path)
        assert doc.mentions == ("bob",)
        assert doc.hashtags == ("quake",)
        assert doc.terms == ("rt", "hits", "chile")

    def test_empty_file(self, tmp_path):
        path = tmp_path / "c.jsonl"
        path.write_text("", encoding="utf-8")
        assert ingest(path) == []

    def test_malformed_records_logged_with_line_number(self, tmp_path, caplog):
        path = tmp_path / "c.jsonl"
        path.write_text(
            '{"id": "a", "text": "ok #t"}\nnot json\n{"text": "no id"}\n',
            encoding="utf-8",
        )
        with caplog.at_level("WARNING"):
            docs = ingest(path)
        assert [d.id for d in docs] == ["a"]
        assert "line 2" in caplog.text and "line 3" in caplog.text

    def test_unreadable_file_fatal(self, tmp_path):
        with pytest.raises(DataError):
            ingest(tmp_path / "missing.jsonl")

    def test_pretokenized_arrays_override(self, tmp_path):
        path = tmp_path / "c.jsonl"
        write_jsonl(
            path,
            [{"id": "a", "text": "#fromtext word", "hashtags": ["#Given"], "mentions": ["Ann"]}],
        )
        (doc,) = ingest(path)
        assert doc.hashtags == ("given",)
        assert doc.mentions == ("ann",)
        assert doc.terms == ("word",)

    def test_user_and_location_lowercased(self):
        doc = document_from_record({"id": "a", "text": "x #t", "user": "BigBob", "location": "New York"})
        assert doc.author == "bigbob"
        assert doc.location == "new york"


class TestPreprocess:
    def test_duplicate_text_keeps_first(self):
        d1 = make_doc("a", text="same text", hashtags=["t"])
        d2 = make_doc("b", text="same text", hashtags=["u"])
        assert preprocess([d1, d2]) == [d1]

    def test_whitespace_collapsed_duplicates(self):
        d1 = make_doc("a", text="Same  Text", hashtags=["t"])
        d2 = make_doc("b", text="same text ", hashtags=["u"])
        assert preprocess([d1, d2]) == [d1]

    def test_hashtagless_removed(self):
        d = make_doc("a", text="plain", hashtags=[])
        assert preprocess([d]) == []

    def test_combined_filters(self):
        docs = [
            make_doc("a", text="one #x", hashtags=["x"]),
            make_doc("b", text="one #x", hashtags=["x"]),  # duplicate
            make_doc("c", text="two", hashtags=[]),  # hashtag-less
            make_doc("d", text="three #y", hashtags=["y"]),
            make_doc("e", text="four #z", hashtags=["z"]),
        ]
        survivors = preprocess(docs)
        assert [d.id for d in survivors] == ["a", "d", "e"]

    def test_lang_filter(self):
        docs = [
            make_doc("a", text="uno #x", hashtags=["x"], lang="es"),
            make_doc("b", text="one #x2", hashtags=["x"], lang="en"),
            make_doc("c", text="untagged #x3", hashtags=["x"]),
        ]
        assert [d.id for d in preprocess(docs)] == ["b", "c"]
        assert [d.id for d in preprocess(docs, lang=None)] == ["a", "b", "c"]

    def test_idempotent(self):
        docs = [
            make_doc("a", text="one #x", hashtags=["x"]),
            make_doc("b", text="one #x", hashtags=["x"]),
            make_doc("c", text="two #y", hashtags=["y"]),
        ]
        once = preprocess(docs)
        assert preprocess(once) == once


class TestLabel:
    def test_membership(self):
        pos = make_doc("a", hashtags=["nadal", "monday"])
        neg = make_doc("b", hashtags=["monday"])
        corpus = label([pos, neg], {"nadal"}, "tennis")
        assert [d.id for d in corpus.positives] == ["a"]
        assert [d.id for d in corpus.negatives] == ["b"]

    def test_counts(self):
        docs = [
            make_doc(f"d{i}", hashtags=["fifa"] if i < 3 else (["messi"] if i == 3 else ["other"]))
            for i in range(10)
        ]
        corpus = label(docs, {"fifa", "messi"}, "soccer")
        assert corpus.n_pos == 4 and corpus.n_neg == 6
        assert corpus.n_pos + corpus.n_neg == len(docs)

    def test_empty_labeling_set_fatal(self):
        with pytest.raises(ConfigError):
            label([make_doc("a", hashtags=["x"])], set(), "t")

    def test_duplicate_ids_rejected(self):
        docs = [make_doc("a", hashtags=["x"]), make_doc("a", hashtags=["y"])]
        with pytest.raises(DataError):
            label(docs, {"x"}, "t")

    def test_deterministic_and_idempotent(self):
        docs = [make_doc(f"d{i}", hashtags=["t"] if i % 2 else ["u"]) for i in range(8)]
        c1 = label(docs, {"t"}, "x")
        c2 = label(c1.positives + c1.negatives, {"t"}, "x")
        assert [d.id for d in c2.positives] == [d.id for d in c1.positives]
        assert [d.id for d in c2.negatives] == [d.id for d in c1.negatives]


def test_load_labeling_hashtags(tmp_path):
    path = tmp_path / "tags.txt"
    path.write_text("#Nadal\nfederer\n\n  #wimbledon  \n", encoding="utf-8")
    assert load_labeling_hashtags(path) == {"nadal", "federer", "wimbledon"}


def test_load_labeling_hashtags_empty_fatal(tmp_path):
    path = tmp_path / "tags.txt"
    path.write_text("\n\n", encoding="utf-8")
    with pytest.raises(DataError):
        load_labeling_hashtags(path)


def test_subset_corpus_preserves_order_and_labels():
    docs = [make_doc(f"d{i}", hashtags=["t"] if i % 2 else ["u"]) for i in range(10)]
    corpus = label(docs, {"t"}, "x")
    sub = subset_corpus(corpus, {"d1", "d2", "d5"})
    assert [d.id for d in sub.positives] == ["d1", "d5"]
    assert [d.id for d in sub.negatives] == ["d2"]
