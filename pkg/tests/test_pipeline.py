import pytest

import covquery.pipeline as pipeline_mod
from covquery.corpus import document_from_record, label, preprocess
from covquery.errors import ConfigError, DataError
from covquery.pipeline import (
    MethodSpec,
    PipelineConfig,
    make_folds,
    run_pipeline,
    tune_lambda,
)
from covquery.ranker import TrainConfig
from covquery.synth import generate_synthetic

from conftest import make_doc, toy_labeled_corpus


def synth_corpus(n_docs=800, seed=3):
    records, tags = generate_synthetic(n_docs=n_docs, pos_frac=0.1, seed=seed)
    docs = preprocess([document_from_record(r) for r in records])
    return label(docs, tags, "planted")


FAST_RANKER = TrainConfig(max_epochs=60)


class TestMakeFolds:
    def test_even_division(self):
        docs = [make_doc(f"d{i}", hashtags=["t"]) for i in range(10)]
        corpus = label(docs, {"t"}, "x")
        plan = make_folds(corpus, 5, seed=0)
        assert sorted(len(f) for f in plan.folds) == [2, 2, 2, 2, 2]

    def test_remainder_rule(self):
        docs = [make_doc(f"d{i}", hashtags=["t"]) for i in range(11)]
        corpus = label(docs, {"t"}, "x")
        plan = make_folds(corpus, 5, seed=0)
        assert sorted((len(f) for f in plan.folds), reverse=True) == [3, 2, 2, 2, 2]

    def test_partition(self):
        corpus = toy_labeled_corpus(n_pos=7, n_neg=13)
        plan = make_folds(corpus, 4, seed=9)
        seen = [doc_id for fold in plan.folds for doc_id in fold]
        assert sorted(seen) == sorted(d.id for d in corpus.all_documents())

    def test_same_seed_identical(self):
        corpus = toy_labeled_corpus()
        assert make_folds(corpus, 4, seed=5).folds == make_folds(corpus, 4, seed=5).folds

    def test_corpus_smaller_than_n_fatal(self):
        docs = [make_doc(f"d{i}", hashtags=["t"]) for i in range(3)]
        corpus = label(docs, {"t"}, "x")
        with pytest.raises(DataError):
            make_folds(corpus, 5, seed=0)

    def test_needs_two_folds(self):
        with pytest.raises(ConfigError):
            make_folds(toy_labeled_corpus(), 1, seed=0)


class TestMethodSpec:
    def test_lazy_cailp_rejected(self):
        with pytest.raises(ConfigError):
            MethodSpec(kind="cailp", solver="lazy")

    def test_unknown_kind(self):
        with pytest.raises(ConfigError):
            MethodSpec(kind="magic")

    def test_bad_lambda_string(self):
        with pytest.raises(ConfigError):
            MethodSpec(kind="wilp", lam="auto")

    def test_default_name_is_kind(self):
        assert MethodSpec(kind="cilp").name == "cilp"


class TestRunPipeline:
    def test_firehose_recall_exactly_one_every_fold(self):
        corpus = synth_corpus()
        plan = make_folds(corpus, 5, seed=0)
        report = run_pipeline(
            corpus,
            [MethodSpec(kind="firehose")],
            plan,
            PipelineConfig(min_freq=8, ranker=FAST_RANKER),
        )
        recs = report.methods["firehose"].folds
        assert len(recs) == 5
        assert all(r.recall == 1.0 for r in recs)

    def test_bookkeeping_two_methods_five_folds(self):
        corpus = synth_corpus()
        plan = make_folds(corpus, 5, seed=0)
        report = run_pipeline(
            corpus,
            [MethodSpec(kind="firehose"), MethodSpec(kind="cilp", k=8)],
            plan,
            PipelineConfig(min_freq=8, ranker=FAST_RANKER),
        )
        assert set(report.methods) == {"firehose", "cilp"}
        for rep in report.methods.values():
            assert len(rep.folds) == 5
            assert rep.aggregate()["recall"] is not None

    def test_deterministic_reports(self):
        corpus = synth_corpus(n_docs=500)
        plan = make_folds(corpus, 4, seed=1)
        methods = [MethodSpec(kind="cailp", k=6, lam=1.0), MethodSpec(kind="topk", k=6)]
        cfg = PipelineConfig(min_freq=6, ranker=FAST_RANKER)
        r1 = run_pipeline(corpus, methods, plan, cfg)
        r2 = run_pipeline(corpus, methods, plan, cfg)
        assert r1.to_dict() == r2.to_dict()

    def test_no_timings_inside_report_payload(self):
        corpus = synth_corpus(n_docs=400)
        plan = make_folds(corpus, 4, seed=1)
        report = run_pipeline(
            corpus,
            [MethodSpec(kind="cilp", k=4)],
            plan,
            PipelineConfig(min_freq=6, ranker=FAST_RANKER),
        )
        import json

        assert "solve_time" not in json.dumps(report.to_dict())
        assert len(report.solver_timings["cilp"]) == 4

    def test_ranker_never_sees_test_split(self, monkeypatch):
        corpus = synth_corpus(n_docs=400)
        plan = make_folds(corpus, 4, seed=2)
        seen_train_ids = []
        real_train = pipeline_mod.train

        def spy_train(train_corpus, config=TrainConfig()):
            seen_train_ids.append({d.id for d in train_corpus.all_documents()})
            return real_train(train_corpus, config)

        monkeypatch.setattr(pipeline_mod, "train", spy_train)
        run_pipeline(
            corpus,
            [MethodSpec(kind="cilp", k=4)],
            plan,
            PipelineConfig(min_freq=6, ranker=FAST_RANKER),
        )
        assert len(seen_train_ids) == 4
        for fold_idx, fold_ids in enumerate(plan.folds):
            assert seen_train_ids[fold_idx].isdisjoint(fold_ids)

    def test_query_optimization_reads_only_its_split(self, monkeypatch):
        corpus = synth_corpus(n_docs=400)
        plan = make_folds(corpus, 4, seed=2)
        seen = []
        real_extract = pipeline_mod.extract_features

        def spy_extract(sub_corpus, min_freq, exclude_labeling=True):
            seen.append({d.id for d in sub_corpus.all_documents()})
            return real_extract(sub_corpus, min_freq, exclude_labeling)

        monkeypatch.setattr(pipeline_mod, "extract_features", spy_extract)
        run_pipeline(
            corpus,
            [MethodSpec(kind="cilp", k=4)],
            plan,
            PipelineConfig(min_freq=6, ranker=FAST_RANKER),
        )
        # one index per fold, each built from exactly that fold's ids
        assert [sorted(s) for s in seen] == [sorted(f) for f in plan.folds]

    def test_method_failure_recorded_without_aborting(self):
        corpus = synth_corpus(n_docs=500)
        plan = make_folds(corpus, 4, seed=1)
        methods = [
            MethodSpec(kind="cilp", k=4, name="ok"),
            MethodSpec(kind="cilp", k=10, solver="exact", name="toobig"),
        ]
        report = run_pipeline(
            corpus, methods, plan, PipelineConfig(min_freq=4, ranker=FAST_RANKER)
        )
        ok = report.methods["ok"].folds
        toobig = report.methods["toobig"].folds
        assert all(r.failure is None for r in ok)
        assert all(r.failure is not None and "limits" in r.failure for r in toobig)
        assert report.methods["toobig"].aggregate()["recall"] is None

    def test_duplicate_method_names_rejected(self):
        corpus = synth_corpus(n_docs=400)
        plan = make_folds(corpus, 4, seed=0)
        with pytest.raises(ConfigError):
            run_pipeline(
                corpus,
                [MethodSpec(kind="cilp"), MethodSpec(kind="cilp")],
                plan,
                PipelineConfig(min_freq=6, ranker=FAST_RANKER),
            )

    def test_lambda_recorded_and_positive_on_planted_corpus(self):
        corpus = synth_corpus(n_docs=1000, seed=11)
        plan = make_folds(corpus, 4, seed=3)
        report = run_pipeline(
            corpus,
            [MethodSpec(kind="cailp", k=8, lam="tune")],
            plan,
            PipelineConfig(min_freq=8, ranker=FAST_RANKER),
        )
        lams = [r.lam for r in report.methods["cailp"].folds if r.failure is None]
        assert lams and all(l is not None for l in lams)
        # the planted stopwords make lambda=0 lose on F1
        assert all(l > 0 for l in lams)

    def test_fixed_lambda_skips_tuning(self):
        corpus = synth_corpus(n_docs=400)
        plan = make_folds(corpus, 4, seed=0)
        report = run_pipeline(
            corpus,
            [MethodSpec(kind="cailp", k=4, lam=2.0)],
            plan,
            PipelineConfig(min_freq=6, ranker=FAST_RANKER),
        )
        assert all(r.lam == 2.0 for r in report.methods["cailp"].folds)

    def test_train_on_filtered_flag(self):
        # CILP retrieval keeps both classes, so the filtered ranker can train
        corpus = synth_corpus(n_docs=500)
        plan = make_folds(corpus, 4, seed=1)
        cfg = PipelineConfig(min_freq=6, train_on_filtered=True, ranker=FAST_RANKER)
        report = run_pipeline(corpus, [MethodSpec(kind="cilp", k=6)], plan, cfg)
        assert all(r.failure is None for r in report.methods["cilp"].folds)

    def test_train_on_filtered_single_class_recorded_as_failure(self):
        # CAILP filtering at this scale strips negative examples from the train split
        corpus = synth_corpus(n_docs=500)
        plan = make_folds(corpus, 4, seed=1)
        cfg = PipelineConfig(min_freq=6, train_on_filtered=True, ranker=FAST_RANKER)
        report = run_pipeline(corpus, [MethodSpec(kind="cailp", k=6, lam=2.0)], plan, cfg)
        for record in report.methods["cailp"].folds:
            if record.failure is not None:
                assert "positive and one negative" in record.failure


def test_tune_lambda_prefers_anticoverage_on_planted_corpus():
    corpus = synth_corpus(n_docs=1200, seed=5)
    method = MethodSpec(kind="cailp", k=8, lam="tune")
    lam = tune_lambda(method, corpus, PipelineConfig(min_freq=8), seed=0)
    assert lam >= 1.0
