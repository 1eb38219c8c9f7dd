"""Cross-validated retrieve-then-rank evaluation harness.

Per fold: one split is used to build the coverage index and derive each
method's query (and to evaluate), the remaining splits train the ranker.
Stage-1 metrics score the boolean retrieval on the evaluation split;
stage-2 metrics score the ranked retrieved subset against all relevant
documents of that split.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .corpus import LabeledCorpus, subset_corpus
from .errors import ConfigError, CovQueryError, DataError
from .features import extract_features
from .metrics import (
    MeanCI,
    average_precision,
    confidence_interval,
    precision_at_k,
    stage1_metrics,
)
from .objectives import ObjectiveKind, ObjectiveSpec, build_nmis_table
from .query_engine import RetrievalResult, retrieve
from .ranker import RankerModel, TrainConfig, export_weights, rank, train
from .solvers import QuerySolution, exact, greedy, lazy_greedy, topk_baseline

logger = logging.getLogger(__name__)

LAMBDA_GRID = [0.0, 0.01, 0.1, 0.25, 0.5, 1.0, 2.0, 5.0]
OBJECTIVE_KINDS = {"cilp", "wilp", "cailp"}
METHOD_KINDS = OBJECTIVE_KINDS | {"topk", "firehose"}
SOLVERS = {"greedy", "lazy", "exact"}


@dataclass(frozen=True)
class MethodSpec:
    """One evaluated method: an objective, the TopK baseline, or the firehose."""

    kind: str
    name: str = ""
    k: int = 20
    lam: float | str = "tune"  # "tune" or a fixed value; unused by cilp/topk/firehose
    char_budget: int | None = None
    solver: str = "greedy"

    def __post_init__(self):
        if self.kind not in METHOD_KINDS:
            raise ConfigError(f"unknown method kind {self.kind!r}")
        if self.solver not in SOLVERS:
            raise ConfigError(f"unknown solver {self.solver!r}")
        if self.kind == "cailp" and self.solver == "lazy":
            raise ConfigError("lazy solver requires a submodular objective; use greedy")
        if isinstance(self.lam, str) and self.lam != "tune":
            raise ConfigError(f"lambda must be a number or 'tune', got {self.lam!r}")
        if not self.name:
            object.__setattr__(self, "name", self.kind)

    def needs_tuning(self) -> bool:
        return self.kind in ("wilp", "cailp") and self.lam == "tune"


@dataclass
class FoldPlan:
    """Seeded partition of document ids into folds."""

    n_folds: int
    seed: int
    folds: list[list[str]]


@dataclass
class PipelineConfig:
    min_freq: int = 100
    exclude_labeling: bool = True
    p_at_k: int = 100
    lambda_grid: list[float] = field(default_factory=lambda: list(LAMBDA_GRID))
    train_on_filtered: bool = False
    ranker: TrainConfig = field(default_factory=TrainConfig)


@dataclass
class FoldRecord:
    fold: int
    failure: str | None = None
    lam: float | None = None
    n_selected: int | None = None
    query_chars: int | None = None
    retrieved: int | None = None
    recall: float | None = None
    precision: float | None = None
    avep: float | None = None
    p_at_k: float | None = None
    solve_time: float | None = None

    def to_dict(self) -> dict:
        return {
            "fold": self.fold,
            "failure": self.failure,
            "lambda": self.lam,
            "n_selected": self.n_selected,
            "query_chars": self.query_chars,
            "stage1": {
                "retrieved": self.retrieved,
                "recall": self.recall,
                "precision": self.precision,
            },
            "stage2": {"avep": self.avep, "p_at_k": self.p_at_k},
        }


@dataclass
class MethodReport:
    spec: MethodSpec
    folds: list[FoldRecord] = field(default_factory=list)

    def _ci(self, attr: str) -> MeanCI | None:
        values = [
            getattr(r, attr)
            for r in self.folds
            if r.failure is None and getattr(r, attr) is not None
        ]
        return confidence_interval(values) if values else None

    def aggregate(self) -> dict:
        keys = {
            "avg_retrieved": "retrieved",
            "recall": "recall",
            "precision": "precision",
            "avep": "avep",
            "p_at_k": "p_at_k",
        }
        out = {}
        for name, attr in keys.items():
            ci = self._ci(attr)
            out[name] = None if ci is None else ci.to_dict()
        return out

    def to_dict(self) -> dict:
        return {
            "kind": self.spec.kind,
            "solver": self.spec.solver,
            "k": self.spec.k,
            "folds": [r.to_dict() for r in self.folds],
            "aggregate": self.aggregate(),
        }


@dataclass
class EvalReport:
    topic: str
    n_folds: int
    seed: int
    methods: dict[str, MethodReport]
    solver_timings: dict[str, list[float | None]] = field(default_factory=dict)

    def to_dict(self) -> dict:
        """Deterministic report payload; wall-clock timings are kept separate."""
        return {
            "topic": self.topic,
            "n_folds": self.n_folds,
            "seed": self.seed,
            "methods": {name: rep.to_dict() for name, rep in self.methods.items()},
        }


def make_folds(corpus: LabeledCorpus, n: int, seed: int) -> FoldPlan:
    """Seeded uniform partition; fold sizes differ by at most one."""
    if n < 2:
        raise ConfigError("need at least 2 folds")
    ids = [d.id for d in corpus.all_documents()]
    if len(ids) < n:
        raise DataError(f"corpus has {len(ids)} documents, fewer than {n} folds")
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(ids))
    base, extra = divmod(len(ids), n)
    folds: list[list[str]] = []
    at = 0
    for i in range(n):
        size = base + (1 if i < extra else 0)
        folds.append([ids[j] for j in order[at : at + size]])
        at += size
    return FoldPlan(n_folds=n, seed=seed, folds=folds)


def _solve_objective(
    spec: MethodSpec, lam: float, index, nmis_table
) -> QuerySolution:
    obj = ObjectiveSpec(
        kind=ObjectiveKind(spec.kind),
        k=spec.k,
        lam=lam,
        char_budget=spec.char_budget,
    )
    if spec.solver == "greedy":
        return greedy(obj, index, nmis_table)
    if spec.solver == "lazy":
        return lazy_greedy(obj, index, nmis_table)
    return exact(obj, index, nmis_table)


def _stage1_f1(result: RetrievalResult, corpus: LabeledCorpus) -> float:
    recall, precision, _ = stage1_metrics(result, corpus)
    return 0.0 if recall + precision == 0 else 2 * precision * recall / (precision + recall)


def tune_lambda(
    method: MethodSpec,
    opt_corpus: LabeledCorpus,
    config: PipelineConfig,
    seed: int,
) -> float:
    """Pick lambda from the grid by stage-1 F1 on an internal 80/20 sub-split."""
    ids = [d.id for d in opt_corpus.all_documents()]
    rng = np.random.default_rng([seed, 0x7E5])
    order = rng.permutation(len(ids))
    cut = max(1, int(len(ids) * 0.8))
    if cut >= len(ids):
        cut = len(ids) - 1
    sub_ids = {ids[j] for j in order[:cut]}
    val_ids = {ids[j] for j in order[cut:]}
    sub_corpus = subset_corpus(opt_corpus, sub_ids)
    val_corpus = subset_corpus(opt_corpus, val_ids)
    if sub_corpus.n_pos < 1 or sub_corpus.n_neg < 1:
        logger.warning("lambda tuning sub-split is single-class; keeping lambda=0")
        return 0.0

    sub_index = extract_features(sub_corpus, config.min_freq, config.exclude_labeling)
    sub_nmis = build_nmis_table(sub_index)
    best_lam, best_f1 = config.lambda_grid[0], -1.0
    for lam in config.lambda_grid:
        sol = _solve_objective(method, lam, sub_index, sub_nmis)
        f1 = _stage1_f1(retrieve(sol, val_corpus), val_corpus)
        if f1 > best_f1:
            best_lam, best_f1 = lam, f1
    return best_lam


def run_pipeline(
    corpus: LabeledCorpus,
    methods: list[MethodSpec],
    plan: FoldPlan,
    config: PipelineConfig | None = None,
) -> EvalReport:
    """Evaluate every method across all folds of the plan."""
    config = config or PipelineConfig()
    names = [m.name for m in methods]
    if len(set(names)) != len(names):
        raise ConfigError(f"duplicate method names in {names}")

    reports = {m.name: MethodReport(spec=m) for m in methods}
    timings: dict[str, list[float | None]] = {m.name: [] for m in methods}
    all_ids = {d.id for d in corpus.all_documents()}

    for fold_idx, fold_ids in enumerate(plan.folds):
        test_ids = set(fold_ids)
        opt_corpus = subset_corpus(corpus, test_ids)
        train_corpus = subset_corpus(corpus, all_ids - test_ids)
        relevant = {d.id for d in opt_corpus.positives}

        index = None
        nmis_table = None
        index_error: str | None = None
        try:
            index = extract_features(
                opt_corpus, config.min_freq, config.exclude_labeling
            )
            nmis_table = build_nmis_table(index)
        except CovQueryError as exc:
            index_error = str(exc)

        base_model: RankerModel | None = None
        model_error: str | None = None
        try:
            base_model = train(train_corpus, config.ranker)
        except CovQueryError as exc:
            model_error = str(exc)

        for method in methods:
            record = FoldRecord(fold=fold_idx)
            reports[method.name].folds.append(record)
            try:
                if model_error is not None:
                    raise DataError(f"ranker training failed: {model_error}")
                if method.kind != "firehose" and index_error is not None:
                    raise DataError(f"index construction failed: {index_error}")

                solution: QuerySolution | None = None
                if method.kind == "firehose":
                    result = RetrievalResult(
                        retrieved_ids={d.id for d in opt_corpus.all_documents()},
                        retrieved_pos=opt_corpus.n_pos,
                        retrieved_neg=opt_corpus.n_neg,
                        query_chars=0,
                    )
                elif method.kind == "topk":
                    weights = export_weights(base_model, index)
                    solution = topk_baseline(
                        weights, method.k, index, method.char_budget
                    )
                    result = retrieve(solution, opt_corpus)
                else:
                    if method.kind == "cilp":
                        lam = 0.0  # ignored by the objective
                    elif method.needs_tuning():
                        lam = tune_lambda(
                            method, opt_corpus, config, plan.seed + fold_idx
                        )
                        record.lam = lam
                    else:
                        lam = float(method.lam)
                        record.lam = lam
                    solution = _solve_objective(method, lam, index, nmis_table)
                    result = retrieve(solution, opt_corpus)

                if solution is not None:
                    record.n_selected = len(solution.selected)
                    record.query_chars = result.query_chars
                    record.solve_time = solution.solve_time

                recall, precision, retrieved = stage1_metrics(result, opt_corpus)
                record.recall, record.precision, record.retrieved = (
                    recall,
                    precision,
                    retrieved,
                )

                model = base_model
                if (
                    config.train_on_filtered
                    and method.kind != "firehose"
                    and solution is not None
                ):
                    train_hits = retrieve(solution, train_corpus).retrieved_ids
                    model = train(
                        subset_corpus(train_corpus, train_hits), config.ranker
                    )

                pool = [
                    d
                    for d in opt_corpus.all_documents()
                    if method.kind == "firehose" or d.id in result.retrieved_ids
                ]
                ranking = [doc_id for doc_id, _ in rank(model, pool)]
                if relevant:
                    record.avep = average_precision(ranking, relevant)
                    record.p_at_k = precision_at_k(ranking, relevant, config.p_at_k)
                else:
                    logger.warning(
                        "fold %d has no relevant documents; stage-2 metrics skipped",
                        fold_idx,
                    )
            except CovQueryError as exc:
                record.failure = str(exc)
                logger.warning(
                    "method %s failed on fold %d: %s", method.name, fold_idx, exc
                )
            timings[method.name].append(record.solve_time)

    return EvalReport(
        topic=corpus.topic,
        n_folds=plan.n_folds,
        seed=plan.seed,
        methods=reports,
        solver_timings=timings,
    )
