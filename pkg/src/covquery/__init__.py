"""Coverage-optimized keyword selection for boolean search-API queries."""

from .corpus import Document, LabeledCorpus, ingest, label, preprocess
from .features import CoverageIndex, Feature, FeatureKind, coverage, extract_features
from .objectives import ObjectiveKind, ObjectiveSpec, build_nmis_table, evaluate, nmis
from .pipeline import EvalReport, FoldPlan, MethodSpec, make_folds, run_pipeline
from .query_engine import RetrievalResult, render_query, retrieve
from .solvers import QuerySolution, SearchLimits, exact, greedy, lazy_greedy, topk_baseline

__version__ = "0.1.0"

__all__ = [
    "Document",
    "LabeledCorpus",
    "ingest",
    "preprocess",
    "label",
    "CoverageIndex",
    "Feature",
    "FeatureKind",
    "extract_features",
    "coverage",
    "ObjectiveKind",
    "ObjectiveSpec",
    "nmis",
    "build_nmis_table",
    "evaluate",
    "QuerySolution",
    "SearchLimits",
    "greedy",
    "lazy_greedy",
    "exact",
    "topk_baseline",
    "RetrievalResult",
    "retrieve",
    "render_query",
    "EvalReport",
    "FoldPlan",
    "MethodSpec",
    "make_folds",
    "run_pipeline",
]
