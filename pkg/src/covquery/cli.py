"""Command-line driver: solve, eval, bench, gen-synth.

Configuration lives in a JSON file (``--config``); every flag overrides the
corresponding file value.  Exit codes: 0 success, 1 usage/config error,
2 data error, 3 exact-solver refusal.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import json
import logging
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import LabeledCorpus, ingest, label, load_labeling_hashtags, preprocess, subset_corpus
from .errors import ConfigError, DataError, SolverLimitError
from .features import extract_features
from .objectives import ObjectiveKind, ObjectiveSpec, build_nmis_table
from .pipeline import (
    MethodSpec,
    PipelineConfig,
    make_folds,
    run_pipeline,
)
from .query_engine import render_query
from .ranker import TrainConfig, export_weights, train
from .solvers import exact, greedy, lazy_greedy, topk_baseline
from .synth import write_synthetic

logger = logging.getLogger(__name__)

DEFAULT_METHODS = [
    {"kind": "firehose"},
    {"kind": "topk"},
    {"kind": "cilp"},
    {"kind": "wilp"},
    {"kind": "cailp"},
]


@dataclass
class RunConfig:
    """Resolved run configuration; round-trips losslessly through JSON."""

    corpus: str | None = None
    hashtags: str | None = None
    topic: str = "topic"
    methods: list[dict] = field(default_factory=lambda: [dict(m) for m in DEFAULT_METHODS])
    min_freq: int = 100
    exclude_labeling: bool = True
    n_folds: int = 5
    seed: int = 0
    p_at_k: int = 100
    lang: str | None = "en"
    out: str = "out"
    train_on_filtered: bool = False
    ranker: dict = field(default_factory=lambda: TrainConfig().to_dict())

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    def hash(self) -> str:
        canon = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:16]

    def method_specs(self) -> list[MethodSpec]:
        specs = []
        for m in self.methods:
            m = dict(m)
            lam = m.pop("lambda", m.pop("lam", "tune"))
            specs.append(
                MethodSpec(
                    kind=m.pop("kind"),
                    name=m.pop("name", ""),
                    k=m.pop("k", 20),
                    lam=lam,
                    char_budget=m.pop("char_budget", None),
                    solver=m.pop("solver", "greedy"),
                )
            )
            if m:
                raise ConfigError(f"unknown method keys: {sorted(m)}")
        return specs

    def pipeline_config(self) -> PipelineConfig:
        return PipelineConfig(
            min_freq=self.min_freq,
            exclude_labeling=self.exclude_labeling,
            p_at_k=self.p_at_k,
            train_on_filtered=self.train_on_filtered,
            ranker=TrainConfig(**self.ranker),
        )


def load_config(args: argparse.Namespace) -> RunConfig:
    data: dict = {}
    if getattr(args, "config", None):
        try:
            data = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not valid JSON: {exc}") from exc
    config = RunConfig.from_dict(data)

    overrides = {
        "corpus": "corpus",
        "hashtags": "hashtags",
        "topic": "topic",
        "min_freq": "min_freq",
        "n_folds": "n_folds",
        "seed": "seed",
        "p_at_k": "p_at_k",
        "lang": "lang",
        "out": "out",
    }
    for attr, key in overrides.items():
        value = getattr(args, attr, None)
        if value is not None:
            setattr(config, key, value)
    if getattr(args, "methods", None):
        config.methods = [{"kind": kind} for kind in args.methods.split(",") if kind]
        for m in config.methods:
            if getattr(args, "k", None) is not None:
                m["k"] = args.k
            if getattr(args, "lam", None) is not None:
                m["lambda"] = args.lam if args.lam == "tune" else float(args.lam)
            if getattr(args, "solver", None) is not None and m["kind"] not in (
                "firehose",
                "topk",
            ):
                m["solver"] = args.solver
            if getattr(args, "char_budget", None) is not None:
                m["char_budget"] = args.char_budget
    return config


def load_labeled_corpus(config: RunConfig) -> LabeledCorpus:
    if not config.corpus or not config.hashtags:
        raise ConfigError("corpus path and labeling-hashtag file are required")
    docs = preprocess(ingest(config.corpus), lang=config.lang)
    tags = load_labeling_hashtags(config.hashtags)
    return label(docs, tags, config.topic)


def _write_json(path: Path, payload: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def cmd_solve(args: argparse.Namespace) -> int:
    config = load_config(args)
    corpus = load_labeled_corpus(config)
    index = extract_features(corpus, config.min_freq, config.exclude_labeling)
    nmis_table = build_nmis_table(index)
    out_dir = Path(config.out) / "solutions"

    ranker_model = None
    solve_times: dict[str, float] = {}
    for method in config.method_specs():
        if method.kind == "firehose":
            logger.info("firehose is not a query; skipping in solve")
            continue
        if method.kind == "topk":
            if ranker_model is None:
                ranker_model = train(corpus, TrainConfig(**config.ranker))
            sol = topk_baseline(
                export_weights(ranker_model, index), method.k, index, method.char_budget
            )
            obj_spec = None
        else:
            if isinstance(method.lam, (int, float)):
                lam = float(method.lam)
            elif method.kind == "cilp":
                lam = 0.0
            else:
                logger.warning(
                    "%s: lambda tuning happens in eval; using lambda=0.5 here",
                    method.name,
                )
                lam = 0.5
            obj_spec = ObjectiveSpec(
                kind=ObjectiveKind(method.kind),
                k=method.k,
                lam=lam,
                char_budget=method.char_budget,
            )
            solver = {"greedy": greedy, "lazy": lazy_greedy, "exact": exact}[
                method.solver
            ]
            sol = solver(obj_spec, index, nmis_table)

        query = render_query(sol)
        payload = sol.to_dict(obj_spec)
        # wall-clock time goes to the sidecar so solution files are reproducible
        solve_times[method.name] = payload.pop("solve_time_ms")
        payload["config_hash"] = config.hash()
        payload["query"] = query
        _write_json(out_dir / f"{method.name}.json", payload)
        (out_dir / f"{method.name}.query").write_text(query + "\n", encoding="utf-8")
        if getattr(args, "render", False):
            print(f"{method.name}: {query}")
        logger.info(
            "%s: %d features, objective %.6g, %d chars",
            method.name,
            len(sol.selected),
            sol.objective_value,
            len(query),
        )
    _write_json(
        out_dir / "timings.json",
        {"config_hash": config.hash(), "solve_times_ms": solve_times},
    )
    return 0


def _fmt(value: float | None, ci: float | None = None) -> str:
    if value is None:
        return "n/a"
    if ci is None:
        return f"{round(value, 3):.3f}"
    return f"{round(value, 3):.3f}±{round(ci, 3):.3f}"


def _write_report_csv(path: Path, report_dict: dict, config: RunConfig) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        fh.write(f"# config_hash: {config.hash()}\n")
        writer = csv.writer(fh)
        writer.writerow(
            [
                "method",
                "avg_retrieved",
                "recall",
                "precision",
                "test_avep",
                f"p_at_{config.p_at_k}",
            ]
        )
        for name, method in report_dict["methods"].items():
            agg = method["aggregate"]

            def cell(key: str) -> str:
                entry = agg.get(key)
                if entry is None:
                    return "n/a"
                return _fmt(entry["mean"], entry["ci95"])

            retrieved = agg.get("avg_retrieved")
            writer.writerow(
                [
                    name,
                    "n/a" if retrieved is None else f"{round(retrieved['mean'], 3):.3f}",
                    cell("recall"),
                    cell("precision"),
                    cell("avep"),
                    cell("p_at_k"),
                ]
            )


def cmd_eval(args: argparse.Namespace) -> int:
    config = load_config(args)
    corpus = load_labeled_corpus(config)
    plan = make_folds(corpus, config.n_folds, config.seed)
    report = run_pipeline(
        corpus, config.method_specs(), plan, config.pipeline_config()
    )

    out_dir = Path(config.out)
    payload = {
        "config": config.to_dict(),
        "config_hash": config.hash(),
        "report": report.to_dict(),
    }
    _write_json(out_dir / "report.json", payload)
    _write_report_csv(out_dir / "report.csv", payload["report"], config)
    _write_json(
        out_dir / "timings.json",
        {"config_hash": config.hash(), "solve_times_s": report.solver_timings},
    )
    logger.info("wrote %s", out_dir / "report.json")
    return 0


def cmd_bench(args: argparse.Namespace) -> int:
    config = load_config(args)
    sizes = [int(s) for s in args.sizes.split(",")]
    if sizes != sorted(sizes):
        raise ConfigError("sizes must be ascending")
    corpus = load_labeled_corpus(config)
    all_docs = corpus.all_documents()
    rng = np.random.default_rng(config.seed)

    out_path = Path(config.out) / "bench.csv"
    out_path.parent.mkdir(parents=True, exist_ok=True)
    kind = ObjectiveKind(args.objective)
    bench_k = args.k if args.k is not None else 20
    bench_lam = 0.5 if args.lam in (None, "tune") else float(args.lam)
    rows = []
    for size in sizes:
        if size > len(all_docs):
            raise DataError(f"requested size {size} exceeds corpus ({len(all_docs)})")
        pick = rng.choice(len(all_docs), size=size, replace=False)
        sub_ids = {all_docs[i].id for i in pick}
        sub = subset_corpus(corpus, sub_ids)
        index = extract_features(sub, config.min_freq, config.exclude_labeling)
        nmis_table = build_nmis_table(index)
        spec = ObjectiveSpec(kind=kind, k=bench_k, lam=bench_lam)

        t0 = time.perf_counter()
        gsol = greedy(spec, index, nmis_table)
        rows.append([size, "greedy", time.perf_counter() - t0, gsol.objective_value])
        try:
            t0 = time.perf_counter()
            esol = exact(spec, index, nmis_table)
            rows.append([size, "exact", time.perf_counter() - t0, esol.objective_value])
        except SolverLimitError as exc:
            logger.warning("exact refused at size %d: %s", size, exc)
            rows.append([size, "exact_refused", 0.0, ""])

    with out_path.open("w", newline="", encoding="utf-8") as fh:
        fh.write(f"# config_hash: {config.hash()}\n")
        writer = csv.writer(fh)
        writer.writerow(["size", "solver", "seconds", "objective"])
        writer.writerows(rows)
    logger.info("wrote %s", out_path)
    return 0


def cmd_gen_synth(args: argparse.Namespace) -> int:
    corpus_path, tags_path = write_synthetic(
        args.out, n_docs=args.docs, pos_frac=args.pos_frac, seed=args.seed
    )
    _write_json(
        Path(args.out) / "meta.json",
        {
            "generator": "gen-synth",
            "docs": args.docs,
            "pos_frac": args.pos_frac,
            "seed": args.seed,
        },
    )
    logger.info("wrote %s and %s", corpus_path, tags_path)
    return 0


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit 1, not argparse's default 2
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--corpus", help="JSONL corpus path")
    p.add_argument("--hashtags", help="labeling-hashtag file")
    p.add_argument("--topic", help="topic name")
    p.add_argument("--min-freq", dest="min_freq", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--lang", help="language tag to keep (records without a tag pass)")
    p.add_argument("--out", help="output directory")
    p.add_argument("--methods", help="comma-separated method kinds")
    p.add_argument("--k", type=int, help="max features per query")
    p.add_argument("--lambda", dest="lam", help="lambda value or 'tune'")
    p.add_argument("--solver", choices=["greedy", "lazy", "exact"])
    p.add_argument("--char-budget", dest="char_budget", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="covquery", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p_solve = sub.add_parser("solve", help="solve queries on the full corpus")
    _add_common(p_solve)
    p_solve.add_argument("--render", action="store_true", help="print rendered queries")
    p_solve.set_defaults(func=cmd_solve)

    p_eval = sub.add_parser("eval", help="run the cross-validated pipeline")
    _add_common(p_eval)
    p_eval.add_argument("--n-folds", dest="n_folds", type=int)
    p_eval.add_argument("--p-at-k", dest="p_at_k", type=int)
    p_eval.set_defaults(func=cmd_eval)

    p_bench = sub.add_parser("bench", help="time greedy vs exact at growing sizes")
    _add_common(p_bench)
    p_bench.add_argument("--sizes", required=True, help="ascending doc counts, comma-separated")
    p_bench.add_argument("--objective", default="cilp", choices=["cilp", "wilp", "cailp"])
    p_bench.set_defaults(func=cmd_bench)

    p_gen = sub.add_parser("gen-synth", help="generate the planted synthetic corpus")
    p_gen.add_argument("--out", required=True)
    p_gen.add_argument("--docs", type=int, default=50_000)
    p_gen.add_argument("--pos-frac", dest="pos_frac", type=float, default=0.05)
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.set_defaults(func=cmd_gen_synth)
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(
        level=logging.INFO, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s"
    )
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        logger.error("%s", exc)
        return 1
    except DataError as exc:
        logger.error("%s", exc)
        return 2
    except SolverLimitError as exc:
        logger.error("%s", exc)
        return 3


if __name__ == "__main__":
    sys.exit(main())
