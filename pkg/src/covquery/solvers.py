"""Feature-subset solvers: greedy, lazy greedy, exact branch-and-bound, TopK.

All solvers maximize an :class:`~covquery.objectives.ObjectiveSpec` over
subsets of at most K features (optionally under a query character budget)
and return a :class:`QuerySolution`.
"""

from __future__ import annotations

import heapq
import logging
import time
from dataclasses import dataclass
from math import comb

import numpy as np

from . import bitsets
from .errors import SolverLimitError
from .features import CoverageIndex, Feature, coverage
from .objectives import ObjectiveKind, ObjectiveSpec, evaluate

logger = logging.getLogger(__name__)

# Safety margin for float-valued bound pruning; keeps branch-and-bound exact
# to well below the 1e-12 comparison tolerance.
_PRUNE_MARGIN = 1e-12


@dataclass
class QuerySolution:
    """A selected feature set with its achieved objective and coverage."""

    selected: list[int]
    features: list[Feature]
    objective_value: float
    pos_covered: int
    neg_covered: int
    solver: str
    solve_time: float  # seconds

    def to_dict(self, spec: ObjectiveSpec | None = None) -> dict:
        out = {
            "solver": self.solver,
            "spec": None
            if spec is None
            else {
                "kind": spec.kind.value,
                "k": spec.k,
                "lambda": spec.lam,
                "char_budget": spec.char_budget,
            },
            "selected": [[f.kind.value, f.value] for f in self.features],
            "objective_value": self.objective_value,
            "pos_covered": self.pos_covered,
            "neg_covered": self.neg_covered,
            "solve_time_ms": self.solve_time * 1000.0,
        }
        return out


@dataclass
class SearchLimits:
    """Instance-size limits for the exact solver."""

    max_features: int = 30
    max_subsets: int = 10_000_000
    max_nodes: int = 10_000_000


class _CoverState:
    """Incremental uncovered-document masks plus per-objective marginal gains."""

    def __init__(self, spec: ObjectiveSpec, index: CoverageIndex, nmis_table):
        self.spec = spec
        self.index = index
        self.nmis_table = nmis_table
        self.uncov_pos = bitsets.pack_bool(np.ones(index.n_pos, dtype=bool))
        self.track_neg = spec.kind is ObjectiveKind.CAILP
        if self.track_neg:
            self.uncov_neg = bitsets.pack_bool(np.ones(index.n_neg, dtype=bool))

    def gains_all(self) -> np.ndarray:
        """Marginal objective gain of every feature against the current state."""
        dpos = bitsets.masked_popcount_rows(self.index.pos_words, self.uncov_pos)
        kind = self.spec.kind
        if kind is ObjectiveKind.CILP:
            return dpos.astype(np.float64)
        if kind is ObjectiveKind.WILP:
            return dpos / self.index.n_pos + self.spec.lam * self.nmis_table
        dneg = bitsets.masked_popcount_rows(self.index.neg_words, self.uncov_neg)
        return dpos / self.index.n_pos - self.spec.lam * (dneg / self.index.n_neg)

    def gain_of(self, j: int) -> float:
        dpos = int(np.bitwise_count(self.index.pos_words[j] & self.uncov_pos).sum())
        kind = self.spec.kind
        if kind is ObjectiveKind.CILP:
            return float(dpos)
        if kind is ObjectiveKind.WILP:
            return dpos / self.index.n_pos + self.spec.lam * float(self.nmis_table[j])
        dneg = int(np.bitwise_count(self.index.neg_words[j] & self.uncov_neg).sum())
        return dpos / self.index.n_pos - self.spec.lam * (dneg / self.index.n_neg)

    def optimistic_gains(self, rows: np.ndarray) -> np.ndarray:
        """Admissible per-feature gain bounds: CAILP's negative penalty dropped."""
        dpos = bitsets.popcount_rows(self.index.pos_words[rows] & self.uncov_pos)
        kind = self.spec.kind
        if kind is ObjectiveKind.CILP:
            return dpos.astype(np.float64)
        if kind is ObjectiveKind.WILP:
            return dpos / self.index.n_pos + self.spec.lam * self.nmis_table[rows]
        return dpos / self.index.n_pos

    def add(self, j: int) -> None:
        self.uncov_pos &= ~self.index.pos_words[j]
        if self.track_neg:
            self.uncov_neg &= ~self.index.neg_words[j]

    def snapshot(self):
        return (
            self.uncov_pos.copy(),
            self.uncov_neg.copy() if self.track_neg else None,
        )

    def restore(self, snap) -> None:
        self.uncov_pos = snap[0]
        if self.track_neg:
            self.uncov_neg = snap[1]


def _finish(
    solver: str,
    spec: ObjectiveSpec,
    index: CoverageIndex,
    nmis_table,
    selected: list[int],
    t0: float,
) -> QuerySolution:
    pos_cov, neg_cov = coverage(index, selected)
    value = evaluate(spec, index, nmis_table, selected)
    return QuerySolution(
        selected=list(selected),
        features=[index.features[j] for j in selected],
        objective_value=value,
        pos_covered=pos_cov,
        neg_covered=neg_cov,
        solver=solver,
        solve_time=time.perf_counter() - t0,
    )


def greedy(
    spec: ObjectiveSpec, index: CoverageIndex, nmis_table=None
) -> QuerySolution:
    """Iteratively pick the feature with maximum marginal objective increase.

    Stops early when no remaining feasible feature has strictly positive
    gain.  Ties go to the lowest feature index.
    """
    state = _CoverState(spec, index, nmis_table)
    costs = np.array([f.char_cost for f in index.features], dtype=np.int64)
    budget = np.inf if spec.char_budget is None else spec.char_budget

    selected: list[int] = []
    t0 = time.perf_counter()
    spent = 0
    for _ in range(spec.k):
        gains = state.gains_all()
        gains[selected] = -np.inf
        gains[costs > budget - spent] = -np.inf
        best = int(np.argmax(gains))
        if not (gains[best] > 0.0):
            break
        selected.append(best)
        spent += int(costs[best])
        state.add(best)
    return _finish("greedy", spec, index, nmis_table, selected, t0)


def lazy_greedy(
    spec: ObjectiveSpec, index: CoverageIndex, nmis_table=None
) -> QuerySolution:
    """CELF-style accelerated greedy for the submodular objectives (CILP/WILP).

    Keeps stale marginal gains in a max-heap and re-evaluates only the top
    candidate; per-round selections match plain greedy including the
    lowest-index tie rule.
    """
    if spec.kind is ObjectiveKind.CAILP:
        raise ValueError("lazy_greedy requires a submodular objective (CILP or WILP)")

    state = _CoverState(spec, index, nmis_table)
    costs = np.array([f.char_cost for f in index.features], dtype=np.int64)
    budget = np.inf if spec.char_budget is None else spec.char_budget

    t0 = time.perf_counter()
    init = state.gains_all()
    heap = [(-g, j) for j, g in enumerate(init.tolist())]
    heapq.heapify(heap)

    selected: list[int] = []
    spent = 0
    while heap and len(selected) < spec.k:
        neg_g, j = heapq.heappop(heap)
        if costs[j] > budget - spent:
            continue  # budget only shrinks; never feasible again
        g = state.gain_of(j)
        if heap and (-g, j) > heap[0]:
            heapq.heappush(heap, (-g, j))
            continue
        if not (g > 0.0):
            break
        selected.append(j)
        spent += int(costs[j])
        state.add(j)
    return _finish("lazy_greedy", spec, index, nmis_table, selected, t0)


def exact(
    spec: ObjectiveSpec,
    index: CoverageIndex,
    nmis_table=None,
    limits: SearchLimits | None = None,
) -> QuerySolution:
    """Branch-and-bound over include/exclude decisions; exact on small instances.

    The bound at a node is the current value plus the sum of the top
    remaining standalone gains (admissible for CILP/WILP by submodularity;
    for CAILP the negative-coverage penalty is dropped from the bound).
    Instances beyond ``limits`` are refused, never silently approximated.
    """
    limits = limits or SearchLimits()
    n = index.n_features
    k_eff = min(spec.k, n)
    if n > limits.max_features and comb(n, k_eff) > limits.max_subsets:
        raise SolverLimitError(
            f"instance exceeds exact-solver limits: |F|={n} > {limits.max_features} "
            f"and C(|F|,K)={comb(n, k_eff)} > {limits.max_subsets}"
        )

    state = _CoverState(spec, index, nmis_table)
    costs = np.array([f.char_cost for f in index.features], dtype=np.int64)
    budget = np.inf if spec.char_budget is None else spec.char_budget
    is_cailp = spec.kind is ObjectiveKind.CAILP

    t0 = time.perf_counter()
    # Static branching order: standalone gain at the empty set, descending.
    root_gains = state.gains_all()
    order = np.lexsort((np.arange(n), -root_gains)).astype(np.intp)

    best_value = 0.0  # empty selection is always feasible
    best_set: list[int] = []
    nodes = 0

    # DFS over which ordered position to include next; depth is at most K.
    def dfs(start: int, chosen: list[int], value: float, spent: int) -> None:
        nonlocal best_value, best_set, nodes
        nodes += 1
        if nodes > limits.max_nodes:
            raise SolverLimitError(f"exact search exceeded max_nodes={limits.max_nodes}")
        if value > best_value:
            best_value = value
            best_set = list(chosen)

        slots = spec.k - len(chosen)
        if slots == 0 or start >= n:
            return

        rest = order[start:]
        feasible = rest[costs[rest] <= budget - spent]
        if feasible.size == 0:
            return
        opt = state.optimistic_gains(feasible)
        if slots < opt.size:
            top = np.partition(opt, opt.size - slots)[opt.size - slots :]
        else:
            top = opt
        bound = value + float(np.sum(top[top > 0]))
        if spec.kind is ObjectiveKind.CILP:
            # Integer arithmetic: a bound that cannot beat the incumbent is final.
            if bound <= best_value:
                return
        elif bound <= best_value - _PRUNE_MARGIN:
            return

        for pos in range(start, n):
            j = int(order[pos])
            if costs[j] > budget - spent:
                continue
            gain = state.gain_of(j)
            # For the monotone objectives a zero-gain feature can never help.
            if not is_cailp and gain <= 0.0:
                continue
            snap = state.snapshot()
            state.add(j)
            chosen.append(j)
            dfs(pos + 1, chosen, value + gain, spent + int(costs[j]))
            chosen.pop()
            state.restore(snap)

    dfs(0, [], 0.0, 0)
    logger.debug("exact solver explored %d nodes", nodes)
    return _finish("exact", spec, index, nmis_table, sorted(best_set), t0)


def topk_baseline(
    weights: np.ndarray,
    k: int,
    index: CoverageIndex,
    char_budget: int | None = None,
) -> QuerySolution:
    """Select the k largest-weight features (classifier weights), ties by index.

    The char budget, when set, is applied greedily in weight order.  The
    recorded objective value is the positive-coverage count of the selection.
    """
    weights = np.asarray(weights, dtype=np.float64)
    if weights.shape[0] != index.n_features:
        raise ValueError("weights must cover every feature in the index")

    t0 = time.perf_counter()
    order = np.lexsort((np.arange(index.n_features), -weights))
    budget = np.inf if char_budget is None else char_budget
    selected: list[int] = []
    spent = 0
    for j in order:
        if len(selected) >= k:
            break
        cost = index.features[j].char_cost
        if cost > budget - spent:
            continue
        selected.append(int(j))
        spent += cost

    spec = ObjectiveSpec(kind=ObjectiveKind.CILP, k=max(k, 1))
    sol = _finish("topk", spec, index, None, selected, t0)
    return sol
