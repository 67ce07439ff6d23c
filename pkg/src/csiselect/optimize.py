"""Cardinality-constrained greedy maximization with bound reporting.

Both greedy variants tie-break by lowest index everywhere, so the accelerated
(lazy) variant returns the exact same sequence as the naive rescan. The brute
force maximizer and the curvature estimators are oracles for the shift-bound
checks; they stay on the from-scratch evaluation path.
"""

from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass, field
from itertools import combinations

from .errors import (
    AllSingletonsZero,
    BudgetExceedsGroundSet,
    InstanceTooLarge,
    InvalidSpec,
)
from .objectives import commit as state_commit

SINGLETON_FLOOR = 1e-12
BRUTE_FORCE_MAX_SUBSETS = 1_000_000
RESTRICTED_CURVATURE_MAX_N = 16


@dataclass
class TraceStep:
    index: int
    gain: float
    value: float


@dataclass
class GreedyTrace:
    steps: list[TraceStep]
    budget: int
    wall_time: float
    n_gain_evaluations: int
    algorithm: str
    stopped_early: bool = False

    @property
    def selected(self) -> list[int]:
        return [s.index for s in self.steps]

    @property
    def final_value(self) -> float:
        return self.steps[-1].value if self.steps else 0.0

    def to_dict(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "budget": self.budget,
            "wall_time": self.wall_time,
            "n_gain_evaluations": self.n_gain_evaluations,
            "stopped_early": self.stopped_early,
            "steps": [
                {"index": s.index, "gain": s.gain, "value": s.value} for s in self.steps
            ],
        }


def _check_budget(objective, k: int) -> None:
    if not 1 <= k <= objective.n:
        raise BudgetExceedsGroundSet(
            f"budget {k} outside [1, {objective.n}] for this ground set"
        )


def greedy(objective, k: int, stop_on_negative: bool = False):
    """Plain greedy: full candidate rescan each round, lowest index wins ties."""
    _check_budget(objective, k)
    t0 = time.perf_counter()
    state = objective.fresh_state()
    steps: list[TraceStep] = []
    evals = 0
    stopped = False
    for _ in range(k):
        best_gain = -math.inf
        best_e = -1
        for e in range(objective.n):
            if state.contains(e):
                continue
            g = objective.gain(state, e)
            evals += 1
            if g > best_gain:
                best_gain, best_e = g, e
        if stop_on_negative and best_gain < 0.0:
            stopped = True
            break
        state_commit(state, best_e)
        steps.append(TraceStep(best_e, best_gain, objective.value_from_state(state)))
    trace = GreedyTrace(steps, k, time.perf_counter() - t0, evals, "greedy", stopped)
    return trace.selected, trace


def lazy_greedy(objective, k: int, stop_on_negative: bool = False):
    """Accelerated greedy on a max-heap of stale gain upper bounds.

    A popped entry is committed only once its refreshed gain beats the next
    heap head (strictly, or by lower index on exact ties); stale bounds stay
    valid upper bounds by submodularity of the gain.
    """
    _check_budget(objective, k)
    t0 = time.perf_counter()
    state = objective.fresh_state()
    steps: list[TraceStep] = []
    evals = 0
    stopped = False

    heap: list[tuple[float, int, int]] = []
    for e in range(objective.n):
        heap.append((-objective.gain(state, e), e, 0))
        evals += 1
    heapq.heapify(heap)

    round_no = 0
    while len(steps) < k and heap:
        neg_g, e, stamp = heapq.heappop(heap)
        if stamp == round_no:
            g = -neg_g
        else:
            g = objective.gain(state, e)
            evals += 1
            if heap:
                head_g, head_e = -heap[0][0], heap[0][1]
                if not (g > head_g or (g == head_g and e < head_e)):
                    heapq.heappush(heap, (-g, e, round_no))
                    continue
        if stop_on_negative and g < 0.0:
            stopped = True
            break
        state_commit(state, e)
        steps.append(TraceStep(e, g, objective.value_from_state(state)))
        round_no += 1
    trace = GreedyTrace(steps, k, time.perf_counter() - t0, evals, "lazy_greedy", stopped)
    return trace.selected, trace


def _count_subsets(n: int, k: int) -> int:
    total = 0
    for m in range(k + 1):
        total += math.comb(n, m)
        if total > BRUTE_FORCE_MAX_SUBSETS:
            return total
    return total


def brute_force_max(objective, k: int):
    """Exact maximizer over all subsets of size <= k (guarded enumeration)."""
    _check_budget(objective, k)
    n = objective.n
    if _count_subsets(n, k) > BRUTE_FORCE_MAX_SUBSETS:
        raise InstanceTooLarge(f"more than {BRUTE_FORCE_MAX_SUBSETS} subsets for n={n}, k={k}")
    best_set: tuple[int, ...] = ()
    best_val = objective.eval_subset(())
    for m in range(1, k + 1):
        for A in combinations(range(n), m):
            v = objective.eval_subset(A)
            if v > best_val:
                best_val, best_set = v, A
    return list(best_set), float(best_val)


def _singleton_and_removal_gains(objective):
    from .objectives import complement_removal_gain, forward_gain

    state = objective.fresh_state()
    n = objective.n
    singles = [forward_gain(state, e) for e in range(n)]
    removals = [complement_removal_gain(state, e) for e in range(n)]
    return singles, removals


def estimate_curvature_global(base_objective) -> float:
    """1 - min_e f(e | V-e) / f({e}); near-zero singletons are skipped."""
    singles, removals = _singleton_and_removal_gains(base_objective)
    ratios = [r / s for s, r in zip(singles, removals) if s > SINGLETON_FLOOR]
    if not ratios:
        raise AllSingletonsZero("every singleton value is numerically zero")
    return float(min(1.0, max(0.0, 1.0 - min(ratios))))


def curvature_exact_restricted(base_objective, k: int) -> float:
    """1 - min over |A| < k, e not in A of f(e|A)/f({e}), by enumeration."""
    n = base_objective.n
    if n > RESTRICTED_CURVATURE_MAX_N:
        raise InstanceTooLarge(
            f"restricted curvature enumeration capped at n={RESTRICTED_CURVATURE_MAX_N}"
        )
    _check_budget(base_objective, k)
    singles = [base_objective.eval_subset((e,)) for e in range(n)]
    usable = [e for e in range(n) if singles[e] > SINGLETON_FLOOR]
    if not usable:
        raise AllSingletonsZero("every singleton value is numerically zero")
    min_ratio = 1.0
    for m in range(k):
        for A in combinations(range(n), m):
            fa = base_objective.eval_subset(A)
            a_set = set(A)
            for e in usable:
                if e in a_set:
                    continue
                ratio = (base_objective.eval_subset(A + (e,)) - fa) / singles[e]
                if ratio < min_ratio:
                    min_ratio = ratio
    return float(min(1.0, max(0.0, 1.0 - min_ratio)))


@dataclass
class CurvatureReport:
    kappa_k: float
    kappa_global: float
    kappa_source: str  # "restricted_exact" or "global_upper_bound"
    max_singleton: float
    budget: int
    skipped_singletons: list[int] = field(default_factory=list)

    @property
    def epsilon(self) -> float:
        kappa = self.kappa_k if self.kappa_source == "restricted_exact" else self.kappa_global
        return kappa * self.max_singleton

    @property
    def slack(self) -> float:
        return self.budget * self.epsilon / math.e

    def to_dict(self) -> dict:
        return {
            "kappa_k": self.kappa_k,
            "kappa_global": self.kappa_global,
            "kappa_source": self.kappa_source,
            "max_singleton": self.max_singleton,
            "budget": self.budget,
            "epsilon": self.epsilon,
            "slack": self.slack,
            "skipped_singletons": self.skipped_singletons,
        }


def curvature_report(base_objective, k: int, allow_exact: bool = True) -> CurvatureReport:
    """Bundle curvature estimates; restricted curvature only when enumerable."""
    singles, _ = _singleton_and_removal_gains(base_objective)
    skipped = [e for e, s in enumerate(singles) if s <= SINGLETON_FLOOR]
    kappa_global = estimate_curvature_global(base_objective)
    exact_ok = allow_exact and base_objective.n <= RESTRICTED_CURVATURE_MAX_N
    if exact_ok:
        # the global value is a mathematical upper bound; keep float noise out
        kappa_k = min(curvature_exact_restricted(base_objective, k), kappa_global)
        source = "restricted_exact"
    else:
        kappa_k = kappa_global
        source = "global_upper_bound"
    return CurvatureReport(
        kappa_k=kappa_k,
        kappa_global=kappa_global,
        kappa_source=source,
        max_singleton=float(max(singles)),
        budget=k,
        skipped_singletons=skipped,
    )


@dataclass
class BoundReport:
    epsilon: float
    slack: float
    greedy_value: float
    opt_value: float | None = None
    bound_rhs: float | None = None
    holds: bool | None = None

    def to_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "slack": self.slack,
            "greedy_value": self.greedy_value,
            "opt_value": self.opt_value,
            "bound_rhs": self.bound_rhs,
            "holds": self.holds,
        }


def theorem_bounds(
    trace: GreedyTrace, curvature: CurvatureReport, opt: float | None = None
) -> BoundReport:
    """Near-(1 - 1/e) guarantee report: greedy >= (1 - 1/e) OPT - k*eps/e."""
    eps = curvature.epsilon
    slack = curvature.slack
    gv = trace.final_value
    if opt is None:
        return BoundReport(eps, slack, gv)
    rhs = (1.0 - 1.0 / math.e) * opt - slack
    return BoundReport(eps, slack, gv, opt, rhs, bool(gv >= rhs - 1e-8))


def min_observed_gain(trace: GreedyTrace) -> float:
    """Smallest committed gain; empirical check of approximate monotonicity."""
    if not trace.steps:
        raise InvalidSpec("trace is empty")
    return min(s.gain for s in trace.steps)
