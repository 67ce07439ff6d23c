import json
import math

import numpy as np
import pytest

from helpers import ALL_KINDS, S3, make_spec, rbf_instance

from csiselect.csi import CsiObjective, csi_eval
from csiselect.errors import (
    AllSingletonsZero,
    BudgetExceedsGroundSet,
    InstanceTooLarge,
)
from csiselect.objectives import BaseObjective
from csiselect.optimize import (
    brute_force_max,
    curvature_exact_restricted,
    curvature_report,
    estimate_curvature_global,
    greedy,
    lazy_greedy,
    min_observed_gain,
    theorem_bounds,
)


def csi_obj(kind, S, **kw):
    return CsiObjective(make_spec(kind, **kw), S)


# --- greedy -----------------------------------------------------------------------

def test_greedy_modular_tie_break():
    obj = csi_obj("fl", np.eye(6))
    selected, trace = greedy(obj, 3)
    assert selected == [0, 1, 2]
    assert all(s.gain == pytest.approx(0.0, abs=1e-12) for s in trace.steps)


def test_greedy_k1_matches_exhaustive_scan():
    obj = csi_obj("fl", S3)
    selected, trace = greedy(obj, 1)
    values = {e: csi_eval(make_spec("fl"), S3, [e]) for e in range(3)}
    best = min(e for e, v in values.items() if v == max(values.values()))
    assert selected == [best] == [1]
    assert trace.final_value == pytest.approx(values[best])


@pytest.mark.parametrize("kind", ALL_KINDS)
def test_trace_telescopes(kind):
    rng = np.random.default_rng(3)
    S = rbf_instance(rng, 20)
    _, trace = greedy(csi_obj(kind, S), 8)
    prev = 0.0
    for step in trace.steps:
        assert step.value == pytest.approx(prev + step.gain, rel=1e-6, abs=1e-9)
        prev = step.value
    assert len(trace.steps) == 8


def test_greedy_budget_validation():
    obj = csi_obj("fl", S3)
    with pytest.raises(BudgetExceedsGroundSet):
        greedy(obj, 4)
    with pytest.raises(BudgetExceedsGroundSet):
        greedy(obj, 0)


def test_greedy_fills_budget_through_negative_gains():
    rng = np.random.default_rng(5)
    S = rbf_instance(rng, 12)
    selected, trace = greedy(csi_obj("gc", S), 12)
    assert len(selected) == 12  # negative late gains still committed
    assert trace.final_value == pytest.approx(0.0, abs=1e-8)
    assert min_observed_gain(trace) < 0


def test_stop_on_negative_flag():
    rng = np.random.default_rng(5)
    S = rbf_instance(rng, 12)
    selected, trace = greedy(csi_obj("gc", S), 12, stop_on_negative=True)
    assert trace.stopped_early
    assert len(selected) < 12
    assert all(s.gain >= 0 for s in trace.steps)


# --- lazy greedy ---------------------------------------------------------------------

@pytest.mark.parametrize("kind", ALL_KINDS)
def test_lazy_equals_naive(kind):
    rng = np.random.default_rng(11)
    for _ in range(8):
        n = int(rng.integers(8, 61))
        k = int(rng.integers(1, min(n, 21)))
        S = rbf_instance(rng, n)
        a, _ = greedy(csi_obj(kind, S), k)
        b, trace = lazy_greedy(csi_obj(kind, S), k)
        assert a == b
        assert trace.n_gain_evaluations <= n * k


def test_lazy_modular_first_pick_scans_everything():
    n = 9
    _, trace = lazy_greedy(csi_obj("fl", np.eye(n)), 1)
    assert trace.n_gain_evaluations == n
    assert trace.selected == [0]


def test_lazy_much_cheaper_than_naive():
    rng = np.random.default_rng(13)
    S = rbf_instance(rng, 80)
    _, naive = greedy(csi_obj("fl", S), 20)
    _, lazy = lazy_greedy(csi_obj("fl", S), 20)
    assert lazy.n_gain_evaluations < naive.n_gain_evaluations


def test_traces_are_deterministic():
    rng = np.random.default_rng(17)
    S = rbf_instance(rng, 25)
    _, t1 = lazy_greedy(csi_obj("logdet", S), 10)
    _, t2 = lazy_greedy(csi_obj("logdet", S), 10)
    d1, d2 = t1.to_dict(), t2.to_dict()
    d1.pop("wall_time"), d2.pop("wall_time")
    assert json.dumps(d1, sort_keys=True) == json.dumps(d2, sort_keys=True)


# --- brute force ----------------------------------------------------------------------

def test_brute_force_k1_enumerates_singletons():
    best, val = brute_force_max(csi_obj("fl", S3), 1)
    assert best == [1]
    assert val == pytest.approx(csi_eval(make_spec("fl"), S3, [1]))


def test_brute_force_optimum_over_all_sizes():
    rng = np.random.default_rng(19)
    S = rbf_instance(rng, 7)
    obj = csi_obj("fl", S)
    best, val = brute_force_max(obj, 7)
    # k = n allows A = V (value 0); optimum is over every size <= k
    assert val >= 0.0
    sizes = [m for m in range(8)]
    explicit = max(
        obj.eval_subset(A)
        for m in sizes
        for A in __import__("itertools").combinations(range(7), m)
    )
    assert val == pytest.approx(explicit)


def test_brute_force_symmetric_pairs():
    rng = np.random.default_rng(23)
    S = rbf_instance(rng, 8)
    obj = csi_obj("sc", S)
    best, val = brute_force_max(obj, 8)
    comp = [i for i in range(8) if i not in best]
    assert obj.eval_subset(comp) == pytest.approx(val, rel=1e-9, abs=1e-9)


def test_brute_force_guard():
    rng = np.random.default_rng(29)
    S = rbf_instance(rng, 40)
    with pytest.raises(InstanceTooLarge):
        brute_force_max(csi_obj("fl", S), 20)


# --- curvature -------------------------------------------------------------------------

def test_global_curvature_modular_zero():
    obj = BaseObjective(make_spec("fl"), np.eye(5))
    assert estimate_curvature_global(obj) == pytest.approx(0.0, abs=1e-12)


def test_global_curvature_fl_hand():
    # 1 - min_e f(e | V-e)/f({e}) on the 3x3 matrix: ratios 0.5/1.7, 0.5/1.9, 0.6/1.6
    obj = BaseObjective(make_spec("fl"), S3)
    assert estimate_curvature_global(obj) == pytest.approx(1.0 - 0.5 / 1.9, rel=1e-12)


def test_global_curvature_all_zero_singletons():
    spec = make_spec("psc", coverage_probs=np.zeros((4, 4)))
    with pytest.raises(AllSingletonsZero):
        estimate_curvature_global(BaseObjective(spec, None))


def test_restricted_curvature_k1_zero():
    rng = np.random.default_rng(31)
    obj = BaseObjective(make_spec("fl"), rbf_instance(rng, 8))
    assert curvature_exact_restricted(obj, 1) == pytest.approx(0.0, abs=1e-12)


def test_restricted_curvature_modular_zero():
    obj = BaseObjective(make_spec("fl"), np.eye(6))
    for k in (1, 2, 4):
        assert curvature_exact_restricted(obj, k) == pytest.approx(0.0, abs=1e-12)


def test_restricted_curvature_monotone_in_k_and_below_global():
    rng = np.random.default_rng(37)
    S = rbf_instance(rng, 10)
    obj = BaseObjective(make_spec("fl"), S)
    kappas = [curvature_exact_restricted(obj, k) for k in range(1, 6)]
    assert all(a <= b + 1e-12 for a, b in zip(kappas, kappas[1:]))
    assert kappas[-1] <= estimate_curvature_global(obj) + 1e-12


def test_restricted_curvature_size_guard():
    rng = np.random.default_rng(41)
    obj = BaseObjective(make_spec("fl"), rbf_instance(rng, 20))
    with pytest.raises(InstanceTooLarge):
        curvature_exact_restricted(obj, 3)


def test_curvature_report_fields():
    rng = np.random.default_rng(43)
    S = rbf_instance(rng, 10)
    obj = BaseObjective(make_spec("fl"), S)
    rep = curvature_report(obj, 4)
    assert rep.kappa_source == "restricted_exact"
    assert 0.0 <= rep.kappa_k <= rep.kappa_global <= 1.0
    assert rep.epsilon == pytest.approx(rep.kappa_k * rep.max_singleton)
    assert rep.slack == pytest.approx(4 * rep.epsilon / math.e)
    big = BaseObjective(make_spec("fl"), rbf_instance(rng, 30))
    rep2 = curvature_report(big, 4)
    assert rep2.kappa_source == "global_upper_bound"
    assert rep2.kappa_k == rep2.kappa_global


# --- theorem checks ----------------------------------------------------------------------

def test_bounds_modular_case():
    S = np.eye(6)
    obj = csi_obj("fl", S)
    _, trace = greedy(obj, 3)
    rep = curvature_report(BaseObjective(make_spec("fl"), S), 3)
    _, opt = brute_force_max(obj, 3)
    bounds = theorem_bounds(trace, rep, opt)
    assert bounds.epsilon == pytest.approx(0.0, abs=1e-12)
    assert bounds.holds
    assert trace.final_value == pytest.approx(opt, abs=1e-12) == pytest.approx(0.0, abs=1e-12)
    assert min_observed_gain(trace) == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("kind", ALL_KINDS)
def test_greedy_bound_random_instances(kind):
    rng = np.random.default_rng(47)
    for _ in range(3):
        n = int(rng.integers(8, 13))
        k = int(rng.integers(2, 4))
        S = rbf_instance(rng, n)
        obj = csi_obj(kind, S)
        _, trace = greedy(obj, k)
        rep = curvature_report(BaseObjective(make_spec(kind), S), k)
        _, opt = brute_force_max(obj, k)
        bounds = theorem_bounds(trace, rep, opt)
        assert bounds.holds, f"{kind}: greedy {trace.final_value} vs rhs {bounds.bound_rhs}"


def test_min_observed_gain_vs_epsilon():
    rng = np.random.default_rng(53)
    S = rbf_instance(rng, 11)
    obj = csi_obj("gc", S)
    _, trace = greedy(obj, 4)
    rep = curvature_report(BaseObjective(make_spec("gc"), S), 4)
    assert min_observed_gain(trace) >= -rep.epsilon - 1e-8


def test_classical_guarantee_on_base_objective():
    # sanity anchor: monotone base greedy achieves (1 - 1/e) OPT
    rng = np.random.default_rng(59)
    for _ in range(5):
        n = int(rng.integers(8, 13))
        k = int(rng.integers(2, 5))
        obj = BaseObjective(make_spec("fl"), rbf_instance(rng, n))
        _, trace = greedy(obj, k)
        _, opt = brute_force_max(obj, k)
        assert trace.final_value >= (1 - 1 / math.e) * opt - 1e-9
