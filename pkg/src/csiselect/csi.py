"""Complement-information transform g(A) = f(A) + f(V \\ A) - f(V).

csi_eval/csi_gain run through the generic transform on top of the objectives
module. The *_closed evaluators are deliberately naive, independent
implementations of the per-kind closed forms; they exist as oracles for the
memoized path and are never used by the optimizer.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidSpec
from .objectives import (
    DualSelectionState,
    ObjectiveSpec,
    PSI_FUNCS,
    _chol_logdet,
    base_eval,
    bind_params,
    build_dual_state,
    complement_removal_gain,
    complement_value,
    forward_gain,
    forward_value,
)


def csi_eval(spec: ObjectiveSpec, S: np.ndarray | None, A) -> float:
    """g(A) = f(A) + f(V \\ A) - f(V), evaluated from scratch."""
    P = bind_params(spec, S)
    idx = set(int(a) for a in A)
    comp = [i for i in range(P.n) if i not in idx]
    if not idx or not comp:
        return 0.0
    return base_eval(spec, S, idx) + base_eval(spec, S, comp) - base_eval(spec, S, range(P.n))


def csi_gain(state: DualSelectionState, e: int) -> float:
    """g(e|A) = f(e|A) - f(e | V \\ (A + e)), from the memoized caches."""
    return forward_gain(state, e) - complement_removal_gain(state, e)


def csi_value_from_state(state: DualSelectionState, total: float) -> float:
    """g(A) assembled from the caches, given the precomputed f(V)."""
    if not state.selected or len(state.selected) == state.n:
        return 0.0
    return forward_value(state) + complement_value(state) - total


class CsiObjective:
    """A complement-aware objective bound to a ground set, for the optimizer."""

    uses_complement = True

    def __init__(self, spec: ObjectiveSpec, S: np.ndarray | None):
        self.spec = spec
        self.S = None if S is None else np.asarray(S, dtype=np.float64)
        self.params = bind_params(spec, self.S)
        self._total = base_eval(spec, self.S, range(self.params.n))

    @property
    def n(self) -> int:
        return self.params.n

    @property
    def name(self) -> str:
        return self.spec.kind + "ci"

    def fresh_state(self) -> DualSelectionState:
        return build_dual_state(self.spec, self.S)

    def gain(self, state: DualSelectionState, e: int) -> float:
        return csi_gain(state, e)

    def value_from_state(self, state: DualSelectionState) -> float:
        return csi_value_from_state(state, self._total)

    def eval_subset(self, A) -> float:
        return csi_eval(self.spec, self.S, A)


# --- closed forms (naive oracles) ---------------------------------------------


def _split(n: int, A) -> tuple[np.ndarray, np.ndarray]:
    aidx = np.asarray(sorted(set(int(a) for a in A)), dtype=np.int64)
    mask = np.zeros(n, dtype=bool)
    mask[aidx] = True
    return np.flatnonzero(mask), np.flatnonzero(~mask)


def flci_closed(S: np.ndarray, A) -> float:
    """Sum over points of min(best similarity into A, best into the complement)."""
    S = np.asarray(S, dtype=np.float64)
    idx, comp = _split(S.shape[0], A)
    if idx.size == 0 or comp.size == 0:
        return 0.0
    return float(np.minimum(S[:, idx].max(axis=1), S[:, comp].max(axis=1)).sum())


def gcci_closed(S: np.ndarray, A, lam: float = 0.5) -> float:
    """2*lambda times the similarity cut between A and its complement."""
    S = np.asarray(S, dtype=np.float64)
    idx, comp = _split(S.shape[0], A)
    if idx.size == 0 or comp.size == 0:
        return 0.0
    return float(2.0 * lam * S[np.ix_(idx, comp)].sum())


def logdetci_closed(S: np.ndarray, A, jitter: float = 1.0) -> float:
    """logdet(S'_A) + logdet(S'_C) - logdet(S'_V) with S' = S + jitter*I."""
    S = np.asarray(S, dtype=np.float64)
    n = S.shape[0]
    idx, comp = _split(n, A)
    if idx.size == 0 or comp.size == 0:
        return 0.0
    SP = S + jitter * np.eye(n)

    def ld(rows):
        return _chol_logdet(SP[np.ix_(rows, rows)])

    return ld(idx) + ld(comp) - ld(np.arange(n))


def pscci_closed(p: np.ndarray, A) -> float:
    """Sum over points of (coverage by A) * (coverage by the complement)."""
    p = np.asarray(p, dtype=np.float64)
    idx, comp = _split(p.shape[0], A)
    if idx.size == 0 or comp.size == 0:
        return 0.0
    cov_A = 1.0 - np.prod(1.0 - p[:, idx], axis=1)
    cov_C = 1.0 - np.prod(1.0 - p[:, comp], axis=1)
    return float((cov_A * cov_C).sum())


def scci_closed(S: np.ndarray, A, alpha: float) -> float:
    """Sum over points of min(a_i, b_i, alpha, (a_i + b_i - alpha)_+)."""
    if not alpha > 0:
        raise InvalidSpec("alpha must be > 0")
    S = np.asarray(S, dtype=np.float64)
    idx, comp = _split(S.shape[0], A)
    if idx.size == 0 or comp.size == 0:
        return 0.0
    a = S[:, idx].sum(axis=1)
    b = S[:, comp].sum(axis=1)
    sat = np.maximum(a + b - alpha, 0.0)
    return float(np.minimum(np.minimum(a, b), np.minimum(alpha, sat)).sum())


def fbci_closed(x: np.ndarray, A, psi="sqrt") -> float:
    """Per-feature psi(sum over A) + psi(sum over complement) - psi(sum over all).

    psi may be a tag from the objective spec or any concave callable.
    """
    if callable(psi):
        f = psi
    elif psi in PSI_FUNCS:
        f = PSI_FUNCS[psi]
    else:
        raise InvalidSpec(f"psi must be callable or one of {sorted(PSI_FUNCS)}")
    x = np.asarray(x, dtype=np.float64)
    idx, comp = _split(x.shape[0], A)
    if idx.size == 0 or comp.size == 0:
        return 0.0
    return float((f(x[idx].sum(axis=0)) + f(x[comp].sum(axis=0)) - f(x.sum(axis=0))).sum())


def closed_form_eval(spec: ObjectiveSpec, S: np.ndarray | None, A) -> float:
    """Dispatch to the matching closed form using the spec's resolved parameters."""
    P = bind_params(spec, S)
    if P.kind == "fl":
        return flci_closed(P.S, A)
    if P.kind == "gc":
        return gcci_closed(P.S, A, P.lam)
    if P.kind == "logdet":
        return logdetci_closed(P.S, A, P.jitter)
    if P.kind == "psc":
        return pscci_closed(P.p, A)
    if P.kind == "sc":
        return scci_closed(P.S, A, P.alpha)
    if P.kind == "fb":
        return fbci_closed(P.x, A, P.psi_name)
    raise AssertionError(P.kind)
