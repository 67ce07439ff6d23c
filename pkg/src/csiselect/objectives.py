"""Six monotone submodular base functions with dual-state memoization.

Every function kind maintains two incremental caches against the similarity
matrix: one for the selected set A (forward marginal gains f(e|A)) and one
for its complement C = V \\ A (removal gains f(C) - f(C \\ {e})). Gain queries
are pure reads of frozen caches and may run concurrently; commit mutates and
requires exclusive access.

Kinds: fl (facility location), gc (graph cut), logdet (log-determinant with
additive jitter), psc (probabilistic set cover), sc (saturated coverage),
fb (feature-based concave-over-modular).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular

from .errors import AlreadySelected, InvalidSpec, SingularSubmatrix

KINDS = ("fl", "gc", "logdet", "psc", "sc", "fb")
PSI_FUNCS = {"sqrt": np.sqrt, "log1p": np.log1p}

# Drift control: rebuild incrementally-maintained complement caches from
# scratch this often; LogDet also refactors whenever the tracked pivot degrades.
CACHE_REFRESH_EVERY = 64
LOGDET_PIVOT_FLOOR = 1e-10

# Default saturation threshold: this fraction of the mean total similarity.
SC_ALPHA_FRACTION = 0.25


@dataclass
class ObjectiveSpec:
    """Which base function to use and its parameters.

    alpha=None resolves to SC_ALPHA_FRACTION * mean_i sum_j s_ij at bind time.
    coverage_probs/features default to the similarity matrix itself.
    """

    kind: str
    lam: float = 0.5
    alpha: float | None = None
    psi: str = "sqrt"
    jitter: float = 1.0
    coverage_probs: np.ndarray | None = None
    features: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidSpec(f"unknown objective kind {self.kind!r}; expected one of {KINDS}")
        if self.lam < 0:
            raise InvalidSpec("lambda must be >= 0")
        if self.alpha is not None and not self.alpha > 0:
            raise InvalidSpec("alpha must be > 0")
        if self.psi not in PSI_FUNCS:
            raise InvalidSpec(f"psi must be one of {sorted(PSI_FUNCS)}")
        if self.jitter < 0:
            raise InvalidSpec("jitter must be >= 0")
        if self.coverage_probs is not None:
            p = np.asarray(self.coverage_probs, dtype=np.float64)
            if p.ndim != 2 or np.any(p < 0) or np.any(p > 1) or not np.all(np.isfinite(p)):
                raise InvalidSpec("coverage probabilities must be a finite matrix in [0, 1]")
            self.coverage_probs = p
        if self.features is not None:
            x = np.asarray(self.features, dtype=np.float64)
            if x.ndim != 2 or np.any(x < 0) or not np.all(np.isfinite(x)):
                raise InvalidSpec("feature activations must be a finite nonnegative matrix")
            self.features = x

    def to_dict(self, coverage_probs_path=None, features_path=None) -> dict:
        d = {
            "kind": self.kind,
            "lambda": self.lam,
            "alpha": self.alpha,
            "psi": self.psi,
            "jitter": self.jitter,
        }
        if coverage_probs_path is not None:
            d["coverage_probs_path"] = str(coverage_probs_path)
        if features_path is not None:
            d["features_path"] = str(features_path)
        return d

    @classmethod
    def from_dict(cls, d: dict, load_matrix=None) -> "ObjectiveSpec":
        """Inverse of to_dict; load_matrix(path) resolves optional matrix paths."""
        p = x = None
        if d.get("coverage_probs_path") and load_matrix is not None:
            p = load_matrix(d["coverage_probs_path"])
        if d.get("features_path") and load_matrix is not None:
            x = load_matrix(d["features_path"])
        return cls(
            kind=d["kind"],
            lam=d.get("lambda", 0.5),
            alpha=d.get("alpha"),
            psi=d.get("psi", "sqrt"),
            jitter=d.get("jitter", 1.0),
            coverage_probs=p,
            features=x,
        )


@dataclass
class BoundParams:
    """Spec parameters resolved against a concrete similarity matrix."""

    kind: str
    n: int
    S: np.ndarray | None
    lam: float
    alpha: float
    psi_name: str
    jitter: float
    p: np.ndarray | None
    x: np.ndarray | None

    @property
    def psi(self):
        return PSI_FUNCS[self.psi_name]


def bind_params(spec: ObjectiveSpec, S: np.ndarray | None) -> BoundParams:
    """Resolve defaults (alpha fraction, p = S, x = S) for one ground set."""
    if S is not None:
        S = np.asarray(S, dtype=np.float64)
        n = S.shape[0]
    elif spec.kind == "psc" and spec.coverage_probs is not None:
        n = spec.coverage_probs.shape[0]
    elif spec.kind == "fb" and spec.features is not None:
        n = spec.features.shape[0]
    else:
        raise InvalidSpec(f"kind {spec.kind!r} needs a similarity matrix")

    p = x = None
    alpha = spec.alpha if spec.alpha is not None else 0.0
    if spec.kind == "psc":
        p = spec.coverage_probs if spec.coverage_probs is not None else S
        if p is None:
            raise InvalidSpec("psc needs coverage probabilities or a similarity matrix")
        if p.shape[0] != n:
            raise InvalidSpec("coverage probability matrix row count mismatch")
    if spec.kind == "fb":
        x = spec.features if spec.features is not None else S
        if x is None:
            raise InvalidSpec("fb needs feature activations or a similarity matrix")
        if x.shape[0] != n:
            raise InvalidSpec("feature matrix row count mismatch")
    if spec.kind == "sc" and spec.alpha is None:
        if S is None:
            raise InvalidSpec("sc needs a similarity matrix to derive the default alpha")
        alpha = SC_ALPHA_FRACTION * float(S.sum()) / n
        if not alpha > 0:
            raise InvalidSpec("derived alpha is not positive; supply alpha explicitly")
    return BoundParams(spec.kind, n, S, spec.lam, alpha, spec.psi, spec.jitter, p, x)


def _as_index_array(A, n: int) -> np.ndarray:
    idx = np.asarray(sorted(set(int(a) for a in A)), dtype=np.int64)
    if idx.size and (idx[0] < 0 or idx[-1] >= n):
        raise InvalidSpec(f"index out of range for ground set of size {n}")
    return idx


def _chol_logdet(M: np.ndarray) -> float:
    if M.shape[0] == 0:
        return 0.0
    try:
        L = np.linalg.cholesky(M)
    except np.linalg.LinAlgError as exc:
        raise SingularSubmatrix(f"submatrix of size {M.shape[0]} is not positive definite") from exc
    return 2.0 * float(np.sum(np.log(np.diag(L))))


def base_eval(spec: ObjectiveSpec, S: np.ndarray | None, A) -> float:
    """From-scratch f(A); the reference the incremental caches are tested against."""
    P = bind_params(spec, S)
    idx = _as_index_array(A, P.n)
    if idx.size == 0:
        return 0.0
    if P.kind == "fl":
        return float(P.S[:, idx].max(axis=1).sum())
    if P.kind == "gc":
        return float(P.S[:, idx].sum() - P.lam * P.S[np.ix_(idx, idx)].sum())
    if P.kind == "logdet":
        M = P.S[np.ix_(idx, idx)].copy()
        M[np.diag_indices_from(M)] += P.jitter
        return _chol_logdet(M)
    if P.kind == "psc":
        q = np.prod(1.0 - P.p[:, idx], axis=1)
        return float(np.sum(1.0 - q))
    if P.kind == "sc":
        return float(np.minimum(P.alpha, P.S[:, idx].sum(axis=1)).sum())
    if P.kind == "fb":
        return float(P.psi(P.x[idx].sum(axis=0)).sum())
    raise AssertionError(P.kind)


# --- per-kind dual caches -----------------------------------------------------


class _FLCaches:
    def __init__(self, P: BoundParams):
        self.S = P.S
        n = P.n
        # forward: best similarity to A per point (0 for empty A)
        self.cur_max = np.zeros(n)
        # complement: top-2 over C per point, lowest index wins ties
        R = P.S.copy()
        self.top1_idx = R.argmax(axis=1)
        rows = np.arange(n)
        self.top1_val = R[rows, self.top1_idx].copy()
        R[rows, self.top1_idx] = -np.inf
        self.top2_idx = R.argmax(axis=1)
        self.top2_val = R[rows, self.top2_idx].copy()
        if n == 1:
            self.top2_idx[:] = -1
            self.top2_val[:] = 0.0

    def forward_gain(self, e: int) -> float:
        return float(np.maximum(self.S[:, e] - self.cur_max, 0.0).sum())

    def removal_gain(self, e: int) -> float:
        hit = self.top1_idx == e
        return float((self.top1_val[hit] - self.top2_val[hit]).sum())

    def forward_value(self) -> float:
        return float(self.cur_max.sum())

    def complement_value(self) -> float:
        return float(self.top1_val.sum())

    def _retop(self, rows: np.ndarray, comp: np.ndarray) -> None:
        for i in rows:
            sub = self.S[i, comp]
            if sub.size == 0:
                self.top1_idx[i] = self.top2_idx[i] = -1
                self.top1_val[i] = self.top2_val[i] = 0.0
                continue
            j1 = int(sub.argmax())
            self.top1_idx[i] = comp[j1]
            self.top1_val[i] = sub[j1]
            if sub.size == 1:
                self.top2_idx[i] = -1
                self.top2_val[i] = 0.0
            else:
                sub = sub.copy()
                sub[j1] = -np.inf
                j2 = int(sub.argmax())
                self.top2_idx[i] = comp[j2]
                self.top2_val[i] = sub[j2]

    def commit(self, e: int, comp_after: np.ndarray) -> None:
        np.maximum(self.cur_max, self.S[:, e], out=self.cur_max)
        affected = np.flatnonzero((self.top1_idx == e) | (self.top2_idx == e))
        self._retop(affected, comp_after)


class _GCCaches:
    def __init__(self, P: BoundParams):
        self.S = P.S
        self.lam = P.lam
        self.row_total = P.S.sum(axis=1)
        self.row_A = np.zeros(P.n)
        self.row_C = self.row_total.copy()
        self.sum_total_A = 0.0
        self.inner_A = 0.0
        self.sum_total_C = float(self.row_total.sum())
        self.inner_C = float(P.S.sum())

    def forward_gain(self, e: int) -> float:
        return float(self.row_total[e] - self.lam * (2.0 * self.row_A[e] + self.S[e, e]))

    def removal_gain(self, e: int) -> float:
        return float(self.row_total[e] - self.lam * (2.0 * self.row_C[e] - self.S[e, e]))

    def forward_value(self) -> float:
        return self.sum_total_A - self.lam * self.inner_A

    def complement_value(self) -> float:
        return self.sum_total_C - self.lam * self.inner_C

    def commit(self, e: int, comp_after: np.ndarray) -> None:
        self.sum_total_A += float(self.row_total[e])
        self.inner_A += float(2.0 * self.row_A[e] + self.S[e, e])
        self.sum_total_C -= float(self.row_total[e])
        self.inner_C -= float(2.0 * self.row_C[e] - self.S[e, e])
        self.row_A += self.S[:, e]
        self.row_C -= self.S[:, e]


class _LogDetCaches:
    def __init__(self, P: BoundParams):
        self.SP = P.S + P.jitter * np.eye(P.n)
        self.n = P.n
        # forward: growing Cholesky factor of SP[A, A] in commit order
        self.order: list[int] = []
        self.L = np.zeros((0, 0))
        self.fwd_logdet = 0.0
        # complement: inverse of SP[C, C] plus a running log-determinant
        self.pos_in_C = np.arange(P.n)
        self.inv_C: np.ndarray | None = None
        self.comp_logdet = 0.0
        self.commits_since_refactor = 0
        self._refactor(np.arange(P.n))

    def _refactor(self, comp: np.ndarray) -> None:
        m = comp.size
        if m == 0:
            self.inv_C = np.zeros((0, 0))
            self.comp_logdet = 0.0
            return
        M = self.SP[np.ix_(comp, comp)]
        try:
            L = np.linalg.cholesky(M)
        except np.linalg.LinAlgError as exc:
            raise SingularSubmatrix("complement submatrix is not positive definite") from exc
        Linv = solve_triangular(L, np.eye(m), lower=True, check_finite=False)
        self.inv_C = Linv.T @ Linv
        self.comp_logdet = 2.0 * float(np.sum(np.log(np.diag(L))))
        self.commits_since_refactor = 0

    def forward_gain(self, e: int) -> float:
        if not self.order:
            d = self.SP[e, e]
        else:
            idx = np.asarray(self.order)
            v = solve_triangular(self.L, self.SP[idx, e], lower=True, check_finite=False)
            d = self.SP[e, e] - float(v @ v)
        if d <= 0.0:
            raise SingularSubmatrix(f"adding element {e} makes the selected submatrix singular")
        return float(np.log(d))

    def removal_gain(self, e: int, comp: np.ndarray) -> float:
        pe = self.pos_in_C[e]
        piv = self.inv_C[pe, pe]
        if piv < LOGDET_PIVOT_FLOOR:
            self._refactor(comp)
            piv = self.inv_C[self.pos_in_C[e], self.pos_in_C[e]]
            if piv <= 0.0:
                raise SingularSubmatrix("complement inverse lost positive definiteness")
        return float(-np.log(piv))

    def forward_value(self) -> float:
        return self.fwd_logdet

    def complement_value(self) -> float:
        return self.comp_logdet

    def commit(self, e: int, comp_after: np.ndarray) -> None:
        # grow the forward factor by one row
        if not self.order:
            d = self.SP[e, e]
            v = np.zeros(0)
        else:
            idx = np.asarray(self.order)
            v = solve_triangular(self.L, self.SP[idx, e], lower=True, check_finite=False)
            d = self.SP[e, e] - float(v @ v)
        if d <= 0.0:
            raise SingularSubmatrix(f"adding element {e} makes the selected submatrix singular")
        m = len(self.order)
        L_new = np.zeros((m + 1, m + 1))
        L_new[:m, :m] = self.L
        L_new[m, :m] = v
        L_new[m, m] = np.sqrt(d)
        self.L = L_new
        self.order.append(e)
        self.fwd_logdet += float(np.log(d))

        # shrink the complement inverse by the Schur downdate
        pe = int(self.pos_in_C[e])
        piv = float(self.inv_C[pe, pe])
        self.commits_since_refactor += 1
        if piv < LOGDET_PIVOT_FLOOR or self.commits_since_refactor >= CACHE_REFRESH_EVERY:
            self.pos_in_C[comp_after] = np.arange(comp_after.size)
            self.pos_in_C[e] = -1
            self._refactor(comp_after)
            return
        self.comp_logdet -= float(-np.log(piv))
        keep = np.arange(self.inv_C.shape[0]) != pe
        col = self.inv_C[keep, pe]
        self.inv_C = self.inv_C[np.ix_(keep, keep)] - np.outer(col, col) / piv
        self.pos_in_C[comp_after] = np.arange(comp_after.size)
        self.pos_in_C[e] = -1


class _PSCCaches:
    def __init__(self, P: BoundParams):
        self.p = P.p
        n = P.n
        self.q_A = np.ones(n)
        # complement product split into exact count of p == 1 factors and the rest
        self.ones_count = np.count_nonzero(self.p == 1.0, axis=1).astype(np.int64)
        self.prod_nonone = np.prod(np.where(self.p < 1.0, 1.0 - self.p, 1.0), axis=1)
        self.comp_cols_committed = 0

    def forward_gain(self, e: int) -> float:
        return float((self.q_A * self.p[:, e]).sum())

    def removal_gain(self, e: int) -> float:
        pe = self.p[:, e]
        lt1 = pe < 1.0
        contrib = np.where(
            lt1 & (self.ones_count == 0),
            self.prod_nonone * pe / np.where(lt1, 1.0 - pe, 1.0),
            0.0,
        )
        contrib = np.where(~lt1 & (self.ones_count == 1), self.prod_nonone, contrib)
        return float(contrib.sum())

    def forward_value(self) -> float:
        return float(np.sum(1.0 - self.q_A))

    def complement_value(self) -> float:
        q_C = np.where(self.ones_count > 0, 0.0, self.prod_nonone)
        return float(np.sum(1.0 - q_C))

    def _refresh(self, comp: np.ndarray) -> None:
        sub = self.p[:, comp]
        self.ones_count = np.count_nonzero(sub == 1.0, axis=1).astype(np.int64)
        self.prod_nonone = np.prod(np.where(sub < 1.0, 1.0 - sub, 1.0), axis=1)

    def commit(self, e: int, comp_after: np.ndarray) -> None:
        pe = self.p[:, e]
        self.q_A *= 1.0 - pe
        is_one = pe == 1.0
        self.ones_count[is_one] -= 1
        self.prod_nonone[~is_one] /= 1.0 - pe[~is_one]
        self.comp_cols_committed += 1
        if self.comp_cols_committed % CACHE_REFRESH_EVERY == 0:
            self._refresh(comp_after)


class _SCCaches:
    def __init__(self, P: BoundParams):
        self.S = P.S
        self.alpha = P.alpha
        self.a = np.zeros(P.n)
        self.b = P.S.sum(axis=1)

    def forward_gain(self, e: int) -> float:
        se = self.S[:, e]
        return float((np.minimum(self.alpha, self.a + se) - np.minimum(self.alpha, self.a)).sum())

    def removal_gain(self, e: int) -> float:
        se = self.S[:, e]
        return float((np.minimum(self.alpha, self.b) - np.minimum(self.alpha, self.b - se)).sum())

    def forward_value(self) -> float:
        return float(np.minimum(self.alpha, self.a).sum())

    def complement_value(self) -> float:
        return float(np.minimum(self.alpha, self.b).sum())

    def commit(self, e: int, comp_after: np.ndarray) -> None:
        self.a += self.S[:, e]
        self.b -= self.S[:, e]


class _FBCaches:
    def __init__(self, P: BoundParams):
        self.x = P.x
        self.psi = P.psi
        self.c_A = np.zeros(P.x.shape[1])
        self.c_C = P.x.sum(axis=0)
        self.commits = 0

    def forward_gain(self, e: int) -> float:
        return float((self.psi(self.c_A + self.x[e]) - self.psi(self.c_A)).sum())

    def removal_gain(self, e: int) -> float:
        after = np.maximum(self.c_C - self.x[e], 0.0)
        return float((self.psi(self.c_C) - self.psi(after)).sum())

    def forward_value(self) -> float:
        return float(self.psi(self.c_A).sum())

    def complement_value(self) -> float:
        return float(self.psi(self.c_C).sum())

    def commit(self, e: int, comp_after: np.ndarray) -> None:
        self.c_A += self.x[e]
        np.maximum(self.c_C - self.x[e], 0.0, out=self.c_C)
        self.commits += 1
        # concave transforms amplify subtraction residue near zero; refresh often
        if comp_after.size == 0 or self.commits % 16 == 0:
            self.c_C = self.x[comp_after].sum(axis=0) if comp_after.size else np.zeros_like(self.c_C)


_CACHE_TYPES = {
    "fl": _FLCaches,
    "gc": _GCCaches,
    "logdet": _LogDetCaches,
    "psc": _PSCCaches,
    "sc": _SCCaches,
    "fb": _FBCaches,
}


@dataclass
class DualSelectionState:
    """Selected set A plus forward and complement caches for one objective."""

    spec: ObjectiveSpec
    params: BoundParams
    caches: object
    selected: list[int] = field(default_factory=list)
    in_set: np.ndarray = None  # type: ignore[assignment]

    @property
    def n(self) -> int:
        return self.params.n

    def contains(self, e: int) -> bool:
        return bool(self.in_set[e])

    def complement_indices(self) -> np.ndarray:
        return np.flatnonzero(~self.in_set)

    def _check_candidate(self, e: int) -> None:
        if e < 0 or e >= self.n:
            raise InvalidSpec(f"element {e} outside ground set of size {self.n}")
        if self.in_set[e]:
            raise AlreadySelected(e)


def build_dual_state(spec: ObjectiveSpec, S: np.ndarray | None) -> DualSelectionState:
    """Initialize A = empty, complement = V; caches represent both exactly."""
    P = bind_params(spec, S)
    if P.kind in ("fl", "gc", "logdet", "sc") and P.S is None:
        raise InvalidSpec(f"kind {P.kind!r} needs a similarity matrix")
    caches = _CACHE_TYPES[P.kind](P)
    return DualSelectionState(
        spec=spec, params=P, caches=caches, selected=[], in_set=np.zeros(P.n, dtype=bool)
    )


def forward_gain(state: DualSelectionState, e: int) -> float:
    """f(A + e) - f(A) from the forward cache."""
    state._check_candidate(e)
    return state.caches.forward_gain(e)


def complement_removal_gain(state: DualSelectionState, e: int) -> float:
    """f(C) - f(C - e) for C = V \\ A, from the complement cache."""
    state._check_candidate(e)
    if state.params.kind == "logdet":
        return state.caches.removal_gain(e, state.complement_indices())
    return state.caches.removal_gain(e)


def commit(state: DualSelectionState, e: int) -> None:
    """Move e from the complement into A, updating both caches incrementally."""
    state._check_candidate(e)
    state.in_set[e] = True
    comp_after = state.complement_indices()
    state.caches.commit(e, comp_after)
    state.selected.append(int(e))


def forward_value(state: DualSelectionState) -> float:
    """f(A) read off the forward cache."""
    return state.caches.forward_value()


def complement_value(state: DualSelectionState) -> float:
    """f(V \\ A) read off the complement cache."""
    return state.caches.complement_value()


class BaseObjective:
    """A monotone base function bound to a ground set, for the optimizer."""

    uses_complement = False

    def __init__(self, spec: ObjectiveSpec, S: np.ndarray | None):
        self.spec = spec
        self.S = None if S is None else np.asarray(S, dtype=np.float64)
        self.params = bind_params(spec, self.S)

    @property
    def n(self) -> int:
        return self.params.n

    @property
    def name(self) -> str:
        return self.spec.kind

    def fresh_state(self) -> DualSelectionState:
        return build_dual_state(self.spec, self.S)

    def gain(self, state: DualSelectionState, e: int) -> float:
        return forward_gain(state, e)

    def value_from_state(self, state: DualSelectionState) -> float:
        return forward_value(state)

    def eval_subset(self, A) -> float:
        return base_eval(self.spec, self.S, A)
