"""Complement-aware submodular subset selection.

Core pieces: RBF similarity construction, six monotone submodular base
functions with dual (selected/complement) memoization, the complement
information transform and its closed forms, greedy and lazy-greedy
maximization with curvature-based bound reports, a synthetic benchmark
generator, a hidden-slice pipeline, and the structural metric suite.
"""

from .csi import (
    CsiObjective,
    csi_eval,
    csi_gain,
    fbci_closed,
    flci_closed,
    gcci_closed,
    logdetci_closed,
    pscci_closed,
    scci_closed,
)
from .errors import CsiSelectError
from .metrics import MetricsReport, evaluate_run
from .objectives import (
    BaseObjective,
    DualSelectionState,
    ObjectiveSpec,
    base_eval,
    build_dual_state,
    commit,
    complement_removal_gain,
    forward_gain,
)
from .optimize import (
    BoundReport,
    CurvatureReport,
    GreedyTrace,
    brute_force_max,
    curvature_exact_restricted,
    curvature_report,
    estimate_curvature_global,
    greedy,
    lazy_greedy,
    min_observed_gain,
    theorem_bounds,
)
from .similarity import (
    l2_normalize_rows,
    median_heuristic_sigma,
    rbf_kernel,
    validate_similarity,
)
from .synthgen import SyntheticDataset, SyntheticSpec, default_paper_spec, generate

__version__ = "0.1.0"

__all__ = [
    "BaseObjective",
    "BoundReport",
    "CsiObjective",
    "CsiSelectError",
    "CurvatureReport",
    "DualSelectionState",
    "GreedyTrace",
    "MetricsReport",
    "ObjectiveSpec",
    "SyntheticDataset",
    "SyntheticSpec",
    "base_eval",
    "brute_force_max",
    "build_dual_state",
    "commit",
    "complement_removal_gain",
    "csi_eval",
    "csi_gain",
    "curvature_exact_restricted",
    "curvature_report",
    "default_paper_spec",
    "estimate_curvature_global",
    "evaluate_run",
    "fbci_closed",
    "flci_closed",
    "forward_gain",
    "gcci_closed",
    "generate",
    "greedy",
    "l2_normalize_rows",
    "lazy_greedy",
    "logdetci_closed",
    "median_heuristic_sigma",
    "min_observed_gain",
    "pscci_closed",
    "rbf_kernel",
    "scci_closed",
    "theorem_bounds",
    "validate_similarity",
]
