"""Command line surface: dataset generation, selection, benchmark sweeps,
and complement-aware train/holdout splitting.

All randomness flows from one --seed through documented stages:
stage 0 = dataset generation (benchmark run i uses child [seed, 0, i]),
stage 1 = pairwise-distance subsampling for the sigma heuristic,
stages 2-4 = slice building / subsampling / injection (inside slices module).

Exit codes: 0 success, 2 configuration error, 3 numerical error, 4 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import struct
import sys
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import io as _io
from .csi import CsiObjective
from .errors import CsiSelectError, InvalidSpec, NumericalError
from .metrics import evaluate_run
from .objectives import BaseObjective, ObjectiveSpec
from .optimize import curvature_report, greedy, lazy_greedy, theorem_bounds
from .similarity import l2_normalize_rows, median_heuristic_sigma, rbf_kernel
from .slices import (
    SlicedDataset,
    assign_slice_roles,
    build_slices,
    inject_outliers,
    subsample_slices,
)
from .synthgen import SyntheticDataset, SyntheticSpec, default_paper_spec, generate, with_seed

# family order, base before complement-aware variant
OBJECTIVE_NAMES = (
    "fl", "flci", "gc", "gcci", "logdet", "logdetci",
    "psc", "pscci", "sc", "scci", "fb", "fbci",
)

METRIC_COLUMNS = (
    "minority_coverage_ratio",
    "outlier_rate",
    "kl_selected_vs_full",
    "kl_selected_vs_complement",
    "manifold_coverage_distance",
)


def derive_seed(master: int, *path: int) -> int:
    """Child seed for one pipeline stage; documented in the module docstring."""
    ss = np.random.SeedSequence([int(master), *[int(p) for p in path]])
    return int(ss.generate_state(1, np.uint64)[0])


def parse_objective_name(name: str) -> tuple[str, bool]:
    """'flci' -> ('fl', True); 'logdet' -> ('logdet', False)."""
    if name not in OBJECTIVE_NAMES:
        raise InvalidSpec(f"unknown objective {name!r}; expected one of {', '.join(OBJECTIVE_NAMES)}")
    if name.endswith("ci"):
        return name[:-2], True
    return name, False


@dataclass
class RunConfig:
    """Resolved settings for one selection run, embedded in provenance JSON."""

    objective: str
    k: int
    sigma: float | None
    lam: float
    alpha: float | None
    psi: str
    jitter: float
    seed: int
    lazy: bool
    stop_on_negative: bool
    l2_normalized: bool

    def to_dict(self) -> dict:
        return asdict(self)


def _load_embeddings(path: str) -> np.ndarray:
    p = Path(path)
    if p.suffix == ".bin":
        return _io.read_matrix_bin(p)
    return _io.read_embeddings_csv(p)


def _load_dataset(path: str):
    """Dataset CSV with metadata; sliced if it has a slice column, else synthetic."""
    _, meta = _io.read_dataset_csv(path)
    if "slice" in meta:
        return SlicedDataset.read_csv(path)
    if "cluster" in meta:
        return SyntheticDataset.read_csv(path)
    raise InvalidSpec(f"{path}: neither a synthetic nor a sliced dataset CSV")


def _similarity_for(E: np.ndarray, sigma: float | None, seed: int,
                    cache_dir: Path | None = None) -> tuple[np.ndarray, float]:
    if sigma is None:
        sigma = median_heuristic_sigma(E, seed=derive_seed(seed, 1))
    if cache_dir is not None:
        digest = hashlib.sha256(E.tobytes() + struct.pack("<d", sigma)).hexdigest()[:16]
        cache_file = cache_dir / f"sim_{digest}.bin"
        if cache_file.exists():
            return _io.read_matrix_bin(cache_file), sigma
        S = rbf_kernel(E, sigma)
        _io.write_matrix_bin(cache_file, S)
        return S, sigma
    return rbf_kernel(E, sigma), sigma


def _make_spec(kind: str, args) -> ObjectiveSpec:
    p = _io.read_matrix_bin(args.coverage_probs) if getattr(args, "coverage_probs", None) else None
    x = _io.read_matrix_bin(args.features) if getattr(args, "features", None) else None
    return ObjectiveSpec(
        kind=kind,
        lam=args.gc_lambda,
        alpha=args.alpha,
        psi=args.psi,
        jitter=args.jitter,
        coverage_probs=p,
        features=x,
    )


def _make_objective(name: str, args, S: np.ndarray):
    kind, use_csi = parse_objective_name(name)
    spec = _make_spec(kind, args)
    return CsiObjective(spec, S) if use_csi else BaseObjective(spec, S)


def _resolve_budget(args, n: int) -> int:
    if getattr(args, "k", None) is not None:
        return args.k
    frac = getattr(args, "fraction", None)
    if frac is None:
        raise InvalidSpec("one of --k or --fraction is required")
    if not 0.0 < frac < 1.0:
        raise InvalidSpec("--fraction must lie in (0, 1)")
    return max(1, int(round(frac * n)))


def _run_selection(objective, k: int, lazy: bool, stop_on_negative: bool):
    algo = lazy_greedy if lazy else greedy
    return algo(objective, k, stop_on_negative=stop_on_negative)


# --- subcommands ---------------------------------------------------------------


def cmd_gen_synthetic(args) -> int:
    if args.spec:
        spec = SyntheticSpec.from_dict(_io.read_json(args.spec))
    else:
        spec = default_paper_spec()
    if args.seed is not None:
        spec = with_seed(spec, args.seed)
    ds = generate(spec)
    out = _io.ensure_dir(args.out)
    ds.write_csv(out / "dataset.csv")
    _io.write_json(out / "spec.json", spec.to_dict())
    print(f"wrote {ds.n} points to {out / 'dataset.csv'}")
    return 0


def cmd_select(args) -> int:
    out = _io.ensure_dir(args.out)
    if args.dataset:
        dataset = _load_dataset(args.dataset)
        E = dataset.embeddings
    else:
        dataset = None
        E = _load_embeddings(args.embeddings)
    if args.l2_normalize:
        E = l2_normalize_rows(E)

    if args.similarity:
        S = _io.read_matrix_bin(args.similarity)
        sigma = args.sigma
    else:
        cache_dir = _io.ensure_dir(args.cache_dir) if args.cache_similarity else None
        S, sigma = _similarity_for(E, args.sigma, args.seed, cache_dir)

    k = _resolve_budget(args, S.shape[0])
    names = [s.strip() for s in args.objective.split(",") if s.strip()]
    if not names:
        raise InvalidSpec("no objectives given")
    provenance = {"command": "select", "n": int(S.shape[0]), "objectives": names}
    cfg = None
    for name in names:
        objective = _make_objective(name, args, S)
        selected, trace = _run_selection(objective, k, not args.naive, args.stop_on_negative)
        kind, use_csi = parse_objective_name(name)
        base = BaseObjective(_make_spec(kind, args), S)
        curv = curvature_report(base, k)
        bounds = theorem_bounds(trace, curv)
        cfg = RunConfig(
            objective=name, k=k, sigma=sigma, lam=args.gc_lambda, alpha=args.alpha,
            psi=args.psi, jitter=args.jitter, seed=args.seed,
            lazy=not args.naive, stop_on_negative=args.stop_on_negative,
            l2_normalized=args.l2_normalize,
        )
        _io.write_indices_txt(out / f"{name}_selected.txt", selected)
        _io.write_json(out / f"{name}_trace.json", trace.to_dict())
        _io.write_json(
            out / f"{name}_report.json",
            {"config": cfg.to_dict(), "curvature": curv.to_dict(), "bounds": bounds.to_dict()},
        )
        print(f"{name}: selected {len(selected)} of {S.shape[0]} "
              f"(value {trace.final_value:.6f}, {trace.n_gain_evaluations} gain evals)")
    provenance["config"] = cfg.to_dict()
    _io.write_json(out / "provenance.json", provenance)
    return 0


def cmd_benchmark(args) -> int:
    out = _io.ensure_dir(args.out)
    runs_dir = _io.ensure_dir(out / "runs")
    names = list(OBJECTIVE_NAMES) if args.objectives == "all" else [
        s.strip() for s in args.objectives.split(",") if s.strip()
    ]
    for name in names:
        parse_objective_name(name)

    if args.dataset:
        fixed = _load_dataset(args.dataset)
        run_seeds = [0]
    else:
        fixed = None
        run_seeds = list(range(args.seeds))

    rows = {name: {c: [] for c in METRIC_COLUMNS} for name in names}
    for i in run_seeds:
        if fixed is not None:
            dataset = fixed
        else:
            spec = with_seed(default_paper_spec(), derive_seed(args.seed, 0, i))
            dataset = generate(spec)
        E = dataset.embeddings
        sigma = args.sigma
        if sigma is None:
            sigma = median_heuristic_sigma(E, seed=derive_seed(args.seed, 1, i))
        S = rbf_kernel(E, sigma)
        k = _resolve_budget(args, S.shape[0])
        for name in sorted(names):
            objective = _make_objective(name, args, S)
            selected, trace = _run_selection(objective, k, not args.naive, args.stop_on_negative)
            report = evaluate_run(
                dataset, selected, objective=name, seed=i, budget=k, sigma=sigma
            )
            for c in METRIC_COLUMNS:
                rows[name][c].append(getattr(report, c))
            _io.write_json(
                runs_dir / f"{name}_seed{i}.json",
                {"metrics": report.to_dict(), "trace": trace.to_dict()},
            )

    csv_path = out / "benchmark.csv"
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["method", *METRIC_COLUMNS])
        for name in names:
            w.writerow([name] + [f"{float(np.mean(rows[name][c])):.6f}" for c in METRIC_COLUMNS])
    _io.write_json(out / "provenance.json", {
        "command": "benchmark",
        "objectives": names,
        "seeds": run_seeds,
        "master_seed": args.seed,
        "fraction": args.fraction,
        "k": args.k,
        "dataset": args.dataset,
    })
    print(f"wrote {csv_path}")
    return 0


def cmd_split(args) -> int:
    out = _io.ensure_dir(args.out)
    E = _load_embeddings(args.embeddings)
    if args.l2_normalize:
        E = l2_normalize_rows(E)

    dataset = None
    if args.build_slices:
        if not args.labels:
            raise InvalidSpec("--build-slices needs --labels")
        y = _io.read_labels_csv(args.labels)
        dataset = build_slices(E, y, args.k_per_class, seed=args.seed)
        assign_slice_roles(dataset)
        if args.subsample:
            dataset = subsample_slices(dataset, seed=args.seed)
        if args.rho_out > 0 or args.noise_frac > 0:
            dataset = inject_outliers(dataset, args.rho_out, args.noise_frac, seed=args.seed)
        E = dataset.embeddings
        dataset.write_csv(out / "sliced_dataset.csv")

    S, sigma = _similarity_for(E, args.sigma, args.seed)
    k = _resolve_budget(args, S.shape[0])
    objective = _make_objective(args.objective, args, S)
    selected, trace = _run_selection(objective, k, not args.naive, args.stop_on_negative)
    comp = sorted(set(range(S.shape[0])) - set(selected))
    _io.write_indices_txt(out / "selected.txt", selected)
    _io.write_indices_txt(out / "complement.txt", comp)
    result = {
        "command": "split",
        "objective": args.objective,
        "k": k,
        "n": int(S.shape[0]),
        "sigma": sigma,
        "seed": args.seed,
    }
    if dataset is not None and dataset.slice_roles:
        report = evaluate_run(dataset, selected, objective=args.objective, budget=k)
        _io.write_json(out / "metrics.json", report.to_dict())
        result["metrics_written"] = True
    _io.write_json(out / "provenance.json", result)
    _io.write_json(out / "trace.json", trace.to_dict())
    print(f"split: {len(selected)} selected / {len(comp)} held out")
    return 0


# --- argument parsing ------------------------------------------------------------


def _add_objective_params(p: argparse.ArgumentParser) -> None:
    p.add_argument("--gc-lambda", type=float, default=0.5,
                   help="graph-cut redundancy weight (method-defined default 0.5: "
                        "makes the complement-aware form equal the plain similarity cut)")
    p.add_argument("--alpha", type=float, default=None,
                   help="saturation threshold (heuristic default: 0.25 x mean total similarity)")
    p.add_argument("--psi", choices=("sqrt", "log1p"), default="sqrt",
                   help="concave feature transform (heuristic default sqrt)")
    p.add_argument("--jitter", type=float, default=1.0,
                   help="diagonal added before log-determinants (heuristic default 1.0, "
                        "keeps jittered kernels well conditioned and monotone)")
    p.add_argument("--coverage-probs", default=None,
                   help="binary matrix file of coverage probabilities (default: similarities)")
    p.add_argument("--features", default=None,
                   help="binary matrix file of feature activations (default: similarities)")


def _add_kernel_params(p: argparse.ArgumentParser) -> None:
    p.add_argument("--sigma", type=float, default=None,
                   help="RBF bandwidth (heuristic default: median pairwise distance)")
    p.add_argument("--l2-normalize", action="store_true",
                   help="scale embedding rows to unit norm before the kernel")


def _add_selection_params(p: argparse.ArgumentParser) -> None:
    p.add_argument("--k", type=int, default=None, help="selection budget")
    p.add_argument("--fraction", type=float, default=None,
                   help="budget as a fraction of the ground set")
    p.add_argument("--naive", action="store_true",
                   help="plain rescan greedy instead of the accelerated variant")
    p.add_argument("--stop-on-negative", action="store_true",
                   help="stop before the budget once every remaining gain is negative")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="csiselect",
        description="Complement-aware submodular subset selection",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-synthetic", help="generate a clustered synthetic dataset")
    g.add_argument("--default", action="store_true",
                   help="use the built-in 675-point head/medium/tail configuration")
    g.add_argument("--spec", default=None, help="JSON spec file (overrides --default)")
    g.add_argument("--seed", type=int, default=None, help="override the spec seed")
    g.add_argument("--out", required=True, help="output directory")
    g.set_defaults(func=cmd_gen_synthetic)

    s = sub.add_parser("select", help="run one or more objectives on embeddings")
    src = s.add_mutually_exclusive_group(required=True)
    src.add_argument("--embeddings", default=None, help="CSV or binary embeddings file")
    src.add_argument("--dataset", default=None, help="dataset CSV with metadata columns")
    s.add_argument("--similarity", default=None, help="precomputed binary similarity matrix")
    s.add_argument("--objective", default="flci",
                   help=f"comma list from: {', '.join(OBJECTIVE_NAMES)}")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--cache-similarity", action="store_true",
                   help="cache the kernel to a content-addressed sidecar file")
    s.add_argument("--cache-dir", default=".", help="directory for cached kernels")
    s.add_argument("--out", required=True)
    _add_kernel_params(s)
    _add_objective_params(s)
    _add_selection_params(s)
    s.set_defaults(func=cmd_select)

    b = sub.add_parser("benchmark", help="objective x seed sweep with the metric suite")
    b.add_argument("--dataset", default=None,
                   help="fixed dataset CSV (otherwise synthetic datasets are generated per seed)")
    b.add_argument("--objectives", default="all",
                   help="'all' or a comma list of objective names")
    b.add_argument("--seeds", type=int, default=10, help="number of generated datasets")
    b.add_argument("--seed", type=int, default=0, help="master seed")
    b.add_argument("--out", required=True)
    _add_kernel_params(b)
    _add_objective_params(b)
    _add_selection_params(b)
    b.set_defaults(fraction=0.1)
    b.set_defaults(func=cmd_benchmark)

    sp = sub.add_parser("split", help="complement-aware train/holdout split")
    sp.add_argument("--embeddings", required=True)
    sp.add_argument("--labels", default=None, help="per-point integer class labels CSV")
    sp.add_argument("--objective", default="flci")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--build-slices", action="store_true",
                    help="cluster classes into hidden slices before selecting")
    sp.add_argument("--k-per-class", type=int, default=5,
                    help="slices per class (heuristic default 5)")
    sp.add_argument("--subsample", action="store_true",
                    help="apply head/medium/tail retention 1.0/0.5/0.15 (method-defined)")
    sp.add_argument("--rho-out", type=float, default=0.0,
                    help="fraction of shell outliers to inject (heuristic default 0.05 when used)")
    sp.add_argument("--noise-frac", type=float, default=0.0,
                    help="fraction of points to perturb (heuristic default 0.05 when used)")
    sp.add_argument("--out", required=True)
    _add_kernel_params(sp)
    _add_objective_params(sp)
    _add_selection_params(sp)
    sp.set_defaults(func=cmd_split)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3
    except CsiSelectError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
