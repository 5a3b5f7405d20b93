"""Command-line entry point.

Every subcommand reads an optional JSON config, writes its artifacts under
``<out>/<command>/<tag>/`` together with ``manifest.json``, and exits with
0 (success), 2 (bad config), 3 (solver did not converge) or 4 (I/O error).
Outputs are staged in a scratch directory and only moved into place when the
command succeeds.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import platform
import shutil
import sys
import tempfile
from pathlib import Path

import numpy as np
import scipy

from . import __version__, metrics
from .baseline import KMeansConfig, kmeans, rp_kmeans
from .bounds import (
    COARSENING, PERFECT, check_assumption3, epsilon_thresholds_logk, epsilon_thresholds_logn,
    gamma_bounds, recovery_interval_logk, recovery_interval_logn, weight_terms,
)
from .config import ExperimentConfig
from .dataset import (
    UNBALANCED_SIZES, MixtureSpec, generate_mixture, load_csv, save_csv,
    unbalanced_fixture,
)
from .exceptions import AssumptionError, CSVParseError, ParameterError, SpecError
from .path import detect_perfect_recovery, parse_grid, sweep
from .projection import (
    SubgaussianProfile, build_difference_sets, conditional_recovery_probability,
    embedding_dim_logk, embedding_dim_logn, sample_projection, union_bound_probability,
    verify_centroids, verify_pairwise, verify_within,
)
from .solver import ProblemInstance, extract_partition, solve
from .weights import check_assumption2, knn_gaussian_weights, oracle_experiment_graph, uniform_weights

log = logging.getLogger("rpcc")

EXIT_OK, EXIT_CONFIG, EXIT_NOCONV, EXIT_IO = 0, 2, 3, 4


class NonConvergence(RuntimeError):
    pass


# ---------------------------------------------------------------- helpers

def _data(cfg: ExperimentConfig):
    d = cfg.data
    if d.source == "csv":
        X, truth = load_csv(d.csv, has_labels=d.has_labels, header=d.header)
        return X, truth
    if d.source == "unbalanced":
        sizes = tuple(d.sizes) if d.sizes else UNBALANCED_SIZES
        return unbalanced_fixture(d=d.d, sizes=sizes, sigma2=d.sigma2, seed=cfg.seed)
    spec = MixtureSpec.basis(d.d, d.K, d.sigma2, d.n, cfg.seed, d.balanced)
    return generate_mixture(spec)


def _need_truth(truth):
    if truth is None:
        raise SpecError([("data.has_labels", "this command needs ground-truth labels")])
    return truth


def _graph(cfg, X, truth):
    w = cfg.weights
    if w.mode == "uniform":
        return uniform_weights(X.shape[0])
    if w.k >= X.shape[0]:
        raise SpecError([("weights.k", f"must be below the number of points ({X.shape[0]})")])
    if w.mode == "oracle":
        return oracle_experiment_graph(X, _need_truth(truth), w.k, w.phi)
    return knn_gaussian_weights(X, w.k, w.phi)


def _profile(cfg):
    return SubgaussianProfile(cfg.bounds.c_kappa_sq, cfg.bounds.t)


def _target_dim(cfg, n, K):
    p = cfg.projection
    if p.m is not None:
        return p.m
    if p.epsilon is None:
        raise SpecError([("projection.m", "give m or epsilon")])
    if p.dim_rule == "logk":
        return embedding_dim_logk(p.epsilon, K, p.C)
    return embedding_dim_logn(p.epsilon, n, p.C)


def _finite(x):
    """JSON-safe scalars: infinities become strings."""
    if isinstance(x, dict):
        return {k: _finite(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_finite(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else ("inf" if x > 0 else "-inf" if x < 0 else "nan")
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def _dump(path, obj):
    Path(path).write_text(json.dumps(_finite(obj), indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _write_rows(path, header, rows):
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def _metric_row(part, truth):
    if truth is None:
        return {}
    return {
        "RI": metrics.rand_index(part, truth),
        "ARI": metrics.adjusted_rand_index(part, truth),
        "accuracy": metrics.accuracy(part, truth),
    }


def _check_path(path):
    bad = [p for p in path.points if not p.success]
    if bad:
        raise NonConvergence(
            "solver did not reach the gap tolerance at gamma = "
            + ", ".join(f"{p.gamma:g}" for p in bad))


# ---------------------------------------------------------------- commands

def cmd_gen(cfg, out):
    X, truth = _data(cfg)
    save_csv(out / "data.csv", X, truth)
    return {"n": X.shape[0], "d": X.shape[1], "K": None if truth is None else truth.K}


def cmd_weights(cfg, out):
    X, truth = _data(cfg)
    g = _graph(cfg, X, truth)
    g.to_csv(out / "weights.csv")
    info = {"n": g.n, "edges": g.n_edges, "mode": cfg.weights.mode}
    if truth is not None:
        rep = check_assumption2(g, truth)
        info["assumption2"] = {"holds": rep.holds, "margin": rep.margin,
                               "worst_pair": rep.worst_pair, "all_positive": rep.all_positive}
    _dump(out / "weights.json", info)
    return info


def cmd_project(cfg, out):
    X, truth = _data(cfg)
    K = truth.K if truth is not None else 1
    m = _target_dim(cfg, X.shape[0], K)
    pi = sample_projection(m, X.shape[1], cfg.projection.family, cfg.projection.seed)
    np.savetxt(out / "projection.csv", pi.values, delimiter=",", fmt="%.17g")
    save_csv(out / "embedded.csv", pi.apply(X), truth)
    info = {"m": m, "d": pi.d, "family": pi.family, "seed": cfg.projection.seed}
    _dump(out / "projection.json", info)
    return info


def _maybe_project(cfg, X, truth):
    """Embed ``X`` when the config names a target dimension, else return it unchanged."""
    p = cfg.projection
    if p.m is None and p.epsilon is None:
        return X, None
    m = _target_dim(cfg, X.shape[0], truth.K if truth is not None else 1)
    pi = sample_projection(m, X.shape[1], p.family, p.seed)
    return pi.apply(X), pi


def cmd_solve(cfg, out):
    X, truth = _data(cfg)
    g = _graph(cfg, X, truth)
    Y, pi = _maybe_project(cfg, X, truth)
    s = cfg.solver
    res = solve(ProblemInstance(Y, g, s.gamma), tol=s.tol, max_iter=s.max_iter, rho=s.rho)
    if not res.success:
        raise NonConvergence(f"gap {res.rel_gap:.3e} above tolerance after {res.iterations} iterations")
    part = extract_partition(res, s.tau_merge)
    np.savetxt(out / "centers.csv", res.X, delimiter=",", fmt="%.17g")
    np.savetxt(out / "partition.csv", part.labels, fmt="%d")
    info = dict(res.summary(), K_found=part.K, m=None if pi is None else pi.m, **_metric_row(part, truth))
    _dump(out / "solution.json", info)
    return {k: v for k, v in info.items() if k != "fused_edges"}


def cmd_path(cfg, out):
    X, truth = _data(cfg)
    g = _graph(cfg, X, truth)
    Y, pi = _maybe_project(cfg, X, truth)
    s = cfg.solver
    path = sweep(Y, g, parse_grid(cfg.grid), truth, s.tol, s.max_iter, s.rho, s.tau_merge)
    _check_path(path)
    path.to_csv(out / "path.csv")
    info = {"points": len(path.points), "m": None if pi is None else pi.m,
            "provenance": path.provenance}
    if truth is not None:
        info["recovery"] = detect_perfect_recovery(path, truth).as_dict()
    _dump(out / "path.json", info)
    return info


def _bounds_doc(cfg, X, truth, g):
    n, d = X.shape
    b = cfg.bounds
    prof = _profile(cfg)
    gb = gamma_bounds(X, g, truth)
    doc = {"n": n, "d": d, "K": truth.K, "gamma": gb.as_dict(),
           "assumption3": check_assumption3(n, truth.K)}
    rep = check_assumption2(g, truth)
    doc["assumption2"] = {"holds": rep.holds, "margin": rep.margin, "worst_pair": rep.worst_pair}
    try:
        doc["log_n"] = epsilon_thresholds_logn(gb.r, d, n, b.C, gb.r2).as_dict()
    except ParameterError as exc:
        doc["log_n"] = {"error": str(exc)}
    try:
        doc["log_K"] = epsilon_thresholds_logk(gb.r, d, truth.K, b.C_logk, prof, gb.r2).as_dict()
    except ParameterError as exc:
        doc["log_K"] = {"error": str(exc)}
    rows = []
    for eps in b.epsilons:
        m_n = embedding_dim_logn(eps, n, b.C)
        m_k = embedding_dim_logk(eps, truth.K, b.C_logk)
        row = {"epsilon": eps, "m_logn": m_n, "m_logK": m_k}
        for kind in (PERFECT, COARSENING):
            row[f"logn_{kind}"] = recovery_interval_logn(gb, eps, kind).as_dict()
            if m_k <= d:
                row[f"logK_{kind}"] = recovery_interval_logk(gb, eps, m_k, d, prof, kind).as_dict()
        rows.append(row)
    doc["intervals"] = rows
    sets = build_difference_sets(X, truth)
    general, by_n = conditional_recovery_probability(sets.N1, max(sets.N2, 0), b.p, n)
    doc["probability"] = {
        "N1": sets.N1, "N2": sets.N2, "p": b.p, "conditional": general, "conditional_by_n": by_n,
        "singular_values": prof.probability,
    }
    total = sets.N1 + sets.N2
    delta = float(total) ** (-b.p)
    doc["probability"]["union"] = union_bound_probability([total], delta)
    return doc


def cmd_bounds(cfg, out):
    X, truth = _data(cfg)
    truth = _need_truth(truth)
    g = _graph(cfg, X, truth)
    doc = _bounds_doc(cfg, X, truth, g)
    _dump(out / "bounds.json", doc)
    return {"gamma_min": doc["gamma"]["gamma_min"], "gamma_max": doc["gamma"]["gamma_max"]}


def cmd_verify_jl(cfg, out):
    """Success rates of pairwise, within-cluster and centroid preservation over many draws."""
    X, truth = _data(cfg)
    truth = _need_truth(truth)
    p = cfg.projection
    if p.epsilon is None:
        raise SpecError([("projection.epsilon", "required by verify-jl")])
    m = _target_dim(cfg, X.shape[0], truth.K)
    sets = build_difference_sets(X, truth)
    ss = np.random.SeedSequence(p.seed)
    hits = np.zeros(3, dtype=int)
    for child in ss.spawn(p.trials):
        pi = sample_projection(m, X.shape[1], p.family, child)
        hits += [verify_pairwise(pi, X, p.epsilon).all_preserved,
                 verify_within(pi, sets, p.epsilon).all_preserved,
                 verify_centroids(pi, sets, p.epsilon).all_preserved]
    n = X.shape[0]
    pairs = n * (n - 1) // 2
    delta = 2.0 / n ** 3
    row = {
        "epsilon": p.epsilon, "m": m, "trials": p.trials,
        "p_XA": pairs, "XA_rate": hits[0] / p.trials,
        "p_XV": sets.N1, "XV_rate": hits[1] / p.trials,
        "p_XC": sets.N2, "XC_rate": hits[2] / p.trials,
        "XC_given_XV_bound": conditional_recovery_probability(sets.N1, sets.N2, 3, n)[1],
        "delta": delta,
    }
    _write_rows(out / "jl.csv", list(row), [list(row.values())])
    _dump(out / "jl.json", row)
    return row


def cmd_kmeans(cfg, out):
    X, truth = _data(cfg)
    K = cfg.kmeans.K or (truth.K if truth is not None else None)
    if K is None:
        raise SpecError([("kmeans.K", "required when the data has no labels")])
    kc = KMeansConfig(K, cfg.kmeans.max_iter, cfg.kmeans.replicates, cfg.seed)
    Y, pi = _maybe_project(cfg, X, truth)
    part, inertia = kmeans(Y, kc)
    np.savetxt(out / "partition.csv", part.labels, fmt="%d")
    info = {"K": K, "inertia": inertia, "m": None if pi is None else pi.m, **_metric_row(part, truth)}
    _dump(out / "kmeans.json", info)
    return info


def cmd_compare(cfg, out):
    """Recovery by the projected convex model against projected K-means over several ``m``."""
    X, truth = _data(cfg)
    truth = _need_truth(truth)
    g = _graph(cfg, X, truth)
    p, s = cfg.projection, cfg.solver
    m_list = p.m_list or ([p.m] if p.m else [])
    if not m_list:
        raise SpecError([("projection.m_list", "required by compare")])
    grid = parse_grid(cfg.grid)
    K = cfg.kmeans.K or truth.K
    rows, summary = [], []
    for m in m_list:
        rec, aris_cc, aris_km = 0, [], []
        for k, child in enumerate(np.random.SeedSequence([p.seed, m]).spawn(cfg.seeds)):
            pi = sample_projection(m, X.shape[1], p.family, child)
            path = sweep(pi.apply(X), g, grid, truth, s.tol, s.max_iter, s.rho, s.tau_merge)
            _check_path(path)
            report = detect_perfect_recovery(path, truth)
            best = path.best()
            part, _ = rp_kmeans(X, pi, KMeansConfig(K, cfg.kmeans.max_iter, cfg.kmeans.replicates,
                                                     cfg.seed + k))
            km_ari = metrics.adjusted_rand_index(part, truth)
            recovered = bool(report.gammas)
            rec += recovered
            aris_cc.append(best.adjusted_rand_index)
            aris_km.append(km_ari)
            rows.append([m, k, int(recovered), "%.10f" % best.adjusted_rand_index,
                         "%.10f" % best.rand_index, "%.10f" % km_ari,
                         "%.10f" % metrics.rand_index(part, truth)])
        summary.append({"m": m, "seeds": cfg.seeds, "rpccm_recovered": rec,
                        "rpccm_best_ARI_mean": float(np.mean(aris_cc)),
                        "rp_kmeans_ARI_mean": float(np.mean(aris_km))})
    _write_rows(out / "compare.csv",
                ["m", "seed", "rpccm_recovered", "rpccm_best_ARI", "rpccm_best_RI",
                 "rp_kmeans_ARI", "rp_kmeans_RI"], rows)
    _dump(out / "compare.json", {"K_kmeans": K, "summary": summary})
    return {"summary": summary}


COMMANDS = {
    "gen": cmd_gen, "weights": cmd_weights, "project": cmd_project, "solve": cmd_solve,
    "path": cmd_path, "bounds": cmd_bounds, "verify-jl": cmd_verify_jl, "kmeans": cmd_kmeans,
    "compare": cmd_compare,
}

HELP = {
    "gen": "sample a dataset and write it as CSV",
    "weights": "build the fusion graph and check the weight assumption",
    "project": "draw a projection and embed the data",
    "solve": "solve the clustering model at one gamma",
    "path": "sweep a gamma grid and report perfect recovery",
    "bounds": "gamma bounds, distortion window and recovery intervals",
    "verify-jl": "distance preservation rates over many projections",
    "kmeans": "K-means (optionally on projected data)",
    "compare": "projected convex clustering vs projected K-means",
}


# ---------------------------------------------------------------- driver

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rpcc", description="Randomly projected convex clustering.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        sp = sub.add_parser(name, help=HELP[name])
        sp.add_argument("--config", type=Path, help="JSON experiment config")
        sp.add_argument("--out", type=Path, default=Path("runs"), help="output root (default: runs)")
        sp.add_argument("--seed", type=int, help="override the config seed")
        sp.add_argument("--tag", default="default", help="run label used as the output folder")
        sp.add_argument("--dry-run", action="store_true", help="validate the config and stop")
        sp.add_argument("-v", "--verbose", action="store_true")
    return parser


def _manifest(cmd, cfg, tag, result):
    return {
        "command": cmd, "tag": tag, "config": cfg.to_dict(), "config_sha256": cfg.digest(),
        "versions": {"rpcc": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
                     "python": platform.python_version()},
        "result": result,
    }


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.config is not None:
            cfg = ExperimentConfig.load(args.config)
        else:
            cfg = ExperimentConfig.from_dict({})
        if args.seed is not None:
            cfg.seed = args.seed
            problems = cfg.problems()
            if problems:
                raise SpecError(problems)
    except SpecError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO

    if args.dry_run:
        print(json.dumps(cfg.to_dict(), indent=2, sort_keys=True))
        return EXIT_OK

    final = args.out / args.command / args.tag
    try:
        args.out.mkdir(parents=True, exist_ok=True)
        stage = Path(tempfile.mkdtemp(prefix=".stage-", dir=args.out))
    except OSError as exc:
        print(f"cannot create output directory: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        result = COMMANDS[args.command](cfg, stage)
        _dump(stage / "manifest.json", _manifest(args.command, cfg, args.tag, result))
        final.parent.mkdir(parents=True, exist_ok=True)
        if final.exists():
            shutil.rmtree(final)
        stage.rename(final)
    except (SpecError, ParameterError, AssumptionError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NonConvergence as exc:
        print(f"non-convergence: {exc}", file=sys.stderr)
        return EXIT_NOCONV
    except (OSError, CSVParseError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    finally:
        if stage.exists():
            shutil.rmtree(stage, ignore_errors=True)
    print(json.dumps(_finite(result), sort_keys=True))
    print(f"wrote {final}")
    return EXIT_OK


def main():
    sys.exit(run())
