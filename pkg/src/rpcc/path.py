"""Clustering paths: solve over a gamma grid and score each solution."""

from __future__ import annotations

import csv
import hashlib
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import metrics
from .bounds import GammaInterval
from .dataset import Partition
from .exceptions import ParameterError
from .solver import (DEFAULT_MAX_ITER, DEFAULT_TOL, ProblemInstance, _FactorCache,
                     extract_partition, solve)
from .weights import WeightGraph

log = logging.getLogger(__name__)

_GRID = re.compile(r"^\s*\[?\s*([-+0-9.eE]+)\s*:\s*([-+0-9.eE]+)\s*:\s*([-+0-9.eE]+)\s*\]?\s*$")


def parse_grid(text: str) -> np.ndarray:
    """Expand ``"[start:step:stop]"`` (both ends inclusive) into an array.

    Several ranges may be joined with ``"u"`` or ``","`` outside brackets,
    e.g. ``"[1:1:35] u [36:20:556]"``; a plain comma separated list of
    numbers is accepted too.
    """
    parts = [p for p in re.split(r"\s*(?:\bu\b|∪)\s*", text.strip()) if p]
    values = []
    for part in parts:
        match = _GRID.match(part)
        if match:
            values.extend(expand_range(*(float(g) for g in match.groups())))
        else:
            try:
                values.extend(float(x) for x in part.strip("[] ").split(",") if x.strip())
            except ValueError:
                raise ParameterError(f"cannot parse grid {text!r}") from None
    if not values:
        raise ParameterError(f"empty grid {text!r}")
    return np.array(values)


def expand_range(start: float, step: float, stop: float) -> list:
    if step == 0 or (stop - start) * step < 0:
        raise ParameterError(f"step {step} does not move from {start} to {stop}")
    count = int(np.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + k * step, 12) for k in range(count)]


@dataclass
class PathPoint:
    gamma: float
    K_found: int
    partition: Partition
    rel_gap: float
    success: bool
    iterations: int
    rand_index: Optional[float] = None
    adjusted_rand_index: Optional[float] = None
    accuracy: Optional[float] = None


@dataclass
class ClusteringPath:
    points: list
    provenance: dict = field(default_factory=dict)

    @property
    def gammas(self) -> np.ndarray:
        return np.array([p.gamma for p in self.points])

    def to_csv(self, path):
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["gamma", "K_found", "RI", "ARI", "accuracy", "rel_gap"])
            for p in self.points:
                writer.writerow([
                    repr(p.gamma), p.K_found, _fmt(p.rand_index),
                    _fmt(p.adjusted_rand_index), _fmt(p.accuracy), "%.6e" % p.rel_gap,
                ])

    def best(self, key="adjusted_rand_index") -> PathPoint:
        scored = [p for p in self.points if getattr(p, key) is not None]
        return max(scored, key=lambda p: getattr(p, key))


def _fmt(v):
    return "" if v is None else "%.10f" % v


def instance_hash(data, graph: WeightGraph) -> str:
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(data, dtype=float).tobytes())
    for arr in (graph.rows, graph.cols, graph.weights):
        h.update(np.ascontiguousarray(arr).tobytes())
    return h.hexdigest()[:16]


def sweep(data, graph: WeightGraph, grid: Sequence[float], truth: Optional[Partition] = None,
          tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER, rho: float = 1.0,
          tau_merge: Optional[float] = None, adaptive_rho: bool = False) -> ClusteringPath:
    """Solve along ``grid`` from the largest gamma down, warm-starting each solve."""
    grid = np.unique(np.asarray(grid, dtype=float))[::-1]
    if grid.size == 0:
        raise ParameterError("grid is empty")
    if grid[-1] < 0:
        raise ParameterError("grid values must be non-negative")
    data = np.asarray(data, dtype=float)
    cache = _FactorCache(graph) if graph.n_edges else None
    warm = None
    points = []
    for gamma in grid:
        res = solve(ProblemInstance(data, graph, float(gamma)), tol=tol, max_iter=max_iter,
                    rho=rho, warm=warm, adaptive_rho=adaptive_rho,
                    _cache=cache)
        if res.iterations:
            warm = res
        part = extract_partition(res, tau_merge)
        pt = PathPoint(float(gamma), part.K, part, res.rel_gap, res.success, res.iterations)
        if truth is not None:
            pt.rand_index = metrics.rand_index(part, truth)
            pt.adjusted_rand_index = metrics.adjusted_rand_index(part, truth)
            pt.accuracy = metrics.accuracy(part, truth)
        if points and pt.K_found < points[-1].K_found:
            # gamma is decreasing along the list, so the count should not drop
            log.info("cluster count rose from %d to %d as gamma increased to %g",
                     pt.K_found, points[-1].K_found, points[-1].gamma)
        points.append(pt)
    provenance = {
        "instance": instance_hash(data, graph), "tol": tol, "max_iter": max_iter,
        "rho": rho, "adaptive_rho": adaptive_rho, "tau_merge": tau_merge, "solver": "admm",
    }
    return ClusteringPath(points, provenance)


@dataclass
class RecoveryReport:
    gammas: list                       # grid values whose partition equals the truth
    interval: Optional[GammaInterval]
    inside: list                       # grid values inside the interval
    all_inside_recovered: Optional[bool]
    vacuous: bool                      # interval contains no grid point
    practical_upper: Optional[float]   # top of the longest contiguous recovering run

    def as_dict(self) -> dict:
        return {
            "gammas": self.gammas, "inside": self.inside,
            "interval": None if self.interval is None else self.interval.as_dict(),
            "all_inside_recovered": self.all_inside_recovered, "vacuous": self.vacuous,
            "practical_upper_of_contiguous_run": self.practical_upper,
        }


def detect_perfect_recovery(path: ClusteringPath, truth: Partition,
                            interval: Optional[GammaInterval] = None) -> RecoveryReport:
    pts = sorted(path.points, key=lambda p: p.gamma)
    hits = [p.partition.same_as(truth) for p in pts]
    gammas = [p.gamma for p, h in zip(pts, hits) if h]

    best_run, run = [], []
    for p, h in zip(pts, hits):
        run = run + [p.gamma] if h else []
        if len(run) > len(best_run):
            best_run = run
    upper = best_run[-1] if best_run else None

    inside, all_ok, vacuous = [], None, False
    if interval is not None:
        inside = [p.gamma for p in pts if p.gamma in interval]
        vacuous = not inside
        if vacuous:
            log.warning("no grid gamma lies in [%g, %g); recovery check is vacuous",
                        interval.lo, interval.hi)
        all_ok = all(h for p, h in zip(pts, hits) if p.gamma in interval)
    return RecoveryReport(gammas, interval, inside, all_ok, vacuous, upper)


def is_coarsening(candidate: Partition, truth: Partition):
    """Return ``(coarsening, nontrivial)``: whole truth clusters unioned, and more than one block."""
    if candidate.n != truth.n:
        raise ParameterError("partitions have different sizes")
    ok = all(np.unique(candidate.labels[idx]).size == 1 for idx in truth.groups())
    return ok, bool(ok and candidate.K > 1)
