"""Experiment configuration: JSON in, validated settings out."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

from .exceptions import SpecError
from .path import parse_grid
from .projection import FAMILIES

GRAPH_MODES = ("knn", "oracle", "uniform")


@dataclass
class DataConfig:
    source: str = "mixture"           # mixture | unbalanced | csv
    d: int = 200
    n: int = 300
    K: int = 5
    sigma2: float = 0.005
    balanced: bool = True
    sizes: Optional[list] = None      # unbalanced cluster sizes
    csv: Optional[str] = None
    has_labels: bool = True
    header: bool = False


@dataclass
class WeightConfig:
    mode: str = "knn"
    k: int = 10
    phi: Optional[float] = None       # default 1/d


@dataclass
class ProjectionConfig:
    family: str = "normal"
    C: float = 9.0
    epsilon: Optional[float] = None
    m: Optional[int] = None
    m_list: Optional[list] = None
    seed: int = 0
    trials: int = 1
    dim_rule: str = "logn"            # logn | logk, used when m is derived from epsilon


@dataclass
class SolverConfig:
    tol: float = 1e-6
    rho: float = 1.0
    max_iter: int = 20000
    tau_merge: Optional[float] = None
    gamma: float = 1.0


@dataclass
class BoundsConfig:
    p: float = 3.0
    C: float = 9.0
    C_logk: float = 10.0
    c_kappa_sq: float = 1.0
    t: float = 2.0
    epsilons: list = field(default_factory=lambda: [0.2, 0.4, 0.6, 0.8, 0.95])


@dataclass
class KMeansSettings:
    K: Optional[int] = None           # default: number of true clusters
    replicates: int = 30
    max_iter: int = 10000


@dataclass
class ExperimentConfig:
    seed: int = 0
    data: DataConfig = field(default_factory=DataConfig)
    weights: WeightConfig = field(default_factory=WeightConfig)
    projection: ProjectionConfig = field(default_factory=ProjectionConfig)
    grid: str = "[10:-0.2:2]"
    solver: SolverConfig = field(default_factory=SolverConfig)
    bounds: BoundsConfig = field(default_factory=BoundsConfig)
    kmeans: KMeansSettings = field(default_factory=KMeansSettings)
    seeds: int = 1                    # projections per m in `compare`

    SECTIONS = {
        "data": DataConfig, "weights": WeightConfig, "projection": ProjectionConfig,
        "solver": SolverConfig, "bounds": BoundsConfig, "kmeans": KMeansSettings,
    }

    @classmethod
    def from_dict(cls, raw: dict, base_dir: Optional[Path] = None) -> "ExperimentConfig":
        problems = []
        kwargs = {}
        known = {"seed", "grid", "seeds", *cls.SECTIONS}
        for key in raw:
            if key not in known:
                problems.append((key, "unknown field"))
        for name, kind in cls.SECTIONS.items():
            section = raw.get(name, {})
            if not isinstance(section, dict):
                problems.append((name, "must be an object"))
                continue
            allowed = kind.__dataclass_fields__
            extra = [k for k in section if k not in allowed]
            problems.extend((f"{name}.{k}", "unknown field") for k in extra)
            kwargs[name] = kind(**{k: v for k, v in section.items() if k in allowed})
        for key in ("seed", "grid", "seeds"):
            if key in raw:
                kwargs[key] = raw[key]
        cfg = cls(**kwargs)
        if cfg.data.csv and base_dir is not None and not Path(cfg.data.csv).is_absolute():
            cfg.data.csv = str(base_dir / cfg.data.csv)
        problems.extend(cfg.problems())
        if problems:
            raise SpecError(problems)
        return cfg

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        path = Path(path)
        try:
            raw = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise SpecError([("config", f"invalid JSON: {exc}")]) from None
        if not isinstance(raw, dict):
            raise SpecError([("config", "top level must be an object")])
        return cls.from_dict(raw, path.parent)

    def problems(self) -> list:
        out = []
        d, w, p, s, b, k = self.data, self.weights, self.projection, self.solver, self.bounds, self.kmeans

        def need(cond, fld, why):
            if not cond:
                out.append((fld, why))

        need(isinstance(self.seed, int) and self.seed >= 0, "seed", "must be a non-negative integer")
        need(d.source in ("mixture", "unbalanced", "csv"), "data.source", "mixture, unbalanced or csv")
        if d.source == "csv":
            need(bool(d.csv), "data.csv", "path required when source is csv")
            if d.csv:
                need(Path(d.csv).is_file(), "data.csv", f"file not found: {d.csv}")
        else:
            need(_pos_int(d.d), "data.d", "must be a positive integer")
        if d.source == "mixture":
            need(_pos_int(d.n), "data.n", "must be a positive integer")
            need(_pos_int(d.K), "data.K", "must be a positive integer")
            if _pos_int(d.K) and _pos_int(d.d):
                need(d.K <= d.d, "data.K", "basis means need K <= d")
        if d.source in ("mixture", "unbalanced"):
            need(_num(d.sigma2) and d.sigma2 >= 0, "data.sigma2", "must be non-negative")
        if d.source == "unbalanced" and d.sizes is not None:
            need(isinstance(d.sizes, list) and all(_pos_int(x) for x in d.sizes),
                 "data.sizes", "must be a list of positive integers")
        need(w.mode in GRAPH_MODES, "weights.mode", f"one of {GRAPH_MODES}")
        need(_pos_int(w.k), "weights.k", "must be a positive integer")
        need(w.phi is None or (_num(w.phi) and w.phi >= 0), "weights.phi", "must be non-negative")
        need(p.family in FAMILIES, "projection.family", f"one of {FAMILIES}")
        need(_num(p.C) and p.C > 0, "projection.C", "must be positive")
        need(p.epsilon is None or (_num(p.epsilon) and 0 < p.epsilon < 1),
             "projection.epsilon", "must lie in (0, 1)")
        need(p.m is None or _pos_int(p.m), "projection.m", "must be a positive integer")
        need(p.m_list is None or (isinstance(p.m_list, list) and all(_pos_int(x) for x in p.m_list)),
             "projection.m_list", "must be a list of positive integers")
        need(_pos_int(p.trials), "projection.trials", "must be a positive integer")
        need(p.dim_rule in ("logn", "logk"), "projection.dim_rule", "logn or logk")
        try:
            grid = parse_grid(self.grid)
            need(bool((grid >= 0).all()), "grid", "values must be non-negative")
        except ValueError as exc:
            out.append(("grid", str(exc)))
        need(_num(s.tol) and s.tol > 0, "solver.tol", "must be positive")
        need(_num(s.rho) and s.rho > 0, "solver.rho", "must be positive")
        need(_pos_int(s.max_iter), "solver.max_iter", "must be a positive integer")
        need(s.tau_merge is None or (_num(s.tau_merge) and s.tau_merge >= 0),
             "solver.tau_merge", "must be non-negative")
        need(_num(s.gamma) and s.gamma >= 0, "solver.gamma", "must be non-negative")
        need(_num(b.p) and b.p > 1, "bounds.p", "must exceed 1")
        need(_num(b.C) and b.C > 0, "bounds.C", "must be positive")
        need(_num(b.C_logk) and b.C_logk > 0, "bounds.C_logk", "must be positive")
        need(_num(b.c_kappa_sq) and b.c_kappa_sq > 0, "bounds.c_kappa_sq", "must be positive")
        need(_num(b.t) and b.t >= 0, "bounds.t", "must be non-negative")
        need(isinstance(b.epsilons, list) and all(_num(e) and 0 < e < 1 for e in b.epsilons),
             "bounds.epsilons", "must be a list of values in (0, 1)")
        need(k.K is None or _pos_int(k.K), "kmeans.K", "must be a positive integer")
        need(_pos_int(k.replicates), "kmeans.replicates", "must be a positive integer")
        need(_pos_int(k.max_iter), "kmeans.max_iter", "must be a positive integer")
        need(_pos_int(self.seeds), "seeds", "must be a positive integer")
        return out

    def to_dict(self) -> dict:
        return asdict(self)

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


def _num(x):
    return isinstance(x, (int, float)) and not isinstance(x, bool)


def _pos_int(x):
    return isinstance(x, int) and not isinstance(x, bool) and x >= 1
