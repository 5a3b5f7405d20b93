"""Random projections, embedding dimensions and distance-preservation checks."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.spatial.distance import pdist

from .dataset import Partition, as_data_matrix, centroids
from .exceptions import ParameterError

FAMILIES = ("normal", "rademacher")


@dataclass(frozen=True)
class ProjectionMatrix:
    """``m x d`` matrix ``G / sqrt(m)`` with its sampling metadata."""

    values: np.ndarray
    family: str = "normal"
    seed: Optional[int] = None

    def __post_init__(self):
        values = np.atleast_2d(np.asarray(self.values, dtype=float))
        if not np.all(np.isfinite(values)):
            raise ParameterError("projection has non-finite entries")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def m(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]

    def apply(self, data) -> np.ndarray:
        """Embed the rows of ``data``: returns ``(Pi A^T)^T`` with shape ``n x m``."""
        data = np.asarray(data, dtype=float)
        if data.shape[-1] != self.d:
            raise ParameterError(f"data has dimension {data.shape[-1]}, projection expects {self.d}")
        return data @ self.values.T


def sample_projection(m: int, d: int, family: str = "normal", seed=None) -> ProjectionMatrix:
    if m < 1 or d < 1:
        raise ParameterError(f"need m, d >= 1, got m={m}, d={d}")
    rng = np.random.default_rng(seed)
    if family == "normal":
        g = rng.standard_normal((m, d))
    elif family == "rademacher":
        g = rng.integers(0, 2, size=(m, d)) * 2.0 - 1.0
    else:
        raise ParameterError(f"unknown family {family!r}; choose from {FAMILIES}")
    return ProjectionMatrix(g / math.sqrt(m), family, seed)


def _check_eps(epsilon):
    if not 0 < epsilon < 1:
        raise ParameterError(f"distortion must lie in (0, 1), got {epsilon}")


def embedding_dim_logn(epsilon: float, n: int, C: float) -> int:
    """``ceil(C eps^-2 ln n)``."""
    _check_eps(epsilon)
    if n < 2 or C <= 0:
        raise ParameterError("need n >= 2 and C > 0")
    return int(math.ceil(C * math.log(n) / epsilon**2))


def embedding_dim_logk(epsilon: float, K: int, C: float) -> int:
    """``ceil(C eps^-2 ln K)``; the cluster-count analogue of :func:`embedding_dim_logn`."""
    _check_eps(epsilon)
    if K < 2 or C <= 0:
        raise ParameterError("need K >= 2 and C > 0")
    return int(math.ceil(C * math.log(K) / epsilon**2))


@dataclass
class DifferenceSets:
    """Within-cluster differences and all centroid differences.

    Within-cluster differences are kept implicitly as index pairs because
    they can number in the millions; :meth:`within_vectors` materialises
    them for small problems. ``centroid_pairs[k] = (alpha, beta)`` labels
    row ``k`` of ``centroid_diffs`` with ``0 <= alpha < beta <= K`` where
    index 0 is the grand mean.
    """

    data: np.ndarray = field(repr=False)
    truth: Partition = field(repr=False)
    centroid_diffs: np.ndarray = field(repr=False)
    centroid_pairs: np.ndarray = field(repr=False)

    @property
    def N1(self) -> int:
        s = self.truth.sizes
        return int(np.sum(s * (s - 1) // 2))

    @property
    def N2(self) -> int:
        return int(self.centroid_diffs.shape[0])

    def within_pairs(self):
        """Yield ``(alpha, i, j)`` index arrays for each cluster, ``i < j``."""
        for alpha, idx in enumerate(self.truth.groups(), start=1):
            a, b = np.triu_indices(idx.size, k=1)
            yield alpha, idx[a], idx[b]

    def within_vectors(self) -> list:
        """``X_alpha`` as explicit arrays, one per cluster."""
        return [self.data[i] - self.data[j] for _, i, j in self.within_pairs()]


def build_difference_sets(data, truth: Partition) -> DifferenceSets:
    data = as_data_matrix(data)
    if truth.n != data.shape[0]:
        raise ParameterError("partition size does not match data")
    cents = centroids(data, truth)
    a, b = np.triu_indices(truth.K + 1, k=1)
    return DifferenceSets(data, truth, cents[a] - cents[b], np.column_stack([a, b]))


@dataclass
class IsometryReport:
    epsilon: float
    total: int
    preserved: int
    violations: list = field(default_factory=list)

    @property
    def fraction(self) -> float:
        return self.preserved / self.total if self.total else 1.0

    @property
    def all_preserved(self) -> bool:
        return self.preserved == self.total


def _report(orig_sq, proj_sq, epsilon, max_violations=100):
    ok = ((1 - epsilon) * orig_sq <= proj_sq) & (proj_sq <= (1 + epsilon) * orig_sq)
    bad = np.flatnonzero(~ok)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = proj_sq[bad[:max_violations]] / orig_sq[bad[:max_violations]]
    violations = list(zip(bad[:max_violations].tolist(), ratios.tolist()))
    return IsometryReport(float(epsilon), int(ok.size), int(ok.sum()), violations)


def verify_isometry(pi: ProjectionMatrix, vectors, epsilon: float) -> IsometryReport:
    """Check ``(1-eps)||x||^2 <= ||Pi x||^2 <= (1+eps)||x||^2`` for each row of ``vectors``.

    Zero vectors satisfy both sides trivially. At most 100 violations are
    listed in the report; the counts always cover every vector.
    """
    _check_eps(epsilon)
    x = np.atleast_2d(np.asarray(vectors, dtype=float))
    if x.size == 0:
        return IsometryReport(float(epsilon), 0, 0)
    if x.shape[1] != pi.d:
        raise ParameterError(f"vectors have dimension {x.shape[1]}, projection expects {pi.d}")
    orig = np.einsum("ij,ij->i", x, x)
    px = pi.apply(x)
    return _report(orig, np.einsum("ij,ij->i", px, px), epsilon)


def verify_pairwise(pi: ProjectionMatrix, data, epsilon: float) -> IsometryReport:
    """:func:`verify_isometry` over all ``C(n, 2)`` differences ``a_i - a_j``."""
    _check_eps(epsilon)
    data = as_data_matrix(data)
    return _report(pdist(data, "sqeuclidean"), pdist(pi.apply(data), "sqeuclidean"), epsilon)


def verify_within(pi: ProjectionMatrix, sets: DifferenceSets, epsilon: float,
                  projected=None) -> IsometryReport:
    """Preservation report over the within-cluster differences."""
    _check_eps(epsilon)
    proj = pi.apply(sets.data) if projected is None else projected
    orig, emb = [], []
    for idx in sets.truth.groups():
        if idx.size > 1:
            orig.append(pdist(sets.data[idx], "sqeuclidean"))
            emb.append(pdist(proj[idx], "sqeuclidean"))
    if not orig:
        return IsometryReport(float(epsilon), 0, 0)
    return _report(np.concatenate(orig), np.concatenate(emb), epsilon)


def verify_centroids(pi: ProjectionMatrix, sets: DifferenceSets, epsilon: float) -> IsometryReport:
    return verify_isometry(pi, sets.centroid_diffs, epsilon)


def verify_difference_sets(pi: ProjectionMatrix, sets: DifferenceSets, epsilon: float) -> IsometryReport:
    """Joint report over within-cluster and centroid differences."""
    w = verify_within(pi, sets, epsilon)
    c = verify_centroids(pi, sets, epsilon)
    shifted = [(i + w.total, r) for i, r in c.violations]
    return IsometryReport(float(epsilon), w.total + c.total, w.preserved + c.preserved,
                          w.violations + shifted)


def union_bound_probability(set_sizes: Sequence[int], delta: float) -> float:
    """Lower bound ``1 - (sum n_j) delta`` that every vector is preserved."""
    total = int(np.sum(set_sizes))
    if total < 1:
        raise ParameterError("set sizes must sum to at least 1")
    if not 0 < delta < 1.0 / total:
        raise ParameterError(f"delta must lie in (0, 1/{total})")
    return 1.0 - total * delta


def conditional_bound_delta(N1: int, N2: int, delta: float) -> float:
    """``1 - N2 delta / (1 - N1 delta)``: centroid preservation given within-cluster preservation."""
    if not 0 < delta < 1.0 / N1:
        raise ParameterError("delta must lie in (0, 1/N1)")
    return 1.0 - N2 * delta / (1.0 - N1 * delta)


def conditional_recovery_probability(N1: int, N2: int, p: float, n: Optional[int] = None):
    """Lower bounds on P[centroids preserved | within-cluster differences preserved].

    Returns ``(general, by_n)``. ``general`` uses ``delta = (N1+N2)^-p``;
    ``by_n`` is the bound ``1 - 1/(n^p - n + 1)`` when ``n`` is given (it
    presumes ``N2 <= n/2``), otherwise ``None``.
    """
    if p <= 1:
        raise ParameterError("p must exceed 1")
    if N1 < 1 or N2 < 0:
        raise ParameterError("need N1 >= 1 and N2 >= 0")
    general = 1.0 - N2 / (float(N1 + N2) ** p - N1)
    by_n = None
    if n is not None:
        by_n = 1.0 - 1.0 / (float(n) ** p - n + 1)
    return general, by_n


@dataclass(frozen=True)
class SubgaussianProfile:
    """Constant ``C_kappa^2`` of the entry distribution and deviation ``t``."""

    c_kappa_sq: float = 1.0
    t: float = 2.0

    def __post_init__(self):
        if self.c_kappa_sq <= 0:
            raise ParameterError("c_kappa_sq must be positive")
        if self.t < 0:
            raise ParameterError("t must be non-negative")

    @property
    def probability(self) -> float:
        """Probability ``1 - 2 exp(-t^2)`` with which the singular-value bounds hold."""
        return 1.0 - 2.0 * math.exp(-self.t**2)


def singular_bounds(m: int, d: int, profile: SubgaussianProfile):
    """Return ``(lower, upper)`` bounds on the extreme singular values of ``R / sqrt(m)``."""
    if m > d:
        raise ParameterError(f"singular bounds need m <= d, got m={m}, d={d}")
    c, t = profile.c_kappa_sq, profile.t
    upper = (math.sqrt(d) + c * t) / math.sqrt(m) + c
    lower = (math.sqrt(d) - c * t) / math.sqrt(m) - c
    return lower, upper


def extreme_singular_values(pi: ProjectionMatrix):
    s = np.linalg.svd(pi.values, compute_uv=False)
    return float(s[-1]), float(s[0])


def check_singular_bounds(pi: ProjectionMatrix, profile: SubgaussianProfile) -> bool:
    lower, upper = singular_bounds(pi.m, pi.d, profile)
    smin, smax = extreme_singular_values(pi)
    return bool(lower <= smin <= smax <= upper)
