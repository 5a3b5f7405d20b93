"""Recovery-guarantee quantities for convex clustering and its projected variant.

The gamma bounds bracket the fusion strength for which the convex
clustering solution recovers the ground-truth partition exactly; the
epsilon thresholds say how much distortion a random projection may
introduce while keeping a non-empty recovery window.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.spatial.distance import pdist, squareform

from .dataset import Partition, as_data_matrix, centroids
from .exceptions import AssumptionError, ParameterError
from .projection import SubgaussianProfile, singular_bounds
from .weights import AssumptionReport, WeightGraph, cluster_terms

PERFECT = "perfect-recovery"
COARSENING = "coarsening"


@dataclass
class WeightTerms:
    """Data-independent pieces of the gamma bounds.

    Weights stay fixed when the data are projected, so these can be computed
    once and reused for the original and every embedded copy.
    """

    truth: Partition
    report: AssumptionReport
    cluster_idx: list          # member ids per cluster
    denominators: list         # n_alpha w_ij - mu_ij over in-cluster pairs i<j (condensed)
    wbar: np.ndarray           # (1/n_beta) sum over other clusters of w^(beta, l)


def weight_terms(graph: WeightGraph, truth: Partition) -> WeightTerms:
    idx_list, denoms = [], []
    margin, worst, positive = np.inf, None, True
    for t in cluster_terms(graph, truth):
        idx_list.append(t.idx)
        if t.idx.size < 2:
            denoms.append(np.empty(0))
            continue
        a, b = np.triu_indices(t.idx.size, k=1)
        w = t.w[a, b]
        positive &= bool(np.all(w > 0))
        den = truth.sizes[t.alpha - 1] * w - t.mu[a, b]
        e = int(np.argmin(den))
        if den[e] < margin:
            margin, worst = float(den[e]), (t.alpha, int(t.idx[a[e]]), int(t.idx[b[e]]))
        denoms.append(den)
    report = AssumptionReport(bool(positive and margin > 0), margin, worst, positive, graph, truth)
    ind = truth.indicator()
    between = ind.T @ (graph.matrix @ ind)        # w^(alpha, beta)
    wbar = (between.sum(axis=1) - np.diag(between)) / truth.sizes
    return WeightTerms(truth, report, idx_list, denoms, np.asarray(wbar).ravel())


@dataclass
class GammaBounds:
    gamma_min: float
    gamma_max: float
    gamma_max2: float
    argmin_pair: Optional[tuple] = None    # (alpha, i, j) attaining gamma_min
    argmax_pair: Optional[tuple] = None    # (alpha, beta) attaining gamma_max
    argmax2_cluster: Optional[int] = None  # alpha attaining gamma_max2
    diagnostics: list = field(default_factory=list)

    @property
    def r(self) -> float:
        return _ratio(self.gamma_max, self.gamma_min)

    @property
    def r2(self) -> float:
        return _ratio(self.gamma_max2, self.gamma_min)

    def as_dict(self) -> dict:
        return {
            "gamma_min": self.gamma_min, "gamma_max": self.gamma_max,
            "gamma_max2": self.gamma_max2, "r": self.r, "r2": self.r2,
            "argmin_pair": self.argmin_pair, "argmax_pair": self.argmax_pair,
            "argmax2_cluster": self.argmax2_cluster, "diagnostics": list(self.diagnostics),
        }


def _ratio(num, den):
    if den == 0:
        return math.inf
    return num / den


def _check_distinct_centroids(cents):
    d = squareform(pdist(cents))
    np.fill_diagonal(d, np.inf)
    if np.any(d == 0):
        a, b = np.argwhere(d == 0)[0]
        raise AssumptionError(f"centroids a^({a}) and a^({b}) coincide")


def gamma_bounds(data, graph: WeightGraph, truth: Partition,
                 terms: Optional[WeightTerms] = None) -> GammaBounds:
    """Evaluate ``gamma_min``, ``gamma_max`` and ``gamma_max2`` on ``data``.

    Raises
    ------
    AssumptionError
        If two of the grand mean and cluster centroids coincide, or if the
        weights violate the in-cluster dominance condition (the error's
        ``report`` attribute carries the :class:`AssumptionReport`).
    """
    data = as_data_matrix(data)
    if truth.n != data.shape[0] or graph.n != truth.n:
        raise ParameterError("data, graph and partition sizes differ")
    if terms is None:
        terms = weight_terms(graph, truth)
    if not terms.report.holds:
        raise AssumptionError(
            f"weight assumption violated (margin={terms.report.margin:.6g}, "
            f"pair={terms.report.worst_pair})", terms.report)
    cents = centroids(data, truth)
    if truth.K > 1:
        # with one cluster its centroid is the grand mean by definition
        _check_distinct_centroids(cents)
    diagnostics = []

    gmin, argmin = 0.0, None
    for alpha, (idx, den) in enumerate(zip(terms.cluster_idx, terms.denominators), start=1):
        if idx.size < 2:
            continue
        vals = pdist(data[idx]) / den
        e = int(np.argmax(vals))
        if vals[e] > gmin or argmin is None:
            a, b = np.triu_indices(idx.size, k=1)
            gmin, argmin = float(vals[e]), (alpha, int(idx[a[e]]), int(idx[b[e]]))
    if argmin is None:
        diagnostics.append("every cluster is a singleton; gamma_min is 0")

    K = truth.K
    wbar = terms.wbar
    gmax, argmax = math.inf, None
    if K == 1:
        diagnostics.append("K = 1: no cluster pair, gamma_max is +inf")
    else:
        cd = squareform(pdist(cents[1:]))
        a, b = np.triu_indices(K, k=1)
        den = wbar[a] + wbar[b]
        with np.errstate(divide="ignore"):
            vals = np.where(den > 0, cd[a, b] / np.where(den > 0, den, 1.0), np.inf)
        e = int(np.argmin(vals))
        gmax, argmax = float(vals[e]), (int(a[e]) + 1, int(b[e]) + 1)
        if math.isinf(gmax):
            diagnostics.append("no edges between clusters: gamma_max is +inf")

    to_mean = np.linalg.norm(cents[1:] - cents[0], axis=1)
    with np.errstate(divide="ignore"):
        vals2 = np.where(wbar > 0, to_mean / np.where(wbar > 0, wbar, 1.0), np.inf)
    e2 = int(np.argmax(vals2))
    gmax2 = float(vals2[e2])
    return GammaBounds(gmin, gmax, gmax2, argmin, argmax, e2 + 1, diagnostics)


def hat_gamma_bounds(embedded, graph: WeightGraph, truth: Partition,
                     terms: Optional[WeightTerms] = None) -> GammaBounds:
    """Gamma bounds of the projected problem; weights come from the original data."""
    return gamma_bounds(embedded, graph, truth, terms)


@dataclass
class EpsilonThresholds:
    eps_min: float
    eps_sup: float
    eps_sup2: Optional[float]
    variant: str
    hypothesis: bool                 # recovery window guaranteed non-empty
    hypothesis2: Optional[bool] = None
    C0: Optional[float] = None
    profile: Optional[SubgaussianProfile] = None

    @property
    def nonempty(self) -> bool:
        return self.eps_min < self.eps_sup

    def as_dict(self) -> dict:
        out = {
            "variant": self.variant, "eps_min": self.eps_min, "eps_sup": self.eps_sup,
            "eps_sup2": self.eps_sup2, "hypothesis": self.hypothesis,
            "hypothesis2": self.hypothesis2, "nonempty": self.nonempty,
        }
        if self.C0 is not None:
            out["C0"] = self.C0
            out["c_kappa_sq"] = self.profile.c_kappa_sq
            out["t"] = self.profile.t
        return out


def eps_sup_logn(r: float) -> float:
    """``(r^2 - 1) / (r^2 + 1)``, equal to 1 in the limit ``r -> inf``."""
    if math.isinf(r):
        return 1.0
    return (r * r - 1.0) / (r * r + 1.0)


def _min_eps(C, count, d):
    if C <= 0:
        raise ParameterError("C must be positive")
    if d < 1:
        raise ParameterError("d must be positive")
    val = math.sqrt(C * math.log(count) / d)
    if val >= 1:
        raise ParameterError(
            f"no valid distortion window: C*log({count})/d = {val * val:.4g} >= 1")
    return val


def epsilon_thresholds_logn(r: float, d: int, n: int, C: float,
                            r2: Optional[float] = None) -> EpsilonThresholds:
    """Distortion window for the ``log n`` embedding dimension.

    ``C`` is the single constant behind ``m = ceil(C eps^-2 log n)``, so the
    lower end is ``sqrt(C log n / d)``.
    """
    if r <= 0:
        raise ParameterError("r must be positive")
    if n < 2:
        raise ParameterError("n must be at least 2")
    eps_min = _min_eps(C, n, d)
    need = math.sqrt((1 + eps_min) / (1 - eps_min))
    sup2 = None if r2 is None else eps_sup_logn(r2)
    return EpsilonThresholds(
        eps_min, eps_sup_logn(r), sup2, "log-n", bool(r > need),
        None if r2 is None else bool(r2 > need),
    )


def eps_sup_logk(r: float, C0: float, c_kappa_sq: float) -> float:
    # r C0 sqrt(r^2 C0^2/4 + c C0 + 1) - r^2 C0^2/2 rewritten to avoid cancellation
    a = c_kappa_sq * C0 + 1.0
    if math.isinf(r):
        return a - c_kappa_sq * C0
    u = r * C0
    return u * a / (math.sqrt(u * u / 4.0 + a) + u / 2.0) - c_kappa_sq * C0


def epsilon_thresholds_logk(r: float, d: int, K: int, C: float,
                            profile: SubgaussianProfile = SubgaussianProfile(),
                            r2: Optional[float] = None) -> EpsilonThresholds:
    """Distortion window for the ``log K`` embedding dimension."""
    if r <= 0:
        raise ParameterError("r must be positive")
    if K < 2:
        raise ParameterError("K must be at least 2")
    eps_min = _min_eps(C, K, d)
    c, t = profile.c_kappa_sq, profile.t
    C0 = math.sqrt(C * math.log(K)) / (math.sqrt(d) + c * t)
    need = (1 + c + c * t / math.sqrt(d)) / math.sqrt(1 - eps_min)
    sup2 = None if r2 is None else eps_sup_logk(r2, C0, c)
    return EpsilonThresholds(
        eps_min, eps_sup_logk(r, C0, c), sup2, "log-K", bool(r > need),
        None if r2 is None else bool(r2 > need), C0, profile,
    )


@dataclass(frozen=True)
class GammaInterval:
    """Half-open interval ``[lo, hi)`` of fusion strengths."""

    lo: float
    hi: float
    kind: str = PERFECT

    @property
    def nonempty(self) -> bool:
        return self.lo < self.hi

    def __contains__(self, gamma) -> bool:
        return self.lo <= gamma < self.hi

    def as_dict(self) -> dict:
        return {"lo": self.lo, "hi": self.hi, "nonempty": self.nonempty, "kind": self.kind}


def _upper(gb, kind):
    if kind == PERFECT:
        return gb.gamma_max
    if kind == COARSENING:
        return gb.gamma_max2
    raise ParameterError(f"unknown interval kind {kind!r}")


def recovery_interval_logn(gb: GammaBounds, epsilon: float, kind: str = PERFECT) -> GammaInterval:
    """``[sqrt(1+eps) gamma_min, sqrt(1-eps) gamma_max)`` (``gamma_max2`` for coarsening)."""
    if not 0 < epsilon < 1:
        raise ParameterError("distortion must lie in (0, 1)")
    hi = _upper(gb, kind)
    return GammaInterval(math.sqrt(1 + epsilon) * gb.gamma_min, math.sqrt(1 - epsilon) * hi, kind)


def recovery_interval_logk(gb: GammaBounds, epsilon: float, m: int, d: int,
                           profile: SubgaussianProfile = SubgaussianProfile(),
                           kind: str = PERFECT) -> GammaInterval:
    """``[S_upper(m, d, t) gamma_min, sqrt(1-eps) gamma_max)``."""
    if not 0 < epsilon < 1:
        raise ParameterError("distortion must lie in (0, 1)")
    _, upper = singular_bounds(m, d, profile)
    hi = _upper(gb, kind)
    return GammaInterval(upper * gb.gamma_min, math.sqrt(1 - epsilon) * hi, kind)


def check_assumption3(n: int, K: int) -> bool:
    return n > K * (K + 1)
