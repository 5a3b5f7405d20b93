"""Fusion weight graphs: k-NN Gaussian kernel, uniform, and oracle graphs."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy.spatial.distance import cdist

from .dataset import Partition, as_data_matrix
from .exceptions import CSVParseError, ParameterError

_BLOCK = 512


class WeightGraph:
    """Sparse symmetric weighted graph stored once per unordered pair.

    ``rows[e] < cols[e]`` for every edge ``e``; edges are kept in
    lexicographic order. Absent pairs have weight zero.
    """

    def __init__(self, n, rows, cols, weights):
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        weights = np.asarray(weights, dtype=float)
        if not (rows.shape == cols.shape == weights.shape) or rows.ndim != 1:
            raise ParameterError("rows, cols and weights must be equal-length vectors")
        if rows.size:
            if np.any(rows == cols):
                raise ParameterError("self-loops are not allowed")
            if rows.min() < 0 or cols.min() < 0 or max(rows.max(), cols.max()) >= n:
                raise ParameterError(f"node ids must lie in [0, {n})")
            if np.any(weights < 0) or not np.all(np.isfinite(weights)):
                raise ParameterError("weights must be finite and non-negative")
        lo, hi = np.minimum(rows, cols), np.maximum(rows, cols)
        key = lo * n + hi
        key, first = np.unique(key, return_index=True)
        if key.size != rows.size:
            raise ParameterError("duplicate edges")
        self.n = int(n)
        self.rows = lo[first]
        self.cols = hi[first]
        self.weights = weights[first]
        for arr in (self.rows, self.cols, self.weights):
            arr.setflags(write=False)

    @property
    def n_edges(self) -> int:
        return int(self.rows.size)

    def edges(self):
        """Iterate ``(i, j, w)`` triplets with ``i < j`` (0-based)."""
        return zip(self.rows.tolist(), self.cols.tolist(), self.weights.tolist())

    @cached_property
    def matrix(self) -> sp.csr_matrix:
        """Symmetric ``n x n`` CSR adjacency matrix."""
        n = self.n
        m = sp.coo_matrix(
            (np.concatenate([self.weights, self.weights]),
             (np.concatenate([self.rows, self.cols]), np.concatenate([self.cols, self.rows]))),
            shape=(n, n),
        )
        return m.tocsr()

    def weight(self, i, j) -> float:
        return float(self.matrix[i, j])

    def neighbors(self, i) -> np.ndarray:
        m = self.matrix
        return m.indices[m.indptr[i]:m.indptr[i + 1]]

    def incidence(self) -> sp.csr_matrix:
        """Signed edge-node incidence ``B`` with ``(B X)_e = x_i - x_j``."""
        m = self.n_edges
        e = np.arange(m)
        data = np.concatenate([np.ones(m), -np.ones(m)])
        return sp.csr_matrix(
            (data, (np.concatenate([e, e]), np.concatenate([self.rows, self.cols]))),
            shape=(m, self.n),
        )

    def edge_set(self) -> set:
        return set(zip(self.rows.tolist(), self.cols.tolist()))

    def to_csv(self, path):
        with Path(path).open("w", encoding="utf-8") as fh:
            for i, j, w in self.edges():
                fh.write(f"{i + 1},{j + 1},{w:.17g}\n")

    @classmethod
    def from_csv(cls, path, n: Optional[int] = None) -> "WeightGraph":
        rows, cols, ws = [], [], []
        with Path(path).open(encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                parts = line.strip().split(",")
                if len(parts) != 3:
                    raise CSVParseError(lineno, "expected i,j,w")
                try:
                    i, j, w = int(parts[0]), int(parts[1]), float(parts[2])
                except ValueError:
                    raise CSVParseError(lineno, "malformed triplet") from None
                rows.append(i - 1)
                cols.append(j - 1)
                ws.append(w)
        if n is None:
            n = max(max(rows, default=-1), max(cols, default=-1)) + 1
        return cls(n, rows, cols, ws)

    def __repr__(self):
        return f"WeightGraph(n={self.n}, edges={self.n_edges})"


def _exact_sqdist(data, rows, cols):
    diff = data[rows] - data[cols]
    return np.einsum("ij,ij->i", diff, diff)


def knn_indices(data, k: int) -> np.ndarray:
    """Exact ``k`` nearest neighbours of every point, ties to the lower index.

    Returns an ``n x k`` array of 0-based ids ordered by distance.
    """
    data = as_data_matrix(data)
    n = data.shape[0]
    if not 1 <= k < n:
        raise ParameterError(f"need 1 <= k < n, got k={k}, n={n}")
    sq = np.einsum("ij,ij->i", data, data)
    out = np.empty((n, k), dtype=np.int64)
    for start in range(0, n, _BLOCK):
        stop = min(start + _BLOCK, n)
        block = data[start:stop]
        d2 = sq[start:stop, None] + sq[None, :] - 2.0 * block @ data.T
        np.maximum(d2, 0.0, out=d2)
        d2[np.arange(stop - start), np.arange(start, stop)] = np.inf
        kth = np.partition(d2, k - 1, axis=1)[:, k - 1]
        # the Gram expansion loses a few ulps; recompute exactly around the cut
        slack = 1e-9 * (kth + sq[start:stop] + sq.max()) + 1e-300
        for r in range(stop - start):
            i = start + r
            cand = np.flatnonzero(d2[r] <= kth[r] + slack[r])
            cand = cand[cand != i]
            exact = _exact_sqdist(data, np.full(cand.size, i), cand)
            order = np.lexsort((cand, exact))
            out[i] = cand[order[:k]]
    return out


def _kernel_graph(data, rows, cols, phi):
    w = np.exp(-phi * _exact_sqdist(data, rows, cols))
    return WeightGraph(data.shape[0], rows, cols, w)


def _knn_pairs(nbrs):
    n, k = nbrs.shape
    i = np.repeat(np.arange(n), k)
    j = nbrs.ravel()
    lo, hi = np.minimum(i, j), np.maximum(i, j)
    key = np.unique(lo * n + hi)
    return key // n, key % n


def default_phi(data) -> float:
    return 1.0 / np.asarray(data).shape[1]


def knn_gaussian_weights(data, k: int, phi: Optional[float] = None) -> WeightGraph:
    """Gaussian-kernel weights ``exp(-phi ||a_i - a_j||^2)`` on the symmetric k-NN graph.

    An edge joins ``i`` and ``j`` when either is among the other's ``k``
    nearest neighbours. ``phi`` defaults to ``1/d``.
    """
    data = as_data_matrix(data)
    phi = default_phi(data) if phi is None else float(phi)
    if phi < 0:
        raise ParameterError("phi must be non-negative")
    rows, cols = _knn_pairs(knn_indices(data, k))
    return _kernel_graph(data, rows, cols, phi)


def uniform_weights(n: int) -> WeightGraph:
    if n < 2:
        raise ParameterError("uniform weights need n >= 2")
    rows, cols = np.triu_indices(n, k=1)
    return WeightGraph(n, rows, cols, np.ones(rows.size))


def oracle_experiment_graph(data, truth: Partition, k: int,
                            phi: Optional[float] = None) -> WeightGraph:
    """k-NN graph united with every within-cluster pair, Gaussian-kernel weighted."""
    data = as_data_matrix(data)
    if truth.n != data.shape[0]:
        raise ParameterError("partition size does not match data")
    phi = default_phi(data) if phi is None else float(phi)
    n = data.shape[0]
    r_knn, c_knn = _knn_pairs(knn_indices(data, k))
    keys = [r_knn * n + c_knn]
    for idx in truth.groups():
        if idx.size > 1:
            a, b = np.triu_indices(idx.size, k=1)
            keys.append(idx[a] * n + idx[b])
    key = np.unique(np.concatenate(keys))
    return _kernel_graph(data, key // n, key % n, phi)


@dataclass
class AssumptionReport:
    """Outcome of the positive-weight / dominance check on in-cluster pairs.

    ``worst_pair`` is ``(alpha, i, j)`` with a 1-based cluster label and
    0-based point ids; it is ``None`` when no cluster has two members.
    """

    holds: bool
    margin: float
    worst_pair: Optional[tuple]
    all_positive: bool
    _graph: WeightGraph = field(repr=False, default=None)
    _truth: Partition = field(repr=False, default=None)

    def mu_values(self, alpha: int) -> np.ndarray:
        """Matrix of ``mu_ij`` over members of cluster ``alpha``."""
        return next(t for t in cluster_terms(self._graph, self._truth) if t.alpha == alpha).mu


@dataclass
class ClusterTerms:
    alpha: int
    idx: np.ndarray
    w: np.ndarray       # dense in-cluster weight block
    mu: np.ndarray      # pairwise sum over other clusters of |w_i^(b) - w_j^(b)|


def cluster_terms(graph: WeightGraph, truth: Partition):
    """Yield the per-cluster weight block and ``mu`` matrix."""
    if graph.n != truth.n:
        raise ParameterError("graph and partition sizes differ")
    W = graph.matrix
    to_cluster = np.asarray(W @ truth.indicator())   # w_i^(beta)
    for alpha, idx in enumerate(truth.groups(), start=1):
        block = W[idx][:, idx].toarray()
        others = np.delete(to_cluster[idx], alpha - 1, axis=1)
        if others.shape[1] == 0:
            mu = np.zeros((idx.size, idx.size))
        else:
            mu = cdist(others, others, "cityblock")
        yield ClusterTerms(alpha, idx, block, mu)


def check_assumption2(graph: WeightGraph, truth: Partition) -> AssumptionReport:
    margin = np.inf
    worst = None
    all_positive = True
    for t in cluster_terms(graph, truth):
        if t.idx.size < 2:
            continue
        a, b = np.triu_indices(t.idx.size, k=1)
        if np.any(t.w[a, b] <= 0):
            all_positive = False
        slack = truth.sizes[t.alpha - 1] * t.w[a, b] - t.mu[a, b]
        e = int(np.argmin(slack))
        if slack[e] < margin:
            margin = float(slack[e])
            worst = (t.alpha, int(t.idx[a[e]]), int(t.idx[b[e]]))
    holds = bool(all_positive and margin > 0)
    return AssumptionReport(holds, margin, worst, all_positive, graph, truth)
