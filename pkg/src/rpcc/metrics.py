"""Pair-counting and matching scores between two partitions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .dataset import Partition
from .exceptions import ParameterError


def _labels(p):
    return p.labels if isinstance(p, Partition) else np.asarray(p)


def _comb2(x):
    x = np.asarray(x, dtype=float)
    return x * (x - 1) / 2.0


@dataclass
class ContingencyTable:
    counts: np.ndarray   # rows: first partition's clusters, columns: second's

    @classmethod
    def build(cls, p1, p2) -> "ContingencyTable":
        l1, l2 = _labels(p1), _labels(p2)
        if l1.shape != l2.shape:
            raise ParameterError(f"partitions have different sizes ({l1.size} vs {l2.size})")
        _, r = np.unique(l1, return_inverse=True)
        _, c = np.unique(l2, return_inverse=True)
        table = np.zeros((r.max() + 1, c.max() + 1), dtype=np.int64)
        np.add.at(table, (r.ravel(), c.ravel()), 1)
        return cls(table)

    @property
    def n(self) -> int:
        return int(self.counts.sum())

    @property
    def row_sums(self):
        return self.counts.sum(axis=1)

    @property
    def col_sums(self):
        return self.counts.sum(axis=0)

    def pair_counts(self):
        """``(sum_ij C(n_ij,2), sum_i C(a_i,2), sum_j C(b_j,2), C(n,2))``."""
        return (_comb2(self.counts).sum(), _comb2(self.row_sums).sum(),
                _comb2(self.col_sums).sum(), float(_comb2(self.n)))


def rand_index(p1, p2) -> float:
    t = ContingencyTable.build(p1, p2)
    if t.n < 2:
        raise ParameterError("rand index needs at least two points")
    same, rows, cols, total = t.pair_counts()
    return float((total + 2 * same - rows - cols) / total)


def adjusted_rand_index(p1, p2) -> float:
    """Hubert-Arabie adjusted Rand index; 1 when the chance-corrected denominator vanishes.

    Pair counts are integers, so the index is formed in exact integer
    arithmetic and rounded once.
    """
    t = ContingencyTable.build(p1, p2)
    if t.n < 2:
        raise ParameterError("adjusted rand index needs at least two points")
    same, rows, cols, total = (int(round(v)) for v in t.pair_counts())
    num = 2 * (same * total - rows * cols)
    den = (rows + cols) * total - 2 * rows * cols
    if den == 0:
        return 1.0
    return num / den


def accuracy(p1, truth) -> float:
    """Fraction of points correctly labelled under the best one-to-one cluster matching."""
    t = ContingencyTable.build(p1, truth)
    r, c = linear_sum_assignment(t.counts, maximize=True)
    return float(t.counts[r, c].sum() / t.n)
