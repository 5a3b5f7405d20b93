"""Synthetic Gaussian mixtures, partitions and CSV input/output."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .exceptions import CSVParseError, ParameterError, SpecError


class Partition:
    """Cluster assignment of ``n`` points with labels in ``1..K``.

    Labels are stored as given (they must already be ``1..K`` with every
    cluster non-empty); use :meth:`from_labels` to relabel arbitrary ids.
    """

    __slots__ = ("labels",)

    def __init__(self, labels):
        labels = np.asarray(labels)
        if labels.ndim != 1 or labels.size == 0:
            raise ParameterError("labels must be a non-empty 1-D vector")
        if not np.issubdtype(labels.dtype, np.integer):
            if not np.all(np.equal(np.mod(labels, 1), 0)):
                raise ParameterError("labels must be integer valued")
        labels = labels.astype(np.int64)
        present = np.unique(labels)
        if present[0] != 1 or present[-1] != present.size:
            raise ParameterError(
                "labels must cover 1..K with no empty cluster; "
                "use Partition.from_labels to relabel"
            )
        labels.setflags(write=False)
        self.labels = labels

    @classmethod
    def from_labels(cls, labels) -> "Partition":
        """Relabel arbitrary ids to ``1..K`` in order of first appearance."""
        labels = np.asarray(labels)
        _, first, inverse = np.unique(labels, return_index=True, return_inverse=True)
        order = np.argsort(np.argsort(first))
        return cls(order[inverse.ravel()] + 1)

    @property
    def n(self) -> int:
        return int(self.labels.size)

    @property
    def K(self) -> int:
        return int(self.labels.max())

    @property
    def sizes(self) -> np.ndarray:
        """Cluster sizes ``n_alpha`` indexed by ``alpha - 1``."""
        return np.bincount(self.labels, minlength=self.K + 1)[1:]

    def members(self, alpha: int) -> np.ndarray:
        """Indices ``I_alpha`` (0-based point ids) of cluster ``alpha``."""
        return np.flatnonzero(self.labels == alpha)

    def groups(self) -> list:
        return [self.members(a) for a in range(1, self.K + 1)]

    def indicator(self) -> np.ndarray:
        """Dense ``n x K`` one-hot membership matrix."""
        out = np.zeros((self.n, self.K))
        out[np.arange(self.n), self.labels - 1] = 1.0
        return out

    def canonical(self) -> "Partition":
        return Partition.from_labels(self.labels)

    def same_as(self, other: "Partition") -> bool:
        """True when both describe the same set partition (labels ignored)."""
        if self.n != other.n or self.K != other.K:
            return False
        return bool(np.array_equal(self.canonical().labels, other.canonical().labels))

    def __eq__(self, other):
        if not isinstance(other, Partition):
            return NotImplemented
        return bool(np.array_equal(self.labels, other.labels))

    def __hash__(self):
        return hash(self.labels.tobytes())

    def __len__(self):
        return self.n

    def __repr__(self):
        return f"Partition(n={self.n}, K={self.K})"


def as_data_matrix(data) -> np.ndarray:
    """Validate and return an ``n x d`` float array of finite entries."""
    data = np.asarray(data, dtype=float)
    if data.ndim == 1:
        data = data[:, None]
    if data.ndim != 2 or data.shape[0] < 1 or data.shape[1] < 1:
        raise ParameterError(f"data must be an n x d matrix, got shape {data.shape}")
    if not np.all(np.isfinite(data)):
        raise ParameterError("data contains non-finite entries")
    return data


def centroids(data, truth: Partition) -> np.ndarray:
    """Cluster means, row 0 is the grand mean ``a^(0)`` and row alpha is ``a^(alpha)``."""
    data = np.asarray(data, dtype=float)
    ind = truth.indicator()
    means = (ind.T @ data) / truth.sizes[:, None]
    return np.vstack([data.mean(axis=0), means])


@dataclass(frozen=True)
class MixtureSpec:
    """Mixture of spherical Gaussians ``N(mu_k, sigma_k^2 I_d)``.

    With ``balanced=True`` the cluster sizes are fixed at ``n * w_k`` (largest
    remainder rounding when that is not integral) and points are emitted in
    cluster order; otherwise component ids are drawn i.i.d. from the weights.
    """

    means: np.ndarray
    variances: np.ndarray
    mix_weights: np.ndarray
    n: int
    seed: int = 0
    balanced: bool = True

    def __post_init__(self):
        object.__setattr__(self, "means", np.atleast_2d(np.asarray(self.means, dtype=float)))
        object.__setattr__(self, "variances", np.atleast_1d(np.asarray(self.variances, dtype=float)))
        object.__setattr__(self, "mix_weights", np.atleast_1d(np.asarray(self.mix_weights, dtype=float)))
        self.validate()

    @property
    def K(self) -> int:
        return self.means.shape[0]

    @property
    def d(self) -> int:
        return self.means.shape[1]

    @classmethod
    def basis(cls, d, K, sigma2, n, seed=0, balanced=True):
        """Means at the first ``K`` standard basis vectors, equal weights."""
        if K > d:
            raise SpecError([("K", f"basis means need K <= d, got K={K}, d={d}")])
        return cls(np.eye(K, d), np.full(K, float(sigma2)), np.full(K, 1.0 / K), n, seed, balanced)

    def validate(self):
        problems = []
        K = self.means.shape[0]
        if not np.all(np.isfinite(self.means)):
            problems.append(("means", "non-finite entries"))
        if self.variances.shape != (K,):
            problems.append(("variances", f"expected {K} values, got {self.variances.size}"))
        elif np.any(self.variances < 0) or not np.all(np.isfinite(self.variances)):
            problems.append(("variances", "must be finite and non-negative"))
        if self.mix_weights.shape != (K,):
            problems.append(("mix_weights", f"expected {K} values, got {self.mix_weights.size}"))
        elif np.any(self.mix_weights < 0) or abs(self.mix_weights.sum() - 1.0) > 1e-12:
            problems.append(("mix_weights", "must be non-negative and sum to 1"))
        if int(self.n) != self.n or self.n < 1:
            problems.append(("n", "must be a positive integer"))
        if K > 1 and np.isfinite(self.means).all():
            diff = self.means[:, None, :] - self.means[None, :, :]
            dist = np.abs(diff).sum(axis=-1)
            np.fill_diagonal(dist, np.inf)
            if np.any(dist == 0):
                problems.append(("means", "must be pairwise distinct"))
        if problems:
            raise SpecError(problems)


def balanced_counts(n: int, weights: Sequence[float]) -> np.ndarray:
    """Deterministic per-cluster counts summing to ``n`` (largest remainder)."""
    raw = n * np.asarray(weights, dtype=float)
    counts = np.floor(raw + 1e-9).astype(int)
    short = n - counts.sum()
    if short > 0:
        order = np.argsort(-(raw - counts), kind="stable")
        counts[order[:short]] += 1
    return counts


def sample_with_counts(means, variances, counts, seed=0):
    """Draw ``counts[k]`` points from component ``k``, emitted in cluster order."""
    means = np.atleast_2d(np.asarray(means, dtype=float))
    sigma = np.sqrt(np.asarray(variances, dtype=float))
    counts = np.asarray(counts, dtype=int)
    labels = np.repeat(np.arange(1, means.shape[0] + 1), counts)
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((labels.size, means.shape[1]))
    data = means[labels - 1] + sigma[labels - 1, None] * z
    return data, labels


def generate_mixture(spec: MixtureSpec):
    """Sample ``(data, truth)`` from ``spec``; deterministic given ``spec.seed``."""
    if spec.balanced:
        counts = balanced_counts(spec.n, spec.mix_weights)
        data, labels = sample_with_counts(spec.means, spec.variances, counts, spec.seed)
    else:
        rng = np.random.default_rng(spec.seed)
        labels = rng.choice(spec.K, size=spec.n, p=spec.mix_weights) + 1
        z = rng.standard_normal((spec.n, spec.d))
        sigma = np.sqrt(spec.variances)
        data = spec.means[labels - 1] + sigma[labels - 1, None] * z
    # drop empty components from the label space so the Partition stays valid
    return data, Partition.from_labels(labels) if _needs_relabel(labels) else Partition(labels)


def _needs_relabel(labels):
    present = np.unique(labels)
    return not (present[0] == 1 and present[-1] == present.size)


UNBALANCED_SIZES = (2000, 2000, 2000) + (100,) * 17


def unbalanced_fixture(d: int = 2000, sizes: Sequence[int] = UNBALANCED_SIZES,
                       sigma2: float = 0.005, seed: int = 0):
    """Twenty spherical Gaussians ``N(e_k, sigma2 I_d)`` with uneven cluster sizes.

    The default sizes give three clusters of 2000 points followed by seventeen
    of 100 (7700 points). Pass ``sizes`` for scaled-down variants.
    """
    K = len(sizes)
    if d < K:
        raise ParameterError(f"need d >= {K} for basis means, got d={d}")
    data, labels = sample_with_counts(np.eye(K, d), np.full(K, sigma2), sizes, seed)
    return data, Partition(labels)


def load_csv(path, has_labels: bool = False, header: bool = False):
    """Read a comma separated matrix, optionally with a trailing label column.

    Returns ``(data, partition)``; ``partition`` is ``None`` unless
    ``has_labels``. Labels are renumbered ``1..K`` by first appearance.
    """
    path = Path(path)
    rows = []
    width = None
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        for lineno, row in enumerate(reader, start=1):
            if header and lineno == 1:
                continue
            if not row or all(not cell.strip() for cell in row):
                continue
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise CSVParseError(lineno, f"expected {width} columns, found {len(row)}")
            try:
                rows.append([float(cell) for cell in row])
            except ValueError:
                bad = next(c for c in row if not _is_float(c))
                raise CSVParseError(lineno, f"non-numeric cell {bad!r}") from None
    if not rows:
        raise CSVParseError(0, "file contains no data rows")
    table = np.array(rows)
    if not np.all(np.isfinite(table)):
        bad_row = int(np.flatnonzero(~np.isfinite(table).all(axis=1))[0]) + 1
        raise CSVParseError(bad_row, "non-finite value")
    if not has_labels:
        return table, None
    if table.shape[1] < 2:
        raise CSVParseError(1, "label column requested but only one column present")
    raw = table[:, -1]
    if not np.all(raw == np.round(raw)):
        bad_row = int(np.flatnonzero(raw != np.round(raw))[0]) + 1
        raise CSVParseError(bad_row, "label is not integer valued")
    return table[:, :-1], Partition.from_labels(raw.astype(np.int64))


def _is_float(text):
    try:
        float(text)
    except ValueError:
        return False
    return True


def save_csv(path, data, partition: Optional[Partition] = None):
    data = np.atleast_2d(np.asarray(data, dtype=float))
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        for i, row in enumerate(data):
            cells = ["%.17g" % v for v in row]
            if partition is not None:
                cells.append(str(int(partition.labels[i])))
            fh.write(",".join(cells) + "\n")
