import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rpcc.dataset import Partition
from rpcc.exceptions import ParameterError
from rpcc.weights import (
    WeightGraph, check_assumption2, knn_gaussian_weights, knn_indices, oracle_experiment_graph,
    uniform_weights,
)


def brute_knn(data, k):
    n = data.shape[0]
    out = []
    for i in range(n):
        d = [(float(np.sum((data[i] - data[j]) ** 2)), j) for j in range(n) if j != i]
        out.append([j for _, j in sorted(d)[:k]])
    return np.array(out)


def test_collinear_example():
    g = knn_gaussian_weights(np.array([[0.0], [1.0], [10.0]]), k=1, phi=1.0)
    assert g.edge_set() == {(0, 1), (1, 2)}
    assert g.weight(0, 1) == pytest.approx(math.exp(-1))
    assert g.weight(1, 2) == pytest.approx(math.exp(-81), rel=1e-12)


def test_zero_scale_gives_unit_weights():
    data = np.random.default_rng(0).standard_normal((6, 2))
    g = knn_gaussian_weights(data, k=5, phi=0.0)
    assert g.n_edges == 15 and np.all(g.weights == 1.0)


def test_duplicate_points_weight_one():
    g = knn_gaussian_weights(np.array([[1.0, 2.0], [1.0, 2.0], [5.0, 5.0]]), k=1)
    assert g.weight(0, 1) == 1.0


def test_k_bounds():
    data = np.zeros((3, 1))
    with pytest.raises(ParameterError):
        knn_gaussian_weights(data, 3)
    with pytest.raises(ParameterError):
        knn_gaussian_weights(data, 0)


def test_ties_go_to_lower_index():
    # point 0 is equidistant from 1 and 2
    nbrs = knn_indices(np.array([[0.0], [-1.0], [1.0], [5.0]]), 1)
    assert nbrs[0].tolist() == [1]


@settings(max_examples=40, deadline=None)
@given(st.integers(3, 25), st.integers(1, 4), st.integers(0, 10**6), st.booleans())
def test_knn_matches_brute_force(n, d, seed, integer_grid):
    rng = np.random.default_rng(seed)
    data = rng.integers(0, 3, (n, d)).astype(float) if integer_grid else rng.standard_normal((n, d))
    k = int(rng.integers(1, n))
    assert np.array_equal(knn_indices(data, k), brute_knn(data, k))
    g = knn_gaussian_weights(data, k)
    for i in range(n):
        for j in brute_knn(data, k)[i]:
            assert (min(i, j), max(i, j)) in g.edge_set()


def test_uniform_counts():
    assert uniform_weights(3).n_edges == 3
    assert list(uniform_weights(2).edges()) == [(0, 1, 1.0)]
    assert uniform_weights(100).n_edges == 4950


def test_symmetric_lookup():
    g = WeightGraph(3, [2, 0], [0, 1], [0.5, 0.25])
    assert g.weight(0, 2) == g.weight(2, 0) == 0.5
    assert g.rows.tolist() == [0, 0] and g.cols.tolist() == [1, 2]


def test_graph_validation():
    with pytest.raises(ParameterError):
        WeightGraph(2, [0], [0], [1.0])
    with pytest.raises(ParameterError):
        WeightGraph(2, [0], [1], [-1.0])
    with pytest.raises(ParameterError):
        WeightGraph(2, [0, 1], [1, 0], [1.0, 1.0])


def test_incidence_differences():
    g = WeightGraph(3, [0, 1], [1, 2], [1.0, 1.0])
    X = np.array([[1.0], [4.0], [9.0]])
    assert (g.incidence() @ X).ravel().tolist() == [-3.0, -5.0]


def test_csv_round_trip(tmp_path):
    g = knn_gaussian_weights(np.random.default_rng(1).standard_normal((8, 3)), 2)
    g.to_csv(tmp_path / "w.csv")
    first = (tmp_path / "w.csv").read_text().splitlines()[0].split(",")
    assert int(first[0]) >= 1 and int(first[0]) < int(first[1])
    h = WeightGraph.from_csv(tmp_path / "w.csv", n=8)
    assert h.edge_set() == g.edge_set()
    assert np.array_equal(h.weights, g.weights)


class TestOracleGraph:
    def test_single_cluster_is_complete(self):
        data = np.random.default_rng(2).standard_normal((6, 2))
        g = oracle_experiment_graph(data, Partition([1] * 6), k=1)
        assert g.n_edges == 15

    def test_two_singletons(self):
        g = oracle_experiment_graph(np.array([[0.0], [3.0]]), Partition([1, 2]), k=1)
        assert g.edge_set() == {(0, 1)}

    def test_all_within_pairs_present(self):
        rng = np.random.default_rng(3)
        labels = np.repeat(np.arange(1, 5), 10)
        data = rng.standard_normal((40, 5))
        truth = Partition(labels)
        g = oracle_experiment_graph(data, truth, k=3)
        for idx in truth.groups():
            for i, j in itertools.combinations(idx.tolist(), 2):
                assert (i, j) in g.edge_set()
        assert knn_gaussian_weights(data, 3).edge_set() <= g.edge_set()


class TestAssumption:
    def test_uniform_weights_hold(self):
        truth = Partition([1, 1, 1, 2, 2, 3, 3, 3, 3])
        rep = check_assumption2(uniform_weights(9), truth)
        assert rep.holds
        assert rep.margin == truth.sizes.min()
        for alpha in range(1, 4):
            assert np.all(rep.mu_values(alpha) == 0)

    def test_missing_in_cluster_edge(self):
        g = WeightGraph(3, [0], [2], [1.0])
        rep = check_assumption2(g, Partition([1, 1, 2]))
        assert not rep.holds and not rep.all_positive

    def test_margin_example(self):
        # clusters {1,2},{3,4}; in-cluster weights 1, cross weight only on (1,3)
        g = WeightGraph(4, [0, 2, 0], [1, 3, 2], [1.0, 1.0, 1.0])
        rep = check_assumption2(g, Partition([1, 1, 2, 2]))
        assert rep.mu_values(1)[0, 1] == 1.0
        assert rep.margin == 1.0 and rep.holds

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 10**6))
    def test_margin_matches_definition(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(3, 9))
        truth = Partition.from_labels(rng.integers(0, 3, n))
        W = np.triu(rng.random((n, n)) * (rng.random((n, n)) < 0.8), 1)
        r, c = np.nonzero(W)
        g = WeightGraph(n, r, c, W[r, c])
        Wf = W + W.T
        margin = math.inf
        for alpha, idx in enumerate(truth.groups(), start=1):
            for i, j in itertools.combinations(idx.tolist(), 2):
                mu = sum(abs(Wf[i, truth.members(b)].sum() - Wf[j, truth.members(b)].sum())
                         for b in range(1, truth.K + 1) if b != alpha)
                margin = min(margin, len(idx) * Wf[i, j] - mu)
        rep = check_assumption2(g, truth)
        assert rep.margin == pytest.approx(margin, abs=1e-12)
