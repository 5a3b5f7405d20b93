import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rpcc.dataset import (
    MixtureSpec, Partition, UNBALANCED_SIZES, as_data_matrix, balanced_counts, centroids,
    generate_mixture, load_csv, save_csv, unbalanced_fixture,
)
from rpcc.exceptions import CSVParseError, ParameterError, SpecError


class TestPartition:
    def test_basic_fields(self):
        p = Partition([1, 2, 2, 3])
        assert p.n == 4 and p.K == 3
        assert p.sizes.tolist() == [1, 2, 1]
        assert p.members(2).tolist() == [1, 2]

    def test_rejects_gaps(self):
        with pytest.raises(ParameterError):
            Partition([1, 3])

    def test_from_labels_orders_by_first_appearance(self):
        assert Partition.from_labels([7, 7, 3, 9, 3]).labels.tolist() == [1, 1, 2, 3, 2]

    def test_same_as_ignores_label_names(self):
        assert Partition([1, 1, 2]).same_as(Partition([2, 2, 1]))
        assert not Partition([1, 1, 2]).same_as(Partition([1, 2, 2]))

    def test_labels_read_only(self):
        p = Partition([1, 2])
        with pytest.raises(ValueError):
            p.labels[0] = 2


class TestMixture:
    def test_reproducible(self):
        spec = MixtureSpec.basis(5, 3, 0.1, 30, seed=4)
        a, pa = generate_mixture(spec)
        b, pb = generate_mixture(spec)
        assert np.array_equal(a, b) and pa == pb

    def test_balanced_sizes_exact(self):
        _, p = generate_mixture(MixtureSpec.basis(4, 4, 0.1, 40, seed=0))
        assert p.sizes.tolist() == [10] * 4

    def test_zero_variance_gives_means(self):
        spec = MixtureSpec(np.zeros((1, 3)), [0.0], [1.0], 5)
        data, p = generate_mixture(spec)
        assert np.array_equal(data, np.zeros((5, 3)))
        assert p.K == 1

    def test_two_component_small_variance(self):
        spec = MixtureSpec([[0, 0], [10, 0]], [1e-6, 1e-6], [0.5, 0.5], 4, seed=3)
        data, p = generate_mixture(spec)
        assert p.labels.tolist() == [1, 1, 2, 2]
        assert np.abs(data - np.array([[0, 0], [0, 0], [10, 0], [10, 0]])).max() < 1e-2

    def test_within_cluster_distance_concentrates(self):
        spec = MixtureSpec.basis(2000, 20, 0.005, 1000, seed=0)
        data, p = generate_mixture(spec)
        idx = p.members(1)
        diffs = data[idx[:, None]] - data[idx[None, :]]
        sq = np.sum(diffs**2, axis=-1)[np.triu_indices(idx.size, 1)]
        assert abs(sq.mean() - 20.0) < 0.5

    def test_cluster_means_close(self):
        d, sigma2 = 20, 0.5
        data, p = generate_mixture(MixtureSpec.basis(d, 2, sigma2, 500, seed=1))
        for alpha, n_k in enumerate(p.sizes, start=1):
            err = np.linalg.norm(data[p.labels == alpha].mean(0) - np.eye(2, d)[alpha - 1])
            assert err <= 5 * np.sqrt(sigma2) * np.sqrt(d / n_k)

    def test_unbalanced_sampling_keeps_valid_partition(self):
        spec = MixtureSpec.basis(3, 3, 0.1, 5, seed=2, balanced=False)
        _, p = generate_mixture(spec)
        assert p.n == 5 and set(p.labels) == set(range(1, p.K + 1))

    def test_validation_lists_every_field(self):
        with pytest.raises(SpecError) as err:
            MixtureSpec([[0.0], [0.0]], [-1.0, 1.0], [0.2, 0.2], 0)
        assert {"variances", "mix_weights", "n", "means"} <= set(err.value.fields)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(1, 500), st.lists(st.floats(0.01, 1.0), min_size=1, max_size=8))
    def test_balanced_counts_sum(self, n, raw):
        w = np.array(raw) / np.sum(raw)
        counts = balanced_counts(n, w)
        assert counts.sum() == n
        assert np.all(np.abs(counts - n * w) < 1 + 1e-9)


class TestUnbalancedFixture:
    def test_default_counts(self):
        data, p = unbalanced_fixture(d=20)
        assert p.n == 7700 and p.K == 20
        assert p.sizes.tolist() == list(UNBALANCED_SIZES)
        assert data.shape == (7700, 20)

    def test_dimension_override(self):
        data, p = unbalanced_fixture(d=10, sizes=(5, 3))
        assert data.shape == (8, 10) and p.sizes.tolist() == [5, 3]


class TestCSV:
    def test_plain_matrix(self, tmp_path):
        f = tmp_path / "a.csv"
        f.write_text("1,2\n3,4\n5,6\n")
        data, p = load_csv(f)
        assert data.shape == (3, 2) and p is None

    def test_labels(self, tmp_path):
        f = tmp_path / "a.csv"
        f.write_text("1,2,1\n3,4,2\n")
        data, p = load_csv(f, has_labels=True)
        assert p.labels.tolist() == [1, 2] and data.shape == (2, 2)

    def test_bad_cell(self, tmp_path):
        f = tmp_path / "a.csv"
        f.write_text("1,x\n")
        with pytest.raises(CSVParseError) as err:
            load_csv(f)
        assert err.value.row == 1

    def test_ragged(self, tmp_path):
        f = tmp_path / "a.csv"
        f.write_text("1,2\n3\n")
        with pytest.raises(CSVParseError) as err:
            load_csv(f)
        assert err.value.row == 2

    def test_empty(self, tmp_path):
        f = tmp_path / "a.csv"
        f.write_text("")
        with pytest.raises(CSVParseError):
            load_csv(f)

    def test_header_skipped(self, tmp_path):
        f = tmp_path / "a.csv"
        f.write_text("x,y\n1,2\n")
        data, _ = load_csv(f, header=True)
        assert data.tolist() == [[1.0, 2.0]]

    @settings(max_examples=30, deadline=None)
    @given(st.integers(1, 6), st.integers(1, 4), st.integers(0, 10**6))
    def test_round_trip(self, tmp_path_factory, n, d, seed):
        rng = np.random.default_rng(seed)
        data = rng.standard_normal((n, d)) * 10.0 ** rng.integers(-5, 5)
        p = Partition.from_labels(rng.integers(0, 3, n))
        f = tmp_path_factory.mktemp("csv") / "rt.csv"
        save_csv(f, data, p)
        back, q = load_csv(f, has_labels=True)
        assert np.allclose(back, data, rtol=1e-12, atol=0)
        assert q == p


def test_centroids_rows():
    data = np.array([[0.0], [2.0], [10.0]])
    c = centroids(data, Partition([1, 1, 2]))
    assert c[:, 0].tolist() == [4.0, 1.0, 10.0]


def test_non_finite_rejected():
    with pytest.raises(ParameterError):
        as_data_matrix([[1.0, np.nan]])
