import numpy as np
import pytest

from rpcc.bounds import GammaInterval
from rpcc.dataset import MixtureSpec, Partition, generate_mixture
from rpcc.exceptions import ParameterError
from rpcc.path import detect_perfect_recovery, is_coarsening, parse_grid, sweep
from rpcc.solver import ProblemInstance, solve
from rpcc.weights import WeightGraph, knn_gaussian_weights, oracle_experiment_graph

TWO = np.array([[0.0], [2.0]])
EDGE = WeightGraph(2, [0], [1], [1.0])


class TestGrid:
    def test_inclusive_descending(self):
        g = parse_grid("[10:-0.2:2]")
        assert g.size == 41 and g[0] == 10.0 and g[-1] == 2.0

    def test_hundred_points(self):
        g = parse_grid("[10:-0.1:0.1]")
        assert g.size == 100 and g[-1] == pytest.approx(0.1)

    def test_union(self):
        g = parse_grid("[1:1:3] u [10:5:20]")
        assert g.tolist() == [1, 2, 3, 10, 15, 20]

    def test_list(self):
        assert parse_grid("0.5, 1, 2").tolist() == [0.5, 1.0, 2.0]

    @pytest.mark.parametrize("text", ["", "[1:0:2]", "[1:1:0]", "a,b"])
    def test_bad(self, text):
        with pytest.raises(ParameterError):
            parse_grid(text)


def test_zero_gamma_point():
    data = np.arange(4.0)[:, None]
    path = sweep(data, knn_gaussian_weights(data, 1), [0.0])
    assert path.points[0].K_found == 4


def test_two_point_path():
    path = sweep(TWO, EDGE, [0.5, 1.0, 2.0])
    assert [p.gamma for p in path.points] == [2.0, 1.0, 0.5]
    assert [p.K_found for p in path.points] == [1, 1, 2]


def test_empty_grid():
    with pytest.raises(ParameterError):
        sweep(TWO, EDGE, [])


@pytest.fixture(scope="module")
def mixture_path():
    data, truth = generate_mixture(MixtureSpec.basis(10, 3, 0.01, 30, seed=2))
    g = oracle_experiment_graph(data, truth, 3)
    grid = parse_grid("[3:-0.25:0.25] u [0.2:-0.05:0.05] u [0.04:-0.01:0.01]")
    return data, truth, g, sweep(data, g, grid, truth)


def test_path_metrics_consistent(mixture_path):
    _, truth, _, path = mixture_path
    gammas = path.gammas
    assert np.all(np.diff(gammas) < 0)
    for p in path.points:
        assert p.success and p.rel_gap <= 1e-6
        same = p.partition.same_as(truth)
        assert (p.rand_index == 1.0) == same == (p.adjusted_rand_index == 1.0)
        assert 0 <= p.rand_index <= 1 and 0 <= p.accuracy <= 1 and -1 < p.adjusted_rand_index <= 1


def test_cluster_count_monotone(mixture_path):
    counts = [p.K_found for p in mixture_path[3].points]
    assert counts == sorted(counts)


def test_recovery_is_full_coarsening(mixture_path):
    _, truth, _, path = mixture_path
    rep = detect_perfect_recovery(path, truth)
    assert rep.gammas
    by_gamma = {p.gamma: p.partition for p in path.points}
    for g in rep.gammas:
        ok, _ = is_coarsening(by_gamma[g], truth)
        assert ok and by_gamma[g].K == truth.K
    assert rep.practical_upper == max(rep.gammas) or rep.practical_upper in rep.gammas


def test_warm_matches_cold(mixture_path):
    data, _, g, _ = mixture_path
    prev = None
    for gamma in [2.0, 1.0, 0.5, 0.1, 0.03]:
        warm = solve(ProblemInstance(data, g, gamma), tol=1e-11, max_iter=200000, warm=prev)
        cold = solve(ProblemInstance(data, g, gamma), tol=1e-11, max_iter=200000)
        assert warm.success and cold.success
        assert abs(warm.primal_obj - cold.primal_obj) <= 1e-8 * abs(cold.primal_obj)
        prev = warm


def test_reported_gamma_and_interval():
    truth = Partition([1, 1])
    path = sweep(TWO, EDGE, [0.5, 1.0, 2.0], truth)
    rep = detect_perfect_recovery(path, truth, GammaInterval(0.9, 3.0))
    assert rep.gammas == [1.0, 2.0]
    assert rep.inside == [1.0, 2.0] and rep.all_inside_recovered and not rep.vacuous
    assert rep.practical_upper == 2.0


def test_vacuous_interval(caplog):
    truth = Partition([1, 1])
    path = sweep(TWO, EDGE, [0.5, 1.0], truth)
    rep = detect_perfect_recovery(path, truth, GammaInterval(5.0, 6.0))
    assert rep.vacuous and rep.all_inside_recovered
    assert "vacuous" in caplog.text


class TestCoarsening:
    def test_identity(self):
        t = Partition([1, 1, 2, 2])
        assert is_coarsening(t, t) == (True, True)
        one = Partition([1, 1, 1])
        assert is_coarsening(one, one) == (True, False)

    def test_single_block(self):
        assert is_coarsening(Partition([1] * 4), Partition([1, 1, 2, 2])) == (True, False)

    def test_split(self):
        assert is_coarsening(Partition([1, 1, 1, 2]), Partition([1, 1, 2, 2]))[0] is False


def test_csv_columns(tmp_path):
    truth = Partition([1, 1])
    path = sweep(TWO, EDGE, [0.5, 1.0], truth)
    path.to_csv(tmp_path / "p.csv")
    lines = (tmp_path / "p.csv").read_text().splitlines()
    assert lines[0] == "gamma,K_found,RI,ARI,accuracy,rel_gap"
    assert len(lines) == 3
