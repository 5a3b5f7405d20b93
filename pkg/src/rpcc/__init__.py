"""Convex clustering on randomly projected data, with recovery bounds and baselines."""

__version__ = "0.1.0"

from .baseline import KMeansConfig, kmeans, rp_kmeans
from .bounds import (
    COARSENING, PERFECT, EpsilonThresholds, GammaBounds, GammaInterval, check_assumption3,
    epsilon_thresholds_logk, epsilon_thresholds_logn, gamma_bounds, hat_gamma_bounds,
    recovery_interval_logk, recovery_interval_logn,
)
from .dataset import (
    MixtureSpec, Partition, centroids, generate_mixture, load_csv, save_csv, unbalanced_fixture,
)
from .exceptions import AssumptionError, CSVParseError, ParameterError, SpecError
from .metrics import accuracy, adjusted_rand_index, rand_index
from .path import ClusteringPath, detect_perfect_recovery, is_coarsening, parse_grid, sweep
from .projection import (
    ProjectionMatrix, SubgaussianProfile, build_difference_sets, embedding_dim_logk,
    embedding_dim_logn, sample_projection, singular_bounds, verify_difference_sets,
    verify_isometry,
)
from .solver import ProblemInstance, SolveResult, extract_partition, solve
from .weights import (
    WeightGraph, check_assumption2, knn_gaussian_weights, oracle_experiment_graph, uniform_weights,
)
