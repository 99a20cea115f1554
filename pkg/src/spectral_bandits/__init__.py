"""Bandits whose arms are graph nodes and whose rewards are smooth on the graph."""
from .env import NoiseModel, RegretTrace, RewardModel, gen_sparse_smooth_reward, sample_reward
from .errors import (
    ConfigError,
    InvalidArgument,
    NumericalError,
    ParseError,
    SpectralBanditsError,
    ValidationError,
)
from .graph import (
    Graph,
    gen_barabasi_albert,
    gen_erdos_renyi,
    gen_lattice,
    knn_graph,
    laplacian,
    load_edge_list,
    save_edge_list,
)
from .harness import ExperimentConfig, GraphSpec, PolicySpec, RewardSpec, effdim_report, run_experiment
from .policies import (
    EliminatorConfig,
    RlsState,
    UcbConfig,
    run_lin_ucb,
    run_linear_eliminator,
    run_spectral_eliminator,
    run_spectral_ucb,
)
from .spectral import SpectralBasis, eigendecompose, effective_dimension, regularize, truncate_basis

__version__ = "0.1.0"
