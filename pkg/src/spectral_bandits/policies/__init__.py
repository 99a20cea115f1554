"""Bandit policies over a spectral arm basis."""
from .eliminator import (
    EliminatorConfig,
    EliminatorState,
    beta_coefficient,
    eliminator_phase,
    iter_eliminator_phases,
    phase_starts,
    run_linear_eliminator,
    run_spectral_eliminator,
)
from .rls import RlsState, rls_update, ucb_width
from .ucb import (
    EagerScan,
    LazyQueue,
    UcbConfig,
    confidence_coefficient,
    lin_ucb_config,
    lin_ucb_select,
    regret_bound,
    run_lin_ucb,
    run_spectral_ucb,
    spectral_ucb_select,
)

__all__ = [
    "EagerScan",
    "EliminatorConfig",
    "EliminatorState",
    "LazyQueue",
    "RlsState",
    "UcbConfig",
    "beta_coefficient",
    "confidence_coefficient",
    "eliminator_phase",
    "iter_eliminator_phases",
    "lin_ucb_config",
    "lin_ucb_select",
    "phase_starts",
    "regret_bound",
    "rls_update",
    "run_lin_ucb",
    "run_linear_eliminator",
    "run_spectral_eliminator",
    "run_spectral_ucb",
    "spectral_ucb_select",
    "ucb_width",
]
