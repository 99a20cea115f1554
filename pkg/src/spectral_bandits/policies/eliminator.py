"""SpectralEliminator: phased exploration with elimination of weak arms.

Phase ``j`` covers rounds ``2**(j-1) .. min(2**j - 1, T)``. Inside a phase the
arm with the largest width under the phase-local matrix is played, ignoring
rewards; at the end of the phase arms whose upper bound falls below the best
lower bound are dropped. Only data from the current phase enters the
estimate. With a flat spectrum this is LinearEliminator.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..env import NoiseModel, RegretTrace, RewardModel, sample_reward
from ..errors import InvalidArgument
from ..spectral import RegularizedSpectrum, SpectralBasis, flat_spectrum
from .rls import CHECK_EVERY, RlsState
from .ucb import _pick

#: Relative slack when comparing upper bounds with the elimination threshold.
KEEP_RTOL = 1e-12


def beta_coefficient(r_noise, k_arms, t_horizon, delta, c_bound) -> float:
    """``2 R sqrt(14 log(2 K (1 + log2 T) / delta)) + C``."""
    if not 0 < delta < 1:
        raise InvalidArgument(f"delta must lie in (0, 1), got {delta}")
    if k_arms < 1:
        raise InvalidArgument(f"need at least one arm, got {k_arms}")
    if t_horizon < 2:
        raise InvalidArgument(f"horizon must be >= 2, got {t_horizon}")
    if r_noise < 0 or c_bound < 0:
        raise InvalidArgument("noise scale and norm bound must be nonnegative")
    inner = 2.0 * k_arms * (1.0 + math.log2(t_horizon)) / delta
    return 2.0 * r_noise * math.sqrt(14.0 * math.log(inner)) + c_bound


def phase_starts(horizon: int) -> list[int]:
    """``[1, 2, 4, ...]``: ``floor(log2 T) + 1`` phase start rounds."""
    if horizon < 1:
        raise InvalidArgument(f"horizon must be >= 1, got {horizon}")
    return [2**j for j in range(int(horizon).bit_length())]


@dataclass(frozen=True)
class EliminatorConfig:
    horizon: int
    beta: float
    r_noise: float = 0.01
    delta: float = 0.001
    c_bound: float = 0.0

    @classmethod
    def build(cls, n_arms, horizon, r_noise=0.01, delta=0.001, c_bound=0.0) -> "EliminatorConfig":
        # beta's formula needs T >= 2; a one-round run never eliminates anyway
        beta = beta_coefficient(r_noise, n_arms, max(horizon, 2), delta, c_bound)
        return cls(int(horizon), beta, r_noise, delta, float(c_bound))


@dataclass
class EliminatorState:
    """Arms still in play at the start of phase ``phase``."""

    active: np.ndarray
    phase: int
    phase_starts: list
    beta: float
    horizon: int
    phase_rls: RlsState | None = None
    history: list = field(default_factory=list)

    @property
    def done(self) -> bool:
        return self.phase > len(self.phase_starts)


def eliminator_phase(
    state: EliminatorState,
    model: RewardModel,
    noise: NoiseModel,
    basis: SpectralBasis,
    spectrum: RegularizedSpectrum,
    rng,
    trace: RegretTrace,
) -> EliminatorState:
    """Run phase ``state.phase`` and return the state for the next one."""
    if not len(state.active):
        raise InvalidArgument("active arm set is empty")
    j = state.phase
    start = state.phase_starts[j - 1]
    stop = min(2 * start - 1, state.horizon)
    active = state.active
    x_act = basis.basis[active]
    rls = RlsState.from_spectrum(spectrum)
    sq = x_act * x_act @ (1.0 / rls.prior)
    positions = np.arange(len(active))
    for _t in range(start, stop + 1):
        i = _pick(positions, sq)
        v = int(active[i])
        r = sample_reward(model, noise, v, rng)
        g = rls.update(basis.basis[v], r)
        proj = x_act @ g
        sq -= proj * proj
        if rls.n_updates % CHECK_EVERY == 0:
            sq = rls.sq_widths(x_act)
        trace.record(model, v, r)
    trace.meta["width_evaluations"] = trace.meta.get("width_evaluations", 0) + len(active) * (
        stop - start + 1
    )

    means = x_act @ rls.alpha_hat
    radius = state.beta * np.sqrt(np.maximum(rls.sq_widths(x_act), 0.0))
    p = float(np.max(means - radius))
    keep = means + radius >= p - KEEP_RTOL * max(1.0, abs(p))
    return EliminatorState(
        active=active[keep],
        phase=j + 1,
        phase_starts=state.phase_starts,
        beta=state.beta,
        horizon=state.horizon,
        phase_rls=rls,
        history=state.history + [active],
    )


def iter_eliminator_phases(basis, spectrum, model, noise, cfg: EliminatorConfig, rng, trace):
    """Yield the state before each phase and after the last one."""
    if cfg.horizon < 1:
        raise InvalidArgument(f"horizon must be >= 1, got {cfg.horizon}")
    if len(spectrum) != basis.dim:
        raise InvalidArgument("spectrum length does not match basis dimension")
    state = EliminatorState(
        active=np.arange(basis.n),
        phase=1,
        phase_starts=phase_starts(cfg.horizon),
        beta=cfg.beta,
        horizon=cfg.horizon,
    )
    yield state
    while not state.done:
        state = eliminator_phase(state, model, noise, basis, spectrum, rng, trace)
        yield state


def run_spectral_eliminator(
    basis: SpectralBasis,
    spectrum: RegularizedSpectrum,
    model: RewardModel,
    noise: NoiseModel,
    cfg: EliminatorConfig,
    rng,
    seed: int = 0,
) -> RegretTrace:
    trace = RegretTrace(seed=seed)
    sizes = [len(s.active) for s in iter_eliminator_phases(basis, spectrum, model, noise, cfg, rng, trace)]
    trace.meta["active_sizes"] = sizes
    return trace


def run_linear_eliminator(basis, model, noise, cfg: EliminatorConfig, rng, seed: int = 0, lambda_reg=1.0):
    """SpectralEliminator with the flat spectrum ``lambda * I``."""
    return run_spectral_eliminator(
        basis, flat_spectrum(basis.dim, lambda_reg), model, noise, cfg, rng, seed
    )
