"""SpectralUCB and its flat-regularizer special case, LinUCB.

Both share one implementation: LinUCB is SpectralUCB run with the spectrum
``lambda * I`` on the same arm features.

Argmax ties are resolved toward the lowest node index. Scores within a
relative ``TIE_RTOL`` of the maximum count as tied, so that the eager scan,
the lazy queue and the direct reference scan agree even though they round
differently.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

from ..env import NoiseModel, RegretTrace, RewardModel, sample_reward
from ..errors import InvalidArgument
from ..spectral import (
    EffectiveDimension,
    RegularizedSpectrum,
    SpectralBasis,
    effective_dimension,
    flat_spectrum,
)
from .rls import CHECK_EVERY, RlsState

TIE_RTOL = 1e-9


def confidence_coefficient(r_noise, d, t_horizon, lambda_reg, delta, c_bound) -> float:
    """``2 R sqrt(d log(1 + T/lambda) + 2 log(1/delta)) + C``."""
    if isinstance(d, EffectiveDimension):
        d = d.d
    if not 0 < delta < 1:
        raise InvalidArgument(f"delta must lie in (0, 1), got {delta}")
    if r_noise < 0 or c_bound < 0:
        raise InvalidArgument("noise scale and norm bound must be nonnegative")
    if d < 1 or t_horizon < 1 or lambda_reg <= 0:
        raise InvalidArgument("d, horizon and lambda must be positive")
    radical = d * math.log1p(t_horizon / lambda_reg) + 2.0 * math.log(1.0 / delta)
    return 2.0 * r_noise * math.sqrt(radical) + c_bound


def regret_bound(r_noise, d, t_horizon, lambda_reg, delta, c_bound) -> float:
    """High-probability cap on SpectralUCB's cumulative regret after ``t_horizon`` rounds.

    ``[4 R sqrt(d log(1+T/lambda) + 2 log(1/delta)) + 2 C + 2] * sqrt(4 d T log(1+T/lambda))``
    with ``lambda`` the smallest entry of the regularizer. Valid when every
    mean reward lies in [-1, 1] and ``C`` bounds the Lambda-norm of alpha.
    """
    if isinstance(d, EffectiveDimension):
        d = d.d
    noise_part = confidence_coefficient(r_noise, d, t_horizon, lambda_reg, delta, 0.0)
    log_term = math.log1p(t_horizon / lambda_reg)
    return (2.0 * noise_part + 2.0 * c_bound + 2.0) * math.sqrt(4.0 * d * t_horizon * log_term)


@dataclass(frozen=True)
class UcbConfig:
    """Parameters of one SpectralUCB / LinUCB run.

    With ``c_schedule="log_t"`` the norm bound grows as ``C_t = log t`` and
    ``c_bound`` holds its final value ``log T``; ``c_coeff`` is then the
    largest coefficient used during the run.
    """

    r_noise: float
    delta: float
    c_bound: float
    lambda_reg: float
    horizon: int
    c_coeff: float
    eff_dim: int
    lazy: bool = False
    c_schedule: str = "fixed"

    @classmethod
    def build(
        cls,
        spectrum: RegularizedSpectrum,
        horizon: int,
        r_noise: float = 0.01,
        delta: float = 0.001,
        c_bound: float | None = None,
        lazy: bool = False,
        c_schedule: str = "fixed",
        dimension: str = "effective",
    ) -> "UcbConfig":
        if horizon < 1:
            raise InvalidArgument(f"horizon must be >= 1, got {horizon}")
        if dimension == "effective":
            d = effective_dimension(spectrum, horizon).d
        elif dimension == "ambient":
            d = len(spectrum)
        else:
            raise InvalidArgument(f"dimension must be 'effective' or 'ambient', got {dimension!r}")
        if c_schedule == "log_t":
            c_bound = math.log(horizon)
        elif c_schedule != "fixed":
            raise InvalidArgument(f"c_schedule must be 'fixed' or 'log_t', got {c_schedule!r}")
        elif c_bound is None:
            raise InvalidArgument("c_bound is required with a fixed schedule")
        c = confidence_coefficient(r_noise, d, horizon, spectrum.lambda_reg, delta, c_bound)
        return cls(
            r_noise=r_noise,
            delta=delta,
            c_bound=float(c_bound),
            lambda_reg=spectrum.lambda_reg,
            horizon=int(horizon),
            c_coeff=c,
            eff_dim=d,
            lazy=lazy,
            c_schedule=c_schedule,
        )

    def coefficient(self, t: int) -> float:
        """Confidence coefficient used at round ``t`` (1-based)."""
        if self.c_schedule == "fixed":
            return self.c_coeff
        return self.c_coeff - self.c_bound + math.log(t)


def _pick(nodes, scores) -> int:
    best = scores.max()
    tied = nodes[scores >= best - TIE_RTOL * max(1.0, abs(best))]
    return int(tied.min())


def spectral_ucb_select(state: RlsState, cfg: UcbConfig, basis: SpectralBasis, t: int = 1) -> int:
    """Reference argmax of ``<x_v, alpha_hat> + c ||x_v||_{V^{-1}}`` over all nodes.

    Evaluates every width from scratch; the run loop uses the cheaper
    :class:`EagerScan` or :class:`LazyQueue` instead.
    """
    x = basis.basis
    if x.shape[1] != state.dim:
        raise InvalidArgument("state dimension does not match the basis")
    widths = np.sqrt(np.maximum(state.sq_widths(x), 0.0))
    scores = x @ state.alpha_hat + cfg.coefficient(t) * widths
    return _pick(np.arange(x.shape[0]), scores)


def lin_ucb_select(state: RlsState, cfg: UcbConfig, basis: SpectralBasis, t: int = 1) -> int:
    """LinUCB choice; ``state`` must carry the flat prior ``lambda * I``."""
    return spectral_ucb_select(state, cfg, basis, t)


class EagerScan:
    """Scores every arm each round.

    Squared widths are cached and downdated with the rank-one vector returned
    by :meth:`RlsState.update`, then resynchronized on the same cadence as
    the state's own consistency check.
    """

    def __init__(self, features, state: RlsState):
        self.features = features
        self.sq = state.sq_widths(features)
        self.nodes = np.arange(features.shape[0])
        self.evaluations = 0

    def select(self, state, c):
        scores = self.features @ state.alpha_hat + c * np.sqrt(np.maximum(self.sq, 0.0))
        self.evaluations += len(scores)
        return _pick(self.nodes, scores)

    def observe(self, state, g):
        proj = self.features @ g
        self.sq -= proj * proj
        if state.n_updates % CHECK_EVERY == 0:
            self.sq = state.sq_widths(self.features)


class LazyQueue:
    """Priority queue of stale upper confidence bounds.

    An arm scored at round ``s`` keeps the key ``m_s + c_max w_s - D_s`` where
    ``D`` accumulates ``max_v ||x_v|| * ||alpha_t - alpha_{t-1}||``. Widths
    never grow and ``c_t <= c_max``, so ``key + D_t`` bounds the arm's current
    score. Arms are re-scored from the top until no stale bound can reach
    the tie band of the best fresh score.
    """

    def __init__(self, features, c_max):
        self.features = features
        self.c_max = c_max
        self.row_norm = float(np.sqrt(np.max(np.einsum("ij,ij->i", features, features))))
        self.heap = [(-math.inf, v) for v in range(features.shape[0])]
        self.drift = 0.0
        self.prev_alpha = None
        self.evaluations = 0

    def select(self, state, c):
        alpha = state.alpha_hat
        if self.prev_alpha is not None:
            self.drift += self.row_norm * float(np.linalg.norm(alpha - self.prev_alpha))
        self.prev_alpha = alpha.copy()

        heap = self.heap
        nodes, scores, keys = [], [], []
        best = -math.inf
        batch = 1
        while heap:
            bound = -heap[0][0] + self.drift
            if nodes and bound < best - TIE_RTOL * max(1.0, abs(best)):
                break
            idx = [heapq.heappop(heap)[1] for _ in range(min(batch, len(heap)))]
            x = self.features[idx]
            means = x @ alpha
            widths = np.sqrt(np.maximum(state.sq_widths(x), 0.0))
            fresh = means + c * widths
            nodes.extend(idx)
            scores.append(fresh)
            keys.append(means + self.c_max * widths - self.drift)
            best = max(best, float(fresh.max()))
            batch *= 2
        scores = np.concatenate(scores)
        keys = np.concatenate(keys)
        nodes = np.asarray(nodes)
        self.evaluations += len(nodes)
        for v, k in zip(nodes.tolist(), keys.tolist()):
            heapq.heappush(heap, (-k, v))
        return _pick(nodes, scores)

    def observe(self, state, g):
        pass


def run_spectral_ucb(
    basis: SpectralBasis,
    spectrum: RegularizedSpectrum,
    model: RewardModel,
    noise: NoiseModel,
    cfg: UcbConfig,
    rng,
    seed: int = 0,
) -> RegretTrace:
    """Play ``cfg.horizon`` rounds of select, observe, update, record."""
    if len(spectrum) != basis.dim:
        raise InvalidArgument("spectrum length does not match basis dimension")
    features = basis.basis
    state = RlsState.from_spectrum(spectrum)
    if cfg.lazy:
        selector = LazyQueue(features, cfg.coefficient(cfg.horizon))
    else:
        selector = EagerScan(features, state)
    trace = RegretTrace(seed=seed)
    for t in range(1, cfg.horizon + 1):
        v = selector.select(state, cfg.coefficient(t))
        r = sample_reward(model, noise, v, rng)
        g = state.update(features[v], r)
        selector.observe(state, g)
        trace.record(model, v, r)
    trace.meta.update(
        width_evaluations=selector.evaluations,
        log_det_ratio=state.log_det_ratio,
        eff_dim=cfg.eff_dim,
        c_coeff=cfg.c_coeff,
    )
    return trace


def lin_ucb_config(basis: SpectralBasis, horizon: int, lambda_reg: float = 1.0, **kwargs) -> UcbConfig:
    """:meth:`UcbConfig.build` on the flat spectrum ``lambda * I``."""
    return UcbConfig.build(flat_spectrum(basis.dim, lambda_reg), horizon, **kwargs)


def run_lin_ucb(basis, model, noise, cfg: UcbConfig, rng, seed: int = 0) -> RegretTrace:
    """LinUCB: SpectralUCB with the spectrum replaced by ``cfg.lambda_reg * I``."""
    spectrum = flat_spectrum(basis.dim, cfg.lambda_reg)
    return run_spectral_ucb(basis, spectrum, model, noise, cfg, rng, seed)
