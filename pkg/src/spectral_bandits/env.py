"""Reward environments, noise and regret bookkeeping."""
from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgument, NumericalError, ParseError
from .spectral import SpectralBasis

TRACE_HEADER = ("seed", "t", "arm", "reward", "inst_regret", "cum_regret")


def fmt12(x: float) -> str:
    return f"{x:.12g}"


def round12(x: float) -> float:
    """The value a reader recovers from the 12-significant-digit trace format."""
    return float(fmt12(x))


@dataclass(frozen=True, eq=False)
class RewardModel:
    """Mean reward ``f(v) = <x_v, alpha_star>`` over all nodes.

    ``transform`` records how the means were post-processed: ``"none"`` or
    ``"unit_interval"`` (the affine map ``f -> (f + 1) / 2``).
    """

    alpha_star: np.ndarray
    mean_rewards: np.ndarray
    best_value: float
    best_node: int
    transform: str = "none"

    def __post_init__(self):
        self.alpha_star.setflags(write=False)
        self.mean_rewards.setflags(write=False)

    @classmethod
    def from_alpha(cls, basis: SpectralBasis, alpha, transform="none") -> "RewardModel":
        alpha = np.asarray(alpha, dtype=float).copy()
        if alpha.shape != (basis.dim,):
            raise InvalidArgument(f"alpha must have length {basis.dim}, got {alpha.shape}")
        means = basis.basis @ alpha
        best = int(np.argmax(means))
        return cls(alpha, means, float(means[best]), best, transform)

    @classmethod
    def from_means(cls, basis: SpectralBasis, means, transform="none", atol=1e-8):
        """Express node means in ``basis``; they must lie in its span."""
        means = np.asarray(means, dtype=float)
        if means.shape != (basis.n,):
            raise InvalidArgument(f"means must have length {basis.n}, got {means.shape}")
        alpha = basis.basis.T @ means
        resid = np.max(np.abs(basis.basis @ alpha - means))
        if resid > atol:
            raise InvalidArgument(
                f"mean rewards are not representable in a {basis.dim}-vector basis "
                f"(residual {resid:.2e})"
            )
        return cls.from_alpha(basis, alpha, transform)

    def gap(self, v: int) -> float:
        return self.best_value - float(self.mean_rewards[v])


@dataclass(frozen=True)
class NoiseModel:
    """Zero-mean Gaussian noise with standard deviation ``scale``."""

    scale: float = 0.0
    kind: str = "gaussian"

    def __post_init__(self):
        if self.kind != "gaussian":
            raise InvalidArgument(f"unsupported noise kind {self.kind!r}")
        if not (math.isfinite(self.scale) and self.scale >= 0):
            raise InvalidArgument(f"noise scale must be finite and >= 0, got {self.scale}")


def gen_sparse_smooth_reward(basis: SpectralBasis, k: int, seed=None) -> RewardModel:
    """Random reward supported on the ``k`` smoothest eigenvectors.

    Coefficients are drawn uniform on (-1, 1) and the vector is rescaled so
    that ``max_v |f(v)| == 1``.
    """
    if not 1 <= k <= basis.dim:
        raise InvalidArgument(f"k must lie in [1, {basis.dim}], got {k}")
    rng = np.random.default_rng(seed)
    alpha = np.zeros(basis.dim)
    alpha[:k] = rng.uniform(-1.0, 1.0, size=k)
    peak = np.max(np.abs(basis.basis @ alpha))
    if peak == 0:
        raise NumericalError("sampled reward function is identically zero")
    alpha /= peak
    return RewardModel.from_alpha(basis, alpha)


def to_unit_interval(model: RewardModel, basis: SpectralBasis) -> RewardModel:
    """Apply ``f -> (f + 1) / 2`` so that rewards in [-1, 1] land in [0, 1]."""
    if model.transform != "none":
        raise InvalidArgument(f"model already transformed ({model.transform})")
    return RewardModel.from_means(basis, (model.mean_rewards + 1.0) / 2.0, "unit_interval")


def sample_reward(model: RewardModel, noise: NoiseModel, v: int, rng) -> float:
    """Noisy observation ``f(v) + eps``; one normal draw per call."""
    eps = rng.normal(0.0, noise.scale)
    return float(model.mean_rewards[v]) + eps


@dataclass
class RegretTrace:
    """Per-step record of one run.

    Regret is pseudo-regret: it is computed from mean rewards, the observed
    (noisy) rewards are kept for diagnostics only.
    """

    seed: int = 0
    arms: list = field(default_factory=list)
    rewards: list = field(default_factory=list)
    inst_regret: list = field(default_factory=list)
    cum_regret: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.arms)

    @property
    def horizon(self) -> int:
        return len(self.arms)

    @property
    def final_regret(self) -> float:
        return self.cum_regret[-1] if self.cum_regret else 0.0

    def record(self, model: RewardModel, v: int, r: float) -> "RegretTrace":
        inst = model.gap(v)
        prev = self.cum_regret[-1] if self.cum_regret else 0.0
        self.arms.append(int(v))
        self.rewards.append(float(r))
        self.inst_regret.append(inst)
        self.cum_regret.append(prev + inst)
        return self

    def rows(self):
        for i, (a, r, ir, cr) in enumerate(
            zip(self.arms, self.rewards, self.inst_regret, self.cum_regret), start=1
        ):
            yield (str(self.seed), str(i), str(a), fmt12(r), fmt12(ir), fmt12(cr))

    def to_csv(self, sink) -> None:
        if hasattr(sink, "write"):
            _write_trace(self, sink)
        else:
            with open(sink, "w", newline="", encoding="utf-8") as fh:
                _write_trace(self, fh)

    @classmethod
    def from_csv(cls, source) -> "RegretTrace":
        if hasattr(source, "read"):
            return _read_trace(source)
        with open(os.fspath(source), newline="", encoding="utf-8") as fh:
            return _read_trace(fh)


def record_step(trace: RegretTrace, model: RewardModel, v: int, r: float) -> RegretTrace:
    return trace.record(model, v, r)


def _write_trace(trace, fh):
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(TRACE_HEADER)
    writer.writerows(trace.rows())


def _read_trace(fh):
    reader = csv.reader(fh)
    header = next(reader, None)
    if header is None or tuple(header) != TRACE_HEADER:
        raise ParseError(f"bad trace header {header!r}", 1)
    trace = RegretTrace()
    for lineno, row in enumerate(reader, start=2):
        try:
            seed, _t, arm, reward, inst, cum = row
            trace.seed = int(seed)
            trace.arms.append(int(arm))
            trace.rewards.append(float(reward))
            trace.inst_regret.append(float(inst))
            trace.cum_regret.append(float(cum))
        except ValueError:
            raise ParseError(f"malformed trace row {row!r}", lineno) from None
    return trace


def load_latent_vectors(source) -> np.ndarray:
    """Read one whitespace-separated vector per line; ``#`` starts a comment."""
    if hasattr(source, "read"):
        text = source.read()
    else:
        with open(os.fspath(source), encoding="utf-8") as fh:
            text = fh.read()
    rows, dim = [], None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            vec = [float(tok) for tok in line.split()]
        except ValueError:
            raise ParseError(f"non-numeric entry in {raw.strip()!r}", lineno) from None
        if dim is None:
            dim = len(vec)
        elif len(vec) != dim:
            raise ParseError(f"row {len(rows) + 1} has {len(vec)} entries, expected {dim}", lineno)
        rows.append(vec)
    if not rows:
        raise ParseError("no vectors found")
    return np.array(rows, dtype=float)


def latent_reward_model(basis: SpectralBasis, items, user) -> RewardModel:
    """Mean reward of item ``j`` is ``<user, items[j]>``."""
    items = np.asarray(items, dtype=float)
    user = np.asarray(user, dtype=float)
    if items.ndim != 2 or user.shape != (items.shape[1],):
        raise InvalidArgument(
            f"user vector of length {user.size} does not match item dimension {items.shape[-1]}"
        )
    return RewardModel.from_means(basis, items @ user)


def model_lambda_norm(model: RewardModel, basis: SpectralBasis, spectrum) -> float:
    """Lambda-norm of the model's means projected onto ``basis``.

    This is the exact norm bound ``C`` a policy using ``basis`` and
    ``spectrum`` would need; for the full basis it equals the norm of
    ``alpha_star``.
    """
    from .spectral import lambda_norm

    return lambda_norm(basis.basis.T @ model.mean_rewards, spectrum)
