import math
from decimal import Decimal, getcontext

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from spectral_bandits.env import NoiseModel, RegretTrace, RewardModel, gen_sparse_smooth_reward, to_unit_interval
from spectral_bandits.errors import InvalidArgument
from spectral_bandits.graph import Graph, gen_erdos_renyi, laplacian
from spectral_bandits.policies import (
    EliminatorConfig,
    EliminatorState,
    beta_coefficient,
    eliminator_phase,
    iter_eliminator_phases,
    phase_starts,
    run_linear_eliminator,
    run_spectral_eliminator,
)
from spectral_bandits.spectral import eigendecompose, flat_spectrum, lambda_norm, regularize


def beta_oracle(r, k, t, delta, c):
    getcontext().prec = 40
    inner = 2 * Decimal(k) * (1 + Decimal(t).ln() / Decimal(2).ln()) / Decimal(delta)
    return float(2 * Decimal(r) * (14 * inner.ln()).sqrt() + Decimal(c))


def test_beta_values():
    assert beta_coefficient(0.0, 10, 256, 0.1, 0.7) == 0.7
    b = beta_coefficient(1.0, 10, 256, 0.1, 0.0)
    assert b == pytest.approx(beta_oracle(1, 10, 256, 0.1, 0), rel=1e-14)
    assert b == pytest.approx(20.487, abs=1e-3)


@given(k=st.integers(1, 1000), t=st.integers(2, 10**6), delta=st.floats(1e-4, 0.9))
def test_beta_monotone(k, t, delta):
    b = beta_coefficient(0.1, k, t, delta, 0.0)
    assert beta_coefficient(0.1, k + 1, t, delta, 0.0) > b
    assert beta_coefficient(0.1, k, t, delta / 2, 0.0) > b


@pytest.mark.parametrize("args", [(0.1, 0, 10, 0.1, 0), (0.1, 5, 1, 0.1, 0), (0.1, 5, 10, 1.0, 0), (-1, 5, 10, 0.1, 0)])
def test_beta_invalid(args):
    with pytest.raises(InvalidArgument):
        beta_coefficient(*args)


def test_phase_starts():
    assert phase_starts(250) == [1, 2, 4, 8, 16, 32, 64, 128]
    assert phase_starts(1) == [1]
    assert phase_starts(256)[-1] == 256
    for t in (1, 7, 100, 1023, 1024):
        assert len(phase_starts(t)) == math.floor(math.log2(t)) + 1


def _setup(seed, n=25):
    g = gen_erdos_renyi(n, 0.3, seed)
    basis = eigendecompose(laplacian(g))
    spec = regularize(basis, 0.01)
    model = to_unit_interval(gen_sparse_smooth_reward(basis, 4, seed), basis)
    return basis, spec, model


def test_run_covers_horizon_and_nests():
    basis, spec, model = _setup(0)
    cfg = EliminatorConfig.build(basis.n, 250, 0.01, 0.001, lambda_norm(model.alpha_star, spec))
    trace = RegretTrace()
    states = list(iter_eliminator_phases(basis, spec, model, NoiseModel(0.01), cfg, np.random.default_rng(0), trace))
    assert len(trace) == 250
    assert [s.phase for s in states] == list(range(1, 10))
    for a, b in zip(states, states[1:]):
        assert len(b.active) and set(b.active) <= set(a.active)


def test_single_arm_never_eliminates():
    basis = eigendecompose(laplacian(Graph(1)))
    spec = regularize(basis, 0.01)
    model = RewardModel.from_alpha(basis, np.array([0.5]))
    cfg = EliminatorConfig.build(1, 20, 0.01, 0.1, 0.1)
    tr = run_spectral_eliminator(basis, spec, model, NoiseModel(0.01), cfg, np.random.default_rng(0))
    assert tr.meta["active_sizes"] == [1] * 6 and tr.final_regret == 0.0


@pytest.mark.parametrize("seed", range(10))
def test_noiseless_best_arm_survives(seed):
    basis, spec, model = _setup(seed)
    cfg = EliminatorConfig.build(basis.n, 512, 0.0, 0.001, lambda_norm(model.alpha_star, spec))
    trace = RegretTrace()
    for s in iter_eliminator_phases(basis, spec, model, NoiseModel(0.0), cfg, np.random.default_rng(seed), trace):
        assert model.best_node in s.active


def test_eliminates_with_exact_norm():
    """Noiseless, exact C: long phases shrink the active set."""
    basis, spec, model = _setup(1)
    cfg = EliminatorConfig.build(basis.n, 1024, 0.0, 0.001, lambda_norm(model.alpha_star, spec))
    tr = run_spectral_eliminator(basis, spec, model, NoiseModel(0.0), cfg, np.random.default_rng(0))
    assert tr.meta["active_sizes"][-1] < basis.n


def test_phase_uses_only_phase_data():
    basis, spec, model = _setup(2)
    cfg = EliminatorConfig.build(basis.n, 64, 0.01, 0.001, 1.0)
    states = list(iter_eliminator_phases(basis, spec, model, NoiseModel(0.01), cfg, np.random.default_rng(0), RegretTrace()))
    for s in states[1:]:
        length = min(2 * s.phase_starts[s.phase - 2], 65) - s.phase_starts[s.phase - 2]
        assert s.phase_rls.n_updates == length


def test_linear_eliminator_is_flat_spectrum():
    basis, _, model = _setup(3)
    cfg = EliminatorConfig.build(basis.n, 100, 0.01, 0.001, 1.0)
    a = run_linear_eliminator(basis, model, NoiseModel(0.01), cfg, np.random.default_rng(1), lambda_reg=1.0)
    b = run_spectral_eliminator(basis, flat_spectrum(basis.dim, 1.0), model, NoiseModel(0.01), cfg, np.random.default_rng(1))
    assert a.arms == b.arms


def test_empty_active_set_rejected():
    basis, spec, model = _setup(4)
    state = EliminatorState(np.array([], dtype=int), 1, [1, 2], 1.0, 3)
    with pytest.raises(InvalidArgument):
        eliminator_phase(state, model, NoiseModel(), basis, spec, np.random.default_rng(), RegretTrace())


def test_deterministic():
    basis, spec, model = _setup(5)
    cfg = EliminatorConfig.build(basis.n, 100, 0.01, 0.001, 1.0)
    runs = [run_spectral_eliminator(basis, spec, model, NoiseModel(0.01), cfg, np.random.default_rng(9)) for _ in range(2)]
    assert list(runs[0].rows()) == list(runs[1].rows())
