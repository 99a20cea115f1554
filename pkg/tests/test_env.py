import io
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from spectral_bandits.env import (
    TRACE_HEADER,
    NoiseModel,
    RegretTrace,
    RewardModel,
    gen_sparse_smooth_reward,
    latent_reward_model,
    load_latent_vectors,
    model_lambda_norm,
    record_step,
    sample_reward,
    to_unit_interval,
)
from spectral_bandits.errors import InvalidArgument, ParseError
from spectral_bandits.graph import gen_lattice, knn_graph, laplacian
from spectral_bandits.spectral import eigendecompose, lambda_norm, regularize


@given(seed=st.integers(0, 2**31), k=st.integers(1, 30))
def test_sparse_reward_postconditions(ba100, seed, k):
    _, basis = ba100
    m = gen_sparse_smooth_reward(basis, k, seed)
    assert np.all(m.alpha_star[k:] == 0)
    assert np.max(np.abs(m.mean_rewards)) == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(m.mean_rewards, basis.basis @ m.alpha_star, atol=1e-10)
    assert m.best_value == m.mean_rewards.max() == m.mean_rewards[m.best_node]


def test_sparse_reward_deterministic(ba100):
    _, basis = ba100
    a = gen_sparse_smooth_reward(basis, 5, 3)
    b = gen_sparse_smooth_reward(basis, 5, 3)
    assert np.array_equal(a.alpha_star, b.alpha_star)


def test_sparse_reward_invalid_k(ba100):
    _, basis = ba100
    with pytest.raises(InvalidArgument):
        gen_sparse_smooth_reward(basis, basis.dim + 1, 0)
    with pytest.raises(InvalidArgument):
        gen_sparse_smooth_reward(basis, 0, 0)


def test_first_eigenvector_is_constant(ba100):
    _, basis = ba100
    alpha = np.zeros(basis.dim)
    alpha[0] = 1.0
    m = RewardModel.from_alpha(basis, alpha)
    assert np.ptp(m.mean_rewards) < 1e-8


def test_sparse_rewards_are_smoother_than_dense(ba100):
    _, basis = ba100
    spec = regularize(basis, 0.01)
    rng = np.random.default_rng(0)
    sparse, dense = [], []
    for seed in range(50):
        a = gen_sparse_smooth_reward(basis, 5, seed).alpha_star
        r = rng.uniform(-1, 1, basis.dim)
        r *= np.linalg.norm(a) / np.linalg.norm(r)
        sparse.append(lambda_norm(a, spec))
        dense.append(lambda_norm(r, spec))
    assert np.mean(sparse) <= np.mean(dense)


def test_model_lambda_norm_full_basis(ba100):
    _, basis = ba100
    spec = regularize(basis, 0.01)
    m = gen_sparse_smooth_reward(basis, 5, 1)
    assert model_lambda_norm(m, basis, spec) == pytest.approx(lambda_norm(m.alpha_star, spec), rel=1e-10)


def test_unit_interval_map(ba100):
    _, basis = ba100
    m = gen_sparse_smooth_reward(basis, 4, 2)
    u = to_unit_interval(m, basis)
    assert u.transform == "unit_interval"
    assert np.allclose(u.mean_rewards, (m.mean_rewards + 1) / 2, atol=1e-12)
    assert u.mean_rewards.min() >= -1e-12 and u.mean_rewards.max() <= 1 + 1e-12
    assert u.best_node == m.best_node
    with pytest.raises(InvalidArgument):
        to_unit_interval(u, basis)


def test_from_means_requires_span(ba100):
    _, basis = ba100
    from spectral_bandits.spectral import truncate_basis

    small = truncate_basis(basis, 3)
    with pytest.raises(InvalidArgument):
        RewardModel.from_means(small, np.arange(basis.n, dtype=float))


# -- noise ------------------------------------------------------------------------

def test_noiseless_sample_is_exact(ba100):
    _, basis = ba100
    m = gen_sparse_smooth_reward(basis, 5, 0)
    rng = np.random.default_rng(0)
    assert all(sample_reward(m, NoiseModel(0.0), v, rng) == m.mean_rewards[v] for v in range(10))


def test_noise_mean_clt(ba100):
    _, basis = ba100
    m = gen_sparse_smooth_reward(basis, 5, 0)
    rng = np.random.default_rng(1)
    r = 0.01
    draws = [sample_reward(m, NoiseModel(r), 7, rng) for _ in range(100_000)]
    assert abs(np.mean(draws) - m.mean_rewards[7]) <= 4 * r / math.sqrt(100_000)


@pytest.mark.parametrize("scale,kind", [(-1.0, "gaussian"), (math.inf, "gaussian"), (1.0, "laplace")])
def test_noise_invalid(scale, kind):
    with pytest.raises(InvalidArgument):
        NoiseModel(scale, kind)


# -- regret trace -------------------------------------------------------------------

def test_best_arm_has_zero_regret(ba100):
    _, basis = ba100
    m = gen_sparse_smooth_reward(basis, 5, 0)
    tr = RegretTrace()
    for _ in range(20):
        record_step(tr, m, m.best_node, 0.0)
    assert tr.final_regret == 0.0


def test_fixed_arm_regret_is_linear(ba100):
    _, basis = ba100
    m = gen_sparse_smooth_reward(basis, 5, 0)
    v = int(np.argmin(m.mean_rewards))
    tr = RegretTrace()
    for _ in range(40):
        tr.record(m, v, 0.0)
    assert tr.final_regret == pytest.approx(40 * (m.best_value - m.mean_rewards[v]), rel=1e-12)


@given(arms=st.lists(st.integers(0, 99), min_size=1, max_size=60), seed=st.integers(0, 100))
def test_trace_invariants(ba100, arms, seed):
    _, basis = ba100
    m = gen_sparse_smooth_reward(basis, 5, seed)
    tr = RegretTrace()
    for v in arms:
        tr.record(m, v, 0.5)
    inst = np.array(tr.inst_regret)
    assert np.all(inst >= 0)
    assert np.all(np.diff(tr.cum_regret) >= 0)
    gaps = m.best_value - m.mean_rewards[arms]
    assert np.allclose(tr.cum_regret, np.cumsum(gaps), atol=1e-9)


def test_trace_regret_ignores_noise(ba100):
    _, basis = ba100
    m = gen_sparse_smooth_reward(basis, 5, 0)
    arms = [3, 1, 4, 1, 5]
    runs = []
    for seed in (0, 1):
        rng = np.random.default_rng(seed)
        tr = RegretTrace()
        for v in arms:
            tr.record(m, v, sample_reward(m, NoiseModel(0.1), v, rng))
        runs.append(tr)
    assert runs[0].rewards != runs[1].rewards
    assert runs[0].cum_regret == runs[1].cum_regret


def test_trace_csv_round_trip(ba100):
    _, basis = ba100
    m = gen_sparse_smooth_reward(basis, 5, 0)
    tr = RegretTrace(seed=4)
    for v in (0, 5, 9):
        tr.record(m, v, 0.123456789012345)
    buf = io.StringIO()
    tr.to_csv(buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == ",".join(TRACE_HEADER)
    assert lines[1].split(",")[:3] == ["4", "1", "0"]
    assert lines[1].split(",")[3] == "0.123456789012"
    back = RegretTrace.from_csv(io.StringIO(buf.getvalue()))
    assert back.arms == tr.arms and back.seed == 4
    assert np.allclose(back.cum_regret, tr.cum_regret, rtol=1e-11)


def test_trace_csv_errors():
    with pytest.raises(ParseError):
        RegretTrace.from_csv(io.StringIO("a,b\n"))
    with pytest.raises(ParseError, match="line 3"):
        RegretTrace.from_csv(io.StringIO(",".join(TRACE_HEADER) + "\n0,1,2,0.1,0,0\n0,2,x,0,0,0\n"))


# -- latent vectors -------------------------------------------------------------------

def test_latent_vectors_parse():
    items = load_latent_vectors(io.StringIO("# items\n1 0\n0 1\n1 1  # last\n"))
    assert items.shape == (3, 2)
    g = knn_graph(items, 1)
    basis = eigendecompose(laplacian(g))
    m = latent_reward_model(basis, items, [1.0, 0.0])
    assert np.allclose(m.mean_rewards, [1, 0, 1], atol=1e-12)


def test_latent_vectors_ragged():
    with pytest.raises(ParseError, match="line 2"):
        load_latent_vectors(io.StringIO("1 2\n3\n"))
    with pytest.raises(ParseError):
        load_latent_vectors(io.StringIO("1 a\n"))
    with pytest.raises(ParseError):
        load_latent_vectors(io.StringIO("# nothing\n"))


def test_latent_user_dimension_mismatch():
    basis = eigendecompose(laplacian(gen_lattice(2, 1)))
    with pytest.raises(InvalidArgument):
        latent_reward_model(basis, np.eye(2), [1.0, 0.0, 0.0])
