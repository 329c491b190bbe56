"""Kernel module tests.

The load-bearing facts: with the linear kernel every posterior quantity must
reproduce the finite-dimensional estimator exactly (same regularization,
same confidence radius, same information gain), and the closed-form gradient
kernel blocks must match finite differences of the scalar kernel.
"""

import numpy as np
import pytest

from linpm.estimator import beta_radius, init_estimator, update, weighted_norm
from linpm.games import Game, NoiseModel
from linpm.kernels import (
    GradObs,
    HISTORY_CAP,
    KernelGame,
    KernelSpec,
    KernelState,
    KernelTruth,
    PairObs,
    PointObs,
    dueling_blocks,
    eval_cross,
    gradient_blocks,
    init_kernel_state,
    kernel_beta,
    kernel_decide,
    kernel_gap,
    kernel_gaps_all,
    kernel_info_gain,
    kernel_update,
    op_block,
    posterior,
    posterior_batch,
)
from linpm.policies import PolicyKind, decide, gaps_all, info_gain_full

from helpers import make_state


def random_linear_history(rng, d, n_obs):
    """Parallel linear and kernel states fed the same point observations."""
    lin = init_estimator(d)
    ker = init_kernel_state(KernelSpec("linear"))
    for _ in range(n_obs):
        x = rng.normal(size=d)
        x = x / max(1.0, np.linalg.norm(x))
        y = rng.normal()
        lin = update(lin, x[:, None], np.array([y]))
        ker = kernel_update(ker, PointObs(x), np.array([y]))
    return lin, ker


def bandit_from_points(X, sigma=0.5) -> Game:
    ops = tuple(x[:, None] for x in X)
    return Game(dim=X.shape[1], actions=X, obs_ops=ops,
                noise=NoiseModel("gaussian", sigma), name="kernel_twin")


# ---------------------------------------------------------------------------
# construction and validation


def test_kernel_spec_validation():
    with pytest.raises(ValueError):
        KernelSpec("poly")
    with pytest.raises(ValueError):
        KernelSpec("rbf", lengthscale=0.0)
    spec = KernelSpec("rbf", lengthscale=0.7)
    assert spec.value([0.3, -0.2], [0.3, -0.2]) == pytest.approx(1.0)


def test_rbf_gram_properties():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(6, 3))
    spec = KernelSpec("rbf", lengthscale=1.3)
    K = spec.gram(X, X)
    assert np.allclose(K, K.T)
    assert np.allclose(np.diag(K), 1.0)
    w = np.linalg.eigvalsh(K)
    assert w.min() > -1e-10


def test_descriptor_dimensions():
    assert PointObs([0.1, 0.2]).m == 1
    assert PairObs([0.1, 0.2], [0.0, 0.0]).m == 1
    assert GradObs([0.1, 0.2, 0.3]).m == 3


def test_kernel_game_validation():
    spec = KernelSpec("rbf")
    with pytest.raises(ValueError):
        KernelGame(spec, np.zeros((0, 2)))
    with pytest.raises(ValueError):
        KernelGame(spec, np.zeros((2, 2)), obs_kind="hessian")
    with pytest.raises(ValueError):
        KernelGame(KernelSpec("linear"), np.zeros((2, 2)), obs_kind="gradient")
    with pytest.raises(ValueError):
        KernelGame(spec, np.zeros((2, 2)), sigma=-1.0)
    game = KernelGame(spec, np.eye(2), obs_kind="gradient")
    assert game.n_actions == 2
    assert all(isinstance(d, GradObs) for d in game.descriptors)


def test_kernel_truth_norm_constraint():
    spec = KernelSpec("rbf")
    with pytest.raises(ValueError):
        KernelTruth(spec, np.zeros((1, 2)), np.array([2.0]))
    with pytest.raises(ValueError):
        KernelTruth(spec, np.zeros((2, 2)), np.array([0.5]))
    truth = KernelTruth(spec, np.array([[0.0, 0.0]]), np.array([1.0]))
    assert truth.f(np.array([[0.0, 0.0]]))[0] == pytest.approx(1.0)


def test_update_rejects_wrong_observation_shape():
    state = init_kernel_state(KernelSpec("rbf"))
    with pytest.raises(ValueError):
        kernel_update(state, GradObs([0.1, 0.2]), np.array([1.0]))


def test_history_cap_enforced():
    spec = KernelSpec("rbf")
    full = KernelState(spec=spec, descs=(PointObs([0.0]),) * HISTORY_CAP)
    with pytest.raises(ValueError):
        kernel_update(full, PointObs([0.0]), np.array([0.0]))


def test_gradient_requires_rbf():
    with pytest.raises(ValueError):
        gradient_blocks(KernelSpec("linear"), [0.0], [1.0])
    with pytest.raises(ValueError):
        eval_cross(KernelSpec("linear"), [0.0], GradObs([1.0]))


# ---------------------------------------------------------------------------
# posterior algebra


def test_posterior_reproduces_direct_solve():
    # mean and covariance against an explicit (K + I)^{-1} computation
    rng = np.random.default_rng(7)
    spec = KernelSpec("rbf", lengthscale=0.9)
    state = init_kernel_state(spec)
    descs, vals = [], []
    for _ in range(5):
        d = PointObs(rng.normal(size=2))
        y = rng.normal(size=1)
        state = kernel_update(state, d, y)
        descs.append(d)
        vals.append(y[0])
    g = GradObs(rng.normal(size=2))
    gy = rng.normal(size=2)
    state = kernel_update(state, g, gy)
    descs.append(g)
    vals.extend(gy)

    K = np.vstack([np.hstack([op_block(spec, a, b) for b in descs]) for a in descs])
    K = 0.5 * (K + K.T)
    y = np.array(vals)
    Z = rng.normal(size=(3, 2))
    C = np.hstack([np.stack([eval_cross(spec, z, d) for z in Z]) for d in descs])
    inv = np.linalg.inv(K + np.eye(len(y)))
    want_mean = C @ inv @ y
    want_cov = spec.gram(Z, Z) - C @ inv @ C.T

    got_mean, got_cov = posterior_batch(state, Z)
    assert np.allclose(got_mean, want_mean, atol=1e-10)
    assert np.allclose(got_cov, want_cov, atol=1e-10)

    m0, v0, c01 = posterior(state, Z[0], Z[1])
    assert m0 == pytest.approx(want_mean[0], abs=1e-10)
    assert v0 == pytest.approx(want_cov[0, 0], abs=1e-10)
    assert c01 == pytest.approx(want_cov[0, 1], abs=1e-10)


def test_empty_history_posterior_is_prior():
    spec = KernelSpec("rbf")
    state = init_kernel_state(spec)
    m, v = posterior(state, [0.4, -0.1])
    assert m == 0.0
    assert v == pytest.approx(1.0)
    assert kernel_beta(state, 0.1) == pytest.approx(
        np.sqrt(2.0 * np.log(10.0)) + 1.0)
    assert kernel_info_gain(state, PointObs([0.4, -0.1])) == pytest.approx(
        np.log(2.0))


def test_repeated_observation_shrinks_variance():
    spec = KernelSpec("rbf")
    state = init_kernel_state(spec)
    x = np.array([0.2, 0.3])
    last = 1.0
    for _ in range(30):
        state = kernel_update(state, PointObs(x), np.array([0.5]))
        _, v = posterior(state, x)
        assert -1e-12 <= v <= last + 1e-12
        last = v
    assert last < 0.05


# ---------------------------------------------------------------------------
# linear-kernel equivalence with the finite-dimensional estimator


def test_linear_kernel_matches_linear_estimator():
    rng = np.random.default_rng(42)
    for trial in range(30):
        d = int(rng.integers(1, 4))
        n = int(rng.integers(0, 10))
        lin, ker = random_linear_history(rng, d, n)
        Z = rng.normal(size=(4, d))
        Z = Z / np.maximum(1.0, np.linalg.norm(Z, axis=1))[:, None]

        means, cov = posterior_batch(ker, Z)
        assert np.allclose(means, Z @ lin.theta_hat, atol=1e-8)
        for i, z in enumerate(Z):
            assert cov[i, i] == pytest.approx(
                weighted_norm(lin, z) ** 2, abs=1e-8)
            assert kernel_info_gain(ker, PointObs(z)) == pytest.approx(
                info_gain_full(lin, z[:, None]), abs=1e-8)
        for delta in (1.0, 0.3, 0.05):
            assert kernel_beta(ker, delta) == pytest.approx(
                beta_radius(lin, delta), abs=1e-8)

        game = bandit_from_points(Z)
        beta = beta_radius(lin, 0.1)
        lin_gaps = gaps_all(lin, game, beta)
        ker_gaps = kernel_gaps_all(ker, beta, Z)
        assert np.allclose(lin_gaps, ker_gaps, atol=1e-8)


def test_linear_kernel_decision_parity():
    rng = np.random.default_rng(99)
    for trial in range(15):
        d = int(rng.integers(1, 4))
        K = int(rng.integers(2, 5))
        lin, ker = random_linear_history(rng, d, int(rng.integers(0, 8)))
        X = rng.normal(size=(K, d))
        X = X / np.maximum(1.0, np.linalg.norm(X, axis=1))[:, None]
        game = bandit_from_points(X)
        kgame = KernelGame(KernelSpec("linear"), X)
        for name in ("uniform", "greedy", "ucb", "ids_deterministic", "ids_full"):
            a = decide(PolicyKind(name, 0.1), lin, game)
            b = kernel_decide(PolicyKind(name, 0.1), ker, kgame)
            assert a.support == b.support, (trial, name)
            assert np.allclose(a.probs, b.probs, atol=1e-8)
            assert a.ratio == pytest.approx(b.ratio, rel=1e-8, abs=1e-8)


def test_kernel_decide_rejects_directed():
    kgame = KernelGame(KernelSpec("rbf"), np.eye(2))
    with pytest.raises(ValueError):
        kernel_decide(PolicyKind("ids_directed", 0.1), init_kernel_state(KernelSpec("rbf")), kgame)


def test_kernel_decide_contract():
    rng = np.random.default_rng(3)
    spec = KernelSpec("rbf", lengthscale=0.8)
    X = rng.normal(size=(5, 2))
    kgame = KernelGame(spec, X)
    state = init_kernel_state(spec)
    for _ in range(6):
        state = kernel_update(state, PointObs(rng.normal(size=2)), rng.normal(size=1))
    dec = kernel_decide(PolicyKind("uniform", 0.1), state, kgame)
    assert dec.dense and len(dec.support) == 5
    dec = kernel_decide(PolicyKind("ids_full", 0.1), state, kgame)
    assert 1 <= len(dec.support) <= 2
    assert dec.probs.sum() == pytest.approx(1.0)
    means, _ = posterior_batch(state, X)
    dec = kernel_decide(PolicyKind("greedy", 0.1), state, kgame)
    assert dec.support == (int(np.argmax(means)),)


# ---------------------------------------------------------------------------
# gradient and dueling blocks


def central_diff(f, x, h=1e-4):
    x = np.asarray(x, dtype=float)
    g = np.zeros_like(x)
    for i in range(len(x)):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (f(x + e) - f(x - e)) / (2.0 * h)
    return g


def test_gradient_cross_matches_finite_differences():
    rng = np.random.default_rng(11)
    for _ in range(25):
        spec = KernelSpec("rbf", lengthscale=float(rng.uniform(0.5, 2.0)))
        x = rng.normal(size=3)
        y = rng.normal(size=3)
        _, cross = gradient_blocks(spec, x, y)
        want = central_diff(lambda yy: spec.value(x, yy), y)
        assert np.allclose(cross, want, atol=1e-5)
        row = eval_cross(spec, x, GradObs(y))
        assert np.allclose(row, want, atol=1e-5)


def test_gradient_block_matches_finite_differences():
    rng = np.random.default_rng(12)
    h = 1e-4
    for _ in range(25):
        spec = KernelSpec("rbf", lengthscale=float(rng.uniform(0.5, 2.0)))
        x = rng.normal(size=2)
        y = rng.normal(size=2)
        block, _ = gradient_blocks(spec, x, y)
        want = np.zeros((2, 2))
        for i in range(2):
            for j in range(2):
                ei = np.zeros(2); ei[i] = h
                ej = np.zeros(2); ej[j] = h
                want[i, j] = (spec.value(x + ei, y + ej)
                              - spec.value(x + ei, y - ej)
                              - spec.value(x - ei, y + ej)
                              + spec.value(x - ei, y - ej)) / (4.0 * h * h)
        assert np.allclose(block, want, atol=1e-5)


def test_truth_gradient_matches_finite_differences():
    rng = np.random.default_rng(13)
    spec = KernelSpec("rbf", lengthscale=1.1)
    centers = rng.normal(size=(4, 2))
    coeffs = rng.normal(size=4)
    G = spec.gram(centers, centers)
    coeffs = coeffs / np.sqrt(coeffs @ G @ coeffs) * 0.9
    truth = KernelTruth(spec, centers, coeffs)
    for _ in range(10):
        x = rng.normal(size=2)
        want = central_diff(lambda z: float(truth.f(z[None, :])[0]), x)
        assert np.allclose(truth.grad(x), want, atol=1e-5)
        assert np.allclose(truth.observe_mean(GradObs(x)), want, atol=1e-5)


def test_dueling_blocks_identity():
    rng = np.random.default_rng(14)
    spec = KernelSpec("rbf", lengthscale=0.9)
    a, b, c, d = rng.normal(size=(4, 3))
    block, cross = dueling_blocks(spec, (a, b), (c, d))
    k = spec.value
    assert block == pytest.approx(k(a, c) - k(a, d) - k(b, c) + k(b, d), abs=1e-12)
    assert cross[0] == pytest.approx(k(a, c) - k(a, d), abs=1e-12)
    assert cross[1] == pytest.approx(k(b, c) - k(b, d), abs=1e-12)
    mean = KernelTruth(spec, np.array([[0.5, 0, 0]]), np.array([1.0])).observe_mean(
        PairObs(a, b))
    assert mean.shape == (1,)


def test_op_block_symmetry():
    rng = np.random.default_rng(15)
    spec = KernelSpec("rbf", lengthscale=1.2)
    descs = [PointObs(rng.normal(size=2)),
             PairObs(rng.normal(size=2), rng.normal(size=2)),
             GradObs(rng.normal(size=2))]
    for da in descs:
        for db in descs:
            B = op_block(spec, da, db)
            assert B.shape == (da.m, db.m)
            assert np.allclose(B, op_block(spec, db, da).T, atol=1e-12)


def test_mixed_history_smoke():
    rng = np.random.default_rng(16)
    spec = KernelSpec("rbf", lengthscale=0.8)
    state = init_kernel_state(spec)
    for _ in range(4):
        state = kernel_update(state, PointObs(rng.normal(size=2)), rng.normal(size=1))
        state = kernel_update(state, PairObs(rng.normal(size=2), rng.normal(size=2)),
                              rng.normal(size=1))
        state = kernel_update(state, GradObs(rng.normal(size=2)), rng.normal(size=2))
    assert state.t == 12 and state.mt == 16
    for desc in (PointObs([0.1, 0.1]), GradObs([0.0, 0.5])):
        assert kernel_info_gain(state, desc) >= 0.0
    g = kernel_gap(state, kernel_beta(state, 0.1), [0.0, 0.0],
                   rng.normal(size=(3, 2)))
    assert 0.0 <= g <= 1.0
