"""Shared utilities for the test suite: hand-crafted estimator states,
random game factories and short self-play rollouts."""

import numpy as np

from linpm.estimator import EstimatorState, init_estimator, update
from linpm.games import Environment, Game, NoiseModel, sample_observation
from linpm.policies import PolicyKind, decide


def make_state(V, b=None, t=0) -> EstimatorState:
    """Build an estimator state with an explicit Gram matrix (tests only)."""
    V = np.asarray(V, dtype=float)
    d = V.shape[0]
    b = np.zeros(d) if b is None else np.asarray(b, dtype=float)
    L = np.linalg.cholesky(V)
    logdet = 2.0 * float(np.sum(np.log(np.diag(L))))
    theta = np.linalg.solve(V, b)
    return EstimatorState(V=V, b=b, theta_hat=theta, t=t, logdetV=logdet,
                          chol=L, V_inv=np.linalg.inv(V))


def random_bandit(rng, d=None, K=None, sigma=1.0) -> Game:
    d = d or int(rng.integers(1, 5))
    K = K or int(rng.integers(2, 7))
    X = rng.normal(size=(K, d))
    X = X / (2.0 * np.abs(np.linalg.norm(X, axis=1)).max())
    ops = tuple(x[:, None] for x in X)
    return Game(dim=d, actions=X, obs_ops=ops,
                noise=NoiseModel("gaussian", sigma), name="random_bandit")


def random_monitoring_game(rng, d=None, K=None, sigma=1.0, zero_prob=0.3) -> Game:
    """Random partial monitoring instance; some operators may be zero and
    observation dimensions vary per action."""
    d = d or int(rng.integers(1, 5))
    K = K or int(rng.integers(2, 7))
    X = rng.normal(size=(K, d))
    X = X / (2.0 * np.abs(np.linalg.norm(X, axis=1)).max())
    ops = []
    for _ in range(K):
        if rng.random() < zero_prob:
            ops.append(np.zeros((d, 1)))
        else:
            m = int(rng.integers(1, 4))
            A = rng.normal(size=(d, m))
            A = A / max(1.0, np.linalg.norm(A, 2))
            ops.append(A)
    return Game(dim=d, actions=X, obs_ops=tuple(ops),
                noise=NoiseModel("gaussian", sigma), name="random_monitoring")


def random_theta(rng, d, scale=0.5):
    v = rng.normal(size=d)
    return scale * v / np.linalg.norm(v)


def rollout(game, theta, policy_name, n, rng, delta=0.1):
    """Play n rounds and return the final estimator state plus history."""
    env = Environment(game, theta)
    policy = PolicyKind(policy_name, delta=delta)
    state = init_estimator(game.dim)
    picks = []
    for _ in range(n):
        decision = decide(policy, state, game)
        k = decision.sample(rng)
        obs = sample_observation(env, k, rng)
        state = update(state, game.obs_ops[k], obs)
        picks.append(k)
    return state, picks
