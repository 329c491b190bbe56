"""Tests for the contextual planner: joint-ratio descent, dominance over the
conditional baseline, and expected alignment bounds."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from linpm.classify import alignment_upper
from linpm.contextual import (
    ContextualGame,
    ContextualPlan,
    conditional_ids,
    contextual_ids,
    expected_alignment_upper,
    plan_joint_ratio,
)
from linpm.games import Game, NoiseModel, build_game
from linpm.policies import NoInformationError, PolicyKind, decide

from helpers import make_state, random_bandit, random_monitoring_game, rollout


def two_context_game(rng, d=2, K=3):
    g0 = random_bandit(rng, d=d, K=K)
    g1 = random_monitoring_game(rng, d=d, K=K)
    nu = rng.uniform(0.2, 0.8)
    return ContextualGame(games=(g0, g1), nu=np.array([nu, 1.0 - nu]))


def conditional_plan(state, cgame, delta=0.1) -> ContextualPlan:
    decs = tuple(conditional_ids(state, cgame, z, delta)
                 for z in range(cgame.n_contexts))
    return ContextualPlan(decs, 0.0)


# ---------------------------------------------------------------------------
# construction and validation


def test_contextual_game_validation():
    rng = np.random.default_rng(0)
    g = random_bandit(rng, d=2, K=3)
    with pytest.raises(ValueError):
        ContextualGame(games=(), nu=np.array([]))
    with pytest.raises(ValueError):
        ContextualGame(games=(g, random_bandit(rng, d=3, K=3)),
                       nu=np.array([0.5, 0.5]))
    with pytest.raises(ValueError):
        ContextualGame(games=(g,), nu=np.array([0.5, 0.5]))
    with pytest.raises(ValueError):
        ContextualGame(games=(g, g), nu=np.array([0.9, 0.9]))
    with pytest.raises(ValueError):
        ContextualGame(games=(g, g), nu=np.array([1.5, -0.5]))
    cg = ContextualGame(games=(g, g), nu=np.array([0.25, 0.75]))
    assert cg.dim == 2 and cg.n_contexts == 2
    assert cg.labels == (0, 1)


def test_conditional_ids_index_check():
    rng = np.random.default_rng(1)
    cg = two_context_game(rng)
    state = make_state(np.eye(2))
    with pytest.raises(IndexError):
        conditional_ids(state, cg, 2)
    with pytest.raises(IndexError):
        conditional_ids(state, cg, -1)


def test_all_blind_contexts_raise():
    zero = build_game({"kind": "zero_info", "actions": [[1.0, 0.0], [0.0, 1.0]]})
    cg = ContextualGame(games=(zero, zero), nu=np.array([0.5, 0.5]))
    state = make_state(np.eye(2))
    with pytest.raises(NoInformationError):
        contextual_ids(state, cg)


# ---------------------------------------------------------------------------
# descent behaviour


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_joint_never_worse_than_conditional(seed):
    rng = np.random.default_rng(seed)
    cg = two_context_game(rng)
    theta = rng.normal(size=2)
    theta *= 0.5 / np.linalg.norm(theta)
    state, _ = rollout(cg.games[0], theta, "uniform", int(rng.integers(0, 20)), rng)
    plan = contextual_ids(state, cg)
    baseline = plan_joint_ratio(conditional_plan(state, cg), cg)
    assert plan.joint_ratio <= baseline + 1e-9


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_sweep_ratios_monotone_descent(seed):
    rng = np.random.default_rng(seed + 77)
    cg = two_context_game(rng)
    state, _ = rollout(cg.games[1], np.array([0.3, -0.2]), "uniform",
                       int(rng.integers(0, 15)), rng)
    plan = contextual_ids(state, cg)
    ratios = np.asarray(plan.sweep_ratios)
    assert ratios.size >= 1
    assert np.all(np.diff(ratios) <= 1e-12)
    assert np.isclose(ratios[-1], plan.joint_ratio)


def test_plan_support_and_probs_contract():
    rng = np.random.default_rng(5)
    cg = two_context_game(rng)
    state, _ = rollout(cg.games[0], np.array([0.4, 0.1]), "uniform", 10, rng)
    plan = contextual_ids(state, cg)
    assert len(plan.conditionals) == cg.n_contexts
    for dec in plan.conditionals:
        assert 1 <= len(dec.support) <= 2
        assert np.isclose(dec.probs.sum(), 1.0)
        assert np.all(dec.probs > 0.0)


def test_dirac_context_matches_plain_ids():
    # with all mass on one context the joint objective is the plain
    # information ratio of that context's game
    rng = np.random.default_rng(9)
    for seed in range(20):
        sub = np.random.default_rng(seed)
        g = random_monitoring_game(sub, d=2, K=4)
        other = random_bandit(sub, d=2, K=3)
        cg = ContextualGame(games=(g, other), nu=np.array([1.0, 0.0]))
        state, _ = rollout(g, random := 0.4 * np.ones(2) / np.sqrt(2.0),
                           "uniform", int(sub.integers(0, 12)), rng)
        plan = contextual_ids(state, cg)
        dec = decide(PolicyKind("ids_full", 0.1), state, g)
        if dec.fallback:
            continue
        assert plan.joint_ratio <= dec.ratio + 1e-9
        assert dec.ratio <= plan.joint_ratio + 1e-9


def test_duplicated_context_matches_single():
    # splitting one context into two identical halves leaves the optimal
    # joint ratio unchanged: two-point mixtures already attain the optimum
    rng = np.random.default_rng(21)
    for seed in range(20):
        sub = np.random.default_rng(seed + 1000)
        g = random_bandit(sub, d=2, K=4)
        state, _ = rollout(g, np.array([0.3, 0.3]), "uniform",
                           int(sub.integers(0, 12)), rng)
        single = contextual_ids(state, ContextualGame((g,), np.array([1.0])))
        split = contextual_ids(
            state, ContextualGame((g, g), np.array([0.5, 0.5])))
        assert abs(single.joint_ratio - split.joint_ratio) <= 1e-6 * (
            1.0 + single.joint_ratio)


def test_blind_context_plays_greedy():
    # a context without observations contributes only regret, so the optimal
    # plan plays the smallest-gap action there with probability one
    bandit = build_game({"kind": "bandit", "actions": [[1.0, 0.0], [0.0, 1.0]]})
    zero = build_game({"kind": "zero_info", "actions": [[1.0, 0.0], [0.0, 1.0]]})
    cg = ContextualGame(games=(bandit, zero), nu=np.array([0.5, 0.5]))
    state = make_state(50.0 * np.eye(2), b=50.0 * np.array([0.5, 0.1]))
    plan = contextual_ids(state, cg, delta=0.1)
    blind = plan.conditionals[1]
    assert blind.support == (int(np.argmin(blind.gaps)),)
    assert np.allclose(blind.probs, [1.0])


def test_zero_weight_context_ignored():
    rng = np.random.default_rng(3)
    g = random_bandit(rng, d=2, K=3)
    zero = build_game({"kind": "zero_info", "actions": [[1.0, 0.0], [0.0, 1.0]]})
    cg = ContextualGame(games=(g, zero), nu=np.array([1.0, 0.0]))
    state, _ = rollout(g, np.array([0.2, -0.1]), "uniform", 8, rng)
    plan = contextual_ids(state, cg)
    assert np.isfinite(plan.joint_ratio)


# ---------------------------------------------------------------------------
# expected alignment bound


def test_expected_alignment_requires_one_subset_per_context():
    rng = np.random.default_rng(4)
    cg = two_context_game(rng)
    with pytest.raises(ValueError):
        expected_alignment_upper(cg, [(0, 1)])


def test_expected_alignment_dirac_matches_single_game():
    rng = np.random.default_rng(11)
    for seed in range(25):
        sub = np.random.default_rng(seed + 300)
        g = random_bandit(sub, d=3, K=5)
        subset = (0, 1, 2)
        cg = ContextualGame(games=(g,), nu=np.array([1.0]))
        got = expected_alignment_upper(cg, [subset])
        want = alignment_upper(g, subset)
        assert got == pytest.approx(want, rel=1e-9, abs=1e-12)


def test_expected_alignment_half_weight_doubles():
    rng = np.random.default_rng(12)
    g = random_bandit(rng, d=3, K=4)
    subset = (0, 1, 2, 3)
    dirac = expected_alignment_upper(
        ContextualGame(games=(g,), nu=np.array([1.0])), [subset])
    halved = expected_alignment_upper(
        ContextualGame(games=(g, g), nu=np.array([0.5, 0.5])),
        [subset, subset])
    assert halved == pytest.approx(2.0 * dirac, rel=1e-9)


def test_expected_alignment_blind_contexts_infinite():
    zero = build_game({"kind": "zero_info", "actions": [[1.0, 0.0], [0.0, 1.0]]})
    cg = ContextualGame(games=(zero, zero), nu=np.array([0.5, 0.5]))
    got = expected_alignment_upper(cg, [(0, 1), (0, 1)])
    assert got == float("inf")


def test_expected_alignment_no_pairs_is_zero():
    rng = np.random.default_rng(13)
    cg = two_context_game(rng)
    assert expected_alignment_upper(cg, [(0,), (1,)]) == 0.0


def test_expected_alignment_observer_context_covers_blind_one():
    # a direction only estimable in the observer context pays 1 / nu(observer)
    bandit = build_game({"kind": "bandit", "actions": [[1.0, 0.0], [0.0, 1.0]]})
    zero = build_game({"kind": "zero_info", "actions": [[1.0, 0.0], [0.0, 1.0]]})
    cg = ContextualGame(games=(zero, bandit), nu=np.array([0.75, 0.25]))
    got = expected_alignment_upper(cg, [(0, 1), (0, 1)])
    base = alignment_upper(bandit, (0, 1))
    assert np.isfinite(got)
    assert got == pytest.approx(base / 0.25, rel=1e-9)
