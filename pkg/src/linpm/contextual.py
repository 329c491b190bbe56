"""Contextual partial monitoring: per-context games sharing one parameter.

Conditional IDS minimizes the information ratio separately inside the
realized context.  Contextual IDS minimizes the joint ratio
(sum_z nu(z) Delta_z)^2 / (sum_z nu(z) I_z) over products of per-context
two-point mixtures by cyclic coordinate descent, which can only improve on
the conditional plan it starts from.
"""

from dataclasses import dataclass

import numpy as np

from .estimator import EstimatorState, beta_radius
from .games import Game
from .classify import direction_bound, least_norm_group_bound
from .policies import (
    NoInformationError,
    PolicyDecision,
    PolicyKind,
    decide,
    gaps_all,
    info_gain_full,
    safe_ratio,
)

DESCENT_TOL = 1e-9
MAX_SWEEPS = 200


@dataclass(frozen=True, eq=False)
class ContextualGame:
    games: tuple
    nu: np.ndarray
    labels: tuple = ()

    def __post_init__(self):
        if len(self.games) == 0:
            raise ValueError("need at least one context")
        d = self.games[0].dim
        if any(g.dim != d for g in self.games):
            raise ValueError("contexts must share the parameter dimension")
        nu = np.asarray(self.nu, dtype=float)
        if nu.shape != (len(self.games),):
            raise ValueError("nu length mismatch")
        if np.any(nu < -1e-12) or abs(nu.sum() - 1.0) > 1e-9:
            raise ValueError("nu must be a probability vector")
        object.__setattr__(self, "nu", nu)
        if not self.labels:
            object.__setattr__(self, "labels", tuple(range(len(self.games))))

    @property
    def dim(self) -> int:
        return self.games[0].dim

    @property
    def n_contexts(self) -> int:
        return len(self.games)


@dataclass(frozen=True, eq=False)
class ContextualPlan:
    conditionals: tuple          # one PolicyDecision per context
    joint_ratio: float
    sweep_ratios: tuple = ()


def conditional_ids(state: EstimatorState, cgame: ContextualGame, z: int,
                    delta: float = 0.1) -> PolicyDecision:
    """Plain IDS decision inside context z."""
    if not 0 <= z < cgame.n_contexts:
        raise IndexError("context index out of range")
    return decide(PolicyKind("ids_full", delta), state, cgame.games[z])


def _mixture_stats(gaps, infos, sup, p):
    i, j = sup
    g = (1.0 - p) * gaps[i] + p * gaps[j]
    h = (1.0 - p) * infos[i] + p * infos[j]
    return g, h


def _best_context_choice(gaps, infos, nu_z, g_rest, h_rest):
    """Minimize ((g_rest + nu_z * gap)^2) / (h_rest + nu_z * info) over all
    two-point mixtures of one context.  Candidate p per pair: endpoints, the
    clipped stationary point, and the clipped numerator root."""
    K = len(gaps)
    ii, jj = np.triu_indices(K, k=0)   # include singletons via i == j
    a = g_rest + nu_z * gaps[ii]
    b = nu_z * (gaps[jj] - gaps[ii])
    c = h_rest + nu_z * infos[ii]
    dd = nu_z * (infos[jj] - infos[ii])
    with np.errstate(divide="ignore", invalid="ignore"):
        pstat = (a * dd - 2.0 * b * c) / (b * dd)
        proot = -a / b
    pstat = np.where(np.isfinite(pstat), pstat, 0.0)
    proot = np.where(np.isfinite(proot), proot, 0.0)
    P = np.stack([np.zeros_like(a), np.ones_like(a),
                  np.clip(pstat, 0.0, 1.0), np.clip(proot, 0.0, 1.0)], axis=1)
    G = a[:, None] + b[:, None] * P
    H = c[:, None] + dd[:, None] * P
    with np.errstate(divide="ignore", invalid="ignore"):
        val = np.where(G <= 0.0, 0.0, np.where(H <= 0.0, np.inf, G * G / H))
    flat = int(np.argmin(val))
    pair_idx, cand = divmod(flat, 4)
    i, j = int(ii[pair_idx]), int(jj[pair_idx])
    p = float(P[pair_idx, cand])
    return (i, j), p, float(val[pair_idx, cand])


def contextual_ids(state: EstimatorState, cgame: ContextualGame,
                   delta: float = 0.1, max_sweeps: int = MAX_SWEEPS,
                   tol: float = DESCENT_TOL) -> ContextualPlan:
    """Joint-ratio minimizing product plan via cyclic coordinate descent."""
    beta_sqrt = beta_radius(state, delta)
    nu = cgame.nu
    n_ctx = cgame.n_contexts
    all_gaps, all_infos = [], []
    for g in cgame.games:
        all_gaps.append(gaps_all(state, g, beta_sqrt))
        all_infos.append(np.array([info_gain_full(state, A) for A in g.obs_ops]))

    exp_info_best = sum(nu[z] * all_infos[z].max() for z in range(n_ctx))
    exp_gap_floor = sum(nu[z] * all_gaps[z].min() for z in range(n_ctx))
    if exp_info_best <= 0.0 and exp_gap_floor > 0.0:
        raise NoInformationError("no context provides information")

    # start from the conditional plan; descent can only improve on it
    sups, ps = [], []
    for z in range(n_ctx):
        dec = conditional_ids(state, cgame, z, delta)
        if len(dec.support) == 2:
            sups.append((dec.support[0], dec.support[1]))
            ps.append(float(dec.probs[1]))
        else:
            sups.append((dec.support[0], dec.support[0]))
            ps.append(0.0)

    def joint(sups, ps):
        g = sum(nu[z] * _mixture_stats(all_gaps[z], all_infos[z], sups[z], ps[z])[0]
                for z in range(n_ctx))
        h = sum(nu[z] * _mixture_stats(all_gaps[z], all_infos[z], sups[z], ps[z])[1]
                for z in range(n_ctx))
        return safe_ratio(float(g), float(h))

    current = joint(sups, ps)
    history = [current]
    for _ in range(max_sweeps):
        previous = current
        for z in range(n_ctx):
            if nu[z] <= 0.0:
                continue
            g_rest = sum(nu[u] * _mixture_stats(all_gaps[u], all_infos[u], sups[u], ps[u])[0]
                         for u in range(n_ctx) if u != z)
            h_rest = sum(nu[u] * _mixture_stats(all_gaps[u], all_infos[u], sups[u], ps[u])[1]
                         for u in range(n_ctx) if u != z)
            sup, p, val = _best_context_choice(all_gaps[z], all_infos[z], nu[z],
                                               float(g_rest), float(h_rest))
            if val <= current:
                sups[z], ps[z] = sup, p
                current = val
        history.append(current)
        if previous - current < tol:
            break

    conditionals = []
    for z in range(n_ctx):
        (i, j), p = sups[z], ps[z]
        ratio_z = safe_ratio(*_mixture_stats(all_gaps[z], all_infos[z], (i, j), p))
        if i == j or p <= 0.0:
            dec = PolicyDecision((i,), np.array([1.0]), all_gaps[z], all_infos[z], ratio_z)
        elif p >= 1.0:
            dec = PolicyDecision((j,), np.array([1.0]), all_gaps[z], all_infos[z], ratio_z)
        else:
            dec = PolicyDecision((i, j), np.array([1.0 - p, p]),
                                 all_gaps[z], all_infos[z], ratio_z)
        conditionals.append(dec)
    return ContextualPlan(tuple(conditionals), float(current), tuple(history))


def plan_joint_ratio(plan: ContextualPlan, cgame: ContextualGame) -> float:
    """Joint ratio of an arbitrary per-context plan (used to compare the
    contextual optimizer against the conditional baseline)."""
    g = h = 0.0
    for z, dec in enumerate(plan.conditionals):
        w = cgame.nu[z]
        g += w * float(np.array([dec.gaps[s] for s in dec.support]) @ dec.probs)
        h += w * float(np.array([dec.infos[s] for s in dec.support]) @ dec.probs)
    return safe_ratio(g, h)


def expected_alignment_upper(cgame: ContextualGame, subsets) -> float:
    """Upper bound on the expected alignment constant: the worst direction in
    any context must be estimable in some observer context z', paying 1/nu(z')
    for the wait until z' is drawn."""
    if len(subsets) != cgame.n_contexts:
        raise ValueError("one subset per context required")
    worst = 0.0
    any_pair = False
    for z in range(cgame.n_contexts):
        X = cgame.games[z].actions
        sub = sorted(set(int(s) for s in subsets[z]))
        for a in range(len(sub)):
            for b in range(a + 1, len(sub)):
                v = X[sub[a]] - X[sub[b]]
                if not np.any(v != 0.0):
                    continue
                any_pair = True
                best = float("inf")
                for zp in range(cgame.n_contexts):
                    if cgame.nu[zp] <= 0.0:
                        continue
                    ops = [cgame.games[zp].obs_ops[u] for u in sorted(set(int(s) for s in subsets[zp]))]
                    if not ops:
                        continue
                    if zp == z:
                        pair_ops = [cgame.games[z].obs_ops[sub[a]], cgame.games[z].obs_ops[sub[b]]]
                        bound = direction_bound(pair_ops, ops, v)
                    else:
                        bound = least_norm_group_bound(ops, v)
                    best = min(best, bound / cgame.nu[zp])
                worst = max(worst, best)
    if not any_pair:
        return 0.0
    return worst
