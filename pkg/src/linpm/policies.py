"""Decision policies: information directed sampling and baselines.

The IDS variants minimize the information ratio
psi(mu) = (sum_x mu(x) Delta(x))^2 / (sum_x mu(x) I(x)) over two-point
mixtures, which is sufficient for the exact minimum.  Conventions: a zero
expected gap gives ratio 0, zero information with positive gap gives +inf,
and 0/0 resolves to 0.
"""

from dataclasses import dataclass, field

import numpy as np

from .estimator import EstimatorState, beta_radius
from .games import Game

POLICY_NAMES = ("ids_full", "ids_directed", "ids_deterministic", "ucb", "greedy", "uniform")

TIE_TOL = 1e-9
_GAP_CAP = 1.0


class NoInformationError(RuntimeError):
    """Raised when every action is uninformative but some gap is positive."""


@dataclass(frozen=True)
class PolicyKind:
    name: str
    delta: float = 0.1

    def __post_init__(self):
        if self.name not in POLICY_NAMES:
            raise ValueError(f"unknown policy {self.name!r}; expected one of {POLICY_NAMES}")
        if not (0.0 < self.delta <= 1.0):
            raise ValueError("delta must lie in (0, 1]")


@dataclass(frozen=True, eq=False)
class PolicyDecision:
    """Sampling distribution over actions plus the diagnostics behind it."""

    support: tuple
    probs: np.ndarray
    gaps: np.ndarray
    infos: np.ndarray
    ratio: float
    fallback: bool = False
    dense: bool = False

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float)
        if probs.shape != (len(self.support),):
            raise ValueError("support/probs length mismatch")
        if np.any(probs < -1e-12) or abs(probs.sum() - 1.0) > 1e-9:
            raise ValueError("probs must be a distribution")
        if not self.dense and len(self.support) > 2:
            raise ValueError("policy support larger than two points")
        object.__setattr__(self, "probs", probs)

    def sample(self, rng: np.random.Generator) -> int:
        if len(self.support) == 1:
            return self.support[0]
        u = rng.random()
        c = np.cumsum(self.probs)
        return self.support[int(np.searchsorted(c, u, side="right").clip(0, len(c) - 1))]


def argmin_tol(values, tol: float = TIE_TOL) -> int:
    """Lowest index attaining the minimum up to tol (fp-robust tie-break)."""
    values = np.asarray(values, dtype=float)
    m = values.min()
    return int(np.nonzero(values <= m + tol)[0][0])


def argmax_tol(values, tol: float = TIE_TOL) -> int:
    values = np.asarray(values, dtype=float)
    m = values.max()
    return int(np.nonzero(values >= m - tol)[0][0])


def safe_ratio(gap: float, info: float) -> float:
    if gap <= 0.0:
        return 0.0
    if info <= 0.0:
        return float("inf")
    return gap * gap / info


def _geometry(state: EstimatorState, game: Game):
    """Posterior rewards r, Gram matrix M = X V^{-1} X^T and pairwise
    V^{-1}-distances for the whole action set."""
    X = game.actions
    r = X @ state.theta_hat
    M = X @ state.V_inv @ X.T
    diag = np.clip(np.diag(M), 0.0, None)
    D2 = np.clip(diag[:, None] + diag[None, :] - 2.0 * M, 0.0, None)
    return r, M, np.sqrt(D2), np.sqrt(diag)


def gaps_all(state: EstimatorState, game: Game, beta_sqrt: float) -> np.ndarray:
    """Optimistic gap estimates Delta_t(x), truncated into [0, 1]."""
    r, _, D, _ = _geometry(state, game)
    S = r[None, :] - r[:, None] + beta_sqrt * D
    return np.minimum(_GAP_CAP, S.max(axis=1))


def gap_upper(state: EstimatorState, game: Game, beta_sqrt: float, x_index: int) -> float:
    return float(gaps_all(state, game, beta_sqrt)[x_index])


def gaps_relaxed_all(state: EstimatorState, game: Game, beta_sqrt: float) -> np.ndarray:
    """Separable upper bound: best upper confidence value minus the lower
    confidence value of x.  One max pass, O(K) afterwards; dominates gaps_all."""
    r, _, _, w = _geometry(state, game)
    upper = r + beta_sqrt * w
    return upper.max() - (r - beta_sqrt * w)

def gap_relaxed(state: EstimatorState, game: Game, beta_sqrt: float, x_index: int) -> float:
    return float(gaps_relaxed_all(state, game, beta_sqrt)[x_index])


def plausible_set(state: EstimatorState, game: Game, beta_sqrt: float) -> np.ndarray:
    """Indices x whose optimality cannot be refuted: no y beats x by more
    than the confidence width of the difference."""
    r, _, D, _ = _geometry(state, game)
    slack = r[None, :] - r[:, None] - beta_sqrt * D
    return np.nonzero(slack.max(axis=1) <= 1e-10)[0]


def info_gain_full(state: EstimatorState, A: np.ndarray) -> float:
    """I_t(x) = log det(I_m + A^T V^{-1} A), the log volume shrinkage."""
    A = np.asarray(A, dtype=float)
    if A.ndim == 1:
        A = A[:, None]
    B = A.T @ state.V_inv @ A
    _, ld = np.linalg.slogdet(np.eye(B.shape[0]) + B)
    return max(0.0, float(ld))


def _info_full_all(state: EstimatorState, game: Game) -> np.ndarray:
    """info_gain_full for every action, with same-shape operators evaluated
    through one stacked determinant call."""
    by_m = {}
    for k, A in enumerate(game.obs_ops):
        by_m.setdefault(A.shape[1], []).append(k)
    out = np.zeros(game.n_actions)
    for m, idx in by_m.items():
        stack = np.stack([game.obs_ops[k] for k in idx])      # (g, d, m)
        B = stack.transpose(0, 2, 1) @ state.V_inv @ stack    # (g, m, m)
        _, ld = np.linalg.slogdet(np.eye(m)[None, :, :] + B)
        out[idx] = np.maximum(0.0, ld)
    return out


def info_gain_directed(state: EstimatorState, A: np.ndarray, w: np.ndarray) -> float:
    """Information about the scalar direction <w, theta>:
    log |w|^2_{V^{-1}} - log |w|^2_{(V + A A^T)^{-1}}."""
    w = np.asarray(w, dtype=float)
    if not np.any(w != 0.0):
        raise ValueError("direction w must be nonzero")
    A = np.asarray(A, dtype=float)
    if A.ndim == 1:
        A = A[:, None]
    Vw = state.V_inv @ w
    v0 = float(w @ Vw)
    q = A.T @ Vw
    S = np.eye(A.shape[1]) + A.T @ state.V_inv @ A
    v1 = v0 - float(q @ np.linalg.solve(S, q))
    v1 = max(v1, 1e-300)
    return max(0.0, float(np.log(v0) - np.log(v1)))


def min_ratio_pair(gaps: np.ndarray, infos: np.ndarray):
    """Exact information-ratio minimizer over all two-point mixtures.

    Returns ((i, j), p, psi) where the mixture plays j with probability p.
    Candidate p values per pair are {0, 1, clipped stationary point}; ties
    resolve to the lexicographically smallest pair and earliest candidate.
    Raises NoInformationError when all infos vanish but every gap is positive.
    """
    gaps = np.asarray(gaps, dtype=float)
    infos = np.asarray(infos, dtype=float)
    K = gaps.shape[0]
    if K == 0:
        raise ValueError("empty action set")
    if K == 1:
        psi = safe_ratio(gaps[0], infos[0])
        if np.isinf(psi):
            raise NoInformationError("single uninformative action with positive gap")
        return (0, 0), 0.0, psi
    ii, jj = np.triu_indices(K, k=1)
    a = gaps[ii]
    b = gaps[jj] - a
    c = infos[ii]
    dd = infos[jj] - c
    with np.errstate(divide="ignore", invalid="ignore"):
        pstar = (a * dd - 2.0 * b * c) / (b * dd)
    pstar = np.where(np.isfinite(pstar), pstar, 0.0)
    P = np.stack([np.zeros_like(a), np.ones_like(a), np.clip(pstar, 0.0, 1.0)], axis=1)
    G = a[:, None] + b[:, None] * P
    I = c[:, None] + dd[:, None] * P
    with np.errstate(divide="ignore", invalid="ignore"):
        psi = np.where(G <= 0.0, 0.0, np.where(I <= 0.0, np.inf, G * G / I))
    flat = int(np.argmin(psi))
    pair_idx, cand = divmod(flat, 3)
    best = float(psi[pair_idx, cand])
    if np.isinf(best):
        raise NoInformationError("no action provides information")
    i, j = int(ii[pair_idx]), int(jj[pair_idx])
    p = float(P[pair_idx, cand])
    return (i, j), p, best


def _mixture_decision(pair, p, psi, gaps, infos) -> PolicyDecision:
    i, j = pair
    if p <= 0.0 or i == j:
        return PolicyDecision((i,), np.array([1.0]), gaps, infos, psi)
    if p >= 1.0:
        return PolicyDecision((j,), np.array([1.0]), gaps, infos, psi)
    return PolicyDecision((i, j), np.array([1.0 - p, p]), gaps, infos, psi)


def _fallback_decision(gaps, infos) -> PolicyDecision:
    k = argmin_tol(gaps)
    return PolicyDecision((k,), np.array([1.0]), gaps, infos,
                          safe_ratio(gaps[k], infos[k]), fallback=True)


def ucb_scores(state: EstimatorState, game: Game, beta_sqrt: float) -> np.ndarray:
    r, _, _, w = _geometry(state, game)
    return r + beta_sqrt * w


def decide(policy: PolicyKind, state: EstimatorState, game: Game) -> PolicyDecision:
    """One round of decision making; never raises on uninformative states,
    falling back to the minimum-gap action instead."""
    beta_sqrt = beta_radius(state, policy.delta)
    r, M, D, wnorm = _geometry(state, game)
    S = r[None, :] - r[:, None] + beta_sqrt * D
    gaps = np.minimum(_GAP_CAP, S.max(axis=1))
    K = game.n_actions

    if policy.name == "uniform":
        infos = _info_full_all(state, game)
        probs = np.full(K, 1.0 / K)
        ratio = safe_ratio(float(gaps.mean()), float(infos.mean()))
        return PolicyDecision(tuple(range(K)), probs, gaps, infos, ratio, dense=True)

    if policy.name == "greedy":
        infos = _info_full_all(state, game)
        k = argmax_tol(r)
        return PolicyDecision((k,), np.array([1.0]), gaps, infos,
                              safe_ratio(gaps[k], infos[k]))

    if policy.name == "ucb":
        infos = _info_full_all(state, game)
        k = argmax_tol(r + beta_sqrt * wnorm)
        return PolicyDecision((k,), np.array([1.0]), gaps, infos,
                              safe_ratio(gaps[k], infos[k]))

    if policy.name == "ids_directed":
        plaus = np.nonzero((r[None, :] - r[:, None] - beta_sqrt * D).max(axis=1) <= 1e-10)[0]
        sub = D[np.ix_(plaus, plaus)]
        flat = int(np.argmax(sub))
        pi, pj = divmod(flat, len(plaus))
        if sub[pi, pj] <= 1e-12:
            infos = np.zeros(K)
            return _fallback_decision(gaps, infos)
        w = game.actions[plaus[pi]] - game.actions[plaus[pj]]
        infos = np.array([info_gain_directed(state, A, w) for A in game.obs_ops])
    else:
        infos = _info_full_all(state, game)

    if policy.name == "ids_deterministic":
        ratios = np.array([safe_ratio(g, i) for g, i in zip(gaps, infos)])
        if np.all(np.isinf(ratios)):
            return _fallback_decision(gaps, infos)
        k = argmin_tol(ratios)
        return PolicyDecision((k,), np.array([1.0]), gaps, infos, float(ratios[k]))

    # ids_full / ids_directed: exact two-point minimizer
    try:
        pair, p, psi = min_ratio_pair(gaps, infos)
    except NoInformationError:
        return _fallback_decision(gaps, infos)
    return _mixture_decision(pair, p, psi, gaps, infos)
