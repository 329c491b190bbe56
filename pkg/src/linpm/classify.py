"""Minimax-regime classification of partial monitoring games.

The classifier extracts the Pareto optimal actions, builds the neighborhood
structure of their optimality cells, and tests global/local observability of
reward differences through the observation operators.  Regimes:

  trivial       exactly one Pareto optimal action
  sqrt_n        locally observable with at least two Pareto actions
  n_two_thirds  globally but not locally observable
  hopeless      not globally observable

An action is counted as dominated when it is a convex combination of the
remaining actions and the passive zero-reward point; dominated actions never
enter a neighborhood.
"""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog, nnls

from .games import Game

HULL_TOL = 1e-8
SPAN_TOL = 1e-7
SLACK_TOL = 1e-7

REGIMES = ("trivial", "sqrt_n", "n_two_thirds", "hopeless")


@dataclass(frozen=True)
class ClassificationReport:
    pareto: tuple
    neighbor_edges: tuple
    globally_observable: bool
    locally_observable: bool
    regime: str
    alignment_upper: float | None = None


def _dedupe(X: np.ndarray) -> list:
    """Indices of the first occurrence of each distinct action vector."""
    reps = []
    for i, x in enumerate(X):
        if not any(np.allclose(x, X[j], atol=1e-12, rtol=0.0) for j in reps):
            reps.append(i)
    return reps


def _in_hull_with_origin(points: np.ndarray, x: np.ndarray, tol: float = HULL_TOL) -> bool:
    """Least-squares test whether x is a convex combination of the given
    points together with the origin."""
    cols = np.vstack([points, np.zeros(points.shape[1])]).T  # (d, K+1)
    A = np.vstack([cols, np.ones((1, cols.shape[1]))])
    b = np.append(x, 1.0)
    w, _ = nnls(A, b)
    # compute the residual directly; the solver's reported norm can be stale
    return float(np.linalg.norm(A @ w - b)) <= tol


def pareto_actions(game: Game) -> tuple:
    """Sorted indices of the non-dominated actions.  Duplicate vectors keep
    only their lowest index; a single distinct action is always Pareto."""
    X = game.actions
    reps = _dedupe(X)
    if len(reps) == 1:
        return (reps[0],)
    out = []
    for i in reps:
        others = np.array([X[j] for j in reps if j != i])
        if not _in_hull_with_origin(others, X[i]):
            out.append(i)
    return tuple(out)


def _maxmin_slack_lp(X: np.ndarray, i: int, tied: set, free: list):
    """Maximize the minimum optimality slack of the non-tied actions over the
    box [-1, 1]^d intersected with the tie equalities.  Returns (s*, theta*)."""
    d = X.shape[1]
    A_eq = np.array([X[i] - X[z] for z in tied if z != i]).reshape(-1, d)
    b_eq = np.zeros(A_eq.shape[0])
    if free:
        A_ub = np.hstack([-np.array([X[i] - X[y] for y in free]), np.ones((len(free), 1))])
        b_ub = np.zeros(len(free))
    else:
        A_ub, b_ub = None, None
    c = np.zeros(d + 1)
    c[-1] = -1.0
    bounds = [(-1.0, 1.0)] * d + [(-100.0, 100.0)]
    res = linprog(c, A_ub=A_ub, b_ub=b_ub,
                  A_eq=np.hstack([A_eq, np.zeros((A_eq.shape[0], 1))]) if A_eq.size else None,
                  b_eq=b_eq if A_eq.size else None,
                  bounds=bounds, method="highs")
    if not res.success:
        return 0.0, np.zeros(d)
    return float(res.x[-1]), res.x[:d]


def _max_single_slack_lp(X: np.ndarray, i: int, tied: set, free: list, y: int) -> float:
    """Maximize action y's slack over the face (other free slacks >= 0)."""
    d = X.shape[1]
    A_eq = np.array([X[i] - X[z] for z in tied if z != i]).reshape(-1, d)
    rows = [-(X[i] - X[u]) for u in free if u != y]
    A_ub = np.array(rows).reshape(-1, d) if rows else None
    res = linprog(-(X[i] - X[y]),
                  A_ub=A_ub, b_ub=np.zeros(A_ub.shape[0]) if A_ub is not None else None,
                  A_eq=A_eq if A_eq.size else None,
                  b_eq=np.zeros(A_eq.shape[0]) if A_eq.size else None,
                  bounds=[(-1.0, 1.0)] * d, method="highs")
    if not res.success:
        return 0.0
    return float(-res.fun)


def _face(game: Game, i: int, j: int):
    """Dimension, tied action set and a relative-interior witness of the
    boundary C_i intersected with C_j.

    The tied set is grown until the remaining actions admit simultaneously
    positive slack; the face dimension is d minus the rank of the tied reward
    differences.
    """
    X = game.actions
    K, d = X.shape
    tied = {i, j}
    theta_star = np.zeros(d)
    for _ in range(K + 1):
        free = [y for y in range(K) if y not in tied]
        s, theta = _maxmin_slack_lp(X, i, tied, free)
        if not free or s > SLACK_TOL:
            theta_star = theta
            if not free:
                # no inequality constraints: pick any nonzero point of the
                # tie subspace as the witness
                A_eq = np.array([X[i] - X[z] for z in tied if z != i]).reshape(-1, d)
                _, sv, vt = np.linalg.svd(A_eq) if A_eq.size else (None, np.zeros(0), np.eye(d))
                r = int((sv > SPAN_TOL * max(1.0, sv[0] if len(sv) else 1.0)).sum())
                theta_star = vt[r] if r < d else np.zeros(d)
            break
        # face degenerates: move in exactly the actions tight on the whole face
        grew = False
        for y in list(free):
            if _max_single_slack_lp(X, i, tied, free, y) <= SLACK_TOL:
                tied.add(y)
                grew = True
        if not grew:
            # numerically stuck: absorb the tightest action to make progress
            slacks = [(float((X[i] - X[y]) @ theta), y) for y in free]
            tied.add(min(slacks)[1])
    diffs = np.array([X[i] - X[z] for z in tied if z != i]).reshape(-1, d)
    if diffs.size:
        sv = np.linalg.svd(diffs, compute_uv=False)
        rank = int((sv > SPAN_TOL * max(1.0, sv[0])).sum())
    else:
        rank = 0
    return d - rank, tied, theta_star


def are_neighbors(game: Game, i: int, j: int) -> bool:
    """Pareto actions i and j are neighbors when their cells share a face of
    dimension d - 1."""
    if i == j:
        raise ValueError("neighbor test requires two distinct actions")
    P = set(pareto_actions(game))
    if i not in P or j not in P:
        raise ValueError("neighbor test requires Pareto optimal actions")
    dim, _, _ = _face(game, i, j)
    return dim == game.dim - 1


def _cell_is_nontrivial(game: Game, z: int) -> bool:
    """True when action z is optimal somewhere outside the origin."""
    X = game.actions
    K, d = X.shape
    A_ub = np.array([-(X[z] - X[y]) for y in range(K) if y != z]).reshape(-1, d)
    b_ub = np.zeros(A_ub.shape[0])
    for k in range(d):
        for sgn in (1.0, -1.0):
            c = np.zeros(d)
            c[k] = -sgn
            res = linprog(c, A_ub=A_ub if A_ub.size else None,
                          b_ub=b_ub if A_ub.size else None,
                          bounds=[(-1.0, 1.0)] * d, method="highs")
            if res.success and -res.fun > SLACK_TOL:
                return True
    return False


def neighborhood_actions(game: Game, i: int, j: int) -> tuple:
    """All actions whose cell contains the shared face of C_i and C_j;
    dominated actions (optimal only at the origin) are excluded."""
    _, tied, _ = _face(game, i, j)
    out = {i, j}
    for z in tied:
        if z in (i, j) or _cell_is_nontrivial(game, z):
            out.add(z)
    return tuple(sorted(out))


def _span_residual(ops, v: np.ndarray) -> float:
    cols = [A for A in ops if A.size]
    if not cols:
        return float(np.linalg.norm(v))
    A = np.hstack(cols)
    U, sv, _ = np.linalg.svd(A, full_matrices=False)
    r = int((sv > SPAN_TOL * max(1.0, sv[0])).sum())
    Q = U[:, :r]
    return float(np.linalg.norm(v - Q @ (Q.T @ v)))


def is_globally_observable(game: Game) -> bool:
    """Every Pareto reward difference lies in the span of all operators."""
    P = pareto_actions(game)
    X = game.actions
    for a in range(len(P)):
        for b in range(a + 1, len(P)):
            v = X[P[a]] - X[P[b]]
            if _span_residual(game.obs_ops, v) > SPAN_TOL * max(1.0, np.linalg.norm(v)):
                return False
    return True


def _neighbor_structure(game: Game):
    """Neighbor edges among Pareto actions plus each edge's neighborhood."""
    P = pareto_actions(game)
    edges = []
    hoods = {}
    for a in range(len(P)):
        for b in range(a + 1, len(P)):
            i, j = P[a], P[b]
            dim, tied, _ = _face(game, i, j)
            if dim == game.dim - 1:
                edges.append((i, j))
                hood = {i, j}
                for z in tied:
                    if z in (i, j) or _cell_is_nontrivial(game, z):
                        hood.add(z)
                hoods[(i, j)] = tuple(sorted(hood))
    return P, tuple(edges), hoods


def is_locally_observable(game: Game) -> bool:
    """Every neighboring Pareto pair's reward difference is estimable from
    the operators of that pair's neighborhood."""
    _, edges, hoods = _neighbor_structure(game)
    X = game.actions
    for (i, j) in edges:
        ops = [game.obs_ops[z] for z in hoods[(i, j)]]
        v = X[i] - X[j]
        if _span_residual(ops, v) > SPAN_TOL * max(1.0, np.linalg.norm(v)):
            return False
    return True


def least_norm_group_bound(ops, direction: np.ndarray) -> float:
    """Squared grouped-norm sum of the least-norm coefficients w solving
    sum_z A_z w_z = direction; +inf when the direction is not in the span."""
    cols = [np.atleast_2d(A) for A in ops]
    A = np.hstack(cols)
    w, *_ = np.linalg.lstsq(A, direction, rcond=None)
    if np.linalg.norm(A @ w - direction) > SPAN_TOL * max(1.0, np.linalg.norm(direction)):
        return float("inf")
    total = 0.0
    k = 0
    for Az in cols:
        m = Az.shape[1]
        total += float(np.linalg.norm(w[k:k + m]))
        k += m
    return total * total


def direction_bound(ops_pair, ops_all, v: np.ndarray) -> float:
    """Least-norm grouped bound for estimating direction v: prefer coefficients
    supported on the estimating pair's own operators (for bandit feedback this
    reproduces w = (1, -1) and stays below 4), fall back to the whole operator
    set when the pair cannot span v, and keep whichever decomposition is
    smaller.  Both are feasible, so the minimum is still a valid upper bound."""
    via_pair = least_norm_group_bound(ops_pair, v)
    via_all = least_norm_group_bound(ops_all, v)
    return min(via_pair, via_all)


def alignment_upper(game: Game, subset) -> float:
    """Worst-case alignment bound over all action pairs of the subset, using
    least-norm estimation coefficients through the subset's operators."""
    subset = sorted(set(int(s) for s in subset))
    if any(not 0 <= s < game.n_actions for s in subset):
        raise ValueError("subset index out of range")
    if len(subset) < 2:
        return 0.0
    ops = [game.obs_ops[z] for z in subset]
    X = game.actions
    best = 0.0
    for a in range(len(subset)):
        for b in range(a + 1, len(subset)):
            v = X[subset[a]] - X[subset[b]]
            if not np.any(v != 0.0):
                continue
            pair_ops = [game.obs_ops[subset[a]], game.obs_ops[subset[b]]]
            best = max(best, direction_bound(pair_ops, ops, v))
    return best


def dueling_alignment_upper(game: Game) -> float:
    """Tightened alignment bound for dueling games.

    The reward difference of two pair-actions (x1, x2) and (y1, y2) is
    (x1 - y1)/2 + (x2 - y2)/2, i.e. a combination of the comparison
    operators of the pair-actions (x1, y1) and (x2, y2) with coefficients
    one half each.  Summing the absolute group coefficients and squaring
    gives at most (1/2 + 1/2)^2 = 1 for every pair, so the returned bound
    never exceeds one.
    """
    pairs = game.meta.get("pairs")
    lookup = game.meta.get("pair_lookup")
    if pairs is None or lookup is None:
        raise ValueError("game does not carry dueling pair structure")
    X = game.actions
    best = 0.0
    for i, (x1, x2) in enumerate(pairs):
        for j, (y1, y2) in enumerate(pairs):
            if j <= i or not np.any(X[i] != X[j]):
                continue
            coeff = {}
            if x1 != y1:
                k = lookup[(x1, y1)]
                coeff[k] = coeff.get(k, 0.0) + 0.5
            if x2 != y2:
                k = lookup[(x2, y2)]
                coeff[k] = coeff.get(k, 0.0) + 0.5
            total = sum(abs(c) for c in coeff.values())
            best = max(best, total * total)
    return best


def classify(game: Game) -> ClassificationReport:
    P, edges, hoods = _neighbor_structure(game)
    glob = is_globally_observable(game)
    X = game.actions
    loc = True
    for (i, j) in edges:
        ops = [game.obs_ops[z] for z in hoods[(i, j)]]
        v = X[i] - X[j]
        if _span_residual(ops, v) > SPAN_TOL * max(1.0, np.linalg.norm(v)):
            loc = False
            break
    if len(P) == 1:
        regime = "trivial"
    elif loc:
        regime = "sqrt_n"
    elif glob:
        regime = "n_two_thirds"
    else:
        regime = "hopeless"
    align = None
    if glob:
        a = alignment_upper(game, range(game.n_actions))
        align = a if np.isfinite(a) else None
    return ClassificationReport(
        pareto=tuple(P),
        neighbor_edges=edges,
        globally_observable=glob,
        locally_observable=loc,
        regime=regime,
        alignment_upper=align,
    )
