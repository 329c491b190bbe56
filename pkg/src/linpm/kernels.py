"""Kernelized partial monitoring.

The hidden parameter becomes a function f in an RKHS with norm at most one.
Observation operators are described by small descriptor objects: point
evaluations, pairwise differences (preference feedback) and gradients.  The
posterior is regularized kernel least squares over the stacked observation
blocks; gap, confidence radius and information gain mirror the linear module
and coincide with it exactly under the linear kernel.

The information gain deliberately regularizes the history Gram matrix the
same way the posterior does, i.e. it inverts (K_t + I) rather than K_t, so
that the linear-kernel equivalence holds identically.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_solve, solve_triangular

from .games import _freeze
from .policies import (
    PolicyDecision,
    PolicyKind,
    argmax_tol,
    argmin_tol,
    min_ratio_pair,
    safe_ratio,
    NoInformationError,
)

KERNEL_KINDS = ("linear", "rbf")
HISTORY_CAP = 2000
VAR_FLOOR = -1e-8


class KernelNumericsError(ArithmeticError):
    """Posterior variance or determinant argument went severely negative."""


@dataclass(frozen=True)
class KernelSpec:
    """Positive-definite kernel on R^d; rbf is normalized so k(x,x) = 1."""

    kind: str = "rbf"
    lengthscale: float = 1.0

    def __post_init__(self):
        if self.kind not in KERNEL_KINDS:
            raise ValueError(f"unknown kernel kind: {self.kind!r}")
        if not (self.lengthscale > 0.0):
            raise ValueError("lengthscale must be positive")

    def gram(self, X, Y) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        Y = np.atleast_2d(np.asarray(Y, dtype=float))
        if self.kind == "linear":
            return X @ Y.T
        sq = ((X**2).sum(1)[:, None] + (Y**2).sum(1)[None, :] - 2.0 * X @ Y.T)
        return np.exp(-np.maximum(sq, 0.0) / (2.0 * self.lengthscale**2))

    def value(self, x, y) -> float:
        return float(self.gram(np.atleast_2d(x), np.atleast_2d(y))[0, 0])


@dataclass(frozen=True, eq=False)
class PointObs:
    """Observe f(point) plus noise."""

    point: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "point", _freeze(np.atleast_1d(self.point)))

    @property
    def m(self) -> int:
        return 1


@dataclass(frozen=True, eq=False)
class PairObs:
    """Observe f(first) - f(second) plus noise (preference feedback)."""

    first: np.ndarray
    second: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "first", _freeze(np.atleast_1d(self.first)))
        object.__setattr__(self, "second", _freeze(np.atleast_1d(self.second)))

    @property
    def m(self) -> int:
        return 1


@dataclass(frozen=True, eq=False)
class GradObs:
    """Observe the full gradient of f at point (rbf kernels only)."""

    point: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "point", _freeze(np.atleast_1d(self.point)))

    @property
    def m(self) -> int:
        return int(self.point.shape[0])


def _require_rbf(spec: KernelSpec):
    if spec.kind != "rbf":
        raise ValueError("gradient observations require the rbf kernel")


def _grad_grad_block(spec: KernelSpec, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    _require_rbf(spec)
    ell2 = spec.lengthscale**2
    u = x - y
    k = spec.value(x, y)
    return k * (np.eye(len(x)) / ell2 - np.outer(u, u) / ell2**2)


def _grad_point_block(spec: KernelSpec, x: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Column (d,1): covariance of grad f(x) with f(z)."""
    _require_rbf(spec)
    k = spec.value(x, z)
    return (k * (z - x) / spec.lengthscale**2)[:, None]


def eval_cross(spec: KernelSpec, z, desc) -> np.ndarray:
    """Covariance row of the point evaluation f(z) with one observation."""
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if isinstance(desc, PointObs):
        return np.array([spec.value(z, desc.point)])
    if isinstance(desc, PairObs):
        return np.array([spec.value(z, desc.first) - spec.value(z, desc.second)])
    if isinstance(desc, GradObs):
        _require_rbf(spec)
        y = desc.point
        return spec.value(z, y) * (z - y) / spec.lengthscale**2
    raise TypeError(f"unknown observation descriptor: {type(desc).__name__}")


def op_block(spec: KernelSpec, da, db) -> np.ndarray:
    """Operator block A_a A_b^* of shape (m_a, m_b)."""
    if isinstance(da, PointObs):
        if isinstance(db, GradObs):
            return _grad_point_block(spec, db.point, da.point).T
        return eval_cross(spec, da.point, db)[None, :]
    if isinstance(da, PairObs):
        if isinstance(db, GradObs):
            top = _grad_point_block(spec, db.point, da.first)
            bot = _grad_point_block(spec, db.point, da.second)
            return (top - bot).T
        row = eval_cross(spec, da.first, db) - eval_cross(spec, da.second, db)
        return row[None, :]
    if isinstance(da, GradObs):
        if isinstance(db, GradObs):
            return _grad_grad_block(spec, da.point, db.point)
        if isinstance(db, PointObs):
            return _grad_point_block(spec, da.point, db.point)
        if isinstance(db, PairObs):
            return (_grad_point_block(spec, da.point, db.first)
                    - _grad_point_block(spec, da.point, db.second))
    raise TypeError("unknown observation descriptor pair")


def dueling_blocks(spec: KernelSpec, pair_a, pair_b):
    """Preference-feedback kernel pieces for two comparison pairs.

    Returns the scalar operator block between the pairs and the two
    cross-evaluation entries of pair_a's points against pair_b's operator.
    """
    a = PairObs(pair_a[0], pair_a[1])
    b = PairObs(pair_b[0], pair_b[1])
    block = float(op_block(spec, a, b)[0, 0])
    cross = np.array([
        eval_cross(spec, a.first, b)[0],
        eval_cross(spec, a.second, b)[0],
    ])
    return block, cross


def gradient_blocks(spec: KernelSpec, x, y):
    """Gradient-observation kernel pieces: the (d, d) operator block between
    gradients at x and y, and the d-vector covariance of f(x) with grad f(y)."""
    _require_rbf(spec)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    block = _grad_grad_block(spec, x, y)
    cross = spec.value(x, y) * (x - y) / spec.lengthscale**2
    return block, cross


@dataclass(frozen=True, eq=False)
class KernelState:
    """Observation history with the cached block Gram matrix and its
    regularized Cholesky factor; refit from scratch on every update."""

    spec: KernelSpec
    descs: tuple = ()
    values: np.ndarray = field(default_factory=lambda: np.zeros(0))
    K: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    chol: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    alpha: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def t(self) -> int:
        return len(self.descs)

    @property
    def mt(self) -> int:
        return int(self.values.shape[0])


def init_kernel_state(spec: KernelSpec) -> KernelState:
    return KernelState(spec=spec)


def kernel_update(state: KernelState, desc, obs) -> KernelState:
    if state.t >= HISTORY_CAP:
        raise ValueError(f"kernel history capped at {HISTORY_CAP} observations")
    obs = np.atleast_1d(np.asarray(obs, dtype=float))
    if obs.shape != (desc.m,):
        raise ValueError(f"observation shape {obs.shape} does not match m={desc.m}")
    spec = state.spec
    strip = (np.vstack([op_block(spec, d, desc) for d in state.descs])
             if state.descs else np.zeros((0, desc.m)))
    corner = op_block(spec, desc, desc)
    mt = state.mt
    K = np.zeros((mt + desc.m, mt + desc.m))
    K[:mt, :mt] = state.K
    K[:mt, mt:] = strip
    K[mt:, :mt] = strip.T
    K[mt:, mt:] = 0.5 * (corner + corner.T)
    values = np.concatenate([state.values, obs])
    chol = np.linalg.cholesky(K + np.eye(mt + desc.m))
    alpha = cho_solve((chol, True), values)
    return KernelState(spec=spec, descs=state.descs + (desc,), values=values,
                       K=K, chol=chol, alpha=alpha)


def _cross_matrix(state: KernelState, X: np.ndarray) -> np.ndarray:
    """Rows of covariances between each evaluation point and the history."""
    if state.mt == 0:
        return np.zeros((len(X), 0))
    return np.hstack([
        np.stack([eval_cross(state.spec, x, d) for x in X]) for d in state.descs
    ])


def posterior(state: KernelState, x, y=None):
    """Posterior mean and variance at x; cross-covariance with y on demand."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    pts = [x] if y is None else [x, np.atleast_1d(np.asarray(y, dtype=float))]
    means, cov = posterior_batch(state, np.stack(pts))
    if y is None:
        return float(means[0]), float(cov[0, 0])
    return float(means[0]), float(cov[0, 0]), float(cov[0, 1])


def posterior_batch(state: KernelState, X):
    """Posterior means and full covariance matrix over evaluation points."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    prior = state.spec.gram(X, X)
    if state.mt == 0:
        return np.zeros(len(X)), prior
    C = _cross_matrix(state, X)
    means = C @ state.alpha
    half = solve_triangular(state.chol, C.T, lower=True)
    cov = prior - half.T @ half
    cov = 0.5 * (cov + cov.T)
    d = np.diag(cov)
    if np.any(d < VAR_FLOOR):
        raise KernelNumericsError(f"posterior variance fell to {d.min():.3e}")
    if np.any(d < 0.0):
        cov = cov + np.diag(np.maximum(0.0, -d))
    return means, cov


def kernel_beta(state: KernelState, delta: float) -> float:
    """Confidence radius sqrt(log det(K_t + I) + 2 log(1/delta)) + 1."""
    if not 0.0 < delta <= 1.0:
        raise ValueError("delta must lie in (0, 1]")
    logdet = 2.0 * float(np.sum(np.log(np.diag(state.chol)))) if state.mt else 0.0
    return float(np.sqrt(logdet + 2.0 * np.log(1.0 / delta)) + 1.0)


def _pairwise_sd(cov: np.ndarray) -> np.ndarray:
    d = np.diag(cov)
    sq = d[:, None] + d[None, :] - 2.0 * cov
    if np.any(sq < VAR_FLOOR):
        raise KernelNumericsError("pairwise posterior variance went negative")
    return np.sqrt(np.maximum(sq, 0.0))


def kernel_gaps_all(state: KernelState, beta_sqrt: float, X) -> np.ndarray:
    """Truncated optimistic gaps over a set of evaluation points."""
    means, cov = posterior_batch(state, X)
    S = means[None, :] - means[:, None] + beta_sqrt * _pairwise_sd(cov)
    return np.minimum(1.0, S.max(axis=1))


def kernel_gap(state: KernelState, beta_sqrt: float, x, action_set) -> float:
    """Gap of the point x against a candidate set (x itself always counts)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    pts = np.vstack([x[None, :], np.atleast_2d(np.asarray(action_set, dtype=float))])
    return float(kernel_gaps_all(state, beta_sqrt, pts)[0])


def kernel_info_gain(state: KernelState, desc) -> float:
    """log det of the identity plus the posterior covariance of one observation."""
    spec = state.spec
    corner = op_block(spec, desc, desc)
    corner = 0.5 * (corner + corner.T)
    if state.mt:
        Q = np.vstack([op_block(spec, d, desc) for d in state.descs])
        half = solve_triangular(state.chol, Q, lower=True)
        corner = corner - half.T @ half
    sign, val = np.linalg.slogdet(np.eye(desc.m) + corner)
    if sign <= 0 or val < VAR_FLOOR:
        raise KernelNumericsError("information gain determinant went negative")
    return max(0.0, float(val))


@dataclass(frozen=True, eq=False)
class KernelGame:
    """Finite action set over ground points; each action evaluates the reward
    f(point) and observes either the value or the gradient at that point."""

    spec: KernelSpec
    points: np.ndarray
    obs_kind: str = "point"
    sigma: float = 1.0
    name: str = "kernel"

    def __post_init__(self):
        pts = _freeze(np.atleast_2d(np.asarray(self.points, dtype=float)))
        if pts.ndim != 2 or len(pts) == 0:
            raise ValueError("kernel game needs a non-empty point set")
        object.__setattr__(self, "points", pts)
        if self.obs_kind not in ("point", "gradient"):
            raise ValueError(f"unknown observation kind: {self.obs_kind!r}")
        if self.obs_kind == "gradient":
            _require_rbf(self.spec)
        if not (self.sigma >= 0.0):
            raise ValueError("sigma must be nonnegative")

    @property
    def n_actions(self) -> int:
        return len(self.points)

    @property
    def descriptors(self) -> tuple:
        if self.obs_kind == "gradient":
            return tuple(GradObs(p) for p in self.points)
        return tuple(PointObs(p) for p in self.points)


@dataclass(frozen=True, eq=False)
class KernelTruth:
    """Ground-truth function f = sum_j coeffs_j k(centers_j, .), constrained
    to RKHS norm at most one."""

    spec: KernelSpec
    centers: np.ndarray
    coeffs: np.ndarray

    def __post_init__(self):
        centers = _freeze(np.atleast_2d(np.asarray(self.centers, dtype=float)))
        coeffs = _freeze(np.atleast_1d(np.asarray(self.coeffs, dtype=float)))
        if len(centers) != len(coeffs):
            raise ValueError("centers and coeffs length mismatch")
        object.__setattr__(self, "centers", centers)
        object.__setattr__(self, "coeffs", coeffs)
        norm_sq = float(coeffs @ self.spec.gram(centers, centers) @ coeffs)
        if norm_sq > 1.0 + 1e-9:
            raise ValueError(f"RKHS norm {np.sqrt(norm_sq):.6g} exceeds 1")

    def f(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return self.spec.gram(X, self.centers) @ self.coeffs

    def grad(self, x) -> np.ndarray:
        _require_rbf(self.spec)
        x = np.atleast_1d(np.asarray(x, dtype=float))
        kv = self.spec.gram(x[None, :], self.centers)[0]
        return ((self.centers - x[None, :]) * (kv * self.coeffs)[:, None]).sum(0) \
            / self.spec.lengthscale**2

    def observe_mean(self, desc) -> np.ndarray:
        if isinstance(desc, PointObs):
            return self.f(desc.point[None, :])
        if isinstance(desc, PairObs):
            return self.f(desc.first[None, :]) - self.f(desc.second[None, :])
        if isinstance(desc, GradObs):
            return self.grad(desc.point)
        raise TypeError(f"unknown observation descriptor: {type(desc).__name__}")


def kernel_decide(policy: PolicyKind, state: KernelState, kgame: KernelGame) -> PolicyDecision:
    """One decision round over a kernel game; mirrors the linear dispatcher."""
    if policy.name == "ids_directed":
        raise ValueError("ids_directed is not defined for kernel games")
    beta_sqrt = kernel_beta(state, policy.delta)
    means, cov = posterior_batch(state, kgame.points)
    S = means[None, :] - means[:, None] + beta_sqrt * _pairwise_sd(cov)
    gaps = np.minimum(1.0, S.max(axis=1))
    descs = kgame.descriptors
    infos = np.array([kernel_info_gain(state, d) for d in descs])
    K = kgame.n_actions

    if policy.name == "uniform":
        probs = np.full(K, 1.0 / K)
        ratio = safe_ratio(float(gaps.mean()), float(infos.mean()))
        return PolicyDecision(tuple(range(K)), probs, gaps, infos, ratio, dense=True)
    if policy.name == "greedy":
        k = argmax_tol(means)
        return PolicyDecision((k,), np.array([1.0]), gaps, infos,
                              safe_ratio(gaps[k], infos[k]))
    if policy.name == "ucb":
        k = argmax_tol(means + beta_sqrt * np.sqrt(np.maximum(0.0, np.diag(cov))))
        return PolicyDecision((k,), np.array([1.0]), gaps, infos,
                              safe_ratio(gaps[k], infos[k]))
    if policy.name == "ids_deterministic":
        ratios = np.array([safe_ratio(g, i) for g, i in zip(gaps, infos)])
        if np.all(np.isinf(ratios)):
            k = argmin_tol(gaps)
            return PolicyDecision((k,), np.array([1.0]), gaps, infos,
                                  safe_ratio(gaps[k], infos[k]), fallback=True)
        k = argmin_tol(ratios)
        return PolicyDecision((k,), np.array([1.0]), gaps, infos, float(ratios[k]))

    try:
        pair, p, psi = min_ratio_pair(gaps, infos)
    except NoInformationError:
        k = argmin_tol(gaps)
        return PolicyDecision((k,), np.array([1.0]), gaps, infos,
                              safe_ratio(gaps[k], infos[k]), fallback=True)
    i, j = pair
    if p <= 0.0 or i == j:
        return PolicyDecision((i,), np.array([1.0]), gaps, infos, psi)
    if p >= 1.0:
        return PolicyDecision((j,), np.array([1.0]), gaps, infos, psi)
    return PolicyDecision((i, j), np.array([1.0 - p, p]), gaps, infos, psi)
