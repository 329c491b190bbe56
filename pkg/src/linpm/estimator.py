"""Regularized least-squares estimation of the environment parameter.

State after t observations: V_t = I + sum_s A_s A_s^T and
theta_hat_t = V_t^{-1} sum_s A_s a_s.  The confidence radius
beta^{1/2} = sqrt(log det V_t + 2 log(1/delta)) + 1 covers the truth with
probability at least 1 - delta for unit-norm theta and conditionally
1-subgaussian noise.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, solve_triangular


@dataclass(frozen=True, eq=False)
class EstimatorState:
    """Value-type regression state; update() returns a fresh instance."""

    V: np.ndarray
    b: np.ndarray
    theta_hat: np.ndarray
    t: int
    logdetV: float
    chol: np.ndarray      # lower Cholesky factor of V
    V_inv: np.ndarray

    @property
    def dim(self) -> int:
        return self.V.shape[0]


def _refresh(V: np.ndarray, b: np.ndarray, t: int) -> EstimatorState:
    L = np.linalg.cholesky(V)
    logdet = 2.0 * float(np.sum(np.log(np.diag(L))))
    theta = cho_solve((L, True), b)
    V_inv = cho_solve((L, True), np.eye(V.shape[0]))
    return EstimatorState(V=V, b=b, theta_hat=theta, t=t, logdetV=logdet, chol=L, V_inv=V_inv)


def init_estimator(d: int) -> EstimatorState:
    if d < 1:
        raise ValueError("dimension must be positive")
    return _refresh(np.eye(d), np.zeros(d), 0)


def update(state: EstimatorState, A: np.ndarray, obs: np.ndarray) -> EstimatorState:
    """Fold one observation obs = A^T theta + eps into the state."""
    A = np.asarray(A, dtype=float)
    if A.ndim == 1:
        A = A[:, None]
    obs = np.atleast_1d(np.asarray(obs, dtype=float))
    if A.shape[0] != state.dim or A.shape[1] != obs.shape[0]:
        raise ValueError("operator/observation shape mismatch")
    V = state.V + A @ A.T
    b = state.b + A @ obs
    return _refresh(V, b, state.t + 1)


def beta_radius(state: EstimatorState, delta: float) -> float:
    """Confidence radius beta_t^{1/2}(delta)."""
    if not (0.0 < delta <= 1.0):
        raise ValueError("delta must lie in (0, 1]")
    return float(np.sqrt(state.logdetV + 2.0 * np.log(1.0 / delta)) + 1.0)


def weighted_norm(state: EstimatorState, w: np.ndarray):
    """sqrt(w^T V^{-1} w), evaluated through the Cholesky factor.

    Accepts a single vector or a (n, d) stack of row vectors; the latter
    returns one norm per row.
    """
    w = np.asarray(w, dtype=float)
    if w.ndim == 2:
        y = solve_triangular(state.chol, w.T, lower=True)
        return np.sqrt(np.einsum("ij,ij->j", y, y))
    y = solve_triangular(state.chol, w, lower=True)
    return float(np.sqrt(y @ y))


def total_info_gain(state: EstimatorState) -> float:
    """log det V_t, the total information accumulated so far."""
    return float(state.logdetV)
