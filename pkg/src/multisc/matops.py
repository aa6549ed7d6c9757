"""Dense linear-algebra kernels shared by the solver and the baselines."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .exceptions import NumericError, RankDeficiencyError

# Singular values below RANK_TOL * sigma_max are treated as zero when the
# residual's singular directions feed the solver's gradient step.
RANK_TOL = 1e-12


@dataclass(frozen=True)
class SvdFactors:
    """Thin SVD ``u @ diag(d) @ v.T`` with singular values descending."""

    u: np.ndarray
    d: np.ndarray
    v: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.u * self.d) @ self.v.T


def svd(mat: np.ndarray) -> SvdFactors:
    """Thin singular value decomposition of a real matrix.

    Parameters
    ----------
    mat : ndarray of shape (rows, cols)
        Matrix with finite entries.

    Returns
    -------
    SvdFactors
        Orthonormal ``u`` (rows x k), descending ``d`` (k,), orthonormal
        ``v`` (cols x k), where k = min(rows, cols).
    """
    mat = np.asarray(mat, dtype=float)
    if mat.ndim != 2:
        raise ValueError("svd expects a 2-d matrix")
    if not np.isfinite(mat).all():
        raise ValueError("svd input must have finite entries")
    try:
        u, d, vt = np.linalg.svd(mat, full_matrices=False)
    except np.linalg.LinAlgError as err:
        raise NumericError(f"SVD did not converge: {err}") from err
    return SvdFactors(u=u, d=d, v=vt.T)


def singular_values(mat: np.ndarray) -> np.ndarray:
    """Singular values only (descending); cheaper than a full ``svd``."""
    try:
        return np.linalg.svd(mat, compute_uv=False)
    except np.linalg.LinAlgError as err:
        raise NumericError(f"SVD did not converge: {err}") from err


def nuclear_norm(mat: np.ndarray) -> float:
    """Sum of singular values; zero iff the matrix is zero."""
    mat = np.asarray(mat, dtype=float)
    if not np.isfinite(mat).all():
        raise ValueError("nuclear_norm input must have finite entries")
    return float(singular_values(mat).sum())


def soft_threshold(mat: np.ndarray, tau: float) -> np.ndarray:
    """Entrywise ``sign(x) * max(|x| - tau, 0)``."""
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    mat = np.asarray(mat, dtype=float)
    return np.sign(mat) * np.maximum(np.abs(mat) - tau, 0.0)


def ols_multi(x: np.ndarray, y: np.ndarray, ridge: float = 0.0) -> np.ndarray:
    """Multivariate (ridge) least squares with one shared factorization.

    Solves ``(X'X + ridge*I) theta = X'Y`` for all columns of Y through a
    single Cholesky factorization, so the per-column cost is two triangular
    solves instead of a fresh decomposition.

    Parameters
    ----------
    x : ndarray of shape (t0, n)
    y : ndarray of shape (t0, m)
    ridge : float
        Nonnegative diagonal regularizer.  With ``ridge = 0`` the Gram
        matrix must be numerically positive definite (t0 >= n, full column
        rank).

    Returns
    -------
    ndarray of shape (n, m)
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim != 2 or y.ndim != 2 or x.shape[0] != y.shape[0]:
        raise ValueError("x and y must be 2-d with matching row counts")
    if ridge < 0:
        raise ValueError("ridge must be nonnegative")
    gram = x.T @ x
    if ridge > 0:
        gram = gram + ridge * np.eye(x.shape[1])
    try:
        factor = scipy.linalg.cho_factor(gram, lower=True)
    except scipy.linalg.LinAlgError as err:
        raise RankDeficiencyError(
            "X'X is singular or indefinite; pass ridge > 0 or use the "
            "square-root-lasso fit, which handles more donors than periods"
        ) from err
    return scipy.linalg.cho_solve(factor, x.T @ y)


def project_simplex(w: np.ndarray) -> np.ndarray:
    """Euclidean projection onto ``{w : w >= 0, sum(w) = 1}``.

    Sort-and-shift algorithm; the result is renormalized at the end so the
    sum constraint holds up to one final division.
    """
    w = np.asarray(w, dtype=float)
    if w.ndim != 1 or w.size == 0:
        raise ValueError("project_simplex expects a nonempty 1-d vector")
    if not np.isfinite(w).all():
        raise ValueError("project_simplex input must have finite entries")
    srt = np.sort(w)[::-1]
    shifted = (np.cumsum(srt) - 1.0) / np.arange(1, w.size + 1)
    rho = np.nonzero(srt > shifted)[0][-1]
    out = np.maximum(w - shifted[rho], 0.0)
    return out / out.sum()
