"""Per-treated-unit comparison methods: PSC, SCUL, and restricted OLS.

Each baseline fits one weight vector per treated unit against the shared
donor matrix, so their cost grows linearly with the number of treated
units.  That per-unit loop is deliberate: it is the computational pattern
the joint square-root-lasso fit is benchmarked against.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import sklearn.exceptions
import sklearn.linear_model

from . import matops
from .exceptions import RankDeficiencyError
from .panel import DesignSplit
from .solver import FitReport

METHODS = ("psc", "scul", "rols")


@dataclass(frozen=True)
class BaselineConfig:
    """Settings for one baseline; fields unused by a method are ignored.

    ``max_iter`` and ``tol`` fall back to each fitter's own default when
    left as None (their semantics differ per method).
    """

    method: str
    lam: float = 0.0
    ridge: float = 1.0
    max_iter: int | None = None
    tol: float | None = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; expected one of {METHODS}")
        if self.lam < 0 or self.ridge < 0:
            raise ValueError("lam and ridge must be nonnegative")


class ConvergenceWarning(UserWarning):
    """A per-unit fit stopped at max_iter before reaching its tolerance."""


def fit_scul(split: DesignSplit, lam: float, max_iter: int = 20_000,
             tol: float = 1e-7, path_len: int = 8) -> np.ndarray:
    """Synthetic control using lasso, one unconstrained fit per treated unit.

    Column j solves ``min_w (1/(2 t0)) ||y_j - X w||^2 + lam ||w||_1`` by
    cyclic coordinate descent on the shared donor Gram matrix (covariance
    updates), warm-started down a short geometric penalty path from the
    unit's kill threshold; no sign or sum constraints, so extrapolation
    outside the donor hull is allowed.  ``lam = 0`` dispatches to the plain
    least-squares solve, which requires a full-column-rank donor matrix.
    Non-convergence raises a warning, not an error.
    """
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    x, y = split.x_pre, split.y_pre
    if lam == 0.0:
        return matops.ols_multi(x, y, ridge=0.0)
    gram = np.ascontiguousarray(x.T @ x)
    xty = x.T @ y
    t0 = split.t0
    theta = np.zeros((split.n, split.m))
    stalled = 0
    for j in range(split.m):
        lam_max = float(np.abs(xty[:, j]).max()) / t0
        if lam_max > lam:
            alphas = np.geomspace(lam_max, lam, path_len)
        else:
            alphas = np.array([lam])
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            _, coefs, _ = sklearn.linear_model.lasso_path(
                x, y[:, j], alphas=alphas, precompute=gram, Xy=xty[:, j],
                max_iter=max_iter, tol=tol,
            )
        stalled += any(issubclass(w.category, sklearn.exceptions.ConvergenceWarning)
                       for w in caught)
        theta[:, j] = coefs[:, -1]
    if stalled:
        warnings.warn(f"scul: {stalled} unit(s) hit max_iter", ConvergenceWarning)
    return theta


def fit_rols(split: DesignSplit, ridge: float = 1.0,
             share_factorization: bool = True) -> np.ndarray:
    """Restricted OLS: per-unit ridge with weights constrained to sum to one.

    With ``A = X'X + ridge*I``, each column is the KKT closed form
    ``w = A^{-1}(X'y_j - mu * 1)``, ``mu = (1'A^{-1}X'y_j - 1)/(1'A^{-1}1)``.
    By default A is factorized once and shared across units.  With
    ``share_factorization=False`` every unit rebuilds and re-solves its own
    system - the cost profile of fitting each treated unit separately,
    kept for the timing benchmark's per-unit-loop comparator.  Both paths
    return the same weights.
    """
    if ridge < 0:
        raise ValueError("ridge must be nonnegative")
    x, y = split.x_pre, split.y_pre
    n = split.n
    ones = np.ones(n)
    xt = x.T
    theta = np.empty((n, split.m))
    if share_factorization:
        a = x.T @ x
        if ridge > 0:
            a = a + ridge * np.eye(n)
        try:
            factor = scipy.linalg.cho_factor(a, lower=True)
        except scipy.linalg.LinAlgError as err:
            raise RankDeficiencyError(
                "donor Gram matrix is singular; pass ridge > 0"
            ) from err
        a_inv_ones = scipy.linalg.cho_solve(factor, ones)
        denom = ones @ a_inv_ones
        for j in range(split.m):
            v = scipy.linalg.cho_solve(factor, xt @ y[:, j])
            mu = (ones @ v - 1.0) / denom
            theta[:, j] = v - mu * a_inv_ones
        return theta
    for j in range(split.m):
        a = x.T @ x
        if ridge > 0:
            a = a + ridge * np.eye(n)
        try:
            sol = np.linalg.solve(a, np.column_stack([xt @ y[:, j], ones]))
        except np.linalg.LinAlgError as err:
            raise RankDeficiencyError(
                "donor Gram matrix is singular; pass ridge > 0"
            ) from err
        v, a_inv_ones = sol[:, 0], sol[:, 1]
        mu = (ones @ v - 1.0) / (ones @ a_inv_ones)
        theta[:, j] = v - mu * a_inv_ones
    return theta


def _psc_unit(x, y_col, lam, step_init, max_iter, tol):
    """Projected gradient for one simplex-constrained penalized fit."""
    n = x.shape[1]
    distances = ((y_col[:, None] - x) ** 2).sum(axis=0)
    w = np.full(n, 1.0 / n)
    resid = x @ w - y_col
    obj = resid @ resid + lam * (distances @ w)
    eta = step_init
    for it in range(1, max_iter + 1):
        grad = 2.0 * (x.T @ resid) + lam * distances
        while True:
            cand = matops.project_simplex(w - eta * grad)
            cand_resid = x @ cand - y_col
            cand_obj = cand_resid @ cand_resid + lam * (distances @ cand)
            if cand_obj <= obj - 1e-15:
                break
            if np.allclose(cand, w, rtol=0.0, atol=1e-16):
                return w, it, True
            eta *= 0.5
            if eta < 1e-14:
                return w, it, True
        drop = obj - cand_obj
        w, resid, obj = cand, cand_resid, cand_obj
        eta = min(step_init, 2.0 * eta)
        if drop < tol * max(1.0, abs(obj)):
            return w, it, True
    return w, max_iter, False


def fit_psc(split: DesignSplit, lam: float, max_iter: int = 1000,
            tol: float = 1e-10) -> np.ndarray:
    """Penalized synthetic control, one simplex-constrained fit per unit.

    Column j minimizes ``||y_j - X w||^2 + lam * sum_k w_k ||y_j - x_k||^2``
    over the probability simplex; the penalty pulls weight toward donors
    whose pre-treatment path is close to the treated unit's.  ``lam = 0``
    is the classic synthetic-control program.
    """
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    x, y = split.x_pre, split.y_pre
    smax = np.linalg.norm(x, 2)
    step_init = 1.0 / max(2.0 * smax * smax, 1e-12)
    theta = np.empty((split.n, split.m))
    stalled = 0
    for j in range(split.m):
        w, _, ok = _psc_unit(x, y[:, j], lam, step_init, max_iter, tol)
        theta[:, j] = w
        stalled += not ok
    if stalled:
        warnings.warn(f"psc: {stalled} unit(s) hit max_iter", ConvergenceWarning)
    return theta


def fit_baseline(split: DesignSplit, config: BaselineConfig) -> FitReport:
    """Dispatch to one baseline, timing only the weight computation."""
    start = time.perf_counter()
    overrides = {}
    if config.max_iter is not None:
        overrides["max_iter"] = config.max_iter
    if config.tol is not None:
        overrides["tol"] = config.tol
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", ConvergenceWarning)
        if config.method == "scul":
            theta = fit_scul(split, config.lam, **overrides)
            lambda_used = config.lam
        elif config.method == "rols":
            theta = fit_rols(split, config.ridge)
            lambda_used = config.ridge
        elif config.method == "psc":
            theta = fit_psc(split, config.lam, **overrides)
            lambda_used = config.lam
        else:  # pragma: no cover - BaselineConfig already validates
            raise ValueError(f"unknown method {config.method!r}")
        converged = not any(issubclass(w.category, ConvergenceWarning) for w in caught)
    elapsed = time.perf_counter() - start
    return FitReport(
        theta=theta,
        lambda_used=lambda_used,
        iterations=0,
        objective_trace=(),
        converged=converged,
        wall_clock_seconds=elapsed,
        method=config.method,
    )
