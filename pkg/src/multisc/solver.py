"""Multivariate square-root lasso fit for synthetic-control weights.

One convex program fits all treated units at once:

    minimize_theta  (1/sqrt(t0)) * ||Y - X theta||_*  +  lam * sum_ij |theta_ij|

where ``||.||_*`` is the nuclear norm of the pre-treatment residual.  The
solver is proximal gradient with backtracking on the total objective: the
smooth-part step direction comes from the residual's thin SVD restricted to
its numerically nonzero singular directions, and the entrywise penalty is
handled by soft thresholding.  Step sizes are re-seeded after each accepted
step with a spectral (Barzilai-Borwein) estimate, which keeps the iteration
count practical on badly scaled donor matrices whose top singular value
dwarfs the residual scale.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import matops
from .exceptions import NumericError
from .panel import DesignSplit

# Minimum absolute objective decrease for a step to count as descent.
_DESCENT_MARGIN = 1e-12
# Consecutive small accepted drops required to declare convergence; one
# spectral step can stall briefly without being anywhere near optimal.
_CONFIRM_STEPS = 2


@dataclass(frozen=True)
class MscConfig:
    """Solver settings; equal settings give bit-identical runs."""

    lam: float = 0.0
    c: float = 1.1
    max_iter: int = 10_000
    tol: float = 1e-8
    step_init: float = 1.0
    step_shrink: float = 0.5
    step_floor: float = 1e-12

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lam must be nonnegative")
        if self.c <= 1:
            raise ValueError("c must exceed 1")
        if not 0 < self.step_shrink < 1:
            raise ValueError("step_shrink must lie in (0, 1)")
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be positive")


@dataclass(frozen=True)
class FitReport:
    """Fitted weights plus solver diagnostics."""

    theta: np.ndarray
    lambda_used: float
    iterations: int
    objective_trace: tuple[float, ...]
    converged: bool
    wall_clock_seconds: float
    method: str = "msc"
    extra: dict = field(default_factory=dict)


def objective(theta: np.ndarray, split: DesignSplit, lam: float) -> float:
    """Total objective: scaled nuclear-norm loss plus entrywise L1 penalty."""
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (split.n, split.m):
        raise ValueError(f"theta must be {split.n} x {split.m}")
    residual = split.y_pre - split.x_pre @ theta
    loss = matops.nuclear_norm(residual) / math.sqrt(split.t0)
    return loss + lam * float(np.abs(theta).sum())


def _polar_factor(u: np.ndarray, d: np.ndarray, v: np.ndarray) -> np.ndarray:
    """``u_kept @ v_kept.T`` over singular directions above the rank cutoff."""
    if d.size == 0 or d[0] <= 0.0:
        return np.zeros((u.shape[0], v.shape[0]))
    keep = d > matops.RANK_TOL * d[0]
    return u[:, keep] @ v[:, keep].T


def subgradient_step_direction(residual: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Smooth-part step direction ``-(1/sqrt(t0)) X' U V'``.

    (U, V) span the residual's singular directions with values above the
    rank cutoff; a zero residual maps to the zero direction by convention.
    """
    residual = np.asarray(residual, dtype=float)
    x = np.asarray(x, dtype=float)
    if residual.shape[0] != x.shape[0]:
        raise ValueError("residual and x must share a row count")
    factors = matops.svd(residual)
    polar = _polar_factor(factors.u, factors.d, factors.v)
    return -(x.T @ polar) / math.sqrt(x.shape[0])


def _singular_values(residual):
    try:
        return np.linalg.svd(residual, compute_uv=False)
    except np.linalg.LinAlgError as err:  # pragma: no cover - LAPACK failure
        raise NumericError(f"SVD did not converge: {err}") from err


def _decompose(residual):
    try:
        return np.linalg.svd(residual, full_matrices=False)
    except np.linalg.LinAlgError as err:  # pragma: no cover - LAPACK failure
        raise NumericError(f"SVD did not converge: {err}") from err


def fit(split: DesignSplit, config: MscConfig) -> FitReport:
    """Solve the weight program by descent-checked proximal gradient.

    Starts from theta = 0.  Every step has the form
    ``soft_threshold(theta - eta * grad, eta * lam)`` and is accepted only
    if the total objective drops; otherwise the step size shrinks and the
    step is retried.  After an accepted step the size is re-seeded with an
    alternating spectral (Barzilai-Borwein) estimate, capped at
    ``step_init``; spectral seeding keeps the iteration count practical on
    donor matrices whose top singular value dwarfs the residual scale.
    ``objective_trace`` records the accepted iterates and is nonincreasing
    by construction.  Termination: consecutive accepted steps with
    relative objective change below ``config.tol`` or a prox fixed point
    (converged), ``max_iter``, or step-size underflow (not converged).
    """
    start = time.perf_counter()
    x, y = split.x_pre, split.y_pre
    xt = x.T
    lam = config.lam
    scale = 1.0 / math.sqrt(split.t0)

    theta = np.zeros((split.n, split.m))
    u, d, vt = _decompose(y)
    obj = scale * d.sum()
    if not np.isfinite(obj):
        raise NumericError("objective is not finite at the zero start")
    grad = -scale * (xt @ _polar_factor(u, d, vt.T))
    trace = [obj]

    eta = config.step_init
    iterations = 0
    converged = False
    small_drops = 0
    flip = False
    while iterations < config.max_iter:
        iterations += 1
        while True:
            z = theta - eta * grad
            candidate = np.sign(z) * np.maximum(np.abs(z) - eta * lam, 0.0)
            if np.array_equal(candidate, theta):
                # Prox fixed point: no smaller step can improve either.
                converged = True
                trace.append(obj)
                break
            residual = y - x @ candidate
            cand_obj = scale * _singular_values(residual).sum() \
                + lam * float(np.abs(candidate).sum())
            if not np.isfinite(cand_obj):
                raise NumericError("objective overflowed during the line search")
            if cand_obj <= obj - _DESCENT_MARGIN:
                break
            eta *= config.step_shrink
            if eta < config.step_floor:
                break
        if converged or eta < config.step_floor:
            break
        u, d, vt = _decompose(residual)
        grad_new = -scale * (xt @ _polar_factor(u, d, vt.T))
        dtheta = candidate - theta
        dgrad = grad_new - grad
        relative_drop = (obj - cand_obj) / max(abs(obj), 1e-30)
        theta, obj, grad = candidate, cand_obj, grad_new
        trace.append(obj)
        # Alternating spectral step estimate; fall back to doubling when the
        # local curvature is not informative.
        curve = float((dtheta * dgrad).sum())
        if curve <= 0.0:
            eta = min(config.step_init, 2.0 * eta)
        else:
            flip = not flip
            if flip:
                eta = min(config.step_init, float((dtheta * dtheta).sum()) / curve)
            else:
                gg = float((dgrad * dgrad).sum())
                eta = min(config.step_init, curve / gg if gg > 0.0 else 2.0 * eta)
        small_drops = small_drops + 1 if relative_drop < config.tol else 0
        if small_drops >= _CONFIRM_STEPS:
            converged = True
            break

    return FitReport(
        theta=theta,
        lambda_used=lam,
        iterations=iterations,
        objective_trace=tuple(trace),
        converged=converged,
        wall_clock_seconds=time.perf_counter() - start,
    )


def default_lambda(n: int, t0: int, c: float = 1.1) -> float:
    """Pivotal default penalty ``2c * (n * ln(n*t0) / t0)**(1/4)``.

    Natural logarithm; the rule needs only the donor count and the
    pre-treatment length, not any noise-scale estimate.
    """
    if n < 1 or t0 < 1:
        raise ValueError("n and t0 must be positive")
    if c <= 1:
        raise ValueError("c must exceed 1")
    return 2.0 * c * (n * math.log(n * t0) / t0) ** 0.25


def cross_validate(
    split: DesignSplit,
    grid,
    blocks: int = 5,
    config: MscConfig | None = None,
) -> tuple[float, list[tuple[float, float]]]:
    """Rolling-origin cross-validation over a penalty grid.

    The pre-treatment rows are cut into ``blocks + 1`` contiguous segments.
    Fold b trains on the first ``round(t0 * b / (blocks + 1))`` rows and
    validates on the rows of the next segment, predicting treated columns
    as ``x_val @ theta``.  Returns the penalty with the smallest mean
    validation RMSE (ties go to the larger penalty) plus the full table.
    """
    grid = [float(g) for g in grid]
    if not grid or any(g < 0 for g in grid):
        raise ValueError("grid must be nonempty with nonnegative penalties")
    if blocks < 2:
        raise ValueError("blocks must be at least 2")
    t0 = split.t0
    if t0 < 2 * blocks:
        raise ValueError(f"t0 = {t0} is too small for {blocks} blocks")
    base = config or MscConfig()

    edges = [round(t0 * b / (blocks + 1)) for b in range(blocks + 2)]
    folds = []
    for b in range(1, blocks + 1):
        train_end, val_end = edges[b], edges[b + 1]
        if train_end < 1 or val_end <= train_end:
            raise ValueError("fold boundaries leave an empty train or validation block")
        folds.append((train_end, val_end))

    table = []
    for lam in grid:
        cfg = replace(base, lam=lam)
        fold_rmse = []
        for train_end, val_end in folds:
            train = DesignSplit(
                y_pre=split.y_pre[:train_end],
                x_pre=split.x_pre[:train_end],
                y_post=split.y_pre[train_end:val_end],
                x_post=split.x_pre[train_end:val_end],
                m=split.m,
                n=split.n,
            )
            report = fit(train, cfg)
            predicted = train.x_post @ report.theta
            fold_rmse.append(float(np.sqrt(np.mean((predicted - train.y_post) ** 2))))
        table.append((lam, float(np.mean(fold_rmse))))

    best_rmse = min(score for _, score in table)
    best_lam = max(lam for lam, score in table if score == best_rmse)
    return best_lam, table
