"""Counterfactual prediction, treatment effects, and evaluation metrics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class EffectReport:
    """Per-unit and aggregate effects of treatment.

    ``rmse`` and ``att_bias`` are filled only in simulations, where the
    untreated truth is known.
    """

    counterfactuals: np.ndarray     # t1 x m
    per_unit_effects: np.ndarray    # t1 x m
    att_per_period: np.ndarray      # length t1
    att: float
    rmse: float | None = None
    att_bias: float | None = None


def predict_counterfactual(theta: np.ndarray, x_post: np.ndarray) -> np.ndarray:
    """Untreated-outcome predictions ``x_post @ theta`` (t1 x m)."""
    theta = np.asarray(theta, dtype=float)
    x_post = np.asarray(x_post, dtype=float)
    if theta.ndim != 2 or x_post.ndim != 2 or x_post.shape[1] != theta.shape[0]:
        raise ValueError("x_post columns must match theta rows")
    return x_post @ theta


def att(y_post: np.ndarray, counterfactuals: np.ndarray) -> EffectReport:
    """Average treatment effect on the treated over all post cells.

    The ATT is the grand mean of observed-minus-counterfactual across both
    post periods and treated units; ``att_per_period`` gives the per-period
    row means.
    """
    y_post = np.asarray(y_post, dtype=float)
    counterfactuals = np.asarray(counterfactuals, dtype=float)
    if y_post.shape != counterfactuals.shape:
        raise ValueError("y_post and counterfactuals must share a shape")
    if y_post.shape[0] == 0:
        raise ValueError("no post-treatment periods")
    effects = y_post - counterfactuals
    return EffectReport(
        counterfactuals=counterfactuals,
        per_unit_effects=effects,
        att_per_period=effects.mean(axis=1),
        att=float(effects.mean()),
    )


def rmse(counterfactuals: np.ndarray, true_y0: np.ndarray) -> float:
    """Root mean squared prediction error against the untreated truth."""
    counterfactuals = np.asarray(counterfactuals, dtype=float)
    true_y0 = np.asarray(true_y0, dtype=float)
    if counterfactuals.shape != true_y0.shape:
        raise ValueError("shape mismatch between prediction and truth")
    return float(np.sqrt(np.mean((counterfactuals - true_y0) ** 2)))
