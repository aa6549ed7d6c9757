"""Data-generating processes, replication runner, and timing benchmark.

Two designs for the treated paths share one AR(1) donor process:

* setting 1 - every unit, treated or control, is an independent AR(1)
  chain ``y_t = 0.1 c + 0.9 y_{t-1} + z_t`` with unit intercepts c cycling
  through 1..10 and standard-normal innovations;
* setting 2 - controls follow the AR(1) chains and treated paths are
  ``X theta + noise`` for a sparse random weight matrix whose columns sum
  to one.

A constant treatment effect ``tau`` is added to observed post-treatment
outcomes; the pre-shift values are kept as the ground truth.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import baselines, effects, solver
from .panel import DesignSplit
from .rng import RandomStream, derive_seed

ALL_METHODS = ("msc", "psc", "scul", "rols")

# Pilot-instance seed offset for hyperparameter preselection; any fixed
# constant works, it only has to differ from every replication seed.
_PILOT_SALT = 0xA5A5A5A5A5A5A5A5


@dataclass(frozen=True)
class SimConfig:
    """One simulation scenario; everything but wall-clock is seed-determined."""

    setting: int
    m: int
    n: int = 400
    t0: int = 100
    t1: int = 10
    s: int = 1000
    noise_sd: float = 0.5
    tau: float = 1.0
    replications: int = 1
    seed: int = 0
    burn_in: int = 200

    def __post_init__(self):
        if self.setting not in (1, 2):
            raise ValueError("setting must be 1 or 2")
        if min(self.m, self.n, self.t0, self.replications) < 1 or self.t1 < 0:
            raise ValueError("m, n, t0, replications must be >= 1 and t1 >= 0")
        if self.setting == 2:
            if self.s < self.m:
                raise ValueError("need s >= m so every column gets a nonzero weight")
            if self.s > self.n * self.m:
                raise ValueError("s cannot exceed the number of weight cells")


@dataclass(frozen=True)
class RepRecord:
    method: str
    replication: int
    rmse: float
    att_bias: float
    fit_seconds: float


@dataclass(frozen=True)
class SimResult:
    """Per-replication records plus per-method aggregates."""

    config: SimConfig
    records: tuple[RepRecord, ...]
    failures: tuple[tuple[int, str], ...] = ()
    hyperparams: dict = field(default_factory=dict)

    def aggregates(self) -> dict:
        out = {}
        methods = sorted({r.method for r in self.records})
        for method in methods:
            rows = [r for r in self.records if r.method == method]
            rmse_vals = np.array([r.rmse for r in rows])
            bias_vals = np.array([r.att_bias for r in rows])
            secs = np.array([r.fit_seconds for r in rows])
            k = len(rows)
            out[method] = {
                "replications": k,
                "rmse_mean": float(rmse_vals.mean()),
                "rmse_se": float(rmse_vals.std(ddof=1) / math.sqrt(k)) if k > 1 else 0.0,
                "att_bias_mean": float(bias_vals.mean()),
                "att_bias_se": float(bias_vals.std(ddof=1) / math.sqrt(k)) if k > 1 else 0.0,
                "att_bias_sd": float(bias_vals.std(ddof=1)) if k > 1 else 0.0,
                "fit_seconds_mean": float(secs.mean()),
            }
        return out


def _ar1_chains(rng: RandomStream, n_units: int, t_total: int, burn_in: int,
                innovation_sd: float = 1.0) -> np.ndarray:
    """AR(1) panel, one column per unit; innovations drawn unit-major."""
    z = rng.normals(n_units * (burn_in + t_total)).reshape(n_units, burn_in + t_total)
    if innovation_sd != 1.0:
        z = z * innovation_sd
    c = (np.arange(n_units) % 10) + 1.0
    y = c.copy()  # long-run mean of each chain
    out = np.empty((t_total, n_units))
    for t in range(burn_in + t_total):
        y = 0.1 * c + 0.9 * y + z[:, t]
        if t >= burn_in:
            out[t - burn_in] = y
    return out


def gen_ar1_panel(n_units: int, t_total: int, seed: int, burn_in: int = 200,
                  innovation_sd: float = 1.0) -> np.ndarray:
    """t_total x n_units matrix of independent AR(1) chains.

    Unit i has intercept constant ``c_i = (i mod 10) + 1``; each chain is
    initialized at its long-run mean ``c_i`` and advanced `burn_in` steps
    before recording.  ``innovation_sd`` exists as a test hook (0 freezes
    every chain at its mean).
    """
    if n_units < 1 or t_total < 1:
        raise ValueError("n_units and t_total must be positive")
    return _ar1_chains(RandomStream(seed), n_units, t_total, burn_in, innovation_sd)


def _sparse_weights(rng: RandomStream, n: int, m: int, s: int) -> np.ndarray:
    """Sparse n x m weight matrix: s nonzeros, >= 1 per column, columns sum to 1."""
    rows_first = np.array([rng.below(n) for _ in range(m)])
    taken = rows_first * m + np.arange(m)  # flat index, row-major
    if s > m:
        pool = np.setdiff1d(np.arange(n * m), taken, assume_unique=False)
        extra = rng.choose(pool, s - m)
        flat = np.concatenate([taken, extra])
    else:
        flat = taken
    theta = np.zeros(n * m)
    theta[flat] = rng.uniforms(s)
    theta = theta.reshape(n, m)
    colsum = theta.sum(axis=0)
    if np.any(colsum <= 0):  # pragma: no cover - needs a uniform draw of exactly 0
        raise RuntimeError("degenerate zero column in generated weights")
    return theta / colsum


def gen_setting(cfg: SimConfig) -> tuple[DesignSplit, np.ndarray, float]:
    """Draw one dataset: (split, true untreated post outcomes, true effect).

    Observed treated post outcomes carry ``+ tau``; the returned truth does
    not.  Stream order: control chains, then (setting 2) weight positions,
    weight values, and the treated-path noise.
    """
    rng = RandomStream(cfg.seed)
    t_total = cfg.t0 + cfg.t1
    if cfg.setting == 1:
        both = _ar1_chains(rng, cfg.m + cfg.n, t_total, cfg.burn_in)
        y_full = both[:, : cfg.m]
        x_full = both[:, cfg.m :]
        theta_true = None
    else:
        x_full = _ar1_chains(rng, cfg.n, t_total, cfg.burn_in)
        theta_true = _sparse_weights(rng, cfg.n, cfg.m, cfg.s)
        noise = cfg.noise_sd * rng.normals(cfg.m * t_total).reshape(cfg.m, t_total).T
        y_full = x_full @ theta_true + noise

    true_y0_post = y_full[cfg.t0 :].copy()
    y_post_observed = true_y0_post + cfg.tau
    split = DesignSplit(
        y_pre=y_full[: cfg.t0],
        x_pre=x_full[: cfg.t0],
        y_post=y_post_observed,
        x_post=x_full[cfg.t0 :],
        m=cfg.m,
        n=cfg.n,
    )
    return split, true_y0_post, cfg.tau


def _fit_method(split: DesignSplit, method: str, hyper: dict):
    if method == "msc":
        cfg = solver.MscConfig(lam=hyper["msc"])
        return solver.fit(split, cfg)
    if method == "scul":
        return baselines.fit_baseline(split, baselines.BaselineConfig("scul", lam=hyper["scul"]))
    if method == "psc":
        return baselines.fit_baseline(split, baselines.BaselineConfig("psc", lam=hyper["psc"]))
    if method == "rols":
        return baselines.fit_baseline(split, baselines.BaselineConfig("rols", ridge=hyper["rols"]))
    raise ValueError(f"unknown method {method!r}")


def preselect_hyperparams(cfg: SimConfig, methods, lambda_policy: str = "cv",
                          fixed_lambda: float | None = None,
                          cv_grid=None, blocks: int = 5,
                          overrides: dict | None = None) -> dict:
    """Pick each method's penalty once, on a pilot dataset.

    The main fit's penalty follows `lambda_policy`: ``fixed`` uses
    `fixed_lambda`, ``corollary`` the closed-form default, and ``cv``
    rolling-origin cross-validation on the pilot draw.  SCUL and PSC are
    always cross-validated on the pilot unless overridden; the restricted
    OLS ridge is 1 unless overridden.
    """
    methods = _normalize_methods(methods)
    overrides = dict(overrides or {})
    grid = list(cv_grid) if cv_grid is not None else [round(0.01 * k, 2) for k in range(1, 11)]
    pilot_needed = any(
        method not in overrides and (
            (method == "msc" and lambda_policy == "cv") or method in ("scul", "psc")
        )
        for method in methods
    )
    pilot = None
    if pilot_needed:
        pilot, _, _ = gen_setting(replace(cfg, seed=derive_seed(cfg.seed, _PILOT_SALT)))

    hyper = {}
    for method in methods:
        if method in overrides:
            hyper[method] = float(overrides[method])
            continue
        if method == "msc":
            if lambda_policy == "fixed":
                if fixed_lambda is None:
                    raise ValueError("fixed lambda policy needs a lambda value")
                hyper[method] = float(fixed_lambda)
            elif lambda_policy == "corollary":
                hyper[method] = solver.default_lambda(cfg.n, cfg.t0)
            elif lambda_policy == "cv":
                hyper[method], _ = solver.cross_validate(pilot, grid, blocks)
            else:
                raise ValueError(f"unknown lambda policy {lambda_policy!r}")
        elif method == "scul":
            hyper[method] = _cv_baseline(pilot, "scul", grid, blocks)
        elif method == "psc":
            hyper[method] = _cv_baseline(pilot, "psc", grid, blocks)
        elif method == "rols":
            hyper[method] = 1.0
    return hyper


def _cv_baseline(split: DesignSplit, method: str, grid, blocks: int) -> float:
    """Rolling-origin CV for a per-unit baseline, one shared penalty."""
    t0 = split.t0
    edges = [round(t0 * b / (blocks + 1)) for b in range(blocks + 2)]
    scores = []
    for lam in grid:
        fold_rmse = []
        for b in range(1, blocks + 1):
            train_end, val_end = edges[b], edges[b + 1]
            train = DesignSplit(
                y_pre=split.y_pre[:train_end], x_pre=split.x_pre[:train_end],
                y_post=split.y_pre[train_end:val_end],
                x_post=split.x_pre[train_end:val_end],
                m=split.m, n=split.n,
            )
            if method == "scul":
                theta = baselines.fit_scul(train, lam)
            else:
                theta = baselines.fit_psc(train, lam)
            predicted = train.x_post @ theta
            fold_rmse.append(float(np.sqrt(np.mean((predicted - train.y_post) ** 2))))
        scores.append((float(lam), float(np.mean(fold_rmse))))
    best = min(score for _, score in scores)
    return max(lam for lam, score in scores if score == best)


def _normalize_methods(methods) -> tuple[str, ...]:
    methods = tuple(str(m).lower() for m in methods)
    if not methods:
        raise ValueError("methods must be nonempty")
    unknown = [m for m in methods if m not in ALL_METHODS]
    if unknown:
        raise ValueError(f"unknown methods {unknown}; expected subset of {ALL_METHODS}")
    return methods


def _run_one(cfg: SimConfig, rep: int, methods, hyper) -> list[RepRecord]:
    rep_cfg = replace(cfg, seed=derive_seed(cfg.seed, rep))
    split, true_y0, true_delta = gen_setting(rep_cfg)
    records = []
    for method in methods:
        report = _fit_method(split, method, hyper)
        predicted = effects.predict_counterfactual(report.theta, split.x_post)
        rep_rmse = effects.rmse(predicted, true_y0)
        att_hat = effects.att(split.y_post, predicted).att
        records.append(RepRecord(
            method=method,
            replication=rep,
            rmse=rep_rmse,
            att_bias=att_hat - true_delta,
            fit_seconds=report.wall_clock_seconds,
        ))
    return records


def run_experiment(cfg: SimConfig, methods, lambda_policy: str = "cv",
                   fixed_lambda: float | None = None, cv_grid=None,
                   overrides: dict | None = None, threads: int = 1) -> SimResult:
    """Replicate the scenario and score every method on each draw.

    Hyperparameters are preselected once (see
    :func:`preselect_hyperparams`), then each replication generates a fresh
    dataset from its derived seed, fits every method (timing only the
    fit), and scores RMSE against the true untreated post outcomes plus the
    ATT bias against the true effect.  Failed replications are recorded and
    skipped in aggregates.
    """
    methods = _normalize_methods(methods)
    hyper = preselect_hyperparams(cfg, methods, lambda_policy, fixed_lambda,
                                  cv_grid, overrides=overrides)
    records: list[RepRecord] = []
    failures: list[tuple[int, str]] = []

    def job(rep):
        try:
            return _run_one(cfg, rep, methods, hyper), None
        except Exception as err:  # noqa: BLE001 - per-replication isolation
            return [], f"{type(err).__name__}: {err}"

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(job, range(cfg.replications)))
    else:
        outcomes = [job(rep) for rep in range(cfg.replications)]
    for rep, (rows, error) in enumerate(outcomes):
        records.extend(rows)
        if error is not None:
            failures.append((rep, error))

    records.sort(key=lambda r: (r.replication, methods.index(r.method)))
    return SimResult(config=cfg, records=tuple(records),
                     failures=tuple(failures), hyperparams=hyper)


def bench_timing(m_values, methods, n: int = 400, t0: int = 100, t1: int = 10,
                 s: int = 1000, replications: int = 3, seed: int = 0,
                 setting: int = 2, hyperparams: dict | None = None) -> list[dict]:
    """Wall-clock per single fit across a sweep of treated-unit counts.

    No cross-validation: fixed penalties (0.03 unless overridden) isolate
    the cost of computing the weights.  Returns one row per (method, m)
    with mean and standard-error seconds.
    """
    methods = _normalize_methods(methods)
    hyper = {"msc": 0.03, "scul": 0.03, "psc": 0.03, "rols": 1.0}
    hyper.update(hyperparams or {})
    rows = []
    for m in m_values:
        cfg = SimConfig(setting=setting, m=int(m), n=n, t0=t0, t1=t1,
                        s=max(min(s, n * int(m)), int(m)) if setting == 2 else s,
                        replications=replications, seed=seed)
        times = {method: [] for method in methods}
        for rep in range(replications):
            split, _, _ = gen_setting(replace(cfg, seed=derive_seed(seed, rep)))
            for method in methods:
                start = time.perf_counter()
                if method == "rols":
                    # Per-unit-loop comparator: each unit re-solves its own
                    # system, the pattern the joint fit is measured against.
                    baselines.fit_rols(split, hyper["rols"], share_factorization=False)
                else:
                    _fit_method(split, method, hyper)
                times[method].append(time.perf_counter() - start)
        for method in methods:
            vals = np.array(times[method])
            rows.append({
                "method": method,
                "m": int(m),
                "mean_seconds": float(vals.mean()),
                "se_seconds": float(vals.std(ddof=1) / math.sqrt(len(vals)))
                if len(vals) > 1 else 0.0,
            })
    return rows
