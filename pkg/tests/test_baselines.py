import numpy as np
import pytest

from multisc import baselines
from multisc.panel import DesignSplit

from conftest import random_split
from oracles import grid_search


def make_split(y_pre, x_pre):
    y_pre = np.asarray(y_pre, dtype=float)
    x_pre = np.asarray(x_pre, dtype=float)
    return DesignSplit(
        y_pre=y_pre, x_pre=x_pre,
        y_post=np.zeros((1, y_pre.shape[1])),
        x_post=np.zeros((1, x_pre.shape[1])),
        m=y_pre.shape[1], n=x_pre.shape[1],
    )


def scul_objective(w, y, x, lam):
    t0 = y.shape[0]
    return 0.5 * np.sum((y - x @ w) ** 2) / t0 + lam * np.abs(w).sum()


class TestScul:
    def test_kill_threshold_gives_zeros(self, rng):
        split = random_split(rng, t0=10, m=2, n=4)
        lam = 1.01 * np.abs(split.x_pre.T @ split.y_pre).max() / split.t0
        theta = baselines.fit_scul(split, lam)
        assert np.array_equal(theta, np.zeros((4, 2)))

    def test_noiseless_recovery_at_zero_penalty(self, rng):
        x = rng.standard_normal((15, 4))
        w_true = rng.standard_normal((4, 2))
        split = make_split(x @ w_true, x)
        theta = baselines.fit_scul(split, 0.0)
        assert np.allclose(theta, w_true, atol=1e-6)

    def test_matches_grid_oracle(self, rng):
        x = rng.standard_normal((6, 3))
        y = rng.standard_normal((6, 1))
        split = make_split(y, x)
        lam = 0.1
        theta = baselines.fit_scul(split, lam, tol=1e-12)
        axis = np.arange(-1.0, 1.0 + 1e-9, 0.05)
        oracle_val, _ = grid_search(
            lambda w: scul_objective(w, y[:, 0], x, lam), [axis] * 3)
        ours = scul_objective(theta[:, 0], y[:, 0], x, lam)
        assert ours <= oracle_val + 1e-3

    def test_kkt_conditions(self, rng):
        split = random_split(rng, t0=20, m=3, n=8)
        lam = 0.05
        theta = baselines.fit_scul(split, lam, tol=1e-13)
        residual = split.y_pre - split.x_pre @ theta
        corr = np.abs(split.x_pre.T @ residual) / split.t0
        assert np.all(corr <= lam + 1e-6)
        active = theta != 0.0
        assert np.all(np.abs(corr[active] - lam) <= 1e-6)

    def test_negative_penalty_rejected(self, rng):
        with pytest.raises(ValueError):
            baselines.fit_scul(random_split(rng), -0.1)


class TestRols:
    def test_single_donor_forced_to_one(self, rng):
        split = random_split(rng, t0=6, m=2, n=1)
        theta = baselines.fit_rols(split, ridge=1.0)
        assert np.allclose(theta, 1.0)

    def test_exchangeable_donors_split_evenly(self, rng):
        col = rng.standard_normal((8, 1))
        x = np.hstack([col, col])
        split = make_split(col.copy(), x)
        theta = baselines.fit_rols(split, ridge=1.0)
        assert np.allclose(theta, 0.5, atol=1e-10)

    def test_sum_to_one_and_beats_random_search(self, rng):
        split = random_split(rng, t0=12, m=1, n=5)
        ridge = 1.0
        theta = baselines.fit_rols(split, ridge)[:, 0]
        assert theta.sum() == pytest.approx(1.0, abs=1e-12)
        y, x = split.y_pre[:, 0], split.x_pre

        def loss(w):
            return np.sum((y - x @ w) ** 2) + ridge * np.sum(w ** 2)

        ours = loss(theta)
        raw = rng.standard_normal((10_000, 5))
        feasible = raw - (raw.sum(axis=1, keepdims=True) - 1.0) / 5.0
        for w in feasible:
            assert ours <= loss(w) + 1e-9

    def test_shared_and_per_unit_paths_agree(self, rng):
        split = random_split(rng, t0=10, m=3, n=4)
        shared = baselines.fit_rols(split, 1.0, share_factorization=True)
        looped = baselines.fit_rols(split, 1.0, share_factorization=False)
        assert np.allclose(shared, looped, atol=1e-10)


class TestPsc:
    def test_exact_match_donor_takes_all_weight(self, rng):
        x = rng.standard_normal((10, 4))
        y = x[:, [2]].copy()
        split = make_split(y, x)
        theta = baselines.fit_psc(split, lam=0.5)[:, 0]
        expected = np.zeros(4)
        expected[2] = 1.0
        assert np.allclose(theta, expected, atol=1e-4)

    def test_matches_one_dimensional_oracle(self, rng):
        x = rng.standard_normal((9, 2))
        y = rng.standard_normal((9, 1))
        split = make_split(y, x)
        theta = baselines.fit_psc(split, lam=0.0)[:, 0]

        def loss(w1):
            w = np.array([w1, 1.0 - w1])
            return np.sum((y[:, 0] - x @ w) ** 2)

        grid = np.linspace(0.0, 1.0, 1001)
        oracle = min(loss(v) for v in grid)
        assert loss(theta[0]) <= oracle + 1e-3

    def test_huge_penalty_concentrates_on_nearest_donor(self, rng):
        x = rng.standard_normal((8, 3))
        y = rng.standard_normal((8, 1))
        split = make_split(y, x)
        distances = ((y - x) ** 2).sum(axis=0)
        nearest = int(np.argmin(distances))
        theta = baselines.fit_psc(split, lam=1e8)[:, 0]
        assert theta[nearest] == pytest.approx(1.0, abs=1e-4)

    def test_simplex_feasibility(self, rng):
        split = random_split(rng, t0=10, m=4, n=6)
        theta = baselines.fit_psc(split, lam=0.3)
        assert np.all(theta >= 0.0)
        assert np.allclose(theta.sum(axis=0), 1.0, atol=1e-8)


class TestDispatchAndInvariants:
    def test_rols_columns_sum_to_one(self, rng):
        split = random_split(rng, t0=9, m=3, n=4)
        report = baselines.fit_baseline(split, baselines.BaselineConfig("rols"))
        assert np.allclose(report.theta.sum(axis=0), 1.0, atol=1e-10)
        assert report.lambda_used == 1.0

    def test_psc_simplex_bounds(self, rng):
        split = random_split(rng, t0=9, m=2, n=5)
        report = baselines.fit_baseline(
            split, baselines.BaselineConfig("psc", lam=0.2))
        assert np.all(report.theta >= 0.0)
        assert np.all(report.theta <= 1.0 + 1e-12)
        assert np.allclose(report.theta.sum(axis=0), 1.0, atol=1e-8)

    def test_scul_carries_lambda(self, rng):
        split = random_split(rng, t0=9, m=2, n=4)
        report = baselines.fit_baseline(
            split, baselines.BaselineConfig("scul", lam=0.07))
        assert report.lambda_used == 0.07
        assert report.method == "scul"
        assert report.wall_clock_seconds > 0.0

    def test_unknown_method_rejected(self):
        with pytest.raises(ValueError):
            baselines.BaselineConfig("ols")

    def test_column_permutation_equivariance(self, rng):
        split = random_split(rng, t0=12, m=3, n=4)
        perm = np.array([2, 0, 1])
        permuted = DesignSplit(
            y_pre=split.y_pre[:, perm], x_pre=split.x_pre,
            y_post=split.y_post[:, perm], x_post=split.x_post,
            m=split.m, n=split.n,
        )
        for method, kwargs in (("scul", {"lam": 0.05}),
                               ("psc", {"lam": 0.1}),
                               ("rols", {"ridge": 1.0})):
            config = baselines.BaselineConfig(method, **kwargs)
            base = baselines.fit_baseline(split, config).theta
            swapped = baselines.fit_baseline(permuted, config).theta
            assert np.allclose(base[:, perm], swapped, atol=1e-10)
