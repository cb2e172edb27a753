import numpy as np
import pytest

import posmacro.analysis as analysis
from posmacro.analysis import (
    SweepResult,
    WEALTH_COLUMNS,
    delta_sweep,
    ensemble_seeds,
    fit_scaling_exponent,
    monte_carlo_ensemble,
    wealth_sweep,
)
from posmacro.dynamics import SimConfig
from posmacro.errors import DomainError, SolverError
from posmacro.heterogeneous import from_supply
from posmacro.homogeneous import MarketParams, solve_equilibrium
from posmacro.rng import split_seed

BASE = MarketParams(0.05, 0.09, 150.0)
DECADES = [10.0**k for k in range(8, 15)]
TABLE1 = from_supply(1.2e8, 0.1, 2e6, 150.0, 0.05, 0.09)


def synthetic(beta, k=3.7):
    rows = [dict(W=W, S_star=k * W**beta, error="") for W in DECADES]
    return SweepResult("W", tuple(DECADES), WEALTH_COLUMNS, rows)


class TestWealthSweep:
    def test_variance_hedge_convergence(self):
        ratio = wealth_sweep(BASE, DECADES).column("S_over_W")
        gaps = np.abs(ratio[1:] - 4 / 9)
        assert np.all(np.diff(gaps) <= 0) and gaps[-1] < 1e-3

    def test_yield_cap_convergence(self):
        S = wealth_sweep(BASE.with_delta(0.01), DECADES).column("S_star")
        assert S[-1] == pytest.approx(2.25e8, rel=1e-3)

    def test_single_point(self):
        sweep = wealth_sweep(BASE, [1e10])
        assert len(sweep.rows) == 1
        assert sweep.rows[0]["S_star"] == solve_equilibrium(BASE, 1e10).S_star

    def test_deterministic(self):
        assert wealth_sweep(BASE, DECADES) == wealth_sweep(BASE, DECADES)

    def test_failures_recorded(self):
        p = MarketParams(0.05, 0.09, 150.0, mu_F=1.0, sigma_F_sq=1e9)
        sweep = wealth_sweep(p, [1e6, 1e12])  # W mu_F < sigma_F^2 at the first point
        assert sweep.rows[0]["error"] and np.isnan(sweep.rows[0]["S_star"])
        assert not sweep.rows[1]["error"]

    @pytest.mark.parametrize("grid", [[], [2.0, 1.0], [0.0, 1.0]])
    def test_bad_grid(self, grid):
        with pytest.raises(DomainError):
            wealth_sweep(BASE, grid)


class TestScalingFit:
    @pytest.mark.parametrize("beta", [0.0, 2 / 3, 1.0])
    def test_synthetic_recovery(self, beta):
        assert fit_scaling_exponent(synthetic(beta)) == pytest.approx(beta, abs=1e-9)

    @pytest.mark.parametrize("mu_r, expected", [(0.05, 1.0), (0.09, 2 / 3), (0.10, 0.0)])
    def test_regimes(self, mu_r, expected):
        sweep = wealth_sweep(MarketParams(mu_r, 0.09, 150.0), DECADES)
        assert fit_scaling_exponent(sweep, 3) == pytest.approx(expected, abs=0.02)

    def test_too_few_rows(self):
        with pytest.raises(DomainError):
            fit_scaling_exponent(synthetic(1.0), tail_points=20)


class TestDeltaSweep:
    def test_columns_agree_and_decrease(self):
        grid = np.linspace(-0.04, 0.01, 26)
        sweep = delta_sweep(BASE, 1e10, grid)
        S = sweep.column("S_star")
        closed = sweep.column("dS_ddelta_closed")
        fd = sweep.column("dS_ddelta_fd")
        assert np.all(np.diff(S) < 0)
        assert np.all(closed < 0)
        np.testing.assert_allclose(fd, closed, rtol=1e-6)

    def test_no_jump_at_critical(self):
        grid = np.linspace(-1e-3, 1e-3, 21)
        sweep = delta_sweep(BASE, 1e10, grid)
        S = sweep.column("S_star")
        slope = np.abs(sweep.column("dS_ddelta_closed"))
        jump_bound = np.maximum(slope[:-1], slope[1:]) * np.diff(grid)
        assert np.all(np.abs(np.diff(S)) <= jump_bound * (1 + 1e-9))

    def test_boundary_point_recorded(self):
        sweep = delta_sweep(BASE, 1e6, [-0.04])
        assert sweep.rows[0]["error"]


class TestEnsemble:
    CFG = SimConfig(TABLE1, 300, seed=99)

    def test_needs_two_seeds(self):
        with pytest.raises(DomainError):
            monte_carlo_ensemble(self.CFG, 1)

    def test_seed_rule(self):
        assert ensemble_seeds(99, 3) == tuple(split_seed(99, i) for i in range(3))

    def test_deterministic_and_parallel_invariant(self):
        serial = monte_carlo_ensemble(self.CFG, 6)
        again = monte_carlo_ensemble(self.CFG, 6)
        parallel = monte_carlo_ensemble(self.CFG, 6, workers=2)
        assert serial == again == parallel
        assert serial.n_seeds == 6 and len(serial.growth_estimates) == 6
        assert "1.96" in serial.ci_method

    def test_failures_excluded_and_flagged(self, monkeypatch):
        real = analysis.simulate
        bad = ensemble_seeds(self.CFG.seed, 4)[1]

        def flaky(config):
            if config.seed == bad:
                raise SolverError("injected")
            return real(config)

        monkeypatch.setattr(analysis, "simulate", flaky)
        summary = monte_carlo_ensemble(self.CFG, 4)
        assert summary.n_failed == 1 and summary.failure_flag
        assert len(summary.growth_estimates) == 3 and summary.errors == ("injected",)

    def test_stats_consistent(self):
        s = monte_carlo_ensemble(self.CFG, 8)
        finite = [t for t in s.extinction_times if t is not None]
        assert s.fraction_finite == len(finite) / 8
        if finite:
            assert s.extinction_min == min(finite) and s.extinction_max == max(finite)
        lo, hi = s.growth_ci
        assert lo <= s.growth_mean <= hi
        assert s.terminal_alpha_min <= s.terminal_alpha_mean <= s.terminal_alpha_max
