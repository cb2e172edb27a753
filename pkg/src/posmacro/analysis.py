"""Batch experiments: wealth and delta sweeps, scaling fits, Monte Carlo ensembles."""

from __future__ import annotations

import dataclasses
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .dynamics import SimConfig, simulate
from .errors import DomainError, PosMacroError
from .homogeneous import (
    DEFAULT_FD_STEP,
    DEFAULT_TOL,
    MarketParams,
    classify_regime,
    sensitivity_closed_form,
    sensitivity_fd,
    solve_equilibrium,
)
from .rng import split_seed

WEALTH_COLUMNS = ("W", "S_star", "S_over_W", "y_star", "boundary", "regime", "residual", "error")
DELTA_COLUMNS = ("delta", "S_star", "dS_ddelta_closed", "dS_ddelta_fd", "boundary", "residual", "error")

CI_METHOD = "normal approximation, mean +/- 1.96 * sd / sqrt(n)"


@dataclass
class SweepResult:
    """One row per grid point; failed points keep NaNs and an error message."""

    axis: str
    grid: tuple
    columns: tuple
    rows: list

    def column(self, name: str) -> np.ndarray:
        return np.array([row[name] for row in self.rows], dtype=float)


def _check_grid(grid):
    grid = tuple(float(g) for g in grid)
    if not grid:
        raise DomainError("grid is empty")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise DomainError("grid must be strictly increasing")
    return grid


def wealth_sweep(params: MarketParams, W_grid: Sequence[float], tol: float = DEFAULT_TOL) -> SweepResult:
    grid = _check_grid(W_grid)
    if grid[0] <= 0:
        raise DomainError("wealth grid must be positive")
    regime = classify_regime(params).kind.value
    rows = []
    for W in grid:
        try:
            eq = solve_equilibrium(params, W, tol)
        except PosMacroError as exc:
            rows.append(dict(W=W, S_star=math.nan, S_over_W=math.nan, y_star=math.nan,
                             boundary=False, regime=regime, residual=math.nan, error=str(exc)))
            continue
        rows.append(dict(W=W, S_star=eq.S_star, S_over_W=eq.w_star, y_star=eq.y_star,
                         boundary=eq.boundary, regime=regime, residual=eq.residual, error=""))
    return SweepResult("W", grid, WEALTH_COLUMNS, rows)


def fit_scaling_exponent(sweep: SweepResult, tail_points: int = 3) -> float:
    """OLS slope of log S* on log W over the last ``tail_points`` good rows."""
    good = [r for r in sweep.rows if not r["error"] and r["S_star"] > 0]
    if tail_points < 2 or len(good) < tail_points:
        raise DomainError(f"need {max(tail_points, 2)} solved rows, have {len(good)}")
    tail = good[-tail_points:]
    logW = np.log([r["W"] for r in tail])
    logS = np.log([r["S_star"] for r in tail])
    return float(np.polyfit(logW, logS, 1)[0])


def delta_sweep(
    params_base: MarketParams,
    W: float,
    delta_grid: Sequence[float],
    h: float = DEFAULT_FD_STEP,
    tol: float = DEFAULT_TOL,
) -> SweepResult:
    """Solve across ``delta`` (shifting ``mu_r``) with both derivative estimates."""
    grid = _check_grid(delta_grid)
    rows = []
    for delta in grid:
        params = params_base.with_delta(delta)
        try:
            eq = solve_equilibrium(params, W, tol)
            closed = sensitivity_closed_form(params, W, eq.S_star)
            fd = sensitivity_fd(params, W, h, tol)
        except PosMacroError as exc:
            rows.append(dict(delta=delta, S_star=math.nan, dS_ddelta_closed=math.nan,
                             dS_ddelta_fd=math.nan, boundary=False, residual=math.nan,
                             error=str(exc)))
            continue
        rows.append(dict(delta=delta, S_star=eq.S_star, dS_ddelta_closed=closed,
                         dS_ddelta_fd=fd, boundary=eq.boundary, residual=eq.residual, error=""))
    return SweepResult("delta", grid, DELTA_COLUMNS, rows)


@dataclass
class EnsembleSummary:
    """Aggregates over independent seeds, ordered by run index.

    Extinction statistics use only runs where extinction happened;
    ``fraction_finite`` is over successful runs.
    """

    n_seeds: int
    n_failed: int
    failure_flag: bool
    seeds: tuple
    extinction_times: tuple
    extinction_min: Optional[int]
    extinction_median: Optional[float]
    extinction_max: Optional[int]
    fraction_finite: float
    growth_estimates: tuple
    growth_mean: float
    growth_ci: tuple
    yield_log_slopes: tuple
    terminal_alpha_min: float
    terminal_alpha_mean: float
    terminal_alpha_max: float
    truncations: int
    reentry_fraction: float
    ci_method: str = CI_METHOD
    errors: tuple = ()


def _run_one(config: SimConfig):
    try:
        traj = simulate(config)
    except PosMacroError as exc:
        return None, str(exc)
    return (
        traj.extinction_time,
        traj.log_growth_estimate,
        traj.yield_log_slope,
        float(traj.alpha_path[-1]),
        traj.truncations,
        traj.reentered,
    ), None


def ensemble_seeds(master_seed: int, n_seeds: int) -> tuple:
    return tuple(split_seed(master_seed, i) for i in range(n_seeds))


def monte_carlo_ensemble(config: SimConfig, n_seeds: int, workers: int = 1) -> EnsembleSummary:
    """Run ``n_seeds`` independent paths with seeds split from ``config.seed``.

    Results are reduced in run-index order, so the summary does not depend
    on ``workers``.
    """
    if n_seeds < 2:
        raise DomainError(f"an ensemble needs at least 2 seeds, got {n_seeds}")
    seeds = ensemble_seeds(config.seed, n_seeds)
    configs = [dataclasses.replace(config, seed=s) for s in seeds]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_run_one, configs))
    else:
        outcomes = [_run_one(c) for c in configs]

    ok = [o for o, _ in outcomes if o is not None]
    errors = tuple(e for _, e in outcomes if e is not None)
    n_failed = len(errors)
    if not ok:
        raise DomainError("every ensemble member failed: " + "; ".join(errors[:3]))

    ext = tuple(o[0] for o in ok)
    finite = [e for e in ext if e is not None]
    growth = np.array([o[1] for o in ok])
    alpha = np.array([o[3] for o in ok])
    n = len(ok)
    g_mean = float(growth.mean())
    g_half = 1.96 * float(growth.std(ddof=1)) / math.sqrt(n) if n > 1 else math.nan
    extinct_runs = [o for o in ok if o[0] is not None]
    return EnsembleSummary(
        n_seeds=n_seeds,
        n_failed=n_failed,
        failure_flag=n_failed > 0.01 * n_seeds,
        seeds=seeds,
        extinction_times=ext,
        extinction_min=min(finite) if finite else None,
        extinction_median=float(np.median(finite)) if finite else None,
        extinction_max=max(finite) if finite else None,
        fraction_finite=len(finite) / n,
        growth_estimates=tuple(float(g) for g in growth),
        growth_mean=g_mean,
        growth_ci=(g_mean - g_half, g_mean + g_half),
        yield_log_slopes=tuple(o[2] for o in ok),
        terminal_alpha_min=float(alpha.min()),
        terminal_alpha_mean=float(alpha.mean()),
        terminal_alpha_max=float(alpha.max()),
        truncations=sum(o[4] for o in ok),
        reentry_fraction=(sum(1 for o in extinct_runs if o[5]) / len(extinct_runs)
                          if extinct_runs else 0.0),
        errors=errors,
    )
