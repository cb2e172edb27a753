"""
Scaling regimes of the pure-investor economy
=============================================

Sweep total wealth over six decades in each of the three regimes and fit the
log-log slope of the equilibrium stake on the top three decades.
"""

# %%
import numpy as np

from posmacro import MarketParams, asymptotic_stake, fit_scaling_exponent, wealth_sweep

W_grid = np.logspace(8, 14, 7)
regimes = {
    "variance-dominated": MarketParams(mu_r=0.05, sigma_r_sq=0.09, c=150.0),
    "critical": MarketParams(mu_r=0.09, sigma_r_sq=0.09, c=150.0),
    "yield-dominated": MarketParams(mu_r=0.10, sigma_r_sq=0.09, c=150.0),
}

# %%
# Fitted exponents: roughly 1, 2/3 and 0.
for name, params in regimes.items():
    sweep = wealth_sweep(params, W_grid)
    beta = fit_scaling_exponent(sweep, tail_points=3)
    print(f"{name:>20s}  delta={params.delta:+.2f}  slope={beta:.4f}")

# %%
# Compare the solver with the large-wealth approximations.
for name, params in regimes.items():
    sweep = wealth_sweep(params, W_grid)
    approx = np.array([asymptotic_stake(params, W)[0] for W in W_grid])
    ratio = sweep.column("S_star") / approx
    print(f"{name:>20s}  S*/approx: " + " ".join(f"{r:.4f}" for r in ratio))

# %%
# Share of wealth staked in the variance-dominated regime tends to 4/9.
sweep = wealth_sweep(regimes["variance-dominated"], W_grid)
print(np.column_stack([W_grid, sweep.column("S_over_W")]))
