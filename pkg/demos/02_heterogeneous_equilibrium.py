"""
Investors and consumers at t = 0
================================

Solve the baseline two-class economy, then push investor wealth up until
consumers leave the staking pool.
"""

# %%
import numpy as np

from posmacro import build_master_cubic, from_supply, solve_heterogeneous

params = from_supply(M=1.2e8, alpha=0.1, gamma=2e6, c=150.0, mu_r=0.05, sigma_r_sq=0.09)
print(build_master_cubic(params).coeffs)

eq = solve_heterogeneous(params)
print(f"S={eq.S:.6e}  S_i={eq.S_i:.6e}  S_c={eq.S_c:.6e}  y={eq.y:.5f}")
print(f"MRS residual {eq.residual_mrs:.2e}, clearance residual {eq.residual_clearance:.2e}")

# %%
# Consumer stake shrinks as investors get richer and hits zero at a finite W_i.
W_i = np.geomspace(1e6, 1e13, 15)
for w in W_i:
    e = solve_heterogeneous(params.with_wealth(float(w), params.W_c))
    print(f"W_i={w:9.2e}  S={e.S:10.4e}  S_c={e.S_c:10.4e}  y={e.y:.5f}  corner={e.corner}")
