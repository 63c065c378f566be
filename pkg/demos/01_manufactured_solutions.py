"""
Manufactured solutions and their source terms
=============================================

Each manufactured solution is a temperature field T(x, t; alpha) together
with the heat source q that makes it an exact solution of the 1D heat
equation (rho*c_V = k = 1). Having both in closed form gives free ground
truth for every experiment.
"""

import numpy as np

from costa.mms import (
    SOLUTION_IDS,
    PhysicalParams,
    SpatialGrid,
    TimeGrid,
    get_solution,
    sample_profile,
    sample_source,
    verify_mms_residual,
)

# %%
# Sample a profile at the cell centres of the default 20-cell grid.
grid, time_grid = SpatialGrid(), TimeGrid()
sol = get_solution("2")
alpha = 0.7
print("x      :", np.round(grid.centers[:5], 4), "...")
print("T(x,0) :", np.round(sample_profile(sol, grid, 0.0, alpha)[:5], 4), "...")
print("q(x,0) :", np.round(sample_source(sol, grid, 0.0, alpha)[:5], 4), "...")

# %%
# ``with_boundaries=True`` pads the profile with the Dirichlet values at
# x = 0 and x = 1; this padded vector is what the networks see.
padded = sample_profile(sol, grid, time_grid.t_end, alpha, with_boundaries=True)
print("padded length:", len(padded), " boundaries:", padded[0], padded[-1])

# %%
# Verify every (T, q) pair against the PDE with central differences.
# A second-order stencil shrinks the residual ~100x for every 10x smaller
# step; solutions 0 and 1 are polynomial enough that only roundoff remains.
rng = np.random.default_rng(0)
probes = [(rng.uniform(0.01, 0.99), rng.uniform(0.01, 4.99), rng.uniform(-0.5, 2.5)) for _ in range(100)]
for sid in SOLUTION_IDS:
    s = get_solution(sid)
    coarse = verify_mms_residual(s, PhysicalParams(), probes, 1e-3)
    fine = verify_mms_residual(s, PhysicalParams(), probes, 1e-4)
    print(f"solution {sid}: residual {coarse:.2e} -> {fine:.2e}  (ratio {coarse / fine:7.1f})")
