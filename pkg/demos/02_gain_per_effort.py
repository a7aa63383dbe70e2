"""
What one more observation is worth
==================================

The acquisition behind the optimizer prices every candidate measurement: the
expected improvement of the final recommendation (the "gain in score")
divided by the interaction cost q * tau of the measurement.  This script
builds a small belief by hand and inspects how the pricing behaves.
"""

import math

import numpy as np

from besd.acquisition import (CandidateSet, acquisition_surface, h_function,
                              select_over_grid)
from besd.gp import KernelParams, condition

# h(a, b) = E[max_i(a_i + b_i Z)] - max_i(a_i) for one standard normal Z.
# Two useful sanity points: two symmetric lines give the normal density at 0,
# and if every line has the same slope the maximum never changes.
print("h((0,0), (0,1))      =", h_function([0.0, 0.0], [0.0, 1.0]),
      " (1/sqrt(2 pi) =", 1 / math.sqrt(2 * math.pi), ")")
print("h(any a, constant b) =", h_function([0.3, -0.1, 0.8], [0.5, 0.5, 0.5]))

# Five designs on a line, two episode budgets, two replication counts.
cand = CandidateSet(np.array([[0.0], [2.5], [5.0], [7.5], [10.0]]),
                    tau_set=(200.0, 1000.0), q_set=(1, 4))
params = KernelParams(signal_variance=0.04, length_scales=(2.5,),
                      tau_params=(1.0, 0.5, 0.5, 0.25), prior_mean=0.3,
                      noise_variance=0.02, tau_scale=1000.0)

# Observe the middle design once at low fidelity; condition the grid belief.
history = [((5.0,), 200.0, 1, 0.55)]
mu, cov = condition(params, history).mean_cov(cand.grid_points())

# Every (design, budget, replications) candidate gets a price tag.
print("\n design  tau    q     gain      gain/effort")
for idx, tau, q, gis, rate in acquisition_surface(mu, cov, cand, params):
    print(f"   {idx}   {tau:6.0f}  {q}   {gis:.2e}   {rate:.2e}")

sel = select_over_grid(mu, cov, cand, params)
print(f"\nchosen: design {sel.theta_index} at tau={sel.tau:.0f}, q={sel.q}"
      f"  (gain {sel.gis:.2e} per-effort {sel.gis_per_effort:.2e})")

# Cheap short observations win early.  A fixed per-observation overhead in
# the denominator makes each measurement carry more information, here by
# packing more replications into it.
sel_oh = select_over_grid(mu, cov, cand, params, cost_overhead=5000.0)
print(f"with a 5000-step overhead per observation: tau={sel_oh.tau:.0f}, "
      f"q={sel_oh.q}")
