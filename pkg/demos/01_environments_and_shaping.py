"""
Sparse-reward environment families and subgoal shaping
======================================================

Samples concrete MDPs from the built-in distributions, then shows how a
subgoal design changes what a tabular Q-learner experiences: same extrinsic
rewards, plus a dense potential-difference signal that switches subgoal by
subgoal as the agent makes progress.
"""

import numpy as np

from besd.agent import QLConfig, evaluate_extrinsic, train
from besd.envs import DOMAINS, make_distribution, sample_instance, theta_bounds
from besd.shaping import AugmentedMdp, SubgoalDesign, potential

rng = np.random.default_rng(0)

# Every domain is a distribution over layouts; sampling twice gives two
# different concrete MDPs (wall rows, door columns, key patches, wind).
for domain in DOMAINS:
    dist = make_distribution(domain)
    inst = sample_instance(dist, seed=1)
    print(f"{domain:5s}  states={inst.n_states:5d}  actions={inst.n_actions}"
          f"  discount={inst.discount}")

# A design is an ordered list of subgoal points.  On GW10 the goal sits at
# cell (9, 0) behind a wall whose door is somewhere on the right side, so a
# sensible pair of subgoals is "the door region, then the goal".
dist = make_distribution("GW10")
print("\ndesign space bounds:", theta_bounds(dist, 2))
design = SubgoalDesign.from_vector(np.array([5.5, 8.5, 9.5, 0.5]), point_dim=2)

# The potential of the upcoming subgoal is a Gaussian bump; once the agent
# enters the subgoal's grid cell, progress increments and the next bump
# takes over.  Print the first subgoal's potential along the bottom row.
inst = sample_instance(dist, seed=7)
from besd.envs import GridState
row = [potential(design, 1, GridState(5, c)) for c in range(10)]
print("Phi_1 along row 5:", np.round(row, 3))

# Train two identical learners on the same instance, one shaped, one not.
hyper = QLConfig()
tau = 1000
shaped_table = train(inst, design, tau, hyper, np.random.default_rng(1))
scratch_table = train(inst, None, tau, hyper, np.random.default_rng(1))

shaped_score = evaluate_extrinsic(inst, design, shaped_table, 50,
                                  np.random.default_rng(2))
scratch_score = evaluate_extrinsic(inst, None, scratch_table, 50,
                                   np.random.default_rng(2))
print(f"\nafter {tau} training steps on one instance:")
print(f"  shaped  policy extrinsic value: {shaped_score:.3f}")
print(f"  scratch policy extrinsic value: {scratch_score:.3f}")

# The augmented MDP makes the progress counter part of the state, so the
# Q-table has (k + 1) copies of the base state space.
env = AugmentedMdp(inst, design)
print(f"\naugmented states: {env.n_states} = (k + 1) x {inst.n_states}")
