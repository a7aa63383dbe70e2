"""Cost-aware Bayesian optimization of shaped subgoal designs.

Learns where to place intermediate shaping subgoals, and how long and how
often to train when evaluating a candidate placement, for distributions of
sparse-reward MDPs.  The surrogate is a Gaussian process over (design,
training-budget) space; the acquisition is the expected gain in recommended
score per unit of simulation effort.
"""

from .envs import (DOMAINS, EnvDistribution, GridState, CarState,
                   make_distribution, sample_instance, theta_bounds)
from .shaping import AugmentedMdp, SubgoalDesign
from .agent import (InteractionMeter, Observation, ObservationLog, QLConfig,
                    QTable, evaluate_extrinsic, observe, steps_to_goal,
                    train, window_return)
from .gp import KernelParams, Posterior, condition, estimate_noise, fit_map
from .acquisition import (AcquisitionResult, CandidateSet, gain_in_score,
                          h_function, select_next, select_over_grid)
from .loop import (ReplayError, RunLog, RunState, init_state, iterate,
                   make_rl_objective, make_synthetic_objective, recommend,
                   replay, run)
from .baselines import (BaselineRun, confidence_bound, expected_improvement,
                        hyperband_schedule, run_ei, run_hyperband, run_lcb,
                        run_ql, run_tql)
from .experiment import (ConfigError, ExperimentConfig, emit_plots,
                         ratio_report, run_experiment)

__version__ = "0.1.0"
