"""Comparison strategies over the same observe interface and cost accounting.

Five baselines: plain Q-learning on the test instance (QL), Q-learning warm-
started from stored tables (TQL), successive-halving style racing over fresh
design samples (HB), and two one-fidelity Bayesian optimizers that always pay
for full-length observations (EI, LCB).  Every environment interaction goes
through the same train/observe path as the main loop, so one InteractionMeter
gives directly comparable cost curves.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .acquisition import CandidateSet
from .agent import QLConfig, QTable, evaluate_extrinsic, observe, train
from .envs import sample_instance, theta_bounds
from .gp import observation_noise, rank_one_update
from .loop import init_state, make_rl_objective
from .shaping import SubgoalDesign

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


@dataclass
class BaselineRun:
    method: str                  # QL | TQL | HB | EI | LCB
    best_design: SubgoalDesign | None
    cost_curve: list             # (cumulative cost, score) with cost increasing
    recommendations: list | None = None   # (cost, best theta so far) checkpoints


def _point_dim(dist):
    return len(theta_bounds(dist, 1))


def _child(rng):
    return np.random.default_rng(int(rng.integers(2 ** 63 - 1)))


def run_ql(dist, tau_max, hyper=None, trials=200, rng=None, meter=None):
    """Train from scratch with no shaping on fresh instances; running mean score."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    hyper = hyper or QLConfig()
    rng = rng if rng is not None else np.random.default_rng()
    trial_rng = _child(rng)
    scores, cost, curve = [], 0.0, []
    for _ in range(trials):
        inst = sample_instance(dist, int(trial_rng.integers(2 ** 63 - 1)))
        table = train(inst, None, tau_max, hyper, trial_rng, meter)
        scores.append(evaluate_extrinsic(inst, None, table,
                                         hyper.eval_rollouts, trial_rng))
        cost += tau_max
        curve.append((cost, float(np.mean(scores))))
    return BaselineRun("QL", None, curve)


def run_tql(dist, tau_max, hyper=None, n_stored=10, trials=200,
            stored_budget=None, rng=None, meter=None):
    """Warm-started Q-learning: trials continue from a random stored table.

    The trial stream draws from its own generator, positioned exactly as in
    run_ql, so a zero storage budget reproduces the scratch baseline output
    for the same entry rng.
    """
    if trials < 1 or n_stored < 1:
        raise ValueError("trials and n_stored must be >= 1")
    hyper = hyper or QLConfig()
    rng = rng if rng is not None else np.random.default_rng()
    trial_rng = _child(rng)
    table_rng = _child(rng)
    if stored_budget is None:
        stored_budget = tau_max
    stored, cost = [], 0.0
    for _ in range(n_stored):
        if stored_budget > 0:
            inst = sample_instance(dist, int(table_rng.integers(2 ** 63 - 1)))
            table = train(inst, None, stored_budget, hyper, table_rng, meter)
            stored.append(table.values)
            cost += stored_budget
        else:
            stored.append(None)
    scores, curve = [], []
    for _ in range(trials):
        inst = sample_instance(dist, int(trial_rng.integers(2 ** 63 - 1)))
        pick = stored[int(table_rng.integers(n_stored))]
        start = None if pick is None else QTable(pick.copy(), hyper.alpha,
                                                 hyper.epsilon)
        table = train(inst, None, tau_max, hyper, trial_rng, meter, table=start)
        scores.append(evaluate_extrinsic(inst, None, table,
                                         hyper.eval_rollouts, trial_rng))
        cost += tau_max
        curve.append((cost, float(np.mean(scores))))
    return BaselineRun("TQL", None, curve)


def hyperband_schedule(eta=3, R=81, tau_min=1.0):
    """Deterministic (cohort size, per-design budget) plan for each round."""
    if eta < 2 or R < eta:
        raise ValueError("need eta >= 2 and R >= eta")
    rounds = int(math.floor(math.log(R) / math.log(eta) + 1e-9))
    plan, size = [], R
    for i in range(rounds):
        plan.append((size, tau_min * eta ** i))
        size = math.ceil(size / eta)
    return plan


def run_hyperband(dist, cand, eta=3, R=81, hyper=None, rng=None, meter=None,
                  bounds=None):
    """Racing over a fresh design sample with geometrically growing budgets.

    Round one draws R designs from a Latin hypercube; each later round keeps
    the top 1/eta fraction of the previous cohort and re-evaluates them at
    eta times the budget.  Evaluations use the cheapest replication count.
    """
    hyper = hyper or QLConfig()
    rng = rng if rng is not None else np.random.default_rng()
    m = cand.theta_bar.shape[1]
    if bounds is None:
        bounds = [(float(cand.theta_bar[:, d].min()),
                   float(cand.theta_bar[:, d].max())) for d in range(m)]
    dim = _point_dim(dist)
    q = cand.q_min
    plan = hyperband_schedule(eta, R, cand.tau_min)
    cohort = CandidateSet.latin_hypercube(
        bounds, plan[0][0], cand.tau_set, cand.q_set,
        seed=int(rng.integers(2 ** 31 - 1))).theta_bar
    cost, best_score, best_theta = 0.0, -np.inf, cohort[0]
    curve, recs = [], []
    for size, budget in plan:
        cohort = cohort[:size]
        steps = int(round(budget))
        scores = np.empty(len(cohort))
        for i, theta in enumerate(cohort):
            design = SubgoalDesign.from_vector(theta, dim)
            obs = observe(dist, design, steps, q, hyper, rng, meter)
            scores[i] = obs.score
            cost += q * steps
            if obs.score > best_score:
                best_score, best_theta = obs.score, theta
            curve.append((cost, best_score))
            recs.append((cost, best_theta))
        keep = np.argsort(-scores, kind="stable")[:math.ceil(len(cohort) / eta)]
        cohort = cohort[keep]
    best = SubgoalDesign.from_vector(cohort[0], dim)
    return BaselineRun("HB", best, curve, recs)


def expected_improvement(mu, sigma, incumbent):
    """Closed-form E[(f - incumbent)^+] under N(mu, sigma^2), elementwise."""
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    sigma = np.atleast_1d(np.asarray(sigma, dtype=float))
    diff = mu - incumbent
    out = np.maximum(diff, 0.0)        # deterministic limit at sigma = 0
    pos = sigma > 0
    z = diff[pos] / sigma[pos]
    pdf = _INV_SQRT_2PI * np.exp(-0.5 * z * z)
    out[pos] = sigma[pos] * pdf + diff[pos] * ndtr(z)
    return np.maximum(out, 0.0)


def confidence_bound(mu, sigma, kappa=2.0, optimistic=True):
    """Score-plus-bonus selection index; optimistic adds the bonus."""
    mu = np.asarray(mu, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    return mu + kappa * sigma if optimistic else mu - kappa * sigma


def _run_full_fidelity(method, pick, dist, cand, hyper, iterations, budget,
                       rng, meter, bounds, params, noise_variance, n_init):
    """Shared loop for the single-fidelity optimizers: init like the main
    loop, then repeatedly observe pick()'s design at (tau_max, q_max)."""
    if iterations is None and budget is None:
        raise ValueError("need iterations or a cost budget")
    hyper = hyper or QLConfig()
    rng = rng if rng is not None else np.random.default_rng()
    dim = _point_dim(dist)
    objective = make_rl_objective(dist, dim, hyper, meter)
    state = init_state(objective, cand, rng, bounds=bounds,
                       noise_variance=noise_variance, params=params,
                       n_init=n_init)
    T = len(cand.tau_set)
    rows = cand.rows_tau_max
    best_score, best_theta = -np.inf, None
    for theta, tau, _, score in state.history:
        if tau == cand.tau_max and score > best_score:
            best_score, best_theta = score, np.asarray(theta, dtype=float)
    curve = [(state.cumulative_cost, best_score)]
    recs = [(state.cumulative_cost, best_theta)]
    noise = observation_noise(state.params, cand.q_max)
    n = 0
    while True:
        if iterations is not None and n >= iterations:
            break
        if budget is not None and state.cumulative_cost >= budget:
            break
        sigma = np.sqrt(np.maximum(np.diag(state.cov)[rows], 0.0))
        i = int(pick(state.mu[rows], sigma, best_score))
        theta = cand.theta_bar[i]
        score, _ = objective(theta, cand.tau_max, cand.q_max, rng)
        row = i * T + (T - 1)
        state.mu, state.cov = rank_one_update(state.mu, state.cov, row,
                                              noise, score)
        state.history.append((theta, cand.tau_max, cand.q_max, score))
        state.cumulative_cost += cand.q_max * cand.tau_max
        if score > best_score:
            best_score, best_theta = score, theta
        curve.append((state.cumulative_cost, best_score))
        recs.append((state.cumulative_cost, best_theta))
        n += 1
    best = SubgoalDesign.from_vector(best_theta, dim)
    return BaselineRun(method, best, curve, recs)


def run_ei(dist, cand, hyper=None, iterations=None, budget=None, rng=None,
           meter=None, bounds=None, params=None, noise_variance=None,
           n_init=10):
    """Expected improvement over the designs, always observed at full length."""

    def pick(mu, sigma, best_score):
        return np.argmax(expected_improvement(mu, sigma, best_score))

    return _run_full_fidelity("EI", pick, dist, cand, hyper, iterations,
                              budget, rng, meter, bounds, params,
                              noise_variance, n_init)


def run_lcb(dist, cand, hyper=None, kappa=2.0, iterations=None, budget=None,
            rng=None, meter=None, bounds=None, params=None,
            noise_variance=None, n_init=10, optimistic=True):
    """Confidence-bound selection with bonus weight kappa at full length."""

    def pick(mu, sigma, best_score):
        return np.argmax(confidence_bound(mu, sigma, kappa, optimistic))

    return _run_full_fidelity("LCB", pick, dist, cand, hyper, iterations,
                              budget, rng, meter, bounds, params,
                              noise_variance, n_init)
