"""Cost-aware sequential optimization of subgoal designs.

The loop keeps a joint Gaussian belief over the candidate grid (every design
at every budget), picks the decision maximizing gain-in-score per unit of
simulation effort, pays q * tau interactions to observe it, folds the result
in with a rank-one update, and records the running recommendation: the design
whose posterior mean at the largest budget is highest.

Observations go through a small objective protocol,

    objective(theta, tau, q, rng) -> (mean_score, replication_scores),

so the same loop drives reinforcement-learning runs and synthetic test
functions.  Every run can stream a JSON-lines log carrying enough state to
re-derive each decision; `replay` audits such a log against fresh math.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .acquisition import CandidateSet, select_over_grid
from .agent import QLConfig, observe
from .gp import (KernelParams, condition, estimate_noise, fit_map,
                 observation_noise, rank_one_update)
from .shaping import SubgoalDesign

LOG_VERSION = 1


def _py(x):
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    return x


class RunLog:
    """Append-only JSON-lines writer; one record per line, flushed eagerly."""

    def __init__(self, path):
        self.path = path
        self._fh = open(path, "w", encoding="utf-8")

    def write(self, record):
        self._fh.write(json.dumps({k: _py(v) for k, v in record.items()}))
        self._fh.write("\n")
        self._fh.flush()

    def close(self):
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


@dataclass
class RunState:
    cand: CandidateSet
    params: KernelParams
    grid: np.ndarray
    mu: np.ndarray
    cov: np.ndarray
    rng: np.random.Generator
    cost_overhead: float = 0.0
    history: list = field(default_factory=list)
    cumulative_cost: float = 0.0
    iteration: int = 0
    recommendations: list = field(default_factory=list)

    @property
    def theta_rec_index(self):
        return int(np.argmax(self.mu[self.cand.rows_tau_max]))

    @property
    def mu_star(self):
        return float(self.mu[self.cand.rows_tau_max].max())


def recommend(state):
    """Current best guess: argmax of the posterior mean at the top budget."""
    i = state.theta_rec_index
    return i, state.cand.theta_bar[i].copy(), state.mu_star


def _record_recommendation(state, log, kind, extra=None):
    rec = {"kind": kind, "cost": state.cumulative_cost,
           "thetaRec": state.theta_rec_index, "muStar": state.mu_star}
    if extra:
        rec.update(extra)
    state.recommendations.append({"cost": state.cumulative_cost,
                                  "thetaIndex": state.theta_rec_index,
                                  "muStar": state.mu_star})
    if log is not None:
        log.write(rec)


def init_state(objective, cand, rng, bounds=None, noise_variance=None,
               params=None, n_init=10, cost_overhead=0.0, log=None,
               log_meta=None):
    """Initial design, noise/hyperparameter estimation, grid conditioning.

    n_init designs drawn without replacement from the candidate grid are each
    observed at every budget with the smallest replication count; keeping the
    initial data on the grid means every later recommendation, here or in a
    baseline fed the same history, ranges over the same finite design set.
    The replication spread of those observations feeds the noise estimate
    unless one is supplied; the kernel is then MAP-fit on the initial history
    unless explicit params are supplied.
    """
    m = cand.theta_bar.shape[1]
    if bounds is None:
        bounds = [(float(cand.theta_bar[:, d].min()),
                   float(cand.theta_bar[:, d].max())) for d in range(m)]
    n_init = min(max(n_init, 2), cand.n_designs)
    picks = np.sort(rng.choice(cand.n_designs, size=n_init, replace=False))
    init_designs = cand.theta_bar[picks]
    history, groups, cost = [], [], 0.0
    init_records = []
    for theta in init_designs:
        for tau in cand.tau_set:
            score, reps = objective(theta, tau, cand.q_min, rng)
            history.append((theta, tau, cand.q_min, score))
            groups.append(reps)
            cost += cand.q_min * tau
            init_records.append({"kind": "init", "theta": theta, "tau": tau,
                                 "q": cand.q_min, "score": score, "reps": reps})
    if noise_variance is None:
        noise_variance = estimate_noise(groups)
    if params is None:
        params = fit_map(history, bounds, noise_variance,
                         tau_scale=cand.tau_max,
                         seed=int(rng.integers(2 ** 31 - 1)))
    grid = cand.grid_points()
    mu, cov = condition(params, history).mean_cov(grid)
    state = RunState(cand=cand, params=params, grid=grid, mu=mu, cov=cov,
                     rng=rng, cost_overhead=cost_overhead, history=history,
                     cumulative_cost=cost)
    if log is not None:
        meta = {"kind": "meta", "version": LOG_VERSION,
                "thetaBar": cand.theta_bar, "tauSet": cand.tau_set,
                "qSet": cand.q_set, "costOverhead": cost_overhead,
                "params": json.loads(params.to_json())}
        if log_meta:
            meta.update({k: v for k, v in log_meta.items() if k not in meta})
        log.write(meta)
        for rec in init_records:
            log.write(rec)
    _record_recommendation(state, log, "post-init")
    return state


def iterate(state, objective, log=None):
    """One acquisition step: select, observe, update, re-recommend."""
    sel = select_over_grid(state.mu, state.cov, state.cand, state.params,
                           state.cost_overhead)
    score, reps = objective(sel.theta, sel.tau, sel.q, state.rng)
    T = len(state.cand.tau_set)
    row = sel.theta_index * T + state.cand.tau_set.index(sel.tau)
    noise = observation_noise(state.params, sel.q)
    state.mu, state.cov = rank_one_update(state.mu, state.cov, row, noise, score)
    state.history.append((sel.theta, sel.tau, sel.q, score))
    state.cumulative_cost += sel.q * sel.tau
    state.iteration += 1
    _record_recommendation(state, log, "iter", extra={
        "n": state.iteration, "thetaIndex": sel.theta_index, "tau": sel.tau,
        "q": sel.q, "score": score, "reps": reps, "gis": sel.gis,
        "gisPerEffort": sel.gis_per_effort})
    return sel


def run(objective, cand, budget, rng, bounds=None, noise_variance=None,
        params=None, n_init=10, cost_overhead=0.0, log_path=None,
        max_iterations=None, log_meta=None):
    """Full optimization run: initialize, then iterate while under budget.

    The loop starts a step whenever cumulative cost is below `budget`, so the
    final observation may overshoot it.  Returns the terminal RunState.
    """
    log = RunLog(log_path) if log_path else None
    try:
        state = init_state(objective, cand, rng, bounds=bounds,
                           noise_variance=noise_variance, params=params,
                           n_init=n_init, cost_overhead=cost_overhead, log=log,
                           log_meta=log_meta)
        while state.cumulative_cost < budget:
            if max_iterations is not None and state.iteration >= max_iterations:
                break
            iterate(state, objective, log=log)
    finally:
        if log is not None:
            log.close()
    return state


# ---- objectives ---- #

def make_rl_objective(dist, point_dim, hyper=None, meter=None,
                      w1=0.2, w2=10.0, capture_radius=0.05):
    """Objective evaluating a subgoal design by training and scoring agents."""
    hyper = hyper or QLConfig()

    def objective(theta, tau, q, rng):
        design = SubgoalDesign.from_vector(np.asarray(theta, dtype=float),
                                           point_dim, w1=w1, w2=w2,
                                           capture_radius=capture_radius)
        obs = observe(dist, design, int(round(tau)), int(q), hyper, rng, meter)
        return obs.score, list(obs.per_replication_scores)

    return objective


def make_synthetic_objective(fn, noise_variance):
    """Objective drawing replication scores fn(theta, tau) + N(0, noise)."""

    def objective(theta, tau, q, rng):
        mean = float(fn(np.asarray(theta, dtype=float), float(tau)))
        reps = list(mean + rng.normal(0.0, np.sqrt(noise_variance), size=int(q)))
        return float(np.mean(reps)), reps

    return objective


# ---- log auditing ---- #

class ReplayError(ValueError):
    pass


def _require(cond, n, msg):
    if not cond:
        raise ReplayError(f"record {n}: {msg}")


def replay(log_path, atol=1e-8):
    """Re-derive every decision in a run log and audit the final belief.

    Rebuilds the grid belief from the logged observations, checks that each
    logged decision is the acquisition argmax of the rebuilt belief and that
    the logged recommendations match, then cross-checks the final mean and
    covariance against one-shot batch conditioning on the whole history.
    Raises ReplayError on any mismatch; returns a summary dict.
    """
    with open(log_path, encoding="utf-8") as fh:
        records = [json.loads(line) for line in fh if line.strip()]
    if not records or records[0].get("kind") != "meta":
        raise ReplayError("log must start with a meta record")
    meta = records[0]
    cand = CandidateSet(np.asarray(meta["thetaBar"], dtype=float),
                        tuple(meta["tauSet"]), tuple(meta["qSet"]))
    params = KernelParams.from_json(json.dumps(meta["params"]))
    overhead = float(meta.get("costOverhead", 0.0))
    grid = cand.grid_points()
    T = len(cand.tau_set)

    history, cost = [], 0.0
    mu = cov = None
    iterations = 0
    for n, rec in enumerate(records[1:], start=1):
        kind = rec.get("kind")
        if kind == "init":
            _require(mu is None, n, "init record after conditioning started")
            history.append((np.asarray(rec["theta"], dtype=float),
                            float(rec["tau"]), int(rec["q"]),
                            float(rec["score"])))
            cost += rec["q"] * rec["tau"]
        elif kind == "post-init":
            mu, cov = condition(params, history).mean_cov(grid)
            _require(abs(cost - rec["cost"]) < 1e-9, n, "cost mismatch")
            _require(int(np.argmax(mu[cand.rows_tau_max])) == rec["thetaRec"],
                     n, "post-init recommendation mismatch")
            _require(abs(float(mu[cand.rows_tau_max].max()) - rec["muStar"])
                     <= atol, n, "post-init muStar mismatch")
        elif kind == "iter":
            _require(mu is not None, n, "iter record before post-init")
            sel = select_over_grid(mu, cov, cand, params, overhead)
            _require(sel.theta_index == rec["thetaIndex"], n,
                     f"selected design {sel.theta_index} != logged {rec['thetaIndex']}")
            _require(sel.tau == rec["tau"] and sel.q == rec["q"], n,
                     "selected budget/replications differ from log")
            row = sel.theta_index * T + cand.tau_set.index(sel.tau)
            mu, cov = rank_one_update(mu, cov, row,
                                      observation_noise(params, sel.q),
                                      float(rec["score"]))
            history.append((sel.theta.copy(), sel.tau, sel.q,
                            float(rec["score"])))
            cost += sel.q * sel.tau
            iterations += 1
            _require(abs(cost - rec["cost"]) < 1e-9, n, "cost mismatch")
            _require(int(np.argmax(mu[cand.rows_tau_max])) == rec["thetaRec"],
                     n, "recommendation mismatch")
            _require(abs(float(mu[cand.rows_tau_max].max()) - rec["muStar"])
                     <= atol, n, "muStar mismatch")
        else:
            raise ReplayError(f"record {n}: unknown kind {kind!r}")
    _require(mu is not None, len(records), "log has no post-init record")
    batch_mu, batch_cov = condition(params, history).mean_cov(grid)
    mean_gap = float(np.max(np.abs(batch_mu - mu)))
    cov_gap = float(np.max(np.abs(batch_cov - cov)))
    if mean_gap > atol or cov_gap > atol:
        raise ReplayError(f"final belief drifts from batch conditioning: "
                          f"mean gap {mean_gap:.3g}, cov gap {cov_gap:.3g}")
    return {"iterations": iterations, "cost": cost,
            "thetaRec": int(np.argmax(mu[cand.rows_tau_max])),
            "muStar": float(mu[cand.rows_tau_max].max()),
            "meanGap": mean_gap, "covGap": cov_gap}
