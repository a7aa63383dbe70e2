"""Tabular Q-learning on the augmented MDP and the observation generator.

An observation of a candidate design is the whole pipeline run end to end:
sample a fresh MDP from the distribution, train an epsilon-greedy Q-learner
for tau interactions on the shaped (augmented) reward, then score the greedy
policy by its discounted extrinsic-only return from the start state.  The
mean over q independent replications is the noisy objective value; its cost
is q * tau charged interactions.  Evaluation rollouts are free.
"""

import csv
import json
from dataclasses import dataclass

import numpy as np

from .envs import sample_instance
from .shaping import AugmentedMdp


@dataclass
class QLConfig:
    alpha: float = 0.1
    epsilon: float = 0.1
    eval_rollouts: int = 5


@dataclass
class QTable:
    values: np.ndarray          # (n augmented states, n actions), zero-initialized
    alpha: float
    epsilon: float

    def save(self, path):
        np.savez(path, values=self.values,
                 alpha=np.float64(self.alpha), epsilon=np.float64(self.epsilon))

    @classmethod
    def load(cls, path):
        with np.load(path) as data:
            return cls(data["values"], float(data["alpha"]), float(data["epsilon"]))


@dataclass
class Observation:
    design: object              # SubgoalDesign or None for unshaped runs
    tau: int
    q: int
    score: float
    per_replication_scores: list


class InteractionMeter:
    """Counter of charged environment interactions (training steps only)."""

    def __init__(self):
        self.count = 0

    def add(self, n):
        self.count += n


def _greedy(row, n_actions):
    best, arg = row[0], 0
    for j in range(1, n_actions):
        if row[j] > best:
            best, arg = row[j], j
    return arg


def train(inst, design, tau, hyper=None, rng=None, meter=None, table=None):
    """Q-learning for exactly tau interactions; returns the final table.

    Episodes reset at terminal states and at the instance horizon cap.  The
    update target uses the shaped reward; terminal transitions bootstrap
    nothing.  Greedy ties break toward the lowest action index.  An existing
    table may be passed to continue training (used by the transfer baseline).
    """
    if tau < 1:
        raise ValueError("tau must be a positive integer")
    hyper = hyper or QLConfig()
    rng = rng if rng is not None else np.random.default_rng()
    env = AugmentedMdp(inst, design)
    n_actions = env.n_actions
    if table is None:
        values = [[0.0] * n_actions for _ in range(env.n_states)]
    else:
        if table.values.shape != (env.n_states, n_actions):
            raise ValueError("table shape does not match the augmented MDP")
        values = table.values.tolist()
    alpha, eps = hyper.alpha, hyper.epsilon
    gamma, cap = env.gamma, env.horizon_cap
    rand, randint = rng.random, rng.integers
    step = env.step
    aug = env.initial_state()
    si = env.state_index(aug)
    steps_in_episode = 0
    for _ in range(tau):
        row = values[si]
        if rand() < eps:
            a = int(randint(n_actions))
        else:
            a = _greedy(row, n_actions)
        aug2, r_total, _, terminal = step(aug, a, rng)
        if terminal:
            target = r_total
        else:
            si2 = env.state_index(aug2)
            target = r_total + gamma * max(values[si2])
        row[a] += alpha * (target - row[a])
        steps_in_episode += 1
        if terminal or steps_in_episode >= cap:
            aug = env.initial_state()
            si = env.state_index(aug)
            steps_in_episode = 0
        else:
            aug = aug2
            si = si2
    if meter is not None:
        meter.add(tau)
    return QTable(np.asarray(values), alpha, eps)


def evaluate_extrinsic(inst, design, table, rollouts=5, rng=None):
    """Mean discounted extrinsic return of the greedy policy from the start.

    Shaping never enters the score; the design only determines the progress
    dynamics the table was trained under.  Rollouts are capped at the horizon
    and are not charged as interactions.
    """
    if rollouts < 1:
        raise ValueError("need at least one rollout")
    rng = rng if rng is not None else np.random.default_rng()
    env = AugmentedMdp(inst, design)
    values = table.values
    gamma, cap = env.gamma, env.horizon_cap
    total = 0.0
    for _ in range(rollouts):
        aug = env.initial_state()
        ret, disc = 0.0, 1.0
        for _ in range(cap):
            a = int(np.argmax(values[env.state_index(aug)]))
            aug, _, r_ext, terminal = env.step(aug, a, rng)
            ret += disc * r_ext
            disc *= gamma
            if terminal:
                break
        total += ret
    return total / rollouts


def steps_to_goal(inst, design, table, window, rng=None):
    """Greedy steps until the first terminal entry, censored at the window."""
    rng = rng if rng is not None else np.random.default_rng()
    env = AugmentedMdp(inst, design)
    values = table.values
    aug = env.initial_state()
    for t in range(window):
        a = int(np.argmax(values[env.state_index(aug)]))
        aug, _, _, terminal = env.step(aug, a, rng)
        if terminal:
            return t + 1
    return window


def window_return(inst, design, table, window, rng=None):
    """Discounted extrinsic return of the greedy policy within a step window."""
    rng = rng if rng is not None else np.random.default_rng()
    env = AugmentedMdp(inst, design)
    values = table.values
    gamma = env.gamma
    aug = env.initial_state()
    ret, disc = 0.0, 1.0
    for _ in range(window):
        a = int(np.argmax(values[env.state_index(aug)]))
        aug, _, r_ext, terminal = env.step(aug, a, rng)
        ret += disc * r_ext
        disc *= gamma
        if terminal:
            break
    return ret


def observe(dist, design, tau, q, hyper=None, rng=None, meter=None):
    """Mean score of q independent replications, each on a fresh MDP draw.

    Consumes exactly q * tau charged interactions.  Replications derive their
    instance seeds and simulation randomness from the passed rng, so equal
    rng states give equal Observations.
    """
    if q < 1:
        raise ValueError("q must be a positive integer")
    hyper = hyper or QLConfig()
    rng = rng if rng is not None else np.random.default_rng()
    scores = []
    for _ in range(q):
        inst = sample_instance(dist, int(rng.integers(2 ** 63 - 1)))
        table = train(inst, design, tau, hyper, rng, meter)
        scores.append(evaluate_extrinsic(inst, design, table,
                                         hyper.eval_rollouts, rng))
    return Observation(design, tau, q, float(np.mean(scores)), scores)


class ObservationLog:
    """Append-only CSV of observations with their cumulative cost."""

    FIELDS = ("design", "tau", "q", "score", "replication_scores", "cumulative_cost")

    def __init__(self, path):
        self.path = path
        with open(path, "w", newline="") as fh:
            csv.writer(fh).writerow(self.FIELDS)

    def append(self, obs, cumulative_cost):
        design_json = obs.design.to_json() if obs.design is not None else ""
        with open(self.path, "a", newline="") as fh:
            csv.writer(fh).writerow(
                [design_json, obs.tau, obs.q, repr(obs.score),
                 json.dumps(obs.per_replication_scores), cumulative_cost])
