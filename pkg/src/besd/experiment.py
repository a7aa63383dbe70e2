"""Experiment orchestration: configs, seeded multi-method runs, artifacts.

A run produces, per (seed, method) cell, a JSON-lines log plus rows of a
summary CSV holding checkpointed test scores: at a fixed grid of cost levels
the cell's current recommendation is trained and scored on a fresh batch of
test environments (uncharged).  The same evaluation seeds are shared across
methods so per-checkpoint comparisons are paired.

Also here: the benefit-ratio measurement (shaped training vs scratch on the
same instances) and the plotting/export helpers, including a small native
SVG polyline renderer so curve figures need no external stack.
"""

import csv
import json
import math
import os
from dataclasses import dataclass, replace

import numpy as np

from .acquisition import CandidateSet
from .agent import InteractionMeter, QLConfig, observe, steps_to_goal, train, window_return
from .baselines import run_ei, run_hyperband, run_lcb, run_ql, run_tql
from .envs import DOMAINS, make_distribution, sample_instance, theta_bounds
from .loop import RunLog, make_rl_objective
from .loop import run as run_besd
from .shaping import SubgoalDesign

METHODS = ("BESD", "QL", "TQL", "HB", "EI", "LCB")

# per-domain budget/replication menus, subgoal counts, benefit windows
DOMAIN_DEFAULTS = {
    "GW10": dict(tau_set=(200, 600, 1000), q_set=(5, 20), k=2, window=100),
    "GW20": dict(tau_set=(4000, 7000, 10000), q_set=(20,), k=2, window=1000),
    "TR": dict(tau_set=(400, 1200, 2000), q_set=(5, 20), k=2, window=200),
    "MC": dict(tau_set=(4000, 7000, 10000), q_set=(10, 50), k=2, window=1000),
    "KEY2": dict(tau_set=(400, 700, 1000), q_set=(5, 20), k=2, window=500),
    "KEY3": dict(tau_set=(400, 700, 1000), q_set=(5, 20), k=3, window=500),
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    domain_id: str
    tau_set: tuple
    q_set: tuple
    k: int
    cost_budget: float
    seeds: tuple = (0,)
    methods: tuple = ("BESD", "QL", "EI", "LCB")
    w1: float = 0.2
    w2: float = 10.0
    lhs_size: int = 100
    init_per_tau: int = 10
    eval_batch: int = 50
    final_eval_batch: int = 200
    checkpoints: int = 8
    ratio_window: int = 0    # 0 means the domain default

    def __post_init__(self):
        object.__setattr__(self, "tau_set", tuple(self.tau_set))
        object.__setattr__(self, "q_set", tuple(self.q_set))
        object.__setattr__(self, "seeds", tuple(self.seeds))
        object.__setattr__(self, "methods", tuple(self.methods))
        if self.domain_id not in DOMAINS:
            raise ConfigError(f"unknown domain {self.domain_id!r}; "
                              f"expected one of {', '.join(DOMAINS)}")
        if not self.tau_set or any(t < 1 for t in self.tau_set):
            raise ConfigError("tauSet must be a non-empty list of budgets >= 1")
        if not self.q_set or any(q < 1 for q in self.q_set):
            raise ConfigError("qSet must be a non-empty list of counts >= 1")
        if self.k < 1:
            raise ConfigError("k must be at least 1 subgoal")
        if self.cost_budget <= 0:
            raise ConfigError("costBudget must be positive")
        if not self.seeds:
            raise ConfigError("seeds must be non-empty")
        bad = [m for m in self.methods if m not in METHODS]
        if bad:
            raise ConfigError(f"unknown methods {bad}; "
                              f"expected a subset of {', '.join(METHODS)}")
        if self.lhs_size < 2:
            raise ConfigError("lhsSize must be at least 2 candidate designs")
        if min(self.init_per_tau, self.eval_batch, self.final_eval_batch,
               self.checkpoints) < 1:
            raise ConfigError("initPerTau, evaluation batches and checkpoints "
                              "must be >= 1")
        if self.ratio_window < 0:
            raise ConfigError("ratioWindow must be >= 0 (0 = domain default)")

    @property
    def tau_max(self):
        return max(self.tau_set)

    @property
    def window(self):
        return self.ratio_window or DOMAIN_DEFAULTS[self.domain_id]["window"]

    @classmethod
    def default(cls, domain_id, cost_budget=2_000_000.0, **overrides):
        if domain_id not in DOMAIN_DEFAULTS:
            raise ConfigError(f"unknown domain {domain_id!r}; "
                              f"expected one of {', '.join(DOMAINS)}")
        base = DOMAIN_DEFAULTS[domain_id]
        kw = dict(domain_id=domain_id, tau_set=base["tau_set"],
                  q_set=base["q_set"], k=base["k"], cost_budget=cost_budget)
        kw.update(overrides)
        return cls(**kw)

    _KEYS = (("domainId", "domain_id"), ("tauSet", "tau_set"),
             ("qSet", "q_set"), ("k", "k"), ("costBudget", "cost_budget"),
             ("seeds", "seeds"), ("methods", "methods"), ("w1", "w1"),
             ("w2", "w2"), ("lhsSize", "lhs_size"),
             ("initPerTau", "init_per_tau"), ("evalBatch", "eval_batch"),
             ("finalEvalBatch", "final_eval_batch"),
             ("checkpoints", "checkpoints"), ("ratioWindow", "ratio_window"))

    def to_json(self):
        out = {}
        for key, attr in self._KEYS:
            val = getattr(self, attr)
            out[key] = list(val) if isinstance(val, tuple) else val
        return json.dumps(out, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text):
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as err:
            raise ConfigError(f"config is not valid JSON: {err}") from err
        known = {key: attr for key, attr in cls._KEYS}
        unknown = set(raw) - set(known)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        missing = [k for k in ("domainId", "tauSet", "qSet", "k", "costBudget")
                   if k not in raw]
        if missing:
            raise ConfigError(f"missing required config keys: {missing}")
        return cls(**{known[k]: v for k, v in raw.items()})


def _design_from_theta(theta, config, dim):
    return SubgoalDesign.from_vector(np.asarray(theta, dtype=float), dim,
                                     w1=config.w1, w2=config.w2)


def _run_cell(config, dist, cand, bounds, method, seed, out_dir):
    """One (seed, method) run to the cost budget; returns recommendation
    checkpoints as (cost, design-or-None) plus the written log path."""
    rng = np.random.default_rng([seed, METHODS.index(method)])
    meter = InteractionMeter()
    hyper = QLConfig()
    dim = len(theta_bounds(dist, 1))
    log_path = os.path.join(out_dir,
                            f"{config.domain_id}_{method}_seed{seed}.jsonl")
    budget, tau_max = config.cost_budget, int(round(config.tau_max))
    if method == "BESD":
        objective = make_rl_objective(dist, dim, hyper, meter,
                                      w1=config.w1, w2=config.w2)
        state = run_besd(objective, cand, budget, rng, bounds=bounds,
                         n_init=config.init_per_tau, log_path=log_path,
                         log_meta={"method": "BESD", "seed": seed,
                                   "domain": config.domain_id,
                                   "pointDim": dim})
        recs = [(r["cost"],
                 _design_from_theta(cand.theta_bar[r["thetaIndex"]], config, dim))
                for r in state.recommendations]
        final_cost = state.cumulative_cost
    else:
        if method == "QL":
            trials = max(1, int(budget // tau_max))
            out = run_ql(dist, tau_max, hyper, trials, rng, meter)
            recs = [(0.0, None)]
        elif method == "TQL":
            # storage gets up to half the budget, capped at ten tables
            n_stored = min(10, max(1, int(budget // (2 * tau_max))))
            trials = max(1, int((budget - n_stored * tau_max) // tau_max))
            out = run_tql(dist, tau_max, hyper, n_stored, trials, rng=rng,
                          meter=meter)
            recs = [(0.0, None)]
        elif method == "HB":
            out = _hyperband_to_budget(config, dist, cand, bounds, hyper,
                                       rng, meter)
            recs = [(c, _design_from_theta(t, config, dim))
                    for c, t in out.recommendations]
        elif method == "EI":
            out = run_ei(dist, cand, hyper, budget=budget, rng=rng,
                         meter=meter, bounds=bounds,
                         n_init=config.init_per_tau)
            recs = [(c, _design_from_theta(t, config, dim))
                    for c, t in out.recommendations]
        else:
            out = run_lcb(dist, cand, hyper, budget=budget, rng=rng,
                          meter=meter, bounds=bounds,
                          n_init=config.init_per_tau)
            recs = [(c, _design_from_theta(t, config, dim))
                    for c, t in out.recommendations]
        final_cost = out.cost_curve[-1][0]
        with RunLog(log_path) as log:
            log.write({"kind": "meta", "method": method, "seed": seed,
                       "domain": config.domain_id})
            for cost, score in out.cost_curve:
                log.write({"kind": "iter", "cost": cost, "score": score})
    if meter.count != final_cost:
        raise RuntimeError(f"cost ledger out of sync for {method}: "
                           f"meter {meter.count} vs log {final_cost}")
    return recs, log_path


def _hyperband_to_budget(config, dist, cand, bounds, hyper, rng, meter):
    """Repeat full brackets until the budget is spent, keeping a global best."""
    from .baselines import BaselineRun
    curve, recs = [], []
    best_score, best_theta, cost = -np.inf, None, 0.0
    while cost < config.cost_budget:
        out = run_hyperband(dist, cand, hyper=hyper, rng=rng, meter=meter,
                            bounds=bounds)
        for (c, s), (_, t) in zip(out.cost_curve, out.recommendations):
            if s > best_score:
                best_score, best_theta = s, t
            curve.append((cost + c, best_score))
            recs.append((cost + c, best_theta))
        cost = curve[-1][0]
    dim = len(theta_bounds(dist, 1))
    best = _design_from_theta(best_theta, config, dim)
    return BaselineRun("HB", best, curve, recs)


SUMMARY_FIELDS = ("domain", "method", "seed", "cost", "meanScore", "twoSE")


def run_experiment(config, out_dir, seed_override=None):
    """Execute every (seed, method) cell and write logs plus summary.csv.

    Checkpoint evaluation takes the cell's latest recommendation at each cost
    level and scores it on a batch of fresh test environments with full
    training length; those interactions are not charged.  Returns the paths
    of everything written.
    """
    os.makedirs(out_dir, exist_ok=True)
    if seed_override is not None:
        config = replace(config, seeds=(int(seed_override),))
    dist = make_distribution(config.domain_id)
    bounds = theta_bounds(dist, config.k)
    hyper = QLConfig()
    rows, log_paths = [], []
    cost_grid = [config.cost_budget * (j + 1) / config.checkpoints
                 for j in range(config.checkpoints)]
    for seed in config.seeds:
        cand = CandidateSet.latin_hypercube(bounds, config.lhs_size,
                                            config.tau_set, config.q_set,
                                            seed=seed)
        for method in config.methods:
            recs, log_path = _run_cell(config, dist, cand, bounds, method,
                                       seed, out_dir)
            log_paths.append(log_path)
            for j, level in enumerate(cost_grid):
                design = recs[0][1]
                for cost, d in recs:
                    if cost <= level:
                        design = d
                    else:
                        break
                batch = (config.final_eval_batch
                         if j == config.checkpoints - 1 else config.eval_batch)
                eval_rng = np.random.default_rng([1_000_003, seed, j])
                obs = observe(dist, design, int(config.tau_max), batch, hyper,
                              eval_rng)
                reps = np.asarray(obs.per_replication_scores)
                two_se = (2.0 * float(reps.std(ddof=1)) / math.sqrt(batch)
                          if batch > 1 else 0.0)
                rows.append((config.domain_id, method, seed, level,
                             float(reps.mean()), two_se))
    summary_path = os.path.join(out_dir, "summary.csv")
    with open(summary_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(SUMMARY_FIELDS)
        writer.writerows(rows)
    return {"summary": summary_path, "logs": log_paths}


def ratio_report(domain_id, design, trials=200, tau=None, window=None,
                 rng=None, hyper=None):
    """Benefit ratio of shaped training versus scratch on paired instances.

    Both agents train on the same fresh instance for tau steps; the greedy
    policies are then measured inside the domain's step window.  For every
    domain but TR the statistic is mean steps to goal (censored at the
    window), so smaller is better; TR compares discounted reward collected in
    the window, so larger is better.  design=None compares two scratch
    agents.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if domain_id not in DOMAIN_DEFAULTS:
        raise ConfigError(f"unknown domain {domain_id!r}")
    dist = make_distribution(domain_id)
    tau = int(tau if tau is not None else max(DOMAIN_DEFAULTS[domain_id]["tau_set"]))
    window = int(window if window is not None
                 else DOMAIN_DEFAULTS[domain_id]["window"])
    rng = rng if rng is not None else np.random.default_rng()
    hyper = hyper or QLConfig()
    reward_based = domain_id == "TR"
    shaped, scratch = [], []
    for _ in range(trials):
        inst = sample_instance(dist, int(rng.integers(2 ** 63 - 1)))
        shaped_table = train(inst, design, tau, hyper, rng)
        scratch_table = train(inst, None, tau, hyper, rng)
        if reward_based:
            shaped.append(window_return(inst, design, shaped_table, window, rng))
            scratch.append(window_return(inst, None, scratch_table, window, rng))
        else:
            shaped.append(steps_to_goal(inst, design, shaped_table, window, rng))
            scratch.append(steps_to_goal(inst, None, scratch_table, window, rng))
    num, den = float(np.mean(shaped)), float(np.mean(scratch))
    if den == 0.0:
        return 1.0 if num == 0.0 else math.inf
    return num / den


# ---- artifacts ---- #

def _parse_summary(path):
    rows = []
    with open(path, encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != list(SUMMARY_FIELDS):
            raise ValueError(f"{path}:1: expected header "
                             f"{','.join(SUMMARY_FIELDS)}")
        for i, row in enumerate(reader, start=2):
            try:
                rows.append((row[0], row[1], int(row[2]), float(row[3]),
                             float(row[4]), float(row[5])))
            except (ValueError, IndexError) as err:
                raise ValueError(f"{path}:{i}: bad summary row: {err}") from err
    return rows


PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _svg_curves(series, title, path):
    """series: {label: (costs, means, bands)} -> one SVG with 2SE ribbons."""
    W, H, ML, MR, MT, MB = 640, 440, 70, 20, 40, 50
    xs = [x for _, (c, _, _) in series.items() for x in c]
    ys = [m + b for _, (_, ms, bs) in series.items() for m, b in zip(ms, bs)]
    ys += [m - b for _, (_, ms, bs) in series.items() for m, b in zip(ms, bs)]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0
    pad = 0.05 * (y1 - y0)
    y0, y1 = y0 - pad, y1 + pad

    def X(v):
        return ML + (v - x0) / (x1 - x0) * (W - ML - MR)

    def Y(v):
        return H - MB - (v - y0) / (y1 - y0) * (H - MT - MB)

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
             f'viewBox="0 0 {W} {H}">',
             f'<rect width="{W}" height="{H}" fill="white"/>',
             f'<text x="{(ML + W - MR) / 2}" y="24" text-anchor="middle" '
             f'font-size="15">{title}</text>']
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        xv = x0 + frac * (x1 - x0)
        yv = y0 + frac * (y1 - y0)
        parts.append(f'<line x1="{X(xv):.1f}" y1="{H - MB}" x2="{X(xv):.1f}" '
                     f'y2="{H - MB + 5}" stroke="black"/>')
        parts.append(f'<text x="{X(xv):.1f}" y="{H - MB + 18}" '
                     f'text-anchor="middle" font-size="11">{xv:.3g}</text>')
        parts.append(f'<line x1="{ML - 5}" y1="{Y(yv):.1f}" x2="{ML}" '
                     f'y2="{Y(yv):.1f}" stroke="black"/>')
        parts.append(f'<text x="{ML - 8}" y="{Y(yv) + 4:.1f}" '
                     f'text-anchor="end" font-size="11">{yv:.3g}</text>')
    parts.append(f'<line x1="{ML}" y1="{H - MB}" x2="{W - MR}" y2="{H - MB}" '
                 f'stroke="black"/>')
    parts.append(f'<line x1="{ML}" y1="{MT}" x2="{ML}" y2="{H - MB}" '
                 f'stroke="black"/>')
    parts.append(f'<text x="{(ML + W - MR) / 2}" y="{H - 12}" '
                 f'text-anchor="middle" font-size="13">training cost</text>')
    parts.append(f'<text x="18" y="{(MT + H - MB) / 2}" text-anchor="middle" '
                 f'font-size="13" transform="rotate(-90 18 '
                 f'{(MT + H - MB) / 2})">mean test score</text>')
    for idx, (label, (costs, means, bands)) in enumerate(sorted(series.items())):
        color = PALETTE[idx % len(PALETTE)]
        if any(b > 0 for b in bands):
            upper = [f"{X(c):.1f},{Y(m + b):.1f}"
                     for c, m, b in zip(costs, means, bands)]
            lower = [f"{X(c):.1f},{Y(m - b):.1f}"
                     for c, m, b in zip(reversed(costs), reversed(means),
                                        reversed(bands))]
            parts.append(f'<polygon points="{" ".join(upper + lower)}" '
                         f'fill="{color}" opacity="0.15"/>')
        pts = " ".join(f"{X(c):.1f},{Y(m):.1f}" for c, m in zip(costs, means))
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" '
                     f'stroke-width="2"/>')
        lx, ly = W - MR - 110, MT + 16 + 16 * idx
        parts.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 24}" '
                     f'y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
        parts.append(f'<text x="{lx + 30}" y="{ly}" font-size="12">{label}</text>')
    parts.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(parts) + "\n")


def _recommendation_path_rows(log_path):
    """Per-iteration subgoal coordinates from a run log with grid metadata."""
    rows = []
    theta_bar, dim = None, None
    with open(log_path, encoding="utf-8") as fh:
        for i, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as err:
                raise ValueError(f"{log_path}:{i}: corrupt record: {err}") from err
            if rec.get("kind") == "meta" and "thetaBar" in rec:
                theta_bar = np.asarray(rec["thetaBar"], dtype=float)
                dim = int(rec.get("pointDim", 2))
            elif rec.get("kind") == "iter" and "thetaRec" in rec:
                if theta_bar is None:
                    raise ValueError(f"{log_path}:{i}: iter record before "
                                     f"grid metadata")
                theta = theta_bar[int(rec["thetaRec"])]
                k = theta.size // dim
                for j in range(k):
                    coords = theta[j * dim:(j + 1) * dim]
                    rows.append([rec["n"], rec["cost"], j + 1]
                                + [float(c) for c in coords])
    return rows


def emit_plots(paths, out_dir):
    """Render cost-vs-score SVGs from summary CSVs and recommendation-path
    CSVs from run logs.  Returns written paths, or None when given nothing."""
    if not paths:
        return None
    os.makedirs(out_dir, exist_ok=True)
    written = []
    for path in paths:
        if path.endswith(".csv"):
            rows = _parse_summary(path)
            domains = sorted({r[0] for r in rows})
            for domain in domains:
                series = {}
                methods = sorted({r[1] for r in rows if r[0] == domain})
                for method in methods:
                    sub = [r for r in rows if r[0] == domain and r[1] == method]
                    costs = sorted({r[3] for r in sub})
                    means, bands = [], []
                    for c in costs:
                        cell = [r for r in sub if r[3] == c]
                        vals = [r[4] for r in cell]
                        means.append(float(np.mean(vals)))
                        if len(vals) > 1:
                            bands.append(2.0 * float(np.std(vals, ddof=1))
                                         / math.sqrt(len(vals)))
                        else:
                            bands.append(0.0)   # single run: no band
                    series[method] = (costs, means, bands)
                svg = os.path.join(out_dir, f"{domain}_curves.svg")
                _svg_curves(series, f"{domain}: score vs training cost", svg)
                written.append(svg)
        elif path.endswith(".jsonl"):
            rows = _recommendation_path_rows(path)
            if not rows:
                continue
            stem = os.path.splitext(os.path.basename(path))[0]
            out = os.path.join(out_dir, f"{stem}_path.csv")
            dim = len(rows[0]) - 3
            header = ["iteration", "cost", "subgoal"] + \
                [f"coord{d + 1}" for d in range(dim)]
            with open(out, "w", newline="", encoding="utf-8") as fh:
                writer = csv.writer(fh)
                writer.writerow(header)
                writer.writerows(rows)
            written.append(out)
        else:
            raise ValueError(f"{path}: expected a .csv summary or .jsonl log")
    return written
