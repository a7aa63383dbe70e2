"""Gain-in-score acquisition over a discrete decision grid.

A decision is (design index, tau, q).  Its gain in score is the expected
one-step increase of max_theta posterior-mean-at-tau-max caused by observing
that decision: with a_i the current means at (theta_i, tau_max) and b_i the
one-step mean-update coefficients sigma-tilde, the gain is

    h(a, b) = E[max_i (a_i + b_i Z)] - max_i a_i,   Z ~ N(0,1),

computed exactly by the sort/prune/upper-envelope algorithm for piecewise-
linear maxima of lines.  The selection rule divides the gain by the
decision's simulation effort q * tau and takes the argmax over the grid.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats
from scipy.special import ndtr

from .gp import observation_noise

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class CandidateSet:
    """Discretized decision space: L designs x budgets T x replication counts Q."""

    theta_bar: np.ndarray       # (L, m) design vectors
    tau_set: tuple
    q_set: tuple

    def __post_init__(self):
        theta = np.atleast_2d(np.asarray(self.theta_bar, dtype=float))
        object.__setattr__(self, "theta_bar", theta)
        object.__setattr__(self, "tau_set", tuple(sorted(float(t) for t in self.tau_set)))
        object.__setattr__(self, "q_set", tuple(sorted(int(q) for q in self.q_set)))
        if len(theta) < 2:
            raise ValueError("need at least two candidate designs")
        if not self.tau_set or not self.q_set:
            raise ValueError("tau and q sets must be non-empty")
        if self.tau_set[0] <= 0 or self.q_set[0] <= 0:
            raise ValueError("budgets and replication counts must be positive")

    @property
    def n_designs(self):
        return len(self.theta_bar)

    @property
    def tau_max(self):
        return self.tau_set[-1]

    @property
    def tau_min(self):
        return self.tau_set[0]

    @property
    def q_max(self):
        return self.q_set[-1]

    @property
    def q_min(self):
        return self.q_set[0]

    def grid_points(self):
        """All (theta_i, tau_j) rows, design-major: row = i * |T| + j."""
        L, T = self.n_designs, len(self.tau_set)
        m = self.theta_bar.shape[1]
        pts = np.empty((L * T, m + 1))
        for i in range(L):
            for j, tau in enumerate(self.tau_set):
                pts[i * T + j, :m] = self.theta_bar[i]
                pts[i * T + j, m] = tau
        return pts

    @property
    def rows_tau_max(self):
        T = len(self.tau_set)
        return np.arange(self.n_designs) * T + (T - 1)

    @classmethod
    def latin_hypercube(cls, bounds, size, tau_set, q_set, seed):
        """Designs from a seeded Latin-hypercube sample of the theta box."""
        lo = np.array([b[0] for b in bounds])
        hi = np.array([b[1] for b in bounds])
        sampler = stats.qmc.LatinHypercube(d=len(bounds), seed=seed)
        theta = lo + sampler.random(size) * (hi - lo)
        return cls(theta, tau_set, q_set)


@dataclass(frozen=True)
class AcquisitionResult:
    theta_index: int
    theta: np.ndarray
    tau: float
    q: int
    gis: float
    gis_per_effort: float
    mu_star: float


def f_kg(z):
    """pdf(z) + z * cdf(z): expected positive part of a unit-slope line."""
    z = np.asarray(z, dtype=float)
    return _INV_SQRT_2PI * np.exp(-0.5 * z * z) + z * ndtr(z)


def h_function(a, b):
    """Exact E[max_i a_i + b_i Z] - max_i a_i for scalar standard-normal Z."""
    a = np.asarray(a, dtype=float).reshape(-1)
    b = np.asarray(b, dtype=float).reshape(-1)
    if a.size != b.size or a.size == 0:
        raise ValueError("a and b must be equal-length non-empty vectors")
    order = np.lexsort((a, b))
    a, b = a[order], b[order]
    # among equal slopes only the largest intercept can ever win
    keep = np.ones(a.size, dtype=bool)
    keep[:-1] = b[1:] != b[:-1]
    a, b = a[keep], b[keep]
    if a.size == 1:
        return 0.0
    idx = [0]
    cross = [-math.inf]
    for i in range(1, a.size):
        z = math.inf
        while idx:
            j = idx[-1]
            z = (a[j] - a[i]) / (b[i] - b[j])
            if z <= cross[-1]:
                idx.pop()
                cross.pop()
            else:
                break
        if idx:
            idx.append(i)
            cross.append(z)
        else:
            idx = [i]
            cross = [-math.inf]
    if len(idx) == 1:
        return 0.0
    bs = b[idx]
    zs = np.minimum(np.abs(np.array(cross[1:])), 40.0)
    h = float(np.sum((bs[1:] - bs[:-1]) * f_kg(-zs)))
    return max(h, 0.0)


def sigma_tilde(post, params, query, candidate, q):
    """One-step posterior-mean update coefficient at `query` for observing
    `candidate` with q replications."""
    if q < 1:
        raise ValueError("q must be >= 1")
    pts = np.vstack([np.asarray(query, dtype=float),
                     np.asarray(candidate, dtype=float)])
    _, cov = post.mean_cov(pts)
    denom = observation_noise(params, q) + cov[1, 1]
    if denom <= 0:
        raise np.linalg.LinAlgError(f"non-positive predictive variance {denom:.3g}")
    return float(cov[0, 1] / math.sqrt(denom))


def _decision_point(cand, theta_index, tau):
    m = cand.theta_bar.shape[1]
    pt = np.empty(m + 1)
    pt[:m] = cand.theta_bar[theta_index]
    pt[m] = tau
    return pt


def gain_in_score(post, params, cand, decision):
    """h(a, b) for one decision (theta index or vector, tau, q)."""
    theta, tau, q = decision
    theta = cand.theta_bar[theta] if np.isscalar(theta) else np.asarray(theta, float)
    m = cand.theta_bar.shape[1]
    pts = np.empty((cand.n_designs + 1, m + 1))
    pts[:-1, :m] = cand.theta_bar
    pts[:-1, m] = cand.tau_max
    pts[-1, :m] = theta
    pts[-1, m] = tau
    mu, cov = post.mean_cov(pts)
    denom = observation_noise(params, q) + cov[-1, -1]
    if denom <= 0:
        raise np.linalg.LinAlgError(f"non-positive predictive variance {denom:.3g}")
    b = cov[:-1, -1] / math.sqrt(denom)
    return h_function(mu[:-1], b)


GIS_CLAMP = 1e-12


def select_over_grid(mu, cov, cand, params, cost_overhead=0.0):
    """Exhaustive argmax of GiS/(q*tau + overhead) over the decision grid.

    mu/cov describe the current belief over cand.grid_points() (design-major
    ordering).  Ties break toward cheaper decisions, then the earliest
    decision in (design, tau, q) enumeration order.
    """
    T = len(cand.tau_set)
    rows_max = cand.rows_tau_max
    a = mu[rows_max]
    mu_star = float(a.max())
    noises = [observation_noise(params, q) for q in cand.q_set]
    best = None
    best_key = None
    for i in range(cand.n_designs):
        for j, tau in enumerate(cand.tau_set):
            row = i * T + j
            var = max(cov[row, row], 0.0)
            cross = cov[rows_max, row]
            for q, noise in zip(cand.q_set, noises):
                b = cross / math.sqrt(noise + var)
                gis = h_function(a, b)
                if gis < GIS_CLAMP:
                    gis = 0.0
                cost = q * tau + cost_overhead
                score = gis / cost
                key = (score, -cost)
                if best_key is None or key > best_key:
                    best_key = key
                    best = AcquisitionResult(i, cand.theta_bar[i].copy(), tau, q,
                                             gis, score, mu_star)
    return best


def select_next(post, params, cand, cost_overhead=0.0):
    """Acquisition argmax straight from a Posterior (builds the grid belief)."""
    mu, cov = post.mean_cov(cand.grid_points())
    return select_over_grid(mu, cov, cand, params, cost_overhead)


def acquisition_surface(mu, cov, cand, params, cost_overhead=0.0):
    """GiS and GiS-per-effort for every decision; rows follow enumeration order."""
    T = len(cand.tau_set)
    rows_max = cand.rows_tau_max
    a = mu[rows_max]
    out = []
    for i in range(cand.n_designs):
        for j, tau in enumerate(cand.tau_set):
            row = i * T + j
            var = max(cov[row, row], 0.0)
            cross = cov[rows_max, row]
            for q in cand.q_set:
                b = cross / math.sqrt(observation_noise(params, q) + var)
                gis = h_function(a, b)
                if gis < GIS_CLAMP:
                    gis = 0.0
                out.append((i, tau, q, gis, gis / (q * tau + cost_overhead)))
    return out
