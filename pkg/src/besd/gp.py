"""Gaussian-process surrogate over (design, training-budget) points.

A point is a flat vector [theta_1 .. theta_m, tau].  The kernel is a product:
Matern 5/2 with per-dimension length scales over the design coordinates,
times a linear-polynomial kernel over tau,

    k_tau(t, t') = phi(t)^T Sigma_phi phi(t') + cBias,   phi(t) = (1, t/tauScale),

with Sigma_phi = L L^T parameterized by the Cholesky entries (c11, c21, c22)
so the tau factor stays PSD by construction; cBias >= 0 is the fourth tau
parameter.  Observation noise is heteroscedastic, lambda/q per point, and a
jitter of 1e-8 * signalVariance is added to every Gram diagonal.
"""

import json
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import linalg, optimize

JITTER = 1e-8
_SQRT5 = math.sqrt(5.0)


@dataclass(frozen=True)
class KernelParams:
    signal_variance: float
    length_scales: tuple        # m positive reals
    tau_params: tuple           # (c11, c21, c22, cBias)
    prior_mean: float = 0.0
    noise_variance: float = 1e-8
    tau_scale: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "length_scales",
                           tuple(float(v) for v in self.length_scales))
        object.__setattr__(self, "tau_params",
                           tuple(float(v) for v in self.tau_params))
        if self.signal_variance <= 0 or self.noise_variance <= 0:
            raise ValueError("signal and noise variances must be positive")
        if any(l <= 0 for l in self.length_scales):
            raise ValueError("length scales must be positive")
        if len(self.tau_params) != 4:
            raise ValueError("tau kernel takes exactly four parameters")
        if self.tau_params[0] < 0 or self.tau_params[2] < 0 or self.tau_params[3] < 0:
            raise ValueError("tau Cholesky diagonal and bias must be non-negative")
        if self.tau_scale <= 0:
            raise ValueError("tau scale must be positive")

    @property
    def m(self):
        return len(self.length_scales)

    def to_json(self):
        return json.dumps({
            "signalVariance": self.signal_variance,
            "lengthScales": list(self.length_scales),
            "tauParams": list(self.tau_params),
            "priorMean": self.prior_mean,
            "noiseVariance": self.noise_variance,
            "tauScale": self.tau_scale,
        })

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        return cls(d["signalVariance"], tuple(d["lengthScales"]),
                   tuple(d["tauParams"]), d["priorMean"],
                   d["noiseVariance"], d["tauScale"])


# ---- kernel pieces ---- #

def matern52(X, Y, length_scales, signal_variance):
    """Matern 5/2 Gram block between row sets X (n,m) and Y (p,m)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    ls = np.asarray(length_scales, dtype=float)
    diff = X[:, None, :] / ls - Y[None, :, :] / ls
    d2 = np.einsum("npm,npm->np", diff, diff)
    r = np.sqrt(np.maximum(d2, 0.0))
    return signal_variance * (1.0 + _SQRT5 * r + (5.0 / 3.0) * d2) * np.exp(-_SQRT5 * r)


def tau_kernel(t, u, tau_params, tau_scale=1.0):
    """Polynomial tau factor between tau vectors t (n,) and u (p,)."""
    c11, c21, c22, c_bias = tau_params
    L = np.array([[c11, 0.0], [c21, c22]])
    sigma = L @ L.T
    pt = np.stack([np.ones_like(np.asarray(t, dtype=float)),
                   np.asarray(t, dtype=float) / tau_scale], axis=-1)
    pu = np.stack([np.ones_like(np.asarray(u, dtype=float)),
                   np.asarray(u, dtype=float) / tau_scale], axis=-1)
    return pt @ sigma @ pu.T + c_bias


def kernel_matrix(params, X, Y=None):
    """Product-kernel Gram block; points are rows [theta..., tau]."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = X if Y is None else np.atleast_2d(np.asarray(Y, dtype=float))
    m = params.m
    if X.shape[1] != m + 1 or Y.shape[1] != m + 1:
        raise ValueError(f"points must have {m + 1} coordinates "
                         f"(got {X.shape[1]} and {Y.shape[1]})")
    k_theta = matern52(X[:, :m], Y[:, :m], params.length_scales,
                       params.signal_variance)
    k_tau = tau_kernel(X[:, m], Y[:, m], params.tau_params, params.tau_scale)
    return k_theta * k_tau


def kernel(params, x, y):
    """Kernel value between two single points [theta..., tau]."""
    return float(kernel_matrix(params, np.asarray(x, dtype=float)[None, :],
                               np.asarray(y, dtype=float)[None, :])[0, 0])


# ---- posterior ---- #

def _history_arrays(noise_variance, history):
    X, noise, y = [], [], []
    for theta, tau, q, score in history:
        if q < 1:
            raise ValueError("replication counts must be >= 1")
        if not math.isfinite(score):
            raise ValueError("observed scores must be finite")
        X.append(list(np.asarray(theta, dtype=float).reshape(-1)) + [float(tau)])
        noise.append(noise_variance / q)
        y.append(float(score))
    if not y:
        return np.zeros((0, 0)), np.zeros(0), np.zeros(0)
    X = np.asarray(X, dtype=float).reshape(len(y), -1)
    return X, np.asarray(noise), np.asarray(y)


class Posterior:
    """Exact GP posterior; immutable once built, queries are read-only."""

    def __init__(self, params, X, noise, y):
        self.params = params
        self.X = X
        self.noise = noise
        self.y = y
        self.n = len(y)
        if self.n:
            gram = kernel_matrix(params, X)
            gram[np.diag_indices_from(gram)] += noise + JITTER * params.signal_variance
            try:
                self._chol = linalg.cholesky(gram, lower=True)
            except linalg.LinAlgError as err:
                raise np.linalg.LinAlgError(
                    f"posterior system not PSD after jitter: n={self.n}, "
                    f"min noise={noise.min():.3g}, {err}") from err
            self._alpha = linalg.cho_solve((self._chol, True), y - params.prior_mean)

    def _cross(self, points):
        return kernel_matrix(self.params, self.X, points)

    def mean(self, points):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if not self.n:
            return np.full(len(points), self.params.prior_mean)
        return self.params.prior_mean + self._cross(points).T @ self._alpha

    def mean_cov(self, points):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        prior = kernel_matrix(self.params, points)
        if not self.n:
            return np.full(len(points), self.params.prior_mean), prior
        ks = self._cross(points)
        v = linalg.solve_triangular(self._chol, ks, lower=True)
        mean = self.params.prior_mean + ks.T @ self._alpha
        return mean, prior - v.T @ v

    def variance(self, points):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        prior = np.diagonal(kernel_matrix(self.params, points)).copy()
        if not self.n:
            return prior
        v = linalg.solve_triangular(self._chol, self._cross(points), lower=True)
        return prior - np.einsum("np,np->p", v, v)


def condition(params, history):
    """Posterior from a history of (theta, tau, q, y) records; empty is the prior."""
    X, noise, y = _history_arrays(params.noise_variance, history)
    return Posterior(params, X, noise, y)


def posterior_mean_cov(post, points):
    if len(np.atleast_2d(points)) == 0:
        raise ValueError("need at least one query point")
    return post.mean_cov(points)


def observation_noise(params, q):
    """Effective variance of a q-replication observation, jitter included.

    Batch conditioning regularizes the Gram diagonal with the jitter, so
    sequential updates must carry the same term for the two paths to agree.
    """
    return params.noise_variance / q + JITTER * params.signal_variance


def rank_one_update(mu, cov, j, noise, y):
    """Condition a jointly-Gaussian grid belief on one observation at row j.

    mu, cov describe the current belief over a fixed set of points; the
    observation has variance `noise` (use observation_noise for parity with
    batch conditioning).  Returns the updated pair.
    """
    denom = noise + cov[j, j]
    if denom <= 0:
        raise np.linalg.LinAlgError(f"non-positive update variance {denom:.3g}")
    root = math.sqrt(denom)
    sig = cov[:, j] / root
    z = (y - mu[j]) / root
    return mu + sig * z, cov - np.outer(sig, sig)


# ---- hyperparameters ---- #

def estimate_noise(groups, floor=1e-8):
    """Pooled within-group sample variance of single-replication scores."""
    num, dof = 0.0, 0
    for g in groups:
        g = np.asarray(g, dtype=float)
        if len(g) >= 2:
            num += np.var(g, ddof=1) * (len(g) - 1)
            dof += len(g) - 1
    if dof == 0:
        raise ValueError("noise estimation needs a group with >= 2 replication scores")
    return max(num / dof, floor)


def _neg_log_posterior(psi_scaled, scales, prior_scaled_mean, X, y, noise_over_q, m, tau_scale):
    psi = psi_scaled * scales
    sv = psi[0]
    ls = psi[1:1 + m]
    tp = psi[1 + m:]
    try:
        params = KernelParams(sv, tuple(ls), tuple(tp), 0.0, 1.0, tau_scale)
    except ValueError:
        return 1e12
    gram = kernel_matrix(params, X)
    gram[np.diag_indices_from(gram)] += noise_over_q + JITTER * sv
    try:
        chol = linalg.cholesky(gram, lower=True)
    except linalg.LinAlgError:
        return 1e12
    centered = y - y.mean()
    alpha = linalg.cho_solve((chol, True), centered)
    nll = 0.5 * centered @ alpha + np.log(np.diag(chol)).sum() \
        + 0.5 * len(y) * math.log(2.0 * math.pi)
    # normal hyper-prior with sigma = mu/2 in the original scale: after
    # dividing by the prior means, every coordinate is N(mean_scaled, 1/4)
    penalty = 2.0 * np.sum((psi_scaled - prior_scaled_mean) ** 2)
    return float(nll + penalty)


def fit_map(initial_obs, bounds, noise_variance, tau_scale=None,
            n_restarts=8, seed=0):
    """MAP estimate of the d+5 kernel hyperparameters on the initial design.

    Hyper-prior means: signal variance = sample variance of the scores minus
    the noise estimate; each length scale = the size of its parameter
    interval; tau parameters have fixed unit-order means.  Each prior std is
    half its mean.  Multi-start local optimization; starts are drawn within
    two prior stds of the means.
    """
    obs = list(initial_obs)
    if len(obs) < 2:
        raise ValueError("hyperparameter fitting needs at least two observations")
    X, noise_over_q, y = _history_arrays(noise_variance, obs)
    m = X.shape[1] - 1
    if tau_scale is None:
        tau_scale = float(X[:, m].max())
    prior_mean_y = float(y.mean())
    sv_mean = max(float(np.var(y, ddof=1)) - noise_variance, 1e-6)
    ls_means = [float(hi - lo) for lo, hi in bounds]
    if len(ls_means) != m:
        raise ValueError(f"bounds describe {len(ls_means)} dimensions, "
                         f"points have {m}")
    tau_means = [1.0, 0.5, 0.5, 0.25]
    means = np.array([sv_mean] + ls_means + tau_means)
    # optimize psi/means so every coordinate sits near 1
    scaled_mean = np.ones_like(means)
    lower = np.array([1e-8] + [1e-3] * m + [1e-6, -np.inf, 1e-6, 0.0]) / means
    upper = np.full_like(means, 8.0)
    rng = np.random.default_rng(seed)
    starts = [scaled_mean]
    for _ in range(n_restarts - 1):
        draw = scaled_mean + rng.uniform(-1.0, 1.0, size=means.size)  # +-2 sigma = +-1 scaled
        starts.append(np.clip(draw, lower, upper))
    best, best_val = None, np.inf
    args = (means, scaled_mean, X, y, noise_over_q, m, tau_scale)
    for x0 in starts:
        res = optimize.minimize(_neg_log_posterior, x0, args=args,
                                method="L-BFGS-B",
                                bounds=list(zip(lower, upper)),
                                options={"maxiter": 200})
        if res.fun < best_val and np.isfinite(res.fun):
            best, best_val = res.x, res.fun
    if best is None or best_val >= 1e12:
        warnings.warn("hyperparameter optimization failed; using prior means")
        best = scaled_mean
    psi = best * means
    return KernelParams(float(psi[0]), tuple(psi[1:1 + m]), tuple(psi[1 + m:]),
                        prior_mean_y, noise_variance, tau_scale)
