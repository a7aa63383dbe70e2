"""Subgoal designs, potential-based shaping, and the augmented MDP.

A design is an ordered list of k subgoal points in the domain's continuous
embedding space.  Each subgoal j carries a Gaussian potential bump

    Phi_j(s) = w1 * exp(-||embed(s) - theta_j||^2 / w2)

and the shaping reward for a transition at progress i is
gamma * Phi_{i+1}(s') - Phi_{i+1}(s), with Phi_{k+1} identically zero so
shaping switches off once every subgoal has been reached.  Progress
increments by one exactly when the next base state enters the capture set
of the upcoming subgoal: the grid cell containing the subgoal point for
gridworlds, a position interval of half-width captureRadius for the car.
"""

import json
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .envs import CarState


class AugmentedState(NamedTuple):
    base: object
    progress: int


@dataclass(frozen=True)
class SubgoalDesign:
    points: tuple          # k points, each a tuple of floats
    w1: float = 0.2
    w2: float = 10.0
    capture_radius: float = 0.05

    def __post_init__(self):
        pts = tuple(tuple(float(v) for v in p) for p in self.points)
        object.__setattr__(self, "points", pts)
        if len(pts) < 1:
            raise ValueError("a design needs at least one subgoal")
        dims = {len(p) for p in pts}
        if len(dims) != 1:
            raise ValueError("subgoal points must share a dimension")
        if not all(math.isfinite(v) for p in pts for v in p):
            raise ValueError("subgoal coordinates must be finite")
        if self.w1 <= 0 or self.w2 <= 0 or self.capture_radius <= 0:
            raise ValueError("w1, w2 and captureRadius must be positive")

    @property
    def k(self):
        return len(self.points)

    def as_vector(self):
        return np.asarray(self.points, dtype=float).reshape(-1)

    @classmethod
    def from_vector(cls, vec, point_dim, w1=0.2, w2=10.0, capture_radius=0.05):
        vec = np.asarray(vec, dtype=float).reshape(-1)
        if vec.size % point_dim != 0:
            raise ValueError(f"vector of length {vec.size} does not split into "
                             f"points of dimension {point_dim}")
        pts = tuple(tuple(p) for p in vec.reshape(-1, point_dim))
        return cls(pts, w1, w2, capture_radius)

    def to_json(self):
        return json.dumps({"points": [list(p) for p in self.points],
                           "w1": self.w1, "w2": self.w2,
                           "captureRadius": self.capture_radius})

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        return cls(tuple(tuple(p) for p in d["points"]),
                   d["w1"], d["w2"], d["captureRadius"])


def embed(state):
    """Continuous embedding: cell centers for grid states, position for the car."""
    if isinstance(state, CarState):
        return (state.position,)
    return (state.row + 0.5, state.col + 0.5)


def potential(design, j, state):
    """Phi_j at a state; j runs 1..k, and j = k+1 is the vacuous zero potential."""
    if j < 1 or j > design.k + 1:
        raise IndexError(f"subgoal index {j} outside 1..{design.k + 1}")
    if j == design.k + 1:
        return 0.0
    e = embed(state)
    theta = design.points[j - 1]
    d2 = sum((a - b) ** 2 for a, b in zip(e, theta))
    return design.w1 * math.exp(-d2 / design.w2)


def shaping_reward(design, i, s, s_next, gamma):
    """gamma * Phi_{i+1}(s_next) - Phi_{i+1}(s) at progress i; zero once i = k."""
    if i == design.k:
        return 0.0
    return gamma * potential(design, i + 1, s_next) - potential(design, i + 1, s)


def _grid_capture_cell(point, height, width):
    # the cell containing the point, clipped so boundary coordinates stay on-grid
    r = min(max(int(math.floor(point[0])), 0), height - 1)
    c = min(max(int(math.floor(point[1])), 0), width - 1)
    return r, c


def in_capture_set(design, j, state, inst):
    """Whether a base state lies in the capture set of subgoal j (1-based)."""
    if j < 1 or j > design.k:
        return False
    point = design.points[j - 1]
    if isinstance(state, CarState):
        return abs(state.position - point[0]) <= design.capture_radius
    return (state.row, state.col) == _grid_capture_cell(point, inst.height, inst.width)


def augment_step(inst, design, aug, action, rng):
    """One transition of the augmented MDP.

    Returns (next augmented state, total reward, extrinsic reward, terminal).
    The total reward is extrinsic plus the shaping term at the pre-transition
    progress; progress increments by one exactly when the next base state
    enters the capture set of subgoal i+1.
    """
    s, i = aug.base, aug.progress
    s2, r_ext, terminal = inst.step(s, action, rng)
    r_total = r_ext + shaping_reward(design, i, s, s2, inst.discount)
    if i < design.k and in_capture_set(design, i + 1, s2, inst):
        i = i + 1
    return AugmentedState(s2, i), r_total, r_ext, terminal


class AugmentedMdp:
    """A design bound to an instance, with potential tables precomputed.

    Semantics match `augment_step`; this form exists so the per-step cost in
    training loops is a couple of table lookups.  With design=None the wrapper
    degenerates to the raw MDP (no shaping, progress fixed at 0).
    """

    def __init__(self, inst, design):
        self.inst = inst
        self.design = design
        self.gamma = inst.discount
        self.n_actions = inst.n_actions
        self.horizon_cap = inst.horizon_cap
        k = 0 if design is None else design.k
        self.k = k
        self.n_states = (k + 1) * inst.n_states
        self._base_states = inst.n_states
        self._grid = hasattr(inst, "n_cells")
        if self._grid:
            W, H = inst.width, inst.height
            phi = np.zeros((k + 1, inst.n_cells))
            capture = []
            for j in range(k):
                tr, tc = design.points[j]
                for cell in range(inst.n_cells):
                    r, c = divmod(cell, W)
                    d2 = (r + 0.5 - tr) ** 2 + (c + 0.5 - tc) ** 2
                    phi[j, cell] = design.w1 * math.exp(-d2 / design.w2)
                cr, cc = _grid_capture_cell(design.points[j], H, W)
                capture.append(cr * W + cc)
            # row k stays zero: the potential after the final subgoal
            self._phi = phi.tolist()
            self._capture = capture
            self._width = W
        else:
            self._points = [p[0] for p in (design.points if design else ())]

    def initial_state(self):
        return AugmentedState(self.inst.initial_state(), 0)

    def state_index(self, aug):
        return aug.progress * self._base_states + self.inst.state_index(aug.base)

    def step(self, aug, action, rng):
        s, i = aug
        s2, r_ext, terminal = self.inst.step(s, action, rng)
        if self._grid:
            if i < self.k:
                row = self._phi[i]
                c1 = s.row * self._width + s.col
                c2 = s2.row * self._width + s2.col
                r_total = r_ext + (self.gamma * row[c2] - row[c1])
                if c2 == self._capture[i]:
                    i += 1
            else:
                r_total = r_ext
        else:
            if i < self.k:
                theta = self._points[i]
                d = self.design
                phi1 = d.w1 * math.exp(-(s.position - theta) ** 2 / d.w2)
                phi2 = d.w1 * math.exp(-(s2.position - theta) ** 2 / d.w2)
                r_total = r_ext + (self.gamma * phi2 - phi1)
                if abs(s2.position - theta) <= d.capture_radius:
                    i += 1
            else:
                r_total = r_ext
        return AugmentedState(s2, i), r_total, r_ext, terminal
