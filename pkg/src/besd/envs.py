"""Randomized sparse-reward MDP families.

Each domain defines a distribution over concrete MDP instances: the layout
randomness (wall placement, door position, wind strength, treasure cell, key
location, start position) is fixed at sampling time, while step-level
randomness (wind realizations) is drawn from the rng passed to `step`.

Gridworld coordinates are (row, col) with row 0 at the bottom.  Continuous
embeddings place a cell at its center, so cell (r, c) embeds to
(r + 0.5, c + 0.5); mountain-car embeds to its position.
"""

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

# ---- actions ---- #

NORTH, SOUTH, WEST, EAST = 0, 1, 2, 3
GRID_MOVES = ((1, 0), (-1, 0), (0, -1), (0, 1))

# mountain car: 0 = reverse, 1 = coast, 2 = forward
MC_REVERSE, MC_COAST, MC_FORWARD = 0, 1, 2

DOMAINS = ("GW10", "GW20", "TR", "MC", "KEY2", "KEY3")


# ---- states ---- #

class GridState(NamedTuple):
    row: int
    col: int


class TreasureState(NamedTuple):
    row: int
    col: int
    collected: bool


class KeyState(NamedTuple):
    row: int
    col: int
    has_key: bool


class CarState(NamedTuple):
    position: float
    velocity: float


# ---- distributions ---- #

@dataclass(frozen=True)
class EnvDistribution:
    """A domain id plus the randomization bounds needed to sample instances."""

    domain_id: str
    discount: float
    horizon_cap: int
    wind_range: tuple = (0.0, 0.0)
    layout: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "domain_id": self.domain_id,
            "discount": self.discount,
            "horizon_cap": self.horizon_cap,
            "wind_range": list(self.wind_range),
            "layout": self.layout,
        }


def _default_layout(domain_id):
    if domain_id == "GW10":
        return {
            "height": 10, "width": 10,
            "start": [0, 0], "goal": [9, 0], "goal_reward": 1.0,
            # one wall across a middle row, door of width 4 at the right end
            "walls": [{"row_choices": [3, 4, 5, 6, 7],
                       "door_width": 4, "door_start_choices": [6]}],
        }
    if domain_id == "GW20":
        return {
            "height": 20, "width": 20,
            "start": [0, 0], "goal": [19, 0], "goal_reward": 1.0,
            # two walls cut the grid into three rooms; door position is random
            "walls": [{"row_choices": [5, 6, 7, 8],
                       "door_width": 8, "door_start_choices": list(range(13))},
                      {"row_choices": [11, 12, 13, 14],
                       "door_width": 8, "door_start_choices": list(range(13))}],
        }
    if domain_id == "TR":
        return {
            "height": 10, "width": 10,
            "start": [0, 0], "goal": [8, 8], "goal_reward": 10.0,
            # walled room in the upper-right corner with a one-cell door
            "room_walls": [[6, 6], [6, 7], [6, 9], [7, 6], [8, 6], [9, 6]],
            "treasure_reward": 10.0,
            "treasure_rows": [7, 8, 9], "treasure_cols": [3, 4, 5],
        }
    if domain_id in ("KEY2", "KEY3"):
        return {
            "height": 10, "width": 10,
            "start": [0, 0], "goal": [9, 0], "goal_reward": 1.0,
            "wall_row": 5, "door_col": 7,
            # the 2x2 key patch lands inside one of two regions of the lower room
            "key_regions": [{"rows": [1, 4], "cols": [3, 5]},
                            {"rows": [1, 4], "cols": [8, 9]}],
            "key_size": 2,
        }
    if domain_id == "MC":
        return {
            "position_range": [-1.2, 0.6], "goal_position": 0.5,
            "start_range": [-0.6, -0.4], "goal_reward": 1.0,
            "force": 0.001, "gravity": 0.0025, "max_speed": 0.07,
            "position_bins": 24, "velocity_bins": 16,
        }
    raise ValueError(f"unknown domain id: {domain_id}")


def make_distribution(domain_id, **overrides):
    """Build an EnvDistribution with default layout, overridable per key.

    Recognized override keys: discount, horizon_cap, wind_range, plus any
    layout key of the domain (e.g. goal, wall_row, start_range).
    """
    if domain_id not in DOMAINS:
        raise ValueError(f"unknown domain id: {domain_id!r}, expected one of {DOMAINS}")
    layout = _default_layout(domain_id)
    if domain_id == "MC":
        discount, horizon_cap, wind = 0.95, 1000, (0.0, 0.0)
    elif domain_id == "TR":
        discount, horizon_cap, wind = 0.98, 400, (0.0, 0.02)
    elif domain_id == "GW20":
        discount, horizon_cap, wind = 0.95, 1600, (0.0, 0.02)
    else:
        discount, horizon_cap, wind = 0.95, 400, (0.0, 0.02)
    discount = overrides.pop("discount", discount)
    horizon_cap = overrides.pop("horizon_cap", horizon_cap)
    wind = tuple(overrides.pop("wind_range", wind))
    for key, value in overrides.items():
        if key not in layout:
            raise ValueError(f"unknown layout key {key!r} for domain {domain_id}")
        layout[key] = value
    return EnvDistribution(domain_id, discount, horizon_cap, wind, layout)


# ---- gridworld instances ---- #

class _GridBase:
    """Shared move tables and indexing for the gridworld domains."""

    n_actions = 4

    def _init_grid(self, height, width, start, goal, goal_reward,
                   wind_prob, discount, horizon_cap):
        self.height = height
        self.width = width
        self.start = (int(start[0]), int(start[1]))
        self.goal = (int(goal[0]), int(goal[1]))
        self.goal_reward = float(goal_reward)
        self.wind_prob = float(wind_prob)
        self.discount = float(discount)
        self.horizon_cap = int(horizon_cap)
        self.n_cells = height * width
        self._goal_cell = self.goal[0] * width + self.goal[1]

    def _build_next(self, blocked):
        """Move table: blocked or off-grid targets leave the agent in place."""
        H, W = self.height, self.width
        table = []
        for cell in range(H * W):
            r, c = divmod(cell, W)
            row = []
            for dr, dc in GRID_MOVES:
                r2, c2 = r + dr, c + dc
                if 0 <= r2 < H and 0 <= c2 < W and (r2, c2) not in blocked:
                    row.append(r2 * W + c2)
                else:
                    row.append(cell)
            table.append(row)
        return table

    def cell_index(self, row, col):
        return row * self.width + col

    def _realized(self, action, rng):
        # wind replaces the move with a uniform direction, which may happen
        # to coincide with the intended one
        if self.wind_prob > 0.0 and rng.random() < self.wind_prob:
            return int(rng.integers(4))
        return action


class GridInstance(_GridBase):
    """Plain gridworld (GW10, GW20): walls, wind, one terminal goal."""

    def __init__(self, domain_id, height, width, start, goal, goal_reward,
                 walls, wind_prob, discount, horizon_cap):
        self._init_grid(height, width, start, goal, goal_reward,
                        wind_prob, discount, horizon_cap)
        self.domain_id = domain_id
        self.walls = frozenset((int(r), int(c)) for r, c in walls)
        self._next = self._build_next(self.walls)
        self.n_states = self.n_cells

    def initial_state(self):
        return GridState(*self.start)

    def step(self, state, action, rng):
        if state.row == self.goal[0] and state.col == self.goal[1]:
            return state, 0.0, True
        direction = self._realized(action, rng)
        c2 = self._next[state.row * self.width + state.col][direction]
        if c2 == self._goal_cell:
            return GridState(self.goal[0], self.goal[1]), self.goal_reward, True
        return GridState(c2 // self.width, c2 % self.width), 0.0, False

    def state_index(self, state):
        return state.row * self.width + state.col

    def embed(self, state):
        return (state.row + 0.5, state.col + 0.5)

    def layout_dict(self):
        return {
            "domain_id": self.domain_id,
            "height": self.height, "width": self.width,
            "start": list(self.start), "goal": list(self.goal),
            "goal_reward": self.goal_reward,
            "walls": sorted(list(w) for w in self.walls),
            "wind_prob": self.wind_prob,
            "discount": self.discount, "horizon_cap": self.horizon_cap,
        }


class TreasureInstance(_GridBase):
    """Gridworld with a walled goal room and a once-per-episode treasure."""

    def __init__(self, height, width, start, goal, goal_reward, walls,
                 treasure, treasure_reward, wind_prob, discount, horizon_cap):
        self._init_grid(height, width, start, goal, goal_reward,
                        wind_prob, discount, horizon_cap)
        self.domain_id = "TR"
        self.walls = frozenset((int(r), int(c)) for r, c in walls)
        self.treasure = (int(treasure[0]), int(treasure[1]))
        self.treasure_reward = float(treasure_reward)
        self._next = self._build_next(self.walls)
        self._treasure_cell = self.cell_index(*self.treasure)
        # state = (cell, collected flag)
        self.n_states = 2 * self.n_cells

    def initial_state(self):
        return TreasureState(self.start[0], self.start[1], False)

    def step(self, state, action, rng):
        if state.row == self.goal[0] and state.col == self.goal[1]:
            return state, 0.0, True
        direction = self._realized(action, rng)
        c2 = self._next[state.row * self.width + state.col][direction]
        reward = 0.0
        collected = state.collected
        if c2 == self._treasure_cell and not collected:
            reward += self.treasure_reward
            collected = True
        if c2 == self._goal_cell:
            return (TreasureState(self.goal[0], self.goal[1], collected),
                    reward + self.goal_reward, True)
        return TreasureState(c2 // self.width, c2 % self.width, collected), reward, False

    def state_index(self, state):
        idx = state.row * self.width + state.col
        return idx + self.n_cells if state.collected else idx

    def embed(self, state):
        return (state.row + 0.5, state.col + 0.5)

    def layout_dict(self):
        return {
            "domain_id": self.domain_id,
            "height": self.height, "width": self.width,
            "start": list(self.start), "goal": list(self.goal),
            "goal_reward": self.goal_reward,
            "walls": sorted(list(w) for w in self.walls),
            "treasure": list(self.treasure),
            "treasure_reward": self.treasure_reward,
            "wind_prob": self.wind_prob,
            "discount": self.discount, "horizon_cap": self.horizon_cap,
        }


class KeyInstance(_GridBase):
    """Gridworld with a door that stays impassable until the key patch is visited."""

    def __init__(self, domain_id, height, width, start, goal, goal_reward,
                 wall_row, door_col, key_cells, wind_prob, discount, horizon_cap):
        self._init_grid(height, width, start, goal, goal_reward,
                        wind_prob, discount, horizon_cap)
        self.domain_id = domain_id
        self.wall_row = int(wall_row)
        self.door_col = int(door_col)
        self.key_cells = frozenset((int(r), int(c)) for r, c in key_cells)
        wall = {(self.wall_row, c) for c in range(width) if c != self.door_col}
        self.walls = frozenset(wall)
        self._next_locked = self._build_next(wall | {(self.wall_row, self.door_col)})
        self._next_open = self._build_next(wall)
        self._is_key_cell = [False] * self.n_cells
        for r, c in self.key_cells:
            self._is_key_cell[self.cell_index(r, c)] = True
        self.n_states = 2 * self.n_cells

    def initial_state(self):
        return KeyState(self.start[0], self.start[1], False)

    def step(self, state, action, rng):
        if state.row == self.goal[0] and state.col == self.goal[1]:
            return state, 0.0, True
        direction = self._realized(action, rng)
        table = self._next_open if state.has_key else self._next_locked
        c2 = table[state.row * self.width + state.col][direction]
        has_key = state.has_key or self._is_key_cell[c2]
        if c2 == self._goal_cell:
            return KeyState(self.goal[0], self.goal[1], has_key), self.goal_reward, True
        return KeyState(c2 // self.width, c2 % self.width, has_key), 0.0, False

    def state_index(self, state):
        idx = state.row * self.width + state.col
        return idx + self.n_cells if state.has_key else idx

    def embed(self, state):
        return (state.row + 0.5, state.col + 0.5)

    def layout_dict(self):
        return {
            "domain_id": self.domain_id,
            "height": self.height, "width": self.width,
            "start": list(self.start), "goal": list(self.goal),
            "goal_reward": self.goal_reward,
            "wall_row": self.wall_row, "door_col": self.door_col,
            "key_cells": sorted(list(k) for k in self.key_cells),
            "wind_prob": self.wind_prob,
            "discount": self.discount, "horizon_cap": self.horizon_cap,
        }


# ---- mountain car ---- #

class MountainCarInstance:
    """Classic underpowered-car dynamics; the start position is the instance draw."""

    n_actions = 3
    domain_id = "MC"

    def __init__(self, start_position, discount, horizon_cap, layout):
        self.start_position = float(start_position)
        self.discount = float(discount)
        self.horizon_cap = int(horizon_cap)
        self.position_range = tuple(layout["position_range"])
        self.goal_position = float(layout["goal_position"])
        self.goal_reward = float(layout["goal_reward"])
        self.force = float(layout["force"])
        self.gravity = float(layout["gravity"])
        self.max_speed = float(layout["max_speed"])
        self.position_bins = int(layout["position_bins"])
        self.velocity_bins = int(layout["velocity_bins"])
        self.n_states = self.position_bins * self.velocity_bins
        lo, hi = self.position_range
        self._pos_scale = self.position_bins / (hi - lo)
        self._vel_scale = self.velocity_bins / (2.0 * self.max_speed)
        self.wind_prob = 0.0

    def initial_state(self):
        return CarState(self.start_position, 0.0)

    def step(self, state, action, rng):
        if state.position >= self.goal_position:
            return state, 0.0, True
        v = state.velocity + (action - 1) * self.force \
            - self.gravity * math.cos(3.0 * state.position)
        if v > self.max_speed:
            v = self.max_speed
        elif v < -self.max_speed:
            v = -self.max_speed
        p = state.position + v
        lo, hi = self.position_range
        if p < lo:
            p = lo
            if v < 0.0:
                v = 0.0
        elif p > hi:
            p = hi
        if p >= self.goal_position:
            return CarState(p, v), self.goal_reward, True
        return CarState(p, v), 0.0, False

    def state_index(self, state):
        lo, _ = self.position_range
        pb = int((state.position - lo) * self._pos_scale)
        vb = int((state.velocity + self.max_speed) * self._vel_scale)
        if pb >= self.position_bins:
            pb = self.position_bins - 1
        if vb >= self.velocity_bins:
            vb = self.velocity_bins - 1
        return pb * self.velocity_bins + vb

    def embed(self, state):
        return (state.position,)

    def layout_dict(self):
        return {
            "domain_id": self.domain_id,
            "start_position": self.start_position,
            "position_range": list(self.position_range),
            "goal_position": self.goal_position,
            "goal_reward": self.goal_reward,
            "force": self.force, "gravity": self.gravity,
            "max_speed": self.max_speed,
            "position_bins": self.position_bins,
            "velocity_bins": self.velocity_bins,
            "discount": self.discount, "horizon_cap": self.horizon_cap,
        }


# ---- sampling ---- #

def _sample_wall_cells(wall_spec, width, rng):
    row = int(rng.choice(wall_spec["row_choices"]))
    start = int(rng.choice(wall_spec["door_start_choices"]))
    door = set(range(start, start + wall_spec["door_width"]))
    return [(row, c) for c in range(width) if c not in door]


def sample_instance(dist, seed):
    """Draw a concrete MDP from the distribution; equal seeds give equal draws."""
    rng = np.random.default_rng(seed)
    lay = dist.layout
    domain = dist.domain_id
    if domain == "MC":
        lo, hi = lay["start_range"]
        return MountainCarInstance(rng.uniform(lo, hi), dist.discount,
                                   dist.horizon_cap, lay)
    wind = rng.uniform(*dist.wind_range) if dist.wind_range[1] > 0 else 0.0
    if domain in ("GW10", "GW20"):
        walls = []
        for spec in lay["walls"]:
            walls.extend(_sample_wall_cells(spec, lay["width"], rng))
        return GridInstance(domain, lay["height"], lay["width"], lay["start"],
                            lay["goal"], lay["goal_reward"], walls, wind,
                            dist.discount, dist.horizon_cap)
    if domain == "TR":
        tr = int(rng.choice(lay["treasure_rows"]))
        tc = int(rng.choice(lay["treasure_cols"]))
        return TreasureInstance(lay["height"], lay["width"], lay["start"],
                                lay["goal"], lay["goal_reward"], lay["room_walls"],
                                (tr, tc), lay["treasure_reward"], wind,
                                dist.discount, dist.horizon_cap)
    if domain in ("KEY2", "KEY3"):
        size = lay["key_size"]
        placements = []
        for region in lay["key_regions"]:
            r0, r1 = region["rows"]
            c0, c1 = region["cols"]
            for r in range(r0, r1 - size + 2):
                for c in range(c0, c1 - size + 2):
                    placements.append((r, c))
        r, c = placements[int(rng.integers(len(placements)))]
        key_cells = [(r + i, c + j) for i in range(size) for j in range(size)]
        return KeyInstance(domain, lay["height"], lay["width"], lay["start"],
                           lay["goal"], lay["goal_reward"], lay["wall_row"],
                           lay["door_col"], key_cells, wind,
                           dist.discount, dist.horizon_cap)
    raise ValueError(f"unknown domain id: {domain!r}")


def theta_bounds(dist, n_subgoals):
    """Box bounds of the subgoal-design vector, one (lo, hi) pair per coordinate."""
    if n_subgoals < 1:
        raise ValueError("need at least one subgoal")
    if dist.domain_id == "MC":
        per = [tuple(dist.layout["position_range"])]
    else:
        per = [(0.0, float(dist.layout["height"])),
               (0.0, float(dist.layout["width"]))]
    return per * n_subgoals
