import numpy as np
import pytest

from besd.envs import (DOMAINS, NORTH, SOUTH, WEST, EAST, CarState, GridState,
                       KeyState, TreasureState, make_distribution,
                       sample_instance, theta_bounds)


def random_walk(inst, rng, n_steps):
    """Drive the instance with uniform actions, resetting at terminals."""
    state = inst.initial_state()
    visited = []
    for _ in range(n_steps):
        a = int(rng.integers(inst.n_actions))
        state, r, term = inst.step(state, a, rng)
        visited.append((state, r, term))
        if term:
            state = inst.initial_state()
    return visited


class TestSampling:
    def test_same_seed_same_instance(self):
        for domain in DOMAINS:
            dist = make_distribution(domain)
            a = sample_instance(dist, 123)
            b = sample_instance(dist, 123)
            assert a.layout_dict() == b.layout_dict()

    def test_different_seeds_vary(self):
        dist = make_distribution("GW10")
        layouts = {str(sample_instance(dist, s).layout_dict()) for s in range(20)}
        assert len(layouts) > 1

    def test_gw10_layout_bounds(self):
        dist = make_distribution("GW10")
        for seed in range(50):
            inst = sample_instance(dist, seed)
            rows = {r for r, c in inst.walls}
            assert len(rows) == 1
            assert rows.pop() in (3, 4, 5, 6, 7)
            # door occupies the four rightmost columns
            wall_cols = {c for r, c in inst.walls}
            assert wall_cols == set(range(6))
            assert 0.0 <= inst.wind_prob <= 0.02

    def test_gw20_two_walls_with_doors(self):
        dist = make_distribution("GW20")
        for seed in range(30):
            inst = sample_instance(dist, seed)
            rows = sorted({r for r, c in inst.walls})
            assert len(rows) == 2
            assert rows[0] in (5, 6, 7, 8) and rows[1] in (11, 12, 13, 14)
            for row in rows:
                open_cols = set(range(20)) - {c for r, c in inst.walls if r == row}
                assert len(open_cols) == 8
                assert open_cols == set(range(min(open_cols), min(open_cols) + 8))

    def test_tr_treasure_in_region(self):
        dist = make_distribution("TR")
        cells = set()
        for seed in range(60):
            inst = sample_instance(dist, seed)
            assert inst.treasure[0] in (7, 8, 9)
            assert inst.treasure[1] in (3, 4, 5)
            cells.add(inst.treasure)
        assert len(cells) == 9  # all placements reachable by the sampler

    def test_key_patch_inside_regions(self):
        dist = make_distribution("KEY2")
        for seed in range(40):
            inst = sample_instance(dist, seed)
            assert len(inst.key_cells) == 4
            for r, c in inst.key_cells:
                assert (1 <= r <= 4 and 3 <= c <= 5) or (1 <= r <= 4 and 8 <= c <= 9)

    def test_mc_start_range(self):
        dist = make_distribution("MC")
        starts = [sample_instance(dist, s).start_position for s in range(100)]
        assert all(-0.6 <= p <= -0.4 for p in starts)
        assert np.std(starts) > 0.01

    def test_layout_overrides(self):
        dist = make_distribution("GW10", goal=[5, 5], wind_range=(0.0, 0.0))
        inst = sample_instance(dist, 0)
        assert inst.goal == (5, 5)
        assert inst.wind_prob == 0.0
        with pytest.raises(ValueError):
            make_distribution("GW10", not_a_key=1)
        with pytest.raises(ValueError):
            make_distribution("GW11")


class TestGridStep:
    def test_compass_moves(self):
        dist = make_distribution("GW10", wind_range=(0.0, 0.0))
        inst = sample_instance(dist, 0)
        rng = np.random.default_rng(0)
        s = GridState(1, 1)
        assert inst.step(s, NORTH, rng)[0] == GridState(2, 1)
        assert inst.step(s, SOUTH, rng)[0] == GridState(0, 1)
        assert inst.step(s, WEST, rng)[0] == GridState(1, 0)
        assert inst.step(s, EAST, rng)[0] == GridState(1, 2)

    def test_boundary_and_wall_block(self):
        dist = make_distribution("GW10", wind_range=(0.0, 0.0))
        inst = sample_instance(dist, 0)
        rng = np.random.default_rng(0)
        assert inst.step(GridState(0, 0), SOUTH, rng)[0] == GridState(0, 0)
        assert inst.step(GridState(0, 0), WEST, rng)[0] == GridState(0, 0)
        wall_row = next(iter(inst.walls))[0]
        below = GridState(wall_row - 1, 0)
        s2, r, term = inst.step(below, NORTH, rng)
        assert s2 == below and r == 0.0 and not term

    def test_goal_entry_reward_and_absorbing(self):
        dist = make_distribution("GW10", wind_range=(0.0, 0.0))
        inst = sample_instance(dist, 0)
        rng = np.random.default_rng(0)
        s = GridState(8, 0)
        s2, r, term = inst.step(s, NORTH, rng)
        assert s2 == GridState(9, 0) and r == 1.0 and term
        s3, r3, term3 = inst.step(s2, SOUTH, rng)
        assert s3 == s2 and r3 == 0.0 and term3

    def test_wind_frequency_matches_probability(self):
        # from an interior open cell, a non-intended realized move can only
        # come from wind; P(mismatch) = windProb * 3/4
        w = 0.02
        dist = make_distribution("GW10", wind_range=(w, w))
        inst = sample_instance(dist, 0)
        rng = np.random.default_rng(7)
        s = GridState(1, 1)
        n = 10 ** 6
        mism = 0
        expected = GridState(2, 1)
        for _ in range(n):
            if inst.step(s, NORTH, rng)[0] != expected:
                mism += 1
        p = w * 0.75
        se = (p * (1 - p) / n) ** 0.5
        assert abs(mism / n - p) < 3 * se

    def test_step_is_pure(self):
        dist = make_distribution("GW10")
        inst = sample_instance(dist, 3)
        rng = np.random.default_rng(0)
        s = GridState(2, 2)
        inst.step(s, NORTH, rng)
        assert s == GridState(2, 2)

    def test_random_walk_stays_on_grid(self):
        rng = np.random.default_rng(11)
        for domain in ("GW10", "GW20", "TR", "KEY2"):
            dist = make_distribution(domain)
            inst = sample_instance(dist, 5)
            for state, r, term in random_walk(inst, rng, 20000):
                assert 0 <= state.row < inst.height
                assert 0 <= state.col < inst.width
                assert (state.row, state.col) not in inst.walls
                assert 0 <= inst.state_index(state) < inst.n_states


class TestTreasure:
    def test_treasure_collected_once_per_episode(self):
        dist = make_distribution("TR", wind_range=(0.0, 0.0))
        inst = sample_instance(dist, 2)
        rng = np.random.default_rng(0)
        tr, tc = inst.treasure
        s = TreasureState(tr - 1, tc, False)
        s2, r, term = inst.step(s, NORTH, rng)
        assert r == 10.0 and s2.collected and not term
        # leave and re-enter: no second payout
        s3, _, _ = inst.step(s2, SOUTH, rng)
        s4, r4, _ = inst.step(s3, NORTH, rng)
        assert s4.collected and r4 == 0.0

    def test_goal_reward_inside_room(self):
        dist = make_distribution("TR", wind_range=(0.0, 0.0))
        inst = sample_instance(dist, 2)
        rng = np.random.default_rng(0)
        s = TreasureState(7, 8, False)
        s2, r, term = inst.step(s, NORTH, rng)
        assert s2.row == 8 and s2.col == 8 and r == 10.0 and term

    def test_room_door_is_only_opening(self):
        dist = make_distribution("TR", wind_range=(0.0, 0.0))
        inst = sample_instance(dist, 2)
        rng = np.random.default_rng(0)
        # crossing the wall row away from the door is blocked
        s = TreasureState(5, 7, False)
        assert inst.step(s, NORTH, rng)[0][:2] == (5, 7)
        d = TreasureState(5, 8, False)
        assert inst.step(d, NORTH, rng)[0][:2] == (6, 8)


class TestKeyDoor:
    def test_door_blocked_without_key(self):
        dist = make_distribution("KEY2", wind_range=(0.0, 0.0))
        inst = sample_instance(dist, 1)
        rng = np.random.default_rng(0)
        below_door = KeyState(inst.wall_row - 1, inst.door_col, False)
        s2, r, term = inst.step(below_door, NORTH, rng)
        assert (s2.row, s2.col) == (below_door.row, below_door.col)

    def test_key_pickup_opens_door(self):
        dist = make_distribution("KEY2", wind_range=(0.0, 0.0))
        inst = sample_instance(dist, 1)
        rng = np.random.default_rng(0)
        kr, kc = min(inst.key_cells)
        s = KeyState(kr - 1, kc, False)
        s2, _, _ = inst.step(s, NORTH, rng)
        assert s2.has_key
        at_door = KeyState(inst.wall_row - 1, inst.door_col, True)
        s3, _, _ = inst.step(at_door, NORTH, rng)
        assert (s3.row, s3.col) == (inst.wall_row, inst.door_col)

    def test_key_persists_within_episode(self):
        dist = make_distribution("KEY2")
        inst = sample_instance(dist, 1)
        rng = np.random.default_rng(4)
        state = inst.initial_state()
        seen_key = False
        for _ in range(5000):
            state, _, term = inst.step(state, int(rng.integers(4)), rng)
            if state.has_key:
                seen_key = True
            if seen_key and not term:
                assert state.has_key
            if term:
                state = inst.initial_state()
                seen_key = False


class TestMountainCar:
    def test_coast_rolls_downhill(self):
        dist = make_distribution("MC")
        inst = sample_instance(dist, 0)
        rng = np.random.default_rng(0)
        s = CarState(-0.5, 0.0)
        s2, r, term = inst.step(s, 1, rng)
        # cos(3 * -0.5) > 0 so gravity pulls toward negative positions
        assert s2.velocity < 0.0 and s2.position < s.position
        assert r == 0.0 and not term

    def test_velocity_and_position_clamped(self):
        dist = make_distribution("MC")
        inst = sample_instance(dist, 0)
        rng = np.random.default_rng(0)
        s = CarState(-1.19, -0.07)
        s2, _, _ = inst.step(s, 0, rng)
        assert s2.position == -1.2 and s2.velocity == 0.0
        assert abs(s2.velocity) <= 0.07

    def test_goal_reward_and_terminal(self):
        dist = make_distribution("MC")
        inst = sample_instance(dist, 0)
        rng = np.random.default_rng(0)
        s = CarState(0.45, 0.07)
        s2, r, term = inst.step(s, 2, rng)
        assert s2.position >= 0.5 and r == 1.0 and term
        s3, r3, term3 = inst.step(s2, 2, rng)
        assert s3 == s2 and r3 == 0.0 and term3

    def test_state_index_in_range(self):
        dist = make_distribution("MC")
        inst = sample_instance(dist, 0)
        rng = np.random.default_rng(0)
        state = inst.initial_state()
        for _ in range(5000):
            idx = inst.state_index(state)
            assert 0 <= idx < inst.n_states
            state, _, term = inst.step(state, int(rng.integers(3)), rng)
            if term:
                state = inst.initial_state()


class TestBoundsAndEmbedding:
    def test_theta_bounds_grid(self):
        dist = make_distribution("GW10")
        assert theta_bounds(dist, 2) == [(0.0, 10.0)] * 4
        dist20 = make_distribution("GW20")
        assert theta_bounds(dist20, 3) == [(0.0, 20.0)] * 6

    def test_theta_bounds_mc(self):
        dist = make_distribution("MC")
        assert theta_bounds(dist, 2) == [(-1.2, 0.6)] * 2
        with pytest.raises(ValueError):
            theta_bounds(dist, 0)

    def test_embed_cell_centers(self):
        dist = make_distribution("GW10")
        inst = sample_instance(dist, 0)
        assert inst.embed(GridState(0, 0)) == (0.5, 0.5)
        assert inst.embed(GridState(9, 3)) == (9.5, 3.5)

    def test_layout_json_roundtrip(self):
        import json
        for domain in DOMAINS:
            dist = make_distribution(domain)
            inst = sample_instance(dist, 9)
            d = inst.layout_dict()
            assert json.loads(json.dumps(d)) == d
            assert json.loads(json.dumps(dist.to_dict())) == dist.to_dict()
