import dataclasses
import math

import numpy as np
import pytest

from splash import sim
from splash.errors import ConfigError, UsageError
from splash.sim import LowAction, Team

from conftest import random_game_states


def states_equal(a, b, tol=1e-9):
    if (a.blue_captures, a.red_captures, a.tick) != (b.blue_captures, b.red_captures, b.tick):
        return False
    if a.flag_taken_by != b.flag_taken_by:
        return False
    for x, y in zip(a.agents, b.agents):
        if (x.team, x.is_tagged, x.has_flag) != (y.team, y.is_tagged, y.has_flag):
            return False
        if abs(sim.wrap_deg(x.heading - y.heading)) > tol:
            return False
        for k in ("x", "y", "speed", "cooldown_remaining_s"):
            if abs(getattr(x, k) - getattr(y, k)) > tol:
                return False
    return True


class TestReset:
    def test_deterministic(self, cfg):
        assert states_equal(sim.reset(cfg, 3), sim.reset(cfg, 3))

    def test_requires_field_config(self):
        with pytest.raises(ConfigError):
            sim.reset({"width_m": 160}, 0)

    def test_spawn_layout(self, cfg):
        state = sim.reset(cfg, 0)
        bx, by = sim.flag_home(cfg, Team.BLUE)
        rx, ry = sim.flag_home(cfg, Team.RED)
        assert (bx, by) == (cfg.width_m - 10.0, cfg.height_m / 2.0)
        assert (rx, ry) == (10.0, cfg.height_m / 2.0)
        blue = [state.agents[i] for i in sim.team_indices(cfg, Team.BLUE)]
        red = [state.agents[i] for i in sim.team_indices(cfg, Team.RED)]
        assert sorted(a.y for a in blue) == [by - 10.0, by + 10.0]
        assert sorted(a.y for a in red) == [ry - 10.0, ry + 10.0]
        assert all(a.x == bx and a.heading == 180.0 and a.speed == 0.0 for a in blue)
        assert all(a.x == rx and a.heading == 0.0 for a in red)

    def test_fresh_state_counters(self, cfg):
        state = sim.reset(cfg, 0)
        assert state.tick == 0
        assert state.blue_captures == 0 and state.red_captures == 0
        assert state.flag_taken_by == [None, None]


class TestKinematics:
    def test_forward_speed_converges_below_cap(self, cfg):
        state = sim.reset(cfg, 0)
        for _ in range(100):
            sim.step(cfg, state, [LowAction.FORWARD_MAX] * 4)
            assert all(a.speed <= cfg.max_speed_mps + 1e-12 for a in state.agents)
        assert all(abs(a.speed - cfg.max_speed_mps) < 1e-3 for a in state.agents)

    def test_noop_stays_put(self, cfg):
        state = sim.reset(cfg, 0)
        before = state.copy()
        sim.step(cfg, state, [LowAction.NO_OP] * 4)
        for a, b in zip(state.agents, before.agents):
            assert (a.x, a.y, a.speed) == (b.x, b.y, b.speed)
            assert sim.wrap_deg(a.heading - b.heading) == 0.0

    def test_turn_rate_limited(self, cfg):
        state = sim.reset(cfg, 0)
        max_per_tick = 90.0 * cfg.dt
        for _ in range(60):
            prev = [a.heading for a in state.agents]
            sim.step(cfg, state, [LowAction.STEER_LEFT_135] * 4)
            for a, h0 in zip(state.agents, prev):
                assert abs(sim.wrap_deg(a.heading - h0)) <= max_per_tick + 1e-9

    def test_positions_clamped_to_field(self, cfg):
        for state in random_game_states(cfg, seed=11, n_ticks=300):
            for a in state.agents:
                assert 0.0 <= a.x <= cfg.width_m
                assert 0.0 <= a.y <= cfg.height_m

    def test_bad_action_count(self, cfg):
        state = sim.reset(cfg, 0)
        with pytest.raises(UsageError):
            sim.step(cfg, state, [LowAction.NO_OP] * 3)


def place(state, i, x, y, heading=0.0, speed=0.0, **kw):
    a = state.agents[i]
    a.x, a.y, a.heading, a.speed = x, y, heading, speed
    for k, v in kw.items():
        setattr(a, k, v)
    return a


class TestRules:
    def test_tag_inside_radius(self, cfg):
        state = sim.reset(cfg, 0)
        # red agent 2 sits on its own side; blue agent 0 intrudes within 10 m
        place(state, 2, 40.0, 40.0)
        place(state, 0, 49.5, 40.0)
        place(state, 1, 150.0, 30.0)
        place(state, 3, 10.0, 50.0)
        sim.step(cfg, state, [LowAction.NO_OP] * 4)
        assert state.agents[0].is_tagged
        assert state.agents[2].cooldown_remaining_s == pytest.approx(
            cfg.tag_cooldown_s - cfg.dt)

    def test_no_tag_outside_radius(self, cfg):
        state = sim.reset(cfg, 0)
        place(state, 2, 40.0, 40.0)
        place(state, 0, 51.0, 40.0)
        sim.step(cfg, state, [LowAction.NO_OP] * 4)
        assert not state.agents[0].is_tagged

    def test_no_tag_during_cooldown(self, cfg):
        state = sim.reset(cfg, 0)
        place(state, 2, 40.0, 40.0, cooldown_remaining_s=12.0)
        place(state, 0, 45.0, 40.0)
        sim.step(cfg, state, [LowAction.NO_OP] * 4)
        assert not state.agents[0].is_tagged
        # cooldown is unaffected by proximity and keeps ticking down
        assert state.agents[2].cooldown_remaining_s == pytest.approx(12.0 - cfg.dt)

    def test_no_tag_on_opponent_side(self, cfg):
        state = sim.reset(cfg, 0)
        # both on the blue half: red cannot tag away from home
        place(state, 2, 100.0, 40.0)
        place(state, 0, 101.0, 40.0)
        sim.step(cfg, state, [LowAction.NO_OP] * 4)
        assert not state.agents[0].is_tagged

    def test_tagged_agent_returns_and_releases(self, cfg):
        state = sim.reset(cfg, 0)
        place(state, 0, 40.0, 40.0, is_tagged=True)
        hx, hy = sim.flag_home(cfg, Team.BLUE)
        last = math.hypot(40.0 - hx, 40.0 - hy)
        for _ in range(1500):
            if sim.is_terminal(cfg, state):
                break
            sim.step(cfg, state, [LowAction.NO_OP] * 4)
            a = state.agents[0]
            d = math.hypot(a.x - hx, a.y - hy)
            assert d <= last + 1e-6 or d <= cfg.grab_radius_m
            last = d
            if not a.is_tagged:
                break
        assert not state.agents[0].is_tagged
        assert math.hypot(state.agents[0].x - hx, state.agents[0].y - hy) <= cfg.grab_radius_m

    def test_grab_and_capture(self, cfg):
        state = sim.reset(cfg, 0)
        fx, fy = sim.flag_home(cfg, Team.RED)
        place(state, 0, fx + 5.0, fy)
        sim.step(cfg, state, [LowAction.NO_OP] * 4)
        assert state.agents[0].has_flag
        assert state.flag_taken_by[Team.RED] == 0
        # carry it home: drop the carrier on its own half and step once
        place(state, 0, cfg.width_m / 2.0 + 1.0, fy)
        sim.step(cfg, state, [LowAction.NO_OP] * 4)
        assert state.blue_captures == 1
        assert not state.agents[0].has_flag
        assert state.flag_taken_by[Team.RED] is None

    def test_taken_flag_cannot_be_grabbed(self, cfg):
        state = sim.reset(cfg, 0)
        fx, fy = sim.flag_home(cfg, Team.RED)
        place(state, 0, fx, fy)
        place(state, 1, fx + 3.0, fy)
        sim.step(cfg, state, [LowAction.NO_OP] * 4)
        carriers = [a.has_flag for a in state.agents[:2]]
        assert carriers.count(True) == 1

    def test_tag_strips_flag(self, cfg):
        state = sim.reset(cfg, 0)
        place(state, 0, 40.0, 40.0, has_flag=True)
        state.flag_taken_by[Team.RED] = 0
        place(state, 2, 41.0, 40.0)
        sim.step(cfg, state, [LowAction.NO_OP] * 4)
        assert state.agents[0].is_tagged
        assert not state.agents[0].has_flag
        assert state.flag_taken_by[Team.RED] is None

    def test_tagged_agent_never_carries(self, cfg):
        for state in random_game_states(cfg, seed=5, n_ticks=400):
            for a in state.agents:
                assert not (a.is_tagged and a.has_flag)

    def test_score_changes_at_most_one_per_tick(self, cfg):
        prev = None
        for state in random_game_states(cfg, seed=9, n_ticks=400):
            total = state.blue_captures + state.red_captures
            if prev is not None:
                assert 0 <= total - prev <= 1
            prev = total


class TestTermination:
    def test_time_limit(self, cfg):
        c = dataclasses.replace(cfg, max_time_s=2.0)
        state = sim.reset(c, 0)
        for _ in range(int(2.0 * c.tick_hz)):
            assert not sim.is_terminal(c, state)
            sim.step(c, state, [LowAction.NO_OP] * 4)
        assert sim.is_terminal(c, state)

    def test_capture_limit(self, cfg):
        c = dataclasses.replace(cfg, max_captures=1)
        state = sim.reset(c, 0)
        state.blue_captures = 1
        assert sim.is_terminal(c, state)

    def test_step_after_terminal_rejected(self, cfg):
        c = dataclasses.replace(cfg, max_captures=1)
        state = sim.reset(c, 0)
        state.red_captures = 1
        with pytest.raises(UsageError):
            sim.step(c, state, [LowAction.NO_OP] * 4)


class TestObserve:
    def test_size_and_bounds(self, cfg):
        n = sim.observation_size(cfg)
        for state in random_game_states(cfg, seed=2, n_ticks=200):
            for i in range(4):
                obs = sim.observe(cfg, state, i)
                assert obs.shape == (n,)
                assert np.all(obs >= -1.0) and np.all(obs <= 1.0)

    def test_bad_index(self, cfg):
        state = sim.reset(cfg, 0)
        with pytest.raises(UsageError):
            sim.observe(cfg, state, 4)

    def test_colocated_teammate_distance(self, cfg):
        state = sim.reset(cfg, 0)
        place(state, 0, 120.0, 40.0)
        place(state, 1, 120.0, 40.0)
        obs = sim.observe(cfg, state, 0)
        # teammate block follows the 5-entry ego block
        assert obs[5] == -1.0

    def test_fresh_score_entry_zero(self, cfg):
        state = sim.reset(cfg, 0)
        assert sim.observe(cfg, state, 0)[-1] == 0.0

    def test_mirror_symmetry(self, cfg):
        # mirroring relabels teams, so ego index i maps to i +/- team_size
        for state in random_game_states(cfg, seed=13, n_ticks=150)[::10]:
            flipped = sim.mirror_state(cfg, state)
            for i in range(4):
                np.testing.assert_allclose(sim.observe(cfg, state, i),
                                           sim.observe(cfg, flipped, (i + 2) % 4),
                                           atol=1e-9)


class TestGlobalState:
    def test_size(self, cfg):
        state = sim.reset(cfg, 0)
        v = sim.global_state_vector(cfg, state, Team.BLUE)
        assert v.shape == (sim.global_state_size(cfg),)
        assert sim.global_state_size(cfg) == 35

    def test_perspectives_agree_under_mirror(self, cfg):
        for state in random_game_states(cfg, seed=21, n_ticks=150)[::10]:
            flipped = sim.mirror_state(cfg, state)
            np.testing.assert_allclose(
                sim.global_state_vector(cfg, state, Team.RED),
                sim.global_state_vector(cfg, flipped, Team.BLUE), atol=1e-9)

    def test_mirror_involution(self, cfg):
        state = random_game_states(cfg, seed=8, n_ticks=90)[-1]
        assert states_equal(sim.mirror_state(cfg, sim.mirror_state(cfg, state)), state)

    def test_blue_perspective_fields(self, cfg):
        state = sim.reset(cfg, 0)
        state.blue_captures = 1
        v = sim.global_state_vector(cfg, state, Team.BLUE)
        assert v[-1] == pytest.approx(1.0 / sim.SCORE_DIFF_SCALE)
        assert v[-2] == -1.0 and v[-3] == -1.0
