"""Discrete-time 2-vs-2 maritime capture-the-flag simulator.

Agents are point vehicles with PID heading control and a first-order speed
response, stepped at a fixed tick rate.  Field frame: x in [0, width],
y in [0, height]; headings in degrees, 0 = +x, counter-clockwise positive,
wrapped to [-180, 180).  The blue side is the right half (x > width/2),
the red side the left half.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

from .config import FieldConfig
from .errors import ConfigError, UsageError

# heading controller gains (per-second) and limits
PID_KP = 2.0
PID_KD = 0.5
MAX_TURN_RATE_DPS = 90.0
SPEED_TAU_S = 1.0
# distance of a flag zone centre from its end wall
FLAG_INSET_M = 10.0
SPAWN_OFFSET_M = 10.0

# captures needed to saturate the score-difference channel of the global
# state; a fixed scale keeps single captures salient regardless of the
# episode's capture limit
SCORE_DIFF_SCALE = 2.0


class Team(IntEnum):
    BLUE = 0
    RED = 1

    @property
    def other(self) -> "Team":
        return Team(1 - self)


class LowAction(IntEnum):
    NO_OP = 0
    FORWARD_MAX = 1
    STEER_RIGHT_135 = 2
    STEER_LEFT_135 = 3


def wrap_deg(a: float) -> float:
    """Wrap an angle in degrees to [-180, 180)."""
    a = math.fmod(a + 180.0, 360.0)
    if a < 0:
        a += 360.0
    return a - 180.0


@dataclass
class AgentState:
    x: float
    y: float
    heading: float
    speed: float
    team: Team
    is_tagged: bool = False
    has_flag: bool = False
    cooldown_remaining_s: float = 0.0
    prev_heading_err: float = 0.0

    def pos(self):
        return self.x, self.y

    def copy(self) -> "AgentState":
        return AgentState(self.x, self.y, self.heading, self.speed, self.team,
                          self.is_tagged, self.has_flag,
                          self.cooldown_remaining_s, self.prev_heading_err)


@dataclass
class GameState:
    agents: list
    blue_captures: int = 0
    red_captures: int = 0
    tick: int = 0
    # flag_taken_by[t] = index of the agent currently carrying team t's flag
    flag_taken_by: list = field(default_factory=lambda: [None, None])

    def copy(self) -> "GameState":
        return GameState([a.copy() for a in self.agents], self.blue_captures,
                         self.red_captures, self.tick, list(self.flag_taken_by))

    def captures(self, team: Team) -> int:
        return self.blue_captures if team == Team.BLUE else self.red_captures


def flag_home(cfg: FieldConfig, team: Team):
    """Centre of a team's flag zone (blue on the right edge, red on the left)."""
    if team == Team.BLUE:
        return cfg.width_m - FLAG_INSET_M, cfg.height_m / 2.0
    return FLAG_INSET_M, cfg.height_m / 2.0


def on_own_side(cfg: FieldConfig, agent: AgentState) -> bool:
    cx = cfg.width_m / 2.0
    return agent.x >= cx if agent.team == Team.BLUE else agent.x <= cx


def team_indices(cfg: FieldConfig, team: Team):
    n = cfg.team_size
    return range(0, n) if team == Team.BLUE else range(n, 2 * n)


def reset(cfg: FieldConfig, seed: int) -> GameState:
    """Fresh game state with agents spawned at their flag zones.

    The layout is deterministic; the seed is recorded by callers for replay
    and reserved for future spawn jitter.
    """
    if not isinstance(cfg, FieldConfig):
        raise ConfigError("reset requires a FieldConfig")
    agents = []
    for team in (Team.BLUE, Team.RED):
        fx, fy = flag_home(cfg, team)
        facing = 180.0 if team == Team.BLUE else 0.0
        for k in range(cfg.team_size):
            off = (k - (cfg.team_size - 1) / 2.0) * 2.0 * SPAWN_OFFSET_M
            agents.append(AgentState(fx, fy + off, facing, 0.0, team))
    return GameState(agents=agents)


def is_terminal(cfg: FieldConfig, state: GameState) -> bool:
    if state.tick / cfg.tick_hz >= cfg.max_time_s:
        return True
    return state.blue_captures >= cfg.max_captures or state.red_captures >= cfg.max_captures


def _setpoint_for_action(agent: AgentState, action: LowAction, cfg: FieldConfig):
    if action == LowAction.NO_OP:
        return 0.0, agent.heading
    if action == LowAction.FORWARD_MAX:
        return cfg.max_speed_mps, agent.heading
    if action == LowAction.STEER_RIGHT_135:
        return cfg.max_speed_mps, wrap_deg(agent.heading - 135.0)
    if action == LowAction.STEER_LEFT_135:
        return cfg.max_speed_mps, wrap_deg(agent.heading + 135.0)
    raise UsageError(f"unknown action {action!r}")


def _advance_kinematics(cfg: FieldConfig, agent: AgentState, speed_des: float, heading_des: float):
    dt = cfg.dt
    err = wrap_deg(heading_des - agent.heading)
    derr = (err - agent.prev_heading_err) / dt
    rate = PID_KP * err + PID_KD * derr
    if rate > MAX_TURN_RATE_DPS:
        rate = MAX_TURN_RATE_DPS
    elif rate < -MAX_TURN_RATE_DPS:
        rate = -MAX_TURN_RATE_DPS
    agent.prev_heading_err = err
    agent.heading = wrap_deg(agent.heading + rate * dt)

    agent.speed += (dt / SPEED_TAU_S) * (speed_des - agent.speed)
    if agent.speed < 0.0:
        agent.speed = 0.0
    elif agent.speed > cfg.max_speed_mps:
        agent.speed = cfg.max_speed_mps

    h = math.radians(agent.heading)
    agent.x += agent.speed * math.cos(h) * dt
    agent.y += agent.speed * math.sin(h) * dt
    # field boundary is hard: positions clamp to the rectangle
    agent.x = min(max(agent.x, 0.0), cfg.width_m)
    agent.y = min(max(agent.y, 0.0), cfg.height_m)


def step(cfg: FieldConfig, state: GameState, actions) -> GameState:
    """Advance the game by one tick, mutating and returning `state`.

    Rule order: movement (tagged agents auto-return home), tags in fixed
    agent-index order, flag grabs, captures (at most one per tick), then
    cooldown decrement and clock advance.
    """
    if is_terminal(cfg, state):
        raise UsageError("cannot step a terminal game state")
    n = len(state.agents)
    if len(actions) != n:
        raise UsageError(f"expected {n} actions, got {len(actions)}")

    dt = cfg.dt
    for i, agent in enumerate(state.agents):
        if agent.is_tagged:
            hx, hy = flag_home(cfg, agent.team)
            heading_des = math.degrees(math.atan2(hy - agent.y, hx - agent.x))
            _advance_kinematics(cfg, agent, cfg.max_speed_mps, heading_des)
            if math.hypot(agent.x - hx, agent.y - hy) <= cfg.grab_radius_m:
                agent.is_tagged = False
        else:
            speed_des, heading_des = _setpoint_for_action(agent, LowAction(actions[i]), cfg)
            _advance_kinematics(cfg, agent, speed_des, heading_des)

    # tags: tagger on its own side with zero cooldown, victim off-side
    for i, tagger in enumerate(state.agents):
        if tagger.is_tagged or tagger.cooldown_remaining_s > 0.0:
            continue
        if not on_own_side(cfg, tagger):
            continue
        for j, victim in enumerate(state.agents):
            if victim.team == tagger.team or victim.is_tagged:
                continue
            if on_own_side(cfg, victim):
                continue
            if math.hypot(tagger.x - victim.x, tagger.y - victim.y) > cfg.tag_radius_m:
                continue
            victim.is_tagged = True
            if victim.has_flag:
                victim.has_flag = False
                state.flag_taken_by[tagger.team] = None
            tagger.cooldown_remaining_s = cfg.tag_cooldown_s
            break  # one tag per tagger per tick

    # flag grabs: untagged agent inside the opposing grab zone takes a free flag
    for i, agent in enumerate(state.agents):
        if agent.is_tagged or agent.has_flag:
            continue
        enemy = agent.team.other
        if state.flag_taken_by[enemy] is not None:
            continue
        fx, fy = flag_home(cfg, enemy)
        if math.hypot(agent.x - fx, agent.y - fy) <= cfg.grab_radius_m:
            agent.has_flag = True
            state.flag_taken_by[enemy] = i

    # captures: a carrier back on its own side scores; at most one per tick
    for i, agent in enumerate(state.agents):
        if not agent.has_flag or not on_own_side(cfg, agent):
            continue
        agent.has_flag = False
        state.flag_taken_by[agent.team.other] = None
        if agent.team == Team.BLUE:
            state.blue_captures += 1
        else:
            state.red_captures += 1
        break

    for agent in state.agents:
        if agent.cooldown_remaining_s > 0.0:
            agent.cooldown_remaining_s = max(0.0, agent.cooldown_remaining_s - dt)
    state.tick += 1
    return state


# ---------------------------------------------------------------------------
# observations

def _norm_dist(d: float, diag: float) -> float:
    v = 2.0 * d / diag - 1.0
    return min(max(v, -1.0), 1.0)


def _flag_sign(b: bool) -> float:
    return 1.0 if b else -1.0


def attack_direction_deg(team: Team) -> float:
    """Direction of attack: blue advances toward -x, red toward +x."""
    return 180.0 if team == Team.BLUE else 0.0


def observation_size(cfg: FieldConfig) -> int:
    return 5 * 2 * cfg.team_size + 4 + 8 + 1


def observe(cfg: FieldConfig, state: GameState, agent_index: int) -> np.ndarray:
    """Ego-centric normalized observation vector, every entry in [-1, 1].

    Layout: ego then teammates then opponents (index order), 5 entries each
    (distance, bearing, tagged, on-side, has-flag); own and opposing flag
    (distance, bearing); own-end wall, opponent-end wall, left-of-attack
    wall, right-of-attack wall (distance, bearing); capture difference.
    """
    if not (0 <= agent_index < len(state.agents)):
        raise UsageError(f"invalid agent index {agent_index}")
    ego = state.agents[agent_index]
    diag = cfg.diag
    out = []

    def rel(px: float, py: float):
        d = math.hypot(px - ego.x, py - ego.y)
        if d < 1e-12:
            return -1.0, 0.0
        bearing = wrap_deg(math.degrees(math.atan2(py - ego.y, px - ego.x)) - ego.heading)
        return _norm_dist(d, diag), bearing / 180.0

    def agent_block(a: AgentState):
        d, b = rel(a.x, a.y)
        out.extend((d, b, _flag_sign(a.is_tagged), _flag_sign(on_own_side(cfg, a)),
                    _flag_sign(a.has_flag)))

    agent_block(ego)
    mates = [a for k, a in enumerate(state.agents)
             if a.team == ego.team and k != agent_index]
    opps = [a for a in state.agents if a.team != ego.team]
    for a in mates + opps:
        agent_block(a)

    for team in (ego.team, ego.team.other):
        fx, fy = flag_home(cfg, team)
        out.extend(rel(fx, fy))

    # walls, team-canonical order; bearing is toward the perpendicular foot
    own_wall_x = cfg.width_m if ego.team == Team.BLUE else 0.0
    opp_wall_x = cfg.width_m - own_wall_x
    left_wall_y = 0.0 if ego.team == Team.BLUE else cfg.height_m
    right_wall_y = cfg.height_m - left_wall_y
    for px, py in ((own_wall_x, ego.y), (opp_wall_x, ego.y),
                   (ego.x, left_wall_y), (ego.x, right_wall_y)):
        d = math.hypot(px - ego.x, py - ego.y)
        if d < 1e-12:
            out.extend((-1.0, 0.0))
        else:
            out.extend(rel(px, py))

    diff = (state.captures(ego.team) - state.captures(ego.team.other)) / cfg.max_captures
    out.append(min(max(diff, -1.0), 1.0))
    return np.asarray(out, dtype=np.float64)


def global_state_size(cfg: FieldConfig) -> int:
    return 8 * 2 * cfg.team_size + 2 + 1


def global_state_vector(cfg: FieldConfig, state: GameState, perspective: Team) -> np.ndarray:
    """Full-state vector in the perspective team's canonical frame.

    The red perspective is rotated 180 degrees about the field centre so both
    teams see the game as if they were blue.  Layout per agent (perspective
    team first, index order): x, y, heading, speed, tagged, on-side,
    has-flag, cooldown; then own/opposing flag-taken flags and the
    normalized capture difference.
    """
    flip = perspective == Team.RED
    out = []
    order = list(team_indices(cfg, perspective)) + list(team_indices(cfg, perspective.other))
    for i in order:
        a = state.agents[i]
        x, y, h = a.x, a.y, a.heading
        if flip:
            x, y, h = cfg.width_m - x, cfg.height_m - y, wrap_deg(h + 180.0)
        out.extend((2.0 * x / cfg.width_m - 1.0,
                    2.0 * y / cfg.height_m - 1.0,
                    h / 180.0,
                    a.speed / cfg.max_speed_mps,
                    _flag_sign(a.is_tagged),
                    _flag_sign(on_own_side(cfg, a)),
                    _flag_sign(a.has_flag),
                    a.cooldown_remaining_s / cfg.tag_cooldown_s))
    out.append(_flag_sign(state.flag_taken_by[perspective] is not None))
    out.append(_flag_sign(state.flag_taken_by[perspective.other] is not None))
    diff = (state.captures(perspective) - state.captures(perspective.other)) / SCORE_DIFF_SCALE
    out.append(min(max(diff, -1.0), 1.0))
    return np.asarray(out, dtype=np.float64)


def mirror_state(cfg: FieldConfig, state: GameState) -> GameState:
    """Team-swapped state: rotate 180 degrees about the field centre and
    relabel teams, scores and flag possession accordingly."""
    n = cfg.team_size
    agents = []
    order = list(range(n, 2 * n)) + list(range(0, n))
    for i in order:
        a = state.agents[i].copy()
        a.x = cfg.width_m - a.x
        a.y = cfg.height_m - a.y
        a.heading = wrap_deg(a.heading + 180.0)
        a.team = a.team.other
        agents.append(a)
    remap = {old: new for new, old in enumerate(order)}
    taken = [state.flag_taken_by[Team.RED], state.flag_taken_by[Team.BLUE]]
    taken = [remap[i] if i is not None else None for i in taken]
    return GameState(agents=agents, blue_captures=state.red_captures,
                     red_captures=state.blue_captures, tick=state.tick,
                     flag_taken_by=taken)
