"""Behavioral primitives, noised option selection and baseline controllers.

Every primitive maps (state, agent) to a speed/heading setpoint which is
then quantized to the nearest low-level action.  The policy-over-options is
re-evaluated every tick, so option switching is a per-step gating decision.
"""

from __future__ import annotations

import math
from enum import IntEnum

import numpy as np

from .config import FieldConfig
from .errors import UsageError
from .sim import (AgentState, GameState, LowAction, Team, flag_home,
                  on_own_side, team_indices, wrap_deg)

# quantization boundary: midpoint between the forward (0 deg) and the
# +-135 deg steering setpoints
QUANT_DEG = 67.5

# scripted-demonstrator / heuristic geometry
GUARD_FRACTION = 0.3
GUARD_DEFAULT_STANDOFF_M = 15.0
TAG_TRIGGER_RADIUS_M = 18.0
DEFEND_RADIUS_M = 28.0
FLANK_INSET_M = 8.0
FLANK_CORNER_TOL_M = 12.0
FLANK_HOLD_TOL_M = 15.0
RETREAT_MARGIN_M = 12.0
REPULSE_RADIUS_M = 20.0
REPULSE_GAIN = 1.5
ATTACK_CLEAR_MARGIN_M = 10.0
WALL_REPULSE_M = 12.0
WALL_REPULSE_GAIN = 1.0


class OptionId(IntEnum):
    ATTACK = 0
    FLANK = 1
    AVOID = 2
    RETREAT = 3
    GUARD = 4
    TAG = 5
    NO_OP = 6


N_OPTIONS = len(OptionId)
N_ACTIONS = len(LowAction)


def _bearing_to(agent: AgentState, x: float, y: float) -> float:
    return math.degrees(math.atan2(y - agent.y, x - agent.x))


def quantize_setpoint(agent: AgentState, speed_des: float, heading_des: float) -> LowAction:
    """Map a (speed, heading) setpoint to the nearest low-level action."""
    if speed_des <= 1e-9:
        return LowAction.NO_OP
    rel = wrap_deg(heading_des - agent.heading)
    if abs(rel) < QUANT_DEG:
        return LowAction.FORWARD_MAX
    return LowAction.STEER_LEFT_135 if rel >= 0.0 else LowAction.STEER_RIGHT_135


def _opponents(cfg: FieldConfig, state: GameState, team: Team):
    return [(i, state.agents[i]) for i in team_indices(cfg, team.other)]


def _nearest_untagged_opponent(cfg, state, agent):
    best = None
    best_d = math.inf
    for _, opp in _opponents(cfg, state, agent.team):
        if opp.is_tagged:
            continue
        d = math.hypot(opp.x - agent.x, opp.y - agent.y)
        if d < best_d:
            best, best_d = opp, d
    return best, best_d


def _opponent_nearest_flag(cfg, state, team: Team, untagged_only=True):
    """Opponent closest to `team`'s flag, with its distance to the flag."""
    fx, fy = flag_home(cfg, team)
    best = None
    best_d = math.inf
    for _, opp in _opponents(cfg, state, team):
        if untagged_only and opp.is_tagged:
            continue
        d = math.hypot(opp.x - fx, opp.y - fy)
        if d < best_d:
            best, best_d = opp, d
    return best, best_d


def primitive_setpoint(cfg: FieldConfig, state: GameState, agent_index: int,
                       option: OptionId):
    """Desired (speed, heading) for one behavioral primitive."""
    agent = state.agents[agent_index]
    vmax = cfg.max_speed_mps
    option = OptionId(option)

    if option == OptionId.NO_OP:
        return 0.0, agent.heading

    if option == OptionId.ATTACK:
        fx, fy = flag_home(cfg, agent.team.other)
        return vmax, _bearing_to(agent, fx, fy)

    if option == OptionId.FLANK:
        # along the nearer long boundary to the corner on the opponent side,
        # then cut in to the flag zone
        fx, fy = flag_home(cfg, agent.team.other)
        wall_y = FLANK_INSET_M if agent.y < cfg.height_m / 2.0 else cfg.height_m - FLANK_INSET_M
        corner_x = FLANK_INSET_M if agent.team == Team.BLUE else cfg.width_m - FLANK_INSET_M
        if math.hypot(agent.x - corner_x, agent.y - wall_y) <= FLANK_CORNER_TOL_M:
            return vmax, _bearing_to(agent, fx, fy)
        return vmax, _bearing_to(agent, corner_x, wall_y)

    if option == OptionId.AVOID:
        opp, d = _nearest_untagged_opponent(cfg, state, agent)
        if opp is None:
            return 0.0, agent.heading
        return vmax, _bearing_to(agent, 2.0 * agent.x - opp.x, 2.0 * agent.y - opp.y)

    if option == OptionId.RETREAT:
        cx = cfg.width_m / 2.0
        if on_own_side(cfg, agent):
            fx, fy = flag_home(cfg, agent.team)
            return vmax, _bearing_to(agent, fx, fy)
        tx = cx + RETREAT_MARGIN_M if agent.team == Team.BLUE else cx - RETREAT_MARGIN_M
        return vmax, _bearing_to(agent, tx, agent.y)

    if option == OptionId.GUARD:
        fx, fy = flag_home(cfg, agent.team)
        threat, _ = _opponent_nearest_flag(cfg, state, agent.team)
        if threat is None:
            # no live threat: hold a default post toward mid-field
            direction = -1.0 if agent.team == Team.BLUE else 1.0
            tx, ty = fx + direction * GUARD_DEFAULT_STANDOFF_M, fy
        else:
            dx, dy = threat.x - fx, threat.y - fy
            tx, ty = fx + GUARD_FRACTION * dx, fy + GUARD_FRACTION * dy
        if math.hypot(agent.x - tx, agent.y - ty) <= 2.0:
            return 0.0, agent.heading
        return vmax, _bearing_to(agent, tx, ty)

    if option == OptionId.TAG:
        target, _ = _opponent_nearest_flag(cfg, state, agent.team)
        if target is None:
            target, _ = _opponent_nearest_flag(cfg, state, agent.team, untagged_only=False)
        return vmax, _bearing_to(agent, target.x, target.y)

    raise UsageError(f"unknown option {option!r}")


def run_primitive(cfg: FieldConfig, option: OptionId, state: GameState,
                  agent_index: int) -> LowAction:
    if not (0 <= agent_index < len(state.agents)):
        raise UsageError(f"invalid agent index {agent_index}")
    speed_des, heading_des = primitive_setpoint(cfg, state, agent_index, option)
    return quantize_setpoint(state.agents[agent_index], speed_des, heading_des)


# ---------------------------------------------------------------------------
# noised policies

def noisy_policy_over_options(bc_policy, state_vec: np.ndarray, epsilon: float,
                              rng: np.random.Generator) -> OptionId:
    """Epsilon-mixture over options: the BC argmax keeps probability
    1 - eps + eps/|options|, every other option gets eps/|options|."""
    if not (0.0 <= epsilon <= 1.0):
        raise UsageError("epsilon must lie in [0, 1]")
    if epsilon > 0.0 and rng.random() < epsilon:
        return OptionId(rng.integers(N_OPTIONS))
    probs = bc_policy.forward(state_vec)
    return OptionId(int(np.argmax(probs)))


def epsilon_greedy_low_level(bc_action_policy, state_vec: np.ndarray,
                             epsilon: float, rng: np.random.Generator) -> LowAction:
    if not (0.0 <= epsilon <= 1.0):
        raise UsageError("epsilon must lie in [0, 1]")
    if epsilon > 0.0 and rng.random() < epsilon:
        return LowAction(rng.integers(N_ACTIONS))
    probs = bc_action_policy.forward(state_vec)
    return LowAction(int(np.argmax(probs)))


# ---------------------------------------------------------------------------
# baseline opponent

def heuristic_opponent(cfg: FieldConfig, state: GameState, agent_index: int) -> LowAction:
    """Potential-field baseline: attack the opposing flag, defend when an
    intruder nears the team flag, retreat home when carrying."""
    agent = state.agents[agent_index]
    team = agent.team

    if agent.has_flag:
        tx, ty = flag_home(cfg, team)
    else:
        tx, ty = None, None
        intruder, d_flag = _opponent_nearest_flag(cfg, state, team)
        if intruder is not None and d_flag <= DEFEND_RADIUS_M and not on_own_side(cfg, intruder):
            # the nearest on-side teammate peels off to defend; agents already
            # committed to an attack on the other half do not turn back
            defender = min(
                (i for i in team_indices(cfg, team)
                 if not state.agents[i].is_tagged and on_own_side(cfg, state.agents[i])),
                key=lambda i: math.hypot(intruder.x - state.agents[i].x,
                                         intruder.y - state.agents[i].y),
                default=None,
            )
            if defender == agent_index:
                tx, ty = intruder.x, intruder.y
        if tx is None:
            tx, ty = flag_home(cfg, team.other)

    d = math.hypot(tx - agent.x, ty - agent.y)
    if d < 1e-9:
        return LowAction.NO_OP
    vx, vy = (tx - agent.x) / d, (ty - agent.y) / d

    # repulsion from opponents that could tag us (untagged, on their own side)
    for _, opp in _opponents(cfg, state, team):
        if opp.is_tagged or not on_own_side(cfg, opp):
            continue
        dx, dy = agent.x - opp.x, agent.y - opp.y
        dd = math.hypot(dx, dy)
        if dd < 1e-9 or dd > REPULSE_RADIUS_M:
            continue
        w = REPULSE_GAIN * (REPULSE_RADIUS_M - dd) / REPULSE_RADIUS_M
        vx += w * dx / dd
        vy += w * dy / dd

    # keep clear of the boundary: quantized steering tracks a bearing with up
    # to the quantization threshold of heading error, and the position clamp
    # at the walls would otherwise trap that offset pursuit in a corner
    for dist, nx, ny in ((agent.x, 1.0, 0.0), (cfg.width_m - agent.x, -1.0, 0.0),
                         (agent.y, 0.0, 1.0), (cfg.height_m - agent.y, 0.0, -1.0)):
        if dist < WALL_REPULSE_M:
            w = WALL_REPULSE_GAIN * (WALL_REPULSE_M - dist) / WALL_REPULSE_M
            vx += w * nx
            vy += w * ny

    heading_des = math.degrees(math.atan2(vy, vx))
    return quantize_setpoint(agent, cfg.max_speed_mps, heading_des)


# ---------------------------------------------------------------------------
# scripted demonstrator

def scripted_demonstrator(cfg: FieldConfig, state: GameState, agent_index: int,
                          skill: float, rng: np.random.Generator) -> OptionId:
    """Synthetic stand-in for a human demonstrator.

    The lower-indexed teammate defends (guard, switching to tag when an
    opponent nears the flag); the higher-indexed one flanks toward a post
    near the far corner, attacks whenever no live defender could win the
    race to the flag, and retreats with it.  With probability 1 - skill
    the decision is replaced by a uniformly random non-optimal option.
    """
    if not (0.0 <= skill <= 1.0):
        raise UsageError("skill must lie in [0, 1]")
    agent = state.agents[agent_index]
    team = agent.team
    mates = list(team_indices(cfg, team))
    if len(mates) != 2:
        raise UsageError("scripted demonstrator assumes two-agent teams")
    role_defender = agent_index == mates[0]

    if role_defender:
        _, d_flag = _opponent_nearest_flag(cfg, state, team)
        choice = OptionId.TAG if d_flag <= TAG_TRIGGER_RADIUS_M else OptionId.GUARD
    else:
        if agent.has_flag:
            choice = OptionId.RETREAT
        else:
            # a live opponent on its own side at comparable flag distance
            # can win the race and intercept; otherwise the path is clear
            fx, fy = flag_home(cfg, team.other)
            d_me = math.hypot(agent.x - fx, agent.y - fy)
            blocked = any(
                not opp.is_tagged and on_own_side(cfg, opp)
                and math.hypot(opp.x - fx, opp.y - fy) <= d_me + ATTACK_CLEAR_MARGIN_M
                for _, opp in _opponents(cfg, state, team)
            )
            if not blocked:
                choice = OptionId.ATTACK
            else:
                # hold at the flanking post until the path clears
                wall_y = FLANK_INSET_M if agent.y < cfg.height_m / 2.0 else cfg.height_m - FLANK_INSET_M
                corner_x = FLANK_INSET_M if team == Team.BLUE else cfg.width_m - FLANK_INSET_M
                at_post = math.hypot(agent.x - corner_x, agent.y - wall_y) <= FLANK_HOLD_TOL_M
                choice = OptionId.NO_OP if at_post else OptionId.FLANK
    if skill < 1.0 and rng.random() >= skill:
        others = [o for o in OptionId if o != choice]
        choice = others[rng.integers(len(others))]
    return choice
