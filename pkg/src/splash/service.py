"""Live demo-collection service.

Hosts one game session at a time over a websocket: streams state messages
at the configured wall-clock pace, applies option commands from the client
to the blue agents (sticky per agent until changed), runs the heuristic
opponent on red, and writes a cloning-ready trajectory file when the
episode ends.
"""

import asyncio
import dataclasses
import json
import os

import numpy as np
from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from . import sim
from . import trajectory as tj
from .config import FieldConfig, PipelineConfig
from .errors import UsageError
from .options import N_OPTIONS, OptionId, heuristic_opponent, run_primitive

DEFAULT_OPTION = OptionId.NO_OP


def _team_name(team: sim.Team) -> str:
    return "blue" if team == sim.Team.BLUE else "red"


class DemoSession:
    """One recorded game: blue follows sticky client options, red runs the
    heuristic opponent."""

    def __init__(self, cfg: PipelineConfig, seed: int):
        self.cfg = cfg
        self.field = dataclasses.replace(cfg.field,
                                         max_time_s=cfg.train.demo_max_time_s,
                                         max_captures=cfg.train.demo_max_captures)
        self.seed = seed
        self.state = sim.reset(self.field, seed)
        self.blue = list(sim.team_indices(self.field, sim.Team.BLUE))
        self.red = list(sim.team_indices(self.field, sim.Team.RED))
        self.options = {i: DEFAULT_OPTION for i in self.blue}
        self._globals = []
        self._obs = []
        self._opts = []
        self._acts = []
        self._blue_caps = []
        self._red_caps = []

    @property
    def done(self) -> bool:
        return sim.is_terminal(self.field, self.state)

    def set_option(self, agent_id: int, option: int) -> None:
        if agent_id not in self.blue:
            raise UsageError(f"agent {agent_id} is not a controllable blue agent")
        if not (0 <= int(option) < N_OPTIONS):
            raise UsageError(f"unknown option {option}")
        self.options[agent_id] = OptionId(int(option))

    def tick(self) -> None:
        """Advance one simulation step under the current sticky options."""
        if self.done:
            raise UsageError("session episode already ended")
        self._globals.append(np.asarray(
            sim.global_state_vector(self.field, self.state, sim.Team.BLUE),
            dtype=np.float32))
        self._obs.append(np.stack([
            np.asarray(sim.observe(self.field, self.state, i), dtype=np.float32)
            for i in self.blue]))
        actions = [sim.LowAction.NO_OP] * len(self.state.agents)
        step_opts, step_acts = [], []
        for i in self.blue:
            opt = self.options[i]
            actions[i] = run_primitive(self.field, opt, self.state, i)
            step_opts.append(int(opt))
            step_acts.append(int(actions[i]))
        for i in self.red:
            actions[i] = heuristic_opponent(self.field, self.state, i)
        prev_b, prev_r = self.state.blue_captures, self.state.red_captures
        sim.step(self.field, self.state, actions)
        if self.state.blue_captures > prev_b:
            self._blue_caps.append(self.state.tick)
        if self.state.red_captures > prev_r:
            self._red_caps.append(self.state.tick)
        self._opts.append(np.asarray(step_opts, dtype=np.int8))
        self._acts.append(np.asarray(step_acts, dtype=np.int8))

    def state_message(self) -> dict:
        agents = []
        for i, a in enumerate(self.state.agents):
            agents.append({
                "id": i, "team": _team_name(a.team),
                "x": round(a.x, 3), "y": round(a.y, 3),
                "heading": round(a.heading, 3),
                "tagged": a.is_tagged, "has_flag": a.has_flag,
                "cooldown": round(a.cooldown_remaining_s, 3),
            })
        flags = {}
        for team in (sim.Team.BLUE, sim.Team.RED):
            hx, hy = sim.flag_home(self.field, team)
            flags[_team_name(team)] = {
                "x": hx, "y": hy,
                "taken": self.state.flag_taken_by[team] is not None,
            }
        return {
            "type": "state",
            "tick": self.state.tick,
            "agents": agents,
            "flags": flags,
            "score": {"blue": self.state.blue_captures,
                      "red": self.state.red_captures},
            "options_active": {str(i): int(self.options[i]) for i in self.blue},
        }

    def to_trajectory(self) -> tj.Trajectory:
        if not self.done:
            raise UsageError("episode still running")
        globals_ = self._globals + [np.asarray(
            sim.global_state_vector(self.field, self.state, sim.Team.BLUE),
            dtype=np.float32)]
        eta = self.state.blue_captures - self.state.red_captures
        return tj.Trajectory(
            source="demo", eps=None, eta=eta, psi=int(np.sign(eta)),
            seed=self.seed, global_states=np.stack(globals_),
            opts=np.stack(self._opts), acts=np.stack(self._acts),
            obs=np.stack(self._obs),
            blue_cap_ticks=self._blue_caps, red_cap_ticks=self._red_caps)

    def save(self, out_dir: str, config_hash: str) -> str:
        os.makedirs(out_dir, exist_ok=True)
        path = os.path.join(out_dir, f"demo_session_{self.seed}.jsonl")
        tj.save_trajectories(path, [self.to_trajectory()], config_hash)
        return path


def replay_demo(field: FieldConfig, traj: tj.Trajectory,
                max_time_s: float | None = None,
                max_captures: int | None = None) -> int:
    """Re-simulate a recorded session from its seed and option stream and
    return the resulting score difference."""
    if traj.opts is None:
        raise UsageError("trajectory carries no option stream")
    if max_time_s is not None or max_captures is not None:
        field = dataclasses.replace(
            field,
            max_time_s=max_time_s if max_time_s is not None else field.max_time_s,
            max_captures=max_captures if max_captures is not None else field.max_captures)
    state = sim.reset(field, traj.seed)
    blue = list(sim.team_indices(field, sim.Team.BLUE))
    red = list(sim.team_indices(field, sim.Team.RED))
    for t in range(traj.opts.shape[0]):
        if sim.is_terminal(field, state):
            break
        actions = [sim.LowAction.NO_OP] * len(state.agents)
        for k, i in enumerate(blue):
            actions[i] = run_primitive(field, OptionId(int(traj.opts[t, k])),
                                       state, i)
        for i in red:
            actions[i] = heuristic_opponent(field, state, i)
        sim.step(field, state, actions)
    return state.blue_captures - state.red_captures


# ---------------------------------------------------------------------------
# websocket app

_DISCONNECT = object()


async def _reader(ws: WebSocket, inbox: asyncio.Queue) -> None:
    try:
        while True:
            await inbox.put(await ws.receive_text())
    except WebSocketDisconnect:
        await inbox.put(_DISCONNECT)


def build_app(cfg: PipelineConfig) -> FastAPI:
    app = FastAPI()
    app.state.cfg = cfg
    app.state.busy = False
    app.state.session = None       # persists across disconnects (pause)
    app.state.session_count = 0

    @app.websocket("/ws")
    async def endpoint(ws: WebSocket):
        await ws.accept()
        if app.state.busy:
            await ws.send_json({"type": "error", "error": "session busy"})
            await ws.close(code=1013, reason="session busy")
            return
        app.state.busy = True
        try:
            await _session_loop(app, ws)
        except WebSocketDisconnect:
            pass                   # client gone: leave the session paused
        finally:
            app.state.busy = False

    return app


def _new_session(app) -> DemoSession:
    cfg = app.state.cfg
    session = DemoSession(cfg, cfg.seed + app.state.session_count)
    app.state.session_count += 1
    return session


def _handle(app, session: DemoSession | None, msg: dict):
    """Apply one client message; returns (session, running_delta) where
    running_delta is True/False to change the run state or None to keep it."""
    kind = msg.get("type")
    if kind == "option":
        if session is None:
            raise UsageError("no active session; send control start first")
        session.set_option(int(msg["agent_id"]), int(msg["option"]))
        return session, None
    if kind == "control":
        cmd = msg.get("cmd")
        if cmd == "start":
            return session or _new_session(app), True
        if cmd == "pause":
            return session, False
        if cmd == "reset":
            return _new_session(app), False
        raise UsageError(f"unknown control command {cmd!r}")
    raise UsageError(f"unknown message type {kind!r}")


async def _session_loop(app, ws: WebSocket) -> None:
    cfg = app.state.cfg
    rtf = cfg.real_time_factor
    pace = (1.0 / (cfg.field.tick_hz * rtf)) if rtf > 0 else 0.0
    inbox: asyncio.Queue = asyncio.Queue()
    reader = asyncio.create_task(_reader(ws, inbox))
    running = False
    try:
        while True:
            # drain pending messages; block while paused
            while not inbox.empty() or not running:
                raw = await inbox.get()
                if raw is _DISCONNECT:
                    raise WebSocketDisconnect(1006)
                try:
                    session, delta = _handle(app, app.state.session,
                                             json.loads(raw))
                    app.state.session = session
                    if delta is not None:
                        running = delta
                except (UsageError, KeyError, ValueError, TypeError) as exc:
                    await ws.send_json({"type": "error", "error": str(exc)})
            session = app.state.session
            session.tick()
            await ws.send_json(session.state_message())
            if session.done:
                traj = session.to_trajectory()
                path = session.save(cfg.resolve_out_dir(), cfg.config_hash())
                await ws.send_json({"type": "end", "eta": traj.eta,
                                    "psi": traj.psi, "file": path})
                app.state.session = None
                running = False
            elif pace:
                await asyncio.sleep(pace)
            else:
                await asyncio.sleep(0)
    finally:
        reader.cancel()


def serve(cfg: PipelineConfig, port: int) -> None:
    import uvicorn
    uvicorn.run(build_app(cfg), host="0.0.0.0", port=port)
