"""Rollout generation, trajectory labeling, pairing and persistence.

A trajectory stores the per-tick blue-perspective global state vectors
(states s_0 .. s_T, so the terminal state is always present), optional
per-blue-agent observations and option/action labels (length T), and
episode metadata: noise level or source tag, score eta = blue - red
captures, success psi = sign(eta), seed and capture tick lists.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
import os

import numpy as np

from .config import FieldConfig, TrainConfig
from .errors import UsageError
from . import sim
from .sim import GameState, LowAction, Team
from . import options as opt
from .options import OptionId

NOOP_RANK = math.inf   # no-op rollouts rank beneath the noisiest bin


@dataclasses.dataclass
class Trajectory:
    source: str                 # "noise" | "noop" | "demo"
    eps: float | None
    eta: int
    psi: int
    seed: int
    global_states: np.ndarray   # (T+1, D) float32, blue perspective
    opts: np.ndarray | None = None   # (T, team_size) int8 option labels
    acts: np.ndarray | None = None   # (T, team_size) int8 low-action labels
    obs: np.ndarray | None = None    # (T, team_size, D_obs) float32
    blue_cap_ticks: list = dataclasses.field(default_factory=list)
    red_cap_ticks: list = dataclasses.field(default_factory=list)

    @property
    def length(self) -> int:
        return self.global_states.shape[0]

    @property
    def traj_id(self) -> str:
        return f"{self.source}:{self.seed}"

    def rank(self) -> float:
        """Lower is better: noise level, with no-op past the noisiest bin."""
        return NOOP_RANK if self.source == "noop" else float(self.eps)


# ---------------------------------------------------------------------------
# controllers

class OptionPolicyController:
    """Per-agent controller that picks an option each tick and executes it."""

    def __init__(self, select_fn):
        self.select_fn = select_fn  # (cfg, state, idx, rng) -> OptionId

    def act(self, cfg, state, idx, rng):
        option = self.select_fn(cfg, state, idx, rng)
        return option, opt.run_primitive(cfg, option, state, idx)


class ActionPolicyController:
    """Per-agent controller emitting low-level actions directly."""

    def __init__(self, select_fn):
        self.select_fn = select_fn  # (cfg, state, idx, rng) -> LowAction

    def act(self, cfg, state, idx, rng):
        return None, self.select_fn(cfg, state, idx, rng)


def bc_option_controller(policy, epsilon: float = 0.0) -> OptionPolicyController:
    def select(cfg, state, idx, rng):
        return opt.noisy_policy_over_options(policy, sim.observe(cfg, state, idx),
                                             epsilon, rng)
    return OptionPolicyController(select)


def bc_action_controller(policy, epsilon: float = 0.0) -> ActionPolicyController:
    def select(cfg, state, idx, rng):
        return opt.epsilon_greedy_low_level(policy, sim.observe(cfg, state, idx),
                                            epsilon, rng)
    return ActionPolicyController(select)


def scripted_controller(skill: float) -> OptionPolicyController:
    def select(cfg, state, idx, rng):
        return opt.scripted_demonstrator(cfg, state, idx, skill, rng)
    return OptionPolicyController(select)


def noop_controller() -> OptionPolicyController:
    return OptionPolicyController(lambda cfg, state, idx, rng: OptionId.NO_OP)


def heuristic_controller() -> ActionPolicyController:
    return ActionPolicyController(lambda cfg, state, idx, rng: opt.heuristic_opponent(cfg, state, idx))


# ---------------------------------------------------------------------------
# game runner

def play_game(cfg: FieldConfig, blue: object, red: object, seed: int, *,
              source: str = "noise", eps: float | None = None,
              record_obs: bool = False, record_opts: bool = True,
              perspective: Team = Team.BLUE) -> Trajectory:
    """Run one headless episode and return its recorded trajectory.

    `blue` and `red` are per-agent controllers applied to every agent of
    their team.  Option/action labels and observations are recorded for the
    perspective team only.
    """
    state = sim.reset(cfg, seed)
    rng = np.random.default_rng(seed)
    n = cfg.team_size
    mine = list(sim.team_indices(cfg, perspective))
    theirs = list(sim.team_indices(cfg, perspective.other))

    globals_, opts_, acts_, obs_ = [], [], [], []
    blue_caps, red_caps = [], []

    while not sim.is_terminal(cfg, state):
        globals_.append(np.asarray(
            sim.global_state_vector(cfg, state, perspective), dtype=np.float32))
        if record_obs:
            obs_.append(np.stack([
                np.asarray(sim.observe(cfg, state, i), dtype=np.float32) for i in mine]))

        actions = [LowAction.NO_OP] * (2 * n)
        step_opts = np.zeros(n, dtype=np.int8)
        step_acts = np.zeros(n, dtype=np.int8)
        for k, i in enumerate(mine):
            o, a = blue.act(cfg, state, i, rng)
            actions[i] = a
            step_acts[k] = int(a)
            step_opts[k] = int(o) if o is not None else -1
        for i in theirs:
            _, a = red.act(cfg, state, i, rng)
            actions[i] = a
        prev_b, prev_r = state.blue_captures, state.red_captures
        sim.step(cfg, state, actions)
        if state.blue_captures > prev_b:
            blue_caps.append(state.tick)
        if state.red_captures > prev_r:
            red_caps.append(state.tick)
        if record_opts:
            opts_.append(step_opts)
        acts_.append(step_acts)

    globals_.append(np.asarray(
        sim.global_state_vector(cfg, state, perspective), dtype=np.float32))

    mine_caps = state.captures(perspective)
    their_caps = state.captures(perspective.other)
    eta = mine_caps - their_caps
    return Trajectory(
        source=source, eps=eps, eta=eta, psi=int(np.sign(eta)), seed=seed,
        global_states=np.stack(globals_),
        opts=np.stack(opts_) if record_opts and opts_ else None,
        acts=np.stack(acts_) if acts_ else None,
        obs=np.stack(obs_) if record_obs and obs_ else None,
        blue_cap_ticks=blue_caps, red_cap_ticks=red_caps)


def _rollout_field_cfg(cfg: FieldConfig, tcfg: TrainConfig) -> FieldConfig:
    return dataclasses.replace(cfg, max_time_s=tcfg.rollout_max_time_s,
                               max_captures=tcfg.rollout_max_captures)


def spawn_seeds(seed: int, n: int) -> list:
    ss = np.random.SeedSequence(seed)
    return [int(s.generate_state(1)[0] % (2 ** 31)) for s in ss.spawn(n)]


def generate_rollouts(bc_policy, schedule, M: int, cfg: FieldConfig,
                      tcfg: TrainConfig, seed: int, *,
                      include_noop: bool = True) -> list:
    """M noised rollouts per noise level plus M no-op rollouts, all against
    the heuristic opponent, under the rollout episode limits."""
    if M < 1:
        raise UsageError("M must be >= 1")
    rcfg = _rollout_field_cfg(cfg, tcfg)
    levels = list(schedule)
    n_games = len(levels) * M + (M if include_noop else 0)
    seeds = spawn_seeds(seed, n_games)
    red = heuristic_controller()
    out = []
    k = 0
    for eps in levels:
        blue = bc_option_controller(bc_policy, epsilon=float(eps))
        for _ in range(M):
            out.append(play_game(rcfg, blue, red, seeds[k], source="noise",
                                 eps=float(eps)))
            k += 1
    if include_noop:
        blue = noop_controller()
        for _ in range(M):
            out.append(play_game(rcfg, blue, red, seeds[k], source="noop", eps=None))
            k += 1
    return out


def generate_demos(cfg: FieldConfig, tcfg: TrainConfig, seed: int,
                   count: int | None = None) -> list:
    """Scripted-demonstrator games recorded with observations and both
    option and low-level action labels."""
    dcfg = dataclasses.replace(cfg, max_time_s=tcfg.demo_max_time_s,
                               max_captures=tcfg.demo_max_captures)
    count = count if count is not None else tcfg.demo_count
    seeds = spawn_seeds(seed, count)
    blue = scripted_controller(tcfg.demo_skill)
    red = heuristic_controller()
    return [play_game(dcfg, blue, red, s, source="demo", eps=None, record_obs=True)
            for s in seeds]


# ---------------------------------------------------------------------------
# downsampling and pairing

def downsample_indices(length: int, rate: int) -> np.ndarray:
    if rate < 1:
        raise UsageError("downsample rate must be >= 1")
    idx = list(range(0, length, rate))
    if idx[-1] != length - 1:
        idx.append(length - 1)
    return np.asarray(idx, dtype=np.int64)


def downsample(traj: Trajectory, rate: int) -> Trajectory:
    """Keep every `rate`-th state plus the final state; metadata unchanged."""
    idx = downsample_indices(traj.length, rate)
    return dataclasses.replace(
        traj,
        global_states=traj.global_states[idx],
        opts=None, acts=None, obs=None)


@dataclasses.dataclass
class TrajectoryPair:
    worse: int          # index into PairDataset.trajectories
    better: int
    length: int         # common downsampled length (splash mode)
    provenance: str     # "noise_rank" | "noop_rank"
    worse_start: int = 0   # snippet starts (drex mode, full-resolution ticks)
    better_start: int = 0


class PairDataset:
    """Preference pairs over a shared set of trajectories.

    SPLASH mode stores per-trajectory downsampled state arrays once and
    references them from each pair; D-REX mode slices full-resolution
    snippets out of the stored states.
    """

    def __init__(self, trajectories, rate: int, mode: str = "splash"):
        self.mode = mode
        self.rate = rate
        self.trajectories = list(trajectories)
        if mode == "splash":
            self.states = [t.global_states[downsample_indices(t.length, rate)]
                           for t in self.trajectories]
        else:
            self.states = [t.global_states for t in self.trajectories]
        self.finals = [t.global_states[-1] for t in self.trajectories]
        self.pairs: list[TrajectoryPair] = []

    def __len__(self):
        return len(self.pairs)

    def materialize(self, k: int):
        """Returns (S_worse, S_better, psi_worse, psi_better,
        final_worse, final_better) for pair k, float64."""
        p = self.pairs[k]
        tw, tb = self.trajectories[p.worse], self.trajectories[p.better]
        if self.mode == "splash":
            sw = self.states[p.worse][:p.length]
            sb = self.states[p.better][:p.length]
        else:
            sw = self.states[p.worse][p.worse_start:p.worse_start + p.length]
            sb = self.states[p.better][p.better_start:p.better_start + p.length]
        return (np.asarray(sw, dtype=np.float64), np.asarray(sb, dtype=np.float64),
                tw.psi, tb.psi,
                np.asarray(self.finals[p.worse], dtype=np.float64),
                np.asarray(self.finals[p.better], dtype=np.float64))

    def subset(self, indices) -> "PairDataset":
        out = PairDataset.__new__(PairDataset)
        out.mode = self.mode
        out.rate = self.rate
        out.trajectories = self.trajectories
        out.states = self.states
        out.finals = self.finals
        out.pairs = [self.pairs[i] for i in indices]
        return out


def build_pairs_splash(trajectories, tcfg: TrainConfig, *,
                       prune: bool | None = None) -> PairDataset:
    """All cross-bin pairs, lower noise preferred, pruned so the better
    member's success and score are at least the worse member's.

    Trajectories scoring above the discard threshold are dropped before
    pairing; both members are downsampled and later truncated to the common
    length when materialized.
    """
    if prune is None:
        prune = not tcfg.no_prune
    kept = [t for t in trajectories if t.source == "demo" or t.eta <= tcfg.score_discard_above]
    ds = PairDataset(kept, tcfg.downsample_rate, mode="splash")
    ranks = sorted({t.rank() for t in kept})
    bins = {r: [i for i, t in enumerate(kept) if t.rank() == r] for r in ranks}
    for a_i, ra in enumerate(ranks):
        for rb in ranks[a_i + 1:]:
            provenance = "noop_rank" if rb == NOOP_RANK else "noise_rank"
            for bi in bins[ra]:          # lower rank value = less noise = better
                for wi in bins[rb]:
                    tw, tb = kept[wi], kept[bi]
                    if prune and not (tw.psi <= tb.psi and tw.eta <= tb.eta):
                        continue
                    length = min(len(ds.states[wi]), len(ds.states[bi]))
                    ds.pairs.append(TrajectoryPair(wi, bi, length, provenance))
    return ds


def build_pairs_drex(trajectories, n_pairs: int, snippet_len: int,
                     seed: int) -> PairDataset:
    """Noise-ranked snippet pairs with the worse snippet starting no later
    than the better one; no score/success pruning."""
    kept = [t for t in trajectories]
    shortest = min(t.length for t in kept)
    if snippet_len > shortest:
        raise UsageError(f"snippet_len {snippet_len} exceeds shortest trajectory ({shortest})")
    ds = PairDataset(kept, rate=1, mode="drex")
    ranks = [t.rank() for t in kept]
    by_rank: dict = {}
    for i, r in enumerate(ranks):
        by_rank.setdefault(r, []).append(i)
    levels = sorted(by_rank)
    if len(levels) < 2:
        raise UsageError("need at least two noise bins for pairing")
    rng = np.random.default_rng(seed)
    while len(ds.pairs) < n_pairs:
        ia, ib = rng.choice(len(levels), size=2, replace=False)
        ra, rb = levels[min(ia, ib)], levels[max(ia, ib)]
        bi = by_rank[ra][rng.integers(len(by_rank[ra]))]
        wi = by_rank[rb][rng.integers(len(by_rank[rb]))]
        lw, lb = kept[wi].length, kept[bi].length
        ws = int(rng.integers(lw - snippet_len + 1))
        hi = lb - snippet_len
        if ws > hi:
            continue  # cannot satisfy the start-time rule; resample
        bs = int(rng.integers(ws, hi + 1))
        provenance = "noop_rank" if rb == NOOP_RANK else "noise_rank"
        ds.pairs.append(TrajectoryPair(wi, bi, snippet_len, provenance,
                                       worse_start=ws, better_start=bs))
    return ds


def split(pairset: PairDataset, fraction: float, seed: int):
    """Seeded disjoint train/validation partition of the pair list."""
    if not (0.0 < fraction < 1.0):
        raise UsageError("fraction must lie in (0, 1)")
    n = len(pairset)
    perm = np.random.default_rng(seed).permutation(n)
    k = int(round(n * fraction))
    return pairset.subset(perm[:k]), pairset.subset(perm[k:])


def subsample_pairs(pairset: PairDataset, n: int, seed: int) -> PairDataset:
    if n <= 0 or n >= len(pairset):
        return pairset
    idx = np.random.default_rng(seed).choice(len(pairset), size=n, replace=False)
    return pairset.subset(np.sort(idx))


# ---------------------------------------------------------------------------
# persistence

def _fmt(x: float) -> float:
    return float(f"{x:.6g}")


def _traj_record(traj: Trajectory) -> dict:
    meta = {"eps": traj.eps, "eta": traj.eta, "psi": traj.psi,
            "seed": traj.seed, "len": traj.length, "source": traj.source,
            "blue_caps": traj.blue_cap_ticks, "red_caps": traj.red_cap_ticks}
    steps = []
    T = traj.length
    for t in range(T):
        row = {"t": t, "global": [_fmt(v) for v in traj.global_states[t].tolist()]}
        if traj.obs is not None and t < traj.obs.shape[0]:
            row["obs"] = [[_fmt(v) for v in a] for a in traj.obs[t].tolist()]
        if traj.opts is not None and t < traj.opts.shape[0]:
            row["opts"] = traj.opts[t].tolist()
        if traj.acts is not None and t < traj.acts.shape[0]:
            row["acts"] = traj.acts[t].tolist()
        steps.append(row)
    return {"meta": meta, "steps": steps}


def _traj_from_record(rec: dict) -> Trajectory:
    meta = rec["meta"]
    steps = rec["steps"]
    T = len(steps)
    g = np.asarray([s["global"] for s in steps], dtype=np.float32)
    has_obs = "obs" in steps[0]
    has_opts = "opts" in steps[0]
    has_acts = "acts" in steps[0]
    obs = np.asarray([s["obs"] for s in steps[:T - 1]], dtype=np.float32) if has_obs else None
    opts = np.asarray([s["opts"] for s in steps[:T - 1]], dtype=np.int8) if has_opts else None
    acts = np.asarray([s["acts"] for s in steps[:T - 1]], dtype=np.int8) if has_acts else None
    return Trajectory(source=meta["source"], eps=meta["eps"], eta=meta["eta"],
                      psi=meta["psi"], seed=meta["seed"], global_states=g,
                      opts=opts, acts=acts, obs=obs,
                      blue_cap_ticks=list(meta.get("blue_caps", [])),
                      red_cap_ticks=list(meta.get("red_caps", [])))


def sha256_file(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def save_trajectories(path: str, trajectories, config_hash: str = "") -> None:
    """One JSON trajectory record per line, plus a sidecar checksum manifest."""
    with open(path, "w") as fh:
        for traj in trajectories:
            fh.write(json.dumps(_traj_record(traj), separators=(",", ":")))
            fh.write("\n")
    manifest = {"files": {os.path.basename(path): sha256_file(path)},
                "config_hash": config_hash, "count": len(trajectories)}
    with open(path + ".manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)


def load_trajectories(path: str) -> list:
    out = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(_traj_from_record(json.loads(line)))
    return out


def save_pairs(path: str, pairset: PairDataset, config_hash: str = "") -> None:
    """Pair list as id references into the trajectory set, one per line."""
    ids = [t.traj_id for t in pairset.trajectories]
    with open(path, "w") as fh:
        header = {"mode": pairset.mode, "rate": pairset.rate,
                  "config_hash": config_hash, "n_pairs": len(pairset)}
        fh.write(json.dumps(header, separators=(",", ":")) + "\n")
        for p in pairset.pairs:
            rec = {"worse_id": ids[p.worse], "better_id": ids[p.better],
                   "provenance": p.provenance, "length": p.length}
            if pairset.mode == "drex":
                rec["worse_start"] = p.worse_start
                rec["better_start"] = p.better_start
            fh.write(json.dumps(rec, separators=(",", ":")) + "\n")


def load_pairs(path: str, trajectories) -> PairDataset:
    index = {t.traj_id: i for i, t in enumerate(trajectories)}
    with open(path) as fh:
        header = json.loads(fh.readline())
        ds = PairDataset(trajectories, rate=header["rate"], mode=header["mode"])
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            ds.pairs.append(TrajectoryPair(
                index[rec["worse_id"]], index[rec["better_id"]],
                rec["length"], rec["provenance"],
                worse_start=rec.get("worse_start", 0),
                better_start=rec.get("better_start", 0)))
    return ds
