"""Reward-model evaluation: extrapolation scatter, per-tick reward traces
with capture markers, and ablation comparisons."""

import dataclasses
import json

import numpy as np
from scipy import stats

from .config import TrainConfig
from .errors import UsageError
from .nn import DenseNet
from .reward import preference_accuracy, train_reward
from .trajectory import (PairDataset, Trajectory, build_pairs_drex,
                         build_pairs_splash, split, subsample_pairs)


def predicted_return(net: DenseNet, traj: Trajectory) -> float:
    """Length-normalized sum of the learned reward over a trajectory's
    stored per-step global states."""
    states = np.asarray(traj.global_states, dtype=np.float64)
    if states.shape[0] == 0:
        raise UsageError("cannot score an empty trajectory")
    return float(net.scalar(states).mean())


def normalize_to_range(values, lo: float, hi: float) -> np.ndarray:
    """Monotone affine map of `values` onto [lo, hi]; constant inputs map to
    the midpoint."""
    v = np.asarray(values, dtype=np.float64)
    vmin, vmax = float(v.min()), float(v.max())
    if vmax - vmin < 1e-12:
        return np.full_like(v, 0.5 * (lo + hi))
    return lo + (v - vmin) * (hi - lo) / (vmax - vmin)


@dataclasses.dataclass
class ExtrapolationReport:
    """Predicted vs ground-truth returns across train, demo and held-out
    low-noise trajectory sets."""

    records: list          # dicts {set, eta, raw, pred}
    pearson_r: float
    spearman_rho: float
    mad_by_set: dict

    def rows(self):
        yield ("set", "eta", "raw_return", "normalized_return")
        for r in self.records:
            yield (r["set"], f"{r['eta']:+d}", f"{r['raw']:.6g}", f"{r['pred']:.6g}")


def extrapolation_report(net: DenseNet, train_trajs, demo_trajs,
                         extrap_trajs) -> ExtrapolationReport:
    groups = [("train", train_trajs), ("demo", demo_trajs),
              ("extrapolation", extrap_trajs)]
    etas, raws, labels = [], [], []
    for name, trajs in groups:
        for t in trajs:
            etas.append(int(t.eta))
            raws.append(predicted_return(net, t))
            labels.append(name)
    if len(raws) < 3:
        raise UsageError("extrapolation report needs at least 3 trajectories")
    etas_arr = np.asarray(etas, dtype=np.float64)
    preds = normalize_to_range(raws, etas_arr.min(), etas_arr.max())
    if np.ptp(etas_arr) == 0.0 or np.ptp(preds) == 0.0:
        # correlation is undefined for a constant margin
        pearson = spearman = float("nan")
    else:
        pearson = float(stats.pearsonr(preds, etas_arr).statistic)
        spearman = float(stats.spearmanr(preds, etas_arr).statistic)
    records = [{"set": s, "eta": e, "raw": float(r), "pred": float(p)}
               for s, e, r, p in zip(labels, etas, raws, preds)]
    mad = {}
    for name, _ in groups:
        dev = [abs(r["pred"] - r["eta"]) for r in records if r["set"] == name]
        mad[name] = float(np.mean(dev)) if dev else float("nan")
    return ExtrapolationReport(records, pearson, spearman, mad)


@dataclasses.dataclass
class RewardTrace:
    """Per-tick reward shifted to start at 0, with capture tick markers."""

    reward: np.ndarray
    blue_capture_ticks: list
    red_capture_ticks: list

    def rows(self):
        events = {t: "blue_capture" for t in self.blue_capture_ticks}
        events.update({t: "red_capture" for t in self.red_capture_ticks})
        yield ("tick", "reward", "event")
        for i, r in enumerate(self.reward):
            yield (str(i), f"{r:.6g}", events.get(i, ""))


def reward_trace(net: DenseNet, traj: Trajectory) -> RewardTrace:
    states = np.asarray(traj.global_states, dtype=np.float64)
    if states.shape[0] == 0:
        raise UsageError("cannot trace an empty trajectory")
    r = net.scalar(states)
    r = r - r[0]
    return RewardTrace(r, list(traj.blue_cap_ticks), list(traj.red_cap_ticks))


def first_difference_variance(trace: RewardTrace) -> float:
    """Jitter measure of a trace; lower means a smoother reward signal."""
    if len(trace.reward) < 2:
        return 0.0
    return float(np.var(np.diff(trace.reward)))


def capture_delta_stats(net: DenseNet, trajs, window: int = 50) -> dict:
    """Fraction of captures where the mean reward over the `window` ticks
    after the capture moves in the scoring team's favor relative to the
    window before it."""
    blue_hits = blue_total = red_hits = red_total = 0
    for traj in trajs:
        trace = reward_trace(net, traj)
        r = trace.reward
        for ticks, sign in ((trace.blue_capture_ticks, 1.0),
                            (trace.red_capture_ticks, -1.0)):
            for t in ticks:
                if t - window < 0 or t + window >= len(r):
                    continue
                before = r[t - window:t].mean()
                after = r[t + 1:t + 1 + window].mean()
                if sign > 0:
                    blue_total += 1
                    blue_hits += bool(after > before)
                else:
                    red_total += 1
                    red_hits += bool(after < before)
    return {
        "blue_captures": blue_total,
        "blue_fraction_up": blue_hits / blue_total if blue_total else float("nan"),
        "red_captures": red_total,
        "red_fraction_down": red_hits / red_total if red_total else float("nan"),
    }


ABLATION_VARIANTS = ("full", "no_prune", "no_if", "no_dr")


def _variant_tcfg(tcfg: TrainConfig, variant: str) -> TrainConfig:
    if variant != "full" and variant not in ("no_prune", "no_if", "no_dr"):
        raise UsageError(f"unknown ablation variant {variant!r}")
    flags = {k: k == variant for k in ("no_prune", "no_if", "no_dr")}
    return dataclasses.replace(tcfg, **flags)


def build_training_pairs(rollouts, tcfg: TrainConfig, seed: int):
    """Pair dataset + train/val split for the configured mode and flags."""
    if tcfg.mode == "drex":
        pairset = build_pairs_drex(rollouts, tcfg.drex_pairs,
                                   tcfg.drex_snippet_len, seed)
    else:
        pairset = build_pairs_splash(rollouts, tcfg)
    if tcfg.pair_subsample and len(pairset) > tcfg.pair_subsample:
        pairset = subsample_pairs(pairset, tcfg.pair_subsample, seed)
    return split(pairset, tcfg.train_fraction, seed)


def run_ablation(rollouts, eval_sets, tcfg: TrainConfig, seed: int,
                 *, trace_trajs=None, variants=ABLATION_VARIANTS) -> list:
    """Train one reward model per variant on identical data and seed and
    report extrapolation correlation, trace jitter and validation accuracy.

    `eval_sets` is the (train_trajs, demo_trajs, extrap_trajs) triple for the
    extrapolation report; `trace_trajs` default to the extrapolation set.
    """
    trace_trajs = trace_trajs if trace_trajs is not None else eval_sets[2]
    table = []
    for variant in variants:
        vcfg = _variant_tcfg(tcfg, variant)
        train_pairs, val_pairs = build_training_pairs(rollouts, vcfg, seed)
        net, log = train_reward(train_pairs, val_pairs, vcfg, seed,
                                input_dim=train_pairs.states[0].shape[1])
        report = extrapolation_report(net, *eval_sets)
        jitter = float(np.mean([first_difference_variance(reward_trace(net, t))
                                for t in trace_trajs]))
        table.append({
            "variant": variant,
            "n_pairs": len(train_pairs) + len(val_pairs),
            "spearman_rho": report.spearman_rho,
            "pearson_r": report.pearson_r,
            "trace_jitter": jitter,
            "val_acc": (preference_accuracy(net, val_pairs)
                        if len(val_pairs) else float("nan")),
            "net": net,
        })
    return table


def write_report(path: str, rows, *, checkpoint: str = "",
                 manifests: dict | None = None, config_hash: str = "") -> None:
    """Tab-separated table with a reproducibility header naming the
    checkpoint, dataset checksums and config hash."""
    with open(path, "w") as fh:
        fh.write(f"# checkpoint: {checkpoint}\n")
        for name, digest in sorted((manifests or {}).items()):
            fh.write(f"# manifest {name}: {digest}\n")
        fh.write(f"# config: {config_hash}\n")
        for row in rows:
            fh.write("\t".join(str(c) for c in row) + "\n")


def ablation_rows(table):
    yield ("variant", "n_pairs", "spearman_rho", "pearson_r",
           "trace_jitter", "val_acc")
    for entry in table:
        yield (entry["variant"], str(entry["n_pairs"]),
               f"{entry['spearman_rho']:.4f}", f"{entry['pearson_r']:.4f}",
               f"{entry['trace_jitter']:.6g}", f"{entry['val_acc']:.4f}")


def read_report(path: str):
    """Inverse of write_report: returns (header dict, list of row tuples)."""
    header, rows = {}, []
    with open(path) as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("# "):
                key, _, val = line[2:].partition(": ")
                header[key] = val
            elif line:
                rows.append(tuple(line.split("\t")))
    return header, rows
