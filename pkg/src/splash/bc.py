"""Behavioral cloning of the policy-over-options (and a low-level-action
variant for the sample-efficiency comparison)."""

from __future__ import annotations

import dataclasses

import numpy as np

from .config import FieldConfig, TrainConfig
from .errors import UsageError
from .nn import Adam, DenseNet, log_softmax, softmax
from .options import N_ACTIONS, N_OPTIONS
from . import trajectory as tj


class DemoDataset:
    """Flattened (observation, label) pairs from demonstration trajectories.

    Both teammates' streams are merged into one shared-policy dataset.
    `label_kind` selects option labels (7-way) or low-level actions (4-way).
    """

    def __init__(self, trajectories, label_kind: str = "options"):
        if label_kind not in ("options", "actions"):
            raise UsageError(f"unknown label kind {label_kind!r}")
        xs, ys = [], []
        for traj in trajectories:
            labels = traj.opts if label_kind == "options" else traj.acts
            if traj.obs is None or labels is None:
                raise UsageError("demonstration trajectories must carry observations and labels")
            T, n_agents, _ = traj.obs.shape
            for a in range(n_agents):
                xs.append(traj.obs[:, a, :])
                ys.append(labels[:T, a])
        self.X = np.concatenate(xs).astype(np.float64)
        self.y = np.concatenate(ys).astype(np.int64)
        self.label_kind = label_kind
        if np.any(self.y < 0):
            raise UsageError("dataset contains unlabeled steps")
        n_classes = N_OPTIONS if label_kind == "options" else N_ACTIONS
        if np.any(self.y >= n_classes):
            raise UsageError("label outside enum range")
        self.n_classes = n_classes

    def __len__(self):
        return len(self.y)


def bc_fit(demos: DemoDataset, tcfg: TrainConfig, seed: int = 0, *,
           epochs: int | None = None) -> DenseNet:
    """Cross-entropy BC: Tanh hidden layers, softmax head, Adam."""
    if len(demos) == 0:
        raise UsageError("empty demonstration dataset")
    rng = np.random.default_rng(seed)
    net = DenseNet(demos.X.shape[1], demos.n_classes, activation="tanh",
                   head="softmax", rng=rng)
    adam = Adam(net.n_params, lr=tcfg.bc_lr)
    theta = net.get_theta()
    epochs = epochs if epochs is not None else tcfg.bc_epochs
    n = len(demos)
    for _ in range(epochs):
        order = rng.permutation(n)
        for start in range(0, n, tcfg.bc_batch_size):
            idx = order[start:start + tcfg.bc_batch_size]
            Xb, yb = demos.X[idx], demos.y[idx]
            logits, cache = net.forward_cache(Xb)
            probs = softmax(logits)
            dlogits = probs
            dlogits[np.arange(len(idx)), yb] -= 1.0
            grad = net.backward(cache, dlogits / len(idx))
            theta = adam.step(theta, grad)
            net.set_theta(theta)
    return net


def bc_cross_entropy(net: DenseNet, demos: DemoDataset) -> float:
    lp = log_softmax(net.logits(demos.X))
    return float(-lp[np.arange(len(demos)), demos.y].mean())


def bc_accuracy(net: DenseNet, demos: DemoDataset) -> float:
    pred = np.argmax(net.logits(demos.X), axis=1)
    return float((pred == demos.y).mean())


def bc_evaluate(policy: DenseNet, opponent, n_games: int, cfg: FieldConfig,
                seed: int, *, policy_level: str = "options",
                max_time_s: float | None = None,
                max_captures: int | None = None) -> dict:
    """Play seeded headless games (policy on blue, opponent on red) and
    report {wins, losses, draws, mean_eta}.

    `opponent` is a per-agent controller; `policy_level` chooses between the
    options-head and the low-level-action-head execution paths.
    """
    if max_time_s is not None or max_captures is not None:
        cfg = dataclasses.replace(
            cfg,
            max_time_s=max_time_s if max_time_s is not None else cfg.max_time_s,
            max_captures=max_captures if max_captures is not None else cfg.max_captures)
    if n_games == 0:
        return {"wins": 0, "losses": 0, "draws": 0, "mean_eta": 0.0}
    if policy_level == "options":
        blue = tj.bc_option_controller(policy, epsilon=0.0)
    elif policy_level == "actions":
        blue = tj.bc_action_controller(policy, epsilon=0.0)
    else:
        raise UsageError(f"unknown policy level {policy_level!r}")
    seeds = tj.spawn_seeds(seed, n_games)
    wins = losses = draws = 0
    etas = []
    for s in seeds:
        traj = tj.play_game(cfg, blue, opponent, s, source="eval",
                            record_opts=False)
        etas.append(traj.eta)
        if traj.eta > 0:
            wins += 1
        elif traj.eta < 0:
            losses += 1
        else:
            draws += 1
    return {"wins": wins, "losses": losses, "draws": draws,
            "mean_eta": float(np.mean(etas))}
