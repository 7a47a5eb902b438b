"""Pipeline command-line driver: demo generation, behavioral cloning,
noised rollouts, preference pairs, reward training, evaluation, tournaments
and the live demo-collection service."""

import argparse
import dataclasses
import json
import os
import sys

import numpy as np

from . import bc, evaluate
from . import trajectory as tj
from .config import PipelineConfig
from .errors import ConfigError, TrainingError, UsageError
from .nn import DenseNet
from .reward import train_reward

# held-out noise levels below the training schedule, used for the
# extrapolation scatter
EXTRAP_LEVELS = (0.0, 0.17, 0.33)

_STAGES = ("demos", "bc", "rollouts", "pairs", "reward", "eval",
           "tournament", "ablation", "service")


def stage_seed(cfg: PipelineConfig, stage: str) -> int:
    return tj.spawn_seeds(cfg.seed, len(_STAGES))[_STAGES.index(stage)]


class Artifacts:
    """Resolves artifact file locations under the configured output root."""

    def __init__(self, cfg: PipelineConfig):
        self.cfg = cfg
        self.root = cfg.resolve_out_dir()
        os.makedirs(self.root, exist_ok=True)

    def _path(self, key: str, default: str) -> str:
        p = self.cfg.paths.get(key, os.path.join(self.root, default))
        os.makedirs(os.path.dirname(p) or ".", exist_ok=True)
        return p

    @property
    def demos(self):
        return self._path("demos", "demos.jsonl")

    @property
    def rollouts(self):
        return self._path("rollouts", "rollouts.jsonl")

    def pairs(self, mode: str, tag: str = "") -> str:
        return self._path("pairs", f"pairs_{mode}{tag}.jsonl")

    def checkpoint(self, name: str) -> str:
        base = self.cfg.paths.get("checkpoints", self.root)
        os.makedirs(base, exist_ok=True)
        return os.path.join(base, name + ".npz")

    def report(self, name: str) -> str:
        base = self.cfg.paths.get("reports", self.root)
        os.makedirs(base, exist_ok=True)
        return os.path.join(base, name)


def _require(path: str, producer: str) -> str:
    if not os.path.exists(path):
        raise UsageError(
            f"missing artifact {path}; run `splash {producer}` first")
    return path


def _manifest_digest(path: str) -> dict:
    mp = path + ".manifest.json"
    if not os.path.exists(mp):
        return {}
    with open(mp) as fh:
        return json.load(fh)


def _check_hash(name: str, artifact_hash: str, cfg: PipelineConfig,
                force: bool) -> None:
    if artifact_hash and artifact_hash != cfg.config_hash() and not force:
        raise UsageError(
            f"{name} was produced under config hash {artifact_hash}, current "
            f"is {cfg.config_hash()}; rerun the pipeline or pass --force")


# ---------------------------------------------------------------------------
# subcommands

def cmd_gen_demos(cfg: PipelineConfig, art: Artifacts, args) -> None:
    demos = tj.generate_demos(cfg.field, cfg.train, stage_seed(cfg, "demos"))
    tj.save_trajectories(art.demos, demos, cfg.config_hash())
    etas = [t.eta for t in demos]
    print(f"wrote {len(demos)} demonstrations to {art.demos} "
          f"(mean eta {np.mean(etas):+.2f})")


def cmd_bc_train(cfg: PipelineConfig, art: Artifacts, args) -> None:
    demos = tj.load_trajectories(_require(art.demos, "gen-demos"))
    seed = stage_seed(cfg, "bc")
    for label_kind, name in (("options", "bc_options"), ("actions", "bc_actions")):
        ds = bc.DemoDataset(demos, label_kind=label_kind)
        net = bc.bc_fit(ds, cfg.train, seed)
        path = art.checkpoint(name)
        net.save(path, meta={"config_hash": cfg.config_hash(),
                             "kind": "bc", "label_kind": label_kind})
        print(f"{name}: {len(ds)} samples, train accuracy "
              f"{bc.bc_accuracy(net, ds):.3f} -> {path}")


def cmd_rollout(cfg: PipelineConfig, art: Artifacts, args) -> None:
    policy = DenseNet.load(_require(art.checkpoint("bc_options"), "bc-train"))
    rollouts = tj.generate_rollouts(policy, cfg.train.noise_levels,
                                    cfg.train.rollouts_per_level, cfg.field,
                                    cfg.train, stage_seed(cfg, "rollouts"))
    tj.save_trajectories(art.rollouts, rollouts, cfg.config_hash())
    by_eps = {}
    for t in rollouts:
        by_eps.setdefault(t.source if t.source == "noop" else t.eps, []).append(t.eta)
    summary = "  ".join(f"{k}:{np.mean(v):+.2f}" for k, v in sorted(
        by_eps.items(), key=lambda kv: str(kv[0])))
    print(f"wrote {len(rollouts)} rollouts to {art.rollouts} (mean eta {summary})")


def cmd_pairs(cfg: PipelineConfig, art: Artifacts, args) -> None:
    mode = cfg.train.mode
    seed = stage_seed(cfg, "pairs")
    trajs = tj.load_trajectories(_require(art.rollouts, "rollout"))
    if mode == "drex":
        pairset = tj.build_pairs_drex(trajs, cfg.train.drex_pairs,
                                      cfg.train.drex_snippet_len, seed)
    else:
        pairset = tj.build_pairs_splash(trajs, cfg.train)
    if cfg.train.pair_subsample:
        pairset = tj.subsample_pairs(pairset, cfg.train.pair_subsample, seed)
    tag = "_no_prune" if cfg.train.no_prune and mode == "splash" else ""
    path = art.pairs(mode, tag)
    tj.save_pairs(path, pairset, cfg.config_hash())
    print(f"wrote {len(pairset)} {mode} pairs to {path}")


def _reward_name(cfg: PipelineConfig) -> str:
    tag = ""
    for flag in ("no_prune", "no_if", "no_dr"):
        if getattr(cfg.train, flag):
            tag += f"_{flag}"
    return f"reward_{cfg.train.mode}{tag}"


def cmd_reward_train(cfg: PipelineConfig, art: Artifacts, args) -> None:
    mode = cfg.train.mode
    tag = "_no_prune" if cfg.train.no_prune and mode == "splash" else ""
    pairs_path = _require(art.pairs(mode, tag), "pairs")
    trajs = tj.load_trajectories(_require(art.rollouts, "rollout"))
    pairset = tj.load_pairs(pairs_path, trajs)
    seed = stage_seed(cfg, "reward")
    train_pairs, val_pairs = tj.split(pairset, cfg.train.train_fraction, seed)
    name = _reward_name(cfg)
    log_path = art.report(name + "_log.jsonl")
    input_dim = train_pairs.states[0].shape[1]
    net, log = train_reward(train_pairs, val_pairs, cfg.train, seed,
                            input_dim=input_dim, log_path=log_path)
    path = art.checkpoint(name)
    net.save(path, meta={"config_hash": cfg.config_hash(), "kind": "reward",
                         "mode": mode,
                         "pairs_file": os.path.basename(pairs_path)})
    final = log[-1]
    val = final["val_acc"]
    print(f"trained {name} on {len(train_pairs)} pairs "
          f"(val acc {val:.3f}) -> {path}" if val is not None else
          f"trained {name} on {len(train_pairs)} pairs -> {path}")


def _eval_sets(cfg: PipelineConfig, art: Artifacts):
    """(train, demo, extrapolation) trajectory sets plus held-out trace games."""
    rollouts = tj.load_trajectories(_require(art.rollouts, "rollout"))
    demos = tj.load_trajectories(_require(art.demos, "gen-demos"))
    policy = DenseNet.load(_require(art.checkpoint("bc_options"), "bc-train"))
    seed = stage_seed(cfg, "eval")
    extrap = tj.generate_rollouts(policy, EXTRAP_LEVELS,
                                  cfg.train.rollouts_per_level, cfg.field,
                                  cfg.train, seed, include_noop=False)
    trace = tj.generate_rollouts(policy, (0.0, 0.5, 1.0), 7, cfg.field,
                                 cfg.train, seed + 1, include_noop=False)
    return rollouts, demos, extrap, trace


def cmd_eval(cfg: PipelineConfig, art: Artifacts, args) -> None:
    name = _reward_name(cfg)
    ckpt = _require(art.checkpoint(name), "reward-train")
    net = DenseNet.load(ckpt)
    _check_hash(ckpt, net.loaded_meta.get("config_hash", ""), cfg, args.force)
    for artifact in (art.rollouts, art.demos):
        man = _manifest_digest(artifact)
        _check_hash(artifact, man.get("config_hash", ""), cfg, args.force)

    rollouts, demos, extrap, trace = _eval_sets(cfg, art)
    report = evaluate.extrapolation_report(net, rollouts, demos, extrap)
    manifests = {os.path.basename(p): _manifest_digest(p).get("files", {})
                 for p in (art.rollouts, art.demos)}
    manifests = {k: next(iter(v.values()), "") for k, v in manifests.items()}
    out = art.report("extrapolation_" + name + ".tsv")
    evaluate.write_report(out, report.rows(), checkpoint=os.path.basename(ckpt),
                          manifests=manifests, config_hash=cfg.config_hash())

    stats = evaluate.capture_delta_stats(net, trace)
    trace0 = evaluate.reward_trace(net, trace[0])
    trace_out = art.report("trace_" + name + ".tsv")
    evaluate.write_report(trace_out, trace0.rows(), checkpoint=os.path.basename(ckpt),
                          manifests=manifests, config_hash=cfg.config_hash())
    summary_rows = [("metric", "value"),
                    ("pearson_r", f"{report.pearson_r:.4f}"),
                    ("spearman_rho", f"{report.spearman_rho:.4f}")]
    summary_rows += [(f"mad_{k}", f"{v:.4f}") for k, v in report.mad_by_set.items()]
    summary_rows += [(k, f"{v}") for k, v in stats.items()]
    summary_out = art.report("eval_summary_" + name + ".tsv")
    evaluate.write_report(summary_out, summary_rows, checkpoint=os.path.basename(ckpt),
                          manifests=manifests, config_hash=cfg.config_hash())
    print(f"spearman rho {report.spearman_rho:.4f}, pearson r "
          f"{report.pearson_r:.4f} -> {out}")
    print(f"capture tracking: blue up {stats['blue_fraction_up']}, "
          f"red down {stats['red_fraction_down']} -> {summary_out}")


def cmd_tournament(cfg: PipelineConfig, art: Artifacts, args) -> None:
    seed = stage_seed(cfg, "tournament")
    rows = [("policy", "wins", "losses", "draws", "win_rate", "mean_eta")]
    results = {}
    for name, level in (("bc_options", "options"), ("bc_actions", "actions")):
        net = DenseNet.load(_require(art.checkpoint(name), "bc-train"))
        rep = bc.bc_evaluate(net, tj.heuristic_controller(), args.games,
                             cfg.field, seed, policy_level=level)
        rate = rep["wins"] / args.games
        results[name] = rep
        rows.append((name, str(rep["wins"]), str(rep["losses"]),
                     str(rep["draws"]), f"{rate:.3f}", f"{rep['mean_eta']:+.3f}"))
        print(f"{name}: {rep['wins']}/{args.games} wins, "
              f"mean eta {rep['mean_eta']:+.3f}")
    out = art.report("tournament.tsv")
    evaluate.write_report(out, rows, config_hash=cfg.config_hash())


def cmd_ablation(cfg: PipelineConfig, art: Artifacts, args) -> None:
    rollouts, demos, extrap, trace = _eval_sets(cfg, art)
    seed = stage_seed(cfg, "ablation")
    table = evaluate.run_ablation(
        rollouts, (rollouts, demos, extrap), cfg.train, seed,
        trace_trajs=trace)
    for entry in table:
        entry["net"].save(art.checkpoint("reward_ablation_" + entry["variant"]),
                          meta={"config_hash": cfg.config_hash(),
                                "kind": "reward", "variant": entry["variant"]})
    out = art.report("ablation.tsv")
    evaluate.write_report(out, evaluate.ablation_rows(table),
                          config_hash=cfg.config_hash())
    for entry in table:
        print(f"{entry['variant']}: rho {entry['spearman_rho']:.3f}, "
              f"jitter {entry['trace_jitter']:.3g}, val acc {entry['val_acc']:.3f}")
    print(f"-> {out}")


def cmd_demo_serve(cfg: PipelineConfig, art: Artifacts, args) -> None:
    from .service import serve
    serve(cfg, args.port if args.port is not None else cfg.port)


# ---------------------------------------------------------------------------

_COMMANDS = {
    "gen-demos": cmd_gen_demos,
    "bc-train": cmd_bc_train,
    "rollout": cmd_rollout,
    "pairs": cmd_pairs,
    "reward-train": cmd_reward_train,
    "eval": cmd_eval,
    "tournament": cmd_tournament,
    "ablation": cmd_ablation,
    "demo-serve": cmd_demo_serve,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="splash",
        description="Preference-based reward learning pipeline for the "
                    "capture-the-flag simulator.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="pipeline config JSON")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--mode", choices=("splash", "drex"), default=None)
        p.add_argument("--ablate", choices=("no_prune", "no_if", "no_dr"),
                       default=None)
        p.add_argument("--out", default=None, help="artifact directory")
        p.add_argument("--force", action="store_true",
                       help="skip config-hash consistency checks")
        if name == "tournament":
            p.add_argument("--games", type=int, default=100)
        if name == "demo-serve":
            p.add_argument("--port", type=int, default=None)
    return parser


def load_config(args) -> PipelineConfig:
    cfg = PipelineConfig.from_file(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.out is not None:
        cfg.out_dir = args.out
    overrides = {}
    if args.mode is not None:
        overrides["mode"] = args.mode
    if args.ablate is not None:
        overrides[args.ablate] = True
    if overrides:
        cfg.train = dataclasses.replace(cfg.train, **overrides)
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args)
        _COMMANDS[args.command](cfg, Artifacts(cfg), args)
    except (ConfigError, UsageError, TrainingError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
