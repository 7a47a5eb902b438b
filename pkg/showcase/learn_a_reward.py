"""End-to-end reward learning at toy scale.

Walks the full chain through the library API: scripted demonstrations, a
behavioral-cloning fit, noised rollouts, the ranked-and-pruned preference
dataset, the four-term reward objective, and finally the score-correlation
report on held-out games. Sizes are cut way down so the whole run finishes
in roughly ten minutes; expect a noisier correlation than a full run gives.
"""

import dataclasses

import numpy as np

from splash import bc, evaluate
from splash import trajectory as tj
from splash.config import FieldConfig, TrainConfig
from splash.reward import train_reward


def main():
    cfg = FieldConfig()
    tcfg = dataclasses.replace(TrainConfig(), demo_count=20, bc_epochs=6,
                               rollouts_per_level=12, pair_subsample=4000,
                               epochs=8)

    print("demonstrations + cloning...")
    demos = tj.generate_demos(cfg, tcfg, seed=7)
    net = bc.bc_fit(bc.DemoDataset(demos, "options"), tcfg, seed=7)

    print("noised rollouts...")
    rollouts = tj.generate_rollouts(net, tcfg.noise_levels,
                                    tcfg.rollouts_per_level, cfg, tcfg, seed=19)

    print("preference pairs...")
    train_pairs, val_pairs = evaluate.build_training_pairs(rollouts, tcfg, seed=23)
    print(f"  {len(train_pairs)} train / {len(val_pairs)} validation pairs")

    print("reward training...")
    reward_net, log = train_reward(train_pairs, val_pairs, tcfg, seed=29,
                                   input_dim=rollouts[0].global_states.shape[1])
    for entry in log:
        print(f"  epoch {entry['epoch']}: loss {entry['train_loss']:.3f} "
              f"train acc {entry['train_acc']:.3f} val acc {entry['val_acc']:.3f}")

    print("held-out correlation...")
    held_out = tj.generate_rollouts(net, (0.0, 0.33), 6, cfg, tcfg, seed=31,
                                    include_noop=False)
    report = evaluate.extrapolation_report(reward_net, held_out, demos, [])
    print(f"  pearson {report.pearson_r:+.3f}  spearman {report.spearman_rho:+.3f}")
    etas = [r["eta"] for r in report.records]
    preds = [r["pred"] for r in report.records]
    for lo in sorted(set(etas)):
        sel = [p for e, p in zip(etas, preds) if e == lo]
        print(f"  eta {lo:+d}: mean normalized return {np.mean(sel):+.2f} "
              f"({len(sel)} games)")


if __name__ == "__main__":
    main()
