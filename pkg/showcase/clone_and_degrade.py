"""Clone the demonstrator, then degrade the clone with option noise.

Runs a reduced version of the rollout-generation stage: a handful of
scripted demonstrations, a short behavioral-cloning fit, then noised
rollouts at each epsilon level. The printed table shows the score
difference falling as the noise grows, which is the ranking signal the
preference dataset is built from.

Takes a few minutes on a laptop.
"""

import dataclasses

import numpy as np

from splash import bc
from splash import trajectory as tj
from splash.config import FieldConfig, TrainConfig


def main():
    cfg = FieldConfig()
    tcfg = dataclasses.replace(TrainConfig(), demo_count=20, bc_epochs=6)

    print("generating demonstrations...")
    demos = tj.generate_demos(cfg, tcfg, seed=7)
    print(f"  {len(demos)} games, mean eta "
          f"{np.mean([d.eta for d in demos]):+.2f}")

    print("cloning the options policy...")
    dataset = bc.DemoDataset(demos, "options")
    net = bc.bc_fit(dataset, tcfg, seed=7)
    print(f"  training accuracy {bc.bc_accuracy(net, dataset):.3f} "
          f"on {len(dataset)} labeled steps")

    print("rolling out under option noise...")
    M = 4
    rollouts = tj.generate_rollouts(net, (0.0,) + tcfg.noise_levels, M,
                                    cfg, tcfg, seed=19, include_noop=False)
    for eps in (0.0,) + tcfg.noise_levels:
        etas = [r.eta for r in rollouts if r.eps == eps]
        print(f"  eps={eps:4.2f}: mean eta {np.mean(etas):+5.2f}  {etas}")


if __name__ == "__main__":
    main()
