"""Watch one scripted-versus-heuristic game from the terminal.

Plays a single seeded game with the scripted two-role demonstrator on blue
and the potential-field opponent on red, printing a line whenever the score
moves.
"""

import numpy as np

from splash import sim
from splash import trajectory as tj
from splash.config import FieldConfig


def main():
    cfg = FieldConfig()
    blue = tj.scripted_controller(skill=1.0)
    red = tj.heuristic_controller()
    traj = tj.play_game(cfg, blue, red, seed=11, source="showcase",
                        record_opts=False)

    events = sorted(
        [(t, "blue") for t in traj.blue_cap_ticks]
        + [(t, "red") for t in traj.red_cap_ticks])
    score = {"blue": 0, "red": 0}
    for tick, team in events:
        score[team] += 1
        print(f"t={tick / cfg.tick_hz:7.1f}s  {team} captures "
              f"(blue {score['blue']} : {score['red']} red)")
    print(f"final score difference eta = {traj.eta:+d} "
          f"over {traj.global_states.shape[0] - 1} ticks")

    # the 35-dim shared state track also carries the score channels
    assert np.isfinite(traj.global_states).all()


if __name__ == "__main__":
    main()
