import dataclasses

import numpy as np
import pytest

from splash.config import FieldConfig, TrainConfig
from splash.nn import DenseNet
from splash import trajectory as tj


@pytest.fixture
def cfg():
    return FieldConfig()


@pytest.fixture
def short_cfg():
    """Field with tight episode limits for fast headless games."""
    return dataclasses.replace(FieldConfig(), max_time_s=60.0, max_captures=1)


@pytest.fixture
def tcfg():
    return TrainConfig()


def make_identity_net(hidden: int = 8) -> DenseNet:
    """ReLU scalar net computing f(x) = x[0] for x[0] >= 0."""
    net = DenseNet(1, 1, activation="relu", head="scalar", hidden=hidden)
    theta = np.zeros(net.n_params)
    h = hidden
    theta[0] = 1.0                       # W0[0, 0]
    w1_off = h + h                       # after W0 (1*h) and b0 (h)
    theta[w1_off] = 1.0                  # W1[0, 0]
    w2_off = w1_off + h * h + h          # after W1 and b1
    theta[w2_off] = 1.0                  # W2[0, 0]
    net.set_theta(theta)
    return net


def make_pair_data(worse_vals, better_vals, psi_w=0, psi_b=0,
                   fin_w=None, fin_b=None):
    """Pair tuple over 1-D states whose identity-net rewards equal the
    given values (requires values >= 0)."""
    sw = np.asarray(worse_vals, dtype=np.float64)[:, None]
    sb = np.asarray(better_vals, dtype=np.float64)[:, None]
    fw = np.asarray([sw[-1, 0] if fin_w is None else fin_w])
    fb = np.asarray([sb[-1, 0] if fin_b is None else fin_b])
    return sw, sb, psi_w, psi_b, fw, fb


def make_trajectory(eta: int, values, source: str = "noise",
                    eps: float = 0.5, seed: int = 0,
                    blue_caps=None, red_caps=None) -> tj.Trajectory:
    """Synthetic trajectory with 1-D global states."""
    states = np.asarray(values, dtype=np.float32)[:, None]
    return tj.Trajectory(source=source, eps=None if source == "noop" else eps,
                         eta=eta, psi=int(np.sign(eta)), seed=seed,
                         global_states=states,
                         blue_cap_ticks=list(blue_caps or []),
                         red_cap_ticks=list(red_caps or []))


def random_game_states(cfg, seed: int, n_ticks: int = 120):
    """Game states visited under uniformly random actions."""
    from splash import sim
    rng = np.random.default_rng(seed)
    state = sim.reset(cfg, seed)
    out = [state.copy()]
    for _ in range(n_ticks):
        if sim.is_terminal(cfg, state):
            break
        acts = [sim.LowAction(int(a)) for a in rng.integers(4, size=len(state.agents))]
        sim.step(cfg, state, acts)
        out.append(state.copy())
    return out
