"""Preference-based reward objective and training loop.

The total loss over a trajectory pair is the pairwise ranking cross-entropy
plus a success-signed initial/final state comparison term and first/second
order reward-difference regularization.  All terms are computed in
numerically stable softplus / log-sigmoid form, and every term's gradient
with respect to the per-state rewards is accumulated analytically so one
network forward/backward pass per batch suffices.
"""

from __future__ import annotations

import json

import numpy as np

from .config import TrainConfig
from .errors import TrainingError, UsageError
from .nn import Adam, DenseNet
from .trajectory import PairDataset


def softplus(x):
    return np.logaddexp(0.0, x)


def sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def _check_finite(r: np.ndarray):
    if not np.all(np.isfinite(r)):
        raise TrainingError("non-finite reward encountered")


# ---------------------------------------------------------------------------
# loss terms on per-state reward arrays; each returns (value, grads...)

def _pbirl(rw: np.ndarray, rb: np.ndarray):
    z = rw.sum() - rb.sum()
    g = sigmoid(z)
    return softplus(z), g         # dL/d(each rw) = g, dL/d(each rb) = -g


def _phi(r_init: float, r_final: float, psi_final: int):
    # -psi * log sigmoid(r_final - r_init)
    d = r_final - r_init
    val = psi_final * softplus(-d)
    g = -psi_final * sigmoid(-d)  # dval/dr_final; dval/dr_init is -g
    return val, g


def _dr_term(r: np.ndarray):
    d1 = np.diff(r)
    d2 = np.diff(r, n=2)
    s1 = np.sign(d1)
    s2 = np.sign(d2)
    g1 = np.zeros_like(r)
    g1[1:] += s1
    g1[:-1] -= s1
    g2 = np.zeros_like(r)
    g2[2:] += s2
    g2[1:-1] -= 2.0 * s2
    g2[:-2] += s2
    return np.abs(d1).sum(), np.abs(d2).sum(), g1, g2


# ---------------------------------------------------------------------------
# public per-pair losses

def _pair_rewards(net: DenseNet, pair_data):
    sw, sb, psi_w, psi_b, fin_w, fin_b = pair_data
    rw = net.scalar(sw)
    rb = net.scalar(sb)
    rfw = float(net.scalar(fin_w[None, :])[0])
    rfb = float(net.scalar(fin_b[None, :])[0])
    _check_finite(rw)
    _check_finite(rb)
    return rw, rb, rfw, rfb, psi_w, psi_b


def loss_pbirl(net: DenseNet, pair_data) -> float:
    """Ranking cross-entropy: -log of the better member's share of the
    exponentiated returns, as softplus(sum_worse - sum_better)."""
    rw, rb, *_ = _pair_rewards(net, pair_data)
    return float(_pbirl(rw, rb)[0])


def loss_if(net: DenseNet, pair_data) -> float:
    """Initial/final comparison: four success-signed logistic terms pushing
    winning finals above initials and losing finals below them."""
    rw, rb, rfw, rfb, psi_w, psi_b = _pair_rewards(net, pair_data)
    total = 0.0
    for r_init, r_fin, psi in ((rw[0], rfb, psi_b), (rb[0], rfw, psi_w),
                               (rw[0], rfw, psi_w), (rb[0], rfb, psi_b)):
        total += _phi(r_init, r_fin, psi)[0]
    return float(total)


def loss_dr(net: DenseNet, pair_data, lambda_1: float, lambda_2: float) -> float:
    """First and second order reward-difference penalties, normalized by the
    number of differences across both members."""
    sw, sb = pair_data[0], pair_data[1]
    if len(sw) < 3 or len(sb) < 3:
        raise UsageError("reward-difference regularization needs members of length >= 3")
    rw = net.scalar(sw)
    rb = net.scalar(sb)
    v1w, v2w, *_ = _dr_term(rw)
    v1b, v2b, *_ = _dr_term(rb)
    n1 = len(rw) + len(rb) - 2
    n2 = len(rw) + len(rb) - 4
    return float(lambda_1 * (v1w + v1b) / n1 + lambda_2 * (v2w + v2b) / n2)


def loss_total(net: DenseNet, pair_data, tcfg: TrainConfig) -> float:
    total = loss_pbirl(net, pair_data)
    if not tcfg.no_if and tcfg.lambda_if > 0.0:
        total += tcfg.lambda_if * loss_if(net, pair_data)
    if not tcfg.no_dr and (tcfg.lambda_1 > 0.0 or tcfg.lambda_2 > 0.0):
        total += loss_dr(net, pair_data, tcfg.lambda_1, tcfg.lambda_2)
    return total


# ---------------------------------------------------------------------------
# batched loss + gradient

def batch_loss_and_grad(net: DenseNet, pairset: PairDataset, indices,
                        tcfg: TrainConfig):
    """Mean total loss over the given pairs and its gradient over the flat
    parameter vector, via one stacked forward/backward pass.

    Returns (loss, grad, n_correct) where n_correct counts pairs with the
    better member's reward sum strictly above the worse member's.
    """
    use_if = not tcfg.no_if and tcfg.lambda_if > 0.0
    use_dr = not tcfg.no_dr and (tcfg.lambda_1 > 0.0 or tcfg.lambda_2 > 0.0)

    blocks = []
    layout = []   # (offset, len_w, len_b) per pair, finals appended at the end
    offset = 0
    pair_data = [pairset.materialize(k) for k in indices]
    for sw, sb, *_ in pair_data:
        blocks.append(sw)
        blocks.append(sb)
        layout.append((offset, len(sw), len(sb)))
        offset += len(sw) + len(sb)
    finals_at = offset
    for _, _, _, _, fw, fb in pair_data:
        blocks.append(fw[None, :])
        blocks.append(fb[None, :])
    X = np.concatenate(blocks, axis=0)
    out, cache = net.forward_cache(X)
    r = out[:, 0]
    _check_finite(r)

    dL_dr = np.zeros_like(r)
    total = 0.0
    n_correct = 0
    n = len(indices)
    for p, ((off, lw, lb), (sw, sb, psi_w, psi_b, _, _)) in enumerate(zip(layout, pair_data)):
        rw = r[off:off + lw]
        rb = r[off + lw:off + lw + lb]
        iw = finals_at + 2 * p
        ib = iw + 1
        rfw, rfb = r[iw], r[ib]

        val, g = _pbirl(rw, rb)
        total += val
        dL_dr[off:off + lw] += g / n
        dL_dr[off + lw:off + lw + lb] -= g / n
        if rb.sum() > rw.sum():
            n_correct += 1

        if use_if:
            lam = tcfg.lambda_if
            for init_idx, fin_idx, psi in ((off, ib, psi_b), (off + lw, iw, psi_w),
                                           (off, iw, psi_w), (off + lw, ib, psi_b)):
                val, gf = _phi(r[init_idx], r[fin_idx], psi)
                total += lam * val
                dL_dr[fin_idx] += lam * gf / n
                dL_dr[init_idx] -= lam * gf / n

        if use_dr:
            if lw < 3 or lb < 3:
                raise UsageError("reward-difference regularization needs members of length >= 3")
            n1 = lw + lb - 2
            n2 = lw + lb - 4
            for start, ln in ((off, lw), (off + lw, lb)):
                v1, v2, g1, g2 = _dr_term(r[start:start + ln])
                total += tcfg.lambda_1 * v1 / n1 + tcfg.lambda_2 * v2 / n2
                dL_dr[start:start + ln] += (tcfg.lambda_1 * g1 / n1 +
                                            tcfg.lambda_2 * g2 / n2) / n

    grad = net.backward(cache, dL_dr[:, None])
    return total / n, grad, n_correct


def preference_accuracy(net: DenseNet, pairset: PairDataset) -> float:
    """Fraction of pairs whose better member has the higher reward sum."""
    if len(pairset) == 0:
        return float("nan")
    correct = 0
    for k in range(len(pairset)):
        sw, sb, *_ = pairset.materialize(k)
        rw = net.scalar(sw).sum()
        rb = net.scalar(sb).sum()
        correct += bool(rb > rw)
    return correct / len(pairset)


def train_reward(train_pairs: PairDataset, val_pairs: PairDataset | None,
                 tcfg: TrainConfig, seed: int, input_dim: int, *,
                 log_path: str | None = None):
    """Train the scalar reward net with Adam over shuffled pair batches.

    Returns (net, log) where log is a list of per-epoch dicts with the loss,
    term breakdown and train/validation preference accuracy.
    """
    if len(train_pairs) == 0:
        raise UsageError("training pair set is empty")
    rng = np.random.default_rng(seed)
    net = DenseNet(input_dim, 1, activation="relu", head="scalar", rng=rng)
    adam = Adam(net.n_params, lr=tcfg.lr)
    log = []
    theta = net.get_theta()
    for epoch in range(tcfg.epochs):
        order = rng.permutation(len(train_pairs))
        epoch_loss = 0.0
        n_correct = 0
        for start in range(0, len(order), tcfg.batch_size):
            batch = order[start:start + tcfg.batch_size]
            loss, grad, correct = batch_loss_and_grad(net, train_pairs, batch, tcfg)
            theta = adam.step(theta, grad)
            net.set_theta(theta)
            epoch_loss += loss * len(batch)
            n_correct += correct
        entry = {
            "epoch": epoch + 1,
            "train_loss": epoch_loss / len(order),
            "train_acc": n_correct / len(order),
            "val_acc": (preference_accuracy(net, val_pairs)
                        if val_pairs is not None and len(val_pairs) else None),
        }
        entry.update(_term_breakdown(net, train_pairs, tcfg, rng))
        log.append(entry)
    if log_path:
        with open(log_path, "w") as fh:
            for entry in log:
                fh.write(json.dumps(entry, sort_keys=True) + "\n")
    return net, log


def _term_breakdown(net, pairset, tcfg, rng, sample: int = 64) -> dict:
    idx = (np.arange(len(pairset)) if len(pairset) <= sample
           else np.sort(rng.choice(len(pairset), size=sample, replace=False)))
    pb = lf = dr = 0.0
    for k in idx:
        data = pairset.materialize(int(k))
        pb += loss_pbirl(net, data)
        if not tcfg.no_if:
            lf += loss_if(net, data)
        if not tcfg.no_dr:
            dr += loss_dr(net, data, tcfg.lambda_1, tcfg.lambda_2)
    n = max(len(idx), 1)
    return {"pbirl": pb / n, "if": lf / n, "dr": dr / n}
