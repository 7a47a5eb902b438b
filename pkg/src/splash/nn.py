"""Minimal dense network with hand-derived backprop and an Adam optimizer.

Networks are two-hidden-layer fully connected (256 units each) with either
Tanh or ReLU activations and either a softmax-logits head (classification)
or a scalar linear head.  Everything is float64 numpy; forward and backward
are bit-reproducible for a fixed parameter vector and input batch.
"""

from __future__ import annotations

import json

import numpy as np

from .errors import TrainingError, UsageError

CHECKPOINT_VERSION = 1
HIDDEN = 256


class DenseNet:
    def __init__(self, n_in: int, n_out: int, activation: str = "tanh",
                 head: str = "softmax", rng: np.random.Generator | None = None,
                 hidden: int = HIDDEN):
        if activation not in ("tanh", "relu"):
            raise UsageError(f"unknown activation {activation!r}")
        if head not in ("softmax", "scalar"):
            raise UsageError(f"unknown head {head!r}")
        if head == "scalar" and n_out != 1:
            raise UsageError("scalar head requires n_out == 1")
        self.sizes = (n_in, hidden, hidden, n_out)
        self.activation = activation
        self.head = head
        self.weights = []
        self.biases = []
        rng = rng or np.random.default_rng(0)
        for fi, fo in zip(self.sizes[:-1], self.sizes[1:]):
            limit = np.sqrt(6.0 / (fi + fo))
            self.weights.append(rng.uniform(-limit, limit, size=(fi, fo)))
            self.biases.append(np.zeros(fo))

    # -- parameter vector ---------------------------------------------------

    @property
    def n_params(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def get_theta(self) -> np.ndarray:
        parts = []
        for w, b in zip(self.weights, self.biases):
            parts.append(w.ravel())
            parts.append(b)
        return np.concatenate(parts)

    def set_theta(self, theta: np.ndarray) -> None:
        if theta.shape != (self.n_params,):
            raise UsageError("parameter vector has wrong length")
        k = 0
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            self.weights[i] = theta[k:k + w.size].reshape(w.shape).copy()
            k += w.size
            self.biases[i] = theta[k:k + b.size].copy()
            k += b.size

    def clone(self) -> "DenseNet":
        net = DenseNet.__new__(DenseNet)
        net.sizes = self.sizes
        net.activation = self.activation
        net.head = self.head
        net.weights = [w.copy() for w in self.weights]
        net.biases = [b.copy() for b in self.biases]
        return net

    # -- forward / backward -------------------------------------------------

    def _act(self, z: np.ndarray) -> np.ndarray:
        return np.tanh(z) if self.activation == "tanh" else np.maximum(z, 0.0)

    def forward_cache(self, X: np.ndarray):
        """Returns (logits_or_scalar_outputs, cache for backward)."""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.sizes[0]:
            raise UsageError(f"expected input dim {self.sizes[0]}, got {X.shape[1]}")
        h1 = self._act(X @ self.weights[0] + self.biases[0])
        h2 = self._act(h1 @ self.weights[1] + self.biases[1])
        out = h2 @ self.weights[2] + self.biases[2]
        return out, (X, h1, h2)

    def forward(self, x: np.ndarray) -> np.ndarray:
        """Network output: softmax probabilities or the scalar reward.

        A 1-D input returns a 1-D output; a batch returns one row each.
        """
        single = np.asarray(x).ndim == 1
        out, _ = self.forward_cache(x)
        if self.head == "softmax":
            out = softmax(out)
        return out[0] if single else out

    def logits(self, X: np.ndarray) -> np.ndarray:
        out, _ = self.forward_cache(X)
        return out

    def scalar(self, X: np.ndarray) -> np.ndarray:
        """Scalar-head outputs as a flat vector over the batch."""
        out, _ = self.forward_cache(X)
        return out[:, 0]

    def backward(self, cache, dout: np.ndarray) -> np.ndarray:
        """Gradient of sum(dout * raw_output) w.r.t. the flat parameters.

        `dout` is the upstream gradient on the pre-head outputs (logits for
        softmax nets, raw scalars otherwise), shape (batch, n_out).
        """
        X, h1, h2 = cache
        dout = np.atleast_2d(np.asarray(dout, dtype=np.float64))
        gW2 = h2.T @ dout
        gb2 = dout.sum(axis=0)
        dh2 = dout @ self.weights[2].T
        dz2 = dh2 * (1.0 - h2 * h2) if self.activation == "tanh" else dh2 * (h2 > 0.0)
        gW1 = h1.T @ dz2
        gb1 = dz2.sum(axis=0)
        dh1 = dz2 @ self.weights[1].T
        dz1 = dh1 * (1.0 - h1 * h1) if self.activation == "tanh" else dh1 * (h1 > 0.0)
        gW0 = X.T @ dz1
        gb0 = dz1.sum(axis=0)
        return np.concatenate([gW0.ravel(), gb0, gW1.ravel(), gb1, gW2.ravel(), gb2])

    # -- persistence ----------------------------------------------------------

    def save(self, path: str, meta: dict | None = None) -> None:
        header = {
            "version": CHECKPOINT_VERSION,
            "sizes": list(self.sizes),
            "activation": self.activation,
            "head": self.head,
        }
        if meta:
            header["meta"] = meta
        np.savez(path, header=json.dumps(header, sort_keys=True),
                 theta=self.get_theta())

    @classmethod
    def load(cls, path: str) -> "DenseNet":
        with np.load(path, allow_pickle=False) as data:
            header = json.loads(str(data["header"]))
            theta = np.asarray(data["theta"], dtype=np.float64)
        if header.get("version") != CHECKPOINT_VERSION:
            raise UsageError(f"unsupported checkpoint version {header.get('version')}")
        sizes = header["sizes"]
        net = cls(sizes[0], sizes[-1], activation=header["activation"],
                  head=header["head"], hidden=sizes[1])
        net.set_theta(theta)
        net.loaded_meta = header.get("meta", {})
        return net


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def log_softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


class Adam:
    def __init__(self, n_params: int, lr: float, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = np.zeros(n_params)
        self.v = np.zeros(n_params)

    def step(self, theta: np.ndarray, grad: np.ndarray) -> np.ndarray:
        if grad.shape != theta.shape:
            raise UsageError("gradient/parameter shape mismatch")
        if not np.all(np.isfinite(grad)):
            bad = int(np.count_nonzero(~np.isfinite(grad)))
            raise TrainingError(f"non-finite gradient ({bad} entries) at step {self.t + 1}")
        self.t += 1
        self.m = self.beta1 * self.m + (1.0 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1.0 - self.beta2) * grad * grad
        mhat = self.m / (1.0 - self.beta1 ** self.t)
        vhat = self.v / (1.0 - self.beta2 ** self.t)
        return theta - self.lr * mhat / (np.sqrt(vhat) + self.eps)
