"""Network building blocks on top of the autodiff tape."""

from __future__ import annotations

import math

import numpy as np

from .optim import ParamTree
from .tensor import LOG_2PI, ShapeMismatch, Tensor, exp, sigmoid, tanh, tsum, relu, square, mul, sub


def glorot(rng: np.random.Generator, n_in: int, n_out: int) -> np.ndarray:
    s = math.sqrt(6.0 / (n_in + n_out))
    return rng.uniform(-s, s, size=(n_in, n_out))


def he(rng: np.random.Generator, n_in: int, n_out: int) -> np.ndarray:
    s = math.sqrt(2.0 / n_in)
    return rng.normal(0.0, s, size=(n_in, n_out))


class Linear:
    """Affine map ``y = x @ W + b`` with parameters registered in a ParamTree."""

    def __init__(self, tree: ParamTree, prefix: str, n_in: int, n_out: int,
                 rng: np.random.Generator | None = None, init: str = "glorot"):
        self.n_in, self.n_out = n_in, n_out
        if init == "zero":
            w = np.zeros((n_in, n_out))
        elif init == "he":
            w = he(rng, n_in, n_out)
        else:
            w = glorot(rng, n_in, n_out)
        self.W = tree.add(f"{prefix}.W", w)
        self.b = tree.add(f"{prefix}.b", np.zeros(n_out))

    def __call__(self, x: Tensor) -> Tensor:
        if x.shape[-1] != self.n_in:
            raise ShapeMismatch("linear", x.shape, (self.n_in, self.n_out))
        return x @ self.W + self.b


class GRUCell:
    """Single gated recurrent cell (update/reset gates, tanh candidate)."""

    GATES = ("z", "r", "c")

    def __init__(self, tree: ParamTree, prefix: str, n_in: int, n_hidden: int,
                 rng: np.random.Generator):
        self.n_in, self.n_hidden = n_in, n_hidden
        self.p = {}
        for gate in self.GATES:
            self.p[f"W_{gate}"] = tree.add(f"{prefix}.W_{gate}", glorot(rng, n_in, n_hidden))
            self.p[f"U_{gate}"] = tree.add(f"{prefix}.U_{gate}", glorot(rng, n_hidden, n_hidden))
            self.p[f"b_{gate}"] = tree.add(f"{prefix}.b_{gate}", np.zeros(n_hidden))

    def step(self, h: Tensor, x: Tensor) -> Tensor:
        if x.shape[-1] != self.n_in or h.shape[-1] != self.n_hidden:
            raise ShapeMismatch("gru_step", h.shape, x.shape)
        p = self.p
        z = sigmoid(x @ p["W_z"] + h @ p["U_z"] + p["b_z"])
        r = sigmoid(x @ p["W_r"] + h @ p["U_r"] + p["b_r"])
        c = tanh(x @ p["W_c"] + mul(r, h) @ p["U_c"] + p["b_c"])
        return mul(sub(Tensor(np.float64(1.0)), z), h) + mul(z, c)

    def run(self, x_seq: Tensor) -> Tensor:
        """Unroll over a (B, T, D) sequence from h=0; returns final (B, H) state."""
        B, T, _ = x_seq.shape
        h = Tensor(np.zeros((B, self.n_hidden)))
        for t in range(T):
            h = self.step(h, x_seq[:, t, :])
        return h

    def run_np(self, x_seq: np.ndarray) -> np.ndarray:
        """Tape-free unroll for inference; matches run() numerically."""
        p = {k: t.data for k, t in self.p.items()}
        B, T, _ = x_seq.shape
        h = np.zeros((B, self.n_hidden))
        for t in range(T):
            x = x_seq[:, t, :]
            z = _sigmoid_np(x @ p["W_z"] + h @ p["U_z"] + p["b_z"])
            r = _sigmoid_np(x @ p["W_r"] + h @ p["U_r"] + p["b_r"])
            c = np.tanh(x @ p["W_c"] + (r * h) @ p["U_c"] + p["b_c"])
            h = (1.0 - z) * h + z * c
        return h


def _sigmoid_np(x: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-x))


def gaussian_logprob(mean: Tensor, log_std: Tensor, action: Tensor) -> Tensor:
    """Log density of a diagonal Gaussian, summed over the last axis."""
    if mean.shape[-1] != action.shape[-1]:
        raise ShapeMismatch("gaussian_logprob", mean.shape, action.shape)
    d = mean.shape[-1]
    z = mul(sub(action, mean), exp(-log_std))
    quad = tsum(square(z), axis=-1)
    return -0.5 * quad - tsum(log_std) - 0.5 * d * LOG_2PI


def mlp_forward(x: Tensor, layers, activation=relu) -> Tensor:
    """Apply linear layers with an activation after all but the last."""
    for i, layer in enumerate(layers):
        x = layer(x)
        if i + 1 < len(layers):
            x = activation(x)
    return x


def conv1d(x: Tensor, w: Tensor, b: Tensor, stride: int = 1) -> Tensor:
    """Valid 1-D convolution built from slice + matmul primitives.

    x: (B, C_in, L); w: (C_out, C_in, K); b: (C_out,). Composing primitives
    keeps the op differentiable to any order without a bespoke adjoint.
    """
    B, C_in, L = x.shape
    C_out, C_in_w, K = w.shape
    if C_in != C_in_w or L < K:
        raise ShapeMismatch("conv1d", x.shape, w.shape)
    L_out = (L - K) // stride + 1
    taps = []
    for k in range(K):
        sl = x[:, :, k : k + (L_out - 1) * stride + 1 : stride]  # (B, C_in, L_out)
        flat = sl.transpose(0, 2, 1).reshape(B * L_out, C_in)
        taps.append(flat @ w[:, :, k].transpose(1, 0))  # (B*L_out, C_out)
    y = taps[0]
    for t in taps[1:]:
        y = y + t
    y = y + b
    return y.reshape(B, L_out, C_out).transpose(0, 2, 1)
