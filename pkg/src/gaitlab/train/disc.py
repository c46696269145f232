"""Discriminator-ensemble training (hinge + gradient penalty) and its reward."""

from __future__ import annotations

import numpy as np

from ..nn.nets import DiscriminatorEnsemble
from ..nn.optim import Adam
from ..nn.tensor import Tensor, grad, relu, square, sqrt, tsum, mul


class WindowBuffer:
    """FIFO replay of policy-generated discriminator windows."""

    def __init__(self, capacity: int, dim: int):
        self.capacity = capacity
        self.data = np.zeros((capacity, dim))
        self.size = 0
        self.head = 0

    def push(self, windows: np.ndarray) -> None:
        for row in windows:
            self.data[self.head] = row
            self.head = (self.head + 1) % self.capacity
            self.size = min(self.size + 1, self.capacity)

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        idx = rng.integers(0, self.size, size=n)
        return self.data[idx]


def imitation_reward(disc: DiscriminatorEnsemble, windows: np.ndarray) -> np.ndarray:
    """Mean over heads of per-head scores clipped to [-1, 1]; one value per row."""
    scores = disc.scores_np(np.atleast_2d(windows))
    return np.clip(scores, -1.0, 1.0).mean(axis=1)


def gradient_penalty(disc: DiscriminatorEnsemble, x_hat: np.ndarray) -> Tensor:
    """Mean over heads and samples of (||d D_n/d x|| - 1)^2, on the tape.

    Uses a batch-replica trick: each interpolate is tiled once per head, a
    single backward pass then yields every per-head input gradient.
    """
    act = disc.require_smooth()  # refuse non-smooth trunks up front
    del act
    B, D = x_hat.shape
    N = disc.n_heads
    x_rep = Tensor(np.tile(x_hat, (N, 1)), requires_grad=True)
    scores = disc.scores(x_rep)  # (N*B, N)
    mask = np.zeros((N * B, N))
    for h in range(N):
        mask[h * B : (h + 1) * B, h] = 1.0
    s = tsum(mul(scores, Tensor(mask)))
    (gx,) = grad(s, [x_rep], create_graph=True)
    norms = sqrt(tsum(square(gx), axis=1) + 1e-12)  # keeps the backward finite at 0
    return tsum(square(norms - 1.0)) * (1.0 / (N * B))


def disc_update(disc: DiscriminatorEnsemble, opt: Adam, real: np.ndarray,
                fake: np.ndarray, lambda_gp: float, rng: np.random.Generator,
                gp_samples: int = 32) -> dict:
    """One hinge-loss step; returns the three loss parts.

    real/fake minibatches must be the same size (half/half composition).
    Interpolates for the penalty pair fake and real rows with per-row
    uniform mixing.
    """
    if real.shape != fake.shape:
        raise ValueError(f"real/fake batch mismatch: {real.shape} vs {fake.shape}")
    scores_fake = disc.scores(Tensor(fake))
    scores_real = disc.scores(Tensor(real))
    hinge_fake = tsum(relu(1.0 + scores_fake)) * (1.0 / scores_fake.size)
    hinge_real = tsum(relu(1.0 - scores_real)) * (1.0 / scores_real.size)

    if lambda_gp > 0.0:
        k = min(gp_samples, real.shape[0])
        sel = rng.integers(0, real.shape[0], size=k)
        alpha = rng.uniform(0.0, 1.0, size=(k, 1))
        x_hat = alpha * fake[sel] + (1.0 - alpha) * real[sel]
        gp = gradient_penalty(disc, x_hat)
    else:
        gp = Tensor(0.0)

    loss = hinge_fake + hinge_real + lambda_gp * gp
    opt.step_loss(loss)
    return {
        "disc_hinge_fake": float(hinge_fake.data),
        "disc_hinge_real": float(hinge_real.data),
        "disc_gp": float(gp.data),
    }
