"""Policy, two-head critic, and multi-head discriminator architectures."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .layers import GRUCell, Linear, conv1d, gaussian_logprob
from .optim import ParamTree
from .tensor import Tensor, concat, no_grad, relu, tanh


@dataclass
class NetDims:
    """Width configuration shared by all networks (desk-scale defaults)."""

    obs_frame: int = 48          # per-frame pose features
    frames: int = 4              # observation history length
    goal: int = 3                # goal state (dir, dist, speed)
    gru_hidden: int = 64
    goal_embed: int = 3
    trunk: tuple = (128, 128)
    action: int = 6
    disc_input: int = 135        # stacked 5-frame pose window
    disc_hidden: tuple = (128, 128)
    disc_heads: int = 32
    terrain_window: int = 0      # control-input samples; 0 = no terrain channel
    terrain_features: int = 16

    @property
    def latent(self) -> int:
        return self.gru_hidden + self.goal_embed

    def latent_at(self, site: int) -> int:
        """Width of the latent after trunk layer ``site`` (0 = encoder output)."""
        return self.latent if site == 0 else self.trunk[site - 1]


LOG_STD_INIT = math.log(0.2)

# The encoder prefix partitions policy parameters: encoder weights are the
# part cloned into injectors, everything else is the trunk/head side.
ENCODER_PREFIX = "enc."


class Encoder:
    """GRU over the pose-history frames plus a linear goal embedding."""

    def __init__(self, tree: ParamTree, prefix: str, dims: NetDims, rng: np.random.Generator):
        self.dims = dims
        self.gru = GRUCell(tree, f"{prefix}gru", dims.obs_frame, dims.gru_hidden, rng)
        self.goal = Linear(tree, f"{prefix}goal", dims.goal, dims.goal_embed, rng)

    def __call__(self, obs: Tensor, goal: Tensor) -> Tensor:
        h = self.gru.run(obs)
        return concat([h, self.goal(goal)], axis=1)

    def forward_np(self, obs: np.ndarray, goal: np.ndarray) -> np.ndarray:
        h = self.gru.run_np(obs)
        ge = goal @ self.goal.W.data + self.goal.b.data
        return np.concatenate([h, ge], axis=1)


class TerrainEncoder:
    """1-D conv stack over the local height window; no pooling layers."""

    SPEC = ((8, 5, 2), (16, 3, 2), (16, 3, 1))  # (channels, kernel, stride)

    def __init__(self, tree: ParamTree, prefix: str, dims: NetDims, rng: np.random.Generator):
        self.dims = dims
        self.convs = []
        c_in, length = 1, dims.terrain_window
        for i, (c_out, k, s) in enumerate(self.SPEC):
            w = tree.add(f"{prefix}conv{i}.W",
                         rng.normal(0.0, math.sqrt(2.0 / (c_in * k)), size=(c_out, c_in, k)))
            b = tree.add(f"{prefix}conv{i}.b", np.zeros(c_out))
            self.convs.append((w, b, s))
            length = (length - k) // s + 1
            c_in = c_out
        self.flat = c_in * length
        self.out = Linear(tree, f"{prefix}out", self.flat, dims.terrain_features, rng)

    def __call__(self, window: Tensor) -> Tensor:
        x = window.reshape(window.shape[0], 1, window.shape[1])
        for w, b, s in self.convs:
            x = relu(conv1d(x, w, b, stride=s))
        return self.out(x.reshape(x.shape[0], self.flat))


class PolicyNet:
    """Gaussian policy: encoder -> ReLU trunk -> action mean, free log_std."""

    def __init__(self, dims: NetDims, rng: np.random.Generator):
        self.dims = dims
        self.tree = ParamTree()
        self.encoder = Encoder(self.tree, ENCODER_PREFIX, dims, rng)
        self.trunk = []
        n_in = dims.latent
        for i, width in enumerate(dims.trunk):
            self.trunk.append(Linear(self.tree, f"trunk.{i}", n_in, width, rng, init="he"))
            n_in = width
        self.head = Linear(self.tree, "head", n_in, dims.action, rng)
        # small head init keeps initial targets near the reference stance
        self.head.W.data *= 0.01
        self.log_std = self.tree.add("log_std", np.full(dims.action, LOG_STD_INIT))

    # -- parameter partitions --------------------------------------------

    def encoder_names(self) -> list[str]:
        return [n for n in self.tree.names() if n.startswith(ENCODER_PREFIX)]

    def trunk_head_names(self) -> list[str]:
        return [n for n in self.tree.names() if not n.startswith(ENCODER_PREFIX)]

    # -- forward -----------------------------------------------------------

    def encode(self, obs: Tensor, goal: Tensor) -> Tensor:
        return self.encoder(obs, goal)

    def latents(self, z0: Tensor) -> list[Tensor]:
        """All trunk latents [z0, z1, ..., zL] (post-activation)."""
        zs = [z0]
        for layer in self.trunk:
            zs.append(relu(layer(zs[-1])))
        return zs

    def mean_from_latent(self, z_last: Tensor) -> Tensor:
        return self.head(z_last)

    def forward(self, obs: Tensor, goal: Tensor) -> tuple[Tensor, Tensor]:
        """Returns (action mean, z0)."""
        z0 = self.encode(obs, goal)
        zs = self.latents(z0)
        return self.mean_from_latent(zs[-1]), z0

    def logprob(self, obs: Tensor, goal: Tensor, action: Tensor) -> Tensor:
        mean, _ = self.forward(obs, goal)
        return gaussian_logprob(mean, self.log_std, action)

    def forward_np(self, obs: np.ndarray, goal: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Tape-free forward for rollout collection."""
        z0 = self.encoder.forward_np(obs, goal)
        z = z0
        for layer in self.trunk:
            z = np.maximum(z @ layer.W.data + layer.b.data, 0.0)
        return z @ self.head.W.data + self.head.b.data, z0

    def act(self, obs_np: np.ndarray, goal_np: np.ndarray, rng: np.random.Generator | None):
        """Sample (or take the mean of) actions for a batch; returns numpy arrays."""
        mean_np, z0 = self.forward_np(obs_np, goal_np)
        if rng is None:
            actions = mean_np.copy()
        else:
            std = np.exp(self.log_std.data)
            actions = mean_np + std * rng.standard_normal(mean_np.shape)
        logp = gaussian_logprob_np(mean_np, self.log_std.data, actions)
        return actions, logp, z0


def gaussian_logprob_np(mean: np.ndarray, log_std: np.ndarray, a: np.ndarray) -> np.ndarray:
    z = (a - mean) * np.exp(-log_std)
    return -0.5 * np.sum(z * z, axis=-1) - np.sum(log_std) - 0.5 * mean.shape[-1] * math.log(2 * math.pi)


class CriticNet:
    """Encoder plus ReLU trunk ending in one value head per objective."""

    def __init__(self, dims: NetDims, rng: np.random.Generator, n_heads: int = 2,
                 with_terrain: bool = False):
        self.dims = dims
        self.n_heads = n_heads
        self.tree = ParamTree()
        self.encoder = Encoder(self.tree, ENCODER_PREFIX, dims, rng)
        self.terrain = (
            TerrainEncoder(self.tree, "tenc.", dims, rng)
            if with_terrain and dims.terrain_window > 0 else None
        )
        n_in = dims.latent + (dims.terrain_features if self.terrain else 0)
        self.trunk = []
        for i, width in enumerate(dims.trunk):
            self.trunk.append(Linear(self.tree, f"trunk.{i}", n_in, width, rng, init="he"))
            n_in = width
        self.head = Linear(self.tree, "head", n_in, n_heads, rng)

    def values(self, obs: Tensor, goal: Tensor, terrain: Tensor | None = None) -> Tensor:
        z = self.encoder(obs, goal)
        if self.terrain is not None:
            if terrain is None:
                raise ValueError("critic configured with terrain input but none supplied")
            z = concat([z, self.terrain(terrain)], axis=1)
        for layer in self.trunk:
            z = relu(layer(z))
        return self.head(z)

    def values_np(self, obs_np: np.ndarray, goal_np: np.ndarray,
                  terrain_np: np.ndarray | None = None) -> np.ndarray:
        if self.terrain is not None:
            with no_grad():
                t = None if terrain_np is None else Tensor(terrain_np)
                return self.values(Tensor(obs_np), Tensor(goal_np), t).data
        z = self.encoder.forward_np(obs_np, goal_np)
        for layer in self.trunk:
            z = np.maximum(z @ layer.W.data + layer.b.data, 0.0)
        return z @ self.head.W.data + self.head.b.data


class DiscriminatorEnsemble:
    """Shared smooth trunk with N independent scalar heads."""

    SMOOTH_ACTIVATIONS = {"tanh": tanh}

    def __init__(self, dims: NetDims, rng: np.random.Generator, activation: str = "tanh"):
        self.dims = dims
        self.activation_name = activation
        self.tree = ParamTree()
        n_in = dims.disc_input
        self.trunk = []
        for i, width in enumerate(dims.disc_hidden):
            self.trunk.append(Linear(self.tree, f"trunk.{i}", n_in, width, rng))
            n_in = width
        self.heads = Linear(self.tree, "heads", n_in, dims.disc_heads, rng)

    @property
    def n_heads(self) -> int:
        return self.dims.disc_heads

    def require_smooth(self):
        if self.activation_name not in self.SMOOTH_ACTIVATIONS:
            raise ValueError(
                f"activation {self.activation_name!r} is not twice differentiable; "
                "input-gradient penalties need a smooth trunk (use tanh)"
            )
        return self.SMOOTH_ACTIVATIONS[self.activation_name]

    def scores(self, x: Tensor) -> Tensor:
        act = self.SMOOTH_ACTIVATIONS.get(self.activation_name, relu)
        for layer in self.trunk:
            x = act(layer(x))
        return self.heads(x)

    def scores_np(self, x_np: np.ndarray) -> np.ndarray:
        act = np.tanh if self.activation_name in self.SMOOTH_ACTIVATIONS \
            else (lambda v: np.maximum(v, 0.0))
        z = x_np
        for layer in self.trunk:
            z = act(z @ layer.W.data + layer.b.data)
        return z @ self.heads.W.data + self.heads.b.data


def input_gradient(disc: DiscriminatorEnsemble, head: int, x: Tensor,
                   create_graph: bool = True) -> Tensor:
    """d(score of one head)/d(input), kept on the tape for double backprop."""
    disc.require_smooth()
    from .tensor import grad, tsum

    if not x.requires_grad:
        x = Tensor(x.data, requires_grad=True)
    batched = x if x.ndim == 2 else x.reshape(1, -1)
    s = tsum(disc.scores(batched)[:, head])
    (gx,) = grad(s, [x], create_graph=create_graph)
    return gx
