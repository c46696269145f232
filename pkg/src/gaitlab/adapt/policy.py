"""Latent-injection and residual-adapter machinery over a frozen base policy.

The base network's weights never change: adaptation trains (a) an injector
that adds a state-conditioned offset to a chosen latent, built from a clone
of the frozen encoder plus a zero-initialized embedding stack, and (b)
zero-initialized linear branches on the trunk layers (full-rank or low-rank).
A freshly built adapted policy is therefore exactly the base policy, and the
adaptation level scales continuously through the ``alpha`` coefficient.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..nn.checkpoint import checkpoint_hash, load_checkpoint, save_checkpoint
from ..nn.layers import Linear, gaussian_logprob
from ..nn.nets import ENCODER_PREFIX, Encoder, NetDims, PolicyNet, TerrainEncoder, gaussian_logprob_np
from ..nn.optim import ParamTree
from ..nn.tensor import Tensor, concat, no_grad, relu, sqrt, square, tsum


@dataclass
class AdapterConfig:
    sites: tuple = (0,)          # latent indices receiving injection (0 = encoder output)
    kind: str = "full"           # "full" | "lora" | "none" (injection only)
    rank: int = 8                # LoRA rank
    with_terrain: bool = False   # include the control-input encoder
    terrain_window: int = 32
    alpha: float = 1.0           # default adaptation level
    adapt_head: bool = False     # must stay False; the action head is never adapted
    beta_inj: float = 0.01
    kappa_eta: float = 0.01

    def validate(self, dims: NetDims) -> None:
        if self.adapt_head:
            raise ValueError("adapters on the action head are not supported")
        if self.kind not in ("full", "lora", "none"):
            raise ValueError(f"unknown adapter kind: {self.kind}")
        for s in self.sites:
            if not (0 <= s <= len(dims.trunk)):
                raise ValueError(f"injection site {s} out of range")
        if self.kind == "lora" and self.rank < 1:
            raise ValueError("LoRA rank must be >= 1")

    def manifest(self, base_hash: str) -> dict:
        return {
            "base_checkpoint": base_hash,
            "sites": list(self.sites),
            "kind": self.kind,
            "rank": self.rank if self.kind == "lora" else None,
            "with_terrain": self.with_terrain,
            "alpha": self.alpha,
        }


class Injector:
    """Conditional encoder copy -> zero-final embedding stack, one head per site."""

    def __init__(self, tree: ParamTree, base: PolicyNet, cfg: AdapterConfig,
                 rng: np.random.Generator, prefix: str = "inj."):
        dims = base.dims
        if cfg.with_terrain:
            dims = NetDims(**{**dims.__dict__, "terrain_window": cfg.terrain_window})
        self.dims = dims
        self.cfg = cfg
        self.encoder = Encoder(tree, f"{prefix}enc.", dims, rng)
        # start from the pre-trained encoder weights
        for name in base.encoder_names():
            tree[f"{prefix}{name}"].data = base.tree[name].data.copy()
        self.terrain = TerrainEncoder(tree, f"{prefix}terr.", dims, rng) if cfg.with_terrain else None
        feat = dims.latent + (dims.terrain_features if self.terrain else 0)
        self.heads: dict[int, list[Linear]] = {}
        for s in cfg.sites:
            out_dim = dims.latent_at(s)
            hidden = Linear(tree, f"{prefix}site{s}.h", feat, dims.latent, rng)
            final = Linear(tree, f"{prefix}site{s}.out", dims.latent, out_dim, rng, init="zero")
            self.heads[s] = [hidden, final]

    def features(self, obs: Tensor, goal: Tensor, ctrl: Tensor | None) -> Tensor:
        z = self.encoder(obs, goal)
        if self.terrain is not None:
            if ctrl is None:
                raise ValueError("injector configured with a control input; none supplied")
            z = concat([z, self.terrain(ctrl)], axis=1)
        return z

    def offsets(self, obs: Tensor, goal: Tensor, ctrl: Tensor | None) -> dict[int, Tensor]:
        f = self.features(obs, goal, ctrl)
        out = {}
        for s, (hidden, final) in self.heads.items():
            out[s] = final(relu(hidden(f)))
        return out

    def offsets_np(self, obs: np.ndarray, goal: np.ndarray,
                   ctrl: np.ndarray | None) -> dict[int, np.ndarray]:
        z = self.encoder.forward_np(obs, goal)
        if self.terrain is not None:
            if ctrl is None:
                raise ValueError("injector configured with a control input; none supplied")
            t = self.terrain(Tensor(ctrl))  # conv stays on the (cheap) tensor path
            z = np.concatenate([z, t.data], axis=1)
        out = {}
        for s, (hidden, final) in self.heads.items():
            h = np.maximum(z @ hidden.W.data + hidden.b.data, 0.0)
            out[s] = h @ final.W.data + final.b.data
        return out


class TrunkAdapters:
    """Zero-initialized parallel branches on the trunk's pre-activations."""

    def __init__(self, tree: ParamTree, base: PolicyNet, cfg: AdapterConfig,
                 rng: np.random.Generator, prefix: str = "ada."):
        self.kind = cfg.kind
        self.layers = []
        if cfg.kind == "none":
            return
        n_in = base.dims.latent
        for i, width in enumerate(base.dims.trunk):
            if cfg.kind == "full":
                dw = tree.add(f"{prefix}{i}.dW", np.zeros((n_in, width)))
                db = tree.add(f"{prefix}{i}.db", np.zeros(width))
                self.layers.append({"dW": dw, "db": db})
            else:  # lora: dW = B @ A with B zero so the product starts at zero
                b_ = tree.add(f"{prefix}{i}.B", np.zeros((n_in, cfg.rank)))
                a_ = tree.add(f"{prefix}{i}.A",
                              rng.normal(0.0, 1.0 / np.sqrt(cfg.rank), size=(cfg.rank, width)))
                db = tree.add(f"{prefix}{i}.db", np.zeros(width))
                self.layers.append({"B": b_, "A": a_, "db": db})
            n_in = width

    def delta(self, i: int, z: Tensor) -> Tensor | None:
        if not self.layers:
            return None
        layer = self.layers[i]
        if self.kind == "full":
            return z @ layer["dW"] + layer["db"]
        return (z @ layer["B"]) @ layer["A"] + layer["db"]

    def delta_weight(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        layer = self.layers[i]
        if self.kind == "full":
            return layer["dW"].data, layer["db"].data
        return layer["B"].data @ layer["A"].data, layer["db"].data


class AdaptedPolicy:
    """Frozen base + injector + trunk adapters, with a runtime adaptation scale."""

    def __init__(self, base: PolicyNet, cfg: AdapterConfig, seed: int = 0,
                 base_hash: str | None = None):
        cfg.validate(base.dims)
        self.base = base
        self.cfg = cfg
        self.alpha = cfg.alpha
        self.base_hash = base_hash
        base.tree.freeze()
        rng = np.random.default_rng(seed)
        self.atree = ParamTree()
        self.injector = Injector(self.atree, base, cfg, rng)
        self.adapters = TrunkAdapters(self.atree, base, cfg, rng)

    # -- forward ------------------------------------------------------------

    def forward(self, obs: Tensor, goal: Tensor, ctrl: Tensor | None = None,
                alpha: float | None = None,
                second: "AdaptedPolicy | None" = None,
                ) -> tuple[Tensor, Tensor, Tensor]:
        """Action mean, injected z0, and the per-sample injection norm.

        With ``second`` given, this computes the two-model blend: this
        policy's terms scale by alpha, the second's by (1 - alpha).
        """
        a = self.alpha if alpha is None else alpha
        if not (0.0 <= a <= 1.0):
            raise ValueError(f"alpha must lie in [0, 1], got {a}")
        offs = self.injector.offsets(obs, goal, ctrl)
        offs2 = second.injector.offsets(obs, goal, ctrl) if second else None

        z = self.base.encode(obs, goal)
        inj_parts = []
        if 0 in offs:
            z = z + a * offs[0]
            inj_parts.append(offs[0])
        if offs2 and 0 in offs2:
            z = z + (1.0 - a) * offs2[0]
        for i, layer in enumerate(self.base.trunk):
            pre = layer(z)
            d = self.adapters.delta(i, z)
            if d is not None:
                pre = pre + a * d
            if second is not None:
                d2 = second.adapters.delta(i, z)
                if d2 is not None:
                    pre = pre + (1.0 - a) * d2
            znext = relu(pre)
            site = i + 1
            if site in offs:
                znext = znext + a * offs[site]
                inj_parts.append(offs[site])
            if offs2 and site in offs2:
                znext = znext + (1.0 - a) * offs2[site]
            z = znext
        mean = self.base.head(z)
        if inj_parts:
            cat = concat(inj_parts, axis=1) if len(inj_parts) > 1 else inj_parts[0]
            inj_norm = sqrt(tsum(square(cat), axis=1) + 1e-12)
        else:
            inj_norm = Tensor(np.zeros(obs.shape[0]))
        return mean, z, inj_norm

    @property
    def log_std(self) -> Tensor:
        return self.base.log_std

    # -- PPO protocol ----------------------------------------------------------

    @property
    def opt_tree(self) -> ParamTree:
        return self.atree

    def forward_np(self, obs: np.ndarray, goal: np.ndarray, ctrl=None,
                   alpha: float | None = None,
                   second: "AdaptedPolicy | None" = None) -> tuple[np.ndarray, np.ndarray]:
        """Tape-free forward for collection and analysis (optionally blended)."""
        a = self.alpha if alpha is None else alpha
        offs = self.injector.offsets_np(obs, goal, ctrl)
        offs2 = second.injector.offsets_np(obs, goal, ctrl) if second else None
        z = self.base.encoder.forward_np(obs, goal)
        if 0 in offs:
            z = z + a * offs[0]
        if offs2 and 0 in offs2:
            z = z + (1.0 - a) * offs2[0]
        z0 = z
        for i, layer in enumerate(self.base.trunk):
            pre = z @ layer.W.data + layer.b.data
            if self.adapters.layers:
                dw, db = self.adapters.delta_weight(i)
                pre = pre + a * (z @ dw + db)
            if second is not None and second.adapters.layers:
                dw2, db2 = second.adapters.delta_weight(i)
                pre = pre + (1.0 - a) * (z @ dw2 + db2)
            z = np.maximum(pre, 0.0)
            if (i + 1) in offs:
                z = z + a * offs[i + 1]
            if offs2 and (i + 1) in offs2:
                z = z + (1.0 - a) * offs2[i + 1]
        mean = z @ self.base.head.W.data + self.base.head.b.data
        return mean, z0

    def act(self, obs: np.ndarray, goal: np.ndarray, ctrl, rng):
        mean_np, z0 = self.forward_np(obs, goal, ctrl)
        if rng is None:
            actions = mean_np.copy()
        else:
            std = np.exp(self.base.log_std.data)
            actions = mean_np + std * rng.standard_normal(mean_np.shape)
        logp = gaussian_logprob_np(mean_np, self.base.log_std.data, actions)
        return actions, logp, z0

    def logprob_reg(self, obs: Tensor, goal: Tensor, actions: Tensor, ctrl):
        mean, _, inj_norm = self.forward(obs, goal, ctrl)
        lp = gaussian_logprob(mean, self.base.log_std, actions)
        reg = self.cfg.beta_inj * tsum(inj_norm) * (1.0 / inj_norm.size)
        if self.cfg.kappa_eta > 0 and self.adapters.layers:
            sq = Tensor(0.0)
            for layer in self.adapters.layers:
                for t in layer.values():
                    sq = sq + tsum(square(t))
            reg = reg + self.cfg.kappa_eta * sqrt(sq + 1e-12)
        return lp, reg

    def regularizer_value(self, obs: np.ndarray, goal: np.ndarray, ctrl=None) -> float:
        with no_grad():
            _, reg = self.logprob_reg(
                Tensor(obs), Tensor(goal),
                Tensor(np.zeros((obs.shape[0], self.base.dims.action))),
                None if ctrl is None else Tensor(ctrl),
            )
        return float(reg.data)

    def mean_injection_norm(self, obs: np.ndarray, goal: np.ndarray, ctrl=None) -> float:
        offs = self.injector.offsets_np(obs, goal, ctrl)
        cat = np.concatenate([offs[s] for s in sorted(offs)], axis=1)
        return float(np.mean(np.linalg.norm(cat, axis=1)))

    # -- persistence ----------------------------------------------------------

    def save(self, path) -> None:
        save_checkpoint(self.atree, path, manifest=self.cfg.manifest(self.base_hash or ""))


def build_adapted(base_checkpoint, dims: NetDims, cfg: AdapterConfig,
                  seed: int = 0, probe_states: int = 16) -> AdaptedPolicy:
    """Load a frozen base, attach zero-initialized adaptation, verify identity."""
    base = PolicyNet(dims, np.random.default_rng(seed))
    load_checkpoint(base_checkpoint, into=base.tree)
    adapted = AdaptedPolicy(base, cfg, seed=seed,
                            base_hash=checkpoint_hash(base_checkpoint))
    verify_zero_init(adapted, probe_states, seed)
    return adapted


def load_adapter(path, base_checkpoint, dims: NetDims, seed: int = 0) -> AdaptedPolicy:
    """Rebuild an AdaptedPolicy from an adapter checkpoint and its base."""
    probe_tree, manifest = load_checkpoint(path)
    cfg = AdapterConfig(
        sites=tuple(manifest["sites"]),
        kind=manifest["kind"],
        rank=manifest["rank"] or 8,
        with_terrain=manifest["with_terrain"],
        alpha=manifest.get("alpha", 1.0),
    )
    base_hash = checkpoint_hash(base_checkpoint)
    if manifest["base_checkpoint"] and manifest["base_checkpoint"] != base_hash:
        raise ValueError("adapter was trained against a different base checkpoint")
    adapted = build_adapted(base_checkpoint, dims, cfg, seed=seed)
    load_checkpoint(path, into=adapted.atree)
    return adapted


def verify_zero_init(adapted: AdaptedPolicy, n_states: int, seed: int) -> None:
    rng = np.random.default_rng(seed + 1)
    dims = adapted.base.dims
    obs = rng.normal(size=(n_states, dims.frames, dims.obs_frame))
    goal = rng.normal(size=(n_states, dims.goal))
    ctrl = rng.normal(size=(n_states, adapted.injector.dims.terrain_window)) \
        if adapted.cfg.with_terrain else None
    base_mean, _ = adapted.base.forward(Tensor(obs), Tensor(goal))
    for alpha in (0.0, 0.5, 1.0):
        mean, _, _ = adapted.forward(
            Tensor(obs), Tensor(goal), None if ctrl is None else Tensor(ctrl), alpha=alpha
        )
        if not np.array_equal(mean.data, base_mean.data):
            raise AssertionError("zero-initialized adapted policy deviates from base")


def blend_two(a: AdaptedPolicy, b: AdaptedPolicy, alpha: float, obs: Tensor,
              goal: Tensor, ctrl: Tensor | None = None):
    """Interpolate two adaptations of the same base: alpha*a + (1-alpha)*b."""
    if a.base is not b.base and a.base_hash != b.base_hash:
        raise ValueError("blend requires adapters built on the same base checkpoint")
    if tuple(a.cfg.sites) != tuple(b.cfg.sites):
        raise ValueError("blend requires matching injection sites")
    return a.forward(obs, goal, ctrl, alpha=alpha, second=b)


class BlendActor:
    """Rollout-facing actor evaluating a two-adapter blend at a fixed alpha."""

    def __init__(self, a: AdaptedPolicy, b: AdaptedPolicy, alpha: float):
        if a.base_hash != b.base_hash:
            raise ValueError("blend requires adapters built on the same base checkpoint")
        self.a = a
        self.b = b
        self.alpha = alpha

    def act(self, obs, goal, ctrl, rng):
        mean, z0 = self.a.forward_np(obs, goal, ctrl, alpha=self.alpha, second=self.b)
        if rng is None:
            actions = mean.copy()
        else:
            std = np.exp(self.a.base.log_std.data)
            actions = mean + std * rng.standard_normal(mean.shape)
        logp = gaussian_logprob_np(mean, self.a.base.log_std.data, actions)
        return actions, logp, z0


class MergedPolicy:
    """Base network with adapter increments folded into the trunk weights.

    The injector cannot fold (it is input dependent) and stays as a parallel
    branch on its sites, scaled by the merge-time alpha.
    """

    def __init__(self, adapted: AdaptedPolicy, alpha: float):
        self.dims = adapted.base.dims
        self.alpha = alpha
        self.injector = adapted.injector
        self.cfg = adapted.cfg
        self.net = PolicyNet(self.dims, np.random.default_rng(0))
        self.net.tree.load_arrays(
            {n: t.data.copy() for n, t in adapted.base.tree.entries.items()}
        )
        if adapted.adapters.layers:
            for i in range(len(self.net.trunk)):
                dw, db = adapted.adapters.delta_weight(i)
                self.net.trunk[i].W.data = self.net.trunk[i].W.data + alpha * dw
                self.net.trunk[i].b.data = self.net.trunk[i].b.data + alpha * db

    def forward(self, obs: Tensor, goal: Tensor, ctrl: Tensor | None = None) -> Tensor:
        offs = self.injector.offsets(obs, goal, ctrl)
        z = self.net.encode(obs, goal)
        if 0 in offs:
            z = z + self.alpha * offs[0]
        for i, layer in enumerate(self.net.trunk):
            z = relu(layer(z))
            if (i + 1) in offs:
                z = z + self.alpha * offs[i + 1]
        return self.net.head(z)


def merge(adapted: AdaptedPolicy, alpha: float | None = None) -> MergedPolicy:
    return MergedPolicy(adapted, adapted.alpha if alpha is None else alpha)


def prune_adapted(adapted: AdaptedPolicy, locked_indices) -> AdaptedPolicy:
    """Prune the frozen base's action outputs; adapters and injector carry over."""
    new_base = prune_locked_outputs(adapted.base, locked_indices)
    out = AdaptedPolicy(new_base, adapted.cfg, seed=0, base_hash=adapted.base_hash)
    out.atree.load_arrays({n: t.data.copy() for n, t in adapted.atree.entries.items()})
    out.alpha = adapted.alpha
    return out


def prune_locked_outputs(net: PolicyNet, locked_indices) -> PolicyNet:
    """Drop action-head columns and log_std entries for locked joints."""
    locked = sorted(set(int(i) for i in locked_indices))
    n_act = net.dims.action
    for i in locked:
        if not (0 <= i < n_act):
            raise ValueError(f"locked index {i} outside action range {n_act}")
    keep = [i for i in range(n_act) if i not in locked]
    if not keep:
        raise ValueError("cannot prune every action output")
    dims = NetDims(**{**net.dims.__dict__, "action": len(keep)})
    out = PolicyNet(dims, np.random.default_rng(0))
    arrays = {}
    for n, t in net.tree.entries.items():
        if n == "head.W":
            arrays[n] = t.data[:, keep].copy()
        elif n in ("head.b", "log_std"):
            arrays[n] = t.data[keep].copy()
        else:
            arrays[n] = t.data.copy()
    out.tree.load_arrays(arrays)
    return out
