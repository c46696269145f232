"""Scratch / finetune / regularized-finetune training variants."""

from __future__ import annotations

import numpy as np

from ..nn.checkpoint import load_checkpoint
from ..nn.nets import CriticNet, DiscriminatorEnsemble, NetDims, PolicyNet
from .loop import TrainConfig, TrainResult, build_nets, train
from .ppo import TrainablePolicy, WeightAnchoredPolicy
from .rollout import ScenarioSpec

BASELINE_KINDS = ("scratch", "ft", "ft_reg")


def make_baseline_policy(kind: str, dims: NetDims, seed: int,
                         base_checkpoint=None, reg_strength: float = 0.01):
    """Policy wrapper for one baseline; discriminator/critic are always fresh."""
    if kind not in BASELINE_KINDS:
        raise ValueError(f"unknown baseline kind: {kind}")
    rng = np.random.default_rng(seed)
    net = PolicyNet(dims, rng)
    if kind == "scratch":
        return TrainablePolicy(net)
    if base_checkpoint is None:
        raise ValueError(f"baseline {kind} needs a pre-trained checkpoint")
    load_checkpoint(base_checkpoint, into=net.tree)
    net.tree.thaw()  # finetuning trains every parameter
    if kind == "ft":
        return TrainablePolicy(net)
    return WeightAnchoredPolicy(net, reg_strength)


def run_baseline(kind: str, spec: ScenarioSpec, dims: NetDims, cfg: TrainConfig,
                 base_checkpoint=None, out_dir=None,
                 reg_strength: float = 0.01) -> TrainResult:
    policy = make_baseline_policy(kind, dims, cfg.seed, base_checkpoint, reg_strength)
    _, critic, disc = build_nets(dims, cfg.seed + 1,
                                 with_terrain=spec.terrain_input)
    return train(policy, critic, disc, spec, cfg, out_dir=out_dir)
