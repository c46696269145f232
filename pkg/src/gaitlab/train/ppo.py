"""Clipped-surrogate policy optimization over the multi-critic advantages."""

from __future__ import annotations

import numpy as np

from ..nn.layers import gaussian_logprob
from ..nn.nets import CriticNet, PolicyNet
from ..nn.optim import Adam
from ..nn.tensor import Tensor, exp, relu, sqrt, tsum, square, mul
from .gae import gae_batch, standardize_multi
from .rollout import OBJECTIVES, RolloutBatch


class TrainablePolicy:
    """Uniform training interface over a plain policy network.

    Subclasses/alternatives provide the same surface for adapted policies:
    ``act`` for collection, ``logprob_reg`` for the surrogate, ``opt_tree``
    for the optimizer, plus an optional additive loss (regularizers).
    """

    def __init__(self, net: PolicyNet):
        self.net = net

    @property
    def opt_tree(self):
        return self.net.tree

    def act(self, obs: np.ndarray, goal: np.ndarray, ctrl, rng):
        return self.net.act(obs, goal, rng)

    def logprob_reg(self, obs: Tensor, goal: Tensor, actions: Tensor, ctrl) -> tuple[Tensor, Tensor]:
        return self.net.logprob(obs, goal, actions), Tensor(0.0)


class WeightAnchoredPolicy(TrainablePolicy):
    """Finetuning with an L2 pull toward the initial weights (per-tensor norms)."""

    def __init__(self, net: PolicyNet, anchor_strength: float):
        super().__init__(net)
        self.anchor_strength = anchor_strength
        self.anchor = {n: t.data.copy() for n, t in net.tree.entries.items()}

    def logprob_reg(self, obs, goal, actions, ctrl):
        lp, _ = super().logprob_reg(obs, goal, actions, ctrl)
        reg = Tensor(0.0)
        for n, t in self.net.tree.trainable().items():
            diff = t - Tensor(self.anchor[n])
            reg = reg + sqrt(tsum(square(diff)) + 1e-12)
        return lp, self.anchor_strength * reg


def _clip_t(x: Tensor, lo: float, hi: float) -> Tensor:
    return lo + relu(x - lo) - relu(x - hi)


def _min_t(a: Tensor, b: Tensor) -> Tensor:
    return a - relu(a - b)


def combined_advantages(batch: RolloutBatch, gamma: float, lam: float,
                        omega: dict[str, float]):
    """GAE per objective, standardized independently, then convexly combined."""
    adv = {}
    ret = {}
    for k in OBJECTIVES:
        a, r = gae_batch(batch.rew[k], batch.values[k], batch.dones,
                         gamma, lam, batch.bootstrap[k])
        adv[k] = a.reshape(-1)
        ret[k] = r.reshape(-1)
    combined = standardize_multi(adv, omega)
    returns = np.stack([ret[k] for k in OBJECTIVES], axis=1)  # (B, 2)
    return combined, returns


def ppo_update(policy: TrainablePolicy, policy_opt: Adam, critic: CriticNet,
               critic_opt: Adam, batch: RolloutBatch, combined_adv: np.ndarray,
               returns: np.ndarray, clip_eps: float, epochs: int,
               minibatch: int, rng: np.random.Generator) -> dict:
    """Clipped-surrogate ascent plus per-head critic regression.

    Frozen tree entries are untouched by construction (the optimizers skip
    them). Returns mean importance ratio and clip fraction over all
    minibatches; aborts on non-finite losses.
    """
    obs = batch.obs.reshape((-1,) + batch.obs.shape[2:])
    goal = batch.goal.reshape(-1, batch.goal.shape[-1])
    ctrl = None if batch.ctrl is None else batch.ctrl.reshape(-1, batch.ctrl.shape[-1])
    actions = batch.actions.reshape(-1, batch.actions.shape[-1])
    logp_old = batch.logp.reshape(-1)
    B = logp_old.shape[0]

    ratios = []
    clipped = []
    pi_losses = []
    v_losses = []
    for _ in range(epochs):
        order = rng.permutation(B)
        for start in range(0, B, minibatch):
            idx = order[start : start + minibatch]
            if idx.size < 2:
                continue
            o_t = Tensor(obs[idx])
            g_t = Tensor(goal[idx])
            c_t = None if ctrl is None else Tensor(ctrl[idx])
            a_t = Tensor(actions[idx])
            adv_t = Tensor(combined_adv[idx])
            lp_old = Tensor(logp_old[idx])

            lp_new, reg = policy.logprob_reg(o_t, g_t, a_t, c_t)
            ratio = exp(lp_new - lp_old)
            surr = _min_t(mul(ratio, adv_t),
                          mul(_clip_t(ratio, 1.0 - clip_eps, 1.0 + clip_eps), adv_t))
            pi_loss = -tsum(surr) * (1.0 / idx.size) + reg
            if not np.isfinite(pi_loss.data):
                return {"aborted": True, "reason": "non-finite policy loss"}
            policy_opt.step_loss(pi_loss)

            v = critic.values(o_t, g_t, c_t)
            v_loss = tsum(square(v - Tensor(returns[idx]))) * (1.0 / idx.size)
            if not np.isfinite(v_loss.data):
                return {"aborted": True, "reason": "non-finite value loss"}
            critic_opt.step_loss(v_loss)

            ratios.append(float(np.mean(ratio.data)))
            clipped.append(float(np.mean(np.abs(ratio.data - 1.0) > clip_eps)))
            pi_losses.append(float(pi_loss.data))
            v_losses.append(float(v_loss.data))

    return {
        "aborted": False,
        "mean_ratio": float(np.mean(ratios)),
        "clip_fraction": float(np.mean(clipped)),
        "pi_loss": float(np.mean(pi_losses)),
        "v_loss": float(np.mean(v_losses)),
    }
