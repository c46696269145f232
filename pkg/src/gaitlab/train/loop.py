"""Training orchestration: pretraining, adaptation, evaluation, metrics."""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..motion.metrics import aligned_imitation_error
from ..motion.observe import FeatureMap, clip_windows_dataset, disc_window_dim
from ..nn.nets import CriticNet, DiscriminatorEnsemble, NetDims, PolicyNet
from ..nn.optim import Adam
from .disc import WindowBuffer, disc_update, imitation_reward
from .ppo import TrainablePolicy, combined_advantages, ppo_update
from .rollout import ScenarioSpec, WalkerEnv, collect_rollouts


@dataclass
class TrainConfig:
    """Optimization hyperparameters; defaults follow the published table."""

    gamma: float = 0.95
    gae_lambda: float = 0.95
    clip_eps: float = 0.2
    lambda_gp: float = 10.0
    workers: int = 32
    buffer_size: int = 4096
    minibatch: int = 256
    epochs: int = 5
    disc_buffer: int = 8192
    disc_batch: int = 512
    disc_updates: int = 2
    gp_samples: int = 32
    lr_policy: float = 5e-6
    lr_critic: float = 1e-4
    lr_disc: float = 1e-5
    omega: dict = field(default_factory=lambda: {"imitation": 0.5, "goal": 0.5})
    beta_inj: float = 0.01   # injection-norm regularizer (adaptation only)
    kappa_eta: float = 0.01  # adapter-weight regularizer (adaptation only)
    iterations: int = 200
    eval_every: int = 10
    eval_steps: int = 240
    seed: int = 0

    @property
    def horizon(self) -> int:
        return max(1, self.buffer_size // self.workers)


METRIC_COLUMNS = [
    "iteration", "samples", "goal_reward", "imit_reward", "imit_error",
    "clip_fraction", "mean_ratio", "disc_hinge_real", "disc_hinge_fake",
    "disc_gp", "inj_norm", "falls",
]


class MetricsWriter:
    def __init__(self, path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = open(self.path, "w", newline="")
        self._wr = csv.writer(self._fh)
        self._wr.writerow(METRIC_COLUMNS)

    def write(self, row: dict) -> None:
        self._wr.writerow([repr(float(row.get(c, 0.0))) if c != "iteration"
                           else int(row[c]) for c in METRIC_COLUMNS])
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()


def evaluate(policy_like, spec: ScenarioSpec, disc, seed: int, steps: int = 240,
             record_frames: bool = False) -> dict:
    """Deterministic rollout: mean rewards, imitation error, optional frames."""
    env = WalkerEnv(spec, seed=seed, eval_mode=True)
    goal_rs = []
    imit_rs = []
    frames = []
    falls = 0
    for _ in range(steps):
        o, g, c = env.obs()
        act, _, _ = policy_like.act(o[None], g[None], None if c is None else c[None], None)
        info = env.step(act[0])
        goal_rs.append(info["r_goal"])
        if disc is not None:
            imit_rs.append(float(imitation_reward(disc, env.window()[None])[0]))
        if record_frames:
            s = env.history[-1]
            frames.append(np.concatenate([s.pos, s.ang[:, None]], axis=1))
        if info["terminal"]:
            falls += 1
    out = {
        "goal_reward": float(np.mean(goal_rs)),
        "imit_reward": float(np.mean(imit_rs)) if imit_rs else 0.0,
        "falls": float(falls),
    }
    sim = np.array(frames) if frames else None
    if sim is not None and len(sim) >= 2:
        errs, _ = aligned_imitation_error(sim[:, :, :2], spec.clip)
        out["imit_error"] = float(errs.mean())
    return out, sim


def eval_imitation_error(policy_like, spec: ScenarioSpec, seed: int, steps: int = 150) -> float:
    out, _ = evaluate(policy_like, spec, None, seed, steps, record_frames=True)
    return out.get("imit_error", float("nan"))


@dataclass
class TrainResult:
    iterations: int
    samples: int
    metrics_path: Path | None
    final_eval: dict
    inj_norms: list = field(default_factory=list)


def train(policy_like, critic: CriticNet, disc: DiscriminatorEnsemble,
          spec: ScenarioSpec, cfg: TrainConfig, out_dir=None,
          inj_norm_fn=None, progress=None) -> TrainResult:
    """Shared multi-objective loop for pretraining, adaptation, and baselines.

    ``inj_norm_fn(batch) -> float`` reports the mean injection norm for
    adapted policies (0 for plain ones).
    """
    rng = np.random.default_rng(cfg.seed)
    envs = [WalkerEnv(spec, seed=int(rng.integers(2**31))) for _ in range(cfg.workers)]
    fm = FeatureMap(spec.morph)
    real_windows = clip_windows_dataset(fm, spec.clip)
    buffer = WindowBuffer(cfg.disc_buffer, disc_window_dim(spec.morph))

    policy_opt = Adam(policy_like.opt_tree, cfg.lr_policy)
    critic_opt = Adam(critic.tree, cfg.lr_critic)
    disc_opt = Adam(disc.tree, cfg.lr_disc)

    writer = MetricsWriter(Path(out_dir) / "metrics.csv") if out_dir else None
    samples = 0
    inj_norms = []
    last_eval = {}

    def log_eval(iteration):
        nonlocal last_eval
        ev, _ = evaluate(policy_like, spec, disc, seed=cfg.seed + 7777,
                         steps=cfg.eval_steps, record_frames=True)
        last_eval = ev
        return ev

    for it in range(cfg.iterations + 1):
        do_eval = it % cfg.eval_every == 0 or it == cfg.iterations
        row = {"iteration": it, "samples": samples}
        if do_eval:
            row.update(log_eval(it))
        if it == cfg.iterations:
            if writer:
                row.setdefault("inj_norm", inj_norms[-1] if inj_norms else 0.0)
                writer.write(row)
            break

        batch = collect_rollouts(envs, policy_like, critic, disc,
                                 cfg.horizon, rng)
        samples += batch.n_samples
        buffer.push(batch.windows.reshape(-1, batch.windows.shape[-1]))

        half = cfg.disc_batch // 2
        disc_stats = {}
        for _ in range(cfg.disc_updates):
            real = real_windows[rng.integers(0, len(real_windows), size=half)]
            fake = buffer.sample(half, rng)
            disc_stats = disc_update(disc, disc_opt, real, fake,
                                     cfg.lambda_gp, rng, cfg.gp_samples)

        adv, rets = combined_advantages(batch, cfg.gamma, cfg.gae_lambda, cfg.omega)
        stats = ppo_update(policy_like, policy_opt, critic, critic_opt, batch,
                           adv, rets, cfg.clip_eps, cfg.epochs, cfg.minibatch, rng)
        if stats.get("aborted"):
            raise RuntimeError(f"policy update aborted: {stats['reason']}")

        inj = float(inj_norm_fn(batch)) if inj_norm_fn else 0.0
        inj_norms.append(inj)
        row.update(stats)
        row.update(disc_stats)
        row["inj_norm"] = inj
        row["imit_reward"] = float(np.mean(batch.rew["imitation"]))
        if not do_eval:
            row["goal_reward"] = float(np.mean(batch.rew["goal"]))
        row["falls"] = float(sum(e.falls for e in envs))
        if writer:
            writer.write(row)
        if progress:
            progress(it, row)

    if writer:
        writer.close()
    return TrainResult(cfg.iterations, samples, writer.path if writer else None,
                       last_eval, inj_norms)


def build_nets(dims: NetDims, seed: int, with_terrain: bool = False):
    """Fresh policy/critic/discriminator triple with independent streams."""
    ss = np.random.SeedSequence(seed)
    r_pol, r_cri, r_dis = [np.random.default_rng(s) for s in ss.spawn(3)]
    policy = PolicyNet(dims, r_pol)
    critic = CriticNet(dims, r_cri, with_terrain=with_terrain)
    disc = DiscriminatorEnsemble(dims, r_dis)
    return policy, critic, disc
