"""Latent sample collection from running policies."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..train.rollout import ScenarioSpec, WalkerEnv


@dataclass
class LatentSet:
    """Tagged z0 samples plus bookkeeping for projection and CSV export."""

    dim: int
    samples: list = field(default_factory=list)   # (tag, episode, t, vector)
    tags: set = field(default_factory=set)

    def add(self, tag: str, episode: int, t: int, z: np.ndarray) -> None:
        if z.shape != (self.dim,):
            raise ValueError(f"latent dim mismatch: {z.shape} vs {(self.dim,)}")
        self.samples.append((tag, episode, t, np.asarray(z, dtype=float)))
        self.tags.add(tag)

    def matrix(self, tags=None) -> tuple[np.ndarray, list]:
        rows = [s for s in self.samples if tags is None or s[0] in tags]
        return np.stack([s[3] for s in rows]) if rows else np.zeros((0, self.dim)), rows

    def mean_norm(self, tag: str) -> float:
        m, _ = self.matrix([tag])
        return float(np.mean(np.linalg.norm(m, axis=1))) if len(m) else 0.0


def collect_latents(policy_like, spec: ScenarioSpec, tag: str, steps: int,
                    seed: int, base_policy=None, out: LatentSet | None = None) -> LatentSet:
    """Run a straight-path deterministic episode and record z0 per tick.

    When ``base_policy`` is given (the frozen pre-trained policy while an
    adapted one drives), its encoder latents are recorded under
    ``tag + ":base-encoder"`` for the safe-region comparison.
    """
    env = WalkerEnv(spec, seed=seed, eval_mode=True)
    episode = 0
    for t in range(steps):
        o, g, c = env.obs()
        act, _, z0 = policy_like.act(o[None], g[None], None if c is None else c[None], None)
        if out is None:
            out = LatentSet(dim=z0.shape[1])
        out.add(tag, episode, t, z0[0])
        if base_policy is not None:
            z_base = base_policy.encoder.forward_np(o[None], g[None])
            out.add(f"{tag}:base-encoder", episode, t, z_base[0])
        info = env.step(act[0])
        if info["terminal"]:
            episode += 1
    return out


def save_latents_csv(latents: LatentSet, path) -> None:
    import csv
    from pathlib import Path

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        wr = csv.writer(f)
        wr.writerow(["tag", "episode", "t"] + [f"z{i}" for i in range(latents.dim)])
        for tag, ep, t, z in latents.samples:
            wr.writerow([tag, ep, t] + [repr(float(v)) for v in z])
