"""Generalized advantage estimation and multi-objective standardization."""

from __future__ import annotations

import numpy as np


def gae(rewards: np.ndarray, values: np.ndarray, dones: np.ndarray,
        gamma: float, lam: float, bootstrap: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    """Advantages and returns for one trajectory segment.

    ``dones`` marks terminal steps (bootstrap value 0 there); the segment tail
    bootstraps with ``bootstrap`` when the last step is non-terminal.
    Returns are advantages + values.
    """
    rewards = np.asarray(rewards, dtype=float)
    values = np.asarray(values, dtype=float)
    dones = np.asarray(dones, dtype=float)
    T = len(rewards)
    if not (len(values) == len(dones) == T):
        raise ValueError(f"length mismatch: r={T} v={len(values)} d={len(dones)}")
    adv = np.zeros(T)
    acc = 0.0
    v_next = bootstrap
    for t in range(T - 1, -1, -1):
        nonterm = 1.0 - dones[t]
        delta = rewards[t] + gamma * v_next * nonterm - values[t]
        acc = delta + gamma * lam * nonterm * acc
        adv[t] = acc
        v_next = values[t]
    return adv, adv + values


def gae_batch(rewards: np.ndarray, values: np.ndarray, dones: np.ndarray,
              gamma: float, lam: float, bootstrap: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-worker GAE over (W, T) arrays; bootstrap is (W,)."""
    W, T = rewards.shape
    adv = np.zeros((W, T))
    ret = np.zeros((W, T))
    for w in range(W):
        adv[w], ret[w] = gae(rewards[w], values[w], dones[w], gamma, lam, float(bootstrap[w]))
    return adv, ret


def standardize(adv: np.ndarray, eps: float = 1e-8) -> np.ndarray:
    """Zero-mean unit-variance (population std); zero-variance batches map to 0."""
    adv = np.asarray(adv, dtype=float)
    std = adv.std()
    if std < eps:
        return np.zeros_like(adv)
    return (adv - adv.mean()) / (std + eps)


def standardize_multi(advantages: dict[str, np.ndarray], omega: dict[str, float],
                      eps: float = 1e-8) -> np.ndarray:
    """Independently standardized per-objective advantages, convexly combined."""
    keys = sorted(advantages)
    if abs(sum(omega[k] for k in keys) - 1.0) > 1e-9:
        raise ValueError(f"objective weights must sum to 1, got {omega}")
    out = None
    for k in keys:
        if advantages[k].size == 0:
            raise ValueError(f"empty advantage batch for objective {k}")
        part = omega[k] * standardize(advantages[k], eps)
        out = part if out is None else out + part
    return out
