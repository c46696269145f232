"""Procedural 1-D terrain and the local height window used as control input."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .kernels import terrain_height

H_MAX_DEFAULT = 0.75


@dataclass
class TerrainParams:
    length: float = 60.0          # meters of generated ground, centered on 0
    spacing: float = 0.1
    noise_octaves: int = 3
    noise_amplitude: float = 1.0  # value-noise weight (pre-normalization units)
    uniform_amplitude: float = 0.0
    n_blocks: int = 0             # rectangular steps dropped onto the profile
    block_height: float = 0.3
    block_width: float = 1.0
    slope_cutoff: float = 0.0     # clip |dh/dx| above this (0 disables)
    h_max: float = H_MAX_DEFAULT
    spawn_pad: float = 3.0        # flat region radius around x=0


@dataclass
class Terrain:
    samples: np.ndarray
    spacing: float
    x0: float

    # scalar lookups stay in plain Python: calling the jitted kernel from
    # Python pays boxing overhead on every call
    def height(self, x: float) -> float:
        hts = self.samples
        u = (x - self.x0) / self.spacing
        if u <= 0.0:
            return float(hts[0])
        if u >= len(hts) - 1:
            return float(hts[-1])
        i = int(u)
        f = u - i
        return float(hts[i] * (1.0 - f) + hts[i + 1] * f)

    def slope(self, x: float) -> float:
        u = (x - self.x0) / self.spacing
        if u <= 0.0 or u >= len(self.samples) - 1:
            return 0.0
        i = int(u)
        return float((self.samples[i + 1] - self.samples[i]) / self.spacing)

    @property
    def x_max(self) -> float:
        return self.x0 + (len(self.samples) - 1) * self.spacing


def flat_terrain(length: float = 200.0, spacing: float = 1.0) -> Terrain:
    n = int(length / spacing) + 1
    return Terrain(np.zeros(n), spacing, -length / 2)


def _value_noise(rng: np.random.Generator, n: int, octaves: int) -> np.ndarray:
    """Classic 1-D value noise: cosine-blended random lattices, halving amplitude."""
    out = np.zeros(n)
    amp = 1.0
    period = max(n // 4, 2)
    for _ in range(octaves):
        knots = rng.uniform(-1.0, 1.0, size=n // period + 2)
        idx = np.arange(n) / period
        i0 = idx.astype(int)
        f = idx - i0
        w = 0.5 - 0.5 * np.cos(np.pi * f)  # smooth interpolation weight
        out += amp * (knots[i0] * (1 - w) + knots[i0 + 1] * w)
        amp *= 0.5
        period = max(period // 2, 2)
    return out


def generate_terrain(seed: int, params: TerrainParams) -> Terrain:
    rng = np.random.default_rng(seed)
    n = int(params.length / params.spacing) + 1
    x0 = -params.length / 2
    h = np.zeros(n)
    if params.noise_amplitude > 0 and params.noise_octaves > 0:
        h += params.noise_amplitude * _value_noise(rng, n, params.noise_octaves)
    if params.uniform_amplitude > 0:
        h += rng.uniform(-params.uniform_amplitude, params.uniform_amplitude, size=n)
    for _ in range(params.n_blocks):
        cx = rng.uniform(x0, -x0)
        half_w = params.block_width / 2
        bh = rng.uniform(-params.block_height, params.block_height)
        xs = x0 + np.arange(n) * params.spacing
        h[(xs > cx - half_w) & (xs < cx + half_w)] += bh
    if params.slope_cutoff > 0:
        max_step = params.slope_cutoff * params.spacing
        for i in range(1, n):
            d = h[i] - h[i - 1]
            if d > max_step:
                h[i] = h[i - 1] + max_step
            elif d < -max_step:
                h[i] = h[i - 1] - max_step
    # flatten a spawn region with a smooth envelope, then normalize the range
    if params.spawn_pad > 0:
        xs = x0 + np.arange(n) * params.spacing
        env = np.clip((np.abs(xs) - params.spawn_pad) / params.spawn_pad, 0.0, 1.0)
        h *= 0.5 - 0.5 * np.cos(np.pi * env)
    span = h.max() - h.min()
    if span > 1e-12:
        h = (h - h.min()) / span * (2 * params.h_max) - params.h_max
    return Terrain(h, params.spacing, x0)


def heightfield_window(terrain: Terrain, root_x: float, heading: float,
                       n_samples: int = 32, back: float = 1.0, fwd: float = 2.4) -> np.ndarray:
    """Heights around the root, relative to the ground under the root.

    Sampled over [-back, +fwd] meters along the heading so "ahead" always
    means the direction of travel; out-of-range queries clamp to the edge.
    """
    sgn = 1.0 if heading >= 0 else -1.0
    offsets = np.linspace(-back, fwd, n_samples)
    h0 = terrain.height(root_x)
    return np.array([terrain.height(root_x + sgn * o) - h0 for o in offsets])
