"""Observation construction: pose features, goal state, discriminator windows.

All features live in a heading-canonical frame: when the goal direction is
-x, poses/velocities are mirrored (x and angles negated, left/right links
swapped) so the policy and discriminator always see "forward = +x". Actions
map back through the same mirror. Everything is relative to the root link's
horizontal position, which makes the features translation invariant.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..sim.morphology import Morphology
from ..sim.terrain import Terrain
from ..sim.world import WorldState

HISTORY = 4        # observation frames
DISC_FRAMES = 5    # discriminator window frames
ROOT_FEATS = 6     # height, cos, sin, vx, vy, omega
LINK_FEATS = 7     # relx, rely, cos, sin, relvx, relvy, relomega
POSE_FEATS_PER_LINK = 4  # relx, rely, cos, sin (window features)


@dataclass(frozen=True)
class GoalState:
    direction: float  # +-1, toward the target
    distance: float   # horizontal meters to the target, >= 0
    speed: float      # preferred speed, m/s

    def as_input(self) -> np.ndarray:
        # direction is folded into the canonical mirror, so the network input
        # keeps the slot but always sees the canonical value
        return np.array([1.0, self.distance, self.speed])


def obs_frame_dim(morph: Morphology) -> int:
    return ROOT_FEATS + LINK_FEATS * (morph.n_links - 1)


def obs_dim(morph: Morphology) -> int:
    return HISTORY * obs_frame_dim(morph)


def disc_window_dim(morph: Morphology) -> int:
    return DISC_FRAMES * (3 + POSE_FEATS_PER_LINK * (morph.n_links - 1))


class FeatureMap:
    """Precomputed index maps for one morphology (root, mirror pairs)."""

    def __init__(self, morph: Morphology):
        self.morph = morph
        self.root = morph.link_index("torso")
        self.mirror_links = np.array(morph.mirror_link_order())
        self.mirror_joints = np.array(morph.mirror_joint_order())
        self.nonroot = np.array([i for i in range(morph.n_links) if i != self.root])

    # -- canonical (heading-aligned) pose -----------------------------------

    def canonical_pose(self, pos: np.ndarray, ang: np.ndarray, heading: float):
        """Mirror link poses when heading < 0; returns (pos', ang') copies."""
        if heading >= 0:
            return pos.copy(), ang.copy()
        p = pos[self.mirror_links].copy()
        a = -ang[self.mirror_links]
        rx = pos[self.root, 0]
        p[:, 0] = rx - (p[:, 0] - rx)
        return p, a

    def action_to_world(self, action: np.ndarray, heading: float) -> np.ndarray:
        """Map canonical joint targets back to physical joints."""
        if heading >= 0:
            return action
        return -action[self.mirror_joints]

    def frame_features(self, state: WorldState, heading: float,
                       terrain: Terrain | None = None) -> np.ndarray:
        pos, ang = self.canonical_pose(state.pos, state.ang, heading)
        vel, omg = state.vel, state.omg
        if heading < 0:
            vel = vel[self.mirror_links].copy()
            vel[:, 0] = -vel[:, 0]
            omg = -omg[self.mirror_links]
        r = self.root
        ground = terrain.height(state.pos[r, 0]) if terrain is not None else 0.0
        out = np.empty(ROOT_FEATS + LINK_FEATS * len(self.nonroot))
        out[0] = pos[r, 1] - ground
        out[1] = np.cos(ang[r])
        out[2] = np.sin(ang[r])
        out[3:5] = vel[r]
        out[5] = omg[r]
        nr = self.nonroot
        rel_ang = ang[nr] - ang[r]
        body = out[ROOT_FEATS:].reshape(len(nr), LINK_FEATS)
        body[:, 0:2] = pos[nr] - pos[r]
        body[:, 2] = np.cos(rel_ang)
        body[:, 3] = np.sin(rel_ang)
        body[:, 4:6] = vel[nr] - vel[r]
        body[:, 6] = omg[nr] - omg[r]
        return out

    def window_frame(self, pose: np.ndarray) -> np.ndarray:
        """Window features for one (L, 3) canonical pose array."""
        r = self.root
        nr = self.nonroot
        out = np.empty(3 + POSE_FEATS_PER_LINK * len(nr))
        out[0] = pose[r, 1]
        out[1] = np.cos(pose[r, 2])
        out[2] = np.sin(pose[r, 2])
        rel_ang = pose[nr, 2] - pose[r, 2]
        body = out[3:].reshape(len(nr), POSE_FEATS_PER_LINK)
        body[:, 0:2] = pose[nr, 0:2] - pose[r, 0:2]
        body[:, 2] = np.cos(rel_ang)
        body[:, 3] = np.sin(rel_ang)
        return out


def observe(fm: FeatureMap, history: list[WorldState], goal: GoalState,
            terrain: Terrain | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Stacked (HISTORY, F) pose features plus the goal input vector.

    Short histories at episode start pad by repeating the first frame.
    """
    if not history:
        raise ValueError("observe needs at least one state")
    frames = list(history[-HISTORY:])
    while len(frames) < HISTORY:
        frames.insert(0, frames[0])
    o_t = np.stack([fm.frame_features(s, goal.direction, terrain) for s in frames])
    return o_t, goal.as_input()


def sim_disc_window(fm: FeatureMap, states: list[WorldState], heading: float) -> np.ndarray:
    """Discriminator window from the last DISC_FRAMES control-tick states."""
    frames = list(states[-DISC_FRAMES:])
    while len(frames) < DISC_FRAMES:
        frames.insert(0, frames[0])
    parts = []
    for s in frames:
        pos, ang = fm.canonical_pose(s.pos, s.ang, heading)
        pose = np.concatenate([pos, ang[:, None]], axis=1)
        parts.append(fm.window_frame(pose))
    return np.concatenate(parts)


def clip_disc_window(fm: FeatureMap, frames: np.ndarray) -> np.ndarray:
    """Window from DISC_FRAMES consecutive reference-clip pose frames."""
    return np.concatenate([fm.window_frame(frames[k]) for k in range(frames.shape[0])])


def clip_windows_dataset(fm: FeatureMap, clip, max_windows: int | None = None) -> np.ndarray:
    """All cyclic windows of a reference clip, one row per start frame."""
    F = clip.n_frames
    n = F if max_windows is None else min(F, max_windows)
    return np.stack([
        clip_disc_window(fm, clip.frame_indices(k, DISC_FRAMES)) for k in range(n)
    ])
