"""Procedural cyclic gait clips and forward kinematics.

Replaces recorded motion data with a parametric sinusoidal gait: stride,
cadence, torso lean, knee lift, and left/right asymmetry span a small space
of walking styles used as imitation references.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from ..sim.morphology import Morphology

FRAME_RATE = 30.0


@dataclass(frozen=True)
class GaitParams:
    stride: float = 1.0       # meters advanced per full cycle
    cadence: float = 1.0      # cycle duration, seconds
    lean: float = 0.0         # forward torso pitch, radians
    knee_lift: float = 0.45   # swing-phase knee flexion, radians
    asymmetry: float = 0.0    # 0 = symmetric; 1 = right leg fully attenuated
    stance_knee: float = 0.06 # constant knee flexion during stance

    def validate(self, morph: Morphology) -> None:
        if not (0.0 < self.cadence <= 4.0):
            raise ValueError(f"cadence out of range: {self.cadence}")
        if not (0.0 <= self.stride <= 2.5):
            raise ValueError(f"stride out of range: {self.stride}")
        if not (0.0 <= self.asymmetry <= 1.0):
            raise ValueError(f"asymmetry out of range: {self.asymmetry}")
        qs = [joint_targets(self, p) for p in np.linspace(0, 1, 60, endpoint=False)]
        lo = np.array([j.lo for j in morph.actuated_joints()])
        hi = np.array([j.hi for j in morph.actuated_joints()])
        if len(lo) != 6:
            return  # targets are defined for the 6-joint layout only
        qs = np.array(qs)
        if np.any(qs < lo - 1e-9) or np.any(qs > hi + 1e-9):
            raise ValueError("gait parameters violate joint limits")


STYLE_PRESETS = {
    "walk": GaitParams(),
    "stoop": GaitParams(lean=0.5),
    "stomp": GaitParams(knee_lift=1.1),
    "limp": GaitParams(asymmetry=0.55),
    "pace": GaitParams(cadence=1.45, stride=0.8),
}


def _swing_bump(phase: float) -> float:
    """C1-smooth bump over the swing half of the cycle (phase in [0.5, 1))."""
    p = phase % 1.0
    if p < 0.5:
        return 0.0
    return math.sin(math.pi * (p - 0.5) / 0.5) ** 2


def _leg_targets(params: GaitParams, phase: float, amp_scale: float,
                 leg_len: float) -> tuple[float, float, float]:
    a_hip = math.asin(min(0.9, params.stride / (4.0 * leg_len))) * amp_scale
    q_hip = a_hip * math.cos(2.0 * math.pi * phase) + 0.5 * params.lean
    q_knee = -params.stance_knee - params.knee_lift * amp_scale * _swing_bump(phase)
    # level the foot (shin pitch is torso + hip + knee with torso at -lean),
    # saturating inside the ankle's travel
    q_ankle = max(-0.85, min(0.85, -(-params.lean + q_hip + q_knee)))
    return q_hip, q_knee, q_ankle


def joint_targets(params: GaitParams, phase: float,
                  leg_len: float = 0.9) -> np.ndarray:
    """Actuated-joint angles [l_hip, l_knee, l_ankle, r_hip, r_knee, r_ankle]."""
    left = _leg_targets(params, phase, 1.0, leg_len)
    right = _leg_targets(params, phase + 0.5, 1.0 - params.asymmetry, leg_len)
    return np.array(left + right)


def fk_pose(morph: Morphology, root_pos, root_ang: float, q: dict) -> np.ndarray:
    """World (x, y, angle) of every link given root pose and joint angles."""
    out = np.zeros((morph.n_links, 3))
    root = morph.link_index("torso")
    out[root] = (root_pos[0], root_pos[1], root_ang)
    # walk the joint list in order; parents appear before children for the biped
    for j in morph.joints:
        pi = morph.link_index(j.parent)
        ci = morph.link_index(j.child)
        qj = q.get(j.name, 0.0)
        pa = out[pi, 2]
        anchor = out[pi, :2] + _rot(pa) @ np.asarray(j.anchor_parent)
        ca = pa + qj
        out[ci, 2] = ca
        out[ci, :2] = anchor - _rot(ca) @ np.asarray(j.anchor_child)
    return out


def _rot(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, -s], [s, c]])


@dataclass
class ReferenceClip:
    frames: np.ndarray        # (F, L, 3): world x, y, angle per link at 30 Hz
    cycle: float              # seconds per gait cycle
    stride: float             # meters advanced per cycle
    style: str = "walk"

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]

    def frame_indices(self, start: int, count: int) -> np.ndarray:
        """Consecutive frames with cyclic wrap; x advances by stride per cycle."""
        F = self.n_frames
        out = np.zeros((count,) + self.frames.shape[1:])
        for k in range(count):
            i = start + k
            wraps, idx = divmod(i, F)
            f = self.frames[idx].copy()
            f[:, 0] += wraps * self.stride
            out[k] = f
        return out

    def velocities(self, idx: int) -> tuple[np.ndarray, np.ndarray]:
        """Per-link linear and angular velocity at a frame, central difference."""
        trio = self.frame_indices(idx - 1 + self.n_frames, 3)  # avoids negative index
        dtf = 2.0 / FRAME_RATE
        lin = (trio[2, :, :2] - trio[0, :, :2]) / dtf
        ang = (trio[2, :, 2] - trio[0, :, 2]) / dtf
        return lin, ang


def generate_clip(params: GaitParams, morph: Morphology, style: str = "walk") -> ReferenceClip:
    params.validate(morph)
    F = max(2, round(params.cadence * FRAME_RATE))
    thigh = next(l for l in morph.links if l.name.endswith("_thigh"))
    shin = next(l for l in morph.links if l.name.endswith("_shin"))
    leg_len = thigh.length + shin.length
    frames = np.zeros((F, morph.n_links, 3))
    speed = params.stride / params.cadence
    sole_idx = [(morph.link_index(l.name), np.asarray(l.contacts))
                for l in morph.links if l.contacts]
    for k in range(F):
        t = k / FRAME_RATE
        phase = t / params.cadence
        qv = joint_targets(params, phase, leg_len)
        q = dict(zip(["l_hip", "l_knee", "l_ankle", "r_hip", "r_knee", "r_ankle"], qv))
        pose = fk_pose(morph, (speed * t, 0.0), -params.lean, q)
        # drop the root so the lowest sole point touches the ground
        low = min(
            float((pose[i, :2] + _rot(pose[i, 2]) @ c)[1])
            for i, cs in sole_idx for c in cs
        )
        pose[:, 1] -= low
        frames[k] = pose
    return ReferenceClip(frames, params.cadence, params.stride, style)


def save_clip_csv(clip: ReferenceClip, path, morph: Morphology) -> None:
    names = morph.link_names()
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        wr = csv.writer(f)
        wr.writerow(["frame", "link", "x", "y", "angle"])
        for k in range(clip.n_frames):
            for li, name in enumerate(names):
                x, y, a = clip.frames[k, li]
                wr.writerow([k, name, repr(float(x)), repr(float(y)), repr(float(a))])


def load_clip_csv(path, morph: Morphology, cycle: float, stride: float,
                  style: str = "walk") -> ReferenceClip:
    rows: dict[int, dict[str, tuple]] = {}
    with open(path) as f:
        for row in csv.DictReader(f):
            rows.setdefault(int(row["frame"]), {})[row["link"]] = (
                float(row["x"]), float(row["y"]), float(row["angle"])
            )
    F = len(rows)
    frames = np.zeros((F, morph.n_links, 3))
    for k in range(F):
        for li, name in enumerate(morph.link_names()):
            frames[k, li] = rows[k][name]
    return ReferenceClip(frames, cycle, stride, style)
