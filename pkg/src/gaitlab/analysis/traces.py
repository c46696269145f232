"""Foot-height traces and simple CSV trajectory IO."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from ..sim.morphology import Morphology


def foot_height_trace(frames: np.ndarray, morph: Morphology) -> dict[str, np.ndarray]:
    """Per-foot height relative to the root for a (T, L, >=2) frame array."""
    root = morph.link_index("torso")
    out = {}
    for l in morph.links:
        if l.name.endswith("_foot"):
            idx = morph.link_index(l.name)
            out[l.name] = frames[:, idx, 1] - frames[:, root, 1]
    return out


def save_trajectory_csv(frames: np.ndarray, morph: Morphology, path,
                        frame_time: float = 1.0 / 30.0,
                        velocities: np.ndarray | None = None) -> None:
    """Dump (t, per-body pose/velocity) rows; velocities default to differences."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    T = frames.shape[0]
    if velocities is None:
        velocities = np.zeros_like(frames)
        if T > 1:
            velocities[1:] = (frames[1:] - frames[:-1]) / frame_time
            velocities[0] = velocities[1]
    with open(path, "w", newline="") as f:
        wr = csv.writer(f)
        wr.writerow(["t", "link", "x", "y", "angle", "vx", "vy", "omega"])
        for k in range(T):
            for li, name in enumerate(morph.link_names()):
                row = [repr(k * frame_time), name]
                row += [repr(float(v)) for v in frames[k, li, :3]]
                row += [repr(float(v)) for v in velocities[k, li, :3]]
                wr.writerow(row)


def load_trajectory_csv(path, morph: Morphology) -> np.ndarray:
    names = {n: i for i, n in enumerate(morph.link_names())}
    rows = {}
    with open(path) as f:
        for r in csv.DictReader(f):
            t = float(r["t"])
            rows.setdefault(t, np.zeros((len(names), 3)))[names[r["link"]]] = (
                float(r["x"]), float(r["y"]), float(r["angle"])
            )
    return np.stack([rows[t] for t in sorted(rows)])


def save_foot_traces_csv(traces: dict[str, np.ndarray], path,
                         frame_time: float = 1.0 / 30.0) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    names = sorted(traces)
    T = len(next(iter(traces.values())))
    with open(path, "w", newline="") as f:
        wr = csv.writer(f)
        wr.writerow(["t"] + names)
        for k in range(T):
            wr.writerow([repr(k * frame_time)] + [repr(float(traces[n][k])) for n in names])
