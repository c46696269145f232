"""Imitation-error metric and phase/root alignment against a reference clip."""

from __future__ import annotations

import numpy as np

from .clips import ReferenceClip


def imitation_error(sim_positions: np.ndarray, ref_positions: np.ndarray) -> np.ndarray:
    """Per-frame mean link-position distance (meters).

    Inputs are (T, L, 2) arrays already aligned in phase and frame; the core
    metric itself does no alignment so it stays symmetric and obeys the
    per-frame triangle bound.
    """
    sim = np.asarray(sim_positions, dtype=float)
    ref = np.asarray(ref_positions, dtype=float)
    if sim.size == 0 or ref.size == 0:
        raise ValueError("imitation_error needs non-empty frame sets")
    if sim.shape != ref.shape:
        raise ValueError(f"frame shape mismatch: {sim.shape} vs {ref.shape}")
    return np.linalg.norm(sim - ref, axis=-1).mean(axis=-1)


def aligned_imitation_error(sim_frames: np.ndarray, clip: ReferenceClip) -> tuple[np.ndarray, int]:
    """Error series against the clip, minimized over cyclic phase offset.

    Reference frames are root-x aligned to the simulated frames (per-frame
    horizontal shift onto the simulated root) so the measure compares posture
    and height rather than accumulated travel. Returns (per-frame errors at
    the best offset, that offset).
    """
    sim = np.asarray(sim_frames, dtype=float)
    T = sim.shape[0]
    if T == 0:
        raise ValueError("empty simulated trajectory")
    root = 0  # torso is link 0 in the canonical ordering
    best = None
    best_off = 0
    for off in range(clip.n_frames):
        ref = clip.frame_indices(off, T)[:, :, :2].copy()
        shift = sim[:, root, 0] - ref[:, root, 0]
        ref[:, :, 0] += shift[:, None]
        errs = imitation_error(sim[:, :, :2], ref)
        if best is None or errs.mean() < best.mean():
            best = errs
            best_off = off
    return best, best_off
