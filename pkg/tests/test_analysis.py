"""MDS embedding, eigensolver accuracy, traces, and SVG output."""

import numpy as np
import pytest

from gaitlab.analysis import (
    classical_mds,
    foot_height_trace,
    jacobi_eigh,
    load_trajectory_csv,
    pairwise_distances,
    save_trajectory_csv,
    svg_plot,
)
from gaitlab.motion import GaitParams, generate_clip
from gaitlab.sim import default_biped


def test_jacobi_matches_lapack():
    rng = np.random.default_rng(0)
    for n in (2, 5, 9):
        m = rng.normal(size=(n, n))
        a = (m + m.T) / 2
        vals, vecs = jacobi_eigh(a)
        ref = np.sort(np.linalg.eigvalsh(a))[::-1]
        assert np.allclose(vals, ref, atol=1e-9)
        assert np.allclose(vecs @ np.diag(vals) @ vecs.T, a, atol=1e-8)


def test_two_points_embed_at_half_distance():
    d = np.array([[0.0, 4.0], [4.0, 0.0]])
    emb, stress = classical_mds(d, out_dim=2)
    coords = np.sort(emb[:, 0])
    assert np.allclose(np.abs(coords), [2.0, 2.0], atol=1e-9)
    assert stress <= 1e-12


def test_planted_plane_recovered():
    rng = np.random.default_rng(1)
    flat = rng.normal(size=(20, 2)) * 3.0
    basis, _ = np.linalg.qr(rng.normal(size=(64, 2)))
    points = flat @ basis.T  # exactly rank-2 inside 64-D
    emb, stress = classical_mds(points, out_dim=2)
    orig = pairwise_distances(flat)
    rec = pairwise_distances(emb)
    assert np.max(np.abs(orig - rec)) <= 1e-6
    assert stress <= 1e-8


def test_zero_distances_collapse_to_origin():
    d = np.zeros((5, 5))
    emb, stress = classical_mds(d, out_dim=2)
    assert np.allclose(emb, 0.0)
    assert stress == 0.0


def test_mds_rejects_asymmetry():
    d = np.array([[0.0, 1.0], [2.0, 0.0]])
    with pytest.raises(ValueError, match="symmetric"):
        classical_mds(d, is_distance=True)


def test_mds_warns_when_modes_missing():
    # 1-D configuration embedded into 2-D: only one positive eigenvalue
    d = pairwise_distances(np.array([[0.0], [1.0], [2.0]]))
    with pytest.warns(UserWarning, match="positive eigenvalues"):
        emb, _ = classical_mds(d, out_dim=2, is_distance=True)
    assert np.allclose(emb[:, 1], 0.0)


def test_mds_rotation_invariance_procrustes():
    rng = np.random.default_rng(3)
    pts = rng.normal(size=(15, 6))
    q, _ = np.linalg.qr(rng.normal(size=(6, 6)))
    emb1, s1 = classical_mds(pts, out_dim=2)
    emb2, s2 = classical_mds(pts @ q.T, out_dim=2)
    assert abs(s1 - s2) <= 1e-9
    # Procrustes align emb2 onto emb1
    u, _, vt = np.linalg.svd(emb2.T @ emb1)
    aligned = emb2 @ (u @ vt)
    assert np.max(np.abs(aligned - emb1)) <= 1e-6


def test_stress_non_increasing_with_dim():
    rng = np.random.default_rng(4)
    pts = rng.normal(size=(12, 5))
    stresses = [classical_mds(pts, out_dim=k)[1] for k in (1, 2, 3, 4)]
    for a, b in zip(stresses, stresses[1:]):
        assert b <= a + 1e-12


def test_foot_trace_constant_when_standing():
    m = default_biped()
    frames = np.tile(generate_clip(GaitParams(), m).frames[0], (10, 1, 1))
    traces = foot_height_trace(frames, m)
    assert set(traces) == {"l_foot", "r_foot"}
    for v in traces.values():
        assert np.allclose(v, v[0])
        assert len(v) == 10


def test_foot_trace_periodic_for_walk_clip():
    m = default_biped()
    clip = generate_clip(GaitParams(), m)
    frames = clip.frame_indices(0, clip.n_frames * 2)
    traces = foot_height_trace(frames, m)
    period = clip.n_frames
    for v in traces.values():
        assert np.max(np.abs(v[:period] - v[period:])) <= 1e-9


def test_trajectory_csv_roundtrip(tmp_path):
    m = default_biped()
    clip = generate_clip(GaitParams(), m)
    frames = clip.frame_indices(0, 12)
    p = tmp_path / "traj.csv"
    save_trajectory_csv(frames, m, p)
    loaded = load_trajectory_csv(p, m)
    assert np.allclose(loaded, frames, atol=1e-12)


def test_svg_plot_writes_file(tmp_path):
    p = tmp_path / "plot.svg"
    svg_plot({"a": (np.arange(5.0), np.arange(5.0) ** 2)}, p, kind="line", title="t")
    text = p.read_text()
    assert text.startswith("<svg") and "polyline" in text and "</svg>" in text
