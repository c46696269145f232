"""Clip generator, observation layout, windows, and the imitation metric."""

import numpy as np
import pytest

from gaitlab.motion import (
    DISC_FRAMES,
    FeatureMap,
    GaitParams,
    GoalState,
    STYLE_PRESETS,
    aligned_imitation_error,
    clip_disc_window,
    disc_window_dim,
    generate_clip,
    imitation_error,
    joint_targets,
    load_clip_csv,
    obs_dim,
    observe,
    save_clip_csv,
    sim_disc_window,
)
from gaitlab.sim import World, default_biped
from gaitlab.sim.world import WorldState


@pytest.fixture(scope="module")
def morph():
    return default_biped()


@pytest.fixture(scope="module")
def fm(morph):
    return FeatureMap(morph)


def make_state(pos, ang, vel=None, omg=None, t=0.0):
    n = len(ang)
    return WorldState(
        np.asarray(pos, dtype=float),
        np.asarray(ang, dtype=float),
        np.zeros((n, 2)) if vel is None else np.asarray(vel, dtype=float),
        np.zeros(n) if omg is None else np.asarray(omg, dtype=float),
        t,
    )


def test_default_walk_clip_shape_and_periodicity(morph):
    clip = generate_clip(GaitParams(), morph)
    assert clip.n_frames == 30
    assert clip.cycle == 1.0
    first = clip.frames[0].copy()
    wrapped = clip.frame_indices(clip.n_frames, 1)[0].copy()
    first[:, 0] -= first[0, 0]
    wrapped[:, 0] -= wrapped[0, 0]
    assert np.max(np.abs(first - wrapped)) <= 1e-3


def test_zero_lean_keeps_torso_level(morph):
    clip = generate_clip(GaitParams(lean=0.0), morph)
    assert np.all(clip.frames[:, morph.link_index("torso"), 2] == 0.0)


def test_symmetric_gait_half_cycle_shift():
    for p in np.linspace(0, 1, 13, endpoint=False):
        q = joint_targets(GaitParams(asymmetry=0.0), p)
        q_shift = joint_targets(GaitParams(asymmetry=0.0), p + 0.5)
        assert np.allclose(q[:3], q_shift[3:], atol=1e-12)


def test_feet_clear_ground_except_stance(morph):
    clip = generate_clip(GaitParams(), morph)
    for side in ("l", "r"):
        foot = morph.link_index(f"{side}_foot")
        sole = clip.frames[:, foot, 1] - 0.03  # sole sits 0.03 under the foot COM
        assert sole.min() >= -1e-9
        assert sole.max() > 0.02  # actually lifts during swing


def test_joint_limit_violation_rejected(morph):
    with pytest.raises(ValueError, match="joint limits"):
        generate_clip(GaitParams(knee_lift=3.0), morph)


def test_clip_csv_roundtrip(tmp_path, morph):
    clip = generate_clip(STYLE_PRESETS["stoop"], morph, "stoop")
    path = tmp_path / "stoop.csv"
    save_clip_csv(clip, path, morph)
    loaded = load_clip_csv(path, morph, clip.cycle, clip.stride, "stoop")
    assert np.array_equal(loaded.frames, clip.frames)


def test_observation_dimension(morph, fm):
    assert obs_dim(morph) == 192
    w = World(morph)
    o, g = observe(fm, [w.snapshot()], GoalState(1.0, 2.0, 1.2))
    assert o.shape == (4, 48)
    assert g.shape == (3,)


def test_stationary_character_zero_velocity_slots(morph, fm):
    w = World(morph)
    o, _ = observe(fm, [w.snapshot()] * 4, GoalState(1.0, 1.0, 1.0))
    # root velocity slots and per-link relative velocity slots are all zero
    assert np.all(o[:, 3:6] == 0.0)
    for li in range(6):
        base = 6 + li * 7
        assert np.all(o[:, base + 4 : base + 7] == 0.0)


def test_rigid_translation_constant_relative_positions(morph, fm):
    w = World(morph)
    s0 = w.snapshot()
    states = []
    for k in range(4):
        s = s0.copy()
        s.pos = s0.pos + np.array([0.31 * k, 0.0])
        s.vel = s0.vel + np.array([0.31 * 30.0, 0.0])
        states.append(s)
    o, _ = observe(fm, states, GoalState(1.0, 1.0, 1.0))
    for li in range(6):
        base = 6 + li * 7
        col = o[:, base : base + 2]
        assert np.allclose(col - col[0], 0.0, atol=1e-12)


def test_translation_invariance(morph, fm):
    w = World(morph)
    s = w.snapshot()
    s.vel = np.random.default_rng(0).normal(size=s.vel.shape)
    shifted = s.copy()
    shifted.pos = s.pos + np.array([57.3, 0.0])
    goal = GoalState(1.0, 3.0, 1.25)
    o1, g1 = observe(fm, [s] * 4, goal)
    o2, g2 = observe(fm, [shifted] * 4, goal)
    assert np.allclose(o1, o2, atol=1e-9)
    assert np.array_equal(g1, g2)


def test_disc_window_real_fake_byte_compatible(morph, fm):
    clip = generate_clip(GaitParams(), morph)
    start = 7
    frames = clip.frame_indices(start, DISC_FRAMES)
    real = clip_disc_window(fm, frames)
    states = [make_state(frames[k][:, :2], frames[k][:, 2]) for k in range(DISC_FRAMES)]
    fake = sim_disc_window(fm, states, heading=1.0)
    assert real.shape == (disc_window_dim(morph),)
    assert real.tobytes() == fake.tobytes()


def test_mirrored_window_matches_mirrored_world(morph, fm):
    # walking in -x mirrors onto the canonical +x frame
    clip = generate_clip(GaitParams(), morph)
    frames = clip.frame_indices(3, DISC_FRAMES)
    states = []
    for k in range(DISC_FRAMES):
        pos = frames[k][:, :2].copy()
        ang = frames[k][:, 2].copy()
        pos[:, 0] = -pos[:, 0]  # mirrored scene about x=0
        mirror = np.array(morph.mirror_link_order())
        states.append(make_state(pos[mirror], -ang[mirror]))
    mirrored = sim_disc_window(fm, states, heading=-1.0)
    canonical = clip_disc_window(fm, frames)
    assert np.allclose(mirrored, canonical, atol=1e-12)


def test_action_mirror_roundtrip(fm):
    a = np.array([0.1, -0.2, 0.3, -0.4, 0.5, -0.6])
    fwd = fm.action_to_world(a, 1.0)
    assert fwd is a
    back = fm.action_to_world(fm.action_to_world(a, -1.0), -1.0)
    assert np.allclose(back, a)


def test_imitation_error_examples():
    sim = np.zeros((3, 1, 2))
    ref = np.zeros((3, 1, 2))
    assert np.all(imitation_error(sim, ref) == 0.0)

    ref2 = ref.copy()
    ref2[:, 0] = (0.3, 0.4)
    assert np.allclose(imitation_error(sim, ref2), 0.5)

    sim3 = np.random.default_rng(0).normal(size=(4, 7, 2))
    d = 0.37
    ref3 = sim3 + np.array([0.0, d])
    assert np.allclose(imitation_error(sim3, ref3), d)


def test_imitation_error_symmetry_and_triangle():
    rng = np.random.default_rng(5)
    a = rng.normal(size=(6, 7, 2))
    b = rng.normal(size=(6, 7, 2))
    c = rng.normal(size=(6, 7, 2))
    eab = imitation_error(a, b)
    assert np.array_equal(eab, imitation_error(b, a))
    assert np.all(imitation_error(a, c) <= eab + imitation_error(b, c) + 1e-12)


def test_imitation_error_empty_rejected():
    with pytest.raises(ValueError):
        imitation_error(np.zeros((0, 1, 2)), np.zeros((0, 1, 2)))


def test_aligned_error_recovers_phase(morph):
    clip = generate_clip(GaitParams(), morph)
    off = 11
    sim = clip.frame_indices(off, 12)[:, :, :2]
    errs, found = aligned_imitation_error(sim, clip)
    assert found == off
    assert errs.mean() <= 1e-9
