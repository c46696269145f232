"""Walker environment and batched rollout collection.

Workers are independent worlds stepped sequentially in a fixed order with a
shared batched policy/critic/discriminator evaluation per control tick, so
runs are reproducible for a given seed set.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..motion.clips import ReferenceClip, fk_pose
from ..motion.observe import (
    DISC_FRAMES,
    FeatureMap,
    GoalState,
    observe,
    sim_disc_window,
)
from ..sim.morphology import Morphology
from ..sim.terrain import Terrain, TerrainParams, flat_terrain, generate_terrain, heightfield_window
from ..sim.world import PDGains, StepError, World, default_gains
from .rewards import FRAME_TIME, goal_reward

STANCE_Q = np.array([0.2, -0.4, 0.2, 0.2, -0.4, 0.2])


@dataclass
class ScenarioSpec:
    """Everything an environment needs to realize one adaptation scenario."""

    morph: Morphology                  # simulated character (possibly edited)
    clip: ReferenceClip                # imitation reference (base-morphology poses)
    friction: float = 1.0
    terrain_params: TerrainParams | None = None
    terrain_input: bool = False        # feed the local height window as c_t
    terrain_window: int = 32
    perturb_force: float = 0.0         # magnitude of random pushes, N
    perturb_duration: float = 0.2
    perturb_interval: tuple = (2.0, 4.0)
    speed_range: tuple = (1.0, 1.5)
    timer_range: tuple = (3.0, 5.0)
    headings: tuple = (1.0, -1.0)

    def stance(self) -> np.ndarray:
        n = self.morph.n_actuated
        if n == 6:
            return STANCE_Q.copy()
        # locked joints drop out of the actuated vector
        full = dict(zip(["l_hip", "l_knee", "l_ankle", "r_hip", "r_knee", "r_ankle"], STANCE_Q))
        return np.array([full[n_] for n_ in self.morph.actuated_names()])


def clip_joint_angles(clip: ReferenceClip, idx: int) -> dict[str, float]:
    """Joint angles of a clip frame, recovered from link world angles."""
    # canonical ordering: torso=0, l_thigh/l_shin/l_foot=1..3, r_*=4..6
    a = clip.frames[idx % clip.n_frames, :, 2]
    return {
        "l_hip": a[1] - a[0], "l_knee": a[2] - a[1], "l_ankle": a[3] - a[2],
        "r_hip": a[4] - a[0], "r_knee": a[5] - a[4], "r_ankle": a[6] - a[5],
    }


def pose_on_morph(clip: ReferenceClip, morph: Morphology, idx: int,
                  root_x: float, ground: float) -> np.ndarray:
    """Retarget a clip frame onto ``morph`` by joint-angle copy; soles grounded."""
    q = clip_joint_angles(clip, idx)
    root_ang = clip.frames[idx % clip.n_frames, 0, 2]
    pose = fk_pose(morph, (root_x, 0.0), root_ang, q)
    low = min(
        float((pose[morph.link_index(l.name), :2]
               + _rot(pose[morph.link_index(l.name), 2]) @ np.asarray(c))[1])
        for l in morph.links if l.contacts for c in l.contacts
    )
    pose[:, 1] += ground - low
    return pose


def _rot(a: float) -> np.ndarray:
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, -s], [s, c]])


class WalkerEnv:
    """One world plus goal logic, observation history, and reward bookkeeping."""

    def __init__(self, spec: ScenarioSpec, seed: int, eval_mode: bool = False):
        self.spec = spec
        self.rng = np.random.default_rng(seed)
        self.eval_mode = eval_mode
        self.fm = FeatureMap(spec.morph)
        self.gains = default_gains(spec.morph)
        self.terrain = (
            generate_terrain(int(self.rng.integers(2**31)), spec.terrain_params)
            if spec.terrain_params is not None else flat_terrain()
        )
        self.world = World(spec.morph, terrain=self.terrain, friction=spec.friction)
        self.stance = spec.stance()
        self.history: list = []
        self.goal: GoalState | None = None
        self._goal_x = 0.0
        self._timer = 0.0
        self._next_push = 0.0
        self.falls = 0
        self.nan_events = 0
        self.reset()

    # -- episode management ----------------------------------------------------

    def reset(self) -> None:
        spec = self.spec
        x0 = 0.0
        if self.eval_mode:
            # evaluation always starts standing at rest: policies must produce
            # their own locomotion rather than coast on the init velocity
            self.world.reset_standing(x0)
        else:
            idx = int(self.rng.integers(spec.clip.n_frames))
            ground = self.terrain.height(x0)
            pose = pose_on_morph(spec.clip, spec.morph, idx, x0, ground)
            nxt = pose_on_morph(spec.clip, spec.morph, idx + 1,
                                x0 + spec.clip.stride / spec.clip.n_frames, ground)
            vel = (nxt[:, :2] - pose[:, :2]) * 30.0
            omg = (nxt[:, 2] - pose[:, 2]) * 30.0
            self.world.set_pose(pose[:, :2], pose[:, 2], vel, omg)
        self.world.time = 0.0
        self.history = [self.world.snapshot()]
        self._feat = []
        self._wframe = []
        self._cache_heading = None
        self._resample_goal(force_heading=1.0 if self.eval_mode else None)
        self._schedule_push()

    def _resample_goal(self, force_heading: float | None = None) -> None:
        spec = self.spec
        if force_heading is not None:
            heading = force_heading
        else:
            heading = float(spec.headings[int(self.rng.integers(len(spec.headings)))])
        speed = (
            float(np.mean(spec.speed_range)) if self.eval_mode
            else float(self.rng.uniform(*spec.speed_range))
        )
        self._timer = (
            float(np.mean(spec.timer_range)) if self.eval_mode
            else float(self.rng.uniform(*spec.timer_range))
        )
        root_x = self.world.pos[self.world.root_index(), 0]
        self._goal_x = root_x + heading * speed * self._timer
        self.goal = GoalState(heading, abs(self._goal_x - root_x), speed)

    def _schedule_push(self) -> None:
        if self.spec.perturb_force > 0:
            self._next_push = self.world.time + self.rng.uniform(*self.spec.perturb_interval)

    # -- observation interface ---------------------------------------------------

    def _cache_features(self) -> None:
        """Per-snapshot pose features, recomputed in bulk on heading flips."""
        h = self.goal.direction
        ter = self.terrain if self.spec.terrain_params is not None else None
        if getattr(self, "_cache_heading", None) != h:
            self._feat = []
            self._wframe = []
            self._cache_heading = h
            todo = self.history
        else:
            todo = self.history[len(self._feat):]
        for s in todo:
            self._feat.append(self.fm.frame_features(s, h, ter))
            pos, ang = self.fm.canonical_pose(s.pos, s.ang, h)
            self._wframe.append(self.fm.window_frame(
                np.concatenate([pos, ang[:, None]], axis=1)))

    def obs(self) -> tuple[np.ndarray, np.ndarray, np.ndarray | None]:
        self._cache_features()
        feats = self._feat[-4:]
        while len(feats) < 4:
            feats.insert(0, feats[0])
        o = np.stack(feats)
        c = None
        if self.spec.terrain_input:
            root_x = self.world.pos[self.world.root_index(), 0]
            c = heightfield_window(self.terrain, root_x, self.goal.direction,
                                   n_samples=self.spec.terrain_window)
        return o, self.goal.as_input(), c

    def window(self) -> np.ndarray:
        self._cache_features()
        frames = self._wframe[-DISC_FRAMES:]
        while len(frames) < DISC_FRAMES:
            frames.insert(0, frames[0])
        return np.concatenate(frames)

    # -- stepping -------------------------------------------------------------------

    def step(self, action_canonical: np.ndarray) -> dict:
        """One control tick; returns rewards and termination info."""
        spec = self.spec
        w = self.world
        root = w.root_index()
        x_before = w.pos[root, 0]

        if spec.perturb_force > 0 and w.time >= self._next_push:
            ang = self.rng.uniform(0, 2 * np.pi)
            force = spec.perturb_force * np.array([np.cos(ang), np.sin(ang)])
            w.apply_perturbation(tuple(force), spec.perturb_duration)
            self._schedule_push()

        # the stance offset lives in the canonical frame: mirror the whole target
        target = self.fm.action_to_world(self.stance + action_canonical,
                                         self.goal.direction)
        try:
            w.control_step(target, self.gains)
            nan = False
        except StepError:
            nan = True
            self.nan_events += 1

        self.history.append(w.snapshot())
        if len(self.history) > DISC_FRAMES:
            drop = len(self.history) - DISC_FRAMES
            self.history = self.history[drop:]
            if getattr(self, "_feat", None):
                self._feat = self._feat[drop:]
                self._wframe = self._wframe[drop:]

        dx = w.pos[root, 0] - x_before
        dist = abs(self._goal_x - w.pos[root, 0])
        r_goal = goal_reward(dx, self.goal.direction * self.goal.speed, dist)

        terminal = nan or w.fallen()
        if terminal:
            self.falls += 1

        self._timer -= FRAME_TIME
        reached = dist <= 0.5
        if not terminal and (reached or self._timer <= 0.0):
            self._resample_goal(force_heading=1.0 if self.eval_mode else None)
        else:
            self.goal = GoalState(self.goal.direction, dist, self.goal.speed)

        out = {"r_goal": r_goal, "terminal": terminal, "reached": reached}
        if terminal:
            self.reset()
        return out


@dataclass
class RolloutBatch:
    """Horizon-major storage for one collection pass over all workers."""

    obs: np.ndarray        # (W, T, HISTORY, F)
    goal: np.ndarray       # (W, T, 3)
    ctrl: np.ndarray | None  # (W, T, C) terrain windows, if configured
    actions: np.ndarray    # (W, T, A)
    logp: np.ndarray       # (W, T)
    rew: dict              # objective -> (W, T)
    dones: np.ndarray      # (W, T)
    values: dict           # objective -> (W, T)
    bootstrap: dict        # objective -> (W,)
    windows: np.ndarray    # (W, T, D)
    z0: np.ndarray         # (W, T, Z)

    @property
    def n_samples(self) -> int:
        return self.logp.size

    def flat(self, key_arrays: list[np.ndarray]) -> list[np.ndarray]:
        return [a.reshape((-1,) + a.shape[2:]) for a in key_arrays]


OBJECTIVES = ("imitation", "goal")


def collect_rollouts(envs: list[WalkerEnv], policy, critic, disc, horizon: int,
                     rng: np.random.Generator, deterministic: bool = False) -> RolloutBatch:
    from .disc import imitation_reward

    W = len(envs)
    obs0, goal0, c0 = envs[0].obs()
    A = envs[0].spec.morph.n_actuated
    use_c = c0 is not None

    obs = np.zeros((W, horizon) + obs0.shape)
    goal = np.zeros((W, horizon, 3))
    ctrl = np.zeros((W, horizon, c0.shape[0])) if use_c else None
    actions = np.zeros((W, horizon, A))
    logp = np.zeros((W, horizon))
    dones = np.zeros((W, horizon))
    rew = {k: np.zeros((W, horizon)) for k in OBJECTIVES}
    values = {k: np.zeros((W, horizon)) for k in OBJECTIVES}
    windows = np.zeros((W, horizon, envs[0].window().shape[0]))
    z0s = None

    for t in range(horizon):
        batch_o = np.zeros((W,) + obs0.shape)
        batch_g = np.zeros((W, 3))
        batch_c = np.zeros((W, c0.shape[0])) if use_c else None
        for i, env in enumerate(envs):
            o, g, c = env.obs()
            batch_o[i] = o
            batch_g[i] = g
            if use_c:
                batch_c[i] = c
        act, lp, z0 = policy.act(batch_o, batch_g, batch_c,
                                 None if deterministic else rng)
        vals = critic.values_np(batch_o, batch_g, batch_c)
        if z0s is None:
            z0s = np.zeros((W, horizon, z0.shape[1]))
        obs[:, t] = batch_o
        goal[:, t] = batch_g
        if use_c:
            ctrl[:, t] = batch_c
        actions[:, t] = act
        logp[:, t] = lp
        z0s[:, t] = z0
        for k_i, k in enumerate(OBJECTIVES):
            values[k][:, t] = vals[:, k_i]
        for i, env in enumerate(envs):
            info = env.step(act[i])
            dones[i, t] = 1.0 if info["terminal"] else 0.0
            rew["goal"][i, t] = info["r_goal"]
            windows[i, t] = env.window()
        rew["imitation"][:, t] = imitation_reward(disc, windows[:, t])

    # tail bootstrap values for non-terminal ends
    batch_o = np.zeros((W,) + obs0.shape)
    batch_g = np.zeros((W, 3))
    batch_c = np.zeros((W, c0.shape[0])) if use_c else None
    for i, env in enumerate(envs):
        o, g, c = env.obs()
        batch_o[i] = o
        batch_g[i] = g
        if use_c:
            batch_c[i] = c
    tail = critic.values_np(batch_o, batch_g, batch_c)
    bootstrap = {k: tail[:, i].copy() for i, k in enumerate(OBJECTIVES)}

    return RolloutBatch(obs, goal, ctrl, actions, logp, rew, dones, values,
                        bootstrap, windows, z0s)
