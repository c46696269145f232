"""Maximal-coordinate world: assembly, stepping, PD control, perturbations."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernels import NUMBA_ENABLED, substep
from .morphology import Morphology, nominal_root_height
from .terrain import Terrain, flat_terrain

GRAVITY = -9.81
DT = 1.0 / 120.0
SUBSTEPS = 4  # control at 30 Hz: one control tick = 4 physics substeps
SOLVER_ITERS = 8
BAUMGARTE = 0.2
CONTACT_SLOP = 0.005


class StepError(RuntimeError):
    def __init__(self, body: int, name: str):
        self.body = body
        super().__init__(f"non-finite state on body {body} ({name})")


@dataclass
class WorldState:
    """Snapshot of all body states at one instant."""

    pos: np.ndarray   # (n, 2)
    ang: np.ndarray   # (n,)
    vel: np.ndarray   # (n, 2)
    omg: np.ndarray   # (n,)
    time: float

    def copy(self) -> "WorldState":
        return WorldState(self.pos.copy(), self.ang.copy(), self.vel.copy(),
                          self.omg.copy(), self.time)


@dataclass
class PDGains:
    kp: np.ndarray
    kd: np.ndarray
    torque_limit: np.ndarray


def default_gains(morph: Morphology) -> PDGains:
    kp, kd, lim = [], [], []
    for j in morph.actuated_joints():
        if "hip" in j.name:
            kp.append(500.0); kd.append(50.0); lim.append(180.0)
        elif "knee" in j.name:
            kp.append(400.0); kd.append(40.0); lim.append(150.0)
        else:  # ankle
            kp.append(400.0); kd.append(40.0); lim.append(90.0)
    return PDGains(np.array(kp), np.array(kd), np.array(lim))


def pd_torque(q: np.ndarray, qdot: np.ndarray, target_q: np.ndarray,
              gains: PDGains) -> np.ndarray:
    tau = gains.kp * (target_q - q) - gains.kd * qdot
    return np.clip(tau, -gains.torque_limit, gains.torque_limit)


class World:
    """One simulated character standing on a (possibly rough) heightfield."""

    def __init__(self, morph: Morphology, terrain: Terrain | None = None,
                 friction: float = 1.0, dt: float = DT,
                 iterations: int = SOLVER_ITERS, baumgarte: float = BAUMGARTE):
        self.morph = morph
        self.terrain = terrain if terrain is not None else flat_terrain()
        self.friction = friction
        self.dt = dt
        self.iterations = iterations
        self.baumgarte = baumgarte
        self.time = 0.0
        try:
            self.nominal_root = nominal_root_height(morph)
        except StopIteration:  # not a biped; fall detection uses this loosely
            self.nominal_root = 1.0

        n = morph.n_links
        self.pos = np.zeros((n, 2))
        self.ang = np.zeros(n)
        self.vel = np.zeros((n, 2))
        self.omg = np.zeros(n)
        self.inv_m = np.array([1.0 / l.mass for l in morph.links])
        self.inv_i = np.array([1.0 / l.inertia for l in morph.links])

        joints = morph.joints
        self.j_a = np.array([morph.link_index(j.parent) for j in joints], dtype=np.int64)
        self.j_b = np.array([morph.link_index(j.child) for j in joints], dtype=np.int64)
        self.j_la = np.array([j.anchor_parent for j in joints]).reshape(len(joints), 2)
        self.j_lb = np.array([j.anchor_child for j in joints]).reshape(len(joints), 2)
        self.j_locked = np.array([1 if j.locked else 0 for j in joints], dtype=np.int64)
        self.j_ref = np.zeros(len(joints))
        self._actuated_idx = np.array(
            [i for i, j in enumerate(joints) if not j.locked], dtype=np.int64
        )

        cps = []
        for i, l in enumerate(morph.links):
            for c in l.contacts:
                cps.append((i, c[0], c[1]))
        self.cp_body = np.array([c[0] for c in cps], dtype=np.int64)
        self.cp_local = np.array([[c[1], c[2]] for c in cps]) if cps else np.zeros((0, 2))
        self.last_jn = np.zeros(len(cps))
        self.last_jt = np.zeros(len(cps))
        self.last_cpos = np.zeros((len(cps), 2))
        self.last_active = np.zeros(len(cps), dtype=np.int64)

        self._ext_force = np.zeros((n, 2))
        self._motor_acc = np.zeros(len(joints))
        self._joint_ws = np.zeros((len(joints), 2))
        nj = len(joints)
        self._tq = np.zeros(nj)
        self._motor = np.zeros(nj, dtype=np.int64)
        self._qstar = np.zeros(nj)
        self._kp = np.zeros(nj)
        self._kd = np.zeros(nj)
        self._tlim = np.zeros(nj)
        self._push = None  # (body, fx, fy, t_end)

        if any(l.name == "torso" for l in morph.links):
            self.reset_standing()

    # -- configuration ---------------------------------------------------------

    @property
    def n_bodies(self) -> int:
        return self.morph.n_links

    @property
    def n_actuated(self) -> int:
        return len(self._actuated_idx)

    def root_index(self) -> int:
        try:
            return self.morph.link_index("torso")
        except KeyError:
            return 0

    # -- state -------------------------------------------------------------------

    def reset_standing(self, x: float = 0.0) -> None:
        """Place the character standing with straight legs at horizontal ``x``."""
        m = self.morph
        ground = self.terrain.height(x)
        self.ang[:] = 0.0
        self.vel[:] = 0.0
        self.omg[:] = 0.0
        torso = next(l for l in m.links if l.name == "torso")
        root_y = ground + self.nominal_root
        self.pos[m.link_index("torso")] = (x, root_y)
        hip_y = root_y - torso.length / 2
        for side in ("l", "r"):
            thigh = next(l for l in m.links if l.name == f"{side}_thigh")
            shin = next(l for l in m.links if l.name == f"{side}_shin")
            foot = next(l for l in m.links if l.name == f"{side}_foot")
            self.pos[m.link_index(thigh.name)] = (x, hip_y - thigh.length / 2)
            knee_y = hip_y - thigh.length
            self.pos[m.link_index(shin.name)] = (x, knee_y - shin.length / 2)
            ankle_y = knee_y - shin.length
            j = next(jj for jj in m.joints if jj.name == f"{side}_ankle")
            ax, ay = j.anchor_child
            self.pos[m.link_index(foot.name)] = (x - ax, ankle_y - ay)
        self.j_ref[:] = self.ang[self.j_b] - self.ang[self.j_a]
        self.time = 0.0
        self._push = None
        self.last_jn[:] = 0.0
        self.last_jt[:] = 0.0
        self.last_active[:] = 0
        self._joint_ws[:] = 0.0

    def snapshot(self) -> WorldState:
        return WorldState(self.pos.copy(), self.ang.copy(), self.vel.copy(),
                          self.omg.copy(), self.time)

    def restore(self, s: WorldState) -> None:
        self.pos[:] = s.pos
        self.ang[:] = s.ang
        self.vel[:] = s.vel
        self.omg[:] = s.omg
        self.time = s.time

    def set_pose(self, pos: np.ndarray, ang: np.ndarray,
                 vel: np.ndarray | None = None, omg: np.ndarray | None = None) -> None:
        self.pos[:] = pos
        self.ang[:] = ang
        self.vel[:] = 0.0 if vel is None else vel
        self.omg[:] = 0.0 if omg is None else omg
        self.j_ref[:] = self.ang[self.j_b] - self.ang[self.j_a]
        self.last_jn[:] = 0.0
        self.last_jt[:] = 0.0
        self.last_active[:] = 0
        self._joint_ws[:] = 0.0

    # -- joint coordinates ---------------------------------------------------

    def joint_angles(self) -> np.ndarray:
        return (self.ang[self.j_b] - self.ang[self.j_a])[self._actuated_idx]

    def joint_rates(self) -> np.ndarray:
        return (self.omg[self.j_b] - self.omg[self.j_a])[self._actuated_idx]

    # -- dynamics ----------------------------------------------------------------

    def apply_perturbation(self, force: tuple, duration: float,
                           body: str = "torso") -> None:
        """Constant external force on ``body`` for the next ``duration`` seconds."""
        idx = self.morph.link_index(body)
        self._push = (idx, float(force[0]), float(force[1]), self.time + duration)

    def step(self, joint_torques: np.ndarray, dt: float | None = None,
             motor_targets: np.ndarray | None = None,
             gains: PDGains | None = None) -> None:
        """One physics substep.

        Raw per-actuated-joint torques integrate explicitly. When
        ``motor_targets`` and ``gains`` are given, those joints instead run an
        implicit PD motor inside the velocity solve (impulse clamped by the
        torque limit) — the stable realization of the servo at 120 Hz.
        """
        dt = self.dt if dt is None else dt
        if dt <= 0:
            raise ValueError("dt must be positive")
        if joint_torques.shape[0] != self.n_actuated:
            raise ValueError(
                f"expected {self.n_actuated} torques, got {joint_torques.shape[0]}"
            )
        tq = self._tq
        tq[:] = 0.0
        tq[self._actuated_idx] = joint_torques
        motor, qstar = self._motor, self._qstar
        kp, kd, tlim = self._kp, self._kd, self._tlim
        if motor_targets is not None:
            if gains is None:
                raise ValueError("motor_targets requires gains")
            motor[self._actuated_idx] = 1
            qstar[self._actuated_idx] = motor_targets
            kp[self._actuated_idx] = gains.kp
            kd[self._actuated_idx] = gains.kd
            tlim[self._actuated_idx] = gains.torque_limit
        else:
            motor[:] = 0
        self._ext_force[:] = 0.0
        if self._push is not None:
            idx, fx, fy, t_end = self._push
            if self.time < t_end - 1e-12:
                self._ext_force[idx, 0] += fx
                self._ext_force[idx, 1] += fy
            else:
                self._push = None
        substep(
            self.pos, self.ang, self.vel, self.omg, self.inv_m, self.inv_i,
            self._ext_force,
            self.j_a, self.j_b, self.j_la, self.j_lb, self.j_locked, self.j_ref, tq,
            motor, qstar, kp, kd, tlim,
            self.cp_body, self.cp_local,
            self.terrain.samples, self.terrain.x0, self.terrain.spacing, self.friction,
            GRAVITY, dt, self.iterations, self.baumgarte, CONTACT_SLOP,
            self.last_jn, self.last_jt, self.last_cpos, self.last_active,
            self._motor_acc, self._joint_ws,
        )
        self.time += dt
        if not (np.all(np.isfinite(self.pos)) and np.all(np.isfinite(self.vel))
                and np.all(np.isfinite(self.ang)) and np.all(np.isfinite(self.omg))):
            bad = np.argwhere(~np.isfinite(self.pos).all(axis=1))
            body = int(bad[0][0]) if len(bad) else 0
            raise StepError(body, self.morph.links[body].name)

    def control_step(self, target_q: np.ndarray, gains: PDGains) -> None:
        """One 30 Hz control tick: 4 substeps of the PD servo at the target posture."""
        zeros = np.zeros(self.n_actuated)
        for _ in range(SUBSTEPS):
            self.step(zeros, motor_targets=target_q, gains=gains)

    # -- diagnostics ------------------------------------------------------------

    def joint_violation(self) -> float:
        """Largest anchor-coincidence error over all joints (meters)."""
        worst = 0.0
        for j in range(len(self.morph.joints)):
            a, b = self.j_a[j], self.j_b[j]
            ra = _rot(self.ang[a]) @ self.j_la[j]
            rb = _rot(self.ang[b]) @ self.j_lb[j]
            err = (self.pos[b] + rb) - (self.pos[a] + ra)
            worst = max(worst, float(np.hypot(err[0], err[1])))
        return worst

    def fallen(self) -> bool:
        root = self.root_index()
        ground = self.terrain.height(self.pos[root, 0])
        height = self.pos[root, 1] - ground
        tilt = abs(_wrap_angle(self.ang[root]))
        return height < 0.5 * self.nominal_root or tilt > np.deg2rad(60.0)

    def contact_report(self) -> list[dict]:
        out = []
        for c in range(len(self.cp_body)):
            out.append({
                "body": int(self.cp_body[c]),
                "active": bool(self.last_active[c]),
                "jn": float(self.last_jn[c]),
                "jt": float(self.last_jt[c]),
                "x": float(self.last_cpos[c, 0]),
                "y": float(self.last_cpos[c, 1]),
            })
        return out


def _rot(a: float) -> np.ndarray:
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, -s], [s, c]])


def _wrap_angle(a: float) -> float:
    return (a + np.pi) % (2 * np.pi) - np.pi


__all__ = [
    "World",
    "WorldState",
    "PDGains",
    "StepError",
    "default_gains",
    "pd_torque",
    "GRAVITY",
    "DT",
    "SUBSTEPS",
    "NUMBA_ENABLED",
]
