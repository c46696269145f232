"""Live WebSocket session: real-time simulation streaming and steering.

The simulation loop owns all mutable state and runs on its own thread at the
30 Hz control rate. Clients talk JSON over a websocket: inbound commands land
in a latest-wins mailbox consumed once per control tick, outbound frames go
through per-client queues of depth one (slow clients drop frames, never block
the simulation).
"""

from __future__ import annotations

import asyncio
import json
import threading
import time
from dataclasses import dataclass, field
from queue import Empty, Full, Queue

import numpy as np
from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from .adapt import AdaptedPolicy, load_adapter, prune_adapted
from .config import ConfigError, ExperimentConfig
from .train import TrainablePolicy
from .train.rollout import ScenarioSpec, WalkerEnv

CONTROL_DT = 1.0 / 30.0

COMMANDS = ("set_target", "set_alpha", "select_adapters", "perturb",
            "pause", "resume", "reset")


@dataclass
class Mailbox:
    """Latest-wins command slots, one per command type."""

    slots: dict = field(default_factory=dict)
    lock: threading.Lock = field(default_factory=threading.Lock)

    def put(self, kind: str, payload: dict) -> None:
        with self.lock:
            self.slots[kind] = payload

    def drain(self) -> dict:
        with self.lock:
            out = self.slots
            self.slots = {}
        return out


class SimSession:
    """Steppable simulation state machine behind the serve protocol."""

    def __init__(self, spec: ScenarioSpec, base_policy, adapters: dict[str, AdaptedPolicy],
                 seed: int = 0):
        self.spec = spec
        self.base = TrainablePolicy(base_policy) if base_policy is not None else None
        self.adapters = adapters
        self.env = WalkerEnv(spec, seed=seed, eval_mode=True)
        self.mailbox = Mailbox()
        self.clients: list[Queue] = []
        self.clients_lock = threading.Lock()
        self.alpha = 1.0 if adapters else 0.0
        self.active: list[str] = [next(iter(adapters))] if adapters else []
        self.blend_alpha = 1.0
        self.paused = False
        self.tick_count = 0
        self.rewards = {"goal": 0.0, "imitation": 0.0}
        self._stop = threading.Event()

    # -- command handling -----------------------------------------------------

    def apply_commands(self) -> None:
        cmds = self.mailbox.drain()
        if "set_target" in cmds:
            p = cmds["set_target"]
            d = 1.0 if float(p.get("dir", 1)) >= 0 else -1.0
            speed = float(np.clip(p.get("speed", 1.25), 0.2, 3.0))
            env = self.env
            root_x = env.world.pos[env.world.root_index(), 0]
            env._timer = 4.0
            env._goal_x = root_x + d * speed * env._timer
            from .motion.observe import GoalState

            env.goal = GoalState(d, abs(env._goal_x - root_x), speed)
        if "set_alpha" in cmds:
            v = float(cmds["set_alpha"].get("value", 1.0))
            self.alpha = float(np.clip(v, 0.0, 1.0))
        if "select_adapters" in cmds:
            p = cmds["select_adapters"]
            names = [n for n in p.get("names", []) if n in self.adapters]
            self.active = names[:2]
            self.blend_alpha = float(np.clip(p.get("blend_alpha", 1.0), 0.0, 1.0))
        if "perturb" in cmds:
            p = cmds["perturb"]
            force = float(p.get("force", 100.0))
            duration = float(np.clip(p.get("duration", 0.2), 0.0, 1.0))
            ang = float(p.get("angle", 0.0))
            self.env.world.apply_perturbation(
                (force * np.cos(ang), force * np.sin(ang)), duration)
        if "pause" in cmds:
            self.paused = True
        if "resume" in cmds:
            self.paused = False
        if "reset" in cmds:
            self.env.reset()

    def _act(self, obs, goal, ctrl):
        if len(self.active) == 2:
            a = self.adapters[self.active[0]]
            b = self.adapters[self.active[1]]
            mean, _ = a.forward_np(obs, goal, ctrl, alpha=self.blend_alpha, second=b)
            return mean
        if len(self.active) == 1:
            adapted = self.adapters[self.active[0]]
            mean, _ = adapted.forward_np(obs, goal, ctrl, alpha=self.alpha)
            return mean
        mean, _, _ = self.base.act(obs, goal, ctrl, None)
        return mean

    def tick(self) -> dict:
        """Apply pending commands, advance one control step, build a frame."""
        self.apply_commands()
        if not self.paused:
            o, g, c = self.env.obs()
            action = self._act(o[None], g[None], None if c is None else c[None])[0]
            info = self.env.step(action)
            self.rewards = {"goal": info["r_goal"], "imitation": 0.0}
        self.tick_count += 1
        return self.frame()

    def frame(self) -> dict:
        env = self.env
        s = env.world.snapshot()
        ter = env.terrain
        xs = np.arange(-8.0, 8.01, 0.25) + s.pos[env.world.root_index(), 0]
        return {
            "type": "frame",
            "t": s.time,
            "tick": self.tick_count,
            "bodies": [
                {"name": env.spec.morph.links[i].name,
                 "x": float(s.pos[i, 0]), "y": float(s.pos[i, 1]),
                 "angle": float(s.ang[i]),
                 "length": env.spec.morph.links[i].length}
                for i in range(len(env.spec.morph.links))
            ],
            "goal": {"dir": env.goal.direction, "speed": env.goal.speed,
                     "dist": env.goal.distance},
            "alpha": self.alpha,
            "active_adapters": list(self.active),
            "blend_alpha": self.blend_alpha,
            "rewards": self.rewards,
            "paused": self.paused,
            "terrain": {"x": [float(x) for x in xs],
                        "h": [ter.height(float(x)) for x in xs]},
        }

    # -- broadcast ---------------------------------------------------------------

    def attach(self) -> Queue:
        q: Queue = Queue(maxsize=1)
        with self.clients_lock:
            self.clients.append(q)
        return q

    def detach(self, q: Queue) -> None:
        with self.clients_lock:
            if q in self.clients:
                self.clients.remove(q)

    def broadcast(self, frame: dict) -> None:
        with self.clients_lock:
            clients = list(self.clients)
        for q in clients:
            try:
                q.put_nowait(frame)
            except Full:  # latest frame wins; drop the stale one
                try:
                    q.get_nowait()
                except Empty:
                    pass
                try:
                    q.put_nowait(frame)
                except Full:
                    pass

    def run_realtime(self) -> None:
        """30 Hz loop; runs until stop() regardless of connected clients."""
        next_t = time.monotonic()
        while not self._stop.is_set():
            frame = self.tick()
            self.broadcast(frame)
            next_t += CONTROL_DT
            delay = next_t - time.monotonic()
            if delay > 0:
                time.sleep(delay)
            else:
                next_t = time.monotonic()

    def stop(self) -> None:
        self._stop.set()


def handle_message(session: SimSession, raw: str) -> dict | None:
    """Parse one client message into the mailbox; returns an error frame or None."""
    try:
        msg = json.loads(raw)
        kind = msg.get("type")
    except (json.JSONDecodeError, AttributeError):
        return {"type": "error", "reason": "malformed message"}
    if kind not in COMMANDS:
        return {"type": "error", "reason": f"unknown message type: {kind!r}"}
    session.mailbox.put(kind, msg)
    return None


def build_app(session: SimSession):
    app = FastAPI(title="gaitlab serve")

    @app.websocket("/ws")
    async def ws_endpoint(ws: WebSocket):
        await ws.accept()
        q = session.attach()

        async def sender():
            # poll the depth-1 queue; blocking waits would pin threads at shutdown
            while True:
                try:
                    frame = q.get_nowait()
                except Empty:
                    await asyncio.sleep(0.005)
                    continue
                await ws.send_text(json.dumps(frame))

        send_task = asyncio.ensure_future(sender())
        try:
            while True:
                raw = await ws.receive_text()
                err = handle_message(session, raw)
                if err is not None:
                    await ws.send_text(json.dumps(err))
        except WebSocketDisconnect:
            pass
        finally:
            send_task.cancel()
            session.detach(q)

    return app


def build_session(cfg: ExperimentConfig) -> SimSession:
    from .cli import load_base_policy

    spec = cfg.scenario_spec()
    dims = cfg.net_dims()
    base = load_base_policy(cfg)
    adapters = {}
    for path in cfg.adapters:
        from pathlib import Path

        name = Path(path).parent.name or Path(path).stem
        adapted = load_adapter(path, cfg.base_checkpoint, dims)
        locked = cfg.locked_action_indices()
        if locked:
            adapted = prune_adapted(adapted, locked)
        adapters[name] = adapted
    return SimSession(spec, base, adapters, seed=cfg.seed)


def run_server(cfg: ExperimentConfig) -> None:
    import uvicorn

    session = build_session(cfg)
    app = build_app(session)
    sim_thread = threading.Thread(target=session.run_realtime, daemon=True)
    sim_thread.start()
    print(f"[serve] listening on ws://0.0.0.0:{cfg.port}/ws "
          f"(adapters: {list(session.adapters) or 'none'})")
    try:
        uvicorn.run(app, host="0.0.0.0", port=cfg.port, log_level="warning")
    finally:
        session.stop()
