"""Serve protocol: mailbox coalescing, frames, websocket endpoint."""

import json

import numpy as np
import pytest

from gaitlab.motion import GaitParams, generate_clip
from gaitlab.nn.nets import NetDims, PolicyNet
from gaitlab.serve import SimSession, build_app, handle_message
from gaitlab.sim import default_biped
from gaitlab.train.rollout import ScenarioSpec


@pytest.fixture()
def session():
    m = default_biped()
    spec = ScenarioSpec(morph=m, clip=generate_clip(GaitParams(), m))
    base = PolicyNet(NetDims(), np.random.default_rng(0))
    return SimSession(spec, base, adapters={}, seed=0)


def test_headless_ticks_without_clients(session):
    f1 = session.tick()
    f2 = session.tick()
    assert f1["type"] == "frame" and f2["tick"] == f1["tick"] + 1
    assert len(f1["bodies"]) == 7
    assert {"x", "y", "angle"} <= set(f1["bodies"][0])


def test_set_alpha_applies_at_next_tick(session):
    assert session.alpha == 0.0
    handle_message(session, json.dumps({"type": "set_alpha", "value": 0.7}))
    assert session.alpha == 0.0  # not yet applied
    frame = session.tick()
    assert frame["alpha"] == 0.7


def test_command_rate_coalesces_latest_wins(session):
    # 100 commands within one tick window: only the last applies
    for k in range(100):
        handle_message(session, json.dumps({"type": "set_alpha", "value": k / 100}))
    applied = []
    orig = session.apply_commands

    frame = session.tick()
    assert frame["alpha"] == 0.99
    # nothing left over for the next tick
    assert session.mailbox.drain() == {}


def test_unknown_message_error_keeps_session(session):
    err = handle_message(session, json.dumps({"type": "warp_drive"}))
    assert err["type"] == "error" and "unknown" in err["reason"]
    err2 = handle_message(session, "{not json")
    assert err2["type"] == "error"
    session.tick()  # still alive


def test_pause_resume_reset(session):
    handle_message(session, json.dumps({"type": "pause"}))
    f1 = session.tick()
    t1 = f1["t"]
    f2 = session.tick()
    assert f2["t"] == t1 and f2["paused"]
    handle_message(session, json.dumps({"type": "resume"}))
    f3 = session.tick()
    assert f3["t"] > t1

    handle_message(session, json.dumps({"type": "set_target", "dir": -1, "speed": 0.8}))
    f4 = session.tick()
    assert f4["goal"]["dir"] == -1.0
    assert f4["goal"]["speed"] == 0.8

    handle_message(session, json.dumps({"type": "reset"}))
    f5 = session.tick()
    assert f5["t"] <= 2.0 / 30.0 + 1e-9


def test_perturb_command_schedules_push(session):
    handle_message(session, json.dumps({"type": "perturb", "force": 50.0,
                                        "duration": 0.2, "angle": 0.0}))
    session.tick()
    assert session.env.world._push is not None


def test_broadcast_drops_stale_frames(session):
    q = session.attach()
    session.broadcast({"type": "frame", "tick": 1})
    session.broadcast({"type": "frame", "tick": 2})  # replaces the stale one
    assert q.get_nowait()["tick"] == 2
    session.detach(q)


def test_websocket_roundtrip(session):
    import time

    from starlette.testclient import TestClient

    app = build_app(session)
    client = TestClient(app)
    with client.websocket_connect("/ws") as ws:
        # unknown command -> error frame, connection stays open
        ws.send_text(json.dumps({"type": "nope"}))
        msg = json.loads(ws.receive_text())
        assert msg["type"] == "error"

        ws.send_text(json.dumps({"type": "set_alpha", "value": 0.25}))
        for _ in range(200):  # wait for the receive loop to file the command
            if session.mailbox.slots:
                break
            time.sleep(0.005)
        frame = session.tick()
        session.broadcast(frame)
        got = json.loads(ws.receive_text())
        assert got["type"] == "frame"
        assert got["alpha"] == 0.25
