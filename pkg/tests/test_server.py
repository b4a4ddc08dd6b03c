"""Live service round-trip with scripted websocket clients."""

import asyncio
import json
import os

import pytest

from websockets.asyncio.client import connect

from aeye.perception import DegradationParams
from aeye.server import LiveServer, Mailbox
from aeye.session import SessionConfig
from aeye.wire import parse
from aeye.world import WorldConfig

TICK = 0.004


def live_config():
    return SessionConfig(
        mode="live",
        world=WorldConfig(seed=21, npc_walkers=10, npc_vehicles=2),
        degradation=DegradationParams(quality=0.5, seed=21),
        listen_host="127.0.0.1",
        listen_port=0,
    )


class Scripted:
    """A test client: parses every message, tracks what it has seen."""

    def __init__(self, ws):
        self.ws = ws
        self.seq = 0
        self.frames = []
        self.others = []

    async def send(self, msg_type, **fields):
        self.seq += 1
        payload = {"format": "aeye-wire/1", "type": msg_type, "seq": self.seq}
        payload.update(fields)
        await self.ws.send(json.dumps(payload))

    async def recv_until(self, want, timeout=5.0):
        async def _scan():
            while True:
                msg = parse(await self.ws.recv())
                if msg["type"] == "state_frame":
                    self.frames.append(msg)
                else:
                    self.others.append(msg)
                if want(msg):
                    return msg
        return await asyncio.wait_for(_scan(), timeout)

    async def next_event(self, kind, timeout=5.0):
        return await self.recv_until(
            lambda m: m["type"] == "session_event" and m["kind"] == kind, timeout)


async def start_pair(server):
    port = await server.start()
    sem = Scripted(await connect(f"ws://127.0.0.1:{port}/ws"))
    saf = Scripted(await connect(f"ws://127.0.0.1:{port}/ws"))
    await sem.send("hello", role="semantic")
    await sem.recv_until(lambda m: m["type"] == "role_assigned")
    await saf.send("hello", role="safety")
    await saf.recv_until(lambda m: m["type"] == "role_assigned")
    await sem.next_event("started")
    await saf.next_event("started")
    return sem, saf


def test_live_intervention_round_trip(tmp_path):
    async def scenario():
        server = LiveServer(live_config(), data_dir=tmp_path, tick_interval=TICK)
        try:
            sem, saf = await start_pair(server)
            # drive past one buffer length so a capture is possible
            await saf.recv_until(lambda m: m["type"] == "state_frame"
                                 and m["tick"] >= 32)
            await saf.send("control_input", role="safety",
                           cmd={"steer": 0.0, "throttle": 0.0, "brake": 0.8})
            req = await saf.recv_until(lambda m: m["type"] == "label_request")
            trigger_tick = req["tick"]
            await saf.send("intervention_label", cause="overlooked_walker",
                           comment="cut across from the right")
            ev_saf = await saf.next_event("cc_captured")
            ev_sem = await sem.next_event("cc_captured")
            assert ev_saf["id"] == ev_sem["id"]

            rec_dir = tmp_path / ev_saf["id"]
            manifest = json.loads((rec_dir / "manifest.json").read_text())
            assert manifest["format"] == "aeye-cc/1"
            assert manifest["event"]["cause"] == "overlooked_walker"
            assert manifest["event"]["comment"] == "cut across from the right"
            assert len(manifest["frames"]) == 30
            last_tick = manifest["frames"][-1]["tick_index"]
            assert last_tick < trigger_tick
            # stream resumes after the label
            await sem.recv_until(lambda m: m["type"] == "state_frame")
        finally:
            await server.stop()
    asyncio.run(scenario())


def test_role_isolation_on_the_wire(tmp_path):
    async def scenario():
        server = LiveServer(live_config(), data_dir=tmp_path, tick_interval=TICK)
        try:
            sem, saf = await start_pair(server)
            for client in (sem, saf):
                await client.recv_until(
                    lambda m: m["type"] == "state_frame", timeout=5.0)
                while len(client.frames) < 5:
                    await client.recv_until(lambda m: m["type"] == "state_frame")
            assert all("semantic_view" in f and "clear_view" not in f
                       for f in sem.frames)
            assert all("clear_view" in f and "semantic_view" not in f
                       for f in saf.frames)
            for client in (sem, saf):
                seqs = [f["seq"] for f in client.frames]
                assert seqs == sorted(seqs)
        finally:
            await server.stop()
    asyncio.run(scenario())


def test_role_collision_rejected(tmp_path):
    async def scenario():
        server = LiveServer(live_config(), data_dir=tmp_path, tick_interval=TICK)
        try:
            port = await server.start()
            first = Scripted(await connect(f"ws://127.0.0.1:{port}/ws"))
            await first.send("hello", role="semantic")
            await first.recv_until(lambda m: m["type"] == "role_assigned")
            second = Scripted(await connect(f"ws://127.0.0.1:{port}/ws"))
            await second.send("hello", role="semantic")
            msg = await second.recv_until(lambda m: m["type"] == "rejected")
            assert "already claimed" in msg["reason"]
            third = Scripted(await connect(f"ws://127.0.0.1:{port}/ws"))
            await third.send("hello", role="referee")
            msg = await third.recv_until(lambda m: m["type"] == "rejected")
            assert "role must be one of" in msg["reason"]
        finally:
            await server.stop()
    asyncio.run(scenario())


def test_bad_label_keeps_dialog_open(tmp_path):
    async def scenario():
        server = LiveServer(live_config(), data_dir=tmp_path, tick_interval=TICK)
        try:
            sem, saf = await start_pair(server)
            await saf.recv_until(lambda m: m["type"] == "state_frame"
                                 and m["tick"] >= 32)
            await saf.send("control_input", role="safety",
                           cmd={"steer": 0.0, "throttle": 0.0, "brake": 1.0})
            await saf.recv_until(lambda m: m["type"] == "label_request")
            await saf.send("intervention_label", cause="sneezed", comment="")
            await saf.recv_until(lambda m: m["type"] == "rejected")
            # the label is still owed; a valid cause completes the capture
            await saf.send("intervention_label", cause="boredom", comment="")
            ev = await saf.next_event("cc_captured")
            assert (tmp_path / ev["id"] / "manifest.json").is_file()
        finally:
            await server.stop()
    asyncio.run(scenario())


def test_disconnect_pauses_session(tmp_path):
    async def scenario():
        server = LiveServer(live_config(), data_dir=tmp_path, tick_interval=TICK)
        try:
            sem, saf = await start_pair(server)
            await saf.ws.close()
            await sem.next_event("paused")
            assert server.phase == "paused"
        finally:
            await server.stop()
    asyncio.run(scenario())


def test_malformed_message_rejected_connection_kept(tmp_path):
    async def scenario():
        server = LiveServer(live_config(), data_dir=tmp_path, tick_interval=TICK)
        try:
            port = await server.start()
            client = Scripted(await connect(f"ws://127.0.0.1:{port}/ws"))
            await client.ws.send("not json at all")
            msg = await client.recv_until(lambda m: m["type"] == "rejected")
            assert msg["type"] == "rejected"
            await client.send("hello", role="safety")
            await client.recv_until(lambda m: m["type"] == "role_assigned")
        finally:
            await server.stop()
    asyncio.run(scenario())


def test_static_files_served_next_to_socket(tmp_path):
    static = tmp_path / "static"
    static.mkdir()
    (static / "index.html").write_text("<html><body>rig</body></html>")
    (static / "app.js").write_text("console.log('rig');")

    async def fetch(port, path):
        reader, writer = await asyncio.open_connection("127.0.0.1", port)
        writer.write(f"GET {path} HTTP/1.1\r\nHost: x\r\nConnection: close\r\n\r\n"
                     .encode())
        await writer.drain()
        data = await reader.read()
        writer.close()
        return data.decode("utf-8", "replace")

    async def scenario():
        server = LiveServer(live_config(), data_dir=tmp_path / "data",
                            static_dir=static, tick_interval=TICK)
        try:
            port = await server.start()
            index = await fetch(port, "/")
            assert "200" in index.splitlines()[0] and "rig" in index
            js = await fetch(port, "/app.js")
            assert "text/javascript" in js or "application/javascript" in js
            missing = await fetch(port, "/nope.css")
            assert "404" in missing.splitlines()[0]
            escape = await fetch(port, "/../secret")
            assert "404" in escape.splitlines()[0]
        finally:
            await server.stop()
    asyncio.run(scenario())


def test_mailbox_frames_newest_wins():
    async def scenario():
        box = Mailbox()
        box.put_ctrl({"n": 1})
        box.put_frame({"f": 1})
        box.put_frame({"f": 2})
        box.put_frame({"f": 3})
        assert await box.get() == {"n": 1}
        assert await box.get() == {"f": 3}
    asyncio.run(scenario())
