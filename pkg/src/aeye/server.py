"""Live two-driver sessions over websockets, plus static UI hosting.

One asyncio loop owns the world (single writer). Each connected client
claims a role (`semantic` or `safety`), receives only that role's view
in every state frame, and submits control inputs that are applied
latest-wins on the next tick. A safety input beyond the deadband freezes
the rolling buffer, pauses the simulation, and asks the safety client
for the four-way intervention label before anything else happens; the
labeled record is persisted in the standard capture layout.

Slow clients never stall the loop: state frames go through a depth-one
newest-wins slot per client, while control messages (role assignment,
session events, label requests) use a small reliable queue.
"""

import asyncio
import collections
import http
import json
import mimetypes
import os
from pathlib import Path

from websockets.asyncio.server import serve
from websockets.datastructures import Headers
from websockets.exceptions import ConnectionClosed
from websockets.http11 import Response

from . import wire
from .arbitration import ControlCommand, InterventionEvent, ZERO_COMMAND, arbitrate
from .capture import CornerCaseRecord, FrameRecord, RollingBuffer, persist, push
from .config import default_data_dir
from .errors import ConfigError, FormatError, InputError
from .evaluation import CampaignEvent, CampaignLog, log_to_dict
from .perception import load_model
from .session import InterventionGate, _semantic_view
from .world import init_world, nearest_light_phase, render, step

ROLES = ("semantic", "safety")
STALE_SECONDS = 0.5


class Mailbox:
    """Per-client outbox: reliable control messages + newest-wins frame."""

    def __init__(self):
        self._ctrl = collections.deque()
        self._frame = None
        self._wake = asyncio.Event()

    def put_ctrl(self, msg):
        self._ctrl.append(msg)
        self._wake.set()

    def put_frame(self, msg):
        self._frame = msg  # replacing an unsent frame drops it for the laggard
        self._wake.set()

    async def get(self):
        while True:
            if self._ctrl:
                return self._ctrl.popleft()
            if self._frame is not None:
                msg, self._frame = self._frame, None
                return msg
            self._wake.clear()
            await self._wake.wait()


class Client:
    def __init__(self, conn, role):
        self.conn = conn
        self.role = role
        self.mailbox = Mailbox()
        self.last_cmd = ZERO_COMMAND
        self.last_input_tick = None
        self.last_seq = -1


class LiveServer:
    """Owns one live session; start() binds, stop() ends the session."""

    def __init__(self, cfg, data_dir=None, static_dir=None, tick_interval=0.1):
        cfg.validate()
        if cfg.mode != "live":
            raise ConfigError(f"LiveServer requires live mode, got {cfg.mode}")
        self.cfg = cfg
        self.data_dir = str(data_dir) if data_dir is not None else default_data_dir()
        self.static_dir = Path(static_dir) if static_dir is not None else None
        self.tick_interval = tick_interval
        self.stale_ticks = max(1, int(round(STALE_SECONDS / tick_interval)))

        self.model = load_model(cfg.model_path) if cfg.model_path else None
        self.state = init_world(cfg.world)
        self.buffer = RollingBuffer(capacity=cfg.buffer_capacity)
        self.gate = InterventionGate(cooldown_ticks=int(round(cfg.capture_fps)))
        self.phase = "lobby"  # lobby | driving | labeling | paused | ended
        self.clients = {}     # role -> Client
        self.events = []      # CampaignEvent list, label events included
        self.captured_ids = []
        self.pending = None   # frozen capture awaiting its label
        self._started_once = False
        self._seq = 0
        self._server = None
        self._loop_task = None

    # -- lifecycle ----------------------------------------------------------

    async def start(self):
        self._server = await serve(
            self._handler,
            self.cfg.listen_host,
            self.cfg.listen_port,
            process_request=self._process_request,
        )
        self._loop_task = asyncio.create_task(self._run_loop())
        return self.port

    @property
    def port(self):
        return self._server.sockets[0].getsockname()[1]

    async def stop(self):
        self._broadcast_ctrl(self._event_msg("ended"))
        await asyncio.sleep(0)
        if self._loop_task is not None:
            self._loop_task.cancel()
        self._server.close()
        await self._server.wait_closed()
        self.phase = "ended"
        self._write_session_log()

    async def serve_forever(self):
        await self.start()
        try:
            await self._server.serve_forever()
        finally:
            await self.stop()

    def _write_session_log(self):
        log = CampaignLog(
            events=tuple(self.events),
            distance_km=self.state.odometer_km,
            time_min=self.state.clock / 60.0,
        )
        doc = log_to_dict(log)
        doc["captures"] = list(self.captured_ids)
        os.makedirs(self.data_dir, exist_ok=True)
        path = os.path.join(self.data_dir, "session_log.json")
        with open(path, "w") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
        return path

    # -- message plumbing ----------------------------------------------------

    def _next_seq(self):
        self._seq += 1
        return self._seq

    def _event_msg(self, kind, **fields):
        return wire.make("session_event", self._next_seq(), kind=kind, **fields)

    def _broadcast_ctrl(self, msg):
        for client in self.clients.values():
            client.mailbox.put_ctrl(msg)

    async def _send_now(self, conn, msg):
        try:
            await conn.send(wire.dumps(msg))
        except ConnectionClosed:
            pass

    # -- connection handling --------------------------------------------------

    async def _handler(self, conn):
        client = None
        sender = None
        try:
            async for raw in conn:
                try:
                    msg = wire.parse(raw)
                except FormatError as e:
                    await self._send_now(
                        conn, wire.make("rejected", self._next_seq(), reason=str(e)))
                    continue
                if client is None:
                    client = self._claim_role(conn, msg)
                    if client is not None:
                        sender = asyncio.create_task(self._sender(client))
                    continue
                self._dispatch(client, msg)
        except ConnectionClosed:
            pass
        finally:
            if sender is not None:
                sender.cancel()
            if client is not None:
                self._release_role(client)

    def _claim_role(self, conn, msg):
        if msg["type"] != "hello":
            asyncio.ensure_future(self._send_now(
                conn, wire.make("rejected", self._next_seq(),
                                reason="claim a role with a hello message first")))
            return None
        role = msg.get("role")
        if role not in ROLES:
            asyncio.ensure_future(self._send_now(
                conn, wire.make("rejected", self._next_seq(),
                                reason=f"role must be one of {list(ROLES)}")))
            return None
        if role in self.clients:
            asyncio.ensure_future(self._send_now(
                conn, wire.make("rejected", self._next_seq(),
                                reason=f"role {role!r} already claimed")))
            return None
        client = Client(conn, role)
        self.clients[role] = client
        client.mailbox.put_ctrl(
            wire.make("role_assigned", self._next_seq(), role=role))
        if all(r in self.clients for r in ROLES):
            self._go_live()
        return client

    def _go_live(self):
        if self.pending is not None:
            self.phase = "labeling"
            self._broadcast_ctrl(self._event_msg("resumed"))
            self._request_label()
        else:
            kind = "resumed" if self._started_once else "started"
            self._started_once = True
            self.phase = "driving"
            self._broadcast_ctrl(self._event_msg(kind))

    def _release_role(self, client):
        if self.clients.get(client.role) is client:
            del self.clients[client.role]
            if self.phase in ("driving", "labeling"):
                self.phase = "paused"
                self._broadcast_ctrl(
                    self._event_msg("paused", reason=f"{client.role} disconnected"))

    def _dispatch(self, client, msg):
        kind = msg["type"]
        if msg["seq"] <= client.last_seq:
            return  # stale by the client's own numbering
        client.last_seq = msg["seq"]
        if kind == "control_input":
            self._apply_input(client, msg)
        elif kind == "intervention_label":
            self._apply_label(client, msg)
        else:
            client.mailbox.put_ctrl(
                wire.make("rejected", self._next_seq(),
                          reason=f"unexpected {kind} from {client.role}"))

    def _apply_input(self, client, msg):
        if msg.get("role") not in (None, client.role):
            client.mailbox.put_ctrl(
                wire.make("rejected", self._next_seq(),
                          reason="control_input role does not match the connection"))
            return
        cmd = msg.get("cmd") or {}
        try:
            parsed = ControlCommand(
                steer=float(cmd.get("steer", 0.0)),
                throttle=float(cmd.get("throttle", 0.0)),
                brake=float(cmd.get("brake", 0.0)),
            ).validate()
        except (TypeError, ValueError, InputError) as e:
            client.mailbox.put_ctrl(
                wire.make("rejected", self._next_seq(), reason=f"bad command: {e}"))
            return
        client.last_cmd = parsed
        client.last_input_tick = self.state.tick

    def _apply_label(self, client, msg):
        if client.role != "safety" or self.phase != "labeling" or self.pending is None:
            client.mailbox.put_ctrl(
                wire.make("rejected", self._next_seq(),
                          reason="no label is being requested from this client"))
            return
        frames, timestamp, odometer, tick = self.pending
        try:
            event = InterventionEvent(
                timestamp=timestamp,
                odometer=odometer,
                cause=msg.get("cause"),
                comment=str(msg.get("comment", "")),
            )
        except InputError as e:
            client.mailbox.put_ctrl(
                wire.make("rejected", self._next_seq(), reason=str(e)))
            return
        record = CornerCaseRecord(
            id=f"cc-live-t{tick:07d}",
            frames=frames,
            event=event,
            km_driven_at_event=event.odometer,
            ride_duration_at_event=event.timestamp / 60.0,
        ).validate(capacity=self.cfg.buffer_capacity)
        persist(record, self.data_dir)
        self.captured_ids.append(record.id)
        self.events.append(CampaignEvent(odometer_km=event.odometer,
                                         time_min=event.timestamp / 60.0,
                                         cause=event.cause.value))
        self.pending = None
        self.phase = "driving"
        self._broadcast_ctrl(self._event_msg("cc_captured", id=record.id))

    def _request_label(self):
        safety = self.clients.get("safety")
        if safety is not None:
            safety.mailbox.put_ctrl(
                wire.make("label_request", self._next_seq(),
                          tick=self.pending[3]))

    # -- the session loop ------------------------------------------------------

    async def _run_loop(self):
        while True:
            await asyncio.sleep(self.tick_interval)
            if self.phase == "driving":
                self._tick()

    def _role_cmd(self, role):
        client = self.clients.get(role)
        if client is None or client.last_input_tick is None:
            return ZERO_COMMAND
        if self.state.tick - client.last_input_tick > self.stale_ticks:
            return ZERO_COMMAND  # input went stale; command decays to zero
        return client.last_cmd

    def _tick(self):
        cfg = self.cfg
        truth, app = render(self.state)
        view = _semantic_view(cfg, self.model, truth, app, self.state.tick)
        sem_cmd = self._role_cmd("semantic")
        safety_cmd = self._role_cmd("safety")
        effective, intervention = arbitrate(sem_cmd, safety_cmd, cfg.deadband)

        if self.gate.update(intervention):
            if self.buffer.full:
                frames = tuple(self.buffer.entries)
                self.buffer.entries.clear()
                self.pending = (frames, self.state.clock,
                                self.state.odometer_km, self.state.tick)
                self.phase = "labeling"
                self._request_label()
            else:
                # Underfull buffer: logged without a record, so no label dialog.
                self.events.append(CampaignEvent(
                    odometer_km=self.state.odometer_km,
                    time_min=self.state.clock / 60.0,
                    cause="unlabeled",
                ))

        tick_now = self.state.tick
        self.buffer = push(self.buffer, FrameRecord(
            tick_index=tick_now,
            timestamp=self.state.clock,
            truth=truth,
            predicted=view,
            appearance=app,
            ego_speed=self.state.ego.speed * 3.6,
            effective_cmd=effective,
        ))
        speed_kmh = self.state.ego.speed * 3.6
        light = nearest_light_phase(self.state)
        self.state = step(self.state, effective, cfg.tick_dt)

        if self.phase != "driving":
            return  # the trigger tick's frame is buffered but not streamed
        seq = self._next_seq()
        for role, client in self.clients.items():
            client.mailbox.put_frame(wire.state_frame(
                seq=seq,
                tick=tick_now,
                speed_kmh=speed_kmh,
                light_phase=light,
                semantic_view=view if role == "semantic" else None,
                clear_view=truth if role == "safety" else None,
            ))

    async def _sender(self, client):
        try:
            while True:
                msg = await client.mailbox.get()
                await client.conn.send(wire.dumps(msg))
        except (ConnectionClosed, asyncio.CancelledError):
            pass

    # -- static assets -----------------------------------------------------------

    def _process_request(self, conn, request):
        if request.headers.get("Upgrade", "").lower() == "websocket":
            return None
        return self._static_response(conn, request.path)

    def _static_response(self, conn, path):
        if self.static_dir is None:
            return conn.respond(http.HTTPStatus.OK,
                                "aeye live service; connect a client over /ws\n")
        rel = path.split("?", 1)[0].lstrip("/") or "index.html"
        target = (self.static_dir / rel).resolve()
        root = self.static_dir.resolve()
        if root not in target.parents and target != root:
            return conn.respond(http.HTTPStatus.NOT_FOUND, "not found\n")
        if target.is_dir():
            target = target / "index.html"
        if not target.is_file():
            return conn.respond(http.HTTPStatus.NOT_FOUND, "not found\n")
        ctype = mimetypes.guess_type(str(target))[0] or "application/octet-stream"
        body = target.read_bytes()
        return Response(
            http.HTTPStatus.OK, "OK",
            Headers([("Content-Type", ctype),
                     ("Content-Length", str(len(body)))]),
            body,
        )


async def serve_live(cfg, data_dir=None, static_dir=None, tick_interval=0.1):
    """Run a live session until cancelled."""
    server = LiveServer(cfg, data_dir=data_dir, static_dir=static_dir,
                        tick_interval=tick_interval)
    await server.serve_forever()
