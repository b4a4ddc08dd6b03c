"""JSON wire schema shared by the live server, clients, and replay.

Every message is one JSON text frame with a `format` tag and a
monotonically increasing `seq`. Grid payloads travel as base64 of the
same 8-bit PGM bytes the capture layout uses.
"""

import base64
import json

import numpy as np

from .errors import FormatError

WIRE_FORMAT = "aeye-wire/1"

MSG_TYPES = (
    "hello",
    "role_assigned",
    "rejected",
    "state_frame",
    "control_input",
    "label_request",
    "intervention_label",
    "session_event",
)


def encode_grid(grid) -> str:
    grid = np.ascontiguousarray(grid, dtype=np.uint8)
    header = f"P5\n{grid.shape[1]} {grid.shape[0]}\n255\n".encode("ascii")
    return base64.b64encode(header + grid.tobytes()).decode("ascii")


def decode_grid(payload: str) -> np.ndarray:
    try:
        blob = base64.b64decode(payload.encode("ascii"), validate=True)
    except Exception:
        raise FormatError("grid payload is not valid base64") from None
    if not blob.startswith(b"P5\n"):
        raise FormatError("grid payload is not a PGM")
    try:
        _, dims, maxval, body = blob.split(b"\n", 3)
        w, h = (int(x) for x in dims.split())
    except ValueError:
        raise FormatError("malformed PGM header in grid payload") from None
    if maxval != b"255" or len(body) != w * h:
        raise FormatError("PGM payload size mismatch")
    return np.frombuffer(body, dtype=np.uint8).reshape(h, w).copy()


def make(msg_type: str, seq: int, **fields) -> dict:
    return {"format": WIRE_FORMAT, "type": msg_type, "seq": seq, **fields}


def state_frame(seq, tick, speed_kmh, light_phase, semantic_view=None,
                clear_view=None) -> dict:
    msg = make("state_frame", seq, tick=tick, speed_kmh=speed_kmh,
               light_phase=light_phase)
    if semantic_view is not None:
        msg["semantic_view"] = encode_grid(semantic_view)
    if clear_view is not None:
        msg["clear_view"] = encode_grid(clear_view)
    return msg


def dumps(msg: dict) -> str:
    return json.dumps(msg, separators=(",", ":"), sort_keys=True)


def parse(text: str) -> dict:
    try:
        msg = json.loads(text)
    except json.JSONDecodeError as e:
        raise FormatError(f"invalid JSON message: {e}") from None
    if not isinstance(msg, dict):
        raise FormatError("wire message must be a JSON object")
    if msg.get("format") != WIRE_FORMAT:
        raise FormatError(f"unsupported wire format {msg.get('format')!r}")
    if msg.get("type") not in MSG_TYPES:
        raise FormatError(f"unknown message type {msg.get('type')!r}")
    if not isinstance(msg.get("seq"), int):
        raise FormatError("message missing integer seq")
    return msg
