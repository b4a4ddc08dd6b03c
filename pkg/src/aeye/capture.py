"""Rolling frame buffer and corner-case snapshot persistence.

A session pushes one FrameRecord per tick into a RollingBuffer sized for
3 s at 10 fps. When the safety driver intervenes, `snapshot` freezes the
buffered window into an immutable CornerCaseRecord, which `persist`/`load`
round-trip through a versioned on-disk layout: a JSON manifest plus one
PGM pair (truth/predicted class ids) and one raw float32 appearance file
per frame.
"""

import json
import os
from dataclasses import dataclass, field

import numpy as np

from .arbitration import ControlCommand, InterventionEvent
from .errors import CaptureError, FormatError, SequencingError, StorageError
from .semantics import validate_appearance_grid, validate_semantic_grid

CAPTURE_SECONDS = 3.0
CAPTURE_FPS = 10.0
DEFAULT_CAPACITY = int(CAPTURE_SECONDS * CAPTURE_FPS)

MANIFEST_FORMAT = "aeye-cc/1"


@dataclass(frozen=True)
class FrameRecord:
    """One tick of the dual-channel feed plus the command that drove it."""

    tick_index: int
    timestamp: float
    truth: np.ndarray
    predicted: np.ndarray
    appearance: np.ndarray
    ego_speed: float  # km/h
    effective_cmd: ControlCommand

    def validate(self):
        validate_semantic_grid(self.truth)
        validate_semantic_grid(self.predicted)
        validate_appearance_grid(self.appearance, shape=self.truth.shape)
        if self.predicted.shape != self.truth.shape:
            raise CaptureError("truth and predicted grids must share shape")
        self.effective_cmd.validate()
        return self


@dataclass
class RollingBuffer:
    capacity: int = DEFAULT_CAPACITY
    entries: list = field(default_factory=list)

    def __len__(self):
        return len(self.entries)

    @property
    def full(self):
        return len(self.entries) == self.capacity


def push(buffer: RollingBuffer, frame: FrameRecord) -> RollingBuffer:
    """Append a frame, evicting the oldest once past capacity."""
    if buffer.entries and frame.tick_index <= buffer.entries[-1].tick_index:
        raise SequencingError(
            f"tick_index {frame.tick_index} not after {buffer.entries[-1].tick_index}"
        )
    buffer.entries.append(frame)
    if len(buffer.entries) > buffer.capacity:
        del buffer.entries[0]
    return buffer


@dataclass(frozen=True)
class CornerCaseRecord:
    id: str
    frames: tuple
    event: InterventionEvent
    km_driven_at_event: float
    ride_duration_at_event: float  # minutes

    def validate(self, capacity=None):
        if capacity is not None and len(self.frames) != capacity:
            raise CaptureError(f"record has {len(self.frames)} frames, expected {capacity}")
        ticks = [f.tick_index for f in self.frames]
        if any(b <= a for a, b in zip(ticks, ticks[1:])):
            raise CaptureError("frame tick_index must be strictly increasing")
        if self.frames and self.event.timestamp < self.frames[-1].timestamp:
            raise CaptureError("event precedes the last buffered frame")
        return self


def snapshot(buffer: RollingBuffer, event: InterventionEvent, record_id=None) -> CornerCaseRecord:
    """Freeze a full buffer into a record and clear the buffer.

    The record carries the odometry and ride clock at the event, matching
    the logbook fields a safety driver would note. Raises a capture error
    when the buffer holds fewer than `capacity` frames (interventions in
    the first seconds of a run are logged by the caller but yield no
    record).
    """
    if not buffer.full:
        raise CaptureError(
            f"buffer holds {len(buffer)} of {buffer.capacity} frames; cannot snapshot"
        )
    frames = tuple(buffer.entries)
    buffer.entries.clear()
    if record_id is None:
        record_id = f"cc-{frames[-1].tick_index:08d}"
    return CornerCaseRecord(
        id=record_id,
        frames=frames,
        event=event,
        km_driven_at_event=event.odometer,
        ride_duration_at_event=event.timestamp / 60.0,
    ).validate(capacity=len(frames))


# ---------------------------------------------------------------------------
# On-disk layout
# ---------------------------------------------------------------------------


def _write_pgm(path, grid):
    with open(path, "wb") as f:
        f.write(f"P5\n{grid.shape[1]} {grid.shape[0]}\n255\n".encode("ascii"))
        f.write(np.ascontiguousarray(grid, dtype=np.uint8).tobytes())


def _read_pgm(path, shape):
    with open(path, "rb") as f:
        blob = f.read()
    header = f"P5\n{shape[1]} {shape[0]}\n255\n".encode("ascii")
    if not blob.startswith(header):
        raise FormatError(f"{path}: malformed PGM header")
    body = blob[len(header):]
    if len(body) != shape[0] * shape[1]:
        raise FormatError(f"{path}: expected {shape[0] * shape[1]} pixel bytes, got {len(body)}")
    return np.frombuffer(body, dtype=np.uint8).reshape(shape).copy()


def _read_app(path, shape):
    with open(path, "rb") as f:
        blob = f.read()
    expected = shape[0] * shape[1] * 3 * 4
    if len(blob) != expected:
        raise FormatError(f"{path}: expected {expected} bytes, got {len(blob)}")
    return np.frombuffer(blob, dtype="<f4").reshape(shape + (3,)).copy()


def persist(record: CornerCaseRecord, root) -> str:
    """Write a record under `<root>/<id>/`; returns the record directory."""
    rec_dir = os.path.join(str(root), record.id)
    if os.path.exists(rec_dir):
        raise StorageError(f"record id {record.id!r} already exists under {root}")
    frames_dir = os.path.join(rec_dir, "frames")
    os.makedirs(frames_dir)
    shape = record.frames[0].truth.shape
    manifest = {
        "format": MANIFEST_FORMAT,
        "id": record.id,
        "event": {
            "timestamp": record.event.timestamp,
            "odometer": record.event.odometer,
            "cause": record.event.cause.value,
            "comment": record.event.comment,
        },
        "km_driven_at_event": record.km_driven_at_event,
        "ride_duration_at_event": record.ride_duration_at_event,
        "capture_fps": CAPTURE_FPS,
        "grid_shape": list(shape),
        "frames": [
            {
                "tick_index": f.tick_index,
                "timestamp": f.timestamp,
                "ego_speed": f.ego_speed,
                "effective_cmd": [f.effective_cmd.steer, f.effective_cmd.throttle,
                                  f.effective_cmd.brake],
            }
            for f in record.frames
        ],
    }
    for i, f in enumerate(record.frames):
        _write_pgm(os.path.join(frames_dir, f"{i:03d}.truth.pgm"), f.truth)
        _write_pgm(os.path.join(frames_dir, f"{i:03d}.pred.pgm"), f.predicted)
        with open(os.path.join(frames_dir, f"{i:03d}.app.bin"), "wb") as fh:
            fh.write(np.ascontiguousarray(f.appearance, dtype="<f4").tobytes())
    with open(os.path.join(rec_dir, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
    return rec_dir


def load(root, record_id) -> CornerCaseRecord:
    """Read a persisted record back; exact inverse of `persist`."""
    rec_dir = os.path.join(str(root), record_id)
    manifest_path = os.path.join(rec_dir, "manifest.json")
    if not os.path.isfile(manifest_path):
        raise FormatError(f"{manifest_path}: missing manifest")
    with open(manifest_path) as fh:
        try:
            manifest = json.load(fh)
        except json.JSONDecodeError as e:
            raise FormatError(f"{manifest_path}: invalid JSON ({e})") from None
    if manifest.get("format") != MANIFEST_FORMAT:
        raise FormatError(
            f"{manifest_path}: format {manifest.get('format')!r} != {MANIFEST_FORMAT!r}"
        )
    shape = tuple(manifest["grid_shape"])
    ev = manifest["event"]
    event = InterventionEvent(timestamp=ev["timestamp"], odometer=ev["odometer"],
                              cause=ev["cause"], comment=ev.get("comment", ""))
    frames = []
    frames_dir = os.path.join(rec_dir, "frames")
    for i, meta in enumerate(manifest["frames"]):
        truth = _read_pgm(os.path.join(frames_dir, f"{i:03d}.truth.pgm"), shape)
        pred = _read_pgm(os.path.join(frames_dir, f"{i:03d}.pred.pgm"), shape)
        app = _read_app(os.path.join(frames_dir, f"{i:03d}.app.bin"), shape)
        s, t, b = meta["effective_cmd"]
        frames.append(
            FrameRecord(
                tick_index=meta["tick_index"],
                timestamp=meta["timestamp"],
                truth=truth,
                predicted=pred,
                appearance=app,
                ego_speed=meta["ego_speed"],
                effective_cmd=ControlCommand(steer=s, throttle=t, brake=b),
            )
        )
    return CornerCaseRecord(
        id=manifest["id"],
        frames=tuple(frames),
        event=event,
        km_driven_at_event=manifest["km_driven_at_event"],
        ride_duration_at_event=manifest["ride_duration_at_event"],
    )


def list_records(root):
    """Sorted ids of every record directory under `root`."""
    if not os.path.isdir(str(root)):
        return []
    out = []
    for name in sorted(os.listdir(str(root))):
        if os.path.isfile(os.path.join(str(root), name, "manifest.json")):
            out.append(name)
    return out
