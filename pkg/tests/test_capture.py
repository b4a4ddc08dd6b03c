"""Rolling buffer semantics and corner-case record persistence."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from aeye import capture as cap
from aeye.arbitration import ControlCommand, InterventionCause, InterventionEvent
from aeye.errors import CaptureError, FormatError, SequencingError, StorageError


def make_frame(tick, shape=(16, 16), speed=30.0):
    rng = np.random.default_rng(tick)
    truth = rng.integers(0, 8, size=shape).astype(np.uint8)
    pred = rng.integers(0, 8, size=shape).astype(np.uint8)
    app = rng.random(shape + (3,)).astype(np.float32)
    return cap.FrameRecord(
        tick_index=tick,
        timestamp=tick * 0.1,
        truth=truth,
        predicted=pred,
        appearance=app,
        ego_speed=speed,
        effective_cmd=ControlCommand(steer=0.1, throttle=0.5, brake=0.0),
    )


def make_event(ts, cause=InterventionCause.OVERLOOKED_WALKER):
    return InterventionEvent(timestamp=ts, odometer=0.42, cause=cause, comment="test")


def fill_buffer(capacity=30, start_tick=1):
    buf = cap.RollingBuffer(capacity=capacity)
    for t in range(start_tick, start_tick + capacity):
        cap.push(buf, make_frame(t))
    return buf


# -- buffer -----------------------------------------------------------------


def test_thirty_pushes_keep_all():
    buf = fill_buffer(30)
    assert len(buf) == 30
    assert buf.entries[0].tick_index == 1


def test_thirty_first_push_evicts_oldest():
    buf = fill_buffer(30)
    cap.push(buf, make_frame(31))
    assert len(buf) == 30
    assert buf.entries[0].tick_index == 2
    assert buf.entries[-1].tick_index == 31


def test_repeated_tick_rejected():
    buf = fill_buffer(5, start_tick=1)
    with pytest.raises(SequencingError):
        cap.push(buf, make_frame(5))
    with pytest.raises(SequencingError):
        cap.push(buf, make_frame(3))


@given(st.lists(st.integers(1, 5), min_size=1, max_size=80))
def test_buffer_never_exceeds_capacity(gaps):
    buf = cap.RollingBuffer(capacity=7)
    tick = 0
    ticks = []
    for g in gaps:
        tick += g
        ticks.append(tick)
        cap.push(buf, make_frame(tick, shape=(4, 4)))
        assert len(buf) <= 7
        got = [f.tick_index for f in buf.entries]
        assert got == ticks[-len(got):]
        assert got == sorted(got)


# -- snapshot ---------------------------------------------------------------


def test_snapshot_full_buffer_preserves_cause_and_clears():
    buf = fill_buffer(30)
    rec = cap.snapshot(buf, make_event(3.5))
    assert len(rec.frames) == 30
    assert rec.event.cause == InterventionCause.OVERLOOKED_WALKER
    assert len(buf) == 0
    # Frames span (capacity - 1) ticks of 0.1 s.
    assert rec.frames[-1].timestamp - rec.frames[0].timestamp == pytest.approx(2.9)


def test_snapshot_underfull_buffer_rejected():
    buf = fill_buffer(29)
    buf.capacity = 30
    with pytest.raises(CaptureError):
        cap.snapshot(buf, make_event(3.0))


def test_snapshot_metadata_from_event():
    buf = fill_buffer(30)
    rec = cap.snapshot(buf, make_event(120.0))
    assert rec.km_driven_at_event == pytest.approx(0.42)
    assert rec.ride_duration_at_event == pytest.approx(2.0)


def test_fifty_snapshots_yield_1500_frames():
    total = 0
    buf = cap.RollingBuffer(capacity=30)
    tick = 0
    for i in range(50):
        for _ in range(30):
            tick += 1
            cap.push(buf, make_frame(tick, shape=(8, 8)))
        rec = cap.snapshot(buf, make_event(tick * 0.1), record_id=f"cc{i}")
        total += len(rec.frames)
    assert total == 1500


def test_snapshot_event_before_last_frame_rejected():
    buf = fill_buffer(30)
    with pytest.raises(CaptureError):
        cap.snapshot(buf, make_event(0.5))


# -- persistence ------------------------------------------------------------


def records_equal(a, b):
    if (a.id, a.km_driven_at_event, a.ride_duration_at_event) != (
        b.id,
        b.km_driven_at_event,
        b.ride_duration_at_event,
    ):
        return False
    if (a.event.timestamp, a.event.odometer, a.event.cause, a.event.comment) != (
        b.event.timestamp,
        b.event.odometer,
        b.event.cause,
        b.event.comment,
    ):
        return False
    if len(a.frames) != len(b.frames):
        return False
    for fa, fb in zip(a.frames, b.frames):
        if (fa.tick_index, fa.timestamp, fa.ego_speed, fa.effective_cmd) != (
            fb.tick_index,
            fb.timestamp,
            fb.ego_speed,
            fb.effective_cmd,
        ):
            return False
        if not (
            np.array_equal(fa.truth, fb.truth)
            and np.array_equal(fa.predicted, fb.predicted)
            and fa.appearance.tobytes() == fb.appearance.tobytes()
        ):
            return False
    return True


def test_persist_load_round_trip(tmp_path):
    rec = cap.snapshot(fill_buffer(30), make_event(3.5))
    cap.persist(rec, tmp_path)
    back = cap.load(tmp_path, rec.id)
    assert records_equal(rec, back)


def test_persist_id_collision_rejected(tmp_path):
    rec = cap.snapshot(fill_buffer(30), make_event(3.5))
    cap.persist(rec, tmp_path)
    with pytest.raises(StorageError):
        cap.persist(rec, tmp_path)


def test_load_truncated_frame_names_file(tmp_path):
    rec = cap.snapshot(fill_buffer(30), make_event(3.5))
    cap.persist(rec, tmp_path)
    victim = tmp_path / rec.id / "frames" / "007.app.bin"
    victim.write_bytes(victim.read_bytes()[:-8])
    with pytest.raises(FormatError, match="007.app.bin"):
        cap.load(tmp_path, rec.id)


def test_load_corrupt_pgm_names_file(tmp_path):
    rec = cap.snapshot(fill_buffer(30), make_event(3.5))
    cap.persist(rec, tmp_path)
    victim = tmp_path / rec.id / "frames" / "003.truth.pgm"
    victim.write_bytes(b"P6 nonsense")
    with pytest.raises(FormatError, match="003.truth.pgm"):
        cap.load(tmp_path, rec.id)


def test_load_wrong_format_tag_rejected(tmp_path):
    rec = cap.snapshot(fill_buffer(30), make_event(3.5))
    cap.persist(rec, tmp_path)
    manifest = tmp_path / rec.id / "manifest.json"
    manifest.write_text(manifest.read_text().replace("aeye-cc/1", "aeye-cc/9"))
    with pytest.raises(FormatError, match="format"):
        cap.load(tmp_path, rec.id)


def test_two_records_listed(tmp_path):
    buf = fill_buffer(30)
    r1 = cap.snapshot(buf, make_event(3.5))
    for t in range(31, 61):
        cap.push(buf, make_frame(t))
    r2 = cap.snapshot(buf, make_event(6.5))
    cap.persist(r1, tmp_path)
    cap.persist(r2, tmp_path)
    assert cap.list_records(tmp_path) == sorted([r1.id, r2.id])


def test_pgm_is_8bit_binary_with_class_ids(tmp_path):
    rec = cap.snapshot(fill_buffer(30), make_event(3.5))
    cap.persist(rec, tmp_path)
    blob = (tmp_path / rec.id / "frames" / "000.truth.pgm").read_bytes()
    assert blob.startswith(b"P5\n16 16\n255\n")
    body = blob[len(b"P5\n16 16\n255\n"):]
    assert np.array_equal(
        np.frombuffer(body, dtype=np.uint8).reshape(16, 16), rec.frames[0].truth
    )
