"""Session orchestration: headless campaigns and record replay.

One loop owns the world, the rolling buffer, and the intervention gate.
Per tick: render both channels, derive the semantic driver's view,
run both policies, arbitrate, snapshot on a gated rising edge, then step
the world. Everything is keyed off the integer tick clock, so a campaign
is a pure function of its config.
"""

from dataclasses import dataclass, field, replace

from . import wire
from .agents import (
    SafetyMonitor,
    SafetyPolicyParams,
    SemanticPolicyParams,
    auto_label_cause,
    semantic_policy,
)
from .arbitration import DEFAULT_DEADBAND, InterventionEvent, arbitrate
from .capture import (
    CAPTURE_FPS,
    CAPTURE_SECONDS,
    FrameRecord,
    RollingBuffer,
    persist,
    push,
    snapshot,
)
from .errors import ConfigError, InputError
from .evaluation import CampaignEvent, CampaignLog
from .perception import DegradationParams, degrade, load_model, predict
from .semantics import hash_u64
from .world import WorldConfig, init_world, nearest_light_phase, render, step

# Degradation draws re-key every this many ticks, so each pass of an
# object through the view is an independent miss/see draw while staying
# stable within one encounter (~one buffer length).
DEGRADE_SEED_PERIOD = 30


@dataclass(frozen=True)
class SessionConfig:
    world: WorldConfig
    mode: str = "headless"  # headless | live | replay
    degradation: DegradationParams = None
    model_path: str = None
    semantic: SemanticPolicyParams = field(default_factory=SemanticPolicyParams)
    safety: SafetyPolicyParams = field(default_factory=SafetyPolicyParams)
    deadband: float = DEFAULT_DEADBAND
    capture_fps: float = CAPTURE_FPS
    capture_seconds: float = CAPTURE_SECONDS
    listen_host: str = "127.0.0.1"
    listen_port: int = 8737

    def validate(self):
        if self.mode not in ("headless", "live", "replay"):
            raise ConfigError(f"mode: must be headless|live|replay, got {self.mode!r}")
        sources = (self.degradation is not None) + (self.model_path is not None)
        if sources != 1:
            raise ConfigError(
                "perception: exactly one of degradation params or model_path required"
            )
        capacity = self.capture_fps * self.capture_seconds
        if abs(capacity - round(capacity)) > 1e-9 or capacity < 1:
            raise ConfigError(
                f"capture: fps x seconds must be a positive whole frame count, "
                f"got {self.capture_fps} x {self.capture_seconds}"
            )
        self.world.validate()
        if self.degradation is not None:
            self.degradation.validate()
        self.semantic.validate(grid_cols=self.world.grid_cols)
        self.safety.validate()
        if not 0.0 <= self.deadband <= 0.2:
            raise ConfigError(f"deadband: must be in [0, 0.2], got {self.deadband}")
        return self

    @property
    def buffer_capacity(self):
        return int(round(self.capture_fps * self.capture_seconds))

    @property
    def tick_dt(self):
        return 1.0 / self.capture_fps


@dataclass(frozen=True)
class StopCondition:
    max_km: float = None
    max_minutes: float = None
    max_cc: int = None
    max_ticks: int = None

    def validate(self):
        if all(v is None for v in (self.max_km, self.max_minutes, self.max_cc,
                                   self.max_ticks)):
            raise ConfigError("stop: need at least one of max_km/max_minutes/max_cc/max_ticks")
        return self

    def met(self, odometer_km, clock_s, n_cc, tick):
        if self.max_km is not None and odometer_km >= self.max_km:
            return True
        if self.max_minutes is not None and clock_s / 60.0 >= self.max_minutes:
            return True
        if self.max_cc is not None and n_cc >= self.max_cc:
            return True
        if self.max_ticks is not None and tick >= self.max_ticks:
            return True
        return False


class InterventionGate:
    """Rising-edge detector with a quiet-period re-arm.

    One event per contiguous above-deadband episode; after the episode
    ends, the safety command must stay inside the deadband for
    `cooldown_ticks` before another event may fire.
    """

    def __init__(self, cooldown_ticks: int = 10):
        self.cooldown_ticks = cooldown_ticks
        self._armed = True
        self._quiet = cooldown_ticks

    def update(self, intervention: bool) -> bool:
        if intervention:
            fired = self._armed
            self._armed = False
            self._quiet = 0
            return fired
        self._quiet += 1
        if self._quiet >= self.cooldown_ticks:
            self._armed = True
        return False


def _semantic_view(cfg: SessionConfig, model, truth, app, tick):
    if model is not None:
        return predict(model, app)
    base = cfg.degradation
    rotated = replace(
        base,
        seed=int(hash_u64(base.seed, 0xDE6A, tick // DEGRADE_SEED_PERIOD)),
    )
    return degrade(truth, rotated)


def run_headless_campaign(cfg: SessionConfig, stop: StopCondition, out_dir=None):
    """Drive until a stop condition; returns (CampaignLog, records, meta).

    When `out_dir` is set, every record is persisted there as it is
    captured. Interventions whose gate fires while the rolling buffer is
    still underfull produce no record; meta counts them as
    `missed_underfull`.
    """
    cfg.validate()
    stop.validate()
    if cfg.mode != "headless":
        raise ConfigError(f"run_headless_campaign requires headless mode, got {cfg.mode}")
    model = load_model(cfg.model_path) if cfg.model_path is not None else None
    dt = cfg.tick_dt

    state = init_world(cfg.world)
    buffer = RollingBuffer(capacity=cfg.buffer_capacity)
    monitor = SafetyMonitor(cfg.safety, corridor_halfwidth=cfg.semantic.corridor_halfwidth,
                            view_depth=cfg.world.view_depth)
    gate = InterventionGate(cooldown_ticks=int(round(cfg.capture_fps)))
    events = []
    records = []
    missed = 0

    while not stop.met(state.odometer_km, state.clock, len(records), state.tick):
        truth, app = render(state)
        view = _semantic_view(cfg, model, truth, app, state.tick)
        speed_kmh = state.ego.speed * 3.6
        light = nearest_light_phase(state)
        sem_cmd = semantic_policy(view, speed_kmh, cfg.semantic, light_phase=light,
                                  view_depth=cfg.world.view_depth)
        safety_cmd = monitor.update(truth, speed_kmh, sem_cmd.brake)
        effective, intervention = arbitrate(sem_cmd, safety_cmd, cfg.deadband)

        if gate.update(intervention):
            event = InterventionEvent(
                timestamp=state.clock,
                odometer=state.odometer_km,
                cause=auto_label_cause(truth, cfg.semantic.corridor_halfwidth),
                comment="auto-labeled headless intervention",
            )
            events.append(
                CampaignEvent(odometer_km=event.odometer,
                              time_min=event.timestamp / 60.0,
                              cause=event.cause.value)
            )
            if buffer.full:
                record = snapshot(
                    buffer, event,
                    record_id=f"cc-{len(records):04d}-t{state.tick:07d}",
                )
                records.append(record)
                if out_dir is not None:
                    persist(record, out_dir)
            else:
                # Intervening before the buffer has refilled (run start or
                # right after a snapshot) is logged but yields no record.
                missed += 1

        buffer = _push_frame(buffer, state, truth, view, app, effective)
        state = step(state, effective, dt)

    log = CampaignLog(
        events=tuple(events),
        distance_km=state.odometer_km,
        time_min=state.clock / 60.0,
    ).validate()
    return log, records, {"missed_underfull": missed, "ticks": state.tick}


def _push_frame(buffer, state, truth, view, app, effective):
    return push(
        buffer,
        FrameRecord(
            tick_index=state.tick,
            timestamp=state.clock,
            truth=truth,
            predicted=view,
            appearance=app,
            ego_speed=state.ego.speed * 3.6,
            effective_cmd=effective,
        ),
    )


def replay_record(record, include_clear=True, include_semantic=True):
    """A persisted corner case as ordered wire StateFrames, no stepping."""
    frames = []
    for seq, f in enumerate(record.frames):
        frames.append(
            wire.state_frame(
                seq=seq,
                tick=f.tick_index,
                speed_kmh=f.ego_speed,
                light_phase=None,
                semantic_view=f.predicted if include_semantic else None,
                clear_view=f.truth if include_clear else None,
            )
        )
    return frames
