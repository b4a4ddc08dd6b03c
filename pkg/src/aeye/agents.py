"""Scripted stand-ins for the two human drivers.

The semantic driver steers and throttles from the (possibly degraded)
semantic view alone; the safety driver watches ground truth and slams the
brake when time-to-collision drops below threshold and nobody else is
braking. Both are pure functions; the reaction-delay bookkeeping for the
safety driver lives in a small stateful monitor owned by the session.
"""

from collections import deque
from dataclasses import dataclass

import numpy as np

from .arbitration import ControlCommand, InterventionCause, ZERO_COMMAND
from .errors import ConfigError
from .semantics import (
    HAZARD_CLASSES,
    SemanticClass,
    row_distance,
    validate_semantic_grid,
)
from .world import DRAG_COEFF, EGO_ACCEL

TICK_DT = 0.1  # session tick, seconds (10 fps capture clock)
VIEW_DEPTH_M = 50.0

_HAZARD_IDS = np.array(sorted(int(c) for c in HAZARD_CLASSES))


@dataclass(frozen=True)
class SemanticPolicyParams:
    cruise_speed: float = 30.0        # km/h, must respect the 50 km/h rule
    corridor_halfwidth: int = 4       # cells either side of grid center
    brake_distance_rows: int = 20
    light_stop: bool = True

    def validate(self, grid_cols=64):
        if not 0.0 < self.cruise_speed <= 50.0:
            raise ConfigError(
                f"cruise_speed: must be in (0, 50] km/h, got {self.cruise_speed}"
            )
        if not 0 <= self.corridor_halfwidth <= grid_cols // 2:
            raise ConfigError(
                f"corridor_halfwidth: must fit the {grid_cols}-column grid"
            )
        if self.brake_distance_rows < 1:
            raise ConfigError("brake_distance_rows: must be >= 1")
        return self


@dataclass(frozen=True)
class SafetyPolicyParams:
    ttc_threshold: float = 1.5  # seconds
    reaction_delay: int = 2     # ticks

    def validate(self):
        if self.ttc_threshold <= 0.0:
            raise ConfigError(f"ttc_threshold: must be > 0, got {self.ttc_threshold}")
        if self.reaction_delay < 0:
            raise ConfigError("reaction_delay: must be >= 0")
        return self


def corridor_slice(cols, halfwidth):
    center = cols // 2
    return slice(max(center - halfwidth, 0), min(center + halfwidth + 1, cols))


def nearest_corridor_hazard(grid, halfwidth):
    """(row, class_id) of the nearest pedestrian/vehicle cell dead ahead."""
    band = grid[:, corridor_slice(grid.shape[1], halfwidth)]
    hazard = np.isin(band, _HAZARD_IDS)
    rows = np.nonzero(hazard.any(axis=1))[0]
    if rows.size == 0:
        return None
    r = int(rows[0])
    classes = band[r][hazard[r]]
    return r, int(classes.min())


def semantic_policy(view, ego_speed, params: SemanticPolicyParams,
                    light_phase=None, view_depth=VIEW_DEPTH_M) -> ControlCommand:
    """Drive from the semantic view: center on the road, brake for hazards.

    `ego_speed` is km/h. `light_phase` is the upcoming light's phase name
    as the HUD shows it ("red" stops the car when light_stop is set);
    grids carry no phase, so the session passes it alongside the view.
    """
    validate_semantic_grid(view)
    rows, cols = view.shape
    params.validate(grid_cols=cols)

    near = view[: rows // 2]
    road_rows, road_cols = np.nonzero(near == SemanticClass.ROAD)
    if road_cols.size:
        offset = (float(road_cols.mean()) - (cols - 1) / 2.0) / (cols / 2.0)
    else:
        offset = 0.0
    steer = float(np.clip(0.5 * offset, -1.0, 1.0))

    hazard = nearest_corridor_hazard(view, params.corridor_halfwidth)
    must_brake = hazard is not None and hazard[0] < params.brake_distance_rows
    if params.light_stop and light_phase == "red":
        light_rows = np.nonzero((view == SemanticClass.TRAFFIC_LIGHT).any(axis=1))[0]
        if light_rows.size and light_rows[0] < params.brake_distance_rows:
            must_brake = True
    if must_brake:
        return ControlCommand(steer=steer, throttle=0.0, brake=1.0)

    # Throttle that cannot push next-tick speed past cruise_speed.
    v = ego_speed / 3.6
    v_target = params.cruise_speed / 3.6
    throttle = ((v_target - v) / TICK_DT + DRAG_COEFF * v) / EGO_ACCEL
    return ControlCommand(steer=steer, throttle=float(np.clip(throttle, 0.0, 1.0)),
                          brake=0.0)


def safety_policy(truth, ego_speed, pending_effective_brake,
                  params: SafetyPolicyParams, corridor_halfwidth=4,
                  view_depth=VIEW_DEPTH_M) -> ControlCommand:
    """Full brake iff the nearest true corridor hazard has ttc < threshold
    and nobody is already braking hard. Pure; no reaction delay here."""
    validate_semantic_grid(truth)
    params.validate()
    if pending_effective_brake >= 0.5 or ego_speed <= 0.0:
        return ZERO_COMMAND
    hazard = nearest_corridor_hazard(truth, corridor_halfwidth)
    if hazard is None:
        return ZERO_COMMAND
    dist = row_distance(hazard[0], truth.shape[0], view_depth)
    ttc = dist / (ego_speed / 3.6)
    if ttc < params.ttc_threshold:
        return ControlCommand(steer=0.0, throttle=0.0, brake=1.0)
    return ZERO_COMMAND


class SafetyMonitor:
    """Applies the safety driver's reaction delay to the pure policy.

    Each tick's would-be command enters a queue and emerges
    `reaction_delay` ticks later, modeling human response latency.
    """

    def __init__(self, params: SafetyPolicyParams, corridor_halfwidth=4,
                 view_depth=VIEW_DEPTH_M):
        params.validate()
        self.params = params
        self.corridor_halfwidth = corridor_halfwidth
        self.view_depth = view_depth
        self._pending = deque([ZERO_COMMAND] * params.reaction_delay)

    def update(self, truth, ego_speed, pending_effective_brake) -> ControlCommand:
        wish = safety_policy(truth, ego_speed, pending_effective_brake,
                             self.params, self.corridor_halfwidth, self.view_depth)
        self._pending.append(wish)
        return self._pending.popleft()

    def reset(self):
        self._pending = deque([ZERO_COMMAND] * self.params.reaction_delay)


def auto_label_cause(truth, corridor_halfwidth=4) -> InterventionCause:
    """Headless stand-in for the human's four-way label: pick by the
    ground-truth class of the nearest corridor hazard; red-light overruns
    (no hazard present) map to the rule-violation label. Boredom is a
    human-only label and is never generated here."""
    hazard = nearest_corridor_hazard(truth, corridor_halfwidth)
    if hazard is None:
        return InterventionCause.TRAFFIC_RULE_VIOLATION
    if hazard[1] == SemanticClass.PEDESTRIAN:
        return InterventionCause.OVERLOOKED_WALKER
    return InterventionCause.OVERLOOKED_VEHICLE
