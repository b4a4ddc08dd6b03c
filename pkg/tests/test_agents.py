"""Scripted driver policies: steering, braking, TTC, reaction delay."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aeye import agents
from aeye import perception as pc
from aeye.arbitration import ControlCommand, InterventionCause, ZERO_COMMAND, arbitrate
from aeye.errors import ConfigError
from aeye.semantics import SemanticClass, row_distance
from aeye.world import DRAG_COEFF, EGO_ACCEL

ROWS = COLS = 64


def road_view():
    view = np.full((ROWS, COLS), SemanticClass.ROAD, dtype=np.uint8)
    view[:, :20] = SemanticClass.SIDEWALK
    view[:, 44:] = SemanticClass.SIDEWALK
    return view


def put_hazard(view, row, cls=SemanticClass.PEDESTRIAN, col=32, size=3):
    for i in range(size):
        view[row + (i // 2), col + (i % 2)] = cls
    return view


# -- semantic policy ---------------------------------------------------------


def test_clear_road_below_cruise_throttles():
    cmd = agents.semantic_policy(road_view(), ego_speed=10.0,
                                 params=agents.SemanticPolicyParams())
    assert cmd.throttle > 0.0
    assert cmd.brake == 0.0


def test_centered_road_means_near_zero_steer():
    cmd = agents.semantic_policy(road_view(), 10.0, agents.SemanticPolicyParams())
    assert abs(cmd.steer) < 0.05


def test_off_center_road_steers_toward_it():
    view = np.full((ROWS, COLS), SemanticClass.SIDEWALK, dtype=np.uint8)
    view[:, 40:60] = SemanticClass.ROAD  # road mass to the right
    cmd = agents.semantic_policy(view, 10.0, agents.SemanticPolicyParams())
    assert cmd.steer > 0.1


def test_pedestrian_in_corridor_forces_full_brake():
    view = put_hazard(road_view(), row=10)
    cmd = agents.semantic_policy(view, 30.0, agents.SemanticPolicyParams())
    assert cmd.brake == 1.0
    assert cmd.throttle == 0.0


def test_hazard_beyond_brake_distance_ignored():
    view = put_hazard(road_view(), row=40)
    cmd = agents.semantic_policy(view, 30.0,
                                 agents.SemanticPolicyParams(brake_distance_rows=20))
    assert cmd.brake == 0.0


def test_hazard_outside_corridor_ignored():
    view = put_hazard(road_view(), row=10, col=22)
    cmd = agents.semantic_policy(view, 30.0,
                                 agents.SemanticPolicyParams(corridor_halfwidth=4))
    assert cmd.brake == 0.0


def test_degraded_view_drops_pedestrian_so_no_brake():
    """The failure mode the whole rig exists to catch."""
    view = put_hazard(road_view(), row=10, size=3)
    params = pc.DegradationParams(quality=0.0, min_blob_cells=5, blob_dropout_rate=1.0,
                                  distance_noise_base=0.0, boundary_flip_rate=0.0, seed=4)
    degraded = pc.degrade(view, params)
    assert not np.any(degraded == SemanticClass.PEDESTRIAN)

    clear_cmd = agents.semantic_policy(view, 30.0, agents.SemanticPolicyParams())
    blind_cmd = agents.semantic_policy(degraded, 30.0, agents.SemanticPolicyParams())
    assert clear_cmd.brake == 1.0
    assert blind_cmd.brake == 0.0


def test_red_light_ahead_stops_when_enabled():
    view = road_view()
    view[12, 44:46] = SemanticClass.TRAFFIC_LIGHT
    params = agents.SemanticPolicyParams(light_stop=True)
    assert agents.semantic_policy(view, 30.0, params, light_phase="red").brake == 1.0
    assert agents.semantic_policy(view, 30.0, params, light_phase="green").brake == 0.0
    no_stop = agents.SemanticPolicyParams(light_stop=False)
    assert agents.semantic_policy(view, 30.0, no_stop, light_phase="red").brake == 0.0


@given(speed=st.floats(0.0, 50.0, allow_nan=False))
def test_throttle_never_exceeds_cruise_next_tick(speed):
    params = agents.SemanticPolicyParams(cruise_speed=30.0)
    cmd = agents.semantic_policy(road_view(), speed, params)
    v = speed / 3.6
    v_next = v + (cmd.throttle * EGO_ACCEL - DRAG_COEFF * v) * agents.TICK_DT
    coast = v * (1.0 - DRAG_COEFF * agents.TICK_DT)
    # Throttle may never push past cruise; above cruise it must let the
    # car coast down, keeping every commanded speed within the 50 km/h rule.
    assert v_next <= max(coast, params.cruise_speed / 3.6) + 1e-12
    assert v_next * 3.6 <= 50.0 + 1e-9


def test_cruise_speed_above_limit_rejected():
    with pytest.raises(ConfigError, match="cruise_speed"):
        agents.SemanticPolicyParams(cruise_speed=60.0).validate()


# -- safety policy -----------------------------------------------------------


def safety_params():
    return agents.SafetyPolicyParams(ttc_threshold=1.5, reaction_delay=2)


def test_empty_corridor_zero_command():
    cmd = agents.safety_policy(road_view(), 30.0, 0.0, safety_params())
    assert cmd == ZERO_COMMAND


def test_ttc_under_threshold_brakes():
    # Row 8 center distance = 8.5 * 50/64 = 6.64 m; at 30 km/h ttc = 0.797 s.
    view = put_hazard(road_view(), row=8)
    dist = row_distance(8, ROWS, 50.0)
    assert dist / (30.0 / 3.6) == pytest.approx(0.797, abs=1e-3)
    cmd = agents.safety_policy(view, 30.0, 0.0, safety_params())
    assert cmd.brake == 1.0


def test_semantic_already_braking_suppresses_safety():
    view = put_hazard(road_view(), row=8)
    cmd = agents.safety_policy(view, 30.0, pending_effective_brake=0.8,
                               params=safety_params())
    assert cmd == ZERO_COMMAND


def test_ttc_above_threshold_stays_quiet():
    view = put_hazard(road_view(), row=40)  # 31.6 m at 30 km/h -> ttc 3.8 s
    cmd = agents.safety_policy(view, 30.0, 0.0, safety_params())
    assert cmd == ZERO_COMMAND


def test_stationary_ego_never_triggers():
    view = put_hazard(road_view(), row=2)
    assert agents.safety_policy(view, 0.0, 0.0, safety_params()) == ZERO_COMMAND


grids = st.integers(0, 2**32 - 1).map(
    lambda s: np.random.default_rng(s).choice(
        [0, 1, 1, 1, 2, 5, 6], size=(16, 16), p=[0.1, 0.3, 0.3, 0.1, 0.1, 0.05, 0.05]
    ).astype(np.uint8)
)


@settings(max_examples=60)
@given(grid=grids, speed=st.floats(1.0, 50.0, allow_nan=False),
       pending=st.floats(0.0, 1.0, allow_nan=False))
def test_safety_matches_brute_force_corridor_scan(grid, speed, pending):
    hw = 3
    params = safety_params()
    cmd = agents.safety_policy(grid, speed, pending, params, corridor_halfwidth=hw)

    rows, cols = grid.shape
    center = cols // 2
    best_ttc = None
    for r in range(rows):
        for c in range(center - hw, center + hw + 1):
            if grid[r, c] in (int(SemanticClass.VEHICLE), int(SemanticClass.PEDESTRIAN)):
                dist = (r + 0.5) * 50.0 / rows
                ttc = dist / (speed / 3.6)
                best_ttc = ttc if best_ttc is None else min(best_ttc, ttc)
                break
        if best_ttc is not None:
            break
    should_brake = best_ttc is not None and best_ttc < params.ttc_threshold and pending < 0.5
    assert (cmd.brake == 1.0) == should_brake
    if not should_brake:
        assert cmd == ZERO_COMMAND


def test_safety_monitor_delays_by_reaction_ticks():
    monitor = agents.SafetyMonitor(safety_params())
    hazard_view = put_hazard(road_view(), row=8)
    outs = [monitor.update(hazard_view, 30.0, 0.0) for _ in range(4)]
    assert outs[0] == ZERO_COMMAND
    assert outs[1] == ZERO_COMMAND
    assert outs[2].brake == 1.0
    assert outs[3].brake == 1.0


def test_safety_monitor_zero_delay_is_passthrough():
    monitor = agents.SafetyMonitor(agents.SafetyPolicyParams(reaction_delay=0))
    hazard_view = put_hazard(road_view(), row=8)
    assert monitor.update(hazard_view, 30.0, 0.0).brake == 1.0


def test_monitor_brake_triggers_arbitration_intervention():
    monitor = agents.SafetyMonitor(safety_params())
    hazard_view = put_hazard(road_view(), row=8)
    semantic = ControlCommand(throttle=0.5)
    fired = []
    for _ in range(4):
        safety = monitor.update(hazard_view, 30.0, semantic.brake)
        _, intervened = arbitrate(semantic, safety, 0.05)
        fired.append(intervened)
    assert fired == [False, False, True, True]


# -- auto labeling -----------------------------------------------------------


def test_auto_label_walker_and_vehicle():
    walker = put_hazard(road_view(), row=9, cls=SemanticClass.PEDESTRIAN)
    vehicle = put_hazard(road_view(), row=9, cls=SemanticClass.VEHICLE)
    assert agents.auto_label_cause(walker) == InterventionCause.OVERLOOKED_WALKER
    assert agents.auto_label_cause(vehicle) == InterventionCause.OVERLOOKED_VEHICLE
    assert agents.auto_label_cause(road_view()) == InterventionCause.TRAFFIC_RULE_VIOLATION
