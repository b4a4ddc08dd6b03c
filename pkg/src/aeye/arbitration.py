"""Two-driver command arbitration with absolute safety priority."""

import math
from dataclasses import dataclass
from enum import Enum

from .errors import InputError


@dataclass(frozen=True)
class ControlCommand:
    steer: float = 0.0     # [-1, 1], positive steers right
    throttle: float = 0.0  # [0, 1]
    brake: float = 0.0     # [0, 1]

    def validate(self):
        for name, lo, hi in (("steer", -1.0, 1.0), ("throttle", 0.0, 1.0), ("brake", 0.0, 1.0)):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise InputError(f"non-finite command field {name}")
            if not lo <= v <= hi:
                raise InputError(f"command field {name}={v} outside [{lo}, {hi}]")
        return self

    def clamped(self):
        def clip(v, lo, hi):
            return min(max(v, lo), hi)

        return ControlCommand(
            steer=clip(self.steer, -1.0, 1.0),
            throttle=clip(self.throttle, 0.0, 1.0),
            brake=clip(self.brake, 0.0, 1.0),
        )


ZERO_COMMAND = ControlCommand()


class InterventionCause(str, Enum):
    OVERLOOKED_WALKER = "overlooked_walker"
    OVERLOOKED_VEHICLE = "overlooked_vehicle"
    TRAFFIC_RULE_VIOLATION = "traffic_rule_violation"
    BOREDOM = "boredom"


@dataclass(frozen=True)
class InterventionEvent:
    timestamp: float      # seconds of simulated time
    odometer: float       # km driven at the trigger
    cause: InterventionCause
    comment: str = ""

    def __post_init__(self):
        if self.timestamp < 0 or self.odometer < 0:
            raise InputError("intervention timestamp/odometer must be non-negative")
        if not isinstance(self.cause, InterventionCause):
            try:
                object.__setattr__(self, "cause", InterventionCause(self.cause))
            except ValueError:
                raise InputError(
                    f"cause must be one of {[c.value for c in InterventionCause]}, "
                    f"got {self.cause!r}"
                ) from None


DEFAULT_DEADBAND = 0.05


def arbitrate(semantic_cmd: ControlCommand, safety_cmd: ControlCommand,
              deadband: float = DEFAULT_DEADBAND):
    """Merge the two drivers' commands; the safety driver always wins.

    Returns (effective_command, intervention). An intervention is any
    safety input whose magnitude exceeds the deadband on some field; the
    whole safety command then replaces the semantic one.
    """
    if not 0.0 <= deadband <= 0.2:
        raise InputError(f"deadband must be in [0, 0.2], got {deadband}")
    semantic_cmd.validate()
    safety_cmd.validate()
    intervention = (
        abs(safety_cmd.steer) > deadband
        or abs(safety_cmd.throttle) > deadband
        or abs(safety_cmd.brake) > deadband
    )
    return (safety_cmd if intervention else semantic_cmd), intervention
