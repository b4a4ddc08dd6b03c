"""Desk-scale corner-case mining rig.

A deterministic top-down driving simulator feeds two drivers: a semantic
driver steering on degraded perception and a safety driver watching
ground truth. Safety interventions snapshot the preceding three seconds
as corner-case records; the curation and evaluation toolchain swaps
those records into fixed-size training sets and measures the effect on
pedestrian segmentation quality.
"""

from .arbitration import (
    ControlCommand,
    InterventionCause,
    InterventionEvent,
    ZERO_COMMAND,
    arbitrate,
)
from .agents import (
    SafetyMonitor,
    SafetyPolicyParams,
    SemanticPolicyParams,
    safety_policy,
    semantic_policy,
)
from .capture import (
    CornerCaseRecord,
    FrameRecord,
    RollingBuffer,
    persist,
    push,
    snapshot,
)
from .curation import (
    Dataset,
    SceneSampler,
    build_pedestrian_enriched,
    class_stats,
    generate_base,
    load_dataset,
    save_dataset,
    split_holdout,
    swap_in_corner_cases,
)
from .errors import (
    AeyeError,
    CaptureError,
    ConfigError,
    EnrichmentError,
    FormatError,
    InputError,
    SequencingError,
    StorageError,
)
from .evaluation import (
    CampaignLog,
    CampaignStats,
    ConfusionAccumulator,
    accumulate,
    campaign_stats,
    compare_report,
    evaluate_model,
    iou,
    miou,
)
from .perception import (
    DegradationParams,
    PerceiverModel,
    TrainConfig,
    degrade,
    load_model,
    predict,
    save_model,
    train,
)
from .semantics import NUM_CLASSES, PALETTE, SemanticClass
from .session import (
    InterventionGate,
    SessionConfig,
    StopCondition,
    replay_record,
    run_headless_campaign,
)
from .world import WorldConfig, WorldState, init_world, render, step

__all__ = [
    "AeyeError",
    "CampaignLog",
    "CampaignStats",
    "CaptureError",
    "ConfigError",
    "ConfusionAccumulator",
    "ControlCommand",
    "CornerCaseRecord",
    "Dataset",
    "DegradationParams",
    "EnrichmentError",
    "FormatError",
    "FrameRecord",
    "InputError",
    "InterventionCause",
    "InterventionEvent",
    "InterventionGate",
    "NUM_CLASSES",
    "PALETTE",
    "PerceiverModel",
    "RollingBuffer",
    "SafetyMonitor",
    "SafetyPolicyParams",
    "SceneSampler",
    "SemanticClass",
    "SemanticPolicyParams",
    "SequencingError",
    "SessionConfig",
    "StopCondition",
    "StorageError",
    "TrainConfig",
    "WorldConfig",
    "WorldState",
    "ZERO_COMMAND",
    "accumulate",
    "arbitrate",
    "build_pedestrian_enriched",
    "campaign_stats",
    "class_stats",
    "compare_report",
    "degrade",
    "evaluate_model",
    "generate_base",
    "init_world",
    "iou",
    "load_dataset",
    "load_model",
    "miou",
    "persist",
    "predict",
    "push",
    "render",
    "replay_record",
    "run_headless_campaign",
    "safety_policy",
    "save_dataset",
    "save_model",
    "semantic_policy",
    "snapshot",
    "split_holdout",
    "step",
    "swap_in_corner_cases",
    "train",
]
