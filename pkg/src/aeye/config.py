"""Shared config-document parsing for every CLI entry point.

One schema, two encodings: a JSON object, or flat `key=value` lines with
dots for nesting (`world.seed=7`). Values in the flat form are parsed as
JSON scalars when possible, else kept as strings. Section builders map
sub-documents onto the frozen config dataclasses, rejecting unknown keys
with the offending field named.
"""

import dataclasses
import json
import os

from .agents import SafetyPolicyParams, SemanticPolicyParams
from .curation import SceneSampler
from .errors import ConfigError
from .perception import DegradationParams, TrainConfig
from .world import WorldConfig

DATA_DIR_ENV = "AEYE_DATA_DIR"


def default_data_dir():
    return os.environ.get(DATA_DIR_ENV, os.path.join(os.getcwd(), "aeye-data"))


def parse_config_text(text: str) -> dict:
    stripped = text.lstrip()
    if stripped.startswith("{"):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"invalid JSON config: {e}") from None
        if not isinstance(doc, dict):
            raise ConfigError("config document must be a JSON object")
        return doc
    doc = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {line!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        try:
            parsed = json.loads(value)
        except json.JSONDecodeError:
            parsed = value
        node = doc
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"line {lineno}: {key!r} conflicts with earlier key")
        node[parts[-1]] = parsed
    return doc


def load_config(path) -> dict:
    try:
        with open(path) as fh:
            return parse_config_text(fh.read())
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from None


def _build(cls, doc: dict, section: str):
    if not isinstance(doc, dict):
        raise ConfigError(f"{section}: expected an object, got {type(doc).__name__}")
    fields = {f.name: f for f in dataclasses.fields(cls)}
    unknown = set(doc) - set(fields)
    if unknown:
        raise ConfigError(f"{section}: unknown field(s) {sorted(unknown)}")
    kwargs = {}
    for name, value in doc.items():
        if isinstance(value, list):
            value = tuple(value)
        kwargs[name] = value
    try:
        obj = cls(**kwargs)
    except TypeError as e:
        raise ConfigError(f"{section}: {e}") from None
    validate = getattr(obj, "validate", None)
    if validate is not None:
        try:
            # Policy params take the grid width; every other validate() is 0-ary.
            validate()
        except TypeError:
            pass
    return obj


def world_config(doc: dict, seed=None) -> WorldConfig:
    doc = dict(doc or {})
    if seed is not None:
        doc["seed"] = seed
    doc.setdefault("seed", 0)
    return _build(WorldConfig, doc, "world")


def degradation_params(doc: dict, seed=None) -> DegradationParams:
    doc = dict(doc or {})
    if seed is not None:
        doc.setdefault("seed", seed)
    return _build(DegradationParams, doc, "perception")


def semantic_params(doc: dict) -> SemanticPolicyParams:
    return _build(SemanticPolicyParams, dict(doc or {}), "semantic_policy")


def safety_params(doc: dict) -> SafetyPolicyParams:
    return _build(SafetyPolicyParams, dict(doc or {}), "safety_policy")


def train_config(doc: dict, seed=None) -> TrainConfig:
    doc = dict(doc or {})
    if seed is not None:
        doc["seed"] = seed
    return _build(TrainConfig, doc, "train")


def scene_sampler(doc: dict, seed=None) -> SceneSampler:
    doc = dict(doc or {})
    if seed is not None:
        doc["seed"] = seed
    if "drive" in doc:
        doc["drive"] = semantic_params(doc["drive"])
    return _build(SceneSampler, doc, "sampler")


def stop_condition(doc: dict):
    from .session import StopCondition

    return _build(StopCondition, dict(doc or {}), "stop").validate()


def session_config(doc: dict, seed=None):
    """Assemble a full SessionConfig from a parsed document.

    `seed`, when given, overrides both the world seed and the degradation
    seed, so `--seed` varies a whole campaign from one file.
    """
    from .session import SessionConfig

    doc = dict(doc or {})
    known = {"mode", "deadband", "world", "degradation", "model_path",
             "semantic", "safety", "capture", "listen", "stop"}
    unknown = set(doc) - known
    if unknown:
        raise ConfigError(f"session: unknown section(s) {sorted(unknown)}")
    kwargs = {"world": world_config(doc.get("world"), seed=seed)}
    if "degradation" in doc:
        kwargs["degradation"] = degradation_params(doc["degradation"], seed=seed)
        if seed is not None:
            kwargs["degradation"] = dataclasses.replace(
                kwargs["degradation"], seed=seed)
    if "model_path" in doc:
        kwargs["model_path"] = str(doc["model_path"])
    if "mode" in doc:
        kwargs["mode"] = doc["mode"]
    if "deadband" in doc:
        kwargs["deadband"] = doc["deadband"]
    kwargs.update(_capture_fields(doc.get("capture")))
    kwargs.update(_listen_fields(doc.get("listen")))
    if "semantic" in doc:
        kwargs["semantic"] = semantic_params(doc["semantic"])
    if "safety" in doc:
        kwargs["safety"] = safety_params(doc["safety"])
    return SessionConfig(**kwargs).validate()


def _capture_fields(doc):
    if doc is None:
        return {}
    if not isinstance(doc, dict):
        raise ConfigError("capture: expected an object")
    unknown = set(doc) - {"fps", "seconds"}
    if unknown:
        raise ConfigError(f"capture: unknown field(s) {sorted(unknown)}")
    out = {}
    if "fps" in doc:
        out["capture_fps"] = float(doc["fps"])
    if "seconds" in doc:
        out["capture_seconds"] = float(doc["seconds"])
    return out


def _listen_fields(doc):
    if doc is None:
        return {}
    if not isinstance(doc, dict):
        raise ConfigError("listen: expected an object")
    unknown = set(doc) - {"host", "port"}
    if unknown:
        raise ConfigError(f"listen: unknown field(s) {sorted(unknown)}")
    out = {}
    if "host" in doc:
        out["listen_host"] = str(doc["host"])
    if "port" in doc:
        out["listen_port"] = int(doc["port"])
    return out
