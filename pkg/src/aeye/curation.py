"""Dataset construction: base generation, corner-case swap-in, enrichment.

Three training sets come out of this module: a natural-distribution base
set, the same set with corner-case frames swapped in at fixed total size,
and a control set whose pedestrian pixel budget is raised to match the
corner-case set without containing any corner cases.
"""

import json
import os
from dataclasses import dataclass, field, replace

import numpy as np

from . import capture
from .agents import SemanticPolicyParams, semantic_policy
from .errors import EnrichmentError, FormatError, InputError, StorageError
from .semantics import (
    NUM_CLASSES,
    SemanticClass,
    hash01,
    validate_appearance_grid,
    validate_semantic_grid,
)
from .world import WorldConfig, init_world, nearest_light_phase, render, step

ORIGIN_BASE = "base"
ORIGIN_CORNER_CASE = "corner_case"

DATASET_FORMAT = "aeye-ds/1"

_TICKS_PER_FRAME = 10  # 1 sampled frame per simulated second at 10 fps


@dataclass(frozen=True)
class FrameSample:
    appearance: np.ndarray
    label: np.ndarray
    origin: str
    scene_id: str

    def validate(self):
        validate_semantic_grid(self.label)
        validate_appearance_grid(self.appearance, shape=self.label.shape)
        if self.origin not in (ORIGIN_BASE, ORIGIN_CORNER_CASE):
            raise InputError(f"origin must be base|corner_case, got {self.origin!r}")
        return self

    # Alias pair used by the perception trainer (truth, app).
    @property
    def truth(self):
        return self.label

    @property
    def app(self):
        return self.appearance


@dataclass(frozen=True)
class Scene:
    scene_id: str
    frames: tuple


@dataclass(frozen=True)
class Dataset:
    scenes: tuple
    meta: dict

    @property
    def n_scenes(self):
        return len(self.scenes)

    @property
    def n_frames(self):
        return sum(len(s.frames) for s in self.scenes)

    def iter_samples(self):
        for scene in self.scenes:
            yield from scene.frames

    def validate(self):
        ids = [s.scene_id for s in self.scenes]
        if len(set(ids)) != len(ids):
            raise InputError("scene_ids must be unique")
        for s in self.scenes:
            for f in s.frames:
                f.validate()
        return self


@dataclass(frozen=True)
class ClassPixelStats:
    mean_per_scene: np.ndarray  # [NUM_CLASSES]
    totals: np.ndarray          # [NUM_CLASSES]
    n_scenes: int

    def for_class(self, cls):
        return float(self.mean_per_scene[int(cls)])


def class_stats(ds: Dataset) -> ClassPixelStats:
    """Mean cells per scene and total cells, per class."""
    if ds.n_scenes == 0 or ds.n_frames == 0:
        raise InputError("dataset is empty")
    totals = np.zeros(NUM_CLASSES, dtype=np.int64)
    for sample in ds.iter_samples():
        totals += np.bincount(sample.label.ravel(), minlength=NUM_CLASSES)
    return ClassPixelStats(
        mean_per_scene=totals / ds.n_scenes, totals=totals, n_scenes=ds.n_scenes
    )


# ---------------------------------------------------------------------------
# Base generation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SceneSampler:
    """Seeded draw of per-scene world configs within fixed ranges.

    Ranges mirror the full-simulator scattering knobs at desk scale:
    cloud cover 0-30, wind 0-50, sun altitude 20-90, with walker/vehicle
    counts drawn per scene. `noise_sigma` controls appearance noise for
    every generated frame.
    """

    seed: int = 0
    walkers_range: tuple = (6, 14)
    vehicles_range: tuple = (2, 8)
    clouds_range: tuple = (0.0, 30.0)
    wind_range: tuple = (0.0, 50.0)
    altitude_range: tuple = (20.0, 90.0)
    noise_sigma: float = 0.18
    drive: SemanticPolicyParams = field(default_factory=SemanticPolicyParams)

    def pedestrian_heavy(self):
        """Same sampler biased toward walker-dense, vehicle-light scenes."""
        return replace(self, walkers_range=(16, 22), vehicles_range=(0, 2))

    def _draw(self, lo_hi, tag, index):
        lo, hi = lo_hi
        return lo + (hi - lo) * hash01(self.seed, tag, index)

    def _draw_count(self, lo_hi, tag, index):
        lo, hi = lo_hi
        return int(lo + (hi - lo + 1) * hash01(self.seed, tag, index))

    def scene_config(self, index: int) -> WorldConfig:
        return WorldConfig(
            seed=int(hash01(self.seed, 0xC0F1, index) * 2**31),
            npc_walkers=self._draw_count(self.walkers_range, 0xC0F2, index),
            npc_vehicles=self._draw_count(self.vehicles_range, 0xC0F3, index),
            clouds=self._draw(self.clouds_range, 0xC0F4, index),
            wind=self._draw(self.wind_range, 0xC0F5, index),
            sun_altitude=self._draw(self.altitude_range, 0xC0F6, index),
            npc_range=(0, 48),
            noise_sigma=self.noise_sigma,
        )


def _roll_scene(cfg: WorldConfig, drive: SemanticPolicyParams, n_frames, scene_id):
    """Drive a fresh world with the clear-view policy, 1 frame per second."""
    state = init_world(cfg)
    frames = []
    for tick in range(1, n_frames * _TICKS_PER_FRAME + 1):
        truth, app = render(state)
        cmd = semantic_policy(truth, state.ego.speed * 3.6, drive,
                              light_phase=nearest_light_phase(state),
                              view_depth=cfg.view_depth)
        state = step(state, cmd, 0.1)
        if tick % _TICKS_PER_FRAME == 0:
            truth, app = render(state)
            frames.append(
                FrameSample(appearance=app, label=truth, origin=ORIGIN_BASE,
                            scene_id=scene_id)
            )
    return Scene(scene_id=scene_id, frames=tuple(frames))


def generate_base(sampler: SceneSampler, n_scenes: int, frames_per_scene: int,
                  name="base") -> Dataset:
    """Natural-distribution dataset: seeded scenes driven on ground truth."""
    if n_scenes < 1 or frames_per_scene < 1:
        raise InputError("n_scenes and frames_per_scene must be >= 1")
    scenes = []
    for i in range(n_scenes):
        scene_id = f"scene-{i:03d}"
        scenes.append(_roll_scene(sampler.scene_config(i), sampler.drive,
                                  frames_per_scene, scene_id))
    ds = Dataset(
        scenes=tuple(scenes),
        meta={
            "name": name,
            "seed": sampler.seed,
            "n_scenes": n_scenes,
            "frames_per_scene": frames_per_scene,
        },
    )
    return ds.validate()


# ---------------------------------------------------------------------------
# Corner-case swap-in
# ---------------------------------------------------------------------------


def _cc_scene(record) -> Scene:
    frames = tuple(
        FrameSample(appearance=f.appearance, label=f.truth,
                    origin=ORIGIN_CORNER_CASE, scene_id=record.id)
        for f in record.frames
    )
    return Scene(scene_id=record.id, frames=frames)


def swap_in_corner_cases(base: Dataset, ccs, seed: int) -> Dataset:
    """Insert corner-case frames, deleting an equal number of base frames.

    Deletions are drawn uniformly at random by `seed`, stratified so no
    scene is emptied while any other scene still has spare frames; total
    frame count is invariant.
    """
    cc_scenes = [_cc_scene(r) for r in ccs]
    n_insert = sum(len(s.frames) for s in cc_scenes)
    if n_insert == 0:
        return base
    if n_insert > base.n_frames:
        raise InputError(
            f"{n_insert} corner-case frames exceed the {base.n_frames}-frame base"
        )

    keep = {s.scene_id: list(s.frames) for s in base.scenes}
    pool = [
        (s.scene_id, i) for s in base.scenes for i in range(len(s.frames))
    ]
    rng = np.random.Generator(np.random.Philox(key=[seed & 0xFFFFFFFFFFFFFFFF, 0x5A71]))
    order = rng.permutation(len(pool))
    removed = 0
    marked = {sid: set() for sid in keep}
    for idx in order:
        if removed == n_insert:
            break
        sid, fi = pool[idx]
        would_empty = len(marked[sid]) + 1 == len(keep[sid])
        spare_elsewhere = any(
            len(marked[other]) + 1 < len(keep[other]) for other in keep if other != sid
        )
        if would_empty and spare_elsewhere:
            continue
        marked[sid].add(fi)
        removed += 1
    if removed < n_insert:  # stratification left no legal picks; force the rest
        for idx in order:
            if removed == n_insert:
                break
            sid, fi = pool[idx]
            if fi not in marked[sid]:
                marked[sid].add(fi)
                removed += 1

    scenes = []
    for s in base.scenes:
        frames = tuple(f for i, f in enumerate(s.frames) if i not in marked[s.scene_id])
        if frames:
            scenes.append(Scene(scene_id=s.scene_id, frames=frames))
    scenes.extend(cc_scenes)
    meta = dict(base.meta)
    meta.update(name=f"{base.meta.get('name', 'base')}+cc", swap_seed=seed,
                cc_frames=n_insert)
    return Dataset(scenes=tuple(scenes), meta=meta).validate()


# ---------------------------------------------------------------------------
# Pedestrian enrichment
# ---------------------------------------------------------------------------


def _sample_heavy_frame(sampler: SceneSampler, draw_index: int, scene_id: str):
    """One frame from a fresh walker-dense world, a few seconds in."""
    heavy = sampler.pedestrian_heavy()
    cfg = heavy.scene_config(draw_index)
    state = init_world(cfg)
    n_ticks = 10 + int(hash01(sampler.seed, 0xE27C, draw_index) * 40)
    for _ in range(n_ticks):
        truth, _ = render(state)
        cmd = semantic_policy(truth, state.ego.speed * 3.6, heavy.drive,
                              light_phase=nearest_light_phase(state),
                              view_depth=cfg.view_depth)
        state = step(state, cmd, 0.1)
    truth, app = render(state)
    return FrameSample(appearance=app, label=truth, origin=ORIGIN_BASE,
                       scene_id=scene_id)


def build_pedestrian_enriched(base: Dataset, target_mean: float, tol: float,
                              sampler: SceneSampler, seed: int) -> Dataset:
    """Raise the pedestrian pixel budget to `target_mean` cells/scene.

    Uniformly chosen frames are replaced by freshly sampled walker-dense
    frames; a replacement is kept only if it moves the mean toward the
    target. Stops inside `tol` relative error or raises an enrichment
    error (reporting the achieved mean) once the 5x-size budget is spent.
    """
    if not 0.0 < tol <= 0.2:
        raise InputError(f"tol must be in (0, 0.2], got {tol}")
    ped = int(SemanticClass.PEDESTRIAN)
    per_frame = []  # pedestrian cells per frame, mutable alongside scenes
    scenes = [list(s.frames) for s in base.scenes]
    for s in base.scenes:
        for f in s.frames:
            per_frame.append(int(np.sum(f.label == ped)))
    n_scenes = base.n_scenes
    current = sum(per_frame) / n_scenes
    if target_mean < current:
        raise InputError(
            f"target_mean {target_mean:.1f} below current pedestrian mean {current:.1f}"
        )
    flat_index = []
    for si, s in enumerate(base.scenes):
        for fi in range(len(s.frames)):
            flat_index.append((si, fi))

    def mean_now():
        return sum(per_frame) / n_scenes

    budget = 5 * base.n_frames
    rng = np.random.Generator(np.random.Philox(key=[seed & 0xFFFFFFFFFFFFFFFF, 0xE27C]))
    replacements = 0
    for attempt in range(budget):
        if target_mean == 0.0 or abs(mean_now() - target_mean) / max(target_mean, 1e-12) <= tol:
            break
        victim = int(rng.integers(0, len(flat_index)))
        si, fi = flat_index[victim]
        fresh = _sample_heavy_frame(sampler, seed * 100003 + attempt,
                                    base.scenes[si].scene_id)
        new_count = int(np.sum(fresh.label == ped))
        old_count = per_frame[victim]
        old_err = abs(mean_now() - target_mean)
        new_err = abs(mean_now() + (new_count - old_count) / n_scenes - target_mean)
        if new_err < old_err:
            scenes[si][fi] = fresh
            per_frame[victim] = new_count
            replacements += 1
    achieved = mean_now()
    if abs(achieved - target_mean) / max(target_mean, 1e-12) > tol:
        raise EnrichmentError(
            f"pedestrian mean {achieved:.1f} missed target {target_mean:.1f} "
            f"(tol {tol:.0%}) within the replacement budget",
            achieved_mean=achieved,
        )
    meta = dict(base.meta)
    meta.update(name=f"{base.meta.get('name', 'base')}+ped",
                enrich_seed=seed, enrich_target=target_mean,
                enrich_replacements=replacements)
    out = Dataset(
        scenes=tuple(
            Scene(scene_id=s.scene_id, frames=tuple(frames))
            for s, frames in zip(base.scenes, scenes)
        ),
        meta=meta,
    )
    return out.validate()


def split_holdout(ds: Dataset, fraction: float = 0.2):
    """Deterministic (train, holdout) split on whole scenes; the holdout
    tail is fixed at generation order and never touched by curation."""
    n_hold = max(1, int(round(ds.n_scenes * fraction))) if ds.n_scenes > 1 else 0
    cut = ds.n_scenes - n_hold
    train = Dataset(scenes=ds.scenes[:cut], meta=dict(ds.meta, split="train"))
    hold = Dataset(scenes=ds.scenes[cut:], meta=dict(ds.meta, split="holdout"))
    return train, hold


# ---------------------------------------------------------------------------
# On-disk layout (mirrors the capture layout per scene)
# ---------------------------------------------------------------------------


def save_dataset(ds: Dataset, root) -> str:
    root = str(root)
    if os.path.exists(os.path.join(root, "dataset.json")):
        raise StorageError(f"dataset already exists under {root}")
    os.makedirs(root, exist_ok=True)
    index = []
    for scene in ds.scenes:
        frames_dir = os.path.join(root, scene.scene_id, "frames")
        os.makedirs(frames_dir)
        origins = []
        for i, f in enumerate(scene.frames):
            capture._write_pgm(os.path.join(frames_dir, f"{i:03d}.label.pgm"), f.label)
            with open(os.path.join(frames_dir, f"{i:03d}.app.bin"), "wb") as fh:
                fh.write(np.ascontiguousarray(f.appearance, dtype="<f4").tobytes())
            origins.append(f.origin)
        index.append({"scene_id": scene.scene_id, "n_frames": len(scene.frames),
                      "origins": origins})
    stats = class_stats(ds)
    doc = {
        "format": DATASET_FORMAT,
        "meta": ds.meta,
        "scenes": index,
        "grid_shape": list(ds.scenes[0].frames[0].label.shape),
        "stats": {
            "mean_per_scene": [float(x) for x in stats.mean_per_scene],
            "totals": [int(x) for x in stats.totals],
        },
    }
    with open(os.path.join(root, "dataset.json"), "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
    return root


def load_dataset(root) -> Dataset:
    root = str(root)
    path = os.path.join(root, "dataset.json")
    if not os.path.isfile(path):
        raise FormatError(f"{path}: missing dataset index")
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("format") != DATASET_FORMAT:
        raise FormatError(f"{path}: format {doc.get('format')!r} != {DATASET_FORMAT!r}")
    shape = tuple(doc["grid_shape"])
    scenes = []
    for entry in doc["scenes"]:
        sid = entry["scene_id"]
        frames_dir = os.path.join(root, sid, "frames")
        frames = []
        for i in range(entry["n_frames"]):
            label = capture._read_pgm(os.path.join(frames_dir, f"{i:03d}.label.pgm"), shape)
            app = capture._read_app(os.path.join(frames_dir, f"{i:03d}.app.bin"), shape)
            frames.append(FrameSample(appearance=app, label=label,
                                      origin=entry["origins"][i], scene_id=sid))
        scenes.append(Scene(scene_id=sid, frames=tuple(frames)))
    return Dataset(scenes=tuple(scenes), meta=doc["meta"]).validate()
