"""Semantic class table, color palette, and grid conventions.

Grids are ego-centric forward views: row 0 is the band nearest the ego
vehicle, the last row the farthest. Semantic grids are uint8 arrays of
class ids, appearance grids float32 arrays of shape (rows, cols, 3) with
values in [0, 1].
"""

from enum import IntEnum

import numpy as np

from .errors import InputError


class SemanticClass(IntEnum):
    VOID = 0
    ROAD = 1
    SIDEWALK = 2
    BUILDING = 3
    VEGETATION = 4
    VEHICLE = 5
    PEDESTRIAN = 6
    TRAFFIC_LIGHT = 7


NUM_CLASSES = len(SemanticClass)

CLASS_NAMES = tuple(c.name.lower() for c in SemanticClass)

# Surfaces the ego drives over or past; everything else is a discrete object.
BACKGROUND_CLASSES = frozenset(
    {SemanticClass.VOID, SemanticClass.ROAD, SemanticClass.SIDEWALK}
)

HAZARD_CLASSES = frozenset({SemanticClass.VEHICLE, SemanticClass.PEDESTRIAN})

# Fixed render palette, one RGB triple in [0,1] per class id.
PALETTE = np.array(
    [
        [0.05, 0.05, 0.05],  # void
        [0.50, 0.25, 0.50],  # road
        [0.96, 0.14, 0.91],  # sidewalk
        [0.27, 0.27, 0.27],  # building
        [0.42, 0.56, 0.14],  # vegetation
        [0.00, 0.00, 0.56],  # vehicle
        [0.86, 0.08, 0.24],  # pedestrian
        [0.98, 0.67, 0.12],  # traffic_light
    ],
    dtype=np.float32,
)

assert PALETTE.shape == (NUM_CLASSES, 3)


def validate_semantic_grid(grid):
    """Raise InputError unless `grid` is a 2D uint8 grid of valid class ids."""
    if not isinstance(grid, np.ndarray) or grid.ndim != 2:
        raise InputError("semantic grid must be a 2D numpy array")
    if grid.dtype != np.uint8:
        raise InputError(f"semantic grid must be uint8, got {grid.dtype}")
    if grid.size and grid.max() >= NUM_CLASSES:
        raise InputError(f"semantic grid contains class id {int(grid.max())} >= {NUM_CLASSES}")


def validate_appearance_grid(app, shape=None):
    """Raise InputError unless `app` is (rows, cols, 3) float32 in [0,1]."""
    if not isinstance(app, np.ndarray) or app.ndim != 3 or app.shape[2] != 3:
        raise InputError("appearance grid must have shape (rows, cols, 3)")
    if app.dtype != np.float32:
        raise InputError(f"appearance grid must be float32, got {app.dtype}")
    if shape is not None and app.shape[:2] != tuple(shape):
        raise InputError(f"appearance shape {app.shape[:2]} does not match {tuple(shape)}")
    if app.size and (app.min() < 0.0 or app.max() > 1.0):
        raise InputError("appearance values must lie in [0, 1]")


def row_distance(row, rows, view_depth):
    """Distance in meters of a grid row's band center ahead of the ego."""
    return (row + 0.5) * view_depth / rows


# ---------------------------------------------------------------------------
# Deterministic counter-based hashing (splitmix64). Used wherever an
# operation needs seeded randomness that must be reproducible across
# runs and platforms without carrying generator state around.
# ---------------------------------------------------------------------------

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


def _mix64(x):
    with np.errstate(over="ignore"):
        x = np.asarray(x, dtype=np.uint64)
        x = x + _GAMMA
        x = (x ^ (x >> np.uint64(30))) * _M1
        x = (x ^ (x >> np.uint64(27))) * _M2
        return x ^ (x >> np.uint64(31))


def hash_u64(*fields):
    """Mix integer fields (scalars or broadcastable arrays) into uint64."""
    h = np.uint64(0x5EED5EED5EED5EED)
    for f in fields:
        if isinstance(f, (int, np.integer)):
            f = np.uint64(int(f) & 0xFFFFFFFFFFFFFFFF)
        else:
            f = np.asarray(f).astype(np.int64).view(np.uint64)
        h = _mix64(h ^ f)
    return h


def hash01(*fields):
    """Uniform floats in [0, 1) derived from integer fields."""
    return (hash_u64(*fields) >> np.uint64(11)) * (2.0 ** -53)
