"""Degraded perception channel and the trainable per-cell classifier.

Two independent stand-ins for an under-trained segmentation network:

* :func:`degrade` corrupts a ground-truth semantic grid with seeded,
  quality-controlled noise (small-object dropout, distance noise,
  boundary flips). The semantic driver sees only this output.
* :class:`PerceiverModel` is a per-cell linear softmax classifier over a
  small appearance window. Retraining it on differently curated datasets
  is what the enrichment experiments measure.
"""

import struct
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import ConfigError, FormatError, InputError
from .semantics import (
    BACKGROUND_CLASSES,
    NUM_CLASSES,
    hash01,
    hash_u64,
    validate_appearance_grid,
    validate_semantic_grid,
)

# Hash stream tags, one per independent decision in the channel.
_TAG_BLOB = 0xB10B0001
_TAG_DIST_DRAW = 0xD1570001
_TAG_DIST_CLASS = 0xD1570002
_TAG_EDGE_DRAW = 0xED6E0001
_TAG_EDGE_PICK = 0xED6E0002

# Lateral blocks used to key blob-dropout draws. An object keeps its draw
# while it stays in the same block, so a dropped object stays dropped for
# many consecutive ticks instead of flickering in and out of view.
_BLOB_COL_BLOCK = 16


@dataclass(frozen=True)
class DegradationParams:
    """Quality-scaled corruption of a semantic grid.

    All three stage rates scale by (1 - q): q=1 is the identity channel,
    q=0 applies the full configured rates.
    """

    quality: float = 0.5
    min_blob_cells: int = 5
    blob_dropout_rate: float = 0.7
    distance_noise_base: float = 0.1
    boundary_flip_rate: float = 0.05
    seed: int = 0

    def validate(self):
        if not 0.0 <= self.quality <= 1.0:
            raise ConfigError(f"quality: must be in [0, 1], got {self.quality}")
        for name in ("blob_dropout_rate", "distance_noise_base", "boundary_flip_rate"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name}: must be in [0, 1], got {v}")
        if self.min_blob_cells < 0:
            raise ConfigError(f"min_blob_cells: must be >= 0, got {self.min_blob_cells}")
        return self


_CROSS = ndimage.generate_binary_structure(2, 1)  # 4-connectivity


def _drop_small_blobs(grid, params, scale):
    """Stage 1: relabel small connected components of object classes."""
    p_drop = params.blob_dropout_rate * scale
    if p_drop <= 0.0 or params.min_blob_cells <= 0:
        return grid
    out = grid.copy()
    object_ids = [int(c) for c in range(NUM_CLASSES) if c not in BACKGROUND_CLASSES]
    for cls in object_ids:
        mask = grid == cls
        if not mask.any():
            continue
        labels, n = ndimage.label(mask, structure=_CROSS)
        sizes = np.bincount(labels.ravel())
        for comp in range(1, n + 1):
            if sizes[comp] >= params.min_blob_cells:
                continue
            comp_mask = labels == comp
            col_block = int(np.mean(np.nonzero(comp_mask)[1])) // _BLOB_COL_BLOCK
            if hash01(params.seed, _TAG_BLOB, cls, col_block) >= p_drop:
                continue
            border = ndimage.binary_dilation(comp_mask, structure=_CROSS) & ~comp_mask
            surrounding = np.bincount(out[border], minlength=NUM_CLASSES)
            out[comp_mask] = np.uint8(np.argmax(surrounding))
    return out


def _distance_noise(grid, params, scale):
    """Stage 2: flip cells to a random other class, more often far away."""
    base = params.distance_noise_base * scale
    if base <= 0.0:
        return grid
    rows, cols = grid.shape
    r_idx, c_idx = np.meshgrid(np.arange(rows), np.arange(cols), indexing="ij")
    p = base * (r_idx / rows)
    flip = hash01(params.seed, _TAG_DIST_DRAW, r_idx, c_idx) < p
    if not flip.any():
        return grid
    out = grid.copy()
    offset = hash_u64(params.seed, _TAG_DIST_CLASS, r_idx, c_idx) % np.uint64(NUM_CLASSES - 1)
    out[flip] = ((grid[flip].astype(np.uint64) + np.uint64(1) + offset[flip]) % NUM_CLASSES).astype(
        np.uint8
    )
    return out


def _boundary_flips(grid, params, scale):
    """Stage 3: cells on a class boundary flip to a neighboring class."""
    p = params.boundary_flip_rate * scale
    if p <= 0.0:
        return grid
    rows, cols = grid.shape
    shifted = []
    differs = []
    for dr, dc in ((-1, 0), (1, 0), (0, -1), (0, 1)):
        s = grid.copy()
        src = grid[
            max(dr, 0) : rows + min(dr, 0),
            max(dc, 0) : cols + min(dc, 0),
        ]
        s[max(-dr, 0) : rows + min(-dr, 0), max(-dc, 0) : cols + min(-dc, 0)] = src
        shifted.append(s)
        differs.append(s != grid)
    n_diff = np.sum(differs, axis=0)
    r_idx, c_idx = np.meshgrid(np.arange(rows), np.arange(cols), indexing="ij")
    flip = (n_diff > 0) & (hash01(params.seed, _TAG_EDGE_DRAW, r_idx, c_idx) < p)
    if not flip.any():
        return grid
    out = grid.copy()
    pick = hash_u64(params.seed, _TAG_EDGE_PICK, r_idx, c_idx) % np.maximum(
        n_diff.astype(np.uint64), 1
    )
    seen = np.zeros_like(n_diff)
    for s, d in zip(shifted, differs):
        choose = flip & d & (pick == seen)
        out[choose] = s[choose]
        seen += d
    return out


def degrade(truth: np.ndarray, params: DegradationParams) -> np.ndarray:
    """Corrupt a ground-truth grid; deterministic in (truth, params.seed)."""
    validate_semantic_grid(truth)
    params.validate()
    scale = 1.0 - params.quality
    if scale <= 0.0:
        return truth.copy()
    out = _drop_small_blobs(truth, params, scale)
    out = _distance_noise(out, params, scale)
    out = _boundary_flips(out, params, scale)
    return out


# ---------------------------------------------------------------------------
# Per-cell classifier
# ---------------------------------------------------------------------------


def feature_dim(window_radius: int) -> int:
    k = 2 * window_radius + 1
    return 3 * k * k + 2


@dataclass
class PerceiverModel:
    """Linear softmax classifier over an appearance window plus position."""

    window_radius: int
    weights: np.ndarray  # [NUM_CLASSES, feature_dim]
    bias: np.ndarray     # [NUM_CLASSES]

    def validate(self):
        fd = feature_dim(self.window_radius)
        if self.weights.shape != (NUM_CLASSES, fd):
            raise InputError(
                f"weights shape {self.weights.shape} != ({NUM_CLASSES}, {fd})"
            )
        if self.bias.shape != (NUM_CLASSES,):
            raise InputError(f"bias shape {self.bias.shape} != ({NUM_CLASSES},)")
        if not (np.isfinite(self.weights).all() and np.isfinite(self.bias).all()):
            raise InputError("model parameters must be finite")
        return self


def init_model(seed: int, window_radius: int = 1) -> PerceiverModel:
    """Seeded initial model: uniform weights in [-0.01, 0.01], zero bias."""
    fd = feature_dim(window_radius)
    rng = np.random.Generator(
        np.random.Philox(key=[seed & 0xFFFFFFFFFFFFFFFF, 0x1417]))
    weights = rng.uniform(-0.01, 0.01, size=(NUM_CLASSES, fd))
    return PerceiverModel(window_radius=window_radius, weights=weights,
                          bias=np.zeros(NUM_CLASSES))


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 5
    lr0: float = 0.1
    poly_power: float = 0.9
    moment1: float = 0.9
    moment2: float = 0.999
    batch_cells: int = 4096
    seed: int = 0
    window_radius: int = 1

    def validate(self):
        if self.epochs < 0:
            raise ConfigError(f"epochs: must be >= 0, got {self.epochs}")
        if self.lr0 <= 0.0:
            raise ConfigError(f"lr0: must be > 0, got {self.lr0}")
        if self.batch_cells < 1:
            raise ConfigError(f"batch_cells: must be >= 1, got {self.batch_cells}")
        if not 0.0 <= self.moment1 < 1.0 or not 0.0 <= self.moment2 < 1.0:
            raise ConfigError("moment1/moment2 must be in [0, 1)")
        return self


def cell_features(app: np.ndarray, row: int, col: int, window_radius: int = 1) -> np.ndarray:
    """Feature vector for one cell: zero-padded window + normalized position."""
    validate_appearance_grid(app)
    rows, cols = app.shape[:2]
    if not (0 <= row < rows and 0 <= col < cols):
        raise InputError(f"cell ({row}, {col}) out of bounds for {rows}x{cols} grid")
    r = window_radius
    k = 2 * r + 1
    window = np.zeros((k, k, 3), dtype=np.float64)
    r0, r1 = max(row - r, 0), min(row + r, rows - 1)
    c0, c1 = max(col - r, 0), min(col + r, cols - 1)
    window[r0 - row + r : r1 - row + r + 1, c0 - col + r : c1 - col + r + 1] = app[
        r0 : r1 + 1, c0 : c1 + 1
    ]
    return np.concatenate([window.ravel(), [row / rows, col / cols]])


def grid_features(app: np.ndarray, window_radius: int = 1) -> np.ndarray:
    """Features for every cell of a grid, shape [rows*cols, feature_dim].

    Row-major cell order; identical values to per-cell `cell_features`.
    """
    validate_appearance_grid(app)
    rows, cols = app.shape[:2]
    r = window_radius
    k = 2 * r + 1
    padded = np.zeros((rows + 2 * r, cols + 2 * r, 3), dtype=np.float64)
    padded[r : r + rows, r : r + cols] = app
    win = np.lib.stride_tricks.sliding_window_view(padded, (k, k), axis=(0, 1))
    # sliding_window_view appends window axes last: (rows, cols, 3, k, k).
    win = win.transpose(0, 1, 3, 4, 2).reshape(rows * cols, 3 * k * k)
    r_idx, c_idx = np.meshgrid(np.arange(rows), np.arange(cols), indexing="ij")
    pos = np.stack([r_idx.ravel() / rows, c_idx.ravel() / cols], axis=1)
    return np.concatenate([win, pos], axis=1)


def _softmax(z):
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def _as_batch(batch):
    feats = np.asarray([f for f, _ in batch], dtype=np.float64)
    labels = np.asarray([int(c) for _, c in batch], dtype=np.int64)
    return feats, labels


def loss_and_grad(model: PerceiverModel, batch):
    """Mean cross-entropy and its exact gradient over a feature batch.

    Returns (loss, (grad_weights, grad_bias)) with gradient arrays shaped
    like the model's.
    """
    if len(batch) == 0:
        raise InputError("batch must be non-empty")
    feats, labels = _as_batch(batch)
    if not np.isfinite(feats).all():
        raise InputError("non-finite features in batch")
    return _loss_and_grad_arrays(model, feats, labels)


def _loss_and_grad_arrays(model, feats, labels):
    n = feats.shape[0]
    scores = feats @ model.weights.T + model.bias
    probs = _softmax(scores)
    eps = np.finfo(np.float64).tiny
    loss = float(-np.mean(np.log(probs[np.arange(n), labels] + eps)))
    dz = probs
    dz[np.arange(n), labels] -= 1.0
    dz /= n
    return loss, (dz.T @ feats, dz.sum(axis=0))


def train(dataset, cfg: TrainConfig) -> PerceiverModel:
    """Train a perceiver on (truth, appearance) frames with adaptive moments.

    `dataset` is any iterable of frames exposing `.truth` and `.app`
    arrays (or plain (truth, app) tuples). Every cell of every frame is a
    sample; epochs iterate seeded shuffles in batches of `batch_cells`
    under the polynomial learning-rate decay lr0*(1 - t/T)^poly_power.
    """
    cfg.validate()
    frames = _frame_pairs(dataset)
    if not frames:
        raise InputError("training dataset is empty")
    model = init_model(cfg.seed, cfg.window_radius)
    if cfg.epochs == 0:
        return model

    feats = np.concatenate([grid_features(app, cfg.window_radius) for _, app in frames])
    labels = np.concatenate([truth.ravel().astype(np.int64) for truth, _ in frames])
    n = feats.shape[0]
    steps_per_epoch = int(np.ceil(n / cfg.batch_cells))
    total_steps = cfg.epochs * steps_per_epoch

    m_w = np.zeros_like(model.weights)
    v_w = np.zeros_like(model.weights)
    m_b = np.zeros_like(model.bias)
    v_b = np.zeros_like(model.bias)
    b1, b2, eps = cfg.moment1, cfg.moment2, 1e-8
    t = 0
    for epoch in range(cfg.epochs):
        rng = np.random.Generator(
            np.random.Philox(key=[cfg.seed & 0xFFFFFFFFFFFFFFFF, 0x5487FF1E ^ epoch])
        )
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch_cells):
            idx = order[start : start + cfg.batch_cells]
            _, (g_w, g_b) = _loss_and_grad_arrays(model, feats[idx], labels[idx])
            lr = cfg.lr0 * (1.0 - t / total_steps) ** cfg.poly_power
            t += 1
            m_w = b1 * m_w + (1 - b1) * g_w
            v_w = b2 * v_w + (1 - b2) * g_w * g_w
            m_b = b1 * m_b + (1 - b1) * g_b
            v_b = b2 * v_b + (1 - b2) * g_b * g_b
            bc1 = 1 - b1**t
            bc2 = 1 - b2**t
            model.weights = model.weights - lr * (m_w / bc1) / (np.sqrt(v_w / bc2) + eps)
            model.bias = model.bias - lr * (m_b / bc1) / (np.sqrt(v_b / bc2) + eps)
    return model


def _frame_pairs(dataset):
    frames = getattr(dataset, "frames", dataset)
    out = []
    for f in frames:
        if isinstance(f, tuple):
            truth, app = f
        else:
            truth, app = f.truth, f.app
        validate_semantic_grid(truth)
        validate_appearance_grid(app)
        out.append((truth, app))
    return out


def predict(model: PerceiverModel, app: np.ndarray) -> np.ndarray:
    """Per-cell argmax classification; ties break to the lowest class id."""
    model.validate()
    rows, cols = app.shape[:2]
    feats = grid_features(app, model.window_radius)
    scores = feats @ model.weights.T + model.bias
    return np.argmax(scores, axis=1).astype(np.uint8).reshape(rows, cols)


def predict_proba(model: PerceiverModel, app: np.ndarray) -> np.ndarray:
    """Per-cell class distributions, shape [rows, cols, NUM_CLASSES]."""
    model.validate()
    rows, cols = app.shape[:2]
    feats = grid_features(app, model.window_radius)
    probs = _softmax(feats @ model.weights.T + model.bias)
    return probs.reshape(rows, cols, NUM_CLASSES)


# ---------------------------------------------------------------------------
# Model serialization
# ---------------------------------------------------------------------------

MODEL_MAGIC = b"AEYE-PM1"


def save_model(model: PerceiverModel, path):
    """Write the model as a versioned little-endian binary blob."""
    model.validate()
    fd = feature_dim(model.window_radius)
    with open(path, "wb") as f:
        f.write(MODEL_MAGIC)
        f.write(struct.pack("<III", model.window_radius, NUM_CLASSES, fd))
        f.write(np.ascontiguousarray(model.weights, dtype="<f8").tobytes())
        f.write(np.ascontiguousarray(model.bias, dtype="<f8").tobytes())


def load_model(path) -> PerceiverModel:
    with open(path, "rb") as f:
        blob = f.read()
    if blob[:8] != MODEL_MAGIC:
        raise FormatError(f"bad model magic {blob[:8]!r}, expected {MODEL_MAGIC!r}")
    radius, n_cls, fd = struct.unpack_from("<III", blob, 8)
    if n_cls != NUM_CLASSES or fd != feature_dim(radius):
        raise FormatError(f"model dims ({n_cls}, {fd}) inconsistent with radius {radius}")
    off = 8 + 12
    w_bytes = n_cls * fd * 8
    expected = off + w_bytes + n_cls * 8
    if len(blob) != expected:
        raise FormatError(f"model blob length {len(blob)} != expected {expected}")
    weights = np.frombuffer(blob, dtype="<f8", count=n_cls * fd, offset=off).reshape(n_cls, fd)
    bias = np.frombuffer(blob, dtype="<f8", count=n_cls, offset=off + w_bytes)
    return PerceiverModel(window_radius=radius, weights=weights.copy(), bias=bias.copy()).validate()
