"""Deterministic 2D driving world.

One straight one-way boulevard runs along +x on a torus of length
`map_extent`. Sidewalks flank the road, building/vegetation blocks sit
beyond them, traffic lights stand at seeded intersections where NPC
vehicles cross, and NPC walkers stroll the sidewalks and jaywalk at
seeded times. Everything the world does is a pure function of the
config seed and the command sequence.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, InputError
from .semantics import (
    NUM_CLASSES,
    PALETTE,
    SemanticClass,
    hash01,
    hash_u64,
)

# Road layout (meters, lateral from road centerline)
ROAD_HALFWIDTH = 3.0
SIDEWALK_OUTER = 5.5
BLOCK_OUTER = 16.0
BLOCK_LEN = 12.0
WALK_LINE = 4.25  # sidewalk centerline walkers follow

# Ego dynamics
WHEELBASE = 2.5
MAX_STEER_RAD = 0.5
EGO_ACCEL = 3.0       # m/s^2 at full throttle
EGO_BRAKE = 8.0       # m/s^2 at full brake
DRAG_COEFF = 0.05     # 1/s, linear speed decay

# Footprint half-extents (x half-length, y half-width) used for collisions
# and rendering, per entity kind.
EGO_HALF = (2.0, 0.9)
CAR_HALF = (2.1, 0.9)
MOTORCYCLE_HALF = (1.1, 0.4)
WALKER_HALF = (0.35, 0.35)
LIGHT_HALF = (0.4, 0.4)

# Traffic light cycle (seconds per phase)
PHASE_GREEN, PHASE_YELLOW, PHASE_RED = 0, 1, 2
PHASE_DURATIONS = (8.0, 2.0, 8.0)
PHASE_NAMES = ("green", "yellow", "red")

_WALK, _CROSS = 0, 1
_KIND_CAR, _KIND_MOTORCYCLE = 0, 1


@dataclass(frozen=True)
class WorldConfig:
    """Seeded world parameterization.

    The weather fields only modulate appearance rendering: `sun_altitude`
    scales palette brightness and `clouds` scales the appearance noise
    sigma. `npc_range` bounds the total NPC population the config may
    request (full simulator towns run 50-150; the desk default is 8-24).
    """

    seed: int
    map_extent: float = 240.0
    npc_vehicles: int = 6
    npc_walkers: int = 14
    clouds: float = 15.0
    wind: float = 25.0
    sun_altitude: float = 60.0
    speed_limit: float = 50.0
    npc_range: tuple = (8, 24)
    grid_rows: int = 64
    grid_cols: int = 64
    view_depth: float = 50.0
    view_hfov_deg: float = 60.0
    noise_sigma: float = 0.05

    def validate(self):
        def bad(name, why):
            raise ConfigError(f"{name}: {why}")

        if self.map_extent < 60.0:
            bad("map_extent", f"must be >= 60 m, got {self.map_extent}")
        if self.npc_vehicles < 0:
            bad("npc_vehicles", "must be >= 0")
        if self.npc_walkers < 0:
            bad("npc_walkers", "must be >= 0")
        lo, hi = self.npc_range
        total = self.npc_vehicles + self.npc_walkers
        if not lo <= total <= hi:
            bad("npc_range", f"total NPC count {total} outside [{lo}, {hi}]")
        if not 0.0 <= self.clouds <= 100.0:
            bad("clouds", f"must be in [0, 100], got {self.clouds}")
        if not 0.0 <= self.wind <= 100.0:
            bad("wind", f"must be in [0, 100], got {self.wind}")
        if not -90.0 <= self.sun_altitude <= 90.0:
            bad("sun_altitude", f"must be in [-90, 90], got {self.sun_altitude}")
        if self.speed_limit <= 0.0:
            bad("speed_limit", f"must be > 0, got {self.speed_limit}")
        if self.grid_rows < 8 or self.grid_cols < 8:
            bad("grid_rows/grid_cols", "grid must be at least 8x8")
        if self.view_depth <= 0.0:
            bad("view_depth", "must be > 0")
        if not 10.0 <= self.view_hfov_deg <= 170.0:
            bad("view_hfov_deg", f"must be in [10, 170], got {self.view_hfov_deg}")
        if self.noise_sigma < 0.0:
            bad("noise_sigma", "must be >= 0")
        return self

    @property
    def speed_limit_ms(self):
        return self.speed_limit / 3.6


@dataclass
class EgoState:
    x: float
    y: float
    heading: float  # radians, 0 points along +x
    speed: float    # m/s


@dataclass
class WorldState:
    config: WorldConfig
    clock: float
    tick: int
    ego: EgoState
    odometer_km: float
    collision: bool
    # Walkers (parallel arrays)
    w_x: np.ndarray
    w_y: np.ndarray
    w_dir: np.ndarray          # +-1 along x while walking
    w_speed: np.ndarray        # 1.0 - 1.8 m/s
    w_mode: np.ndarray         # _WALK or _CROSS
    w_cross_dir: np.ndarray    # +-1 along y while crossing
    w_next_cross: np.ndarray   # clock time of next crossing
    w_counter: np.ndarray      # per-walker decision counter (rng key)
    # Crossing vehicles (parallel arrays)
    v_x: np.ndarray
    v_y: np.ndarray
    v_dir: np.ndarray
    v_speed: np.ndarray
    v_kind: np.ndarray         # _KIND_CAR or _KIND_MOTORCYCLE
    v_active: np.ndarray      # 1 while crossing, 0 while staged off-view
    v_next_cross: np.ndarray
    v_counter: np.ndarray
    # Traffic lights
    l_x: np.ndarray
    l_phase: np.ndarray
    l_timer: np.ndarray        # seconds left in current phase

    def copy(self):
        arrays = {
            name: getattr(self, name).copy()
            for name in self.__dataclass_fields__
            if isinstance(getattr(self, name), np.ndarray)
        }
        return replace(self, ego=replace(self.ego), **arrays)


def _wrap(x, extent):
    return np.mod(x, extent)


def init_world(config: WorldConfig) -> WorldState:
    """Build the seeded initial world state (clock 0, odometer 0)."""
    config.validate()
    seed = config.seed
    ext = config.map_extent

    nw = config.npc_walkers
    idx = np.arange(nw)
    w_x = hash01(seed, 0x11, idx) * ext
    w_side = np.where(hash01(seed, 0x12, idx) < 0.5, -1.0, 1.0)
    w_y = w_side * WALK_LINE
    w_dir = np.where(hash01(seed, 0x13, idx) < 0.5, -1.0, 1.0)
    w_speed = 1.0 + 0.8 * hash01(seed, 0x14, idx)
    w_next_cross = 2.0 + 18.0 * hash01(seed, 0x15, idx, 0)

    nv = config.npc_vehicles
    n_inter = max(1, int(round(ext / 90.0)))
    inter_x = (np.arange(n_inter) + 0.35 + 0.3 * hash01(seed, 0x21, np.arange(n_inter))) * (
        ext / n_inter
    )
    vidx = np.arange(nv)
    v_x = inter_x[(hash_u64(seed, 0x22, vidx) % np.uint64(max(n_inter, 1))).astype(int)]
    v_x = _wrap(v_x + (hash01(seed, 0x23, vidx) - 0.5) * 4.0, ext)
    v_dir = np.where(hash01(seed, 0x24, vidx) < 0.5, -1.0, 1.0)
    v_y = -v_dir * 45.0
    v_speed = 4.0 + 5.0 * hash01(seed, 0x25, vidx)
    v_kind = np.where(hash01(seed, 0x26, vidx) < 0.5, _KIND_CAR, _KIND_MOTORCYCLE)
    v_next_cross = 2.0 + 20.0 * hash01(seed, 0x27, vidx, 0)

    phase_offset = hash01(seed, 0x31, np.arange(n_inter)) * sum(PHASE_DURATIONS)
    l_phase = np.zeros(n_inter, dtype=np.int64)
    l_timer = np.empty(n_inter)
    for i, off in enumerate(phase_offset):
        p, left = 0, off
        while left >= PHASE_DURATIONS[p]:
            left -= PHASE_DURATIONS[p]
            p = (p + 1) % 3
        l_phase[i] = p
        l_timer[i] = PHASE_DURATIONS[p] - left

    return WorldState(
        config=config,
        clock=0.0,
        tick=0,
        ego=EgoState(x=0.25 * ext, y=0.0, heading=0.0, speed=0.0),
        odometer_km=0.0,
        collision=False,
        w_x=w_x,
        w_y=w_y,
        w_dir=w_dir,
        w_speed=w_speed,
        w_mode=np.zeros(nw, dtype=np.int64),
        w_cross_dir=np.zeros(nw, dtype=np.int64),
        w_next_cross=w_next_cross,
        w_counter=np.zeros(nw, dtype=np.int64),
        v_x=v_x,
        v_y=v_y,
        v_dir=v_dir,
        v_speed=v_speed,
        v_kind=v_kind.astype(np.int64),
        v_active=np.zeros(nv, dtype=np.int64),
        v_next_cross=v_next_cross,
        v_counter=np.zeros(nv, dtype=np.int64),
        l_x=inter_x,
        l_phase=l_phase,
        l_timer=l_timer,
    )


def step(state: WorldState, cmd, dt: float) -> WorldState:
    """Advance the world one tick under the effective control command.

    Kinematic bicycle model for the ego; walkers and vehicles follow
    their seeded plans; light phase timers tick down. Returns a new
    state, leaving the input untouched.
    """
    if not 0.0 < dt <= 0.2:
        raise InputError(f"dt must be in (0, 0.2], got {dt}")
    for name in ("steer", "throttle", "brake"):
        v = getattr(cmd, name)
        if not np.isfinite(v):
            raise InputError(f"non-finite command field {name}")

    s = state.copy()
    cfg = s.config
    ext = cfg.map_extent

    # Ego: accelerate, cap at the speed limit, then integrate the bicycle.
    ego = s.ego
    accel = cmd.throttle * EGO_ACCEL - cmd.brake * EGO_BRAKE - DRAG_COEFF * ego.speed
    speed = ego.speed + accel * dt
    speed = float(min(max(speed, 0.0), cfg.speed_limit_ms))
    steer_angle = -cmd.steer * MAX_STEER_RAD
    heading = ego.heading + speed * np.tan(steer_angle) / WHEELBASE * dt
    dist = speed * dt
    ego.x = float(_wrap(ego.x + dist * np.cos(heading), ext))
    ego.y = float(ego.y + dist * np.sin(heading))
    ego.heading = float(heading)
    ego.speed = speed
    s.odometer_km = state.odometer_km + dist / 1000.0
    s.clock = state.clock + dt
    s.tick = state.tick + 1

    _step_walkers(s, dt)
    _step_vehicles(s, dt)
    _step_lights(s, dt)
    s.collision = _check_collision(s)
    return s


def _step_walkers(s, dt):
    if s.w_x.size == 0:
        return
    seed = s.config.seed
    ext = s.config.map_extent
    walking = s.w_mode == _WALK
    crossing = ~walking

    s.w_x[walking] = _wrap(s.w_x[walking] + s.w_dir[walking] * s.w_speed[walking] * dt, ext)
    start = walking & (s.clock >= s.w_next_cross)
    if np.any(start):
        s.w_mode[start] = _CROSS
        s.w_cross_dir[start] = np.where(s.w_y[start] > 0, -1, 1)

    s.w_y[crossing] = s.w_y[crossing] + s.w_cross_dir[crossing] * s.w_speed[crossing] * dt
    done = crossing & (np.abs(s.w_y) >= WALK_LINE) & (np.sign(s.w_y) == s.w_cross_dir)
    if np.any(done):
        idx = np.nonzero(done)[0]
        s.w_y[idx] = np.sign(s.w_y[idx]) * WALK_LINE
        s.w_mode[idx] = _WALK
        s.w_counter[idx] += 1
        s.w_dir[idx] = np.where(hash01(seed, 0x16, idx, s.w_counter[idx]) < 0.5, -1.0, 1.0)
        s.w_next_cross[idx] = s.clock + 6.0 + 18.0 * hash01(seed, 0x15, idx, s.w_counter[idx])


def _step_vehicles(s, dt):
    if s.v_x.size == 0:
        return
    seed = s.config.seed
    active = s.v_active == 1
    s.v_y[active] = s.v_y[active] + s.v_dir[active] * s.v_speed[active] * dt

    launch = (~active) & (s.clock >= s.v_next_cross)
    if np.any(launch):
        s.v_active[launch] = 1
        s.v_y[launch] = -s.v_dir[launch] * 45.0

    done = active & (np.abs(s.v_y) >= 45.0) & (np.sign(s.v_y) == s.v_dir)
    if np.any(done):
        idx = np.nonzero(done)[0]
        s.v_active[idx] = 0
        s.v_counter[idx] += 1
        s.v_dir[idx] = -s.v_dir[idx]
        s.v_next_cross[idx] = s.clock + 4.0 + 18.0 * hash01(seed, 0x27, idx, s.v_counter[idx])


def _step_lights(s, dt):
    s.l_timer -= dt
    expired = s.l_timer <= 1e-9
    while np.any(expired):
        idx = np.nonzero(expired)[0]
        s.l_phase[idx] = (s.l_phase[idx] + 1) % 3
        s.l_timer[idx] += np.array([PHASE_DURATIONS[p] for p in s.l_phase[idx]])
        expired = s.l_timer <= 1e-9


def _torus_dx(x, ego_x, ext):
    """Signed along-road offset from the ego on the torus, in (-ext/2, ext/2]."""
    d = np.mod(x - ego_x + ext / 2.0, ext) - ext / 2.0
    return d


def _check_collision(s):
    ego = s.ego
    ext = s.config.map_extent
    if abs(ego.y) + EGO_HALF[1] > ROAD_HALFWIDTH:
        return True
    # Axis-aligned footprint overlap; heading stays near 0 on this map.
    if s.w_x.size:
        dx = _torus_dx(s.w_x, ego.x, ext)
        dy = s.w_y - ego.y
        hit = (np.abs(dx) < EGO_HALF[0] + WALKER_HALF[0]) & (
            np.abs(dy) < EGO_HALF[1] + WALKER_HALF[1]
        )
        if np.any(hit):
            return True
    if s.v_x.size:
        active = s.v_active == 1
        if np.any(active):
            half_x = np.where(s.v_kind == _KIND_CAR, CAR_HALF[1], MOTORCYCLE_HALF[1])
            half_y = np.where(s.v_kind == _KIND_CAR, CAR_HALF[0], MOTORCYCLE_HALF[0])
            dx = _torus_dx(s.v_x, ego.x, ext)
            dy = s.v_y - ego.y
            hit = active & (np.abs(dx) < EGO_HALF[0] + half_x) & (
                np.abs(dy) < EGO_HALF[1] + half_y
            )
            if np.any(hit):
                return True
    return False


# ---------------------------------------------------------------------------
# Rendering
# ---------------------------------------------------------------------------


def grid_geometry(config):
    """Per-row band depth and per-row column width, in meters."""
    rows, cols = config.grid_rows, config.grid_cols
    band = config.view_depth / rows
    d_centers = (np.arange(rows) + 0.5) * band
    half_fov = np.deg2rad(config.view_hfov_deg) / 2.0
    col_w = 2.0 * d_centers * np.tan(half_fov) / cols
    return band, d_centers, col_w


def _ego_frame(state, x, y):
    """World positions -> (forward, rightward) offsets in the ego frame."""
    ego = state.ego
    dx = _torus_dx(np.asarray(x, dtype=float), ego.x, state.config.map_extent)
    dy = np.asarray(y, dtype=float) - ego.y
    c, si = np.cos(ego.heading), np.sin(ego.heading)
    fwd = dx * c + dy * si
    right = dx * si - dy * c
    return fwd, right


def _paint_footprint(grid, config, fwd, right, half_fwd, half_right, cls):
    # Span sizes are anchored to the object's center cell and derived from
    # its center distance only, so the painted cell count is a non-increasing
    # function of distance (no jitter from row-boundary alignment).
    rows, cols = config.grid_rows, config.grid_cols
    band = config.view_depth / rows
    half_fov = np.deg2rad(config.view_hfov_deg) / 2.0
    d_eff = max(fwd, band * 0.5)
    w = 2.0 * d_eff * np.tan(half_fov) / cols
    half_rows = int(np.floor(half_fwd / band + 0.5))
    half_cols = int(np.floor(half_right / w + 0.5))
    r_center = int(np.floor(fwd / band))
    c_center = int(np.floor(right / w + cols / 2.0))
    r0, r1 = r_center - half_rows, r_center + half_rows
    c0, c1 = c_center - half_cols, c_center + half_cols
    if r1 < 0 or r0 > rows - 1 or c1 < 0 or c0 > cols - 1:
        return
    grid[max(r0, 0) : min(r1, rows - 1) + 1, max(c0, 0) : min(c1, cols - 1) + 1] = cls


def render(state: WorldState):
    """Render the ego-centric (semantic, appearance) grid pair.

    Row 0 is nearest; columns form a frustum whose lateral bin width
    grows with distance, so a fixed-size object covers fewer cells the
    farther away it is. Appearance is the class palette scaled by sun
    brightness plus seeded Gaussian noise (sigma scaled by clouds).
    """
    cfg = state.config
    rows, cols = cfg.grid_rows, cfg.grid_cols
    band, d_centers, col_w = grid_geometry(cfg)
    lat = (np.arange(cols) - (cols - 1) / 2.0)[None, :] * col_w[:, None]
    fwd = np.broadcast_to(d_centers[:, None], (rows, cols))

    ego = state.ego
    c, si = np.cos(ego.heading), np.sin(ego.heading)
    wx = _wrap(ego.x + fwd * c + lat * si, cfg.map_extent)
    wy = ego.y + fwd * si - lat * c

    grid = np.zeros((rows, cols), dtype=np.uint8)
    ay = np.abs(wy)
    grid[ay <= ROAD_HALFWIDTH] = SemanticClass.ROAD
    grid[(ay > ROAD_HALFWIDTH) & (ay <= SIDEWALK_OUTER)] = SemanticClass.SIDEWALK
    outer = (ay > SIDEWALK_OUTER) & (ay <= BLOCK_OUTER)
    if np.any(outer):
        blocks = np.floor(wx[outer] / BLOCK_LEN).astype(np.int64)
        side = (wy[outer] > 0).astype(np.int64)
        h = hash01(cfg.seed, 0x41, blocks, side)
        block_cls = np.where(
            h < 0.45,
            np.uint8(SemanticClass.BUILDING),
            np.where(h < 0.80, np.uint8(SemanticClass.VEGETATION), np.uint8(SemanticClass.VOID)),
        )
        grid[outer] = block_cls

    # Fixtures and NPCs, painted nearest class last so walkers stay visible.
    lf, lr = _ego_frame(state, state.l_x, np.full_like(state.l_x, ROAD_HALFWIDTH + 0.6))
    for i in range(state.l_x.size):
        if -1.0 < lf[i] < cfg.view_depth + 1.0:
            _paint_footprint(grid, cfg, lf[i], lr[i], LIGHT_HALF[0], LIGHT_HALF[1],
                             np.uint8(SemanticClass.TRAFFIC_LIGHT))

    if state.v_x.size:
        vf, vr = _ego_frame(state, state.v_x, state.v_y)
        for i in range(state.v_x.size):
            if state.v_active[i] != 1 or not -3.0 < vf[i] < cfg.view_depth + 3.0:
                continue
            half = CAR_HALF if state.v_kind[i] == _KIND_CAR else MOTORCYCLE_HALF
            # Crossing traffic travels along y: length lies lateral to the ego.
            _paint_footprint(grid, cfg, vf[i], vr[i], half[1], half[0],
                             np.uint8(SemanticClass.VEHICLE))

    if state.w_x.size:
        wf, wr = _ego_frame(state, state.w_x, state.w_y)
        for i in range(state.w_x.size):
            if -1.0 < wf[i] < cfg.view_depth + 1.0:
                _paint_footprint(grid, cfg, wf[i], wr[i], WALKER_HALF[0], WALKER_HALF[1],
                                 np.uint8(SemanticClass.PEDESTRIAN))

    app = render_appearance(grid, cfg, state.tick)
    return grid, app


def render_appearance(grid, config, tick):
    """Palette colors for `grid` under the config's weather, seeded by tick."""
    brightness = 0.75 + 0.25 * np.sin(np.deg2rad(max(config.sun_altitude, 0.0)))
    sigma = config.noise_sigma * (1.0 + config.clouds / 100.0)
    base = PALETTE[grid] * np.float32(brightness)
    if sigma > 0.0:
        key = [config.seed & 0xFFFFFFFFFFFFFFFF, (tick ^ 0xA9E0000000000000) & 0xFFFFFFFFFFFFFFFF]
        rng = np.random.Generator(np.random.Philox(key=key))
        base = base + rng.normal(0.0, sigma, size=base.shape).astype(np.float32)
    return np.clip(base, 0.0, 1.0).astype(np.float32)


def nearest_light_phase(state: WorldState):
    """Phase name of the nearest traffic light ahead, or None if none in view."""
    if state.l_x.size == 0:
        return None
    fwd, _ = _ego_frame(state, state.l_x, np.full_like(state.l_x, ROAD_HALFWIDTH + 0.6))
    ahead = (fwd > 0.0) & (fwd < state.config.view_depth)
    if not np.any(ahead):
        return None
    i = int(np.nonzero(ahead)[0][np.argmin(fwd[ahead])])
    return PHASE_NAMES[int(state.l_phase[i])]


# ---------------------------------------------------------------------------
# State serialization (used for snapshots and determinism checks)
# ---------------------------------------------------------------------------

_CONFIG_FIELDS = tuple(WorldConfig.__dataclass_fields__)


def state_to_dict(state: WorldState) -> dict:
    out = {
        "config": {k: getattr(state.config, k) for k in _CONFIG_FIELDS},
        "clock": state.clock,
        "tick": state.tick,
        "ego": [state.ego.x, state.ego.y, state.ego.heading, state.ego.speed],
        "odometer_km": state.odometer_km,
        "collision": state.collision,
    }
    out["config"]["npc_range"] = list(state.config.npc_range)
    for name in WorldState.__dataclass_fields__:
        v = getattr(state, name)
        if isinstance(v, np.ndarray):
            out[name] = v.tolist()
    return out


def state_from_dict(d: dict) -> WorldState:
    cfg_d = dict(d["config"])
    cfg_d["npc_range"] = tuple(cfg_d["npc_range"])
    cfg = WorldConfig(**cfg_d)
    ref = init_world(cfg)
    arrays = {}
    for name in WorldState.__dataclass_fields__:
        v = getattr(ref, name)
        if isinstance(v, np.ndarray):
            arrays[name] = np.asarray(d[name], dtype=v.dtype)
    return WorldState(
        config=cfg,
        clock=d["clock"],
        tick=d["tick"],
        ego=EgoState(*d["ego"]),
        odometer_km=d["odometer_km"],
        collision=d["collision"],
        **arrays,
    )
