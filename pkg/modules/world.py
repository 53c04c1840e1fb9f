"""
World Generator - ground truth lingkungan simulasi
Homogeneous L regions, B labels and rocks sampled from the knowledge network,
plus the grid geometry (L grid <-> rock grid, sensor footprints).
"""

import logging
from dataclasses import asdict, dataclass, field, replace
from functools import lru_cache
from typing import Dict, List, Optional, Tuple
import sys
import os

import numpy as np

sys.path.append(os.path.dirname(os.path.dirname(__file__)))
from config.rover_config import DEFAULT_WORLD_PRESET, WORLD_PRESETS
from modules.bn_core import (
    GridSpec, KnowledgeNet, LocalObservation, Observation, RemoteObservation,
    RockDensityPrior, RockReading
)
from modules.errors import ConfigError, OutOfBoundsError
from modules.sensing import HEADING_VECTORS, Pose, SensingAction, Sensor
from utils import load_json, make_rng, save_json

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class WorldConfig:
    """
    Geometry and generation parameters of one simulated world.

    Args:
        l_grid: (W_L, H_L) location-type grid
        region: (w, h) size of a homogeneous L region, in L cells
        rock_grid: (W_R, H_R) rock / feature grid
        fov: (depth, width) of the camera footprint, in rock cells
        rock_density: mean rocks per L cell
        density_kind: 'poisson' or 'fixed'
        obstacle_fraction: share of L cells blocked, 0 for open terrain
        seed: generation seed
    """
    l_grid: Tuple[int, int] = tuple(WORLD_PRESETS[DEFAULT_WORLD_PRESET]['l_grid'])
    region: Tuple[int, int] = tuple(WORLD_PRESETS[DEFAULT_WORLD_PRESET]['region'])
    rock_grid: Tuple[int, int] = tuple(WORLD_PRESETS[DEFAULT_WORLD_PRESET]['rock_grid'])
    fov: Tuple[int, int] = tuple(WORLD_PRESETS[DEFAULT_WORLD_PRESET]['fov'])
    rock_density: float = WORLD_PRESETS[DEFAULT_WORLD_PRESET]['rock_density']
    density_kind: str = WORLD_PRESETS[DEFAULT_WORLD_PRESET]['density_kind']
    obstacle_fraction: float = 0.0
    seed: int = 0

    def __post_init__(self):
        # JSON documents give lists; keep the config hashable
        for name in ('l_grid', 'region', 'rock_grid', 'fov'):
            object.__setattr__(self, name, tuple(int(v) for v in getattr(self, name)))
        self.validate()

    def validate(self) -> None:
        (wl, hl), (rw, rh), (wr, hr) = self.l_grid, self.region, self.rock_grid
        if min(wl, hl, rw, rh, wr, hr) <= 0:
            raise ConfigError("grid and region sizes must be positive")
        if wl % rw or hl % rh:
            raise ConfigError(f"L grid {self.l_grid} is not divisible by region {self.region}")
        if wr % wl or hr % hl:
            raise ConfigError(f"rock grid {self.rock_grid} is not divisible by L grid {self.l_grid}")
        if wr // wl != hr // hl:
            raise ConfigError("rock cells per L cell must match along x and y")
        if min(self.fov) <= 0:
            raise ConfigError(f"fov must be positive, got {self.fov}")
        if not 0.0 <= self.obstacle_fraction < 1.0:
            raise ConfigError(f"obstacle_fraction must be in [0, 1), got {self.obstacle_fraction}")
        # density checks live in RockDensityPrior
        self.density

    @property
    def grid(self) -> GridSpec:
        return GridSpec(self.l_grid, self.rock_grid)

    @property
    def scale(self) -> int:
        return self.rock_grid[0] // self.l_grid[0]

    @property
    def density(self) -> RockDensityPrior:
        return RockDensityPrior(rate=float(self.rock_density), kind=self.density_kind)

    @property
    def n_regions(self) -> int:
        return (self.l_grid[0] // self.region[0]) * (self.l_grid[1] // self.region[1])

    def with_seed(self, seed: int) -> 'WorldConfig':
        return replace(self, seed=int(seed))

    @classmethod
    def from_preset(cls, name: str, seed: int = 0, **overrides) -> 'WorldConfig':
        if name not in WORLD_PRESETS:
            raise ConfigError(f"unknown world preset '{name}' (known: {sorted(WORLD_PRESETS)})")
        params = dict(WORLD_PRESETS[name])
        params.update(overrides)
        return cls(seed=int(seed), **params)

    @classmethod
    def from_dict(cls, doc: Dict) -> 'WorldConfig':
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"unknown world config keys: {sorted(unknown)}")
        return cls(**doc)

    def to_dict(self) -> Dict:
        doc = asdict(self)
        for name in ('l_grid', 'region', 'rock_grid', 'fov'):
            doc[name] = list(doc[name])
        return doc


@dataclass(frozen=True)
class Rock:
    id: int
    cell: Tuple[int, int]      # rock-grid cell
    r: int
    f: Tuple[int, ...]         # one feature class per channel


@dataclass(eq=False)
class WorldState:
    """Ground truth hidden from the planner. Treated as read-only after generation."""
    config: WorldConfig
    l_truth: np.ndarray
    b_truth: np.ndarray
    rocks: List[Rock]
    obstacles: Optional[np.ndarray] = None
    _rock_lin: np.ndarray = field(init=False, repr=False)
    _rock_f: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.l_truth.shape != self.config.l_grid or self.b_truth.shape != self.config.l_grid:
            raise ConfigError("truth grids do not match the configured L grid")
        h_rock = self.config.rock_grid[1]
        self._rock_lin = np.array([r.cell[0] * h_rock + r.cell[1] for r in self.rocks], dtype=np.int64)
        n_channels = len(self.rocks[0].f) if self.rocks else 0
        self._rock_f = np.array([r.f for r in self.rocks], dtype=int).reshape(len(self.rocks), n_channels)

    @property
    def free_cells(self) -> np.ndarray:
        """(n, 2) array of L cells not blocked by an obstacle, row-major order."""
        if self.obstacles is None:
            return np.argwhere(np.ones(self.config.l_grid, dtype=bool))
        return np.argwhere(~self.obstacles)

    def rocks_in(self, cells: np.ndarray) -> np.ndarray:
        """Indices into self.rocks of the rocks lying on the given linear rock cells."""
        if not self.rocks or len(cells) == 0:
            return np.empty(0, dtype=int)
        return np.flatnonzero(np.isin(self._rock_lin, cells))

    def to_dict(self) -> Dict:
        return {
            'config': self.config.to_dict(),
            'l_truth': self.l_truth.tolist(),
            'b_truth': self.b_truth.tolist(),
            'rocks': [{'id': r.id, 'cell': list(r.cell), 'r': r.r, 'f': list(r.f)} for r in self.rocks],
            'obstacles': self.obstacles.tolist() if self.obstacles is not None else None,
        }

    @classmethod
    def from_dict(cls, doc: Dict) -> 'WorldState':
        try:
            config = WorldConfig.from_dict(doc['config'])
            rocks = [Rock(int(r['id']), tuple(r['cell']), int(r['r']), tuple(r['f'])) for r in doc['rocks']]
            obstacles = doc.get('obstacles')
            return cls(
                config=config,
                l_truth=np.array(doc['l_truth'], dtype=int),
                b_truth=np.array(doc['b_truth'], dtype=int),
                rocks=rocks,
                obstacles=np.array(obstacles, dtype=bool) if obstacles is not None else None,
            )
        except KeyError as e:
            raise ConfigError(f"world document is missing {e}") from e

    def save(self, path: str) -> None:
        save_json(self.to_dict(), path)
        logger.info(f"✅ World saved: {path} ({len(self.rocks)} rocks)")

    @classmethod
    def load(cls, path: str) -> 'WorldState':
        return cls.from_dict(load_json(path))


# ==========================================
# GENERATION
# ==========================================
def generate(config: WorldConfig, net: KnowledgeNet) -> WorldState:
    """
    Sample a ground-truth world from the knowledge network.

    One L label per region (drawn from the net's L prior), B per L cell from
    P(B|L), a density-prior number of rocks per L cell on distinct rock
    cells, then R ~ P(R|L) and F ~ P(F|R) per channel for every rock.
    The result depends only on (config, net).

    Raises:
        ConfigError: L cardinality of the net is inconsistent, or the
            obstacle draw leaves no free cell
    """
    rng = make_rng(config.seed)
    (wl, hl), (rw, rh) = config.l_grid, config.region
    scale = config.scale

    regions = net.p_r_given_l.n_parent
    labels = rng.choice(regions, size=(wl // rw, hl // rh), p=net.l_prior.probs)
    l_truth = np.repeat(np.repeat(labels, rw, axis=0), rh, axis=1)
    b_truth = net.p_b_given_l.sample(l_truth.ravel(), rng).reshape(l_truth.shape)

    obstacles = None
    if config.obstacle_fraction > 0:
        obstacles = rng.random(config.l_grid) < config.obstacle_fraction
        if obstacles.all():
            raise ConfigError("obstacle draw blocked every cell")

    density = config.density
    if density.kind == 'fixed':
        counts = np.full(config.l_grid, int(round(density.rate)))
    else:
        counts = rng.poisson(density.rate, size=config.l_grid)
    counts = np.minimum(counts, scale * scale)

    rock_x: List[int] = []
    rock_y: List[int] = []
    for x, y in np.argwhere(counts > 0).tolist():
        pos = rng.choice(scale * scale, size=int(counts[x, y]), replace=False)
        rock_x.extend((x * scale + pos // scale).tolist())
        rock_y.extend((y * scale + pos % scale).tolist())

    rock_x_arr = np.array(rock_x, dtype=int)
    rock_y_arr = np.array(rock_y, dtype=int)
    rock_l = l_truth[rock_x_arr // scale, rock_y_arr // scale]
    rock_r = net.p_r_given_l.sample(rock_l, rng)
    rock_f = np.empty((rock_r.size, net.n_channels), dtype=int)
    for c, cpt in enumerate(net.p_f_given_r):
        rock_f[:, c] = cpt.sample(rock_r, rng)

    rocks = [
        Rock(i, (int(rx), int(ry)), int(r), tuple(int(v) for v in f))
        for i, (rx, ry, r, f) in enumerate(zip(rock_x_arr, rock_y_arr, rock_r, rock_f))
    ]
    logger.debug(f"World seed={config.seed}: {config.n_regions} regions, {len(rocks)} rocks")
    return WorldState(config=config, l_truth=l_truth, b_truth=b_truth, rocks=rocks, obstacles=obstacles)


# ==========================================
# GEOMETRY
# ==========================================
@lru_cache(maxsize=65536)
def footprint(pose: Pose, sensor: Sensor, config: WorldConfig) -> np.ndarray:
    """
    Rock cells covered by a sensor reading at `pose`.

    Remote: the fov rectangle (depth along the heading, width across it)
    anchored at the front edge of the robot's L cell (the front corner for
    diagonal headings). A rock cell is included when its center lies inside
    the rotated rectangle; the result is clipped to the grid.
    Local: every rock cell of the robot's L cell.

    Returns:
        Sorted read-only array of linear rock-cell indices (rx * H_R + ry)

    Raises:
        OutOfBoundsError: pose off the L grid
    """
    (wl, hl), (wr, hr) = config.l_grid, config.rock_grid
    if not (0 <= pose.x < wl and 0 <= pose.y < hl):
        raise OutOfBoundsError(f"pose {pose} outside L grid {config.l_grid}")
    s = config.scale

    if sensor is Sensor.LOCAL:
        rx, ry = np.meshgrid(np.arange(pose.x * s, (pose.x + 1) * s),
                             np.arange(pose.y * s, (pose.y + 1) * s), indexing='ij')
        cells = (rx * hr + ry).ravel()
        cells.flags.writeable = False
        return cells

    depth, width = config.fov
    dx, dy = HEADING_VECTORS[pose.heading]
    norm = np.hypot(dx, dy)
    u = np.array([dx, dy]) / norm
    v = np.array([-u[1], u[0]])
    anchor = np.array([(pose.x + 0.5) * s + 0.5 * s * dx, (pose.y + 0.5) * s + 0.5 * s * dy])

    corners = np.array([anchor + a * u + b * v
                        for a in (0.0, depth) for b in (-width / 2.0, width / 2.0)])
    lo = np.clip(np.floor(corners.min(axis=0)).astype(int), 0, [wr, hr])
    hi = np.clip(np.ceil(corners.max(axis=0)).astype(int), 0, [wr, hr])
    if lo[0] >= hi[0] or lo[1] >= hi[1]:
        cells = np.empty(0, dtype=np.int64)
        cells.flags.writeable = False
        return cells

    rx, ry = np.meshgrid(np.arange(lo[0], hi[0]), np.arange(lo[1], hi[1]), indexing='ij')
    px, py = rx + 0.5 - anchor[0], ry + 0.5 - anchor[1]
    along = px * u[0] + py * u[1]
    across = px * v[0] + py * v[1]
    eps = 1e-9
    inside = (along >= -eps) & (along <= depth + eps) & (np.abs(across) <= width / 2.0 + eps)
    cells = (rx[inside] * hr + ry[inside]).astype(np.int64)
    cells.flags.writeable = False
    return cells


def true_observe(world: WorldState, pose: Pose, action: SensingAction, net: KnowledgeNet,
                 rng: np.random.Generator) -> Observation:
    """
    Take a real reading at `pose` (the pose after the action's move).

    Remote: every ground-truth rock in the footprint, Z_c ~ P(Z_c | F_c true).
    Local: the cell's true B passed through the confusion matrix P(Y|B).
    """
    if action.sensor is Sensor.LOCAL:
        b = world.b_truth[pose.x, pose.y]
        reading = int(net.p_y_given_b.sample(np.array([b]), rng)[0])
        return LocalObservation(cell=(pose.x, pose.y), reading=reading)

    cells = footprint(pose, Sensor.REMOTE, world.config)
    idx = world.rocks_in(cells)
    if idx.size == 0:
        return RemoteObservation(footprint=cells)

    f_true = world._rock_f[idx]
    z = np.empty_like(f_true)
    for c, cpt in enumerate(net.p_z_given_f):
        z[:, c] = cpt.sample(f_true[:, c], rng)
    readings = tuple(
        RockReading(world.rocks[i].id, world.rocks[i].cell, tuple(int(v) for v in zr))
        for i, zr in zip(idx.tolist(), z)
    )
    return RemoteObservation(footprint=cells, rocks=readings)
