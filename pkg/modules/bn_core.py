"""
Knowledge Network - Bayesian network per sel dengan spatial coupling
Node structure per cell: L -> R -> F_1..F_N -> Z_1..Z_N (camera) and
L -> B -> Y (UV / local sensor).

Evidence is kept as per-node log-messages so beliefs can be updated
recursively without storing observation history. A reading on a rock (or on
a cell's B node) sends its message to every L cell within the coupling
radius, raised to the normalized Gaussian weight of that cell.
"""

import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple, Union
import sys
import os

import numpy as np
from scipy import special, stats

sys.path.append(os.path.dirname(os.path.dirname(__file__)))
from config.rover_config import (
    DEFAULT_CARDINALITY, DEFAULT_COUPLING, DEFAULT_CPT_DIAGONAL,
    DEFAULT_FEATURE_CHANNELS, NORMALIZATION_TOL, PROB_FLOOR, ROCK_DENSITY
)
from modules.errors import ConfigError, InvalidDistributionError, OutOfBoundsError
from modules.sensing import Pose, SensingAction, Sensor
from utils import load_json, save_json

logger = logging.getLogger(__name__)

LN2 = float(np.log(2.0))


# ==========================================
# DISTRIBUTIONS
# ==========================================
def validate_probs(probs: np.ndarray, what: str = 'distribution') -> None:
    """Raise InvalidDistributionError unless probs is a normalized vector with K >= 2."""
    if probs.ndim != 1 or probs.size < 2:
        raise InvalidDistributionError(f"{what} must be a vector with at least 2 classes, got shape {probs.shape}")
    if not np.all(np.isfinite(probs)) or np.any(probs < 0):
        raise InvalidDistributionError(f"{what} has negative or non-finite entries: {probs}")
    total = probs.sum()
    if abs(total - 1.0) > NORMALIZATION_TOL:
        raise InvalidDistributionError(f"{what} sums to {total!r}, not 1")


class Categorical:
    """Normalized probability vector over K discrete classes."""

    __slots__ = ('probs',)

    def __init__(self, probs: Sequence[float]):
        arr = np.array(probs, dtype=float)
        validate_probs(arr)
        arr.flags.writeable = False
        self.probs = arr

    @classmethod
    def uniform(cls, k: int) -> 'Categorical':
        return cls(np.full(k, 1.0 / k))

    @property
    def k(self) -> int:
        return int(self.probs.size)

    def sample(self, rng: np.random.Generator) -> int:
        return int(sample_rows(self.probs[None, :], rng)[0])

    def __repr__(self) -> str:
        return f"Categorical({np.array2string(self.probs, precision=4)})"


def _as_probs(dist: Union[Categorical, Sequence[float], np.ndarray]) -> np.ndarray:
    if isinstance(dist, Categorical):
        return dist.probs
    arr = np.asarray(dist, dtype=float)
    validate_probs(arr)
    return arr


def normalize(p: np.ndarray) -> np.ndarray:
    """Normalize along the last axis with the probability floor applied."""
    p = p / p.sum(axis=-1, keepdims=True)
    p = np.maximum(p, PROB_FLOOR)
    return p / p.sum(axis=-1, keepdims=True)


def normalize_log(logp: np.ndarray) -> np.ndarray:
    """Softmax along the last axis, floored like normalize()."""
    p = np.exp(logp - logp.max(axis=-1, keepdims=True))
    return normalize(p)


def sample_rows(probs: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """One categorical draw per row of an (n, K) probability matrix."""
    cdf = np.cumsum(probs, axis=-1)
    u = rng.random(probs.shape[:-1])[..., None] * cdf[..., -1:]
    return np.minimum((cdf < u).sum(axis=-1), probs.shape[-1] - 1)


def entropy(dist: Union[Categorical, Sequence[float], np.ndarray]) -> float:
    """
    Shannon entropy in bits, with 0 log 0 = 0.

    Raises:
        InvalidDistributionError: input is not a normalized vector
    """
    return float(stats.entropy(_as_probs(dist), base=2))


def grid_entropy(probs: np.ndarray) -> np.ndarray:
    """Per-cell entropy in bits of an (..., K) probability array."""
    return special.entr(probs).sum(axis=-1) / LN2


# ==========================================
# CONDITIONAL PROBABILITY TABLES
# ==========================================
@dataclass(frozen=True, eq=False)
class Cpt:
    """table[parent_class] is the distribution over child classes."""
    table: np.ndarray

    def __post_init__(self):
        arr = np.array(self.table, dtype=float)
        if arr.ndim != 2:
            raise InvalidDistributionError(f"CPT must be a matrix, got shape {arr.shape}")
        for i, row in enumerate(arr):
            validate_probs(row, what=f"CPT row {i}")
        arr.flags.writeable = False
        object.__setattr__(self, 'table', arr)

    @property
    def n_parent(self) -> int:
        return self.table.shape[0]

    @property
    def n_child(self) -> int:
        return self.table.shape[1]

    def row(self, parent: int) -> Categorical:
        return Categorical(self.table[parent])

    def sample(self, parents: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """Child draws for an array of parent classes."""
        return sample_rows(self.table[np.asarray(parents, dtype=int)], rng)

    def to_list(self) -> List[List[float]]:
        return self.table.tolist()

    @classmethod
    def identity(cls, k: int) -> 'Cpt':
        return cls(np.eye(k))

    @classmethod
    def uniform(cls, n_parent: int, n_child: int) -> 'Cpt':
        return cls(np.full((n_parent, n_child), 1.0 / n_child))

    @classmethod
    def diagonal(cls, k: int, p_diag: float = DEFAULT_CPT_DIAGONAL) -> 'Cpt':
        """p_diag on the diagonal, the rest spread evenly (0.7 / 0.15 / 0.15 for k = 3)."""
        off = (1.0 - p_diag) / (k - 1)
        table = np.full((k, k), off)
        np.fill_diagonal(table, p_diag)
        return cls(table)


# ==========================================
# SPATIAL COUPLING
# ==========================================
@dataclass(frozen=True)
class SpatialCoupling:
    sigma: float = DEFAULT_COUPLING['sigma']
    radius: int = DEFAULT_COUPLING['radius']

    def __post_init__(self):
        if not self.sigma > 0:
            raise ConfigError(f"coupling sigma must be > 0, got {self.sigma}")
        if int(self.radius) != self.radius or self.radius < 0:
            raise ConfigError(f"coupling radius must be an integer >= 0, got {self.radius}")


class CouplingWindow(NamedTuple):
    xs: np.ndarray
    ys: np.ndarray
    weights: np.ndarray
    self_weight: float


@lru_cache(maxsize=None)
def coupling_window(x: int, y: int, shape: Tuple[int, int], coupling: SpatialCoupling) -> CouplingWindow:
    """
    L cells within Euclidean distance `radius` of (x, y), clipped to the grid,
    with Gaussian weights exp(-d^2 / 2 sigma^2) normalized over the kept cells.
    """
    r = int(coupling.radius)
    offsets = np.arange(-r, r + 1)
    dx, dy = np.meshgrid(offsets, offsets, indexing='ij')
    dx, dy = dx.ravel(), dy.ravel()
    d2 = dx * dx + dy * dy
    xs, ys = x + dx, y + dy
    keep = (d2 <= r * r) & (xs >= 0) & (xs < shape[0]) & (ys >= 0) & (ys < shape[1])
    xs, ys, d2 = xs[keep], ys[keep], d2[keep]
    weights = np.exp(-d2 / (2.0 * coupling.sigma ** 2))
    weights = weights / weights.sum()
    for arr in (xs, ys, weights):
        arr.flags.writeable = False
    return CouplingWindow(xs, ys, weights, float(weights[d2 == 0][0]))


@lru_cache(maxsize=16)
def self_weight_grid(shape: Tuple[int, int], coupling: SpatialCoupling) -> np.ndarray:
    """Weight each cell gives itself; differs from the interior value near edges."""
    grid = np.empty(shape)
    for x in range(shape[0]):
        for y in range(shape[1]):
            grid[x, y] = coupling_window(x, y, shape, coupling).self_weight
    grid.flags.writeable = False
    return grid


@dataclass(frozen=True)
class RockDensityPrior:
    """Rock count for an unseen footprint region covering `fraction` of an L cell."""
    rate: float = ROCK_DENSITY['rate']
    kind: str = ROCK_DENSITY['kind']

    def __post_init__(self):
        if self.rate < 0:
            raise ConfigError(f"rock density must be >= 0, got {self.rate}")
        if self.kind not in ('poisson', 'fixed'):
            raise ConfigError(f"rock density kind must be 'poisson' or 'fixed', got '{self.kind}'")

    def sample_count(self, fraction: float, rng: np.random.Generator) -> int:
        mean = self.rate * fraction
        if self.kind == 'fixed':
            return int(round(mean))
        return int(rng.poisson(mean))


# ==========================================
# KNOWLEDGE NETWORK
# ==========================================
@dataclass(eq=False)
class KnowledgeNet:
    """
    The scientist's prior: CPT bundle plus spatial coupling.

    Feature channels are conditionally independent given R; channel c has
    P(F_c|R) = p_f_given_r[c] and camera model P(Z_c|F_c) = p_z_given_f[c].
    p_y_given_b is the local-sensor confusion matrix (identity = direct reading).
    """
    p_f_given_r: List[Cpt]
    p_z_given_f: List[Cpt]
    p_r_given_l: Cpt
    p_b_given_l: Cpt
    coupling: SpatialCoupling = field(default_factory=SpatialCoupling)
    p_y_given_b: Optional[Cpt] = None
    l_prior: Optional[Categorical] = None

    def __post_init__(self):
        if self.p_y_given_b is None:
            self.p_y_given_b = Cpt.identity(self.p_b_given_l.n_child)
        if self.l_prior is None:
            self.l_prior = Categorical.uniform(self.p_r_given_l.n_parent)
        self._validate()
        # per-channel R x Z likelihood table: sum_F P(F|R) P(Z|F)
        self._channel_lik = [f.table @ z.table for f, z in zip(self.p_f_given_r, self.p_z_given_f)]

    def _validate(self):
        n_l, n_r = self.p_r_given_l.table.shape
        if not self.p_f_given_r or len(self.p_f_given_r) != len(self.p_z_given_f):
            raise ConfigError("need one P(F|R) and one P(Z|F) per feature channel")
        if self.p_b_given_l.n_parent != n_l:
            raise ConfigError(f"P(B|L) has {self.p_b_given_l.n_parent} rows, |L| = {n_l}")
        if self.l_prior.k != n_l:
            raise ConfigError(f"L prior has {self.l_prior.k} classes, |L| = {n_l}")
        if self.p_y_given_b.n_parent != self.p_b_given_l.n_child:
            raise ConfigError("P(Y|B) rows must match |B|")
        n_f, n_z = self.p_f_given_r[0].n_child, self.p_z_given_f[0].n_child
        for c, (pf, pz) in enumerate(zip(self.p_f_given_r, self.p_z_given_f)):
            if pf.n_parent != n_r:
                raise ConfigError(f"P(F|R) channel {c} has {pf.n_parent} rows, |R| = {n_r}")
            if pf.n_child != n_f or pz.n_parent != n_f or pz.n_child != n_z:
                raise ConfigError(f"feature channel {c} cardinalities disagree with channel 0")

    @property
    def cardinalities(self) -> Tuple[int, int, int, int, int]:
        """(|L|, |R|, |F|, |Z|, |B|)"""
        return (self.p_r_given_l.n_parent, self.p_r_given_l.n_child,
                self.p_f_given_r[0].n_child, self.p_z_given_f[0].n_child,
                self.p_b_given_l.n_child)

    @property
    def n_channels(self) -> int:
        return len(self.p_f_given_r)

    def rock_likelihood(self, z: Sequence[int]) -> np.ndarray:
        """prod_c sum_F P(Z_c = z_c | F) P(F | R), as a vector over R."""
        if len(z) != self.n_channels:
            raise InvalidDistributionError(f"expected {self.n_channels} Z values, got {len(z)}")
        lik = np.ones(self.p_r_given_l.n_child)
        for table, value in zip(self._channel_lik, z):
            lik = lik * table[:, int(value)]
        return lik

    def local_likelihood(self, reading: int) -> np.ndarray:
        """P(Y = reading | B) as a vector over B."""
        return self.p_y_given_b.table[:, int(reading)]

    # ------------------------------------------
    # persistence
    # ------------------------------------------
    def to_dict(self) -> Dict:
        n_l, n_r, n_f, n_z, n_b = self.cardinalities
        return {
            'cardinalities': {'L': n_l, 'R': n_r, 'F': n_f, 'Z': n_z, 'B': n_b},
            'n_channels': self.n_channels,
            'p_r_given_l': self.p_r_given_l.to_list(),
            'p_b_given_l': self.p_b_given_l.to_list(),
            'p_f_given_r': [c.to_list() for c in self.p_f_given_r],
            'p_z_given_f': [c.to_list() for c in self.p_z_given_f],
            'p_y_given_b': self.p_y_given_b.to_list(),
            'l_prior': self.l_prior.probs.tolist(),
            'coupling': {'sigma': self.coupling.sigma, 'radius': self.coupling.radius},
        }

    @classmethod
    def from_dict(cls, doc: Dict) -> 'KnowledgeNet':
        try:
            coupling = doc.get('coupling', DEFAULT_COUPLING)
            net = cls(
                p_f_given_r=[Cpt(t) for t in doc['p_f_given_r']],
                p_z_given_f=[Cpt(t) for t in doc['p_z_given_f']],
                p_r_given_l=Cpt(doc['p_r_given_l']),
                p_b_given_l=Cpt(doc['p_b_given_l']),
                coupling=SpatialCoupling(float(coupling['sigma']), int(coupling['radius'])),
                p_y_given_b=Cpt(doc['p_y_given_b']) if doc.get('p_y_given_b') is not None else None,
                l_prior=Categorical(doc['l_prior']) if doc.get('l_prior') is not None else None,
            )
        except KeyError as e:
            raise ConfigError(f"knowledge net document is missing {e}") from e
        except InvalidDistributionError as e:
            raise ConfigError(f"knowledge net document is invalid: {e}") from e

        declared = doc.get('cardinalities')
        if declared is not None:
            expected = dict(zip('LRFZB', net.cardinalities))
            if {k: int(v) for k, v in declared.items()} != expected:
                raise ConfigError(f"declared cardinalities {declared} disagree with CPTs {expected}")
        return net

    def save(self, path: str) -> None:
        save_json(self.to_dict(), path)
        logger.info(f"✅ Knowledge net saved: {path}")

    @classmethod
    def load(cls, path: str) -> 'KnowledgeNet':
        return cls.from_dict(load_json(path))


def default_net(k: int = DEFAULT_CARDINALITY, channels: int = DEFAULT_FEATURE_CHANNELS,
                p_diag: float = DEFAULT_CPT_DIAGONAL,
                coupling: Optional[SpatialCoupling] = None) -> KnowledgeNet:
    """Diagonal-dominant network used when no knowledge document is supplied."""
    return KnowledgeNet(
        p_f_given_r=[Cpt.diagonal(k, p_diag) for _ in range(channels)],
        p_z_given_f=[Cpt.diagonal(k, p_diag) for _ in range(channels)],
        p_r_given_l=Cpt.diagonal(k, p_diag),
        p_b_given_l=Cpt.diagonal(k, p_diag),
        coupling=coupling or SpatialCoupling(),
    )


# ==========================================
# GRID & OBSERVATIONS
# ==========================================
@dataclass(frozen=True)
class GridSpec:
    l_shape: Tuple[int, int]
    rock_shape: Tuple[int, int]

    @property
    def scale(self) -> int:
        """Rock cells per L cell along each axis."""
        return self.rock_shape[0] // self.l_shape[0]

    @property
    def n_cells(self) -> int:
        return self.l_shape[0] * self.l_shape[1]

    @property
    def n_rock_cells(self) -> int:
        return self.rock_shape[0] * self.rock_shape[1]

    def rock_to_l(self, rx: int, ry: int) -> Tuple[int, int]:
        return (rx // self.scale, ry // self.scale)

    def rock_index(self, rx: int, ry: int) -> int:
        return rx * self.rock_shape[1] + ry


@dataclass(frozen=True)
class RockReading:
    rock_id: int
    cell: Tuple[int, int]     # rock-grid cell
    z: Tuple[int, ...]        # one camera reading per feature channel


@dataclass(frozen=True, eq=False)
class RemoteObservation:
    footprint: np.ndarray     # linear rock-cell indices viewed
    rocks: Tuple[RockReading, ...] = ()

    @property
    def empty(self) -> bool:
        return not self.rocks


@dataclass(frozen=True)
class LocalObservation:
    cell: Tuple[int, int]     # L cell
    reading: int


Observation = Union[RemoteObservation, LocalObservation]


# ==========================================
# BELIEF STATE
# ==========================================
@dataclass(eq=False)
class BeliefState:
    """
    Per-cell posterior marginals over L and B, plus R for detected rocks.

    Arrays are indexed [x, y, class]. Rock-level entries (likelihoods,
    messages) are replaced, never mutated, so copy() can share them.
    """
    grid: GridSpec
    l_log_prior: np.ndarray
    l_log_evidence: np.ndarray
    l_belief: np.ndarray
    b_lik: np.ndarray
    b_logmsg: np.ndarray
    b_belief: np.ndarray
    seen: np.ndarray                                   # flat bool over rock cells
    rock_lik: Dict[int, np.ndarray] = field(default_factory=dict)
    rock_logmsg: Dict[int, np.ndarray] = field(default_factory=dict)
    rock_cell: Dict[int, Tuple[int, int]] = field(default_factory=dict)
    rock_lin: Dict[int, int] = field(default_factory=dict)
    rocks_by_cell: Dict[Tuple[int, int], Tuple[int, ...]] = field(default_factory=dict)
    rock_beliefs: Dict[int, Categorical] = field(default_factory=dict)
    next_virtual_id: int = -1

    @classmethod
    def uniform(cls, grid: GridSpec, net: KnowledgeNet) -> 'BeliefState':
        """Prior belief: L from the net's L prior (uniform by default), B predictive from P(B|L)."""
        n_l, _, _, _, n_b = net.cardinalities
        shape = grid.l_shape
        log_prior = np.broadcast_to(np.log(np.maximum(net.l_prior.probs, PROB_FLOOR)), shape + (n_l,)).copy()
        l_belief = normalize_log(log_prior)
        b_belief = normalize(l_belief @ net.p_b_given_l.table)
        return cls(
            grid=grid,
            l_log_prior=log_prior,
            l_log_evidence=np.zeros(shape + (n_l,)),
            l_belief=l_belief,
            b_lik=np.ones(shape + (n_b,)),
            b_logmsg=np.zeros(shape + (n_l,)),
            b_belief=b_belief,
            seen=np.zeros(grid.n_rock_cells, dtype=bool),
        )

    def copy(self) -> 'BeliefState':
        return BeliefState(
            grid=self.grid,
            l_log_prior=self.l_log_prior,       # never written after construction
            l_log_evidence=self.l_log_evidence.copy(),
            l_belief=self.l_belief.copy(),
            b_lik=self.b_lik.copy(),
            b_logmsg=self.b_logmsg.copy(),
            b_belief=self.b_belief.copy(),
            seen=self.seen.copy(),
            rock_lik=dict(self.rock_lik),
            rock_logmsg=dict(self.rock_logmsg),
            rock_cell=dict(self.rock_cell),
            rock_lin=dict(self.rock_lin),
            rocks_by_cell=dict(self.rocks_by_cell),
            rock_beliefs=dict(self.rock_beliefs),
            next_virtual_id=self.next_virtual_id,
        )

    @property
    def n_rocks(self) -> int:
        return len(self.rock_lik)

    def log_posterior(self, x: int, y: int) -> np.ndarray:
        return self.l_log_prior[x, y] + self.l_log_evidence[x, y]


def _check_cell(grid: GridSpec, x: int, y: int):
    if not (0 <= x < grid.l_shape[0] and 0 <= y < grid.l_shape[1]):
        raise OutOfBoundsError(f"L cell ({x},{y}) outside grid {grid.l_shape}")


def _send_message(state: BeliefState, x: int, y: int, delta_log: np.ndarray,
                  coupling: SpatialCoupling) -> CouplingWindow:
    """Add a weighted log-message change to the L cells around (x, y)."""
    win = coupling_window(x, y, state.grid.l_shape, coupling)
    state.l_log_evidence[win.xs, win.ys] += win.weights[:, None] * delta_log[None, :]
    state.l_belief[win.xs, win.ys] = normalize_log(
        state.l_log_prior[win.xs, win.ys] + state.l_log_evidence[win.xs, win.ys])
    return win


def rock_posterior(state: BeliefState, rock_id: int, net: KnowledgeNet) -> np.ndarray:
    """
    R marginal of a detected rock: its accumulated likelihood times the R
    prior implied by its cell's L belief with the rock's own message removed.
    """
    x, y = state.rock_cell[rock_id]
    w_self = coupling_window(x, y, state.grid.l_shape, net.coupling).self_weight
    cavity = normalize_log(state.log_posterior(x, y) - w_self * state.rock_logmsg[rock_id])
    return normalize((cavity @ net.p_r_given_l.table) * state.rock_lik[rock_id])


def b_posterior(state: BeliefState, x: int, y: int, net: KnowledgeNet) -> np.ndarray:
    """B marginal of one cell, computed the same way as rock_posterior."""
    w_self = coupling_window(x, y, state.grid.l_shape, net.coupling).self_weight
    cavity = normalize_log(state.log_posterior(x, y) - w_self * state.b_logmsg[x, y])
    return normalize((cavity @ net.p_b_given_l.table) * state.b_lik[x, y])


def _refresh_marginals(state: BeliefState, windows: List[CouplingWindow], net: KnowledgeNet) -> None:
    """Recompute B and rock marginals for every cell whose L belief changed."""
    if not windows:
        return
    shape = state.grid.l_shape
    flat = np.unique(np.concatenate([w.xs * shape[1] + w.ys for w in windows]))
    xs, ys = np.divmod(flat, shape[1])

    w_self = self_weight_grid(shape, net.coupling)[xs, ys]
    log_cav = state.l_log_prior[xs, ys] + state.l_log_evidence[xs, ys] - w_self[:, None] * state.b_logmsg[xs, ys]
    state.b_belief[xs, ys] = normalize((normalize_log(log_cav) @ net.p_b_given_l.table) * state.b_lik[xs, ys])

    for x, y in zip(xs.tolist(), ys.tolist()):
        for rock_id in state.rocks_by_cell.get((x, y), ()):
            state.rock_beliefs[rock_id] = Categorical(rock_posterior(state, rock_id, net))


def _absorb_rock(state: BeliefState, reading: RockReading, net: KnowledgeNet) -> CouplingWindow:
    grid = state.grid
    rx, ry = reading.cell
    if not (0 <= rx < grid.rock_shape[0] and 0 <= ry < grid.rock_shape[1]):
        raise OutOfBoundsError(f"rock cell ({rx},{ry}) outside rock grid {grid.rock_shape}")
    x, y = grid.rock_to_l(rx, ry)

    rock_id = reading.rock_id
    lik = np.maximum(net.rock_likelihood(reading.z), PROB_FLOOR)
    previous = state.rock_lik.get(rock_id)
    if previous is None:
        old_log = np.zeros(net.cardinalities[0])
        state.rock_cell[rock_id] = (x, y)
        state.rock_lin[rock_id] = grid.rock_index(rx, ry)
        state.rocks_by_cell[(x, y)] = state.rocks_by_cell.get((x, y), ()) + (rock_id,)
        if rock_id <= state.next_virtual_id:
            state.next_virtual_id = rock_id - 1
    else:
        lik = previous * lik
        old_log = state.rock_logmsg[rock_id]
        x, y = state.rock_cell[rock_id]
    lik = np.maximum(lik / lik.max(), PROB_FLOOR)
    new_log = np.log(np.maximum(net.p_r_given_l.table @ lik, PROB_FLOOR))

    win = _send_message(state, x, y, new_log - old_log, net.coupling)
    state.rock_lik[rock_id] = lik
    state.rock_logmsg[rock_id] = new_log
    return win


def update_remote(belief: BeliefState, obs: RemoteObservation, net: KnowledgeNet,
                  inplace: bool = False, refresh: bool = True) -> BeliefState:
    """
    Absorb a camera observation.

    Each rock reading updates that rock's R likelihood and sends the
    message sum_R lik(R) P(R|L) to the L cells around the rock's L cell,
    weighted by the Gaussian coupling. The footprint is marked as seen.

    Args:
        belief: Current belief (copied unless inplace)
        obs: Remote observation
        net: Knowledge network
        inplace: Update `belief` itself instead of a copy
        refresh: Recompute B and rock marginals (rollouts skip this)

    Returns:
        Updated belief

    Raises:
        OutOfBoundsError: footprint or rock cell off the rock grid
    """
    state = belief if inplace else belief.copy()
    footprint = np.asarray(obs.footprint, dtype=np.int64)
    if footprint.size and (footprint.min() < 0 or footprint.max() >= state.grid.n_rock_cells):
        raise OutOfBoundsError("remote footprint references cells outside the rock grid")
    state.seen[footprint] = True

    windows = [_absorb_rock(state, reading, net) for reading in obs.rocks]
    if refresh:
        _refresh_marginals(state, windows, net)
    return state


def update_local(belief: BeliefState, obs: LocalObservation, net: KnowledgeNet,
                 inplace: bool = False, refresh: bool = True) -> BeliefState:
    """
    Absorb a UV (local sensor) reading at one L cell: the cell's B likelihood
    is multiplied by P(Y = reading | B) and the message sum_B lik(B) P(B|L)
    is spread over the coupled L cells like a rock message.

    Raises:
        OutOfBoundsError: cell off the grid
    """
    state = belief if inplace else belief.copy()
    x, y = obs.cell
    _check_cell(state.grid, x, y)
    if not 0 <= obs.reading < net.p_y_given_b.n_child:
        raise OutOfBoundsError(f"local reading {obs.reading} outside 0..{net.p_y_given_b.n_child - 1}")

    lik = state.b_lik[x, y] * net.local_likelihood(obs.reading)
    lik = np.maximum(lik / lik.max(), PROB_FLOOR)
    new_log = np.log(np.maximum(net.p_b_given_l.table @ lik, PROB_FLOOR))

    win = _send_message(state, x, y, new_log - state.b_logmsg[x, y], net.coupling)
    state.b_lik[x, y] = lik
    state.b_logmsg[x, y] = new_log
    if refresh:
        _refresh_marginals(state, [win], net)
    return state


def update_belief(belief: BeliefState, obs: Observation, net: KnowledgeNet,
                  inplace: bool = False, refresh: bool = True) -> BeliefState:
    """Dispatch on observation type."""
    if isinstance(obs, LocalObservation):
        return update_local(belief, obs, net, inplace=inplace, refresh=refresh)
    return update_remote(belief, obs, net, inplace=inplace, refresh=refresh)


def joint_l_entropy(belief: BeliefState) -> float:
    """Sum of the per-cell L marginal entropies, in bits."""
    return float(special.entr(belief.l_belief).sum() / LN2)


# ==========================================
# OBSERVATION SAMPLING (rollouts / greedy)
# ==========================================
def _sample_features(rocks_r: np.ndarray, net: KnowledgeNet, rng: np.random.Generator) -> np.ndarray:
    """Z readings (n_rocks x n_channels) drawn forward through P(F|R) and P(Z|F)."""
    z = np.empty((rocks_r.size, net.n_channels), dtype=int)
    for c in range(net.n_channels):
        f = net.p_f_given_r[c].sample(rocks_r, rng)
        z[:, c] = net.p_z_given_f[c].sample(f, rng)
    return z


def sample_observation(belief: BeliefState, action: SensingAction, net: KnowledgeNet,
                       density: RockDensityPrior, rng: np.random.Generator,
                       pose: Pose, footprint: Optional[np.ndarray] = None) -> Observation:
    """
    Draw an observation the robot could receive from `action` fired at `pose`.

    Local: B is drawn from the cell's B marginal (L from l_belief then
    B ~ P(B|L) when the cell is unread), then passed through P(Y|B).
    Remote: per L cell under the footprint, detected rocks in view are
    re-read from their R belief; unseen rock cells get a density-prior number
    of new (virtual, negative-id) rocks whose R follows one sampled L class.

    Args:
        belief: Belief to sample from (not modified)
        action: Sensing action
        net: Knowledge network
        density: Rock-count prior for unseen regions
        rng: Random generator
        pose: Pose at which the sensor fires (after the move)
        footprint: Linear rock-cell indices viewed (remote only)

    Returns:
        RemoteObservation or LocalObservation
    """
    grid = belief.grid
    if action.sensor is Sensor.LOCAL:
        _check_cell(grid, pose.x, pose.y)
        b = sample_rows(b_posterior(belief, pose.x, pose.y, net)[None, :], rng)[0]
        reading = int(net.p_y_given_b.sample(np.array([b]), rng)[0])
        return LocalObservation(cell=(pose.x, pose.y), reading=reading)

    footprint = np.asarray(footprint if footprint is not None else (), dtype=np.int64)
    if footprint.size == 0:
        return RemoteObservation(footprint=footprint)

    scale, h_rock, h_l = grid.scale, grid.rock_shape[1], grid.l_shape[1]
    rx, ry = np.divmod(footprint, h_rock)
    l_flat = (rx // scale) * h_l + (ry // scale)
    next_id = belief.next_virtual_id
    readings: List[RockReading] = []

    for lc in np.unique(l_flat).tolist():
        x, y = divmod(lc, h_l)
        cells = footprint[l_flat == lc]

        known = belief.rocks_by_cell.get((x, y), ())
        if known:
            lins = np.fromiter((belief.rock_lin[r] for r in known), dtype=np.int64, count=len(known))
            in_view = [r for r, hit in zip(known, np.isin(lins, cells)) if hit]
            if in_view:
                post = np.stack([rock_posterior(belief, r, net) for r in in_view])
                z = _sample_features(sample_rows(post, rng), net, rng)
                for r, zr in zip(in_view, z):
                    readings.append(RockReading(r, divmod(belief.rock_lin[r], h_rock), tuple(zr.tolist())))

        unseen = cells[~belief.seen[cells]]
        if unseen.size == 0:
            continue
        n_new = min(density.sample_count(unseen.size / scale ** 2, rng), unseen.size)
        if n_new == 0:
            continue
        l_class = sample_rows(belief.l_belief[x, y][None, :], rng)[0]
        positions = rng.choice(unseen, size=n_new, replace=False)
        r_new = net.p_r_given_l.sample(np.full(n_new, l_class), rng)
        z = _sample_features(r_new, net, rng)
        for pos, zr in zip(positions.tolist(), z):
            readings.append(RockReading(next_id, divmod(pos, h_rock), tuple(zr.tolist())))
            next_id -= 1

    return RemoteObservation(footprint=footprint, rocks=tuple(readings))
