"""
Sensing Actions - pose kinematics, action space dan cost model
Shared by the mission executor and every planner.

Headings are compass directions in 45 degree steps: 0 = east (+x),
increasing clockwise with +y pointing south. Rotating +90 from east
therefore faces south.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Optional, Tuple
import sys
import os

import numpy as np

sys.path.append(os.path.dirname(os.path.dirname(__file__)))
from config.rover_config import COST_PRESETS, DEFAULT_ACTION_SPACE
from modules.errors import ConfigError, IllegalActionError, OutOfBoundsError

# (dx, dy) per heading, clockwise from east
HEADING_VECTORS: Tuple[Tuple[int, int], ...] = (
    (1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1)
)
N_HEADINGS = len(HEADING_VECTORS)
HEADING_NAMES = ('E', 'SE', 'S', 'SW', 'W', 'NW', 'N', 'NE')


class Move(Enum):
    FORWARD = 'forward'
    ROTATE_M90 = 'rotate-90'
    ROTATE_M45 = 'rotate-45'
    ROTATE_P45 = 'rotate+45'
    ROTATE_P90 = 'rotate+90'
    STEP_M45 = 'step-45'     # diagonal step, heading kept
    STEP_P45 = 'step+45'


class Sensor(Enum):
    REMOTE = 'remote'
    LOCAL = 'local'


# heading change in 45 degree units (positive = clockwise)
_TURNS: Dict[Move, int] = {
    Move.ROTATE_M90: -2,
    Move.ROTATE_M45: -1,
    Move.ROTATE_P45: 1,
    Move.ROTATE_P90: 2,
}

# translation direction relative to the current heading
_STEPS: Dict[Move, int] = {
    Move.FORWARD: 0,
    Move.STEP_M45: -1,
    Move.STEP_P45: 1,
}

ACTION_SPACE_MOVES: Dict[str, Tuple[Move, ...]] = {
    'sim': (Move.FORWARD, Move.ROTATE_M90, Move.ROTATE_M45, Move.ROTATE_P45, Move.ROTATE_P90),
    'hardware': (Move.FORWARD, Move.STEP_M45, Move.STEP_P45, Move.ROTATE_M90, Move.ROTATE_P90),
}

SENSORS: Tuple[Sensor, ...] = (Sensor.REMOTE, Sensor.LOCAL)


@dataclass(frozen=True)
class Pose:
    x: int
    y: int
    heading: int

    def __post_init__(self):
        if not 0 <= self.heading < N_HEADINGS:
            raise OutOfBoundsError(f"heading {self.heading} not in 0..{N_HEADINGS - 1}")

    @property
    def cell(self) -> Tuple[int, int]:
        return (self.x, self.y)

    def __str__(self) -> str:
        return f"({self.x},{self.y},{HEADING_NAMES[self.heading]})"


@dataclass(frozen=True)
class SensingAction:
    """A movement followed by one sensor reading."""
    move: Move
    sensor: Sensor

    @property
    def is_rotation(self) -> bool:
        return self.move in _TURNS

    @property
    def label(self) -> str:
        return f"{self.move.value}/{self.sensor.value}"

    @classmethod
    def from_label(cls, label: str) -> 'SensingAction':
        move, sensor = label.split('/')
        return cls(Move(move), Sensor(sensor))


@dataclass(frozen=True)
class CostModel:
    remote_cost: float
    local_cost: float

    def __post_init__(self):
        if self.remote_cost <= 0 or self.local_cost <= 0:
            raise ConfigError(f"sensor costs must be > 0, got {self.remote_cost}/{self.local_cost}")

    @classmethod
    def from_preset(cls, name: str) -> 'CostModel':
        if name not in COST_PRESETS:
            raise ConfigError(f"unknown cost preset '{name}' (known: {sorted(COST_PRESETS)})")
        preset = COST_PRESETS[name]
        return cls(remote_cost=preset['remote'], local_cost=preset['local'])


def action_space(name: str = DEFAULT_ACTION_SPACE) -> Tuple[SensingAction, ...]:
    """
    The ten sensing actions of an action space, in enumeration order
    (move-major, remote before local). Planner tie-breaks follow this order.
    """
    if name not in ACTION_SPACE_MOVES:
        raise ConfigError(f"unknown action space '{name}' (known: {sorted(ACTION_SPACE_MOVES)})")
    return _ACTIONS[name]


_ACTIONS: Dict[str, Tuple[SensingAction, ...]] = {
    name: tuple(SensingAction(m, s) for m in moves for s in SENSORS)
    for name, moves in ACTION_SPACE_MOVES.items()
}


def cost(action: SensingAction, model: CostModel) -> float:
    """Budget units consumed by an action. Movement is free."""
    if action.sensor is Sensor.REMOTE:
        return model.remote_cost
    return model.local_cost


def _target(pose: Pose, move: Move) -> Pose:
    if move in _TURNS:
        return Pose(pose.x, pose.y, (pose.heading + _TURNS[move]) % N_HEADINGS)
    dx, dy = HEADING_VECTORS[(pose.heading + _STEPS[move]) % N_HEADINGS]
    return Pose(pose.x + dx, pose.y + dy, pose.heading)


def is_move_feasible(pose: Pose, move: Move, bounds: Tuple[int, int],
                     obstacles: Optional[np.ndarray] = None) -> bool:
    """Rotations are always feasible; translations must stay on-grid and off obstacles."""
    if move in _TURNS:
        return True
    nxt = _target(pose, move)
    if not (0 <= nxt.x < bounds[0] and 0 <= nxt.y < bounds[1]):
        return False
    if obstacles is not None and obstacles[nxt.x, nxt.y]:
        return False
    return True


def apply_move(pose: Pose, action: SensingAction, bounds: Tuple[int, int],
               obstacles: Optional[np.ndarray] = None) -> Pose:
    """
    Execute the movement part of an action.

    Args:
        pose: Current pose
        action: Sensing action (only its move is used)
        bounds: (W_L, H_L) grid size
        obstacles: Optional boolean grid, True = blocked

    Returns:
        Pose after the move

    Raises:
        IllegalActionError: the move leaves the grid or enters an obstacle
    """
    if not is_move_feasible(pose, action.move, bounds, obstacles):
        raise IllegalActionError(f"{action.label} is illegal at {pose}")
    return _target(pose, action.move)


def legal_actions(pose: Pose, remaining: float, costs: CostModel, bounds: Tuple[int, int],
                  obstacles: Optional[np.ndarray] = None,
                  space: str = DEFAULT_ACTION_SPACE) -> List[SensingAction]:
    """All actions of the space whose move is feasible and whose cost fits the budget."""
    if remaining <= 0:
        return []
    feasible = {}
    legal = []
    for action in action_space(space):
        if cost(action, costs) > remaining:
            continue
        if action.move not in feasible:
            feasible[action.move] = is_move_feasible(pose, action.move, bounds, obstacles)
        if feasible[action.move]:
            legal.append(action)
    return legal
