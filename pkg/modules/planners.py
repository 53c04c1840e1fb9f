"""
Sensing Planners - MCTS (UCT) dan baseline policies
Budget-constrained selection of movement + sensor actions that maximize the
expected entropy reduction of the location-class (L) belief.

Policies: 'mcts', 'greedy', 'random', 'fixed'. All share one interface
(Policy.plan) so the mission executor can swap them by name.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple
import sys
import os

import numpy as np

sys.path.append(os.path.dirname(os.path.dirname(__file__)))
from config.rover_config import DEFAULT_ACTION_SPACE, FIRE_ON_ROTATE, PLANNER_DEFAULTS, POLICY_NAMES
from modules.bn_core import (
    BeliefState, KnowledgeNet, RockDensityPrior, joint_l_entropy,
    sample_observation, update_belief
)
from modules.errors import ConfigError, NoLegalActionError, TreeConsistencyError
from modules.sensing import (
    CostModel, Move, Pose, SensingAction, Sensor, action_space, apply_move,
    cost, legal_actions
)
from modules.world import WorldConfig, footprint

logger = logging.getLogger(__name__)

# gains closer than this (bits per budget unit) count as ties
GAIN_TIE_TOL = 1e-6

# Fixed policy cycle: look left, look ahead, look right, UV in place, step forward
FIXED_STAGES: Tuple[SensingAction, ...] = (
    SensingAction(Move.ROTATE_M90, Sensor.REMOTE),
    SensingAction(Move.ROTATE_P90, Sensor.REMOTE),
    SensingAction(Move.ROTATE_P90, Sensor.REMOTE),
    SensingAction(Move.ROTATE_M90, Sensor.LOCAL),
    SensingAction(Move.FORWARD, Sensor.REMOTE),
)


@dataclass(frozen=True)
class PlannerConfig:
    iterations: int = PLANNER_DEFAULTS['iterations']
    cp: float = PLANNER_DEFAULTS['cp']
    greedy_samples: int = PLANNER_DEFAULTS['greedy_samples']
    log_base: str = PLANNER_DEFAULTS['log_base']

    def __post_init__(self):
        if self.iterations < 1:
            raise ConfigError(f"iterations must be >= 1, got {self.iterations}")
        if self.cp < 0:
            raise ConfigError(f"cp must be >= 0, got {self.cp}")
        if self.greedy_samples < 1:
            raise ConfigError(f"greedy_samples must be >= 1, got {self.greedy_samples}")
        if self.log_base not in ('e', '2'):
            raise ConfigError(f"log_base must be 'e' or '2', got '{self.log_base}'")


@dataclass(eq=False)
class PlanningContext:
    """Everything a planner needs besides the belief: model, geometry and costs."""
    net: KnowledgeNet
    world: WorldConfig
    costs: CostModel
    obstacles: Optional[np.ndarray] = None
    space: str = DEFAULT_ACTION_SPACE
    fire_on_rotate: bool = FIRE_ON_ROTATE
    density: Optional[RockDensityPrior] = None
    actions: Tuple[SensingAction, ...] = field(init=False)
    index_of: Dict[SensingAction, int] = field(init=False)

    def __post_init__(self):
        if self.density is None:
            self.density = self.world.density
        self.actions = action_space(self.space)
        self.index_of = {a: i for i, a in enumerate(self.actions)}

    @property
    def bounds(self) -> Tuple[int, int]:
        return self.world.l_grid

    def legal(self, pose: Pose, remaining: float) -> List[SensingAction]:
        return legal_actions(pose, remaining, self.costs, self.bounds, self.obstacles, self.space)

    def move(self, pose: Pose, action: SensingAction) -> Pose:
        return apply_move(pose, action, self.bounds, self.obstacles)

    def fires(self, action: SensingAction) -> bool:
        return self.fire_on_rotate or not action.is_rotation


def simulate_step(belief: BeliefState, pose: Pose, action: SensingAction, ctx: PlanningContext,
                  rng: np.random.Generator, refresh: bool = False) -> Pose:
    """Move, sample an observation from the belief and absorb it in place."""
    new_pose = ctx.move(pose, action)
    if not ctx.fires(action):
        return new_pose
    cells = footprint(new_pose, Sensor.REMOTE, ctx.world) if action.sensor is Sensor.REMOTE else None
    obs = sample_observation(belief, action, ctx.net, ctx.density, rng, new_pose, cells)
    update_belief(belief, obs, ctx.net, inplace=True, refresh=refresh)
    return new_pose


# ==========================================
# MCTS
# ==========================================
class MctsNode:
    """Open-loop search node: the pose and remaining budget after `action`."""

    __slots__ = ('pose', 'action', 'action_index', 'remaining', 'parent',
                 'children', 'untried', 'visits', 'total_reward', 'clamped')

    def __init__(self, pose: Pose, remaining: float, untried: List[int],
                 action: Optional[SensingAction] = None, action_index: int = -1,
                 parent: Optional['MctsNode'] = None):
        self.pose = pose
        self.action = action
        self.action_index = action_index
        self.remaining = remaining
        self.parent = parent
        self.children: Dict[int, 'MctsNode'] = {}
        self.untried = untried
        self.visits = 0
        self.total_reward = 0.0
        # rollouts whose reward left [0, 1]; only counted on the root
        self.clamped = 0

    @property
    def mean_reward(self) -> float:
        return self.total_reward / self.visits if self.visits else 0.0

    @property
    def is_terminal(self) -> bool:
        return not self.untried and not self.children

    def path(self) -> List[SensingAction]:
        """Actions from the root down to this node."""
        actions = []
        node = self
        while node.parent is not None:
            actions.append(node.action)
            node = node.parent
        return actions[::-1]

    def update(self, reward: float) -> None:
        self.visits += 1
        self.total_reward += reward

    def __repr__(self) -> str:
        label = self.action.label if self.action else 'root'
        return f"MctsNode({label}, n={self.visits}, R={self.mean_reward:.4f}, rem={self.remaining})"


def ucb(node: MctsNode, parent_visits: int, cp: float, log_base: str = 'e') -> float:
    """
    UCB_i = R_i + cp * sqrt(2 log N / n_i); unvisited children rank first.

    Raises:
        TreeConsistencyError: parent visits below child visits
    """
    if parent_visits < node.visits:
        raise TreeConsistencyError(f"parent visits {parent_visits} < child visits {node.visits}")
    if node.visits == 0:
        return math.inf
    log_n = math.log2(parent_visits) if log_base == '2' else math.log(parent_visits)
    return node.mean_reward + cp * math.sqrt(2.0 * log_n / node.visits)


def _select_child(node: MctsNode, cp: float, log_base: str) -> MctsNode:
    best, best_score = None, -math.inf
    for idx in sorted(node.children):
        child = node.children[idx]
        score = ucb(child, node.visits, cp, log_base)
        if score > best_score:
            best, best_score = child, score
    return best


def _expand(node: MctsNode, ctx: PlanningContext, rng: np.random.Generator) -> MctsNode:
    idx = node.untried.pop(int(rng.integers(len(node.untried))))
    action = ctx.actions[idx]
    pose = ctx.move(node.pose, action)
    remaining = node.remaining - cost(action, ctx.costs)
    untried = [ctx.index_of[a] for a in ctx.legal(pose, remaining)]
    child = MctsNode(pose, remaining, untried, action=action, action_index=idx, parent=node)
    node.children[idx] = child
    return child


def rollout_gain(node: MctsNode, belief: BeliefState, h_init: float, ctx: PlanningContext,
                 rng: np.random.Generator) -> float:
    """
    Unclamped normalized information gain of one simulated mission.

    The root-to-node actions are replayed on a copy of the belief, then
    random legal actions are taken until no action fits the budget. Every
    step samples an observation from the simulated belief and adds the
    per-step drop in joint L entropy.
    """
    if h_init <= 0:
        return 0.0
    sim = belief.copy()
    root = node
    while root.parent is not None:
        root = root.parent
    pose = root.pose
    gain = 0.0
    h_prev = h_init

    for action in node.path():
        pose = simulate_step(sim, pose, action, ctx, rng)
        h_new = joint_l_entropy(sim)
        gain += h_prev - h_new
        h_prev = h_new

    remaining = node.remaining
    while True:
        legal = ctx.legal(pose, remaining)
        if not legal:
            break
        action = legal[int(rng.integers(len(legal)))]
        pose = simulate_step(sim, pose, action, ctx, rng)
        remaining -= cost(action, ctx.costs)
        h_new = joint_l_entropy(sim)
        gain += h_prev - h_new
        h_prev = h_new

    return gain / h_init


def clamp_reward(raw: float) -> Tuple[float, bool]:
    """Clip a normalized gain to [0, 1]; the flag is True when it was clipped."""
    reward = min(max(raw, 0.0), 1.0)
    return reward, reward != raw


def rollout(node: MctsNode, belief: BeliefState, h_init: float, ctx: PlanningContext,
            rng: np.random.Generator) -> Tuple[float, bool]:
    """Rollout reward I_r / H_init clamped to [0, 1], with the clamp flag."""
    return clamp_reward(rollout_gain(node, belief, h_init, ctx, rng))


def best_child(root: MctsNode) -> MctsNode:
    """Highest mean reward, then most visits, then enumeration order."""
    if not root.children:
        raise NoLegalActionError("search root has no children")
    return max(root.children.values(), key=lambda c: (c.mean_reward, c.visits, -c.action_index))


def build_tree(belief: BeliefState, pose: Pose, remaining: float, ctx: PlanningContext,
               cfg: PlannerConfig, rng: np.random.Generator) -> MctsNode:
    """
    Run `cfg.iterations` select / expand / rollout / back-propagate cycles.

    Args:
        belief: Current belief (not modified)
        pose: Robot pose
        remaining: Remaining sensing budget
        ctx: Planning context
        cfg: Planner configuration
        rng: Random generator

    Returns:
        The search root; `root.clamped` counts rollouts whose reward was clipped
    """
    h_init = joint_l_entropy(belief)
    root = MctsNode(pose, remaining, [ctx.index_of[a] for a in ctx.legal(pose, remaining)])

    for _ in range(cfg.iterations):
        node = root
        while not node.untried and node.children:
            node = _select_child(node, cfg.cp, cfg.log_base)
        if node.untried:
            node = _expand(node, ctx, rng)

        reward, clipped = rollout(node, belief, h_init, ctx, rng)
        root.clamped += clipped

        while node is not None:
            node.update(reward)
            node = node.parent

    if root.clamped:
        logger.debug(f"{root.clamped}/{cfg.iterations} rollout rewards clamped to [0, 1]")
    return root


def _search(belief: BeliefState, pose: Pose, remaining: float, ctx: PlanningContext,
            cfg: PlannerConfig, rng: np.random.Generator) -> Tuple[SensingAction, Optional[MctsNode]]:
    legal = ctx.legal(pose, remaining)
    if not legal:
        raise NoLegalActionError(f"no legal action at {pose} with budget {remaining}")
    if len(legal) == 1:
        return legal[0], None

    root = build_tree(belief, pose, remaining, ctx, cfg, rng)
    chosen = best_child(root)
    if logger.isEnabledFor(logging.DEBUG):
        stats = ', '.join(f"{c.action.label}:{c.mean_reward:.4f}/{c.visits}"
                          for _, c in sorted(root.children.items()))
        logger.debug(f"🧭 MCTS root {pose} rem={remaining}: {stats}")
    return chosen.action, root


def mcts_plan(belief: BeliefState, pose: Pose, remaining: float, ctx: PlanningContext,
              cfg: PlannerConfig, rng: np.random.Generator) -> SensingAction:
    """
    UCT search over sensing actions; returns the root child with the
    highest mean reward.

    Raises:
        NoLegalActionError: nothing fits the remaining budget
    """
    return _search(belief, pose, remaining, ctx, cfg, rng)[0]


# ==========================================
# BASELINES
# ==========================================
def greedy_plan(belief: BeliefState, pose: Pose, remaining: float, ctx: PlanningContext,
                cfg: PlannerConfig, rng: np.random.Generator) -> SensingAction:
    """
    Highest sampled immediate information gain per budget unit.

    Each legal action is scored by averaging the entropy drop over
    `cfg.greedy_samples` simulated observation/update pairs. Ties keep the
    action enumeration order.
    """
    legal = ctx.legal(pose, remaining)
    if not legal:
        raise NoLegalActionError(f"no legal action at {pose} with budget {remaining}")
    if len(legal) == 1:
        return legal[0]

    h0 = joint_l_entropy(belief)
    best, best_score = None, -math.inf
    for action in legal:
        total = 0.0
        for _ in range(cfg.greedy_samples):
            sim = belief.copy()
            simulate_step(sim, pose, action, ctx, rng)
            total += h0 - joint_l_entropy(sim)
        score = total / cfg.greedy_samples / cost(action, ctx.costs)
        if best is None or score > best_score + GAIN_TIE_TOL:
            best, best_score = action, score
    return best


def random_plan(pose: Pose, remaining: float, ctx: PlanningContext,
                rng: np.random.Generator) -> SensingAction:
    legal = ctx.legal(pose, remaining)
    if not legal:
        raise NoLegalActionError(f"no legal action at {pose} with budget {remaining}")
    return legal[int(rng.integers(len(legal)))]


def fixed_plan(stage: int, pose: Pose, remaining: float,
               ctx: PlanningContext) -> Tuple[SensingAction, int]:
    """
    Next action of the 5-stage sweep and the stage counter to use next time.
    Illegal stages (wall ahead, budget too small) are skipped.

    Raises:
        NoLegalActionError: no stage of the cycle is legal
    """
    legal = set(ctx.legal(pose, remaining))
    n = len(FIXED_STAGES)
    for offset in range(n):
        current = (stage + offset) % n
        action = FIXED_STAGES[current]
        if action in legal:
            return action, (current + 1) % n
        logger.warning(f"⚠️ Fixed stage {current} ({action.label}) illegal at {pose}, skipped")
    raise NoLegalActionError(f"no fixed-policy stage is legal at {pose} with budget {remaining}")


# ==========================================
# POLICY INTERFACE
# ==========================================
class Policy:
    """Base class; subclasses implement plan()."""

    name = 'policy'

    def __init__(self, ctx: PlanningContext, cfg: Optional[PlannerConfig] = None):
        self.ctx = ctx
        self.cfg = cfg or PlannerConfig()

    def reset(self) -> None:
        pass

    def plan(self, belief: BeliefState, pose: Pose, remaining: float,
             rng: np.random.Generator) -> SensingAction:
        raise NotImplementedError


class MctsPolicy(Policy):
    name = 'mcts'

    def __init__(self, ctx: PlanningContext, cfg: Optional[PlannerConfig] = None):
        super().__init__(ctx, cfg)
        self.iterations_run = 0
        self.rollouts_clamped = 0

    def reset(self) -> None:
        self.iterations_run = 0
        self.rollouts_clamped = 0

    def plan(self, belief, pose, remaining, rng):
        action, root = _search(belief, pose, remaining, self.ctx, self.cfg, rng)
        if root is not None:
            self.iterations_run += self.cfg.iterations
            self.rollouts_clamped += root.clamped
        return action


class GreedyPolicy(Policy):
    name = 'greedy'

    def plan(self, belief, pose, remaining, rng):
        return greedy_plan(belief, pose, remaining, self.ctx, self.cfg, rng)


class RandomPolicy(Policy):
    name = 'random'

    def plan(self, belief, pose, remaining, rng):
        return random_plan(pose, remaining, self.ctx, rng)


class FixedPolicy(Policy):
    name = 'fixed'

    def __init__(self, ctx: PlanningContext, cfg: Optional[PlannerConfig] = None):
        super().__init__(ctx, cfg)
        self.stage = 0

    def reset(self) -> None:
        self.stage = 0

    def plan(self, belief, pose, remaining, rng):
        action, self.stage = fixed_plan(self.stage, pose, remaining, self.ctx)
        return action


_POLICIES = {
    'mcts': MctsPolicy,
    'greedy': GreedyPolicy,
    'random': RandomPolicy,
    'fixed': FixedPolicy,
}


def make_policy(name: str, ctx: PlanningContext, cfg: Optional[PlannerConfig] = None) -> Policy:
    """Instantiate a policy by name ('mcts', 'greedy', 'random', 'fixed')."""
    if name not in _POLICIES:
        raise ConfigError(f"unknown policy '{name}' (known: {POLICY_NAMES})")
    return _POLICIES[name](ctx, cfg)
