"""
Mission Harness - eksekusi misi, benchmark dan replay
Sense-plan-act loop against a ground-truth world, the policy x budget trial
matrix with paired seeding, and the CSV / JSON / Excel outputs.
"""

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple
import sys
import os

import numpy as np
import pandas as pd

sys.path.append(os.path.dirname(os.path.dirname(__file__)))
from config.rover_config import (
    BENCHMARK_PRESETS, DEFAULT_ACTION_SPACE, DEFAULT_COST_PRESET, DEFAULT_WORLD_PRESET,
    EXPORT_SETTINGS, FIRE_ON_ROTATE, PLANNER_DEFAULTS
)
from modules import __version__
from modules.bn_core import (
    BeliefState, KnowledgeNet, RemoteObservation, RockDensityPrior, joint_l_entropy, update_belief
)
from modules.errors import ConfigError, NoLegalActionError
from modules.metrics import accuracy_score, b_entropy, information_gain, rock_entropy, uniform_accuracy
from modules.planners import PlannerConfig, PlanningContext, make_policy
from modules.report_generator import ReportGenerator
from modules.sensing import (
    ACTION_SPACE_MOVES, HEADING_VECTORS, CostModel, Pose, SensingAction, cost
)
from modules.world import WorldConfig, WorldState, generate, true_observe
from utils import derive_seed, load_json, make_rng, save_json, stable_key

logger = logging.getLogger(__name__)

# rng stream ids
START_STREAM = 1
OBS_STREAM = 2
PLAN_STREAM = 3


# ==========================================
# CONFIGURATION
# ==========================================
@dataclass(frozen=True)
class PolicySpec:
    """A policy entry of the benchmark matrix, e.g. label 'mcts-50'."""
    label: str
    policy: str
    planner: PlannerConfig = field(default_factory=PlannerConfig)

    @classmethod
    def from_dict(cls, doc: Dict) -> 'PolicySpec':
        if 'policy' not in doc:
            raise ConfigError(f"policy entry without 'policy': {doc}")
        planner = PlannerConfig(**{k: doc[k] for k in PLANNER_DEFAULTS if k in doc})
        return cls(label=doc.get('label', doc['policy']), policy=doc['policy'], planner=planner)

    def to_dict(self) -> Dict:
        return {
            'label': self.label,
            'policy': self.policy,
            'iterations': self.planner.iterations,
            'cp': self.planner.cp,
            'greedy_samples': self.planner.greedy_samples,
            'log_base': self.planner.log_base,
        }


@dataclass(frozen=True)
class BenchmarkConfig:
    """
    Policy x budget trial matrix.

    With `paired` every policy and budget sees the same world sequence
    (world seed depends on master seed and trial index only).
    """
    world: WorldConfig
    policies: Tuple[PolicySpec, ...]
    budgets: Tuple[float, ...]
    trials: int = 1
    master_seed: int = 0
    cost_preset: str = DEFAULT_COST_PRESET
    action_space: str = DEFAULT_ACTION_SPACE
    paired: bool = True
    workers: int = 1
    fire_on_rotate: bool = FIRE_ON_ROTATE
    density: Optional[RockDensityPrior] = None
    net_path: Optional[str] = None

    def __post_init__(self):
        if not self.policies:
            raise ConfigError("benchmark needs at least one policy")
        if not self.budgets or any(b <= 0 for b in self.budgets):
            raise ConfigError(f"budgets must be > 0, got {self.budgets}")
        if self.trials < 1:
            raise ConfigError(f"trials must be >= 1, got {self.trials}")
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")
        if self.action_space not in ACTION_SPACE_MOVES:
            raise ConfigError(f"unknown action space '{self.action_space}'")
        labels = [p.label for p in self.policies]
        if len(set(labels)) != len(labels):
            raise ConfigError(f"duplicate policy labels: {labels}")
        CostModel.from_preset(self.cost_preset)

    @property
    def costs(self) -> CostModel:
        return CostModel.from_preset(self.cost_preset)

    @classmethod
    def from_dict(cls, doc: Dict) -> 'BenchmarkConfig':
        """Build from a benchmark document; `world` is a preset name or an explicit config."""
        try:
            world_doc = doc.get('world', DEFAULT_WORLD_PRESET)
            if isinstance(world_doc, str):
                world = WorldConfig.from_preset(world_doc)
            else:
                world = WorldConfig.from_dict(world_doc)
            density = doc.get('density')
            return cls(
                world=world,
                policies=tuple(PolicySpec.from_dict(p) for p in doc['policies']),
                budgets=tuple(float(b) for b in doc['budgets']),
                trials=int(doc.get('trials', 1)),
                master_seed=int(doc.get('master_seed', 0)),
                cost_preset=doc.get('cost_preset', DEFAULT_COST_PRESET),
                action_space=doc.get('action_space', DEFAULT_ACTION_SPACE),
                paired=bool(doc.get('paired', True)),
                workers=int(doc.get('workers', 1)),
                fire_on_rotate=bool(doc.get('fire_on_rotate', FIRE_ON_ROTATE)),
                density=RockDensityPrior(**density) if density else None,
                net_path=doc.get('net'),
            )
        except (KeyError, TypeError) as e:
            raise ConfigError(f"invalid benchmark document: {e}") from e

    @classmethod
    def from_preset(cls, name: str, **overrides) -> 'BenchmarkConfig':
        if name not in BENCHMARK_PRESETS:
            raise ConfigError(f"unknown benchmark preset '{name}' (known: {sorted(BENCHMARK_PRESETS)})")
        doc = dict(BENCHMARK_PRESETS[name])
        doc.update({k: v for k, v in overrides.items() if v is not None})
        return cls.from_dict(doc)

    def to_dict(self) -> Dict:
        return {
            'world': self.world.to_dict(),
            'policies': [p.to_dict() for p in self.policies],
            'budgets': list(self.budgets),
            'trials': self.trials,
            'master_seed': self.master_seed,
            'cost_preset': self.cost_preset,
            'action_space': self.action_space,
            'paired': self.paired,
            'workers': self.workers,
            'fire_on_rotate': self.fire_on_rotate,
            'density': ({'rate': self.density.rate, 'kind': self.density.kind}
                        if self.density else None),
            'net': self.net_path,
        }


@dataclass(frozen=True)
class TrialConfig:
    """A single policy at a single budget, run for `trials` missions."""
    world: WorldConfig
    policy: PolicySpec
    budget: float
    trials: int = 1
    master_seed: int = 0
    cost_preset: str = DEFAULT_COST_PRESET
    action_space: str = DEFAULT_ACTION_SPACE
    fire_on_rotate: bool = FIRE_ON_ROTATE
    net_path: Optional[str] = None

    def __post_init__(self):
        if self.budget <= 0:
            raise ConfigError(f"budget must be > 0, got {self.budget}")
        if self.trials < 1:
            raise ConfigError(f"trials must be >= 1, got {self.trials}")

    def to_benchmark(self) -> BenchmarkConfig:
        return BenchmarkConfig(
            world=self.world, policies=(self.policy,), budgets=(self.budget,),
            trials=self.trials, master_seed=self.master_seed, cost_preset=self.cost_preset,
            action_space=self.action_space, fire_on_rotate=self.fire_on_rotate,
            net_path=self.net_path,
        )


# ==========================================
# RESULTS
# ==========================================
@dataclass
class TrialResult:
    policy: str
    budget: float
    trial: int
    world_seed: int
    mission_seed: int
    start: Pose
    info_gain: float
    accuracy: float
    spent: float
    actions: List[str]
    trace: List[Dict]
    wall_seconds: float = 0.0
    plan_seconds: float = 0.0
    plan_calls: int = 0
    mcts_iterations: int = 0

    def to_row(self) -> Dict:
        return {
            'policy': self.policy,
            'budget': self.budget,
            'trial': self.trial,
            'world_seed': self.world_seed,
            'mission_seed': self.mission_seed,
            'start_x': self.start.x,
            'start_y': self.start.y,
            'start_heading': self.start.heading,
            'info_gain': self.info_gain,
            'accuracy': self.accuracy,
            'spent': self.spent,
            'n_actions': len(self.actions),
            'actions': ';'.join(self.actions),
        }


@dataclass
class BenchmarkResult:
    config: BenchmarkConfig
    trials: List[TrialResult]

    @property
    def results(self) -> pd.DataFrame:
        return pd.DataFrame([t.to_row() for t in self.trials])

    @property
    def traces(self) -> pd.DataFrame:
        rows = []
        for t in self.trials:
            for step in t.trace:
                rows.append({'policy': t.policy, 'budget': t.budget, 'trial': t.trial, **step})
        return pd.DataFrame(rows)

    @property
    def summary(self) -> pd.DataFrame:
        return ReportGenerator.summarize(self.results)

    def timing(self) -> Dict[str, Dict[str, float]]:
        """Seconds per plan call and per MCTS iteration, by policy label."""
        out: Dict[str, Dict[str, float]] = {}
        for label in dict.fromkeys(t.policy for t in self.trials):
            rows = [t for t in self.trials if t.policy == label]
            calls = sum(t.plan_calls for t in rows)
            plan = sum(t.plan_seconds for t in rows)
            iters = sum(t.mcts_iterations for t in rows)
            out[label] = {
                'missions': len(rows),
                'plan_calls': calls,
                'sec_per_plan': plan / calls if calls else 0.0,
                'sec_per_mcts_iteration': plan / iters if iters else None,
                'mission_wall_seconds': sum(t.wall_seconds for t in rows),
            }
        return out


# ==========================================
# MISSION
# ==========================================
def draw_start_pose(world: WorldState) -> Pose:
    """Uniform free cell and heading, drawn from the world seed."""
    rng = make_rng(world.config.seed, (START_STREAM,))
    free = world.free_cells
    x, y = free[int(rng.integers(len(free)))]
    return Pose(int(x), int(y), int(rng.integers(len(HEADING_VECTORS))))


def make_context(world: WorldState, net: KnowledgeNet, cost_preset: str = DEFAULT_COST_PRESET,
                 action_space: str = DEFAULT_ACTION_SPACE, fire_on_rotate: bool = FIRE_ON_ROTATE,
                 density: Optional[RockDensityPrior] = None) -> PlanningContext:
    return PlanningContext(
        net=net, world=world.config, costs=CostModel.from_preset(cost_preset),
        obstacles=world.obstacles, space=action_space, fire_on_rotate=fire_on_rotate,
        density=density,
    )


def _trace_row(step: int, action: str, pose: Pose, remaining: float, belief: BeliefState,
               h0: float, world: WorldState) -> Dict:
    h = joint_l_entropy(belief)
    return {
        'step': step,
        'action': action,
        'x': pose.x,
        'y': pose.y,
        'heading': pose.heading,
        'remaining': remaining,
        'l_entropy': h,
        'info_gain': h0 - h,
        'accuracy': accuracy_score(belief, world),
        'b_entropy': b_entropy(belief),
        'rock_entropy': rock_entropy(belief),
        'n_rocks': belief.n_rocks,
    }


def _execute(world: WorldState, net: KnowledgeNet, ctx: PlanningContext, budget: float,
             seed: int, choose, start: Optional[Pose]) -> Tuple[BeliefState, BeliefState, Dict]:
    """Shared sense-plan-act loop; `choose(belief, pose, remaining, step)` returns an action or None."""
    obs_rng = make_rng(seed, (OBS_STREAM,))
    pose = start or draw_start_pose(world)
    initial = BeliefState.uniform(world.config.grid, net)
    belief = initial.copy()
    h0 = joint_l_entropy(initial)
    remaining = float(budget)
    actions: List[str] = []
    trace = [_trace_row(0, '', pose, remaining, belief, h0, world)]
    blind = 0

    while True:
        action = choose(belief, pose, remaining, len(actions))
        if action is None:
            break
        pose = ctx.move(pose, action)
        remaining -= cost(action, ctx.costs)
        if ctx.fires(action):
            obs = true_observe(world, pose, action, net, obs_rng)
            if isinstance(obs, RemoteObservation) and obs.footprint.size == 0:
                blind += 1
            update_belief(belief, obs, net, inplace=True, refresh=True)
        actions.append(action.label)
        trace.append(_trace_row(len(actions), action.label, pose, remaining, belief, h0, world))
        logger.debug(f"🪨 step {len(actions)}: {action.label} -> {pose}, remaining {remaining:g}")

    if blind:
        logger.warning(f"⚠️ {blind} camera reading(s) had an empty field of view")
    return initial, belief, {'actions': actions, 'trace': trace, 'spent': float(budget) - remaining}


def run_mission(world: WorldState, net: KnowledgeNet, policy, budget: float, seed: int,
                start: Optional[Pose] = None, label: Optional[str] = None, trial: int = 0) -> TrialResult:
    """
    Run one mission until no legal action fits the remaining budget.

    The belief starts from the net's prior, every observation comes from
    true_observe, and all randomness derives from `seed` (observation and
    planning streams kept separate).

    Args:
        world: Ground truth
        net: Knowledge network
        policy: A planners.Policy built on a context for this world
        budget: Sensing budget
        seed: Mission seed
        start: Start pose (default: drawn from the world seed)
        label: Policy label for the result (default: policy.name)
        trial: Trial index recorded in the result

    Returns:
        TrialResult
    """
    plan_rng = make_rng(seed, (PLAN_STREAM,))
    policy.reset()
    timing = {'plan': 0.0, 'calls': 0}

    def choose(belief, pose, remaining, step):
        t0 = time.perf_counter()
        try:
            return policy.plan(belief, pose, remaining, plan_rng)
        except NoLegalActionError:
            logger.debug(f"Mission over after {step} actions (remaining {remaining:g})")
            return None
        finally:
            timing['plan'] += time.perf_counter() - t0
            timing['calls'] += 1

    t_start = time.perf_counter()
    start = start or draw_start_pose(world)
    initial, final, log = _execute(world, net, policy.ctx, budget, seed, choose, start)
    result = TrialResult(
        policy=label or policy.name, budget=float(budget), trial=trial,
        world_seed=world.config.seed, mission_seed=seed, start=start,
        info_gain=information_gain(initial, final), accuracy=accuracy_score(final, world),
        spent=log['spent'], actions=log['actions'], trace=log['trace'],
        wall_seconds=time.perf_counter() - t_start, plan_seconds=timing['plan'],
        plan_calls=timing['calls'], mcts_iterations=getattr(policy, 'iterations_run', 0),
    )
    clamped = getattr(policy, 'rollouts_clamped', 0)
    if clamped:
        logger.warning(f"⚠️ {clamped}/{result.mcts_iterations} rollout rewards clamped to [0, 1] "
                       f"in mission {result.policy} B={budget:g} trial {trial}")
    logger.info(f"✅ Mission {result.policy} B={budget:g} trial {trial}: "
                f"gain {result.info_gain:.3f} bits, accuracy {result.accuracy:.3f} "
                f"(uniform {uniform_accuracy(world.l_truth.size, net.cardinalities[0]):.3f})")
    return result


def replay_mission(world: WorldState, net: KnowledgeNet, ctx: PlanningContext, actions: Sequence[str],
                   budget: float, seed: int, start: Optional[Pose] = None, label: str = 'replay',
                   trial: int = 0) -> TrialResult:
    """
    Re-execute a logged action sequence and re-score it.

    With the same world, seed and start pose the observations are
    identical to the original mission.

    Raises:
        IllegalActionError: a logged move is not feasible
        ConfigError: the logged actions exceed the budget
    """
    queue = [SensingAction.from_label(a) for a in actions]
    total = sum(cost(a, ctx.costs) for a in queue)
    if total > budget:
        raise ConfigError(f"logged actions cost {total:g}, budget is {budget:g}")

    def choose(belief, pose, remaining, step):
        return queue[step] if step < len(queue) else None

    start = start or draw_start_pose(world)
    initial, final, log = _execute(world, net, ctx, budget, seed, choose, start)
    return TrialResult(
        policy=label, budget=float(budget), trial=trial, world_seed=world.config.seed,
        mission_seed=seed, start=start, info_gain=information_gain(initial, final),
        accuracy=accuracy_score(final, world), spent=log['spent'], actions=log['actions'],
        trace=log['trace'],
    )


# ==========================================
# BENCHMARK
# ==========================================
def trial_seeds(cfg: BenchmarkConfig, spec: PolicySpec, budget: float, trial: int) -> Tuple[int, int]:
    """(world seed, mission seed) of one matrix cell trial."""
    key = stable_key(spec.label)
    if cfg.paired:
        world_seed = derive_seed(cfg.master_seed, trial)
    else:
        world_seed = derive_seed(cfg.master_seed, trial, key, int(round(budget * 1000)))
    mission_seed = derive_seed(cfg.master_seed, trial, key, int(round(budget * 1000)), 1)
    return world_seed, mission_seed


def _run_job(job) -> TrialResult:
    cfg, net, spec, budget, trial, world = job
    world_seed, mission_seed = trial_seeds(cfg, spec, budget, trial)
    if world is None:
        world = generate(cfg.world.with_seed(world_seed), net)
    ctx = make_context(world, net, cfg.cost_preset, cfg.action_space, cfg.fire_on_rotate, cfg.density)
    policy = make_policy(spec.policy, ctx, spec.planner)
    return run_mission(world, net, policy, budget, mission_seed, label=spec.label, trial=trial)


def run_benchmark(cfg: BenchmarkConfig, net: KnowledgeNet, world: Optional[WorldState] = None) -> BenchmarkResult:
    """
    Run every (policy, budget, trial) mission of the matrix.

    Results are ordered by policy, budget, trial regardless of `workers`,
    so identical configs give identical tables.

    Args:
        cfg: Benchmark configuration
        net: Knowledge network
        world: Fixed world for every trial (default: generated per trial)

    Returns:
        BenchmarkResult
    """
    jobs = [(cfg, net, spec, budget, trial, world)
            for spec in cfg.policies for budget in cfg.budgets for trial in range(cfg.trials)]
    logger.info(f"🧭 Benchmark: {len(cfg.policies)} policies x {len(cfg.budgets)} budgets x "
                f"{cfg.trials} trials = {len(jobs)} missions (workers={cfg.workers})")

    results: List[TrialResult] = []
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(_run_job, jobs, chunksize=1))
    else:
        cache: Dict[int, WorldState] = {}
        for job in jobs:
            c, n, spec, budget, trial, fixed = job
            if fixed is None:
                world_seed, _ = trial_seeds(c, spec, budget, trial)
                if world_seed not in cache:
                    cache[world_seed] = generate(c.world.with_seed(world_seed), n)
                job = (c, n, spec, budget, trial, cache[world_seed])
            results.append(_run_job(job))
            if trial == cfg.trials - 1:
                cell = results[-cfg.trials:]
                logger.info(f"✅ {spec.label} @ {budget:g}: mean gain "
                            f"{np.mean([r.info_gain for r in cell]):.3f} bits, mean accuracy "
                            f"{np.mean([r.accuracy for r in cell]):.3f}")

    return BenchmarkResult(config=cfg, trials=results)


def write_outputs(result: BenchmarkResult, out_dir: str, net: KnowledgeNet,
                  excel: bool = True) -> Dict[str, str]:
    """
    Write results.csv, traces.csv, summary.csv, manifest.json, timing.json
    and report.xlsx into `out_dir`.

    Returns:
        Mapping of output kind to file path
    """
    os.makedirs(out_dir, exist_ok=True)
    fmt = EXPORT_SETTINGS['float_format']
    paths = {k: os.path.join(out_dir, EXPORT_SETTINGS[k]) for k in
             ('results_csv', 'traces_csv', 'summary_csv', 'manifest_json', 'timing_json', 'report_xlsx')}

    results, traces, summary = result.results, result.traces, result.summary
    results.to_csv(paths['results_csv'], index=False, float_format=fmt, lineterminator='\n')
    traces.to_csv(paths['traces_csv'], index=False, float_format=fmt, lineterminator='\n')
    summary.to_csv(paths['summary_csv'], index=False, float_format=fmt, lineterminator='\n')

    manifest = {'tool_version': __version__, 'benchmark': result.config.to_dict(), 'net': net.to_dict()}
    save_json(manifest, paths['manifest_json'])

    timing = result.timing()
    save_json(timing, paths['timing_json'])
    for label, stats in timing.items():
        per_iter = stats['sec_per_mcts_iteration']
        extra = f", {per_iter * 1000:.1f} ms/iteration" if per_iter else ''
        logger.info(f"⏱️ {label}: {stats['sec_per_plan'] * 1000:.1f} ms/plan{extra}")

    if excel:
        report = ReportGenerator()
        with open(paths['report_xlsx'], 'wb') as fh:
            fh.write(report.generate_excel(results, traces))
    else:
        paths.pop('report_xlsx')

    logger.info(f"✅ Outputs written to {out_dir}")
    return paths


def load_manifest(path: str) -> Tuple[BenchmarkConfig, KnowledgeNet]:
    """Benchmark config and embedded net of a manifest.json."""
    doc = load_json(path)
    try:
        return BenchmarkConfig.from_dict(doc['benchmark']), KnowledgeNet.from_dict(doc['net'])
    except KeyError as e:
        raise ConfigError(f"manifest is missing {e}") from e
