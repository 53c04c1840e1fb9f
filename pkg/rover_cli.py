"""
Rover Science Autonomy - command line

    python rover_cli.py init-net --out net.json
    python rover_cli.py generate --world desk --seed 7 --out world.json
    python rover_cli.py run --policy mcts --budget 30 --seed 1 --out runs/single
    python rover_cli.py benchmark --config desk --out runs/desk
    python rover_cli.py replay --manifest runs/desk/manifest.json --results runs/desk/results.csv --row 0
"""

import argparse
import json
import logging
import sys

import pandas as pd

from config.rover_config import (
    ACTION_SPACES, BENCHMARK_PRESETS, COST_PRESETS, DEFAULT_ACTION_SPACE, DEFAULT_COST_PRESET,
    DEFAULT_CPT_DIAGONAL, DEFAULT_CARDINALITY, DEFAULT_COUPLING, DEFAULT_FEATURE_CHANNELS,
    DEFAULT_LOG_LEVEL, DEFAULT_WORLD_PRESET, PLANNER_DEFAULTS, POLICY_NAMES, WORLD_PRESETS
)
from modules.bn_core import KnowledgeNet, SpatialCoupling, default_net
from modules.errors import ConfigError, IllegalActionError, OutOfBoundsError
from modules.harness import (
    BenchmarkConfig, PolicySpec, TrialConfig, load_manifest, make_context,
    replay_mission, run_benchmark, write_outputs
)
from modules.planners import PlannerConfig
from modules.report_generator import ReportGenerator
from modules.sensing import Pose
from modules.world import WorldConfig, WorldState, generate
from utils import load_json, setup_logging

logger = logging.getLogger('rover_cli')

EXIT_CONFIG = 2


def _load_net(path):
    if path:
        net = KnowledgeNet.load(path)
        logger.info(f"✅ Knowledge net loaded: {path}")
        return net
    return default_net()


def _world_config(spec: str, seed: int) -> WorldConfig:
    """Preset name or path to a world-config JSON."""
    if spec in WORLD_PRESETS:
        return WorldConfig.from_preset(spec, seed=seed)
    doc = load_json(spec)
    doc = doc.get('config', doc)
    return WorldConfig.from_dict({**doc, 'seed': seed})


def _print_tables(summary: pd.DataFrame):
    for metric, label in ReportGenerator.METRICS.items():
        print(f"\n{label}")
        print(ReportGenerator.mean_sigma_table(summary, metric).to_string())


# ==========================================
# SUBCOMMANDS
# ==========================================
def cmd_init_net(args) -> int:
    net = default_net(k=args.cardinality, channels=args.channels, p_diag=args.diagonal,
                      coupling=SpatialCoupling(args.sigma, args.radius))
    net.save(args.out)
    print(f"✅ Knowledge net written to {args.out}")
    return 0


def cmd_generate(args) -> int:
    net = _load_net(args.net)
    world = generate(_world_config(args.world, args.seed), net)
    world.save(args.out)
    print(f"✅ World written to {args.out}: {world.config.n_regions} regions, {len(world.rocks)} rocks")
    return 0


def cmd_run(args) -> int:
    net = _load_net(args.net)
    spec = PolicySpec(label=args.label or args.policy, policy=args.policy, planner=PlannerConfig(
        iterations=args.iterations, cp=args.cp, greedy_samples=args.greedy_samples, log_base=args.log_base))

    world = None
    if args.world.endswith('.json') and 'l_truth' in load_json(args.world):
        world = WorldState.load(args.world)
        config = world.config
    else:
        config = _world_config(args.world, args.seed)

    trial = TrialConfig(
        world=config, policy=spec, budget=args.budget, trials=args.trials, master_seed=args.seed,
        cost_preset=args.cost_preset, action_space=args.action_space,
        fire_on_rotate=not args.no_fire_on_rotate, net_path=args.net,
    )
    result = run_benchmark(trial.to_benchmark(), net, world=world)
    write_outputs(result, args.out, net, excel=not args.no_excel)

    for t in result.trials:
        print(f"{t.policy} trial {t.trial}: gain {t.info_gain:.3f} bits, accuracy {t.accuracy:.3f}, "
              f"{len(t.actions)} actions, spent {t.spent:g}/{t.budget:g}")
    return 0


def cmd_benchmark(args) -> int:
    net = _load_net(args.net)
    overrides = {'trials': args.trials, 'master_seed': args.master_seed, 'workers': args.workers}
    if args.unpaired:
        overrides['paired'] = False

    if args.config in BENCHMARK_PRESETS:
        cfg = BenchmarkConfig.from_preset(args.config, **overrides)
    else:
        doc = load_json(args.config)
        doc.update({k: v for k, v in overrides.items() if v is not None})
        cfg = BenchmarkConfig.from_dict(doc)
        if cfg.net_path and not args.net:
            net = _load_net(cfg.net_path)

    result = run_benchmark(cfg, net)
    write_outputs(result, args.out, net, excel=not args.no_excel)
    _print_tables(result.summary)
    increase = ReportGenerator.relative_increase(result.summary)
    if not increase.empty:
        print("\nAccuracy increase over random (%)")
        print(increase.to_string(index=False))
    return 0


def cmd_replay(args) -> int:
    cfg, net = load_manifest(args.manifest)
    results = pd.read_csv(args.results, keep_default_na=False)
    if not 0 <= args.row < len(results):
        raise ConfigError(f"row {args.row} outside results table of {len(results)} rows")
    row = results.iloc[args.row]

    if args.world:
        world = WorldState.load(args.world)
    else:
        world = generate(cfg.world.with_seed(int(row['world_seed'])), net)
    ctx = make_context(world, net, cfg.cost_preset, cfg.action_space, cfg.fire_on_rotate, cfg.density)
    actions = [a for a in str(row['actions']).split(';') if a]
    start = Pose(int(row['start_x']), int(row['start_y']), int(row['start_heading']))

    replayed = replay_mission(world, net, ctx, actions, float(row['budget']), int(row['mission_seed']),
                              start=start, label=str(row['policy']), trial=int(row['trial']))
    print(f"Logged:   gain {float(row['info_gain']):.6f} bits, accuracy {float(row['accuracy']):.6f}")
    print(f"Replayed: gain {replayed.info_gain:.6f} bits, accuracy {replayed.accuracy:.6f}")
    if args.trace_out:
        pd.DataFrame(replayed.trace).to_csv(args.trace_out, index=False)
        print(f"✅ Trace written to {args.trace_out}")
    return 0


# ==========================================
# PARSER
# ==========================================
def _add_planner_args(p):
    p.add_argument('--iterations', type=int, default=PLANNER_DEFAULTS['iterations'])
    p.add_argument('--cp', type=float, default=PLANNER_DEFAULTS['cp'])
    p.add_argument('--greedy-samples', type=int, default=PLANNER_DEFAULTS['greedy_samples'])
    p.add_argument('--log-base', choices=['e', '2'], default=PLANNER_DEFAULTS['log_base'])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description='Budgeted science-sensing planner for a simulated rover')
    parser.add_argument('--log-level', default=DEFAULT_LOG_LEVEL)
    parser.add_argument('--log-file', default=None)
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('init-net', help='write the default knowledge network')
    p.add_argument('--out', required=True)
    p.add_argument('--cardinality', type=int, default=DEFAULT_CARDINALITY)
    p.add_argument('--channels', type=int, default=DEFAULT_FEATURE_CHANNELS)
    p.add_argument('--diagonal', type=float, default=DEFAULT_CPT_DIAGONAL)
    p.add_argument('--sigma', type=float, default=DEFAULT_COUPLING['sigma'])
    p.add_argument('--radius', type=int, default=DEFAULT_COUPLING['radius'])
    p.set_defaults(func=cmd_init_net)

    p = sub.add_parser('generate', help='generate a ground-truth world')
    p.add_argument('--world', default=DEFAULT_WORLD_PRESET, help=f"preset {sorted(WORLD_PRESETS)} or config JSON")
    p.add_argument('--seed', type=int, default=0)
    p.add_argument('--net', default=None)
    p.add_argument('--out', required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser('run', help='run missions of a single policy')
    p.add_argument('--policy', choices=POLICY_NAMES, required=True)
    p.add_argument('--label', default=None)
    p.add_argument('--budget', type=float, required=True)
    p.add_argument('--seed', type=int, default=0)
    p.add_argument('--trials', type=int, default=1)
    p.add_argument('--net', default=None)
    p.add_argument('--world', default=DEFAULT_WORLD_PRESET, help='preset, config JSON or world JSON')
    p.add_argument('--cost-preset', choices=sorted(COST_PRESETS), default=DEFAULT_COST_PRESET)
    p.add_argument('--action-space', choices=ACTION_SPACES, default=DEFAULT_ACTION_SPACE)
    p.add_argument('--no-fire-on-rotate', action='store_true')
    p.add_argument('--no-excel', action='store_true')
    p.add_argument('--out', required=True)
    _add_planner_args(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser('benchmark', help='run a policy x budget matrix')
    p.add_argument('--config', required=True, help=f"preset {sorted(BENCHMARK_PRESETS)} or benchmark JSON")
    p.add_argument('--net', default=None)
    p.add_argument('--trials', type=int, default=None)
    p.add_argument('--master-seed', type=int, default=None)
    p.add_argument('--workers', type=int, default=None)
    p.add_argument('--unpaired', action='store_true')
    p.add_argument('--no-excel', action='store_true')
    p.add_argument('--out', required=True)
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser('replay', help='re-score a logged action sequence')
    p.add_argument('--manifest', required=True)
    p.add_argument('--results', required=True)
    p.add_argument('--row', type=int, default=0)
    p.add_argument('--world', default=None, help='world JSON when the run used a fixed world')
    p.add_argument('--trace-out', default=None)
    p.set_defaults(func=cmd_replay)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(args.log_level, args.log_file)
    try:
        return args.func(args)
    except (ConfigError, OutOfBoundsError, IllegalActionError, OSError, json.JSONDecodeError) as e:
        print(f"❌ {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == '__main__':
    sys.exit(main())
