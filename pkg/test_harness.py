import json

import numpy as np
import pandas as pd
import pytest

import rover_cli
from modules.bn_core import default_net
from modules.errors import ConfigError, IllegalActionError
from modules.harness import (
    BenchmarkConfig, PolicySpec, TrialConfig, draw_start_pose, load_manifest, make_context,
    replay_mission, run_benchmark, run_mission, trial_seeds, write_outputs
)
from modules.planners import PlannerConfig, make_policy
from modules.sensing import Pose, SensingAction, Sensor, cost
from modules.world import WorldConfig, generate

SMALL_WORLD = {'l_grid': [4, 4], 'region': [2, 2], 'rock_grid': [40, 40], 'fov': [10, 8],
               'rock_density': 2.0, 'density_kind': 'poisson'}


def _world(seed=0):
    return generate(WorldConfig.from_dict({**SMALL_WORLD, 'seed': seed}), default_net())


def _mission(policy='random', budget=10, seed=5, world=None, **planner):
    world = world or _world()
    ctx = make_context(world, default_net())
    return run_mission(world, default_net(), make_policy(policy, ctx, PlannerConfig(**planner)), budget, seed)


def _benchmark_config(**overrides):
    doc = {
        'world': SMALL_WORLD,
        'policies': [{'label': 'random', 'policy': 'random'},
                     {'label': 'mcts-5', 'policy': 'mcts', 'iterations': 5}],
        'budgets': [4, 6],
        'trials': 2,
        'master_seed': 11,
    }
    doc.update(overrides)
    return BenchmarkConfig.from_dict(doc)


# ==========================================
# missions
# ==========================================
def test_zero_budget_mission_takes_no_action():
    result = _mission(budget=0)
    assert result.actions == []
    assert result.info_gain == 0.0
    assert result.spent == 0.0
    assert len(result.trace) == 1


def test_small_budget_only_uses_the_camera():
    result = _mission(budget=3)
    assert len(result.actions) == 3
    assert all(SensingAction.from_label(a).sensor is Sensor.REMOTE for a in result.actions)


@pytest.mark.parametrize('policy', ['random', 'fixed', 'greedy', 'mcts'])
def test_budget_is_conserved(policy):
    result = _mission(policy, budget=12, iterations=5, greedy_samples=2)
    ctx = make_context(_world(), default_net())
    spent = sum(cost(SensingAction.from_label(a), ctx.costs) for a in result.actions)
    assert result.spent == pytest.approx(spent)
    assert result.spent <= 12
    # nothing affordable is left
    cheapest = min(ctx.costs.remote_cost, ctx.costs.local_cost)
    assert 12 - result.spent < cheapest


def test_trace_is_consistent_with_the_result():
    result = _mission(budget=10)
    trace = pd.DataFrame(result.trace)
    assert len(trace) == len(result.actions) + 1
    assert list(trace['action'][1:]) == result.actions
    assert trace['info_gain'].iloc[0] == 0.0
    assert trace['info_gain'].iloc[-1] == pytest.approx(result.info_gain)
    assert trace['accuracy'].iloc[-1] == pytest.approx(result.accuracy)
    assert np.all(np.diff(trace['remaining']) < 0)
    assert (trace['x'].iloc[0], trace['y'].iloc[0], trace['heading'].iloc[0]) == \
        (result.start.x, result.start.y, result.start.heading)


def test_mission_is_deterministic():
    a, b = _mission('mcts', budget=6, iterations=8), _mission('mcts', budget=6, iterations=8)
    assert a.actions == b.actions
    assert a.info_gain == b.info_gain
    assert a.accuracy == b.accuracy


def test_clamped_rollouts_are_reported_once_per_mission(monkeypatch, caplog):
    monkeypatch.setattr('modules.planners.rollout_gain', lambda *args: -0.5)
    with caplog.at_level('DEBUG'):
        result = _mission('mcts', budget=6, iterations=4)
    assert result.mcts_iterations > 4

    warnings = [r for r in caplog.records if r.levelname == 'WARNING' and 'clamped' in r.getMessage()]
    assert len(warnings) == 1
    assert warnings[0].name == 'modules.harness'
    assert f"{result.mcts_iterations}/{result.mcts_iterations}" in warnings[0].getMessage()


def test_unclamped_missions_do_not_warn(monkeypatch, caplog):
    monkeypatch.setattr('modules.planners.rollout_gain', lambda *args: 0.25)
    with caplog.at_level('WARNING'):
        _mission('mcts', budget=6, iterations=4)
    assert not [r for r in caplog.records if 'clamped' in r.getMessage()]


def test_mission_log_quotes_the_uniform_accuracy(caplog):
    with caplog.at_level('INFO'):
        _mission(budget=2)
    done = [r.getMessage() for r in caplog.records if r.getMessage().startswith('✅ Mission')]
    # 16 cells, three classes
    assert len(done) == 1 and '(uniform 5.333)' in done[0]


def test_start_pose_comes_from_the_world_seed():
    world = _world(3)
    assert draw_start_pose(world) == draw_start_pose(_world(3))
    assert _mission(world=world).start == draw_start_pose(world)


def test_replay_reproduces_the_mission():
    world = _world(2)
    original = _mission('greedy', budget=12, world=world, greedy_samples=3)
    ctx = make_context(world, default_net())
    replayed = replay_mission(world, default_net(), ctx, original.actions, 12, original.mission_seed,
                              start=original.start)
    assert replayed.actions == original.actions
    assert replayed.info_gain == original.info_gain
    assert replayed.accuracy == original.accuracy


def test_replay_rejects_overspending_and_illegal_moves():
    world = _world()
    ctx = make_context(world, default_net())
    with pytest.raises(ConfigError):
        replay_mission(world, default_net(), ctx, ['forward/local'] * 3, 10, 0, start=Pose(0, 0, 0))
    with pytest.raises(IllegalActionError):
        replay_mission(world, default_net(), ctx, ['forward/remote'], 10, 0, start=Pose(3, 0, 0))


# ==========================================
# benchmark
# ==========================================
def test_benchmark_matrix_order():
    cfg = _benchmark_config()
    result = run_benchmark(cfg, default_net())
    rows = result.results
    assert len(rows) == 2 * 2 * 2
    assert list(rows['policy']) == ['random'] * 4 + ['mcts-5'] * 4
    assert list(rows['budget']) == [4, 4, 6, 6] * 2
    assert list(rows['trial']) == [0, 1] * 4
    assert set(result.traces['policy']) == {'random', 'mcts-5'}


def test_paired_trials_share_worlds():
    cfg = _benchmark_config()
    seeds = {trial_seeds(cfg, spec, budget, 0)[0] for spec in cfg.policies for budget in cfg.budgets}
    assert len(seeds) == 1
    unpaired = _benchmark_config(paired=False)
    seeds = {trial_seeds(unpaired, spec, budget, 0)[0] for spec in unpaired.policies for budget in unpaired.budgets}
    assert len(seeds) == 4
    missions = {trial_seeds(cfg, spec, budget, 0)[1] for spec in cfg.policies for budget in cfg.budgets}
    assert len(missions) == 4


def test_single_cell_benchmark():
    trial = TrialConfig(world=WorldConfig.from_dict(SMALL_WORLD), policy=PolicySpec('fixed', 'fixed'), budget=8)
    result = run_benchmark(trial.to_benchmark(), default_net())
    assert len(result.results) == 1
    assert result.results.iloc[0]['policy'] == 'fixed'


def test_fixed_world_benchmark():
    world = _world(9)
    result = run_benchmark(_benchmark_config(trials=1, budgets=[4]), default_net(), world=world)
    assert set(result.results['world_seed']) == {9}


def test_benchmark_outputs_are_reproducible(tmp_path):
    net = default_net()
    first = write_outputs(run_benchmark(_benchmark_config(), net), str(tmp_path / 'a'), net)
    second = write_outputs(run_benchmark(_benchmark_config(), net), str(tmp_path / 'b'), net, excel=False)
    for kind in ('results_csv', 'traces_csv', 'summary_csv'):
        with open(first[kind], 'rb') as fa, open(second[kind], 'rb') as fb:
            assert fa.read() == fb.read()
    assert 'report_xlsx' in first and 'report_xlsx' not in second

    with open(first['timing_json']) as fh:
        timing = json.load(fh)
    assert set(timing) == {'random', 'mcts-5'}
    assert timing['random']['sec_per_mcts_iteration'] is None
    assert timing['mcts-5']['plan_calls'] > 0


def test_manifest_round_trip(tmp_path):
    net = default_net()
    cfg = _benchmark_config(trials=1, budgets=[4])
    paths = write_outputs(run_benchmark(cfg, net), str(tmp_path), net, excel=False)
    loaded_cfg, loaded_net = load_manifest(paths['manifest_json'])
    assert loaded_cfg == cfg
    assert loaded_net.to_dict() == net.to_dict()


def test_workers_match_serial_run():
    net = default_net()
    serial = run_benchmark(_benchmark_config(trials=1), net).results
    parallel = run_benchmark(_benchmark_config(trials=1, workers=2), net).results
    pd.testing.assert_frame_equal(serial, parallel)


@pytest.mark.parametrize('overrides', [
    {'budgets': [0]}, {'trials': 0}, {'workers': 0}, {'action_space': 'tank'},
    {'policies': []}, {'cost_preset': 'gold'},
    {'policies': [{'policy': 'random'}, {'policy': 'random'}]},
])
def test_benchmark_config_validation(overrides):
    with pytest.raises(ConfigError):
        _benchmark_config(**overrides)


def test_benchmark_presets_load():
    for name in ('field', 'desk', 'desk-large', 'hardware'):
        cfg = BenchmarkConfig.from_preset(name, trials=2)
        assert cfg.trials == 2
    with pytest.raises(ConfigError):
        BenchmarkConfig.from_preset('moon')


# ==========================================
# command line
# ==========================================
def test_cli_end_to_end(tmp_path, capsys):
    net_path = str(tmp_path / 'net.json')
    assert rover_cli.main(['init-net', '--out', net_path]) == 0

    config_path = tmp_path / 'world.json'
    config_path.write_text(json.dumps(SMALL_WORLD))
    world_path = str(tmp_path / 'truth.json')
    assert rover_cli.main(['generate', '--world', str(config_path), '--seed', '4',
                           '--net', net_path, '--out', world_path]) == 0

    run_dir = str(tmp_path / 'run')
    assert rover_cli.main(['run', '--policy', 'mcts', '--iterations', '5', '--budget', '5',
                           '--world', world_path, '--net', net_path, '--no-excel', '--out', run_dir]) == 0

    bench = tmp_path / 'bench.json'
    bench.write_text(json.dumps({'world': SMALL_WORLD, 'policies': [{'policy': 'random'}],
                                 'budgets': [5], 'trials': 2}))
    bench_dir = tmp_path / 'bench'
    assert rover_cli.main(['benchmark', '--config', str(bench), '--net', net_path, '--out', str(bench_dir)]) == 0
    assert (bench_dir / 'report.xlsx').exists()

    trace_out = str(tmp_path / 'replay.csv')
    assert rover_cli.main(['replay', '--manifest', str(bench_dir / 'manifest.json'),
                           '--results', str(bench_dir / 'results.csv'), '--row', '1',
                           '--trace-out', trace_out]) == 0
    out = capsys.readouterr().out
    logged = [line.split()[2] for line in out.splitlines() if line.startswith('Logged:')]
    replayed = [line.split()[2] for line in out.splitlines() if line.startswith('Replayed:')]
    assert logged == replayed
    assert len(pd.read_csv(trace_out)) >= 1


def test_cli_reports_configuration_errors(tmp_path):
    assert rover_cli.main(['run', '--policy', 'random', '--budget', '5',
                           '--world', str(tmp_path / 'missing.json'), '--out', str(tmp_path)]) == 2
    assert rover_cli.main(['run', '--policy', 'random', '--budget', '0', '--out', str(tmp_path)]) == 2
    bad = tmp_path / 'bad.json'
    bad.write_text(json.dumps({'policies': [{'policy': 'random'}], 'budgets': [-1]}))
    assert rover_cli.main(['benchmark', '--config', str(bad), '--out', str(tmp_path)]) == 2
