import numpy as np
import pytest

from modules.bn_core import Categorical, Cpt, KnowledgeNet, LocalObservation, default_net
from modules.errors import ConfigError, OutOfBoundsError
from modules.sensing import Move, Pose, SensingAction, Sensor
from modules.world import WorldConfig, WorldState, footprint, generate, true_observe

E, SE = 0, 1
REMOTE = SensingAction(Move.FORWARD, Sensor.REMOTE)
LOCAL = SensingAction(Move.FORWARD, Sensor.LOCAL)


def _identity_net(channels=3, k=3):
    return KnowledgeNet(
        p_f_given_r=[Cpt.identity(k) for _ in range(channels)],
        p_z_given_f=[Cpt.identity(k) for _ in range(channels)],
        p_r_given_l=Cpt.identity(k),
        p_b_given_l=Cpt.identity(k),
    )


@pytest.fixture(scope='module')
def field_world():
    return generate(WorldConfig.from_preset('field', seed=3), default_net())


def test_field_world_has_25_regions(field_world):
    cfg = field_world.config
    assert cfg.n_regions == 25
    assert field_world.l_truth.shape == (40, 40)
    # every 8 x 8 block is homogeneous
    blocks = field_world.l_truth.reshape(5, 8, 5, 8)
    assert np.all(blocks == blocks[:, :1, :, :1])


def test_generation_is_deterministic():
    cfg = WorldConfig.from_preset('desk', seed=11)
    a, b = generate(cfg, default_net()), generate(cfg, default_net())
    np.testing.assert_array_equal(a.l_truth, b.l_truth)
    np.testing.assert_array_equal(a.b_truth, b.b_truth)
    assert a.rocks == b.rocks
    c = generate(cfg.with_seed(12), default_net())
    assert a.rocks != c.rocks or not np.array_equal(a.l_truth, c.l_truth)


def test_rocks_follow_their_cell_with_identity_cpts():
    world = generate(WorldConfig.from_preset('desk', seed=2, rock_density=4.0), _identity_net())
    assert world.rocks
    scale = world.config.scale
    for rock in world.rocks:
        l_class = world.l_truth[rock.cell[0] // scale, rock.cell[1] // scale]
        assert rock.r == l_class
        assert rock.f == (l_class,) * 3
    np.testing.assert_array_equal(world.b_truth, world.l_truth)


def test_rocks_occupy_distinct_cells():
    world = generate(WorldConfig.from_preset('desk', seed=5, rock_density=30.0), default_net())
    cells = [r.cell for r in world.rocks]
    assert len(cells) == len(set(cells))
    assert all(0 <= x < 200 and 0 <= y < 200 for x, y in cells)


def test_fixed_density_places_exact_counts():
    cfg = WorldConfig.from_preset('desk', seed=1, rock_density=3.0, density_kind='fixed')
    world = generate(cfg, default_net())
    assert len(world.rocks) == 3 * 100


def test_rock_classes_match_cpt_frequencies():
    p_r = np.array([[0.6, 0.3, 0.1], [0.1, 0.8, 0.1], [0.2, 0.2, 0.6]])
    net = KnowledgeNet(
        p_f_given_r=[Cpt.identity(3)], p_z_given_f=[Cpt.identity(3)],
        p_r_given_l=Cpt(p_r), p_b_given_l=Cpt.identity(3),
        l_prior=Categorical.uniform(3),
    )
    small = {'l_grid': [4, 4], 'region': [2, 2], 'rock_grid': [40, 40], 'fov': [10, 8],
             'rock_density': 5.0, 'density_kind': 'fixed'}
    counts = np.zeros((3, 3), dtype=int)
    for seed in range(200):
        world = generate(WorldConfig.from_dict({**small, 'seed': seed}), net)
        scale = world.config.scale
        for rock in world.rocks:
            counts[world.l_truth[rock.cell[0] // scale, rock.cell[1] // scale], rock.r] += 1

    n = counts.sum(axis=1)
    assert np.all(n > 1000)
    sigma = np.sqrt(n[:, None] * p_r * (1 - p_r))
    assert np.all(np.abs(counts - n[:, None] * p_r) < 3 * sigma)


def test_obstacles_leave_free_cells():
    world = generate(WorldConfig.from_preset('desk', seed=4, obstacle_fraction=0.3), default_net())
    assert world.obstacles is not None
    assert 0 < len(world.free_cells) < 100
    for x, y in world.free_cells.tolist():
        assert not world.obstacles[x, y]


def test_world_save_load(tmp_path):
    world = generate(WorldConfig.from_preset('desk', seed=9, obstacle_fraction=0.1), default_net())
    path = tmp_path / 'world.json'
    world.save(str(path))
    loaded = WorldState.load(str(path))
    assert loaded.config == world.config
    np.testing.assert_array_equal(loaded.l_truth, world.l_truth)
    np.testing.assert_array_equal(loaded.obstacles, world.obstacles)
    assert loaded.rocks == world.rocks


def test_config_validation():
    with pytest.raises(ConfigError):
        WorldConfig(l_grid=(10, 10), region=(3, 3), rock_grid=(200, 200))
    with pytest.raises(ConfigError):
        WorldConfig(l_grid=(10, 10), region=(2, 2), rock_grid=(205, 200))
    with pytest.raises(ConfigError):
        WorldConfig(l_grid=(10, 10), region=(2, 2), rock_grid=(200, 100))
    with pytest.raises(ConfigError):
        WorldConfig(rock_density=-1.0)
    with pytest.raises(ConfigError):
        WorldConfig.from_preset('mars')
    with pytest.raises(ConfigError):
        WorldConfig.from_dict({'l_grid': [10, 10], 'colour': 'red'})


def test_config_dict_round_trip():
    cfg = WorldConfig.from_preset('field', seed=42)
    assert WorldConfig.from_dict(cfg.to_dict()) == cfg


# ==========================================
# footprint
# ==========================================
def test_axis_aligned_remote_footprint():
    cfg = WorldConfig.from_preset('field')
    cells = footprint(Pose(10, 10, E), Sensor.REMOTE, cfg)
    assert cells.size == 2000
    rx, ry = np.divmod(cells, 800)
    assert (rx.min(), rx.max()) == (220, 269)
    assert (ry.min(), ry.max()) == (190, 229)


def test_diagonal_remote_footprint_area():
    cfg = WorldConfig.from_preset('field')
    cells = footprint(Pose(10, 10, SE), Sensor.REMOTE, cfg)
    assert abs(cells.size - 2000) <= 0.05 * 2000


def test_local_footprint_is_the_l_cell():
    cfg = WorldConfig.from_preset('field')
    cells = footprint(Pose(3, 4, E), Sensor.LOCAL, cfg)
    assert cells.size == 400
    rx, ry = np.divmod(cells, 800)
    assert set(rx.tolist()) == set(range(60, 80))
    assert set(ry.tolist()) == set(range(80, 100))


def test_footprint_facing_the_edge_is_empty():
    cfg = WorldConfig.from_preset('field')
    assert footprint(Pose(39, 10, E), Sensor.REMOTE, cfg).size == 0


def test_footprint_clipped_near_edge():
    cfg = WorldConfig.from_preset('field')
    cells = footprint(Pose(38, 10, E), Sensor.REMOTE, cfg)
    assert 0 < cells.size < 2000
    assert np.all(cells < 800 * 800)


def test_footprint_off_grid_pose_raises():
    with pytest.raises(OutOfBoundsError):
        footprint(Pose(40, 0, E), Sensor.REMOTE, WorldConfig.from_preset('field'))


# ==========================================
# true_observe
# ==========================================
def test_true_observe_identity_camera_reads_features():
    net = _identity_net()
    world = generate(WorldConfig.from_preset('desk', seed=6, rock_density=5.0), net)
    pose = Pose(2, 5, E)
    obs = true_observe(world, pose, REMOTE, net, np.random.default_rng(0))
    in_view = set(footprint(pose, Sensor.REMOTE, world.config).tolist())
    expected = {r.id for r in world.rocks if r.cell[0] * 200 + r.cell[1] in in_view}
    assert {r.rock_id for r in obs.rocks} == expected
    by_id = {r.id: r for r in world.rocks}
    for reading in obs.rocks:
        assert reading.z == by_id[reading.rock_id].f


def test_true_observe_local_reads_b():
    net = _identity_net()
    world = generate(WorldConfig.from_preset('desk', seed=6), net)
    obs = true_observe(world, Pose(4, 4, E), LOCAL, net, np.random.default_rng(0))
    assert obs == LocalObservation((4, 4), int(world.b_truth[4, 4]))


def test_true_observe_confusion_rate():
    p_z = np.array([[0.8, 0.1, 0.1], [0.1, 0.8, 0.1], [0.1, 0.1, 0.8]])
    net = KnowledgeNet(
        p_f_given_r=[Cpt.identity(3)], p_z_given_f=[Cpt(p_z)],
        p_r_given_l=Cpt.diagonal(3), p_b_given_l=Cpt.diagonal(3),
    )
    world = generate(WorldConfig.from_preset('desk', seed=7, rock_density=20.0, density_kind='fixed'), net)
    rng = np.random.default_rng(1)
    wrong = total = 0
    by_id = {r.id: r for r in world.rocks}
    for x in range(1, 9):
        for y in range(1, 9):
            obs = true_observe(world, Pose(x, y, E), REMOTE, net, rng)
            for reading in obs.rocks:
                total += 1
                wrong += reading.z[0] != by_id[reading.rock_id].f[0]
    assert total > 5000
    sigma = np.sqrt(total * 0.2 * 0.8)
    assert abs(wrong - 0.2 * total) < 3 * sigma
