"""
Rover Science Autonomy Configuration - Presets dan Parameter Misi
Default values untuk simulasi, benchmark dan eksperimen rover lapangan
"""

# ==========================================
# COST PRESETS (budget units per sensor)
# ==========================================
COST_PRESETS = {
    'sim': {
        'remote': 1,       # kamera (remote sensor)
        'local': 8         # UV / spectrometer (local sensor)
    },
    'hardware': {
        'remote': 1,
        'local': 5
    }
}

DEFAULT_COST_PRESET = 'sim'

# Action space variants: 'sim' rotates on the spot, 'hardware' steps diagonally
ACTION_SPACES = ['sim', 'hardware']
DEFAULT_ACTION_SPACE = 'sim'

# Sensor fires on rotation actions as well as on forward moves
FIRE_ON_ROTATE = True

# ==========================================
# WORLD PRESETS
# ==========================================
WORLD_PRESETS = {
    'field': {
        'l_grid': (40, 40),        # location type / UV grid
        'region': (8, 8),          # 25 homogeneous regions
        'rock_grid': (800, 800),   # rock & feature grid
        'fov': (50, 40),           # depth x width (rock cells)
        'rock_density': 1.0,       # rocks per L cell
        'density_kind': 'poisson',
        'obstacle_fraction': 0.0
    },
    'desk': {
        'l_grid': (10, 10),
        'region': (2, 2),
        'rock_grid': (200, 200),
        'fov': (50, 40),
        'rock_density': 1.0,
        'density_kind': 'poisson',
        'obstacle_fraction': 0.0
    }
}

DEFAULT_WORLD_PRESET = 'desk'

# ==========================================
# KNOWLEDGE NETWORK DEFAULTS
# ==========================================
DEFAULT_CARDINALITY = 3          # semua node punya 3 kategori
DEFAULT_FEATURE_CHANNELS = 3     # circularity, size, colour
DEFAULT_CPT_DIAGONAL = 0.7       # rows 0.7 / 0.15 / 0.15

DEFAULT_COUPLING = {
    'sigma': 1.0,    # L cells
    'radius': 2      # L cells, Gaussian truncated below ~e^-2
}

# Poisson rock count per L-cell-sized footprint region (rollout sampling)
ROCK_DENSITY = {
    'rate': 1.0,
    'kind': 'poisson'
}

# Probability floor applied before every normalisation
PROB_FLOOR = 1e-12
NORMALIZATION_TOL = 1e-9

# ==========================================
# PLANNER DEFAULTS
# ==========================================
PLANNER_DEFAULTS = {
    'iterations': 100,
    'cp': 0.1,              # exploration constant
    'greedy_samples': 20,
    'log_base': 'e'         # 'e' (standard UCT) atau '2'
}

POLICY_NAMES = ['mcts', 'greedy', 'random', 'fixed']

# ==========================================
# BENCHMARK PRESETS
# ==========================================
STANDARD_POLICIES = [
    {'label': 'random', 'policy': 'random'},
    {'label': 'fixed', 'policy': 'fixed'},
    {'label': 'greedy', 'policy': 'greedy', 'greedy_samples': 20},
    {'label': 'mcts-50', 'policy': 'mcts', 'iterations': 50},
    {'label': 'mcts-100', 'policy': 'mcts', 'iterations': 100}
]

BENCHMARK_PRESETS = {
    'field': {
        'world': 'field',
        'policies': STANDARD_POLICIES,
        'budgets': [50, 70, 100],
        'trials': 50,
        'cost_preset': 'sim',
        'action_space': 'sim',
        'master_seed': 2017,
        'paired': True
    },
    'desk': {
        'world': 'desk',
        'policies': STANDARD_POLICIES,
        'budgets': [30],
        'trials': 30,
        'cost_preset': 'sim',
        'action_space': 'sim',
        'master_seed': 2017,
        'paired': True
    },
    # budget jauh di atas ~20 view yang menutup peta desk; greedy vs MCTS
    'desk-large': {
        'world': 'desk',
        'policies': [
            {'label': 'greedy', 'policy': 'greedy', 'greedy_samples': 20},
            {'label': 'mcts-100', 'policy': 'mcts', 'iterations': 100}
        ],
        'budgets': [60],
        'trials': 30,
        'cost_preset': 'sim',
        'action_space': 'sim',
        'master_seed': 2017,
        'paired': True
    },
    'hardware': {
        'world': 'desk',
        'policies': [
            {'label': 'random', 'policy': 'random'},
            {'label': 'mcts-50', 'policy': 'mcts', 'iterations': 50}
        ],
        'budgets': [30],
        'trials': 10,
        'cost_preset': 'hardware',
        'action_space': 'hardware',
        'master_seed': 2017,
        'paired': True
    }
}

# ==========================================
# LOGGING
# ==========================================
LOG_FORMAT = '%(asctime)s %(levelname)-7s %(name)s: %(message)s'
LOG_DATE_FORMAT = '%H:%M:%S'
DEFAULT_LOG_LEVEL = 'INFO'

# ==========================================
# EXPORT SETTINGS
# ==========================================
EXPORT_SETTINGS = {
    'results_csv': 'results.csv',
    'traces_csv': 'traces.csv',
    'summary_csv': 'summary.csv',
    'manifest_json': 'manifest.json',
    'timing_json': 'timing.json',
    'report_xlsx': 'report.xlsx',
    'float_format': '%.10g'
}

# ==========================================
# VISUALIZATION COLORS (dashboard)
# ==========================================
POLICY_COLORS = {
    'random': '#94a3b8',     # Slate
    'fixed': '#eab308',      # Yellow
    'greedy': '#f97316',     # Orange
    'mcts-50': '#3b82f6',    # Blue
    'mcts-100': '#1e3a8a'    # Navy
}
