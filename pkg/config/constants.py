"""Configuration constants for prec-sched"""
import logging
import math
import os
from pathlib import Path

import yaml

logger = logging.getLogger(__name__)

# Get config file path
CONFIG_DIR = Path(__file__).parent
CONFIG_FILE = Path(os.environ.get("PREC_SCHED_CONFIG", CONFIG_DIR / "config.yaml"))


# Load configuration
def load_config(path: Path = CONFIG_FILE) -> dict:
    """Load configuration from YAML file"""
    if path.exists():
        with open(path, 'r') as f:
            return yaml.safe_load(f) or {}
    logger.warning("Config file not found at %s, using defaults", path)
    return {}


CONFIG = load_config()

_schedule = CONFIG.get('schedule', {})
_lp = CONFIG.get('lp', {})
_decomposition = CONFIG.get('decomposition', {})
_bounded = CONFIG.get('bounded', {})
_oracle = CONFIG.get('oracle', {})
_harness = CONFIG.get('harness', {})
_application = CONFIG.get('application', {})

# Instance model and list scheduling
SCHEDULE_CONFIG = {
    'time_tolerance': float(_schedule.get('time_tolerance', 1e-9)),
    'ls_variant': _schedule.get('ls_variant', 'available'),
}

# LP relaxation
LP_CONFIG = {
    'tolerance': float(_lp.get('tolerance', 1e-7)),
    'separation': _lp.get('separation', 'auto'),
    'exhaustive_cap': int(_lp.get('exhaustive_cap', 18)),
    'iteration_factor': int(_lp.get('iteration_factor', 10)),
    'strengthen': bool(_lp.get('strengthen', False)),
    'lemma_subset_cap': int(_lp.get('lemma_subset_cap', 12)),
    'lemma_samples': int(_lp.get('lemma_samples', 4096)),
}

# Decomposition
DECOMPOSITION_CONFIG = {
    'epsilon': str(_decomposition.get('epsilon', 1)),
    'b_nudge': float(_decomposition.get('b_nudge', 1e-9)),
}

# Bounded solver
BOUNDED_CONFIG = {
    'mode': _bounded.get('mode', 'exhaustive'),
    'guess_cap': int(_bounded.get('guess_cap', 10)),
    'budget': _bounded.get('budget'),
}

# Exact oracle
ORACLE_CONFIG = {
    'pareto_cap': int(_oracle.get('pareto_cap', 12)),
    'permutation_cap': int(_oracle.get('permutation_cap', 9)),
}

# Generators and bench
HARNESS_CONFIG = {
    'workers': int(os.environ.get('PREC_SCHED_THREADS', _harness.get('workers', 4))),
    'p_max': int(_harness.get('p_max', 10)),
    'r_max': int(_harness.get('r_max', 20)),
    'w_max': int(_harness.get('w_max', 10)),
    'prec_density': float(_harness.get('prec_density', 0.2)),
}

# Application Settings
APP_CONFIG = {
    'debug_mode': _application.get('debug_mode', False),
    'log_level': _application.get('log_level', 'INFO'),
}

# Derived constants
EPSILON_MAX = 3.0 / math.log(3.0)  # interval containment needs e^(3/eps) >= 3

# Exit codes
EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INVALID = 2
EXIT_INVARIANT = 3
