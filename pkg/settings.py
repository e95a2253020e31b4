"""
Numerical settings for the Stokes geometry toolkit
Grouped by concern; environment variables override paths and thread counts.
"""
import copy
import logging
import os
from pathlib import Path
from typing import Dict

logger = logging.getLogger(__name__)

BASE_DIR = Path(__file__).parent

# Turning-point capture radius is CAPTURE_SCALE * (1 + |a|)
GEOMETRY = {
    'capture_scale': 1e-3,
    'hit_factor': 10.0,
    'escape_scale': 20.0,
    'arc_cap_scale': 200.0,
}

QUADRATURE = {
    'abs_tol': 1e-11,
    'rel_tol': 1e-10,
    'limit': 2000,
}

TRACER = {
    'rtol': 1e-9,
    'atol': 1e-11,
    'min_step': 1e-12,
    'max_steps': 20000,
    'short_tol': 1e-9,
    'gray_tol': 1e-6,
    'max_polyline_vertices': 64,
    'branch_check_tol': 1e-8,
}

LEVEL_SETS = {
    'atlas_radius': 8.0,
    'step': 0.01,
    'max_step': 0.08,
    'min_step': 1e-6,
    'newton_tol': 1e-10,
    'seed_tol': 1e-6,
    'grid_size': 200,
    'raster_size': 1201,
    'min_region_pixels': 5,
    'fd_step': 1e-5,
}

WKB = {
    'zeta_max': 40.0,
    'zeta_points': 4001,
    'volterra_tol': 1e-12,
    'volterra_max_iter': 60,
    'n_angles': 16,
    'bound_constant': 2.0,
}

ORACLE = {
    'radius_scale': 12.0,
    'rtol': 1e-11,
    'atol': 1e-13,
    'growth_per_chunk': 12.0,
    'wronskian_tol': 1e-9,
    'arg_tol': 0.05,
    'zero_clearance': 1e-6,
    'single_zero_box': 0.3,
    'min_box': 0.01,
    'newton_tol': 1e-12,
}

CLI = {
    'threads': 4,
    'float_format': '%.12g',
    'field_resolution': 41,
}


def _paths() -> Dict[str, str]:
    return {
        'cache_dir': os.environ.get('STOKES_CACHE_DIR', str(BASE_DIR / 'cache')),
        'log_dir': os.environ.get('STOKES_LOG_DIR', str(BASE_DIR / 'logs')),
    }


def get_settings() -> Dict[str, Dict]:
    """
    Return a merged copy of every settings group

    Returns:
        Dictionary keyed by group name; callers may mutate the copy freely
    """
    merged = {
        'geometry': copy.deepcopy(GEOMETRY),
        'quadrature': copy.deepcopy(QUADRATURE),
        'tracer': copy.deepcopy(TRACER),
        'level_sets': copy.deepcopy(LEVEL_SETS),
        'wkb': copy.deepcopy(WKB),
        'oracle': copy.deepcopy(ORACLE),
        'cli': copy.deepcopy(CLI),
        'paths': _paths(),
    }
    threads = os.environ.get('STOKES_THREADS')
    if threads:
        try:
            merged['cli']['threads'] = max(1, int(threads))
        except ValueError:
            logger.warning(f"Ignoring invalid STOKES_THREADS value: {threads}")
    return merged


def apply_tolerance(settings: Dict[str, Dict], tol: float) -> Dict[str, Dict]:
    """Scale the short-trajectory and quadrature tolerances from a CLI --tol flag"""
    if tol <= 0:
        raise ValueError(f"tolerance must be positive, got {tol}")
    settings['tracer']['short_tol'] = tol
    settings['tracer']['gray_tol'] = max(settings['tracer']['gray_tol'], 1e3 * tol)
    settings['quadrature']['rel_tol'] = min(settings['quadrature']['rel_tol'], tol)
    return settings
