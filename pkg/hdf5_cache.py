"""
HDF5 result cache
Expensive sweeps (level-set atlases, spectra) stored under the SHA-256 of
their canonical scenario JSON.

Structure:
/results/<key>            attrs: scenario, payload, command, created_at
/results/<key>/<array>    gzip-compressed datasets
"""
import hashlib
import json
import logging
import os
import threading
from datetime import datetime
from pathlib import Path
from typing import Dict, Optional, Tuple

import h5py
import numpy as np

logger = logging.getLogger(__name__)

SCHEMA_VERSION = '1.0'


def scenario_key(scenario: Dict) -> str:
    """SHA-256 of the scenario serialized with sorted keys"""
    canonical = json.dumps(scenario, sort_keys=True, separators=(',', ':'), default=str)
    return hashlib.sha256(canonical.encode('utf-8')).hexdigest()


class ResultCache:
    """Content-addressed HDF5 store for computed results"""

    def __init__(self, cache_dir: str = None, filename: str = 'results.h5'):
        if cache_dir is None:
            cache_dir = os.environ.get('STOKES_CACHE_DIR', str(Path(__file__).parent / 'cache'))
        self.db_path = Path(cache_dir) / filename
        self.lock = threading.Lock()
        self.ensure_database()

    def ensure_database(self):
        """Create the file and its /results group if missing"""
        if self.db_path.exists():
            return
        self.db_path.parent.mkdir(parents=True, exist_ok=True)
        with h5py.File(self.db_path, 'w') as f:
            f.create_group('results')
            f.attrs['schema_version'] = SCHEMA_VERSION
            f.attrs['created_at'] = datetime.now().isoformat()
        logger.info(f"Created result cache: {self.db_path}")

    def store(self, command: str, scenario: Dict, payload: Dict,
              arrays: Optional[Dict[str, np.ndarray]] = None) -> str:
        """
        Store a result, replacing any earlier entry for the same scenario

        Args:
            command: Producing command
            scenario: Inputs that determine the result
            payload: JSON-serializable summary
            arrays: Numeric arrays saved as compressed datasets

        Returns:
            The scenario key
        """
        key = scenario_key({'command': command, **scenario})
        with self.lock, h5py.File(self.db_path, 'a') as f:
            results = f.require_group('results')
            if key in results:
                del results[key]
            group = results.create_group(key)
            group.attrs['command'] = command
            group.attrs['scenario'] = json.dumps(scenario, sort_keys=True, default=str)
            group.attrs['payload'] = json.dumps(payload, sort_keys=True, default=str)
            group.attrs['created_at'] = datetime.now().isoformat()
            for name, values in (arrays or {}).items():
                group.create_dataset(name, data=np.asarray(values), compression='gzip', compression_opts=9)
        logger.info(f"Cached {command} result {key[:12]}")
        return key

    def load(self, command: str, scenario: Dict) -> Optional[Tuple[Dict, Dict[str, np.ndarray]]]:
        """(payload, arrays) for a scenario, or None on a miss"""
        key = scenario_key({'command': command, **scenario})
        try:
            with self.lock, h5py.File(self.db_path, 'r') as f:
                results = f.get('results')
                if results is None or key not in results:
                    return None
                group = results[key]
                payload = json.loads(group.attrs['payload'])
                arrays = {name: group[name][()] for name in group.keys()}
        except (OSError, KeyError, ValueError) as e:
            logger.error(f"Failed to read cached result {key[:12]}: {e}")
            return None
        logger.debug(f"Cache hit for {command} ({key[:12]})")
        return payload, arrays

    def get_statistics(self) -> Dict:
        """Entry counts per command and file size"""
        stats = {'total_entries': 0, 'by_command': {}, 'file_size_mb': 0.0}
        try:
            with self.lock, h5py.File(self.db_path, 'r') as f:
                for group in f['results'].values():
                    command = group.attrs.get('command', 'unknown')
                    stats['by_command'][command] = stats['by_command'].get(command, 0) + 1
                    stats['total_entries'] += 1
            stats['file_size_mb'] = self.db_path.stat().st_size / (1024 * 1024)
        except (OSError, KeyError) as e:
            logger.error(f"Error reading cache statistics: {e}")
        return stats
