"""
Run Ledger
Records every CLI command run (arguments, outcome, runtime) in a JSON ledger
for later inspection.
"""
import json
import logging
import os
import threading
from datetime import datetime, timedelta
from pathlib import Path
from typing import Dict, List

logger = logging.getLogger('RunLedger')

MAX_ENTRIES = 500
STATUSES = ('success', 'warning', 'error', 'info')


class RunLedger:
    """Thread-safe JSON ledger of CLI runs"""

    def __init__(self, log_file: str = None):
        if log_file is None:
            log_dir = Path(os.environ.get('STOKES_LOG_DIR', Path(__file__).parent / 'logs'))
            log_file = log_dir / 'run_ledger.json'
        self.log_file = Path(log_file)
        self.lock = threading.Lock()

    def _load(self) -> List[Dict]:
        try:
            if self.log_file.exists():
                with open(self.log_file, 'r') as f:
                    return json.load(f)
            return []
        except (OSError, ValueError) as e:
            logger.error(f"Failed to load run ledger: {e}")
            return []

    def _save(self, entries: List[Dict]):
        try:
            self.log_file.parent.mkdir(parents=True, exist_ok=True)
            with open(self.log_file, 'w') as f:
                json.dump(entries, f, indent=2, sort_keys=True)
        except OSError as e:
            logger.error(f"Failed to save run ledger: {e}")

    def log_run(self, command: str, arguments: Dict, status: str = 'success', exit_code: int = 0,
                seconds: float = None, details: str = None):
        """
        Append one run

        Args:
            command: CLI subcommand name
            arguments: Parsed arguments (JSON-safe)
            status: 'success', 'warning', 'error' or 'info'
            exit_code: Process exit code
            seconds: Wall-clock runtime
            details: Summary line or error message
        """
        if status not in STATUSES:
            status = 'info'
        now = datetime.now()
        entry = {
            'timestamp': now.isoformat(),
            'date': now.strftime('%Y-%m-%d'),
            'command': command,
            'arguments': arguments,
            'status': status,
            'exit_code': exit_code,
            'seconds': seconds,
            'details': details,
        }
        with self.lock:
            entries = self._load()
            entries.append(entry)
            if len(entries) > MAX_ENTRIES:
                entries = entries[-MAX_ENTRIES:]
            self._save(entries)
        logger.info(f"Logged run: {command} [{status}, exit {exit_code}]")

    def runs_on(self, date_str: str) -> List[Dict]:
        return [e for e in self._load() if e.get('date') == date_str]

    def recent_runs(self, hours: int = 24) -> List[Dict]:
        cutoff = datetime.now() - timedelta(hours=hours)
        recent = []
        for entry in self._load():
            try:
                if datetime.fromisoformat(entry['timestamp']) >= cutoff:
                    recent.append(entry)
            except (KeyError, ValueError):
                continue
        return recent

    def daily_summary(self, date_str: str = None) -> Dict:
        """Counts by command and status for one day"""
        if date_str is None:
            date_str = datetime.now().strftime('%Y-%m-%d')
        entries = self.runs_on(date_str)
        summary = {
            'date': date_str,
            'total_runs': len(entries),
            'by_command': {},
            'by_status': {status: 0 for status in STATUSES},
            'total_seconds': 0.0,
        }
        for entry in entries:
            command = entry.get('command', 'unknown')
            summary['by_command'][command] = summary['by_command'].get(command, 0) + 1
            status = entry.get('status', 'info')
            if status in summary['by_status']:
                summary['by_status'][status] += 1
            summary['total_seconds'] += entry.get('seconds') or 0.0
        return summary


# Global instance
run_ledger = RunLedger()


def log_command(command: str, arguments: Dict, exit_code: int, seconds: float = None, details: str = None):
    """Record a finished CLI command; non-zero exit codes are logged as errors"""
    status = 'success' if exit_code == 0 else 'error'
    run_ledger.log_run(command, arguments, status, exit_code, seconds, details)
