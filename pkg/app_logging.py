"""
Application logging setup
Rotating log files for all computations plus a separate error log
"""
import logging
import logging.handlers
import os
from pathlib import Path

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'

_configured_dirs = set()


def get_log_dir() -> Path:
    log_dir = Path(os.environ.get('STOKES_LOG_DIR', Path(__file__).parent / 'logs'))
    log_dir.mkdir(parents=True, exist_ok=True)
    return log_dir


def setup_application_logging(level: int = logging.INFO, console: bool = True) -> logging.Logger:
    """
    Configure root logging with rotating handlers

    Args:
        level: Root log level
        console: Also echo records to stderr

    Returns:
        The root logger
    """
    log_dir = get_log_dir()
    root = logging.getLogger()
    root.setLevel(level)

    key = str(log_dir.resolve())
    if key in _configured_dirs:
        return root

    formatter = logging.Formatter(LOG_FORMAT)

    # Main log: 50MB per file, keep 10
    main_handler = logging.handlers.RotatingFileHandler(
        log_dir / 'stokes.log',
        maxBytes=50 * 1024 * 1024,
        backupCount=10,
        encoding='utf-8',
    )
    main_handler.setFormatter(formatter)
    root.addHandler(main_handler)

    error_handler = logging.handlers.RotatingFileHandler(
        log_dir / 'errors.log',
        maxBytes=10 * 1024 * 1024,
        backupCount=5,
        encoding='utf-8',
    )
    error_handler.setLevel(logging.ERROR)
    error_handler.setFormatter(formatter)
    root.addHandler(error_handler)

    if console:
        stream = logging.StreamHandler()
        stream.setLevel(logging.WARNING)
        stream.setFormatter(formatter)
        root.addHandler(stream)

    _configured_dirs.add(key)
    root.info(f"Logging initialised in {log_dir}")
    return root
