"""
Centralized logging configuration
"""
import functools
import logging
import os
from datetime import datetime
from logging.handlers import RotatingFileHandler, TimedRotatingFileHandler
from typing import Optional

from .file_utils import load_config, resolve_path

ROOT_LOGGER = 'bergman_reflect'
LEVEL_VARIABLE = 'BERGMAN_REFLECT_LOG_LEVEL'


class Logger:
    """Configures one handler set on the package root; module loggers are its children"""

    def __init__(self, config_path: str = "config/verify_config.yml"):
        try:
            config = load_config(config_path)
        except Exception as e:
            logging.getLogger(__name__).warning(f"Error loading config: {e}")
            config = {}
        self.log_config = config.get('logging', {})
        self.log_dir = str(resolve_path(config.get('paths', {}).get('logs', 'data/logs')))
        self.root = logging.getLogger(ROOT_LOGGER)
        self._configure()

    @property
    def level(self) -> int:
        name = os.getenv(LEVEL_VARIABLE) or self.log_config.get('level', 'INFO')
        return getattr(logging, str(name).upper(), logging.INFO)

    def _file_handler(self) -> Optional[logging.Handler]:
        if not self.log_config.get('log_to_file', True):
            return None
        try:
            os.makedirs(self.log_dir, exist_ok=True)
        except OSError as e:
            logging.getLogger(__name__).warning(f"File logging disabled, cannot create {self.log_dir}: {e}")
            return None

        log_file = os.path.join(self.log_dir, f"verification_{datetime.now().strftime('%Y%m%d')}.log")
        backups = self.log_config.get('backup_count', 7)
        if self.log_config.get('file_rotation', 'daily') == 'daily':
            return TimedRotatingFileHandler(log_file, when='midnight', interval=1, backupCount=backups)
        max_bytes = self.log_config.get('max_log_size_mb', 100) * 1024 * 1024
        return RotatingFileHandler(log_file, maxBytes=max_bytes, backupCount=backups)

    def _configure(self):
        if self.root.handlers:
            return
        formatter = logging.Formatter(
            self.log_config.get('format', '%(asctime)s - %(name)s - %(levelname)s - %(message)s'))
        self.root.setLevel(self.level)
        self.root.propagate = False

        # stderr only; stdout carries reports
        handlers = [logging.StreamHandler(), self._file_handler()]
        for handler in filter(None, handlers):
            handler.setFormatter(formatter)
            self.root.addHandler(handler)

    def get_logger(self, name: Optional[str] = None) -> logging.Logger:
        """Child logger of the package root

        Args:
            name: Logger name (usually module name)

        Returns:
            Logger sharing the root handlers
        """
        if not name:
            return self.root
        return self.root.getChild(name.replace('src.', '', 1))


_logger_manager: Optional[Logger] = None


def get_logger(name: Optional[str] = None) -> logging.Logger:
    """Get or create the global logger manager and return a named logger"""
    global _logger_manager
    if _logger_manager is None:
        _logger_manager = Logger()
    return _logger_manager.get_logger(name)


def log_execution_time(func):
    """Decorator to log function execution time"""
    logger = get_logger(func.__module__)

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        start_time = datetime.now()
        logger.info(f"Starting {func.__qualname__}")
        try:
            result = func(*args, **kwargs)
        except Exception as e:
            duration = (datetime.now() - start_time).total_seconds()
            logger.error(f"Error in {func.__qualname__} after {duration:.2f} seconds: {e}")
            raise
        duration = (datetime.now() - start_time).total_seconds()
        logger.info(f"Completed {func.__qualname__} in {duration:.2f} seconds")
        return result

    return wrapper
