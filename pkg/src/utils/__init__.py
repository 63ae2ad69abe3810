"""
Utility modules initialization
"""
from .logger import get_logger, log_execution_time
from .file_utils import (
    append_jsonl,
    ensure_directory,
    load_config,
    resolve_path,
    write_report,
    write_summary,
)

__all__ = [
    'get_logger',
    'log_execution_time',
    'append_jsonl',
    'ensure_directory',
    'load_config',
    'resolve_path',
    'write_report',
    'write_summary',
]
