"""
File utility functions for configuration loading and report output
"""
import json
import os
from pathlib import Path
from typing import Any, Dict, Iterable, Optional

import pandas as pd
import yaml

PROJECT_ROOT = Path(__file__).resolve().parents[2]

FLOAT_FORMAT = '%.17g'


def resolve_path(path: str) -> Path:
    """Resolve a path, falling back to the project root for relative paths

    Args:
        path: Absolute path, or path relative to the working directory or project root

    Returns:
        Resolved path
    """
    candidate = Path(path)
    if candidate.is_absolute() or candidate.exists():
        return candidate
    return PROJECT_ROOT / candidate


def load_config(config_path: str = "config/verify_config.yml") -> dict:
    """Load YAML configuration file

    Args:
        config_path: Path to configuration file

    Returns:
        Configuration dictionary
    """
    with open(resolve_path(config_path), 'r') as f:
        return yaml.safe_load(f) or {}


def ensure_directory(directory: str):
    """Ensure directory exists, create if not

    Args:
        directory: Directory path
    """
    os.makedirs(directory, exist_ok=True)


def _plain(value: Any) -> Any:
    """Convert numpy scalars and complex numbers into JSON-friendly values"""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if hasattr(value, 'tolist'):
        return _plain(value.tolist())
    if isinstance(value, complex):
        return {'re': value.real, 'im': value.imag}
    return value


def to_json_line(record: Dict[str, Any]) -> str:
    """Serialize one report record as a compact, key-sorted JSON line"""
    return json.dumps(_plain(record), sort_keys=True, allow_nan=True)


def write_report(frame: pd.DataFrame, output_path: Optional[str] = None, fmt: str = 'csv') -> str:
    """Write report rows as CSV or JSON lines

    Args:
        frame: Report rows
        output_path: Destination file (None for stdout)
        fmt: 'csv' or 'jsonl'

    Returns:
        Rendered report text
    """
    if fmt == 'csv':
        text = frame.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator='\n')
    else:
        text = ''.join(to_json_line(row) + '\n' for row in frame.to_dict(orient='records'))

    if output_path:
        parent = os.path.dirname(output_path)
        if parent:
            ensure_directory(parent)
        with open(output_path, 'w') as f:
            f.write(text)
    return text


def append_jsonl(records: Iterable[Dict[str, Any]], output_path: str):
    """Append records to a JSON lines file, one flush per record

    Args:
        records: Report records
        output_path: JSON lines file
    """
    parent = os.path.dirname(output_path)
    if parent:
        ensure_directory(parent)
    with open(output_path, 'a') as f:
        for record in records:
            f.write(to_json_line(record) + '\n')
            f.flush()


def write_summary(summary: Dict[str, Any], output_path: str) -> str:
    """Write the JSON summary that accompanies a report

    Args:
        summary: Summary dictionary (banner, checks, fitted constants)
        output_path: Destination file

    Returns:
        Path to summary file
    """
    parent = os.path.dirname(output_path)
    if parent:
        ensure_directory(parent)
    with open(output_path, 'w') as f:
        json.dump(_plain(summary), f, indent=2, sort_keys=True, allow_nan=True)
        f.write('\n')
    return output_path
