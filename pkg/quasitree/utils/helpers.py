import hashlib
import json
import os
from pathlib import Path
from typing import Any

OUTPUT_DIR_ENV = "QUASITREE_OUTPUT_DIR"
DEFAULT_OUTPUT_DIR = "out"


def default_output_dir() -> Path:
    """The directory named by $QUASITREE_OUTPUT_DIR, or ./out."""
    return Path(os.environ.get(OUTPUT_DIR_ENV) or DEFAULT_OUTPUT_DIR)


def ensure_directory(file_path: str | Path) -> Path:
    """
    Ensure parent directory exists for a file path.

    Creates parent directories if they don't exist. Validates that the path
    itself is not an existing directory.

    :param file_path: File path as string or Path object
    :return: Validated Path object
    :raises ValueError: If path is an existing directory
    :raises OSError: If parent directory creation fails
    """
    path = Path(file_path)

    if path.exists() and path.is_dir():
        raise ValueError(f"Path is a directory, not a file: {file_path}")

    if path.parent != Path("."):
        path.parent.mkdir(parents=True, exist_ok=True)

    return path


def canonical_json(data: Any) -> str:
    """Serialize with sorted keys and two-space indentation, so equal data gives equal text."""
    return json.dumps(data, indent=2, sort_keys=True, ensure_ascii=False)


def sha256_hex(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def write_json(data: Any, file_path: str | Path) -> Path:
    """
    Write data as canonical JSON.

    :param data: JSON-serializable data
    :param file_path: Destination file
    :return: The written path
    """
    path = ensure_directory(file_path)
    path.write_text(canonical_json(data) + "\n", encoding="utf-8")
    return path
