from .csv_writer import write_csv_from_dicts
from .dot_writer import write_dot
from .helpers import canonical_json, default_output_dir, ensure_directory, write_json

__all__ = [
    "canonical_json",
    "default_output_dir",
    "ensure_directory",
    "write_csv_from_dicts",
    "write_dot",
    "write_json",
]
