"""CSV writing utilities for clean and consistent CSV export."""

import csv
import math
from io import StringIO
from pathlib import Path
from typing import Any

import numpy as np

from quasitree.utils.helpers import ensure_directory

FLOAT_FORMAT = ".10g"


def format_value(value: Any) -> str:
    """
    Format a value for CSV output.

    Floats (including numpy scalars) use a fixed number of significant digits so
    repeated runs write identical files; infinities read ``inf``.

    :param value: Value to format
    :return: Formatted string representation
    """
    if value is None:
        return ""
    elif isinstance(value, bool | np.bool_):
        return str(bool(value))
    elif isinstance(value, int | np.integer):
        return str(int(value))
    elif isinstance(value, float | np.floating):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return format(float(value), FLOAT_FORMAT)
    elif isinstance(value, list | tuple):
        return " ".join(format_value(item) for item in value)
    return str(value)


def write_csv_from_dicts(headers: list[str], rows: list[dict[str, Any]], file_path: str | Path | None = None) -> str:
    """
    Write CSV from list of dictionaries.

    :param headers: List of column headers
    :param rows: List of dictionaries containing row data
    :param file_path: Optional file path to save CSV
    :return: CSV content as string
    """
    output = StringIO()
    writer = csv.DictWriter(output, fieldnames=headers, extrasaction="ignore", lineterminator="\n")
    writer.writeheader()
    writer.writerows({key: format_value(row.get(key)) for key in headers} for row in rows)

    csv_content = output.getvalue()

    if file_path:
        ensure_directory(file_path).write_text(csv_content, encoding="utf-8")

    return csv_content
