"""
Pytest tests for CSV, DOT, JSON and error-handling helpers.
"""

import json
import math

import networkx as nx
import numpy as np
import pytest
from pydantic import BaseModel, ValidationError

from quasitree.errors import BarrierNotFoundError, DisconnectedComplexError, WindowError
from quasitree.utils import canonical_json, ensure_directory, write_csv_from_dicts, write_dot, write_json
from quasitree.utils.csv_writer import format_value
from quasitree.utils.error_handler import (
    EXIT_ERROR,
    EXIT_INTERRUPTED,
    exit_code_for_category,
    format_error_for_category,
    get_error_category,
)
from quasitree.utils.helpers import default_output_dir, sha256_hex


@pytest.mark.unit
class TestCsvWriter:
    """Tests for CSV formatting."""

    @pytest.mark.parametrize(
        "value,expected",
        [
            (None, ""),
            (True, "True"),
            (np.bool_(False), "False"),
            (np.int64(7), "7"),
            (0.1 + 0.2, "0.3"),
            (math.inf, "inf"),
            (-math.inf, "-inf"),
            (np.float64(2.5), "2.5"),
            (["a", 1], "a 1"),
        ],
    )
    def test_format_value(self, value, expected):
        """Test that values format identically across runs."""
        assert format_value(value) == expected

    def test_write_csv(self, tmp_path):
        """Test headers, ordering and missing values."""
        rows = [{"k": 1, "ratio": 0.5}, {"k": 2, "ratio": None, "extra": "ignored"}]
        content = write_csv_from_dicts(["k", "ratio"], rows, tmp_path / "out" / "rows.csv")
        assert content == "k,ratio\n1,0.5\n2,\n"
        assert (tmp_path / "out" / "rows.csv").read_text(encoding="utf-8") == content


@pytest.mark.unit
class TestDotWriter:
    """Tests for DOT export."""

    def test_sorted_output(self):
        """Test that nodes and edges are written in sorted order with attributes."""
        graph = nx.Graph()
        graph.add_edge("b", "a", weight=2.0)
        graph.add_node("c", role="hub")
        content = write_dot(graph, name="demo", graph_attributes={"K": 30.0})
        assert content.splitlines() == [
            'graph "demo" {',
            '  K="30";',
            '  "a" [label="a"];',
            '  "b" [label="b"];',
            '  "c" [label="c", role="hub"];',
            '  "a" -- "b" [weight="2"];',
            "}",
        ]

    def test_quotes_are_escaped(self, tmp_path):
        """Test escaping of quotes in ids."""
        graph = nx.Graph()
        graph.add_node('say "hi"')
        content = write_dot(graph, file_path=tmp_path / "g.dot")
        assert '"say \\"hi\\""' in content
        assert (tmp_path / "g.dot").exists()


@pytest.mark.unit
class TestHelpers:
    """Tests for JSON and path helpers."""

    def test_canonical_json_sorts_keys(self):
        """Test that key order does not change the text."""
        assert canonical_json({"b": 1, "a": 2}) == canonical_json({"a": 2, "b": 1})

    def test_sha256(self):
        """Test the hash of the empty string."""
        assert sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"

    def test_write_json(self, tmp_path):
        """Test that JSON files end with a newline and parse back."""
        path = write_json({"x": [1, 2]}, tmp_path / "deep" / "data.json")
        text = path.read_text(encoding="utf-8")
        assert text.endswith("}\n")
        assert json.loads(text) == {"x": [1, 2]}

    def test_ensure_directory_rejects_directories(self, tmp_path):
        """Test that a directory is not a file path."""
        with pytest.raises(ValueError):
            ensure_directory(tmp_path)

    def test_default_output_dir(self, monkeypatch):
        """Test the fallback output directory."""
        monkeypatch.delenv("QUASITREE_OUTPUT_DIR", raising=False)
        assert str(default_output_dir()) == "out"


class _Strict(BaseModel):
    value: int


@pytest.mark.unit
class TestErrorHandler:
    """Tests for error categories and exit codes."""

    @pytest.mark.parametrize(
        "error,category",
        [
            (ValueError("bad"), "expected"),
            (WindowError("outside"), "expected"),
            (BarrierNotFoundError("K too small"), "expected"),
            (KeyError("V9"), "expected"),
            (FileNotFoundError("absent.json"), "expected"),
            (PermissionError("denied"), "io"),
            (KeyboardInterrupt(), "interrupt"),
            (DisconnectedComplexError("split", [["A"], ["B"]]), "unexpected"),
        ],
    )
    def test_categories(self, error, category):
        """Test how exceptions are categorized."""
        assert get_error_category(error) == category

    def test_validation_error_is_expected(self):
        """Test that pydantic validation errors are input errors."""
        with pytest.raises(ValidationError) as raised:
            _Strict(value="many")
        assert get_error_category(raised.value) == "expected"

    def test_messages(self):
        """Test the message for each category."""
        assert format_error_for_category(ValueError("bad"), "expected") == "Error: bad"
        assert format_error_for_category(OSError("disk"), "io") == "File operation failed: disk"
        assert format_error_for_category(KeyboardInterrupt(), "interrupt") == "Interrupted"

    def test_unexpected_message_has_traceback(self):
        """Test that unexpected errors carry their traceback."""
        try:
            raise RuntimeError("boom")
        except RuntimeError as error:
            message = format_error_for_category(error, "unexpected")
        assert "UNEXPECTED ERROR" in message
        assert "RuntimeError: boom" in message

    def test_exit_codes(self):
        """Test exit codes by category."""
        assert exit_code_for_category("interrupt") == EXIT_INTERRUPTED
        assert exit_code_for_category("expected") == EXIT_ERROR
        assert exit_code_for_category("unexpected") == EXIT_ERROR
