"""
Pytest tests for the experiment runner.
"""

import json
from pathlib import Path

import pytest
from pydantic import ValidationError

from quasitree.cli import (
    Experiment,
    ExperimentConfig,
    Suite,
    VerificationReport,
    build_parser,
    diameter_growth,
    main,
    resolve_config,
)
from quasitree.instances import TabularSpec, chain_instance
from quasitree.reports import make_entry


@pytest.fixture
def violation_file(tmp_path):
    """A tabular instance breaking the Behrstock inequality."""
    spec = TabularSpec(xi=1.0, vertices=["X", "Y", "Z"], dpi={"Y": {"X|Z": 5.0}, "X": {"Y|Z": 5.0}})
    file_path = tmp_path / "violation.json"
    spec.to_json(file_path)
    return file_path


def read_report(directory: Path) -> dict:
    return json.loads((directory / "report.json").read_text(encoding="utf-8"))


@pytest.mark.unit
class TestConfig:
    """Tests for configuration resolution."""

    def test_defaults(self):
        """Test the default run configuration."""
        config = ExperimentConfig()
        assert config.instance == "schottky-default"
        assert config.metrics == ["modified"]
        assert config.selected([Suite.COMPLEX]) == [Suite.COMPLEX]

    def test_output_dir_from_environment(self, monkeypatch, tmp_path):
        """Test that the output directory default reads the environment."""
        monkeypatch.setenv("QUASITREE_OUTPUT_DIR", str(tmp_path / "runs"))
        assert ExperimentConfig().out == tmp_path / "runs"

    def test_unknown_fields_rejected(self):
        """Test that misspelt settings fail validation."""
        with pytest.raises(ValidationError):
            ExperimentConfig(wrod="a")

    def test_flags_override_toml(self, tmp_path):
        """Test the precedence flags over TOML over defaults."""
        config_file = tmp_path / "run.toml"
        config_file.write_text('instance = "chain"\nk = 10.0\nseed = 5\n', encoding="utf-8")
        args = build_parser().parse_args(["--config", str(config_file), "validate", "--seed", "7"])
        config = resolve_config(args)
        assert config.instance == "chain"
        assert config.k == 10.0
        assert config.seed == 7
        assert config.pairs == 200

    def test_renamed_flags(self):
        """Test the flags whose names differ from their settings."""
        args = build_parser().parse_args(
            ["analyze", "--K", "12", "--Kprime", "100", "--L", "20", "--auto-K", "--suite", "raw-question"]
        )
        config = resolve_config(args)
        assert (config.k, config.k_prime, config.bridge_length) == (12.0, 100.0, 20.0)
        assert config.auto_k
        assert config.suites == [Suite.RAW_QUESTION]

    def test_core_params_overrides(self):
        """Test that a set K re-derives the dependent constants."""
        params = ExperimentConfig(k=10.0).core_params(chain_instance(4))
        assert (params.theta, params.k, params.k_prime, params.bridge_length) == (4.0, 10.0, 80.0, 13.0)

    def test_diameter_growth(self):
        """Test the diameter entries for small Schottky balls."""
        entries = diameter_growth(ExperimentConfig(diameter_radii=[0, 1]))
        assert list(entries) == ["diameter-radius-0", "diameter-radius-1"]
        assert entries["diameter-radius-0"]["measured"] == 1.0
        assert entries["diameter-radius-1"]["status"] == "info"


@pytest.mark.unit
class TestExperiment:
    """Tests for loaded experiments and reports."""

    def test_sampled_pairs_are_seeded(self, tmp_path):
        """Test that pair sampling is deterministic and bounded."""
        config = ExperimentConfig(instance="chain", pairs=4, seed=2, out=tmp_path)
        first = Experiment.load(config).sampled_pairs()
        assert len(first) == 4
        assert first == Experiment.load(config).sampled_pairs()

    def test_all_pairs_when_few(self, tmp_path):
        """Test that small instances use every pair."""
        config = ExperimentConfig(instance="chain", count=4, out=tmp_path)
        assert len(Experiment.load(config).sampled_pairs()) == 6

    def test_report_status_lists(self):
        """Test failures and flags across suites."""
        report = VerificationReport(
            command="validate",
            instance="chain",
            instance_kind="chain",
            instance_hash="0" * 64,
            vertex_count=3,
            params={"xi": 1.0},
            seed=0,
            suites={
                "axioms": {"behrstock": make_entry("axiom: behrstock", checked=1, violations=1)},
                "theorem-main": {"C": make_entry("triangle", checked=1, flagged=True)},
            },
        )
        assert report.failures == ["axioms/behrstock"]
        assert report.flags == ["theorem-main/C"]
        assert not report.passed
        assert json.loads(report.to_json())["passed"] is False


@pytest.mark.unit
class TestCommands:
    """Tests for the subcommands through main()."""

    def test_validate_chain(self, tmp_path, capsys):
        """Test that a valid instance exits 0 and writes its report."""
        assert main(["validate", "--instance", "chain", "--out", str(tmp_path)]) == 0
        report = read_report(tmp_path)
        assert report["passed"] is True
        assert report["command"] == "validate"
        assert set(report["suites"]) == {"axioms", "theorem-main"}
        assert "guard-remark" in report["suites"]["theorem-main"]
        assert "All checks passed" in capsys.readouterr().out

    def test_validate_violation(self, tmp_path, violation_file):
        """Test that axiom violations exit 1."""
        assert main(["validate", "--instance", str(violation_file), "--out", str(tmp_path)]) == 1
        report = read_report(tmp_path)
        assert "axioms/behrstock" in report["failures"]
        assert report["instance_kind"] == "tabular"

    def test_xi_flag_overrides_instance_file(self, tmp_path, violation_file):
        """Test that --xi replaces the xi stored in an instance file."""
        argv = ["validate", "--instance", str(violation_file), "--xi", "10", "--suite", "axioms"]
        assert main([*argv, "--out", str(tmp_path)]) == 0
        report = read_report(tmp_path)
        assert report["params"]["xi"] == 10.0
        assert "axioms/behrstock" not in report["failures"]

    def test_validate_one_suite(self, tmp_path):
        """Test that --suite restricts the suites run."""
        assert main(["validate", "--instance", "chain", "--suite", "axioms", "--out", str(tmp_path)]) == 0
        assert list(read_report(tmp_path)["suites"]) == ["axioms"]

    def test_missing_instance_file(self, tmp_path, capsys):
        """Test that a missing instance file exits 2."""
        assert main(["validate", "--instance", str(tmp_path / "absent.json"), "--out", str(tmp_path)]) == 2
        assert "Error:" in capsys.readouterr().err

    def test_build_chain(self, tmp_path):
        """Test the DOT and CSV exports of the build command."""
        assert main(["build", "--instance", "chain", "--K", "10", "--out", str(tmp_path)]) == 0
        dot = (tmp_path / "complex-modified.dot").read_text(encoding="utf-8")
        assert dot.count(" -- ") == 5
        assert (tmp_path / "blowup-edges.csv").exists()

    def test_build_both_metrics(self, tmp_path):
        """Test that each requested metric gets its own complex."""
        argv = ["build", "--instance", "chain", "--K", "10", "--metric", "raw", "--metric", "modified"]
        assert main([*argv, "--out", str(tmp_path)]) == 0
        assert (tmp_path / "complex-raw.dot").exists()
        assert (tmp_path / "complex-modified.dot").exists()
        assert set(read_report(tmp_path)["suites"]["build"]) == {"complex-raw", "complex-modified", "blowup"}

    def test_analyze_is_deterministic(self, tmp_path):
        """Test that equal configurations write identical reports."""
        argv = ["analyze", "--instance", "chain", "--K", "10", "--pairs", "12", "--samples", "20"]
        assert main([*argv, "--out", str(tmp_path / "first")]) == 0
        assert main([*argv, "--out", str(tmp_path / "second")]) == 0
        first = (tmp_path / "first" / "report.json").read_bytes()
        assert first == (tmp_path / "second" / "report.json").read_bytes()
        assert set(json.loads(first)["suites"]) == {"complex", "blowup"}
        assert (tmp_path / "first" / "distance-bounds.csv").exists()

    def test_analyze_raw_question(self, tmp_path):
        """Test that the raw-distance experiment is informational."""
        argv = ["analyze", "--instance", "chain", "--K", "10", "--suite", "raw-question", "--out", str(tmp_path)]
        assert main(argv) == 0
        entries = read_report(tmp_path)["suites"]["raw-question"]
        assert {entry["status"] for entry in entries.values()} == {"info"}

    def test_action(self, tmp_path):
        """Test the action command on the radius-2 Schottky instance."""
        argv = ["action", "--instance", "schottky-default", "--radius", "2", "--word", "a", "--k-max", "4"]
        assert main([*argv, "--samples", "50", "--out", str(tmp_path)]) == 0
        lines = (tmp_path / "translation-length.csv").read_text(encoding="utf-8").splitlines()
        assert lines[0] == "k,distance,ratio,self_projection"
        assert set(read_report(tmp_path)["suites"]) == {"action"}

    def test_action_needs_a_group(self, tmp_path, capsys):
        """Test that instances without generators exit 2."""
        assert main(["action", "--instance", "chain", "--out", str(tmp_path)]) == 2
        assert "no group action" in capsys.readouterr().err

    def test_bad_toml_key(self, tmp_path):
        """Test that unknown TOML keys exit 2."""
        config_file = tmp_path / "run.toml"
        config_file.write_text("colour = 1\n", encoding="utf-8")
        assert main(["--config", str(config_file), "validate", "--out", str(tmp_path)]) == 2


@pytest.mark.unit
class TestErrorHandling:
    """Tests for exit codes of unexpected failures."""

    def test_keyboard_interrupt(self, mocker, tmp_path, capsys):
        """Test that an interrupt exits 130."""
        mocker.patch("quasitree.cli.Experiment.load", side_effect=KeyboardInterrupt)
        assert main(["validate", "--instance", "chain", "--out", str(tmp_path)]) == 130
        assert "Interrupted" in capsys.readouterr().err

    def test_unexpected_error(self, mocker, tmp_path, capsys):
        """Test that unexpected errors print a traceback and exit 2."""
        mocker.patch("quasitree.cli.Experiment.load", side_effect=RuntimeError("boom"))
        assert main(["validate", "--instance", "chain", "--out", str(tmp_path)]) == 2
        err = capsys.readouterr().err
        assert "UNEXPECTED ERROR" in err
        assert "boom" in err
