"""
Experiment runner.

Loads an instance, builds its complexes and blowup, runs verification suites
and writes reports, graphs and tables to the output directory.

Usage: python -m quasitree.cli {validate,build,analyze,action} [options]
"""

import argparse
import logging
import sys
import time
from quasitree._compat import tomllib
from abc import ABC, abstractmethod
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from quasitree._compat import StrEnum
from pathlib import Path
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from quasitree.blowup_space import blowup_checks, build_blowup, sample_point_pairs, write_edge_csv
from quasitree.errors import DegenerateConfigurationError
from quasitree.group_action import ActionContext, action_checks, write_translation_csv
from quasitree.hyperbolic_plane import GeodesicSystem, schottky_instance
from quasitree.instances import InstanceSpec, instance_hash, load_instance
from quasitree.projection_complex import (
    MetricMode,
    ProjectionComplex,
    all_pairs,
    build_complex,
    complex_checks,
    complex_diameter,
    raw_question_experiment,
    write_complex_dot,
    write_distance_bounds_csv,
)
from quasitree.projection_core import (
    CoreParams,
    ProjectionSystem,
    auto_calibrate_k,
    axiom_entries,
    check_guard_remark,
    check_theorem_main,
    validate_axioms,
)
from quasitree.reports import CheckEntry, CheckStatus, make_entry
from quasitree.utils.error_handler import (
    EXIT_CHECK_FAILED,
    EXIT_OK,
    exit_code_for_category,
    format_error_for_category,
    get_error_category,
)
from quasitree.utils.helpers import canonical_json, default_output_dir, write_json

logger = logging.getLogger(__name__)

REPORT_FILE = "report.json"
DISTANCE_BOUNDS_FILE = "distance-bounds.csv"
BLOWUP_EDGES_FILE = "blowup-edges.csv"
TRANSLATION_FILE = "translation-length.csv"


class Suite(StrEnum):
    AXIOMS = "axioms"
    THEOREM_MAIN = "theorem-main"
    COMPLEX = "complex"
    BLOWUP = "blowup"
    ACTION = "action"
    RAW_QUESTION = "raw-question"


class ExperimentConfig(BaseModel):
    """Everything a run depends on; identical configs give identical outputs."""

    model_config = ConfigDict(extra="forbid")

    instance: str = "schottky-default"
    radius: int = Field(default=1, ge=0)
    count: int | None = Field(default=None, ge=1)
    xi: float | None = Field(default=None, gt=0)
    theta: float | None = Field(default=None, gt=0)
    k: float | None = Field(default=None, gt=0)
    k_prime: float | None = Field(default=None, gt=0)
    bridge_length: float | None = Field(default=None, gt=0)
    auto_k: bool = False
    metrics: list[MetricMode] = Field(default_factory=lambda: [MetricMode.MODIFIED])
    suites: list[Suite] = Field(default_factory=list)
    pairs: int = Field(default=200, ge=1)
    samples: int = Field(default=200, ge=1)
    seed: int = 0
    out: Path = Field(default_factory=default_output_dir)
    word: str = "ab"
    k_max: int = Field(default=8, ge=1)
    wpd_d: int = Field(default=2, ge=0)
    wpd_m: int = Field(default=1, ge=1)
    diameter_radii: list[int] = Field(default_factory=list)

    def core_params(self, system: ProjectionSystem) -> CoreParams:
        """
        The constant ledger for a loaded system; unset constants are derived.

        :raises OrderInconsistencyError: If auto-K exhausts its doubling budget
        """
        overrides = {
            name: value
            for name, value in (
                ("theta", self.theta),
                ("k", self.k),
                ("k_prime", self.k_prime),
                ("bridge_length", self.bridge_length),
            )
            if value is not None
        }
        params = CoreParams(xi=system.xi, **overrides)
        if self.auto_k:
            params = auto_calibrate_k(system, params)
        return params

    def selected(self, defaults: Sequence[Suite]) -> list[Suite]:
        return list(self.suites) if self.suites else list(defaults)


class VerificationReport(BaseModel):
    """Per-suite check entries with the provenance needed to reproduce them."""

    command: str
    instance: str
    instance_kind: str
    instance_hash: str
    vertex_count: int
    params: dict[str, float]
    seed: int
    suites: dict[str, dict[str, CheckEntry]] = Field(default_factory=dict)

    @property
    def failures(self) -> list[str]:
        return self._with_status(CheckStatus.FAIL)

    @property
    def flags(self) -> list[str]:
        return self._with_status(CheckStatus.FLAG)

    def _with_status(self, status: CheckStatus) -> list[str]:
        return [
            f"{suite}/{key}"
            for suite, entries in sorted(self.suites.items())
            for key, entry in sorted(entries.items())
            if entry["status"] == status
        ]

    @property
    def passed(self) -> bool:
        return not self.failures

    def to_json(self, file_path: str | Path | None = None) -> str:
        data = self.model_dump(mode="json") | {"passed": self.passed, "failures": self.failures, "flags": self.flags}
        if file_path:
            write_json(data, file_path)
        return canonical_json(data)


@dataclass
class CommandResult:
    exit_code: int = EXIT_OK
    report: VerificationReport | None = None
    written: list[Path] = field(default_factory=list)
    message: str | None = None


class BaseCommand(ABC):
    """Base class for a CLI subcommand."""

    @abstractmethod
    def execute(self, config: ExperimentConfig) -> CommandResult:
        pass

    @abstractmethod
    def description(self) -> str:
        pass


class Command(BaseCommand):
    def __init__(self, description: str, execute_fn: Callable[[ExperimentConfig], CommandResult]):
        self._description = description
        self._execute_fn = execute_fn

    def execute(self, config: ExperimentConfig) -> CommandResult:
        return self._execute_fn(config)

    def description(self) -> str:
        return self._description


@dataclass
class Experiment:
    """A loaded instance with its resolved constants."""

    config: ExperimentConfig
    spec: InstanceSpec
    system: ProjectionSystem
    params: CoreParams

    @classmethod
    def load(cls, config: ExperimentConfig) -> "Experiment":
        spec, system = load_instance(config.instance, config.radius, config.seed, config.count, config.xi)
        params = config.core_params(system)
        logger.info("Constants %s", params.as_dict())
        return cls(config, spec, system, params)

    def report(self, command: str) -> VerificationReport:
        return VerificationReport(
            command=command,
            instance=self.config.instance,
            instance_kind=self.spec.kind,
            instance_hash=instance_hash(self.spec),
            vertex_count=len(self.system),
            params=self.params.as_dict(),
            seed=self.config.seed,
        )

    def sampled_pairs(self) -> list[tuple[str, str]]:
        """All vertex pairs, or a seeded sample of ``pairs`` of them."""
        pairs = all_pairs(self.system.vertices)
        if len(pairs) <= self.config.pairs:
            return pairs
        rng = np.random.default_rng(self.config.seed)
        chosen = sorted(rng.choice(len(pairs), size=self.config.pairs, replace=False).tolist())
        return [pairs[i] for i in chosen]

    def output(self, name: str) -> Path:
        return self.config.out / name


def finish(experiment: Experiment, report: VerificationReport, written: list[Path]) -> CommandResult:
    path = experiment.output(REPORT_FILE)
    report.to_json(path)
    written.append(path)
    for flag in report.flags:
        logger.warning("Flagged: %s", flag)
    exit_code = EXIT_OK if report.passed else EXIT_CHECK_FAILED
    message = "All checks passed" if report.passed else f"Failed: {', '.join(report.failures)}"
    return CommandResult(exit_code=exit_code, report=report, written=written, message=message)


def cmd_validate(config: ExperimentConfig) -> CommandResult:
    """Axioms and the properties of the modified distances."""
    experiment = Experiment.load(config)
    report = experiment.report("validate")
    system, params = experiment.system, experiment.params

    for suite in config.selected([Suite.AXIOMS, Suite.THEOREM_MAIN]):
        if suite == Suite.AXIOMS:
            report.suites[str(suite)] = axiom_entries(validate_axioms(system))
        elif suite == Suite.THEOREM_MAIN:
            entries = check_theorem_main(system, params)
            entries["guard-remark"] = check_guard_remark(system, params)
            report.suites[str(suite)] = entries
    return finish(experiment, report, [])


def cmd_build(config: ExperimentConfig) -> CommandResult:
    """Projection complexes for each requested metric and the blowup, exported as DOT and CSV."""
    experiment = Experiment.load(config)
    report = experiment.report("build")
    system, params = experiment.system, experiment.params
    written: list[Path] = []
    entries: dict[str, CheckEntry] = {}
    modified: ProjectionComplex | None = None

    for mode in dict.fromkeys(config.metrics):
        complex_ = build_complex(system, params, metric_mode=mode)
        path = experiment.output(f"complex-{mode}.dot")
        write_complex_dot(complex_, path)
        written.append(path)
        entries[f"complex-{mode}"] = make_entry(
            f"{mode} complex",
            checked=complex_.graph.number_of_nodes(),
            measured=float(complex_.graph.number_of_edges()),
            informational=True,
            detail=f"{len(complex_.components())} components",
        )
        if mode == MetricMode.MODIFIED:
            modified = complex_

    if system.geometry is not None:
        modified = modified or build_complex(system, params)
        space = build_blowup(system, params, modified)
        path = experiment.output(BLOWUP_EDGES_FILE)
        write_edge_csv(space, path)
        written.append(path)
        entries["blowup"] = make_entry(
            "blowup",
            checked=space.graph.number_of_nodes(),
            measured=float(space.bridge_count()),
            informational=True,
            detail="measured is the bridge count",
        )
    report.suites["build"] = entries
    return finish(experiment, report, written)


def diameter_growth(config: ExperimentConfig) -> dict[str, CheckEntry]:
    """Diameter of the default Schottky complex at each requested word radius."""
    entries: dict[str, CheckEntry] = {}
    for radius in config.diameter_radii:
        system = schottky_instance(word_radius=radius, xi=config.xi)
        complex_ = build_complex(system, config.core_params(system))
        entries[f"diameter-radius-{radius}"] = make_entry(
            "complex diameter by word radius",
            checked=len(system),
            measured=float(complex_diameter(complex_)["diameter"]),
            informational=True,
            detail=f"radius {radius}",
        )
    return entries


def cmd_analyze(config: ExperimentConfig) -> CommandResult:
    """Quasi-tree diagnostics of the complex, blowup checks and the raw-distance experiment."""
    experiment = Experiment.load(config)
    report = experiment.report("analyze")
    system, params = experiment.system, experiment.params
    pairs = experiment.sampled_pairs()
    written: list[Path] = []
    complex_ = build_complex(system, params)

    for suite in config.selected([Suite.COMPLEX, Suite.BLOWUP]):
        if suite == Suite.COMPLEX:
            entries, rows = complex_checks(system, params, complex_, pairs)
            entries.update(diameter_growth(config))
            path = experiment.output(DISTANCE_BOUNDS_FILE)
            write_distance_bounds_csv(rows, path)
            written.append(path)
            report.suites[str(suite)] = entries
        elif suite == Suite.BLOWUP:
            if system.geometry is None:
                logger.warning("Instance %s has no geometry; skipping the blowup suite", config.instance)
                continue
            space = build_blowup(system, params, complex_)
            point_pairs = sample_point_pairs(space, config.pairs, config.seed)
            entries, _ = blowup_checks(space, system, params, point_pairs, config.seed, config.samples)
            report.suites[str(suite)] = entries
        elif suite == Suite.RAW_QUESTION:
            report.suites[str(suite)] = raw_question_experiment(system, params, pairs=pairs)
    return finish(experiment, report, written)


def cmd_action(config: ExperimentConfig) -> CommandResult:
    """Equivariance, translation length, combinatorial axis and the WPD probe for one word."""
    experiment = Experiment.load(config)
    system = experiment.system
    if not isinstance(system, GeodesicSystem) or not system.generators:
        raise DegenerateConfigurationError(f"Instance {config.instance} carries no group action")
    report = experiment.report("action")
    complex_ = build_complex(system, experiment.params)
    entries, translation = action_checks(
        ActionContext(system),
        complex_,
        experiment.params,
        config.word,
        config.k_max,
        config.wpd_d,
        config.wpd_m,
        config.samples,
        config.seed,
    )
    report.suites[str(Suite.ACTION)] = entries
    path = experiment.output(TRANSLATION_FILE)
    write_translation_csv(translation, path)
    return finish(experiment, report, [path])


COMMANDS: dict[str, BaseCommand] = {
    "validate": Command("Check the axioms and the modified-distance properties", cmd_validate),
    "build": Command("Build projection complexes and the blowup and export them", cmd_build),
    "analyze": Command("Run the complex and blowup diagnostics", cmd_analyze),
    "action": Command("Probe the group action on a geodesic instance", cmd_action),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="quasitree", description="Projection complexes and their blowups")
    parser.add_argument("--config", type=Path, help="TOML file with ExperimentConfig fields")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v for info, -vv for debug")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--instance", help="Built-in name or instance JSON file")
    common.add_argument("--radius", type=int, help="Word radius of the Schottky instance")
    common.add_argument("--count", type=int, help="Vertex count of chain and random instances")
    common.add_argument("--xi", type=float)
    common.add_argument("--theta", type=float)
    common.add_argument("--K", dest="k", type=float)
    common.add_argument("--auto-K", dest="auto_k", action="store_true", default=None)
    common.add_argument("--Kprime", dest="k_prime", type=float)
    common.add_argument("--L", dest="bridge_length", type=float)
    common.add_argument("--metric", dest="metrics", action="append", choices=[str(mode) for mode in MetricMode])
    common.add_argument("--suite", dest="suites", action="append", choices=[str(suite) for suite in Suite])
    common.add_argument("--pairs", type=int)
    common.add_argument("--samples", type=int)
    common.add_argument("--seed", type=int)
    common.add_argument("--out", type=Path)
    common.add_argument("--word", help="Group element for the action suite")
    common.add_argument("--k-max", dest="k_max", type=int)
    common.add_argument("--wpd-d", dest="wpd_d", type=int)
    common.add_argument("--wpd-m", dest="wpd_m", type=int)
    common.add_argument("--diameter-radii", dest="diameter_radii", type=int, nargs="+")

    subparsers = parser.add_subparsers(dest="command", required=True)
    for name, command in COMMANDS.items():
        subparsers.add_parser(name, parents=[common], help=command.description())
    return parser


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    """Flags override the TOML file, which overrides the defaults."""
    data: dict[str, Any] = {}
    if args.config is not None:
        with open(args.config, "rb") as handle:
            data.update(tomllib.load(handle))
    for name in ExperimentConfig.model_fields:
        value = getattr(args, name, None)
        if value is not None:
            data[name] = value
    return ExperimentConfig.model_validate(data)


def configure_logging(verbosity: int) -> None:
    level = logging.WARNING if verbosity == 0 else logging.INFO if verbosity == 1 else logging.DEBUG
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose)
    try:
        config = resolve_config(args)
        started = time.perf_counter()
        result = COMMANDS[args.command].execute(config)
        logger.info("%s finished in %.2fs", args.command, time.perf_counter() - started)
    except (Exception, KeyboardInterrupt) as error:
        category = get_error_category(error)
        print(format_error_for_category(error, category), file=sys.stderr)
        return exit_code_for_category(category)

    for path in result.written:
        print(f"Wrote {path}")
    if result.message:
        print(result.message)
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
