"""
Instance specifications, built-in instances and JSON loading.

Every instance is described by a small pydantic spec that can be written to
and read from JSON; the spec's canonical JSON is what the instance hash covers.
"""

import json
import logging
from abc import abstractmethod
from pathlib import Path
from typing import ClassVar

from quasitree._compat import Self

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from quasitree.errors import DegenerateConfigurationError
from quasitree.hyperbolic_plane import (
    DEFAULT_GENERATORS,
    MoebiusMap,
    random_geodesic_instance,
    schottky_instance,
    tangent_chain_instance,
)
from quasitree.projection_core import IntervalSystem, ProjectionSystem, TabularSystem
from quasitree.utils.helpers import canonical_json, ensure_directory, sha256_hex

logger = logging.getLogger(__name__)

PAIR_SEPARATOR = "|"


class InstanceSpec(BaseModel):
    """Base for serializable instance descriptions."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: ClassVar[str]

    @abstractmethod
    def build(self) -> ProjectionSystem:
        pass

    def to_json(self, file_path: str | Path | None = None) -> str:
        """
        Serialize the spec to JSON.

        :param file_path: Optional file path to save JSON
        :return: JSON string representation
        :raises ValueError: If file_path is an existing directory
        """
        json_str = json.dumps(self.model_dump(mode="json"), indent=2, sort_keys=True)
        if file_path:
            ensure_directory(file_path).write_text(json_str, encoding="utf-8")
        return json_str

    @classmethod
    def from_json(cls, json_data: str) -> Self:
        return cls.model_validate(json.loads(json_data))

    @classmethod
    def from_json_file(cls, file_path: str | Path) -> Self:
        return cls.from_json(Path(file_path).read_text(encoding="utf-8"))


class SchottkySpec(InstanceSpec):
    kind: ClassVar[str] = "schottky"

    generators: list[list[list[float]]] = Field(
        default_factory=lambda: [generator.matrix.tolist() for generator in DEFAULT_GENERATORS]
    )
    word_radius: int = Field(default=1, ge=0)
    # Accepted in instance files; enumeration does not use it and the hash leaves it out.
    seed: int = Field(default=0, exclude=True)
    xi: float | None = Field(default=None, gt=0)

    # noinspection PyNestedDecorators
    @field_validator("generators", mode="after")
    @classmethod
    def validate_generators(cls, value: list[list[list[float]]]) -> list[list[list[float]]]:
        if not value:
            raise ValueError("At least one generator is required")
        for matrix in value:
            if np.shape(matrix) != (2, 2):
                raise ValueError(f"Generators must be 2x2 matrices, got {matrix}")
        return value

    def build(self) -> ProjectionSystem:
        generators = [MoebiusMap.from_matrix(matrix) for matrix in self.generators]
        return schottky_instance(generators, self.word_radius, self.xi)


class RandomGeodesicSpec(InstanceSpec):
    kind: ClassVar[str] = "random"

    count: int = Field(default=30, ge=1)
    seed: int = 0
    endpoint_range: tuple[float, float] = (-10.0, 10.0)
    min_gap: float = Field(default=0.5, gt=0)
    xi: float | None = Field(default=None, gt=0)

    def build(self) -> ProjectionSystem:
        return random_geodesic_instance(self.count, self.seed, self.endpoint_range, self.min_gap, self.xi)


class TangentChainSpec(InstanceSpec):
    kind: ClassVar[str] = "tangent-chain"

    count: int = Field(default=8, ge=1)
    gap: float = Field(default=0.02, gt=0, lt=2)
    xi: float | None = Field(default=None, gt=0)

    def build(self) -> ProjectionSystem:
        return tangent_chain_instance(self.count, self.gap, self.xi)


class ChainSpec(InstanceSpec):
    kind: ClassVar[str] = "chain"

    count: int = Field(default=6, ge=2)
    step: float = Field(default=25.0, gt=0)
    xi: float = Field(default=1.0, gt=0)

    def build(self) -> ProjectionSystem:
        return chain_instance(self.count, self.step, self.xi)


class HubSpec(InstanceSpec):
    kind: ClassVar[str] = "hub"

    spread: float = Field(default=12.5, gt=0)
    xi: float = Field(default=1.5, gt=0)

    def build(self) -> ProjectionSystem:
        return hub_instance(self.spread, self.xi)


class TabularSpec(InstanceSpec):
    """
    An explicit projection table.

    ``dpi`` maps each target vertex Y to entries keyed ``"X|Z"``; missing
    entries read as 0 and (Z, X) is completed from (X, Z).
    """

    kind: ClassVar[str] = "tabular"

    xi: float = Field(gt=0)
    vertices: list[str]
    dpi: dict[str, dict[str, float]]

    @model_validator(mode="after")
    def validate_keys(self) -> Self:
        known = set(self.vertices)
        for y, entries in self.dpi.items():
            if y not in known:
                raise ValueError(f"Unknown target vertex {y!r}")
            for key in entries:
                x, z = self.split_key(key)
                if x not in known or z not in known:
                    raise ValueError(f"Entry {key!r} of {y!r} names an unknown vertex")
        return self

    @staticmethod
    def split_key(key: str) -> tuple[str, str]:
        parts = key.split(PAIR_SEPARATOR)
        if len(parts) != 2:
            raise ValueError(f"Pair keys read 'X{PAIR_SEPARATOR}Z', got {key!r}")
        return parts[0], parts[1]

    def build(self) -> ProjectionSystem:
        entries = {
            (y, *self.split_key(key)): value for y, values in self.dpi.items() for key, value in values.items()
        }
        return TabularSystem(self.vertices, self.xi, entries)


SPEC_TYPES: tuple[type[InstanceSpec], ...] = (
    TabularSpec,
    SchottkySpec,
    RandomGeodesicSpec,
    TangentChainSpec,
    ChainSpec,
    HubSpec,
)

# Keys that identify a spec kind in a JSON file, checked in order.
DETECTION_KEYS: tuple[tuple[str, type[InstanceSpec]], ...] = (
    ("dpi", TabularSpec),
    ("generators", SchottkySpec),
    ("word_radius", SchottkySpec),
    ("endpoint_range", RandomGeodesicSpec),
    ("min_gap", RandomGeodesicSpec),
    ("gap", TangentChainSpec),
    ("step", ChainSpec),
    ("spread", HubSpec),
)


def chain_instance(count: int, step: float = 25.0, xi: float = 1.0) -> IntervalSystem:
    """
    Lines V0..V(n-1) where V_j projects to the point 0 of V_i when j < i and to the point ``step`` when j > i.

    Large projections between consecutive vertices make the projection complex a path.
    """
    if count < 2:
        raise DegenerateConfigurationError("A chain needs at least two vertices")
    rows = np.arange(count)[:, None]
    columns = np.arange(count)[None, :]
    anchors = np.where(columns < rows, 0.0, step)
    intervals = np.stack([anchors, anchors], axis=-1)
    return IntervalSystem([f"V{i}" for i in range(count)], intervals, xi)


def hub_instance(spread: float = 12.5, xi: float = 1.5) -> IntervalSystem:
    """
    Five lines where V0 and V4 are joined only through the middle lines.

    Lines V1..V3 see V0 at 0 and the later vertices at ``spread``, with V1 and
    V2 drifting to 1 on the later lines; V0 and V4 see everything at 0.
    """
    n = 5
    anchors = np.zeros((n, n))
    anchors[1, [2, 3, 4]] = spread
    anchors[2, 1] = 1.0
    anchors[2, [3, 4]] = spread
    anchors[3, [1, 2]] = 1.0
    anchors[3, 4] = spread
    intervals = np.stack([anchors, anchors], axis=-1)
    return IntervalSystem([f"V{i}" for i in range(n)], intervals, xi)


def builtin_spec(
    name: str, radius: int = 1, seed: int = 0, count: int | None = None, xi: float | None = None
) -> InstanceSpec:
    """
    The spec of a built-in instance.

    :param name: One of schottky-default, chain, hub, tangent-chain, random
    :raises KeyError: If the name is not a built-in
    """
    sized = {} if count is None else {"count": count}
    scaled = {} if xi is None else {"xi": xi}
    match name:
        case "schottky-default":
            return SchottkySpec(word_radius=radius, **scaled)
        case "chain":
            return ChainSpec(**sized, **scaled)
        case "hub":
            return HubSpec(**scaled)
        case "tangent-chain":
            return TangentChainSpec(**sized, **scaled)
        case "random":
            return RandomGeodesicSpec(seed=seed, **sized, **scaled)
    raise KeyError(f"Unknown built-in instance: {name}")


BUILTIN_NAMES = ("schottky-default", "chain", "hub", "tangent-chain", "random")


def spec_from_file(file_path: str | Path) -> InstanceSpec:
    """
    Read a spec from JSON, detecting its kind by its keys.

    :raises FileNotFoundError: If the file does not exist
    :raises DegenerateConfigurationError: If no spec kind matches the keys
    """
    path = Path(file_path)
    data = json.loads(path.read_text(encoding="utf-8"))
    if not isinstance(data, dict):
        raise DegenerateConfigurationError(f"Instance file {path} must hold a JSON object")
    for key, spec_type in DETECTION_KEYS:
        if key in data:
            logger.debug("Detected %s instance in %s", spec_type.kind, path)
            return spec_type.model_validate(data)
    raise DegenerateConfigurationError(f"Cannot tell the instance kind of {path} from its keys {sorted(data)}")


def load_spec(
    instance: str, radius: int = 1, seed: int = 0, count: int | None = None, xi: float | None = None
) -> InstanceSpec:
    """
    A built-in spec by name, otherwise the spec stored at the given JSON path.

    ``count`` and ``xi`` override the file's values when the spec has those fields.
    """
    if instance in BUILTIN_NAMES:
        return builtin_spec(instance, radius, seed, count, xi)
    return with_overrides(spec_from_file(instance), count=count, xi=xi)


def with_overrides(spec: InstanceSpec, **overrides: float | int | None) -> InstanceSpec:
    """
    Revalidate a spec with the given fields replaced.

    Fields the spec does not have and overrides that are None are ignored.

    :raises pydantic.ValidationError: If an override is invalid for the spec
    """
    spec_type = type(spec)
    updates = {
        name: value for name, value in overrides.items() if value is not None and name in spec_type.model_fields
    }
    if not updates:
        return spec
    logger.debug("Overriding %s of the %s instance", sorted(updates), spec.kind)
    return spec_type.model_validate(dict(spec) | updates)


def load_instance(
    instance: str, radius: int = 1, seed: int = 0, count: int | None = None, xi: float | None = None
) -> tuple[InstanceSpec, ProjectionSystem]:
    spec = load_spec(instance, radius, seed, count, xi)
    system = spec.build()
    logger.info("Loaded %s instance with %d vertices (xi %.6g)", spec.kind, len(system), system.xi)
    return spec, system


def instance_hash(spec: InstanceSpec) -> str:
    """SHA-256 of the canonical JSON of a spec, its kind included."""
    return sha256_hex(canonical_json({"kind": spec.kind, **spec.model_dump(mode="json")}))
