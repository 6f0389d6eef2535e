"""
The axiom layer.

Validates projection axioms, computes the pair sets H(X, Z) and the modified
distances d_Y, the large-projection sets and their order, guards and barriers,
and checks the inequalities the modified distances are known to satisfy.
"""

import copy
import logging
from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from functools import cached_property
from itertools import combinations
from typing import TYPE_CHECKING, Any

from typing_extensions import TypedDict

from quasitree._compat import Self

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationInfo, field_validator, model_validator

from quasitree.errors import BarrierNotFoundError, DegenerateConfigurationError, OrderInconsistencyError
from quasitree.reports import MAX_EXAMPLES, CheckEntry, make_entry

if TYPE_CHECKING:
    from quasitree.projection_complex import ProjectionComplex

logger = logging.getLogger(__name__)

THETA_FACTOR = 4.0
K_FACTOR = 30.0
K_PRIME_K_FACTOR = 5.0
K_PRIME_XI_FACTOR = 30.0
BRIDGE_XI_FACTOR = 2.0
BRIDGE_OFFSET = 1.0

XI_SAFETY_FACTOR = 1.1
XI_FLOOR = 1e-6
TRIANGLE_TOLERANCE = 1e-9
MAX_K_DOUBLINGS = 10

BETWEEN_SLACK_FACTOR = 10.0
OUTSIDE_SLACK_FACTOR = 4.0
TRIANGLE_SLACK_FACTOR = 4.0


class CoreParams(BaseModel):
    """
    The constant ledger.

    Unset constants are derived from xi: theta = 4 xi, K = 30 xi,
    K' = 5 K + 30 xi and the bridge length L = K + 2 xi + 1.
    """

    model_config = ConfigDict(frozen=True)

    xi: float = Field(gt=0)
    theta: float = Field(default=None, validate_default=True)
    k: float = Field(default=None, validate_default=True)
    k_prime: float = Field(default=None, validate_default=True)
    bridge_length: float = Field(default=None, validate_default=True)

    # noinspection PyNestedDecorators
    @field_validator("theta", mode="before")
    @classmethod
    def default_theta(cls, value: float | None, info: ValidationInfo) -> float | None:
        if value is None and "xi" in info.data:
            return THETA_FACTOR * info.data["xi"]
        return value

    # noinspection PyNestedDecorators
    @field_validator("k", mode="before")
    @classmethod
    def default_k(cls, value: float | None, info: ValidationInfo) -> float | None:
        if value is None and "xi" in info.data:
            return K_FACTOR * info.data["xi"]
        return value

    # noinspection PyNestedDecorators
    @field_validator("k_prime", mode="before")
    @classmethod
    def default_k_prime(cls, value: float | None, info: ValidationInfo) -> float | None:
        if value is None and "xi" in info.data and info.data.get("k") is not None:
            return K_PRIME_K_FACTOR * info.data["k"] + K_PRIME_XI_FACTOR * info.data["xi"]
        return value

    # noinspection PyNestedDecorators
    @field_validator("bridge_length", mode="before")
    @classmethod
    def default_bridge_length(cls, value: float | None, info: ValidationInfo) -> float | None:
        if value is None and "xi" in info.data and info.data.get("k") is not None:
            return info.data["k"] + BRIDGE_XI_FACTOR * info.data["xi"] + BRIDGE_OFFSET
        return value

    @model_validator(mode="after")
    def check_ordering(self) -> Self:
        if self.theta < THETA_FACTOR * self.xi:
            raise ValueError(f"theta must be at least {THETA_FACTOR:g} * xi, got {self.theta}")
        if self.k < self.theta:
            raise ValueError(f"K must be at least theta ({self.theta}), got {self.k}")
        if self.k_prime <= self.k:
            raise ValueError(f"K' must exceed K ({self.k}), got {self.k_prime}")
        if self.bridge_length <= self.k + BRIDGE_XI_FACTOR * self.xi:
            minimum = self.k + BRIDGE_XI_FACTOR * self.xi
            raise ValueError(f"L must exceed K + 2 xi ({minimum}), got {self.bridge_length}")
        return self

    def with_k(self, k: float) -> "CoreParams":
        """Return params with a new K; K' and L are re-derived from their default formulas."""
        return CoreParams(xi=self.xi, theta=self.theta, k=k)

    def as_dict(self) -> dict[str, float]:
        return self.model_dump(mode="json")


def _mask_undefined(table: Any) -> np.ndarray:
    """Return a float copy of a dpi table with NaN wherever Y is X or Z."""
    masked = np.array(table, dtype=float)
    if masked.ndim != 3 or masked.shape[0] != masked.shape[1] or masked.shape[1] != masked.shape[2]:
        raise ValueError(f"Projection table must have shape (N, N, N), got {masked.shape}")
    idx = np.arange(masked.shape[0])
    masked[idx, idx, :] = np.nan
    masked[idx, :, idx] = np.nan
    return masked


def _finite_max(values: np.ndarray, default: float = 0.0) -> float:
    finite = values[np.isfinite(values)]
    return float(finite.max()) if finite.size else default


def _minimal_valid_xi(table: np.ndarray, include_diameters: bool) -> float:
    largest = _finite_max(np.minimum(table, table.transpose(2, 1, 0)))
    if include_diameters:
        largest = max(largest, _finite_max(np.diagonal(table, axis1=1, axis2=2)))
    return float(np.nextafter(largest, np.inf))


def _h_mask(big: np.ndarray, x: int, z: int) -> np.ndarray:
    """Boolean matrix over ordered pairs (X', Z') marking the members of H(X, Z)."""
    mask = big[x] & big[z]
    mask[x, :] |= big[z][x, :]
    mask[:, z] |= big[x][:, z]
    mask[x, z] = True
    return mask


def _compute_modified_table(table: np.ndarray, xi: float) -> np.ndarray:
    n = table.shape[0]
    big = table > 2 * xi
    finite = np.where(np.isnan(table), np.inf, table)
    result = np.full((n, n, n), np.nan)

    for x in range(n):
        for z in range(n):
            if x == z:
                continue
            mask = _h_mask(big, x, z)
            result[:, x, z] = finite[:, mask].min(axis=1)

    idx = np.arange(n)
    result[idx, idx, :] = np.nan
    result[idx, :, idx] = np.nan
    result.setflags(write=False)
    return result


class ProjectionSystem:
    """
    A finite family of objects with projection distances between them.

    Distances are held in a dense table indexed ``[y, x, z]`` storing
    d^π_Y(X, Z), with NaN wherever Y coincides with X or Z. Modified distances
    are computed once, on first use, and shared read-only afterwards.
    """

    def __init__(self, vertices: Sequence[str], dpi_table: Any, xi: float):
        """
        :param vertices: Unique vertex ids
        :param dpi_table: Array of shape (N, N, N) with non-negative entries
        :param xi: The projection constant
        :raises DegenerateConfigurationError: If vertex ids repeat
        :raises ValueError: If the table is malformed or xi is not positive
        """
        vertices = tuple(str(vertex) for vertex in vertices)
        if len(set(vertices)) != len(vertices):
            raise DegenerateConfigurationError("Vertex ids must be unique")
        if not xi > 0:
            raise ValueError(f"xi must be positive, got {xi}")

        table = _mask_undefined(dpi_table)
        if table.shape[0] != len(vertices):
            raise ValueError(f"Table has {table.shape[0]} rows but {len(vertices)} vertices were given")
        defined = table[~np.isnan(table)]
        if np.any(defined < 0) or not np.all(np.isfinite(defined)):
            raise ValueError("Projection distances must be finite and non-negative")
        table.setflags(write=False)

        self._vertices = vertices
        self._index = {vertex: i for i, vertex in enumerate(vertices)}
        self._dpi_table = table
        self.xi = float(xi)

    def __len__(self) -> int:
        return len(self._vertices)

    @property
    def vertices(self) -> tuple[str, ...]:
        return self._vertices

    @property
    def dpi_table(self) -> np.ndarray:
        return self._dpi_table

    @property
    def geometry(self) -> "IntervalSystem | None":
        """Anchor data for blowup construction, when the backend has it."""
        return None

    def index(self, vertex: str) -> int:
        try:
            return self._index[vertex]
        except KeyError:
            raise KeyError(f"Unknown vertex: {vertex}") from None

    def dpi(self, y: str, x: str, z: str) -> float:
        """
        Projection distance d^π_Y(X, Z).

        :raises ValueError: If Y is X or Z
        """
        if y in (x, z):
            raise ValueError(f"Projection distance to {y} is undefined for pair ({x}, {z})")
        return float(self._dpi_table[self.index(y), self.index(x), self.index(z)])

    @cached_property
    def modified_table(self) -> np.ndarray:
        """Modified distances d_Y(X, Z) indexed ``[y, x, z]``; NaN when undefined."""
        logger.info("Computing modified distances for %d vertices", len(self))
        return _compute_modified_table(self._dpi_table, self.xi)

    def with_xi(self, xi: float) -> Self:
        """Return a copy of this system using a different projection constant."""
        if not xi > 0:
            raise ValueError(f"xi must be positive, got {xi}")
        clone = copy.copy(self)
        clone.xi = float(xi)
        clone.__dict__.pop("modified_table", None)
        return clone


class TabularSystem(ProjectionSystem):
    """A projection system given by an explicit table, completed symmetrically in (X, Z)."""

    def __init__(self, vertices: Sequence[str], xi: float, entries: Mapping[tuple[str, str, str], float]):
        """
        :param vertices: Unique vertex ids
        :param xi: The projection constant
        :param entries: Map (Y, X, Z) -> d^π_Y(X, Z); unspecified entries are 0
        :raises ValueError: If an entry names an unknown vertex, has Y in {X, Z},
                            or contradicts its swapped counterpart
        """
        vertices = tuple(vertices)
        index = {vertex: i for i, vertex in enumerate(vertices)}
        n = len(vertices)
        table = np.zeros((n, n, n))
        assigned: dict[tuple[int, int, int], float] = {}

        for (y, x, z), value in entries.items():
            for vertex in (y, x, z):
                if vertex not in index:
                    raise ValueError(f"Unknown vertex in table entry: {vertex}")
            if y in (x, z):
                raise ValueError(f"Entry ({y}; {x}, {z}) projects a vertex to itself")
            key = (index[y], index[x], index[z])
            swapped = (index[y], index[z], index[x])
            previous = assigned.get(swapped, assigned.get(key))
            if previous is not None and previous != value:
                raise ValueError(f"Conflicting values for d({y}; {x}, {z}): {previous} and {value}")
            assigned[key] = assigned[swapped] = float(value)
            table[key] = table[swapped] = float(value)

        super().__init__(vertices, table, xi)


class IntervalSystem(ProjectionSystem):
    """
    A projection system in which every vertex is a line.

    The projection of X to Y is an interval of arclength coordinates on Y, and
    d^π_Y(X, Z) is the diameter of the union of the two intervals. These
    intervals are the anchor data used to build the blowup.
    """

    def __init__(self, vertices: Sequence[str], intervals: Any, xi: float | None = None):
        """
        :param vertices: Unique vertex ids
        :param intervals: Array of shape (N, N, 2); ``intervals[y, x]`` is the (lo, hi) projection of X to Y
        :param xi: The projection constant; measured from the data when omitted
        """
        intervals = np.array(intervals, dtype=float)
        n = len(vertices)
        if intervals.shape != (n, n, 2):
            raise ValueError(f"Intervals must have shape ({n}, {n}, 2), got {intervals.shape}")
        idx = np.arange(n)
        intervals[idx, idx, :] = np.nan
        low, high = intervals[..., 0], intervals[..., 1]
        if np.any(high < low):
            raise ValueError("Projection intervals must satisfy lo <= hi")

        table = np.maximum(high[:, :, None], high[:, None, :]) - np.minimum(low[:, :, None], low[:, None, :])
        table = _mask_undefined(table)

        if xi is None:
            measured = _minimal_valid_xi(table, include_diameters=True)
            xi = max(measured * XI_SAFETY_FACTOR, XI_FLOOR)
            logger.info("Measured xi %.6g for %d vertices (minimal valid %.6g)", xi, n, measured)

        super().__init__(vertices, table, xi)
        intervals.setflags(write=False)
        self._intervals = intervals

    @property
    def geometry(self) -> "IntervalSystem":
        return self

    @property
    def intervals(self) -> np.ndarray:
        return self._intervals

    def interval(self, y: str, x: str) -> tuple[float, float]:
        """Coordinates (lo, hi) of the projection of X to Y."""
        if x == y:
            raise ValueError(f"Projection of {y} to itself is undefined")
        lo, hi = self._intervals[self.index(y), self.index(x)]
        return float(lo), float(hi)

    @property
    def nu(self) -> float:
        """Largest observed projection diameter."""
        return _finite_max(self._intervals[..., 1] - self._intervals[..., 0])


class AxiomViolation(TypedDict):
    axiom: str
    vertices: list[str]
    value: float


class AxiomReport(TypedDict):
    ok: bool
    vertex_count: int
    xi: float
    minimal_valid_xi: float
    violation_counts: dict[str, int]
    violations: list[AxiomViolation]
    max_projection_diameter: float | None
    finiteness: str


def _collect(
    axiom: str, mask: np.ndarray, values: np.ndarray, names: tuple[str, ...], order: tuple[int, ...]
) -> tuple[int, list[AxiomViolation]]:
    hits = np.argwhere(mask)
    examples = [
        AxiomViolation(
            axiom=axiom,
            vertices=[names[int(hit[position])] for position in order],
            value=float(values[tuple(hit)]),
        )
        for hit in hits[:MAX_EXAMPLES]
    ]
    return len(hits), examples


def validate_axioms(system: ProjectionSystem) -> AxiomReport:
    """
    Check the projection axioms on a finite system.

    Symmetry is checked exactly, the triangle inequality up to float rounding,
    and the Behrstock inequality strictly below xi. Interval systems are also
    checked for bounded projections (diam π_Y(X) < xi). Violations are data.

    :param system: The system to validate
    :return: Report with violation counts, examples and the minimal valid xi
    """
    table = system.dpi_table
    names = system.vertices
    xi = system.xi
    counts: dict[str, int] = {}
    violations: list[AxiomViolation] = []

    swapped = table.transpose(0, 2, 1)
    asymmetric = ~np.isnan(table) & (table != swapped)
    counts["symmetry"], found = _collect("symmetry", asymmetric, table, names, (0, 1, 2))
    violations += found

    triangle_count = 0
    for y in range(len(system)):
        row = table[y]
        lhs = np.broadcast_to(row[:, None, :], (len(system),) * 3)
        rhs = row[:, :, None] + row[None, :, :]
        broken = lhs > rhs + TRIANGLE_TOLERANCE
        hits = np.argwhere(broken)
        triangle_count += len(hits)
        for x, w, z in hits[: max(0, MAX_EXAMPLES - len(violations))]:
            violations.append(
                AxiomViolation(
                    axiom="triangle", vertices=[names[y], names[x], names[w], names[z]], value=float(row[x, z])
                )
            )
    counts["triangle"] = triangle_count

    behrstock = np.minimum(table, table.transpose(2, 1, 0))
    counts["behrstock"], found = _collect("behrstock", behrstock >= xi, behrstock, names, (0, 1, 2))
    violations += found

    max_diameter = None
    if system.geometry is not None:
        diameters = np.diagonal(table, axis1=1, axis2=2).T
        counts["bounded_projection"], found = _collect(
            "bounded_projection", diameters >= xi, diameters, names, (1, 0)
        )
        violations += found
        max_diameter = _finite_max(diameters)

    report = AxiomReport(
        ok=not any(counts.values()),
        vertex_count=len(system),
        xi=xi,
        minimal_valid_xi=_minimal_valid_xi(table, include_diameters=system.geometry is not None),
        violation_counts=counts,
        violations=violations,
        max_projection_diameter=max_diameter,
        finiteness="satisfied: the system is finite",
    )
    if not report["ok"]:
        logger.warning("Axiom violations: %s", {axiom: count for axiom, count in counts.items() if count})
    return report


def axiom_entries(report: AxiomReport) -> dict[str, CheckEntry]:
    """Convert an axiom report to suite entries."""
    n = report["vertex_count"]
    entries = {
        axiom: make_entry(
            f"axiom: {axiom.replace('_', ' ')}",
            checked=n * n if axiom == "bounded_projection" else n**3,
            violations=count,
            examples=[v["vertices"] for v in report["violations"] if v["axiom"] == axiom],
        )
        for axiom, count in report["violation_counts"].items()
    }
    entries["finiteness"] = make_entry("axiom: finiteness", checked=1, detail=report["finiteness"])
    entries["minimal_valid_xi"] = make_entry(
        "measured projection constant",
        checked=1,
        measured=report["minimal_valid_xi"],
        informational=True,
        detail=f"xi in use {report['xi']:.6g}",
    )
    return entries


@dataclass(frozen=True)
class HSet:
    """The pairs (X', Z') whose projections stand in for (X, Z)."""

    pair: tuple[str, str]
    members: frozenset[tuple[str, str]]

    def __contains__(self, item: object) -> bool:
        return item in self.members

    def __len__(self) -> int:
        return len(self.members)

    def swapped(self) -> "HSet":
        return HSet(pair=(self.pair[1], self.pair[0]), members=frozenset((z, x) for x, z in self.members))


def h_set(system: ProjectionSystem, x: str, z: str) -> HSet:
    """
    Enumerate H(X, Z).

    A pair (X', Z') belongs when both its projections to X and to Z exceed 2 xi,
    when X' = X and its projection to Z exceeds 2 xi, when Z' = Z and its
    projection to X exceeds 2 xi, or when it is (X, Z) itself.

    :raises ValueError: If X equals Z
    """
    if x == z:
        raise ValueError("H(X, Z) requires distinct vertices")
    names = system.vertices
    mask = _h_mask(system.dpi_table > 2 * system.xi, system.index(x), system.index(z))
    return HSet(pair=(x, z), members=frozenset((names[a], names[b]) for a, b in np.argwhere(mask)))


def modified_distance(system: ProjectionSystem, y: str, x: str, z: str) -> float:
    """
    Modified distance d_Y(X, Z): the minimum of d^π_Y over H(X, Z).

    :raises ValueError: If X equals Z or Y is one of them
    """
    if x == z:
        raise ValueError("Modified distance requires distinct X and Z")
    if y in (x, z):
        raise ValueError(f"Modified distance to {y} is undefined for pair ({x}, {z})")
    return float(system.modified_table[system.index(y), system.index(x), system.index(z)])


def _large_indices(table: np.ndarray, x: int, z: int, threshold: float) -> np.ndarray:
    return np.flatnonzero(table[:, x, z] > threshold)


def large_set(system: ProjectionSystem, params: CoreParams, x: str, z: str, threshold: float) -> frozenset[str]:
    """
    The vertices Y outside {X, Z} with d_Y(X, Z) above the threshold.

    :raises ValueError: If X equals Z or the threshold is below theta
    """
    if x == z:
        raise ValueError("Large projection sets require distinct X and Z")
    if threshold < params.theta:
        raise ValueError(f"Threshold {threshold} is below theta ({params.theta})")
    indices = _large_indices(system.modified_table, system.index(x), system.index(z), threshold)
    return frozenset(system.vertices[i] for i in indices)


def _sort_by_order(system: ProjectionSystem, base: int, members: Sequence[int]) -> list[int]:
    """
    Sort vertices by the comparator Y < W iff d_Y(base, W) > xi.

    :raises OrderInconsistencyError: On a tie, a two-way conflict, or a cycle
    """
    table = system.modified_table
    xi = system.xi
    names = system.vertices
    members = [int(member) for member in members]

    for y, w in combinations(members, 2):
        forward = table[y, base, w] > xi
        backward = table[w, base, y] > xi
        if forward == backward:
            kind = "conflict" if forward else "tie"
            raise OrderInconsistencyError(
                f"Order {kind} between {names[y]} and {names[w]} seen from {names[base]}; "
                "K is too small or the system is degenerate",
                (names[base], names[y], names[w]),
            )

    ordered = sorted(members, key=lambda y: sum(table[w, base, y] > xi for w in members if w != y))
    for a, b in combinations(ordered, 2):
        if not table[a, base, b] > xi:
            raise OrderInconsistencyError(
                f"Order is not transitive: {names[b]} precedes {names[a]} seen from {names[base]}",
                (names[base], names[a], names[b]),
            )
    return ordered


def sort_by_projection_order(system: ProjectionSystem, base: str, members: Sequence[str]) -> list[str]:
    """Sort vertices by the order seen from base (Y < W iff d_Y(base, W) > xi)."""
    base_index = system.index(base)
    ordered = _sort_by_order(system, base_index, [system.index(member) for member in members])
    return [system.vertices[i] for i in ordered]


@dataclass(frozen=True)
class OrderedInterval:
    """Large projection set between X and Z, ordered from X to Z, with both endpoints included."""

    pair: tuple[str, str]
    threshold: float
    elements: tuple[str, ...]

    @property
    def interior(self) -> tuple[str, ...]:
        return self.elements[1:-1]

    def position(self, vertex: str) -> int:
        return self.elements.index(vertex)


def order_interval(system: ProjectionSystem, params: CoreParams, x: str, z: str, k: float) -> OrderedInterval:
    """
    Order Y_K(X, Z) from X to Z.

    :raises ValueError: If X equals Z or K is below theta
    :raises OrderInconsistencyError: If the comparator is not a strict total order
    """
    if x == z:
        raise ValueError("Ordered intervals require distinct X and Z")
    if k < params.theta:
        raise ValueError(f"K ({k}) must be at least theta ({params.theta})")
    base = system.index(x)
    members = _large_indices(system.modified_table, base, system.index(z), k)
    ordered = _sort_by_order(system, base, members)
    return OrderedInterval(pair=(x, z), threshold=k, elements=(x, *(system.vertices[i] for i in ordered), z))


def is_guard(system: ProjectionSystem, params: CoreParams, w: str, y: str, k: float) -> bool:
    """
    Whether W is a guard for Y.

    For every X with W in Y_theta(X, Y), every element of Y_K(X, Y) must be at
    most W in the order from X.
    """
    if w == y:
        raise ValueError("A vertex cannot guard itself")
    table = system.modified_table
    wi, yi = system.index(w), system.index(y)

    for x in range(len(system)):
        if x in (wi, yi) or not table[wi, x, yi] > params.theta:
            continue
        for zi in _large_indices(table, x, yi, k):
            if zi != wi and not table[zi, x, wi] > system.xi:
                return False
    return True


def is_barrier(system: ProjectionSystem, params: CoreParams, y: str, path: Sequence[str], z: str) -> bool:
    """
    Whether Y lies in Y_theta(X_i, Z) for every vertex X_i of the path.

    :raises ValueError: If Z is on the path
    """
    if z in path:
        raise ValueError(f"Target {z} lies on the path")
    table = system.modified_table
    yi, zi = system.index(y), system.index(z)
    return all(table[yi, system.index(x), zi] > params.theta for x in path)


def barrier_consequence_holds(system: ProjectionSystem, params: CoreParams, path: Sequence[str], z: str) -> bool:
    """Whether d_Z(X_i, X_j) < theta for all distinct path vertices."""
    table = system.modified_table
    zi = system.index(z)
    indices = sorted({system.index(x) for x in path})
    return all(table[zi, a, b] < params.theta for a, b in combinations(indices, 2))


def find_barrier(
    system: ProjectionSystem, params: CoreParams, complex_: "ProjectionComplex", path: Sequence[str], z: str
) -> str:
    """
    Find a barrier between a path and a far vertex by chaining guards.

    Starts from the greatest element of Y_{K/2}(X_0, Z). When the current guard
    leaves Y_{K/2}(X_{i+1}, Z) it is replaced by the greatest element of
    Y_{K/2}(X_{i+1}, Z) below it. The first guard is the barrier.

    :param complex_: Projection complex providing graph distances
    :return: The barrier vertex id
    :raises ValueError: If the path is empty or comes within distance 3 of Z
    :raises BarrierNotFoundError: If guard chaining breaks down (K too small)
    """
    if not path:
        raise ValueError("Path must contain at least one vertex")
    for x in path:
        if complex_.distance(x, z) < 3:
            raise ValueError(f"Path vertex {x} is within distance 3 of {z}")

    table = system.modified_table
    names = system.vertices
    zi = system.index(z)
    half = params.k / 2

    x0 = system.index(path[0])
    members = _large_indices(table, x0, zi, half)
    if not members.size:
        raise BarrierNotFoundError(f"Y_K/2({path[0]}, {z}) is empty; K too small")
    barrier = current = _sort_by_order(system, x0, members)[-1]

    for x in path[1:]:
        step = system.index(x)
        members = _large_indices(table, step, zi, half)
        if current in members:
            continue
        lower = [v for v in members if table[v, step, current] > system.xi]
        if not lower:
            raise BarrierNotFoundError(f"No guard below {names[current]} seen from {x}; K too small")
        current = _sort_by_order(system, step, lower)[-1]
        logger.debug("Guard moved to %s at path vertex %s", names[current], x)

    if not is_barrier(system, params, names[barrier], path, z):
        raise BarrierNotFoundError(f"Guard {names[barrier]} is not a barrier for {z}; K too small")
    return names[barrier]


def _triangle_entry(table: np.ndarray, xi: float) -> CheckEntry:
    n = table.shape[0]
    checked = exceeded = 0
    worst = 0.0
    examples: list[list[int]] = []
    for y in range(n):
        row = table[y]
        lhs = np.broadcast_to(row[:, None, :], (n, n, n))
        sums = row[:, :, None] + row[None, :, :]
        defined = ~np.isnan(lhs) & ~np.isnan(sums)
        checked += int(defined.sum())
        if not defined.any():
            continue
        excess = np.where(defined, lhs - sums, -np.inf)
        worst = max(worst, float(excess.max()))
        hits = np.argwhere(excess > TRIANGLE_SLACK_FACTOR * xi)
        exceeded += len(hits)
        examples += [[y, *map(int, hit)] for hit in hits[:MAX_EXAMPLES]]
    return make_entry(
        "coarse triangle inequality for modified distance",
        checked=checked,
        measured=worst,
        flagged=exceeded > 0,
        detail=f"{exceeded} triples exceed the 4 xi slack",
        examples=examples,
    )


def _monotonicity_entry(table: np.ndarray, theta: float, tag: str, informational: bool) -> CheckEntry:
    n = table.shape[0]
    swapped = table.transpose(0, 2, 1)
    checked = violations = 0
    worst = 0.0
    examples: list[list[int]] = []

    for x in range(n):
        row = table[:, x, :]
        large = row >= theta
        if not large.any():
            continue
        reference = row[:, None, :]
        first = row[:, :, None]
        second = swapped
        checked += int(large.sum()) * max(n - 3, 0)
        for candidate in (first, second):
            excess = np.where(large[None, :, :], candidate - reference, np.nan)
            defined = excess[~np.isnan(excess)]
            if defined.size:
                worst = max(worst, float(defined.max()))
            hits = np.argwhere(excess > 0)
            violations += len(hits)
            examples += [[int(w), x, int(y), int(z)] for w, y, z in hits[:MAX_EXAMPLES]]

    return make_entry(
        tag,
        checked=checked,
        violations=violations,
        measured=worst,
        informational=informational,
        detail="largest excess of d_W(X,Y) or d_W(Z,Y) over d_W(X,Z)",
        examples=examples,
    )


def _betweenness_entries(system: ProjectionSystem, params: CoreParams) -> dict[str, CheckEntry]:
    table = system.modified_table
    names = system.vertices
    xi = system.xi
    inconsistent = pairs = between_checked = outside_checked = above_bound = 0
    between_worst = outside_worst = bound_worst = 0.0
    order_examples: list[tuple[str, ...]] = []
    bound_examples: list[list[str]] = []

    for x, z in combinations(range(len(system)), 2):
        members = _large_indices(table, x, z, params.theta)
        pairs += 1
        try:
            elements = [x, *_sort_by_order(system, x, members), z]
        except OrderInconsistencyError as error:
            inconsistent += 1
            order_examples.append(error.triple)
            continue
        for i, j, l in combinations(range(len(elements)), 3):
            y0, y1, y2 = elements[i], elements[j], elements[l]
            between_checked += 1
            excess = float(table[y1, y0, y2] - table[y1, x, z])
            between_worst = max(between_worst, abs(excess))
            if excess > TRIANGLE_TOLERANCE:
                above_bound += 1
                bound_worst = max(bound_worst, excess)
                if len(bound_examples) < MAX_EXAMPLES:
                    bound_examples.append([names[v] for v in (x, z, y0, y1, y2)])
        for i, l in combinations(range(len(elements)), 2):
            for j in range(len(elements)):
                if i < j < l:
                    continue
                value = table[elements[j], elements[i], elements[l]]
                if np.isnan(value):
                    continue
                outside_checked += 1
                outside_worst = max(outside_worst, float(value))

    return {
        "G-order": make_entry(
            "total order on large projection sets",
            checked=pairs,
            flagged=inconsistent > 0,
            measured=float(inconsistent),
            detail=f"{inconsistent} pairs have an inconsistent order at theta",
            examples=[list(example) for example in order_examples],
        ),
        "G-between": make_entry(
            "betweenness preserves projection",
            checked=between_checked,
            measured=between_worst,
            flagged=between_worst > BETWEEN_SLACK_FACTOR * xi,
            detail="largest |d_Y1(X,Z) - d_Y1(Y0,Y2)| for Y1 between Y0 and Y2",
        ),
        "G-bound": make_entry(
            "betweenness never increases projection",
            checked=between_checked,
            measured=bound_worst,
            flagged=above_bound > 0,
            detail=f"{above_bound} triples have d_Y1(Y0,Y2) > d_Y1(X,Z) for Y1 between Y0 and Y2",
            examples=bound_examples,
        ),
        "G-outside": make_entry(
            "projections outside an interval are small",
            checked=outside_checked,
            measured=outside_worst,
            flagged=outside_worst > OUTSIDE_SLACK_FACTOR * xi,
            detail="largest d_Y1(Y0,Y2) for Y1 not between Y0 and Y2",
        ),
    }


def _barrier_property_entry(table: np.ndarray, theta: float) -> CheckEntry:
    n = table.shape[0]
    checked = violations = 0
    examples: list[list[int]] = []
    for z in range(n):
        sees = (table[:, :, z] > theta).astype(int)
        shared = (sees.T @ sees) > 0
        target = table[z]
        defined = shared & ~np.isnan(target)
        checked += int(defined.sum())
        hits = np.argwhere(defined & (target >= theta))
        violations += len(hits)
        examples += [[int(a), int(b), z] for a, b in hits[:MAX_EXAMPLES]]
    return make_entry(
        "barrier property",
        checked=checked,
        violations=violations,
        detail="shared large projection forces d_Z(X0, X1) < theta",
        examples=examples,
    )


def check_theorem_main(system: ProjectionSystem, params: CoreParams) -> dict[str, CheckEntry]:
    """
    Exhaustively verify the inequalities satisfied by the modified distances.

    Symmetry, coarse equality, the Behrstock inequality, monotonicity and the
    barrier property are hard checks. The coarse triangle inequality and the
    betweenness slacks are measured and flagged. Raw projection monotonicity
    is reported for comparison only.

    :return: Entries keyed by clause
    """
    modified = system.modified_table
    raw = system.dpi_table
    xi = system.xi
    names = system.vertices

    def named(examples: list[list[str]]) -> list[list[str]]:
        return [[names[int(i)] for i in example] for example in examples]

    entries: dict[str, CheckEntry] = {}

    defined = ~np.isnan(modified)
    asymmetric = np.argwhere(defined & (modified != modified.transpose(0, 2, 1)))
    entries["A"] = make_entry(
        "modified distance is symmetric",
        checked=int(defined.sum()),
        violations=len(asymmetric),
        examples=named(asymmetric[:MAX_EXAMPLES].tolist()),
    )

    gap = raw - modified
    outside = np.argwhere(defined & ((gap < 0) | (gap >= 2 * xi)))
    entries["B"] = make_entry(
        "modified distance within 2 xi below projection distance",
        checked=int(defined.sum()),
        violations=len(outside),
        measured=_finite_max(gap),
        examples=named(outside[:MAX_EXAMPLES].tolist()),
    )

    triangle = _triangle_entry(modified, xi)
    triangle["examples"] = named(triangle["examples"])
    entries["C"] = triangle

    behrstock = np.minimum(modified, modified.transpose(2, 1, 0))
    broken = np.argwhere(behrstock >= xi)
    entries["D"] = make_entry(
        "Behrstock inequality for modified distance",
        checked=int((~np.isnan(behrstock)).sum()),
        violations=len(broken),
        measured=_finite_max(behrstock),
        examples=named(broken[:MAX_EXAMPLES].tolist()),
    )

    counts = (modified >= params.theta).sum(axis=0)
    entries["E"] = make_entry(
        "large projection sets are finite",
        checked=len(system) ** 2,
        measured=float(counts.max()) if counts.size else 0.0,
        informational=True,
        detail="largest |{Y : d_Y(X,Z) >= theta}|",
    )

    for key, table, informational, tag in (
        ("F", modified, False, "monotonicity at theta"),
        ("F-raw", raw, True, "monotonicity of raw projection distance"),
    ):
        entry = _monotonicity_entry(table, params.theta, tag, informational)
        entry["examples"] = named(entry["examples"])
        entries[key] = entry

    entries.update(_betweenness_entries(system, params))

    barrier = _barrier_property_entry(modified, params.theta)
    barrier["examples"] = named(barrier["examples"])
    entries["H"] = barrier

    failed = [key for key, entry in entries.items() if entry["status"] == "fail"]
    if failed:
        logger.warning("Modified-distance checks failed: %s", ", ".join(failed))
    return entries


def auto_calibrate_k(system: ProjectionSystem, params: CoreParams, max_doublings: int = MAX_K_DOUBLINGS) -> CoreParams:
    """
    Double K until every large projection set is consistently ordered.

    :return: Params with the first K that orders every pair
    :raises OrderInconsistencyError: If the doubling budget runs out
    """
    current = params
    last_error: OrderInconsistencyError | None = None
    for _ in range(max_doublings + 1):
        try:
            for x, z in combinations(range(len(system)), 2):
                _sort_by_order(system, x, _large_indices(system.modified_table, x, z, current.k))
        except OrderInconsistencyError as error:
            last_error = error
            logger.info("K=%.6g gives an inconsistent order (%s); doubling", current.k, error)
            current = current.with_k(current.k * 2)
            continue
        logger.info("K calibrated to %.6g", current.k)
        return current

    raise OrderInconsistencyError(
        f"No consistent order after {max_doublings} doublings of K", last_error.triple if last_error else ()
    )


def check_guard_remark(system: ProjectionSystem, params: CoreParams) -> CheckEntry:
    """Confirm that extreme elements of Y_{K/2}(X, Z) guard the endpoints next to them."""
    table = system.modified_table
    names = system.vertices
    checked = violations = skipped = 0
    examples: list[list[str]] = []

    for x in range(len(system)):
        for z in range(len(system)):
            if x == z:
                continue
            members = _large_indices(table, x, z, params.k / 2)
            if not members.size:
                continue
            try:
                ordered = _sort_by_order(system, x, members)
            except OrderInconsistencyError:
                skipped += 1
                continue
            for guard, guarded in ((ordered[-1], z), (ordered[0], x)):
                checked += 1
                if not is_guard(system, params, names[guard], names[guarded], params.k):
                    violations += 1
                    examples.append([names[x], names[z], names[guard], names[guarded]])

    return make_entry(
        "extreme elements of Y_K/2 are guards",
        checked=checked,
        violations=violations,
        detail=f"{skipped} pairs skipped for inconsistent order",
        examples=examples,
    )
