"""
The projection complex P_K and its quasi-tree diagnostics.

Vertices are the members of a projection system; X and Z are joined when no
vertex sees a projection of (X, Z) larger than K.
"""

import logging
import math
from collections import Counter
from collections.abc import Hashable, Iterable, Sequence
from quasitree._compat import StrEnum
from functools import cached_property
from itertools import combinations
from pathlib import Path
from typing_extensions import TypedDict

import networkx as nx
import numpy as np
from networkx.utils import UnionFind

from quasitree.errors import DegenerateConfigurationError, DisconnectedComplexError
from quasitree.projection_core import CoreParams, ProjectionSystem
from quasitree.reports import MAX_EXAMPLES, CheckEntry, make_entry
from quasitree.utils.csv_writer import write_csv_from_dicts
from quasitree.utils.dot_writer import write_dot

logger = logging.getLogger(__name__)

DISTANCE_TOLERANCE = 1e-9
SEPARATION_RADIUS = 2
BOTTLENECK_REFERENCE = 9


class MetricMode(StrEnum):
    """
    Which projection distance decides the edges.

    MODIFIED: The modified distance d_Y; the complex is always connected
    RAW: The original projection distance d^π; an experiment with no expected outcome
    """

    MODIFIED = "modified"
    RAW = "raw"


class ProjectionComplex:
    """The graph P_K with its all-pairs distance table."""

    def __init__(self, system: ProjectionSystem, k: float, metric_mode: MetricMode, graph: nx.Graph):
        """
        :param system: The projection system the vertices come from
        :param k: Edge threshold
        :param metric_mode: Distance used to decide edges
        :param graph: The graph on the system's vertices
        """
        self.system = system
        self.k = float(k)
        self.metric_mode = MetricMode(metric_mode)
        self.graph = graph

    @property
    def vertices(self) -> tuple[str, ...]:
        return self.system.vertices

    @property
    def table(self) -> np.ndarray:
        """The distance table the edges were decided with."""
        if self.metric_mode == MetricMode.MODIFIED:
            return self.system.modified_table
        return self.system.dpi_table

    @cached_property
    def distance_matrix(self) -> np.ndarray:
        """Graph distances indexed like the system's vertices; inf between components."""
        n = len(self.vertices)
        matrix = np.full((n, n), np.inf)
        for source, lengths in nx.all_pairs_shortest_path_length(self.graph):
            row = self.system.index(source)
            for target, length in lengths.items():
                matrix[row, self.system.index(target)] = length
        return matrix

    @property
    def is_connected(self) -> bool:
        return len(self.vertices) > 0 and nx.is_connected(self.graph)

    def components(self) -> list[list[str]]:
        return sorted(sorted(component) for component in nx.connected_components(self.graph))

    def distance(self, x: str, z: str) -> float:
        """Graph distance; inf when X and Z lie in different components."""
        return float(self.distance_matrix[self.system.index(x), self.system.index(z)])

    def large_vertices(self, x: str, z: str, threshold: float) -> list[str]:
        """Vertices whose projection distance for (X, Z), in this complex's metric, exceeds the threshold."""
        column = self.table[:, self.system.index(x), self.system.index(z)]
        return [self.vertices[i] for i in np.flatnonzero(column > threshold)]


def build_complex(
    system: ProjectionSystem,
    params: CoreParams,
    k: float | None = None,
    metric_mode: MetricMode = MetricMode.MODIFIED,
) -> ProjectionComplex:
    """
    Build P_K: X and Z are adjacent iff no Y has d_Y(X, Z) > K.

    :param system: The projection system
    :param params: Constants; K defaults to params.k
    :param k: Edge threshold
    :param metric_mode: Decide edges with modified or raw projection distances
    :return: The complex
    :raises ValueError: If K is below theta (modified) or xi (raw)
    :raises DegenerateConfigurationError: If the system is empty
    :raises DisconnectedComplexError: If a modified-distance complex is disconnected
    """
    k = params.k if k is None else float(k)
    metric_mode = MetricMode(metric_mode)
    if metric_mode == MetricMode.MODIFIED and k < params.theta:
        raise ValueError(f"K ({k}) must be at least theta ({params.theta})")
    if metric_mode == MetricMode.RAW and k < system.xi:
        raise ValueError(f"K ({k}) must be at least xi ({system.xi})")
    if not len(system):
        raise DegenerateConfigurationError("Cannot build a complex on an empty system")

    table = system.modified_table if metric_mode == MetricMode.MODIFIED else system.dpi_table
    blocked = (table > k).any(axis=0)
    graph = nx.Graph()
    graph.add_nodes_from(system.vertices)
    graph.add_edges_from(
        (system.vertices[x], system.vertices[z])
        for x, z in combinations(range(len(system)), 2)
        if not blocked[x, z]
    )
    complex_ = ProjectionComplex(system, k, metric_mode, graph)
    logger.info(
        "Built %s complex at K=%.6g: %d vertices, %d edges",
        metric_mode,
        k,
        graph.number_of_nodes(),
        graph.number_of_edges(),
    )

    if not complex_.is_connected:
        components = complex_.components()
        if metric_mode == MetricMode.MODIFIED:
            raise DisconnectedComplexError(
                f"Projection complex at K={k} has {len(components)} components", components
            )
        logger.warning("Raw complex at K=%.6g has %d components", k, len(components))
    return complex_


def graph_distance(complex_: ProjectionComplex, x: str, z: str) -> int:
    """
    Graph distance between two vertices of the complex.

    :raises DisconnectedComplexError: If X and Z lie in different components
    """
    distance = complex_.distance(x, z)
    if math.isinf(distance):
        raise DisconnectedComplexError(f"{x} and {z} lie in different components", complex_.components())
    return int(distance)


class DistanceBounds(TypedDict):
    x: str
    z: str
    lower: int
    actual: int
    upper: int
    ok: bool


def distance_bounds(
    system: ProjectionSystem, params: CoreParams, complex_: ProjectionComplex, x: str, z: str
) -> DistanceBounds:
    """
    Sandwich the graph distance by the sizes of the large projection sets.

    upper = |Y_K(X, Z)| + 1 and lower = |Y_K'(X, Z)| + 1.

    :raises ValueError: If X equals Z
    """
    if x == z:
        raise ValueError("Distance bounds require distinct vertices")
    upper = len(complex_.large_vertices(x, z, complex_.k)) + 1
    lower = len(complex_.large_vertices(x, z, params.k_prime)) + 1
    actual = graph_distance(complex_, x, z)
    bounds = DistanceBounds(x=x, z=z, lower=lower, actual=actual, upper=upper, ok=lower <= actual <= upper)
    if not bounds["ok"]:
        logger.warning("Distance %d for (%s, %s) outside [%d, %d]", actual, x, z, lower, upper)
    return bounds


def all_pairs(vertices: Sequence[str]) -> list[tuple[str, str]]:
    return list(combinations(vertices, 2))


def distance_bounds_sweep(
    system: ProjectionSystem,
    params: CoreParams,
    complex_: ProjectionComplex,
    pairs: Iterable[tuple[str, str]] | None = None,
) -> tuple[list[DistanceBounds], dict[str, CheckEntry]]:
    """Distance bounds over many pairs; returns the rows and one entry per bound."""
    rows = [
        distance_bounds(system, params, complex_, x, z)
        for x, z in (pairs if pairs is not None else all_pairs(complex_.vertices))
    ]
    above = [[row["x"], row["z"]] for row in rows if row["actual"] > row["upper"]]
    below = [[row["x"], row["z"]] for row in rows if row["actual"] < row["lower"]]
    slack = max((row["upper"] - row["actual"] for row in rows), default=0)
    return rows, {
        "distance-upper": make_entry(
            "distance at most |Y_K| + 1",
            checked=len(rows),
            violations=len(above),
            measured=float(slack),
            detail="measured is the largest slack of the upper bound",
            examples=above,
        ),
        "distance-lower": make_entry(
            "distance at least |Y_K'| + 1",
            checked=len(rows),
            violations=len(below),
            detail="a violation means K' is too small",
            examples=below,
        ),
    }


def write_distance_bounds_csv(rows: list[DistanceBounds], file_path: str | Path) -> str:
    return write_csv_from_dicts(["x", "z", "lower", "actual", "upper", "ok"], list(rows), file_path)


class ContainmentResult(TypedDict):
    x: str
    z: str
    passed: bool
    geodesic_count: int
    on_every_geodesic: list[str]
    missing: list[str]
    minimal_empirical_k_prime: float


def check_geodesic_containment(
    system: ProjectionSystem, params: CoreParams, complex_: ProjectionComplex, x: str, z: str
) -> ContainmentResult:
    """
    Check that every Y in Y_K'(X, Z) lies on every geodesic from X to Z.

    A vertex lies on some geodesic iff d(X, Y) + d(Y, Z) = d(X, Z), and on every
    geodesic iff it is the only such vertex at its distance from X. Geodesics
    are counted over the predecessor DAG.

    :return: Result with the smallest threshold t such that Y_t(X, Z) lies on every geodesic
    :raises ValueError: If X equals Z
    """
    if x == z:
        raise ValueError("Containment requires distinct vertices")
    graph_distance(complex_, x, z)
    names = complex_.vertices
    distances = complex_.distance_matrix
    xi, zi = system.index(x), system.index(z)
    from_x, from_z = distances[xi], distances[zi]
    total = from_x[zi]

    on_some = np.flatnonzero(from_x + from_z == total)
    levels = Counter(from_x[on_some].tolist())
    on_every = {int(v) for v in on_some if levels[from_x[v]] == 1}

    counts: dict[int, int] = {xi: 1}
    for v in sorted(on_some, key=lambda v: from_x[v]):
        if v == xi:
            continue
        counts[int(v)] = sum(
            counts.get(system.index(u), 0)
            for u in complex_.graph.neighbors(names[v])
            if from_x[system.index(u)] == from_x[v] - 1
        )

    column = complex_.table[:, xi, zi]
    large = np.flatnonzero(column > params.k_prime)
    missing = [names[v] for v in large if v not in on_every]
    off_every = [v for v in range(len(names)) if v not in on_every and v not in (xi, zi)]
    minimal = max((float(column[v]) for v in off_every if not np.isnan(column[v])), default=0.0)

    result = ContainmentResult(
        x=x,
        z=z,
        passed=not missing,
        geodesic_count=counts[zi],
        on_every_geodesic=[names[v] for v in sorted(on_every, key=lambda v: from_x[v])],
        missing=missing,
        minimal_empirical_k_prime=minimal,
    )
    if missing:
        logger.warning("Vertices %s of Y_K'(%s, %s) miss some geodesic", missing, x, z)
    return result


class SeparationResult(TypedDict):
    vertex: str
    separated: bool


def check_midpath_separation(
    complex_: ProjectionComplex, system: ProjectionSystem, params: CoreParams, x: str, z: str
) -> list[SeparationResult]:
    """
    For each Y in Y_K(X, Z), check that the ball of radius 2 about Y separates X from Z.

    X and Z themselves are never removed.
    """
    if x == z:
        raise ValueError("Separation requires distinct vertices")
    names = complex_.vertices
    distances = complex_.distance_matrix
    results: list[SeparationResult] = []

    for y in complex_.large_vertices(x, z, complex_.k):
        ball = {names[v] for v in np.flatnonzero(distances[system.index(y)] <= SEPARATION_RADIUS)} - {x, z}
        remaining = complex_.graph.subgraph(v for v in complex_.graph if v not in ball)
        results.append(SeparationResult(vertex=y, separated=not nx.has_path(remaining, x, z)))
    return results


class PairBottleneck(TypedDict):
    pair: list[str]
    midpoint: str
    radius: float


class BottleneckReport(TypedDict):
    delta: float
    pair_count: int
    exempt_count: int
    witnesses: list[PairBottleneck]


def _widest_radius(graph: nx.Graph, from_center: dict[Hashable, float], x: Hashable, z: Hashable) -> float:
    """Smallest radius whose ball about the center, minus X and Z, separates X from Z."""
    union = UnionFind([x, z])
    active = {x, z}
    for vertex in sorted((v for v in graph if v not in active), key=lambda v: -from_center[v]):
        active.add(vertex)
        for neighbour in graph.neighbors(vertex):
            if neighbour in active:
                union.union(vertex, neighbour)
        if union[x] == union[z]:
            return from_center[vertex]
    return math.inf


def bottleneck_delta(
    graph: nx.Graph, weight: str | None = None, pairs: Iterable[tuple[Hashable, Hashable]] | None = None
) -> BottleneckReport:
    """
    Measure the bottleneck constant of a connected graph.

    For each pair at distance at least two, a midpoint is a geodesic vertex whose
    distances to the endpoints differ by at most one (or by the least amount
    available). The pair needs the smallest radius Δ such that the ball B(y, Δ)
    about some midpoint y, with the endpoints excluded, separates them.

    :param graph: A connected graph
    :param weight: Edge attribute holding lengths; unit lengths when None
    :param pairs: Pairs to test; all pairs when None
    :return: The largest required radius over the tested pairs
    """
    nodes = list(graph.nodes)
    cache: dict[Hashable, dict[Hashable, float]] = {}

    def lengths(source: Hashable) -> dict[Hashable, float]:
        if source not in cache:
            if weight is None:
                cache[source] = nx.single_source_shortest_path_length(graph, source)
            else:
                cache[source] = nx.single_source_dijkstra_path_length(graph, source, weight=weight)
        return cache[source]

    delta = 0.0
    checked = exempt = 0
    witnesses: list[PairBottleneck] = []

    for x, z in pairs if pairs is not None else combinations(nodes, 2):
        from_x, from_z = lengths(x), lengths(z)
        total = from_x[z]
        interior = [
            v
            for v in nodes
            if v not in (x, z) and math.isclose(from_x[v] + from_z[v], total, abs_tol=DISTANCE_TOLERANCE)
        ]
        if graph.has_edge(x, z) or not interior:
            exempt += 1
            continue
        checked += 1
        imbalance = {v: abs(from_x[v] - from_z[v]) for v in interior}
        allowed = max(1.0, min(imbalance.values()))
        midpoints = [v for v in interior if imbalance[v] <= allowed + DISTANCE_TOLERANCE]

        best_radius, best_midpoint = min(
            ((_widest_radius(graph, lengths(y), x, z), y) for y in midpoints), key=lambda item: item[0]
        )
        witness = PairBottleneck(pair=[str(x), str(z)], midpoint=str(best_midpoint), radius=float(best_radius))
        if best_radius > delta:
            delta, witnesses = float(best_radius), [witness]
        elif best_radius == delta and len(witnesses) < MAX_EXAMPLES:
            witnesses.append(witness)

    return BottleneckReport(delta=delta, pair_count=checked, exempt_count=exempt, witnesses=witnesses)


class DiameterReport(TypedDict):
    diameter: int
    eccentricity_histogram: dict[int, int]


def complex_diameter(complex_: ProjectionComplex) -> DiameterReport:
    """
    Diameter and eccentricity histogram of a connected complex.

    :raises DisconnectedComplexError: If the complex is disconnected
    """
    if not complex_.is_connected:
        raise DisconnectedComplexError("Diameter is undefined on a disconnected complex", complex_.components())
    eccentricities = complex_.distance_matrix.max(axis=1).astype(int)
    histogram = Counter(eccentricities.tolist())
    return DiameterReport(
        diameter=int(eccentricities.max()),
        eccentricity_histogram={int(key): histogram[key] for key in sorted(histogram)},
    )


def complex_checks(
    system: ProjectionSystem,
    params: CoreParams,
    complex_: ProjectionComplex,
    pairs: Sequence[tuple[str, str]] | None = None,
) -> tuple[dict[str, CheckEntry], list[DistanceBounds]]:
    """
    Run the quasi-tree diagnostics of a complex over a set of pairs.

    :return: Suite entries and the distance-bound rows
    """
    pairs = list(pairs) if pairs is not None else all_pairs(complex_.vertices)
    rows, entries = distance_bounds_sweep(system, params, complex_, pairs)

    containment = [check_geodesic_containment(system, params, complex_, x, z) for x, z in pairs]
    failed = [[result["x"], result["z"], *result["missing"]] for result in containment if not result["passed"]]
    entries["containment"] = make_entry(
        "Y_K' lies on every geodesic",
        checked=len(containment),
        violations=len(failed),
        measured=max((result["minimal_empirical_k_prime"] for result in containment), default=0.0),
        detail="measured is the smallest threshold t with Y_t on every geodesic",
        examples=failed,
    )

    separation_checked = 0
    unseparated: list[list[str]] = []
    for x, z in pairs:
        for result in check_midpath_separation(complex_, system, params, x, z):
            separation_checked += 1
            if not result["separated"]:
                unseparated.append([x, z, result["vertex"]])
    entries["separation"] = make_entry(
        "radius-2 balls about Y_K separate",
        checked=separation_checked,
        violations=len(unseparated),
        examples=unseparated,
    )

    bottleneck = bottleneck_delta(complex_.graph, pairs=pairs)
    entries["bottleneck"] = make_entry(
        "bottleneck constant",
        checked=bottleneck["pair_count"],
        measured=bottleneck["delta"],
        flagged=bottleneck["delta"] > BOTTLENECK_REFERENCE,
        detail=f"reference value {BOTTLENECK_REFERENCE}",
        examples=[witness["pair"] + [witness["midpoint"]] for witness in bottleneck["witnesses"]],
    )

    diameter = complex_diameter(complex_)
    entries["diameter"] = make_entry(
        "complex diameter",
        checked=len(complex_.vertices),
        measured=float(diameter["diameter"]),
        informational=True,
        detail=f"eccentricities {diameter['eccentricity_histogram']}",
    )
    return entries, rows


def raw_question_experiment(
    system: ProjectionSystem, params: CoreParams, k: float | None = None, pairs: Sequence[tuple[str, str]] | None = None
) -> dict[str, CheckEntry]:
    """
    Build the complex from raw projection distances and report its quasi-tree diagnostics.

    Every entry is informational.
    """
    complex_ = build_complex(system, params, k, MetricMode.RAW)
    components = complex_.components()
    entries = {
        "raw-connected": make_entry(
            "raw complex is connected",
            checked=1,
            measured=float(len(components)),
            informational=True,
            detail=f"{len(components)} components",
        )
    }
    if len(components) > 1:
        return entries

    pairs = list(pairs) if pairs is not None else all_pairs(complex_.vertices)
    diameter = complex_diameter(complex_)
    bottleneck = bottleneck_delta(complex_.graph, pairs=pairs)
    separations = [
        result for x, z in pairs for result in check_midpath_separation(complex_, system, params, x, z)
    ]
    unseparated = sum(not result["separated"] for result in separations)
    entries["raw-diameter"] = make_entry(
        "raw complex diameter", checked=len(complex_.vertices), measured=diameter["diameter"], informational=True
    )
    entries["raw-bottleneck"] = make_entry(
        "raw complex bottleneck constant",
        checked=bottleneck["pair_count"],
        measured=bottleneck["delta"],
        informational=True,
    )
    entries["raw-separation"] = make_entry(
        "raw radius-2 balls separate",
        checked=len(separations),
        violations=unseparated,
        informational=True,
        detail=f"{unseparated} large vertices fail to separate",
    )
    return entries


def write_complex_dot(complex_: ProjectionComplex, file_path: str | Path | None = None) -> str:
    """Export the complex with a ``mode`` attribute on every edge."""
    graph = nx.Graph()
    graph.add_nodes_from(complex_.vertices)
    graph.add_edges_from(complex_.graph.edges, mode=str(complex_.metric_mode))
    return write_dot(
        graph,
        name=f"P_K-{complex_.metric_mode}",
        graph_attributes={"K": complex_.k},
        file_path=file_path,
    )
