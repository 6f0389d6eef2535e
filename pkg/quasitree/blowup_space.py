"""
The blown-up quasi-tree of metric spaces C(Y).

Each vertex line becomes a path graph of unit-length edges over a truncation
window. For every edge of the projection complex, every anchor node of one
endpoint is joined to every anchor node of the other by a bridge of length L.
"""

import logging
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from quasitree._compat import StrEnum
from itertools import combinations, islice
from pathlib import Path
from typing_extensions import TypedDict

import networkx as nx
import numpy as np

from quasitree.errors import DegenerateConfigurationError, WindowError
from quasitree.projection_complex import MetricMode, ProjectionComplex, bottleneck_delta
from quasitree.projection_core import CoreParams, ProjectionSystem, order_interval
from quasitree.reports import MAX_EXAMPLES, CheckEntry, make_entry
from quasitree.utils.csv_writer import write_csv_from_dicts

logger = logging.getLogger(__name__)

WINDOW_MARGIN_FACTOR = 2.0
PATH_ENUMERATION_LIMIT = 10_000
NEAREST_POINT_SLACK_FACTOR = 20.0
TRACE_SLACK_FACTOR = 10.0
HAUSDORFF_SLACK_FACTOR = 10.0
SYMMETRY_TOLERANCE = 1e-9
COARSE_ESTIMATE_TOLERANCE = 1e-9
COARSE_ESTIMATE_NODE_LIMIT = 2000


class EdgeKind(StrEnum):
    """
    Kind of a blowup edge.

    INTERNAL: Unit edge inside one vertex space
    BRIDGE: Edge of length L between anchor nodes of adjacent vertex spaces
    """

    INTERNAL = "internal"
    BRIDGE = "bridge"


@dataclass(frozen=True, order=True)
class PointRef:
    """A node of one vertex space."""

    vertex: str
    node: int

    def __str__(self) -> str:
        return f"{self.vertex}@{self.node}"


def round_coordinate(value: float) -> int:
    """Round to the nearest integer node, halves away from zero."""
    return int(math.copysign(math.floor(abs(value) + 0.5), value))


@dataclass(frozen=True)
class VertexSpace:
    """
    The path graph standing in for one vertex line.

    ``projections`` holds the rounded (lo, hi) node span of every other vertex's
    projection; ``anchors`` lists the nodes realizing the projection of each
    complex neighbour.
    """

    owner: str
    window: tuple[int, int]
    projections: dict[str, tuple[int, int]] = field(hash=False)
    anchors: dict[str, tuple[int, ...]] = field(hash=False)

    @property
    def nodes(self) -> range:
        return range(self.window[0], self.window[1] + 1)

    def contains(self, node: int) -> bool:
        return self.window[0] <= node <= self.window[1]

    def span_of(self, point: PointRef) -> tuple[int, int]:
        """Node span standing for a point: the node itself, or its vertex's projection."""
        if point.vertex == self.owner:
            return point.node, point.node
        return self.projections[point.vertex]

    def nearest_anchor(self, neighbour: str, node: float) -> int:
        return min(self.anchors[neighbour], key=lambda anchor: (abs(anchor - node), anchor))

    @property
    def anchor_nodes(self) -> list[int]:
        return sorted({node for nodes in self.anchors.values() for node in nodes})


class BlowupSpace:
    """The weighted graph C(Y) with its vertex spaces."""

    def __init__(
        self,
        system: ProjectionSystem,
        params: CoreParams,
        complex_: ProjectionComplex,
        spaces: dict[str, VertexSpace],
        graph: nx.Graph,
        reversed_orientation: bool = False,
    ):
        self.system = system
        self.params = params
        self.complex = complex_
        self.spaces = spaces
        self.graph = graph
        self.reversed_orientation = reversed_orientation
        self._lengths: dict[PointRef, dict[PointRef, float]] = {}

    @property
    def bridge_length(self) -> float:
        return self.params.bridge_length

    def space(self, vertex: str) -> VertexSpace:
        return self.spaces[vertex]

    def nodes_of(self, vertex: str) -> list[PointRef]:
        return [PointRef(vertex, node) for node in self.spaces[vertex].nodes]

    def validate(self, point: PointRef) -> PointRef:
        """
        :raises ValueError: If the point is not a node of its vertex space
        """
        space = self.spaces.get(point.vertex)
        if space is None or not space.contains(point.node):
            raise ValueError(f"{point} is not a node of the blowup")
        return point

    def lengths_from(self, source: PointRef) -> dict[PointRef, float]:
        """Weighted distances from one node to every node, cached per source."""
        if source not in self._lengths:
            self._lengths[self.validate(source)] = nx.single_source_dijkstra_path_length(
                self.graph, source, weight="weight"
            )
        return self._lengths[source]

    def bridge_count(self) -> int:
        return sum(1 for _, _, kind in self.graph.edges(data="kind") if kind == EdgeKind.BRIDGE)

    def edge_rows(self) -> list[dict[str, object]]:
        rows = [
            {"src": str(min(u, v)), "dst": str(max(u, v)), "weight": data["weight"], "kind": str(data["kind"])}
            for u, v, data in self.graph.edges(data=True)
        ]
        return sorted(rows, key=lambda row: (row["src"], row["dst"]))


def build_blowup(
    system: ProjectionSystem, params: CoreParams, complex_: ProjectionComplex, reverse_orientation: bool = False
) -> BlowupSpace:
    """
    Build C(Y) from an interval system and its projection complex.

    Windows span every projection coordinate plus a margin of 2K on both sides;
    projection endpoints are rounded to the integer mesh.

    :param system: A system with geometry (projection intervals)
    :param params: Constants; bridges have length params.bridge_length
    :param complex_: Projection complex built from modified distances
    :param reverse_orientation: Mirror every vertex line
    :raises ValueError: If the system has no geometry or the complex uses raw distances
    :raises DegenerateConfigurationError: If the system is empty
    :raises WindowError: If an anchor falls outside its window
    """
    geometry = system.geometry
    if geometry is None:
        raise ValueError("Blowup construction needs projection intervals")
    if complex_.metric_mode != MetricMode.MODIFIED:
        raise ValueError("Blowup construction needs a complex built from modified distances")
    if not len(system):
        raise DegenerateConfigurationError("Cannot blow up an empty system")

    sign = -1.0 if reverse_orientation else 1.0
    margin = WINDOW_MARGIN_FACTOR * params.k
    spaces: dict[str, VertexSpace] = {}
    wide_anchors = 0

    for y in system.vertices:
        projections: dict[str, tuple[int, int]] = {}
        low, high = math.inf, -math.inf
        for x in system.vertices:
            if x == y:
                continue
            lo, hi = sorted(sign * value for value in geometry.interval(y, x))
            projections[x] = round_coordinate(lo), round_coordinate(hi)
            low, high = min(low, lo), max(high, hi)
        if not projections:
            low = high = 0.0
        window = math.floor(low - margin), math.ceil(high + margin)

        anchors: dict[str, tuple[int, ...]] = {}
        for neighbour in sorted(complex_.graph.neighbors(y)):
            first, last = projections[neighbour]
            if first < window[0] or last > window[1]:
                raise WindowError(f"Anchor of {neighbour} on {y} lies outside window {window}")
            anchors[neighbour] = tuple(range(first, last + 1))
            if last - first >= system.xi:
                wide_anchors += 1
                logger.debug("Anchor of %s on %s spans %d nodes", neighbour, y, last - first + 1)
        spaces[y] = VertexSpace(owner=y, window=window, projections=projections, anchors=anchors)

    if wide_anchors:
        logger.warning("%d anchors have rounded diameter of at least xi", wide_anchors)

    graph = nx.Graph()
    for y, space in spaces.items():
        graph.add_nodes_from(PointRef(y, node) for node in space.nodes)
        graph.add_edges_from(
            ((PointRef(y, node), PointRef(y, node + 1)) for node in space.nodes[:-1]),
            weight=1.0,
            kind=EdgeKind.INTERNAL,
        )

    for x, z in complex_.graph.edges:
        graph.add_edges_from(
            (
                (PointRef(x, a), PointRef(z, b))
                for a in spaces[x].anchors[z]
                for b in spaces[z].anchors[x]
            ),
            weight=params.bridge_length,
            kind=EdgeKind.BRIDGE,
        )

    space = BlowupSpace(system, params, complex_, spaces, graph, reverse_orientation)
    logger.info(
        "Built blowup: %d vertex spaces, %d nodes, %d bridges",
        len(spaces),
        graph.number_of_nodes(),
        space.bridge_count(),
    )
    return space


def blowup_distance(space: BlowupSpace, p: PointRef, q: PointRef) -> float:
    """Weighted shortest-path distance between two nodes."""
    space.validate(q)
    return float(space.lengths_from(p)[q])


def raw_point_projection_distance(space: BlowupSpace, y: str, p: PointRef, q: PointRef) -> float:
    """d^pi_Y(p, q): diameter of the node spans of p and q on C(Y), whatever spaces they lie in."""
    target = space.space(y)
    (lo_p, hi_p), (lo_q, hi_q) = target.span_of(p), target.span_of(q)
    return float(max(hi_p, hi_q) - min(lo_p, lo_q))


def point_projection_distance(space: BlowupSpace, y: str, p: PointRef, q: PointRef) -> float:
    """
    d_Y(p, q) for points of the blowup.

    When p or q lies in C(Y) this is the diameter of the node spans (the point
    itself, or the projection of the other point's vertex). When both lie in
    one other space it is the raw projection diameter of that vertex; otherwise
    it is the modified distance between their vertices.
    """
    if y in (p.vertex, q.vertex):
        return raw_point_projection_distance(space, y, p, q)
    system = space.system
    yi, pi, qi = system.index(y), system.index(p.vertex), system.index(q.vertex)
    if pi == qi:
        return float(system.dpi_table[yi, pi, pi])
    return float(system.modified_table[yi, pi, qi])


def extended_large_set(space: BlowupSpace, p: PointRef, q: PointRef, threshold: float) -> list[str]:
    """Vertices Y with d_Y(p, q) above the threshold, under the point conventions."""
    return [y for y in space.system.vertices if point_projection_distance(space, y, p, q) > threshold]


def _projection_sum(space: BlowupSpace, p: PointRef, q: PointRef, threshold: float) -> float:
    return sum(point_projection_distance(space, y, p, q) for y in extended_large_set(space, p, q, threshold))


def _segment(vertex: str, start: int, end: int) -> list[PointRef]:
    step = 1 if end >= start else -1
    return [PointRef(vertex, node) for node in range(start, end + step, step)]


@dataclass(frozen=True)
class StandardPath:
    """A standard path with its length and the length bound it must satisfy."""

    route: tuple[str, ...]
    nodes: tuple[PointRef, ...]
    length: float
    bound: float

    @property
    def within_bound(self) -> bool:
        return self.length <= self.bound


def standard_path(
    space: BlowupSpace, system: ProjectionSystem, params: CoreParams, x: PointRef, z: PointRef
) -> StandardPath:
    """
    The standard path from x to z.

    Passes through the spaces of Y_K(X, Z) in order, leaving each space at the
    anchor nearest the current node and entering the next at the anchor closest
    to where the path goes on.

    :return: The path, its length and the bound 6K + 4 Σ d_Y(x, z) over the extended Y_K(x, z)
    """
    space.validate(x)
    space.validate(z)
    bound = 6 * params.k + 4 * _projection_sum(space, x, z, params.k)
    if x.vertex == z.vertex:
        return StandardPath((x.vertex,), tuple(_segment(x.vertex, x.node, z.node)), float(abs(x.node - z.node)), bound)

    ordered = list(order_interval(system, params, x.vertex, z.vertex, params.k).elements)
    route = [ordered[0]]
    for following in ordered[1:]:
        if not space.complex.graph.has_edge(route[-1], following):
            detour = nx.shortest_path(space.complex.graph, route[-1], following)
            logger.warning("Consecutive spaces %s and %s are not adjacent; detouring", route[-1], following)
            route += detour[1:-1]
        route.append(following)

    nodes = [x]
    length = 0.0
    current = x.node
    for i, (here, there) in enumerate(zip(route, route[1:], strict=False)):
        exit_node = space.space(here).nearest_anchor(there, current)
        if i + 2 < len(route):
            lo, hi = space.space(there).projections[route[i + 2]]
            target = (lo + hi) / 2
        else:
            target = z.node
        entry_node = space.space(there).nearest_anchor(here, target)
        nodes += _segment(here, current, exit_node)[1:]
        nodes.append(PointRef(there, entry_node))
        length += abs(current - exit_node) + space.bridge_length
        current = entry_node

    nodes += _segment(z.vertex, current, z.node)[1:]
    length += abs(current - z.node)
    return StandardPath(tuple(route), tuple(nodes), length, bound)


class FormulaBounds(TypedDict):
    x: str
    z: str
    lower: float
    actual: float
    upper: float
    ok: bool


def distance_formula_bounds(
    space: BlowupSpace, system: ProjectionSystem, params: CoreParams, x: PointRef, z: PointRef
) -> FormulaBounds:
    """
    Sandwich the blowup distance: ½ Σ over Y_K'(x, z) <= d(x, z) <= 6K + 4 Σ over Y_K(x, z).
    """
    lower = 0.5 * _projection_sum(space, x, z, params.k_prime)
    upper = 6 * params.k + 4 * _projection_sum(space, x, z, params.k)
    actual = blowup_distance(space, x, z)
    bounds = FormulaBounds(x=str(x), z=str(z), lower=lower, actual=actual, upper=upper, ok=lower <= actual <= upper)
    if not bounds["ok"]:
        logger.warning("Blowup distance %.6g for (%s, %s) outside [%.6g, %.6g]", actual, x, z, lower, upper)
    return bounds


class NearestPointResult(TypedDict):
    x: str
    vertex: str
    nearest: str
    distance: float
    defect: float
    flagged: bool


def nearest_point_check(
    space: BlowupSpace, system: ProjectionSystem, params: CoreParams, x: PointRef, z_vertex: str
) -> NearestPointResult:
    """
    Find the node of C(Z) nearest to x and measure d_Z(x, z) at it.

    The defect is flagged above 2K + 20 xi.

    :raises ValueError: If x lies in C(Z)
    """
    if x.vertex == z_vertex:
        raise ValueError(f"{x} already lies in the space of {z_vertex}")
    lengths = space.lengths_from(x)
    nearest = min(space.nodes_of(z_vertex), key=lambda point: (lengths[point], point.node))
    defect = point_projection_distance(space, z_vertex, x, nearest)
    return NearestPointResult(
        x=str(x),
        vertex=z_vertex,
        nearest=str(nearest),
        distance=float(lengths[nearest]),
        defect=defect,
        flagged=defect > 2 * params.k + NEAREST_POINT_SLACK_FACTOR * system.xi,
    )


class Visit(TypedDict):
    vertex: str
    entry: int
    exit: int


def split_visits(path: Sequence[PointRef]) -> list[Visit]:
    """Group consecutive nodes of one vertex space into visits."""
    visits: list[Visit] = []
    for point in path:
        if visits and visits[-1]["vertex"] == point.vertex:
            visits[-1]["exit"] = point.node
        else:
            visits.append(Visit(vertex=point.vertex, entry=point.node, exit=point.node))
    return visits


class TraceResult(TypedDict):
    x: str
    z: str
    length: float
    visits: list[Visit]
    contiguous: bool
    missing: list[str]
    ordered: bool
    endpoint_defect: float
    flagged: bool
    geodesics_checked: int
    exhaustive: bool


def geodesic_trace(
    space: BlowupSpace, system: ProjectionSystem, params: CoreParams, x: PointRef, z: PointRef
) -> TraceResult:
    """
    Trace a shortest path and check how it meets the vertex spaces.

    Every visit must be one contiguous segment, every Y in the extended
    Y_K'(x, z) must be visited in order, and the segment endpoints v, w of a
    visit to Y must have d_Y(x, v) and d_Y(z, w) at most K' plus slack. The
    checks run over all shortest paths when there are at most 10^4 of them.
    """
    space.validate(x)
    space.validate(z)
    traced = nx.dijkstra_path(space.graph, x, z, weight="weight")
    required = extended_large_set(space, x, z, params.k_prime)
    order = (
        list(order_interval(system, params, x.vertex, z.vertex, params.k_prime).elements)
        if x.vertex != z.vertex
        else [x.vertex]
    )

    paths = list(islice(nx.all_shortest_paths(space.graph, x, z, weight="weight"), PATH_ENUMERATION_LIMIT + 1))
    exhaustive = len(paths) <= PATH_ENUMERATION_LIMIT
    if not exhaustive:
        logger.info("More than %d geodesics from %s to %s; checking the traced one", PATH_ENUMERATION_LIMIT, x, z)
        paths = [traced]

    contiguous = ordered = True
    missing: set[str] = set()
    defect = 0.0
    for path in paths:
        visits = split_visits(path)
        sequence = [visit["vertex"] for visit in visits]
        contiguous &= len(sequence) == len(set(sequence))
        missing |= set(required) - set(sequence)
        positions = [order.index(vertex) for vertex in sequence if vertex in order]
        ordered &= positions == sorted(positions)
        for visit in visits:
            entry, exit_ = PointRef(visit["vertex"], visit["entry"]), PointRef(visit["vertex"], visit["exit"])
            defect = max(
                defect,
                point_projection_distance(space, visit["vertex"], x, entry),
                point_projection_distance(space, visit["vertex"], z, exit_),
            )

    return TraceResult(
        x=str(x),
        z=str(z),
        length=float(nx.path_weight(space.graph, traced, weight="weight")),
        visits=split_visits(traced),
        contiguous=contiguous,
        missing=sorted(missing),
        ordered=ordered,
        endpoint_defect=defect,
        flagged=defect > params.k_prime + TRACE_SLACK_FACTOR * system.xi,
        geodesics_checked=len(paths),
        exhaustive=exhaustive,
    )


def hausdorff_distance(space: BlowupSpace, path_a: Iterable[PointRef], path_b: Iterable[PointRef]) -> float:
    """Symmetric Hausdorff distance between two node sets of the blowup."""
    first, second = set(path_a), set(path_b)
    if not first or not second:
        raise ValueError("Hausdorff distance needs two non-empty paths")

    def one_sided(source: set[PointRef], target: set[PointRef]) -> float:
        lengths = nx.multi_source_dijkstra_path_length(space.graph, target, weight="weight")
        return max(lengths[point] for point in source)

    return float(max(one_sided(first, second), one_sided(second, first)))


class EmbeddingResult(TypedDict):
    vertex: str
    passed: bool
    checked: int
    failures: list[list[str]]


def check_isometric_embedding(space: BlowupSpace, y: str) -> EmbeddingResult:
    """
    Check that C(Y) is totally geodesic in the blowup.

    A route leaving C(Y) does so at an anchor node and returns at another, so
    it suffices that every excursion between anchor nodes a and b avoiding the
    internal edges of C(Y) is strictly longer than |a - b|.
    """
    anchors = space.space(y).anchor_nodes
    if len(anchors) < 2:
        return EmbeddingResult(vertex=y, passed=True, checked=0, failures=[])

    outside = nx.subgraph_view(space.graph, filter_edge=lambda u, v: not (u.vertex == y and v.vertex == y))
    reach = anchors[-1] - anchors[0]
    checked = 0
    failures: list[list[str]] = []
    for a, b in combinations(anchors, 2):
        lengths = nx.single_source_dijkstra_path_length(outside, PointRef(y, a), cutoff=reach, weight="weight")
        checked += 1
        if lengths.get(PointRef(y, b), math.inf) <= b - a:
            failures.append([str(PointRef(y, a)), str(PointRef(y, b))])
    return EmbeddingResult(vertex=y, passed=not failures, checked=checked, failures=failures[:MAX_EXAMPLES])


class DeltaEstimate(TypedDict):
    delta_4pt: float
    bottleneck_delta: float
    seed: int
    nodes_sampled: int
    quadruples: int
    pairs: int


def estimate_delta(space: BlowupSpace, sample_count: int = 200, seed: int = 0, node_count: int = 40) -> DeltaEstimate:
    """
    Estimate hyperbolicity on sampled nodes.

    The four-point defect is the half-gap between the two largest of the three
    pair sums, maximized over sampled quadruples. The bottleneck constant is
    measured on sampled pairs with balls by weighted radius.

    :param sample_count: Number of quadruples and of pairs to sample
    :param seed: Seed for the random generator
    :param node_count: Number of nodes to draw quadruples and pairs from
    """
    rng = np.random.default_rng(seed)
    nodes = sorted(space.graph.nodes)
    chosen = [nodes[i] for i in sorted(rng.choice(len(nodes), size=min(node_count, len(nodes)), replace=False))]
    distances = np.array([[space.lengths_from(p)[q] for q in chosen] for p in chosen])

    delta = 0.0
    quadruples = 0
    if len(chosen) >= 4:
        for _ in range(sample_count):
            a, b, c, d = rng.choice(len(chosen), size=4, replace=False)
            sums = sorted(
                (
                    distances[a, b] + distances[c, d],
                    distances[a, c] + distances[b, d],
                    distances[a, d] + distances[b, c],
                )
            )
            delta = max(delta, (sums[-1] - sums[-2]) / 2)
            quadruples += 1

    pairs: list[tuple[PointRef, PointRef]] = []
    if len(chosen) >= 2:
        for _ in range(sample_count):
            i, j = rng.choice(len(chosen), size=2, replace=False)
            pairs.append((chosen[i], chosen[j]))
    bottleneck = bottleneck_delta(space.graph, weight="weight", pairs=pairs)

    return DeltaEstimate(
        delta_4pt=float(delta),
        bottleneck_delta=bottleneck["delta"],
        seed=seed,
        nodes_sampled=len(chosen),
        quadruples=quadruples,
        pairs=len(pairs),
    )


def mirror(point: PointRef) -> PointRef:
    return PointRef(point.vertex, -point.node)


def sample_point_pairs(space: BlowupSpace, count: int, seed: int) -> list[tuple[PointRef, PointRef]]:
    """Random node pairs, drawn near the anchors so the margins do not dominate."""
    rng = np.random.default_rng(seed)
    points = sorted(
        {
            PointRef(vertex, node)
            for vertex, vertex_space in space.spaces.items()
            for node in (vertex_space.anchor_nodes or [0])
            if vertex_space.contains(node)
        }
    )
    if len(points) < 2:
        return []
    pairs = []
    for _ in range(count):
        i, j = rng.choice(len(points), size=2, replace=False)
        pairs.append((points[i], points[j]))
    return pairs


class CoarseEstimateResult(TypedDict):
    mode: str
    checked: int
    violations: int
    smallest_slack: float | None
    examples: list[list[str]]


def check_coarse_estimate(
    space: BlowupSpace, pairs: Sequence[tuple[PointRef, PointRef]], node_limit: int = COARSE_ESTIMATE_NODE_LIMIT
) -> CoarseEstimateResult:
    """
    Check d(x, z) >= d^pi_Y(x, z) for every Y, with equality exactly when x and z both lie in C(Y).

    Pairs of distinct nodes of one vertex space are compared only against that
    space; across vertex spaces the inequality must be strict. With at most
    ``node_limit`` nodes every node pair is checked, otherwise only ``pairs``.
    """
    if space.graph.number_of_nodes() <= node_limit:
        return _coarse_estimate_all_pairs(space)
    logger.info(
        "Blowup has %d nodes; checking the coarse estimate on %d sampled pairs",
        space.graph.number_of_nodes(),
        len(pairs),
    )
    return _coarse_estimate_sampled(space, pairs)


def _coarse_estimate_sampled(space: BlowupSpace, pairs: Sequence[tuple[PointRef, PointRef]]) -> CoarseEstimateResult:
    checked = violations = 0
    smallest = math.inf
    examples: list[list[str]] = []
    for x, z in pairs:
        inside = x.vertex == z.vertex
        distance = blowup_distance(space, x, z)
        for y in [x.vertex] if inside else space.system.vertices:
            slack = distance - raw_point_projection_distance(space, y, x, z)
            checked += 1
            if not inside:
                smallest = min(smallest, slack)
            broken = abs(slack) > COARSE_ESTIMATE_TOLERANCE if inside else slack < COARSE_ESTIMATE_TOLERANCE
            if broken:
                violations += 1
                if len(examples) < MAX_EXAMPLES:
                    examples.append([str(x), str(z), y])
    return CoarseEstimateResult(
        mode="sampled",
        checked=checked,
        violations=violations,
        smallest_slack=smallest if math.isfinite(smallest) else None,
        examples=examples,
    )


def _coarse_estimate_all_pairs(space: BlowupSpace) -> CoarseEstimateResult:
    system = space.system
    nodes = sorted(space.graph)
    index = {node: i for i, node in enumerate(nodes)}
    distances = np.full((len(nodes), len(nodes)), np.inf)
    for source, lengths in nx.all_pairs_dijkstra_path_length(space.graph, weight="weight"):
        row = distances[index[source]]
        for target, length in lengths.items():
            row[index[target]] = length

    owners = np.array([system.index(node.vertex) for node in nodes])
    upper = np.triu(np.ones(distances.shape, dtype=bool), k=1)
    same_space = owners[:, None] == owners[None, :]
    across = upper & ~same_space

    checked = violations = 0
    smallest = math.inf
    examples: list[list[str]] = []
    for y in system.vertices:
        spans = np.array([space.space(y).span_of(node) for node in nodes], dtype=float)
        lo, hi = spans[:, 0], spans[:, 1]
        slack = distances - (np.maximum.outer(hi, hi) - np.minimum.outer(lo, lo))
        inside = upper & same_space & (owners[:, None] == system.index(y))
        broken = inside & (np.abs(slack) > COARSE_ESTIMATE_TOLERANCE)
        broken |= across & (slack < COARSE_ESTIMATE_TOLERANCE)
        checked += int(inside.sum() + across.sum())
        violations += int(broken.sum())
        if across.any():
            smallest = min(smallest, float(slack[across].min()))
        for i, j in islice(zip(*np.nonzero(broken), strict=True), max(0, MAX_EXAMPLES - len(examples))):
            examples.append([str(nodes[i]), str(nodes[j]), y])
    logger.debug("Coarse estimate over %d nodes: %d comparisons", len(nodes), checked)
    return CoarseEstimateResult(
        mode="exhaustive",
        checked=checked,
        violations=violations,
        smallest_slack=smallest if math.isfinite(smallest) else None,
        examples=examples,
    )


def blowup_checks(
    space: BlowupSpace,
    system: ProjectionSystem,
    params: CoreParams,
    pairs: Sequence[tuple[PointRef, PointRef]],
    seed: int = 0,
    samples: int = 200,
) -> tuple[dict[str, CheckEntry], DeltaEstimate]:
    """
    Run the blowup checks over sampled point pairs.

    :return: Suite entries and the hyperbolicity estimate
    """
    xi = system.xi
    entries: dict[str, CheckEntry] = {}

    embedding = [check_isometric_embedding(space, y) for y in system.vertices]
    entries["embedding"] = make_entry(
        "vertex spaces are totally geodesic",
        checked=sum(result["checked"] for result in embedding),
        violations=sum(len(result["failures"]) for result in embedding),
        examples=[failure for result in embedding for failure in result["failures"]],
    )

    formula = [distance_formula_bounds(space, system, params, x, z) for x, z in pairs]
    ratios = [row["upper"] / row["actual"] for row in formula if row["actual"] > 0]
    entries["distance-formula"] = make_entry(
        "distance formula sandwich",
        checked=len(formula),
        violations=sum(not row["ok"] for row in formula),
        measured=max(ratios, default=None),
        detail="measured is the largest upper/actual ratio",
        examples=[[row["x"], row["z"]] for row in formula if not row["ok"]],
    )

    paths = [standard_path(space, system, params, x, z) for x, z in pairs]
    too_long = [
        [str(path.nodes[0]), str(path.nodes[-1])]
        for path, row in zip(paths, formula, strict=True)
        if not path.within_bound or path.length < row["actual"] - SYMMETRY_TOLERANCE
    ]
    entries["standard-path"] = make_entry(
        "standard path length bound",
        checked=len(paths),
        violations=len(too_long),
        examples=too_long,
    )

    nearest = [
        nearest_point_check(space, system, params, x, z.vertex) for x, z in pairs if x.vertex != z.vertex
    ]
    entries["nearest-point"] = make_entry(
        "nearest point projection is near",
        checked=len(nearest),
        measured=max((result["defect"] for result in nearest), default=0.0),
        flagged=any(result["flagged"] for result in nearest),
        detail="flag threshold 2K + 20 xi",
    )

    traces = [geodesic_trace(space, system, params, x, z) for x, z in pairs]
    entries["trace-contiguous"] = make_entry(
        "geodesics meet vertex spaces in one segment",
        checked=len(traces),
        violations=sum(not trace["contiguous"] for trace in traces),
        examples=[[trace["x"], trace["z"]] for trace in traces if not trace["contiguous"]],
    )
    entries["trace-visits"] = make_entry(
        "geodesics visit Y_K' in order",
        checked=len(traces),
        violations=sum(bool(trace["missing"]) or not trace["ordered"] for trace in traces),
        examples=[
            [trace["x"], trace["z"], *trace["missing"]]
            for trace in traces
            if trace["missing"] or not trace["ordered"]
        ],
    )
    entries["trace-endpoints"] = make_entry(
        "visit endpoints project near the ends",
        checked=len(traces),
        measured=max((trace["endpoint_defect"] for trace in traces), default=0.0),
        flagged=any(trace["flagged"] for trace in traces),
        detail="flag threshold K' + 10 xi",
    )

    hausdorff = [
        hausdorff_distance(space, path.nodes, nx.dijkstra_path(space.graph, x, z, weight="weight"))
        for path, (x, z) in zip(paths, pairs, strict=True)
    ]
    limit = 3 * params.bridge_length + 3 * params.k + HAUSDORFF_SLACK_FACTOR * xi
    entries["hausdorff"] = make_entry(
        "standard paths fellow-travel geodesics",
        checked=len(hausdorff),
        measured=max(hausdorff, default=0.0),
        flagged=max(hausdorff, default=0.0) > limit,
        detail=f"flag threshold 3L + 3K + 10 xi = {limit:.6g}",
    )

    coarse = check_coarse_estimate(space, pairs)
    entries["coarse-estimate"] = make_entry(
        "blowup distance dominates projection distance",
        checked=coarse["checked"],
        violations=coarse["violations"],
        measured=coarse["smallest_slack"],
        detail=f"{coarse['mode']}; measured is the smallest d(x, z) - d_Y(x, z) across vertex spaces",
        examples=coarse["examples"],
    )

    mirrored = build_blowup(system, params, space.complex, reverse_orientation=not space.reversed_orientation)
    asymmetric = [
        [str(x), str(z)]
        for x, z in pairs
        if abs(blowup_distance(space, x, z) - blowup_distance(mirrored, mirror(x), mirror(z))) > SYMMETRY_TOLERANCE
    ]
    entries["orientation"] = make_entry(
        "blowup is independent of line orientation",
        checked=len(pairs),
        violations=len(asymmetric),
        examples=asymmetric,
    )

    estimate = estimate_delta(space, sample_count=samples, seed=seed)
    entries["delta"] = make_entry(
        "hyperbolicity estimate",
        checked=estimate["quadruples"],
        measured=estimate["delta_4pt"],
        informational=True,
        detail=f"bottleneck {estimate['bottleneck_delta']:.6g} on {estimate['pairs']} pairs, seed {seed}",
    )
    return entries, estimate


def write_edge_csv(space: BlowupSpace, file_path: str | Path | None = None) -> str:
    return write_csv_from_dicts(["src", "dst", "weight", "kind"], space.edge_rows(), file_path)
