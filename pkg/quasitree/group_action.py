"""
Group actions on geodesic instances.

Group elements act on the enumerated axis translates by permutation, as long
as the image stays inside the enumerated word ball. Every probe restricts to
in-window translates and counts what it had to skip.
"""

import logging
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path
from typing_extensions import TypedDict

from quasitree._compat import Self

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

from quasitree.errors import OrderInconsistencyError, WindowError
from quasitree.hyperbolic_plane import (
    GeodesicIndex,
    GeodesicSystem,
    MoebiusMap,
    apply_moebius,
    apply_to_geodesic,
    boundary_projection_coordinate,
    dpi_geodesics,
    inverse_word,
    reduce_word,
    reduced_words,
    word_matrix,
)
from quasitree.projection_complex import ProjectionComplex, graph_distance
from quasitree.projection_core import CoreParams, sort_by_projection_order
from quasitree.reports import CheckEntry, make_entry
from quasitree.utils.csv_writer import write_csv_from_dicts

logger = logging.getLogger(__name__)

EQUIVARIANCE_TOLERANCE = 1e-6
SAMPLE_WORD_RADIUS = 2


class GroupElement(BaseModel):
    """A reduced word together with the isometry it names."""

    model_config = ConfigDict(frozen=True)

    word: str
    matrix: MoebiusMap

    @model_validator(mode="after")
    def validate_word(self) -> Self:
        if reduce_word(self.word) != self.word:
            raise ValueError(f"Word {self.word!r} is not reduced")
        return self

    @classmethod
    def from_word(cls, word: str, generators: tuple[MoebiusMap, ...]) -> "GroupElement":
        reduced = reduce_word(word)
        return cls(word=reduced, matrix=word_matrix(reduced, generators))

    @property
    def is_identity(self) -> bool:
        return not self.word


def power_word(word: str, exponent: int) -> str:
    """The reduced word for g^n."""
    if exponent < 0:
        return reduce_word(inverse_word(word) * -exponent)
    return reduce_word(word * exponent)


@dataclass
class ActionContext:
    """
    Permutation action of a word group on a geodesic instance.

    Images are looked up by endpoint pair; an image that was not enumerated
    is reported as None (out of window). Lookups are cached per (word, vertex).
    """

    system: GeodesicSystem
    _index: GeodesicIndex = field(init=False, repr=False)
    _elements: dict[str, GroupElement] = field(init=False, repr=False, default_factory=dict)
    _images: dict[tuple[str, str], str | None] = field(init=False, repr=False, default_factory=dict)

    def __post_init__(self) -> None:
        if not self.system.generators:
            raise ValueError("The instance carries no group generators")
        self._index = GeodesicIndex()
        for vertex, geodesic in zip(self.system.vertices, self.system.geodesics, strict=True):
            self._index.add(geodesic, vertex)

    @property
    def generators(self) -> tuple[MoebiusMap, ...]:
        return self.system.generators

    def element(self, word: str) -> GroupElement:
        word = reduce_word(word)
        if word not in self._elements:
            self._elements[word] = GroupElement.from_word(word, self.generators)
        return self._elements[word]

    def image(self, word: str, vertex: str) -> str | None:
        """The vertex g(Y), or None when it lies outside the enumerated window."""
        key = (reduce_word(word), vertex)
        if key not in self._images:
            geodesic = apply_to_geodesic(self.element(key[0]).matrix, self.system.geodesic(vertex))
            self._images[key] = self._index.find(geodesic)
        return self._images[key]

    def power_image(self, word: str, exponent: int, vertex: str) -> str | None:
        return self.image(power_word(word, exponent), vertex)

    def fixes(self, word: str, vertex: str) -> bool:
        return self.image(word, vertex) == vertex


class EquivarianceReport(TypedDict):
    max_defect: float
    max_coordinate_defect: float
    samples: int
    skipped: int
    passed: bool


def check_equivariance(
    ctx: ActionContext, sample_count: int = 500, seed: int = 0, words: list[str] | None = None
) -> EquivarianceReport:
    """
    Compare projection data of sampled triples (A, B, C) with that of (gA, gB, gC).

    Projection distances must agree exactly up to tolerance. Endpoint
    coordinates on gA agree with those on A up to a shift, or a reflection and
    shift when the enumerated gA carries the opposite orientation.

    :param words: Elements to sample from; the ball of radius 2 when None
    """
    system = ctx.system
    rng = np.random.default_rng(seed)
    words = words if words is not None else list(reduced_words(len(ctx.generators), SAMPLE_WORD_RADIUS))
    max_defect = max_coordinate_defect = 0.0
    samples = skipped = 0

    if len(system) < 3:
        return EquivarianceReport(max_defect=0.0, max_coordinate_defect=0.0, samples=0, skipped=0, passed=True)

    for _ in range(sample_count):
        word = words[int(rng.integers(len(words)))]
        a, b, c = (system.vertices[i] for i in rng.choice(len(system), size=3, replace=False))
        images = [ctx.image(word, vertex) for vertex in (a, b, c)]
        if any(image is None for image in images):
            skipped += 1
            continue
        samples += 1
        ga, gb, gc = images
        max_defect = max(max_defect, abs(system.dpi(ga, gb, gc) - system.dpi(a, b, c)))

        element = ctx.element(word).matrix
        source, target = system.geodesic(a), system.geodesic(ga)
        points = [t for vertex in (b, c) for t in system.geodesic(vertex).endpoints]
        before = np.array([boundary_projection_coordinate(source, t) for t in points])
        after = np.array([boundary_projection_coordinate(target, apply_moebius(element, t)) for t in points])
        max_coordinate_defect = max(
            max_coordinate_defect, min(float(np.ptp(after - before)), float(np.ptp(after + before)))
        )

    if skipped:
        logger.info("Equivariance skipped %d of %d samples outside the window", skipped, sample_count)
    return EquivarianceReport(
        max_defect=max_defect,
        max_coordinate_defect=max_coordinate_defect,
        samples=samples,
        skipped=skipped,
        passed=max(max_defect, max_coordinate_defect) <= EQUIVARIANCE_TOLERANCE,
    )


def self_projection(ctx: ActionContext, word: str, vertex: str, exponent: int) -> float | None:
    """d_Y(g^-n Y, g^n Y), or None when undefined or out of window."""
    low = ctx.power_image(word, -exponent, vertex)
    high = ctx.power_image(word, exponent, vertex)
    if low is None or high is None or low == high or vertex in (low, high):
        return None
    system = ctx.system
    return float(system.modified_table[system.index(vertex), system.index(low), system.index(high)])


class AxisReport(TypedDict):
    word: str
    members: list[str]
    window: int
    ordered: bool
    betweenness_violations: int
    invariance_checked: int
    invariance_violations: int
    shifts: list[int]
    shift_ok: bool


def combinatorial_axis(
    ctx: ActionContext, params: CoreParams, word: str, k_prime: float | None = None, window: int = 3
) -> AxisReport:
    """
    The elements Y with d_Y(g^-n Y, g^n Y) > K' for some n within the window, in axis order.

    The order is Y < W iff d_Y(F, W) > xi, seen from F = g^-M Y0 for the first
    member Y0 and the largest in-window M. Checks betweenness, g-invariance and
    that g shifts the chain by a constant.
    """
    system = ctx.system
    k_prime = params.k_prime if k_prime is None else k_prime
    witnesses: dict[str, int] = {}
    for vertex in system.vertices:
        for exponent in range(1, window + 1):
            value = self_projection(ctx, word, vertex, exponent)
            if value is not None and value > k_prime:
                witnesses[vertex] = exponent
                break

    members = list(witnesses)
    report = AxisReport(
        word=word,
        members=members,
        window=window,
        ordered=True,
        betweenness_violations=0,
        invariance_checked=0,
        invariance_violations=0,
        shifts=[],
        shift_ok=True,
    )
    if not members:
        return report

    first = members[0]
    far = first
    for exponent in range(window, 0, -1):
        image = ctx.power_image(word, -exponent, first)
        if image is not None:
            far = image
            break
    try:
        rest = sort_by_projection_order(system, far, [member for member in members if member != far])
        members = ([far] if far in witnesses else []) + rest
    except OrderInconsistencyError as error:
        logger.warning("Combinatorial axis of %r is not ordered: %s", word, error)
        report["ordered"] = False
    report["members"] = members

    table = system.modified_table
    positions = {member: i for i, member in enumerate(members)}
    report["betweenness_violations"] = sum(
        not table[system.index(y1), system.index(y0), system.index(y2)] > params.k
        for y0, y1, y2 in combinations(members, 3)
    )

    shifts: set[int] = set()
    for member, exponent in witnesses.items():
        image = ctx.image(word, member)
        if image is None or ctx.power_image(word, exponent + 1, member) is None:
            continue
        report["invariance_checked"] += 1
        if image not in positions:
            report["invariance_violations"] += 1
        else:
            shifts.add(positions[image] - positions[member])
    report["shifts"] = sorted(shifts)
    report["shift_ok"] = len(shifts) <= 1 and 0 not in shifts
    return report


def choose_base_vertex(ctx: ActionContext, params: CoreParams, word: str, window: int = 3) -> str:
    """The first combinatorial-axis element, else the first vertex g moves, else the first vertex."""
    axis = combinatorial_axis(ctx, params, word, window=window)
    if axis["members"]:
        return axis["members"][0]
    for vertex in ctx.system.vertices:
        if not ctx.fixes(word, vertex):
            return vertex
    return ctx.system.vertices[0]


class TranslationRow(TypedDict):
    k: int
    distance: int
    ratio: float
    self_projection: float | None


class TranslationReport(TypedDict):
    word: str
    base: str
    rows: list[TranslationRow]
    tau: float
    truncated_at: int | None
    hypothesis_witnessed: bool
    positive: bool


def translation_length_estimate(
    ctx: ActionContext,
    complex_: ProjectionComplex,
    params: CoreParams,
    word: str,
    k_max: int = 8,
    base: str | None = None,
) -> TranslationReport:
    """
    Distances d(Y, g^k Y)/k for k = 1..k_max in the projection complex.

    The sequence must stay positive whenever d_Y(g^-N Y, g^N Y) > K' for some
    N <= k_max. Powers leaving the window truncate the curve.
    """
    base = base if base is not None else choose_base_vertex(ctx, params, word)
    rows: list[TranslationRow] = []
    truncated_at = None
    for k in range(1, k_max + 1):
        image = ctx.power_image(word, k, base)
        if image is None:
            truncated_at = k
            logger.info("g^%d moves %s outside the window; curve truncated", k, base)
            break
        distance = graph_distance(complex_, base, image)
        rows.append(
            TranslationRow(
                k=k, distance=distance, ratio=distance / k, self_projection=self_projection(ctx, word, base, k)
            )
        )

    witnessed = any(row["self_projection"] is not None and row["self_projection"] > params.k_prime for row in rows)
    return TranslationReport(
        word=word,
        base=base,
        rows=rows,
        tau=rows[-1]["ratio"] if rows else 0.0,
        truncated_at=truncated_at,
        hypothesis_witnessed=witnessed,
        positive=bool(rows) and all(row["distance"] > 0 for row in rows),
    )


def write_translation_csv(report: TranslationReport, file_path: str | Path | None = None) -> str:
    return write_csv_from_dicts(["k", "distance", "ratio", "self_projection"], list(report["rows"]), file_path)


class WpdReport(TypedDict):
    word: str
    base: str
    d: int
    m: int
    radius: int
    count: int
    skipped: int


def wpd_probe(
    ctx: ActionContext,
    complex_: ProjectionComplex,
    params: CoreParams,
    word: str,
    d: int,
    m: int,
    word_radius: int,
    base: str | None = None,
) -> WpdReport:
    """
    Count φ in the word ball with d(φ g^i Y, g^i Y) <= D for i = ±M.

    :raises WindowError: If g^M Y or g^-M Y is outside the window
    """
    base = base if base is not None else choose_base_vertex(ctx, params, word)
    targets = [ctx.power_image(word, exponent, base) for exponent in (m, -m)]
    if any(target is None for target in targets):
        raise WindowError(f"g^±{m} moves {base} outside the window")

    count = skipped = 0
    for phi in reduced_words(len(ctx.generators), word_radius):
        images = [ctx.image(phi, target) for target in targets]
        if any(image is None for image in images):
            skipped += 1
            continue
        if all(graph_distance(complex_, image, target) <= d for image, target in zip(images, targets, strict=True)):
            count += 1
    return WpdReport(word=word, base=base, d=d, m=m, radius=word_radius, count=count, skipped=skipped)


def action_checks(
    ctx: ActionContext,
    complex_: ProjectionComplex,
    params: CoreParams,
    word: str,
    k_max: int,
    wpd_d: int,
    wpd_m: int,
    samples: int,
    seed: int,
) -> tuple[dict[str, CheckEntry], TranslationReport]:
    """
    Run the group-action probes for one element.

    :return: Suite entries and the translation-length curve
    """
    entries: dict[str, CheckEntry] = {}
    equivariance = check_equivariance(ctx, samples, seed)
    entries["equivariance"] = make_entry(
        "projection distances are equivariant",
        checked=equivariance["samples"],
        violations=0 if equivariance["passed"] else 1,
        measured=max(equivariance["max_defect"], equivariance["max_coordinate_defect"]),
        detail=f"{equivariance['skipped']} samples outside the window",
    )

    translation = translation_length_estimate(ctx, complex_, params, word, k_max)
    entries["translation"] = make_entry(
        "positive translation length",
        checked=len(translation["rows"]),
        violations=int(translation["hypothesis_witnessed"] and not translation["positive"]),
        measured=translation["tau"],
        detail=f"base {translation['base']}, truncated at {translation['truncated_at']}",
    )

    axis = combinatorial_axis(ctx, params, word)
    entries["axis"] = make_entry(
        "combinatorial axis is a shifted chain",
        checked=len(axis["members"]),
        violations=axis["betweenness_violations"] + axis["invariance_violations"] + int(not axis["ordered"]),
        flagged=not axis["shift_ok"],
        measured=float(len(axis["members"])),
        detail=f"shifts {axis['shifts']}",
        examples=[axis["members"]],
    )

    try:
        wpd = wpd_probe(ctx, complex_, params, word, wpd_d, wpd_m, SAMPLE_WORD_RADIUS, base=translation["base"])
        entries["wpd"] = make_entry(
            "WPD stabilizer count",
            checked=1,
            measured=float(wpd["count"]),
            informational=True,
            detail=f"D={wpd_d} M={wpd_m} radius {wpd['radius']}, {wpd['skipped']} skipped",
        )
    except WindowError as error:
        entries["wpd"] = make_entry("WPD stabilizer count", checked=0, informational=True, detail=str(error))
    return entries, translation
