"""
Upper half-plane geometry.

Isometries, axes, nearest-point projections between geodesics, and the
geodesic projection systems built from them: Schottky orbits, random
geodesics and near-tangent chains.
"""

import logging
import math
from collections.abc import Iterator, Sequence
from dataclasses import dataclass
from quasitree._compat import StrEnum
from itertools import combinations
from typing import Any, overload

from quasitree._compat import Self

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from quasitree.errors import AsymptoticProjectionError, DegenerateConfigurationError, NoAxisError
from quasitree.projection_core import IntervalSystem

logger = logging.getLogger(__name__)

BOUNDARY_TOLERANCE = 1e-9
TRACE_TOLERANCE = 1e-9
DETERMINANT_TOLERANCE = 1e-9
ENDPOINT_QUANTUM = 1e-7

AxisCoordinate = float


class BoundaryKind(StrEnum):
    """
    Kind of an ideal boundary point.

    FINITE: A point t of the real line
    INFINITY: The point at infinity
    """

    FINITE = "finite"
    INFINITY = "infinity"


class BoundaryPoint(BaseModel):
    """A point of the real line or the distinguished point at infinity."""

    model_config = ConfigDict(frozen=True)

    kind: BoundaryKind = BoundaryKind.FINITE
    value: float = 0.0

    # noinspection PyNestedDecorators
    @field_validator("value", mode="after")
    @classmethod
    def validate_value(cls, value: float) -> float:
        if not math.isfinite(value):
            raise ValueError("Use the infinity variant instead of a non-finite value")
        return value + 0.0

    @model_validator(mode="after")
    def validate_infinity(self) -> Self:
        if self.kind == BoundaryKind.INFINITY and self.value != 0.0:
            raise ValueError("The point at infinity carries no value")
        return self

    @classmethod
    def finite(cls, value: float) -> "BoundaryPoint":
        return cls(value=float(value))

    @classmethod
    def infinity(cls) -> "BoundaryPoint":
        return cls(kind=BoundaryKind.INFINITY)

    @property
    def is_infinite(self) -> bool:
        return self.kind == BoundaryKind.INFINITY

    def close_to(self, other: "BoundaryPoint", tolerance: float = BOUNDARY_TOLERANCE) -> bool:
        if self.is_infinite or other.is_infinite:
            return self.is_infinite and other.is_infinite
        return abs(self.value - other.value) <= tolerance

    def quantized(self) -> tuple[int, int]:
        """Coincidence key: ``(1, 0)`` for infinity, ``(0, round(t / quantum))`` otherwise."""
        if self.is_infinite:
            return 1, 0
        return 0, round(self.value / ENDPOINT_QUANTUM)

    def __str__(self) -> str:
        return "inf" if self.is_infinite else f"{self.value:.12g}"


INFINITY = BoundaryPoint.infinity()


def as_boundary(value: "BoundaryPoint | float | str") -> BoundaryPoint:
    """Convert a number, ``"inf"`` or a boundary point to a boundary point."""
    if isinstance(value, BoundaryPoint):
        return value
    if isinstance(value, str):
        if value.strip().lower() in ("inf", "infinity", "∞"):
            return INFINITY
        value = float(value)
    if math.isinf(value):
        return INFINITY
    return BoundaryPoint.finite(value)


class HPoint(BaseModel):
    """A point x + iy of the upper half-plane."""

    model_config = ConfigDict(frozen=True)

    x: float
    y: float = Field(gt=0)

    # noinspection PyNestedDecorators
    @field_validator("x", "y", mode="after")
    @classmethod
    def validate_finite(cls, value: float) -> float:
        if not math.isfinite(value):
            raise ValueError("Coordinates must be finite")
        return value

    @classmethod
    def from_complex(cls, z: complex) -> "HPoint":
        return cls(x=z.real, y=z.imag)

    def as_complex(self) -> complex:
        return complex(self.x, self.y)


class Geodesic(BaseModel):
    """A bi-infinite geodesic given by its ideal endpoints, oriented from a to b."""

    model_config = ConfigDict(frozen=True)

    a: BoundaryPoint
    b: BoundaryPoint

    @model_validator(mode="after")
    def validate_endpoints(self) -> Self:
        if self.a.close_to(self.b):
            raise ValueError(f"Geodesic endpoints coincide: {self.a} and {self.b}")
        return self

    @classmethod
    def between(cls, a: "BoundaryPoint | float | str", b: "BoundaryPoint | float | str") -> "Geodesic":
        return cls(a=as_boundary(a), b=as_boundary(b))

    @property
    def endpoints(self) -> tuple[BoundaryPoint, BoundaryPoint]:
        return self.a, self.b

    def reversed(self) -> "Geodesic":
        return Geodesic(a=self.b, b=self.a)

    def endpoint_key(self) -> tuple[tuple[int, int], tuple[int, int]]:
        """Unordered, quantized endpoint pair; equal for parallel copies of the same line."""
        first, second = sorted((self.a.quantized(), self.b.quantized()))
        return first, second

    def shares_endpoint(self, other: "Geodesic") -> bool:
        return any(p.close_to(q) for p in self.endpoints for q in other.endpoints)

    def __str__(self) -> str:
        return f"({self.a}, {self.b})"


class MoebiusMap(BaseModel):
    """An orientation-preserving isometry z -> (m11 z + m12) / (m21 z + m22), scaled to determinant 1."""

    model_config = ConfigDict(frozen=True)

    m11: float
    m12: float
    m21: float
    m22: float

    @model_validator(mode="before")
    @classmethod
    def normalize(cls, data: Any) -> Any:
        if isinstance(data, dict) and all(key in data for key in ("m11", "m12", "m21", "m22")):
            m11, m12, m21, m22 = (float(data[key]) for key in ("m11", "m12", "m21", "m22"))
            det = m11 * m22 - m12 * m21
            if not det > 0:
                raise ValueError(f"Determinant must be positive, got {det}")
            scale = math.sqrt(det)
            return {"m11": m11 / scale, "m12": m12 / scale, "m21": m21 / scale, "m22": m22 / scale}
        return data

    @model_validator(mode="after")
    def validate_determinant(self) -> Self:
        if abs(self.determinant - 1) > DETERMINANT_TOLERANCE:
            raise ValueError(f"Determinant {self.determinant} is not 1 after normalization")
        return self

    @classmethod
    def from_matrix(cls, matrix: Any) -> "MoebiusMap":
        """
        :param matrix: A 2x2 nested sequence or array with positive determinant
        :raises ValueError: If the shape is wrong or the determinant is not positive
        """
        array = np.asarray(matrix, dtype=float)
        if array.shape != (2, 2):
            raise ValueError(f"Expected a 2x2 matrix, got shape {array.shape}")
        return cls(m11=array[0, 0], m12=array[0, 1], m21=array[1, 0], m22=array[1, 1])

    @classmethod
    def identity(cls) -> "MoebiusMap":
        return cls(m11=1.0, m12=0.0, m21=0.0, m22=1.0)

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.m11, self.m12], [self.m21, self.m22]])

    @property
    def determinant(self) -> float:
        return self.m11 * self.m22 - self.m12 * self.m21

    @property
    def trace(self) -> float:
        return self.m11 + self.m22

    @property
    def is_loxodromic(self) -> bool:
        return abs(self.trace) > 2 + TRACE_TOLERANCE

    @property
    def translation_length(self) -> float:
        """2 ln λ for loxodromic maps, 0 otherwise."""
        if not self.is_loxodromic:
            return 0.0
        return 2 * math.acosh(abs(self.trace) / 2)

    @property
    def axis(self) -> Geodesic:
        return axis_of(self)[0]

    def inverse(self) -> "MoebiusMap":
        return MoebiusMap(m11=self.m22, m12=-self.m12, m21=-self.m21, m22=self.m11)

    def __matmul__(self, other: "MoebiusMap") -> "MoebiusMap":
        return MoebiusMap.from_matrix(self.matrix @ other.matrix)

    def close_to(self, other: "MoebiusMap", tolerance: float = 1e-9) -> bool:
        """Equality in PSL(2, R), up to sign."""
        return bool(
            np.allclose(self.matrix, other.matrix, atol=tolerance)
            or np.allclose(self.matrix, -other.matrix, atol=tolerance)
        )


DEFAULT_GENERATORS = (
    MoebiusMap(m11=4.0, m12=0.0, m21=0.0, m22=0.25),
    MoebiusMap(m11=17 / 8, m12=15 / 8, m21=15 / 8, m22=17 / 8),
)


def hyp_distance(p: HPoint, q: HPoint) -> float:
    """
    Hyperbolic distance, with cosh d = 1 + |p - q|^2 / (2 y_p y_q).

    :param p: First point
    :param q: Second point
    :return: The distance
    """
    return 2 * math.asinh(abs(p.as_complex() - q.as_complex()) / (2 * math.sqrt(p.y * q.y)))


def _is_zero(value: float, scale: float) -> bool:
    return abs(value) <= 1e-15 * max(scale, 1.0)


@overload
def apply_moebius(m: MoebiusMap, p: HPoint) -> HPoint: ...


@overload
def apply_moebius(m: MoebiusMap, p: BoundaryPoint) -> BoundaryPoint: ...


def apply_moebius(m: MoebiusMap, p: HPoint | BoundaryPoint) -> HPoint | BoundaryPoint:
    """Apply a Möbius map to an interior or a boundary point."""
    if isinstance(p, HPoint):
        z = p.as_complex()
        return HPoint.from_complex((m.m11 * z + m.m12) / (m.m21 * z + m.m22))

    if p.is_infinite:
        if _is_zero(m.m21, abs(m.m11)):
            return INFINITY
        return BoundaryPoint.finite(m.m11 / m.m21)

    denominator = m.m21 * p.value + m.m22
    if _is_zero(denominator, max(abs(m.m21 * p.value), abs(m.m22))):
        return INFINITY
    return BoundaryPoint.finite((m.m11 * p.value + m.m12) / denominator)


def apply_to_geodesic(m: MoebiusMap, geodesic: Geodesic) -> Geodesic:
    return Geodesic(a=apply_moebius(m, geodesic.a), b=apply_moebius(m, geodesic.b))


def axis_of(m: MoebiusMap) -> tuple[Geodesic, float]:
    """
    The axis of a loxodromic map and its translation length.

    The axis is oriented from the repelling to the attracting fixed point.

    :param m: The isometry
    :return: The axis and 2 ln λ, λ the larger eigenvalue modulus
    :raises NoAxisError: If the map is elliptic, parabolic or the identity
    """
    if not m.is_loxodromic:
        raise NoAxisError(f"Map with trace {m.trace:.12g} is not loxodromic and has no axis")

    sign = 1.0 if m.trace > 0 else -1.0
    m11, m12, m21, m22 = (sign * entry for entry in (m.m11, m.m12, m.m21, m.m22))
    length = m.translation_length

    if _is_zero(m21, max(abs(m11), abs(m22))):
        finite = BoundaryPoint.finite(m12 / (m22 - m11))
        if abs(m11 / m22) < 1:
            return Geodesic(a=INFINITY, b=finite), length
        return Geodesic(a=finite, b=INFINITY), length

    root = math.sqrt((m11 - m22) ** 2 + 4 * m12 * m21)
    first = ((m11 - m22) + root) / (2 * m21)
    second = ((m11 - m22) - root) / (2 * m21)
    if abs(m21 * first + m22) > 1:
        attracting, repelling = first, second
    else:
        attracting, repelling = second, first
    return Geodesic.between(repelling, attracting), length


def normalizing_map(geodesic: Geodesic) -> MoebiusMap:
    """
    The map sending a to 0 and b to infinity, so the geodesic becomes the imaginary axis.

    Its inverse parametrizes the geodesic by arclength: u -> T^-1(i e^u).
    """
    a, b = geodesic.a, geodesic.b
    if b.is_infinite:
        return MoebiusMap(m11=1.0, m12=-a.value, m21=0.0, m22=1.0)
    if a.is_infinite:
        return MoebiusMap(m11=0.0, m12=-1.0, m21=1.0, m22=-b.value)
    if a.value > b.value:
        return MoebiusMap(m11=1.0, m12=-a.value, m21=1.0, m22=-b.value)
    return MoebiusMap(m11=-1.0, m12=a.value, m21=1.0, m22=-b.value)


def point_at(geodesic: Geodesic, u: AxisCoordinate) -> HPoint:
    """The point at signed arclength u along an oriented geodesic."""
    return apply_moebius(normalizing_map(geodesic).inverse(), HPoint(x=0.0, y=math.exp(u)))


def _coordinate(normalizer: MoebiusMap, geodesic: Geodesic, t: BoundaryPoint) -> AxisCoordinate:
    if t.close_to(geodesic.a) or t.close_to(geodesic.b):
        raise AsymptoticProjectionError(f"Boundary point {t} is an endpoint of {geodesic}; projection is unbounded")
    image = apply_moebius(normalizer, t)
    if image.is_infinite or image.value == 0.0:
        raise AsymptoticProjectionError(f"Boundary point {t} is too close to an endpoint of {geodesic}")
    return math.log(abs(image.value))


def boundary_projection_coordinate(geodesic: Geodesic, t: BoundaryPoint) -> AxisCoordinate:
    """
    Arclength coordinate on the geodesic of the nearest-point projection of t.

    :raises AsymptoticProjectionError: If t is an endpoint of the geodesic
    """
    return _coordinate(normalizing_map(geodesic), geodesic, t)


def projection_interval(target: Geodesic, source: Geodesic) -> tuple[float, float]:
    """
    Coordinate interval of the projection of source onto target.

    :raises AsymptoticProjectionError: If the geodesics share an endpoint
    """
    if target.shares_endpoint(source):
        raise AsymptoticProjectionError(f"Geodesics {target} and {source} share an endpoint")
    normalizer = normalizing_map(target)
    first, second = (_coordinate(normalizer, target, t) for t in source.endpoints)
    return min(first, second), max(first, second)


def dpi_geodesics(target: Geodesic, x: Geodesic, z: Geodesic) -> float:
    """Diameter of the projection of x and z onto target."""
    lo_x, hi_x = projection_interval(target, x)
    lo_z, hi_z = projection_interval(target, z)
    return max(hi_x, hi_z) - min(lo_x, lo_z)


def sampled_projection_coordinate(
    geodesic: Geodesic,
    t: BoundaryPoint,
    epsilon: float = 1e-8,
    far: float = 1e8,
    span: float = 25.0,
    samples: int = 2001,
    refinements: int = 3,
) -> AxisCoordinate:
    """
    Numerical estimate of the projection coordinate of t.

    Approaches t along a vertical transversal and minimizes hyperbolic distance
    over a grid of points on the geodesic, refining the grid around the best
    sample.

    :param epsilon: Height of the approach point above a finite t
    :param far: Height of the approach point for t at infinity
    :param span: Half-width of the initial coordinate grid
    """
    source = complex(0.0, far) if t.is_infinite else complex(t.value, epsilon)
    inverse = normalizing_map(geodesic).inverse()
    center, half_width = 0.0, span

    for _ in range(refinements + 1):
        grid = np.linspace(center - half_width, center + half_width, samples)
        z = 1j * np.exp(grid)
        points = (inverse.m11 * z + inverse.m12) / (inverse.m21 * z + inverse.m22)
        distances = 2 * np.arcsinh(np.abs(points - source) / (2 * np.sqrt(source.imag * points.imag)))
        best = int(np.argmin(distances))
        center = float(grid[best])
        half_width = 2 * half_width / (samples - 1)
    return center


@dataclass(frozen=True)
class Disk:
    """A closed disk about a real center, or the closed exterior of one."""

    center: float
    radius: float
    exterior: bool = False

    def disjoint_from(self, other: "Disk") -> bool:
        if self.exterior and other.exterior:
            return False
        gap = abs(self.center - other.center)
        if not self.exterior and not other.exterior:
            return gap > self.radius + other.radius
        inner, outer = (other, self) if self.exterior else (self, other)
        return gap + inner.radius < outer.radius


def _ping_pong_disk(m: MoebiusMap) -> Disk:
    if not m.is_loxodromic:
        raise NoAxisError(f"Map with trace {m.trace:.12g} is not loxodromic")
    if _is_zero(m.m21, max(abs(m.m11), abs(m.m22))):
        stretch = m.m11 / m.m22
        fixed = m.m12 / (m.m22 - m.m11)
        return Disk(center=fixed, radius=math.sqrt(abs(stretch)), exterior=abs(stretch) > 1)
    return Disk(center=-m.m22 / m.m21, radius=1 / abs(m.m21))


def alphabet(count: int) -> str:
    """Generator letters; the inverse of a letter is its capital."""
    if not 0 < count <= 26:
        raise ValueError(f"Between 1 and 26 generators are supported, got {count}")
    return "abcdefghijklmnopqrstuvwxyz"[:count]


def ping_pong_domains(generators: Sequence[MoebiusMap]) -> dict[str, Disk]:
    """
    Ping-pong domains for each generator and inverse, keyed by letter.

    Each domain is bounded by the isometric circle of its map; for maps fixing
    infinity it is the disk |z - p| <= 1/λ or |z - p| >= λ about the finite
    fixed point p.
    """
    letters = alphabet(len(generators))
    domains: dict[str, Disk] = {}
    for letter, generator in zip(letters, generators, strict=True):
        domains[letter] = _ping_pong_disk(generator)
        domains[letter.upper()] = _ping_pong_disk(generator.inverse())
    return domains


def verify_ping_pong(generators: Sequence[MoebiusMap]) -> bool:
    """Whether the ping-pong domains are pairwise disjoint, which certifies a free discrete group."""
    domains = ping_pong_domains(generators)
    for (first, disk), (second, other) in combinations(domains.items(), 2):
        if not disk.disjoint_from(other):
            logger.debug("Ping-pong domains %s and %s intersect", first, second)
            return False
    return True


def inverse_word(word: str) -> str:
    return word[::-1].swapcase()


def reduce_word(word: str) -> str:
    """Freely reduce a word by cancelling adjacent inverse letters."""
    stack: list[str] = []
    for letter in word:
        if stack and stack[-1] == letter.swapcase():
            stack.pop()
        else:
            stack.append(letter)
    return "".join(stack)


def reduced_words(generator_count: int, radius: int) -> Iterator[str]:
    """
    Reduced words of length at most radius, shortest first.

    Letters are ordered a, A, b, B, ... within each length.
    """
    if radius < 0:
        raise ValueError(f"Word radius must be non-negative, got {radius}")
    letters = [symbol for letter in alphabet(generator_count) for symbol in (letter, letter.upper())]
    layer = [""]
    yield ""
    for _ in range(radius):
        layer = [word + letter for word in layer for letter in letters if not word or word[-1] != letter.swapcase()]
        yield from layer


def word_matrix(word: str, generators: Sequence[MoebiusMap]) -> MoebiusMap:
    """
    The isometry named by a word, composed left to right: "ab" is a after b.

    :raises ValueError: If the word uses a letter outside the generator alphabet
    """
    letters = alphabet(len(generators))
    product = np.eye(2)
    for letter in word:
        position = letters.find(letter.lower())
        if position < 0:
            raise ValueError(f"Letter {letter!r} is not in the alphabet {letters!r}")
        generator = generators[position]
        product = product @ (generator.inverse() if letter.isupper() else generator).matrix
    return MoebiusMap.from_matrix(product)


class GeodesicIndex:
    """Lookup of geodesics by quantized endpoint pair, tolerant to one quantum of rounding."""

    def __init__(self) -> None:
        self._entries: dict[tuple[tuple[int, int], tuple[int, int]], str] = {}

    def __len__(self) -> int:
        return len(self._entries)

    def add(self, geodesic: Geodesic, value: str) -> None:
        self._entries[geodesic.endpoint_key()] = value

    def find(self, geodesic: Geodesic) -> str | None:
        for first in _neighbour_keys(geodesic.a):
            for second in _neighbour_keys(geodesic.b):
                found = self._entries.get((min(first, second), max(first, second)))
                if found is not None:
                    return found
        return None


def _neighbour_keys(point: BoundaryPoint) -> list[tuple[int, int]]:
    kind, step = point.quantized()
    if kind:
        return [(kind, step)]
    return [(kind, step), (kind, step - 1), (kind, step + 1)]


class GeodesicSystem(IntervalSystem):
    """
    A projection system whose vertices are geodesics of the hyperbolic plane.

    Projections are nearest-point projections; xi is measured from the data
    unless given.
    """

    def __init__(
        self,
        geodesics: Sequence[Geodesic],
        vertices: Sequence[str] | None = None,
        words: Sequence[str] | None = None,
        xi: float | None = None,
        generators: Sequence[MoebiusMap] = (),
    ):
        """
        :param geodesics: The vertex geodesics
        :param vertices: Vertex ids; defaults to G0, G1, ...
        :param words: Group words that produced each geodesic, if any
        :param xi: The projection constant; measured when omitted
        :param generators: Generators of the acting group, if any
        :raises DegenerateConfigurationError: If the system is empty or two geodesics share an endpoint
        """
        geodesics = tuple(geodesics)
        if not geodesics:
            raise DegenerateConfigurationError("A geodesic system needs at least one geodesic")
        vertices = tuple(vertices) if vertices is not None else tuple(f"G{i}" for i in range(len(geodesics)))
        if len(vertices) != len(geodesics):
            raise ValueError("One vertex id is needed per geodesic")

        for (i, first), (j, second) in combinations(enumerate(geodesics), 2):
            if first.shares_endpoint(second):
                raise DegenerateConfigurationError(
                    f"Geodesics {vertices[i]} {first} and {vertices[j]} {second} share an endpoint; "
                    "the configuration is non-discrete or degenerate"
                )

        n = len(geodesics)
        intervals = np.full((n, n, 2), np.nan)
        for y, target in enumerate(geodesics):
            normalizer = normalizing_map(target)
            for x, source in enumerate(geodesics):
                if x == y:
                    continue
                first, second = (_coordinate(normalizer, target, t) for t in source.endpoints)
                intervals[y, x] = min(first, second), max(first, second)

        super().__init__(vertices, intervals, xi)
        self.geodesics = geodesics
        self.words = tuple(words) if words is not None else ("",) * n
        self.generators = tuple(generators)

    def geodesic(self, vertex: str) -> Geodesic:
        return self.geodesics[self.index(vertex)]


def schottky_instance(
    generators: Sequence[MoebiusMap] = DEFAULT_GENERATORS, word_radius: int = 1, xi: float | None = None
) -> GeodesicSystem:
    """
    Translates of the generator axes under reduced words up to a radius.

    Translates that coincide (a word stabilizing an axis) are kept once, under
    the shortest word. Vertex ids read ``<word>.X<i>``, with ``e`` for the empty word.

    :param generators: Loxodromic generators of a discrete group
    :param word_radius: Maximal word length
    :param xi: The projection constant; measured when omitted
    :raises NoAxisError: If a generator is not loxodromic
    :raises DegenerateConfigurationError: If two translates share an endpoint
    """
    if not generators:
        raise DegenerateConfigurationError("At least one generator is required")
    axes = [axis_of(generator)[0] for generator in generators]
    index = GeodesicIndex()
    geodesics: list[Geodesic] = []
    vertices: list[str] = []
    words: list[str] = []

    for word in reduced_words(len(generators), word_radius):
        element = word_matrix(word, generators)
        for i, axis in enumerate(axes, start=1):
            image = apply_to_geodesic(element, axis)
            if index.find(image) is not None:
                logger.debug("Word %r stabilizes axis X%d", word, i)
                continue
            vertex = f"{word or 'e'}.X{i}"
            index.add(image, vertex)
            geodesics.append(image)
            vertices.append(vertex)
            words.append(word)

    logger.info("Enumerated %d axis translates up to word radius %d", len(geodesics), word_radius)
    return GeodesicSystem(geodesics, vertices, words, xi=xi, generators=generators)


def random_geodesics(
    count: int, seed: int, endpoint_range: tuple[float, float] = (-10.0, 10.0), min_gap: float = 0.5
) -> list[Geodesic]:
    """
    Geodesics with uniformly random endpoints, every two endpoints at least min_gap apart.

    :raises DegenerateConfigurationError: If rejection sampling cannot place the endpoints
    """
    lo, hi = endpoint_range
    if not hi > lo:
        raise ValueError(f"Endpoint range must be increasing, got {endpoint_range}")
    rng = np.random.default_rng(seed)
    endpoints: list[float] = []
    geodesics: list[Geodesic] = []
    attempts = 0

    while len(geodesics) < count:
        attempts += 1
        if attempts > 1000 * max(count, 1):
            raise DegenerateConfigurationError(
                f"Could not place {count} geodesics in {endpoint_range} with gap {min_gap}"
            )
        a, b = sorted(rng.uniform(lo, hi, size=2))
        if b - a < min_gap or any(abs(t - s) < min_gap for t in (a, b) for s in endpoints):
            continue
        endpoints += [a, b]
        geodesics.append(Geodesic.between(a, b))
    return geodesics


def random_geodesic_instance(
    count: int,
    seed: int,
    endpoint_range: tuple[float, float] = (-10.0, 10.0),
    min_gap: float = 0.5,
    xi: float | None = None,
) -> GeodesicSystem:
    geodesics = random_geodesics(count, seed, endpoint_range, min_gap)
    logger.info("Sampled %d random geodesics with seed %d", count, seed)
    return GeodesicSystem(geodesics, xi=xi)


def tangent_chain_geodesics(count: int, gap: float = 0.02) -> list[Geodesic]:
    """Semicircles (2i, 2i + 2 - gap) along the real line, each nearly tangent to the next."""
    if not 0 < gap < 2:
        raise ValueError(f"Gap must lie in (0, 2), got {gap}")
    return [Geodesic.between(2.0 * i, 2.0 * i + 2 - gap) for i in range(count)]


def tangent_chain_instance(count: int, gap: float = 0.02, xi: float | None = None) -> GeodesicSystem:
    geodesics = tangent_chain_geodesics(count, gap)
    return GeodesicSystem(geodesics, [f"T{i}" for i in range(count)], xi=xi)
