"""Domain types and lattice geometry for Spatial P systems.

Membranes are axis-aligned rectangles on the natural-coordinate lattice.
Specs are written with parent-relative origins; :func:`validate_tree`
resolves them into global footprints and checks the nesting constraints.
"""
from __future__ import annotations

import enum
from collections.abc import Iterable, Iterator, Mapping
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple, Optional, Union

import numpy as np


class SpatialPError(Exception):
    """Base class for every error raised by this package."""


class GeometryError(SpatialPError):
    pass


class DuplicateLabel(GeometryError):
    pass


class MissingSkin(GeometryError):
    pass


class UnknownLabel(GeometryError):
    pass


class OverlapViolation(GeometryError):
    pass


class BoundsViolation(GeometryError):
    pass


class AdjacencyViolation(GeometryError):
    pass


class ClearanceViolation(GeometryError):
    pass


class OutOfBounds(GeometryError):
    pass


class NotAdjacentToChild(GeometryError):
    pass


class NotAdjacentToEdge(GeometryError):
    pass


class Position(NamedTuple):
    x: int
    y: int

    def __add__(self, other):  # type: ignore[override]
        return Position(self.x + other[0], self.y + other[1])


class Displacement(NamedTuple):
    dx: int
    dy: int


HERE = Displacement(0, 0)
NORTH = Displacement(0, 1)
SOUTH = Displacement(0, -1)
EAST = Displacement(1, 0)
WEST = Displacement(-1, 0)

COMPASS = {"N": NORTH, "S": SOUTH, "E": EAST, "W": WEST}
COMPASS_ORDER = ("N", "S", "E", "W")


class Kind(enum.Enum):
    ORDINARY = "ordinary"
    ME = "me"


@dataclass(frozen=True)
class ObjectSymbol:
    name: str
    kind: Kind = Kind.ORDINARY


class Multiset(Mapping):
    """Immutable multiset of object names with positive counts.

    Items are kept sorted by name so equal multisets compare, hash and
    print identically.
    """

    __slots__ = ("_items", "_map")

    def __init__(self, items: Union[Mapping, Iterable, None] = None):
        counts: dict[str, int] = {}
        if items is None:
            pass
        elif isinstance(items, Mapping):
            for k, v in items.items():
                counts[k] = counts.get(k, 0) + v
        else:
            for it in items:
                if isinstance(it, str):
                    counts[it] = counts.get(it, 0) + 1
                else:
                    k, v = it
                    counts[k] = counts.get(k, 0) + v
        for k, v in counts.items():
            if v < 0:
                raise ValueError(f"negative count for {k!r}")
        self._items = tuple(sorted((k, int(v)) for k, v in counts.items() if v))
        self._map = dict(self._items)

    def __getitem__(self, key):
        return self._map[key]

    def __iter__(self) -> Iterator[str]:
        return iter(self._map)

    def __len__(self) -> int:
        return len(self._items)

    def __hash__(self):
        return hash(self._items)

    def __eq__(self, other):
        if isinstance(other, Multiset):
            return self._items == other._items
        if isinstance(other, Mapping):
            return self._map == {k: v for k, v in other.items() if v}
        return NotImplemented

    def __repr__(self):
        return f"Multiset({dict(self._items)!r})"

    def __str__(self):
        if not self._items:
            return "."
        return " ".join(k if v == 1 else f"{k}^{v}" for k, v in self._items)

    def get(self, key, default=0):
        return self._map.get(key, default)

    @property
    def size(self) -> int:
        return sum(v for _, v in self._items)

    def items(self):
        return self._items

    def __add__(self, other: Mapping) -> Multiset:
        out = dict(self._map)
        for k, v in other.items():
            out[k] = out.get(k, 0) + v
        return Multiset(out)

    def scaled(self, times: int) -> Multiset:
        return Multiset({k: v * times for k, v in self._items})

    def contains(self, other: Mapping) -> bool:
        return all(self._map.get(k, 0) >= v for k, v in other.items())


EMPTY = Multiset()


# message targets


@dataclass(frozen=True)
class Out:
    def __str__(self):
        return "out"


@dataclass(frozen=True)
class In:
    label: int

    def __str__(self):
        return f"in {self.label}"


Target = Union[Displacement, Out, In]


@dataclass(frozen=True)
class Message:
    payload: Multiset
    target: Target = HERE

    def __post_init__(self):
        if not self.payload:
            raise ValueError("message payload must be non-empty")


@dataclass(frozen=True)
class SingleRule:
    reactants: Multiset
    products: tuple[Message, ...] = ()

    def __post_init__(self):
        if not self.reactants:
            raise ValueError("rule reactants must be non-empty")

    def __str__(self):
        return f"{self.reactants} -> {_fmt_products(self.products)}"


@dataclass(frozen=True)
class PairRule:
    """``u1 - u2 -> v1 - v2`` applied to two adjacent cells.

    ``orientations`` lists the allowed compass directions from the first
    cell to the second.
    """

    reactants1: Multiset
    products1: tuple[Message, ...]
    reactants2: Multiset
    products2: tuple[Message, ...]
    orientations: tuple[str, ...] = COMPASS_ORDER

    def __post_init__(self):
        if not self.reactants1 or not self.reactants2:
            raise ValueError("pair rule reactants must be non-empty")
        if not self.orientations:
            raise ValueError("pair rule needs at least one orientation")
        bad = set(self.orientations) - set(COMPASS)
        if bad:
            raise ValueError(f"unknown orientations {sorted(bad)}")

    def __str__(self):
        return (
            f"{self.reactants1} | {self.reactants2} -> "
            f"{_fmt_products(self.products1)} | {_fmt_products(self.products2)}"
            f" @ {' '.join(self.orientations)}"
        )


Rule = Union[SingleRule, PairRule]


def _fmt_products(msgs) -> str:
    if not msgs:
        return "."
    parts = []
    for m in msgs:
        t = m.target
        if isinstance(t, Displacement):
            t = "here" if t == HERE else f"({t.dx},{t.dy})"
        parts.append(f"({m.payload})@{t}")
    return " ".join(parts)


# membranes


@dataclass(frozen=True)
class Rect:
    x: int
    y: int
    w: int
    h: int

    @property
    def x1(self) -> int:
        return self.x + self.w - 1

    @property
    def y1(self) -> int:
        return self.y + self.h - 1

    def contains(self, p) -> bool:
        return self.x <= p[0] <= self.x1 and self.y <= p[1] <= self.y1

    def inside(self, other: Rect) -> bool:
        return other.x <= self.x and self.x1 <= other.x1 and other.y <= self.y and self.y1 <= other.y1

    def intersects(self, other: Rect) -> bool:
        return not (self.x1 < other.x or other.x1 < self.x or self.y1 < other.y or other.y1 < self.y)

    def gap(self, other: Rect) -> int:
        """Minimum Manhattan distance between cells of the two rectangles."""
        dx = max(0, other.x - self.x1, self.x - other.x1)
        dy = max(0, other.y - self.y1, self.y - other.y1)
        return dx + dy

    def cells(self) -> Iterator[Position]:
        for y in range(self.y, self.y + self.h):
            for x in range(self.x, self.x + self.w):
                yield Position(x, y)


@dataclass(frozen=True)
class MembraneSpec:
    label: int
    parent: Optional[int]
    origin: Position
    width: int
    height: int
    rules: tuple = ()


@dataclass(frozen=True, eq=False)
class MembraneTree:
    specs: Mapping[int, MembraneSpec]
    footprints: Mapping[int, Rect]
    children: Mapping[int, tuple[int, ...]]

    @property
    def width(self) -> int:
        return self.footprints[1].w

    @property
    def height(self) -> int:
        return self.footprints[1].h

    @property
    def labels(self) -> tuple[int, ...]:
        return tuple(sorted(self.specs))

    def in_bounds(self, p) -> bool:
        return 0 <= p[0] < self.width and 0 <= p[1] < self.height

    @cached_property
    def owner_grid(self) -> np.ndarray:
        """``grid[y, x]`` is the label owning that cell."""
        grid = np.zeros((self.height, self.width), dtype=np.int64)
        # parents before children so deeper membranes overwrite
        for label in sorted(self.specs, key=self.depth):
            r = self.footprints[label]
            grid[r.y : r.y + r.h, r.x : r.x + r.w] = label
        return grid

    def depth(self, label: int) -> int:
        d = 0
        while self.specs[label].parent is not None:
            label = self.specs[label].parent
            d += 1
        return d

    @cached_property
    def _regions(self) -> dict[int, frozenset]:
        out: dict[int, set] = {label: set() for label in self.specs}
        for y, row in enumerate(self.owner_grid.tolist()):
            for x, label in enumerate(row):
                out[label].add(Position(x, y))
        return {k: frozenset(v) for k, v in out.items()}

    def __eq__(self, other):
        if not isinstance(other, MembraneTree):
            return NotImplemented
        return dict(self.specs) == dict(other.specs)

    def __hash__(self):
        return hash(tuple(sorted(self.specs.items())))


def validate_tree(specs: Iterable[MembraneSpec], skin_width: Optional[int] = None,
                  skin_height: Optional[int] = None) -> MembraneTree:
    specs = list(specs)
    by_label: dict[int, MembraneSpec] = {}
    for s in specs:
        if s.label in by_label:
            raise DuplicateLabel(f"membrane label {s.label} defined twice")
        if s.label < 1:
            raise GeometryError(f"membrane label must be positive, got {s.label}")
        if s.width < 1 or s.height < 1:
            raise GeometryError(f"membrane {s.label} has empty extent {s.width}x{s.height}")
        by_label[s.label] = s
    skin = by_label.get(1)
    if skin is None:
        raise MissingSkin("no skin membrane (label 1)")
    if skin.parent is not None or tuple(skin.origin) != (0, 0):
        raise MissingSkin("skin membrane must have no parent and origin (0,0)")
    if skin_width is not None and skin.width != skin_width:
        raise BoundsViolation(f"skin width {skin.width} != {skin_width}")
    if skin_height is not None and skin.height != skin_height:
        raise BoundsViolation(f"skin height {skin.height} != {skin_height}")

    children: dict[int, list[int]] = {label: [] for label in by_label}
    for s in specs:
        if s.label == 1:
            continue
        if s.parent is None:
            raise MissingSkin(f"membrane {s.label} has no parent; only the skin may be a root")
        if s.parent not in by_label:
            raise UnknownLabel(f"membrane {s.label} names unknown parent {s.parent}")
        children[s.parent].append(s.label)

    footprints: dict[int, Rect] = {1: Rect(0, 0, skin.width, skin.height)}
    stack = [1]
    while stack:
        label = stack.pop()
        parent_rect = footprints[label]
        kids = sorted(children[label])
        for k in kids:
            s = by_label[k]
            r = Rect(parent_rect.x + s.origin[0], parent_rect.y + s.origin[1], s.width, s.height)
            if s.origin[0] < 0 or s.origin[1] < 0 or not r.inside(parent_rect):
                raise BoundsViolation(f"membrane {k} exceeds the bounds of its parent {label}")
            interior = Rect(parent_rect.x + 1, parent_rect.y + 1, parent_rect.w - 2, parent_rect.h - 2)
            if interior.w < 1 or interior.h < 1 or not r.inside(interior):
                raise ClearanceViolation(f"membrane {k} touches the edge of its parent {label}")
            footprints[k] = r
        for i, a in enumerate(kids):
            for b in kids[i + 1:]:
                ra, rb = footprints[a], footprints[b]
                if ra.intersects(rb):
                    raise OverlapViolation(f"sibling membranes {a} and {b} overlap")
                if ra.gap(rb) == 1:
                    raise AdjacencyViolation(f"sibling membranes {a} and {b} are adjacent")
        stack.extend(kids)
    if len(footprints) != len(by_label):
        orphans = sorted(set(by_label) - set(footprints))
        raise UnknownLabel(f"membranes {orphans} are not reachable from the skin")

    return MembraneTree(
        specs=by_label,
        footprints=footprints,
        children={k: tuple(sorted(v)) for k, v in children.items()},
    )


def region_of(tree: MembraneTree, label: int) -> frozenset:
    try:
        return tree._regions[label]
    except KeyError:
        raise UnknownLabel(f"no membrane labelled {label}") from None


def owner_of(tree: MembraneTree, p) -> int:
    if not tree.in_bounds(p):
        raise OutOfBounds(f"{tuple(p)} lies outside the skin")
    return int(tree.owner_grid[p[1], p[0]])


def is_adjacent(p, q) -> bool:
    return abs(p[0] - q[0]) + abs(p[1] - q[1]) == 1


def neighbours(p) -> tuple[Position, ...]:
    x, y = p
    return (Position(x, y + 1), Position(x, y - 1), Position(x + 1, y), Position(x - 1, y))


def route_in(tree: MembraneTree, frm, child: int) -> Position:
    try:
        rect = tree.footprints[child]
    except KeyError:
        raise UnknownLabel(f"no membrane labelled {child}") from None
    if rect.contains(frm):
        raise NotAdjacentToChild(f"{tuple(frm)} lies inside membrane {child}")
    # clamp onto the rectangle; with distance 1 this is the single cell across the edge
    q = Position(min(max(frm[0], rect.x), rect.x1), min(max(frm[1], rect.y), rect.y1))
    if not is_adjacent(frm, q):
        raise NotAdjacentToChild(f"{tuple(frm)} is not adjacent to membrane {child}")
    return q


def route_out(tree: MembraneTree, frm, membrane: int) -> list[Position]:
    """Landing cells for an ``out`` message sent from ``frm``.

    Cells outside the skin rectangle stand for emission from the system.
    """
    try:
        rect = tree.footprints[membrane]
    except KeyError:
        raise UnknownLabel(f"no membrane labelled {membrane}") from None
    if Position(*frm) not in region_of(tree, membrane):
        raise NotAdjacentToEdge(f"{tuple(frm)} is not in the region of membrane {membrane}")
    out = sorted((q for q in neighbours(frm) if not rect.contains(q)), key=lambda q: (q.y, q.x))
    if not out:
        raise NotAdjacentToEdge(f"{tuple(frm)} is not on the edge of membrane {membrane}")
    return out


@dataclass(frozen=True)
class CellContents:
    ordinary: Multiset = field(default_factory=Multiset)
    me: Optional[str] = None
