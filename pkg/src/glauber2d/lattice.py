"""Integer-lattice geometry.

Rectangles and their special variants (the flat rectangle of width L and
height ceil(L^(1/2+eps)), its taller companion of height
ceil((2L+1)^(1/2+eps)), plain squares, and the stacked family used by
the inductive square schedule), enlargements, unit-distance boundaries
partitioned into four sides, the pinned South segment, and dual-lattice
bonds.

Coordinate convention: the lower-left interior site of every rectangle
built here is (1, 1), so the South boundary is row 0.  Sites are (x, y)
pairs; x grows East, y grows North.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Iterable

from .errors import ParameterError, UnsupportedShapeError

Site = tuple[int, int]

#: Neighbor offsets (East, West, North, South).
NEIGHBOR_OFFSETS: tuple[Site, ...] = ((1, 0), (-1, 0), (0, 1), (0, -1))

SIDE_NAMES = ("N", "E", "S", "W")


def neighbors(site: Site) -> tuple[Site, Site, Site, Site]:
    x, y = site
    return ((x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1))


class RectKind(Enum):
    R = "R"
    Q = "Q"
    SQUARE = "SQUARE"
    STACKED = "STACKED"


@dataclass(frozen=True)
class RectSpec:
    """Specification of one of the special rectangles.

    kind R: width L, height ceil(L^(1/2+eps)).
    kind Q: width L, height ceil((2L+1)^(1/2+eps)).
    kind SQUARE: width L, height L (eps ignored).
    kind STACKED: width L, height h_index of the stacked family, where
        h_i = h_0 + i * (ceil((2L+1)^(1/2+eps)) - h_0),
        h_0 = ceil(L^(1/2+eps)), clamped so the topmost height equals L.
    """

    kind: RectKind
    L: int
    eps: float = 0.25
    index: int = 0

    def __post_init__(self) -> None:
        if self.L < 1:
            raise ParameterError(f"L must be >= 1, got {self.L}")
        if self.kind is not RectKind.SQUARE and not 0.0 < self.eps < 0.5:
            raise ParameterError(f"eps must lie in (0, 1/2), got {self.eps}")
        if self.index < 0:
            raise ParameterError(f"stacked index must be >= 0, got {self.index}")


def rect_height(spec: RectSpec) -> int:
    if spec.kind is RectKind.R:
        return math.ceil(spec.L ** (0.5 + spec.eps))
    if spec.kind is RectKind.Q:
        return math.ceil((2 * spec.L + 1) ** (0.5 + spec.eps))
    if spec.kind is RectKind.SQUARE:
        return spec.L
    heights = stacked_heights(spec.L, spec.eps)
    if spec.index >= len(heights):
        raise ParameterError(
            f"stacked index {spec.index} out of range, family has {len(heights)} levels"
        )
    return heights[spec.index]


def stacked_heights(L: int, eps: float) -> list[int]:
    """Heights h_0 < h_1 < ... < h_{k-1} = L of the stacked rectangles.

    The arithmetic progression h_i = h_0 + i*d generally misses L
    exactly; the topmost height is clamped to L.
    """
    if L < 1:
        raise ParameterError(f"L must be >= 1, got {L}")
    if not 0.0 < eps < 0.5:
        raise ParameterError(f"eps must lie in (0, 1/2), got {eps}")
    h0 = math.ceil(L ** (0.5 + eps))
    if h0 >= L:
        return [L]
    d = math.ceil((2 * L + 1) ** (0.5 + eps)) - h0
    if d <= 0:
        raise ParameterError(f"degenerate stacked increment for L={L}, eps={eps}")
    heights = [h0]
    while heights[-1] < L:
        heights.append(min(heights[-1] + d, L))
    return heights


@dataclass(frozen=True)
class Region:
    """A finite subset of Z^2: bounding box plus membership set.

    Regions are immutable values; geometric accessors are cached.
    """

    x0: int
    y0: int
    x1: int
    y1: int
    sites: frozenset[Site]

    def __post_init__(self) -> None:
        if not self.sites:
            raise ParameterError("region must contain at least one site")
        for (x, y) in self.sites:
            if not (self.x0 <= x <= self.x1 and self.y0 <= y <= self.y1):
                raise ParameterError(f"site {(x, y)} outside bounding box")

    # -- constructors ------------------------------------------------

    @staticmethod
    def rect(x0: int, y0: int, x1: int, y1: int) -> "Region":
        if x1 < x0 or y1 < y0:
            raise ParameterError("empty rectangle")
        sites = frozenset(
            (x, y) for x in range(x0, x1 + 1) for y in range(y0, y1 + 1)
        )
        return Region(x0, y0, x1, y1, sites)

    @staticmethod
    def from_sites(sites: Iterable[Site]) -> "Region":
        s = frozenset((int(x), int(y)) for x, y in sites)
        if not s:
            raise ParameterError("region must contain at least one site")
        xs = [x for x, _ in s]
        ys = [y for _, y in s]
        return Region(min(xs), min(ys), max(xs), max(ys), s)

    # -- basic geometry ----------------------------------------------

    @property
    def n_sites(self) -> int:
        return len(self.sites)

    @property
    def width(self) -> int:
        return self.x1 - self.x0 + 1

    @property
    def height(self) -> int:
        return self.y1 - self.y0 + 1

    @cached_property
    def is_rectangle(self) -> bool:
        return len(self.sites) == self.width * self.height

    @cached_property
    def site_list(self) -> tuple[Site, ...]:
        """Member sites in row-major order (South to North, West to East)."""
        return tuple(sorted(self.sites, key=lambda s: (s[1], s[0])))

    @cached_property
    def site_index(self) -> dict[Site, int]:
        return {s: i for i, s in enumerate(self.site_list)}

    def __contains__(self, site: Site) -> bool:
        return site in self.sites

    # -- boundary ----------------------------------------------------

    @cached_property
    def boundary_list(self) -> tuple[Site, ...]:
        """Sites outside the region at lattice distance 1, row-major order."""
        out: set[Site] = set()
        for s in self.sites:
            for nb in neighbors(s):
                if nb not in self.sites:
                    out.add(nb)
        return tuple(sorted(out, key=lambda s: (s[1], s[0])))

    @cached_property
    def boundary_index(self) -> dict[Site, int]:
        return {s: i for i, s in enumerate(self.boundary_list)}

    def sides(self) -> dict[str, tuple[Site, ...]]:
        """The four boundary sides of a rectangle, keyed N/E/S/W.

        Each side is ordered along the clockwise walk (N: West to East,
        E: North to South, S: East to West, W: South to North).  The
        unit-distance boundary of a rectangle has no corner sites, so
        the sides partition it exactly.
        """
        if not self.is_rectangle:
            raise UnsupportedShapeError("sides() requires a rectangular region")
        north = tuple((x, self.y1 + 1) for x in range(self.x0, self.x1 + 1))
        east = tuple((self.x1 + 1, y) for y in range(self.y1, self.y0 - 1, -1))
        south = tuple((x, self.y0 - 1) for x in range(self.x1, self.x0 - 1, -1))
        west = tuple((self.x0 - 1, y) for y in range(self.y0, self.y1 + 1))
        return {"N": north, "E": east, "S": south, "W": west}

    def boundary_walk(self) -> tuple[Site, ...]:
        """Cyclic clockwise walk of the boundary, starting at the NW corner."""
        s = self.sides()
        return s["N"] + s["E"] + s["S"] + s["W"]

    def translate(self, dx: int, dy: int) -> "Region":
        return Region(
            self.x0 + dx,
            self.y0 + dy,
            self.x1 + dx,
            self.y1 + dy,
            frozenset((x + dx, y + dy) for x, y in self.sites),
        )


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------

def make_rect(spec: RectSpec) -> Region:
    """Build the requested rectangle with lower-left interior site (1, 1)."""
    h = rect_height(spec)
    return Region.rect(1, 1, spec.L, h)


def enlarge(region: Region, L: int) -> Region:
    """Widen a rectangle by L to the East and West and heighten by L to
    the North, keeping the South row fixed."""
    if not region.is_rectangle:
        raise UnsupportedShapeError("enlarge() requires a rectangular region")
    if L < 0:
        raise ParameterError(f"enlargement must be >= 0, got {L}")
    return Region.rect(region.x0 - L, region.y0, region.x1 + L, region.y1 + L)


def boundary(region: Region) -> frozenset[Site]:
    """Sites outside the region at unit lattice distance."""
    return frozenset(region.boundary_list)


def delta_segment(L: int, eps: float) -> frozenset[Site]:
    """The pinned segment on the South boundary of the width-(2L+1)
    rectangle: sites (i, 0) with |i - L| <= L^(3*eps), clipped to the
    boundary row columns 1..2L+1."""
    if L < 1:
        raise ParameterError(f"L must be >= 1, got {L}")
    if not 0.0 < eps < 0.5:
        raise ParameterError(f"eps must lie in (0, 1/2), got {eps}")
    radius = L ** (3.0 * eps)
    lo = max(1, math.ceil(L - radius))
    hi = min(2 * L + 1, math.floor(L + radius))
    return frozenset((i, 0) for i in range(lo, hi + 1))


# ---------------------------------------------------------------------------
# Dual lattice
# ---------------------------------------------------------------------------

@dataclass(frozen=True, order=True)
class DualBond:
    """A bond of the dual lattice.

    Dual vertices are stored as integer pairs (a, b) denoting the
    geometric point (a + 1/2, b + 1/2).  A bond joins two dual vertices
    differing by one unit in exactly one coordinate and separates the
    two primal sites at distance 1/2 from it.
    """

    v0: Site
    v1: Site

    def __post_init__(self) -> None:
        dx = abs(self.v0[0] - self.v1[0])
        dy = abs(self.v0[1] - self.v1[1])
        if dx + dy != 1:
            raise ParameterError(f"dual vertices {self.v0}, {self.v1} not adjacent")
        if self.v1 < self.v0:  # canonical orientation
            lo, hi = self.v1, self.v0
            object.__setattr__(self, "v0", lo)
            object.__setattr__(self, "v1", hi)

    @staticmethod
    def between(a: Site, b: Site) -> "DualBond":
        """The dual bond separating two adjacent primal sites."""
        (xa, ya), (xb, yb) = a, b
        if abs(xa - xb) + abs(ya - yb) != 1:
            raise ParameterError(f"primal sites {a}, {b} not adjacent")
        if ya == yb:  # vertical bond between horizontal neighbors
            x = max(xa, xb)
            return DualBond((x - 1, ya - 1), (x - 1, ya))
        y = max(ya, yb)
        return DualBond((xa - 1, y - 1), (xa, y - 1))

    @property
    def separated_sites(self) -> tuple[Site, Site]:
        (a0, b0), (a1, b1) = self.v0, self.v1
        if a0 == a1:  # vertical dual bond: separates E-W primal pair
            y = max(b0, b1)
            return ((a0, y), (a0 + 1, y))
        x = max(a0, a1)
        return ((x, b0), (x, b0 + 1))

    @property
    def is_horizontal(self) -> bool:
        return self.v0[1] == self.v1[1]

    def geometric(self) -> tuple[tuple[float, float], tuple[float, float]]:
        return (
            (self.v0[0] + 0.5, self.v0[1] + 0.5),
            (self.v1[0] + 0.5, self.v1[1] + 0.5),
        )


# ---------------------------------------------------------------------------
# Serialization (used by config files and the CLI)
# ---------------------------------------------------------------------------

def region_to_text(region: Region) -> str:
    """One-line text form: 'rect x0 y0 x1 y1' or explicit site list."""
    if region.is_rectangle:
        return f"rect {region.x0} {region.y0} {region.x1} {region.y1}"
    body = " ".join(f"{x},{y}" for x, y in region.site_list)
    return f"sites {body}"


def region_from_text(text: str) -> Region:
    parts = text.split()
    if not parts:
        raise ParameterError("empty region text")
    if parts[0] == "rect":
        if len(parts) != 5:
            raise ParameterError(f"bad rect line: {text!r}")
        x0, y0, x1, y1 = (int(p) for p in parts[1:])
        return Region.rect(x0, y0, x1, y1)
    if parts[0] == "sites":
        sites = []
        for tok in parts[1:]:
            x, y = tok.split(",")
            sites.append((int(x), int(y)))
        return Region.from_sites(sites)
    raise ParameterError(f"unknown region format: {text!r}")
