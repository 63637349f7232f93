"""Peierls contours on the dual lattice.

A configuration with boundary condition tau (no free spins) is extended
by +1 outside the boundary; the bonds separating disagreeing neighbors,
clipped to the thickened region, split into closed contours plus one
open contour per pair of boundary sign changes.  Where four separating
bonds meet at a dual vertex, the four surrounding spins alternate in
sign and the bonds are resolved into the two linked pairs lying on
either side of the 45-degree line through the minus pair: each pair
hugs one plus site, so minus clusters keep the diagonal connection.
(A direction-independent pairing breaks the open-contour count at
corners of the region; this one is enforced by the reconstruct round
trip and the sign-change count.)

Also provides the *-connected crossing events of minus spins used by
the screening arguments: steps of length 1, or length sqrt(2) along the
(1, 1) diagonal only.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

from .errors import ContractError, ParameterError, ReconstructionError
from .gibbs import BoundaryCondition, SpinConfig
from .lattice import DualBond, Region, Site, neighbors

# direction unit vectors on the dual lattice
_DIRS = {"N": (0, 1), "E": (1, 0), "S": (0, -1), "W": (-1, 0)}
# linked pairs when the plus spins sit NE/SW, resp. NW/SE, of the vertex
_PARTNER_PLUS_NE = {"N": "E", "E": "N", "S": "W", "W": "S"}
_PARTNER_PLUS_NW = {"N": "W", "W": "N", "S": "E", "E": "S"}


@dataclass(frozen=True)
class Contour:
    """An ordered bond path; closed when the walk returns to its start."""

    bonds: tuple[DualBond, ...]
    closed: bool
    endpoints: tuple[Site, Site] | None  # dual vertices, open contours only

    def __len__(self) -> int:
        return len(self.bonds)

    @property
    def length(self) -> int:
        return len(self.bonds)

    def dual_vertices(self) -> set[Site]:
        out: set[Site] = set()
        for b in self.bonds:
            out.add(b.v0)
            out.add(b.v1)
        return out


@dataclass(frozen=True)
class ContourSet:
    closed: tuple[Contour, ...]
    open: tuple[Contour, ...]
    region: Region
    bc: BoundaryCondition

    @property
    def all_bonds(self) -> frozenset[DualBond]:
        bonds: set[DualBond] = set()
        for c in self.closed + self.open:
            bonds.update(c.bonds)
        return frozenset(bonds)

    @property
    def n_open(self) -> int:
        return len(self.open)


def height(contour: Contour) -> float:
    """Maximal geometric height reached by the contour."""
    return max(v[1] + 0.5 for v in contour.dual_vertices())


def _extended_spin(config: SpinConfig, bc: BoundaryCondition):
    region = config.region
    values = {s: int(v) for s, v in zip(region.site_list, config.values)}
    for s, v in zip(region.boundary_list, bc.boundary_values):
        values[s] = int(v)

    def spin(site: Site) -> int:
        return values.get(site, 1)

    return spin


def extract(config: SpinConfig, bc: BoundaryCondition) -> ContourSet:
    """Split the separating bonds of the configuration (extended by tau
    on the boundary and by +1 elsewhere) into closed and open contours."""
    if config.region != bc.region:
        raise ContractError("configuration and boundary condition regions differ")
    if any(v == 0 for v in bc.boundary_values):
        raise ContractError("contours are undefined for free boundary spins")
    region = config.region
    spin = _extended_spin(config, bc)

    # candidate bonds: at least one separated site inside the region
    candidate: set[DualBond] = set()
    for s in region.site_list:
        for nb in neighbors(s):
            if spin(s) != spin(nb):
                candidate.add(DualBond.between(s, nb))

    # incident separating bonds per dual vertex, by direction, including
    # bonds outside the clip (needed only for the pairing decision)
    incident: dict[Site, dict[str, DualBond]] = {}
    for b in candidate:
        for v in (b.v0, b.v1):
            if v not in incident:
                incident[v] = {}
    for v in incident:
        for d, (dx, dy) in _DIRS.items():
            w = (v[0] + dx, v[1] + dy)
            bond = DualBond(v, w)
            a, c = bond.separated_sites
            if spin(a) != spin(c):
                incident[v][d] = bond

    def direction(v: Site, b: DualBond) -> str:
        other = b.v1 if b.v0 == v else b.v0
        dx, dy = other[0] - v[0], other[1] - v[1]
        for d, vec in _DIRS.items():
            if vec == (dx, dy):
                return d
        raise AssertionError("bond not incident to vertex")

    def continuation(v: Site, b: DualBond) -> Optional[DualBond]:
        """Bond continuing the contour through v after arriving on b,
        or None when the contour ends at v (inside the clip or not)."""
        inc = incident[v]
        d = direction(v, b)
        if len(inc) == 4:
            # spins alternate around v; pair the bonds hugging each plus
            ne_plus = spin((v[0] + 1, v[1] + 1)) == 1
            partner = _PARTNER_PLUS_NE if ne_plus else _PARTNER_PLUS_NW
            nxt = inc[partner[d]]
        elif len(inc) == 2:
            other = [bb for bb in inc.values() if bb != b]
            nxt = other[0]
        else:
            return None
        return nxt if nxt in candidate else None

    unused = set(candidate)

    def walk(start: DualBond, start_vertex: Site) -> list[DualBond]:
        """Consume bonds from `unused`, walking away from start_vertex."""
        path = [start]
        unused.discard(start)
        v = start.v1 if start.v0 == start_vertex else start.v0
        while True:
            nxt = continuation(v, path[-1])
            if nxt is None or nxt not in unused:
                return path
            path.append(nxt)
            unused.discard(nxt)
            v = nxt.v1 if nxt.v0 == v else nxt.v0

    open_contours: list[Contour] = []
    closed_contours: list[Contour] = []

    # open contours first: grow from bonds with a dead end
    for b in sorted(candidate):
        if b not in unused:
            continue
        ends = [v for v in (b.v0, b.v1) if continuation(v, b) is None]
        if not ends:
            continue
        # walk away from one dead end; the path terminates at the other
        path = walk(b, ends[0])
        first = ends[0]
        last_bond = path[-1]
        prev = first
        for bond in path:
            prev = bond.v1 if bond.v0 == prev else bond.v0
        open_contours.append(
            Contour(tuple(path), closed=False, endpoints=(first, prev))
        )

    # remaining bonds lie on closed loops
    for b in sorted(candidate):
        if b not in unused:
            continue
        path = walk(b, b.v0)
        closed_contours.append(Contour(tuple(path), closed=True, endpoints=None))

    return ContourSet(
        closed=tuple(closed_contours),
        open=tuple(open_contours),
        region=region,
        bc=bc,
    )


def boundary_sign_changes(region: Region, bc: BoundaryCondition) -> int:
    """Number of sign changes of tau along the cyclic boundary walk."""
    walk = region.boundary_walk()
    vals = [bc.value_at(s) for s in walk]
    if any(v == 0 for v in vals):
        raise ContractError("sign changes undefined for free boundary spins")
    return sum(1 for a, b in zip(vals, vals[1:] + vals[:1]) if a != b)


def reconstruct(contours: ContourSet, bc: BoundaryCondition) -> SpinConfig:
    """Invert extract(): propagate tau inward across the contour bonds.

    Raises ReconstructionError when the bond set is inconsistent with
    the boundary condition."""
    region = contours.region
    if bc.region != region:
        raise ContractError("boundary condition built for another region")
    bonds = contours.all_bonds
    known: dict[Site, int] = {
        s: int(v) for s, v in zip(region.boundary_list, bc.boundary_values)
    }
    if any(v == 0 for v in known.values()):
        raise ContractError("contours are undefined for free boundary spins")
    frontier = list(known)
    resolved: dict[Site, int] = {}
    while frontier:
        nxt: list[Site] = []
        for s in frontier:
            base = known[s] if s in known else resolved[s]
            for nb in neighbors(s):
                if nb not in region.sites:
                    continue
                flip = -1 if DualBond.between(s, nb) in bonds else 1
                val = base * flip
                if nb in resolved:
                    if resolved[nb] != val:
                        raise ReconstructionError(
                            f"inconsistent contour set at site {nb}"
                        )
                else:
                    resolved[nb] = val
                    nxt.append(nb)
        frontier = nxt
    if len(resolved) != region.n_sites:
        raise ReconstructionError("region not fully determined by the boundary")
    config = SpinConfig.from_mapping(region, resolved)
    if extract(config, bc).all_bonds != bonds:
        raise ReconstructionError("bond set is not realizable")
    return config


def star_adjacent(a: Site, b: Site) -> bool:
    """*-adjacency: distance 1, or distance sqrt(2) along the (1, 1)
    diagonal (the one at +45 degrees with the horizontal axis)."""
    dx, dy = b[0] - a[0], b[1] - a[1]
    if abs(dx) + abs(dy) == 1:
        return True
    return dx == dy and abs(dx) == 1


def star_crossing(
    config: SpinConfig,
    from_sites: Iterable[Site],
    to_sites: Iterable[Site],
    within: Region,
    minus_value: int = -1,
) -> bool:
    """True when a *-connected chain of `minus_value` spins inside
    `within` joins `from_sites` to `to_sites`."""
    region = config.region
    within_set = within.sites
    if not within_set <= region.sites:
        raise ParameterError("crossing window not contained in the region")
    from_set = frozenset(from_sites)
    to_set = frozenset(to_sites)
    if not (from_set <= within_set and to_set <= within_set):
        raise ParameterError("crossing endpoints must lie inside the window")
    vals = config.values
    idx = region.site_index
    minus = {
        s for s in within_set if int(vals[idx[s]]) == minus_value
    }
    stack = [s for s in from_set if s in minus]
    seen = set(stack)
    while stack:
        s = stack.pop()
        if s in to_set:
            return True
        x, y = s
        for nb in (
            (x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1),
            (x + 1, y + 1), (x - 1, y - 1),
        ):
            if nb in minus and nb not in seen:
                seen.add(nb)
                stack.append(nb)
    return False


def delta_neighborhood(contour: Contour) -> frozenset[Site]:
    """Sites at distance 1/2 from the contour, plus the sites at
    distance 1/sqrt(2) from dual vertices where two non-linked bonds of
    the contour meet.  Diagnostic accessor."""
    sites: set[Site] = set()
    for b in contour.bonds:
        sites.update(b.separated_sites)
    # vertices visited by two bonds that are not a linked pair
    by_vertex: dict[Site, list[DualBond]] = {}
    for b in contour.bonds:
        for v in (b.v0, b.v1):
            by_vertex.setdefault(v, []).append(b)
    for v, bs in by_vertex.items():
        if len(bs) != 2:
            continue
        dirs = set()
        for b in bs:
            other = b.v1 if b.v0 == v else b.v0
            dirs.add((other[0] - v[0], other[1] - v[1]))
        linked = dirs in ({(0, 1), (1, 0)}, {(0, -1), (-1, 0)})
        if not linked:
            # the four primal sites around v are at distance 1/sqrt2
            for dx in (0, 1):
                for dy in (0, 1):
                    sites.add((v[0] + dx, v[1] + dy))
    return frozenset(sites)
