"""Equilibrium model: Hamiltonian, heat-bath conditionals, partial order,
boundary conditions and boundary-condition distributions.

Spin configurations are +/-1 assignments over a region, canonically
bit-packed (bit i set means site i is +1, in the region's row-major site
order).  Boundary conditions assign -1, 0 (free) or +1 to every site of
the unit-distance boundary; free spins contribute nothing to the energy.

The boundary-condition distributions include the domination-class
samplers: deterministic values, homogeneous per-side values, per-side
plus/minus-phase samples from an equilibrated buffered box, and the
pinned variant that overwrites a fixed segment after sampling.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Callable, Iterable, Mapping, Union

import numpy as np

from .errors import CapacityError, DomainMismatchError, ParameterError
from .lattice import Region, Site, neighbors

# ---------------------------------------------------------------------------
# Parameters
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ModelParams:
    """Inverse temperature; beta = 0 is allowed (independent spins)."""

    beta: float

    def __post_init__(self) -> None:
        if not self.beta >= 0.0:
            raise ParameterError(f"beta must be >= 0, got {self.beta}")


# ---------------------------------------------------------------------------
# Cached geometry tables
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def internal_pairs(region: Region) -> tuple[np.ndarray, np.ndarray]:
    """Index arrays (i, j) of the unordered nearest-neighbor pairs inside
    the region, in the region's site order."""
    idx = region.site_index
    a, b = [], []
    for s, i in idx.items():
        for nb in ((s[0] + 1, s[1]), (s[0], s[1] + 1)):  # count each pair once
            j = idx.get(nb)
            if j is not None:
                a.append(i)
                b.append(j)
    return np.asarray(a, dtype=np.int64), np.asarray(b, dtype=np.int64)


@lru_cache(maxsize=None)
def neighbor_table(region: Region) -> np.ndarray:
    """(n, 4) array of internal neighbor indices, padded with n for
    neighbors outside the region (a ghost index holding spin 0)."""
    n = region.n_sites
    idx = region.site_index
    table = np.full((n, 4), n, dtype=np.int64)
    for s, i in idx.items():
        for k, nb in enumerate(neighbors(s)):
            j = idx.get(nb)
            if j is not None:
                table[i, k] = j
    return table


# ---------------------------------------------------------------------------
# Spin configurations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SpinConfig:
    """A +/-1 assignment on a region, stored bit-packed (bit set <-> +1)."""

    region: Region
    bits: int

    def __post_init__(self) -> None:
        if not 0 <= self.bits < (1 << self.region.n_sites):
            raise ParameterError("bits outside the region's state space")

    @staticmethod
    def constant(region: Region, value: int) -> "SpinConfig":
        if value == 1:
            return SpinConfig(region, (1 << region.n_sites) - 1)
        if value == -1:
            return SpinConfig(region, 0)
        raise ParameterError(f"spin value must be +/-1, got {value}")

    @staticmethod
    def from_values(region: Region, values: Iterable[int]) -> "SpinConfig":
        bits = 0
        for i, v in enumerate(values):
            if v == 1:
                bits |= 1 << i
            elif v != -1:
                raise ParameterError(f"spin value must be +/-1, got {v}")
        return SpinConfig(region, bits)

    @staticmethod
    def from_mapping(region: Region, values: Mapping[Site, int]) -> "SpinConfig":
        return SpinConfig.from_values(
            region, [values[s] for s in region.site_list]
        )

    @cached_property
    def values(self) -> np.ndarray:
        n = self.region.n_sites
        bits = np.asarray(
            [(self.bits >> i) & 1 for i in range(n)], dtype=np.int8
        )
        return (2 * bits - 1).astype(np.int8)

    def spin_at(self, site: Site) -> int:
        return int(self.values[self.region.site_index[site]])

    def flipped(self, site: Site) -> "SpinConfig":
        return SpinConfig(self.region, self.bits ^ (1 << self.region.site_index[site]))

    def with_set(self, sites: Iterable[Site], value: int) -> "SpinConfig":
        mask = 0
        for s in sites:
            mask |= 1 << self.region.site_index[s]
        bits = self.bits | mask if value == 1 else self.bits & ~mask
        return SpinConfig(self.region, bits)


def leq(a: SpinConfig, b: SpinConfig) -> bool:
    """Partial order: a <= b iff a_x <= b_x at every site (same region)."""
    if a.region != b.region:
        raise DomainMismatchError("configurations live on different regions")
    return (a.bits & ~b.bits) == 0


# ---------------------------------------------------------------------------
# Boundary conditions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BoundaryCondition:
    """Values in {-1, 0, +1} on the unit-distance boundary of a region.

    0 encodes a free spin (no energy contribution)."""

    region: Region
    boundary_values: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.boundary_values) != len(self.region.boundary_list):
            raise DomainMismatchError("boundary values do not cover the boundary")
        if any(v not in (-1, 0, 1) for v in self.boundary_values):
            raise ParameterError("boundary values must be -1, 0 or +1")

    @staticmethod
    def uniform(region: Region, value: int) -> "BoundaryCondition":
        return BoundaryCondition(region, (value,) * len(region.boundary_list))

    @staticmethod
    def free(region: Region) -> "BoundaryCondition":
        return BoundaryCondition.uniform(region, 0)

    @staticmethod
    def from_mapping(
        region: Region, values: Mapping[Site, int], default: int = 0
    ) -> "BoundaryCondition":
        return BoundaryCondition(
            region,
            tuple(int(values.get(s, default)) for s in region.boundary_list),
        )

    @staticmethod
    def per_side(
        region: Region, north: int, east: int, south: int, west: int
    ) -> "BoundaryCondition":
        sides = region.sides()
        values: dict[Site, int] = {}
        for name, v in zip("NESW", (north, east, south, west)):
            for s in sides[name]:
                values[s] = v
        return BoundaryCondition.from_mapping(region, values)

    @cached_property
    def array(self) -> np.ndarray:
        return np.asarray(self.boundary_values, dtype=np.int8)

    def value_at(self, site: Site) -> int:
        return self.boundary_values[self.region.boundary_index[site]]

    @cached_property
    def field_array(self) -> np.ndarray:
        """Per-region-site sum of adjacent boundary values, site order."""
        out = np.zeros(self.region.n_sites, dtype=np.int8)
        bidx = self.region.boundary_index
        for s, i in self.region.site_index.items():
            acc = 0
            for nb in neighbors(s):
                j = bidx.get(nb)
                if j is not None:
                    acc += self.boundary_values[j]
            out[i] = acc
        return out

    @property
    def is_free(self) -> bool:
        return all(v == 0 for v in self.boundary_values)

    def overwrite(self, sites: Iterable[Site], value: int) -> "BoundaryCondition":
        vals = list(self.boundary_values)
        for s in sites:
            vals[self.region.boundary_index[s]] = value
        return BoundaryCondition(self.region, tuple(vals))

    def flipped(self) -> "BoundaryCondition":
        return BoundaryCondition(self.region, tuple(-v for v in self.boundary_values))

    def __le__(self, other: "BoundaryCondition") -> bool:
        if self.region != other.region:
            raise DomainMismatchError("boundary conditions on different regions")
        return all(a <= b for a, b in zip(self.boundary_values, other.boundary_values))


_SIDE_TOKEN = {"+": 1, "-": -1, "f": 0, "0": 0}
_TOKEN_SIDE = {1: "+", -1: "-", 0: "f"}


def bc_to_text(bc: BoundaryCondition) -> str:
    """'N:- E:- S:+ W:-' when each side is homogeneous, else per-site list."""
    region = bc.region
    if region.is_rectangle:
        sides = region.sides()
        vals = {}
        for name in "NESW":
            side_vals = {bc.value_at(s) for s in sides[name]}
            if len(side_vals) != 1:
                break
            vals[name] = side_vals.pop()
        else:
            return " ".join(f"{name}:{_TOKEN_SIDE[vals[name]]}" for name in "NESW")
    body = " ".join(
        f"{x},{y}:{_TOKEN_SIDE[v]}"
        for (x, y), v in zip(region.boundary_list, bc.boundary_values)
    )
    return f"sites {body}"


def bc_from_text(region: Region, text: str) -> BoundaryCondition:
    text = text.strip()
    if text.startswith("sites"):
        values: dict[Site, int] = {}
        for tok in text.split()[1:]:
            coords, v = tok.rsplit(":", 1)
            x, y = coords.split(",")
            values[(int(x), int(y))] = _SIDE_TOKEN[v]
        return BoundaryCondition.from_mapping(region, values)
    if text in _SIDE_TOKEN:  # homogeneous shorthand: '+', '-', 'f'
        return BoundaryCondition.uniform(region, _SIDE_TOKEN[text])
    sides = {"N": 0, "E": 0, "S": 0, "W": 0}
    for tok in text.split():
        name, v = tok.split(":")
        if name not in sides:
            raise ParameterError(f"unknown side {name!r} in {text!r}")
        sides[name] = _SIDE_TOKEN[v]
    return BoundaryCondition.per_side(
        region, sides["N"], sides["E"], sides["S"], sides["W"]
    )


# ---------------------------------------------------------------------------
# Energy and heat-bath rule
# ---------------------------------------------------------------------------


def energy(config: SpinConfig, bc: BoundaryCondition) -> float:
    """H(sigma) = - sum over internal nn pairs sigma_x sigma_y
    - sum over cross pairs sigma_x tau_y; each unordered internal pair
    counts once, free boundary spins contribute nothing."""
    if config.region != bc.region:
        raise DomainMismatchError("configuration and boundary condition regions differ")
    a, b = internal_pairs(config.region)
    v = config.values.astype(np.int64)
    internal = int(np.sum(v[a] * v[b]))
    cross = int(np.sum(v * bc.field_array.astype(np.int64)))
    return float(-internal - cross)


def heatbath_plus_prob(neighbor_sum, beta: float):
    """P(new spin = +1) given the sum s of the four neighboring values:
    exp(beta*s) / (exp(beta*s) + exp(-beta*s)).  Accepts scalars or arrays."""
    s = np.asarray(neighbor_sum, dtype=np.float64)
    out = 1.0 / (1.0 + np.exp(-2.0 * beta * s))
    if out.ndim == 0:
        return float(out)
    return out


def unnormalized_weight(config: SpinConfig, bc: BoundaryCondition, beta: float) -> float:
    return float(np.exp(-beta * energy(config, bc)))


def log_weight(config: SpinConfig, bc: BoundaryCondition, beta: float) -> float:
    return -beta * energy(config, bc)


# ---------------------------------------------------------------------------
# Increasing events (tiny regions only)
# ---------------------------------------------------------------------------


def is_increasing_event(
    indicator: Union[np.ndarray, Callable[[SpinConfig], bool]],
    region: Region,
) -> bool:
    """Exact monotonicity check of an event over all covering pairs
    (single-site flips).  Guarded to |region| <= 20."""
    n = region.n_sites
    if n > 20:
        raise CapacityError(f"is_increasing_event limited to 20 sites, got {n}")
    size = 1 << n
    if callable(indicator):
        ind = np.asarray(
            [bool(indicator(SpinConfig(region, s))) for s in range(size)],
            dtype=bool,
        )
    else:
        ind = np.asarray(indicator, dtype=bool)
        if ind.shape != (size,):
            raise ParameterError("indicator must cover all configurations")
    states = np.arange(size, dtype=np.int64)
    for i in range(n):
        bit = 1 << i
        lower = states[(states & bit) == 0]
        if np.any(ind[lower] & ~ind[lower | bit]):
            return False
    return True


# ---------------------------------------------------------------------------
# Boundary-condition distributions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AllPlus:
    pass


@dataclass(frozen=True)
class AllMinus:
    pass


@dataclass(frozen=True)
class PlusPhaseSample:
    """Restriction to one side of an equilibrated box enlarged by
    `buffer` in all directions, all-plus outer boundary.  Approximates
    the plus-phase marginal; quality controlled by buffer and sweeps."""

    buffer: int
    sweeps: int = 128

    def __post_init__(self) -> None:
        if self.buffer < 1:
            raise ParameterError(f"buffer must be >= 1, got {self.buffer}")
        if self.sweeps < 1:
            raise ParameterError(f"sweeps must be >= 1, got {self.sweeps}")


@dataclass(frozen=True)
class MinusPhaseSample:
    buffer: int
    sweeps: int = 128

    def __post_init__(self) -> None:
        if self.buffer < 1:
            raise ParameterError(f"buffer must be >= 1, got {self.buffer}")
        if self.sweeps < 1:
            raise ParameterError(f"sweeps must be >= 1, got {self.sweeps}")


SideSpec = Union[AllPlus, AllMinus, PlusPhaseSample, MinusPhaseSample]


@dataclass(frozen=True)
class Deterministic:
    bc: BoundaryCondition


@dataclass(frozen=True)
class PerSide:
    north: SideSpec
    east: SideSpec
    south: SideSpec
    west: SideSpec
    beta: float = 1.0  # inverse temperature used by phase samplers

    @property
    def is_exact(self) -> bool:
        return all(
            isinstance(s, (AllPlus, AllMinus))
            for s in (self.north, self.east, self.south, self.west)
        )


@dataclass(frozen=True)
class PinnedDelta:
    """Sample from `base`, then overwrite the segment with `value`."""

    base: "BcDistribution"
    delta: frozenset[Site]
    value: int

    def __post_init__(self) -> None:
        if self.value not in (-1, 1):
            raise ParameterError("pinned value must be +/-1")


BcDistribution = Union[Deterministic, PerSide, PinnedDelta]


def dist_is_exact(dist: BcDistribution) -> bool:
    """True when the distribution's membership in the domination class is
    exact (no phase-sampled sides)."""
    if isinstance(dist, Deterministic):
        return True
    if isinstance(dist, PerSide):
        return dist.is_exact
    return dist_is_exact(dist.base)


def _checkerboard_equilibrate(
    width: int, height: int, beta: float, sign: int, sweeps: int, rng: np.random.Generator
) -> np.ndarray:
    """Heat-bath checkerboard sweeps on a width x height grid with
    homogeneous `sign` boundary, started from the homogeneous `sign`
    state.  Returns the final +/-1 grid (height, width)."""
    grid = np.full((height + 2, width + 2), sign, dtype=np.int8)
    yy, xx = np.meshgrid(np.arange(height), np.arange(width), indexing="ij")
    parity = ((yy + xx) % 2).astype(bool)
    for _ in range(sweeps):
        for color in (False, True):
            s = (
                grid[:-2, 1:-1].astype(np.float64)
                + grid[2:, 1:-1]
                + grid[1:-1, :-2]
                + grid[1:-1, 2:]
            )
            p = 1.0 / (1.0 + np.exp(-2.0 * beta * s))
            u = rng.random((height, width))
            new = np.where(u < p, 1, -1).astype(np.int8)
            mask = parity == color
            inner = grid[1:-1, 1:-1]
            inner[mask] = new[mask]
    return grid[1:-1, 1:-1]


def _phase_sample_values(
    region: Region, spec: SideSpec, beta: float, rng: np.random.Generator
) -> dict[Site, int]:
    """Equilibrated buffered-box sample, returned as site -> spin over
    the region's boundary."""
    sign = 1 if isinstance(spec, PlusPhaseSample) else -1
    buf = spec.buffer
    x0, y0 = region.x0 - buf, region.y0 - buf
    x1, y1 = region.x1 + buf, region.y1 + buf
    grid = _checkerboard_equilibrate(
        x1 - x0 + 1, y1 - y0 + 1, beta, sign, spec.sweeps, rng
    )
    out = {}
    for (x, y) in region.boundary_list:
        out[(x, y)] = int(grid[y - y0, x - x0])
    return out


def sample_bc(
    dist: BcDistribution, region: Region, rng_seed: int
) -> BoundaryCondition:
    """Draw a boundary condition; a deterministic function of the seed."""
    if isinstance(dist, Deterministic):
        if dist.bc.region != region:
            raise DomainMismatchError("deterministic b.c. built for another region")
        return dist.bc
    if isinstance(dist, PerSide):
        sides = region.sides()
        values: dict[Site, int] = {}
        specs = {"N": dist.north, "E": dist.east, "S": dist.south, "W": dist.west}
        for k, name in enumerate("NESW"):
            spec = specs[name]
            if isinstance(spec, AllPlus):
                for s in sides[name]:
                    values[s] = 1
            elif isinstance(spec, AllMinus):
                for s in sides[name]:
                    values[s] = -1
            else:
                rng = np.random.default_rng(
                    np.random.SeedSequence(rng_seed).spawn(4)[k]
                )
                sampled = _phase_sample_values(region, spec, dist.beta, rng)
                for s in sides[name]:
                    values[s] = sampled[s]
        return BoundaryCondition.from_mapping(region, values)
    if isinstance(dist, PinnedDelta):
        base = sample_bc(dist.base, region, rng_seed)
        missing = [s for s in dist.delta if s not in region.boundary_index]
        if missing:
            raise DomainMismatchError(f"pinned sites not on the boundary: {missing}")
        return base.overwrite(dist.delta, dist.value)
    raise ParameterError(f"unknown boundary distribution {dist!r}")
