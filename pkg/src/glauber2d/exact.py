"""Brute-force oracle for tiny systems.

Enumerates all 2^n configurations of a region (n <= 16), computes the
Gibbs stationary vector, applies the heat-bath generator semigroup by
uniformization (with arbitrary active-site masks, which is what makes
censoring schedules exactly computable), and decides the order-theoretic
questions: stochastic domination via Strassen's theorem reduced to
max-flow, monotone likelihood ratios, spectral gaps, mixing times and
the free-boundary bottleneck bound.

State s is the bit-packed configuration (bit i set <-> site i is +1 in
the region's site order), so distribution vectors are indexed directly
by configurations.
"""

from __future__ import annotations

import math
from functools import lru_cache
from typing import Iterable, Optional, Sequence

import networkx as nx
import numpy as np
from networkx.algorithms.flow import preflow_push
from scipy.special import logsumexp
from scipy.stats import poisson

from .errors import CapacityError, ContractError, DomainMismatchError, ParameterError
from .gibbs import BoundaryCondition, SpinConfig, internal_pairs, neighbor_table
from .lattice import Region, Site

MAX_SITES = 16
MAX_DENSE = 12  # dense eigensolves and all-start sweeps
MAX_FLOW = 10  # Strassen max-flow check
POISSON_TAIL = 1e-12

def _as_dist(vec, size: int) -> np.ndarray:
    mu = np.asarray(vec, dtype=np.float64)
    if mu.shape != (size,):
        raise ParameterError(f"distribution must have length {size}")
    return mu


@lru_cache(maxsize=8)
def _subset_superset_pairs(n: int) -> tuple[np.ndarray, np.ndarray]:
    """All ordered pairs (a, b) of n-bit masks with a subset of b."""
    lows, highs = [], []
    full = (1 << n) - 1
    for s in range(1 << n):
        t = s
        while True:
            lows.append(s)
            highs.append(t)
            if t == full:
                break
            t = (t + 1) | s
    return np.asarray(lows, dtype=np.int64), np.asarray(highs, dtype=np.int64)


class ExactModel:
    """Full enumeration of the heat-bath chain on a tiny region."""

    def __init__(self, region: Region, bc: BoundaryCondition, beta: float):
        if bc.region != region:
            raise DomainMismatchError("boundary condition built for another region")
        if beta < 0:
            raise ParameterError(f"beta must be >= 0, got {beta}")
        n = region.n_sites
        if n > MAX_SITES:
            raise CapacityError(f"exact engine limited to {MAX_SITES} sites, got {n}")
        self.region = region
        self.bc = bc
        self.beta = float(beta)
        self.n = n
        self.size = 1 << n

        states = np.arange(self.size, dtype=np.int64)
        spins = (((states[:, None] >> np.arange(n)[None, :]) & 1) * 2 - 1).astype(
            np.int8
        )
        self.spins = spins

        a, b = internal_pairs(region)
        field = bc.field_array.astype(np.int64)
        sp64 = spins.astype(np.int64)
        self.energies = (
            -np.sum(sp64[:, a] * sp64[:, b], axis=1) - sp64 @ field
        ).astype(np.float64)

        logw = -self.beta * self.energies
        self.log_z = float(logsumexp(logw))
        self.pi = np.exp(logw - self.log_z)

        # local fields and flip rates: rate of the move s -> s^x
        nbr = neighbor_table(region)
        padded = np.concatenate([spins, np.zeros((self.size, 1), np.int8)], axis=1)
        local = padded[:, nbr].sum(axis=2).astype(np.float64) + field[None, :]
        with np.errstate(over="ignore"):
            self.flip_rates = 1.0 / (
                1.0 + np.exp(2.0 * self.beta * spins * local)
            )
        self.flip_index = states[:, None] ^ (np.int64(1) << np.arange(n))[None, :]

        self._gap: Optional[float] = None

    # -- small helpers -------------------------------------------------

    def delta(self, config) -> np.ndarray:
        """Point mass at a configuration (SpinConfig or bit index)."""
        bits = config.bits if isinstance(config, SpinConfig) else int(config)
        mu = np.zeros(self.size)
        mu[bits] = 1.0
        return mu

    @property
    def all_plus(self) -> int:
        return self.size - 1

    @property
    def all_minus(self) -> int:
        return 0

    def magnetization(self) -> np.ndarray:
        return self.spins.sum(axis=1, dtype=np.int64)

    def _active_indices(self, active: Optional[Iterable[Site]]) -> np.ndarray:
        if active is None:
            return np.arange(self.n)
        idx = sorted(self.region.site_index[s] for s in active)
        if len(set(idx)) != len(idx):
            raise ParameterError("duplicate sites in active set")
        return np.asarray(idx, dtype=np.int64)

    # -- semigroup by uniformization ------------------------------------

    def _embedded_step(self, mu: np.ndarray, active: np.ndarray) -> np.ndarray:
        acc = np.zeros_like(mu)
        for x in active:
            w = mu * self.flip_rates[:, x]
            acc -= w
            acc += w[..., self.flip_index[:, x]]
        return mu + acc / len(active)

    def evolve(
        self,
        mu,
        t: float,
        active: Optional[Iterable[Site]] = None,
        tail: float = POISSON_TAIL,
    ) -> np.ndarray:
        """mu_t = exp(t * L_active) mu by uniformization at total rate
        |active|; the Poisson series is truncated once the remaining
        tail mass drops below `tail`.  `mu` may be a matrix whose rows
        are distributions (all rows evolve together)."""
        mu = np.asarray(mu, dtype=np.float64)
        if t < 0:
            raise ParameterError(f"time must be >= 0, got {t}")
        act = self._active_indices(active)
        if t == 0 or len(act) == 0:
            return mu.copy()
        lam = len(act) * t
        kmax = int(poisson.ppf(1.0 - tail, lam)) + 1
        weights = poisson.pmf(np.arange(kmax + 1), lam)
        out = weights[0] * mu
        nu = mu
        for k in range(1, kmax + 1):
            nu = self._embedded_step(nu, act)
            if weights[k] > 0.0:
                out = out + weights[k] * nu
        return out

    def evolve_schedule(self, mu, schedule) -> np.ndarray:
        """Run a censoring schedule: per phase, apply the reset (if any)
        at the phase start, then evolve with the phase's active mask."""
        out = np.asarray(mu, dtype=np.float64).copy()
        for phase in schedule.phases:
            if phase.reset is not None:
                sites, value = phase.reset
                out = self.apply_reset(out, sites, value)
            out = self.evolve(out, phase.t1 - phase.t0, active=phase.active)
        return out

    def apply_reset(self, mu, sites: Iterable[Site], value: int) -> np.ndarray:
        """Pushforward of mu under the map that sets every spin in
        `sites` to `value`."""
        if value not in (-1, 1):
            raise ParameterError("reset value must be +/-1")
        mu = _as_dist(mu, self.size)
        mask = 0
        for s in sites:
            mask |= 1 << self.region.site_index[s]
        states = np.arange(self.size, dtype=np.int64)
        target = states | mask if value == 1 else states & ~mask
        return np.bincount(target, weights=mu, minlength=self.size)

    # -- distances -------------------------------------------------------

    def tv(self, mu, nu) -> float:
        mu = _as_dist(mu, self.size)
        nu = _as_dist(nu, self.size)
        return 0.5 * float(np.abs(mu - nu).sum())

    def tv_marginal(self, mu, nu, sites: Iterable[Site]) -> float:
        """Variation distance between the marginals on `sites`, obtained
        by summing out the complementary spins."""
        mu = _as_dist(mu, self.size)
        nu = _as_dist(nu, self.size)
        idx = sorted(self.region.site_index[s] for s in sites)
        key = np.zeros(self.size, dtype=np.int64)
        states = np.arange(self.size, dtype=np.int64)
        for out_bit, i in enumerate(idx):
            key |= ((states >> i) & 1) << out_bit
        diff = np.bincount(key, weights=mu - nu, minlength=1 << len(idx))
        return 0.5 * float(np.abs(diff).sum())

    def gamma(self, t: float) -> float:
        """max(TV(mu_t^+, pi), TV(mu_t^-, pi))."""
        mu_p = self.evolve(self.delta(self.all_plus), t)
        mu_m = self.evolve(self.delta(self.all_minus), t)
        return max(self.tv(mu_p, self.pi), self.tv(mu_m, self.pi))

    def sup_tv(self, t: float) -> float:
        """sup over all starting configurations of TV(mu_t^sigma, pi)."""
        if self.n > MAX_DENSE:
            raise CapacityError(f"all-start sweep limited to {MAX_DENSE} sites")
        mt = self.evolve(np.eye(self.size), t)
        return 0.5 * float(np.abs(mt - self.pi[None, :]).sum(axis=1).max())

    # -- spectral quantities ----------------------------------------------

    def _symmetrized(self) -> np.ndarray:
        if self.n > MAX_DENSE:
            raise CapacityError(f"dense eigensolve limited to {MAX_DENSE} sites")
        size = self.size
        s_mat = np.zeros((size, size))
        states = np.arange(size)
        for x in range(self.n):
            f = self.flip_index[:, x]
            s_mat[states, f] = np.sqrt(self.flip_rates[:, x] * self.flip_rates[f, x])
        s_mat[states, states] = -self.flip_rates.sum(axis=1)
        return s_mat

    def spectral_gap(self) -> float:
        if self._gap is None:
            eigs = np.linalg.eigvalsh(self._symmetrized())
            self._gap = float(-eigs[-2])
        return self._gap

    @property
    def relax_time(self) -> float:
        return 1.0 / self.spectral_gap()

    @property
    def pi_star(self) -> float:
        return float(self.pi.min())

    def mixing_time(self, eps: float = 1.0 / (2.0 * math.e), rtol: float = 1e-6) -> float:
        """inf{t : sup_sigma TV(mu_t^sigma, pi) <= eps}, the sup taken
        exactly over all 2^n starts, located by bisection."""
        if self.n > MAX_DENSE:
            raise CapacityError(f"mixing_time limited to {MAX_DENSE} sites")
        if not 0 < eps < 1:
            raise ParameterError(f"eps must lie in (0, 1), got {eps}")
        eye = np.eye(self.size)

        def dist(t: float) -> float:
            mt = self.evolve(eye, t)
            return 0.5 * float(np.abs(mt - self.pi[None, :]).sum(axis=1).max())

        if dist(0.0) <= eps:
            return 0.0
        lo, hi = 0.0, self.relax_time
        while dist(hi) > eps:
            lo = hi
            hi *= 2.0
        while hi - lo > rtol * hi:
            mid = 0.5 * (lo + hi)
            if dist(mid) <= eps:
                hi = mid
            else:
                lo = mid
        return hi

    # -- order-theoretic checks --------------------------------------------

    def dominates(self, mu, nu, tol: float = 1e-12) -> bool:
        """Strassen test of nu <= mu (stochastic domination): a monotone
        coupling exists iff a flow of value 1 exists on the bipartite
        graph with an edge sigma -> eta whenever sigma <= eta.  The flow
        is solved in floating point; `tol` absorbs its roundoff."""
        if self.n > MAX_FLOW:
            raise CapacityError(f"domination check limited to {MAX_FLOW} sites")
        mu = _as_dist(mu, self.size)
        nu = _as_dist(nu, self.size)
        lows, highs = _subset_superset_pairs(self.n)
        keep = nu[lows] > 0.0
        graph = nx.DiGraph()
        source, sink = "s", "t"
        for s in np.nonzero(nu > 0.0)[0]:
            graph.add_edge(source, ("lo", int(s)), capacity=float(nu[s]))
        for s in np.nonzero(mu > 0.0)[0]:
            graph.add_edge(("hi", int(s)), sink, capacity=float(mu[s]))
        for a, b in zip(lows[keep], highs[keep]):
            graph.add_edge(("lo", int(a)), ("hi", int(b)))  # uncapped
        value = nx.maximum_flow_value(graph, source, sink, flow_func=preflow_push)
        return value >= float(nu.sum()) - tol

    def mlr_increasing(self, mu, tol: float = 1e-10) -> bool:
        """True when mu/pi is increasing, checked on all covering pairs
        (sufficient for the product order).  The tolerance absorbs the
        uniformization truncation error carried by mu."""
        mu = _as_dist(mu, self.size)
        states = np.arange(self.size, dtype=np.int64)
        for x in range(self.n):
            bit = np.int64(1) << x
            lo = states[(states & bit) == 0]
            hi = lo | bit
            lhs = mu[hi] * self.pi[lo]
            rhs = mu[lo] * self.pi[hi]
            if np.any(lhs - rhs < -tol * (self.pi[lo] + self.pi[hi])):
                return False
        return True

    def mlr_decreasing(self, mu, tol: float = 1e-10) -> bool:
        mu = _as_dist(mu, self.size)
        states = np.arange(self.size, dtype=np.int64)
        for x in range(self.n):
            bit = np.int64(1) << x
            lo = states[(states & bit) == 0]
            hi = lo | bit
            lhs = mu[lo] * self.pi[hi]
            rhs = mu[hi] * self.pi[lo]
            if np.any(lhs - rhs < -tol * (self.pi[lo] + self.pi[hi])):
                return False
        return True

    def expectation(self, f) -> float:
        return float(np.dot(self.pi, np.asarray(f, dtype=np.float64)))

    # -- bottleneck -----------------------------------------------------------

    def bottleneck_check(self) -> tuple[float, float]:
        """Free-boundary bottleneck bound and the exact relaxation time.

        Returns (L^-2 / pi(floor(m/2) = 0), T_relax); the first is a
        lower bound for the second."""
        if not self.bc.is_free:
            raise ContractError("bottleneck bound requires free boundary conditions")
        if not (self.region.is_rectangle and self.region.width == self.region.height):
            raise ContractError("bottleneck bound requires a square region")
        m = self.magnetization()
        p0 = float(self.pi[(m == 0) | (m == 1)].sum())
        side = self.region.width
        bound = 1.0 / (side * side * p0)
        return bound, self.relax_time

    # -- stationary autocorrelation ---------------------------------------------

    def autocorrelation(self, site: Site, ts: Sequence[float]) -> np.ndarray:
        """Stationary time autocorrelation Cov_pi(sigma_x(0), sigma_x(t))
        of the spin at `site`, from the spectral decomposition."""
        if self.n > MAX_DENSE:
            raise CapacityError(f"spectral autocorrelation limited to {MAX_DENSE} sites")
        eigvals, eigvecs = np.linalg.eigh(self._symmetrized())
        f = self.spins[:, self.region.site_index[site]].astype(np.float64)
        coeffs = eigvecs.T @ (np.sqrt(self.pi) * f)
        live = eigvals < -1e-12
        ts = np.asarray(ts, dtype=np.float64)
        return (coeffs[live] ** 2 @ np.exp(eigvals[live][:, None] * ts[None, :]))

    # -- diagnostics --------------------------------------------------------

    def reversibility_violation(self) -> float:
        """max |pi(s) r(s -> s^x) - pi(s^x) r(s^x -> s)| over all flips."""
        worst = 0.0
        for x in range(self.n):
            f = self.flip_index[:, x]
            worst = max(
                worst,
                float(
                    np.abs(
                        self.pi * self.flip_rates[:, x]
                        - self.pi[f] * self.flip_rates[f, x]
                    ).max()
                ),
            )
        return worst


def build(region: Region, bc: BoundaryCondition, beta: float) -> ExactModel:
    return ExactModel(region, bc, beta)
