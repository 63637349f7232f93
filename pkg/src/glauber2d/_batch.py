"""Vectorized replica engine.

Runs many independent replicas of one or two heat-bath chains as
synchronous numpy steps: conditional on the number of Poisson events in
a time window, the (site, uniform) pairs are iid, so replicas advance
in lockstep with per-replica event counts.  Chain pairs within one
replica share their (site, u) draws, which realizes the grand coupling.

Everything here is deterministic given the seed; the scalar engine in
`dynamics` is the reference implementation for single trajectories,
this one trades the per-event time bookkeeping for throughput.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .errors import ParameterError
from .gibbs import neighbor_table
from .lattice import Region

_CHUNK = 2048


def _tables(region: Region, beta: float):
    n = region.n_sites
    nbr = neighbor_table(region)  # padded with n -> ghost slot holding 0
    ptab = 1.0 / (1.0 + np.exp(-2.0 * beta * np.arange(-4.0, 5.0)))
    return n, nbr, ptab


def _as_field_matrix(bfield, replicas: int, n: int) -> np.ndarray:
    f = np.asarray(bfield, dtype=np.int64)
    if f.shape == (n,):
        f = np.broadcast_to(f, (replicas, n))
    if f.shape != (replicas, n):
        raise ParameterError(f"boundary field must have shape ({n},) or ({replicas},{n})")
    return f


def _as_spin_matrix(init, replicas: int, n: int) -> np.ndarray:
    if isinstance(init, (int, np.integer)):
        if init not in (-1, 1):
            raise ParameterError("initial spin must be +/-1")
        return np.full((replicas, n), init, dtype=np.int8)
    arr = np.asarray(init, dtype=np.int8)
    if arr.shape == (n,):
        arr = np.broadcast_to(arr, (replicas, n))
    if arr.shape != (replicas, n):
        raise ParameterError("bad initial spin array shape")
    return arr.copy()


def _advance_segment(spins_list, fields_list, counts, n, nbr, ptab, rng):
    """Advance every replica by its own number of events; the chains in
    spins_list share the (site, u) draws within each replica."""
    replicas = counts.shape[0]
    rows = np.arange(replicas)
    kmax = int(counts.max()) if replicas else 0
    ghost = [np.concatenate([s, np.zeros((replicas, 1), np.int8)], axis=1) for s in spins_list]
    for k in range(kmax):
        alive = counts > k
        sites = rng.integers(0, n, replicas)
        us = rng.random(replicas)
        nb = nbr[sites]  # (R, 4)
        for g, f in zip(ghost, fields_list):
            s_loc = g[rows[:, None], nb].sum(axis=1, dtype=np.int64) + f[rows, sites]
            new = np.where(us < ptab[s_loc + 4], 1, -1).astype(np.int8)
            upd = alive
            g[rows[upd], sites[upd]] = new[upd]
    return [g[:, :-1] for g in ghost]


def single_states(
    region: Region,
    beta: float,
    bfield,
    init,
    tap_times: Sequence[float],
    replicas: int,
    seed: int,
) -> list[np.ndarray]:
    """Replica states of one chain at each tap time; (R, n) int8 per tap."""
    n, nbr, ptab = _tables(region, beta)
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    spins = _as_spin_matrix(init, replicas, n)
    field = _as_field_matrix(bfield, replicas, n)
    out = []
    prev = 0.0
    for t in tap_times:
        if t < prev:
            raise ParameterError("tap times must be nondecreasing")
        counts = rng.poisson(n * (t - prev), replicas)
        (spins,) = _advance_segment([spins], [field], counts, n, nbr, ptab, rng)
        out.append(spins.copy())
        prev = t
    return out


def pair_states(
    region: Region,
    beta: float,
    bfield_hi,
    bfield_lo,
    init_hi,
    init_lo,
    tap_times: Sequence[float],
    replicas: int,
    seed: int,
) -> list[tuple[np.ndarray, np.ndarray]]:
    """Grand-coupled pair states at each tap time."""
    n, nbr, ptab = _tables(region, beta)
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    hi = _as_spin_matrix(init_hi, replicas, n)
    lo = _as_spin_matrix(init_lo, replicas, n)
    f_hi = _as_field_matrix(bfield_hi, replicas, n)
    f_lo = _as_field_matrix(bfield_lo, replicas, n)
    out = []
    prev = 0.0
    for t in tap_times:
        if t < prev:
            raise ParameterError("tap times must be nondecreasing")
        counts = rng.poisson(n * (t - prev), replicas)
        hi, lo = _advance_segment([hi, lo], [f_hi, f_lo], counts, n, nbr, ptab, rng)
        out.append((hi.copy(), lo.copy()))
        prev = t
    return out


def coupling_times(
    region: Region,
    beta: float,
    bfield,
    t_cap: float,
    replicas: int,
    seed: int,
    chunk: int = _CHUNK,
) -> np.ndarray:
    """Per-replica coupling times of the plus/minus grand coupling under
    a shared boundary condition; +inf marks replicas not coupled by
    t_cap."""
    n, nbr, ptab = _tables(region, beta)
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    field = _as_field_matrix(bfield, replicas, n).copy()
    times = np.full(replicas, np.inf)
    # live-row state; rows are dropped as they couple or pass the cap
    orig = np.arange(replicas)
    ghost_hi = np.concatenate(
        [np.ones((replicas, n), np.int8), np.zeros((replicas, 1), np.int8)], axis=1
    )
    ghost_lo = np.concatenate(
        [np.full((replicas, n), -1, np.int8), np.zeros((replicas, 1), np.int8)], axis=1
    )
    ndiff = np.full(replicas, n, dtype=np.int64)
    t_cur = np.zeros(replicas)
    while len(orig):
        r = len(orig)
        rows = np.arange(r)
        gaps = rng.exponential(1.0 / n, (r, chunk))
        ev_times = t_cur[:, None] + np.cumsum(gaps, axis=1)
        sites = rng.integers(0, n, (r, chunk))
        us = rng.random((r, chunk))
        finished = np.zeros(r, dtype=bool)
        for k in range(chunk):
            act = ~finished & (ev_times[:, k] <= t_cap)
            if not act.any():
                continue
            st = sites[:, k]
            nb = nbr[st]
            u = us[:, k]
            s_hi = ghost_hi[rows[:, None], nb].sum(axis=1, dtype=np.int64) + field[rows, st]
            s_lo = ghost_lo[rows[:, None], nb].sum(axis=1, dtype=np.int64) + field[rows, st]
            new_hi = np.where(u < ptab[s_hi + 4], 1, -1).astype(np.int8)
            new_lo = np.where(u < ptab[s_lo + 4], 1, -1).astype(np.int8)
            was = ghost_hi[rows, st] != ghost_lo[rows, st]
            ghost_hi[rows[act], st[act]] = new_hi[act]
            ghost_lo[rows[act], st[act]] = new_lo[act]
            now = ghost_hi[rows, st] != ghost_lo[rows, st]
            ndiff[act] += now[act].astype(np.int64) - was[act].astype(np.int64)
            newly = act & (ndiff == 0)
            times[orig[newly]] = ev_times[newly, k]
            finished |= newly
        t_cur = ev_times[:, -1]
        finished |= t_cur > t_cap
        if finished.any():
            keep = ~finished
            orig = orig[keep]
            ghost_hi = ghost_hi[keep]
            ghost_lo = ghost_lo[keep]
            ndiff = ndiff[keep]
            t_cur = t_cur[keep]
            field = field[keep]
    return times
