"""Continuous-time heat-bath simulator and the monotone grand coupling.

All chains in an ensemble consume one shared stream of Poisson events
(time, site, uniform), the randomness source of the grand coupling: a
single global clock of rate |Lambda| with a uniform site choice, which
is equivalent to independent rate-1 clocks per site.  A censored chain
skips events at inactive sites instead of thinning the stream, so
chains with different schedules still share every event.

The update is the monotone threshold rule sigma_x <- +1 iff
u < p_plus(local field): applied to ordered configurations under
ordered boundary conditions it preserves the order, which is the
coupling property everything downstream relies on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import DomainMismatchError, ParameterError, ScheduleError
from .gibbs import BoundaryCondition, SpinConfig, neighbor_table
from .lattice import Region, Site

# ---------------------------------------------------------------------------
# Censoring schedules (pure data; interpreted here and by the exact engine)
# ---------------------------------------------------------------------------


def _site_set_token(sites: frozenset[Site]) -> str:
    """Compact single-token form: 'rect:x0:y0:x1:y1' when rectangular,
    else 'sites:x,y;x,y;...'."""
    region = Region.from_sites(sites)
    if region.is_rectangle:
        return f"rect:{region.x0}:{region.y0}:{region.x1}:{region.y1}"
    return "sites:" + ";".join(f"{x},{y}" for x, y in region.site_list)


def _site_set_from_token(token: str) -> frozenset[Site]:
    kind, _, body = token.partition(":")
    if kind == "rect":
        x0, y0, x1, y1 = (int(v) for v in body.split(":"))
        return frozenset(Region.rect(x0, y0, x1, y1).sites)
    if kind == "sites":
        out = set()
        for part in body.split(";"):
            x, y = part.split(",")
            out.add((int(x), int(y)))
        return frozenset(out)
    raise ScheduleError(f"unknown site-set token {token!r}")


@dataclass(frozen=True)
class Phase:
    """One schedule phase: keep updates in `active` during [t0, t1);
    `reset` = (sites, value) is applied instantaneously at t0."""

    t0: float
    t1: float
    active: frozenset[Site]
    reset: Optional[tuple[frozenset[Site], int]] = None

    def __post_init__(self) -> None:
        if not self.t1 > self.t0:
            raise ScheduleError(f"phase must have positive duration: {self.t0}..{self.t1}")
        if not self.active:
            raise ScheduleError("phase with empty active set")
        if self.reset is not None and self.reset[1] not in (-1, 1):
            raise ScheduleError("reset value must be +/-1")


@dataclass(frozen=True)
class CensorSchedule:
    phases: tuple[Phase, ...]

    def __post_init__(self) -> None:
        if not self.phases:
            raise ScheduleError("schedule needs at least one phase")
        if self.phases[0].t0 != 0.0:
            raise ScheduleError("schedule must start at time 0")
        for a, b in zip(self.phases, self.phases[1:]):
            if not math.isclose(a.t1, b.t0, rel_tol=0.0, abs_tol=1e-12):
                raise ScheduleError(f"gap between phases at t={a.t1} vs {b.t0}")

    @property
    def total_time(self) -> float:
        return self.phases[-1].t1

    @staticmethod
    def trivial(region: Region, t_end: float) -> "CensorSchedule":
        return CensorSchedule((Phase(0.0, t_end, frozenset(region.sites)),))

    def validate_for(self, region: Region, t_end: float) -> None:
        if self.total_time < t_end - 1e-12:
            raise ScheduleError(
                f"schedule covers [0, {self.total_time}], run needs [0, {t_end}]"
            )
        for ph in self.phases:
            if not ph.active <= region.sites:
                raise ScheduleError("active set not contained in the region")
            if ph.reset is not None and not ph.reset[0] <= region.sites:
                raise ScheduleError("reset set not contained in the region")

    def to_text(self) -> str:
        lines = []
        for ph in self.phases:
            reset = "none"
            if ph.reset is not None:
                sites, value = ph.reset
                reset = f"{_site_set_token(sites)}:{value:+d}"
            lines.append(
                f"{ph.t0!r} {ph.t1!r} active={_site_set_token(ph.active)} reset={reset}"
            )
        return "\n".join(lines) + "\n"

    @staticmethod
    def from_text(text: str) -> "CensorSchedule":
        phases = []
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                t0_s, t1_s, active_s, reset_s = line.split()
                active = _site_set_from_token(active_s.removeprefix("active="))
                reset_body = reset_s.removeprefix("reset=")
                if reset_body == "none":
                    reset = None
                else:
                    token, value = reset_body.rsplit(":", 1)
                    reset = (_site_set_from_token(token), int(value))
            except (ValueError, KeyError) as exc:
                raise ScheduleError(f"bad schedule line {line!r}") from exc
            phases.append(Phase(float(t0_s), float(t1_s), active, reset))
        return CensorSchedule(tuple(phases))


# ---------------------------------------------------------------------------
# Event streams
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EventStream:
    """Deterministic (seed-keyed) stream of global Poisson events
    (time, site index, uniform), total rate n_sites."""

    seed: int
    n_sites: int
    block: int = 4096

    def events_until(self, t_end: float):
        """Yield (time, site, u) with strictly increasing time <= t_end."""
        rng = np.random.default_rng(self.seed)
        t = 0.0
        while True:
            gaps = rng.exponential(1.0 / self.n_sites, self.block)
            sites = rng.integers(0, self.n_sites, self.block)
            us = rng.random(self.block)
            for k in range(self.block):
                t += gaps[k]
                if t > t_end:
                    return
                yield t, int(sites[k]), float(us[k])


# ---------------------------------------------------------------------------
# Chains and the shared-stream runner
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Chain:
    initial: SpinConfig
    bc: BoundaryCondition
    schedule: Optional[CensorSchedule] = None


@dataclass(frozen=True)
class CoupledEnsemble:
    region: Region
    beta: float
    seed: int
    chains: tuple[Chain, ...]

    def __post_init__(self) -> None:
        for ch in self.chains:
            if ch.initial.region != self.region or ch.bc.region != self.region:
                raise DomainMismatchError("chain not built on the ensemble region")


def plus_prob_table(beta: float) -> np.ndarray:
    """P(new spin = +1) indexed by local field s + 4, s in -4..4."""
    s = np.arange(-4, 5, dtype=np.float64)
    return 1.0 / (1.0 + np.exp(-2.0 * beta * s))


def step(
    config: SpinConfig, bc: BoundaryCondition, site: Site, u: float, beta: float
) -> SpinConfig:
    """Apply one heat-bath event: refresh `site` to +1 iff u < p_plus."""
    region = config.region
    if site not in region.sites:
        raise ParameterError(f"site {site} not in region")
    i = region.site_index[site]
    nbr = neighbor_table(region)[i]
    vals = config.values
    s = int(bc.field_array[i]) + int(sum(vals[j] for j in nbr if j < region.n_sites))
    p = 1.0 / (1.0 + math.exp(-2.0 * beta * s))
    new = 1 if u < p else -1
    if new == config.spin_at(site):
        return config
    return config.flipped(site)


class _ChainState:
    """Mutable per-chain state used by the runner."""

    def __init__(self, chain: Chain, region: Region, t_end: float):
        self.region = region
        self.spins = chain.initial.values.copy()
        self.bfield = chain.bc.field_array.astype(np.int64)
        schedule = chain.schedule or CensorSchedule.trivial(region, t_end)
        schedule.validate_for(region, t_end)
        self.phases = schedule.phases
        self.phase_idx = -1  # index of the last phase entered
        self.active = np.zeros(region.n_sites, dtype=bool)
        self._site_idx = region.site_index

    def advance_to(self, t: float) -> None:
        """Enter every phase with t0 <= t, applying resets in order."""
        while (
            self.phase_idx + 1 < len(self.phases)
            and self.phases[self.phase_idx + 1].t0 <= t
        ):
            self.phase_idx += 1
            ph = self.phases[self.phase_idx]
            if ph.reset is not None:
                sites, value = ph.reset
                for s in sites:
                    self.spins[self._site_idx[s]] = value
            self.active[:] = False
            for s in ph.active:
                self.active[self._site_idx[s]] = True

    def apply_event(self, site_i: int, u: float, ptab: np.ndarray, nbr: np.ndarray) -> None:
        if not self.active[site_i]:
            return
        s = self.bfield[site_i]
        for j in nbr[site_i]:
            if j >= 0:
                s += self.spins[j]
        self.spins[site_i] = 1 if u < ptab[s + 4] else -1

    def config(self) -> SpinConfig:
        return SpinConfig.from_values(self.region, self.spins.tolist())


@dataclass
class RunResult:
    finals: list[SpinConfig]
    taps: dict[float, list[SpinConfig]] = field(default_factory=dict)


def run(ensemble: CoupledEnsemble, t_end: float, taps: Sequence[float] = ()) -> RunResult:
    """Advance every chain of the ensemble through the shared event
    stream up to t_end.  Taps report the configuration immediately
    after the last event (and any schedule reset) at or before the tap
    time.  Deterministic given the ensemble seed."""
    region = ensemble.region
    if t_end < 0:
        raise ParameterError("t_end must be >= 0")
    for tp in taps:
        if not 0 <= tp <= t_end:
            raise ParameterError(f"tap {tp} outside [0, {t_end}]")
    n = region.n_sites
    nbr_raw = neighbor_table(region)
    nbr = np.where(nbr_raw == n, -1, nbr_raw)
    ptab = plus_prob_table(ensemble.beta)
    states = [_ChainState(ch, region, t_end) for ch in ensemble.chains]
    stream = EventStream(ensemble.seed, n)
    result = RunResult(finals=[], taps={float(tp): [] for tp in taps})

    checkpoints = sorted(set(float(tp) for tp in taps) | {float(t_end)})
    events = stream.events_until(t_end)
    pending = next(events, None)
    for cp in checkpoints:
        while pending is not None and pending[0] <= cp:
            t, site_i, u = pending
            for st in states:
                st.advance_to(t)
                st.apply_event(site_i, u, ptab, nbr)
            pending = next(events, None)
        for st in states:
            st.advance_to(cp)
        if cp in result.taps:
            result.taps[cp] = [st.config() for st in states]
    result.finals = [st.config() for st in states]
    return result


def coupling_time(ensemble: CoupledEnsemble, t_cap: float) -> float:
    """First event time after which the two chains of the ensemble
    coincide (0.0 when they already start equal); +inf when they have
    not coupled by t_cap.  Requires a shared boundary condition and
    schedule, so coincidence persists by monotonicity."""
    if len(ensemble.chains) != 2:
        raise ParameterError("coupling_time needs an ensemble of exactly two chains")
    a, b = ensemble.chains
    if a.bc != b.bc or a.schedule != b.schedule:
        raise ParameterError("coupling requires shared boundary condition and schedule")
    region = ensemble.region
    n = region.n_sites
    nbr_raw = neighbor_table(region)
    nbr = np.where(nbr_raw == n, -1, nbr_raw)
    ptab = plus_prob_table(ensemble.beta)
    st_a = _ChainState(a, region, t_cap)
    st_b = _ChainState(b, region, t_cap)
    if np.array_equal(st_a.spins, st_b.spins):
        return 0.0
    ndiff = int(np.sum(st_a.spins != st_b.spins))
    for t, site_i, u in EventStream(ensemble.seed, n).events_until(t_cap):
        st_a.advance_to(t)
        st_b.advance_to(t)
        before = st_a.spins[site_i] != st_b.spins[site_i]
        st_a.apply_event(site_i, u, ptab, nbr)
        st_b.apply_event(site_i, u, ptab, nbr)
        after = st_a.spins[site_i] != st_b.spins[site_i]
        ndiff += int(after) - int(before)
        if ndiff == 0:
            return t
    return math.inf


def discrepancy_profile(
    region: Region,
    bc: BoundaryCondition,
    beta: float,
    times: Sequence[float],
    replicas: int,
    seed: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Replica-averaged per-site gaps P(eta_t^+(x) = +) - P(eta_t^-(x) = +)
    of the plus/minus grand coupling, and their site sums d_hat(t).

    Returns (gaps, sums): gaps has shape (len(times), n_sites), sums is
    its row sum, an upper-bound estimator for sup over starts of the TV
    distance to equilibrium."""
    from ._batch import pair_states

    taps = pair_states(
        region,
        beta,
        bc.field_array,
        bc.field_array,
        init_hi=1,
        init_lo=-1,
        tap_times=list(times),
        replicas=replicas,
        seed=seed,
    )
    gaps = np.empty((len(times), region.n_sites))
    for k, (hi, lo) in enumerate(taps):
        gaps[k] = (hi == 1).mean(axis=0) - (lo == 1).mean(axis=0)
    return gaps, gaps.sum(axis=1)
