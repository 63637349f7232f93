"""Constructors for the specific censoring schedules.

Each builder returns the target region, the schedule (pure data, run by
either the simulator or the exact engine), and the named geometric
parts it was built from, so tests can cross-check the overlap geometry
directly.

Conventions: a reset attached to a phase fires at that phase's start,
before any update of the phase.  Plus starts reset to +1, minus starts
to -1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .dynamics import CensorSchedule, Phase
from .errors import ParameterError
from .lattice import (
    RectKind,
    RectSpec,
    Region,
    Site,
    delta_segment,
    make_rect,
    stacked_heights,
)


@dataclass(frozen=True)
class ScheduleBuild:
    region: Region
    schedule: CensorSchedule
    parts: dict[str, frozenset[Site]]


def _band(x0: int, x1: int, y0: int, y1: int) -> frozenset[Site]:
    return frozenset((x, y) for x in range(x0, x1 + 1) for y in range(y0, y1 + 1))


def _check_start(start: str) -> str:
    if start not in ("+", "-"):
        raise ParameterError(f"start must be '+' or '-', got {start!r}")
    return start


def schedule_q_from_r(L: int, eps: float, t: float, start: str = "+") -> ScheduleBuild:
    """Two-phase schedule on the tall rectangle Q_L: B is the flat
    rectangle R_L at the bottom, A its copy shifted North so the two
    overlap; equilibrate one, reset the other to the starting sign,
    then equilibrate it.

    Plus start: phase [0, t) active A, reset B to +1 at t, phase
    [t, 2t] active B.  Minus start mirrors the roles: phase [0, t)
    active B, reset A to -1 at t, phase [t, 2t] active A."""
    _check_start(start)
    if t <= 0:
        raise ParameterError("phase length must be positive")
    region = make_rect(RectSpec(RectKind.Q, L, eps))
    h_r = make_rect(RectSpec(RectKind.R, L, eps)).height
    h_q = region.height
    b_part = _band(1, L, 1, h_r)
    a_part = _band(1, L, h_q - h_r + 1, h_q)
    if start == "+":
        phases = (
            Phase(0.0, t, a_part),
            Phase(t, 2 * t, b_part, reset=(b_part, 1)),
        )
    else:
        phases = (
            Phase(0.0, t, b_part),
            Phase(t, 2 * t, a_part, reset=(a_part, -1)),
        )
    return ScheduleBuild(region, CensorSchedule(phases), {"A": a_part, "B": b_part})


def schedule_r_from_q(L: int, eps: float, t: float, start: str = "+") -> ScheduleBuild:
    """Two-phase schedule on the width-(2L+1) flat rectangle: A is the
    tall rectangle Q_L centered horizontally, B the two disjoint Q_L
    copies flanking the middle column C.  Includes the pinned South
    segment used by the pinned-boundary variant."""
    _check_start(start)
    if t <= 0:
        raise ParameterError("phase length must be positive")
    region = make_rect(RectSpec(RectKind.R, 2 * L + 1, eps))
    height = region.height  # equals the height of Q_L by construction
    shift = L // 2
    a_part = _band(shift + 1, shift + L, 1, height)
    b1 = _band(1, L, 1, height)
    b2 = _band(L + 2, 2 * L + 1, 1, height)
    b_part = b1 | b2
    c_part = _band(L + 1, L + 1, 1, height)
    value = 1 if start == "+" else -1
    phases = (
        Phase(0.0, t, a_part),
        Phase(t, 2 * t, b_part, reset=(b_part, value)),
    )
    return ScheduleBuild(
        region,
        CensorSchedule(phases),
        {
            "A": a_part,
            "B": b_part,
            "B1": b1,
            "B2": b2,
            "C": c_part,
            "delta": delta_segment(L, eps),
        },
    )


def schedule_stacked(L: int, eps: float, t_total: float) -> ScheduleBuild:
    """The unrolled inductive schedule on the L x L square.

    The stacked rectangles share the square's base and have heights
    h_0 < ... < h_{k-1} = L.  Phase j works on level i = k-1-j and
    activates the top strip of thickness h_0 of that level (the
    translate of the flat rectangle); entering the next level resets
    the strip overlap to +1.  The final phase is the bottom flat
    rectangle itself."""
    if t_total <= 0:
        raise ParameterError("total time must be positive")
    heights = stacked_heights(L, eps)
    k = len(heights)
    h0 = heights[0]
    region = make_rect(RectSpec(RectKind.SQUARE, L))
    u = t_total / k
    phases = []
    parts: dict[str, frozenset[Site]] = {}
    for j in range(k):
        level = k - 1 - j
        h = heights[level]
        active = _band(1, L, h - h0 + 1, h)
        parts[f"strip_{level}"] = active
        reset = None
        if j >= 1:
            above = heights[level + 1]
            lo, hi = above - h0 + 1, h
            if lo <= hi:
                reset = (_band(1, L, lo, hi), 1)
        phases.append(Phase(j * u, (j + 1) * u, active, reset=reset))
    return ScheduleBuild(region, CensorSchedule(tuple(phases)), parts)


def schedule_minus_square(L: int, eps: float, t_total: float) -> ScheduleBuild:
    """Two-phase minus-start schedule on the L x L square: equilibrate
    the bottom flat rectangle B, reset everything above half its height
    to -1, then equilibrate that upper part A."""
    if t_total <= 0:
        raise ParameterError("total time must be positive")
    region = make_rect(RectSpec(RectKind.SQUARE, L))
    strip_h = math.ceil(L ** (0.5 + eps))
    half = math.ceil(0.5 * L ** (0.5 + eps))
    if half >= L:
        raise ParameterError(f"square of side {L} too small for the minus schedule")
    b_part = _band(1, L, 1, min(strip_h, L))
    a_part = _band(1, L, half + 1, L)
    t_half = t_total / 2
    phases = (
        Phase(0.0, t_half, b_part),
        Phase(t_half, t_total, a_part, reset=(a_part, -1)),
    )
    return ScheduleBuild(
        region, CensorSchedule(phases), {"A": a_part, "B": b_part}
    )
