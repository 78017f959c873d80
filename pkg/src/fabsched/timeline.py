"""Minimum on-time switching plan for one machine with fixed busy hours.

Hour-level dynamic program.  State after hour ``t`` is either off or on
with the current run length (capped at ``max(st + 1, z)``, enough to decide
both the start-up rule and the minimum-on rule).  A run that reaches the
horizon needs no switch-off and is exempt from the minimum-on rule.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Iterable

from .model import MachineTimeline


class TimelineInfeasible(ValueError):
    pass


def busy_mask(intervals: Iterable[tuple[int, int]]) -> int:
    """Bitset with bit ``t`` set for every busy hour ``t``."""
    mask = 0
    for a, b in intervals:
        mask |= ((1 << (b - a + 1)) - 1) << a
    return mask


def mask_intervals(mask: int) -> list[tuple[int, int]]:
    out, t, start = [], 0, None
    while mask >> t:
        if (mask >> t) & 1:
            if start is None:
                start = t
        elif start is not None:
            out.append((start, t - 1))
            start = None
        t += 1
    if start is not None:
        out.append((start, t - 1))
    return out


@lru_cache(maxsize=1 << 16)
def _solve(mask: int, st: int, z: int, horizon: int, forced: bool) -> tuple[int, tuple[int, ...]] | None:
    K = max(st + 1, z, 1)
    INF = (1 << 60, 0)
    OFF = 0
    # cost is (on_hours, switches); states 0=off, k=1..K on with run length k
    cost = [INF] * (K + 1)
    back: list[list[int]] = []
    busy1 = mask & 2
    if forced:
        if not busy1 or st == 0:
            cost[1] = (1, 1)
    else:
        if not busy1:
            cost[OFF] = (0, 0)
        if not busy1 or st == 0:
            cost[1] = (1, 1)
    back.append([-1] * (K + 1))

    for t in range(2, horizon + 1):
        busy = (mask >> t) & 1
        new = [INF] * (K + 1)
        prev = [-1] * (K + 1)

        def relax(state: int, value: tuple[int, int], frm: int) -> None:
            if value < new[state]:
                new[state] = value
                prev[state] = frm

        for s in range(K + 1):
            c = cost[s]
            if c is INF:
                continue
            if s == OFF:
                if not busy:
                    relax(OFF, c, s)
                if not busy or st == 0:
                    relax(1, (c[0] + 1, c[1] + 1), s)
            else:
                k = min(s + 1, K)
                if not busy or s + 1 >= st + 1:
                    relax(k, (c[0] + 1, c[1]), s)
                if not busy and s >= z:
                    relax(OFF, (c[0], c[1] + 1), s)
        cost = new
        back.append(prev)

    best = min(range(K + 1), key=lambda s: (cost[s], s))
    if cost[best] is INF:
        return None
    states = [best]
    for t in range(horizon - 1, 0, -1):
        states.append(back[t][states[-1]])
    states.reverse()
    return cost[best][0], tuple(1 if s else 0 for s in states)


@lru_cache(maxsize=1 << 18)
def _bound(mask: int, st: int, z: int, horizon: int, after: int) -> int | None:
    K = max(st + 1, z, 1)
    INF = 1 << 60
    # cost[f][s]: f records an hour >= after spent on past start-up
    cost = [[INF] * (K + 1) for _ in range(2)]
    if not mask & 2 or st == 0:
        cost[1 if (after <= 1 and st == 0) else 0][1] = 1
    for t in range(2, horizon + 1):
        busy = (mask >> t) & 1
        new = [[INF] * (K + 1) for _ in range(2)]
        for f in (0, 1):
            row = cost[f]
            for s in range(K + 1):
                c = row[s]
                if c >= INF:
                    continue
                if s == 0:
                    if not busy and c < new[f][0]:
                        new[f][0] = c
                    if not busy or st == 0:
                        g = 1 if (f or (t >= after and st == 0)) else 0
                        if c + 1 < new[g][1]:
                            new[g][1] = c + 1
                else:
                    k = min(s + 1, K)
                    if not busy or s >= st:
                        g = 1 if (f or (t >= after and s >= st)) else 0
                        if c + 1 < new[g][k]:
                            new[g][k] = c + 1
                    if not busy and s >= z and c < new[f][0]:
                        new[f][0] = c
        cost = new
    best = min(cost[1] if after else cost[0] + cost[1])
    return None if best >= INF else best


def timeline_cost_bound(mask: int, st: int, z: int, horizon: int, after: int = 0) -> int | None:
    """Minimum on-hours of a machine switched on at t=1 that covers ``mask``
    and is also ready to process at some hour >= ``after`` (0: no such hour).

    A lower bound on the cost of any busy set containing ``mask`` plus one
    hour at or after ``after``.  None when no such plan exists.
    """
    if mask >> (horizon + 1) or after > horizon:
        return None
    return _bound(mask, st, z, horizon, after)


def timeline_cost(mask: int, st: int, z: int, horizon: int, forced: bool = True) -> int | None:
    """Minimum on-hours for a busy bitset, or None if no plan exists."""
    if mask == 0 and not forced:
        return 0
    if mask >> (horizon + 1):
        return None
    res = _solve(mask, st, z, horizon, forced)
    return None if res is None else res[0]


def optimize_timeline(
    busy_intervals: Iterable[tuple[int, int]],
    st: int,
    z: int,
    horizon: int,
    *,
    machine: int = 0,
    forced: bool | None = None,
) -> MachineTimeline:
    """Cheapest on/off plan covering the busy hours.

    ``forced`` switches the machine on at t=1; by default a machine is
    forced exactly when it has busy hours, and a machine with none stays off.
    """
    mask = busy_mask(busy_intervals)
    if forced is None:
        forced = mask != 0
    if mask == 0 and not forced:
        return MachineTimeline.from_intervals(machine, horizon, [])
    if mask & 1 or mask >> (horizon + 1):
        raise TimelineInfeasible(f"busy hours outside 1..{horizon}")
    res = _solve(mask, st, z, horizon, forced)
    if res is None:
        raise TimelineInfeasible(f"start-up time {st} leaves no room before the first busy hour")
    return MachineTimeline.from_indicator(machine, res[1])
