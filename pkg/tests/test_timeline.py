from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fabsched.randomized import exhaustive_timeline_cost, random_busy
from fabsched.timeline import (
    TimelineInfeasible,
    busy_mask,
    mask_intervals,
    optimize_timeline,
    timeline_cost,
    timeline_cost_bound,
)


def test_min_on_time_binds():
    tl = optimize_timeline([(2, 3)], st=1, z=6, horizon=16)
    assert tl.on_intervals == ((1, 6),)
    assert tl.on_hours == 6


def test_restart_beats_staying_on():
    tl = optimize_timeline([(2, 3), (20, 21)], st=1, z=6, horizon=21)
    assert tl.on_intervals == ((1, 6), (19, 21))
    assert tl.on_hours == 9
    assert tl.switch_on == (1, 19)
    assert tl.switch_off == (7,)


def test_idle_machine_stays_off():
    tl = optimize_timeline([], st=2, z=4, horizon=10)
    assert tl.on_intervals == ()
    assert tl.on_hours == 0


def test_forced_idle_machine_runs_min_on():
    tl = optimize_timeline([], st=2, z=4, horizon=10, forced=True)
    assert tl.on_intervals == ((1, 4),)


def test_last_run_may_end_at_horizon_without_min_on():
    # the run reaching the horizon has no switch-off, so z does not apply to it
    tl = optimize_timeline([(2, 2), (14, 14)], st=1, z=8, horizon=15)
    assert tl.on_intervals == ((1, 8), (13, 15))
    assert tl.on_hours == exhaustive_timeline_cost({2, 14}, 1, 8, 15) == 11


def test_startup_pushes_past_horizon():
    with pytest.raises(TimelineInfeasible):
        optimize_timeline([(2, 2)], st=2, z=1, horizon=5)
    with pytest.raises(TimelineInfeasible):
        optimize_timeline([(4, 7)], st=1, z=1, horizon=6)


def test_mask_round_trip():
    ivs = [(2, 3), (6, 6), (9, 12)]
    assert mask_intervals(busy_mask(ivs)) == ivs


def test_dp_matches_exhaustive_enumeration():
    rng = random.Random(2024)
    for _ in range(300):
        horizon = rng.randint(1, 16)
        busy = random_busy(rng, horizon)
        st, z = rng.randint(0, 3), rng.randint(0, 6)
        forced = bool(busy) or rng.random() < 0.5
        hours = {t for a, b in busy for t in range(a, b + 1)}
        expected = exhaustive_timeline_cost(hours, st, z, horizon, forced)
        got = timeline_cost(busy_mask(busy), st, z, horizon, forced)
        assert got == expected, (busy, st, z, horizon, forced)
        if expected is not None:
            tl = optimize_timeline(busy, st, z, horizon, forced=forced)
            assert tl.on_hours == expected
            on = tl.indicator()
            assert all(on[t - 1] for t in hours)


def test_cost_bound_is_admissible():
    rng = random.Random(7)
    for _ in range(300):
        horizon = rng.randint(1, 12)
        busy = random_busy(rng, horizon)
        st, z = rng.randint(0, 2), rng.randint(0, 4)
        after = rng.randint(1, horizon)
        hours = {t for a, b in busy for t in range(a, b + 1)}
        # any busy set that adds one hour at or after `after` costs at least the bound
        costs = [
            exhaustive_timeline_cost(hours | {t}, st, z, horizon)
            for t in range(after, horizon + 1)
        ]
        costs = [c for c in costs if c is not None]
        bound = timeline_cost_bound(busy_mask(busy), st, z, horizon, after)
        if not costs:
            continue
        assert bound is not None and bound <= min(costs)


@st.composite
def busy_patterns(draw):
    horizon = draw(st.integers(1, 16))
    hours = draw(st.sets(st.integers(1, horizon), max_size=horizon))
    return horizon, hours


@settings(max_examples=250, deadline=None)
@given(busy_patterns(), st.integers(0, 3), st.integers(0, 8), st.booleans())
def test_dp_matches_enumeration_property(pattern, startup, min_on, forced):
    horizon, hours = pattern
    forced = forced or bool(hours)
    expected = exhaustive_timeline_cost(hours, startup, min_on, horizon, forced)
    mask = busy_mask((t, t) for t in hours)
    assert timeline_cost(mask, startup, min_on, horizon, forced) == expected
