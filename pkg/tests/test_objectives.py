from __future__ import annotations

from fractions import Fraction

import pytest

from fabsched.model import build_minifab
from fabsched.objectives import (
    ParetoPoint,
    epsilon_sweep_fixed_throughput,
    linspace,
    pareto_filter,
    sweep_caps,
    sweep_to_csv,
    throughput_energy_sweep,
    weighted_sum_solve,
)
from fabsched.solver import OPTIMAL

F = Fraction


def test_pareto_filter_drops_dominated_points():
    front = pareto_filter([ParetoPoint(37, F("10.19"), 15), ParetoPoint(37, F("9.45"), 15)])
    assert [(p.makespan, p.energy) for p in front.points] == [(37, F("9.45"))]


def test_pareto_filter_keeps_tradeoffs():
    front = pareto_filter([ParetoPoint(81, F("23.31"), 37), ParetoPoint(60, F("20.0"), 28)])
    assert len(front) == 2
    assert [p.makespan for p in front.points] == [60, 81]


def test_pareto_filter_empty_and_duplicates():
    assert len(pareto_filter([])) == 0
    p = ParetoPoint(10, F(1), 2)
    assert len(pareto_filter([p, p])) == 1


def test_no_front_point_dominates_another():
    pts = [ParetoPoint(m, F(e), t) for m in (5, 6, 7) for e in (1, 2, 3) for t in (1, 2)]
    front = pareto_filter(pts)
    assert not any(a.dominates(b) for a in front.points for b in front.points)
    assert [(p.makespan, p.energy, p.throughput) for p in front.points] == [(5, F(1), 2)]


def test_linspace_is_exact_and_inclusive():
    grid = linspace(F("9.45"), F("10.19"), 3)
    assert grid == [F("9.45"), F("9.82"), F("10.19")]
    assert linspace(F(1), F(2), 1) == [F(1)]
    with pytest.raises(ValueError):
        linspace(F(1), F(2), 0)


def test_fifteen_wafer_front():
    front = epsilon_sweep_fixed_throughput(build_minifab(15), 15, 3)
    assert [(p.makespan, p.energy, p.throughput) for p in front.points] == [(37, F("9.45"), 15)]
    energies = [p.energy for p in front.scenarios]
    assert energies[0] == F("9.45") == front.sweep_meta["energy_min"]
    assert energies[-1] == front.sweep_meta["energy_max"]
    assert energies == sorted(energies) and len(set(energies)) == 3
    assert {p.makespan for p in front.scenarios} == {37}
    for p in front.points:
        assert p.witness.status == OPTIMAL
        assert (p.witness.makespan, p.witness.energy) == (p.makespan, p.energy)


def test_single_wafer_front():
    front = epsilon_sweep_fixed_throughput(build_minifab(1), 1, 4)
    assert [(p.makespan, p.energy) for p in front.points] == [(9, F("0.63"))]
    assert front.sweep_meta["energy_max"] == F("0.86")


def test_one_step_gives_the_min_energy_point():
    front = epsilon_sweep_fixed_throughput(build_minifab(5), 5, 1)
    assert [(p.makespan, p.energy) for p in front.points] == [(17, F("3.15"))]
    assert front.sweep_meta["grid"] == [F("3.15")]


def test_unreachable_throughput_gives_empty_front():
    front = epsilon_sweep_fixed_throughput(build_minifab(5, 12), 5, 3)
    assert len(front) == 0
    assert "not achievable" in front.diagnostic


def test_front_csv_header():
    front = epsilon_sweep_fixed_throughput(build_minifab(3), 3, 2)
    lines = front.to_csv().splitlines()
    assert lines[0] == "makespan_h,energy_kwh,throughput,objective_mode"
    assert lines[1] == "13,1.89,3,fixed-throughput"


def test_sweep_caps_grid():
    assert sweep_caps(5) == [0, 1, 2, 3, 4, 5, 6]
    assert sweep_caps(80, 3) == [0, 40, 81]
    assert sweep_caps(80, 1) == [81]


def test_throughput_sweep_baseline_shape():
    pts = throughput_energy_sweep(build_minifab(8), 24)
    for p in pts:
        if p.cap <= 8:
            assert p.as_tuple() == (p.cap, 0, F(0))
    assert pts[-1].cap == 25 and pts[-1].throughput == 8 and pts[-1].makespan == 23
    tps = [p.throughput for p in pts]
    energies = [p.energy for p in pts]
    assert tps == sorted(tps)
    assert energies == sorted(energies)
    # minimum energy per wafer is the cheapest channel route
    assert all(p.energy == F("0.63") * p.throughput for p in pts)
    csv = sweep_to_csv(pts, "throughput-sweep").splitlines()
    assert csv[0] == "makespan_h,energy_kwh,throughput,objective_mode"
    assert len(csv) == len(pts) + 1


def test_dynamic_sweep_uses_on_time_energy():
    pts = throughput_energy_sweep(build_minifab(2), 13, dynamic=True)
    by_cap = {p.cap: p for p in pts}
    assert by_cap[9].throughput == 0
    assert by_cap[14].throughput >= 1
    # on-time energy includes start-up hours, so it exceeds utilisation energy
    assert by_cap[14].energy > F("0.63") * by_cap[14].throughput


def test_weighted_sum_extremes():
    inst = build_minifab(4)
    fast = weighted_sum_solve(inst, 4, 30, 1)
    assert fast.status == OPTIMAL and fast.makespan == 15
    cheap = weighted_sum_solve(inst, 4, 30, 0)
    assert cheap.energy == F("2.52")
    mid = weighted_sum_solve(inst, 4, 30, F(1, 2))
    assert (mid.makespan, mid.energy) == (15, F("2.52"))


def test_weighted_optimum_is_not_dominated_by_the_front():
    inst = build_minifab(4, 30)
    front = epsilon_sweep_fixed_throughput(inst, 4, 4)
    others = front.points + front.scenarios
    for alpha in (F(1, 100), F(1, 2), F(99, 100)):
        res = weighted_sum_solve(inst, 4, 30, alpha)
        me = ParetoPoint(res.makespan, res.energy, res.throughput)
        assert not any(p.dominates(me) for p in others)
    # a zero weight leaves the other coordinate free: only weak efficiency holds
    for alpha in (F(0), F(1)):
        res = weighted_sum_solve(inst, 4, 30, alpha)
        assert not any(p.makespan < res.makespan and p.energy < res.energy for p in others)
