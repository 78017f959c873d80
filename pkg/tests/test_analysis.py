from __future__ import annotations

import random
from fractions import Fraction

import pytest

from fabsched.analysis import (
    BUSY,
    STARTUP,
    CurvePoint,
    all_on_timelines,
    energy_per_wafer_curve,
    fit_slope,
    is_non_increasing,
    on_time_energy,
    parse_gantt,
    render_gantt,
    total_energy,
    utilisation_energy,
    wafer_traces,
    write_curve_csv,
)
from fabsched.formulation import ModelConfig
from fabsched.model import Assignment, MachineTimeline, ScheduleSolution, build_minifab
from fabsched.randomized import random_config, random_instance
from fabsched.solver import Objective, solve

F = Fraction


def hours_solution(hours_by_machine: dict[int, int]) -> ScheduleSolution:
    """One block per machine carrying the given busy hours (energy accounting only)."""
    return ScheduleSolution(tuple(Assignment(0, 0, m, 1, h) for m, h in hours_by_machine.items()))


def test_min_energy_utilisation():
    inst = build_minifab(15)
    report = utilisation_energy(inst, hours_solution({0: 45, 2: 30, 4: 60}))
    assert report.total_kwh == F("9.45")
    assert report.hours()["Lithographer"] == 60


def test_max_energy_utilisation():
    inst = build_minifab(15)
    report = utilisation_energy(inst, hours_solution({0: 31, 1: 14, 2: 24, 3: 6, 4: 60}))
    assert report.total_kwh == F("10.19")
    assert [m.energy_kwh for m in report.machines] == [F("0.31"), F("0.28"), F("2.4"), F("1.2"), F("6")]


def test_empty_solution_energy():
    assert total_energy(build_minifab(1), ScheduleSolution()) == 0
    assert on_time_energy(build_minifab(1), []) == 0


def test_energy_double_entry():
    rng = random.Random(1)
    for _ in range(30):
        inst = random_instance(rng)
        res = solve(inst, random_config(rng, inst), Objective.energy())
        if not res.feasible:
            continue
        direct = sum((a.duration * inst.machine(a.machine).power_kw for a in res.solution.assignments), F(0))
        report = utilisation_energy(inst, res.solution)
        assert report.total_kwh == direct == sum(m.energy_kwh for m in report.machines)


def test_all_on_baseline():
    inst = build_minifab(37, 81)
    assert on_time_energy(inst, all_on_timelines(inst, 81)) == F("34.83")
    assert abs(float(F("34.83")) - 34.9) <= 0.1


def test_single_machine_on_time():
    inst = build_minifab(1)
    assert on_time_energy(inst, [MachineTimeline.from_intervals(2, 20, [(1, 10)])]) == F(1)


def test_on_time_covers_utilisation():
    for jobs, horizon in [(1, 12), (2, 16), (3, 16)]:
        inst = build_minifab(jobs, horizon)
        res = solve(inst, ModelConfig(dynamic_switching=True), Objective.energy(), time_limit=20)
        report = utilisation_energy(inst, res.solution, res.timelines)
        # every used machine spends start-up hours switched on
        assert report.on_time_kwh > report.total_kwh
        assert report.on_time_kwh == res.on_time_energy


def test_energy_report_csv():
    inst = build_minifab(1)
    csv = utilisation_energy(inst, hours_solution({0: 3, 2: 2, 4: 4})).to_csv().splitlines()
    assert csv[0] == "machine,utilisation_h,energy_kwh,on_h,on_energy_kwh"
    assert csv[-1] == "TOTAL,9,0.63,,"


def test_energy_per_wafer_points():
    curve = energy_per_wafer_curve([(81, 37, F("34.83")), (81, 37, F("23.31")), (80, 35, F("27.8")), (9, 1, F("0.63"))])
    assert len(curve) == 3
    ys = sorted(round(float(p.y), 3) for p in curve)
    assert ys == [0.63, 0.794, 0.941]


def test_energy_per_wafer_trend():
    pts = [(m, n, F(63, 100) * n + 2) for m, n in [(11, 2), (13, 3), (15, 4), (17, 5)]]
    curve = energy_per_wafer_curve(pts)
    assert is_non_increasing(curve)
    assert not is_non_increasing(list(reversed(curve)))


def test_fit_slope():
    assert fit_slope([(0, 1), (2, 5), (4, 9)]) == 2
    assert fit_slope([CurvePoint(F(1), F(3), "s"), CurvePoint(F(5), F(3), "s")]) == 0
    with pytest.raises(ValueError):
        fit_slope([(1, 1)])
    with pytest.raises(ValueError):
        fit_slope([(1, 1), (1, 2)])


def test_curve_points_are_finite_and_csv():
    with pytest.raises(ValueError):
        CurvePoint(float("inf"), F(1), "s")
    text = write_curve_csv([CurvePoint(F(81), F("0.63"), "energy_per_wafer")])
    assert text.splitlines() == ["x,y,series", "81,0.63,energy_per_wafer"]


def wafer_row(chart: str, wafer: int) -> list[str]:
    line = next(l for l in chart.splitlines() if l.startswith(f"wafer {wafer} "))
    header = chart.splitlines()[0]
    body, head = line.partition(" |")[2], header.partition(" |")[2]
    cell = len(head) // len(head.split())
    return [body[i:i + cell].strip() for i in range(0, len(body), cell)]


def test_gantt_shows_parallel_diffusion_start(five_wafer):
    inst, sol = five_wafer
    chart = render_gantt(inst, sol)
    assert wafer_row(chart, 1)[0] == "1"
    assert wafer_row(chart, 3)[0] == "1"
    assert wafer_row(chart, 2)[0] == "."
    assert parse_gantt(inst, chart) == sol


def test_gantt_of_empty_solution_is_header_only():
    chart = render_gantt(build_minifab(1), ScheduleSolution())
    rows = [l for l in chart.splitlines() if "|" in l]
    assert rows[0].startswith("hour")
    assert all(not l.partition("|")[2].strip() for l in rows)
    assert "wafer" not in chart


def test_fifteen_wafer_trace():
    inst = build_minifab(15)
    res = solve(inst, ModelConfig(), Objective.makespan())
    traces = {w.wafer: w for w in wafer_traces(inst, res.solution)}
    assert traces[5].completion == 17
    assert sum(traces[5].waits) == 4
    assert max(w.completion for w in traces.values()) == 37


@pytest.mark.parametrize("jobs,horizon", [(5, None), (37, 81)])
def test_gantt_round_trip(jobs, horizon):
    inst = build_minifab(jobs, horizon)
    res = solve(inst, ModelConfig(), Objective.makespan())
    for hours in (None, 120):
        chart = render_gantt(inst, res.solution, hours=hours)
        assert parse_gantt(inst, chart) == res.solution
    assert render_gantt(inst, res.solution) == render_gantt(inst, res.solution)


def test_gantt_machine_rows():
    inst = build_minifab(2, 16)
    res = solve(inst, ModelConfig(dynamic_switching=True), Objective.energy())
    chart = render_gantt(inst, res.solution, res.timelines)
    assert parse_gantt(inst, chart) == res.solution
    litho = next(l for l in chart.splitlines() if l.startswith("Lithographer "))
    cells = litho.partition(" |")[2].split()
    assert cells[0] == STARTUP
    assert cells.count(BUSY) == 8


def test_gantt_round_trip_random():
    rng = random.Random(9)
    for _ in range(40):
        inst = random_instance(rng)
        res = solve(inst, random_config(rng, inst), Objective.makespan())
        if res.feasible:
            assert parse_gantt(inst, render_gantt(inst, res.solution, res.timelines)) == res.solution
