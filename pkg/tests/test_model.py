from __future__ import annotations

import random
from fractions import Fraction

import pytest

from fabsched.model import (
    Assignment,
    Instance,
    MachineDef,
    MachineTimeline,
    OperationDef,
    ScheduleSolution,
    Workstation,
    assign,
    build_minifab,
    expand_stn,
    makespan,
    validate_instance,
)


def single_job_schedule(inst: Instance) -> ScheduleSolution:
    """Job 0 on the first eligible machine of each operation, no waiting."""
    t, rows = 1, []
    for k in inst.routing:
        m = min(inst.operation(k).eligible)
        a = assign(inst, 0, k, m, t)
        rows.append(a)
        t = a.completion + 1
    return ScheduleSolution(tuple(rows))


def test_minifab_tables():
    inst = build_minifab()
    names = [inst.operation(k).name for k in inst.routing]
    assert names == ["Diffusion1", "Implantation1", "Lithography1", "Implantation2", "Diffusion2", "Lithography2"]
    assert [inst.operation(k).min_process_time for k in inst.routing] == [2, 1, 2, 1, 1, 2]
    assert inst.operation(0).process_time(0) == 2
    assert inst.machine(3).power_kw == Fraction("0.2")
    assert [m.startup_h for m in inst.machines] == [1, 1, 2, 2, 1]
    assert [m.min_on_h for m in inst.machines] == [6, 6, 4, 4, 8]
    assert inst.machine(4).min_on_h == 8
    assert sum(m.power_kw for m in inst.machines) == Fraction("0.43")


def test_minifab_stations_share_machines():
    inst = build_minifab()
    by_name = {o.name: set(o.eligible) for o in inst.operations}
    assert by_name["Diffusion1"] == by_name["Diffusion2"] == {0, 1}
    assert by_name["Implantation1"] == by_name["Implantation2"] == {2, 3}
    assert by_name["Lithography1"] == by_name["Lithography2"] == {4}


def test_expand_stn_identity_and_mixed_visits():
    ops, routing = expand_stn([Workstation("A", (0,))], {("A", 1): 3}, [("A", 1)])
    assert len(ops) == 1 and routing == (0,)
    assert ops[0].eligible == {0: 3}

    ops, routing = expand_stn(
        [{"name": "A", "machines": (0,)}, {"name": "B", "machines": (1, 2), "visits": 2}],
        {("A", 1): 1, ("B", 1): 2, ("B", 2): {1: 1, 2: 3}},
        [("B", 1), ("A", 1), ("B", 2)],
    )
    assert len(ops) == 3
    assert set(ops[0].eligible) == set(ops[2].eligible) == {1, 2}
    assert ops[2].eligible == {1: 1, 2: 3}
    assert [o.name for o in ops] == ["B1", "A1", "B2"]


def test_expand_stn_rejects_bad_orders():
    stations = [Workstation("A", (0,), visits=2)]
    times = {("A", 1): 1, ("A", 2): 1}
    with pytest.raises(ValueError, match="undefined"):
        expand_stn(stations, times, [("A", 1), ("A", 3)])
    with pytest.raises(ValueError, match="omits"):
        expand_stn(stations, times, [("A", 1)])
    with pytest.raises(ValueError, match="twice"):
        expand_stn(stations, times, [("A", 1), ("A", 1)])


def test_validate_minifab_horizons():
    assert validate_instance(build_minifab(1, 9)).ok
    assert validate_instance(build_minifab(1, 9)).critical_path == 9
    report = validate_instance(build_minifab(1, 8))
    assert report.codes() == {"horizon_below_critical_path"}


def test_validate_reports_structural_problems():
    machines = (MachineDef(0, "M0", 1), MachineDef(0, "dup", 1))
    ops = (OperationDef(0, "empty", {}), OperationDef(1, "bad", {0: 0, 7: 1}))
    report = validate_instance(Instance(machines, ops, (0, 5), 1, 5))
    assert {"duplicate_machine_id", "no_eligible_machine", "nonpositive_process_time",
            "dangling_machine", "dangling_routing", "routing_coverage"} <= report.codes()
    assert not report.ok


def test_machine_def_rejects_negative_values():
    with pytest.raises(ValueError):
        MachineDef(0, "M", -1)
    with pytest.raises(ValueError):
        MachineDef(0, "M", 1, startup_h=-1)


def test_makespan_examples():
    inst = build_minifab(1)
    assert makespan(single_job_schedule(inst)) == 9
    assert makespan(ScheduleSolution()) == 0
    assert makespan(ScheduleSolution((Assignment(0, 0, 0, 16, 2),))) == 17


def test_makespan_is_order_invariant():
    rng = random.Random(3)
    rows = [Assignment(j, k, 0, rng.randint(1, 40), rng.randint(1, 3)) for j in range(4) for k in range(3)]
    base = makespan(ScheduleSolution(tuple(rows)))
    for _ in range(10):
        rng.shuffle(rows)
        assert makespan(ScheduleSolution(tuple(rows))) == base


def test_completion_uses_assigned_machine_time():
    ops = (OperationDef(0, "O", {0: 1, 1: 4}),)
    inst = Instance((MachineDef(0, "fast", 1), MachineDef(1, "slow", 1)), ops, (0,), 1, 10)
    assert assign(inst, 0, 0, 0, 2).completion == 2
    assert assign(inst, 0, 0, 1, 2).completion == 5


def test_instance_json_round_trip():
    inst = build_minifab(7, 30)
    again = Instance.from_json(inst.to_json())
    assert again == inst
    assert again.digest() == inst.digest()
    assert set(inst.to_dict()) == {"machines", "operations", "routing", "num_jobs", "horizon"}
    assert set(inst.to_dict()["machines"][0]) == {"id", "name", "power_kw", "startup_h", "min_on_h"}


def test_timeline_indicator_round_trip():
    tl = MachineTimeline.from_intervals(2, 12, [(1, 4), (8, 12)])
    assert tl.switch_on == (1, 8)
    assert tl.switch_off == (5,)
    assert tl.on_hours == 9
    assert MachineTimeline.from_indicator(2, tl.indicator()) == tl
    assert MachineTimeline.from_dict(tl.to_dict()) == tl
