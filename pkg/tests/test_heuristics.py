from __future__ import annotations

from fractions import Fraction

import pytest

from fabsched.formulation import ModelConfig, check_solution
from fabsched.heuristics import POLICIES, FifoConfig, fifo_solve, fifo_sweep, fifo_sweep_csv, policy_instance
from fabsched.model import build_minifab
from fabsched.solver import INFEASIBLE, Objective, solve

FLOOR = Fraction("0.63")
CEILING = Fraction("0.86")


def assert_fifo_order(solution):
    by_op: dict[int, list] = {}
    for a in solution.assignments:
        by_op.setdefault(a.op, []).append(a)
    for rows in by_op.values():
        rows.sort(key=lambda a: a.job)
        for prev, nxt in zip(rows, rows[1:]):
            assert nxt.start >= prev.start + prev.duration
        # completions follow release order too
        assert [a.completion for a in rows] == sorted(a.completion for a in rows)


@pytest.mark.parametrize("policy,energy", [("cheapest", "23.31"), ("most_expensive", "31.82"), ("solver_free", "23.31")])
def test_thirty_seven_wafers_at_81_hours(policy, energy):
    res = fifo_solve(build_minifab(37), FifoConfig(37, 81, policy))
    assert res.feasible
    assert res.makespan == 81
    assert res.energy == Fraction(energy)
    assert_fifo_order(res.solution)
    inst = build_minifab(37, 81)
    assert check_solution(inst, ModelConfig(fifo=True, fixed_throughput=37), res.solution) == []


@pytest.mark.parametrize("policy", POLICIES)
@pytest.mark.parametrize("wafers", [1, 2, 5, 12])
def test_energy_bracket_and_order(policy, wafers):
    horizon = 2 * wafers + 7
    res = fifo_solve(build_minifab(wafers), FifoConfig(wafers, horizon, policy))
    assert res.feasible
    assert FLOOR * wafers <= res.energy <= CEILING * wafers
    assert_fifo_order(res.solution)


def test_single_wafer_matches_the_optimum():
    res = fifo_solve(build_minifab(1), FifoConfig(1, 20))
    opt = solve(build_minifab(1, 20), ModelConfig(), Objective.makespan())
    assert res.makespan == opt.makespan == 9


def test_short_horizon_is_infeasible():
    res = fifo_solve(build_minifab(5), FifoConfig(5, 16))
    assert res.status == INFEASIBLE


def test_config_validation():
    with pytest.raises(ValueError):
        FifoConfig(0, 10)
    with pytest.raises(ValueError):
        FifoConfig(3, 10, "random")


def test_policy_instances_restrict_eligibility():
    inst = build_minifab(1)
    cheap = policy_instance(inst, "cheapest")
    dear = policy_instance(inst, "most_expensive")
    assert {k: set(cheap.operation(k).eligible) for k in cheap.routing} == {0: {0}, 1: {2}, 2: {4}, 3: {2}, 4: {0}, 5: {4}}
    assert {k: set(dear.operation(k).eligible) for k in dear.routing} == {0: {1}, 1: {3}, 2: {4}, 3: {3}, 4: {1}, 5: {4}}
    assert policy_instance(inst, "solver_free") is inst


def test_sweep_stays_inside_the_bracket():
    pts = fifo_sweep(build_minifab(37), 37, range(81, 106))
    assert [p.horizon for p in pts] == list(range(81, 106))
    for p in pts:
        assert Fraction("23.31") <= p.energy <= Fraction("31.82")


def test_reduction_potential():
    dear = fifo_solve(build_minifab(37), FifoConfig(37, 81, "most_expensive")).energy
    cheap = fifo_solve(build_minifab(37), FifoConfig(37, 81, "cheapest")).energy
    assert abs(float((dear - cheap) / dear) - 0.2672) < 0.001
    assert abs(float((dear - cheap) / cheap) - 0.3646) < 0.001


def test_sweep_reports_short_horizons_and_csv():
    pts = fifo_sweep(build_minifab(37), 37, [80, 81])
    assert pts[0].status == INFEASIBLE and pts[0].energy is None
    lines = fifo_sweep_csv(pts).splitlines()
    assert lines == ["horizon_h,energy_kwh,makespan_h", "80,,", "81,23.31,81"]


def test_single_horizon_sweep():
    assert len(fifo_sweep(build_minifab(37), 37, [81])) == 1
