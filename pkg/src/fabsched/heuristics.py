"""FIFO dispatch construction and the FIFO energy study."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

from .analysis import _fmt
from .formulation import ModelConfig
from .model import Instance
from .objectives import _map
from .solver import Objective, SolveResult, solve

POLICIES = ("solver_free", "cheapest", "most_expensive")


@dataclass(frozen=True)
class FifoConfig:
    throughput: int
    horizon: int
    machine_policy: str = "solver_free"

    def __post_init__(self) -> None:
        if self.throughput < 1:
            raise ValueError("throughput must be at least 1")
        if self.machine_policy not in POLICIES:
            raise ValueError(f"machine_policy must be one of {POLICIES}")


def policy_instance(instance: Instance, policy: str) -> Instance:
    """Restrict every operation to its cheapest or dearest machines (by power rating)."""
    if policy == "solver_free":
        return instance
    pick = min if policy == "cheapest" else max
    keep = {}
    for op in instance.operations:
        target = pick(instance.machine(m).power_kw for m in op.eligible)
        keep[op.id] = [m for m in op.eligible if instance.machine(m).power_kw == target]
    return instance.restrict(keep)


def fifo_solve(instance: Instance, fifo_config: FifoConfig, time_limit: float | None = None) -> SolveResult:
    """First FIFO-feasible schedule found by the deterministic depth-first search.

    There is no objective: the search takes the earliest-completing channel
    (ties to the lower machine id) and stops at the first complete schedule.
    """
    inst = instance.with_horizon(fifo_config.horizon)
    if inst.num_jobs < fifo_config.throughput:
        inst = inst.with_jobs(fifo_config.throughput)
    inst = policy_instance(inst, fifo_config.machine_policy)
    cfg = ModelConfig(fifo=True, fixed_throughput=fifo_config.throughput)
    return solve(inst, cfg, Objective.feasibility(), time_limit, order="makespan")


@dataclass(frozen=True)
class FifoPoint:
    horizon: int
    energy: Fraction | None
    makespan: int | None
    status: str


def _fifo_point(args) -> FifoPoint:
    instance, throughput, horizon, policy, time_limit = args
    res = fifo_solve(instance, FifoConfig(throughput, horizon, policy), time_limit)
    if not res.feasible:
        return FifoPoint(horizon, None, None, res.status)
    return FifoPoint(horizon, res.energy, res.makespan, res.status)


def fifo_sweep(
    instance: Instance,
    throughput: int,
    horizons: Iterable[int],
    *,
    policy: str = "solver_free",
    time_limit: float | None = None,
    workers: int = 1,
) -> list[FifoPoint]:
    """One :func:`fifo_solve` per horizon; infeasible horizons come back with no energy."""
    jobs = [(instance, throughput, h, policy, time_limit) for h in horizons]
    return sorted(_map(_fifo_point, jobs, workers), key=lambda p: p.horizon)


def fifo_sweep_csv(points: Iterable[FifoPoint]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["horizon_h", "energy_kwh", "makespan_h"])
    for p in points:
        w.writerow([p.horizon, "" if p.energy is None else _fmt(p.energy), "" if p.makespan is None else p.makespan])
    return buf.getvalue()
