"""Feasibility semantics of the time-indexed model.

``check_solution`` is the single definition of a feasible schedule; the
solver, the brute-force oracle and the FIFO construction are all judged
against it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

from .analysis import on_time_energy, utilisation_energy
from .model import Assignment, Instance, MachineTimeline, ScheduleSolution, to_fraction

TASK_CHANNEL = "task_channel"
STRICT_MACHINE = "strict_machine"
CAPACITY_MODES = (TASK_CHANNEL, STRICT_MACHINE)


@dataclass(frozen=True)
class ModelConfig:
    capacity_mode: str = TASK_CHANNEL
    dynamic_switching: bool = False
    fifo: bool = False
    symmetry_breaking: bool = True
    fixed_throughput: int | None = None
    energy_cap: Fraction | None = None
    makespan_cap: int | None = None
    # jobs may be left unprocessed (throughput maximisation)
    variable_throughput: bool = False
    # every machine, used or not, is switched on at t=1
    all_on_at_start: bool = False

    def __post_init__(self) -> None:
        if self.capacity_mode not in CAPACITY_MODES:
            raise ValueError(f"capacity_mode must be one of {CAPACITY_MODES}")
        if self.fifo and not self.symmetry_breaking:
            object.__setattr__(self, "symmetry_breaking", True)
        if self.energy_cap is not None:
            object.__setattr__(self, "energy_cap", to_fraction(self.energy_cap))
            if self.energy_cap < 0:
                raise ValueError("energy_cap must be non-negative")
        if self.makespan_cap is not None and self.makespan_cap < 0:
            raise ValueError("makespan_cap must be non-negative")
        if self.fixed_throughput is not None and self.fixed_throughput < 0:
            raise ValueError("fixed_throughput must be non-negative")

    def to_dict(self) -> dict:
        return {
            "capacity_mode": self.capacity_mode,
            "dynamic_switching": self.dynamic_switching,
            "fifo": self.fifo,
            "symmetry_breaking": self.symmetry_breaking,
            "fixed_throughput": self.fixed_throughput,
            "energy_cap": None if self.energy_cap is None else str(self.energy_cap),
            "makespan_cap": self.makespan_cap,
            "variable_throughput": self.variable_throughput,
            "all_on_at_start": self.all_on_at_start,
        }


# constraint tags reported by check_solution
KINDS = {
    "index": "malformed job/operation/machine reference",
    "assignment_once": "each active job runs each operation exactly once",
    "throughput": "number of active jobs",
    "eligibility": "operation runs only on an eligible machine with its process time",
    "horizon": "assignment inside the time grid",
    "capacity": "unary capacity per channel",
    "precedence": "successor starts after predecessor completes",
    "symmetry": "identical jobs start each operation in index order",
    "makespan_cap": "makespan bound",
    "energy_cap": "energy bound",
    "startup": "no processing during start-up after a switch-on",
    "machine_off": "machine on while processing",
    "switch_on_event": "off-to-on transition needs a switch-on",
    "switch_off_event": "on-to-off transition needs a switch-off",
    "switch_on_while_on": "switch-on only from the off state",
    "switch_exclusive": "switch-on and switch-off never coincide",
    "state_update": "state follows switching events",
    "switch_off_busy": "no switch-off while an operation is running",
    "min_on": "minimum on time before a switch-off",
    "initial_on": "machines switched on at t=1",
    "fifo": "first in, first out per operation",
}


@dataclass(frozen=True)
class Violation:
    kind: str
    subjects: tuple
    message: str

    def to_json(self) -> str:
        return json.dumps({"kind": self.kind, "subjects": list(self.subjects), "message": self.message})


def occupancy(instance: Instance, solution: ScheduleSolution) -> dict[tuple[int, int], list[tuple[int, int]]]:
    """Busy intervals ``[start, completion]`` keyed by ``(operation, machine)``."""
    out: dict[tuple[int, int], list[tuple[int, int]]] = {}
    for a in solution.assignments:
        out.setdefault((a.op, a.machine), []).append((a.start, a.completion))
    for v in out.values():
        v.sort()
    return out


def machine_busy_hours(instance: Instance, solution: ScheduleSolution) -> dict[int, set[int]]:
    """Union of occupied hours per machine (channels of one machine may overlap)."""
    busy: dict[int, set[int]] = {m.id: set() for m in instance.machines}
    for a in solution.assignments:
        busy.setdefault(a.machine, set()).update(a.hours)
    return busy


def _overlaps(rows: list[Assignment]) -> Iterable[tuple[Assignment, Assignment]]:
    rows = sorted(rows, key=lambda a: (a.start, a.job, a.op))
    for i, a in enumerate(rows):
        for b in rows[i + 1:]:
            if b.start > a.completion:
                break
            yield a, b


def check_solution(
    instance: Instance,
    config: ModelConfig,
    solution: ScheduleSolution,
    timelines: Iterable[MachineTimeline] | Mapping[int, MachineTimeline] | None = None,
) -> list[Violation]:
    """Every constraint the schedule breaks; empty iff feasible."""
    out: list[Violation] = []
    add = lambda kind, subjects, msg: out.append(Violation(kind, tuple(subjects), msg))  # noqa: E731

    valid: list[Assignment] = []
    for a in solution.assignments:
        if not (0 <= a.job < instance.num_jobs) or not instance.has_operation(a.op) or not instance.has_machine(a.machine):
            add("index", a, f"unknown job/operation/machine in {tuple(a)}")
            continue
        if a.op not in instance.routing:
            add("index", a, f"operation {a.op} is not routed")
            continue
        valid.append(a)

    active = sorted(j for j in solution.active_jobs if 0 <= j < instance.num_jobs)
    for j in solution.active_jobs:
        if not 0 <= j < instance.num_jobs:
            add("index", (j,), f"active job {j} out of range")

    if config.fixed_throughput is not None:
        if len(active) != config.fixed_throughput:
            add("throughput", (len(active),), f"{len(active)} active jobs, expected {config.fixed_throughput}")
    elif not config.variable_throughput and len(active) != instance.num_jobs:
        add("throughput", (len(active),), f"{len(active)} active jobs, expected all {instance.num_jobs}")

    # every active job runs every routed operation once
    seen: dict[tuple[int, int], Assignment] = {}
    for a in valid:
        if (a.job, a.op) in seen:
            add("assignment_once", (a.job, a.op), f"job {a.job} runs operation {a.op} more than once")
        seen[(a.job, a.op)] = a
    for j in active:
        for k in instance.routing:
            if (j, k) not in seen:
                add("assignment_once", (j, k), f"active job {j} never runs operation {k}")

    # eligibility plus the duration bookkeeping
    for a in valid:
        p = instance.operation(a.op).eligible.get(a.machine)
        if p is None or p <= 0:
            add("eligibility", a, f"machine {a.machine} is not eligible for operation {a.op}")
        elif a.duration != p:
            add("eligibility", a, f"duration {a.duration} differs from p={p} on machine {a.machine}")

    for a in valid:
        if a.start < 1 or a.completion > instance.horizon:
            add("horizon", a, f"hours {a.start}..{a.completion} outside 1..{instance.horizon}")
        if config.makespan_cap is not None and a.completion > config.makespan_cap:
            add("makespan_cap", a, f"completion {a.completion} exceeds makespan cap {config.makespan_cap}")

    # unary capacity
    groups: dict[tuple, list[Assignment]] = {}
    for a in valid:
        key = (a.op, a.machine) if config.capacity_mode == TASK_CHANNEL else (a.machine,)
        groups.setdefault(key, []).append(a)
    for key, rows in groups.items():
        for a, b in _overlaps(rows):
            add("capacity", (a, b), f"jobs {a.job} and {b.job} overlap on {key}")

    # routing precedence
    for j in active:
        chain = [seen.get((j, k)) for k in instance.routing]
        for prev, nxt in zip(chain, chain[1:]):
            if prev is not None and nxt is not None and nxt.start <= prev.completion:
                add("precedence", (prev, nxt), f"job {j}: operation {nxt.op} starts at {nxt.start} "
                    f"before operation {prev.op} completes at {prev.completion}")

    # symmetry breaking and FIFO over consecutive active jobs
    if config.symmetry_breaking or config.fifo:
        for jp, j in zip(active, active[1:]):
            for k in instance.routing:
                a, b = seen.get((jp, k)), seen.get((j, k))
                if a is None or b is None:
                    continue
                if config.symmetry_breaking and b.start < a.start:
                    add("symmetry", (a, b), f"job {j} starts operation {k} before job {jp}")
                if config.fifo and b.start < a.start + a.duration:
                    add("fifo", (a, b), f"job {j} starts operation {k} at {b.start} before job {jp} finishes it")

    tl_list = None
    if timelines is not None:
        tl_list = list(timelines.values()) if isinstance(timelines, Mapping) else list(timelines)
        out.extend(_check_timelines(instance, config, valid, tl_list))

    if config.energy_cap is not None:
        if config.dynamic_switching and tl_list is not None:
            energy = on_time_energy(instance, tl_list)
        else:
            energy = utilisation_energy(instance, ScheduleSolution(tuple(valid))).total_kwh
        if energy > config.energy_cap:
            add("energy_cap", (str(energy),), f"energy {float(energy):g} exceeds cap {float(config.energy_cap):g}")
    return out


def _check_timelines(
    instance: Instance, config: ModelConfig, valid: list[Assignment], timelines: list[MachineTimeline]
) -> list[Violation]:
    out: list[Violation] = []
    add = lambda kind, subjects, msg: out.append(Violation(kind, tuple(subjects), msg))  # noqa: E731
    T = instance.horizon
    by_machine = {tl.machine: tl for tl in timelines}
    used = {a.machine for a in valid}

    for m in instance.machines:
        tl = by_machine.get(m.id)
        o = [0] * (T + 2)
        u = [0] * (T + 2)
        v = [0] * (T + 2)
        if tl is not None:
            for a_, b_ in tl.on_intervals:
                for t in range(max(a_, 1), min(b_, T) + 1):
                    o[t] = 1
            for t in tl.switch_on:
                if 1 <= t <= T:
                    u[t] = 1
            for t in tl.switch_off:
                if 1 <= t <= T:
                    v[t] = 1
        for t in range(1, T + 1):
            if o[t] - o[t - 1] > u[t]:
                add("switch_on_event", (m.id, t), f"{m.name} turns on at {t} without a switch-on")
            if o[t - 1] - o[t] > v[t]:
                add("switch_off_event", (m.id, t), f"{m.name} turns off at {t} without a switch-off")
            if u[t] + o[t - 1] > 1:
                add("switch_on_while_on", (m.id, t), f"{m.name} switched on at {t} while already on")
            if u[t] + v[t] > 1:
                add("switch_exclusive", (m.id, t), f"{m.name} switched on and off at {t}")
            if o[t] != o[t - 1] + u[t] - v[t]:
                add("state_update", (m.id, t), f"{m.name} state at {t} inconsistent with events")

        if (config.all_on_at_start or m.id in used) and not u[1]:
            add("initial_on", (m.id,), f"{m.name} is not switched on at t=1")

        # each run closed by a switch-off lasts at least z hours
        run = 0
        for t in range(1, T + 1):
            if v[t] and run < m.min_on_h:
                add("min_on", (m.id, t), f"{m.name} switched off at {t} after {run} on-hours (< {m.min_on_h})")
            run = run + 1 if o[t] else 0

        rows = [a for a in valid if a.machine == m.id]
        for a in rows:
            for t in a.hours:
                if 1 <= t <= T and not o[t]:
                    add("machine_off", (a, t), f"{m.name} is off at {t} while running job {a.job}")
            # start-up: switch-on within (start - st, start]
            for t in range(max(1, a.start - m.startup_h + 1), min(a.start, T) + 1):
                if u[t]:
                    add("startup", (a, t), f"{m.name} switched on at {t}, cannot start job {a.job} at {a.start}")
            # no switch-off during an operation
            for t in a.hours:
                if 1 <= t <= T and v[t]:
                    add("switch_off_busy", (a, t), f"{m.name} switched off at {t} during job {a.job}")
    return out
