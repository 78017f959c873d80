"""Problem data for the discrete-time flexible job shop.

Time is an integer hour grid ``1..T``.  An operation that starts at hour
``t`` with process time ``p`` occupies hours ``t .. t + p - 1`` and its
completion is the last occupied hour.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import cached_property
from typing import Any, Iterable, Mapping, NamedTuple, Sequence


def to_fraction(value: Any) -> Fraction:
    """Exact rational from an int, Fraction, decimal string or float (via its repr)."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        return Fraction(repr(value))
    return Fraction(value)


@dataclass(frozen=True)
class MachineDef:
    id: int
    name: str
    power_kw: Fraction
    startup_h: int = 0
    min_on_h: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "power_kw", to_fraction(self.power_kw))
        if self.power_kw < 0 or self.startup_h < 0 or self.min_on_h < 0:
            raise ValueError(f"machine {self.name!r}: power, startup and min-on must be non-negative")


@dataclass(frozen=True)
class OperationDef:
    id: int
    name: str
    eligible: Mapping[int, int]  # machine id -> process hours

    def __post_init__(self) -> None:
        object.__setattr__(self, "eligible", {int(m): int(p) for m, p in self.eligible.items()})

    def process_time(self, machine: int) -> int:
        try:
            return self.eligible[machine]
        except KeyError:
            raise ValueError(f"machine {machine} is not eligible for operation {self.name!r}") from None

    @property
    def min_process_time(self) -> int:
        return min(self.eligible.values())


@dataclass(frozen=True)
class Instance:
    machines: tuple[MachineDef, ...]
    operations: tuple[OperationDef, ...]
    routing: tuple[int, ...]
    num_jobs: int
    horizon: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "machines", tuple(self.machines))
        object.__setattr__(self, "operations", tuple(self.operations))
        object.__setattr__(self, "routing", tuple(int(k) for k in self.routing))

    @cached_property
    def _machine_by_id(self) -> dict[int, MachineDef]:
        return {m.id: m for m in self.machines}

    @cached_property
    def _op_by_id(self) -> dict[int, OperationDef]:
        return {o.id: o for o in self.operations}

    @cached_property
    def _position(self) -> dict[int, int]:
        return {k: r for r, k in enumerate(self.routing)}

    def machine(self, machine_id: int) -> MachineDef:
        return self._machine_by_id[machine_id]

    def operation(self, op_id: int) -> OperationDef:
        return self._op_by_id[op_id]

    def has_machine(self, machine_id: int) -> bool:
        return machine_id in self._machine_by_id

    def has_operation(self, op_id: int) -> bool:
        return op_id in self._op_by_id

    def position(self, op_id: int) -> int:
        """Index of an operation along the routing."""
        return self._position[op_id]

    def routed_operations(self) -> list[OperationDef]:
        return [self.operation(k) for k in self.routing]

    def critical_path(self) -> int:
        """Single-job lower bound: sum of the fastest eligible time per routed operation."""
        return sum(self.operation(k).min_process_time for k in self.routing)

    def with_jobs(self, num_jobs: int) -> "Instance":
        return replace(self, num_jobs=num_jobs)

    def with_horizon(self, horizon: int) -> "Instance":
        return replace(self, horizon=horizon)

    def restrict(self, eligible: Mapping[int, Iterable[int]]) -> "Instance":
        """Copy with each listed operation limited to the given machines."""
        ops = []
        for op in self.operations:
            keep = set(eligible.get(op.id, op.eligible))
            ops.append(OperationDef(op.id, op.name, {m: p for m, p in op.eligible.items() if m in keep}))
        return replace(self, operations=tuple(ops))

    def to_dict(self) -> dict:
        return {
            "machines": [
                {
                    "id": m.id,
                    "name": m.name,
                    "power_kw": float(m.power_kw),
                    "startup_h": m.startup_h,
                    "min_on_h": m.min_on_h,
                }
                for m in self.machines
            ],
            "operations": [
                {"id": o.id, "name": o.name, "eligible": {str(m): p for m, p in sorted(o.eligible.items())}}
                for o in self.operations
            ],
            "routing": list(self.routing),
            "num_jobs": self.num_jobs,
            "horizon": self.horizon,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "Instance":
        machines = tuple(
            MachineDef(
                id=int(m["id"]),
                name=str(m["name"]),
                power_kw=to_fraction(m["power_kw"]),
                startup_h=int(m.get("startup_h", 0)),
                min_on_h=int(m.get("min_on_h", 0)),
            )
            for m in data["machines"]
        )
        operations = tuple(
            OperationDef(int(o["id"]), str(o["name"]), {int(k): int(v) for k, v in o["eligible"].items()})
            for o in data["operations"]
        )
        return cls(machines, operations, tuple(data["routing"]), int(data["num_jobs"]), int(data["horizon"]))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> "Instance":
        return cls.from_dict(json.loads(text))

    def digest(self) -> str:
        """sha256 of the canonical JSON form."""
        return hashlib.sha256(self.to_json().encode()).hexdigest()


class Assignment(NamedTuple):
    job: int
    op: int
    machine: int
    start: int
    duration: int

    @property
    def completion(self) -> int:
        return self.start + self.duration - 1

    @property
    def hours(self) -> range:
        return range(self.start, self.start + self.duration)


def assign(instance: Instance, job: int, op: int, machine: int, start: int) -> Assignment:
    """Assignment with the duration taken from the instance's process-time table."""
    return Assignment(job, op, machine, start, instance.operation(op).process_time(machine))


@dataclass(frozen=True)
class ScheduleSolution:
    assignments: tuple[Assignment, ...] = ()
    active_jobs: frozenset[int] = frozenset()

    def __post_init__(self) -> None:
        assignments = tuple(sorted(Assignment(*a) for a in self.assignments))
        object.__setattr__(self, "assignments", assignments)
        jobs = frozenset(self.active_jobs) | {a.job for a in assignments}
        object.__setattr__(self, "active_jobs", jobs)

    @property
    def makespan(self) -> int:
        return makespan(self)

    @property
    def throughput(self) -> int:
        return len(self.active_jobs)

    def by_job(self) -> dict[int, list[Assignment]]:
        out: dict[int, list[Assignment]] = {j: [] for j in sorted(self.active_jobs)}
        for a in self.assignments:
            out[a.job].append(a)
        for rows in out.values():
            rows.sort(key=lambda a: (a.start, a.op))
        return out

    def lookup(self) -> dict[tuple[int, int], Assignment]:
        return {(a.job, a.op): a for a in self.assignments}

    def to_list(self) -> list[dict]:
        return [a._asdict() for a in self.assignments]


def makespan(solution: ScheduleSolution) -> int:
    """Last occupied hour over all assignments; 0 when empty."""
    return max((a.completion for a in solution.assignments), default=0)


@dataclass(frozen=True)
class MachineTimeline:
    """On/off plan of one machine over hours ``1..horizon``.

    ``switch_on`` holds hours with u=1 and ``switch_off`` hours with v=1
    (the machine is off from that hour).  A run that lasts until the
    horizon has no switch-off event.
    """

    machine: int
    horizon: int
    on_intervals: tuple[tuple[int, int], ...] = ()
    switch_on: tuple[int, ...] = ()
    switch_off: tuple[int, ...] = ()

    @classmethod
    def from_intervals(cls, machine: int, horizon: int, intervals: Iterable[tuple[int, int]]) -> "MachineTimeline":
        runs = tuple(sorted((int(a), int(b)) for a, b in intervals))
        ons = tuple(a for a, _ in runs)
        offs = tuple(b + 1 for _, b in runs if b < horizon)
        return cls(machine, horizon, runs, ons, offs)

    @classmethod
    def from_indicator(cls, machine: int, on: Sequence[int]) -> "MachineTimeline":
        """Build from a 0/1 list indexed by hour-1."""
        runs, start = [], None
        for t, o in enumerate(on, start=1):
            if o and start is None:
                start = t
            elif not o and start is not None:
                runs.append((start, t - 1))
                start = None
        if start is not None:
            runs.append((start, len(on)))
        return cls.from_intervals(machine, len(on), runs)

    def indicator(self) -> list[int]:
        on = [0] * self.horizon
        for a, b in self.on_intervals:
            for t in range(max(a, 1), min(b, self.horizon) + 1):
                on[t - 1] = 1
        return on

    @property
    def on_hours(self) -> int:
        return sum(b - a + 1 for a, b in self.on_intervals)

    def to_dict(self) -> dict:
        return {
            "machine": self.machine,
            "horizon": self.horizon,
            "on_intervals": [list(iv) for iv in self.on_intervals],
            "switch_on": list(self.switch_on),
            "switch_off": list(self.switch_off),
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "MachineTimeline":
        return cls(
            int(data["machine"]),
            int(data["horizon"]),
            tuple((int(a), int(b)) for a, b in data["on_intervals"]),
            tuple(int(t) for t in data["switch_on"]),
            tuple(int(t) for t in data["switch_off"]),
        )


# -- instance construction ---------------------------------------------------


@dataclass(frozen=True)
class Workstation:
    name: str
    machines: tuple[int, ...]
    visits: int = 1


def expand_stn(
    workstations: Sequence[Workstation | Mapping[str, Any]],
    visit_times: Mapping[tuple[str, int], int | Mapping[int, int]],
    order: Sequence[tuple[str, int]],
) -> tuple[tuple[OperationDef, ...], tuple[int, ...]]:
    """Split re-entrant workstations into one operation per visit.

    ``visit_times[(name, v)]`` is the process time of visit ``v`` (1-based),
    either one number for every machine of the station or a per-machine
    mapping.  ``order`` lists the ``(name, v)`` visits along the route; each
    visit becomes an operation named ``f"{name}{v}"`` whose eligible set is
    the station's machine set.
    """
    stations: dict[str, Workstation] = {}
    for ws in workstations:
        if not isinstance(ws, Workstation):
            ws = Workstation(str(ws["name"]), tuple(ws["machines"]), int(ws.get("visits", 1)))
        if ws.visits < 1:
            raise ValueError(f"workstation {ws.name!r} needs at least one visit")
        if ws.name in stations:
            raise ValueError(f"duplicate workstation {ws.name!r}")
        stations[ws.name] = ws

    defined = {(name, v) for name, ws in stations.items() for v in range(1, ws.visits + 1)}
    seen: set[tuple[str, int]] = set()
    for visit in order:
        visit = (visit[0], int(visit[1]))
        if visit not in defined:
            raise ValueError(f"visit order references undefined visit {visit!r}")
        if visit in seen:
            raise ValueError(f"visit {visit!r} appears twice in the order")
        seen.add(visit)
    if seen != defined:
        missing = sorted(defined - seen)
        raise ValueError(f"visit order omits {missing!r}")

    operations = []
    for op_id, (name, v) in enumerate(order):
        ws = stations[name]
        times = visit_times[(name, int(v))]
        if isinstance(times, Mapping):
            eligible = {int(m): int(times[m]) for m in ws.machines}
        else:
            eligible = {int(m): int(times) for m in ws.machines}
        operations.append(OperationDef(op_id, f"{name}{v}", eligible))
    return tuple(operations), tuple(range(len(operations)))


MINIFAB_MACHINES = (
    MachineDef(0, "Diffuser1", Fraction("0.01"), startup_h=1, min_on_h=6),
    MachineDef(1, "Diffuser2", Fraction("0.02"), startup_h=1, min_on_h=6),
    MachineDef(2, "Implanter1", Fraction("0.1"), startup_h=2, min_on_h=4),
    MachineDef(3, "Implanter2", Fraction("0.2"), startup_h=2, min_on_h=4),
    MachineDef(4, "Lithographer", Fraction("0.1"), startup_h=1, min_on_h=8),
)


def default_horizon(operations: Sequence[OperationDef], num_jobs: int) -> int:
    """A horizon long enough to run every job back to back on the slowest machines."""
    return max(1, num_jobs) * sum(max(o.eligible.values()) for o in operations)


def build_minifab(num_jobs: int = 5, horizon: int | None = None) -> Instance:
    """Six-step, five-machine Minifab with each workstation visited twice."""
    stations = [
        Workstation("Diffusion", (0, 1), visits=2),
        Workstation("Implantation", (2, 3), visits=2),
        Workstation("Lithography", (4,), visits=2),
    ]
    times = {
        ("Diffusion", 1): 2,
        ("Implantation", 1): 1,
        ("Lithography", 1): 2,
        ("Implantation", 2): 1,
        ("Diffusion", 2): 1,
        ("Lithography", 2): 2,
    }
    order = [
        ("Diffusion", 1),
        ("Implantation", 1),
        ("Lithography", 1),
        ("Implantation", 2),
        ("Diffusion", 2),
        ("Lithography", 2),
    ]
    operations, routing = expand_stn(stations, times, order)
    if horizon is None:
        horizon = default_horizon(operations, num_jobs)
    return Instance(MINIFAB_MACHINES, operations, routing, num_jobs, horizon)


# -- validation ----------------------------------------------------------------


@dataclass(frozen=True)
class Issue:
    code: str
    message: str


@dataclass(frozen=True)
class ValidationReport:
    issues: tuple[Issue, ...] = ()
    critical_path: int | None = None

    @property
    def ok(self) -> bool:
        return not self.issues

    def codes(self) -> set[str]:
        return {i.code for i in self.issues}


def validate_instance(instance: Instance) -> ValidationReport:
    """Collect structural problems; never raises."""
    issues: list[Issue] = []

    machine_ids = [m.id for m in instance.machines]
    if len(set(machine_ids)) != len(machine_ids):
        issues.append(Issue("duplicate_machine_id", f"machine ids repeat: {machine_ids}"))
    if sorted(set(machine_ids)) != list(range(len(set(machine_ids)))):
        issues.append(Issue("sparse_machine_ids", f"machine ids are not 0..M-1: {sorted(machine_ids)}"))
    op_ids = [o.id for o in instance.operations]
    if len(set(op_ids)) != len(op_ids):
        issues.append(Issue("duplicate_operation_id", f"operation ids repeat: {op_ids}"))

    known_ops = set(op_ids)
    known_machines = set(machine_ids)
    for k in instance.routing:
        if k not in known_ops:
            issues.append(Issue("dangling_routing", f"routing references undefined operation {k}"))
    counts = {k: instance.routing.count(k) for k in known_ops}
    for k, c in sorted(counts.items()):
        if c != 1:
            issues.append(Issue("routing_coverage", f"operation {k} appears {c} times in routing"))

    for op in instance.operations:
        if not op.eligible:
            issues.append(Issue("no_eligible_machine", f"operation {op.name!r} has no eligible machine"))
        for m, p in op.eligible.items():
            if m not in known_machines:
                issues.append(Issue("dangling_machine", f"operation {op.name!r} lists undefined machine {m}"))
            if p <= 0:
                issues.append(Issue("nonpositive_process_time", f"operation {op.name!r} on machine {m}: p={p}"))

    if instance.num_jobs < 0:
        issues.append(Issue("negative_jobs", f"num_jobs={instance.num_jobs}"))
    if instance.horizon < 1:
        issues.append(Issue("nonpositive_horizon", f"horizon={instance.horizon}"))

    critical = None
    routed_ok = all(k in known_ops and instance.operation(k).eligible for k in instance.routing)
    if routed_ok and not any(i.code == "duplicate_operation_id" for i in issues):
        critical = instance.critical_path()
        if instance.horizon < critical:
            issues.append(
                Issue("horizon_below_critical_path", f"horizon {instance.horizon} < single-job critical path {critical}")
            )
    return ValidationReport(tuple(issues), critical)
