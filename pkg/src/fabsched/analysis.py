"""Energy accounting, derived curves and text Gantt charts."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .model import Assignment, Instance, MachineTimeline, ScheduleSolution


@dataclass(frozen=True)
class MachineEnergy:
    machine: int
    name: str
    utilisation_hours: int
    energy_kwh: Fraction
    on_hours: int | None = None
    on_energy_kwh: Fraction | None = None


@dataclass(frozen=True)
class EnergyReport:
    machines: tuple[MachineEnergy, ...]
    total_kwh: Fraction
    on_time_kwh: Fraction | None = None

    def hours(self) -> dict[str, int]:
        return {m.name: m.utilisation_hours for m in self.machines}

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["machine", "utilisation_h", "energy_kwh", "on_h", "on_energy_kwh"])
        for m in self.machines:
            w.writerow(
                [
                    m.name,
                    m.utilisation_hours,
                    _fmt(m.energy_kwh),
                    "" if m.on_hours is None else m.on_hours,
                    "" if m.on_energy_kwh is None else _fmt(m.on_energy_kwh),
                ]
            )
        w.writerow(["TOTAL", sum(m.utilisation_hours for m in self.machines), _fmt(self.total_kwh), "",
                    "" if self.on_time_kwh is None else _fmt(self.on_time_kwh)])
        return buf.getvalue()


def _fmt(x: Fraction | float | int) -> str:
    return f"{float(x):.6f}".rstrip("0").rstrip(".") if x != 0 else "0"


def utilisation_energy(
    instance: Instance, solution: ScheduleSolution, timelines: Iterable[MachineTimeline] | None = None
) -> EnergyReport:
    """Per-machine busy hours times power rating, summed exactly.

    When ``timelines`` are given the report also carries on-time energy.
    """
    hours = {m.id: 0 for m in instance.machines}
    for a in solution.assignments:
        hours[a.machine] = hours.get(a.machine, 0) + a.duration
    on = None
    if timelines is not None:
        on = {tl.machine: tl.on_hours for tl in timelines}
    rows = []
    for m in instance.machines:
        e = hours[m.id] * m.power_kw
        if on is None:
            rows.append(MachineEnergy(m.id, m.name, hours[m.id], e))
        else:
            h = on.get(m.id, 0)
            rows.append(MachineEnergy(m.id, m.name, hours[m.id], e, h, h * m.power_kw))
    total = sum((r.energy_kwh for r in rows), Fraction(0))
    on_total = None if on is None else sum((r.on_energy_kwh for r in rows), Fraction(0))
    return EnergyReport(tuple(rows), total, on_total)


def total_energy(instance: Instance, solution: ScheduleSolution) -> Fraction:
    return utilisation_energy(instance, solution).total_kwh


def on_time_energy(instance: Instance, timelines: Iterable[MachineTimeline]) -> Fraction:
    """Sum over machines of switched-on hours (startup included) times power rating."""
    total = Fraction(0)
    for tl in timelines:
        total += tl.on_hours * instance.machine(tl.machine).power_kw
    return total


def all_on_timelines(instance: Instance, hours: int) -> list[MachineTimeline]:
    """Every machine on from hour 1 through ``hours``."""
    return [MachineTimeline.from_intervals(m.id, hours, [(1, hours)]) for m in instance.machines]


# -- curves --------------------------------------------------------------------


@dataclass(frozen=True)
class CurvePoint:
    x: Fraction
    y: Fraction
    series: str

    def __post_init__(self) -> None:
        for v in (self.x, self.y):
            if isinstance(v, float) and not math.isfinite(v):
                raise ValueError("curve points must be finite")


def energy_per_wafer_curve(
    points: Iterable[tuple[int, int, Fraction]], series: str = "energy_per_wafer", min_throughput: int = 2
) -> list[CurvePoint]:
    """``(makespan, throughput, energy)`` triples to energy-per-wafer points.

    Points with fewer than ``min_throughput`` wafers are dropped.
    """
    out = []
    for mk, tp, energy in points:
        if tp < max(1, min_throughput):
            continue
        out.append(CurvePoint(Fraction(mk), Fraction(energy) / tp, series))
    return sorted(out, key=lambda p: p.x)


def is_non_increasing(curve: Sequence[CurvePoint]) -> bool:
    return all(b.y <= a.y for a, b in zip(curve, curve[1:]))


def fit_slope(curve: Sequence[CurvePoint] | Sequence[tuple]) -> Fraction:
    """Ordinary least-squares slope, computed exactly."""
    pts = [(Fraction(p.x), Fraction(p.y)) if isinstance(p, CurvePoint) else (Fraction(p[0]), Fraction(p[1])) for p in curve]
    if len(pts) < 2:
        raise ValueError("need at least two points for a slope")
    n = len(pts)
    mx = sum(x for x, _ in pts) / n
    my = sum(y for _, y in pts) / n
    sxx = sum((x - mx) ** 2 for x, _ in pts)
    if sxx == 0:
        raise ValueError("degenerate x range")
    sxy = sum((x - mx) * (y - my) for x, y in pts)
    return sxy / sxx


def write_curve_csv(curve: Iterable[CurvePoint]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "y", "series"])
    for p in curve:
        w.writerow([_fmt(p.x), _fmt(p.y), p.series])
    return buf.getvalue()


# -- text Gantt ----------------------------------------------------------------

CELL = 3
IDLE = "."
STARTUP = "^"
BUSY = "#"
ON_IDLE = "-"
OFF = ""


def _label(instance: Instance, op: int, machine: int) -> str:
    return f"{instance.operation(op).name}@{instance.machine(machine).name}"


def render_gantt(
    instance: Instance,
    solution: ScheduleSolution,
    timelines: Iterable[MachineTimeline] | None = None,
    hours: int | None = None,
) -> str:
    """Fixed-width chart, one column per hour.

    Channel rows (operation@machine) show 1-based wafer numbers; wafer rows
    show the routing position (1-based) of the operation being processed;
    machine rows, when timelines are given, mark startup hours ``^``, busy
    hours ``#`` and idle on-hours ``-``.  The chart runs to the last busy or
    switched-on hour unless ``hours`` is given.
    """
    machine_rows = sorted(timelines or [], key=lambda tl: tl.machine)
    last_on = max((b for tl in machine_rows for _, b in tl.on_intervals), default=0)
    T = hours if hours is not None else max(solution.makespan, last_on)
    channels = [(k, m) for k in instance.routing for m in sorted(instance.operation(k).eligible)]
    labels = [_label(instance, k, m) for k, m in channels]
    wafers = sorted(solution.active_jobs)
    cell = max(CELL, len(str(T)) + 1, len(str(len(wafers) and wafers[-1] + 1)) + 1)
    width = max([len(s) for s in labels] + [len(f"wafer {j + 1}") for j in wafers] + [12])

    def row(label: str, cells: Sequence[str]) -> str:
        return f"{label:<{width}} |" + "".join(f"{s:>{cell}}" for s in cells)

    lines = [row("hour", [str(t) for t in range(1, T + 1)])]
    lines.append("-" * (width + 2 + cell * T))
    grid = {c: [IDLE] * T for c in channels}
    for a in solution.assignments:
        for t in a.hours:
            if 1 <= t <= T:
                grid[(a.op, a.machine)][t - 1] = str(a.job + 1)
    for c, label in zip(channels, labels):
        lines.append(row(label, grid[c]))

    if wafers:
        lines.append("")
        rows = {j: [IDLE] * T for j in wafers}
        for a in solution.assignments:
            pos = instance.position(a.op) + 1
            for t in a.hours:
                if 1 <= t <= T:
                    rows[a.job][t - 1] = str(pos)
        for j in wafers:
            lines.append(row(f"wafer {j + 1}", rows[j]))

    if machine_rows:
        lines.append("")
        busy: dict[int, set[int]] = {}
        for a in solution.assignments:
            busy.setdefault(a.machine, set()).update(a.hours)
        st = {m.id: m.startup_h for m in instance.machines}
        for tl in machine_rows:
            cells = [OFF] * T
            for a_, b_ in tl.on_intervals:
                for t in range(a_, min(b_, T) + 1):
                    if t < a_ + st[tl.machine]:
                        cells[t - 1] = STARTUP
                    elif t in busy.get(tl.machine, ()):
                        cells[t - 1] = BUSY
                    else:
                        cells[t - 1] = ON_IDLE
            lines.append(row(instance.machine(tl.machine).name, cells))
    return "\n".join(lines) + "\n"


def parse_gantt(instance: Instance, text: str) -> ScheduleSolution:
    """Recover the assignment set from the channel rows of :func:`render_gantt`."""
    channel_by_label = {
        _label(instance, k, m): (k, m) for k in instance.routing for m in instance.operation(k).eligible
    }
    assignments: list[Assignment] = []
    cell = CELL
    for line in text.splitlines():
        if "|" not in line:
            continue
        label, _, body = line.partition(" |")
        if label.strip() == "hour":
            hours = body.split()
            cell = len(body) // len(hours) if hours else CELL
            continue
        key = channel_by_label.get(label.rstrip())
        if key is None:
            continue
        cells = [body[i:i + cell].strip() for i in range(0, len(body), cell)]
        run_job, run_start = None, 0
        for t, c in enumerate(cells + ["."], start=1):
            job = int(c) - 1 if c.isdigit() else None
            if job != run_job:
                if run_job is not None:
                    assignments.append(Assignment(run_job, key[0], key[1], run_start, t - run_start))
                run_job, run_start = job, t
    return ScheduleSolution(tuple(assignments))


@dataclass(frozen=True)
class WaferTrace:
    wafer: int
    start: int
    completion: int
    waits: tuple[int, ...]  # idle hours before each routed operation after the first

    @property
    def elapsed(self) -> int:
        return self.completion - self.start + 1


def wafer_traces(instance: Instance, solution: ScheduleSolution) -> list[WaferTrace]:
    out = []
    for j, rows in solution.by_job().items():
        rows = sorted(rows, key=lambda a: instance.position(a.op))
        if not rows:
            continue
        waits = tuple(b.start - a.completion - 1 for a, b in zip(rows, rows[1:]))
        out.append(WaferTrace(j + 1, rows[0].start, rows[-1].completion, waits))
    return out
