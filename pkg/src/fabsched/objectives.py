"""Multi-objective drivers: epsilon-constraint sweeps, weighted sums, throughput sweeps."""

from __future__ import annotations

import csv
import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable, Iterable, Sequence

from .analysis import _fmt
from .formulation import ModelConfig
from .model import Instance
from .solver import INFEASIBLE, Objective, SolveResult, solve


@dataclass(frozen=True)
class ParetoPoint:
    makespan: int
    energy: Fraction
    throughput: int
    witness: SolveResult | None = field(default=None, compare=False, repr=False)

    def dominates(self, other: "ParetoPoint") -> bool:
        a = (self.makespan, self.energy, -self.throughput)
        b = (other.makespan, other.energy, -other.throughput)
        return all(x <= y for x, y in zip(a, b)) and a != b


@dataclass
class ParetoFront:
    points: list[ParetoPoint]
    sweep_meta: dict = field(default_factory=dict)
    # every per-cap solution, dominated or not (distinct utilisation scenarios)
    scenarios: list[ParetoPoint] = field(default_factory=list)
    diagnostic: str | None = None

    def __len__(self) -> int:
        return len(self.points)

    def to_csv(self, objective_mode: str | None = None, *, include_scenarios: bool = True) -> str:
        mode = objective_mode or self.sweep_meta.get("mode", "front")
        rows = self.scenarios if include_scenarios and self.scenarios else self.points
        return points_to_csv(rows, mode)


def points_to_csv(points: Iterable[ParetoPoint], objective_mode: str) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["makespan_h", "energy_kwh", "throughput", "objective_mode"])
    for p in points:
        w.writerow([p.makespan, _fmt(p.energy), p.throughput, objective_mode])
    return buf.getvalue()


def pareto_filter(points: Iterable[ParetoPoint], sweep_meta: dict | None = None) -> ParetoFront:
    """Drop dominated points and duplicates; order by makespan, then energy."""
    pts = list(points)
    kept: list[ParetoPoint] = []
    seen = set()
    for p in pts:
        key = (p.makespan, p.energy, p.throughput)
        if key in seen or any(q.dominates(p) for q in pts):
            continue
        seen.add(key)
        kept.append(p)
    kept.sort(key=lambda p: (p.makespan, p.energy, -p.throughput))
    return ParetoFront(kept, dict(sweep_meta or {}))


def _point(res: SolveResult) -> ParetoPoint:
    return ParetoPoint(res.makespan, res.reported_energy, res.throughput, res)


def linspace(lo: Fraction, hi: Fraction, steps: int) -> list[Fraction]:
    """``steps`` evenly spaced values from lo to hi inclusive (exact)."""
    if steps < 1:
        raise ValueError("steps must be at least 1")
    if steps == 1 or lo == hi:
        return [Fraction(lo)]
    return [lo + (hi - lo) * i / (steps - 1) for i in range(steps)]


def _map(fn: Callable, items: Sequence, workers: int) -> list:
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# -- fixed throughput epsilon sweep ----------------------------------------------


def _eps_point(args) -> tuple[SolveResult, SolveResult]:
    instance, config, cap, time_limit = args
    cfg = replace(config, energy_cap=cap)
    fastest = solve(instance, cfg, Objective.makespan(), time_limit)
    if not fastest.feasible:
        return fastest, fastest
    at = replace(cfg, makespan_cap=fastest.makespan)
    scenario = solve(instance, at, Objective.max_energy(), time_limit)
    clean = solve(instance, at, Objective.energy(), time_limit)
    return scenario, clean


def epsilon_sweep_fixed_throughput(
    instance: Instance,
    throughput: int,
    steps: int,
    *,
    dynamic: bool = False,
    time_limit: float | None = None,
    workers: int = 1,
) -> ParetoFront:
    """Energy bounds at the minimum makespan, then one makespan solve per energy cap.

    Each cap is solved lexicographically: minimise makespan under the cap,
    then at that makespan take the most energy the cap allows (the
    utilisation scenario recorded in ``scenarios``) and the least energy
    (the Pareto-clean point kept in ``points``).
    """
    if steps < 1:
        raise ValueError("steps must be at least 1")
    inst = instance if instance.num_jobs >= throughput else instance.with_jobs(throughput)
    base = ModelConfig(fixed_throughput=throughput, dynamic_switching=dynamic)
    meta = {"swept": "energy_cap", "throughput": throughput, "steps": steps, "mode": "fixed-throughput"}
    fastest = solve(inst, base, Objective.makespan(), time_limit)
    if not fastest.feasible:
        return ParetoFront([], meta, diagnostic=f"throughput {throughput} not achievable: {fastest.status}")
    at_best = replace(base, makespan_cap=fastest.makespan)
    lo = solve(inst, at_best, Objective.energy(), time_limit)
    hi = solve(inst, at_best, Objective.max_energy(), time_limit)
    e_lo, e_hi = lo.reported_energy, hi.reported_energy
    caps = linspace(e_lo, e_hi, steps) if steps > 1 else [e_lo]
    meta.update({"makespan": fastest.makespan, "energy_min": e_lo, "energy_max": e_hi, "grid": caps})
    results = _map(_eps_point, [(inst, base, c, time_limit) for c in caps], workers)
    scenarios = [_point(s) for s, _ in results if s.feasible]
    cleans = [_point(c) for _, c in results if c.feasible]
    front = pareto_filter(cleans, meta)
    front.scenarios = sorted(scenarios, key=lambda p: (p.makespan, p.energy))
    return front


# -- weighted sum ------------------------------------------------------------------


def weighted_sum_solve(
    instance: Instance,
    throughput: int,
    horizon: int,
    alpha,
    *,
    dynamic: bool = False,
    time_limit: float | None = None,
) -> SolveResult:
    """Minimise ``alpha * makespan + (1 - alpha) * energy`` at fixed throughput, raw units."""
    inst = instance.with_horizon(horizon)
    if inst.num_jobs < throughput:
        inst = inst.with_jobs(throughput)
    cfg = ModelConfig(fixed_throughput=throughput, dynamic_switching=dynamic)
    return solve(inst, cfg, Objective.weighted(alpha), time_limit)


# -- throughput / energy / makespan sweep ------------------------------------------


@dataclass(frozen=True)
class SweepPoint:
    cap: int
    throughput: int
    energy: Fraction
    makespan: int
    status: str
    dual_bound: Fraction | None = None

    def as_tuple(self) -> tuple[int, int, Fraction]:
        return self.cap, self.throughput, self.energy


def _sweep_point(args) -> SweepPoint:
    instance, cap, dynamic, time_limit = args
    if cap < 1:
        return SweepPoint(cap, 0, Fraction(0), 0, "optimal", Fraction(0))
    inst = instance.with_horizon(cap)
    cfg = ModelConfig(dynamic_switching=dynamic)
    best = solve(inst, cfg, Objective.throughput(), time_limit)
    n = best.throughput or 0
    if n == 0:
        return SweepPoint(cap, 0, Fraction(0), 0, best.status, Fraction(0))
    res = solve(inst, ModelConfig(dynamic_switching=dynamic, fixed_throughput=n), Objective.energy(), time_limit)
    status = best.status if best.status != "optimal" else res.status
    return SweepPoint(cap, n, res.reported_energy, res.makespan, status, res.dual_bound)


def sweep_caps(horizon_max: int, steps: int | None = None) -> list[int]:
    """Integer makespan caps from 0 to ``horizon_max + 1`` inclusive.

    The last cap sits one hour past ``horizon_max`` because completions are
    counted on the hour grid; ``steps`` thins the grid evenly.
    """
    top = horizon_max + 1
    if steps is None or steps >= top + 1:
        return list(range(top + 1))
    if steps < 2:
        return [top]
    return sorted({round(Fraction(top * i, steps - 1)) for i in range(steps)})


def throughput_energy_sweep(
    instance: Instance,
    horizon_max: int,
    steps: int | None = None,
    dynamic: bool = False,
    *,
    time_limit: float | None = None,
    workers: int = 1,
) -> list[SweepPoint]:
    """Per makespan cap: maximise throughput, then minimise energy at that throughput.

    With ``dynamic`` the energy is on-time energy from optimised timelines.
    Caps below the single-job critical path give throughput 0 and energy 0.
    """
    caps = sweep_caps(horizon_max, steps)
    pts = _map(_sweep_point, [(instance, c, dynamic, time_limit) for c in caps], workers)
    return sorted(pts, key=lambda p: p.cap)


def sweep_to_csv(points: Iterable[SweepPoint], objective_mode: str) -> str:
    return points_to_csv(
        (ParetoPoint(p.makespan, p.energy, p.throughput) for p in points), objective_mode
    )
