"""Acceptance table for the builtin Minifab: each reference figure, recomputed.

Every check records the computed value, the expected value and the
tolerance it is judged at.  ``run_checks`` is shared by the ``reproduce``
CLI command and the acceptance test module.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable, Iterable

from .analysis import all_on_timelines, fit_slope, on_time_energy
from .formulation import ModelConfig, check_solution
from .heuristics import FifoConfig, fifo_solve, fifo_sweep
from .model import build_minifab
from .objectives import throughput_energy_sweep, weighted_sum_solve
from .randomized import exhaustive_timeline_cost, random_busy, random_config, random_instance
from .solver import OPTIMAL, Objective, SolveResult, brute_force_solve, solve
from .timeline import busy_mask, timeline_cost

GROUPS = (
    "makespan",
    "critical_path",
    "energy_bounds",
    "throughput",
    "weighted",
    "slopes",
    "dynamic",
    "fifo",
    "oracle",
    "verifier",
)


@dataclass(frozen=True)
class CheckResult:
    name: str
    criterion: int
    computed: object
    expected: object
    tolerance: object
    passed: bool
    note: str = ""

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return (
            f"{verdict}  [{self.criterion}] {self.name}: computed={_show(self.computed)} "
            f"expected={_show(self.expected)} tol={_show(self.tolerance)}"
        )

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "criterion": self.criterion,
            "computed": _json(self.computed),
            "expected": _json(self.expected),
            "tolerance": _json(self.tolerance),
            "passed": self.passed,
            "note": self.note,
        }


def _show(v) -> str:
    if isinstance(v, Fraction):
        return f"{float(v):.4f}".rstrip("0").rstrip(".")
    if isinstance(v, float):
        return f"{v:.4f}".rstrip("0").rstrip(".")
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_show(x) for x in v) + "]"
    return str(v)


def _json(v):
    if isinstance(v, Fraction):
        return float(v)
    if isinstance(v, (list, tuple)):
        return [_json(x) for x in v]
    if isinstance(v, dict):
        return {str(k): _json(x) for k, x in v.items()}
    return v


def _near(a, b, tol) -> bool:
    return a is not None and abs(Fraction(a) - Fraction(b)) <= Fraction(tol)


@dataclass
class Context:
    """Shared state across checks: cached sweeps and every produced schedule."""

    time_limit: float | None = None
    workers: int = 1
    oracle_cases: int = 200
    # a lone `--only fifo` reports just the headline most-expensive check
    only_fifo_max: bool = False
    outputs: list[tuple[str, object, ModelConfig, SolveResult]] = field(default_factory=list)
    _baseline: list | None = None

    def keep(self, label: str, instance, config: ModelConfig, res: SolveResult) -> SolveResult:
        if res.feasible:
            self.outputs.append((label, instance, config, res))
        return res

    def baseline_sweep(self):
        if self._baseline is None:
            self._baseline = throughput_energy_sweep(
                build_minifab(40), 80, time_limit=self.time_limit, workers=self.workers
            )
        return self._baseline


def check(name: str, criterion: int, computed, expected, tol=0, passed: bool | None = None, note: str = ""):
    if passed is None:
        passed = computed == expected if tol == 0 else _near(computed, expected, tol)
    return CheckResult(name, criterion, computed, expected, tol, bool(passed), note)


# -- criteria ----------------------------------------------------------------------


def _makespan(ctx: Context) -> list[CheckResult]:
    out = []
    for n, expected in ((5, 17), (15, 37)):
        inst = build_minifab(n)
        cfg = ModelConfig()
        r = ctx.keep(f"makespan-{n}", inst, cfg, solve(inst, cfg, Objective.makespan(), ctx.time_limit))
        out.append(check(f"makespan {n} wafers (status {r.status})", 1, r.makespan, expected,
                         passed=r.makespan == expected and r.status == OPTIMAL))
    return out


def _critical_path(ctx: Context) -> list[CheckResult]:
    inst = build_minifab(1)
    cfg = ModelConfig()
    r = ctx.keep("single", inst, cfg, solve(inst, cfg, Objective.makespan(), ctx.time_limit))
    return [check("single wafer makespan", 2, r.makespan, 9)]


def _energy_bounds(ctx: Context) -> list[CheckResult]:
    inst = build_minifab(15)
    mk = solve(inst, ModelConfig(), Objective.makespan(), ctx.time_limit).makespan
    cfg = ModelConfig(fixed_throughput=15, makespan_cap=mk)
    lo = ctx.keep("min-energy-15", inst, cfg, solve(inst, cfg, Objective.energy(), ctx.time_limit))
    hi = ctx.keep("max-energy-15", inst, cfg, solve(inst, cfg, Objective.max_energy(), ctx.time_limit))
    hours = {name: h for name, h in _hours(inst, lo).items() if h}
    return [
        check("min energy, 15 wafers at optimal makespan", 3, lo.energy, Fraction("9.45")),
        check(
            "max energy, 15 wafers at optimal makespan",
            3,
            hi.energy,
            Fraction("10.19"),
            note="exact lexicographic maximum at the optimal makespan",
        ),
        check(
            "min-energy witness busy hours",
            3,
            hours,
            {"Diffuser1": 45, "Implanter1": 30, "Lithographer": 60},
        ),
    ]


def _hours(inst, res: SolveResult) -> dict[str, int]:
    h = {m.name: 0 for m in inst.machines}
    for a in res.solution.assignments:
        h[inst.machine(a.machine).name] += a.duration
    return h


def _throughput(ctx: Context) -> list[CheckResult]:
    pts = ctx.baseline_sweep()
    last = pts[-1]
    best = max(pts, key=lambda p: (p.throughput, -p.cap))
    low = [p for p in pts if p.cap <= 8]
    # witness schedules for the verifier
    inst = build_minifab(last.throughput, last.cap)
    cfg = ModelConfig(fixed_throughput=last.throughput)
    ctx.keep("sweep-last", inst, cfg, solve(inst, cfg, Objective.energy(), ctx.time_limit))
    return [
        check("max throughput over the cap grid", 4, (best.throughput, best.makespan), (37, 81)),
        check("min energy at throughput 37", 4, last.energy, Fraction("23.31")),
        check(
            "throughput and energy zero for caps <= 8",
            4,
            sorted({(p.throughput, p.energy) for p in low}),
            [(0, Fraction(0))],
        ),
    ]


def _weighted(ctx: Context) -> list[CheckResult]:
    out = []
    inst = build_minifab(37)
    cfg = ModelConfig(fixed_throughput=37)
    for alpha in (Fraction(1), Fraction(1, 10**8), Fraction(1, 2), Fraction(999, 1000), Fraction(0)):
        r = weighted_sum_solve(inst, 37, 120, alpha, time_limit=ctx.time_limit)
        ctx.keep(f"weighted-{alpha}", inst.with_horizon(120), cfg, r)
        if alpha == 1:
            out.append(check("alpha=1 makespan", 5, r.makespan, 81))
            out.append(
                check(
                    "alpha=1 energy",
                    5,
                    r.energy,
                    Fraction("26.81"),
                    Fraction("0.01"),
                    note="energy is unconstrained among makespan-optimal schedules",
                )
            )
        elif alpha == 0:
            out.append(check("alpha=0 energy", 5, r.energy, Fraction("23.31")))
            out.append(check("alpha=0 makespan within horizon", 5, r.makespan, "<= 120", passed=r.makespan <= 120))
        else:
            out.append(check(f"alpha={float(alpha):g} (makespan, energy)", 5, (r.makespan, r.energy),
                             (81, Fraction("23.31"))))
    return out


def _slopes(ctx: Context) -> list[CheckResult]:
    pts = [p for p in ctx.baseline_sweep() if p.throughput > 0]
    tp = fit_slope([(p.cap, p.throughput) for p in pts])
    en = fit_slope([(p.cap, p.energy) for p in pts])
    return [
        check("throughput slope", 6, tp, Fraction("0.456"), Fraction("0.05")),
        check("energy slope", 6, en, Fraction("0.330"), Fraction("0.05")),
    ]


def _dynamic(ctx: Context) -> list[CheckResult]:
    # the cap grid reaching 80 ends at cap 81; throughput is monotone in the cap
    cap = 81
    inst = build_minifab(40, cap)
    dyn = ModelConfig(dynamic_switching=True)
    best = solve(inst, dyn, Objective.throughput(), ctx.time_limit)
    n = best.throughput
    fixed = ModelConfig(dynamic_switching=True, fixed_throughput=n)
    tl = ctx.time_limit if ctx.time_limit is not None else 120.0
    r = ctx.keep("dynamic-energy", inst, fixed, solve(inst, fixed, Objective.energy(), tl))
    ctx.keep("dynamic-throughput", inst, replace(dyn, variable_throughput=True), best)
    baseline = on_time_energy(inst, all_on_timelines(inst, cap))
    return [
        check("dynamic max throughput", 7, n, 35, 1),
        check(
            f"dynamic on-time energy at max throughput (status {r.status})",
            7,
            r.on_time_energy,
            "[25.0, 30.6]",
            passed=r.on_time_energy is not None and Fraction("25.0") <= r.on_time_energy <= Fraction("30.6"),
            note="minimum on-time energy under the stated switching rules",
        ),
        check("baseline all-on energy at 81 h", 7, baseline, Fraction("34.83")),
        check("dynamic below baseline", 7, (r.on_time_energy, baseline), "dynamic < baseline",
              passed=r.on_time_energy is not None and r.on_time_energy < baseline),
    ]


def _fifo(ctx: Context) -> list[CheckResult]:
    inst = build_minifab(37)
    fifo_cfg = ModelConfig(fifo=True, fixed_throughput=37)
    hi = fifo_solve(inst, FifoConfig(37, 81, "most_expensive"), ctx.time_limit)
    lo = fifo_solve(inst, FifoConfig(37, 81, "cheapest"), ctx.time_limit)
    free = fifo_solve(inst, FifoConfig(37, 81, "solver_free"), ctx.time_limit)
    ctx.keep("fifo-most-expensive", inst.with_horizon(81), fifo_cfg, hi)
    ctx.keep("fifo-cheapest", inst.with_horizon(81), fifo_cfg, lo)
    ctx.keep("fifo-free", inst.with_horizon(81), fifo_cfg, free)
    out = [check("FIFO most-expensive energy, 37 wafers", 8, hi.energy, Fraction("31.82"))]
    if ctx.only_fifo_max:
        return out
    sweep = fifo_sweep(inst, 37, range(81, 106), time_limit=ctx.time_limit, workers=ctx.workers)
    energies = [p.energy for p in sweep]
    lo_e, hi_e = Fraction("23.31"), Fraction("31.82")
    out += [
        check("FIFO cheapest energy, 37 wafers", 8, lo.energy, lo_e),
        check("reduction relative to FIFO maximum (%)", 8, (hi.energy - lo.energy) / hi.energy * 100,
              Fraction("26.7"), Fraction("0.1")),
        check("increase relative to minimum (%)", 8, (hi.energy - lo.energy) / lo.energy * 100,
              Fraction("36.5"), Fraction("0.1")),
        check(
            "FIFO sweep 81..105 energies within [23.31, 31.82]",
            8,
            (min(energies, default=None), max(energies, default=None)),
            (lo_e, hi_e),
            passed=all(e is not None and lo_e <= e <= hi_e for e in energies) and len(energies) == 25,
        ),
    ]
    return out


def _oracle(ctx: Context) -> list[CheckResult]:
    objectives = [
        Objective.makespan(),
        Objective.energy(),
        Objective.max_energy(),
        Objective.throughput(),
        Objective.weighted(Fraction(1, 3)),
        Objective.weighted(1),
        Objective.weighted(0),
    ]
    mismatches = []
    modes = set()
    kinds = set()
    for seed in range(ctx.oracle_cases):
        rng = random.Random(seed)
        inst = random_instance(rng)
        cfg = random_config(rng, inst)
        obj = objectives[seed % len(objectives)]
        a = solve(inst, cfg, obj)
        b = brute_force_solve(inst, cfg, obj)
        modes.add(cfg.capacity_mode)
        kinds.add(obj.kind)
        if (a.status, a.objective_value) != (b.status, b.objective_value):
            mismatches.append(seed)
    tl_bad = []
    for seed in range(ctx.oracle_cases):
        rng = random.Random(10_000 + seed)
        T = rng.randint(1, 16)
        busy = random_busy(rng, T)
        st, z = rng.randint(0, 3), rng.randint(1, 6)
        forced = bool(busy) or rng.random() < 0.5
        hours = {h for a, b in busy for h in range(a, b + 1)}
        if exhaustive_timeline_cost(hours, st, z, T, forced) != timeline_cost(busy_mask(busy), st, z, T, forced):
            tl_bad.append(seed)
    return [
        check(
            f"solve == brute force on {ctx.oracle_cases} random instances ({len(modes)} capacity modes, "
            f"{len(kinds)} objective kinds)",
            9,
            len(mismatches),
            0,
            passed=not mismatches and ctx.oracle_cases >= 200 and len(modes) == 2,
            note=f"mismatching seeds: {mismatches[:10]}",
        ),
        check(
            f"timeline DP == exhaustive enumeration on {ctx.oracle_cases} busy patterns",
            9,
            len(tl_bad),
            0,
            passed=not tl_bad and ctx.oracle_cases >= 200,
            note=f"mismatching seeds: {tl_bad[:10]}",
        ),
    ]


def _verifier(ctx: Context) -> list[CheckResult]:
    bad = []
    dynamic = 0
    for label, inst, cfg, res in ctx.outputs:
        if check_solution(inst, cfg, res.solution, res.timelines):
            bad.append(label)
        if cfg.dynamic_switching:
            dynamic += 1
            if res.timelines is None or not _timeline_algebra(res.timelines):
                bad.append(label + ":algebra")
    return [
        check(
            f"check_solution and timeline algebra on {len(ctx.outputs)} outputs ({dynamic} dynamic)",
            10,
            len(bad),
            0,
            passed=not bad and len(ctx.outputs) > 0,
            note=", ".join(bad),
        )
    ]


def _timeline_algebra(timelines) -> bool:
    """Hour-by-hour state update: state(t) = state(t-1) + on(t) - off(t), events exclusive."""
    for tl in timelines:
        x = tl.indicator()
        on = set(tl.switch_on)
        off = set(tl.switch_off)
        if on & off:
            return False
        prev = 0
        for t in range(1, tl.horizon + 1):
            if x[t - 1] != prev + (t in on) - (t in off):
                return False
            if t in on and prev:
                return False
            prev = x[t - 1]
    return True


CHECKS: dict[str, Callable[[Context], list[CheckResult]]] = {
    "makespan": _makespan,
    "critical_path": _critical_path,
    "energy_bounds": _energy_bounds,
    "throughput": _throughput,
    "weighted": _weighted,
    "slopes": _slopes,
    "dynamic": _dynamic,
    "fifo": _fifo,
    "oracle": _oracle,
    "verifier": _verifier,
}


def run_checks(
    only: Iterable[str] | None = None,
    *,
    time_limit: float | None = None,
    workers: int = 1,
    oracle_cases: int = 200,
    progress: Callable[[CheckResult], None] | None = None,
) -> list[CheckResult]:
    """Run the selected groups (all by default), in table order."""
    groups = list(GROUPS) if not only else [g for g in GROUPS if g in set(only)]
    unknown = set(only or ()) - set(GROUPS)
    if unknown:
        raise ValueError(f"unknown check groups: {sorted(unknown)}")
    ctx = Context(time_limit=time_limit, workers=workers, oracle_cases=oracle_cases, only_fifo_max=groups == ["fifo"])
    if "verifier" in groups and len(groups) == 1:
        groups = [g for g in GROUPS if g not in ("oracle", "slopes")]
    results = []
    for g in groups:
        for res in CHECKS[g](ctx):
            results.append(res)
            if progress:
                progress(res)
    return results


def report_json(results: list[CheckResult]) -> str:
    return json.dumps(
        {"passed": sum(r.passed for r in results), "failed": sum(not r.passed for r in results),
         "checks": [r.to_dict() for r in results]},
        indent=1,
    )


__all__ = ["CheckResult", "GROUPS", "run_checks", "report_json"]
