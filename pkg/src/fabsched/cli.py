"""Command-line front end: solve, sweep, FIFO study and the reproduction table."""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from fractions import Fraction
from pathlib import Path

from . import __version__
from .analysis import CurvePoint, energy_per_wafer_curve, render_gantt, utilisation_energy, write_curve_csv
from .formulation import ModelConfig
from .heuristics import POLICIES, FifoConfig, fifo_solve, fifo_sweep, fifo_sweep_csv
from .model import Instance, build_minifab, validate_instance
from .objectives import epsilon_sweep_fixed_throughput, sweep_to_csv, throughput_energy_sweep
from .reproduce import GROUPS, report_json, run_checks
from .solver import FEASIBLE_BOUND, HORIZON_EXHAUSTED, INFEASIBLE, Objective, SolveResult, solve

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_INFEASIBLE = 3
EXIT_GAP = 4

CAPACITY = {"task-channel": "task_channel", "strict": "strict_machine"}


class UsageError(Exception):
    pass


def _fraction(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from exc


def _default_time_limit() -> float | None:
    raw = os.environ.get("FABSCHED_TIME_LIMIT_S")
    if not raw:
        return None
    try:
        return float(raw)
    except ValueError:
        raise UsageError(f"FABSCHED_TIME_LIMIT_S is not a number: {raw!r}")


def _add_instance_args(p: argparse.ArgumentParser) -> None:
    src = p.add_mutually_exclusive_group()
    src.add_argument("--minifab", action="store_true", help="builtin Minifab instance (default)")
    src.add_argument("--instance", type=Path, help="instance JSON file")
    p.add_argument("--jobs", type=int, help="number of wafers (Minifab default 5)")
    p.add_argument("--horizon", type=int, help="time horizon in hours")


def _add_model_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--capacity", choices=sorted(CAPACITY), default="task-channel")
    p.add_argument("--dynamic", action="store_true", help="machine on/off switching model")
    p.add_argument("--all-on-at-start", action="store_true", help="switch every machine on at t=1, used or not")
    p.add_argument("--time-limit", type=float, help="seconds per solve (env FABSCHED_TIME_LIMIT_S)")
    p.add_argument("--out", type=Path, default=Path("out"), help="output directory")


def _load_instance(args) -> Instance:
    if args.jobs is not None and args.jobs < 1:
        raise UsageError("--jobs must be at least 1")
    if args.horizon is not None and args.horizon < 1:
        raise UsageError("--horizon must be at least 1")
    if args.instance is not None:
        try:
            inst = Instance.from_dict(json.loads(args.instance.read_text()))
        except (OSError, ValueError, KeyError, TypeError) as exc:
            raise UsageError(f"cannot read instance: {exc}")
        if args.jobs is not None:
            inst = inst.with_jobs(args.jobs)
        if args.horizon is not None:
            inst = inst.with_horizon(args.horizon)
    else:
        inst = build_minifab(args.jobs if args.jobs is not None else 5, args.horizon)
    fatal = validate_instance(inst).codes() - {"horizon_below_critical_path"}
    if fatal:
        raise UsageError(f"invalid instance: {', '.join(sorted(fatal))}")
    return inst


def _short(inst: Instance) -> str:
    return inst.digest()[:12]


def _write(out: Path, name: str, text: str, files: list[str]) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    path = out / name
    path.write_text(text, encoding="utf-8")
    files.append(str(path))
    return path


def _manifest(out: Path, command: str, inst: Instance, config: dict, files: list[str], started: float) -> Path:
    h = _short(inst)
    data = {
        "command": command,
        "argv": sys.argv[1:],
        "config": config,
        "instance": inst.to_dict(),
        "instance_hash": inst.digest(),
        "result_files": list(files),
        "wall_time_s": round(time.perf_counter() - started, 6),
        "tool_version": __version__,
    }
    path = out / f"manifest-{command}-{h}.json"
    path.write_text(json.dumps(data, indent=1, sort_keys=True, default=str), encoding="utf-8")
    return path


def _fmt_value(objective: Objective, value: Fraction | None) -> str:
    if value is None:
        return "none"
    if objective.kind in ("min_makespan", "max_throughput"):
        return str(int(value)) if value.denominator == 1 else f"{float(value):.3f}"
    return f"{float(value):.3f}"


def _exit_for(res: SolveResult) -> int:
    if res.status == INFEASIBLE:
        return EXIT_INFEASIBLE
    if res.status in (FEASIBLE_BOUND, HORIZON_EXHAUSTED):
        return EXIT_GAP
    return EXIT_OK


# -- commands ------------------------------------------------------------------------


def cmd_solve(args) -> int:
    started = time.perf_counter()
    inst = _load_instance(args)
    try:
        objective = Objective.parse(args.objective)
    except ValueError as exc:
        raise UsageError(str(exc))
    if args.throughput is not None:
        if args.throughput < 0:
            raise UsageError("--throughput must be non-negative")
        if inst.num_jobs < args.throughput:
            inst = inst.with_jobs(args.throughput)
    if args.energy_cap is not None and args.energy_cap < 0:
        raise UsageError("--energy-cap must be non-negative")
    if args.makespan_cap is not None and args.makespan_cap < 0:
        raise UsageError("--makespan-cap must be non-negative")
    config = ModelConfig(
        capacity_mode=CAPACITY[args.capacity],
        dynamic_switching=args.dynamic,
        fifo=args.fifo,
        symmetry_breaking=not args.no_symmetry_breaking,
        fixed_throughput=args.throughput,
        energy_cap=args.energy_cap,
        makespan_cap=None if args.makespan_cap is None else int(args.makespan_cap),
        all_on_at_start=args.all_on_at_start,
    )
    limit = args.time_limit if args.time_limit is not None else _default_time_limit()
    res = solve(inst, config, objective, limit)

    h = _short(inst)
    files: list[str] = []
    payload = res.to_dict()
    payload["instance_hash"] = inst.digest()
    _write(args.out, f"result-{h}.json", json.dumps(payload, indent=1, sort_keys=True) + "\n", files)
    if res.solution is not None:
        gantt = f"# instance {inst.digest()}\n" + render_gantt(inst, res.solution, res.timelines)
        _write(args.out, f"gantt-{h}.txt", gantt, files)
        report = utilisation_energy(inst, res.solution, res.timelines)
        _write(args.out, f"energy-{h}.csv", f"# instance {inst.digest()}\n" + report.to_csv(), files)
    _manifest(args.out, "solve", inst, {**config.to_dict(), "objective": objective.label()}, files, started)

    print(f"status: {res.status}")
    print(f"objective: {_fmt_value(objective, res.objective_value)}")
    print(f"bound: {_fmt_value(objective, res.dual_bound)}")
    if res.solution is not None:
        print(f"makespan: {res.makespan}  throughput: {res.throughput}  energy_kwh: {float(res.energy):.3f}")
        if res.on_time_energy is not None:
            print(f"on_time_energy_kwh: {float(res.on_time_energy):.3f}")
    return _exit_for(res)


def cmd_pareto(args) -> int:
    started = time.perf_counter()
    if args.steps is not None and args.steps < 1:
        raise UsageError("--steps must be at least 1")
    if args.parallel < 1:
        raise UsageError("--parallel must be at least 1")
    inst = _load_instance(args)
    limit = args.time_limit if args.time_limit is not None else _default_time_limit()
    h = _short(inst)
    files: list[str] = []
    mode_label = ("dynamic" if args.dynamic else "baseline")
    if args.mode == "fixed-throughput":
        n = args.throughput if args.throughput is not None else inst.num_jobs
        front = epsilon_sweep_fixed_throughput(
            inst, n, args.steps or 10, dynamic=args.dynamic, time_limit=limit, workers=args.parallel
        )
        if front.diagnostic:
            print(front.diagnostic)
            return EXIT_INFEASIBLE
        _write(args.out, f"front-{h}.csv", front.to_csv(f"fixed-throughput-{mode_label}"), files)
        for p in front.scenarios:
            print(f"{p.makespan},{float(p.energy):.3f},{p.throughput}")
        meta = {k: (str(v) if isinstance(v, Fraction) else v) for k, v in front.sweep_meta.items() if k != "grid"}
    else:
        horizon_max = args.horizon_max
        if horizon_max < 1:
            raise UsageError("--horizon-max must be at least 1")
        if args.jobs is None and args.instance is None:
            inst = inst.with_jobs(max(inst.num_jobs, horizon_max))
            h = _short(inst)
        pts = throughput_energy_sweep(
            inst, horizon_max, args.steps, args.dynamic, time_limit=limit, workers=args.parallel
        )
        _write(args.out, f"front-{h}.csv", sweep_to_csv(pts, f"throughput-sweep-{mode_label}"), files)
        curve = [CurvePoint(Fraction(p.cap), Fraction(p.throughput), "throughput") for p in pts]
        curve += [CurvePoint(Fraction(p.cap), p.energy, "energy_kwh") for p in pts]
        curve += energy_per_wafer_curve(((p.cap, p.throughput, p.energy) for p in pts), "energy_per_wafer")
        _write(args.out, f"curve-{h}.csv", write_curve_csv(curve), files)
        for p in pts:
            print(f"{p.cap},{p.throughput},{float(p.energy):.3f},{p.status}")
        meta = {"mode": "throughput-sweep", "horizon_max": horizon_max, "steps": args.steps}
    _manifest(args.out, "pareto", inst, {**meta, "dynamic": args.dynamic}, files, started)
    return EXIT_OK


def cmd_fifo(args) -> int:
    started = time.perf_counter()
    inst = _load_instance(args)
    n = args.throughput if args.throughput is not None else inst.num_jobs
    if n < 1:
        raise UsageError("--throughput must be at least 1")
    limit = args.time_limit if args.time_limit is not None else _default_time_limit()
    files: list[str] = []
    if args.horizons:
        try:
            lo, hi = (int(x) for x in args.horizons.split(":"))
        except ValueError:
            raise UsageError("--horizons takes LO:HI")
        if lo < 1 or hi < lo:
            raise UsageError("--horizons needs 1 <= LO <= HI")
        pts = fifo_sweep(inst, n, range(lo, hi + 1), policy=args.policy, time_limit=limit, workers=args.parallel)
        inst_n = inst.with_jobs(max(n, inst.num_jobs))
        _write(args.out, f"fifo-{_short(inst_n)}.csv", fifo_sweep_csv(pts), files)
        for p in pts:
            e = "infeasible" if p.energy is None else f"{float(p.energy):.3f}"
            print(f"{p.horizon},{e},{p.makespan if p.makespan is not None else ''}")
        _manifest(args.out, "fifo", inst_n, {"throughput": n, "policy": args.policy, "horizons": args.horizons},
                  files, started)
        return EXIT_OK
    horizon = args.horizon if args.horizon is not None else inst.horizon
    res = fifo_solve(inst, FifoConfig(n, horizon, args.policy), limit)
    inst_n = inst.with_jobs(max(n, inst.num_jobs)).with_horizon(horizon)
    h = _short(inst_n)
    payload = res.to_dict()
    payload["instance_hash"] = inst_n.digest()
    _write(args.out, f"fifo-result-{h}.json", json.dumps(payload, indent=1, sort_keys=True) + "\n", files)
    if res.solution is not None:
        _write(args.out, f"fifo-gantt-{h}.txt", f"# instance {inst_n.digest()}\n" + render_gantt(inst_n, res.solution),
               files)
    _manifest(args.out, "fifo", inst_n, {"throughput": n, "policy": args.policy, "horizon": horizon}, files, started)
    print(f"status: {res.status}")
    if res.solution is not None:
        print(f"energy_kwh: {float(res.energy):.3f}  makespan: {res.makespan}")
    return _exit_for(res)


def cmd_reproduce(args) -> int:
    if args.parallel < 1:
        raise UsageError("--parallel must be at least 1")
    limit = args.time_limit if args.time_limit is not None else _default_time_limit()
    try:
        results = run_checks(
            args.only or None,
            time_limit=limit,
            workers=args.parallel,
            progress=lambda r: print(r.line(), flush=True),
        )
    except ValueError as exc:
        raise UsageError(str(exc))
    args.out.mkdir(parents=True, exist_ok=True)
    (args.out / "reproduce-report.json").write_text(report_json(results) + "\n", encoding="utf-8")
    failed = sum(not r.passed for r in results)
    print(f"{len(results) - failed} passed, {failed} failed")
    return EXIT_FAIL if failed else EXIT_OK


def cmd_instance(args) -> int:
    if args.validate is not None:
        try:
            inst = Instance.from_dict(json.loads(args.validate.read_text()))
        except (OSError, ValueError, KeyError, TypeError) as exc:
            raise UsageError(f"cannot read instance: {exc}")
        report = validate_instance(inst)
        for issue in report.issues:
            print(f"{issue.code}: {issue.message}")
        print("ok" if report.ok else "invalid")
        return EXIT_OK if report.ok else EXIT_INFEASIBLE
    inst = _load_instance(args)
    text = json.dumps(inst.to_dict(), indent=1, sort_keys=True) + "\n"
    if args.write:
        args.write.parent.mkdir(parents=True, exist_ok=True)
        args.write.write_text(text, encoding="utf-8")
        print(f"{args.write} {inst.digest()}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fabsched", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="optimise one objective")
    _add_instance_args(p)
    _add_model_args(p)
    p.add_argument("--objective", default="makespan",
                   help="makespan | energy | max-energy | throughput | weighted:ALPHA")
    p.add_argument("--fifo", action="store_true")
    p.add_argument("--no-symmetry-breaking", action="store_true")
    p.add_argument("--throughput", type=int, help="fix the number of processed wafers")
    p.add_argument("--energy-cap", type=_fraction)
    p.add_argument("--makespan-cap", type=_fraction)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("pareto", help="epsilon-constraint and throughput sweeps")
    _add_instance_args(p)
    _add_model_args(p)
    p.add_argument("--mode", choices=["fixed-throughput", "throughput-sweep"], default="fixed-throughput")
    p.add_argument("--steps", type=int)
    p.add_argument("--throughput", type=int)
    p.add_argument("--horizon-max", type=int, default=80)
    p.add_argument("--parallel", type=int, default=1, metavar="N")
    p.set_defaults(func=cmd_pareto)

    p = sub.add_parser("fifo", help="FIFO dispatch schedules and horizon sweep")
    _add_instance_args(p)
    _add_model_args(p)
    p.add_argument("--throughput", type=int)
    p.add_argument("--policy", choices=POLICIES, default="solver_free")
    p.add_argument("--horizons", help="sweep LO:HI (inclusive)")
    p.add_argument("--parallel", type=int, default=1, metavar="N")
    p.set_defaults(func=cmd_fifo)

    p = sub.add_parser("reproduce", help="recompute the Minifab reference figures")
    p.add_argument("--only", action="append", choices=GROUPS)
    p.add_argument("--time-limit", type=float)
    p.add_argument("--parallel", type=int, default=1, metavar="N")
    p.add_argument("--out", type=Path, default=Path("out"))
    p.set_defaults(func=cmd_reproduce)

    p = sub.add_parser("instance", help="write or validate an instance JSON")
    _add_instance_args(p)
    p.add_argument("--write", type=Path, help="write the instance here instead of stdout")
    p.add_argument("--validate", type=Path, help="validate an instance file")
    p.set_defaults(func=cmd_instance)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
