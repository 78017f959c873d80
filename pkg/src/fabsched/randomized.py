"""Random small instances and exhaustive oracles for cross-checking the solver."""

from __future__ import annotations

import random
from fractions import Fraction

from .formulation import ModelConfig
from .model import Instance, MachineDef, OperationDef


def random_instance(rng: random.Random, max_jobs: int = 3, max_horizon: int = 14) -> Instance:
    """1-3 machines, 1-3 routed operations, process times 1-2 h."""
    n_mach = rng.randint(1, 3)
    machines = tuple(
        MachineDef(
            m,
            f"M{m}",
            Fraction(rng.randint(1, 5), rng.choice([1, 10, 100])),
            rng.randint(0, 2),
            rng.randint(1, 4),
        )
        for m in range(n_mach)
    )
    n_ops = rng.randint(1, 3)
    ops = []
    for k in range(n_ops):
        elig = rng.sample(range(n_mach), rng.randint(1, n_mach))
        ops.append(OperationDef(k, f"O{k}", {m: rng.randint(1, 2) for m in elig}))
    routing = tuple(rng.sample(range(n_ops), n_ops))
    jobs = rng.randint(1, max_jobs)
    # keep the exhaustive oracle affordable on the largest shapes
    if jobs * n_ops >= 6:
        max_horizon = min(max_horizon, 10)
    return Instance(machines, tuple(ops), routing, jobs, rng.randint(4, max_horizon))


def random_config(rng: random.Random, inst: Instance) -> ModelConfig:
    fifo = rng.random() < 0.2
    return ModelConfig(
        capacity_mode=rng.choice(["task_channel", "strict_machine"]),
        dynamic_switching=rng.random() < 0.35,
        fifo=fifo,
        symmetry_breaking=fifo or rng.random() < 0.7,
        makespan_cap=rng.choice([None, None, rng.randint(3, inst.horizon)]),
        energy_cap=rng.choice([None, None, Fraction(rng.randint(1, 30), 10)]),
    )


def random_busy(rng: random.Random, horizon: int) -> list[tuple[int, int]]:
    """Disjoint sorted busy intervals inside [1, horizon]."""
    out, t = [], rng.randint(1, horizon)
    while t <= horizon and rng.random() < 0.85:
        length = rng.randint(1, 3)
        end = min(horizon, t + length - 1)
        out.append((t, end))
        t = end + 1 + rng.randint(1, 6)
    return out


def exhaustive_timeline_cost(
    busy: set[int], st: int, z: int, horizon: int, forced: bool = True
) -> int | None:
    """Minimum on-hours over every on/off hour sequence; None if none is valid.

    Valid means: on at hour 1 when ``forced``; on in every busy hour; every
    busy hour at least ``st`` hours after its run's switch-on; every run
    followed by a switch-off lasts at least ``z`` hours.
    """
    best = None

    def valid(seq: tuple[int, ...]) -> bool:
        run_start = None
        for t in range(1, horizon + 1):
            on = seq[t - 1]
            if on and run_start is None:
                run_start = t
            if not on and run_start is not None:
                if t - run_start < z:
                    return False
                run_start = None
            if t in busy and (not on or t - run_start < st):
                return False
        return True

    def rec(prefix: list[int]) -> None:
        nonlocal best
        t = len(prefix) + 1
        if t > horizon:
            seq = tuple(prefix)
            if valid(seq):
                cost = sum(seq)
                if best is None or cost < best:
                    best = cost
            return
        for v in (0, 1):
            if t == 1 and forced and not v:
                continue
            if t in busy and not v:
                continue
            prefix.append(v)
            rec(prefix)
            prefix.pop()

    rec([])
    return best
