"""Exact depth-first branch and bound over the time-indexed schedule space.

Jobs are identical, so the active jobs are always a prefix ``0..n-1`` and
the search places them job by job, each job's operations in routing
order, trying every eligible machine and every start hour.  Pruning uses
per-channel load bounds for makespan and cheapest/dearest-channel sums for
energy.  With dynamic switching the schedule is searched in the outer
loop and each machine's on/off plan is the exact per-machine dynamic
program of :mod:`fabsched.timeline`.

All objective arithmetic is done on integers: power ratings are scaled by
the least common denominator, so energies are exact.
"""

from __future__ import annotations

import itertools
import json
import math
import time
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterable, Sequence

from .analysis import on_time_energy, utilisation_energy
from .formulation import STRICT_MACHINE, TASK_CHANNEL, ModelConfig, check_solution
from .model import Assignment, Instance, MachineTimeline, ScheduleSolution, makespan, to_fraction, validate_instance
from .timeline import optimize_timeline, timeline_cost, timeline_cost_bound

OPTIMAL = "optimal"
FEASIBLE_BOUND = "feasible_bound"
INFEASIBLE = "infeasible"
HORIZON_EXHAUSTED = "horizon_exhausted"

INF = float("inf")


@dataclass(frozen=True)
class Objective:
    kind: str
    alpha: Fraction | None = None

    KINDS = ("min_makespan", "min_energy", "max_energy", "max_throughput", "weighted_sum", "feasibility")

    def __post_init__(self) -> None:
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown objective {self.kind!r}")
        if self.kind == "weighted_sum":
            if self.alpha is None:
                raise ValueError("weighted_sum needs alpha")
            alpha = to_fraction(self.alpha)
            if not 0 <= alpha <= 1:
                raise ValueError("alpha must lie in [0, 1]")
            object.__setattr__(self, "alpha", alpha)
        elif self.alpha is not None:
            raise ValueError(f"{self.kind} takes no alpha")

    @classmethod
    def makespan(cls) -> "Objective":
        return cls("min_makespan")

    @classmethod
    def energy(cls) -> "Objective":
        return cls("min_energy")

    @classmethod
    def max_energy(cls) -> "Objective":
        return cls("max_energy")

    @classmethod
    def throughput(cls) -> "Objective":
        return cls("max_throughput")

    @classmethod
    def weighted(cls, alpha) -> "Objective":
        return cls("weighted_sum", to_fraction(alpha))

    @classmethod
    def feasibility(cls) -> "Objective":
        return cls("feasibility")

    @classmethod
    def parse(cls, text: str) -> "Objective":
        """``makespan``, ``energy``, ``max-energy``, ``throughput`` or ``weighted:ALPHA``."""
        text = text.strip().lower()
        if text.startswith("weighted:"):
            return cls.weighted(Fraction(text.split(":", 1)[1]))
        names = {
            "makespan": "min_makespan",
            "energy": "min_energy",
            "max-energy": "max_energy",
            "throughput": "max_throughput",
            "feasibility": "feasibility",
        }
        if text in names:
            return cls(names[text])
        if text in cls.KINDS:
            return cls(text)
        raise ValueError(f"unknown objective {text!r}")

    def label(self) -> str:
        return f"weighted:{self.alpha}" if self.kind == "weighted_sum" else self.kind


@dataclass(frozen=True)
class SolveResult:
    status: str
    objective: Objective
    solution: ScheduleSolution | None = None
    timelines: tuple[MachineTimeline, ...] | None = None
    objective_value: Fraction | None = None
    dual_bound: Fraction | None = None
    nodes_explored: int = 0
    wall_time: float = field(default=0.0, compare=False)
    makespan: int | None = None
    throughput: int | None = None
    energy: Fraction | None = None  # utilisation energy
    on_time_energy: Fraction | None = None

    @property
    def feasible(self) -> bool:
        return self.solution is not None

    @property
    def reported_energy(self) -> Fraction | None:
        """On-time energy when the run had timelines, utilisation energy otherwise."""
        return self.on_time_energy if self.on_time_energy is not None else self.energy

    def to_dict(self, *, timing: bool = True) -> dict:
        f = lambda x: None if x is None else float(x)  # noqa: E731
        d = {
            "status": self.status,
            "objective_kind": self.objective.label(),
            "objective": f(self.objective_value),
            "bound": f(self.dual_bound),
            "nodes": self.nodes_explored,
            "makespan": self.makespan,
            "throughput": self.throughput,
            "energy_kwh": f(self.energy),
            "on_time_energy_kwh": f(self.on_time_energy),
            "assignments": [] if self.solution is None else self.solution.to_list(),
            "timelines": None if self.timelines is None else [tl.to_dict() for tl in self.timelines],
        }
        if timing:
            d["wall_time_s"] = round(self.wall_time, 6)
        return d

    def to_json(self, *, timing: bool = True) -> str:
        return json.dumps(self.to_dict(timing=timing), sort_keys=True, indent=1)


class _Timeout(Exception):
    pass


class _Problem:
    """Integer-scaled view of one (instance, config, objective, n) search."""

    def __init__(self, instance: Instance, config: ModelConfig, objective: Objective, n: int):
        self.inst = instance
        self.cfg = config
        self.obj = objective
        self.n = n
        ops = instance.routed_operations()
        self.R = len(ops)
        self.M = len(instance.machines)
        self.T = instance.horizon
        self.limit = instance.horizon if config.makespan_cap is None else min(instance.horizon, config.makespan_cap)
        self.dynamic = config.dynamic_switching
        self.sb = config.symmetry_breaking
        self.fifo = config.fifo
        # With per-(operation, machine) channels and symmetry breaking, hours
        # before a placed start on its channel are final: later jobs start no
        # earlier.  Every objective is then non-increasing under left shifts
        # that keep the machine's busy set from growing, so only starts whose
        # previous hour is blocked need branching.
        self.semi_active = config.symmetry_breaking and config.capacity_mode == TASK_CHANNEL

        machines = sorted(instance.machines, key=lambda m: m.id)
        self.scale = math.lcm(*(m.power_kw.denominator for m in machines)) if machines else 1
        self.wt = [int(m.power_kw * self.scale) for m in machines]
        self.st = [m.startup_h for m in machines]
        self.z = [m.min_on_h for m in machines]
        self.earliest = [1 + m.startup_h if self.dynamic else 1 for m in machines]

        task = config.capacity_mode == TASK_CHANNEL
        self.task = task
        self.elig: list[tuple[tuple[int, int, int, int], ...]] = []
        self.chan_of_machine: list[list[int]] = [[] for _ in machines]
        nch = 0
        for r, op in enumerate(ops):
            rows = []
            for m in sorted(op.eligible):
                p = op.eligible[m]
                if task:
                    ch = nch
                    nch += 1
                    self.chan_of_machine[m].append(ch)
                else:
                    ch = m
                rows.append((m, p, p * self.wt[m], ch))
            self.elig.append(tuple(rows))
        self.nch = nch if task else self.M
        if not task:
            self.chan_of_machine = [[m] for m in range(self.M)]

        self.min_p = [min(p for _, p, _, _ in rows) for rows in self.elig]
        self.minE = [min(e for _, _, e, _ in rows) for rows in self.elig]
        self.maxE = [max(e for _, _, e, _ in rows) for rows in self.elig]
        self.P = [0] * (self.R + 1)
        for r in range(self.R):
            self.P[r + 1] = self.P[r] + self.min_p[r]
        self.head = self.P[:-1]
        self.tail = [self.P[self.R] - self.P[r + 1] for r in range(self.R)]
        self.job_minE = sum(self.minE)
        self.job_maxE = sum(self.maxE)

        self.groups: list[tuple[tuple[int, ...], tuple[int, ...]]] = []
        if not task:
            by_set: dict[tuple[int, ...], list[int]] = {}
            for r, rows in enumerate(self.elig):
                by_set.setdefault(tuple(m for m, *_ in rows), []).append(r)
            self.groups = [(tuple(rs), ms) for ms, rs in by_set.items()]

        # machines linked by shared eligibility; bounds per component add up
        self.chan = [{m: ch for m, _, _, ch in rows} for rows in self.elig]
        self.ops_on: list[list[int]] = [[] for _ in machines]
        for r, rows in enumerate(self.elig):
            for m, *_ in rows:
                self.ops_on[m].append(r)
        parent = list(range(self.M))

        def find(x: int) -> int:
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for rows in self.elig:
            first = rows[0][0]
            for m, *_ in rows[1:]:
                parent[find(m)] = find(first)
        comps: dict[int, list[int]] = {}
        for m in range(self.M):
            comps.setdefault(find(m), []).append(m)
        self.components = [
            (tuple(ms), tuple(r for r in range(self.R) if find(self.elig[r][0][0]) == root))
            for root, ms in sorted(comps.items())
        ]

        # energy lattice: every achievable total is a multiple of gran
        if self.dynamic:
            vals = [w for w in self.wt]
        else:
            vals = [e for rows in self.elig for _, _, e, _ in rows]
        self.gran = math.gcd(*vals) if any(vals) else 1
        self.e_cap = None
        if config.energy_cap is not None:
            self.e_cap = math.floor(config.energy_cap * self.scale)

        self.alpha_num = self.alpha_den = None
        if objective.kind == "weighted_sum":
            self.alpha_num = objective.alpha.numerator
            self.alpha_den = objective.alpha.denominator

    # -- objective keys (always minimised) -----------------------------------

    def key(self, mk: int, energy: int) -> int:
        kind = self.obj.kind
        if kind in ("min_makespan", "feasibility"):
            return mk if kind == "min_makespan" else 0
        if kind == "min_energy":
            return energy
        if kind == "max_energy":
            return -energy
        a, b = self.alpha_num, self.alpha_den
        return a * self.scale * mk + (b - a) * energy

    def key_value(self, key: int | float) -> Fraction:
        kind = self.obj.kind
        if kind in ("min_makespan", "feasibility"):
            return Fraction(key)
        if kind == "min_energy":
            return Fraction(key, self.scale)
        if kind == "max_energy":
            return Fraction(-key, self.scale)
        return Fraction(key, self.alpha_den * self.scale)

    def uses_energy(self) -> bool:
        return self.obj.kind in ("min_energy", "max_energy") or (
            self.obj.kind == "weighted_sum" and self.alpha_num != self.alpha_den
        )

    def uses_makespan(self) -> bool:
        return self.obj.kind == "min_makespan" or (self.obj.kind == "weighted_sum" and self.alpha_num != 0)


class _Search:
    def __init__(self, prob: _Problem, order: str, deadline: float | None, first_feasible: bool = False):
        self.pb = prob
        self.order = order
        self.deadline = deadline
        self.first_feasible = first_feasible
        n, R = prob.n, prob.R
        self.start = [[0] * R for _ in range(n)]
        self.mach = [[-1] * R for _ in range(n)]
        self.dur = [[0] * R for _ in range(n)]
        self.occ = [0] * prob.nch
        self.committed = 0
        self.mk = 0
        self.nodes = 0
        self.best_key: float = INF
        self.best: list[tuple[int, int, int, int, int]] | None = None
        self.best_mk = 0
        self.best_energy = 0
        self.timed_out = False

    # -- bounds -----------------------------------------------------------------

    def _union(self, m: int) -> int:
        u = 0
        for ch in self.pb.chan_of_machine[m]:
            u |= self.occ[ch]
        return u

    def _op_bound(self, r: int, U: int, E: int, value: bool = True) -> float:
        pb = self.pb
        if U <= 0:
            return 0
        lo = E + pb.min_p[r] - 1
        hi = pb.limit - pb.tail[r]
        if lo > hi:
            return INF
        rows = [(max(E, pb.earliest[m]), p, self.occ[ch]) for m, p, _, ch in pb.elig[r]]

        def capacity(C: int) -> int:
            total = 0
            for a, p, occ in rows:
                width = C - a + 1
                if width < p:
                    continue
                busy = ((occ >> a) & ((1 << width) - 1)).bit_count()
                total += (width - busy) // p
            return total

        if capacity(hi) < U:
            return INF
        if not value:
            return 0
        while lo < hi:
            mid = (lo + hi) // 2
            if capacity(mid) >= U:
                hi = mid
            else:
                lo = mid + 1
        return lo + pb.tail[r]

    def _group_bound(self, U: list[int], E: list[int]) -> float:
        pb = self.pb
        best = 0
        for rs, ms in pb.groups:
            live = [r for r in rs if U[r] > 0]
            if not live:
                continue
            work = sum(U[r] * pb.min_p[r] for r in live)
            e0 = min(E[r] for r in live)
            tail = min(pb.tail[r] for r in live)
            rows = [(max(e0, pb.earliest[m]), self.occ[m]) for m in ms]

            def free(C: int) -> int:
                total = 0
                for a, occ in rows:
                    width = C - a + 1
                    if width > 0:
                        total += width - ((occ >> a) & ((1 << width) - 1)).bit_count()
                return total

            lo, hi = e0, pb.limit - tail
            if lo > hi or free(hi) < work:
                return INF
            while lo < hi:
                mid = (lo + hi) // 2
                if free(mid) >= work:
                    hi = mid
                else:
                    lo = mid + 1
            best = max(best, lo + tail)
        return best

    def frontier(self, j: int, r: int) -> tuple[list[int], list[int], int]:
        """Remaining counts, release hours and chain bound after placing (j, r).

        ``j = -1`` is the root (nothing placed).
        """
        pb = self.pb
        R, n = pb.R, pb.n
        U = [0] * R
        E = [0] * R
        if j < 0:
            for q in range(R):
                U[q] = n
                E[q] = pb.head[q] + 1
            return U, E, (pb.P[R] if n else 0)
        comp = self.start[j][r] + self.dur[j][r] - 1
        chain = comp + pb.tail[r]
        later = n - j - 1
        for q in range(R):
            if q > r:
                U[q] = later + 1
                E[q] = comp + 1 + pb.P[q] - pb.P[r + 1] if pb.sb else pb.head[q] + 1
            else:
                U[q] = later
                if pb.sb:
                    E[q] = self.start[j][q] + (self.dur[j][q] if pb.fifo else 0)
                else:
                    E[q] = pb.head[q] + 1
        if later and pb.sb:
            for q in range(r + 1):
                chain = max(chain, E[q] + pb.P[R] - pb.P[q] - 1)
        return U, E, chain

    def makespan_bound(self, U: list[int], E: list[int], chain: int, value: bool = True) -> float:
        """Makespan lower bound; with ``value`` False only infeasibility (INF) is exact."""
        pb = self.pb
        lb = max(self.mk, chain)
        if lb > pb.limit:
            return INF
        for q in range(pb.R):
            if U[q]:
                b = self._op_bound(q, U[q], E[q], value)
                if b > lb:
                    lb = b
                    if lb == INF:
                        return INF
        if pb.groups:
            lb = max(lb, self._group_bound(U, E))
        return lb

    def energy_bounds(self, U: list[int], E: list[int]) -> tuple[int, int]:
        """(lower, upper) on the final energy in scaled units."""
        pb = self.pb
        if pb.dynamic:
            if pb.cfg.all_on_at_start:
                lo = 0
                for m in range(pb.M):
                    u = self._union(m)
                    if u:
                        lo += pb.wt[m] * (u.bit_count() + pb.st[m])
                    else:
                        lo += pb.wt[m] * min(pb.z[m], pb.T, pb.st[m] + 1)
                return lo, 1 << 62
            return self._on_time_bound(U, E), 1 << 62
        lo = self.committed + sum(U[q] * pb.minE[q] for q in range(pb.R))
        hi = self.committed + sum(U[q] * pb.maxE[q] for q in range(pb.R))
        return lo, hi

    def _on_time_bound(self, U: list[int], E: list[int]) -> int:
        """Lower bound on scaled on-time energy, machines forced on at t=1 once used.

        Per machine, the exact minimum on-time of its current busy hours,
        also requiring readiness at or after the earliest possible last hour
        of any remaining operation that only this machine can run (busy sets
        only grow, and the cost is monotone under inclusion).  Per component
        of machines sharing eligible operations, the larger of the summed
        per-machine costs and the busy-plus-start-up cost of used machines
        plus the hours still to be added by the most demanding remaining
        operation, net of hours other channels already keep the machine busy.
        """
        pb = self.pb
        unions = [self._union(m) for m in range(pb.M)]
        dp_cost = [0] * pb.M
        base = [0] * pb.M
        afters = [0] * pb.M
        for m, u in enumerate(unions):
            after = 0
            for r in pb.ops_on[m]:
                if U[r] and len(pb.elig[r]) == 1:
                    p = pb.elig[r][0][1]
                    after = max(after, max(E[r], pb.earliest[m]) + U[r] * p - 1)
            afters[m] = after
            if not u and not after:
                continue
            c = timeline_cost_bound(u, pb.st[m], pb.z[m], pb.T, after)
            if c is None:
                return 1 << 62
            dp_cost[m] = c
            if u:
                base[m] = u.bit_count() + pb.st[m]
        total = 0
        for ms, ops in pb.components:
            a_sum = sum(pb.wt[m] * dp_cost[m] for m in ms)
            # some eligible machine runs the last job of each flexible operation
            extra = 0
            for r in ops:
                rows = pb.elig[r]
                if not U[r] or len(rows) == 1:
                    continue
                k = len(rows)
                last = min(max(E[r], pb.earliest[m]) for m, *_ in rows) + -(-U[r] // k) * pb.min_p[r] - 1
                best = None
                for m, *_ in rows:
                    c = timeline_cost_bound(unions[m], pb.st[m], pb.z[m], pb.T, max(afters[m], last))
                    d = None if c is None else pb.wt[m] * (c - dp_cost[m])
                    if d is not None and (best is None or d < best):
                        best = d
                if best is None:
                    return 1 << 62
                extra = max(extra, best)
            a_sum += extra
            b_sum = sum(pb.wt[m] * base[m] for m in ms)
            growth = 0
            for r in ops:
                if not U[r]:
                    continue
                need = U[r] * pb.minE[r]
                used = False
                lead = None
                for m, ch in pb.chan[r].items():
                    u = unions[m]
                    if u:
                        used = True
                        need -= pb.wt[m] * ((u & ~self.occ[ch]) >> E[r]).bit_count()
                    c = pb.wt[m] * min(max(E[r], pb.earliest[m]) - 1, pb.z[m] + pb.st[m])
                    lead = c if lead is None else min(lead, c)
                g = max(0, need) + (0 if used else lead)
                growth = max(growth, g)
            total += max(a_sum, b_sum + growth)
        return total

    def node_bound(self, j: int, r: int) -> float:
        """Lower bound on the objective key; INF when provably infeasible."""
        pb = self.pb
        U, E, chain = self.frontier(j, r)
        mk_lb = self.makespan_bound(U, E, chain, pb.uses_makespan())
        if mk_lb == INF:
            return INF
        e_lo, e_hi = self.energy_bounds(U, E)
        if pb.e_cap is not None and e_lo > pb.e_cap:
            return INF
        kind = pb.obj.kind
        if kind == "min_makespan":
            return mk_lb
        if kind == "feasibility":
            return 0
        if kind == "min_energy":
            return -(-e_lo // pb.gran) * pb.gran
        if kind == "max_energy":
            hi = e_hi if pb.e_cap is None else min(e_hi, pb.e_cap)
            return -((hi // pb.gran) * pb.gran)
        a, b = pb.alpha_num, pb.alpha_den
        return a * pb.scale * mk_lb + (b - a) * e_lo

    # -- leaf -------------------------------------------------------------------

    def leaf_energy(self) -> int | None:
        pb = self.pb
        if not pb.dynamic:
            return self.committed
        total = 0
        for m in range(pb.M):
            u = self._union(m)
            forced = bool(u) or pb.cfg.all_on_at_start
            if not forced:
                continue
            c = timeline_cost(u, pb.st[m], pb.z[m], pb.T, forced)
            if c is None:
                return None
            total += c * pb.wt[m]
        return total

    # -- candidates -------------------------------------------------------------

    def candidates(self, j: int, r: int) -> list[tuple]:
        pb = self.pb
        est = self.start[j][r - 1] + self.dur[j][r - 1] if r else 1
        if j and pb.sb:
            est = max(est, self.start[j - 1][r] + (self.dur[j - 1][r] if pb.fifo else 0))
        rem_min = 0
        if pb.e_cap is not None and not pb.dynamic:
            rem_min = sum(pb.minE[r + 1:]) + (pb.n - j - 1) * pb.job_minE
        out = []
        for m, p, e, ch in pb.elig[r]:
            if pb.e_cap is not None and not pb.dynamic and self.committed + e + rem_min > pb.e_cap:
                continue
            a = max(est, pb.earliest[m])
            b = pb.limit - pb.tail[r] - p + 1
            occ = self.occ[ch]
            pmask = (1 << p) - 1
            if pb.semi_active:
                # a start after a free channel hour is dominated by its left shift
                other = self._union(m) & ~occ if pb.dynamic else -1
                for t in range(a, b + 1):
                    if not (occ >> t) & pmask and (
                        t == a or (occ >> (t - 1)) & 1 or not (other >> (t - 1)) & 1
                    ):
                        out.append((t, m, p, e, ch))
                continue
            for t in range(a, b + 1):
                if not (occ >> t) & pmask:
                    out.append((t, m, p, e, ch))
        order = self.order
        if order == "makespan":
            out.sort(key=lambda c: (c[0] + c[2], c[3], c[1]))
        elif order == "energy":
            out.sort(key=lambda c: (c[3], c[0], c[1]))
        elif order == "max_energy":
            out.sort(key=lambda c: (-c[3], c[0], c[1]))
        elif order == "weighted":
            a_, b_ = pb.alpha_num, pb.alpha_den
            out.sort(key=lambda c: (a_ * pb.scale * (c[0] + c[2] - 1) + (b_ - a_) * c[3], c[0], c[1]))
        else:  # "lexicographic": machine id, then start
            out.sort(key=lambda c: (c[1], c[0]))
        return out

    def place(self, j: int, r: int, c: tuple) -> int:
        t, m, p, e, ch = c
        self.start[j][r] = t
        self.mach[j][r] = m
        self.dur[j][r] = p
        self.occ[ch] |= ((1 << p) - 1) << t
        self.committed += e
        prev = self.mk
        self.mk = max(self.mk, t + p - 1)
        return prev

    def unplace(self, j: int, r: int, c: tuple, prev_mk: int) -> None:
        t, m, p, e, ch = c
        self.occ[ch] &= ~(((1 << p) - 1) << t)
        self.committed -= e
        self.mk = prev_mk
        self.mach[j][r] = -1

    # -- driver ------------------------------------------------------------------

    def _record(self) -> bool:
        pb = self.pb
        energy = self.leaf_energy()
        if energy is None:
            return False
        if pb.e_cap is not None and energy > pb.e_cap:
            return False
        k = pb.key(self.mk, energy)
        if k < self.best_key:
            self.best_key = k
            self.best_mk = self.mk
            self.best_energy = energy
            self.best = [
                (j, r, self.mach[j][r], self.start[j][r], self.dur[j][r]) for j in range(pb.n) for r in range(pb.R)
            ]
            return True
        return False

    def dive(self) -> bool:
        """Greedy: first candidate at every level, no backtracking."""
        pb = self.pb
        placed = []
        ok = True
        for j in range(pb.n):
            for r in range(pb.R):
                chosen = None
                for c in self.candidates(j, r):
                    prev = self.place(j, r, c)
                    if self.node_bound(j, r) < INF:
                        chosen = (c, prev)
                        break
                    self.unplace(j, r, c, prev)
                if chosen is None:
                    ok = False
                    break
                placed.append((j, r) + chosen)
            if not ok:
                break
        found = ok and self._record()
        for j, r, c, prev in reversed(placed):
            self.unplace(j, r, c, prev)
        return found

    def run(self, root_bound: float) -> None:
        self.root_bound = root_bound
        try:
            if self.pb.n == 0:
                self._record()
            else:
                self._dfs(0, 0)
        except _Timeout:
            self.timed_out = True

    def _dfs(self, j: int, r: int) -> bool:
        """Returns True when the search can stop (optimality or first feasible)."""
        pb = self.pb
        self.nodes += 1
        if self.deadline is not None and self.nodes % 256 == 0 and time.perf_counter() > self.deadline:
            raise _Timeout
        nj, nr = (j, r + 1) if r + 1 < pb.R else (j + 1, 0)
        for c in self.candidates(j, r):
            prev = self.place(j, r, c)
            lb = self.node_bound(j, r)
            if lb < self.best_key:
                if nj == pb.n:
                    if self._record() and (self.first_feasible or self.best_key <= self.root_bound):
                        self.unplace(j, r, c, prev)
                        return True
                elif self._dfs(nj, nr):
                    self.unplace(j, r, c, prev)
                    return True
            self.unplace(j, r, c, prev)
        return False

    def solution(self) -> ScheduleSolution | None:
        if self.best is None:
            return None
        return ScheduleSolution(
            tuple(Assignment(j, self.pb.inst.routing[r], m, t, p) for j, r, m, t, p in self.best),
            frozenset(range(self.pb.n)),
        )


def _order_for(objective: Objective) -> str:
    return {
        "min_makespan": "makespan",
        "feasibility": "makespan",
        "max_throughput": "makespan",
        "min_energy": "energy",
        "max_energy": "max_energy",
        "weighted_sum": "weighted",
    }[objective.kind]


def _active_count(instance: Instance, config: ModelConfig) -> int:
    return instance.num_jobs if config.fixed_throughput is None else config.fixed_throughput


def build_timelines(
    instance: Instance, solution: ScheduleSolution, all_on_at_start: bool = False
) -> tuple[MachineTimeline, ...]:
    """Cheapest on/off plan of every machine for the schedule's busy hours."""
    busy: dict[int, list[tuple[int, int]]] = {m.id: [] for m in instance.machines}
    for a in solution.assignments:
        busy[a.machine].append((a.start, a.completion))
    out = []
    for m in instance.machines:
        forced = bool(busy[m.id]) or all_on_at_start
        out.append(
            optimize_timeline(busy[m.id], m.startup_h, m.min_on_h, instance.horizon, machine=m.id, forced=forced)
        )
    return tuple(out)


def _finish(
    instance: Instance,
    config: ModelConfig,
    objective: Objective,
    status: str,
    solution: ScheduleSolution | None,
    value: Fraction | None,
    bound: Fraction | None,
    nodes: int,
    t0: float,
) -> SolveResult:
    timelines = None
    on_energy = None
    energy = None
    if solution is not None:
        if config.dynamic_switching:
            timelines = build_timelines(instance, solution, config.all_on_at_start)
            on_energy = on_time_energy(instance, timelines)
        energy = utilisation_energy(instance, solution).total_kwh
        violations = check_solution(instance, config, solution, timelines)
        if violations:
            raise AssertionError(f"solver produced an infeasible schedule: {violations[:3]}")
    return SolveResult(
        status=status,
        objective=objective,
        solution=solution,
        timelines=timelines,
        objective_value=value,
        dual_bound=bound,
        nodes_explored=nodes,
        wall_time=time.perf_counter() - t0,
        makespan=None if solution is None else solution.makespan,
        throughput=None if solution is None else solution.throughput,
        energy=energy,
        on_time_energy=on_energy,
    )


def _deadline(time_limit: float | None) -> float | None:
    return None if time_limit is None else time.perf_counter() + time_limit


def solve(
    instance: Instance,
    config: ModelConfig | None = None,
    objective: Objective | None = None,
    time_limit: float | None = None,
    *,
    order: str | None = None,
) -> SolveResult:
    """Optimise ``objective`` over schedules feasible under ``config``.

    Returns ``optimal`` with a proof, ``feasible_bound`` with the best
    schedule and a dual bound when ``time_limit`` (seconds) runs out,
    ``infeasible`` when no schedule exists, and ``horizon_exhausted`` when
    time ran out before any schedule was found.
    """
    config = config or ModelConfig()
    objective = objective or Objective.makespan()
    t0 = time.perf_counter()
    report = validate_instance(instance)
    fatal = report.codes() - {"horizon_below_critical_path"}
    if fatal:
        raise ValueError(f"invalid instance: {sorted(fatal)}")
    deadline = _deadline(time_limit)

    if objective.kind == "max_throughput":
        return _solve_throughput(instance, config, objective, deadline, t0, order)

    n = _active_count(instance, config)
    if n > instance.num_jobs:
        return _finish(instance, config, objective, INFEASIBLE, None, None, None, 0, t0)
    prob = _Problem(instance, config, objective, n)
    search = _Search(prob, order or _order_for(objective), deadline, objective.kind == "feasibility")
    root = search.node_bound(-1, 0) if n else prob.key(0, search.leaf_energy() or 0)
    if root == INF:
        return _finish(instance, config, objective, INFEASIBLE, None, None, None, 0, t0)

    if n:
        dives = [search.order]
        if objective.kind == "weighted_sum":
            dives += [o for o in ("makespan", "energy") if o != search.order]
        for o in dives:
            search.order = o
            search.dive()
            if search.best is not None and (objective.kind == "feasibility" or search.best_key <= root):
                break
        search.order = order or _order_for(objective)
    if not (search.best is not None and (objective.kind == "feasibility" or search.best_key <= root)):
        search.run(root)

    sol = search.solution()
    if sol is None:
        status = HORIZON_EXHAUSTED if search.timed_out else INFEASIBLE
        return _finish(instance, config, objective, status, None, None, None, search.nodes, t0)
    value = prob.key_value(search.best_key)
    if search.timed_out and search.best_key > root:
        return _finish(
            instance, config, objective, FEASIBLE_BOUND, sol, value, prob.key_value(root), search.nodes, t0
        )
    return _finish(instance, config, objective, OPTIMAL, sol, value, value, search.nodes, t0)


def _solve_throughput(
    instance: Instance, config: ModelConfig, objective: Objective, deadline: float | None, t0: float, order
) -> SolveResult:
    cfg = replace(config, variable_throughput=True)
    if config.fixed_throughput is not None:
        candidates = [config.fixed_throughput] if config.fixed_throughput <= instance.num_jobs else []
    else:
        candidates = list(range(instance.num_jobs, -1, -1))
    nodes = 0
    unproven: int | None = None
    for n in candidates:
        prob = _Problem(instance, cfg, Objective.feasibility(), n)
        search = _Search(prob, order or "makespan", deadline, first_feasible=True)
        if n == 0:
            search.run(0)
        else:
            if search.node_bound(-1, 0) == INF:
                continue
            if deadline is not None and time.perf_counter() > deadline:
                unproven = n if unproven is None else unproven
                continue
            if not search.dive():
                search.run(0)
        nodes += search.nodes
        sol = search.solution()
        if sol is not None:
            if unproven is None:
                return _finish(instance, cfg, objective, OPTIMAL, sol, Fraction(n), Fraction(n), nodes, t0)
            return _finish(instance, cfg, objective, FEASIBLE_BOUND, sol, Fraction(n), Fraction(unproven), nodes, t0)
        if search.timed_out and unproven is None:
            unproven = n
    if unproven is not None:
        return _finish(instance, cfg, objective, HORIZON_EXHAUSTED, None, None, Fraction(unproven), nodes, t0)
    return _finish(instance, cfg, objective, INFEASIBLE, None, None, None, nodes, t0)


def greedy_upper_bound(
    instance: Instance, config: ModelConfig | None = None, objective: Objective | None = None
) -> ScheduleSolution | None:
    """Earliest-start list schedule in job/routing order.

    Channel choice follows the objective: cheapest energy first for energy,
    earliest completion for makespan.  ``None`` when the horizon (or a cap)
    leaves the list schedule stuck.
    """
    config = config or ModelConfig()
    objective = objective or Objective.makespan()
    if objective.kind == "max_throughput":
        objective = Objective.makespan()
    n = _active_count(instance, config)
    prob = _Problem(instance, config, objective, n)
    search = _Search(prob, _order_for(objective), None)
    if n == 0:
        search.run(0)
    elif not search.dive():
        return None
    return search.solution()


def lower_bound(
    instance: Instance,
    config: ModelConfig | None = None,
    partial_assignment: Iterable[Assignment] = (),
    objective: Objective | None = None,
) -> Fraction | float:
    """Admissible bound on the objective for any completion of the partial schedule.

    Returns ``inf`` when no completion can be feasible.  For
    ``max_energy`` the value is an upper bound.
    """
    config = config or ModelConfig()
    objective = objective or Objective.makespan()
    if objective.kind == "max_throughput":
        raise ValueError("lower_bound is defined for minimisation objectives and max_energy")
    n = _active_count(instance, config)
    prob = _Problem(instance, config, objective, n)
    search = _Search(prob, "makespan", None)
    partial = [Assignment(*a) for a in partial_assignment]
    pos = {k: r for r, k in enumerate(instance.routing)}
    R = prob.R
    done: dict[int, dict[int, Assignment]] = {}
    for a in partial:
        r = pos[a.op]
        row = next((c for c in prob.elig[r] if c[0] == a.machine), None)
        if row is None:
            return INF
        m, p, e, ch = row
        search.occ[ch] |= ((1 << p) - 1) << a.start
        search.committed += e
        search.mk = max(search.mk, a.completion)
        done.setdefault(a.job, {})[r] = a

    # generic frontier: any subset of (job, op) may be fixed
    U = [0] * R
    E = [INF] * R
    chain = 0
    sb_floor = [0] * R  # max start of op r among lower-indexed jobs seen so far
    for j in range(n):
        fixed = done.get(j, {})
        release_chain = 1
        last_fixed = -1
        for r in range(R):
            if r in fixed:
                a = fixed[r]
                chain = max(chain, a.completion + prob.tail[r])
                release_chain = a.completion + 1
                last_fixed = r
                continue
            rel = max(release_chain + prob.P[r] - prob.P[last_fixed + 1], prob.head[r] + 1)
            if prob.sb:
                rel = max(rel, sb_floor[r])
            U[r] += 1
            E[r] = min(E[r], rel)
            chain = max(chain, rel + prob.P[R] - prob.P[r] - 1)
        for r, a in fixed.items():
            floor = a.start + (a.duration if prob.fifo else 0)
            sb_floor[r] = max(sb_floor[r], floor)
    E = [e if e != INF else 0 for e in E]
    mk_lb = search.makespan_bound(U, E, chain)
    if mk_lb == INF:
        return INF
    e_lo, e_hi = search.energy_bounds(U, E)
    if prob.e_cap is not None and e_lo > prob.e_cap:
        return INF
    kind = objective.kind
    if kind == "min_makespan":
        return Fraction(mk_lb)
    if kind == "feasibility":
        return Fraction(0)
    if kind == "min_energy":
        return Fraction(e_lo, prob.scale)
    if kind == "max_energy":
        hi = e_hi if prob.e_cap is None else min(e_hi, prob.e_cap)
        return Fraction(hi, prob.scale)
    a = objective.alpha
    return a * mk_lb + (1 - a) * Fraction(e_lo, prob.scale)


# -- brute-force oracle ----------------------------------------------------------

BRUTE_MAX_JOBS = 3
BRUTE_MAX_HORIZON = 14


def brute_force_solve(
    instance: Instance, config: ModelConfig | None = None, objective: Objective | None = None
) -> SolveResult:
    """Exhaustive enumeration of every (machine, start) per operation.

    Independent of the branch-and-bound code: it only prunes partial
    schedules that already break a constraint, and it tries every subset of
    jobs when throughput is variable.  Refuses instances above
    ``BRUTE_MAX_JOBS`` jobs or ``BRUTE_MAX_HORIZON`` hours.
    """
    config = config or ModelConfig()
    objective = objective or Objective.makespan()
    if instance.num_jobs > BRUTE_MAX_JOBS or instance.horizon > BRUTE_MAX_HORIZON:
        raise ValueError("instance too large for brute force")
    t0 = time.perf_counter()
    T = instance.horizon
    limit = T if config.makespan_cap is None else min(T, config.makespan_cap)
    routing = list(instance.routing)
    ops = [instance.operation(k) for k in routing]
    machines = {m.id: m for m in instance.machines}

    if objective.kind == "max_throughput":
        cfg = replace(config, variable_throughput=True)
        if config.fixed_throughput is not None:
            sizes = [config.fixed_throughput]
        else:
            sizes = list(range(instance.num_jobs, -1, -1))
        subsets = [s for k in sizes for s in itertools.combinations(range(instance.num_jobs), k)]
    else:
        cfg = config
        k = instance.num_jobs if config.fixed_throughput is None else config.fixed_throughput
        subsets = list(itertools.combinations(range(instance.num_jobs), k)) if k <= instance.num_jobs else []

    def value(sol: ScheduleSolution) -> tuple[Fraction, Fraction | None, tuple | None] | None:
        timelines = None
        if config.dynamic_switching:
            try:
                timelines = build_timelines(instance, sol, config.all_on_at_start)
            except ValueError:
                return None
            energy = on_time_energy(instance, timelines)
        else:
            energy = utilisation_energy(instance, sol).total_kwh
        if config.energy_cap is not None and energy > config.energy_cap:
            return None
        mk = makespan(sol)
        kind = objective.kind
        if kind == "min_makespan":
            v = Fraction(mk)
        elif kind == "min_energy":
            v = energy
        elif kind == "max_energy":
            v = -energy
        elif kind == "max_throughput":
            v = Fraction(-sol.throughput)
        elif kind == "feasibility":
            v = Fraction(0)
        else:
            v = objective.alpha * mk + (1 - objective.alpha) * energy
        return v, energy, timelines

    best: list = [None, None]
    nodes = 0
    # constant objective per subset size: the first feasible leaf settles it
    first_only = objective.kind in ("max_throughput", "feasibility")
    # partial makespan and utilisation energy only grow along a branch, so for
    # these objectives a partial value at or above the incumbent cannot improve
    prune = not config.dynamic_switching and objective.kind in ("min_makespan", "min_energy", "weighted_sum")

    def partial(mk: int, energy: Fraction) -> Fraction:
        if objective.kind == "min_makespan":
            return Fraction(mk)
        if objective.kind == "min_energy":
            return energy
        return objective.alpha * mk + (1 - objective.alpha) * energy

    class _Found(Exception):
        pass

    for subset in subsets:
        jobs = list(subset)
        slots = [(j, r) for j in jobs for r in range(len(routing))]
        chosen: dict[tuple[int, int], Assignment] = {}
        occupied: dict[tuple[int, int] | int, int] = {}

        def channel(a: Assignment):
            return (a.op, a.machine) if cfg.capacity_mode == TASK_CHANNEL else a.machine

        def ok(a: Assignment, j: int, r: int) -> bool:
            if a.completion > limit:
                return False
            if config.dynamic_switching and a.start < 1 + machines[a.machine].startup_h:
                return False
            if r and a.start <= chosen[(j, r - 1)].completion:
                return False
            idx = jobs.index(j)
            if idx and (config.symmetry_breaking or config.fifo):
                b = chosen.get((jobs[idx - 1], r))
                if b is not None:
                    if config.symmetry_breaking and a.start < b.start:
                        return False
                    if config.fifo and a.start < b.start + b.duration:
                        return False
            span = ((1 << a.duration) - 1) << a.start
            return not occupied.get(channel(a), 0) & span

        def rec(i: int, mk: int = 0, energy: Fraction = Fraction(0)) -> None:
            nonlocal nodes
            nodes += 1
            if prune and best[0] is not None and partial(mk, energy) >= best[0][0]:
                return
            if i == len(slots):
                sol = ScheduleSolution(tuple(chosen.values()), frozenset(jobs))
                res = value(sol)
                if res is not None and (best[0] is None or res[0] < best[0][0]):
                    best[0] = res
                    best[1] = sol
                    if first_only:
                        raise _Found
                return
            j, r = slots[i]
            op = ops[r]
            for m in sorted(op.eligible):
                p = op.eligible[m]
                for t in range(1, T + 1):
                    a = Assignment(j, routing[r], m, t, p)
                    if ok(a, j, r):
                        key = channel(a)
                        span = ((1 << p) - 1) << t
                        chosen[(j, r)] = a
                        occupied[key] = occupied.get(key, 0) | span
                        rec(i + 1, max(mk, a.completion), energy + p * machines[m].power_kw)
                        occupied[key] ^= span
                        del chosen[(j, r)]

        try:
            rec(0)
        except _Found:
            break

    if best[1] is None:
        return SolveResult(INFEASIBLE, objective, nodes_explored=nodes, wall_time=time.perf_counter() - t0)
    v, energy, timelines = best[0]
    sol = best[1]
    if objective.kind in ("max_energy", "max_throughput"):
        v = -v
    if check_solution(instance, cfg, sol, timelines):
        raise AssertionError("brute force kept an infeasible schedule")
    return SolveResult(
        status=OPTIMAL,
        objective=objective,
        solution=sol,
        timelines=timelines,
        objective_value=v,
        dual_bound=v,
        nodes_explored=nodes,
        wall_time=time.perf_counter() - t0,
        makespan=sol.makespan,
        throughput=sol.throughput,
        energy=utilisation_energy(instance, sol).total_kwh,
        on_time_energy=energy if config.dynamic_switching else None,
    )
