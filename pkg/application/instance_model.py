"""Jobs, instances and schedules for 1|r_j,prec|sum w_jC_j"""
import logging
import math
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Iterable, Optional, Sequence

import networkx as nx
import numpy as np

from application.errors import CycleError, InfeasibleScheduleError, InstanceValidationError
from application.report import Report
from config.constants import SCHEDULE_CONFIG

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Job:
    """A single job; times are integers on input but may become rational later"""
    id: int
    p: float
    r: float
    w: float


@dataclass(frozen=True)
class Instance:
    """Jobs plus a precedence relation of pairs (j, k) meaning j before k"""
    jobs: tuple[Job, ...]
    prec: frozenset[tuple[int, int]] = frozenset()

    @classmethod
    def from_lists(cls, p: Sequence[float], r: Sequence[float], w: Sequence[float],
                   prec: Iterable[tuple[int, int]] = ()) -> "Instance":
        if not len(p) == len(r) == len(w):
            raise InstanceValidationError("p, r and w must have the same length")
        jobs = tuple(Job(j, p[j], r[j], w[j]) for j in range(len(p)))
        return cls(jobs, frozenset((int(j), int(k)) for j, k in prec))

    @property
    def n(self) -> int:
        return len(self.jobs)

    @cached_property
    def p(self) -> np.ndarray:
        return np.array([job.p for job in self.jobs], dtype=float)

    @cached_property
    def r(self) -> np.ndarray:
        return np.array([job.r for job in self.jobs], dtype=float)

    @cached_property
    def w(self) -> np.ndarray:
        return np.array([job.w for job in self.jobs], dtype=float)

    @cached_property
    def predecessors(self) -> tuple[frozenset[int], ...]:
        preds: list[set[int]] = [set() for _ in self.jobs]
        for j, k in self.prec:
            preds[k].add(j)
        return tuple(frozenset(s) for s in preds)

    @cached_property
    def successors(self) -> tuple[frozenset[int], ...]:
        succs: list[set[int]] = [set() for _ in self.jobs]
        for j, k in self.prec:
            succs[j].add(k)
        return tuple(frozenset(s) for s in succs)

    @cached_property
    def graph(self) -> nx.DiGraph:
        g = nx.DiGraph()
        g.add_nodes_from(range(self.n))
        g.add_edges_from(self.prec)
        return g

    @property
    def time_scale(self) -> float:
        if not self.jobs:
            return 1.0
        return float(self.r.max() + self.p.sum())

    def with_release(self, release: Sequence[float]) -> "Instance":
        """Copy with new release times"""
        jobs = tuple(replace(job, r=float(release[job.id])) for job in self.jobs)
        return Instance(jobs, self.prec)

    def with_processing(self, processing: Sequence[float]) -> "Instance":
        jobs = tuple(replace(job, p=float(processing[job.id])) for job in self.jobs)
        return Instance(jobs, self.prec)

    def restrict(self, ids: Sequence[int]) -> "Instance":
        """Sub-instance on `ids` (re-indexed in the given order), precedence restricted"""
        position = {j: i for i, j in enumerate(ids)}
        jobs = tuple(Job(i, self.jobs[j].p, self.jobs[j].r, self.jobs[j].w) for i, j in enumerate(ids))
        prec = frozenset((position[j], position[k]) for j, k in self.prec
                         if j in position and k in position)
        return Instance(jobs, prec)


@dataclass(frozen=True)
class Schedule:
    """Start time per job; completion times are derived from an instance"""
    start: tuple[float, ...]

    def completion(self, instance: Instance) -> np.ndarray:
        return np.asarray(self.start, dtype=float) + instance.p

    def sequence(self) -> list[int]:
        """Job ids in order of start time"""
        return sorted(range(len(self.start)), key=lambda j: (self.start[j], j))


def time_tolerance(instance: Instance, tol: Optional[float] = None) -> float:
    base = SCHEDULE_CONFIG['time_tolerance'] if tol is None else tol
    return base * max(1.0, instance.time_scale)


def transitive_closure(pairs: Iterable[tuple[int, int]], n: Optional[int] = None) -> frozenset[tuple[int, int]]:
    """
    Transitive closure of a precedence relation

    Raises:
        CycleError: if the pairs contain a cycle (the witness is attached)
    """
    g = nx.DiGraph()
    if n is not None:
        g.add_nodes_from(range(n))
    g.add_edges_from(pairs)
    if not nx.is_directed_acyclic_graph(g):
        raise CycleError(nx.find_cycle(g))
    closed = nx.transitive_closure_dag(g)
    return frozenset((int(j), int(k)) for j, k in closed.edges())


def validate(instance: Instance) -> Report:
    """Report every structural defect of an instance; empty iff well-formed"""
    report = Report("validate")
    n = instance.n
    for job in instance.jobs:
        report.tick()
        for name in ("p", "r", "w"):
            value = getattr(job, name)
            if not math.isfinite(value):
                report.add(f"job {job.id}: {name} is not finite")
            elif value < 0:
                report.add(f"job {job.id}: negative {name}={value}")

    bad_ids = [(j, k) for j, k in instance.prec if not (0 <= j < n and 0 <= k < n)]
    for j, k in sorted(bad_ids):
        report.add(f"precedence ({j},{k}) references an unknown job")
    if bad_ids:
        return report

    for j, k in sorted(instance.prec):
        if j == k:
            report.add(f"precedence ({j},{k}) is reflexive")

    g = instance.graph.copy()
    g.remove_edges_from(nx.selfloop_edges(g))
    if not nx.is_directed_acyclic_graph(g):
        cycle = nx.find_cycle(g)
        path = " -> ".join(str(j) for j, _ in cycle) + f" -> {cycle[0][0]}"
        report.add(f"cycle: {path}")
        return report

    missing = transitive_closure(g.edges(), n) - instance.prec
    for h, k in sorted(missing):
        report.add(f"missing transitive edge ({h},{k})")
    report.tick(len(instance.prec))
    return report


def prepare(instance: Instance) -> Instance:
    """Validate (raising on findings), reject zero processing times, normalize releases"""
    report = validate(instance)
    if not report.ok:
        raise InstanceValidationError(report.violations[0], report.violations)
    zero = [job.id for job in instance.jobs if job.p == 0]
    if zero:
        raise InstanceValidationError(
            f"jobs {zero} have zero processing time; remove them or merge them into a neighbour",
            [f"job {j}: zero processing time" for j in zero],
        )
    return normalize_release_times(instance)


def normalize_release_times(instance: Instance) -> Instance:
    """Raise r_k to the largest release among its predecessors"""
    release = list(instance.r)
    for k in nx.topological_sort(instance.graph):
        for j in instance.predecessors[k]:
            release[k] = max(release[k], release[j])
    if all(a == b for a, b in zip(release, instance.r)):
        return instance
    return instance.with_release(release)


def feasibility_violations(schedule: Schedule, instance: Instance, tol: Optional[float] = None,
                           limit: Optional[int] = None) -> list[str]:
    """List release, overlap and precedence violations (at most `limit`)"""
    tol = time_tolerance(instance, tol)
    violations: list[str] = []
    if len(schedule.start) != instance.n:
        return [f"schedule has {len(schedule.start)} start times for {instance.n} jobs"]

    start = schedule.start
    completion = schedule.completion(instance)

    def full() -> bool:
        return limit is not None and len(violations) >= limit

    for job in instance.jobs:
        if start[job.id] < job.r - tol:
            violations.append(f"job {job.id} starts at {start[job.id]} before its release {job.r}")
            if full():
                return violations
    for j, k in sorted(instance.prec):
        if start[k] < completion[j] - tol:
            violations.append(f"job {k} starts at {start[k]} before predecessor {j} completes at {completion[j]}")
            if full():
                return violations
    order = schedule.sequence()
    for a, b in zip(order, order[1:]):
        if start[b] < completion[a] - tol:
            violations.append(f"jobs {a} and {b} overlap ({start[a]}-{completion[a]} and {start[b]}-{completion[b]})")
            if full():
                return violations
    return violations


def schedule_cost(schedule: Schedule, instance: Instance, tol: Optional[float] = None) -> float:
    """
    Weighted completion time sum_j w_j (S_j + p_j)

    Raises:
        InfeasibleScheduleError: with the first violation found
    """
    violations = feasibility_violations(schedule, instance, tol, limit=1)
    if violations:
        raise InfeasibleScheduleError(violations[0])
    return float(np.dot(instance.w, schedule.completion(instance)))


def tighten(schedule: Schedule, instance: Instance, tol: Optional[float] = None) -> Schedule:
    """Shift single jobs left until none can start earlier with the others fixed"""
    tol = time_tolerance(instance, tol)
    start = [float(s) for s in schedule.start]
    p = [float(x) for x in instance.p]
    changed = True
    while changed:
        changed = False
        for j in sorted(range(instance.n), key=lambda k: (start[k], k)):
            earliest = max([instance.jobs[j].r] + [start[i] + p[i] for i in instance.predecessors[j]])
            if earliest >= start[j] - tol:
                continue
            others = [(start[k], start[k] + p[k]) for k in range(instance.n) if k != j]
            candidates = sorted({earliest} | {c for _, c in others if earliest < c < start[j] - tol})
            for t in candidates:
                if all(t + p[j] <= s + tol or t >= c - tol for s, c in others):
                    start[j] = t
                    changed = True
                    break
    return Schedule(tuple(start))
