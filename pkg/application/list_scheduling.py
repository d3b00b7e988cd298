"""List scheduling in order of LP values"""
import logging
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Optional

import networkx as nx
import numpy as np

from application.errors import InstanceValidationError
from application.instance_model import Instance, Schedule, time_tolerance
from application.lp_relaxation import LpSolution, solve_lp
from application.report import Report
from config.constants import SCHEDULE_CONFIG

logger = logging.getLogger(__name__)


class LsVariant(Enum):
    """AVAILABLE: start the first available job whenever the machine is free.
    STRICT: follow the list exactly, idling until the next job is released."""
    AVAILABLE = "available"
    STRICT = "strict"


@dataclass(frozen=True)
class JobOrder:
    """Priority list; position 0 is the highest priority"""
    order: tuple[int, ...]

    @cached_property
    def rank(self) -> tuple[int, ...]:
        rank = [0] * len(self.order)
        for position, j in enumerate(self.order):
            rank[j] = position
        return tuple(rank)

    def check(self, instance: Instance):
        """Raise unless the order is a permutation consistent with precedence"""
        if sorted(self.order) != list(range(instance.n)):
            raise InstanceValidationError(f"order {list(self.order)} is not a permutation of the jobs")
        for j, k in sorted(instance.prec):
            if self.rank[j] > self.rank[k]:
                raise InstanceValidationError(f"order places {k} before its predecessor {j}")


@dataclass(frozen=True)
class LpLsResult:
    schedule: Schedule
    lp: LpSolution
    order: JobOrder


def lp_order(lp: LpSolution, instance: Instance) -> JobOrder:
    """Jobs by LP value; ties (and float noise) resolved by precedence, then id"""
    C = lp.C
    order = nx.lexicographical_topological_sort(instance.graph, key=lambda j: (C[j], j))
    return JobOrder(tuple(int(j) for j in order))


def list_schedule(instance: Instance, order: JobOrder, variant=None, tol: Optional[float] = None) -> Schedule:
    """
    List scheduling, available-job variant

    Whenever the machine is free at time t, start the highest-priority job that
    is released by t, unscheduled, and whose predecessors are complete; with no
    such job, advance t to the next release. A job completing at t frees its
    successors at t.
    """
    variant = LsVariant(variant or SCHEDULE_CONFIG['ls_variant'])
    tol = time_tolerance(instance, tol)
    order.check(instance)
    n = instance.n
    start = [0.0] * n
    t = 0.0

    if variant is LsVariant.STRICT:
        for j in order.order:
            start[j] = max(t, instance.jobs[j].r)
            t = start[j] + instance.jobs[j].p
        return Schedule(tuple(start))

    waiting = [len(instance.predecessors[j]) for j in range(n)]
    remaining = set(range(n))
    rank = order.rank
    while remaining:
        ready = [j for j in remaining if waiting[j] == 0]
        available = [j for j in ready if instance.jobs[j].r <= t + tol]
        if not available:
            t = min(instance.jobs[j].r for j in ready)
            continue
        j = min(available, key=lambda k: rank[k])
        start[j] = max(t, instance.jobs[j].r)
        t = start[j] + instance.jobs[j].p
        remaining.discard(j)
        for k in instance.successors[j]:
            waiting[k] -= 1
    return Schedule(tuple(start))


def run_lp_ls(instance: Instance, separation=None, variant=None) -> LpLsResult:
    """LP+LS with its LP solution and list"""
    lp = solve_lp(instance, separation=separation)
    order = lp_order(lp, instance)
    schedule = list_schedule(instance, order, variant)
    return LpLsResult(schedule, lp, order)


def lp_ls(instance: Instance, separation=None, variant=None) -> Schedule:
    """
    LP+LS: solve the LP, relabel by C_j, list schedule

    Raises:
        LpIterationError, LpSolveError: propagated from solve_lp
    """
    return run_lp_ls(instance, separation, variant).schedule


def check_ls_property(trace: Schedule, instance: Instance, order: JobOrder, tol: Optional[float] = None) -> Report:
    """
    If the machine is available at t and some job j with r_j <= t has not
    started, some job of priority at most j's starts at t.
    """
    tol = time_tolerance(instance, tol)
    report = Report("ls_property")
    S = np.asarray(trace.start, dtype=float)
    completion = trace.completion(instance)
    rank = order.rank
    moments = sorted({0.0, *S.tolist(), *completion.tolist(), *instance.r.tolist()})
    for t in moments:
        report.tick()
        busy = np.any((S < t - tol) & (completion > t + tol))
        if busy:
            continue
        waiting = [j for j in range(instance.n) if instance.jobs[j].r <= t + tol and S[j] >= t - tol]
        if not waiting:
            continue
        j = min(waiting, key=lambda k: rank[k])
        if not any(abs(S[h] - t) <= tol and rank[h] <= rank[j] for h in range(instance.n)):
            report.add(f"t={t:.9g}: machine available and job {j} released but no job of priority <= {rank[j]} starts")
    return report


def check_block_bounds(trace: Schedule, instance: Instance, lp: LpSolution, order: JobOrder,
                       tol: float = 1e-6) -> Report:
    """
    Recompute, for each job j, the block [t, C_j] without idle time holding only
    jobs of priority <= j, and check

        C^s_j <= t + 2 C_j - 2 r_min(U)      always
        C^s_j <= 2 C_j                       when no job completes at t
        r_min(U) > s                         when job k started at s completes at t
    """
    slack = tol * max(1.0, instance.time_scale)
    report = Report("block_bounds")
    S = list(trace.start)
    completion = trace.completion(instance)
    rank = order.rank
    sequence = trace.sequence()
    for position, j in enumerate(sequence):
        report.tick()
        block = [j]
        t = S[j]
        i = position
        blocker = None
        while i > 0:
            k = sequence[i - 1]
            if abs(completion[k] - t) > slack:
                break
            if rank[k] > rank[j]:
                blocker = k
                break
            block.append(k)
            t = S[k]
            i -= 1
        r_min = min(instance.jobs[h].r for h in block)
        if completion[j] > t + 2 * lp.C[j] - 2 * r_min + slack:
            report.add(f"job {j}: C={completion[j]:.9g} > t + 2C_j - 2r_min = {t + 2 * lp.C[j] - 2 * r_min:.9g}")
        if blocker is None:
            if completion[j] > 2 * lp.C[j] + slack:
                report.add(f"job {j}: C={completion[j]:.9g} > 2C_j = {2 * lp.C[j]:.9g} with no job completing at t")
        elif r_min <= S[blocker] - slack:
            report.add(f"job {j}: r_min(U)={r_min:.9g} not after start {S[blocker]:.9g} of blocking job {blocker}")
    return report
