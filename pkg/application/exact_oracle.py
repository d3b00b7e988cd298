"""Exact optimum for small instances"""
import logging
from dataclasses import dataclass, field
from typing import Iterable, Optional

from application.errors import OracleCapError
from application.instance_model import Instance, Schedule
from config.constants import ORACLE_CONFIG

logger = logging.getLogger(__name__)


@dataclass
class ParetoState:
    """Non-dominated (makespan, cost) pairs reachable by scheduling `scheduled` first

    frontier is sorted by makespan ascending with cost strictly descending;
    parents[i] = (previous subset, index in its frontier, appended job).
    """
    scheduled: int
    frontier: list[tuple[float, float]] = field(default_factory=list)
    parents: list[tuple[int, int, int]] = field(default_factory=list)

    def offer(self, makespan: float, cost: float, parent: tuple[int, int, int]):
        self.frontier.append((makespan, cost))
        self.parents.append(parent)

    def prune(self):
        ranked = sorted(range(len(self.frontier)), key=lambda i: (self.frontier[i], self.parents[i]))
        frontier, parents = [], []
        for i in ranked:
            makespan, cost = self.frontier[i]
            if frontier and cost >= frontier[-1][1]:
                continue
            frontier.append((makespan, cost))
            parents.append(self.parents[i])
        self.frontier, self.parents = frontier, parents


def _timed(instance: Instance, sequence: Iterable[int]) -> tuple[float, list[float]]:
    """Greedy timing of a fixed order: each job at max(makespan, r_j)"""
    start = [0.0] * instance.n
    makespan, cost = 0.0, 0.0
    for j in sequence:
        job = instance.jobs[j]
        start[j] = max(makespan, job.r)
        makespan = start[j] + job.p
        cost += job.w * makespan
    return cost, start


def _pareto(instance: Instance) -> tuple[float, Schedule]:
    n = instance.n
    pred_mask = [sum(1 << i for i in instance.predecessors[j]) for j in range(n)]
    full = (1 << n) - 1
    states: dict[int, ParetoState] = {0: ParetoState(0, [(0.0, 0.0)], [(-1, -1, -1)])}
    for mask in range(full + 1):
        state = states.get(mask)
        if state is None:
            continue
        if mask:
            state.prune()
        if mask == full:
            break
        for j in range(n):
            bit = 1 << j
            if mask & bit or pred_mask[j] & ~mask:
                continue
            job = instance.jobs[j]
            child = states.setdefault(mask | bit, ParetoState(mask | bit))
            for index, (makespan, cost) in enumerate(state.frontier):
                finish = max(makespan, job.r) + job.p
                child.offer(finish, cost + job.w * finish, (mask, index, j))

    final = states[full]
    best = min(range(len(final.frontier)), key=lambda i: (final.frontier[i][1], i))
    sequence = []
    mask, index = full, best
    while mask:
        parent_mask, parent_index, job = states[mask].parents[index]
        sequence.append(job)
        mask, index = parent_mask, parent_index
    sequence.reverse()
    cost, start = _timed(instance, sequence)
    return cost, Schedule(tuple(start))


def _permutation(instance: Instance) -> tuple[float, Schedule]:
    n = instance.n
    best_cost, best_sequence = float('inf'), None
    sequence: list[int] = []
    placed = [False] * n

    def extend(makespan: float, cost: float):
        nonlocal best_cost, best_sequence
        if len(sequence) == n:
            if cost < best_cost:
                best_cost, best_sequence = cost, list(sequence)
            return
        for j in range(n):
            if placed[j] or not all(placed[i] for i in instance.predecessors[j]):
                continue
            job = instance.jobs[j]
            finish = max(makespan, job.r) + job.p
            placed[j] = True
            sequence.append(j)
            extend(finish, cost + job.w * finish)
            sequence.pop()
            placed[j] = False

    extend(0.0, 0.0)
    cost, start = _timed(instance, best_sequence)
    return cost, Schedule(tuple(start))


def exact_opt(instance: Instance, cap: Optional[int] = None, method: str = "pareto") -> tuple[float, Schedule]:
    """
    Minimum weighted completion time and one optimal schedule

    Args:
        method: "pareto" (dynamic program over subsets) or "permutation"
            (enumeration of linear extensions with greedy timing)

    Raises:
        OracleCapError: more jobs than the method's cap
    """
    if method not in ("pareto", "permutation"):
        raise ValueError(f"unknown oracle method {method!r}")
    if cap is None:
        cap = ORACLE_CONFIG['pareto_cap'] if method == "pareto" else ORACLE_CONFIG['permutation_cap']
    if instance.n > cap:
        raise OracleCapError(f"{instance.n} jobs exceed the exact oracle cap {cap}")
    if instance.n == 0:
        return 0.0, Schedule(())
    if method == "pareto":
        return _pareto(instance)
    return _permutation(instance)


def exact_contribution(instance: Instance, optimal: Schedule, subset: Iterable[int]) -> float:
    """Contribution sum_{j in subset} w_j C*_j of a subset to a schedule"""
    completion = optimal.completion(instance)
    return float(sum(instance.jobs[j].w * completion[j] for j in subset))
