"""
Interval decomposition into bounded sub-instances

The LP is solved once; jobs are grouped by the geometric interval
[t_i, t_{i+1}) holding their LP completion time, with t_i = e^(a(i-3)+b) and
a = 3/eps. Sub-instance i may not start before 3t_i, is solved by the bounded
solver, tightened, and must then lie in [3t_i, 3t_{i+1}], so the union of the
sub-schedules needs no shifting.
"""
import logging
import math
from collections import defaultdict
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Optional

import numpy as np

from application.bounded_solver import Number, as_fraction, solve_bounded
from application.errors import EpsilonRangeError, IntervalContainmentError
from application.exact_oracle import exact_opt
from application.instance_model import Instance, Schedule, schedule_cost, tighten
from application.lp_relaxation import LpSolution, solve_lp
from application.workers import parallel_map
from config.constants import DECOMPOSITION_CONFIG, EPSILON_MAX

logger = logging.getLogger(__name__)


class BMode(Enum):
    RANDOM = "random"
    DERANDOMIZED = "derandomized"


@dataclass(frozen=True)
class IntervalGrid:
    """Breakpoints t_i = e^(a(i-3)+b), i = 1..q, with C_max <= t_q"""
    epsilon: Fraction
    a: float
    b: float
    q: int

    def log_t(self, i: int) -> float:
        return self.a * (i - 3) + self.b

    def t(self, i: int) -> float:
        return math.exp(self.log_t(i))

    @property
    def breakpoints(self) -> tuple[float, ...]:
        return tuple(self.t(i) for i in range(1, self.q + 1))

    def index_of(self, C: float) -> int:
        """The i with t_i <= C < t_{i+1}"""
        i = math.floor((math.log(C) - self.b) / self.a) + 3
        while self.t(i) > C:
            i -= 1
        while self.t(i + 1) <= C:
            i += 1
        return i


@dataclass(frozen=True)
class SubInstance:
    """Jobs of one interval with release times lifted to the floor 3t_i

    job_ids[local] is the parent id of local job `local`.
    """
    index: int
    job_ids: tuple[int, ...]
    floor: float
    ceiling: float
    beta: float
    instance: Instance

    @property
    def L(self) -> float:
        return self.floor


@dataclass(frozen=True)
class IntervalOutcome:
    index: int
    jobs: tuple[int, ...]
    floor: float
    ceiling: float
    cost: float
    guesses_tried: int


@dataclass(frozen=True)
class DecompositionResult:
    schedule: Schedule
    cost: float
    grid: IntervalGrid
    intervals: tuple[IntervalOutcome, ...]
    lp: LpSolution
    guesses_tried: int
    candidates_tried: int = 1

    @property
    def b(self) -> float:
        return self.grid.b


def check_epsilon(epsilon: Number) -> Fraction:
    """
    Raises:
        EpsilonRangeError: unless 0 < eps <= 3/ln 3 (needed for e^(3/eps) >= 3)
    """
    eps = as_fraction(epsilon)
    if eps <= 0 or float(eps) > EPSILON_MAX:
        raise EpsilonRangeError(f"epsilon={eps} outside (0, 3/ln 3 = {EPSILON_MAX:.4f}]: "
                                "sub-schedules are only guaranteed to fit their interval when e^(3/eps) >= 3")
    return eps


def build_grid(epsilon: Number, b: float, c_max: float, check_range: bool = True) -> IntervalGrid:
    """
    Grid with a = 3/eps, offset b in [0, a] and the smallest q with c_max <= t_q

    check_range=False evaluates the formula for any eps > 0 without the
    interval-containment requirement.
    """
    eps = check_epsilon(epsilon) if check_range else as_fraction(epsilon)
    if eps <= 0:
        raise EpsilonRangeError(f"epsilon={eps} must be positive")
    a = 3 / float(eps)
    if not 0 <= b <= a:
        raise ValueError(f"offset b={b} outside [0, {a}]")
    q = max(1, math.ceil((math.log(c_max) - b) / a + 3))
    grid = IntervalGrid(eps, a, float(b), q)
    while grid.t(q) < c_max:
        q += 1
        grid = IntervalGrid(eps, a, float(b), q)
    while q > 1 and grid.t(q - 1) >= c_max:
        q -= 1
        grid = IntervalGrid(eps, a, float(b), q)
    return grid


def bounded_subinstance(instance: Instance, L: float, beta: float, index: int = 1) -> SubInstance:
    """Standalone bounded instance: releases lifted to L, ceiling beta*L"""
    release = [max(job.r, L) for job in instance.jobs]
    return SubInstance(index, tuple(range(instance.n)), float(L), float(beta) * float(L), float(beta),
                       instance.with_release(release))


def partition_jobs(lp: LpSolution, grid: IntervalGrid, instance: Instance) -> list[SubInstance]:
    """Group jobs by the interval holding C_j; empty intervals are skipped"""
    groups: dict[int, list[int]] = defaultdict(list)
    for j, C in enumerate(lp.C):
        groups[grid.index_of(C)].append(j)
    beta = math.exp(grid.a)
    subs = []
    for i in sorted(groups):
        ids = tuple(groups[i])
        floor = 3 * grid.t(i)
        inner = instance.restrict(ids)
        inner = inner.with_release([max(job.r, floor) for job in inner.jobs])
        subs.append(SubInstance(i, ids, floor, 3 * grid.t(i + 1), beta, inner))
    return subs


def derandomize_b(lp: LpSolution, a: float, nudge: Optional[float] = None) -> list[float]:
    """
    Offsets realizing every partition over b in [0, a]

    The partition only changes where some t_i meets a C_j, i.e. at
    b = ln C_j mod a; each such point is nudged into the following constancy
    interval, and b = 0 covers the first one.
    """
    nudge = DECOMPOSITION_CONFIG['b_nudge'] if nudge is None else nudge
    shift = nudge * a
    points = {0.0}
    for C in lp.C:
        points.add(min(math.log(C) % a + shift, a))
    return sorted(points)


def _solve_for_offset(instance: Instance, lp: LpSolution, eps: Fraction, b: float,
                      bounded_mode, budget: Optional[int], workers: Optional[int]) -> DecompositionResult:
    grid = build_grid(eps, b, max(lp.C))
    subs = partition_jobs(lp, grid, instance)

    def solve(sub: SubInstance):
        return sub, solve_bounded(sub, eps, bounded_mode, budget)

    start = [0.0] * instance.n
    intervals = []
    guesses = 0
    for sub, result in parallel_map(solve, subs, workers):
        sigma = tighten(result.schedule, sub.instance)
        slack = 1e-6 * max(1.0, sub.ceiling)
        completion = sigma.completion(sub.instance)
        if min(sigma.start) < sub.floor - slack or max(completion) > sub.ceiling + slack:
            raise IntervalContainmentError(
                f"interval {sub.index}: schedule spans [{min(sigma.start):.9g}, {max(completion):.9g}] "
                f"outside [{sub.floor:.9g}, {sub.ceiling:.9g}]")
        for local, j in enumerate(sub.job_ids):
            start[j] = sigma.start[local]
        cost = float(np.dot(sub.instance.w, completion))
        intervals.append(IntervalOutcome(sub.index, sub.job_ids, sub.floor, sub.ceiling, cost, result.guesses_tried))
        guesses += result.guesses_tried

    schedule = Schedule(tuple(start))
    return DecompositionResult(schedule, schedule_cost(schedule, instance), grid, tuple(intervals), lp, guesses)


def solve_decomposed(instance: Instance, epsilon: Number, mode=BMode.DERANDOMIZED, seed: Optional[int] = None,
                     bounded_mode=None, budget: Optional[int] = None, workers: Optional[int] = 1,
                     lp: Optional[LpSolution] = None) -> DecompositionResult:
    """
    Decompose, solve every interval, and return the union with its diagnostics

    Random mode draws b uniformly from [0, a] with the seeded generator;
    derandomized mode tries every candidate b and keeps the cheapest union.

    Raises:
        EpsilonRangeError: eps outside (0, 3/ln 3]
        IntervalContainmentError: a tightened sub-schedule escaped its interval
    """
    eps = check_epsilon(epsilon)
    mode = BMode(mode)
    if instance.n == 0:
        grid = IntervalGrid(eps, 3 / float(eps), 0.0, 1)
        empty = LpSolution((), 0.0, ())
        return DecompositionResult(Schedule(()), 0.0, grid, (), empty, 0, 0)
    lp = solve_lp(instance) if lp is None else lp
    a = 3 / float(eps)
    if mode is BMode.RANDOM:
        offsets = [float(np.random.default_rng(seed).uniform(0.0, a))]
    else:
        offsets = derandomize_b(lp, a)

    def run(b: float) -> DecompositionResult:
        return _solve_for_offset(instance, lp, eps, b, bounded_mode, budget, 1)

    if len(offsets) == 1:
        results = [_solve_for_offset(instance, lp, eps, offsets[0], bounded_mode, budget, workers)]
    else:
        results = parallel_map(run, offsets, workers)
    best = min(range(len(results)), key=lambda k: (results[k].cost, k))
    result = results[best]
    logger.info("decomposition: b=%.6f, %d intervals, cost %.6f (%d offsets tried)",
                result.b, len(result.intervals), result.cost, len(offsets))
    return DecompositionResult(result.schedule, result.cost, result.grid, result.intervals, lp,
                               sum(r.guesses_tried for r in results), len(offsets))


def decompose_and_solve(instance: Instance, epsilon: Number, mode=BMode.DERANDOMIZED, seed: Optional[int] = None,
                        bounded_mode=None, budget: Optional[int] = None, workers: Optional[int] = 1) -> Schedule:
    """Schedule returned by solve_decomposed"""
    return solve_decomposed(instance, epsilon, mode, seed, bounded_mode, budget, workers).schedule


@dataclass(frozen=True)
class OffsetSample:
    """Monte Carlo draws over b: per-draw sum of sub-instance optima and per-draw
    t_i(j) for every job, beside its expectation C_j (1 - e^-a) / a"""
    sums: np.ndarray
    t_samples: np.ndarray
    t_expected: np.ndarray
    lp: LpSolution

    @property
    def t_means(self) -> np.ndarray:
        return self.t_samples.mean(axis=0)


def sample_offsets(instance: Instance, epsilon: Number, draws: int, seed: int = 0,
                   lp: Optional[LpSolution] = None) -> OffsetSample:
    """Draw b uniformly and record sum_i OPT_i (exact oracle) and t_i(j) per draw"""
    eps = check_epsilon(epsilon)
    lp = solve_lp(instance) if lp is None else lp
    a = 3 / float(eps)
    rng = np.random.default_rng(seed)
    C = np.asarray(lp.C, dtype=float)
    sums = np.zeros(draws)
    t_samples = np.zeros((draws, instance.n))
    for d in range(draws):
        grid = build_grid(eps, float(rng.uniform(0.0, a)), float(C.max()))
        sums[d] = sum(exact_opt(sub.instance)[0] for sub in partition_jobs(lp, grid, instance))
        t_samples[d] = [grid.t(grid.index_of(c)) for c in C]
    expected = C * (1 - math.exp(-a)) / a
    return OffsetSample(sums, t_samples, expected, lp)
