"""
Algorithm for bounded instances

Guess which jobs start before their own processing time (early jobs) in a
near-optimal grid schedule, lift release times to match the guess, run LP+LS
and keep the cheapest schedule. The typed mode rounds processing times to
powers of 1+eps and guesses per type instead of per job.
"""
import itertools
import logging
import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import TYPE_CHECKING, Iterator, Optional, Sequence, Union

import networkx as nx

from application.errors import GuessBudgetError, LpIterationError, LpSolveError, NoFeasibleGuessError, SchedulingError
from application.instance_model import Instance, Schedule, schedule_cost
from application.list_scheduling import list_schedule, run_lp_ls
from application.report import Report
from application.workers import parallel_map
from config.constants import BOUNDED_CONFIG

if TYPE_CHECKING:
    from application.decomposition import SubInstance

logger = logging.getLogger(__name__)

Number = Union[int, float, str, Fraction]


class BoundedMode(Enum):
    EXHAUSTIVE = "exhaustive"
    TYPED = "typed"
    EMPTY_GUESS = "empty-guess"


def as_fraction(value: Number) -> Fraction:
    """Exact rational from an int, a decimal or "a/b" string, or a float"""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        return Fraction(str(value))
    return Fraction(value)


@dataclass(frozen=True)
class Guess:
    """Early jobs A with a guessed start S'_j (multiple of eps*p_j, below p_j)"""
    A: frozenset[int]
    start: tuple[tuple[int, Fraction], ...] = ()

    @classmethod
    def empty(cls) -> "Guess":
        return cls(frozenset(), ())

    def starts(self) -> dict[int, Fraction]:
        return dict(self.start)

    def intervals(self, instance: Instance) -> list[tuple[float, float]]:
        """Open intervals ]S'_j, S'_j + p_j[ occupied by early jobs"""
        return [(float(s), float(s + Fraction(instance.jobs[j].p))) for j, s in self.start]

    def as_dict(self) -> dict:
        return {'A': sorted(self.A), 'start': {str(j): str(s) for j, s in self.start}}


@dataclass(frozen=True)
class TypeGuess:
    """Early types B with the smallest start S^(i) of each, below (1+eps)^i"""
    B: frozenset[int]
    start: tuple[tuple[int, Fraction], ...] = ()
    epsilon: Fraction = Fraction(1)

    def starts(self) -> dict[int, Fraction]:
        return dict(self.start)

    def intervals(self) -> list[tuple[float, float]]:
        base = 1 + self.epsilon
        return [(float(s), float(s + base ** i)) for i, s in self.start]

    def as_dict(self) -> dict:
        return {'B': sorted(self.B), 'start': {str(i): str(s) for i, s in self.start}}


@dataclass(frozen=True)
class BoundedResult:
    schedule: Schedule
    cost: float
    guesses_tried: int
    best_guess: Union[Guess, TypeGuess]
    failed: int = 0


def early_bound(epsilon: Number, beta: float) -> int:
    """Largest number of early jobs a grid schedule can hold: ceil(log2((1+eps) beta))"""
    return math.ceil(math.log2((1 + float(as_fraction(epsilon))) * beta))


def _grid_below(length: Fraction, epsilon: Fraction, release: Fraction) -> list[Fraction]:
    """Multiples of eps*length that are >= release and < length"""
    step = epsilon * length
    first = math.ceil(release / step) if step > 0 else 0
    values = []
    m = max(first, 0)
    while m * epsilon < 1:
        values.append(m * step)
        m += 1
    return values


def _disjoint(spans: Sequence[tuple[Fraction, Fraction]]) -> bool:
    ordered = sorted(spans)
    return all(a_end <= b_start for (_, a_end), (b_start, _) in zip(ordered, ordered[1:]))


def enumerate_guesses(instance: Instance, epsilon: Number, beta: float,
                      budget: Optional[int] = None) -> Iterator[Guess]:
    """
    Every admissible guess, the empty guess first, in deterministic order

    A guess is dropped when its early intervals overlap, when two early jobs
    j before k have S'_j + p_j > S'_k, or when S'_j < r_j.
    """
    eps = as_fraction(epsilon)
    bound = early_bound(eps, beta)
    options = {}
    for job in instance.jobs:
        starts = _grid_below(Fraction(job.p), eps, Fraction(job.r))
        if starts:
            options[job.id] = starts
    eligible = sorted(options)

    yield Guess.empty()
    emitted, pruned = 1, 0
    if budget is not None and emitted >= budget:
        return
    for size in range(1, min(bound, len(eligible)) + 1):
        for subset in itertools.combinations(eligible, size):
            lengths = [Fraction(instance.jobs[j].p) for j in subset]
            for starts in itertools.product(*(options[j] for j in subset)):
                spans = [(s, s + p) for s, p in zip(starts, lengths)]
                if not _disjoint(spans):
                    pruned += 1
                    continue
                at = dict(zip(subset, starts))
                if any(at[j] + Fraction(instance.jobs[j].p) > at[k]
                       for j, k in instance.prec if j in at and k in at):
                    pruned += 1
                    continue
                yield Guess(frozenset(subset), tuple(zip(subset, starts)))
                emitted += 1
                if budget is not None and emitted >= budget:
                    return
    logger.debug("guess stream: %d guesses, %d pruned", emitted, pruned)


def _release_fixpoint(instance: Instance, release: list[float], intervals: list[tuple[float, float]]) -> Instance:
    """Make releases monotone along precedence and move any release out of an
    open early interval, until neither step changes anything"""
    order = list(nx.topological_sort(instance.graph))
    n = instance.n
    limit = n * n * (len(intervals) + 1) + n + 1
    rounds = 0
    changed = True
    while changed:
        rounds += 1
        if rounds > limit:
            raise SchedulingError(f"release adjustment exceeded {limit} rounds")
        changed = False
        for k in order:
            for j in instance.predecessors[k]:
                if release[j] > release[k]:
                    release[k] = release[j]
                    changed = True
        for j in range(n):
            moved = True
            while moved:
                moved = False
                for lo, hi in intervals:
                    if lo < release[j] < hi:
                        release[j] = hi
                        moved = changed = True
    return instance.with_release(release)


def adjust_release_times(instance: Instance, guess: Guess) -> Instance:
    """
    Smallest r' >= r with
        early start:   r'_j >= S'_j for j in A
        late job:      r'_j >= p_j for j not in A
        precedence:    r'_j <= r'_k for j before k
        early window:  r'_j outside every ]S'_k, S'_k + p_k[, k in A
    """
    starts = guess.starts()
    release = [max(job.r, float(starts[job.id])) if job.id in starts else max(job.r, job.p)
               for job in instance.jobs]
    return _release_fixpoint(instance, release, guess.intervals(instance))


def job_type(p: float, epsilon: Number) -> int:
    """Smallest i with (1+eps)^i >= p"""
    base = 1 + as_fraction(epsilon)
    target = Fraction(p)
    i = math.ceil(math.log(float(target)) / math.log(float(base))) if target > 1 else 0
    while i > 0 and base ** (i - 1) >= target:
        i -= 1
    while base ** i < target:
        i += 1
    return i


def rounded_type(p: float, epsilon: Number) -> int:
    """Exponent i of a processing time rounded by round_processing, p = float((1+eps)^i)"""
    base = 1 + as_fraction(epsilon)
    i = job_type(p, epsilon)
    if i > 0 and float(base ** (i - 1)) >= p:
        i -= 1
    return i


def round_processing(instance: Instance, epsilon: Number) -> Instance:
    """Round every p_j up to the next power of 1+eps"""
    base = 1 + as_fraction(epsilon)
    return instance.with_processing([float(base ** job_type(job.p, epsilon)) for job in instance.jobs])


def enumerate_type_guesses(instance: Instance, epsilon: Number, L: float, beta: float,
                           budget: Optional[int] = None) -> Iterator[TypeGuess]:
    """
    Every subset B of eligible types with a grid start per type

    Eligible types satisfy L < (1+eps)^i < (1+eps)^2 beta L; S^(i) runs over the
    multiples of eps (1+eps)^i below (1+eps)^i and not before the earliest
    release among the type's jobs. Early intervals of distinct types are
    disjoint.
    """
    eps = as_fraction(epsilon)
    base = 1 + eps
    earliest: dict[int, Fraction] = {}
    for job in instance.jobs:
        i = rounded_type(job.p, eps)
        r = Fraction(job.r)
        earliest[i] = min(earliest.get(i, r), r)
    lower, upper = Fraction(L), base ** 2 * Fraction(beta) * Fraction(L)
    options = {}
    for i in sorted(earliest):
        if lower < base ** i < upper:
            starts = _grid_below(base ** i, eps, earliest[i])
            if starts:
                options[i] = starts
    types = sorted(options)

    yield TypeGuess(frozenset(), (), eps)
    emitted = 1
    if budget is not None and emitted >= budget:
        return
    for size in range(1, len(types) + 1):
        for subset in itertools.combinations(types, size):
            for starts in itertools.product(*(options[i] for i in subset)):
                if not _disjoint([(s, s + base ** i) for i, s in zip(subset, starts)]):
                    continue
                yield TypeGuess(frozenset(subset), tuple(zip(subset, starts)), eps)
                emitted += 1
                if budget is not None and emitted >= budget:
                    return


def adjust_release_times_typed(instance: Instance, guess: TypeGuess) -> Instance:
    """adjust_release_times keyed by type, on an instance with rounded processing times"""
    starts = guess.starts()
    release = []
    for job in instance.jobs:
        i = rounded_type(job.p, guess.epsilon)
        release.append(max(job.r, float(starts[i])) if i in starts else max(job.r, job.p))
    return _release_fixpoint(instance, release, guess.intervals())


def check_adjusted_rules(original: Instance, adjusted: Instance, guess: Union[Guess, TypeGuess]) -> Report:
    """
    Assert r' >= r and the early start, late job, precedence and early window rules

    A TypeGuess is checked against the rounded instance it was enumerated on.
    """
    report = Report("adjusted_rules")
    starts = guess.starts()
    if isinstance(guess, TypeGuess):
        intervals = guess.intervals()
        keys = [rounded_type(job.p, guess.epsilon) for job in original.jobs]
    else:
        intervals = guess.intervals(original)
        keys = [job.id for job in original.jobs]
    for job, new in zip(original.jobs, adjusted.jobs):
        report.tick()
        if new.r < job.r:
            report.add(f"job {job.id}: r'={new.r} below r={job.r}")
        key = keys[job.id]
        if key in starts and new.r < float(starts[key]):
            report.add(f"job {job.id}: early start r'={new.r} < S'={starts[key]}")
        if key not in starts and new.r < job.p:
            report.add(f"job {job.id}: late job r'={new.r} < p={job.p}")
        for lo, hi in intervals:
            if lo < new.r < hi:
                report.add(f"job {job.id}: early window r'={new.r} inside ]{lo}, {hi}[")
    for j, k in sorted(original.prec):
        if adjusted.jobs[j].r > adjusted.jobs[k].r:
            report.add(f"precedence rule violated on ({j},{k})")
    return report


def shift_to_grid(schedule: Schedule, instance: Instance, epsilon: Number) -> Schedule:
    """
    Restricted near-optimal schedule: in completion order, push each job right
    past its predecessor in the sequence, then round its start up to a multiple
    of eps*p_j.
    """
    eps = as_fraction(epsilon)
    completion = schedule.completion(instance)
    order = sorted(range(instance.n), key=lambda j: (completion[j], j))
    start: list[float] = [0.0] * instance.n
    free = Fraction(0)
    for j in order:
        p = Fraction(instance.jobs[j].p)
        step = eps * p
        s = max(Fraction(schedule.start[j]), free)
        s = math.ceil(s / step) * step
        start[j] = float(s)
        free = s + p
    return Schedule(tuple(start))


def count_early(schedule: Schedule, instance: Instance) -> int:
    """Jobs that start before their own processing time"""
    return sum(1 for job in instance.jobs if schedule.start[job.id] < job.p)


def solve_bounded(sub: "SubInstance", epsilon: Number, mode=None, budget: Optional[int] = None,
                  workers: Optional[int] = 1) -> BoundedResult:
    """
    Best LP+LS schedule over all guesses

    Each candidate runs on release times adjusted to its guess but is costed
    against the sub-instance's own release times.

    Raises:
        GuessBudgetError: exhaustive mode above guess_cap jobs without a budget
        NoFeasibleGuessError: every guess failed in the LP
    """
    mode = BoundedMode(mode or BOUNDED_CONFIG['mode'])
    budget = BOUNDED_CONFIG['budget'] if budget is None else budget
    instance = sub.instance
    eps = as_fraction(epsilon)

    if mode is BoundedMode.EXHAUSTIVE:
        if budget is None and instance.n > BOUNDED_CONFIG['guess_cap']:
            raise GuessBudgetError(f"{instance.n} jobs exceed guess_cap {BOUNDED_CONFIG['guess_cap']}; "
                                   "use typed mode or a budget")
        guesses = list(enumerate_guesses(instance, eps, sub.beta, budget))
    elif mode is BoundedMode.TYPED:
        rounded = round_processing(instance, eps)
        guesses = list(enumerate_type_guesses(rounded, eps, sub.L, sub.beta, budget))
    else:
        guesses = [Guess.empty()]

    def evaluate(guess):
        try:
            if isinstance(guess, TypeGuess):
                adjusted = adjust_release_times_typed(rounded, guess)
                steering = run_lp_ls(adjusted)
                candidate = list_schedule(instance.with_release(adjusted.r), steering.order)
            else:
                candidate = run_lp_ls(adjust_release_times(instance, guess)).schedule
        except (LpSolveError, LpIterationError) as e:
            logger.warning("guess %s skipped: %s", guess.as_dict(), e)
            return None
        return schedule_cost(candidate, instance), candidate

    outcomes = parallel_map(evaluate, guesses, workers)

    best = None
    failed = 0
    for index, outcome in enumerate(outcomes):
        if outcome is None:
            failed += 1
            continue
        if best is None or outcome[0] < best[0]:
            best = (outcome[0], outcome[1], guesses[index])
    if best is None:
        raise NoFeasibleGuessError(f"all {len(guesses)} guesses failed")
    cost, schedule, guess = best
    logger.debug("bounded: %d guesses, best cost %.6f with %s", len(guesses), cost, guess.as_dict())
    return BoundedResult(schedule, cost, len(guesses), guess, failed)
