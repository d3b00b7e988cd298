import math
from fractions import Fraction

import numpy as np
import pytest

from application.bounded_solver import (
    BoundedMode, Guess, TypeGuess, adjust_release_times, adjust_release_times_typed, check_adjusted_rules,
    count_early, early_bound, enumerate_guesses, enumerate_type_guesses, job_type, round_processing,
    rounded_type, shift_to_grid, solve_bounded,
)
from application.decomposition import bounded_subinstance
from application.errors import GuessBudgetError
from application.exact_oracle import exact_opt
from application.generators import Family
from application.instance_model import Instance, feasibility_violations, schedule_cost
from application.lp_relaxation import solve_lp

BETA = math.exp(3)
HALF = Fraction(1, 2)
THIRD = Fraction(1, 3)
TENTH = Fraction(1, 10)


def grid_options(length: Fraction, epsilon: Fraction, release: Fraction) -> list[Fraction]:
    step = epsilon * length
    return [m * step for m in range(int(1 / epsilon) + 1) if m * epsilon < 1 and m * step >= release]


def count_guesses(instance: Instance, epsilon: Fraction, bound: int) -> int:
    """Recursive enumerator: each job is either not early or early at one grid start"""
    options = [grid_options(Fraction(job.p), epsilon, Fraction(job.r)) for job in instance.jobs]

    def compatible(j, s, chosen):
        for k, t in chosen.items():
            pj, pk = Fraction(instance.jobs[j].p), Fraction(instance.jobs[k].p)
            if not (s + pj <= t or t + pk <= s):
                return False
            if (j, k) in instance.prec and s + pj > t:
                return False
            if (k, j) in instance.prec and t + pk > s:
                return False
        return True

    def walk(j, chosen):
        if j == instance.n:
            return 1
        total = walk(j + 1, chosen)
        if len(chosen) < bound:
            for s in options[j]:
                if compatible(j, s, chosen):
                    total += walk(j + 1, {**chosen, j: s})
        return total

    return walk(0, {})


def count_type_guesses(instance: Instance, epsilon: Fraction, L: float, beta: float) -> int:
    """Types taken from the integer processing times of the unrounded instance"""
    base = 1 + epsilon
    earliest = {}
    for job in instance.jobs:
        i = job_type(job.p, epsilon)
        earliest[i] = min(earliest.get(i, Fraction(job.r)), Fraction(job.r))
    upper = base ** 2 * Fraction(beta) * Fraction(L)
    types = [i for i in sorted(earliest) if Fraction(L) < base ** i < upper]
    options = {i: grid_options(base ** i, epsilon, earliest[i]) for i in types}

    def walk(position, spans):
        if position == len(types):
            return 1
        i = types[position]
        total = walk(position + 1, spans)
        for s in options[i]:
            span = (s, s + base ** i)
            if all(span[1] <= a or b <= span[0] for a, b in spans):
                total += walk(position + 1, spans + [span])
        return total

    return walk(0, [])


def naive_adjust(instance: Instance, starts: dict, lengths: dict) -> list[float]:
    """Apply every release rule to every job until nothing changes"""
    spans = [(float(starts[k]), float(starts[k]) + lengths[k]) for k in starts]
    release = [float(r) for r in instance.r]
    changed = True
    while changed:
        changed = False
        for j in range(instance.n):
            target = release[j]
            target = max(target, float(starts[j])) if j in starts else max(target, instance.jobs[j].p)
            for i in instance.predecessors[j]:
                target = max(target, release[i])
            for lo, hi in spans:
                if lo < target < hi:
                    target = hi
            if target != release[j]:
                release[j] = target
                changed = True
    return release


def small_bounded(make_instance, n, seed, **overrides):
    instance = make_instance(n, seed, r_max=3, p_max=4, **overrides)
    sub = bounded_subinstance(instance, 2, BETA)
    assert sub.instance.r.min() >= sub.L
    assert sub.instance.r.max() + sub.instance.p.sum() <= sub.ceiling
    return sub


def test_early_bound():
    assert early_bound(1, BETA) == 6
    assert early_bound(HALF, BETA) == 5


def test_no_guesses_when_processing_below_release():
    instance = Instance.from_lists([1, 2, 3], [5, 5, 6], [1, 1, 1])
    assert list(enumerate_guesses(instance, HALF, BETA)) == [Guess.empty()]


def test_single_long_job_guesses():
    instance = Instance.from_lists([4], [1], [1])
    guesses = list(enumerate_guesses(instance, HALF, BETA))
    assert guesses == [Guess.empty(), Guess(frozenset({0}), ((0, Fraction(2)),))]


def test_unit_epsilon_allows_no_early_job(make_instance):
    sub = small_bounded(make_instance, 6, 0)
    assert list(enumerate_guesses(sub.instance, 1, BETA)) == [Guess.empty()]


@pytest.mark.parametrize("seed", range(10))
def test_guess_count_matches_recursive_enumerator(make_instance, seed):
    sub = small_bounded(make_instance, 5, seed, prec_density=0.3)
    guesses = list(enumerate_guesses(sub.instance, HALF, BETA))
    assert guesses[0] == Guess.empty()
    assert len(guesses) == count_guesses(sub.instance, HALF, early_bound(HALF, BETA))
    assert len(set(guesses)) == len(guesses)


def test_guess_budget_truncates_stream(make_instance):
    sub = small_bounded(make_instance, 5, 2)
    full = list(enumerate_guesses(sub.instance, HALF, BETA))
    assert list(enumerate_guesses(sub.instance, HALF, BETA, budget=2)) == full[:2]


def test_empty_guess_adjustment():
    instance = Instance.from_lists([4, 1], [1, 0], [1, 1], [(0, 1)])
    adjusted = adjust_release_times(instance, Guess.empty())
    assert list(adjusted.r) == [4, 4]


def test_release_pushed_out_of_early_interval():
    instance = Instance.from_lists([4, 1], [1, 4], [1, 1])
    guess = Guess(frozenset({0}), ((0, Fraction(2)),))
    adjusted = adjust_release_times(instance, guess)
    assert list(adjusted.r) == [2, 6]
    assert check_adjusted_rules(instance, adjusted, guess).ok


@pytest.mark.parametrize("seed", range(10))
def test_adjustment_matches_naive_fixpoint(make_instance, seed):
    sub = small_bounded(make_instance, 6, seed, prec_density=0.3)
    guesses = list(enumerate_guesses(sub.instance, HALF, BETA))
    guess = guesses[int(np.random.default_rng(seed).integers(0, len(guesses)))]
    adjusted = adjust_release_times(sub.instance, guess)
    lengths = {j: sub.instance.jobs[j].p for j in guess.A}
    assert list(adjusted.r) == naive_adjust(sub.instance, guess.starts(), lengths)
    report = check_adjusted_rules(sub.instance, adjusted, guess)
    assert report.ok, report.get_violations()


def test_adjusted_rules_flag_unadjusted_instance():
    instance = Instance.from_lists([4], [1], [1])
    report = check_adjusted_rules(instance, instance, Guess.empty())
    assert not report.ok
    assert "late job" in report.get_violations()[0]


@pytest.mark.parametrize("p,epsilon,expected", [(1, 1, 1), (5, 1, 8), (4, 1, 4), (2, HALF, 2.25)])
def test_round_processing(p, epsilon, expected):
    rounded = round_processing(Instance.from_lists([p], [0], [1]), epsilon)
    assert rounded.jobs[0].p == expected


def test_rounding_keeps_type_of_inexact_powers():
    rounded = round_processing(Instance.from_lists([4], [0], [1]), THIRD)
    assert job_type(4, THIRD) == 5
    assert rounded.jobs[0].p == float(Fraction(1024, 243))
    assert rounded_type(rounded.jobs[0].p, THIRD) == 5


@pytest.mark.parametrize("epsilon", [THIRD, TENTH, Fraction(3, 10), HALF, 1])
def test_rounded_type_inverts_rounding(epsilon):
    sizes = list(range(1, 400))
    rounded = round_processing(Instance.from_lists(sizes, [0] * len(sizes), [1] * len(sizes)), epsilon)
    assert [rounded_type(job.p, epsilon) for job in rounded.jobs] == [job_type(p, epsilon) for p in sizes]


def test_round_processing_ratio(make_instance):
    instance = make_instance(20, 5, p_max=50)
    rounded = round_processing(instance, HALF)
    for job, new in zip(instance.jobs, rounded.jobs):
        assert job.p <= new.p < 1.5 * job.p or job.p == new.p == 1
        assert (new.r, new.w) == (job.r, job.w)


def test_no_eligible_type():
    instance = round_processing(Instance.from_lists([1], [5], [1]), 1)
    assert list(enumerate_type_guesses(instance, 1, 5, BETA)) == [TypeGuess(frozenset(), (), Fraction(1))]


def test_one_eligible_type_unit_epsilon():
    instance = round_processing(Instance.from_lists([3], [1], [1]), 1)
    guesses = list(enumerate_type_guesses(instance, 1, 1, BETA))
    assert [g.B for g in guesses] == [frozenset()]


@pytest.mark.parametrize("seed", range(8))
@pytest.mark.parametrize("epsilon", [HALF, THIRD, TENTH])
def test_type_guess_count_matches_recursive_enumerator(make_instance, seed, epsilon):
    sub = small_bounded(make_instance, 6, seed)
    rounded = round_processing(sub.instance, epsilon)
    guesses = list(enumerate_type_guesses(rounded, epsilon, sub.L, sub.beta))
    assert len(guesses) == count_type_guesses(sub.instance, epsilon, sub.L, sub.beta)
    types = {job_type(job.p, epsilon) for job in sub.instance.jobs}
    for guess in guesses:
        assert guess.B <= types
        for (i, _), (lo, hi) in zip(guess.start, guess.intervals()):
            assert hi - lo == pytest.approx(float((1 + epsilon) ** i))


def test_typed_empty_guess_adjustment():
    instance = round_processing(Instance.from_lists([3, 1], [1, 0], [1, 1], [(0, 1)]), 1)
    adjusted = adjust_release_times_typed(instance, TypeGuess(frozenset(), (), Fraction(1)))
    assert list(adjusted.r) == [4, 4]


@pytest.mark.parametrize("seed", range(6))
@pytest.mark.parametrize("epsilon", [HALF, THIRD, TENTH])
def test_typed_adjustment_matches_naive_fixpoint(make_instance, seed, epsilon):
    sub = small_bounded(make_instance, 6, seed)
    rounded = round_processing(sub.instance, epsilon)
    guesses = list(enumerate_type_guesses(rounded, epsilon, sub.L, sub.beta))
    guess = guesses[-1]
    adjusted = adjust_release_times_typed(rounded, guess)
    report = check_adjusted_rules(rounded, adjusted, guess)
    assert report.ok, report.get_violations()
    assert all(new.r >= job.r for job, new in zip(rounded.jobs, adjusted.jobs))


def test_single_job_bounded():
    instance = Instance.from_lists([2], [0], [3])
    result = solve_bounded(bounded_subinstance(instance, 5, BETA), 1)
    assert result.schedule.start == (5.0,)
    assert result.cost == 21


@pytest.mark.parametrize("seed", range(10))
def test_empty_guess_two_approximation(make_instance, seed):
    instance = make_instance(6, seed, Family.P_LE_R)
    sub = bounded_subinstance(instance, float(instance.r.min()), BETA)
    result = solve_bounded(sub, 1, BoundedMode.EMPTY_GUESS)
    assert result.guesses_tried == 1
    assert result.cost <= 2 * solve_lp(sub.instance).Z + 1e-6


@pytest.mark.parametrize("seed", range(10))
@pytest.mark.parametrize("epsilon", [1, HALF])
def test_exhaustive_ratio(make_instance, seed, epsilon):
    sub = small_bounded(make_instance, 5, seed)
    result = solve_bounded(sub, epsilon, BoundedMode.EXHAUSTIVE)
    opt, _ = exact_opt(sub.instance)
    assert result.cost <= 2 * (1 + float(epsilon)) * opt + 1e-6
    assert result.cost == schedule_cost(result.schedule, sub.instance)
    empty = solve_bounded(sub, epsilon, BoundedMode.EMPTY_GUESS)
    assert result.cost <= empty.cost


@pytest.mark.parametrize("seed", range(5))
@pytest.mark.parametrize("epsilon", [HALF, THIRD])
def test_typed_mode_is_feasible(make_instance, seed, epsilon):
    sub = small_bounded(make_instance, 6, seed)
    result = solve_bounded(sub, epsilon, BoundedMode.TYPED, workers=2)
    assert feasibility_violations(result.schedule, sub.instance) == []
    assert isinstance(result.best_guess, TypeGuess)


def test_exhaustive_requires_budget_above_cap():
    instance = Instance.from_lists([1] * 11, [0] * 11, [1] * 11)
    with pytest.raises(GuessBudgetError):
        solve_bounded(bounded_subinstance(instance, 1, BETA), 1)


def test_budget_limits_guesses():
    instance = Instance.from_lists([6, 8, 4], [1, 1, 2], [1, 1, 1])
    sub = bounded_subinstance(instance, 1, BETA)
    assert len(list(enumerate_guesses(sub.instance, HALF, BETA))) == 4
    assert solve_bounded(sub, HALF, BoundedMode.EXHAUSTIVE, budget=2).guesses_tried == 2


@pytest.mark.parametrize("seed", range(10))
@pytest.mark.parametrize("epsilon", [1, HALF])
def test_grid_shift_of_optimum(make_instance, seed, epsilon):
    sub = small_bounded(make_instance, 5, seed)
    _, optimal = exact_opt(sub.instance)
    shifted = shift_to_grid(optimal, sub.instance, epsilon)
    assert feasibility_violations(shifted, sub.instance) == []
    before, after = optimal.completion(sub.instance), shifted.completion(sub.instance)
    assert np.all(after <= (1 + float(epsilon)) * before + 1e-9)
    for job in sub.instance.jobs:
        multiple = Fraction(shifted.start[job.id]) / (Fraction(epsilon) * Fraction(job.p))
        assert multiple.denominator == 1
    assert count_early(shifted, sub.instance) <= early_bound(epsilon, BETA)
