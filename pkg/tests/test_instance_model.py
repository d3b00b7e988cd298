import networkx as nx
import numpy as np
import pytest

from application.errors import CycleError, InfeasibleScheduleError, InstanceValidationError
from application.instance_model import (
    Instance, Schedule, feasibility_violations, normalize_release_times, prepare, schedule_cost, tighten,
    transitive_closure, validate,
)


def random_feasible_schedule(instance: Instance, seed: int) -> Schedule:
    """Random linear extension timed with random idle gaps"""
    rng = np.random.default_rng(seed)
    keys = rng.random(instance.n)
    order = nx.lexicographical_topological_sort(instance.graph, key=lambda j: keys[j])
    start = [0.0] * instance.n
    free = 0.0
    for j in order:
        start[j] = max(free, instance.jobs[j].r) + float(rng.integers(0, 5))
        free = start[j] + instance.jobs[j].p
    return Schedule(tuple(start))


def can_move_left(schedule: Schedule, instance: Instance, j: int, tol: float = 1e-9) -> bool:
    """Whether job j alone can start earlier with every other start fixed"""
    start = schedule.start
    completion = schedule.completion(instance)
    others = [k for k in range(instance.n) if k != j]
    candidates = {instance.jobs[j].r} | {float(completion[k]) for k in others}
    for t in sorted(candidates):
        if t >= start[j] - tol or t < instance.jobs[j].r - tol:
            continue
        if any(completion[i] > t + tol for i in instance.predecessors[j]):
            continue
        if all(t + instance.jobs[j].p <= start[k] + tol or t >= completion[k] - tol for k in others):
            return True
    return False


def closure_by_squaring(pairs, n):
    reach = np.zeros((n, n), dtype=bool)
    for j, k in pairs:
        reach[j, k] = True
    while True:
        grown = reach | ((reach.astype(int) @ reach.astype(int)) > 0)
        if (grown == reach).all():
            return {(int(j), int(k)) for j, k in zip(*np.nonzero(reach))}
        reach = grown


def test_validate_single_job():
    report = validate(Instance.from_lists([1], [0], [1]))
    assert report.ok
    assert report.get_violations() == []


def test_validate_reports_cycle():
    report = validate(Instance.from_lists([1, 1], [0, 0], [1, 1], [(0, 1), (1, 0)]))
    assert not report.ok
    assert any("cycle" in v for v in report.get_violations())


def test_validate_reports_missing_transitive_edge():
    report = validate(Instance.from_lists([1, 1, 1], [0, 0, 0], [1, 1, 1], [(0, 1), (1, 2)]))
    assert report.get_violations() == ["missing transitive edge (0,2)"]


@pytest.mark.parametrize("field", ["p", "r", "w"])
def test_validate_reports_negative_field(field):
    values = {"p": [1], "r": [0], "w": [1]}
    values[field] = [-1]
    report = validate(Instance.from_lists(values["p"], values["r"], values["w"]))
    assert report.get_violations() == [f"job 0: negative {field}=-1"]


def test_validate_reports_unknown_job():
    report = validate(Instance.from_lists([1], [0], [1], [(0, 3)]))
    assert "unknown job" in report.get_violations()[0]


def test_transitive_closure_chain():
    assert transitive_closure({(0, 1), (1, 2)}) == {(0, 1), (1, 2), (0, 2)}


def test_transitive_closure_empty():
    assert transitive_closure(set()) == frozenset()


def test_transitive_closure_cycle_names_witness():
    with pytest.raises(CycleError) as excinfo:
        transitive_closure({(0, 1), (1, 2), (2, 0)})
    assert excinfo.value.exit_code == 2
    assert len(excinfo.value.cycle) == 3
    assert "Precedence cycle" in str(excinfo.value)


@pytest.mark.parametrize("seed", range(10))
def test_transitive_closure_matches_boolean_squaring(seed):
    rng = np.random.default_rng(seed)
    n = 6
    pairs = {(j, k) for j in range(n) for k in range(j + 1, n) if rng.random() < 0.3}
    closed = transitive_closure(pairs, n)
    assert closed == closure_by_squaring(pairs, n)
    assert transitive_closure(closed, n) == closed


def test_normalize_release_from_predecessor():
    instance = Instance.from_lists([1, 1], [5, 0], [1, 1], [(0, 1)])
    assert list(normalize_release_times(instance).r) == [5, 5]


def test_normalize_without_precedence_is_identity():
    instance = Instance.from_lists([1, 2], [3, 0], [1, 1])
    assert normalize_release_times(instance) is instance


def test_normalize_chain_of_four():
    prec = transitive_closure({(0, 1), (1, 2), (2, 3)})
    instance = Instance.from_lists([1, 1, 1, 1], [3, 1, 2, 0], [1, 1, 1, 1], prec)
    normalized = normalize_release_times(instance)
    assert list(normalized.r) == [3, 3, 3, 3]
    assert normalize_release_times(normalized) is normalized


@pytest.mark.parametrize("seed", range(5))
def test_normalize_preserves_feasible_schedules(make_instance, seed):
    instance = make_instance(6, seed)
    raw = instance.with_release([float(x) for x in np.random.default_rng(seed).integers(0, 20, 6)])
    normalized = normalize_release_times(raw)
    for k in range(10):
        schedule = random_feasible_schedule(raw, seed * 100 + k)
        assert feasibility_violations(schedule, normalized) == []


def test_prepare_rejects_zero_processing():
    with pytest.raises(InstanceValidationError, match="zero processing time"):
        prepare(Instance.from_lists([0, 1], [0, 0], [1, 1]))


def test_prepare_raises_on_missing_transitive_edge():
    with pytest.raises(InstanceValidationError):
        prepare(Instance.from_lists([1, 1, 1], [0, 0, 0], [1, 1, 1], [(0, 1), (1, 2)]))


def test_schedule_cost_two_job_example(two_job):
    assert schedule_cost(Schedule((1.0, 2.0)), two_job) == 20
    assert schedule_cost(Schedule((10.0, 0.0)), two_job) == 110


def test_schedule_cost_single_job():
    assert schedule_cost(Schedule((2.0,)), Instance.from_lists([3], [2], [4])) == 20


@pytest.mark.parametrize("start,message", [
    ((0.0, 2.0), "before its release"),
    ((1.0, 1.5), "overlap"),
])
def test_schedule_cost_rejects_infeasible(two_job, start, message):
    with pytest.raises(InfeasibleScheduleError, match=message):
        schedule_cost(Schedule(start), two_job)


def test_schedule_cost_rejects_precedence_violation():
    instance = Instance.from_lists([1, 1], [0, 0], [1, 1], [(0, 1)])
    with pytest.raises(InfeasibleScheduleError, match="predecessor"):
        schedule_cost(Schedule((1.0, 0.0)), instance)


def test_tighten_single_job():
    assert tighten(Schedule((5.0,)), Instance.from_lists([1], [0], [1])).start == (0.0,)


def test_tighten_two_independent_jobs():
    instance = Instance.from_lists([2, 2], [0, 0], [1, 1])
    assert tighten(Schedule((0.0, 7.0)), instance).start == (0.0, 2.0)


@pytest.mark.parametrize("seed", range(10))
def test_tighten_reaches_fixpoint(make_instance, seed):
    instance = make_instance(6, seed)
    schedule = random_feasible_schedule(instance, seed)
    tight = tighten(schedule, instance)
    assert feasibility_violations(tight, instance) == []
    assert all(new <= old + 1e-9 for new, old in zip(tight.start, schedule.start))
    assert schedule_cost(tight, instance) <= schedule_cost(schedule, instance) + 1e-9
    assert not any(can_move_left(tight, instance, j) for j in range(instance.n))
    assert tighten(tight, instance).start == tight.start


def test_restrict_reindexes_precedence():
    instance = Instance.from_lists([1, 2, 3], [0, 0, 0], [1, 1, 1], {(0, 2), (1, 2)})
    sub = instance.restrict((2, 1))
    assert sub.n == 2
    assert list(sub.p) == [3, 2]
    assert sub.prec == {(1, 0)}
