"""
Completion-time LP relaxation solved by cutting planes

min sum_j w_j C_j
s.t. C_j <= C_k                                         for j before k  (order rows)
     sum_{j in U} p_j C_j >= r_min(U) p(U) + p(U)^2 / 2   for all U       (load cuts)

There are exponentially many load cuts; they are added lazily from a separation oracle.
"""
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Iterator, Optional, Sequence

import numpy as np
from scipy.optimize import linprog

from application.errors import LpIterationError, LpSolveError, SeparationCapError
from application.instance_model import Instance
from application.report import Report
from config.constants import LP_CONFIG

logger = logging.getLogger(__name__)

# rows of the subset scan handled per numpy batch
_CHUNK = 1 << 14
# HiGHS is asked for tighter feasibility than the separation tolerance
_SOLVER_OPTIONS = {
    'primal_feasibility_tolerance': 1e-10,
    'dual_feasibility_tolerance': 1e-10,
}


class Separation(Enum):
    AUTO = "auto"
    EXHAUSTIVE = "exhaustive"
    FAST = "fast"


@dataclass(frozen=True)
class Cut:
    """Load cut for a nonempty job subset"""
    subset: frozenset[int]
    rhs: float

    @classmethod
    def for_subset(cls, subset: Sequence[int], instance: Instance) -> "Cut":
        ids = sorted(int(j) for j in subset)
        if not ids:
            raise ValueError("a cut needs a nonempty subset")
        p_u = float(instance.p[ids].sum())
        r_min = float(instance.r[ids].min())
        return cls(frozenset(ids), r_min * p_u + 0.5 * p_u * p_u)

    def lhs(self, C: Sequence[float], instance: Instance) -> float:
        ids = sorted(self.subset)
        return float(np.dot(instance.p[ids], np.asarray(C, dtype=float)[ids]))

    def violation(self, C: Sequence[float], instance: Instance) -> float:
        """rhs - lhs; positive means the point violates the cut"""
        return self.rhs - self.lhs(C, instance)


@dataclass(frozen=True)
class LpSolution:
    C: tuple[float, ...]
    Z: float
    active_cuts: tuple[Cut, ...]
    iterations: int = 0
    z_history: tuple[float, ...] = ()
    separation: Separation = Separation.EXHAUSTIVE


def _subset_batches(n: int) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    """Yield (masks, membership matrix) over all nonempty subsets of range(n)"""
    shifts = np.arange(n, dtype=np.int64)
    total = 1 << n
    for first in range(1, total, _CHUNK):
        masks = np.arange(first, min(first + _CHUNK, total), dtype=np.int64)
        yield masks, ((masks[:, None] >> shifts) & 1).astype(bool)


def _violations(bits: np.ndarray, C: np.ndarray, instance: Instance) -> np.ndarray:
    p, r = instance.p, instance.r
    member = bits.astype(float)
    p_u = member @ p
    lhs = member @ (p * C)
    r_min = np.where(bits, r, np.inf).min(axis=1)
    return r_min * p_u + 0.5 * p_u * p_u - lhs


def separate_exhaustive(C: Sequence[float], instance: Instance, tol: Optional[float] = None,
                        cap: Optional[int] = None) -> Optional[Cut]:
    """
    Most violated load cut over all 2^n - 1 subsets

    Returns:
        The cut of largest violation, or None when no violation exceeds tol

    Raises:
        SeparationCapError: n above the exhaustive cap
    """
    tol = LP_CONFIG['tolerance'] if tol is None else tol
    cap = LP_CONFIG['exhaustive_cap'] if cap is None else cap
    n = instance.n
    if n > cap:
        raise SeparationCapError(f"{n} jobs exceed the exhaustive separation cap {cap}; use separate_fast")
    if n == 0:
        return None
    C = np.asarray(C, dtype=float)
    best_mask, best_violation = 0, tol
    for masks, bits in _subset_batches(n):
        violation = _violations(bits, C, instance)
        k = int(np.argmax(violation))
        if violation[k] > best_violation:
            best_mask, best_violation = int(masks[k]), float(violation[k])
    if best_mask == 0:
        return None
    return Cut.for_subset([j for j in range(n) if best_mask >> j & 1], instance)


def separate_fast(C: Sequence[float], instance: Instance, tol: Optional[float] = None) -> Optional[Cut]:
    """
    Prefix-candidate separation

    For each distinct release value r, the jobs with r_j >= r are sorted by C_j
    and every prefix is evaluated. Any returned cut is violated by more than tol.
    """
    tol = LP_CONFIG['tolerance'] if tol is None else tol
    if instance.n == 0:
        return None
    C = np.asarray(C, dtype=float)
    p, r = instance.p, instance.r
    best: Optional[np.ndarray] = None
    best_violation = tol
    for threshold in np.unique(r):
        ids = np.flatnonzero(r >= threshold)
        ids = ids[np.lexsort((ids, C[ids]))]
        p_u = np.cumsum(p[ids])
        lhs = np.cumsum(p[ids] * C[ids])
        r_min = np.minimum.accumulate(r[ids])
        violation = r_min * p_u + 0.5 * p_u * p_u - lhs
        k = int(np.argmax(violation))
        if violation[k] > best_violation:
            best, best_violation = ids[:k + 1], float(violation[k])
    if best is None:
        return None
    return Cut.for_subset(best.tolist(), instance)


def _resolve_separation(separation, n: int, exhaustive_cap: int) -> Separation:
    separation = Separation(separation or LP_CONFIG['separation'])
    if separation is Separation.AUTO:
        return Separation.EXHAUSTIVE if n <= exhaustive_cap else Separation.FAST
    return separation


def _solve_master(instance: Instance, cuts: list[Cut], strengthen: bool) -> np.ndarray:
    n = instance.n
    rows, rhs = [], []
    for j, k in sorted(instance.prec):
        row = np.zeros(n)
        row[j], row[k] = 1.0, -1.0
        rows.append(row)
        rhs.append(0.0)
    for cut in cuts:
        row = np.zeros(n)
        ids = sorted(cut.subset)
        row[ids] = -instance.p[ids]
        rows.append(row)
        rhs.append(-cut.rhs)
    if strengthen:
        bounds = [(float(job.r + job.p), None) for job in instance.jobs]
    else:
        bounds = [(0.0, None)] * n

    res = linprog(instance.w, A_ub=np.vstack(rows), b_ub=np.array(rhs), bounds=bounds,
                  method='highs-ds', options=_SOLVER_OPTIONS)
    if res.status != 0:
        raise LpSolveError(f"LP solver failed: {res.message}")
    return np.asarray(res.x, dtype=float)


def solve_lp(instance: Instance, separation=None, tol: Optional[float] = None,
             cap: Optional[int] = None, strengthen: Optional[bool] = None,
             exhaustive_cap: Optional[int] = None) -> LpSolution:
    """
    Solve the LP relaxation by cutting planes

    Starts from all singleton cuts and adds the most violated cut per round
    until the separation oracle certifies the point.

    Args:
        instance: validated, release-normalized instance
        separation: exhaustive | fast | auto (exhaustive up to the cap)
        tol: separation tolerance
        cap: iteration cap (default iteration_factor * n^2)

    Raises:
        LpIterationError: cap exceeded or a cut was re-added (numerical trouble)
        LpSolveError: the base solver failed
    """
    tol = LP_CONFIG['tolerance'] if tol is None else tol
    exhaustive_cap = LP_CONFIG['exhaustive_cap'] if exhaustive_cap is None else exhaustive_cap
    strengthen = LP_CONFIG['strengthen'] if strengthen is None else strengthen
    n = instance.n
    mode = _resolve_separation(separation, n, exhaustive_cap)
    if n == 0:
        return LpSolution((), 0.0, (), 0, (0.0,), mode)
    cap = LP_CONFIG['iteration_factor'] * n * n if cap is None else cap

    if mode is Separation.EXHAUSTIVE:
        def separate(C):
            return separate_exhaustive(C, instance, tol, exhaustive_cap)
    else:
        def separate(C):
            return separate_fast(C, instance, tol)

    cuts = [Cut.for_subset([j], instance) for j in range(n)]
    seen = {cut.subset for cut in cuts}
    history: list[float] = []
    iterations = 0
    while True:
        C = _solve_master(instance, cuts, strengthen)
        history.append(float(np.dot(instance.w, C)))
        cut = separate(C)
        if cut is None:
            break
        iterations += 1
        if iterations > cap or cut.subset in seen:
            raise LpIterationError(iterations, cut)
        logger.debug("cut %s violated by %.3g", sorted(cut.subset), cut.violation(C, instance))
        cuts.append(cut)
        seen.add(cut.subset)

    logger.debug("LP converged: Z=%.6f after %d cuts (%s)", history[-1], iterations, mode.value)
    return LpSolution(tuple(float(c) for c in C), history[-1], tuple(cuts), iterations, tuple(history), mode)


def check_lp_lemmas(solution: LpSolution, instance: Instance, tol: Optional[float] = None,
                    subset_cap: Optional[int] = None, samples: Optional[int] = None,
                    seed: int = 0) -> Report:
    """
    Check C_j >= r_j + p_j/2 for every job and p(U) <= 2 C_max(U) - 2 r_min(U)

    All subsets are checked up to `subset_cap` jobs, a seeded sample beyond.
    """
    tol = LP_CONFIG['tolerance'] if tol is None else tol
    subset_cap = LP_CONFIG['lemma_subset_cap'] if subset_cap is None else subset_cap
    samples = LP_CONFIG['lemma_samples'] if samples is None else samples
    report = Report("lp_lemmas")
    n = instance.n
    if n == 0:
        return report
    C = np.asarray(solution.C, dtype=float)
    slack = 10 * tol * max(1.0, instance.time_scale)

    lower = instance.r + instance.p / 2
    for j in range(n):
        report.tick()
        if C[j] < lower[j] - slack:
            report.add(f"job {j}: C={C[j]:.9g} below r+p/2={lower[j]:.9g}")

    if n <= subset_cap:
        batches = (bits for _, bits in _subset_batches(n))
    else:
        rng = np.random.default_rng(seed)
        bits = rng.random((samples, n)) < 0.5
        bits[~bits.any(axis=1), 0] = True
        batches = iter([bits])

    for bits in batches:
        member = bits.astype(float)
        p_u = member @ instance.p
        c_max = np.where(bits, C, -np.inf).max(axis=1)
        r_min = np.where(bits, instance.r, np.inf).min(axis=1)
        bad = np.flatnonzero(p_u > 2 * c_max - 2 * r_min + slack)
        report.tick(len(bits))
        for row in bad:
            subset = np.flatnonzero(bits[row]).tolist()
            bound = 2 * c_max[row] - 2 * r_min[row]
            report.add(f"subset {subset}: p(U)={p_u[row]:.9g} exceeds 2Cmax-2rmin={bound:.9g}")
    return report
