"""Exception hierarchy for prec-sched"""
from typing import Sequence

from config.constants import EXIT_INVALID, EXIT_INVARIANT, EXIT_USAGE


class SchedulingError(Exception):
    """Base class for all prec-sched errors"""

    exit_code = EXIT_INVARIANT


class InstanceValidationError(SchedulingError):
    """Instance is malformed or uses unsupported data"""

    exit_code = EXIT_INVALID

    def __init__(self, message: str, findings: Sequence[str] = ()):
        super().__init__(message)
        self.findings = list(findings)


class CycleError(InstanceValidationError):
    """Precedence relation contains a cycle"""

    def __init__(self, cycle: Sequence[tuple[int, int]]):
        self.cycle = list(cycle)
        path = " -> ".join(str(j) for j, _ in self.cycle)
        if self.cycle:
            path += f" -> {self.cycle[0][0]}"
        super().__init__(f"Precedence cycle: {path}", [f"cycle: {path}"])


class InfeasibleScheduleError(SchedulingError):
    """Schedule breaks a release, overlap or precedence constraint"""

    exit_code = EXIT_INVALID


class LpSolveError(SchedulingError):
    """The base LP solver did not return an optimum"""


class LpIterationError(SchedulingError):
    """Cutting-plane loop exceeded its iteration cap"""

    def __init__(self, iterations: int, cut=None):
        self.iterations = iterations
        self.cut = cut
        detail = ""
        if cut is not None:
            detail = f"; most violated remaining cut {sorted(cut.subset)}"
        super().__init__(f"Cutting-plane loop did not converge after {iterations} iterations{detail}")


class SeparationCapError(SchedulingError):
    """Exhaustive separation requested above its subset cap"""

    exit_code = EXIT_USAGE


class EpsilonRangeError(SchedulingError):
    """Epsilon outside (0, 3/ln 3]"""

    exit_code = EXIT_USAGE


class OracleCapError(SchedulingError):
    """Exact oracle requested above its job cap"""

    exit_code = EXIT_USAGE


class GuessBudgetError(SchedulingError):
    """Exhaustive guessing requested on too many jobs without a budget"""

    exit_code = EXIT_USAGE


class IntervalContainmentError(SchedulingError):
    """A tightened sub-schedule left its interval [3t_i, 3t_{i+1}]"""


class NoFeasibleGuessError(SchedulingError):
    """Every guess of the bounded solver failed"""


class PipelineError(SchedulingError):
    """Failure inside run_pipeline, tagged with the instance digest"""

    def __init__(self, digest: str, cause: Exception):
        self.digest = digest
        self.cause = cause
        self.exit_code = getattr(cause, 'exit_code', EXIT_INVARIANT)
        super().__init__(f"[{digest[:12]}] {cause}")
