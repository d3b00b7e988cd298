"""End-to-end runs and ratio benchmarks"""
import logging
import time
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

from pydantic import BaseModel, ConfigDict, Field

from application.bounded_solver import BoundedMode, Number, as_fraction
from application.decomposition import BMode, solve_decomposed
from application.errors import PipelineError, SchedulingError
from application.exact_oracle import exact_opt
from application.generators import Family, GeneratorConfig, generate
from application.instance_io import decimal_string, instance_digest
from application.instance_model import Instance, schedule_cost
from application.list_scheduling import LsVariant, list_schedule, run_lp_ls
from application.workers import parallel_map
from config.constants import EXIT_INVARIANT, EXIT_OK

logger = logging.getLogger(__name__)

RATIO_TOLERANCE = 1e-6
RATIONAL_FIELDS = ('z_lp', 'alg_cost', 'b', 'opt_cost', 'lpls_cost', 'strict_cost')


class PipelineOptions(BaseModel):
    """What run_pipeline computes beside the decomposition schedule"""
    model_config = ConfigDict(frozen=True)

    exact: bool = False
    baselines: bool = False
    b_mode: BMode = BMode.DERANDOMIZED
    seed: Optional[int] = Field(default=None, ge=0)
    bounded_mode: Optional[BoundedMode] = None
    budget: Optional[int] = Field(default=None, ge=1)
    workers: int = Field(default=1, ge=1)


def _ratio(numerator: Optional[float], denominator: Optional[float]) -> Optional[float]:
    if numerator is None or denominator is None:
        return None
    if denominator <= RATIO_TOLERANCE:
        return 1.0 if numerator <= RATIO_TOLERANCE else float('inf')
    return numerator / denominator


@dataclass
class RunRecord:
    """Metrics of one pipeline run; oracle and baseline fields stay None when skipped"""
    digest: str
    n: int
    epsilon: str
    z_lp: float
    alg_cost: float
    b: Optional[float] = None
    guesses_tried: Optional[int] = None
    wall_time: Optional[float] = None
    opt_cost: Optional[float] = None
    lpls_cost: Optional[float] = None
    strict_cost: Optional[float] = None
    family: Optional[str] = None
    seed: Optional[int] = None

    @property
    def ratio_opt(self) -> Optional[float]:
        return _ratio(self.alg_cost, self.opt_cost)

    @property
    def ratio_lp(self) -> float:
        return _ratio(self.alg_cost, self.z_lp)

    @property
    def lpls_ratio_lp(self) -> Optional[float]:
        return _ratio(self.lpls_cost, self.z_lp)

    @property
    def lpls_ratio_opt(self) -> Optional[float]:
        return _ratio(self.lpls_cost, self.opt_cost)

    def as_dict(self) -> dict:
        row = {key: value for key, value in asdict(self).items() if value is not None}
        for key in RATIONAL_FIELDS:
            if key in row:
                row[key] = decimal_string(row[key])
        for key in ('ratio_opt', 'ratio_lp', 'lpls_ratio_lp', 'lpls_ratio_opt'):
            value = getattr(self, key)
            if value is not None:
                row[key] = value
        return row


def run_pipeline(instance: Instance, epsilon: Number, options: Optional[PipelineOptions] = None) -> RunRecord:
    """
    Decompose and solve, then optionally run the exact oracle and the LP-only baselines

    Baselines are LP+LS without guessing and strict-order list scheduling on
    the same LP order.

    Raises:
        PipelineError: any SchedulingError, tagged with the instance digest
    """
    options = options or PipelineOptions()
    digest = instance_digest(instance)
    eps = as_fraction(epsilon)
    try:
        began = time.perf_counter()
        result = solve_decomposed(instance, eps, options.b_mode, options.seed, options.bounded_mode,
                                  options.budget, options.workers)
        wall_time = time.perf_counter() - began
        record = RunRecord(digest, instance.n, str(eps), result.lp.Z, result.cost,
                           b=result.b, guesses_tried=result.guesses_tried, wall_time=wall_time)
        if options.exact:
            record.opt_cost = exact_opt(instance)[0]
        if options.baselines and instance.n:
            baseline = run_lp_ls(instance)
            record.lpls_cost = schedule_cost(baseline.schedule, instance)
            strict = list_schedule(instance, baseline.order, LsVariant.STRICT)
            record.strict_cost = schedule_cost(strict, instance)
        elif options.baselines:
            record.lpls_cost = record.strict_cost = 0.0
    except SchedulingError as e:
        raise PipelineError(digest, e) from e
    logger.info("run %s: n=%d eps=%s alg=%.6f Z_lp=%.6f", digest[:12], instance.n, eps, record.alg_cost, record.z_lp)
    return record


@dataclass
class FamilySummary:
    family: str
    runs: int = 0
    max_ratio_opt: Optional[float] = None
    mean_ratio_opt: Optional[float] = None
    max_ratio_lp: Optional[float] = None
    max_lpls_ratio_lp: Optional[float] = None

    def as_dict(self) -> dict:
        return {key: value for key, value in asdict(self).items() if value is not None}


@dataclass
class BenchReport:
    """Records in input order, per-family summaries and certified-bound violations"""
    records: list[RunRecord] = field(default_factory=list)
    summary: dict[str, FamilySummary] = field(default_factory=dict)
    violations: list[str] = field(default_factory=list)

    @property
    def exit_code(self) -> int:
        return EXIT_INVARIANT if self.violations else EXIT_OK

    def get_violations(self) -> list[str]:
        return self.violations.copy()

    def as_dict(self) -> dict:
        return {
            'records': [record.as_dict() for record in self.records],
            'summary': {name: s.as_dict() for name, s in self.summary.items()},
            'violations': self.get_violations(),
            'exit_code': self.exit_code,
        }


def _max(values: list[float]) -> Optional[float]:
    return max(values) if values else None


def _summarize(family: str, records: list[RunRecord]) -> FamilySummary:
    opt_ratios = [r.ratio_opt for r in records if r.ratio_opt is not None]
    return FamilySummary(
        family=family,
        runs=len(records),
        max_ratio_opt=_max(opt_ratios),
        mean_ratio_opt=sum(opt_ratios) / len(opt_ratios) if opt_ratios else None,
        max_ratio_lp=_max([r.ratio_lp for r in records]),
        max_lpls_ratio_lp=_max([r.lpls_ratio_lp for r in records if r.lpls_ratio_lp is not None]),
    )


def certify(record: RunRecord) -> list[str]:
    """Bounds each run must meet: opt <= alg, alg/opt <= 2(1+eps)^2, and LP+LS/Z_lp <= 2 when p <= r"""
    found = []
    eps = float(as_fraction(record.epsilon))
    bound = 2 * (1 + eps) ** 2
    ratio = record.ratio_opt
    if ratio is not None and ratio > bound + RATIO_TOLERANCE:
        found.append(f"{record.digest[:12]}: alg/opt = {ratio:.6f} > {bound:.6f}")
    if record.opt_cost is not None:
        slack = RATIO_TOLERANCE * max(1.0, record.opt_cost)
        if record.alg_cost < record.opt_cost - slack:
            found.append(f"{record.digest[:12]}: alg = {record.alg_cost:.6f} below opt {record.opt_cost:.6f}")
        if record.z_lp > record.opt_cost + slack:
            found.append(f"{record.digest[:12]}: Z_lp = {record.z_lp:.6f} exceeds opt {record.opt_cost:.6f}")
    if record.family == Family.P_LE_R.value and record.lpls_ratio_lp is not None \
            and record.lpls_ratio_lp > 2 + RATIO_TOLERANCE:
        found.append(f"{record.digest[:12]}: LP+LS/Z_lp = {record.lpls_ratio_lp:.6f} > 2 with p <= r")
    return found


def bench(configs: Sequence[GeneratorConfig], epsilons: Sequence[Number], trials: int,
          options: Optional[PipelineOptions] = None, workers: Optional[int] = None) -> BenchReport:
    """
    Run the pipeline over configs x epsilons x trials and certify the bounds

    Trial t of a config uses seed config.seed + t. Runs are spread over the
    worker pool; records keep the grid order.
    """
    options = options or PipelineOptions(exact=True, baselines=True)
    grid = [(config.model_copy(update={'seed': config.seed + trial}), epsilon)
            for config in configs for epsilon in epsilons for trial in range(trials)]

    def run(item: tuple[GeneratorConfig, Number]) -> RunRecord:
        config, epsilon = item
        record = run_pipeline(generate(config), epsilon, options)
        record.family = config.family.value
        record.seed = config.seed
        return record

    report = BenchReport(records=parallel_map(run, grid, workers))
    by_family: dict[str, list[RunRecord]] = {}
    for record in report.records:
        by_family.setdefault(record.family, []).append(record)
        report.violations.extend(certify(record))
    report.summary = {family: _summarize(family, records) for family, records in by_family.items()}
    logger.info("bench: %d runs, %d violations", len(report.records), len(report.violations))
    return report
