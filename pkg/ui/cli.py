"""Command-line interface for prec-sched"""
import argparse
import json
import logging
import sys
from fractions import Fraction
from typing import Optional, Sequence

from application.bounded_solver import BoundedMode, as_fraction, solve_bounded
from application.decomposition import BMode, bounded_subinstance, solve_decomposed
from application.errors import SchedulingError
from application.exact_oracle import exact_opt
from application.generators import Family, GeneratorConfig, generate
from application.instance_io import decimal_string, dump_instance, instance_digest, load_instance, schedule_to_json
from application.instance_model import prepare, schedule_cost, validate
from application.list_scheduling import LsVariant, check_ls_property, list_schedule, run_lp_ls
from application.lp_relaxation import Separation, solve_lp
from application.pipeline import PipelineOptions, bench, run_pipeline
from application.workers import resolve_workers
from config.constants import APP_CONFIG, DECOMPOSITION_CONFIG, EXIT_INVALID, EXIT_OK, EXIT_USAGE

logger = logging.getLogger(__name__)


class _Parser(argparse.ArgumentParser):
    """Usage errors exit with EXIT_USAGE"""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _epsilon(text: str) -> Fraction:
    try:
        return as_fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}")


def _emit(payload: dict, output: str):
    if output == 'json':
        print(json.dumps(payload, indent=2, default=str))
        return
    for key, value in payload.items():
        if isinstance(value, dict):
            print(f"{key}:")
            for inner, item in value.items():
                print(f"  {inner}: {item}")
        elif isinstance(value, list) and value and isinstance(value[0], dict):
            print(f"{key}:")
            for row in value:
                print("  " + ", ".join(f"{k}={v}" for k, v in row.items()))
        else:
            print(f"{key}: {value}")


def _load(path: str):
    return prepare(load_instance(path))


def cmd_validate(args) -> int:
    report = validate(load_instance(args.instance))
    _emit(report.as_dict(), args.output)
    return EXIT_OK if report.ok else EXIT_INVALID


def cmd_lp(args) -> int:
    instance = _load(args.instance)
    lp = solve_lp(instance, separation=args.separation, tol=args.tol)
    _emit({
        'Z': decimal_string(lp.Z),
        'C': [decimal_string(c) for c in lp.C],
        'cuts': [sorted(cut.subset) for cut in lp.active_cuts],
        'iterations': lp.iterations,
        'separation': lp.separation.value,
    }, args.output)
    return EXIT_OK


def cmd_lpls(args) -> int:
    instance = _load(args.instance)
    result = run_lp_ls(instance, separation=args.separation)
    schedule = list_schedule(instance, result.order, args.ls_variant)
    report = check_ls_property(schedule, instance, result.order)
    payload = schedule_to_json(schedule, schedule_cost(schedule, instance))
    payload.update({'lp_Z': decimal_string(result.lp.Z), 'order': list(result.order.order), 'ls_property': report.ok})
    _emit(payload, args.output)
    return EXIT_OK


def cmd_exact(args) -> int:
    instance = _load(args.instance)
    cost, schedule = exact_opt(instance, cap=args.cap, method=args.method)
    _emit({'opt': decimal_string(cost), 'schedule': schedule_to_json(schedule, cost)}, args.output)
    return EXIT_OK


def cmd_bounded(args) -> int:
    instance = _load(args.instance)
    sub = bounded_subinstance(instance, args.L, args.beta)
    result = solve_bounded(sub, args.epsilon, args.mode, args.budget, args.workers)
    payload = schedule_to_json(result.schedule, result.cost)
    payload.update({'guesses_tried': result.guesses_tried, 'best_guess': result.best_guess.as_dict()})
    _emit(payload, args.output)
    return EXIT_OK


def cmd_solve(args) -> int:
    instance = _load(args.instance)
    mode = BMode.RANDOM if args.seed is not None and not args.derandomize else BMode.DERANDOMIZED
    if args.exact or args.baselines:
        options = PipelineOptions(exact=args.exact, baselines=args.baselines, b_mode=mode, seed=args.seed,
                                  bounded_mode=args.mode, budget=args.budget,
                                  workers=resolve_workers(args.workers))
        _emit(run_pipeline(instance, args.epsilon, options).as_dict(), args.output)
        return EXIT_OK
    result = solve_decomposed(instance, args.epsilon, mode, args.seed, args.mode, args.budget, args.workers)
    payload = schedule_to_json(result.schedule, result.cost)
    payload.update({
        'digest': instance_digest(instance),
        'Z': decimal_string(result.lp.Z),
        'b': decimal_string(result.b),
        't': [decimal_string(t) for t in result.grid.breakpoints],
        'intervals': [{'index': o.index, 'jobs': list(o.jobs), 'cost': decimal_string(o.cost)}
                      for o in result.intervals],
        'guesses_tried': result.guesses_tried,
    })
    _emit(payload, args.output)
    return EXIT_OK


def cmd_bench(args) -> int:
    configs = [GeneratorConfig(n=2 if family is Family.TWO_JOB else args.n, seed=args.seed, family=family)
               for family in args.family]
    options = PipelineOptions(exact=True, baselines=True, bounded_mode=args.mode, budget=args.budget)
    report = bench(configs, args.epsilon, args.trials, options, args.workers)
    payload = report.as_dict()
    if args.output == 'table':
        payload.pop('records')
    _emit(payload, args.output)
    return report.exit_code


def cmd_gen(args) -> int:
    instance = generate(GeneratorConfig(n=args.n, seed=args.seed, family=args.family, M=args.M))
    text = dump_instance(instance, args.out)
    if args.out is None:
        print(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog='prec-sched',
                     description="Single-machine scheduling with release times and precedence constraints")
    parser.add_argument('--output', choices=['json', 'table'], default='json', help='Result format')
    parser.add_argument('--debug', action='store_true', help='Enable debug logging')
    parser.add_argument('--workers', type=int, default=None, help='Worker threads (default PREC_SCHED_THREADS)')
    sub = parser.add_subparsers(dest='command', required=True, parser_class=_Parser)

    def with_instance(name, helptext):
        p = sub.add_parser(name, help=helptext)
        p.add_argument('instance', help='Instance JSON file')
        return p

    p = with_instance('validate', 'Report structural defects of an instance')
    p.set_defaults(func=cmd_validate)

    p = with_instance('lp', 'Solve the LP relaxation')
    p.add_argument('--separation', choices=[s.value for s in Separation], default=None)
    p.add_argument('--tol', type=float, default=None)
    p.set_defaults(func=cmd_lp)

    p = with_instance('lpls', 'LP relaxation followed by list scheduling')
    p.add_argument('--separation', choices=[s.value for s in Separation], default=None)
    p.add_argument('--ls-variant', choices=[v.value for v in LsVariant], default=None)
    p.set_defaults(func=cmd_lpls)

    p = with_instance('exact', 'Exact optimum on small instances')
    p.add_argument('--cap', type=int, default=None)
    p.add_argument('--method', choices=['pareto', 'permutation'], default='pareto')
    p.set_defaults(func=cmd_exact)

    p = with_instance('bounded', 'Guess-and-list-schedule on a bounded instance')
    p.add_argument('--L', type=float, required=True, help='Release floor')
    p.add_argument('--beta', type=float, required=True, help='Makespan bound factor')
    p.add_argument('--epsilon', type=_epsilon, default=as_fraction(DECOMPOSITION_CONFIG['epsilon']))
    p.add_argument('--mode', choices=[m.value for m in BoundedMode], default=None)
    p.add_argument('--budget', type=int, default=None)
    p.set_defaults(func=cmd_bounded)

    p = with_instance('solve', 'Interval decomposition with bounded sub-instances')
    p.add_argument('--epsilon', type=_epsilon, default=as_fraction(DECOMPOSITION_CONFIG['epsilon']))
    p.add_argument('--seed', type=int, default=None, help='Draw the offset b at random with this seed')
    p.add_argument('--derandomize', action='store_true', help='Try every offset b (default)')
    p.add_argument('--mode', choices=[m.value for m in BoundedMode], default=None)
    p.add_argument('--budget', type=int, default=None)
    p.add_argument('--exact', action='store_true', help='Also run the exact oracle')
    p.add_argument('--baselines', action='store_true', help='Also run LP+LS and strict list scheduling')
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser('bench', help='Ratio benchmark over random families')
    p.add_argument('--family', type=Family, nargs='+', default=[Family.UNIFORM], choices=list(Family))
    p.add_argument('--n', type=int, default=6)
    p.add_argument('--trials', type=int, default=10)
    p.add_argument('--seed', type=int, default=0)
    p.add_argument('--epsilon', type=_epsilon, nargs='+', default=[as_fraction(DECOMPOSITION_CONFIG['epsilon'])])
    p.add_argument('--mode', choices=[m.value for m in BoundedMode], default=None)
    p.add_argument('--budget', type=int, default=None)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser('gen', help='Write a random instance')
    p.add_argument('--n', type=int, required=True)
    p.add_argument('--seed', type=int, default=0)
    p.add_argument('--family', type=Family, default=Family.UNIFORM, choices=list(Family),
                   help='Instance family; two_job is the example p=(1,M), r=(1,0), w=(M,0) and needs --n 2')
    p.add_argument('--M', type=int, default=10, help='Scale of the two-job example')
    p.add_argument('--out', default=None, help='Output path (default stdout)')
    p.set_defaults(func=cmd_gen)
    return parser


def configure_logging(debug: bool = False):
    level = getattr(logging, APP_CONFIG['log_level'], logging.INFO)
    if debug or APP_CONFIG['debug_mode']:
        level = logging.DEBUG
    logging.basicConfig(level=level, stream=sys.stderr, format='%(asctime)s %(levelname)s %(name)s: %(message)s')


def main(argv: Optional[Sequence[str]] = None) -> int:
    """CLI entry point"""
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.debug)
    try:
        return args.func(args)
    except SchedulingError as e:
        logger.error("%s", e)
        for finding in getattr(e, 'findings', [])[1:]:
            logger.error("  - %s", finding)
        return e.exit_code
    except OSError as e:
        logger.error("%s", e)
        return EXIT_USAGE
    except ValueError as e:
        logger.error("%s", e)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
