#!/usr/bin/env python3
"""
GenPoly Lab - command-line front end (run through the root main.py)
Generalised polynomials, the generalised x k maps and the orbit experiments built on them
"""

import argparse
import json
import logging
import os
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

import sympy

# Add the src directory to the Python path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from algebra import algsem, genpoly, stlie
from algebra.brackets import IndexSet
from algebra.numbers import ExactScalar, as_scalar, frac_exact, parse_scalar
from algebra.timesk import OutsideUnitCube, build_a, iterate_t, t_map
from lab.orbitlab import DensityWindow, OrbitLab, orbit_lab
from orchestrator.suite_runner import CheckStage, SuiteConfig, IdentitySuiteRunner
from utils.config import config
from utils.errors import GenLabError, IndeterminateComparison, IndeterminateFloor, PremiseViolated
from utils.reporting import experiment_markdown
from utils.serialization import emit, emit_json, hit_mask_csv, orbit_csv, read_csv, read_json, to_json_text

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_PREMISE = 2
EXIT_PRECISION = 3
EXIT_USAGE = 64
EXIT_DATA = 65
EXIT_NOINPUT = 66


class UsageError(Exception):
    pass


class StrictArgumentParser(argparse.ArgumentParser):
    """argparse with usage errors raised instead of exiting with status 2."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


@dataclass
class RunConfig:
    command: str
    action: Optional[str]
    options: Dict[str, Any] = field(default_factory=dict)
    max_bits: int = 0
    jobs: int = 0

    def to_json(self) -> Dict[str, Any]:
        return asdict(self)


def setup_logging(verbose: bool = False):
    """Configure logging: stderr plus the log file; stdout carries results only"""
    log_level = logging.DEBUG if verbose or config.debug else getattr(logging, config.log_level.upper(), logging.INFO)

    log_file = Path(config.log_file)
    log_file.parent.mkdir(parents=True, exist_ok=True)

    logging.basicConfig(
        level=log_level,
        format=config.log_format,
        handlers=[
            logging.FileHandler(log_file),
            logging.StreamHandler(sys.stderr)
        ]
    )
    logging.getLogger().setLevel(log_level)


# ---------------------------------------------------------------------------
# argument helpers

def split_top_level(text: str, separator: str = ',') -> List[str]:
    """Split on separators outside parentheses, so 'root(2,3),1/2' gives two parts."""
    parts, depth, current = [], 0, []
    for ch in text:
        if ch == '(':
            depth += 1
        elif ch == ')':
            depth -= 1
        if ch == separator and depth == 0:
            parts.append(''.join(current).strip())
            current = []
        else:
            current.append(ch)
    parts.append(''.join(current).strip())
    return [p for p in parts if p]


def parse_vector(text: str) -> List[ExactScalar]:
    return [parse_scalar(part) for part in split_top_level(text)]


def parse_points(text: str) -> List[List[ExactScalar]]:
    return [parse_vector(point) for point in text.split(';') if point.strip()]


def parse_window(text: str) -> tuple:
    low, high = (int(v) for v in text.split(','))
    if low > high:
        raise ValueError(f"window {text!r} is empty")
    return low, high


def parse_int_list(text: str) -> List[int]:
    return [int(v) for v in text.split(',') if v.strip()]


def torus_point(text: str) -> List[ExactScalar]:
    """Coordinates reduced mod 1, so --x sqrt(2) means sqrt(2) - 1."""
    return [frac_exact(v) for v in parse_vector(text)]


def format_scalar(value: ExactScalar, decimal: Optional[int]) -> str:
    if decimal is None:
        return str(value)
    return f"{value}  (~{value.decimal_string(decimal)}, inexact)"


def points_from_file(path: str) -> List[List[ExactScalar]]:
    columns = read_csv(path)
    names = [name for name in columns if name != 'n']
    if not names:
        raise ValueError(f"{path} has no coordinate columns")
    return [[parse_scalar(columns[name][i]) for name in names] for i in range(len(columns[names[0]]))]


def _sympy_locals() -> Dict[str, Any]:
    return {'E': stlie.E}


def graded_matrix(args, strictly_lower: bool = False) -> stlie.GradedMatrix:
    index_set = IndexSet.from_spec(args.D)
    frame = stlie.GradedFrame.from_index_set(index_set, augmented=args.augmented)
    text = args.entries
    if text.startswith('@'):
        text = Path(text[1:]).read_text(encoding='utf-8')
    raw = json.loads(text) if text.strip() else {}
    entries = {(row, col): sympy.sympify(str(value), locals=_sympy_locals())
               for row, cols in raw.items() for col, value in cols.items()}
    diagonal = None
    if not strictly_lower:
        scale = sympy.sympify(args.scale or '1', locals=_sympy_locals())
        diagonal = [scale ** d for d in frame.degrees]
    return stlie.GradedMatrix.from_entries(frame, entries, diagonal)


# ---------------------------------------------------------------------------
# gp

def cmd_gp_eval(args) -> int:
    g = genpoly.parse(args.expr)
    if args.n is not None:
        point = [as_scalar(args.n)]
    elif args.point is not None:
        point = parse_vector(args.point)
    else:
        point = []
    value = genpoly.evaluate(g, point)
    emit(format_scalar(value, args.decimal), args.output)
    return EXIT_OK


def cmd_gp_indicator(args) -> int:
    g = genpoly.parse(args.expr)
    if args.kind == 'ge0':
        indicator = genpoly.indicator_ge0(g)
        direct: Callable[[ExactScalar], bool] = lambda v: v.sign() >= 0
    elif args.kind == 'zero':
        indicator = genpoly.indicator_zero(g)
        direct = lambda v: v.sign() == 0
    else:
        if args.a is None or args.b is None:
            raise UsageError("gp indicator --kind interval needs --a and --b")
        a, b = parse_scalar(args.a), parse_scalar(args.b)
        indicator = genpoly.indicator_interval(g, a, b)
        direct = lambda v: (v - a).sign() >= 0 and (v - b).sign() < 0

    result: Dict[str, Any] = {'expr': genpoly.unparse(g), 'kind': args.kind, 'indicator': genpoly.unparse(indicator)}
    if args.check:
        mismatches = []
        for n in range(1, args.check + 1):
            expected = 1 if direct(genpoly.evaluate(g, [n])) else 0
            got = genpoly.evaluate(indicator, [n])
            if got != ExactScalar(expected):
                mismatches.append(n)
        result['check'] = {'range': [1, args.check], 'mismatches': mismatches}
        logger.info(f"indicator agrees with direct evaluation at {args.check - len(mismatches)} of {args.check} points")
    emit_json(result, args.output)
    return EXIT_OK if not result.get('check', {}).get('mismatches') else EXIT_FAILED


# ---------------------------------------------------------------------------
# bk

def cmd_bk_info(args) -> int:
    index_set = IndexSet.from_spec(args.D)
    info = index_set.to_json()
    info['degrees'] = {str(mu): d for mu, d in zip(index_set.order, index_set.degrees)}
    info['heights'] = {str(mu): mu.height for mu in index_set.order}
    info['complexity_vector'] = list(index_set.complexity_vector())
    info['layers'] = {str(d): [str(mu) for mu in layer] for d, layer in index_set.layers().items()}
    info['below'] = {str(mu): [str(nu) for nu in index_set.below(mu)] for mu in index_set.order}
    emit_json(info, args.output)
    return EXIT_OK


# ---------------------------------------------------------------------------
# timesk

def cmd_timesk_build(args) -> int:
    index_set = IndexSet.from_spec(args.D)
    x = parse_vector(args.x)
    try:
        affine = t_map(args.k, x, index_set)
    except OutsideUnitCube:
        emit_json(build_a(args.k, x, index_set).to_json(), args.output)
        return EXIT_OK
    data = affine.to_json()
    data['unipotent_part'] = [[str(v) for v in affine.unipotent_part().row(i)]
                              for i in range(affine.unipotent_part().rows)]
    data['violations'] = affine.linear.structure_violations() + affine.unipotent_violations()
    emit_json(data, args.output)
    return EXIT_OK


def cmd_timesk_check(args) -> int:
    suite_config = SuiteConfig(index_set=args.D, k_max=args.k, m_max=args.m, seed=args.seed)
    if args.alpha:
        suite_config.alphas = [parse_vector(a) for a in args.alpha]
    if args.points is not None:
        suite_config.points = args.points
    if args.trials is not None:
        suite_config.dependency_trials = args.trials
    if args.pair_max is not None:
        suite_config.pair_max = args.pair_max
    if args.stages:
        suite_config.stages = tuple(CheckStage(s) for s in args.stages.split(','))

    runner = IdentitySuiteRunner(suite_config)
    summary = runner.execute_suite()
    for stage in summary['stages']:
        print(f"{stage['stage']}: {'PASS' if stage['status'] == 'passed' else 'FAIL'} ({stage['cases']} cases)")
    emit(to_json_text(summary) if args.format == 'json' else runner.markdown(), args.output)
    return EXIT_OK if runner.passed else EXIT_FAILED


def cmd_timesk_orbit(args) -> int:
    index_set = IndexSet.from_spec(args.D)
    if args.x is not None:
        start = parse_vector(args.x)
    elif args.alpha is not None:
        start = [frac_exact(v) for v in index_set.v_vector(parse_vector(args.alpha), args.m)]
    else:
        raise UsageError("timesk orbit needs --x or --alpha")
    orbit = iterate_t(start, args.k, args.steps, index_set)
    if args.decimal is not None:
        orbit = [[format_scalar(v, args.decimal) for v in point] for point in orbit]
    emit(orbit_csv(orbit, index_set.labels()), args.output)
    return EXIT_OK


# ---------------------------------------------------------------------------
# lie

def cmd_lie_exp(args) -> int:
    z = graded_matrix(args, strictly_lower=True)
    if args.scale:
        result = stlie.exp_graded(sympy.sympify(args.scale, locals=_sympy_locals()), z)
    else:
        result = stlie.exp_nilpotent(z)
    emit_json(result.to_json(), args.output)
    return EXIT_OK


def cmd_lie_log(args) -> int:
    a = graded_matrix(args)
    if a.is_unipotent:
        data = {'scale': '1', 'Z': stlie.log_unipotent(a).to_json()}
    else:
        scale, z = stlie.log_graded(a)
        data = {'scale': str(scale), 'Z': z.to_json()}
    emit_json(data, args.output)
    return EXIT_OK


def cmd_lie_diag(args) -> int:
    a = graded_matrix(args)
    p = stlie.diagonalize(a)
    conjugated = (p.inverse() @ a @ p).simplified()
    data = {'P': p.to_json(), 'diagonal': [str(v) for v in conjugated.diagonal()],
            'verified': conjugated.is_diagonal}
    emit_json(data, args.output)
    return EXIT_OK if data['verified'] else EXIT_FAILED


# ---------------------------------------------------------------------------
# ideal

def _sequence(args) -> List[List[ExactScalar]]:
    if args.from_file:
        return points_from_file(args.from_file)
    if args.points:
        return parse_points(args.points)
    if args.x is not None:
        return [list(p) for p in orbit_lab.torus_orbit(torus_point(args.x), args.k, args.steps - 1)]
    raise UsageError("give points with --points, --from-file or --x/--k/--steps")


def cmd_ideal_fit(args) -> int:
    basis = algsem.vanishing_ideal(_sequence(args), args.degree)
    data = basis.to_json()
    data['polynomials'] = [str(p) for p in basis.polynomials()]
    emit_json(data, args.output)
    return EXIT_OK


def cmd_ideal_tail(args) -> int:
    report = algsem.tail_closure(_sequence(args), parse_int_list(args.tails), args.degree)
    data = report.to_json()
    data['polynomials'] = [[str(p) for p in basis.polynomials()] for basis in report.bases]
    emit_json(data, args.output)
    return EXIT_OK


# ---------------------------------------------------------------------------
# semialg

def cmd_semialg_member(args) -> int:
    s = algsem.SemialgebraicSet.parse(args.S, args.d)
    point = parse_vector(args.point)
    data = {'set': str(s), 'point': [str(v) for v in point], 'member': algsem.membership(s, point),
            'complexity': algsem.complexity(s)}
    emit_json(data, args.output)
    return EXIT_OK


def cmd_semialg_sandwich(args) -> int:
    result = algsem.limit_sandwich(args.d, args.ineq)
    data: Dict[str, Any] = {
        'directions': [str(v) for v in result.directions],
        'R': str(result.lower),
        'U': str(result.boundary),
    }
    if not args.no_verify:
        tails = parse_int_list(args.tails) if args.tails else None
        report = algsem.verify_sandwich(result, tail_indices=tails)
        data['verification'] = {'checked': report.checked, 'holds': report.holds,
                                'lower_violations': report.lower_violations,
                                'upper_violations': report.upper_violations}
    emit_json(data, args.output)
    return EXIT_OK if data.get('verification', {}).get('holds', True) else EXIT_FAILED


# ---------------------------------------------------------------------------
# orbit

def _lab(args) -> OrbitLab:
    lab = OrbitLab()
    if args.jobs:
        lab.jobs = args.jobs
    return lab


def cmd_orbit_run(args) -> int:
    lab = _lab(args)
    x = torus_point(args.x)
    orbit = lab.torus_orbit(x, args.k, args.steps)
    if args.S:
        target = algsem.SemialgebraicSet.parse(args.S, len(x))
        hits = lab.hitting_times(orbit, target)
        if hits.indeterminate:
            logger.warning(f"membership undecided at n = {hits.indeterminate}")
        emit(hit_mask_csv(hits.hits, len(orbit)), args.output)
        return EXIT_OK
    if args.decimal is not None:
        orbit = [[format_scalar(v, args.decimal) for v in point] for point in orbit]
    emit(orbit_csv(orbit, [f"x_{i + 1}" for i in range(len(x))]), args.output)
    return EXIT_OK


def cmd_orbit_search(args) -> int:
    lab = _lab(args)
    x = torus_point(args.x)
    if len(x) != args.d:
        raise ValueError(f"--x has {len(x)} coordinates but --d is {args.d}")
    target = algsem.SemialgebraicSet.parse(args.S, args.d)
    n_window = parse_window(args.n_window)
    search = lab.multiplier_search_torus(x, target, args.k, n_window, args.lmax)
    data = {
        'params': {'d': args.d, 'x': [str(v) for v in x], 'k': args.k, 'S': str(target),
                   'n_window': list(n_window), 'l_max': args.lmax},
        'premise_check': {'holds': search.premise_holds, 'failures': search.premise_failures},
        'multipliers': search.multipliers,
        'precision': {'max_bits': lab.max_bits, 'indeterminate': search.indeterminate},
    }
    emit_json(data, args.output)
    return EXIT_OK


def _zero_set(args, index_set: IndexSet):
    if args.zero_expr:
        return genpoly.parse(args.zero_expr, declared_arity=len(index_set))
    return algsem.SemialgebraicSet.parse(args.zero_set or 'true', len(index_set))


def cmd_orbit_thm_a(args) -> int:
    lab = _lab(args)
    index_set = IndexSet.from_spec(args.D)
    alpha = parse_vector(args.alpha)
    zero_set = _zero_set(args, index_set)
    report = lab.multiplier_experiment(index_set, alpha, zero_set, args.k, args.mmax,
                                      parse_window(args.n_window), skip_premise=args.skip_premise)
    if args.verify:
        failures = lab.verify_report(report, index_set, alpha, zero_set)
        report.precision['reverified'] = not failures
        if failures:
            logger.error(f"witnesses failing re-verification: {failures}")
    if args.format == 'markdown':
        emit(experiment_markdown(report.to_json()), args.output)
    else:
        emit_json(report.to_json(), args.output)
    if not report.premise_check['holds']:
        logger.warning("premise check failed on the window (skipped on request)")
        return EXIT_PREMISE
    return EXIT_OK


# ---------------------------------------------------------------------------
# density

def _density_members(args) -> List[int]:
    length = args.N
    if args.progression:
        a, b = (int(v) for v in args.progression.split(','))
        members = [n for n in range(1, length + 1) if n % a == b % a]
    elif args.powers:
        members, p = [], 1
        while p <= length:
            members.append(p)
            p *= args.powers
            if args.powers == 1:
                break
    elif args.squares:
        members = [j * j for j in range(1, length + 1) if j * j <= length]
    elif args.zeros:
        g = genpoly.parse(args.zeros, declared_arity=1)
        members = [n for n in range(1, length + 1) if genpoly.evaluate(g, [n]).sign() == 0]
    elif args.from_file:
        members = _members_from_file(args.from_file)
    else:
        raise UsageError("density needs one of --progression, --powers, --squares, --zeros, --from-file")
    if args.union_interval:
        start, width = (int(v) for v in args.union_interval.split(','))
        members = sorted(set(members) | set(range(start, start + width)))
    return members


def _members_from_file(path: str) -> List[int]:
    if path.endswith('.json'):
        data = read_json(path)
        if isinstance(data, dict):
            data = [entry['m'] if isinstance(entry, dict) else entry for entry in data.get('multipliers', [])]
        return [int(n) for n in data]
    columns = read_csv(path)
    if 'hit' in columns:
        return [int(n) for n, hit in zip(columns['n'], columns['hit']) if hit.strip() == '1']
    return [int(n) for n in columns['n']]


def cmd_density(args) -> int:
    lab = _lab(args)
    window = DensityWindow.from_members(_density_members(args), args.N)
    stats = lab.density_stats(window, args.banach_window)
    data = stats.to_json()
    data['N'] = window.length
    data['count'] = window.count
    if args.decimal is not None:
        data['decimal'] = {key: f"{float(getattr(stats, key)):.{args.decimal}f} (inexact)"
                           for key in ('upper', 'lower', 'final', 'banach_upper')}
    emit_json(data, args.output)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser

def parse_arguments(argv: Sequence[str]) -> argparse.Namespace:
    common = StrictArgumentParser(add_help=False)
    common.add_argument('--output', type=str, help='Write the result to this file instead of stdout')
    common.add_argument('--decimal', type=int, metavar='N', help='Add N-digit rounded decimals, marked inexact')
    common.add_argument('--max-bits', type=int, help='Precision cap for floors and comparisons (default from GENPOLY_MAX_BITS or settings)')
    common.add_argument('--jobs', type=int, help='Worker cap for multiplier searches')
    common.add_argument('--seed', type=int, default=int(config.get('suite.seed', 20240611)),
                        help='Seed for randomised property suites')
    common.add_argument('--verbose', action='store_true', help='Enable verbose logging')

    parser = StrictArgumentParser(
        prog='genpoly-lab',
        description=f"{config.app_name} - generalised polynomials, x k maps and orbit experiments",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  %(prog)s gp eval --expr "frac(n/3)" --n 7
  %(prog)s timesk check --D running --alpha 1/3,1/5,1/7 --k 2 --m 12
  %(prog)s orbit search --d 1 --x "sqrt(2)" --k 2 --S "0.55<x_1<0.61" --lmax 10000
        """
    )
    commands = parser.add_subparsers(dest='command', required=True, parser_class=StrictArgumentParser)

    def sub(group, name: str, func: Callable, help_text: str) -> argparse.ArgumentParser:
        p = group.add_parser(name, parents=[common], help=help_text, description=help_text)
        p.set_defaults(func=func)
        return p

    # gp
    gp = commands.add_parser('gp', help='Generalised polynomial expressions').add_subparsers(dest='action', required=True)
    p = sub(gp, 'eval', cmd_gp_eval, 'Evaluate an expression exactly')
    p.add_argument('--expr', required=True, help='Expression, e.g. "frac(n*sqrt(2)) * floor(n/3)"')
    p.add_argument('--n', type=int, help='Value of n')
    p.add_argument('--point', help='Comma separated values of x_1, x_2, ...')
    p = sub(gp, 'indicator', cmd_gp_indicator, 'Build the sign, interval or zero indicator of a univariate expression')
    p.add_argument('--expr', required=True, help='Univariate expression in n')
    p.add_argument('--kind', choices=['ge0', 'interval', 'zero'], default='ge0', help='Which indicator (default: ge0)')
    p.add_argument('--a', help='Lower end of the interval [a, b)')
    p.add_argument('--b', help='Upper end of the interval [a, b)')
    p.add_argument('--check', type=int, metavar='N', help='Compare with direct evaluation on n = 1..N')

    # bk
    bk = commands.add_parser('bk', help='Bracket index sets').add_subparsers(dest='action', required=True)
    p = sub(bk, 'info', cmd_bk_info, 'Describe an index set')
    p.add_argument('--D', required=True, help='Preset name or comma separated generators, e.g. "1[2],2[1]"')

    # timesk
    timesk = commands.add_parser('timesk', help='Generalised x k maps').add_subparsers(dest='action', required=True)
    p = sub(timesk, 'build', cmd_timesk_build, 'Build A_k(x) and, on the unit cube, the affine form of T_k')
    p.add_argument('--D', required=True, help='Index set')
    p.add_argument('--k', type=int, required=True, help='Multiplier k')
    p.add_argument('--x', required=True, help='Point, one coordinate per index')
    p = sub(timesk, 'check', cmd_timesk_check, 'Run the identity suite')
    p.add_argument('--D', default='running', help='Index set (default: running)')
    p.add_argument('--alpha', action='append', help='Coefficient vector; repeat for several (default: random)')
    p.add_argument('--k', type=int, default=12, help='Largest k checked (default: 12)')
    p.add_argument('--m', type=int, default=12, help='Largest m checked (default: 12)')
    p.add_argument('--pair-max', type=int, help='Largest k, l in composition checks')
    p.add_argument('--points', type=int, help='Random points per composition check')
    p.add_argument('--trials', type=int, help='Perturbation trials for the dependency check')
    p.add_argument('--stages', help='Comma separated subset of: ' + ', '.join(s.value for s in CheckStage))
    p.add_argument('--format', choices=['markdown', 'json'], default='markdown', help='Summary format')
    p = sub(timesk, 'orbit', cmd_timesk_orbit, 'Iterate T_k and write the orbit as CSV')
    p.add_argument('--D', required=True, help='Index set')
    p.add_argument('--k', type=int, required=True, help='Multiplier k')
    p.add_argument('--steps', type=int, required=True, help='Number of steps')
    p.add_argument('--x', help='Starting point in the unit cube')
    p.add_argument('--alpha', help='Start at {v(m)} for this coefficient vector')
    p.add_argument('--m', type=int, default=1, help='Multiplier m for --alpha (default: 1)')

    # lie
    lie = commands.add_parser('lie', help='Standard triangular matrices').add_subparsers(dest='action', required=True)
    for name, func, help_text in (
            ('exp', cmd_lie_exp, 'exp of a strictly lower Z, or exp_graded when --scale is given'),
            ('log', cmd_lie_log, 'log of a unipotent or graded standard matrix'),
            ('diag', cmd_lie_diag, 'Unipotent P diagonalising a standard matrix')):
        p = sub(lie, name, func, help_text)
        p.add_argument('--D', required=True, help='Index set defining the frame')
        p.add_argument('--augmented', action='store_true', help='Add the degree-zero coordinate 0 in front')
        p.add_argument('--entries', default='{}', help='JSON {row: {col: value}} of off-diagonal entries, or @file')
        p.add_argument('--scale', help='Scale E; the diagonal is E^d (default 1)')

    # ideal
    ideal = commands.add_parser('ideal', help='Degree-bounded vanishing ideals').add_subparsers(dest='action', required=True)
    for name, func, help_text in (
            ('fit', cmd_ideal_fit, 'Vanishing ideal of a finite point set'),
            ('tail', cmd_ideal_tail, 'Vanishing ideals of the tails of a sequence')):
        p = sub(ideal, name, func, help_text)
        p.add_argument('--degree', type=int, help='Degree bound (default from settings)')
        p.add_argument('--points', help='Points separated by ";" with comma separated coordinates')
        p.add_argument('--from-file', help='CSV with one column per coordinate (an n column is ignored)')
        p.add_argument('--x', help='Generate the torus orbit of this point')
        p.add_argument('--k', type=int, default=2, help='Multiplier for --x (default: 2)')
        p.add_argument('--steps', type=int, default=20, help='Orbit length for --x (default: 20)')
        if name == 'tail':
            p.add_argument('--tails', required=True, help='Comma separated increasing tail starts (1-indexed)')

    # semialg
    semialg = commands.add_parser('semialg', help='Semialgebraic sets').add_subparsers(dest='action', required=True)
    p = sub(semialg, 'member', cmd_semialg_member, 'Exact membership of a point')
    p.add_argument('--d', type=int, required=True, help='Dimension')
    p.add_argument('--S', required=True, help='Set, e.g. "x_1^2 + x_2^2 < 1 & x_1 > 0 | x_2 = 0"')
    p.add_argument('--point', required=True, help='Comma separated coordinates')
    p = sub(semialg, 'sandwich', cmd_semialg_sandwich, 'Limit sandwich R, U for a sequence of strict inequalities in n')
    p.add_argument('--d', type=int, required=True, help='Dimension')
    p.add_argument('--ineq', action='append', required=True, help='Polynomial g_n with S_n = {g_n > 0}; repeatable')
    p.add_argument('--tails', help='Comma separated n used as the eventual tail')
    p.add_argument('--no-verify', action='store_true', help='Skip the grid verification')

    # orbit
    orbit = commands.add_parser('orbit', help='Orbit experiments').add_subparsers(dest='action', required=True)
    p = sub(orbit, 'run', cmd_orbit_run, 'Torus orbit {k^n x} as CSV, or its hit mask with --S')
    p.add_argument('--x', required=True, help='Point, reduced mod 1')
    p.add_argument('--k', type=int, required=True, help='Multiplier k')
    p.add_argument('--steps', type=int, required=True, help='Last n')
    p.add_argument('--S', help='Target set; switches the output to a hit mask')
    p = sub(orbit, 'search', cmd_orbit_search, 'Multipliers l with {l k^n x} in S on a window')
    p.add_argument('--d', type=int, required=True, help='Dimension')
    p.add_argument('--x', required=True, help='Point, reduced mod 1')
    p.add_argument('--k', type=int, required=True, help='Multiplier k')
    p.add_argument('--S', required=True, help='Target set')
    p.add_argument('--n-window', default='0,10', help='n0,n1 (default: 0,10)')
    p.add_argument('--lmax', type=int, required=True, help='Largest multiplier l')
    p = sub(orbit, 'thmA', cmd_orbit_thm_a, 'Multipliers m with {v(m k^n)} in a zero set')
    p.add_argument('--D', required=True, help='Index set')
    p.add_argument('--alpha', required=True, help='Coefficient vector, one value per leaf')
    p.add_argument('--k', type=int, required=True, help='Multiplier k')
    p.add_argument('--mmax', type=int, required=True, help='Largest multiplier m')
    p.add_argument('--n-window', default='0,8', help='n0,n1 (default: 0,8)')
    p.add_argument('--zero-set', help='Semialgebraic zero set in x_1..x_|D| (default: true)')
    p.add_argument('--zero-expr', help='Generalised polynomial g; the zero set is {g = 0}')
    p.add_argument('--skip-premise', action='store_true', help='Record premise failures instead of stopping')
    p.add_argument('--verify', action='store_true', help='Re-check every witness at doubled precision')
    p.add_argument('--format', choices=['json', 'markdown'], default='json', help='Report format')

    # density
    p = commands.add_parser('density', parents=[common], help='Density statistics of a set of naturals')
    p.set_defaults(func=cmd_density, action=None)
    p.add_argument('--N', type=int, default=10000, help='Window length (default: 10000)')
    p.add_argument('--progression', help='a,b for the progression aN + b')
    p.add_argument('--powers', type=int, help='Powers of k')
    p.add_argument('--squares', action='store_true', help='Perfect squares')
    p.add_argument('--zeros', help='Zeros of a generalised polynomial in n')
    p.add_argument('--from-file', help='CSV (n, hit) mask or a JSON list / report')
    p.add_argument('--union-interval', help='M,W: add the block [M, M+W)')
    p.add_argument('--banach-window', type=int, help='Window width for the Banach estimate')

    return parser.parse_args(list(argv))


def resolve_run_config(args: argparse.Namespace) -> RunConfig:
    if args.max_bits is not None:
        os.environ['GENPOLY_MAX_BITS'] = str(args.max_bits)
    options = {key: value for key, value in vars(args).items()
               if key not in ('func', 'command', 'action', 'verbose')}
    return RunConfig(
        command=args.command,
        action=getattr(args, 'action', None),
        options=options,
        max_bits=config.max_bits,
        jobs=args.jobs or config.jobs,
    )


def run(argv: Sequence[str]) -> int:
    try:
        args = parse_arguments(argv)
    except UsageError as e:
        print(str(e), file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as e:
        # --help
        return e.code if isinstance(e.code, int) else EXIT_USAGE

    setup_logging(args.verbose)
    try:
        run_config = resolve_run_config(args)
        logger.info(f"run config: {json.dumps(run_config.to_json(), ensure_ascii=False)}")
        return args.func(args)
    except UsageError as e:
        print(f"genpoly-lab: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except PremiseViolated as e:
        logger.error(f"premise violated: {e}")
        return EXIT_PREMISE
    except (IndeterminateFloor, IndeterminateComparison) as e:
        logger.error(f"precision exhausted: {e}")
        return EXIT_PRECISION
    except FileNotFoundError as e:
        logger.error(f"input not found: {e}")
        return EXIT_NOINPUT
    except (GenLabError, ValueError, KeyError, NotImplementedError) as e:
        logger.error(f"{type(e).__name__}: {e}")
        return EXIT_DATA


def main():
    try:
        sys.exit(run(sys.argv[1:]))
    except KeyboardInterrupt:
        print("\nInterrupted by user", file=sys.stderr)
        sys.exit(130)


if __name__ == "__main__":
    main()
