"""
Algebraic and semialgebraic toolkit over Q: degree-bounded vanishing ideals of
point sets, stabiliser checks, semialgebraic sets with exact membership, the
unimodular change of coordinates and the limit sandwich for sequences of sets.
"""

import itertools
import logging
import math
import re
import tokenize
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Any, Dict, List, Optional, Sequence, Tuple

import sympy
from sympy.parsing.sympy_parser import convert_xor, parse_expr, rationalize, standard_transformations

from algebra.numbers import ExactScalar, Ordering, ScalarLike, as_scalar, compare, frac_exact
from utils.config import config
from utils.errors import GenLabError

logger = logging.getLogger(__name__)

MONOMIAL_ORDER = 'grlex-desc'
_TRANSFORMATIONS = standard_transformations + (convert_xor, rationalize)


class EmptyTail(GenLabError, ValueError):
    pass


class DegreeOverflow(GenLabError):
    pass


class NotUnimodular(GenLabError, ValueError):
    pass


class NonConvergentCoefficients(GenLabError):
    pass


class SetSyntaxError(GenLabError, ValueError):
    pass


def coordinates(dimension: int) -> Tuple[sympy.Symbol, ...]:
    return tuple(sympy.Symbol(f"x_{i + 1}") for i in range(dimension))


def monomials(dimension: int, degree_bound: int) -> Tuple[Tuple[int, ...], ...]:
    """Exponent tuples of total degree <= bound, graded and lexicographically descending."""
    exponents = [e for e in itertools.product(range(degree_bound + 1), repeat=dimension) if sum(e) <= degree_bound]
    return tuple(sorted(exponents, key=lambda e: (sum(e), e), reverse=True))


def monomial_expr(exponent: Sequence[int], symbols: Sequence[sympy.Symbol]) -> sympy.Expr:
    return sympy.Mul(*(s ** e for s, e in zip(symbols, exponent)))


def _sympy_point(point: Sequence[ScalarLike]) -> Tuple[sympy.Expr, ...]:
    return tuple(as_scalar(v).to_sympy() for v in point)


def _evaluation_rows(point: Tuple[sympy.Expr, ...], exponents) -> List[List[sympy.Rational]]:
    """One rational row per surd appearing in the monomial values at the point."""
    values = []
    for e in exponents:
        value = sympy.expand(sympy.Mul(*(p ** k for p, k in zip(point, e))))
        values.append(value.as_coefficients_dict())
    keys = sorted({key for parts in values for key in parts}, key=sympy.default_sort_key)
    return [[sympy.Rational(parts.get(key, 0)) for parts in values] for key in keys]


def _rref_rows(vectors: List[List[sympy.Rational]]) -> Tuple[Tuple[sympy.Rational, ...], ...]:
    if not vectors:
        return ()
    reduced, pivots = sympy.Matrix(vectors).rref()
    return tuple(tuple(reduced.row(i)) for i in range(len(pivots)))


def _sparse(vector: Sequence[sympy.Rational], exponents) -> Dict[str, str]:
    return {','.join(map(str, e)): str(c) for e, c in zip(exponents, vector) if c != 0}


@dataclass(frozen=True)
class IdealBasis:
    """Echelon basis of the polynomials of degree <= degree_bound vanishing on the points."""

    dimension: int
    degree_bound: int
    exponents: Tuple[Tuple[int, ...], ...]
    rows: Tuple[Tuple[sympy.Rational, ...], ...]
    points: Tuple[Tuple[sympy.Expr, ...], ...] = field(repr=False)

    @property
    def size(self) -> int:
        return len(self.rows)

    @cached_property
    def symbols(self) -> Tuple[sympy.Symbol, ...]:
        return coordinates(self.dimension)

    def polynomials(self) -> List[sympy.Expr]:
        return [sympy.Add(*(c * monomial_expr(e, self.symbols) for e, c in zip(self.exponents, row)))
                for row in self.rows]

    def vector(self, poly: sympy.Expr) -> Optional[List[sympy.Rational]]:
        """Coefficient vector in this monomial basis, or None when the degree is too high."""
        p = sympy.Poly(sympy.expand(poly), *self.symbols)
        if p.is_zero:
            return [sympy.Integer(0)] * len(self.exponents)
        if p.total_degree() > self.degree_bound:
            return None
        coefficients = dict(p.terms())
        return [sympy.Rational(coefficients.get(e, 0)) for e in self.exponents]

    def span_contains(self, vector: Sequence[sympy.Rational]) -> bool:
        if not any(vector):
            return True
        if not self.rows:
            return False
        basis = sympy.Matrix(self.rows)
        return basis.rank() == sympy.Matrix.vstack(basis, sympy.Matrix([list(vector)])).rank()

    def contains(self, poly: sympy.Expr) -> bool:
        vector = self.vector(poly)
        return vector is not None and self.span_contains(vector)

    def same_span(self, other: 'IdealBasis') -> bool:
        return self.exponents == other.exponents and self.rows == other.rows

    def subspace_of(self, other: 'IdealBasis') -> bool:
        return all(other.span_contains(row) for row in self.rows)

    def vanishes_on(self, poly: sympy.Expr) -> bool:
        """Whether poly is zero at every generating point."""
        for point in self.points:
            value = sympy.expand(poly.subs(dict(zip(self.symbols, point)), simultaneous=True))
            if sympy.radsimp(value) != 0:
                return False
        return True

    def to_json(self) -> Dict[str, Any]:
        return {
            'd': self.dimension,
            'D': self.degree_bound,
            'order': MONOMIAL_ORDER,
            'basis': [_sparse(row, self.exponents) for row in self.rows],
        }


def vanishing_ideal(points: Sequence[Sequence[ScalarLike]], degree_bound: Optional[int] = None) -> IdealBasis:
    if not points:
        raise ValueError("need at least one point")
    degree_bound = config.degree_bound if degree_bound is None else degree_bound
    if degree_bound < 1:
        raise ValueError(f"degree bound must be at least 1, got {degree_bound}")
    converted = tuple(_sympy_point(p) for p in points)
    dimension = len(converted[0])
    if any(len(p) != dimension for p in converted):
        raise ValueError("all points must have the same dimension")

    exponents = monomials(dimension, degree_bound)
    rows: List[List[sympy.Rational]] = []
    for point in dict.fromkeys(converted):
        rows.extend(_evaluation_rows(point, exponents))
    kernel = sympy.Matrix(rows).nullspace()
    basis = _rref_rows([list(v) for v in kernel])
    logger.debug(f"vanishing ideal: {len(converted)} points, {len(exponents)} monomials, {len(basis)} relations")
    return IdealBasis(dimension, degree_bound, exponents, basis, converted)


@dataclass
class TailClosureReport:
    tail_starts: List[int]
    bases: List[IdealBasis]
    stabilized: bool
    stable_from: Optional[int]
    increasing: bool

    def to_json(self) -> Dict[str, Any]:
        return {
            'tail_starts': self.tail_starts,
            'bases': [b.to_json() for b in self.bases],
            'stabilized': self.stabilized,
            'stable_from': self.stable_from,
            'increasing': self.increasing,
        }


def tail_closure(sequence: Sequence[Sequence[ScalarLike]], tail_starts: Sequence[int],
                 degree_bound: Optional[int] = None) -> TailClosureReport:
    """Vanishing ideals of the tails {x_n : n >= N0} of a 1-indexed sequence."""
    if not tail_starts:
        raise ValueError("need at least one tail start")
    if list(tail_starts) != sorted(set(tail_starts)):
        raise ValueError("tail starts must be strictly increasing")
    bases = []
    for start in tail_starts:
        if start < 1 or start > len(sequence):
            raise EmptyTail(f"tail starting at {start} is empty for a sequence of length {len(sequence)}")
        bases.append(vanishing_ideal(sequence[start - 1:], degree_bound))

    stable_from = None
    for i in range(len(bases) - 1, 0, -1):
        if not bases[i].same_span(bases[i - 1]):
            break
        stable_from = tail_starts[i - 1]
    increasing = all(a.subspace_of(b) for a, b in zip(bases, bases[1:]))
    return TailClosureReport(list(tail_starts), bases, stable_from is not None, stable_from, increasing)


def translation_check(basis: IdealBasis, shift: Sequence[ScalarLike]) -> bool:
    """Whether the degree-bounded ideal is invariant under translation by `shift`."""
    shift = _sympy_point(shift)
    substitution = {s: s - v for s, v in zip(basis.symbols, shift)}
    for poly in basis.polynomials():
        shifted = sympy.expand(poly.subs(substitution, simultaneous=True))
        if not basis.contains(shifted):
            return False
    return True


@dataclass(frozen=True)
class PolynomialMap:
    components: Tuple[sympy.Expr, ...]

    @classmethod
    def affine(cls, matrix: Sequence[Sequence[ScalarLike]], shift: Optional[Sequence[ScalarLike]] = None) -> 'PolynomialMap':
        symbols = coordinates(len(matrix))
        shift = shift or [0] * len(matrix)
        components = []
        for row, c in zip(matrix, shift):
            terms = [as_scalar(a).to_sympy() * s for a, s in zip(row, symbols)]
            components.append(sympy.expand(sympy.Add(*terms) + as_scalar(c).to_sympy()))
        return cls(tuple(components))

    @property
    def dimension(self) -> int:
        return len(self.components)

    @property
    def degree(self) -> int:
        symbols = coordinates(self.dimension)
        return max((sympy.Poly(c, *symbols).total_degree() for c in self.components), default=0)

    def compose(self, other: 'PolynomialMap') -> 'PolynomialMap':
        """self o other."""
        return PolynomialMap(tuple(other.pull_back(c) for c in self.components))

    def pull_back(self, poly: sympy.Expr) -> sympy.Expr:
        """poly o self."""
        symbols = coordinates(self.dimension)
        return sympy.expand(poly.subs(dict(zip(symbols, self.components)), simultaneous=True))

    def power(self, n: int) -> 'PolynomialMap':
        result = PolynomialMap(coordinates(self.dimension))
        for _ in range(n):
            result = self.compose(result)
        return result


def affine_image_check(source: IdealBasis, target: IdealBasis, transform: PolynomialMap,
                       sample_count: int = 1, degree_cap: Optional[int] = None) -> bool:
    """
    Whether T^j maps the points cut out by `source` into the zero set of
    `target` for j = 1..sample_count.
    """
    degree_cap = config.degree_cap if degree_cap is None else degree_cap
    for j in range(1, sample_count + 1):
        mapped = transform.power(j)
        for poly in target.polynomials():
            pulled = mapped.pull_back(poly)
            degree = sympy.Poly(pulled, *source.symbols).total_degree() if pulled != 0 else 0
            if degree > degree_cap:
                raise DegreeOverflow(f"composition has degree {degree}, above the cap {degree_cap}")
            if not source.vanishes_on(pulled):
                return False
            if degree <= source.degree_bound and not source.contains(pulled):
                return False
    return True


# ---------------------------------------------------------------------------
# semialgebraic sets

def _terms(poly: sympy.Poly) -> Tuple[Tuple[Tuple[int, ...], ExactScalar], ...]:
    return tuple((e, ExactScalar.from_sympy(c)) for e, c in poly.terms())


def evaluate_terms(terms, point: Sequence[ExactScalar]) -> ExactScalar:
    total = ExactScalar(0)
    for exponent, coefficient in terms:
        value = coefficient
        for x, e in zip(point, exponent):
            if e:
                value = value * x ** e
        total = total + value
    return total


@dataclass(frozen=True)
class BasicPiece:
    """{x : f(x) = 0 for f in equalities, g(x) > 0 for g in inequalities}."""

    dimension: int
    equalities: Tuple[sympy.Expr, ...] = ()
    inequalities: Tuple[sympy.Expr, ...] = ()

    @cached_property
    def _compiled(self):
        symbols = coordinates(self.dimension)
        return ([_terms(sympy.Poly(f, *symbols)) for f in self.equalities],
                [_terms(sympy.Poly(g, *symbols)) for g in self.inequalities])

    def contains(self, point: Sequence[ExactScalar], max_bits: Optional[int] = None) -> bool:
        equalities, inequalities = self._compiled
        for terms in equalities:
            if compare(evaluate_terms(terms, point), 0, max_bits) is not Ordering.EQ:
                return False
        for terms in inequalities:
            if compare(evaluate_terms(terms, point), 0, max_bits) is not Ordering.GT:
                return False
        return True

    def complexity(self) -> int:
        symbols = coordinates(self.dimension)
        return sum(_total_degree(p, symbols) for p in self.equalities + self.inequalities)

    def __str__(self) -> str:
        parts = [f"{f} = 0" for f in self.equalities] + [f"{g} > 0" for g in self.inequalities]
        return ' & '.join(parts) if parts else 'true'


def _total_degree(poly: sympy.Expr, symbols) -> int:
    p = sympy.Poly(poly, *symbols)
    return 0 if p.is_zero else p.total_degree()


def _parse_side(text: str, names: Dict[str, sympy.Symbol]) -> sympy.Expr:
    try:
        return parse_expr(text, local_dict=dict(names), transformations=_TRANSFORMATIONS)
    except (SyntaxError, TypeError, sympy.SympifyError, tokenize.TokenError) as e:
        raise SetSyntaxError(f"cannot parse {text!r}: {e}")


_RELATION = re.compile(r'(==|=|<|>)')


def _parse_condition(text: str, names: Dict[str, sympy.Symbol]):
    if re.search(r'<=|>=|!=', text):
        raise SetSyntaxError(f"only strict inequalities and equalities are allowed: {text!r}")
    parts = _RELATION.split(text)
    if len(parts) < 3:
        raise SetSyntaxError(f"condition {text!r} has no relation")
    equalities, inequalities = [], []
    sides = [_parse_side(p.strip(), names) for p in parts[0::2]]
    for (lhs, rhs), op in zip(zip(sides, sides[1:]), parts[1::2]):
        if op == '<':
            inequalities.append(sympy.expand(rhs - lhs))
        elif op == '>':
            inequalities.append(sympy.expand(lhs - rhs))
        else:
            equalities.append(sympy.expand(lhs - rhs))
    return equalities, inequalities


def _check_polynomial(expr: sympy.Expr, symbols, text: str) -> None:
    try:
        sympy.Poly(expr, *symbols)
    except sympy.PolynomialError:
        raise SetSyntaxError(f"{text!r} is not polynomial in the coordinates")


@dataclass(frozen=True)
class SemialgebraicSet:
    dimension: int
    pieces: Tuple[BasicPiece, ...]

    @classmethod
    def everything(cls, dimension: int) -> 'SemialgebraicSet':
        return cls(dimension, (BasicPiece(dimension),))

    @classmethod
    def empty(cls, dimension: int) -> 'SemialgebraicSet':
        return cls(dimension, ())

    @classmethod
    def basic(cls, dimension: int, equalities=(), inequalities=()) -> 'SemialgebraicSet':
        return cls(dimension, (BasicPiece(dimension, tuple(equalities), tuple(inequalities)),))

    @classmethod
    def parse(cls, text: str, dimension: int) -> 'SemialgebraicSet':
        """
        Pieces joined by '|', conditions joined by '&'; a condition is a chain
        such as "0.55 < x_1 < 0.61" or "x_2 = x_1^2". "true" and "false" name
        the whole space and the empty set.
        """
        stripped = text.strip().lower()
        if stripped in ('true', 'everything', 'all'):
            return cls.everything(dimension)
        if stripped in ('false', 'empty', 'none'):
            return cls.empty(dimension)
        symbols = coordinates(dimension)
        names = {str(s): s for s in symbols}
        pieces = []
        for piece_text in text.split('|'):
            equalities, inequalities = [], []
            for condition in piece_text.split('&'):
                if not condition.strip():
                    raise SetSyntaxError(f"empty condition in {piece_text!r}")
                eqs, ineqs = _parse_condition(condition, names)
                for expr in eqs + ineqs:
                    _check_polynomial(expr, symbols, condition)
                equalities.extend(eqs)
                inequalities.extend(ineqs)
            pieces.append(BasicPiece(dimension, tuple(equalities), tuple(inequalities)))
        return cls(dimension, tuple(pieces))

    def union(self, other: 'SemialgebraicSet') -> 'SemialgebraicSet':
        return SemialgebraicSet(self.dimension, self.pieces + other.pieces)

    def __str__(self) -> str:
        if not self.pieces:
            return 'false'
        return ' | '.join(str(p) for p in self.pieces)

    def to_json(self) -> Dict[str, Any]:
        symbols = coordinates(self.dimension)

        def sparse(expr):
            p = sympy.Poly(expr, *symbols)
            return {','.join(map(str, e)): str(c) for e, c in p.terms()}

        return {
            'd': self.dimension,
            'order': MONOMIAL_ORDER,
            'pieces': [{'F': [sparse(f) for f in p.equalities], 'G': [sparse(g) for g in p.inequalities]}
                       for p in self.pieces],
        }


def membership(s: SemialgebraicSet, point: Sequence[ScalarLike], max_bits: Optional[int] = None) -> bool:
    point = tuple(as_scalar(v) for v in point)
    if len(point) != s.dimension:
        raise ValueError(f"point has {len(point)} coordinates, the set lives in dimension {s.dimension}")
    return any(piece.contains(point, max_bits) for piece in s.pieces)


def complexity(s: SemialgebraicSet) -> int:
    """Sum of the degrees of all polynomials in this representation; an upper bound for the minimum."""
    return sum(piece.complexity() for piece in s.pieces)


@dataclass(frozen=True)
class SemialgebraicFamily:
    """Sets S(y) cut out by polynomials in x whose coefficients depend on parameters y."""

    dimension: int
    parameters: Tuple[sympy.Symbol, ...]
    template: Tuple[BasicPiece, ...]

    @classmethod
    def parse(cls, text: str, dimension: int, parameters: Sequence[str]) -> 'SemialgebraicFamily':
        symbols = coordinates(dimension)
        params = tuple(sympy.Symbol(p) for p in parameters)
        names = {str(s): s for s in symbols + params}
        pieces = []
        for piece_text in text.split('|'):
            equalities, inequalities = [], []
            for condition in piece_text.split('&'):
                eqs, ineqs = _parse_condition(condition, names)
                equalities.extend(eqs)
                inequalities.extend(ineqs)
            pieces.append(BasicPiece(dimension, tuple(equalities), tuple(inequalities)))
        return cls(dimension, params, tuple(pieces))

    def instantiate(self, values: Sequence[ScalarLike]) -> SemialgebraicSet:
        substitution = {p: as_scalar(v).to_sympy() for p, v in zip(self.parameters, values)}
        pieces = tuple(
            BasicPiece(self.dimension,
                       tuple(sympy.expand(f.subs(substitution)) for f in piece.equalities),
                       tuple(sympy.expand(g.subs(substitution)) for g in piece.inequalities))
            for piece in self.template)
        return SemialgebraicSet(self.dimension, pieces)

    def complexity_bound(self) -> int:
        """Degree sum in x alone; bounds the complexity of every member uniformly."""
        symbols = coordinates(self.dimension)
        return sum(_total_degree(p, symbols) for piece in self.template
                   for p in piece.equalities + piece.inequalities)


def change_basis_membership(target: SemialgebraicSet, transform: Sequence[Sequence[int]],
                            point: Sequence[ScalarLike], max_bits: Optional[int] = None) -> bool:
    """Whether frac(T x) lies in the target set, for unimodular integer T."""
    matrix = sympy.Matrix(transform)
    if not all(sympy.sympify(a).is_integer for a in matrix) or abs(matrix.det()) != 1:
        raise NotUnimodular(f"{matrix.tolist()} is not an integer matrix of determinant +-1")
    point = tuple(as_scalar(v) for v in point)
    image = []
    for row in matrix.tolist():
        total = ExactScalar(0)
        for a, v in zip(row, point):
            total = total + v * int(a)
        image.append(frac_exact(total, max_bits))
    return membership(target, image, max_bits)


# ---------------------------------------------------------------------------
# limits of sequences of sets

N_SYMBOL = sympy.Symbol('n', positive=True, integer=True)


@dataclass
class SandwichResult:
    dimension: int
    directions: List[sympy.Expr]
    lower: SemialgebraicSet
    boundary: SemialgebraicSet
    inequalities: List[sympy.Expr]


def _limit_direction(poly: sympy.Expr, symbols) -> sympy.Expr:
    p = sympy.Poly(sympy.expand(poly), *symbols)
    terms = sorted(p.terms(), key=lambda t: (sum(t[0]), t[0]), reverse=True)
    coefficients = [(e, sympy.simplify(c)) for e, c in terms if sympy.simplify(c) != 0]
    for _, lead in coefficients:
        ratios = []
        for e, c in coefficients:
            ratio = sympy.limit(c / lead, N_SYMBOL, sympy.oo)
            if not ratio.is_finite or isinstance(ratio, sympy.AccumBounds):
                break
            ratios.append((e, ratio))
        else:
            sign = sympy.limit(lead / sympy.Abs(lead), N_SYMBOL, sympy.oo)
            if sign not in (1, -1):
                continue
            return sympy.expand(sign * sympy.Add(*(r * monomial_expr(e, symbols) for e, r in ratios)))
    raise NonConvergentCoefficients(f"no normalisation of {poly} converges")


def limit_sandwich(dimension: int, inequalities: Sequence[Any], equalities: Sequence[Any] = ()) -> SandwichResult:
    """
    For S_n = {g_n > 0 for all g} on R^d, with coefficients depending on the
    positive integer n, return R = {limit directions > 0} and U = {their
    product = 0} with R contained in the limit of S_n, contained in R | U.
    """
    if equalities:
        raise NotImplementedError("sequences with equalities are not supported")
    symbols = coordinates(dimension)
    names = {str(s): s for s in symbols}
    names['n'] = N_SYMBOL
    polys = [ineq if isinstance(ineq, sympy.Expr) else _parse_side(str(ineq), names) for ineq in inequalities]
    directions = [_limit_direction(g, symbols) for g in polys]
    lower = SemialgebraicSet.basic(dimension, (), directions)
    boundary = SemialgebraicSet.basic(dimension, (sympy.expand(sympy.Mul(*directions)),), ())
    logger.info(f"limit directions: {', '.join(str(d) for d in directions)}")
    return SandwichResult(dimension, directions, lower, boundary, polys)


def sandwich_member(result: SandwichResult, n: int, point: Sequence[ScalarLike]) -> bool:
    """Membership of point in S_n."""
    s_n = SemialgebraicSet.basic(result.dimension, (),
                                 [sympy.expand(g.subs(N_SYMBOL, n)) for g in result.inequalities])
    return membership(s_n, point)


def default_grid(dimension: int) -> List[Tuple[Fraction, ...]]:
    count = int(config.get('algsem.sandwich.grid_points', 100))
    low = Fraction(str(config.get('algsem.sandwich.grid_low', '-1')))
    high = Fraction(str(config.get('algsem.sandwich.grid_high', '1')))
    per_axis = max(2, math.ceil(count ** (1 / dimension)))
    axis = [low + (high - low) * i / (per_axis - 1) for i in range(per_axis)]
    return list(itertools.product(axis, repeat=dimension))


@dataclass
class SandwichReport:
    checked: int
    lower_violations: List[Tuple[str, ...]]
    upper_violations: List[Tuple[str, ...]]

    @property
    def holds(self) -> bool:
        return not self.lower_violations and not self.upper_violations


def verify_sandwich(result: SandwichResult, points: Optional[Sequence[Sequence[ScalarLike]]] = None,
                    tail_indices: Optional[Sequence[int]] = None) -> SandwichReport:
    """
    On each sample point: membership in R forces membership in S_n for every
    tail index, and membership in every such S_n forces membership in R | U.
    """
    points = default_grid(result.dimension) if points is None else points
    tail_indices = config.sandwich_tail_indices if tail_indices is None else tail_indices
    lower_violations, upper_violations = [], []
    for point in points:
        eventually = all(sandwich_member(result, n, point) for n in tail_indices)
        in_lower = membership(result.lower, point)
        if in_lower and not eventually:
            lower_violations.append(tuple(str(v) for v in point))
        if eventually and not (in_lower or membership(result.boundary, point)):
            upper_violations.append(tuple(str(v) for v in point))
    return SandwichReport(len(points), lower_violations, upper_violations)
