"""
Generalised polynomials: expression trees closed under +, *, floor and
fractional part, with a small DSL, exact evaluation and the constructive
indicator algorithms for sign, interval and zero sets on the natural numbers.
"""

import logging
import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence, Tuple

import sympy

from algebra.numbers import ExactScalar, ScalarLike, as_scalar, compare, floor_exact, Ordering
from utils.config import config
from utils.errors import GenLabError, IndeterminateFloor

logger = logging.getLogger(__name__)


class GenPolySyntaxError(GenLabError, ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class UnknownVariable(GenLabError, ValueError):
    def __init__(self, name: str, offset: Optional[int] = None):
        where = f" at offset {offset}" if offset is not None else ""
        super().__init__(f"unknown variable {name!r}{where}")
        self.name = name
        self.offset = offset


class NotUnivariate(GenLabError, ValueError):
    pass


class UnboundedCoefficient(GenLabError):
    pass


# ---------------------------------------------------------------------------
# AST

@dataclass(frozen=True)
class GenPoly:
    def __add__(self, other):
        return add(self, lift(other))

    def __radd__(self, other):
        return add(lift(other), self)

    def __sub__(self, other):
        return add(self, negate(lift(other)))

    def __rsub__(self, other):
        return add(lift(other), negate(self))

    def __mul__(self, other):
        return mul(self, lift(other))

    def __rmul__(self, other):
        return mul(lift(other), self)

    def __neg__(self):
        return negate(self)

    def __str__(self) -> str:
        return unparse(self)


@dataclass(frozen=True)
class Var(GenPoly):
    index: int
    name: str = ''

    def __eq__(self, other):
        return isinstance(other, Var) and other.index == self.index

    def __hash__(self):
        return hash(('var', self.index))

    @property
    def label(self) -> str:
        return self.name or f"x_{self.index + 1}"


@dataclass(frozen=True)
class Const(GenPoly):
    value: ExactScalar


@dataclass(frozen=True)
class Add(GenPoly):
    terms: Tuple[GenPoly, ...]


@dataclass(frozen=True)
class Mul(GenPoly):
    factors: Tuple[GenPoly, ...]


@dataclass(frozen=True)
class Floor(GenPoly):
    arg: GenPoly


@dataclass(frozen=True)
class Frac(GenPoly):
    arg: GenPoly


@dataclass(frozen=True)
class IntPow(GenPoly):
    base: GenPoly
    exponent: int

    def __post_init__(self):
        if self.exponent < 1:
            raise ValueError(f"exponent must be at least 1, got {self.exponent}")


ZERO = Const(ExactScalar(0))
ONE = Const(ExactScalar(1))
N = Var(0, 'n')


def const(value: ScalarLike) -> Const:
    return Const(as_scalar(value))


def lift(value) -> GenPoly:
    return value if isinstance(value, GenPoly) else const(value)


def _is_const(g: GenPoly, value=None) -> bool:
    if not isinstance(g, Const):
        return False
    return value is None or g.value == value


def add(*terms: GenPoly) -> GenPoly:
    """Sum with constant folding; zero terms are dropped."""
    kept = [t for t in terms if not _is_const(t, 0)]
    if not kept:
        return ZERO
    if all(isinstance(t, Const) for t in kept):
        total = ExactScalar(0)
        for t in kept:
            total = total + t.value
        return Const(total)
    if len(kept) == 1:
        return kept[0]
    return Add(tuple(kept))


def mul(*factors: GenPoly) -> GenPoly:
    """Product with constant folding; a zero factor annihilates."""
    if any(_is_const(f, 0) for f in factors):
        return ZERO
    kept = [f for f in factors if not _is_const(f, 1)]
    if not kept:
        return ONE
    if all(isinstance(f, Const) for f in kept):
        total = ExactScalar(1)
        for f in kept:
            total = total * f.value
        return Const(total)
    if len(kept) == 1:
        return kept[0]
    return Mul(tuple(kept))


def negate(g: GenPoly) -> GenPoly:
    if isinstance(g, Const):
        return Const(-g.value)
    if isinstance(g, Mul) and isinstance(g.factors[0], Const):
        return mul(Const(-g.factors[0].value), *g.factors[1:])
    return mul(Const(ExactScalar(-1)), g)


def floor_of(g: GenPoly) -> GenPoly:
    if isinstance(g, Const) and g.value.is_rational:
        return Const(ExactScalar(math.floor(g.value.fraction)))
    return Floor(g)


def frac_of(g: GenPoly) -> GenPoly:
    if isinstance(g, Const) and g.value.is_rational:
        value = g.value.fraction
        return Const(ExactScalar(value - math.floor(value)))
    return Frac(g)


def power(g: GenPoly, exponent: int) -> GenPoly:
    if exponent == 0:
        return ONE
    if exponent == 1:
        return g
    if isinstance(g, Const):
        return Const(g.value ** exponent)
    return IntPow(g, exponent)


def children(g: GenPoly) -> Tuple[GenPoly, ...]:
    if isinstance(g, Add):
        return g.terms
    if isinstance(g, Mul):
        return g.factors
    if isinstance(g, (Floor, Frac)):
        return (g.arg,)
    if isinstance(g, IntPow):
        return (g.base,)
    return ()


def arity(g: GenPoly) -> int:
    if isinstance(g, Var):
        return g.index + 1
    return max((arity(c) for c in children(g)), default=0)


def variables(g: GenPoly) -> Dict[int, Var]:
    if isinstance(g, Var):
        return {g.index: g}
    found: Dict[int, Var] = {}
    for c in children(g):
        found.update(variables(c))
    return found


# ---------------------------------------------------------------------------
# DSL

_TOKEN = re.compile(r'\s*(?:(?P<number>\d+(?:\.\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*/^(),]))')
_VARIABLE = re.compile(r'^x_(\d+)$')


def _tokenize(text: str) -> List[Tuple[str, str, int]]:
    tokens = []
    position = 0
    while position < len(text):
        rest = text[position:]
        if not rest.strip():
            break
        match = _TOKEN.match(text, position)
        if not match:
            offset = position + len(rest) - len(rest.lstrip())
            raise GenPolySyntaxError(f"unexpected character {text[offset]!r}", offset)
        kind = match.lastgroup
        tokens.append((kind, match.group(kind), match.start(kind)))
        position = match.end()
    tokens.append(('end', '', len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, declared_arity: Optional[int]):
        self.tokens = _tokenize(text)
        self.index = 0
        self.declared_arity = declared_arity

    def peek(self):
        return self.tokens[self.index]

    def take(self, value: Optional[str] = None):
        token = self.tokens[self.index]
        if value is not None and token[1] != value:
            if token[0] == 'end':
                raise GenPolySyntaxError(f"expected {value!r} but input ended", token[2])
            raise GenPolySyntaxError(f"expected {value!r}, found {token[1]!r}", token[2])
        self.index += 1
        return token

    def parse(self) -> GenPoly:
        g = self.expr()
        kind, text, offset = self.peek()
        if kind != 'end':
            raise GenPolySyntaxError(f"unexpected {text!r}", offset)
        return g

    def expr(self) -> GenPoly:
        terms = [self.term()]
        while self.peek()[1] in ('+', '-'):
            op = self.take()[1]
            right = self.term()
            terms.append(right if op == '+' else negate(right))
        if len(terms) == 1:
            return terms[0]
        if all(isinstance(t, Const) for t in terms):
            return add(*terms)
        return Add(tuple(terms))

    def term(self) -> GenPoly:
        factors = [self.unary()]
        while self.peek()[1] in ('*', '/'):
            _, op, offset = self.take()
            right = self.unary()
            if op == '*':
                factors.append(right)
                continue
            if not isinstance(right, Const):
                raise GenPolySyntaxError("division is only allowed by a constant", offset)
            if not right.value:
                raise GenPolySyntaxError("division by zero", offset)
            factors.append(Const(ExactScalar(1) / right.value))
        if len(factors) == 1:
            return factors[0]
        if all(isinstance(f, Const) for f in factors):
            return mul(*factors)
        return Mul(tuple(factors))

    def unary(self) -> GenPoly:
        if self.peek()[1] == '-':
            self.take()
            return negate(self.unary())
        return self.power()

    def power(self) -> GenPoly:
        base = self.atom()
        if self.peek()[1] == '^':
            self.take()
            kind, text, offset = self.take()
            if kind != 'number' or '.' in text or int(text) < 1:
                raise GenPolySyntaxError("exponent must be a positive integer", offset)
            return power(base, int(text)) if isinstance(base, Const) else IntPow(base, int(text))
        return base

    def atom(self) -> GenPoly:
        kind, text, offset = self.take()
        if kind == 'number':
            return Const(ExactScalar(Fraction(text)))
        if kind == 'end':
            raise GenPolySyntaxError("unexpected end of input", offset)
        if text == '(':
            g = self.expr()
            self.take(')')
            return g
        if kind != 'name':
            raise GenPolySyntaxError(f"unexpected {text!r}", offset)
        if text in ('floor', 'frac', 'sqrt'):
            self.take('(')
            inner = self.expr()
            self.take(')')
            if text == 'floor':
                return Floor(inner)
            if text == 'frac':
                return Frac(inner)
            if not isinstance(inner, Const):
                raise GenPolySyntaxError("sqrt argument must be a constant", offset)
            return Const(ExactScalar.sqrt(inner.value))
        if text == 'root':
            self.take('(')
            inner = self.expr()
            self.take(',')
            degree_kind, degree_text, degree_offset = self.take()
            if degree_kind != 'number' or '.' in degree_text or int(degree_text) < 1:
                raise GenPolySyntaxError("root degree must be a positive integer", degree_offset)
            self.take(')')
            if not isinstance(inner, Const):
                raise GenPolySyntaxError("root argument must be a constant", offset)
            return Const(ExactScalar.root(inner.value, int(degree_text)))
        if text == 'n':
            return self._variable(0, 'n', offset)
        match = _VARIABLE.match(text)
        if match and int(match.group(1)) >= 1:
            return self._variable(int(match.group(1)) - 1, text, offset)
        raise UnknownVariable(text, offset)

    def _variable(self, index: int, name: str, offset: int) -> Var:
        if self.declared_arity is not None and index >= self.declared_arity:
            raise UnknownVariable(name, offset)
        return Var(index, name)


def parse(text: str, declared_arity: Optional[int] = None) -> GenPoly:
    """Parse the DSL; `n` names coordinate 0 and `x_i` names coordinate i-1."""
    return _Parser(text, declared_arity).parse()


def _parenthesize(g: GenPoly, inside: type) -> str:
    text = unparse(g)
    if isinstance(g, Add) or (isinstance(g, Mul) and inside is Mul):
        return f"({text})"
    if isinstance(g, Const) and not _plain_constant(g):
        return f"({text})"
    return text


def _plain_constant(g: Const) -> bool:
    value = g.value
    return value.is_rational and value.fraction.denominator == 1 and value.fraction >= 0


def unparse(g: GenPoly) -> str:
    if isinstance(g, Var):
        return g.label
    if isinstance(g, Const):
        return str(g.value)
    if isinstance(g, Add):
        return ' + '.join(f"({unparse(t)})" if isinstance(t, Add) else _parenthesize(t, Add) for t in g.terms)
    if isinstance(g, Mul):
        return '*'.join(_parenthesize(f, Mul) for f in g.factors)
    if isinstance(g, Floor):
        return f"floor({unparse(g.arg)})"
    if isinstance(g, Frac):
        return f"frac({unparse(g.arg)})"
    if isinstance(g, IntPow):
        base = g.base
        text = unparse(base)
        if not (isinstance(base, (Var, Floor, Frac)) or (isinstance(base, Const) and _plain_constant(base))):
            text = f"({text})"
        return f"{text}^{g.exponent}"
    raise TypeError(f"not a generalised polynomial node: {g!r}")


def to_json(g: GenPoly) -> Dict[str, Any]:
    if isinstance(g, Var):
        return {'kind': 'var', 'index': g.index, 'name': g.label}
    if isinstance(g, Const):
        return {'kind': 'const', 'value': str(g.value)}
    if isinstance(g, Add):
        return {'kind': 'add', 'terms': [to_json(t) for t in g.terms]}
    if isinstance(g, Mul):
        return {'kind': 'mul', 'factors': [to_json(f) for f in g.factors]}
    if isinstance(g, Floor):
        return {'kind': 'floor', 'arg': to_json(g.arg)}
    if isinstance(g, Frac):
        return {'kind': 'frac', 'arg': to_json(g.arg)}
    if isinstance(g, IntPow):
        return {'kind': 'pow', 'base': to_json(g.base), 'exponent': g.exponent}
    raise TypeError(f"not a generalised polynomial node: {g!r}")


def from_json(data: Dict[str, Any]) -> GenPoly:
    kind = data['kind']
    if kind == 'var':
        return Var(int(data['index']), data.get('name', ''))
    if kind == 'const':
        return Const(as_scalar(data['value']))
    if kind == 'add':
        return Add(tuple(from_json(t) for t in data['terms']))
    if kind == 'mul':
        return Mul(tuple(from_json(f) for f in data['factors']))
    if kind == 'floor':
        return Floor(from_json(data['arg']))
    if kind == 'frac':
        return Frac(from_json(data['arg']))
    if kind == 'pow':
        return IntPow(from_json(data['base']), int(data['exponent']))
    raise ValueError(f"unknown node kind {kind!r}")


def to_sympy(g: GenPoly, symbols: Optional[Dict[int, sympy.Symbol]] = None) -> sympy.Expr:
    if isinstance(g, Var):
        if symbols and g.index in symbols:
            return symbols[g.index]
        return sympy.Symbol(g.label)
    if isinstance(g, Const):
        return g.value.to_sympy()
    if isinstance(g, Add):
        return sympy.Add(*(to_sympy(t, symbols) for t in g.terms))
    if isinstance(g, Mul):
        return sympy.Mul(*(to_sympy(f, symbols) for f in g.factors))
    if isinstance(g, Floor):
        return sympy.floor(to_sympy(g.arg, symbols))
    if isinstance(g, Frac):
        return sympy.frac(to_sympy(g.arg, symbols))
    if isinstance(g, IntPow):
        return to_sympy(g.base, symbols) ** g.exponent
    raise TypeError(f"not a generalised polynomial node: {g!r}")


# ---------------------------------------------------------------------------
# evaluation

def evaluate(g: GenPoly, point: Sequence[ScalarLike], max_bits: Optional[int] = None) -> ExactScalar:
    point = tuple(as_scalar(p) for p in point)
    needed = arity(g)
    if needed > len(point):
        raise ValueError(f"expression uses {needed} coordinates but the point has {len(point)}")
    memo: Dict[int, ExactScalar] = {}
    return _evaluate(g, point, max_bits, (), memo)


def _evaluate(g: GenPoly, point, max_bits, path, memo) -> ExactScalar:
    key = id(g)
    if key in memo:
        return memo[key]

    if isinstance(g, Var):
        value = point[g.index]
    elif isinstance(g, Const):
        value = g.value
    elif isinstance(g, Add):
        value = ExactScalar(0)
        for i, t in enumerate(g.terms):
            value = value + _evaluate(t, point, max_bits, path + (i,), memo)
    elif isinstance(g, Mul):
        value = ExactScalar(1)
        for i, f in enumerate(g.factors):
            value = value * _evaluate(f, point, max_bits, path + (i,), memo)
            if value.is_rational and value.fraction == 0:
                break
    elif isinstance(g, IntPow):
        value = _evaluate(g.base, point, max_bits, path + (0,), memo) ** g.exponent
    elif isinstance(g, (Floor, Frac)):
        inner = _evaluate(g.arg, point, max_bits, path + (0,), memo)
        try:
            integer = floor_exact(inner, max_bits)
        except IndeterminateFloor as e:
            raise e.with_context(path=path, subexpression=unparse(g))
        value = ExactScalar(integer) if isinstance(g, Floor) else inner - integer
    else:
        raise TypeError(f"not a generalised polynomial node: {g!r}")

    memo[key] = value
    return value


# ---------------------------------------------------------------------------
# expansion in powers of n

@dataclass(frozen=True)
class PolyInNExpansion:
    var: int
    coefficients: Tuple[GenPoly, ...]
    bounds: Tuple[Fraction, ...]

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    def reassemble(self) -> GenPoly:
        n = Var(self.var, 'n' if self.var == 0 else '')
        return add(*(mul(h, power(n, i)) for i, h in enumerate(self.coefficients)))


def _poly_add(a: List[GenPoly], b: List[GenPoly]) -> List[GenPoly]:
    size = max(len(a), len(b))
    a = a + [ZERO] * (size - len(a))
    b = b + [ZERO] * (size - len(b))
    return [add(x, y) for x, y in zip(a, b)]


def _poly_mul(a: List[GenPoly], b: List[GenPoly]) -> List[GenPoly]:
    result = [ZERO] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if _is_const(x, 0):
            continue
        for j, y in enumerate(b):
            result[i + j] = add(result[i + j], mul(x, y))
    return result


def _trim(coefficients: List[GenPoly]) -> List[GenPoly]:
    while len(coefficients) > 1 and _is_const(coefficients[-1], 0):
        coefficients = coefficients[:-1]
    return coefficients


def _expand(g: GenPoly, var: int) -> List[GenPoly]:
    if isinstance(g, Var):
        if g.index != var:
            raise NotUnivariate(f"variable {g.label} differs from the expansion variable")
        return [ZERO, ONE]
    if isinstance(g, Const):
        return [g]
    if isinstance(g, Add):
        result = [ZERO]
        for t in g.terms:
            result = _poly_add(result, _expand(t, var))
        return result
    if isinstance(g, Mul):
        result = [ONE]
        for f in g.factors:
            result = _poly_mul(result, _expand(f, var))
        return result
    if isinstance(g, IntPow):
        base = _expand(g.base, var)
        result = [ONE]
        for _ in range(g.exponent):
            result = _poly_mul(result, base)
        return result
    if isinstance(g, Frac):
        _check_univariate(g.arg, var)
        return [frac_of(g.arg)]
    if isinstance(g, Floor):
        inner = _expand(g.arg, var)
        return _poly_add(inner, [negate(frac_of(g.arg))])
    raise TypeError(f"not a generalised polynomial node: {g!r}")


def _check_univariate(g: GenPoly, var: int) -> None:
    for index, v in variables(g).items():
        if index != var:
            raise NotUnivariate(f"variable {v.label} differs from the expansion variable")


def sup_interval(g: GenPoly) -> Tuple[Fraction, Fraction]:
    """Interval containing every value of a bounded coefficient; Frac nodes count as [0, 1]."""
    if isinstance(g, Const):
        if g.value.is_rational:
            return g.value.fraction, g.value.fraction
        enclosure = g.value.enclosure
        return enclosure.lower, enclosure.upper
    if isinstance(g, Frac):
        return Fraction(0), Fraction(1)
    if isinstance(g, Floor):
        lower, upper = sup_interval(g.arg)
        return Fraction(math.floor(lower)), Fraction(math.floor(upper))
    if isinstance(g, Add):
        lower = upper = Fraction(0)
        for t in g.terms:
            a, b = sup_interval(t)
            lower, upper = lower + a, upper + b
        return lower, upper
    if isinstance(g, Mul):
        lower = upper = Fraction(1)
        for f in g.factors:
            a, b = sup_interval(f)
            products = (lower * a, lower * b, upper * a, upper * b)
            lower, upper = min(products), max(products)
        return lower, upper
    if isinstance(g, IntPow):
        lower, upper = sup_interval(g.base)
        e = g.exponent
        if e % 2 == 1 or lower >= 0:
            return lower ** e, upper ** e
        if upper <= 0:
            return upper ** e, lower ** e
        return Fraction(0), max(lower ** e, upper ** e)
    raise UnboundedCoefficient(f"cannot certify a bound for {unparse(g)}")


def sup_bound(g: GenPoly) -> Fraction:
    lower, upper = sup_interval(g)
    return max(abs(lower), abs(upper))


def expand_in_var(g: GenPoly, var: int = 0) -> PolyInNExpansion:
    coefficients = _trim(_expand(g, var))
    bounds = tuple(sup_bound(h) for h in coefficients)
    return PolyInNExpansion(var, tuple(coefficients), bounds)


# ---------------------------------------------------------------------------
# indicators on the natural numbers

def _bounded_ge0(h: GenPoly) -> GenPoly:
    """[h >= 0] for bounded h, via h/(2M) in (-1/2, 1/2)."""
    if isinstance(h, Const):
        return ONE if compare(h.value, 0) is not Ordering.LT else ZERO
    scale = Const(ExactScalar(Fraction(1, 2 * (sup_bound(h) + 1))))
    return add(ONE, negate(floor_of(mul(Const(ExactScalar(2)), frac_of(mul(h, scale))))))


def _is_zero_gate(r: GenPoly) -> GenPoly:
    """[r = 0] for integer-valued r: frac(r*sqrt(q)) vanishes only at r = 0."""
    radicand = int(config.get('genpoly.gate_radicand', 2))
    irrational = Const(ExactScalar.sqrt(radicand))
    half = Const(ExactScalar(Fraction(1, 2)))
    return floor_of(add(ONE, negate(mul(half, frac_of(mul(r, irrational))))))


def _ge0_from_coefficients(coefficients: List[GenPoly], var: int) -> GenPoly:
    coefficients = _trim(coefficients)
    d = len(coefficients) - 1
    if d == 0:
        return _bounded_ge0(coefficients[0])

    top = coefficients[d]
    top_sign = _bounded_ge0(top)
    if all(_is_const(h, 0) for h in coefficients[:d]):
        return top_sign

    c = sum((sup_bound(h) for h in coefficients[:d]), Fraction(0)) + 1
    n = Var(var, 'n' if var == 0 else '')
    half = Const(ExactScalar(Fraction(1, 2)))
    shifted = add(mul(n, top, Const(ExactScalar(1 / (2 * c)))), half)
    gate = _is_zero_gate(floor_of(shifted))

    # on the gate n*h_d = 2C(frac(u + 1/2) - 1/2), so it folds into h_{d-1}
    folded = mul(Const(ExactScalar(2 * c)), add(frac_of(shifted), negate(half)))
    lowered = list(coefficients[:d])
    lowered[d - 1] = add(lowered[d - 1], folded)
    rest = _ge0_from_coefficients(lowered, var)

    return add(mul(add(ONE, negate(gate)), top_sign), mul(gate, rest))


def indicator_ge0(g: GenPoly, var: int = 0) -> GenPoly:
    """{0,1}-valued generalised polynomial equal to 1 at n >= 1 exactly when g(n) >= 0."""
    expansion = expand_in_var(g, var)
    logger.debug(f"indicator_ge0: degree {expansion.degree}, bounds {[str(b) for b in expansion.bounds]}")
    return _ge0_from_coefficients(list(expansion.coefficients), var)


def indicator_interval(g: GenPoly, a: ScalarLike, b: ScalarLike, var: int = 0) -> GenPoly:
    a, b = as_scalar(a), as_scalar(b)
    if compare(a, b) is not Ordering.LT:
        raise ValueError(f"empty interval [{a}, {b})")
    lower = indicator_ge0(add(g, Const(-a)), var)
    upper = indicator_ge0(add(g, Const(-b)), var)
    return mul(lower, add(ONE, negate(upper)))


def indicator_zero(g: GenPoly, var: int = 0) -> GenPoly:
    return mul(indicator_ge0(g, var), indicator_ge0(negate(g), var))
