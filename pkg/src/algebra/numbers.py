"""
Exact scalar tower.

ExactScalar is either a rational (held as a Fraction) or a constructed real:
a sympy expression built from rationals with field operations and integer
roots, together with a dyadic enclosure at a working precision. Floors,
fractional parts and comparisons are decided by refining the enclosure, never
by rounding a float.
"""

import logging
import math
import re
from dataclasses import dataclass
from decimal import Decimal
from enum import Enum
from fractions import Fraction
from typing import Callable, Dict, Optional, Tuple, Union

import sympy
from sympy import integer_nthroot

from utils.config import config
from utils.errors import GenLabError, IndeterminateComparison, IndeterminateFloor

logger = logging.getLogger(__name__)


class ScalarKind(Enum):
    RATIONAL = "rational"
    CONSTRUCTED = "constructed"


class Ordering(Enum):
    LT = -1
    EQ = 0
    GT = 1


class NotConstructible(GenLabError, ValueError):
    pass


class ScalarSyntaxError(GenLabError, ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class _Unresolved(Exception):
    """Interval too wide to invert; needs more bits."""


@dataclass(frozen=True)
class Enclosure:
    lower: Fraction
    upper: Fraction
    bits: int

    @property
    def width(self) -> Fraction:
        return self.upper - self.lower

    def contains(self, value: Fraction) -> bool:
        return self.lower <= value <= self.upper

    def intersect(self, other: Optional['Enclosure']) -> 'Enclosure':
        if other is None:
            return self
        return Enclosure(max(self.lower, other.lower), min(self.upper, other.upper),
                         max(self.bits, other.bits))


# ---------------------------------------------------------------------------
# dyadic interval evaluation of sympy trees

def _down(value: Fraction, bits: int) -> Fraction:
    scale = 1 << bits
    return Fraction((value.numerator * scale) // value.denominator, scale)


def _up(value: Fraction, bits: int) -> Fraction:
    scale = 1 << bits
    return Fraction(-((-value.numerator * scale) // value.denominator), scale)


def _outward(lower: Fraction, upper: Fraction, bits: int) -> Tuple[Fraction, Fraction]:
    return _down(lower, bits), _up(upper, bits)


def _root_down(value: Fraction, degree: int, bits: int) -> Fraction:
    if value < 0:
        return -_root_up(-value, degree, bits)
    scaled = (value.numerator << (degree * bits)) // value.denominator
    root, _ = integer_nthroot(scaled, degree)
    return Fraction(int(root), 1 << bits)


def _root_up(value: Fraction, degree: int, bits: int) -> Fraction:
    if value < 0:
        return -_root_down(-value, degree, bits)
    scaled = -((-(value.numerator << (degree * bits))) // value.denominator)
    root, exact = integer_nthroot(scaled, degree)
    root = int(root)
    return Fraction(root if exact else root + 1, 1 << bits)


def _mul_interval(a: Tuple[Fraction, Fraction], b: Tuple[Fraction, Fraction]) -> Tuple[Fraction, Fraction]:
    products = (a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1])
    return min(products), max(products)


def _pow_interval(lower: Fraction, upper: Fraction, exponent: int) -> Tuple[Fraction, Fraction]:
    if exponent % 2 == 1 or lower >= 0:
        return lower ** exponent, upper ** exponent
    if upper <= 0:
        return upper ** exponent, lower ** exponent
    return Fraction(0), max(lower ** exponent, upper ** exponent)


def _interval(expr: sympy.Expr, bits: int) -> Tuple[Fraction, Fraction]:
    if expr.is_Rational:
        value = Fraction(int(expr.p), int(expr.q))
        return _outward(value, value, bits)

    if expr.is_Add:
        lower = upper = Fraction(0)
        for term in expr.args:
            a, b = _interval(term, bits)
            lower += a
            upper += b
        return _outward(lower, upper, bits)

    if expr.is_Mul:
        result = (Fraction(1), Fraction(1))
        for factor in expr.args:
            result = _mul_interval(result, _interval(factor, bits))
        return _outward(result[0], result[1], bits)

    if expr.is_Pow:
        base, exponent = expr.args
        if not exponent.is_Rational:
            raise NotConstructible(f"exponent {exponent} is not rational")
        numerator, denominator = int(exponent.p), int(exponent.q)
        lower, upper = _interval(base, bits)
        if denominator != 1:
            if denominator % 2 == 0:
                if upper < 0:
                    raise NotConstructible(f"even root of negative value {base}")
                lower = max(lower, Fraction(0))
            lower, upper = _root_down(lower, denominator, bits), _root_up(upper, denominator, bits)
        if numerator < 0:
            if lower <= 0 <= upper:
                raise _Unresolved()
            lower, upper = 1 / upper, 1 / lower
            numerator = -numerator
        return _outward(*_pow_interval(lower, upper, numerator), bits)

    raise NotConstructible(f"{expr} is outside the constructible scalar tower")


def _check_constructible(expr: sympy.Expr) -> None:
    if expr.is_Rational:
        return
    if expr.is_Add or expr.is_Mul:
        for arg in expr.args:
            _check_constructible(arg)
        return
    if expr.is_Pow and expr.args[1].is_Rational:
        _check_constructible(expr.args[0])
        return
    raise NotConstructible(f"{expr} is outside the constructible scalar tower")


def _canonical(expr: sympy.Expr) -> sympy.Expr:
    return sympy.expand(sympy.radsimp(expr))


# ---------------------------------------------------------------------------

ScalarLike = Union['ExactScalar', int, Fraction, str]


class ExactScalar:
    """Rational or constructed real; immutable."""

    __slots__ = ('_value', '_expr', '_bits', '_seed', '_memo')

    def __init__(self, value: Union[int, Fraction, Decimal] = 0):
        if isinstance(value, float):
            raise TypeError("floats are not exact; pass a Fraction or a literal string")
        self._value = Fraction(value)
        self._expr = None
        self._bits = config.initial_bits
        self._seed = None
        self._memo: Dict[int, Enclosure] = {}

    # -- construction -------------------------------------------------------

    @classmethod
    def _constructed(cls, expr: sympy.Expr, bits: Optional[int] = None,
                     seed: Optional[Enclosure] = None) -> 'ExactScalar':
        scalar = cls.__new__(cls)
        scalar._value = None
        scalar._expr = expr
        scalar._bits = bits or config.initial_bits
        scalar._seed = seed
        scalar._memo = {}
        return scalar

    @classmethod
    def from_sympy(cls, expr) -> 'ExactScalar':
        expr = sympy.sympify(expr)
        if expr.is_Rational:
            return cls(Fraction(int(expr.p), int(expr.q)))
        _check_constructible(expr)
        return cls._constructed(expr)

    @classmethod
    def rational(cls, numerator: int, denominator: int = 1) -> 'ExactScalar':
        return cls(Fraction(numerator, denominator))

    @classmethod
    def root(cls, value: ScalarLike, degree: int) -> 'ExactScalar':
        if degree < 1:
            raise ValueError(f"root degree must be positive, got {degree}")
        value = as_scalar(value)
        if degree == 1:
            return value
        if value.sign() < 0:
            if degree % 2 == 0:
                raise NotConstructible(f"even root of negative value {value}")
            return -cls.root(-value, degree)
        return cls.from_sympy(sympy.root(value.to_sympy(), degree))

    @classmethod
    def sqrt(cls, value: ScalarLike) -> 'ExactScalar':
        return cls.root(value, 2)

    @classmethod
    def parse(cls, text: str) -> 'ExactScalar':
        return parse_scalar(text)

    # -- accessors ----------------------------------------------------------

    @property
    def kind(self) -> ScalarKind:
        return ScalarKind.RATIONAL if self._value is not None else ScalarKind.CONSTRUCTED

    @property
    def is_rational(self) -> bool:
        return self._value is not None

    @property
    def fraction(self) -> Fraction:
        if self._value is None:
            raise ValueError(f"{self} is not rational")
        return self._value

    @property
    def bits(self) -> int:
        return self._bits

    def to_sympy(self) -> sympy.Expr:
        if self._value is not None:
            return sympy.Rational(self._value.numerator, self._value.denominator)
        return self._expr

    def simplified(self) -> 'ExactScalar':
        if self._value is not None:
            return self
        return ExactScalar.from_sympy(_canonical(self._expr))

    # -- enclosures ---------------------------------------------------------

    def enclosure_at(self, bits: int) -> Enclosure:
        if self._value is not None:
            lower, upper = self._value, self._value
            return Enclosure(lower, upper, bits)
        if bits not in self._memo:
            lower, upper = _interval(self._expr, bits)
            self._memo[bits] = Enclosure(lower, upper, bits).intersect(self._seed)
        return self._memo[bits]

    @property
    def enclosure(self) -> Enclosure:
        return self.enclosure_at(self._bits)

    def refine(self, bits: int) -> 'ExactScalar':
        """Same value at a higher working precision; the new enclosure sits inside the old one."""
        if self._value is not None or bits <= self._bits:
            return self
        try:
            seed = self.enclosure
        except _Unresolved:
            seed = self._seed
        return ExactScalar._constructed(self._expr, bits, seed)

    def decimal_string(self, digits: int, max_bits: Optional[int] = None) -> str:
        """Rounded decimal rendering; inexact by construction."""
        if self._value is not None:
            midpoint = self._value
        else:
            bits = min(max(int(digits * 3.33) + 16, self._bits), max_bits or config.max_bits)
            enclosure = self.refine(bits).enclosure
            midpoint = (enclosure.lower + enclosure.upper) / 2
        scaled = round(midpoint * 10 ** digits)
        sign = '-' if scaled < 0 else ''
        whole, part = divmod(abs(scaled), 10 ** digits)
        if digits == 0:
            return f"{sign}{whole}"
        return f"{sign}{whole}.{part:0{digits}d}"

    def sign(self, max_bits: Optional[int] = None) -> int:
        return compare(self, ExactScalar(0), max_bits).value

    # -- arithmetic ---------------------------------------------------------

    def _combine(self, other, op: Callable, rationalize: bool = False) -> 'ExactScalar':
        if self._value is not None and other._value is not None:
            return ExactScalar(op(self._value, other._value))
        expr = op(self.to_sympy(), other.to_sympy())
        if rationalize:
            expr = sympy.radsimp(expr)
        return ExactScalar.from_sympy(sympy.expand(expr))

    def __add__(self, other):
        other = _coerce(other)
        return NotImplemented if other is None else self._combine(other, lambda a, b: a + b)

    def __radd__(self, other):
        other = _coerce(other)
        return NotImplemented if other is None else other._combine(self, lambda a, b: a + b)

    def __sub__(self, other):
        other = _coerce(other)
        return NotImplemented if other is None else self._combine(other, lambda a, b: a - b)

    def __rsub__(self, other):
        other = _coerce(other)
        return NotImplemented if other is None else other._combine(self, lambda a, b: a - b)

    def __mul__(self, other):
        other = _coerce(other)
        return NotImplemented if other is None else self._combine(other, lambda a, b: a * b)

    def __rmul__(self, other):
        other = _coerce(other)
        return NotImplemented if other is None else other._combine(self, lambda a, b: a * b)

    def __truediv__(self, other):
        other = _coerce(other)
        if other is None:
            return NotImplemented
        if other._value is not None and other._value == 0:
            raise ZeroDivisionError("division by exact zero")
        return self._combine(other, lambda a, b: a / b, rationalize=True)

    def __rtruediv__(self, other):
        other = _coerce(other)
        return NotImplemented if other is None else other.__truediv__(self)

    def __neg__(self):
        if self._value is not None:
            return ExactScalar(-self._value)
        return ExactScalar._constructed(-self._expr)

    def __pos__(self):
        return self

    def __abs__(self):
        return -self if self.sign() < 0 else self

    def __pow__(self, exponent: int):
        if not isinstance(exponent, int):
            return NotImplemented
        if exponent < 0:
            return ExactScalar(1) / (self ** -exponent)
        if self._value is not None:
            return ExactScalar(self._value ** exponent)
        return ExactScalar.from_sympy(sympy.expand(self._expr ** exponent))

    def __floor__(self) -> int:
        return floor_exact(self)

    def __bool__(self) -> bool:
        if self._value is not None:
            return self._value != 0
        return compare(self, 0) is not Ordering.EQ

    # -- comparison ---------------------------------------------------------

    def __eq__(self, other) -> bool:
        other = _coerce(other)
        if other is None:
            return NotImplemented
        if self._value is not None and other._value is not None:
            return self._value == other._value
        return _canonical(self.to_sympy() - other.to_sympy()) == 0

    def __hash__(self) -> int:
        if self._value is not None:
            return hash(self._value)
        return hash(_canonical(self._expr))

    def __lt__(self, other):
        return compare(self, other) is Ordering.LT

    def __le__(self, other):
        return compare(self, other) is not Ordering.GT

    def __gt__(self, other):
        return compare(self, other) is Ordering.GT

    def __ge__(self, other):
        return compare(self, other) is not Ordering.LT

    # -- text ---------------------------------------------------------------

    def __str__(self) -> str:
        if self._value is not None:
            return _format_fraction(self._value)
        return _format_expr(self._expr)

    def __repr__(self) -> str:
        return f"ExactScalar({self})"


def _coerce(value) -> Optional[ExactScalar]:
    if isinstance(value, ExactScalar):
        return value
    if isinstance(value, (int, Fraction)):
        return ExactScalar(value)
    return None


def as_scalar(value) -> ExactScalar:
    if isinstance(value, ExactScalar):
        return value
    if isinstance(value, (int, Fraction, Decimal)):
        return ExactScalar(value)
    if isinstance(value, str):
        return parse_scalar(value)
    if isinstance(value, sympy.Basic):
        return ExactScalar.from_sympy(value)
    raise TypeError(f"cannot make an exact scalar from {type(value).__name__}")


# ---------------------------------------------------------------------------
# decisions

def _refine_until(scalar: ExactScalar, decide: Callable[[Enclosure], Optional[object]], max_bits: int):
    current, bits = scalar, scalar.bits
    while True:
        try:
            verdict = decide(current.enclosure)
        except _Unresolved:
            verdict = None
        if verdict is not None:
            return verdict, bits
        if bits >= max_bits:
            return None, bits
        bits = min(bits * 2, max_bits)
        current = current.refine(bits)


def _resolve_max_bits(max_bits: Optional[int]) -> int:
    max_bits = config.max_bits if max_bits is None else max_bits
    if max_bits < 64:
        raise ValueError(f"max_bits must be at least 64, got {max_bits}")
    return max_bits


def floor_exact(s: ScalarLike, max_bits: Optional[int] = None) -> int:
    s = as_scalar(s)
    if s.is_rational:
        return math.floor(s.fraction)
    max_bits = _resolve_max_bits(max_bits)

    def decide(enclosure: Enclosure) -> Optional[int]:
        low, high = math.floor(enclosure.lower), math.floor(enclosure.upper)
        return low if low == high else None

    verdict, bits = _refine_until(s, decide, max_bits)
    if verdict is not None:
        if bits > s.bits:
            logger.debug(f"floor of {s} decided at {bits} bits")
        return verdict

    exact = s.simplified()
    if exact.is_rational:
        return math.floor(exact.fraction)
    raise IndeterminateFloor(f"enclosure of {s} still straddles an integer at {max_bits} bits",
                             bits=max_bits, value=str(s))


def frac_exact(s: ScalarLike, max_bits: Optional[int] = None) -> ExactScalar:
    s = as_scalar(s)
    return s - floor_exact(s, max_bits)


def compare(a: ScalarLike, b: ScalarLike, max_bits: Optional[int] = None) -> Ordering:
    a, b = as_scalar(a), as_scalar(b)
    difference = a - b
    if difference.is_rational:
        value = difference.fraction
        return Ordering.LT if value < 0 else Ordering.GT if value > 0 else Ordering.EQ
    if _canonical(difference.to_sympy()) == 0:
        return Ordering.EQ
    max_bits = _resolve_max_bits(max_bits)

    def decide(enclosure: Enclosure) -> Optional[Ordering]:
        if enclosure.lower > 0:
            return Ordering.GT
        if enclosure.upper < 0:
            return Ordering.LT
        return None

    verdict, _ = _refine_until(difference, decide, max_bits)
    if verdict is None:
        raise IndeterminateComparison(f"cannot separate {a} from {b} at {max_bits} bits", bits=max_bits)
    return verdict


# ---------------------------------------------------------------------------
# literal grammar: integers, decimals, p/q, sqrt(...), root(..., n), ^int, parentheses

_TOKEN = re.compile(r'\s*(?:(?P<number>\d+(?:\.\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*/^(),]))')


def _tokenize(text: str):
    tokens = []
    position = 0
    while position < len(text):
        if text[position:].strip() == '':
            break
        match = _TOKEN.match(text, position)
        if not match:
            offset = position + len(text[position:]) - len(text[position:].lstrip())
            raise ScalarSyntaxError(f"unexpected character {text[offset]!r}", offset)
        kind = match.lastgroup
        tokens.append((kind, match.group(kind), match.start(kind)))
        position = match.end()
    tokens.append(('end', '', len(text)))
    return tokens


class _ScalarParser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.index = 0

    def peek(self):
        return self.tokens[self.index]

    def take(self, value: Optional[str] = None):
        token = self.tokens[self.index]
        if value is not None and token[1] != value:
            found = token[1] or 'end of input'
            raise ScalarSyntaxError(f"expected {value!r}, found {found!r}", token[2])
        self.index += 1
        return token

    def parse(self) -> ExactScalar:
        value = self.expr()
        token = self.peek()
        if token[0] != 'end':
            raise ScalarSyntaxError(f"unexpected {token[1]!r}", token[2])
        return value

    def expr(self) -> ExactScalar:
        value = self.term()
        while self.peek()[1] in ('+', '-'):
            op = self.take()[1]
            right = self.term()
            value = value + right if op == '+' else value - right
        return value

    def term(self) -> ExactScalar:
        value = self.unary()
        while self.peek()[1] in ('*', '/'):
            _, op, offset = self.take()
            right = self.unary()
            if op == '/' and not right:
                raise ScalarSyntaxError("division by zero", offset)
            value = value * right if op == '*' else value / right
        return value

    def unary(self) -> ExactScalar:
        if self.peek()[1] == '-':
            self.take()
            return -self.unary()
        return self.power()

    def power(self) -> ExactScalar:
        value = self.atom()
        if self.peek()[1] == '^':
            self.take()
            kind, text, offset = self.take()
            if kind != 'number' or '.' in text:
                raise ScalarSyntaxError("exponent must be an integer", offset)
            value = value ** int(text)
        return value

    def atom(self) -> ExactScalar:
        kind, text, offset = self.take()
        if kind == 'number':
            return ExactScalar(Fraction(text))
        if text == '(':
            value = self.expr()
            self.take(')')
            return value
        if kind == 'name' and text == 'sqrt':
            self.take('(')
            value = self.expr()
            self.take(')')
            return ExactScalar.sqrt(value)
        if kind == 'name' and text == 'root':
            self.take('(')
            value = self.expr()
            self.take(',')
            degree_kind, degree_text, degree_offset = self.take()
            if degree_kind != 'number' or '.' in degree_text:
                raise ScalarSyntaxError("root degree must be an integer", degree_offset)
            self.take(')')
            return ExactScalar.root(value, int(degree_text))
        if kind == 'end':
            raise ScalarSyntaxError("unexpected end of input", offset)
        raise ScalarSyntaxError(f"unexpected {text!r}", offset)


def parse_scalar(text: str) -> ExactScalar:
    return _ScalarParser(text).parse()


def _format_fraction(value: Fraction) -> str:
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def _wrap(expr: sympy.Expr) -> str:
    text = _format_expr(expr)
    if expr.is_Add or (expr.is_Rational and (expr.q != 1 or expr < 0)) or text.startswith('-'):
        return f"({text})"
    return text


def _format_expr(expr: sympy.Expr) -> str:
    if expr.is_Rational:
        return _format_fraction(Fraction(int(expr.p), int(expr.q)))

    if expr.is_Add:
        terms = [_format_expr(term) for term in expr.as_ordered_terms()]
        text = terms[0]
        for term in terms[1:]:
            text += f" - {term[1:]}" if term.startswith('-') else f" + {term}"
        return text

    if expr.is_Mul:
        coefficient, rest = expr.as_coeff_Mul()
        factors = '*'.join(_wrap(factor) for factor in sympy.Mul.make_args(rest))
        if coefficient == 1:
            return factors
        if coefficient == -1:
            return f"-{factors}"
        return f"{_format_expr(coefficient)}*{factors}"

    if expr.is_Pow:
        base, exponent = expr.args
        numerator, denominator = int(exponent.p), int(exponent.q)
        if numerator < 0:
            return f"1/({_format_expr(base ** -exponent)})"
        if denominator == 1:
            return f"{_wrap(base)}^{numerator}"
        radical = f"sqrt({_format_expr(base)})" if denominator == 2 else f"root({_format_expr(base)}, {denominator})"
        return radical if numerator == 1 else f"{radical}^{numerator}"

    raise NotConstructible(f"{expr} is outside the constructible scalar tower")
