#!/usr/bin/env python3
"""
Tests for exact scalars: floor, fractional part, comparison, enclosure
refinement and the literal grammar.
"""

import sys
import os
sys.path.insert(0, os.path.join(os.path.dirname(__file__), 'src'))

from fractions import Fraction

import pytest
import sympy
from hypothesis import given, strategies as st

from algebra.numbers import (ExactScalar, NotConstructible, Ordering, ScalarSyntaxError, as_scalar, compare,
                             floor_exact, frac_exact, parse_scalar)
from utils.errors import IndeterminateFloor

SQRT2 = ExactScalar.sqrt(2)


@pytest.mark.parametrize("value, expected", [
    (Fraction(7, 3), 2),
    (Fraction(-1, 3), -1),
    (Fraction(6), 6),
])
def test_floor_of_rationals(value, expected):
    assert floor_exact(value) == expected


def test_floor_of_constructed():
    assert floor_exact(SQRT2 * 100) == 141
    assert floor_exact(-SQRT2) == -2
    assert floor_exact(parse_scalar("root(27, 3) + 1/2")) == 3


def test_fractional_parts():
    assert frac_exact(Fraction(7, 3)) == Fraction(1, 3)
    assert frac_exact(Fraction(-1, 3)) == Fraction(2, 3)
    assert frac_exact(Fraction(-1, 3)).is_rational

    part = frac_exact(SQRT2)
    assert not part.is_rational
    assert part == SQRT2 - 1


def test_compare():
    assert compare(Fraction(1, 2), Fraction(1, 3)) is Ordering.GT
    assert compare(SQRT2 * SQRT2, 2) is Ordering.EQ
    assert compare(SQRT2, Fraction(141, 100)) is Ordering.GT
    assert compare(SQRT2, Fraction(142, 100)) is Ordering.LT
    assert SQRT2 < Fraction(3, 2)


def test_max_bits_floor():
    with pytest.raises(ValueError):
        floor_exact(SQRT2, max_bits=32)


def test_floats_are_rejected():
    with pytest.raises(TypeError):
        ExactScalar(0.5)
    with pytest.raises(TypeError):
        as_scalar(0.5)


def test_even_root_of_negative():
    with pytest.raises(NotConstructible):
        ExactScalar.sqrt(-2)


def test_refinement_stays_inside():
    value = SQRT2 + ExactScalar.root(3, 3)
    coarse = value.enclosure
    fine = value.refine(value.bits * 2).enclosure
    assert coarse.lower <= fine.lower <= fine.upper <= coarse.upper
    assert fine.width <= coarse.width / 2


@given(st.fractions())
def test_floor_brackets_every_rational(value):
    n = floor_exact(value)
    assert n <= value < n + 1
    assert frac_exact(value) + n == value
    assert 0 <= frac_exact(value).fraction < 1


@given(st.integers(min_value=2, max_value=50), st.integers(min_value=1, max_value=20))
def test_floor_of_multiples_of_root_two(a, b):
    n = floor_exact(SQRT2 * a / b)
    # n <= a*sqrt(2)/b < n + 1  <=>  (n*b)^2 <= 2a^2 < ((n+1)*b)^2
    assert (n * b) ** 2 <= 2 * a * a < ((n + 1) * b) ** 2


def test_parse_literals():
    assert parse_scalar("3/4") == Fraction(3, 4)
    assert parse_scalar("0.25") == Fraction(1, 4)
    assert parse_scalar("(1 + 2)^2 - 1") == 8
    assert parse_scalar("sqrt(8)") == SQRT2 * 2
    assert str(parse_scalar("-6/4")) == "-3/2"


def test_parse_errors():
    with pytest.raises(ScalarSyntaxError) as info:
        parse_scalar("1/0")
    assert "division by zero" in str(info.value)

    with pytest.raises(ScalarSyntaxError) as info:
        parse_scalar("sqrt(2")
    assert info.value.offset == 6

    with pytest.raises(ScalarSyntaxError):
        parse_scalar("2 $ 3")


def test_indeterminate_floor_context():
    error = IndeterminateFloor("straddles", bits=64, value="x")
    enriched = error.with_context(step=3, subexpression="frac(x)")
    assert enriched.step == 3
    assert enriched.bits == 64
    assert "orbit step 3" in str(enriched)


def test_parse_products():
    assert parse_scalar("2*3") == 6
    assert parse_scalar("3*sqrt(2)") == SQRT2 * 3
    assert parse_scalar("2*3/4") == Fraction(3, 2)
    assert parse_scalar("6/2*3") == 9
    assert parse_scalar("root(2, 3)*root(4, 3)") == 2


def test_zero_constructed_value_is_falsy():
    zero = ExactScalar.from_sympy((1 + sympy.sqrt(2)) ** 2 - 2 * sympy.sqrt(2) - 3)
    assert not zero.is_rational
    assert not zero
    assert SQRT2 - 1
    assert not ExactScalar(0)
