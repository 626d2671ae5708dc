#!/usr/bin/env python3
"""
Tests for generalised polynomials: parsing, exact evaluation, expansion in
powers of n and the indicator constructions on the natural numbers.
"""

import sys
import os
sys.path.insert(0, os.path.join(os.path.dirname(__file__), 'src'))

from fractions import Fraction

import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from algebra.genpoly import (N, Const, Floor, Frac, GenPolySyntaxError, Mul, UnknownVariable, add, const,
                             evaluate, expand_in_var, floor_of, frac_of, from_json, indicator_ge0,
                             indicator_interval, indicator_zero, mul, parse, to_json, unparse)
from algebra.numbers import ExactScalar


def values(g, ns):
    return [evaluate(g, [n]) for n in ns]


def test_parse_structure():
    assert parse("frac(sqrt(2)*n)") == Frac(Mul((Const(ExactScalar.sqrt(2)), N)))
    assert parse("frac(n/3)") == Frac(Mul((N, Const(ExactScalar(Fraction(1, 3))))))
    assert parse("x_2").index == 1


def test_parse_errors():
    with pytest.raises(GenPolySyntaxError) as info:
        parse("frac(")
    assert info.value.offset == 5

    with pytest.raises(UnknownVariable):
        parse("y + 1")
    with pytest.raises(UnknownVariable):
        parse("x_3", declared_arity=2)
    with pytest.raises(GenPolySyntaxError):
        parse("n/n")
    with pytest.raises(GenPolySyntaxError):
        parse("sqrt(n)")


def test_evaluate_examples():
    assert evaluate(parse("frac(n/3)"), [7]) == Fraction(1, 3)
    assert evaluate(parse("1/3*n*frac(1/5*n)"), [1]) == Fraction(1, 15)
    assert evaluate(parse("floor(sqrt(2)*n)"), [10]) == 14
    assert evaluate(parse("n*frac(n/3) - floor(n/2)"), [5]) == Fraction(10, 3) - 2
    assert evaluate(parse("x_1*x_2^2"), [2, 3]) == 18


def test_evaluate_stays_rational():
    result = evaluate(parse("floor(7/3*n)^2 + frac(n/5)"), [4])
    assert result.is_rational
    assert result == 81 + Fraction(4, 5)


def test_evaluate_arity():
    with pytest.raises(ValueError):
        evaluate(parse("x_1 + x_2"), [1])


@pytest.mark.parametrize("text", [
    "n*frac(n/3) - floor(n/2)",
    "frac(sqrt(2)*n) - 1/2",
    "(n + 1)^3 - 2*floor(frac(n/7)*n)",
    "-n*(2/3)*floor(n/2)",
])
def test_unparse_round_trip(text):
    g = parse(text)
    again = parse(unparse(g))
    assert values(again, range(1, 12)) == values(g, range(1, 12))
    assert from_json(to_json(g)) == g


def test_frac_matches_floor_form():
    g = parse("sqrt(2)*n + 1/3")
    frac_form = frac_of(g)
    floor_form = add(g, mul(const(-1), floor_of(g)))
    assert values(frac_form, range(1, 20)) == values(floor_form, range(1, 20))


def test_expand_degree_one():
    expansion = expand_in_var(parse("n*frac(n/3)"))
    assert expansion.degree == 1
    assert expansion.bounds[1] == 1
    assert values(expansion.coefficients[0], range(1, 10)) == [0] * 9


def test_expand_floor():
    expansion = expand_in_var(parse("floor(2*n/3)"))
    assert expansion.degree == 1
    assert expansion.coefficients[1] == Const(ExactScalar(Fraction(2, 3)))
    expected = [-(Fraction(2 * n, 3) - (2 * n) // 3) for n in range(1, 10)]
    assert values(expansion.coefficients[0], range(1, 10)) == expected


def test_expand_reassembles():
    g = parse("n^2*frac(n/2) + 5*n")
    expansion = expand_in_var(g)
    assert expansion.degree == 2
    assert values(expansion.coefficients[1], range(1, 6)) == [5] * 5
    for n in range(1, 21):
        reassembled = evaluate(expansion.reassemble(), [n])
        assert reassembled == evaluate(g, [n])
        for h, bound in zip(expansion.coefficients, expansion.bounds):
            assert abs(evaluate(h, [n]).fraction) <= bound


def test_indicator_linear():
    indicator = indicator_ge0(parse("n - 5"))
    assert values(indicator, range(1, 31)) == [int(n >= 5) for n in range(1, 31)]


def test_indicator_constant():
    assert indicator_ge0(parse("1")) == Const(ExactScalar(1))
    assert indicator_ge0(parse("0 - 1")) == Const(ExactScalar(0))


def test_indicator_quadratic():
    indicator = indicator_ge0(parse("n^2 - 5*n + 5"))
    assert values(indicator, range(1, 26)) == [int(n * n - 5 * n + 5 >= 0) for n in range(1, 26)]


def test_indicator_irrational_coefficient():
    g = parse("frac(n*sqrt(2)) - 1/2")
    indicator = indicator_ge0(g)
    expected = [int(evaluate(g, [n]) >= 0) for n in range(1, 41)]
    assert values(indicator, range(1, 41)) == expected
    assert 0 < sum(expected) < 40


def test_indicator_bracket_leading_term():
    g = parse("n*frac(n/3) - 1")
    indicator = indicator_ge0(g)
    expected = [int(evaluate(g, [n]) >= 0) for n in range(1, 31)]
    assert values(indicator, range(1, 31)) == expected


def test_indicator_interval():
    assert values(indicator_interval(N, 3, 6), range(1, 12)) == [int(3 <= n < 6) for n in range(1, 12)]
    assert values(indicator_interval(parse("frac(n*sqrt(2))"), 0, 1), range(1, 15)) == [1] * 14
    assert values(indicator_interval(N, 0, Fraction(1, 2)), range(1, 10)) == [0] * 9
    with pytest.raises(ValueError):
        indicator_interval(N, 2, 2)


def test_indicator_zero():
    assert values(indicator_zero(parse("frac(n/2)")), range(1, 13)) == [int(n % 2 == 0) for n in range(1, 13)]
    assert values(indicator_zero(parse("0")), range(1, 5)) == [1] * 4
    assert values(indicator_zero(parse("1")), range(1, 5)) == [0] * 4
    assert values(indicator_zero(parse("n - 4")), range(1, 10)) == [int(n == 4) for n in range(1, 10)]


small_fractions = st.fractions(min_value=-3, max_value=3, max_denominator=5)

univariate = st.recursive(
    st.one_of(st.just(N), small_fractions.map(const)),
    lambda children: st.one_of(
        st.tuples(children, children).map(lambda pair: add(*pair)),
        st.tuples(children, children).map(lambda pair: mul(*pair)),
        children.map(frac_of),
        children.map(floor_of),
    ),
    max_leaves=5,
)


@settings(max_examples=500, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(univariate, small_fractions, st.fractions(min_value=Fraction(1, 5), max_value=3, max_denominator=5))
def test_indicators_match_direct_evaluation(g, a, width):
    b = a + width
    ge0 = indicator_ge0(g)
    interval = indicator_interval(g, a, b)
    zero = indicator_zero(g)
    for n in range(1, 201):
        value = evaluate(g, [n])
        assert evaluate(ge0, [n]) == int(value >= 0)
        assert evaluate(interval, [n]) == int(a <= value < b)
        assert evaluate(zero, [n]) == int(value == 0)


def test_parse_products():
    assert evaluate(parse("2*3"), [1]) == 6
    assert evaluate(parse("n*2"), [5]) == 10
    assert evaluate(parse("2*n - n/2"), [4]) == 6
    assert evaluate(parse("6/2*n"), [1]) == 3
    assert parse("2*n") == Mul((Const(ExactScalar(2)), N))


def test_cube_root_constants_round_trip():
    g = parse("frac(root(2, 3)*n)")
    assert g == Frac(Mul((Const(ExactScalar.root(2, 3)), N)))
    again = parse(unparse(g))
    assert values(again, range(1, 12)) == values(g, range(1, 12))
    assert evaluate(parse("root(8, 3)*n"), [2]) == 4
    with pytest.raises(GenPolySyntaxError):
        parse("root(n, 3)")
    with pytest.raises(GenPolySyntaxError):
        parse("root(2, 0)")
