#!/usr/bin/env python3
"""
Tests for vanishing ideals, stabiliser checks, semialgebraic sets and the
limit sandwich.
"""

import sys
import os
sys.path.insert(0, os.path.join(os.path.dirname(__file__), 'src'))

from fractions import Fraction

import pytest
import sympy

from algebra.algsem import (DegreeOverflow, EmptyTail, NotUnimodular, PolynomialMap, SemialgebraicFamily,
                            SemialgebraicSet, SetSyntaxError, affine_image_check, change_basis_membership,
                            complexity, coordinates, limit_sandwich, membership, monomials, sandwich_member,
                            tail_closure, translation_check, vanishing_ideal, verify_sandwich)
from algebra.numbers import ExactScalar, frac_exact

x1, x2 = coordinates(2)
LINE = [(t, t) for t in range(4)]
PARABOLA = [(Fraction(t, 2), Fraction(t * t, 4)) for t in range(-3, 4)]


def test_monomials_are_graded_descending():
    assert monomials(2, 1) == ((1, 0), (0, 1), (0, 0))
    assert len(monomials(2, 2)) == 6


def test_collinear_points():
    basis = vanishing_ideal(LINE, 1)
    assert basis.size == 1
    assert basis.contains(x1 - x2)
    assert basis.to_json()['basis'] == [{'1,0': '1', '0,1': '-1'}]


def test_parabola():
    basis = vanishing_ideal(PARABOLA, 2)
    assert basis.size == 1
    assert basis.contains(x2 - x1 ** 2)
    assert not basis.contains(x2 - x1)


def test_generic_points_have_no_linear_relation():
    basis = vanishing_ideal([(0, 0), (1, 0), (0, 1), (3, 7)], 1)
    assert basis.size == 0


def test_dimension_matches_rank():
    points = [(Fraction(t, 3), Fraction(t * t, 9) + 1) for t in range(-2, 3)]
    basis = vanishing_ideal(points, 2)
    evaluation = sympy.Matrix([[sympy.Rational(p[0]) ** e[0] * sympy.Rational(p[1]) ** e[1] for e in basis.exponents]
                               for p in points])
    assert basis.size == len(basis.exponents) - evaluation.rank()


def test_planted_conic_recovered():
    planted = x2 - x1 * x2 - x1 ** 2
    points = []
    for k in range(-9, 10):
        if k == 3:
            continue
        t = Fraction(k, 3)
        points.append((t, t * t / (1 - t)))
    basis = vanishing_ideal(points, 2)
    assert basis.size == 1
    assert basis.contains(planted)
    for poly in basis.polynomials():
        assert sympy.simplify(poly / planted).is_rational


def test_irrational_points():
    root = ExactScalar.sqrt(2)
    sequence = []
    for n in range(1, 11):
        u = frac_exact(root * n)
        sequence.append((u, u * u))
    report = tail_closure(sequence, [1, 3, 5], 2)
    assert report.stabilized
    assert report.stable_from == 1
    assert report.increasing
    assert report.bases[0].size == 1
    assert report.bases[0].contains(x2 - x1 ** 2)


def test_periodic_orbits():
    doubling = [(frac_exact(Fraction(2 ** n, 7)),) for n in range(1, 13)]
    report = tail_closure(doubling, [1, 4, 7], 3)
    assert report.stabilized
    assert report.bases[0].size == 1
    x = coordinates(1)[0]
    assert report.bases[0].contains((x - Fraction(1, 7)) * (x - Fraction(2, 7)) * (x - Fraction(4, 7)))

    tripling = [(frac_exact(Fraction(3 ** n, 7)),) for n in range(1, 19)]
    assert vanishing_ideal(tripling, 5).size == 0
    report = tail_closure(tripling, [1, 7], 6)
    assert report.stabilized
    assert report.bases[-1].size == 1


def test_constant_sequence():
    report = tail_closure([(Fraction(1, 2), Fraction(1, 3))] * 5, [1, 2], 1)
    assert report.bases[0].size == 2
    assert report.bases[0].contains(x1 - Fraction(1, 2))
    assert report.bases[0].contains(x2 - Fraction(1, 3))


def test_tail_errors():
    with pytest.raises(EmptyTail):
        tail_closure(LINE, [1, 9], 1)
    with pytest.raises(ValueError):
        tail_closure(LINE, [3, 1], 1)


def test_translations():
    line = vanishing_ideal(LINE, 1)
    assert translation_check(line, (1, 1))
    assert not translation_check(line, (1, 0))
    assert not translation_check(vanishing_ideal(PARABOLA, 2), (0, 3))


def test_affine_images():
    line = vanishing_ideal(LINE, 1)
    assert affine_image_check(line, line, PolynomialMap.affine([[3, 0], [0, 3]]), sample_count=2)

    parabola = vanishing_ideal(PARABOLA, 2)
    assert affine_image_check(parabola, parabola, PolynomialMap.affine([[2, 0], [0, 4]]))
    assert affine_image_check(parabola, parabola, PolynomialMap.affine([[1, 0], [2, 1]], [1, 1]), sample_count=3)
    assert not affine_image_check(parabola, parabola, PolynomialMap.affine([[1, 0], [0, 1]], [1, 0]))

    with pytest.raises(DegreeOverflow):
        affine_image_check(parabola, parabola, PolynomialMap((x1 ** 3, x2)), degree_cap=3)


def test_polynomial_map_powers():
    shift = PolynomialMap.affine([[1, 0], [0, 1]], [1, 2])
    assert shift.power(3).components == (x1 + 3, x2 + 6)
    assert shift.degree == 1


def test_membership():
    assert membership(SemialgebraicSet.parse("x_1 > 0", 1), [Fraction(1, 2)])
    assert not membership(SemialgebraicSet.parse("x_1^2 < 1", 1), [1])
    piece = SemialgebraicSet.parse("x_2 = x_1^2 & 0 < x_1 < 1", 2)
    assert membership(piece, [Fraction(1, 2), Fraction(1, 4)])
    assert not membership(piece, [Fraction(1, 2), Fraction(1, 3)])
    assert membership(SemialgebraicSet.parse("x_1^2 < 2", 1), [ExactScalar.sqrt(2) - Fraction(1, 100)])
    assert membership(SemialgebraicSet.parse("true", 2), [5, 5])
    assert not membership(SemialgebraicSet.parse("false", 2), [0, 0])
    with pytest.raises(ValueError):
        membership(piece, [1])


def test_parse_errors():
    for text in ["x_1 >= 0", "x_1", "sin(x_1) > 0", "x_1 > 0 &"]:
        with pytest.raises(SetSyntaxError):
            SemialgebraicSet.parse(text, 1)


def test_complexity():
    assert complexity(SemialgebraicSet.parse("x_1 > 0", 1)) == 1
    assert complexity(SemialgebraicSet.parse("x_1^2 < 1 | x_1^2 > 4", 1)) == 4
    union = SemialgebraicSet.parse("x_1 > 0", 1).union(SemialgebraicSet.parse("x_1 < -1", 1))
    assert complexity(union) == 2
    assert membership(union, [-2])


def test_family_bound_is_uniform():
    family = SemialgebraicFamily.parse("x_1 > y_1 & x_1^2 < y_2", 1, ["y_1", "y_2"])
    assert family.complexity_bound() == 3
    for values in [(0, 4), (Fraction(1, 2), 9), (-3, 1)]:
        member = family.instantiate(values)
        assert complexity(member) <= 3
    assert membership(family.instantiate((0, 4)), [1])
    assert not membership(family.instantiate((0, 4)), [3])


def test_change_of_basis():
    target = SemialgebraicSet.parse("x_1 < 1/2", 2)
    shear = [[1, 1], [0, 1]]
    assert not change_basis_membership(target, shear, [Fraction(3, 4), Fraction(3, 4)])
    assert change_basis_membership(target, shear, [Fraction(1, 4), Fraction(1, 8)])
    identity = [[1, 0], [0, 1]]
    assert change_basis_membership(target, identity, [Fraction(1, 4), 0]) == membership(target, [Fraction(1, 4), 0])
    with pytest.raises(NotUnimodular):
        change_basis_membership(target, [[2, 0], [0, 1]], [0, 0])


def test_sandwich_shrinking_parabola():
    result = limit_sandwich(1, ["1/n - x_1^2"])
    x = coordinates(1)[0]
    assert sympy.expand(result.directions[0] + x ** 2) == 0
    assert not membership(result.lower, [0])
    assert membership(result.boundary, [0])
    assert all(sandwich_member(result, n, [0]) for n in (1, 10, 1000))
    assert verify_sandwich(result).holds


def test_sandwich_moving_threshold():
    result = limit_sandwich(1, ["x_1 - 1/n"])
    assert membership(result.lower, [Fraction(1, 5)])
    assert not membership(result.lower, [0])
    report = verify_sandwich(result)
    assert report.checked == 100
    assert report.holds


def test_sandwich_constant_sequence():
    result = limit_sandwich(2, ["1 - x_1^2 - x_2^2"])
    assert membership(result.lower, [Fraction(1, 2), 0])
    assert membership(result.boundary, [1, 0])
    assert verify_sandwich(result, tail_indices=[5, 50]).holds


def test_sandwich_rejects_equalities():
    with pytest.raises(NotImplementedError):
        limit_sandwich(1, ["x_1"], equalities=["x_1 - 1/n"])
