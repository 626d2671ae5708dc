#!/usr/bin/env python3
"""
Tests for the generalised x k maps: A_k(x), S_k, T_k, the augmented affine
form and the symbolic entries.
"""

import sys
import os
sys.path.insert(0, os.path.join(os.path.dirname(__file__), 'src'))

from fractions import Fraction

import pytest
import sympy
from hypothesis import given, settings, strategies as st

from algebra.brackets import IndexSet, NotDownwardClosed
from algebra.genpoly import evaluate
from algebra.numbers import ExactScalar, floor_exact, frac_exact
from algebra.timesk import (InconsistentPair, OutsideUnitCube, a_from_pair, build_a, delta, entry_genpoly,
                            iterate_t, s_map, t_map)

RUNNING = IndexSet.preset('running')
ALPHA = (Fraction(1, 3), Fraction(1, 5), Fraction(1, 7))

unit = st.fractions(min_value=0, max_value=1, max_denominator=40).filter(lambda v: v < 1)
points = st.tuples(*[unit] * len(RUNNING))


def test_running_example_rows():
    x = RUNNING.v_vector(ALPHA, 1)
    a = build_a(2, x, RUNNING)
    assert a.entries[RUNNING.position("1[2]")] == (0, 0, 4, 0, 0)
    assert a.entry("1", "1") == 2
    assert a.entry("3", "3") == 4
    assert s_map(2, x, RUNNING) == RUNNING.v_vector(ALPHA, 2)


@pytest.mark.parametrize("k", [2, 3, 5])
@pytest.mark.parametrize("x2", [Fraction(3, 5), Fraction(1, 7), Fraction(0), Fraction(9, 10)])
def test_toy_entry(k, x2):
    x = (Fraction(1, 4), x2, Fraction(0), Fraction(0), Fraction(0))
    a = build_a(k, x, RUNNING)
    assert a.entry("1[2]", "1") == -k * floor_exact(k * x2)
    assert a.entry("1[2]", "1[2]") == k * k
    assert a.correction("2") == -floor_exact(k * x2)


def test_correction_example():
    x = (Fraction(0), Fraction(3, 5), Fraction(0), Fraction(0), Fraction(0))
    assert build_a(2, x, RUNNING).correction("2") == -1
    assert build_a(2, (0,) * 5, RUNNING).corrections == (0,) * 5


def test_identity_for_k_one():
    x = (Fraction(2, 3), Fraction(4, 5), Fraction(1, 9), Fraction(5, 6), Fraction(3, 7))
    assert build_a(1, x, RUNNING).as_matrix() == sympy.eye(len(RUNNING))
    assert t_map(1, x, RUNNING).image == x


def test_k_must_be_positive():
    with pytest.raises(ValueError):
        build_a(0, (0,) * 5, RUNNING)


def test_delta():
    assert delta(3, RUNNING) == sympy.diag(3, 3, 9, 9, 9)


@settings(max_examples=30, deadline=None)
@given(points, st.integers(min_value=1, max_value=6))
def test_structure(x, k):
    affine = t_map(k, x, RUNNING)
    assert affine.linear.structure_violations() == []
    assert affine.unipotent_violations() == []
    for v in affine.image:
        assert 0 <= v < 1


@settings(max_examples=30, deadline=None)
@given(points, st.integers(min_value=1, max_value=6))
def test_augmented_form_reproduces_t(x, k):
    affine = t_map(k, x, RUNNING)
    image = affine.augmented() * sympy.Matrix([1] + list(x))
    assert image[0] == 1
    assert [ExactScalar.from_sympy(v) for v in image[1:]] == list(affine.image)


@settings(max_examples=30, deadline=None)
@given(points, st.integers(min_value=1, max_value=5))
def test_rebuild_from_pair(x, k):
    affine = t_map(k, x, RUNNING)
    rebuilt = a_from_pair(k, x, affine.image, RUNNING)
    assert rebuilt.linear.entries == affine.linear.entries
    assert rebuilt.translation == affine.translation


@settings(max_examples=20, deadline=None)
@given(points, st.integers(min_value=1, max_value=4), st.integers(min_value=1, max_value=4))
def test_commutation_and_cocycle(x, k, l):
    assert t_map(k, t_map(l, x, RUNNING).image, RUNNING).image == t_map(k * l, x, RUNNING).image
    assert s_map(k, s_map(l, x, RUNNING), RUNNING) == s_map(k * l, x, RUNNING)
    a_l = build_a(l, x, RUNNING)
    a_k = build_a(k, a_l.apply(x), RUNNING)
    assert a_k.as_matrix() * a_l.as_matrix() == build_a(k * l, x, RUNNING).as_matrix()


@pytest.mark.parametrize("m", [1, 2, 3, 7])
@pytest.mark.parametrize("k", [2, 3, 4])
def test_intertwining(m, k):
    assert s_map(k, RUNNING.v_vector(ALPHA, m), RUNNING) == RUNNING.v_vector(ALPHA, k * m)


def test_entry_against_lifted_image():
    # A_(1[2],1) = k*T_k(x)_2 - k^2*x_2 on the unit cube
    x = (Fraction(1, 3), Fraction(5, 7), Fraction(1, 2), Fraction(0), Fraction(1, 8))
    for k in range(1, 7):
        image = t_map(k, x, RUNNING).image
        assert build_a(k, x, RUNNING).entry("1[2]", "1") == k * image[1] - k * k * x[1]


def test_outside_unit_cube():
    with pytest.raises(OutsideUnitCube):
        t_map(2, (1, 0, 0, 0, 0), RUNNING)
    with pytest.raises(OutsideUnitCube):
        t_map(2, (Fraction(-1, 2), 0, 0, 0, 0), RUNNING)


def test_inconsistent_pair():
    x = RUNNING.v_vector(ALPHA, 1)
    with pytest.raises(InconsistentPair):
        a_from_pair(2, x, (Fraction(1, 2),) * 5, RUNNING)


def test_iterate_irrational_orbit():
    single = IndexSet.preset('single')
    root = ExactScalar.sqrt(2)
    orbit = iterate_t((root - 1,), 2, 6, single)
    assert len(orbit) == 7
    for n, point in enumerate(orbit):
        assert point[0] == frac_exact(root * 2 ** n)


def test_iterate_periodic_orbit():
    single = IndexSet.preset('single')
    orbit = iterate_t((Fraction(1, 7),), 2, 3, single)
    assert [p[0] for p in orbit] == [Fraction(1, 7), Fraction(2, 7), Fraction(4, 7), Fraction(1, 7)]
    assert iterate_t((0,), 3, 4, single) == [(0,)] * 5


def test_nested_index_set():
    nested = IndexSet.preset('nested')
    x = nested.v_vector([Fraction(2, 7), Fraction(3, 11)], 1)
    for k in (2, 3):
        affine = t_map(k, x, nested)
        assert affine.linear.structure_violations() == []
        assert s_map(k, x, nested) == nested.v_vector([Fraction(2, 7), Fraction(3, 11)], k)


def test_missing_factor_row():
    partial = IndexSet.build(["1", "1[2]"], {1: 1, 2: 1})
    with pytest.raises(NotDownwardClosed):
        build_a(2, (0, 0), partial)


@pytest.mark.parametrize("mu, nu", [("1[2]", "1"), ("2[1]", "2"), ("1[2]", "1[2]"), ("3", "3"), ("1[2]", "2")])
def test_entry_genpoly_matches(mu, nu):
    g = entry_genpoly(RUNNING, mu, nu)
    for x in [(Fraction(1, 3), Fraction(3, 5), Fraction(1, 2), Fraction(1, 4), Fraction(2, 9)),
              (Fraction(5, 6), Fraction(1, 8), Fraction(0), Fraction(7, 9), Fraction(1, 3))]:
        for k in (1, 2, 3, 5):
            assert evaluate(g, list(x) + [k]) == build_a(k, x, RUNNING).entry(mu, nu)


def test_json_export():
    affine = t_map(2, RUNNING.v_vector(ALPHA, 1), RUNNING)
    data = affine.to_json()
    assert data['D'] == RUNNING.labels()
    assert data['k'] == 2
    assert data['image'] == ["2/3", "2/5", "4/15", "4/15", "4/7"]
    assert data['b'] == ["0"] * 5
