"""
Generalised multiplication-by-k on coordinates indexed by a downward-closed
index set: the integer matrices A_k(x), the lifts S_k, the torus maps T_k
and their augmented affine form.
"""

import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import sympy

from algebra.brackets import BracketIndex, IndexSet, NotDownwardClosed, derivable
from algebra.genpoly import ZERO, Floor, Frac, GenPoly, Var, add, mul, negate, power
from algebra.numbers import ExactScalar, Ordering, ScalarLike, as_scalar, compare, floor_exact, frac_exact
from utils.errors import GenLabError, IndeterminateFloor

logger = logging.getLogger(__name__)


class OutsideUnitCube(GenLabError, ValueError):
    pass


class InconsistentPair(GenLabError, ValueError):
    pass


Point = Tuple[ExactScalar, ...]


def _point(x: Sequence[ScalarLike], index_set: IndexSet) -> Point:
    x = tuple(as_scalar(v) for v in x)
    if len(x) != len(index_set):
        raise ValueError(f"point has {len(x)} coordinates but the index set has {len(index_set)} members")
    return x


@dataclass(frozen=True)
class TimesKMatrix:
    index_set: IndexSet
    k: int
    entries: Tuple[Tuple[int, ...], ...]
    x: Point
    corrections: Tuple[int, ...]

    def entry(self, mu, nu) -> int:
        return self.entries[self.index_set.position(mu)][self.index_set.position(nu)]

    def correction(self, lam) -> int:
        return self.corrections[self.index_set.position(lam)]

    def apply(self, vector: Sequence[ScalarLike]) -> Point:
        vector = tuple(as_scalar(v) for v in vector)
        result = []
        for row in self.entries:
            total = ExactScalar(0)
            for a, v in zip(row, vector):
                if a:
                    total = total + v * a
            result.append(total)
        return tuple(result)

    def as_matrix(self) -> sympy.ImmutableMatrix:
        return sympy.ImmutableMatrix(self.entries)

    def structure_violations(self) -> List[str]:
        """Triangularity, diagonal k^d and column divisibility k^(d_nu)."""
        problems = []
        members = self.index_set.order
        degrees = self.index_set.degrees
        for i, mu in enumerate(members):
            for j, nu in enumerate(members):
                value = self.entries[i][j]
                if i == j:
                    if value != self.k ** degrees[i]:
                        problems.append(f"diagonal at {mu} is {value}, expected {self.k ** degrees[i]}")
                    continue
                if value and not derivable(nu, mu):
                    problems.append(f"entry ({mu}, {nu}) = {value} but {nu} is not derivable from {mu}")
                if value % (self.k ** degrees[j]):
                    problems.append(f"entry ({mu}, {nu}) = {value} is not divisible by k^{degrees[j]}")
        return problems

    def to_json(self) -> Dict[str, Any]:
        return {
            'D': self.index_set.labels(),
            'k': self.k,
            'entries': [[str(a) for a in row] for row in self.entries],
            'x': [str(v) for v in self.x],
        }


@dataclass(frozen=True)
class AffineMap:
    """x -> A x - b on the unit cube, with b the integer part of A x."""

    linear: TimesKMatrix
    translation: Tuple[int, ...]
    image: Point

    @property
    def k(self) -> int:
        return self.linear.k

    def augmented(self) -> sympy.ImmutableMatrix:
        size = len(self.translation) + 1
        rows = [[1] + [0] * (size - 1)]
        for b, row in zip(self.translation, self.linear.entries):
            rows.append([-b] + list(row))
        return sympy.ImmutableMatrix(rows)

    def unipotent_part(self) -> sympy.ImmutableMatrix:
        scale = [1] + [self.k ** d for d in self.linear.index_set.degrees]
        augmented = self.augmented()
        return sympy.ImmutableMatrix(len(scale), len(scale),
                                     lambda i, j: sympy.Rational(augmented[i, j], scale[j]))

    def unipotent_violations(self) -> List[str]:
        problems = []
        part = self.unipotent_part()
        for i in range(part.rows):
            if part[i, i] != 1:
                problems.append(f"diagonal entry {i} of the unipotent part is {part[i, i]}")
            for j in range(part.cols):
                if not part[i, j].is_integer:
                    problems.append(f"entry ({i}, {j}) of the unipotent part is {part[i, j]}")
        return problems

    def to_json(self) -> Dict[str, Any]:
        data = self.linear.to_json()
        data['b'] = [str(b) for b in self.translation]
        data['image'] = [str(v) for v in self.image]
        return data


def correction_term(k: int, lam: BracketIndex, x: Sequence[ScalarLike], index_set: IndexSet,
                    partial_rows: Dict[BracketIndex, Sequence[int]],
                    max_bits: Optional[int] = None) -> int:
    """The integer c with frac(S_k(x)_lam) = sum_tau A_(lam,tau) frac(x_tau) + c."""
    x = _point(x, index_set)
    row = partial_rows[lam]
    total = ExactScalar(0)
    for a, v in zip(row, x):
        if a:
            total = total + frac_exact(v, max_bits) * a
    try:
        return -floor_exact(total, max_bits)
    except IndeterminateFloor as e:
        raise e.with_context(subexpression=f"correction term for {lam}")


def _compound_row(mu: BracketIndex, rows: Dict[BracketIndex, List[int]], corrections: Dict[BracketIndex, int],
                  index_set: IndexSet) -> List[int]:
    kappa, lam = mu.split()
    members = index_set.order
    row = [0] * len(members)
    for s, a in enumerate(rows[kappa]):
        if not a:
            continue
        sigma = members[s]
        for t, b in enumerate(rows[lam]):
            if b:
                row[index_set.position(sigma.attach(members[t]))] += a * b
        row[s] += a * corrections[lam]
    return row


def _leaf_row(mu: BracketIndex, k: int, index_set: IndexSet) -> List[int]:
    row = [0] * len(index_set)
    row[index_set.position(mu)] = k ** index_set.degree(mu)
    return row


def _build_sequence(index_set: IndexSet) -> List[BracketIndex]:
    """Members ordered so that kappa and lam are built before kappa[lam]."""
    for mu in index_set.order:
        if not mu.is_leaf:
            _, lam = mu.split()
            if lam not in index_set:
                raise NotDownwardClosed(lam, mu)
    return sorted(index_set.order, key=lambda mu: mu.height)


def build_a(k: int, x: Sequence[ScalarLike], index_set: IndexSet, max_bits: Optional[int] = None) -> TimesKMatrix:
    if k < 1:
        raise ValueError(f"k must be a positive integer, got {k}")
    x = _point(x, index_set)
    rows: Dict[BracketIndex, List[int]] = {}
    corrections: Dict[BracketIndex, int] = {}
    for mu in _build_sequence(index_set):
        rows[mu] = _leaf_row(mu, k, index_set) if mu.is_leaf else _compound_row(mu, rows, corrections, index_set)
        corrections[mu] = correction_term(k, mu, x, index_set, rows, max_bits)
    return TimesKMatrix(
        index_set=index_set,
        k=k,
        entries=tuple(tuple(rows[mu]) for mu in index_set.order),
        x=x,
        corrections=tuple(corrections[mu] for mu in index_set.order),
    )


def s_map(k: int, x: Sequence[ScalarLike], index_set: IndexSet, max_bits: Optional[int] = None) -> Point:
    x = _point(x, index_set)
    return build_a(k, x, index_set, max_bits).apply(x)


def _check_unit_cube(x: Point, what: str = 'point') -> None:
    for i, v in enumerate(x):
        if compare(v, 0) is Ordering.LT or compare(v, 1) is not Ordering.LT:
            raise OutsideUnitCube(f"{what} coordinate {i} = {v} is outside [0, 1)")


def t_map(k: int, x: Sequence[ScalarLike], index_set: IndexSet, max_bits: Optional[int] = None) -> AffineMap:
    x = _point(x, index_set)
    _check_unit_cube(x)
    matrix = build_a(k, x, index_set, max_bits)
    lifted = matrix.apply(x)
    # on the unit cube frac(x) = x, so the corrections are exactly -floor(S_k(x))
    image = tuple(s + c for s, c in zip(lifted, matrix.corrections))
    translation = tuple(-c for c in matrix.corrections)
    return AffineMap(matrix, translation, image)


def a_from_pair(k: int, x: Sequence[ScalarLike], y: Sequence[ScalarLike], index_set: IndexSet) -> AffineMap:
    """Rebuild the affine data of T_k at x from x and y = T_k(x) by polynomial formulas only."""
    x = _point(x, index_set)
    y = _point(y, index_set)
    _check_unit_cube(x)
    _check_unit_cube(y, 'image')
    rows: Dict[BracketIndex, List[int]] = {}
    corrections: Dict[BracketIndex, int] = {}
    for mu in _build_sequence(index_set):
        rows[mu] = _leaf_row(mu, k, index_set) if mu.is_leaf else _compound_row(mu, rows, corrections, index_set)
        total = ExactScalar(0)
        for a, v in zip(rows[mu], x):
            if a:
                total = total + v * a
        c = y[index_set.position(mu)] - total
        if not (c.is_rational and c.fraction.denominator == 1):
            raise InconsistentPair(f"correction for {mu} is {c}, which is not an integer")
        corrections[mu] = int(c.fraction)
    matrix = TimesKMatrix(
        index_set=index_set,
        k=k,
        entries=tuple(tuple(rows[mu]) for mu in index_set.order),
        x=x,
        corrections=tuple(corrections[mu] for mu in index_set.order),
    )
    return AffineMap(matrix, tuple(-c for c in matrix.corrections), y)


def iterate_t(x0: Sequence[ScalarLike], k: int, steps: int, index_set: IndexSet,
              max_bits: Optional[int] = None) -> List[Point]:
    orbit = [_point(x0, index_set)]
    for step in range(steps):
        try:
            orbit.append(t_map(k, orbit[-1], index_set, max_bits).image)
        except IndeterminateFloor as e:
            raise e.with_context(step=step + 1)
    logger.debug(f"iterated T_{k} for {steps} steps on {len(index_set)} coordinates")
    return orbit


def delta(k: int, index_set: IndexSet) -> sympy.ImmutableMatrix:
    return sympy.ImmutableMatrix(sympy.diag(*[k ** d for d in index_set.degrees]))


def entry_genpoly(index_set: IndexSet, mu, nu) -> GenPoly:
    """
    The entry A_k(x)_(mu, nu) as a generalised polynomial in the coordinates x
    (variable i is coordinate i of the index order) and k (the last variable).
    """
    _build_sequence(index_set)
    k_var = Var(len(index_set), 'k')
    coords = [Var(i) for i in range(len(index_set))]
    memo: Dict[Tuple[BracketIndex, BracketIndex], GenPoly] = {}
    corrections: Dict[BracketIndex, GenPoly] = {}

    def correction(lam: BracketIndex) -> GenPoly:
        if lam not in corrections:
            terms = [mul(entry(lam, tau), Frac(coords[index_set.position(tau)]))
                     for tau in index_set.order if derivable(tau, lam)]
            corrections[lam] = negate(Floor(add(*terms)))
        return corrections[lam]

    def entry(m: BracketIndex, n: BracketIndex) -> GenPoly:
        if (m, n) in memo:
            return memo[(m, n)]
        if not derivable(n, m):
            value = ZERO
        elif m.is_leaf:
            value = power(k_var, index_set.degree(m))
        else:
            kappa, lam = m.split()
            terms = []
            for sigma in index_set.order:
                if not derivable(sigma, kappa):
                    continue
                for tau in index_set.order:
                    if derivable(tau, lam) and sigma.attach(tau) == n:
                        terms.append(mul(entry(kappa, sigma), entry(lam, tau)))
            terms.append(mul(entry(kappa, n), correction(lam)))
            value = add(*terms)
        memo[(m, n)] = value
        return value

    return entry(index_set.order[index_set.position(mu)], index_set.order[index_set.position(nu)])
