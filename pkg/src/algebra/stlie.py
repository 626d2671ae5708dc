"""
Exact exponential, logarithm, powers and diagonalisation for matrices that are
lower triangular with respect to the derivability order, with diagonal
t^(d_mu) (standard) or all ones (unipotent).

The scale E = e^t is always passed directly so that no transcendental
function is ever evaluated; entries live in Q, Q(sqrt ...) or Q[E].
"""

import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Any, Dict, FrozenSet, List, Optional, Sequence, Tuple, Union

import sympy

from algebra.brackets import IndexSet, derivable
from algebra.numbers import ExactScalar
from utils.errors import GenLabError

logger = logging.getLogger(__name__)

E = sympy.Symbol('E', positive=True)


class NotTriangular(GenLabError, ValueError):
    pass


class NotStrictlyLower(GenLabError, ValueError):
    pass


class NotUnipotent(GenLabError, ValueError):
    pass


class RepeatedDegreeOnChain(GenLabError, ValueError):
    pass


class InconsistentDiagonal(GenLabError, ValueError):
    pass


class ScaleIsOne(GenLabError, ValueError):
    pass


@dataclass(frozen=True)
class GradedFrame:
    """Coordinate labels with degrees and the strict order (row, col) pairs allowed below the diagonal."""

    labels: Tuple[str, ...]
    degrees: Tuple[int, ...]
    below: FrozenSet[Tuple[int, int]]

    @classmethod
    def from_index_set(cls, index_set: IndexSet, augmented: bool = False) -> 'GradedFrame':
        members = index_set.order
        below = {(i, j) for i, mu in enumerate(members) for j, nu in enumerate(members)
                 if i != j and derivable(nu, mu)}
        if not augmented:
            return cls(tuple(index_set.labels()), index_set.degrees, frozenset(below))
        shifted = {(i + 1, j + 1) for i, j in below} | {(i + 1, 0) for i in range(len(members))}
        return cls(('0',) + tuple(index_set.labels()), (0,) + index_set.degrees, frozenset(shifted))

    @property
    def size(self) -> int:
        return len(self.labels)

    def position(self, label: str) -> int:
        return self.labels.index(str(label))

    @cached_property
    def lower_neighbours(self) -> Dict[int, Tuple[int, ...]]:
        found: Dict[int, List[int]] = {i: [] for i in range(self.size)}
        for i, j in sorted(self.below):
            found[i].append(j)
        return {i: tuple(js) for i, js in found.items()}


Entry = Union[int, sympy.Expr, ExactScalar]


def _sympify(value) -> sympy.Expr:
    if isinstance(value, ExactScalar):
        return value.to_sympy()
    return sympy.sympify(value)


def _is_zero(value: sympy.Expr) -> bool:
    return sympy.expand(value) == 0


@dataclass(frozen=True)
class GradedMatrix:
    frame: GradedFrame
    matrix: sympy.ImmutableMatrix

    @classmethod
    def from_rows(cls, frame: GradedFrame, rows: Sequence[Sequence[Entry]]) -> 'GradedMatrix':
        matrix = sympy.ImmutableMatrix([[_sympify(v) for v in row] for row in rows])
        if matrix.shape != (frame.size, frame.size):
            raise ValueError(f"expected a {frame.size}x{frame.size} matrix, got {matrix.shape}")
        return cls(frame, matrix)

    @classmethod
    def from_entries(cls, frame: GradedFrame, entries: Dict[Tuple[str, str], Entry],
                     diagonal: Optional[Sequence[Entry]] = None) -> 'GradedMatrix':
        """Sparse constructor keyed by (row label, column label)."""
        rows = [[0] * frame.size for _ in range(frame.size)]
        if diagonal is not None:
            for i, v in enumerate(diagonal):
                rows[i][i] = v
        for (row, col), v in entries.items():
            rows[frame.position(row)][frame.position(col)] = v
        return cls.from_rows(frame, rows)

    @classmethod
    def identity(cls, frame: GradedFrame) -> 'GradedMatrix':
        return cls(frame, sympy.ImmutableMatrix(sympy.eye(frame.size)))

    @classmethod
    def zero(cls, frame: GradedFrame) -> 'GradedMatrix':
        return cls(frame, sympy.ImmutableMatrix(sympy.zeros(frame.size, frame.size)))

    @classmethod
    def scale_diagonal(cls, frame: GradedFrame, scale: Entry) -> 'GradedMatrix':
        """diag(scale^d); scale = k gives the matrix Delta_k."""
        scale = _sympify(scale)
        return cls(frame, sympy.ImmutableMatrix(sympy.diag(*[scale ** d for d in frame.degrees])))

    @classmethod
    def degree_diagonal(cls, frame: GradedFrame) -> 'GradedMatrix':
        return cls(frame, sympy.ImmutableMatrix(sympy.diag(*frame.degrees)))

    def __getitem__(self, key: Tuple[str, str]) -> sympy.Expr:
        row, col = key
        return self.matrix[self.frame.position(row), self.frame.position(col)]

    def __matmul__(self, other: 'GradedMatrix') -> 'GradedMatrix':
        return GradedMatrix(self.frame, (self.matrix * other.matrix).applyfunc(sympy.expand))

    def __add__(self, other: 'GradedMatrix') -> 'GradedMatrix':
        return GradedMatrix(self.frame, (self.matrix + other.matrix).applyfunc(sympy.expand))

    def __sub__(self, other: 'GradedMatrix') -> 'GradedMatrix':
        return GradedMatrix(self.frame, (self.matrix - other.matrix).applyfunc(sympy.expand))

    def scaled(self, factor: Entry) -> 'GradedMatrix':
        factor = _sympify(factor)
        return GradedMatrix(self.frame, (self.matrix * factor).applyfunc(sympy.expand))

    def inverse(self) -> 'GradedMatrix':
        return GradedMatrix(self.frame, self.matrix.inv().applyfunc(sympy.simplify))

    def simplified(self) -> 'GradedMatrix':
        return GradedMatrix(self.frame, self.matrix.applyfunc(sympy.simplify))

    def equals(self, other: 'GradedMatrix') -> bool:
        difference = self.matrix - other.matrix
        return all(sympy.simplify(v) == 0 for v in difference)

    def diagonal(self) -> Tuple[sympy.Expr, ...]:
        return tuple(self.matrix[i, i] for i in range(self.frame.size))

    def off_pattern(self, allow_diagonal: bool = True) -> List[Tuple[int, int]]:
        """Positions carrying a nonzero entry that the order does not allow."""
        bad = []
        for i in range(self.frame.size):
            for j in range(self.frame.size):
                if i == j and allow_diagonal:
                    continue
                if (i, j) not in self.frame.below and not _is_zero(self.matrix[i, j]):
                    bad.append((i, j))
        return bad

    @property
    def is_lower(self) -> bool:
        return not self.off_pattern()

    @property
    def is_strictly_lower(self) -> bool:
        return not self.off_pattern(allow_diagonal=False)

    @property
    def is_unipotent(self) -> bool:
        return self.is_lower and all(_is_zero(v - 1) for v in self.diagonal())

    @property
    def is_diagonal(self) -> bool:
        return all(_is_zero(self.matrix[i, j]) for i in range(self.frame.size)
                   for j in range(self.frame.size) if i != j)

    def to_json(self) -> Dict[str, Any]:
        entries = []
        for i in range(self.frame.size):
            row = []
            for j in range(self.frame.size):
                value = sympy.expand(self.matrix[i, j])
                if value.free_symbols == {E}:
                    row.append([str(c) for c in sympy.Poly(value, E).all_coeffs()])
                else:
                    row.append(str(value))
            entries.append(row)
        return {'D': list(self.frame.labels), 'degrees': list(self.frame.degrees), 'entries': entries}


def _require_strictly_lower(z: GradedMatrix) -> None:
    bad = z.off_pattern(allow_diagonal=False)
    if bad:
        i, j = bad[0]
        raise NotStrictlyLower(f"entry ({z.frame.labels[i]}, {z.frame.labels[j]}) must vanish")


def _require_lower(a: GradedMatrix) -> None:
    bad = a.off_pattern()
    if bad:
        i, j = bad[0]
        raise NotTriangular(f"entry ({a.frame.labels[i]}, {a.frame.labels[j]}) must vanish")


def exp_nilpotent(z: GradedMatrix) -> GradedMatrix:
    _require_strictly_lower(z)
    result = sympy.eye(z.frame.size)
    term = sympy.eye(z.frame.size)
    for n in range(1, z.frame.size + 1):
        term = (term * z.matrix / n).applyfunc(sympy.expand)
        if all(v == 0 for v in term):
            break
        result = result + term
    return GradedMatrix(z.frame, sympy.ImmutableMatrix(result))


def log_unipotent(a: GradedMatrix) -> GradedMatrix:
    if not a.is_unipotent:
        raise NotUnipotent("the matrix must be lower triangular with unit diagonal")
    nilpotent = a.matrix - sympy.eye(a.frame.size)
    result = sympy.zeros(a.frame.size, a.frame.size)
    term = sympy.eye(a.frame.size)
    for n in range(1, a.frame.size + 1):
        term = (term * nilpotent).applyfunc(sympy.expand)
        if all(v == 0 for v in term):
            break
        result = result + term * sympy.Rational((-1) ** (n + 1), n)
    return GradedMatrix(a.frame, sympy.ImmutableMatrix(result.applyfunc(sympy.expand)))


def chain_weight(degrees: Sequence[int], scale: sympy.Expr) -> sympy.Expr:
    """sum_i E^(d_i) / prod_(j != i) (d_i - d_j) over the degrees met along a chain."""
    if len(set(degrees)) != len(degrees):
        raise RepeatedDegreeOnChain(f"degrees {list(degrees)} repeat along a chain")
    total = sympy.Integer(0)
    for i, d in enumerate(degrees):
        denominator = sympy.Integer(1)
        for j, other in enumerate(degrees):
            if j != i:
                denominator *= d - other
        total += scale ** d / denominator
    return total


def _chains_from(z: GradedMatrix, start: int):
    """Yield (path, product of Z along it) for every chain of length >= 2 leaving `start`."""
    neighbours = z.frame.lower_neighbours
    stack = [((start,), sympy.Integer(1))]
    while stack:
        path, weight = stack.pop()
        for j in neighbours[path[-1]]:
            value = z.matrix[path[-1], j]
            if _is_zero(value):
                continue
            extended = (path + (j,), weight * value)
            yield extended
            stack.append(extended)


def _graded_entries(scale: sympy.Expr, z: GradedMatrix) -> sympy.Matrix:
    degrees = z.frame.degrees
    result = sympy.zeros(z.frame.size, z.frame.size)
    for i in range(z.frame.size):
        result[i, i] = scale ** degrees[i]
        for path, weight in _chains_from(z, i):
            result[i, path[-1]] += weight * chain_weight([degrees[p] for p in path], scale)
    return result.applyfunc(sympy.expand)


def exp_graded(scale: Entry, z: GradedMatrix) -> GradedMatrix:
    """exp(t(Lambda + Z)) with E = e^t supplied as `scale`."""
    _require_strictly_lower(z)
    scale = _sympify(scale)
    if scale.is_positive is False:
        raise ValueError(f"scale must be positive, got {scale}")
    return GradedMatrix(z.frame, sympy.ImmutableMatrix(_graded_entries(scale, z)))


def read_scale(a: GradedMatrix) -> sympy.Expr:
    """The common E with A_(mu,mu) = E^(d_mu)."""
    scale = None
    for value, d in zip(a.diagonal(), a.frame.degrees):
        if d == 0:
            if not _is_zero(value - 1):
                raise InconsistentDiagonal(f"degree-zero diagonal entry is {value}, expected 1")
            continue
        if value.is_positive is False:
            raise InconsistentDiagonal(f"diagonal entry {value} is not positive")
        candidate = sympy.root(value, d)
        if scale is None:
            scale = candidate
        elif sympy.simplify(candidate - scale) != 0:
            raise InconsistentDiagonal(f"diagonal entries give scales {scale} and {candidate}")
    if scale is None:
        raise InconsistentDiagonal("no positive-degree diagonal entry to read the scale from")
    return sympy.radsimp(scale)


def log_graded(a: GradedMatrix) -> Tuple[sympy.Expr, GradedMatrix]:
    """Inverse of exp_graded: returns (E, Z) with exp_graded(E, Z) = A."""
    _require_lower(a)
    scale = read_scale(a)
    if sympy.simplify(scale - 1) == 0:
        raise ScaleIsOne("unipotent matrices have no graded logarithm; use log_unipotent")

    frame = a.frame
    degrees = frame.degrees
    z = sympy.zeros(frame.size, frame.size)
    # sub-chains of (i, j) only use pairs with a smaller position gap
    for i, j in sorted(frame.below, key=lambda pair: (pair[0] - pair[1], pair)):
        partial = sympy.Integer(0)
        current = GradedMatrix(frame, sympy.ImmutableMatrix(z))
        for path, weight in _chains_from(current, i):
            if path[-1] == j and len(path) > 2:
                partial += weight * chain_weight([degrees[p] for p in path], scale)
        direct = chain_weight([degrees[i], degrees[j]], scale)
        z[i, j] = sympy.simplify((a.matrix[i, j] - partial) / direct)
    return scale, GradedMatrix(frame, sympy.ImmutableMatrix(z))


def power(a: GradedMatrix, t: Entry) -> GradedMatrix:
    """A^t for integer, rational or symbolic t."""
    t = _sympify(t)
    if a.is_unipotent:
        return exp_nilpotent(log_unipotent(a).scaled(t))
    scale, z = log_graded(a)
    return exp_graded(sympy.radsimp(scale ** t), z).simplified()


def diagonalize(a: GradedMatrix) -> GradedMatrix:
    """Unipotent P with P^-1 A P diagonal; column mu is an eigenvector for A_(mu,mu)."""
    _require_lower(a)
    scale = read_scale(a)
    if sympy.simplify(scale - 1) == 0:
        raise ScaleIsOne("a non-identity unipotent matrix is not diagonalisable")

    frame = a.frame
    size = frame.size
    p = sympy.eye(size)
    for mu in range(size):
        eigenvalue = a.matrix[mu, mu]
        above = [rho for rho in range(size) if (rho, mu) in frame.below]
        for rho in sorted(above):
            total = sum((a.matrix[rho, sigma] * p[sigma, mu] for sigma in range(size)
                         if sigma != rho and (sigma == mu or (rho, sigma) in frame.below)), sympy.Integer(0))
            p[rho, mu] = sympy.simplify(total / (eigenvalue - a.matrix[rho, rho]))
    logger.debug(f"diagonalised a {size}x{size} standard matrix with scale {scale}")
    return GradedMatrix(frame, sympy.ImmutableMatrix(p))
