"""
Bracket indices: formal terms like 1[2][2[1]] indexing generalised monomials,
with grading, height, the derivability order and finite downward-closed sets.
"""

import itertools
import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

from algebra.numbers import ExactScalar, ScalarLike, as_scalar, frac_exact
from utils.config import config
from utils.errors import GenLabError

logger = logging.getLogger(__name__)


class IndexSyntaxError(GenLabError, ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class MissingGrade(GenLabError, KeyError):
    def __init__(self, leaf: int):
        super().__init__(f"no degree assigned to leaf {leaf}")
        self.leaf = leaf

    def __str__(self) -> str:
        return self.args[0]


class NotDownwardClosed(GenLabError, ValueError):
    def __init__(self, missing: 'BracketIndex', member: 'BracketIndex'):
        super().__init__(f"{missing} is derivable from {member} but is not a member")
        self.missing = missing
        self.member = member


class InvalidOrder(GenLabError, ValueError):
    pass


@dataclass(frozen=True)
class BracketIndex:
    leaf: int
    factors: Tuple['BracketIndex', ...] = ()

    def __post_init__(self):
        if self.leaf < 1:
            raise ValueError(f"leaf must be a positive integer, got {self.leaf}")
        # factor order is irrelevant, so keep them sorted
        object.__setattr__(self, 'factors', tuple(sorted(self.factors, key=lambda f: f.key)))

    @cached_property
    def height(self) -> int:
        return max((1 + f.height for f in self.factors), default=0)

    @cached_property
    def key(self) -> tuple:
        return (self.height, self.leaf, tuple(f.key for f in self.factors))

    @property
    def is_leaf(self) -> bool:
        return not self.factors

    def leaves(self) -> Iterator[int]:
        yield self.leaf
        for f in self.factors:
            yield from f.leaves()

    def split(self) -> Tuple['BracketIndex', 'BracketIndex']:
        """Write a compound index as base[last factor]."""
        if self.is_leaf:
            raise ValueError(f"{self} has no bracketed factor")
        return BracketIndex(self.leaf, self.factors[:-1]), self.factors[-1]

    def attach(self, factor: 'BracketIndex') -> 'BracketIndex':
        return BracketIndex(self.leaf, self.factors + (factor,))

    def __str__(self) -> str:
        return str(self.leaf) + ''.join(f"[{f}]" for f in self.factors)

    def __repr__(self) -> str:
        return f"BracketIndex({str(self)!r})"


IndexLike = Union[BracketIndex, str, int]


class _IndexParser:
    def __init__(self, text: str):
        self.text = text
        self.position = 0

    def parse(self) -> BracketIndex:
        index = self.index()
        if self.position != len(self.text):
            raise IndexSyntaxError(f"unexpected {self.text[self.position]!r}", self.position)
        return index

    def index(self) -> BracketIndex:
        start = self.position
        while self.position < len(self.text) and self.text[self.position].isdigit():
            self.position += 1
        if start == self.position:
            if self.position == len(self.text):
                raise IndexSyntaxError("expected a leaf but input ended", self.position)
            raise IndexSyntaxError(f"expected a leaf, found {self.text[self.position]!r}", self.position)
        leaf = int(self.text[start:self.position])
        if leaf < 1:
            raise IndexSyntaxError("leaves are positive integers", start)
        factors = []
        while self.position < len(self.text) and self.text[self.position] == '[':
            self.position += 1
            factors.append(self.index())
            if self.position >= len(self.text) or self.text[self.position] != ']':
                raise IndexSyntaxError("expected ']'", self.position)
            self.position += 1
        return BracketIndex(leaf, tuple(factors))


def parse_index(text: str) -> BracketIndex:
    return _IndexParser(text.replace(' ', '')).parse()


def as_index(value: IndexLike) -> BracketIndex:
    if isinstance(value, BracketIndex):
        return value
    if isinstance(value, int):
        return BracketIndex(value)
    return parse_index(str(value))


def degree(mu: BracketIndex, grading: Mapping[int, int]) -> int:
    if mu.leaf not in grading:
        raise MissingGrade(mu.leaf)
    return grading[mu.leaf] + sum(degree(f, grading) for f in mu.factors)


def height(mu: BracketIndex) -> int:
    return mu.height


def _match_factors(small: Sequence[BracketIndex], large: Sequence[BracketIndex], used: List[bool]) -> bool:
    if not small:
        return True
    head, rest = small[0], small[1:]
    for j, candidate in enumerate(large):
        if used[j] or not derivable(head, candidate):
            continue
        used[j] = True
        if _match_factors(rest, large, used):
            return True
        used[j] = False
    return False


def derivable(nu: BracketIndex, mu: BracketIndex) -> bool:
    """nu <= mu: same leaf and nu's factors inject into mu's, each derivable from its image."""
    if nu == mu:
        return True
    if nu.leaf != mu.leaf or len(nu.factors) > len(mu.factors):
        return False
    return _match_factors(nu.factors, mu.factors, [False] * len(mu.factors))


def derivables(mu: BracketIndex) -> frozenset:
    """Every index nu with nu <= mu, mu included."""
    options = [(None,) + tuple(derivables(f)) for f in mu.factors]
    found = set()
    for choice in itertools.product(*options):
        found.add(BracketIndex(mu.leaf, tuple(c for c in choice if c is not None)))
    return frozenset(found)


def closure(indices: Iterable[IndexLike]) -> frozenset:
    found = set()
    for mu in indices:
        found |= derivables(as_index(mu))
    return frozenset(found)


def _factor_indices(indices: Iterable[BracketIndex]) -> Iterator[BracketIndex]:
    for mu in indices:
        for f in mu.factors:
            yield f
            yield from _factor_indices([f])


def compare_complexity(a: Sequence[int], b: Sequence[int]) -> int:
    """Reverse-lexicographic comparison: the highest differing coordinate decides."""
    size = max(len(a), len(b))
    a = tuple(a) + (0,) * (size - len(a))
    b = tuple(b) + (0,) * (size - len(b))
    for i in reversed(range(size)):
        if a[i] != b[i]:
            return -1 if a[i] < b[i] else 1
    return 0


Alpha = Union[Mapping[int, ScalarLike], Sequence[ScalarLike]]


def alpha_map(alpha: Alpha) -> Dict[int, ExactScalar]:
    """Coefficients keyed by leaf; a sequence assigns its entries to leaves 1, 2, ..."""
    if isinstance(alpha, Mapping):
        return {int(i): as_scalar(a) for i, a in alpha.items()}
    return {i + 1: as_scalar(a) for i, a in enumerate(alpha)}


def monomial_eval(mu: BracketIndex, alpha: Alpha, t: ScalarLike, grading: Mapping[int, int],
                  max_bits: Optional[int] = None) -> ExactScalar:
    alpha = alpha_map(alpha)
    t = as_scalar(t)
    return _monomial(mu, alpha, t, grading, max_bits, {})


def _monomial(mu, alpha, t, grading, max_bits, memo) -> ExactScalar:
    if mu in memo:
        return memo[mu]
    if mu.leaf not in alpha:
        raise KeyError(f"no coefficient for leaf {mu.leaf}")
    if mu.leaf not in grading:
        raise MissingGrade(mu.leaf)
    value = alpha[mu.leaf] * t ** grading[mu.leaf]
    for f in mu.factors:
        if value.is_rational and value.fraction == 0:
            break
        value = value * frac_exact(_monomial(f, alpha, t, grading, max_bits, memo), max_bits)
    memo[mu] = value
    return value


@dataclass(frozen=True)
class IndexSet:
    """Finite downward-closed set of indices with a grading and a fixed coordinate order."""

    order: Tuple[BracketIndex, ...]
    grading: Dict[int, int] = field(hash=False)

    @classmethod
    def build(cls, members: Iterable[IndexLike], grading: Mapping[int, int],
              order: Optional[Sequence[IndexLike]] = None) -> 'IndexSet':
        members = frozenset(as_index(m) for m in members)
        grading = {int(i): int(d) for i, d in grading.items()}
        if not members:
            raise ValueError("an index set needs at least one member")

        for mu in members:
            for leaf in mu.leaves():
                if leaf not in grading:
                    raise MissingGrade(leaf)
                if grading[leaf] < 1:
                    raise ValueError(f"leaf {leaf} has non-positive degree {grading[leaf]}")
            for nu in derivables(mu):
                if nu not in members:
                    raise NotDownwardClosed(nu, mu)

        if order is None:
            ordered = tuple(sorted(members, key=lambda m: (m.height, degree(m, grading), m.key)))
        else:
            ordered = tuple(as_index(m) for m in order)
            if len(ordered) != len(members) or frozenset(ordered) != members:
                raise InvalidOrder("the coordinate order must list every member exactly once")
            seen = set()
            for mu in ordered:
                for nu in derivables(mu):
                    if nu != mu and nu not in seen:
                        raise InvalidOrder(f"{nu} must come before {mu}")
                seen.add(mu)
        return cls(ordered, grading)

    @classmethod
    def from_closure(cls, generators: Iterable[IndexLike], grading: Mapping[int, int]) -> 'IndexSet':
        return cls.build(closure(generators), grading)

    @classmethod
    def preset(cls, name: str) -> 'IndexSet':
        spec = config.index_set_preset(name)
        return cls.build(spec['order'], spec['grading'], spec['order'])

    @classmethod
    def from_spec(cls, text: str, grading: Optional[Mapping[int, int]] = None) -> 'IndexSet':
        """
        A preset name, or a comma separated list of generators closed downward.
        Bracket factors of the generators are added as generators too, so the
        result always carries the rows the x k matrices are built from.
        """
        try:
            return cls.preset(text)
        except KeyError:
            pass
        generators = [as_index(part) for part in text.split(',') if part.strip()]
        generators = sorted(closure(generators) | frozenset(_factor_indices(generators)), key=lambda m: m.key)
        if grading is None:
            grading = {leaf: 1 for mu in generators for leaf in mu.leaves()}
        return cls.from_closure(generators, grading)

    @cached_property
    def positions(self) -> Dict[BracketIndex, int]:
        return {mu: i for i, mu in enumerate(self.order)}

    @cached_property
    def degrees(self) -> Tuple[int, ...]:
        return tuple(degree(mu, self.grading) for mu in self.order)

    def __len__(self) -> int:
        return len(self.order)

    def __iter__(self) -> Iterator[BracketIndex]:
        return iter(self.order)

    def __contains__(self, mu) -> bool:
        return as_index(mu) in self.positions

    def position(self, mu: IndexLike) -> int:
        return self.positions[as_index(mu)]

    def degree(self, mu: IndexLike) -> int:
        return degree(as_index(mu), self.grading)

    @property
    def max_degree(self) -> int:
        return max(self.degrees)

    def layers(self) -> Dict[int, Tuple[BracketIndex, ...]]:
        """Members grouped by degree."""
        grouped: Dict[int, List[BracketIndex]] = {}
        for mu, d in zip(self.order, self.degrees):
            grouped.setdefault(d, []).append(mu)
        return {d: tuple(ms) for d, ms in sorted(grouped.items())}

    def below(self, mu: IndexLike) -> Tuple[BracketIndex, ...]:
        """Members strictly derivable from mu, in coordinate order."""
        mu = as_index(mu)
        return tuple(nu for nu in self.order if nu != mu and derivable(nu, mu))

    def complexity_vector(self) -> Tuple[int, ...]:
        counts = [0] * (max(mu.height for mu in self.order) + 1)
        for mu in self.order:
            counts[mu.height] += 1
        return tuple(counts)

    def v_vector(self, alpha: Alpha, t: ScalarLike, max_bits: Optional[int] = None) -> Tuple[ExactScalar, ...]:
        alpha = alpha_map(alpha)
        t = as_scalar(t)
        memo: Dict[BracketIndex, ExactScalar] = {}
        return tuple(_monomial(mu, alpha, t, self.grading, max_bits, memo) for mu in self.order)

    def labels(self) -> List[str]:
        return [str(mu) for mu in self.order]

    def to_json(self) -> Dict[str, Any]:
        return {
            'members': sorted(self.labels()),
            'grading': {str(i): d for i, d in sorted(self.grading.items())},
            'order': self.labels(),
        }

    @classmethod
    def from_json(cls, data: Mapping[str, Any]) -> 'IndexSet':
        grading = {int(i): int(d) for i, d in data['grading'].items()}
        return cls.build(data['members'], grading, data.get('order'))

    def __eq__(self, other) -> bool:
        return isinstance(other, IndexSet) and self.order == other.order and self.grading == other.grading

    def __hash__(self) -> int:
        return hash(self.order)
