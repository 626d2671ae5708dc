"""
Experiment harness for orbits on the torus and under the generalised T_k:
hitting sets, density estimates, finite-sums structure and multiplier searches.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from algebra.algsem import SemialgebraicSet, membership
from algebra.brackets import Alpha, IndexSet, alpha_map
from algebra.genpoly import GenPoly, evaluate
from algebra.numbers import ExactScalar, Ordering, ScalarLike, as_scalar, compare, frac_exact
from algebra.timesk import OutsideUnitCube, iterate_t
from utils.config import config
from utils.errors import IndeterminateComparison, IndeterminateFloor, PremiseViolated

logger = logging.getLogger(__name__)

Point = Tuple[ExactScalar, ...]
ZeroSet = Union[SemialgebraicSet, GenPoly]


@dataclass
class HittingTimes:
    hits: List[int]
    indeterminate: List[int] = field(default_factory=list)


@dataclass
class DensityWindow:
    """E intersected with [1, N] as a boolean mask; bits[n - 1] says whether n is in E."""

    bits: np.ndarray

    @classmethod
    def from_members(cls, members: Iterable[int], length: int) -> 'DensityWindow':
        bits = np.zeros(length, dtype=bool)
        for n in members:
            if 1 <= n <= length:
                bits[n - 1] = True
        return cls(bits)

    @classmethod
    def from_predicate(cls, predicate: Callable[[int], bool], length: int) -> 'DensityWindow':
        return cls(np.fromiter((bool(predicate(n)) for n in range(1, length + 1)), dtype=bool, count=length))

    @property
    def length(self) -> int:
        return int(self.bits.size)

    @property
    def count(self) -> int:
        return int(self.bits.sum())

    def members(self) -> List[int]:
        return [int(i) + 1 for i in np.flatnonzero(self.bits)]


@dataclass
class DensityStats:
    upper: Fraction
    lower: Fraction
    final: Fraction
    banach_upper: Fraction
    banach_offset: int
    banach_window: int
    natural: Optional[Fraction]

    def to_json(self) -> Dict[str, Any]:
        return {
            'upper': str(self.upper),
            'lower': str(self.lower),
            'final': str(self.final),
            'banach_upper': str(self.banach_upper),
            'banach_offset': self.banach_offset,
            'banach_window': self.banach_window,
            'natural': None if self.natural is None else str(self.natural),
        }


@dataclass
class MultiplierSearch:
    multipliers: List[int]
    premise_holds: bool
    premise_failures: List[int]
    indeterminate: List[int]


@dataclass
class ExperimentReport:
    params: Dict[str, Any]
    premise_check: Dict[str, Any]
    multipliers: List[Dict[str, Any]]
    fs_probe: Dict[str, Any]
    density: Dict[str, Any]
    precision: Dict[str, Any]
    path_independent: bool = True

    @property
    def found(self) -> List[int]:
        return [entry['m'] for entry in self.multipliers]

    def to_json(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_json(cls, data: Dict[str, Any]) -> 'ExperimentReport':
        return cls(**data)


def fs_set(generators: Sequence[int]) -> frozenset:
    """All sums over nonempty sub-multisets of the generators."""
    if len(generators) > 20:
        raise ValueError(f"at most 20 generators are supported, got {len(generators)}")
    sums = set()
    for g in generators:
        sums |= {s + g for s in sums} | {g}
    return frozenset(sums)


def find_fs_subset(members: Iterable[int], r: int, bound: int) -> Optional[Tuple[int, ...]]:
    """Depth-first search for increasing n_1 < ... < n_r whose finite sums all lie in E."""
    allowed = frozenset(n for n in members if 1 <= n <= bound)
    ordered = sorted(allowed)

    def extend(chosen: Tuple[int, ...], sums: frozenset) -> Optional[Tuple[int, ...]]:
        if len(chosen) == r:
            return chosen
        start = chosen[-1] if chosen else 0
        for n in ordered:
            if n <= start:
                continue
            new_sums = {s + n for s in sums}
            if all(s in allowed for s in new_sums):
                found = extend(chosen + (n,), sums | new_sums | {n})
                if found:
                    return found
        return None

    if r < 1:
        return ()
    return extend((), frozenset())


class OrbitLab:
    def __init__(self):
        self.jobs = config.jobs
        self.chunk_size = int(config.get('orbitlab.chunk_size', 256))
        self.fs_probe_max_r = int(config.get('orbitlab.fs_probe_max_r', 3))
        self.tolerance = Fraction(str(config.get('orbitlab.density.tolerance', 0.001)))
        self.tail_fraction = Fraction(str(config.get('orbitlab.density.tail_fraction', 0.5)))
        self.banach_window = int(config.get('orbitlab.density.banach_window', 100))
        self.max_bits = config.max_bits

    # -- orbits -------------------------------------------------------------

    def torus_orbit(self, x: Sequence[ScalarLike], k: int, steps: int) -> List[Point]:
        """({k^n x}) for n = 0..steps."""
        point = tuple(as_scalar(v) for v in x)
        for i, v in enumerate(point):
            if compare(v, 0) is Ordering.LT or compare(v, 1) is not Ordering.LT:
                raise OutsideUnitCube(f"coordinate {i} = {v} is outside [0, 1)")
        orbit = [point]
        for step in range(steps):
            try:
                point = tuple(frac_exact(v * k, self.max_bits) for v in point)
            except IndeterminateFloor as e:
                raise e.with_context(step=step + 1)
            orbit.append(point)
        return orbit

    def hitting_times(self, orbit: Sequence[Sequence[ScalarLike]], target: SemialgebraicSet) -> HittingTimes:
        hits, indeterminate = [], []
        for n, point in enumerate(orbit):
            try:
                if membership(target, point, self.max_bits):
                    hits.append(n)
            except (IndeterminateComparison, IndeterminateFloor) as e:
                logger.warning(f"membership at n={n} undecided: {e}")
                indeterminate.append(n)
        return HittingTimes(hits, indeterminate)

    # -- densities ----------------------------------------------------------

    def density_stats(self, window: DensityWindow, banach_window: Optional[int] = None) -> DensityStats:
        length = window.length
        if length == 0:
            raise ValueError("density needs a nonempty window")
        counts = np.cumsum(window.bits, dtype=np.int64)
        start = max(1, int(math.ceil(self.tail_fraction * length)))
        ends = np.arange(start, length + 1)
        ratios = counts[ends - 1] / ends
        upper_at = int(ends[int(np.argmax(ratios))])
        lower_at = int(ends[int(np.argmin(ratios))])
        upper = Fraction(int(counts[upper_at - 1]), upper_at)
        lower = Fraction(int(counts[lower_at - 1]), lower_at)
        final = Fraction(int(counts[-1]), length)

        width = min(banach_window or self.banach_window, length)
        padded = np.concatenate(([0], counts))
        sliding = padded[width:] - padded[:-width]
        best = int(np.argmax(sliding))
        banach = Fraction(int(sliding[best]), width)

        natural = final if upper - lower < self.tolerance else None
        return DensityStats(upper, lower, final, banach, best + 1, width, natural)

    # -- multiplier searches ------------------------------------------------

    def _chunks(self, upper: int) -> List[range]:
        return [range(lo, min(lo + self.chunk_size, upper + 1)) for lo in range(1, upper + 1, self.chunk_size)]

    def multiplier_search_torus(self, x: Sequence[ScalarLike], target: SemialgebraicSet, k: int,
                                n_window: Tuple[int, int], l_max: int) -> MultiplierSearch:
        """All l <= l_max with {l k^n x} in S for every n in the window."""
        n0, n1 = n_window
        orbit = self.torus_orbit(x, k, n1)[n0:n1 + 1]
        premise = self.hitting_times(orbit, target)
        failures = [n0 + i for i in range(len(orbit)) if i not in premise.hits]
        if failures:
            logger.warning(f"premise fails at n = {failures}")

        indeterminate: List[int] = []

        def scan(block: range) -> List[int]:
            found = []
            for l in block:
                try:
                    if all(membership(target, tuple(frac_exact(v * l, self.max_bits) for v in p), self.max_bits)
                           for p in orbit):
                        found.append(l)
                except (IndeterminateComparison, IndeterminateFloor):
                    indeterminate.append(l)
            return found

        with ThreadPoolExecutor(max_workers=self.jobs) as pool:
            results = list(pool.map(scan, self._chunks(l_max)))
        multipliers = [l for block in results for l in block]
        logger.info(f"multiplier search: {len(multipliers)} of {l_max} multipliers survive")
        return MultiplierSearch(multipliers, not failures, failures, sorted(indeterminate))

    # -- generalised experiment ---------------------------------------------

    def _in_zero_set(self, zero_set: ZeroSet, point: Point, max_bits: int) -> bool:
        if isinstance(zero_set, SemialgebraicSet):
            return membership(zero_set, point, max_bits)
        return compare(evaluate(zero_set, point, max_bits), 0, max_bits) is Ordering.EQ

    def _fractional_v(self, index_set: IndexSet, alpha: Dict[int, ExactScalar], t: int, max_bits: int) -> Point:
        return tuple(frac_exact(v, max_bits) for v in index_set.v_vector(alpha, t, max_bits))

    def multiplier_experiment(self, index_set: IndexSet, alpha: Alpha, zero_set: ZeroSet, k: int,
                             m_max: int, n_window: Tuple[int, int], skip_premise: bool = False) -> ExperimentReport:
        """
        Multipliers m <= m_max not divisible by k with {v(m k^n)} in the zero set
        for some n in the window, given that {v(k^n)} lies in it across the window.
        """
        alpha = alpha_map(alpha)
        n0, n1 = n_window
        window = range(n0, n1 + 1)
        max_bits = self.max_bits

        failures = [n for n in window
                    if not self._in_zero_set(zero_set, self._fractional_v(index_set, alpha, k ** n, max_bits), max_bits)]
        if failures and not skip_premise:
            raise PremiseViolated(f"{{v(k^n)}} leaves the zero set at n = {failures}", failures=tuple(failures))

        mismatches: List[Tuple[int, int]] = []
        indeterminate: List[int] = []

        def scan(block: range) -> List[Dict[str, Any]]:
            found = []
            for m in block:
                if m % k == 0:
                    continue
                try:
                    start = self._fractional_v(index_set, alpha, m, max_bits)
                    path = iterate_t(start, k, n1, index_set, max_bits)
                    witnesses = []
                    for n in window:
                        direct = self._fractional_v(index_set, alpha, m * k ** n, max_bits)
                        if direct != path[n]:
                            mismatches.append((m, n))
                        if self._in_zero_set(zero_set, direct, max_bits):
                            witnesses.append(n)
                except (IndeterminateComparison, IndeterminateFloor) as e:
                    logger.warning(f"multiplier {m} undecided: {e}")
                    indeterminate.append(m)
                    continue
                if witnesses:
                    found.append({'m': m, 'witnesses': witnesses})
            return found

        with ThreadPoolExecutor(max_workers=self.jobs) as pool:
            results = list(pool.map(scan, self._chunks(m_max)))
        multipliers = [entry for block in results for entry in block]
        found = [entry['m'] for entry in multipliers]

        probe: Dict[str, Any] = {'r': 0, 'generators': []}
        for r in range(1, self.fs_probe_max_r + 1):
            generators = find_fs_subset(found, r, m_max)
            if generators is None:
                break
            probe = {'r': r, 'generators': list(generators)}

        density = self.density_stats(DensityWindow.from_members(found, m_max)).to_json()
        if mismatches:
            logger.error(f"T_{k} iteration disagrees with direct evaluation at {mismatches[:5]}")

        return ExperimentReport(
            params={
                'D': index_set.to_json(),
                'alpha': {str(i): str(a) for i, a in sorted(alpha.items())},
                'zero_set': str(zero_set),
                'k': k,
                'm_max': m_max,
                'n_window': [n0, n1],
            },
            premise_check={'holds': not failures, 'failures': failures, 'skipped': skip_premise},
            multipliers=multipliers,
            fs_probe=probe,
            density=density,
            precision={'max_bits': max_bits, 'indeterminate': sorted(indeterminate)},
            path_independent=not mismatches,
        )

    def verify_report(self, report: ExperimentReport, index_set: IndexSet, alpha: Alpha,
                      zero_set: ZeroSet) -> List[Tuple[int, int]]:
        """Re-check every (m, n) witness from scratch at doubled precision; returns the failures."""
        alpha = {i: ExactScalar.parse(str(a)) for i, a in alpha_map(alpha).items()}
        k = report.params['k']
        bits = 2 * self.max_bits
        failures = []
        for entry in report.multipliers:
            for n in entry['witnesses']:
                point = self._fractional_v(index_set, alpha, entry['m'] * k ** n, bits)
                if not self._in_zero_set(zero_set, point, bits):
                    failures.append((entry['m'], n))
        return failures


orbit_lab = OrbitLab()
