#!/usr/bin/env python3
"""
IdentitySuiteRunner - runs the property checks of the generalised x k maps
(intertwining, commutation, cocycle, structure, entry dependency) as a
sequence of timed stages and collects a pass/fail summary.
"""

import logging
import time
from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from fractions import Fraction
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from algebra.brackets import IndexSet
from algebra.timesk import build_a, s_map, t_map
from utils.config import config
from utils.reporting import suite_markdown

logger = logging.getLogger(__name__)


class CheckStage(Enum):
    INTERTWINING = "intertwining"
    COMMUTATION = "commutation"
    COCYCLE = "cocycle"
    STRUCTURE = "structure"
    DEPENDENCY = "dependency"


class StageStatus(Enum):
    PENDING = "pending"
    PASSED = "passed"
    FAILED = "failed"
    ERROR = "error"


@dataclass
class StageResult:
    stage: CheckStage
    status: StageStatus
    cases: int = 0
    failures: List[str] = field(default_factory=list)
    duration: float = 0.0
    error_message: Optional[str] = None


@dataclass
class SuiteConfig:
    index_set: str = 'running'
    alphas: Optional[List[Sequence[Fraction]]] = None
    alpha_count: int = field(default_factory=lambda: int(config.get('suite.intertwining_alphas', 200)))
    k_max: int = 12
    m_max: int = 12
    pair_max: int = 8
    points: int = field(default_factory=lambda: int(config.get('suite.commutation_points', 100)))
    dependency_trials: int = field(default_factory=lambda: int(config.get('suite.dependency_trials', 1000)))
    max_denominator: int = field(default_factory=lambda: int(config.get('suite.max_denominator', 50)))
    seed: int = field(default_factory=lambda: int(config.get('suite.seed', 20240611)))
    stages: Tuple[CheckStage, ...] = tuple(CheckStage)
    max_failures: int = 5


class IdentitySuiteRunner:
    def __init__(self, suite_config: SuiteConfig):
        self.config = suite_config
        self.suite_id = f"suite_{datetime.now().strftime('%Y%m%d_%H%M%S')}"
        self.index_set = IndexSet.from_spec(suite_config.index_set)
        self.rng = np.random.default_rng(suite_config.seed)
        self.stage_results: Dict[CheckStage, StageResult] = {}
        logger.info(f"IdentitySuiteRunner {self.suite_id} on {self.index_set.labels()} (seed {suite_config.seed})")

    # -- random inputs ------------------------------------------------------

    def _random_fraction(self, low: int, high: int) -> Fraction:
        denominator = int(self.rng.integers(1, self.config.max_denominator + 1))
        return Fraction(int(self.rng.integers(low * denominator, high * denominator)), denominator)

    def random_alpha(self) -> Dict[int, Fraction]:
        leaves = sorted(self.index_set.grading)
        return {leaf: self._random_fraction(-3, 3) for leaf in leaves}

    def random_point(self) -> Tuple[Fraction, ...]:
        return tuple(self._random_fraction(0, 1) for _ in range(len(self.index_set)))

    def _alphas(self) -> List[Any]:
        if self.config.alphas:
            return list(self.config.alphas)
        return [self.random_alpha() for _ in range(self.config.alpha_count)]

    # -- stages -------------------------------------------------------------

    def _check_intertwining(self, result: StageResult) -> None:
        for alpha in self._alphas():
            for m in range(1, self.config.m_max + 1):
                x = self.index_set.v_vector(alpha, m)
                for k in range(1, self.config.k_max + 1):
                    result.cases += 1
                    if s_map(k, x, self.index_set) != self.index_set.v_vector(alpha, k * m):
                        result.failures.append(f"S_{k}(v({m})) != v({k * m}) for alpha {alpha}")

    def _check_commutation(self, result: StageResult) -> None:
        bound = self.config.pair_max
        for _ in range(self.config.points):
            x = self.random_point()
            images = {k: t_map(k, x, self.index_set).image for k in range(1, bound * bound + 1)
                      if any(k == a * b for a in range(1, bound + 1) for b in range(1, bound + 1))}
            lifts = {k: s_map(k, x, self.index_set) for k in images}
            for k in range(1, bound + 1):
                for l in range(1, bound + 1):
                    result.cases += 1
                    if t_map(k, images[l], self.index_set).image != images[k * l]:
                        result.failures.append(f"T_{k} T_{l} != T_{k * l} at {x}")
                    if s_map(k, lifts[l], self.index_set) != lifts[k * l]:
                        result.failures.append(f"S_{k} S_{l} != S_{k * l} at {x}")

    def _check_cocycle(self, result: StageResult) -> None:
        bound = self.config.pair_max
        for _ in range(self.config.points):
            x = self.random_point()
            for k in range(1, bound + 1):
                for l in range(1, bound + 1):
                    result.cases += 1
                    a_l = build_a(l, x, self.index_set)
                    a_k = build_a(k, a_l.apply(x), self.index_set)
                    if a_k.as_matrix() * a_l.as_matrix() != build_a(k * l, x, self.index_set).as_matrix():
                        result.failures.append(f"A_{k}(S_{l}(x)) A_{l}(x) != A_{k * l}(x) at {x}")

    def _check_structure(self, result: StageResult) -> None:
        for _ in range(self.config.points):
            x = self.random_point()
            for k in range(1, self.config.k_max + 1):
                result.cases += 1
                affine = t_map(k, x, self.index_set)
                problems = affine.linear.structure_violations() + affine.unipotent_violations()
                result.failures.extend(f"k={k}, x={x}: {p}" for p in problems)

    def _check_dependency(self, result: StageResult) -> None:
        members = self.index_set.order
        degrees = self.index_set.degrees
        size = len(members)
        for _ in range(self.config.dependency_trials):
            k = int(self.rng.integers(2, max(self.config.k_max, 2) + 1))
            x = list(self.random_point())
            i, j, xi = (int(v) for v in self.rng.integers(0, size, 3))
            # only coordinates outside the dependency range may be perturbed
            if degrees[xi] + degrees[j] <= degrees[i] and members[xi].height < members[i].height:
                continue
            result.cases += 1
            before = build_a(k, x, self.index_set).entries[i][j]
            x[xi] = x[xi] + self._random_fraction(-2, 2)
            after = build_a(k, x, self.index_set).entries[i][j]
            if before != after:
                result.failures.append(f"A_{k}[{members[i]}, {members[j]}] moved when x_{members[xi]} changed")

    # -- driver -------------------------------------------------------------

    def _stage_functions(self) -> Dict[CheckStage, Callable[[StageResult], None]]:
        return {
            CheckStage.INTERTWINING: self._check_intertwining,
            CheckStage.COMMUTATION: self._check_commutation,
            CheckStage.COCYCLE: self._check_cocycle,
            CheckStage.STRUCTURE: self._check_structure,
            CheckStage.DEPENDENCY: self._check_dependency,
        }

    def _execute_stage(self, stage: CheckStage, check: Callable[[StageResult], None]) -> StageResult:
        result = StageResult(stage=stage, status=StageStatus.PENDING)
        self.stage_results[stage] = result
        started = time.perf_counter()
        logger.info(f"running {stage.value} checks")
        try:
            check(result)
            result.status = StageStatus.FAILED if result.failures else StageStatus.PASSED
        except Exception as e:
            logger.error(f"{stage.value} checks raised: {e}")
            result.status = StageStatus.ERROR
            result.error_message = str(e)
        result.duration = time.perf_counter() - started
        result.failures = result.failures[:self.config.max_failures]
        logger.info(f"{stage.value}: {result.status.value} ({result.cases} cases, {result.duration:.2f}s)")
        return result

    def execute_suite(self) -> Dict[str, Any]:
        functions = self._stage_functions()
        for stage in self.config.stages:
            self._execute_stage(stage, functions[stage])
        return self.summary()

    @property
    def passed(self) -> bool:
        return all(r.status is StageStatus.PASSED for r in self.stage_results.values())

    def summary(self) -> Dict[str, Any]:
        return {
            'suite_id': self.suite_id,
            'D': self.index_set.to_json(),
            'seed': self.config.seed,
            'passed': self.passed,
            'stages': [
                {
                    'stage': r.stage.value,
                    'status': r.status.value,
                    'cases': r.cases,
                    'duration': round(r.duration, 3),
                    'failures': r.failures,
                    'error': r.error_message,
                }
                for r in self.stage_results.values()
            ],
        }

    def markdown(self) -> str:
        rows = [{'stage': r.stage.value, 'status': r.status.value.upper(), 'cases': r.cases,
                 'duration': r.duration, 'note': r.error_message or (r.failures[0] if r.failures else '')}
                for r in self.stage_results.values()]
        return suite_markdown(self.suite_id, rows, self.passed)


def create_runner(index_set: str = 'running', **kwargs) -> IdentitySuiteRunner:
    return IdentitySuiteRunner(SuiteConfig(index_set=index_set, **kwargs))
