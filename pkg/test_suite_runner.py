#!/usr/bin/env python3
"""
Tests for the identity suite runner
"""

import sys
import os
sys.path.insert(0, os.path.join(os.path.dirname(__file__), 'src'))

from fractions import Fraction

from orchestrator.suite_runner import CheckStage, StageStatus, create_runner

ALPHA = (Fraction(1, 3), Fraction(1, 5), Fraction(1, 7))


def small_runner(**overrides):
    settings = dict(alphas=[ALPHA], alpha_count=1, k_max=3, m_max=3, pair_max=2, points=2,
                    dependency_trials=10, seed=7)
    settings.update(overrides)
    return create_runner('running', **settings)


def test_suite_passes_on_running_index_set():
    runner = small_runner()
    summary = runner.execute_suite()
    assert summary['passed']
    assert [s['stage'] for s in summary['stages']] == [stage.value for stage in CheckStage]
    assert all(s['status'] == 'passed' for s in summary['stages'])
    assert summary['stages'][0]['cases'] == 9
    assert summary['D']['order'] == ["1", "2", "1[2]", "2[1]", "3"]
    assert "Overall: PASS" in runner.markdown()


def test_random_alphas_and_nested_index_set():
    runner = create_runner('nested', alpha_count=2, k_max=2, m_max=2, pair_max=2, points=1,
                           dependency_trials=5, seed=11)
    summary = runner.execute_suite()
    assert summary['passed']
    assert summary['stages'][0]['cases'] == 8


def test_stage_subset():
    runner = small_runner(stages=(CheckStage.STRUCTURE,))
    summary = runner.execute_suite()
    assert [s['stage'] for s in summary['stages']] == ['structure']
    assert summary['stages'][0]['cases'] == 6


def test_stage_errors_are_recorded():
    runner = small_runner(stages=(CheckStage.COCYCLE, CheckStage.STRUCTURE))

    def broken(result):
        raise RuntimeError("boom")

    runner._check_cocycle = broken
    summary = runner.execute_suite()
    assert not summary['passed']
    assert runner.stage_results[CheckStage.COCYCLE].status is StageStatus.ERROR
    assert summary['stages'][0]['error'] == "boom"
    assert runner.stage_results[CheckStage.STRUCTURE].status is StageStatus.PASSED
    assert "Overall: FAIL" in runner.markdown()


def test_same_seed_same_points():
    assert small_runner().random_point() == small_runner().random_point()


def test_default_scale_on_running_index_set():
    runner = create_runner('running')
    assert runner.config.alpha_count == 200
    assert runner.config.points == 100
    assert runner.config.dependency_trials == 1000
    summary = runner.execute_suite()
    assert summary['passed']
    cases = {s['stage']: s['cases'] for s in summary['stages']}
    assert cases['intertwining'] == 200 * 12 * 12
    assert cases['commutation'] == 100 * 8 * 8
    assert cases['cocycle'] == 100 * 8 * 8
    assert 0 < cases['dependency'] <= 1000
