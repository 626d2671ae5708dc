#!/usr/bin/env python3
"""
Tests for the genpoly-lab command line: outputs and exit codes
"""

import sys
import os
sys.path.insert(0, os.path.join(os.path.dirname(__file__), 'src'))

import json
import logging

import pytest

from cli import EXIT_DATA, EXIT_NOINPUT, EXIT_OK, EXIT_PREMISE, EXIT_USAGE, run
from utils.config import config


@pytest.fixture(autouse=True)
def in_tmp(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv('GENPOLY_MAX_BITS', raising=False)
    return tmp_path


def output_of(capsys, argv, expected_code=EXIT_OK):
    code = run(argv)
    captured = capsys.readouterr()
    assert code == expected_code, captured.err
    return captured.out


def test_gp_eval(capsys):
    assert output_of(capsys, ['gp', 'eval', '--expr', 'frac(n/3)', '--n', '7']).strip() == "1/3"
    assert output_of(capsys, ['gp', 'eval', '--expr', 'x_1*x_2^2', '--point', '2,3']).strip() == "18"
    assert "inexact" in output_of(capsys, ['gp', 'eval', '--expr', 'sqrt(2)', '--decimal', '5'])


def test_gp_indicator_check(capsys):
    data = json.loads(output_of(capsys, ['gp', 'indicator', '--expr', 'n - 5', '--check', '20']))
    assert data['kind'] == 'ge0'
    assert data['check'] == {'range': [1, 20], 'mismatches': []}


def test_usage_errors(capsys):
    assert run(['nonsense']) == EXIT_USAGE
    assert run(['gp', 'eval']) == EXIT_USAGE
    assert run(['gp', 'indicator', '--expr', 'n', '--kind', 'interval']) == EXIT_USAGE
    assert run(['timesk', 'orbit', '--D', 'single', '--k', '2', '--steps', '3']) == EXIT_USAGE


def test_data_errors(capsys):
    assert run(['gp', 'eval', '--expr', 'frac(']) == EXIT_DATA
    assert run(['bk', 'info', '--D', '1[2']) == EXIT_DATA
    assert run(['ideal', 'fit', '--from-file', 'missing.csv']) == EXIT_NOINPUT


def test_bk_info(capsys):
    data = json.loads(output_of(capsys, ['bk', 'info', '--D', 'running']))
    assert data['order'] == ["1", "2", "1[2]", "2[1]", "3"]
    assert data['complexity_vector'] == [3, 2]
    assert data['below']['1[2]'] == ["1"]


def test_timesk_check(capsys):
    out = output_of(capsys, ['timesk', 'check', '--alpha', '1/3,1/5,1/7', '--k', '2', '--m', '2',
                             '--pair-max', '2', '--points', '1', '--trials', '5'])
    assert "intertwining: PASS (4 cases)" in out
    assert "Overall: PASS" in out


def test_timesk_build(capsys):
    data = json.loads(output_of(capsys, ['timesk', 'build', '--D', 'running', '--k', '2',
                                         '--x', '1/3,1/5,1/15,1/15,1/7']))
    assert data['image'] == ["2/3", "2/5", "4/15", "4/15", "4/7"]
    assert data['violations'] == []


def test_orbit_run_hit_mask(capsys):
    out = output_of(capsys, ['orbit', 'run', '--x', '1/7', '--k', '2', '--steps', '6', '--S', 'x_1 > 1/2'])
    rows = [line.strip() for line in out.strip().splitlines()]
    assert rows[0] == "n,hit"
    assert [row for row in rows[1:] if row.endswith(',1')] == ["2,1", "5,1"]


def test_orbit_thm_a_premise(capsys):
    argv = ['orbit', 'thmA', '--D', 'single', '--alpha', '1/3', '--k', '2', '--mmax', '10',
            '--n-window', '1,3', '--zero-set', 'false']
    assert run(argv) == EXIT_PREMISE
    capsys.readouterr()
    report = json.loads(output_of(capsys, argv + ['--skip-premise'], expected_code=EXIT_PREMISE))
    assert report['premise_check']['skipped']
    assert report['multipliers'] == []


def test_orbit_thm_a_report(capsys, in_tmp):
    target = in_tmp / 'reports' / 'thm_a.json'
    output_of(capsys, ['orbit', 'thmA', '--D', 'single', '--alpha', '1/3', '--k', '2', '--mmax', '20',
                       '--n-window', '2,2', '--zero-expr', 'x_1 - 1/3', '--verify', '--output', str(target)])
    report = json.loads(target.read_text(encoding='utf-8'))
    assert [entry['m'] for entry in report['multipliers']] == [1, 7, 13, 19]
    assert report['precision']['reverified']


def test_density(capsys):
    data = json.loads(output_of(capsys, ['density', '--progression', '3,0', '--N', '3000']))
    assert data['natural'] == "1/3"
    assert data['count'] == 1000


def test_semialg_member(capsys):
    data = json.loads(output_of(capsys, ['semialg', 'member', '--d', '2', '--S', 'x_1^2 + x_2^2 < 1',
                                         '--point', '1/2,1/2']))
    assert data['member'] is True
    assert data['complexity'] == 2


def test_lie_diag(capsys):
    entries = json.dumps({"1[2]": {"1": "5"}})
    data = json.loads(output_of(capsys, ["lie", "diag", "--D", "1[2]", "--scale", "3", "--entries", entries]))
    assert data["verified"]
    assert data["diagonal"] == ["3", "3", "9"]


def test_gp_eval_products(capsys):
    assert output_of(capsys, ['gp', 'eval', '--expr', '2*n', '--n', '7']).strip() == "14"
    assert output_of(capsys, ['gp', 'eval', '--expr', 'floor(sqrt(2)*n)', '--n', '10']).strip() == "14"
    assert run(['gp', 'eval', '--expr', 'n/0', '--n', '1']) == EXIT_DATA


def test_ideal_fit_from_orbit(capsys, in_tmp):
    target = in_tmp / 'ideal.json'
    output_of(capsys, ['ideal', 'fit', '--x', '1/7', '--k', '2', '--steps', '6', '--degree', '3',
                       '--output', str(target)])
    data = json.loads(target.read_text(encoding='utf-8'))
    assert len(data['polynomials']) == 1


def test_debug_setting_lowers_log_level(capsys, monkeypatch):
    root = logging.getLogger()
    level = root.level
    monkeypatch.setitem(config._config['app'], 'debug', True)
    try:
        output_of(capsys, ['bk', 'info', '--D', 'single'])
        assert root.level == logging.DEBUG
    finally:
        root.setLevel(level)
