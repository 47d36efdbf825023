import time

import pytest

from programs import load_fixture
from services.driver import equiv_sources


def compare(a, b, **kwargs):
    started = time.perf_counter()
    comparison = equiv_sources(load_fixture(a), load_fixture(b), **kwargs)
    return comparison, time.perf_counter() - started


@pytest.mark.parametrize('other', ['pollard_rho_ghidra.c', 'pollard_rho_calipso.c'])
def test_decompiler_output_matches_blinded_source(other):
    comparison, elapsed = compare('pollard_rho_blinded.c', other)
    assert comparison.verdict
    assert list(comparison.reports) == ['pollard_rho']
    assert elapsed < 1.0


@pytest.mark.parametrize('mutant', ['pollard_rho_ghidra_mutant.c', 'pollard_rho_calipso_mutant.c'])
def test_single_edit_mutant_is_caught(mutant):
    comparison, _ = compare('pollard_rho_blinded.c', mutant)
    assert not comparison.verdict
    report = comparison.reports['pollard_rho']
    _, verdict = report.first_counterexample()
    assert verdict.witness is not None
    assert verdict.witness[:len(verdict.counterexample)] == verdict.counterexample


def test_goto_and_break_fixtures_have_the_same_traces():
    comparison, _ = compare('prog1.c', 'prog2.c')
    assert comparison.verdict


def test_indicator_fixture_is_detected():
    comparison, _ = compare('prog1.c', 'prog3.c')
    assert comparison.verdict
    indicators = comparison.reports['prog'].alphabets.to_dict()['indicators']
    assert indicators == ['1', '0', '2', '*']


def test_factored_assignment():
    comparison, elapsed = compare('factor_out.c', 'factor_in.c')
    assert comparison.verdict
    assert elapsed < 1.0


def test_assignment_seen_by_later_guard():
    comparison, _ = compare('assign_set.c', 'assign_clear.c')
    assert not comparison.verdict
    shown = comparison.to_dict()['functions']['check']['per_indicator']
    assert all(not row['equivalent'] for row in shown.values())
