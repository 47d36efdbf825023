"""
Full-size property suites over random programs. Reduced versions of each
run by default in test_driver and test_thompson; these need --runslow.
"""
import itertools
import random
import time

import pytest

from services.boolean import ContextSpace
from services.driver import ProgramLimits, crosscheck, equiv, preserving_rewrite, random_program, round_trip
from services.oracle import trace_languages
from services.syntax import (
    Act, Assert, Goto, Prim, While, collect_alphabets, count_actions, iter_exp, sequence, size,
)
from services.thompson import thompson

SAMPLES = 500
BOUND = 6

pytestmark = pytest.mark.slow


def test_pipeline_matches_denotation():
    limits = ProgramLimits(max_nodes=15, tests=2, indicators=3, labels=2)
    started = time.perf_counter()
    failures = [seed for seed in range(SAMPLES)
                if not crosscheck(random_program(seed, limits), BOUND).agree]
    assert failures == []
    assert time.perf_counter() - started < 60


def test_thompson_states_are_actions():
    for seed in range(SAMPLES):
        e = random_program(seed)
        alphabets = collect_alphabets(e, e)
        A = thompson(e, ContextSpace(alphabets))
        assert A.state_count == count_actions(e) <= size(e), seed


def test_samples_cover_jumps_and_loops():
    gotos = loops = 0
    for seed in range(SAMPLES):
        nodes = list(iter_exp(random_program(seed)))
        assert len(nodes) > 1, seed
        gotos += any(isinstance(node, Goto) for node in nodes)
        loops += any(isinstance(node, While) for node in nodes)
    assert gotos >= 0.3 * SAMPLES
    assert loops >= 0.4 * SAMPLES


def test_rewritten_programs_are_equivalent():
    for seed in range(SAMPLES):
        rng = random.Random(seed)
        e = random_program(seed)
        f = e
        for _ in range(rng.randint(1, 4)):
            f = preserving_rewrite(f, rng)
        assert equiv(e, f).verdict, seed


def _differing_pairs(count):
    """Independent program pairs whose bounded trace languages differ somewhere."""
    found = 0
    for seed in itertools.count():
        e, f = random_program(seed), random_program(seed + 100_000)
        alphabets = collect_alphabets(e, f)
        if trace_languages(e, alphabets, BOUND) != trace_languages(f, alphabets, BOUND):
            yield seed, e, f
            found += 1
            if found == count:
                return


def test_differing_programs_are_inequivalent():
    for seed, e, f in _differing_pairs(SAMPLES):
        assert not equiv(e, f).verdict, seed


def test_unused_indicator_value_changes_nothing():
    for seed in range(100):
        rng = random.Random(seed)
        e = random_program(seed)
        f = preserving_rewrite(e, rng) if rng.random() < 0.5 else random_program(seed + 100_000)
        widened = collect_alphabets(e, f).with_indicator('unused')
        assert equiv(e, f).verdict == equiv(e, f, widened).verdict, seed


def test_single_loop_round_trip():
    for seed in range(100):
        assert round_trip(random_program(seed)).verdict, seed


def _chain(n):
    return sequence([Act(f"p{k % 8}") for k in range(n)] + [Assert(Prim('t'))])


def test_straight_line_scaling():
    timings = {}
    for n in (10_000, 20_000):
        e = _chain(n)
        started = time.perf_counter()
        report = equiv(e, e)
        timings[n] = time.perf_counter() - started
        assert report.verdict
        counts = report.state_counts
        assert counts['unions'] <= counts['lowered_e'] + counts['lowered_f']
    assert timings[10_000] < 5
    assert timings[20_000] <= 3 * max(timings[10_000], 0.05)
