import random

import pytest

from services.automata import ACCEPT, REJECT, GkatAutomaton, GkatStep
from services.errors import AlphabetMismatch
from services.gkat import (
    accepts, bisim_equiv, dead_states, enumerate_language, format_word, normalize,
    prune_unreachable, shortest_completion,
)


def automaton(*rows, start=0, n_atoms=2, alphabet=('p', 'q')):
    return GkatAutomaton(n_atoms, tuple(tuple(r) for r in rows), start, alphabet=alphabet)


ACCEPT_ALL = automaton([ACCEPT, ACCEPT])
REJECT_ALL = automaton([REJECT, REJECT])
SPIN = automaton([GkatStep('p', 0), GkatStep('p', 0)])


def random_automaton(rng, n_states, actions=('p', 'q')):
    rows = []
    for _ in range(n_states):
        row = []
        for _ in range(2):
            roll = rng.random()
            if roll < 0.2:
                row.append(REJECT)
            elif roll < 0.45:
                row.append(ACCEPT)
            else:
                row.append(GkatStep(rng.choice(actions), rng.randrange(n_states)))
        rows.append(row)
    return automaton(*rows)


def renumbered(A, rng):
    order = list(range(A.state_count))
    rng.shuffle(order)
    new_id = {old: new for new, old in enumerate(order)}
    rows = [None] * A.state_count
    for old, row in enumerate(A.states):
        rows[new_id[old]] = [GkatStep(t.action, new_id[t.state]) if isinstance(t, GkatStep) else t for t in row]
    return automaton(*rows, start=new_id[A.start])


# ---------------------------------------------------------------- dead states

def test_dead_states():
    A = automaton(
        [GkatStep('p', 1), GkatStep('q', 2)],
        [REJECT, REJECT],
        [GkatStep('p', 2), ACCEPT],
        [GkatStep('p', 3), GkatStep('q', 3)],
    )
    assert dead_states(A) == {1, 3}
    assert dead_states(SPIN) == {0}
    assert dead_states(ACCEPT_ALL) == set()


def test_normalize():
    assert normalize(SPIN).states == ((REJECT, REJECT),)
    assert normalize(ACCEPT_ALL) is ACCEPT_ALL
    A = automaton([GkatStep('p', 1), ACCEPT], [GkatStep('q', 1), REJECT])
    once = normalize(A)
    assert once.states == ((REJECT, ACCEPT), (REJECT, REJECT))
    assert normalize(once) == once


def test_prune_unreachable():
    A = automaton([ACCEPT, REJECT], [GkatStep('p', 2), ACCEPT], [GkatStep('q', 1), ACCEPT], start=1)
    pruned = prune_unreachable(A)
    assert pruned.state_count == 2
    assert pruned.start == 0
    assert pruned.states == ((GkatStep('p', 1), ACCEPT), (GkatStep('q', 0), ACCEPT))
    assert enumerate_language(pruned, 3) == enumerate_language(A, 3)


# ---------------------------------------------------------------- language

def test_enumerate_language():
    assert enumerate_language(ACCEPT_ALL, 0) == {(0,), (1,)}
    assert enumerate_language(REJECT_ALL, 4) == frozenset()
    assert enumerate_language(SPIN, 4) == frozenset()
    A = automaton([GkatStep('p', 1), REJECT], [ACCEPT, REJECT])
    assert enumerate_language(A, 0) == frozenset()
    assert enumerate_language(A, 1) == {(0, 'p', 0)}


def test_accepts():
    A = automaton([GkatStep('p', 1), REJECT], [ACCEPT, REJECT])
    assert accepts(A, (0, 'p', 0))
    assert not accepts(A, (0, 'q', 0))
    assert not accepts(A, (1,))
    with pytest.raises(ValueError):
        accepts(A, (0, 'p'))


def test_shortest_completion():
    A = automaton([GkatStep('p', 1), REJECT], [GkatStep('q', 2), REJECT], [REJECT, ACCEPT])
    assert shortest_completion(A, 0) == (0, 'p', 0, 'q', 1)
    assert shortest_completion(SPIN, 0) is None


def test_format_word():
    assert format_word((1, 'p', 0)) == 'α1 p α0'
    assert format_word((1, 'p', 0), lambda a: '{t}' if a else '{}') == '{t} p {}'


# ---------------------------------------------------------------- equivalence

def test_accept_all_against_reject_all():
    verdict = bisim_equiv(ACCEPT_ALL, REJECT_ALL)
    assert not verdict.equivalent
    assert verdict.counterexample == (0,)
    assert verdict.witness == (0,)
    assert verdict.accepted_by == 0
    assert 'first accepts, second rejects' in verdict.description


def test_unproductive_loop_equals_rejection():
    assert bisim_equiv(SPIN, REJECT_ALL).equivalent


def test_counterexample_follows_shared_prefix():
    A = automaton([GkatStep('p', 1), REJECT], [ACCEPT, GkatStep('q', 2)], [ACCEPT, ACCEPT])
    B = automaton([GkatStep('p', 1), REJECT], [ACCEPT, GkatStep('p', 2)], [ACCEPT, ACCEPT])
    verdict = bisim_equiv(A, B)
    assert not verdict.equivalent
    assert verdict.counterexample == (0, 'p', 1)
    assert verdict.witness == (0, 'p', 1, 'q', 0)
    assert verdict.to_dict()['counterexample'] == 'α0 p α1'


def test_atom_spaces_must_match():
    with pytest.raises(AlphabetMismatch):
        bisim_equiv(ACCEPT_ALL, automaton([ACCEPT], n_atoms=1))


def test_action_alphabets_must_match():
    with pytest.raises(AlphabetMismatch):
        bisim_equiv(ACCEPT_ALL, automaton([ACCEPT, ACCEPT], alphabet=('r',)))


@pytest.mark.parametrize('seed', range(60))
def test_agrees_with_enumeration(seed):
    rng = random.Random(seed)
    A = random_automaton(rng, rng.randint(1, 3))
    B = renumbered(A, rng) if seed % 3 == 0 else random_automaton(rng, rng.randint(1, 3))
    bound = 2 * (A.state_count + B.state_count)
    verdict = bisim_equiv(A, B)
    assert verdict.equivalent == (enumerate_language(A, bound) == enumerate_language(B, bound))
    assert verdict.union_count <= A.state_count + B.state_count
    assert bisim_equiv(B, A).equivalent == verdict.equivalent
    assert bisim_equiv(A, A).equivalent
    if not verdict.equivalent:
        first, second = (A, B) if verdict.accepted_by == 0 else (B, A)
        assert accepts(first, verdict.witness)
        assert not accepts(second, verdict.witness)


@pytest.mark.parametrize('seed', range(40))
def test_larger_automata_agree_with_enumeration(seed):
    rng = random.Random(1000 + seed)
    A = random_automaton(rng, rng.randint(4, 12))
    B = renumbered(A, rng) if seed % 4 == 0 else random_automaton(rng, rng.randint(4, 12))
    verdict = bisim_equiv(A, B)
    assert verdict.union_count <= A.state_count + B.state_count
    assert bisim_equiv(B, A).equivalent == verdict.equivalent
    if verdict.equivalent:
        assert enumerate_language(A, 8) == enumerate_language(B, 8)
    else:
        first, second = (A, B) if verdict.accepted_by == 0 else (B, A)
        assert accepts(first, verdict.witness)
        assert not accepts(second, verdict.witness)
        assert len(verdict.witness) // 2 <= 2 * (A.state_count + B.state_count)
