import pytest

from services.automata import (
    ACCEPT, REJECT, CfAutomaton, Continue, GkatStep, StartDynamics, StartState, Step,
    add_start_state, continuation_language, floor_dynamics, iterate, iterated_start, lower,
    resolve_jumps, uniform_continuation,
)
from services.boolean import ContextSpace, denote
from services.continuations import RET, Acc, Brk, Jmp
from services.gkat import enumerate_language
from services.syntax import (
    Act, Alphabets, And, Assign, BTrue, Goto, If, IndEq, Label, Prim, Seq, sequence,
)
from services.thompson import thompson

NO_TEST, T = 0, 1  # atoms over the single test t


def jump_example():
    """If t and x = 1 then x := 2; l: p else x := 1; goto l"""
    return If(
        And(Prim('t'), IndEq(1)),
        sequence([Assign(2), Label('l'), Act('p')]),
        Seq(Assign(1), Goto('l')),
    )


@pytest.fixture
def jump_space():
    return ContextSpace(Alphabets(actions=('p',), tests=('t',), labels=('l',), indicators=(1, 2)))


# ---------------------------------------------------------------- iteration

def test_iterate_follows_chain():
    h = {'a': Continue('b'), 'b': 'done'}
    it = iterate(h.get)
    assert it('a') == 'done'
    assert it.step_calls == 2


def test_iterate_self_loop_rejects():
    assert iterate({'a': Continue('a')}.get)('a') is REJECT


def test_iterate_two_cycle_rejects_both():
    it = iterate({'a': Continue('b'), 'b': Continue('a')}.get, domain=['a', 'b'])
    assert it('a') is REJECT
    assert it('b') is REJECT
    assert it.step_calls == 2


def test_iterate_steps_each_value_once():
    h = {k: Continue(k + 1) for k in range(50)}
    h[50] = 'end'
    it = iterate(h.get, domain=range(51))
    assert all(it(k) == 'end' for k in range(51))
    assert it.step_calls == 51


# ---------------------------------------------------------------- dynamics operations

@pytest.fixture
def two_values():
    return ContextSpace(Alphabets(indicators=(1, 2)))


def test_uniform_continuation(two_values):
    h1 = (Acc(2), Brk(1))
    h2 = (RET, Step('p', 0, 1))
    assert uniform_continuation(h1, h2, two_values) == (Step('p', 0, 1), Brk(1))
    assert uniform_continuation((REJECT, REJECT), h2, two_values) == (REJECT, REJECT)


def test_uniform_continuation_associates_without_acc_chains(two_values):
    h1 = (Acc(2), Acc(1))
    h2 = (Jmp('l', 1), Step('q', 0, 2))
    h3 = (RET, REJECT)
    left = uniform_continuation(uniform_continuation(h1, h2, two_values), h3, two_values)
    right = uniform_continuation(h1, uniform_continuation(h2, h3, two_values), two_values)
    assert left == right


def test_floor_dynamics():
    h = (Brk(2), RET, Jmp('l', 1), Step('p', 0, 1), REJECT, Acc(3))
    assert floor_dynamics(h) == (Acc(2), RET, Jmp('l', 1), Step('p', 0, 1), REJECT, Acc(3))


def test_iterated_start_loop_example():
    space = ContextSpace(Alphabets(indicators=(0, 1, 2)))
    body_start = (Acc(1), Brk(1), Acc(2))
    h = iterated_start(body_start, denote(BTrue(), space), space)
    assert h[space.slot(0, 0)] == Brk(1)
    assert h[space.slot(1, 0)] == Brk(1)
    assert h[space.slot(2, 0)] is REJECT


def test_iterated_start_false_guard_accepts():
    space = ContextSpace(Alphabets(tests=('t',), indicators=(0, 1)))
    body_start = (Acc(1),) * space.size
    h = iterated_start(body_start, denote(Prim('t'), space), space)
    assert h[space.slot(0, NO_TEST)] == Acc(0)
    assert h[space.slot(0, T)] is REJECT  # 0 -> 1 -> 1 with t holding


def test_resolve_jumps_chases_and_cuts_cycles(two_values):
    jump_map = {
        'l': (Jmp('m', 2), Jmp('m', 1)),
        'm': (Jmp('l', 2), Acc(1)),
        'n': (Step('p', 0, 2), RET),
    }
    resolved = resolve_jumps(jump_map, two_values)
    assert resolved['l'] == (Acc(1), REJECT)
    assert resolved['m'] == (REJECT, Acc(1))
    assert resolved['n'] == jump_map['n']
    assert not any(isinstance(entry, Jmp) for row in resolved.values() for entry in row)


def test_resolve_jumps_unknown_label_rejects(two_values):
    assert resolve_jumps({'l': (Jmp('gone', 1), RET)}, two_values)['l'] == (REJECT, RET)


def test_add_start_state(jump_space):
    A = thompson(jump_example(), jump_space)
    B = add_start_state(A)
    assert B.state_count == A.state_count + 1
    assert B.start == StartState(A.state_count)
    assert B.states[-1] == A.start.dynamics
    with pytest.raises(ValueError):
        add_start_state(B)


# ---------------------------------------------------------------- lowering

def test_lowering_table(jump_space):
    A = add_start_state(thompson(jump_example(), jump_space))
    G = lower(A, 1)
    # (s, 1), (s, 2), (start, 1), (start, 2)
    assert G.start == 2
    assert G.states == (
        (ACCEPT, ACCEPT),
        (ACCEPT, ACCEPT),
        (GkatStep('p', 0), GkatStep('p', 1)),
        (GkatStep('p', 0), GkatStep('p', 0)),
    )
    assert G.names == ('(s0, 1)', '(s0, 2)', '(ŝ, 1)', '(ŝ, 2)')


def test_lowered_language(jump_space):
    G = lower(add_start_state(thompson(jump_example(), jump_space)), 1)
    assert enumerate_language(G, 1) == {
        (T, 'p', NO_TEST), (T, 'p', T), (NO_TEST, 'p', NO_TEST), (NO_TEST, 'p', T),
    }


def test_continuation_semantics_of_jump_example(jump_space):
    A = thompson(jump_example(), jump_space)
    family = continuation_language(A, A.start_dynamics(), 1)
    assert family[1] == {
        ((T, 'p', NO_TEST), Acc(2)), ((T, 'p', T), Acc(2)), ((NO_TEST,), Jmp('l', 1)),
    }
    assert family[2] == {((NO_TEST,), Jmp('l', 1)), ((T,), Jmp('l', 1))}
    from_label = continuation_language(A, A.jump('l'), 1)
    assert from_label[2] == {((a, 'p', b), Acc(2)) for a in (NO_TEST, T) for b in (NO_TEST, T)}


def test_lower_discharges_top_level_continuations():
    space = ContextSpace(Alphabets(tests=('t',)))
    A = CfAutomaton(space, ((Brk(space.indicators[0]), RET),), {}, StartState(0))
    assert lower(A, space.indicators[0]).states == ((REJECT, ACCEPT),)


def test_lower_needs_start_state(jump_space):
    A = thompson(jump_example(), jump_space)
    assert isinstance(A.start, StartDynamics)
    with pytest.raises(ValueError):
        lower(A, 1)
