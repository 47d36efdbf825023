"""
Thompson construction: compile a valid program into a CF-GKAT automaton with start dynamics.
"""
import logging
from dataclasses import dataclass
from typing import Dict, Hashable, List, Union

from services.automata import (
    REJECT, CfAutomaton, Dynamics, StartDynamics, Step, constant_row, floor_dynamics,
    iterated_start, uniform_continuation,
)
from services.boolean import ContextSpace, denote
from services.continuations import RET, Acc, Brk, Jmp
from services.errors import UnknownId
from services.syntax import (
    Act, Alphabets, Assert, Assign, Break, Exp, Goto, If, Label, Return, Seq, While,
    iter_exp, require_valid,
)

logger = logging.getLogger(__name__)


@dataclass
class _Fragment:
    # states are numbered base .. base + len(states) - 1 in the final arena
    states: List[Dynamics]
    jumps: Dict[Hashable, Dynamics]
    start: Dynamics


def contains_label(e: Exp, label: Hashable) -> bool:
    """True when Label(label) occurs in e. A goto is not a definition."""
    return any(isinstance(node, Label) and node.label == label for node in iter_exp(e))


class ThompsonBuilder:
    def __init__(self, space: ContextSpace):
        self.space = space
        self.accept_row = constant_row(space, lambda v, a: Acc(v))
        self._denotations = {}

    def guard(self, b):
        d = self._denotations.get(b)
        if d is None:
            d = denote(b, self.space)
            self._denotations[b] = d
        return d

    def build(self, e: Exp, base: int = 0) -> _Fragment:
        space = self.space

        if isinstance(e, Act):
            start = constant_row(space, lambda v, a: Step(e.action, base, v))
            return _Fragment([self.accept_row], {}, start)

        if isinstance(e, Assert):
            d = self.guard(e.test)
            start = tuple(
                Acc(v) if d.contains(space.index[v], a) else REJECT
                for v, a in space.pairs()
            )
            return _Fragment([], {}, start)

        if isinstance(e, Assign):
            if e.value not in space.index:
                raise UnknownId(f"indicator value '{e.value}' is not in the indicator alphabet", e.loc)
            target = Acc(e.value)
            return _Fragment([], {}, (target,) * space.size)

        if isinstance(e, Break):
            return _Fragment([], {}, constant_row(space, lambda v, a: Brk(v)))

        if isinstance(e, Return):
            return _Fragment([], {}, (RET,) * space.size)

        if isinstance(e, Goto):
            return _Fragment([], {}, constant_row(space, lambda v, a: Jmp(e.label, v)))

        if isinstance(e, Label):
            return _Fragment([], {e.label: self.accept_row}, self.accept_row)

        if isinstance(e, If):
            left = self.build(e.then, base)
            right = self.build(e.orelse, base + len(left.states))
            d = self.guard(e.cond)
            n = space.n_atoms
            start = tuple(
                left.start[slot] if d.contains(slot // n, slot % n) else right.start[slot]
                for slot in range(space.size)
            )
            jumps = dict(left.jumps)
            jumps.update(right.jumps)
            return _Fragment(left.states + right.states, jumps, start)

        if isinstance(e, Seq):
            first = self.build(e.first, base)
            second = self.build(e.second, base + len(first.states))
            glue = second.start
            states = [uniform_continuation(row, glue, space) for row in first.states]
            states.extend(second.states)
            jumps = {label: uniform_continuation(row, glue, space) for label, row in first.jumps.items()}
            jumps.update(second.jumps)
            return _Fragment(states, jumps, uniform_continuation(first.start, glue, space))

        if isinstance(e, While):
            body = self.build(e.body, base)
            head = iterated_start(body.start, self.guard(e.cond), space)
            states = [floor_dynamics(uniform_continuation(row, head, space)) for row in body.states]
            jumps = {
                label: floor_dynamics(uniform_continuation(row, head, space))
                for label, row in body.jumps.items()
            }
            return _Fragment(states, jumps, floor_dynamics(head))

        raise TypeError(f"not a program term: {e!r}")


def thompson(e: Exp, alphabets: Union[Alphabets, ContextSpace]) -> CfAutomaton:
    """
    Build the Thompson automaton of e.

    Args:
        e: a valid program (each label defined once)
        alphabets: alphabets covering e, or a prepared context space

    Returns:
        CfAutomaton with start dynamics; one state per action occurrence
    """
    require_valid(e)
    space = alphabets if isinstance(alphabets, ContextSpace) else ContextSpace(alphabets)
    fragment = ThompsonBuilder(space).build(e)
    logger.debug("thompson automaton: %d states, %d labels", len(fragment.states), len(fragment.jumps))
    return CfAutomaton(space, tuple(fragment.states), fragment.jumps, StartDynamics(fragment.start))
