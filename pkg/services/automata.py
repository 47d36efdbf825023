"""
CF-GKAT dynamics and automata, iteration lifting, jump resolution and lowering to GKAT automata.

A dynamics is a dense tuple indexed by the slot of (indicator value, atom) in a
ContextSpace. Each entry is REJECT, a continuation, or a Step that performs an
action and moves to a state with a new indicator value.
"""
import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, FrozenSet, Hashable, Iterable, List, Optional, Set, Tuple, Union

from services.boolean import ContextSpace, TestDenotation
from services.continuations import Acc, Brk, Jmp, Ret, SHARP, floor

logger = logging.getLogger(__name__)


class _Reject:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return '⊥'

    def __reduce__(self):
        return (_Reject, ())


class _Accept:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return '⊤'

    def __reduce__(self):
        return (_Accept, ())


REJECT = _Reject()
ACCEPT = _Accept()


@dataclass(frozen=True)
class Step:
    action: Hashable
    state: int
    value: Hashable

    def __str__(self) -> str:
        return f"{self.action}, s{self.state}, {self.value}"


Entry = Union[_Reject, Acc, Brk, Ret, Jmp, Step]
Dynamics = Tuple[Entry, ...]


@dataclass(frozen=True)
class StartState:
    state: int


@dataclass(frozen=True)
class StartDynamics:
    dynamics: Dynamics


@dataclass(frozen=True, eq=False)
class CfAutomaton:
    space: ContextSpace
    states: Tuple[Dynamics, ...]
    jump_map: Dict[Hashable, Dynamics]
    start: Union[StartState, StartDynamics]

    @property
    def state_count(self) -> int:
        return len(self.states)

    def jump(self, label: Hashable) -> Dynamics:
        row = self.jump_map.get(label)
        return row if row is not None else reject_row(self.space)

    def start_dynamics(self) -> Dynamics:
        if isinstance(self.start, StartDynamics):
            return self.start.dynamics
        return self.states[self.start.state]


def reject_row(space: ContextSpace) -> Dynamics:
    return (REJECT,) * space.size


def constant_row(space: ContextSpace, make: Callable[[Hashable, int], Entry]) -> Dynamics:
    return tuple(make(value, atom) for value, atom in space.pairs())


# ---------------------------------------------------------------- iteration

@dataclass(frozen=True)
class Continue:
    """Iteration goes on from this value."""
    value: Any


_IN_PROGRESS = object()


class Iteration:
    """
    Lifts h: X -> X + reject + E to X -> reject + E by following Continue
    results until an exit value. Revisiting a value on the current chain
    means an unproductive cycle and yields REJECT. Results are memoized,
    so each x is stepped at most once over all queries.
    """

    def __init__(self, step: Callable[[Any], Any]):
        self.step = step
        self.memo: Dict[Any, Any] = {}
        self.step_calls = 0

    def __call__(self, x: Any) -> Any:
        path: List[Any] = []
        while True:
            known = self.memo.get(x)
            if known is _IN_PROGRESS:
                result = REJECT
                break
            if known is not None:
                result = known
                break
            self.memo[x] = _IN_PROGRESS
            path.append(x)
            self.step_calls += 1
            out = self.step(x)
            if isinstance(out, Continue):
                x = out.value
                continue
            result = out
            break
        for y in path:
            self.memo[y] = result
        return result

    def table(self, domain: Iterable[Any]) -> Dict[Any, Any]:
        return {x: self(x) for x in domain}


def iterate(h: Callable[[Any], Any], domain: Optional[Iterable[Any]] = None) -> Iteration:
    it = Iteration(h)
    if domain is not None:
        for x in domain:
            it(x)
    return it


# ---------------------------------------------------------------- dynamics operations

def resolve_jumps(jump_map: Dict[Hashable, Dynamics], space: ContextSpace) -> Dict[Hashable, Dynamics]:
    """Chase jmp continuations through the jump map. Jump cycles become REJECT."""
    n = space.n_atoms
    index = space.index

    def step(key):
        label, slot = key
        row = jump_map.get(label)
        if row is None:
            return REJECT
        entry = row[slot]
        if isinstance(entry, Jmp):
            return Continue((entry.label, index[entry.value] * n + slot % n))
        return entry

    it = Iteration(step)
    resolved = {
        label: tuple(it((label, slot)) for slot in range(space.size))
        for label in jump_map
    }
    logger.debug("resolved %d labels with %d steps", len(jump_map), it.step_calls)
    return resolved


def uniform_continuation(h1: Dynamics, h2: Dynamics, space: ContextSpace) -> Dynamics:
    """h1[h2]: every acc i' entry of h1 takes on h2's behaviour at (i', same atom)."""
    n = space.n_atoms
    index = space.index
    out = list(h1)
    for slot, entry in enumerate(h1):
        if isinstance(entry, Acc):
            out[slot] = h2[index[entry.value] * n + slot % n]
    return tuple(out)


def iterated_start(h: Dynamics, guard: TestDenotation, space: ContextSpace) -> Dynamics:
    """Repeat the loop body's start under the guard until it does something."""
    n = space.n_atoms
    index = space.index
    indicators = space.indicators

    def step(slot):
        k, atom = divmod(slot, n)
        if not guard.contains(k, atom):
            return Acc(indicators[k])
        entry = h[slot]
        if isinstance(entry, Acc):
            return Continue(index[entry.value] * n + atom)
        return entry

    it = Iteration(step)
    return tuple(it(slot) for slot in range(space.size))


def floor_dynamics(h: Dynamics) -> Dynamics:
    return tuple(floor(e) if isinstance(e, Brk) else e for e in h)


def add_start_state(A: CfAutomaton) -> CfAutomaton:
    if not isinstance(A.start, StartDynamics):
        raise ValueError("automaton already has a start state")
    states = A.states + (A.start.dynamics,)
    return CfAutomaton(A.space, states, dict(A.jump_map), StartState(len(states) - 1))


# ---------------------------------------------------------------- GKAT automata

@dataclass(frozen=True)
class GkatStep:
    action: Hashable
    state: int


GkatTransition = Union[_Reject, _Accept, GkatStep]


@dataclass(frozen=True)
class GkatAutomaton:
    n_atoms: int
    states: Tuple[Tuple[GkatTransition, ...], ...]
    start: int
    names: Tuple[str, ...] = field(default=(), compare=False)
    alphabet: Tuple[Hashable, ...] = field(default=(), compare=False)

    @property
    def state_count(self) -> int:
        return len(self.states)

    def name(self, state: int) -> str:
        if state < len(self.names):
            return self.names[state]
        return f"q{state}"

    def used_actions(self) -> Set[Hashable]:
        return {t.action for row in self.states for t in row if isinstance(t, GkatStep)}


def lower(A: CfAutomaton, start_value: Hashable,
          resolved: Optional[Dict[Hashable, Dynamics]] = None) -> GkatAutomaton:
    """
    Embed indicator values into states (S x I) and discharge continuations.

    Args:
        A: automaton with a start state
        start_value: initial indicator value
        resolved: precomputed resolve_jumps(A.jump_map) to share across calls

    Returns:
        GkatAutomaton whose state (s, i) has id s * |I| + index(i)
    """
    if not isinstance(A.start, StartState):
        raise ValueError("lower needs an automaton with a start state; call add_start_state first")
    space = A.space
    if resolved is None:
        resolved = resolve_jumps(A.jump_map, space)
    n = space.n_atoms
    width = len(space.indicators)
    index = space.index

    rows = []
    for row in A.states:
        for k in range(width):
            out = []
            for atom in range(n):
                entry = row[k * n + atom]
                if isinstance(entry, Jmp):
                    target = resolved.get(entry.label)
                    entry = REJECT if target is None else target[index[entry.value] * n + atom]
                if isinstance(entry, Step):
                    out.append(GkatStep(entry.action, entry.state * width + index[entry.value]))
                elif isinstance(entry, (Acc, Ret)):
                    out.append(ACCEPT)
                else:
                    # brk at top level and REJECT
                    out.append(REJECT)
            rows.append(tuple(out))

    names = tuple(
        f"({'ŝ' if s == A.start.state else f's{s}'}, {space.indicators[k]})"
        for s in range(len(A.states)) for k in range(width)
    )
    start = A.start.state * width + index[start_value]
    return GkatAutomaton(n, tuple(rows), start, names, space.alphabets.actions)


# ---------------------------------------------------------------- semantics

Word = Tuple[Hashable, ...]


def continuation_language(A: CfAutomaton, rho: Dynamics, bound: int) -> Dict[Hashable, FrozenSet[Tuple[Word, Any]]]:
    """
    Words with continuations of the dynamics rho, per starting indicator value,
    with at most `bound` actions. Words alternate atoms and actions.
    """
    space = A.space
    n = space.n_atoms
    index = space.index
    memo: Dict[Tuple[int, int, int], FrozenSet[Tuple[Word, Any]]] = {}

    def from_row(row: Dynamics, k: int, budget: int) -> FrozenSet[Tuple[Word, Any]]:
        out = set()
        for atom in range(n):
            entry = row[k * n + atom]
            if entry is REJECT:
                continue
            if isinstance(entry, Step):
                if budget == 0:
                    continue
                for word, cont in from_state(entry.state, index[entry.value], budget - 1):
                    out.add(((atom, entry.action) + word, cont))
            else:
                out.add(((atom,), entry))
        return frozenset(out)

    def from_state(state: int, k: int, budget: int) -> FrozenSet[Tuple[Word, Any]]:
        key = (state, k, budget)
        if key not in memo:
            memo[key] = from_row(A.states[state], k, budget)
        return memo[key]

    return {value: from_row(rho, k, bound) for k, value in enumerate(space.indicators)}


def labeled_semantics(A: CfAutomaton, bound: int, labels: Iterable[Hashable] = ()) -> Dict[Hashable, Dict]:
    """Start semantics under SHARP plus the semantics from each label."""
    family = {SHARP: continuation_language(A, A.start_dynamics(), bound)}
    for label in labels:
        family[label] = continuation_language(A, A.jump(label), bound)
    return family
