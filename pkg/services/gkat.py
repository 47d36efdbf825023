"""
GKAT automaton semantics and equivalence.

Equivalence is language equivalence. Both automata are first normalized
(steps into dead states become rejections), after which bisimilarity
coincides with language equality and is decided with a union-find
in the style of Hopcroft and Karp.
"""
import logging
from collections import deque
from dataclasses import dataclass
from typing import Any, Callable, Dict, FrozenSet, Hashable, List, Optional, Set, Tuple

from services.automata import ACCEPT, REJECT, GkatAutomaton, GkatStep, GkatTransition, Word
from services.errors import AlphabetMismatch
from services.union_find import UnionFind

logger = logging.getLogger(__name__)


def format_word(word: Word, show_atom: Optional[Callable[[int], str]] = None) -> str:
    show_atom = show_atom or (lambda a: f"α{a}")
    parts = []
    for k, symbol in enumerate(word):
        parts.append(show_atom(symbol) if k % 2 == 0 else str(symbol))
    return " ".join(parts)


def describe_transition(t: GkatTransition) -> str:
    if t is ACCEPT:
        return "accepts"
    if t is REJECT:
        return "rejects"
    return f"executes {t.action}"


@dataclass
class EquivVerdict:
    equivalent: bool
    counterexample: Optional[Word] = None
    witness: Optional[Word] = None
    accepted_by: Optional[int] = None
    description: str = ""
    union_count: int = 0

    def to_dict(self, show_atom: Optional[Callable[[int], str]] = None) -> Dict[str, Any]:
        return {
            'equivalent': self.equivalent,
            'counterexample': format_word(self.counterexample, show_atom) if self.counterexample else None,
            'witness': format_word(self.witness, show_atom) if self.witness else None,
            'accepted_by': self.accepted_by,
            'description': self.description,
            'union_count': self.union_count,
        }


# ---------------------------------------------------------------- dead states

def dead_states(A: GkatAutomaton) -> Set[int]:
    """States from which no accepting entry is reachable."""
    predecessors: List[List[int]] = [[] for _ in A.states]
    live: Set[int] = set()
    for s, row in enumerate(A.states):
        for t in row:
            if t is ACCEPT:
                live.add(s)
            elif isinstance(t, GkatStep):
                predecessors[t.state].append(s)

    queue = deque(live)
    while queue:
        s = queue.popleft()
        for p in predecessors[s]:
            if p not in live:
                live.add(p)
                queue.append(p)
    return set(range(A.state_count)) - live


def normalize(A: GkatAutomaton) -> GkatAutomaton:
    dead = dead_states(A)
    if not dead:
        return A
    rows = tuple(
        tuple(REJECT if isinstance(t, GkatStep) and t.state in dead else t for t in row)
        for row in A.states
    )
    return GkatAutomaton(A.n_atoms, rows, A.start, A.names, A.alphabet)


def prune_unreachable(A: GkatAutomaton) -> GkatAutomaton:
    """Keep the states reachable from start, renumbered in BFS order."""
    order = [A.start]
    renumber = {A.start: 0}
    k = 0
    while k < len(order):
        for t in A.states[order[k]]:
            if isinstance(t, GkatStep) and t.state not in renumber:
                renumber[t.state] = len(order)
                order.append(t.state)
        k += 1
    rows = tuple(
        tuple(GkatStep(t.action, renumber[t.state]) if isinstance(t, GkatStep) else t
              for t in A.states[s])
        for s in order
    )
    names = tuple(A.name(s) for s in order) if A.names else ()
    return GkatAutomaton(A.n_atoms, rows, 0, names, A.alphabet)


# ---------------------------------------------------------------- language

def accepts(A: GkatAutomaton, word: Word) -> bool:
    if len(word) % 2 == 0:
        raise ValueError("a guarded word has an odd number of symbols")
    state = A.start
    for k in range(0, len(word) - 1, 2):
        t = A.states[state][word[k]]
        if not isinstance(t, GkatStep) or t.action != word[k + 1]:
            return False
        state = t.state
    return A.states[state][word[-1]] is ACCEPT


def enumerate_language(A: GkatAutomaton, bound: int, state: Optional[int] = None) -> FrozenSet[Word]:
    """Accepted guarded words with at most `bound` actions."""
    memo: Dict[Tuple[int, int], FrozenSet[Word]] = {}

    def words(s: int, budget: int) -> FrozenSet[Word]:
        key = (s, budget)
        if key in memo:
            return memo[key]
        out = set()
        for atom, t in enumerate(A.states[s]):
            if t is ACCEPT:
                out.add((atom,))
            elif isinstance(t, GkatStep) and budget > 0:
                for w in words(t.state, budget - 1):
                    out.add((atom, t.action) + w)
        memo[key] = frozenset(out)
        return memo[key]

    return words(A.start if state is None else state, bound)


def shortest_completion(A: GkatAutomaton, state: int) -> Optional[Word]:
    """Shortest accepted word starting at `state`, or None if it is dead."""
    parent: Dict[int, Tuple[int, int, Hashable]] = {}
    seen = {state}
    queue = deque([state])
    while queue:
        s = queue.popleft()
        for atom, t in enumerate(A.states[s]):
            if t is ACCEPT:
                tail: Word = (atom,)
                while s != state:
                    prev, a, p = parent[s]
                    tail = (a, p) + tail
                    s = prev
                return tail
        for atom, t in enumerate(A.states[s]):
            if isinstance(t, GkatStep) and t.state not in seen:
                seen.add(t.state)
                parent[t.state] = (s, atom, t.action)
                queue.append(t.state)
    return None


# ---------------------------------------------------------------- equivalence

def _check_alphabets(A0: GkatAutomaton, A1: GkatAutomaton) -> None:
    if A0.n_atoms != A1.n_atoms:
        raise AlphabetMismatch(f"atom spaces differ: {A0.n_atoms} vs {A1.n_atoms}")
    if A0.alphabet and A1.alphabet and set(A0.alphabet) != set(A1.alphabet):
        raise AlphabetMismatch(
            f"action alphabets differ: {sorted(map(str, A0.alphabet))} vs {sorted(map(str, A1.alphabet))}"
        )


def bisim_equiv(A0: GkatAutomaton, A1: GkatAutomaton) -> EquivVerdict:
    """
    Decide whether A0 and A1 accept the same guarded language.

    The worklist is FIFO, so the reported counterexample reaches the
    divergence along a shortest path.
    """
    _check_alphabets(A0, A1)
    N0, N1 = normalize(A0), normalize(A1)
    offset = N0.state_count
    uf = UnionFind(offset + N1.state_count)

    parent: Dict[Tuple[int, int], Tuple[Tuple[int, int], int, Hashable]] = {}
    root = (N0.start, N1.start)
    uf.union(N0.start, offset + N1.start)
    queue = deque([root])

    while queue:
        pair = queue.popleft()
        s0, s1 = pair
        row0, row1 = N0.states[s0], N1.states[s1]
        for atom in range(N0.n_atoms):
            t0, t1 = row0[atom], row1[atom]
            if t0 is t1 and (t0 is ACCEPT or t0 is REJECT):
                continue
            if isinstance(t0, GkatStep) and isinstance(t1, GkatStep) and t0.action == t1.action:
                if uf.union(t0.state, offset + t1.state):
                    nxt = (t0.state, t1.state)
                    parent[nxt] = (pair, atom, t0.action)
                    queue.append(nxt)
                continue
            return _diverged(N0, N1, parent, root, pair, atom, t0, t1, uf.unions)

    logger.debug("bisimulation closed after %d unions", uf.unions)
    return EquivVerdict(True, union_count=uf.unions)


def _diverged(N0, N1, parent, root, pair, atom, t0, t1, unions) -> EquivVerdict:
    path: Word = ()
    node = pair
    while node != root:
        node, a, p = parent[node]
        path = (a, p) + path
    prefix = path + (atom,)

    if t0 is ACCEPT:
        witness, side = prefix, 0
    elif t1 is ACCEPT:
        witness, side = prefix, 1
    elif isinstance(t0, GkatStep):
        witness, side = prefix + (t0.action,) + shortest_completion(N0, t0.state), 0
    else:
        witness, side = prefix + (t1.action,) + shortest_completion(N1, t1.state), 1

    description = (
        f"after {format_word(prefix)}: first {describe_transition(t0)}, "
        f"second {describe_transition(t1)}"
    )
    return EquivVerdict(False, prefix, witness, side, description, unions)
