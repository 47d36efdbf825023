"""
Bounded denotational semantics, used to cross-check the automaton pipeline.

Words are tuples alternating atoms and actions, starting and ending with an
atom. A word with continuation is a pair (word, continuation). Every set
computed here is cut at `bound` actions; loops and jump flattening are least
fixed points, reached by Kleene iteration over these finite sets.
"""
import logging
from typing import Dict, FrozenSet, Hashable, Iterable, List, Optional, Set, Tuple

from services.boolean import ContextSpace, denote
from services.continuations import RET, SHARP, Acc, Brk, Jmp, Ret, floor
from services.syntax import (
    Act, Alphabets, Assert, Assign, Break, Exp, Goto, If, Label, Return, Seq, While,
    collect_alphabets, defined_labels,
)

logger = logging.getLogger(__name__)

Word = Tuple[Hashable, ...]
WordC = Tuple[Word, object]
IndexedFamily = Dict[Hashable, FrozenSet[WordC]]
LabeledFamily = Dict[Hashable, IndexedFamily]


def action_count(word: Word) -> int:
    return len(word) // 2


def word_sort_key(word: Word):
    return (len(word), tuple(str(symbol) for symbol in word))


def sorted_words(words: Iterable[Word]) -> List[Word]:
    return sorted(words, key=word_sort_key)


def _by_first_atom(words: Iterable[WordC]) -> Dict[Hashable, List[WordC]]:
    index: Dict[Hashable, List[WordC]] = {}
    for word, cont in words:
        index.setdefault(word[0], []).append((word, cont))
    return index


def seq_families(G: IndexedFamily, H: IndexedFamily, bound: Optional[int] = None) -> IndexedFamily:
    """G then H: acc j traces of G continue with H_j on a matching atom,
    brk/jmp/ret traces of G are kept as they are."""
    h_index = {j: _by_first_atom(words) for j, words in H.items()}
    out: IndexedFamily = {}
    for i, words in G.items():
        result: Set[WordC] = set()
        for word, cont in words:
            if isinstance(cont, Acc):
                tails = h_index.get(cont.value, {}).get(word[-1], ())
                budget = None if bound is None else bound - action_count(word)
                for tail, cont2 in tails:
                    if budget is not None and action_count(tail) > budget:
                        continue
                    result.add((word + tail[1:], cont2))
            else:
                result.add((word, cont))
        out[i] = frozenset(result)
    return out


def identity_family(space: ContextSpace) -> IndexedFamily:
    return {v: frozenset(((a,), Acc(v)) for a in space.atoms()) for v in space.indicators}


class Oracle:
    """Continuation semantics of one program over fixed alphabets, up to a bound."""

    def __init__(self, alphabets: Alphabets, bound: int):
        if bound < 0:
            raise ValueError("bound must be non-negative")
        self.space = ContextSpace(alphabets)
        self.alphabets = alphabets
        self.bound = bound
        self._sharp: Dict[int, Tuple[Exp, IndexedFamily]] = {}
        self._labels: Dict[int, Tuple[Exp, FrozenSet[Hashable]]] = {}
        self.loop_rounds = 0

    # -- helpers

    def _empty(self) -> IndexedFamily:
        return {v: frozenset() for v in self.space.indicators}

    def _all_atoms(self, make) -> IndexedFamily:
        return {v: frozenset(((a,), make(v)) for a in self.space.atoms()) for v in self.space.indicators}

    def _filter(self, G: IndexedFamily, b, keep: bool) -> IndexedFamily:
        d = denote(b, self.space)
        index = self.space.index
        return {
            i: frozenset((w, c) for w, c in words if d.contains(index[i], w[0]) == keep)
            for i, words in G.items()
        }

    def _union(self, G: IndexedFamily, H: IndexedFamily) -> IndexedFamily:
        return {i: G[i] | H[i] for i in G}

    def _labels_in(self, e: Exp) -> FrozenSet[Hashable]:
        cached = self._labels.get(id(e))
        if cached is None:
            cached = (e, frozenset(defined_labels(e)))
            self._labels[id(e)] = cached
        return cached[1]

    # -- start semantics

    def sharp(self, e: Exp) -> IndexedFamily:
        cached = self._sharp.get(id(e))
        if cached is not None:
            return cached[1]
        result = self._compute_sharp(e)
        self._sharp[id(e)] = (e, result)
        return result

    def _compute_sharp(self, e: Exp) -> IndexedFamily:
        space = self.space
        if isinstance(e, Assert):
            d = denote(e.test, space)
            return {
                v: frozenset(((a,), Acc(v)) for a in space.atoms() if d.contains(space.index[v], a))
                for v in space.indicators
            }
        if isinstance(e, Act):
            if self.bound < 1:
                return self._empty()
            words = frozenset(
                (a, e.action, b) for a in space.atoms() for b in space.atoms()
            )
            return {v: frozenset((w, Acc(v)) for w in words) for v in space.indicators}
        if isinstance(e, Assign):
            return self._all_atoms(lambda v: Acc(e.value))
        if isinstance(e, Break):
            return self._all_atoms(Brk)
        if isinstance(e, Return):
            return self._all_atoms(lambda v: RET)
        if isinstance(e, Goto):
            return self._all_atoms(lambda v: Jmp(e.label, v))
        if isinstance(e, Label):
            return self._all_atoms(Acc)
        if isinstance(e, If):
            return self._union(
                self._filter(self.sharp(e.then), e.cond, True),
                self._filter(self.sharp(e.orelse), e.cond, False),
            )
        if isinstance(e, Seq):
            return seq_families(self.sharp(e.first), self.sharp(e.second), self.bound)
        if isinstance(e, While):
            return self._loop(e)
        raise TypeError(f"not a program term: {e!r}")

    def _loop(self, e: While) -> IndexedFamily:
        d = denote(e.cond, self.space)
        index = self.space.index
        body = self.sharp(e.body)
        exits = {
            v: frozenset(((a,), Acc(v)) for a in self.space.atoms() if not d.contains(index[v], a))
            for v in self.space.indicators
        }
        current = self._empty()
        while True:
            self.loop_rounds += 1
            stepped = seq_families(body, current, self.bound)
            nxt = {
                v: exits[v] | frozenset(
                    (w, floor(c)) for w, c in stepped[v] if d.contains(index[v], w[0])
                )
                for v in self.space.indicators
            }
            if nxt == current:
                return current
            current = nxt

    # -- semantics from a label

    def from_label(self, e: Exp, label: Hashable) -> IndexedFamily:
        if label not in self._labels_in(e):
            return self._empty()
        if isinstance(e, Label):
            return self._all_atoms(Acc)
        if isinstance(e, If):
            return self._union(self.from_label(e.then, label), self.from_label(e.orelse, label))
        if isinstance(e, Seq):
            return self._union(
                seq_families(self.from_label(e.first, label), self.sharp(e.second), self.bound),
                self.from_label(e.second, label),
            )
        if isinstance(e, While):
            stepped = seq_families(self.from_label(e.body, label), self.sharp(e), self.bound)
            return {v: frozenset((w, floor(c)) for w, c in words) for v, words in stepped.items()}
        return self._empty()

    def labeled(self, e: Exp) -> LabeledFamily:
        family: LabeledFamily = {SHARP: self.sharp(e)}
        for label in self.alphabets.labels:
            family[label] = self.from_label(e, label)
        return family


def cont_semantics(e: Exp, alphabets: Optional[Alphabets] = None, bound: int = 6) -> LabeledFamily:
    alphabets = alphabets or collect_alphabets(e, e)
    return Oracle(alphabets, bound).labeled(e)


def resolve(G: LabeledFamily, bound: Optional[int] = None) -> Dict[Tuple[Hashable, Hashable], FrozenSet[Word]]:
    """
    Flatten jumps: acc and ret words are complete; a word ending in
    jmp(l, j) on atom a continues with a flattened word of (l, j) starting at a.
    """
    base: Dict[Tuple[Hashable, Hashable], Set[Word]] = {}
    jumps: List[Tuple[Tuple[Hashable, Hashable], Word, Jmp]] = []
    for k, family in G.items():
        for i, words in family.items():
            done = base.setdefault((k, i), set())
            for word, cont in words:
                if isinstance(cont, (Acc, Ret)):
                    done.add(word)
                elif isinstance(cont, Jmp):
                    jumps.append(((k, i), word, cont))

    current = {key: frozenset(words) for key, words in base.items()}
    while True:
        index: Dict[Tuple[Hashable, Hashable], Dict[Hashable, List[Word]]] = {}
        for key, words in current.items():
            by_atom: Dict[Hashable, List[Word]] = {}
            for w in words:
                by_atom.setdefault(w[0], []).append(w)
            index[key] = by_atom

        nxt = {key: set(words) for key, words in base.items()}
        for key, word, cont in jumps:
            tails = index.get((cont.label, cont.value), {}).get(word[-1], ())
            for tail in tails:
                if bound is not None and action_count(word) + action_count(tail) > bound:
                    continue
                nxt[key].add(word + tail[1:])
        frozen = {key: frozenset(words) for key, words in nxt.items()}
        if frozen == current:
            return current
        current = frozen


def trace_language(e: Exp, value: Hashable, bound: int, alphabets: Optional[Alphabets] = None) -> FrozenSet[Word]:
    alphabets = alphabets or collect_alphabets(e, e)
    flattened = resolve(cont_semantics(e, alphabets, bound), bound)
    return flattened.get((SHARP, value), frozenset())


def trace_languages(e: Exp, alphabets: Alphabets, bound: int) -> Dict[Hashable, FrozenSet[Word]]:
    """trace_language for every indicator value, sharing one computation."""
    flattened = resolve(cont_semantics(e, alphabets, bound), bound)
    return {v: flattened.get((SHARP, v), frozenset()) for v in alphabets.indicators}
