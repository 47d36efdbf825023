"""
Atoms and the Boolean semantics of tests over indicator/atom pairs.

An atom is an int whose bit k is set when the k-th primitive test holds.
A denotation keeps one int bitset per indicator value, bit a set when
(value, atom a) satisfies the test.
"""
from dataclasses import dataclass, field
from typing import Dict, Hashable, Iterator, List, Tuple, Union

from services.errors import TooManyTests, UnknownId
from services.syntax import Alphabets, And, BExp, BFalse, BTrue, IndEq, Not, Or, Prim

DEFAULT_MAX_TESTS = 16


class ContextSpace:
    """The finite set I x At with a dense slot numbering."""

    def __init__(self, alphabets: Alphabets, max_tests: int = DEFAULT_MAX_TESTS):
        if len(alphabets.tests) > max_tests:
            raise TooManyTests(len(alphabets.tests), max_tests)
        self.alphabets = alphabets
        self.n_atoms = alphabets.atom_count
        self.indicators = alphabets.indicators
        self.index = alphabets.indicator_index
        self.size = len(self.indicators) * self.n_atoms
        self.full_row = (1 << self.n_atoms) - 1

    def slot(self, value: Hashable, atom: int) -> int:
        return self.index[value] * self.n_atoms + atom

    def unslot(self, slot: int) -> Tuple[Hashable, int]:
        k, atom = divmod(slot, self.n_atoms)
        return self.indicators[k], atom

    def atoms(self) -> range:
        return range(self.n_atoms)

    def pairs(self) -> Iterator[Tuple[Hashable, int]]:
        for value in self.indicators:
            for atom in range(self.n_atoms):
                yield value, atom

    def atom_tests(self, atom: int) -> Tuple[Hashable, ...]:
        tests = self.alphabets.tests
        return tuple(tests[k] for k in range(len(tests)) if atom >> k & 1)

    def show_atom(self, atom: int) -> str:
        return "{" + ",".join(str(t) for t in self.atom_tests(atom)) + "}"


@dataclass(frozen=True)
class TestDenotation:
    __test__ = False

    rows: Tuple[int, ...]
    n_atoms: int
    index: Dict[Hashable, int] = field(default_factory=dict, compare=False, hash=False, repr=False)

    def contains(self, k: int, atom: int) -> bool:
        return bool(self.rows[k] >> atom & 1)

    def pairs(self, space: ContextSpace) -> List[Tuple[Hashable, int]]:
        return [(v, a) for v, a in space.pairs() if self.contains(space.index[v], a)]

    def is_empty(self) -> bool:
        return not any(self.rows)


def _prim_row(space: ContextSpace, test: Hashable) -> int:
    try:
        bit = space.alphabets.test_index[test]
    except KeyError:
        raise UnknownId(f"test '{test}' is not in the test alphabet")
    row = 0
    for atom in range(space.n_atoms):
        if atom >> bit & 1:
            row |= 1 << atom
    return row


def denote(b: BExp, space: Union[ContextSpace, Alphabets]) -> TestDenotation:
    """Structural recursion over b, evaluated with an explicit stack."""
    if isinstance(space, Alphabets):
        space = ContextSpace(space)
    full = space.full_row
    n = len(space.indicators)
    results: List[Tuple[int, ...]] = []
    stack: List[Tuple[BExp, bool]] = [(b, False)]
    while stack:
        node, expanded = stack.pop()
        if isinstance(node, BFalse):
            results.append((0,) * n)
        elif isinstance(node, BTrue):
            results.append((full,) * n)
        elif isinstance(node, Prim):
            row = _prim_row(space, node.test)
            results.append((row,) * n)
        elif isinstance(node, IndEq):
            if node.value not in space.index:
                raise UnknownId(f"indicator value '{node.value}' is not in the indicator alphabet", node.loc)
            k = space.index[node.value]
            results.append(tuple(full if j == k else 0 for j in range(n)))
        elif isinstance(node, Not):
            if not expanded:
                stack.append((node, True))
                stack.append((node.operand, False))
            else:
                inner = results.pop()
                results.append(tuple(full & ~r for r in inner))
        elif isinstance(node, (And, Or)):
            if not expanded:
                stack.append((node, True))
                stack.append((node.right, False))
                stack.append((node.left, False))
            else:
                right = results.pop()
                left = results.pop()
                if isinstance(node, And):
                    results.append(tuple(l & r for l, r in zip(left, right)))
                else:
                    results.append(tuple(l | r for l, r in zip(left, right)))
        else:
            raise TypeError(f"not a test: {node!r}")
    return TestDenotation(results.pop(), space.n_atoms, space.index)


def holds(d: TestDenotation, value: Hashable, atom: int) -> bool:
    return d.contains(d.index[value], atom)
