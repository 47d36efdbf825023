"""
Abstract syntax of tests and programs, validity checking and alphabet collection.

Programs are immutable trees of frozen dataclasses. Every node carries an
optional source location that takes no part in equality, so two trees parsed
from differently formatted text compare equal when their structure does.
"""
from dataclasses import dataclass, field
from typing import Any, Dict, Hashable, Iterator, List, Optional, Sequence, Tuple

from services.errors import InvalidProgram

Location = Optional[Tuple[int, int]]


def _loc() -> Any:
    return field(default=None, compare=False, repr=False)


class FreshIndicator:
    """The indicator value that occurs in neither program. Prints as '*'."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return '*'

    def __reduce__(self):
        return (FreshIndicator, ())


FRESH = FreshIndicator()


# ---------------------------------------------------------------- tests

class BExp:
    """Boolean test over primitive tests and the indicator variable."""


@dataclass(frozen=True)
class BFalse(BExp):
    loc: Location = _loc()


@dataclass(frozen=True)
class BTrue(BExp):
    loc: Location = _loc()


@dataclass(frozen=True)
class Prim(BExp):
    test: Hashable
    loc: Location = _loc()


@dataclass(frozen=True)
class IndEq(BExp):
    value: Hashable
    loc: Location = _loc()


@dataclass(frozen=True)
class Or(BExp):
    left: BExp
    right: BExp
    loc: Location = _loc()


@dataclass(frozen=True)
class And(BExp):
    left: BExp
    right: BExp
    loc: Location = _loc()


@dataclass(frozen=True)
class Not(BExp):
    operand: BExp
    loc: Location = _loc()


# ---------------------------------------------------------------- programs

class Exp:
    """Program term."""


@dataclass(frozen=True)
class Assert(Exp):
    test: BExp
    loc: Location = _loc()


@dataclass(frozen=True)
class Act(Exp):
    action: Hashable
    loc: Location = _loc()


@dataclass(frozen=True)
class Assign(Exp):
    value: Hashable
    loc: Location = _loc()


@dataclass(frozen=True)
class Seq(Exp):
    first: Exp
    second: Exp
    loc: Location = _loc()


@dataclass(frozen=True)
class If(Exp):
    cond: BExp
    then: Exp
    orelse: Exp
    loc: Location = _loc()


@dataclass(frozen=True)
class While(Exp):
    cond: BExp
    body: Exp
    loc: Location = _loc()


@dataclass(frozen=True)
class Break(Exp):
    loc: Location = _loc()


@dataclass(frozen=True)
class Return(Exp):
    loc: Location = _loc()


@dataclass(frozen=True)
class Goto(Exp):
    label: Hashable
    loc: Location = _loc()


@dataclass(frozen=True)
class Label(Exp):
    label: Hashable
    loc: Location = _loc()


SKIP = Assert(BTrue())


def sequence(items: Sequence[Exp], loc: Location = None) -> Exp:
    """Join statements into one term. The Seq tree is balanced so long
    straight-line code stays shallow."""
    items = list(items)
    if not items:
        return Assert(BTrue(), loc=loc)
    if len(items) == 1:
        return items[0]
    mid = len(items) // 2
    return Seq(sequence(items[:mid]), sequence(items[mid:]), loc=loc or _first_loc(items))


def _first_loc(items: Sequence[Exp]) -> Location:
    for item in items:
        if item.loc is not None:
            return item.loc
    return None


def negate(b: BExp) -> BExp:
    if isinstance(b, Not):
        return b.operand
    return Not(b, loc=b.loc)


# ---------------------------------------------------------------- walks

def exp_children(e: Exp) -> Tuple[Exp, ...]:
    if isinstance(e, Seq):
        return (e.first, e.second)
    if isinstance(e, If):
        return (e.then, e.orelse)
    if isinstance(e, While):
        return (e.body,)
    return ()


def iter_exp(e: Exp) -> Iterator[Exp]:
    """Pre-order, left to right, without recursion."""
    stack = [e]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(reversed(exp_children(node)))


def iter_bexp(b: BExp) -> Iterator[BExp]:
    stack = [b]
    while stack:
        node = stack.pop()
        yield node
        if isinstance(node, (Or, And)):
            stack.append(node.right)
            stack.append(node.left)
        elif isinstance(node, Not):
            stack.append(node.operand)


def size(e: Exp) -> int:
    """Number of program constructors in e. Tests inside guards are not counted."""
    return sum(1 for _ in iter_exp(e))


def count_actions(e: Exp) -> int:
    return sum(1 for node in iter_exp(e) if isinstance(node, Act))


def defined_labels(e: Exp) -> List[Hashable]:
    return [node.label for node in iter_exp(e) if isinstance(node, Label)]


# ---------------------------------------------------------------- validity

@dataclass(frozen=True)
class DuplicateLabel:
    label: Hashable
    first: Location
    second: Location

    @property
    def location(self) -> Location:
        return self.second

    def describe(self) -> str:
        return f"label '{self.label}' is defined twice (first at {_fmt(self.first)})"


@dataclass(frozen=True)
class UndefinedGotoTarget:
    label: Hashable
    loc: Location

    @property
    def location(self) -> Location:
        return self.loc

    def describe(self) -> str:
        return f"goto targets undefined label '{self.label}'"


@dataclass(frozen=True)
class BreakOutsideLoop:
    loc: Location

    @property
    def location(self) -> Location:
        return self.loc

    def describe(self) -> str:
        return "break appears outside a loop"


def _fmt(loc: Location) -> str:
    return "?:?" if loc is None else f"{loc[0]}:{loc[1]}"


@dataclass
class ValidationReport:
    violations: List[Any] = field(default_factory=list)

    @property
    def is_valid(self) -> bool:
        return not self.violations

    def __len__(self) -> int:
        return len(self.violations)

    def __iter__(self):
        return iter(self.violations)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'valid': self.is_valid,
            'violations': [
                {
                    'kind': type(v).__name__,
                    'message': v.describe(),
                    'location': list(v.location) if v.location else None,
                }
                for v in self.violations
            ],
        }


def validate(e: Exp) -> ValidationReport:
    report = ValidationReport()
    seen: Dict[Hashable, Location] = {}
    gotos: List[Goto] = []

    stack = [(e, False)]
    while stack:
        node, in_loop = stack.pop()
        if isinstance(node, Label):
            if node.label in seen:
                report.violations.append(DuplicateLabel(node.label, seen[node.label], node.loc))
            else:
                seen[node.label] = node.loc
        elif isinstance(node, Goto):
            gotos.append(node)
        elif isinstance(node, Break):
            if not in_loop:
                report.violations.append(BreakOutsideLoop(node.loc))
        elif isinstance(node, While):
            stack.append((node.body, True))
        else:
            for child in reversed(exp_children(node)):
                stack.append((child, in_loop))

    for goto in gotos:
        if goto.label not in seen:
            report.violations.append(UndefinedGotoTarget(goto.label, goto.loc))
    return report


def require_valid(e: Exp) -> Exp:
    report = validate(e)
    if report.violations:
        raise InvalidProgram(report.violations)
    return e


# ---------------------------------------------------------------- alphabets

@dataclass(frozen=True)
class Alphabets:
    actions: Tuple[Hashable, ...] = ()
    tests: Tuple[Hashable, ...] = ()
    labels: Tuple[Hashable, ...] = ()
    indicators: Tuple[Hashable, ...] = (FRESH,)

    def __post_init__(self):
        object.__setattr__(self, '_test_index', {t: k for k, t in enumerate(self.tests)})
        object.__setattr__(self, '_indicator_index', {v: k for k, v in enumerate(self.indicators)})

    @property
    def test_index(self) -> Dict[Hashable, int]:
        return self._test_index

    @property
    def indicator_index(self) -> Dict[Hashable, int]:
        return self._indicator_index

    @property
    def atom_count(self) -> int:
        return 1 << len(self.tests)

    def with_indicator(self, value: Hashable) -> 'Alphabets':
        """Add an indicator value ahead of the fresh one."""
        if value in self._indicator_index:
            return self
        rest = tuple(v for v in self.indicators if v is not FRESH)
        tail = (FRESH,) if FRESH in self._indicator_index else ()
        return Alphabets(self.actions, self.tests, self.labels, rest + (value,) + tail)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'actions': [str(a) for a in self.actions],
            'tests': [str(t) for t in self.tests],
            'labels': [str(l) for l in self.labels],
            'indicators': [str(i) for i in self.indicators],
            'atoms': self.atom_count,
        }


def collect_alphabets(e: Exp, f: Exp) -> Alphabets:
    """Ids occurring in e or f in first-occurrence order, plus the fresh indicator."""
    actions: Dict[Hashable, None] = {}
    tests: Dict[Hashable, None] = {}
    labels: Dict[Hashable, None] = {}
    indicators: Dict[Hashable, None] = {}

    def visit_test(b: BExp) -> None:
        for node in iter_bexp(b):
            if isinstance(node, Prim):
                tests.setdefault(node.test)
            elif isinstance(node, IndEq):
                indicators.setdefault(node.value)

    for root in (e, f):
        for node in iter_exp(root):
            if isinstance(node, Act):
                actions.setdefault(node.action)
            elif isinstance(node, Assign):
                indicators.setdefault(node.value)
            elif isinstance(node, (Goto, Label)):
                labels.setdefault(node.label)
            elif isinstance(node, Assert):
                visit_test(node.test)
            elif isinstance(node, (If, While)):
                visit_test(node.cond)

    return Alphabets(
        actions=tuple(actions),
        tests=tuple(tests),
        labels=tuple(labels),
        indicators=tuple(indicators) + (FRESH,),
    )
