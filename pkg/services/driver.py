"""
End-to-end trace equivalence: collect alphabets, build Thompson automata,
lower them once per indicator value and compare the GKAT automata.

Also hosts the generators used by the property suites: the single-loop
normal form of a GKAT automaton, random valid programs and
semantics-preserving rewrites.
"""
import dataclasses
import json
import logging
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Hashable, List, Optional, Sequence, Tuple

from services.automata import (
    ACCEPT, REJECT, CfAutomaton, GkatAutomaton, StartDynamics, add_start_state, lower,
    resolve_jumps,
)
from services.boolean import DEFAULT_MAX_TESTS, ContextSpace
from services.frontend import (
    BlindingTable, IndicatorRules, SourceFunction, auto_blind, check_supported, detect_indicator,
    lift_to_exp, parse_functions,
)
from services.gkat import (
    EquivVerdict, bisim_equiv, enumerate_language, format_word, normalize, prune_unreachable,
    shortest_completion,
)
from services.errors import FunctionNotFound
from services.oracle import sorted_words, trace_languages
from services.stage_tracker import StageTracker
from services.syntax import (
    FRESH, Act, Alphabets, And, Assert, Assign, BExp, BFalse, BTrue, Break, Exp, Goto, If, IndEq,
    Label, Not, Or, Prim, Return, Seq, While, collect_alphabets, exp_children, iter_exp, negate,
    require_valid,
)
from services.thompson import thompson

logger = logging.getLogger(__name__)


@dataclass
class EquivalenceReport:
    verdict: bool
    per_indicator: Dict[Hashable, EquivVerdict]
    alphabets: Alphabets
    timings: Dict[str, float] = field(default_factory=dict)
    state_counts: Dict[str, int] = field(default_factory=dict)
    function: Optional[str] = None
    label_verdicts: Dict[Hashable, Dict[Hashable, EquivVerdict]] = field(default_factory=dict)
    space: Optional[ContextSpace] = field(default=None, repr=False, compare=False)

    def _show_atom(self) -> Callable[[int], str]:
        if self.space is not None:
            return self.space.show_atom
        return lambda a: f"α{a}"

    def first_counterexample(self) -> Optional[Tuple[Hashable, EquivVerdict]]:
        for value, verdict in self.per_indicator.items():
            if not verdict.equivalent:
                return value, verdict
        return None

    def to_dict(self) -> Dict[str, Any]:
        """Canonical field order; json.dumps of this is stable under a load/dump round trip."""
        show = self._show_atom()
        out: Dict[str, Any] = {
            'function': self.function,
            'verdict': self.verdict,
            'alphabets': self.alphabets.to_dict(),
            'per_indicator': {str(v): r.to_dict(show) for v, r in self.per_indicator.items()},
        }
        if self.label_verdicts:
            out['labels'] = {
                str(label): {str(v): r.to_dict(show) for v, r in rows.items()}
                for label, rows in self.label_verdicts.items()
            }
        out['state_counts'] = dict(self.state_counts)
        out['timings'] = {k: round(v, 6) for k, v in self.timings.items()}
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False)


# ---------------------------------------------------------------- decision procedure

def compile_automaton(e: Exp, space: ContextSpace) -> CfAutomaton:
    return add_start_state(thompson(e, space))


def lower_all(A: CfAutomaton, prune: bool = True) -> Dict[Hashable, GkatAutomaton]:
    resolved = resolve_jumps(A.jump_map, A.space)
    lowered = {}
    for value in A.space.indicators:
        G = lower(A, value, resolved)
        lowered[value] = prune_unreachable(G) if prune else G
    return lowered


def _from_label(A: CfAutomaton, label: Hashable) -> CfAutomaton:
    # same states, started from the label's jump row
    return add_start_state(CfAutomaton(A.space, A.states, A.jump_map, StartDynamics(A.jump(label))))


def _compare(pairs: Dict[Hashable, Tuple[GkatAutomaton, GkatAutomaton]], workers: int) -> Dict[Hashable, EquivVerdict]:
    keys = list(pairs)
    if workers > 1 and len(keys) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            verdicts = list(pool.map(lambda k: bisim_equiv(*pairs[k]), keys))
    else:
        verdicts = [bisim_equiv(*pairs[k]) for k in keys]
    return dict(zip(keys, verdicts))


def equiv(e: Exp, f: Exp, alphabets: Optional[Alphabets] = None, *,
          compare_labels: bool = False, workers: int = 1, prune: bool = True,
          max_tests: int = DEFAULT_MAX_TESTS, function: Optional[str] = None,
          tracker: Optional[StageTracker] = None, stage_log: Optional[str] = None) -> EquivalenceReport:
    """
    Decide whether e and f have the same trace semantics from every indicator value.

    Args:
        e, f: valid programs
        alphabets: override for the collected alphabets (must cover both programs)
        compare_labels: also compare the semantics started from each label
        workers: threads for the independent per-value checks
        prune: drop unreachable lowered states before comparison
        max_tests: cap on primitive tests
        function: name carried into the report
        tracker: stage accounting; a fresh one is used when omitted
        stage_log: file the fresh tracker appends stage records to

    Returns:
        EquivalenceReport whose verdict is the conjunction over all values
    """
    tracker = tracker or StageTracker(function, stage_log)
    require_valid(e)
    require_valid(f)

    with tracker.stage('collect'):
        alphabets = alphabets or collect_alphabets(e, f)
        space = ContextSpace(alphabets, max_tests)
    logger.debug("alphabets: %d actions, %d tests, %d labels, %d indicator values",
                 len(alphabets.actions), len(alphabets.tests), len(alphabets.labels),
                 len(alphabets.indicators))

    with tracker.stage('thompson'):
        A, B = compile_automaton(e, space), compile_automaton(f, space)
    tracker.record_size('thompson_e', A.state_count - 1)
    tracker.record_size('thompson_f', B.state_count - 1)

    with tracker.stage('lower'):
        lowered_a, lowered_b = lower_all(A, prune), lower_all(B, prune)
    tracker.record_size('lowered_e', sum(G.state_count for G in lowered_a.values()))
    tracker.record_size('lowered_f', sum(G.state_count for G in lowered_b.values()))

    with tracker.stage('bisim'):
        per_indicator = _compare({v: (lowered_a[v], lowered_b[v]) for v in space.indicators}, workers)
    tracker.record_size('unions', sum(r.union_count for r in per_indicator.values()))

    label_verdicts: Dict[Hashable, Dict[Hashable, EquivVerdict]] = {}
    if compare_labels:
        with tracker.stage('labels'):
            for label in alphabets.labels:
                la = lower_all(_from_label(A, label), prune)
                lb = lower_all(_from_label(B, label), prune)
                label_verdicts[label] = _compare({v: (la[v], lb[v]) for v in space.indicators}, workers)

    verdict = all(r.equivalent for r in per_indicator.values())
    if compare_labels:
        verdict = verdict and all(r.equivalent for rows in label_verdicts.values() for r in rows.values())

    logger.debug("verdict %s for %s", verdict, function or '<program>')
    return EquivalenceReport(
        verdict=verdict,
        per_indicator=per_indicator,
        alphabets=alphabets,
        timings=tracker.timings(),
        state_counts=dict(tracker.sizes),
        function=function,
        label_verdicts=label_verdicts,
        space=space,
    )


# ---------------------------------------------------------------- source pipeline

@dataclass
class SourceComparison:
    reports: Dict[str, EquivalenceReport]
    unpaired: List[str]
    blinding: Dict[str, dict] = field(default_factory=dict)

    @property
    def verdict(self) -> bool:
        return all(r.verdict for r in self.reports.values())

    def to_dict(self) -> Dict[str, Any]:
        return {
            'verdict': self.verdict,
            'functions': {name: r.to_dict() for name, r in self.reports.items()},
            'unpaired': list(self.unpaired),
            'blinding': self.blinding or None,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False)


def select_functions(text: str, name: Optional[str] = None) -> Dict[str, SourceFunction]:
    """Functions of a file, or just `name`; each one checked for unsupported constructs."""
    functions = parse_functions(text)
    if name is not None:
        if name not in functions:
            raise FunctionNotFound(name, functions)
        functions = {name: functions[name]}
    for fn in functions.values():
        check_supported(fn)
    return functions


def pair_functions(text_a: str, text_b: str, name: Optional[str] = None
                   ) -> Tuple[List[Tuple[SourceFunction, SourceFunction]], List[str]]:
    """Functions of both sources paired by name, plus the names found on one side only."""
    funcs_a, funcs_b = select_functions(text_a, name), select_functions(text_b, name)
    pairs = [(funcs_a[n], funcs_b[n]) for n in funcs_a if n in funcs_b]
    unpaired = [n for n in funcs_a if n not in funcs_b] + [n for n in funcs_b if n not in funcs_a]
    for n in unpaired:
        logger.warning("function %s has no counterpart and is skipped", n)
    return pairs, unpaired


def lift_pair(fn_a: SourceFunction, fn_b: SourceFunction, blind: bool = False,
              rules: Optional[IndicatorRules] = None) -> Tuple[Exp, Exp, Optional[BlindingTable]]:
    table = None
    if blind:
        table, fn_a, fn_b = auto_blind(fn_a, fn_b, rules)
    e = lift_to_exp(fn_a, detect_indicator(fn_a, rules))
    f = lift_to_exp(fn_b, detect_indicator(fn_b, rules))
    return e, f, table


def equiv_sources(text_a: str, text_b: str, name: Optional[str] = None, *, blind: bool = False,
                  rules: Optional[IndicatorRules] = None, **options) -> SourceComparison:
    """
    Compare the functions of two C sources, paired by name.

    Names present in only one source are reported as unpaired and skipped.
    """
    pairs, unpaired = pair_functions(text_a, text_b, name)
    comparison = SourceComparison({}, unpaired)
    for fn_a, fn_b in pairs:
        e, f, table = lift_pair(fn_a, fn_b, blind, rules)
        if table is not None:
            comparison.blinding[fn_a.name] = table.to_dict()
        comparison.reports[fn_a.name] = equiv(e, f, function=fn_a.name, **options)
    return comparison


# ---------------------------------------------------------------- single-loop normal form

def _balanced(items: Sequence[Any], combine: Callable[[Any, Any], Any]) -> Any:
    if len(items) == 1:
        return items[0]
    mid = len(items) // 2
    return combine(_balanced(items[:mid], combine), _balanced(items[mid:], combine))


def single_loop_normal_form(A: GkatAutomaton, tests: Sequence[Hashable]) -> Exp:
    """
    One while loop driven by the indicator: value s < n encodes state s,
    n means halted and n + 1 means stuck. A stuck run loops without acting,
    which the semantics treats as rejection.

    Args:
        A: normalized GKAT automaton
        tests: primitive tests, bit k of an atom being tests[k]

    Returns:
        Exp equivalent to A's language
    """
    if A.n_atoms != 1 << len(tests):
        raise ValueError(f"{len(tests)} tests do not give {A.n_atoms} atoms")
    halt, stuck = A.state_count, A.state_count + 1

    def leaf(t) -> Exp:
        if t is ACCEPT:
            return Assign(halt)
        if t is REJECT:
            return Assign(stuck)
        return Seq(Act(t.action), Assign(t.state))

    def by_atom(row, atoms: List[int], bit: int) -> Exp:
        first = row[atoms[0]]
        if all(row[a] == first for a in atoms):
            return leaf(first)
        with_test = [a for a in atoms if a >> bit & 1]
        without = [a for a in atoms if not a >> bit & 1]
        return If(Prim(tests[bit]), by_atom(row, with_test, bit + 1), by_atom(row, without, bit + 1))

    def by_state(states: List[int]) -> Exp:
        if len(states) == 1:
            s = states[0]
            if s == stuck:
                return Assert(BTrue())
            return by_atom(A.states[s], list(range(A.n_atoms)), 0)
        mid = len(states) // 2
        guard = _balanced([IndEq(s) for s in states[:mid]], Or)
        return If(guard, by_state(states[:mid]), by_state(states[mid:]))

    body = by_state(list(range(A.state_count)) + [stuck])
    return Seq(Assign(A.start), While(Not(IndEq(halt)), body))


def _fresh_value(alphabets: Alphabets) -> int:
    used = set(alphabets.indicators)
    value = 0
    while value in used:
        value += 1
    return value


def round_trip(e: Exp, **options) -> EquivalenceReport:
    """
    Compare e with the single-loop normal form of its own lowered automaton.
    When e mentions indicator values it is pinned to a fresh start value
    first, so one lowered automaton speaks for every start.
    """
    own = collect_alphabets(e, e)
    pinned = e
    start_value: Hashable = FRESH
    if len(own.indicators) > 1:
        start_value = _fresh_value(own)
        pinned = Seq(Assign(start_value), e)
        own = collect_alphabets(pinned, pinned)
    space = ContextSpace(own, options.get('max_tests', DEFAULT_MAX_TESTS))
    G = normalize(lower(compile_automaton(pinned, space), start_value))
    normal_form = single_loop_normal_form(G, own.tests)
    return equiv(pinned, normal_form, **options)


# ---------------------------------------------------------------- random programs

@dataclass(frozen=True)
class ProgramLimits:
    max_nodes: int = 15
    tests: int = 2
    indicators: int = 3
    labels: int = 2
    actions: int = 3

    def __post_init__(self):
        if min(self.max_nodes, self.actions) < 1 or min(self.tests, self.indicators, self.labels) < 0:
            raise ValueError("program limits must be positive")


_PENDING = object()


class _Generator:
    def __init__(self, rng: random.Random, limits: ProgramLimits):
        self.rng = rng
        self.limits = limits
        self.free_labels = [f"l{k}" for k in range(limits.labels)]
        self.used_labels: List[str] = []

    def test(self, depth: int = 0) -> BExp:
        rng, limits = self.rng, self.limits
        roll = rng.random()
        if depth < 2 and roll < 0.3:
            kind = rng.choice((And, Or))
            return kind(self.test(depth + 1), self.test(depth + 1))
        if depth < 2 and roll < 0.4:
            return Not(self.test(depth + 1))
        choices = []
        if limits.tests:
            choices += ['prim'] * 3
        if limits.indicators:
            choices += ['ind'] * 2
        choices += ['const']
        kind = rng.choice(choices)
        if kind == 'prim':
            return Prim(f"t{rng.randrange(limits.tests)}")
        if kind == 'ind':
            return IndEq(rng.randrange(limits.indicators))
        return BTrue() if rng.random() < 0.5 else BFalse()

    def leaf(self, in_loop: bool) -> Exp:
        rng, limits = self.rng, self.limits
        choices = ['act'] * 4 + ['assert', 'return']
        if limits.indicators:
            choices += ['assign'] * 2
        if in_loop:
            choices += ['break'] * 2
        if self.free_labels:
            choices += ['label'] * 2
        if limits.labels:
            choices += ['goto'] * 2
        kind = rng.choice(choices)
        if kind == 'act':
            return Act(f"p{rng.randrange(limits.actions)}")
        if kind == 'assert':
            return Assert(self.test())
        if kind == 'assign':
            return Assign(rng.randrange(limits.indicators))
        if kind == 'break':
            return Break()
        if kind == 'label':
            label = self.free_labels.pop(rng.randrange(len(self.free_labels)))
            self.used_labels.append(label)
            return Label(label)
        if kind == 'goto':
            return Goto(_PENDING)
        return Return()

    def exp(self, budget: int, in_loop: bool, root: bool = False) -> Exp:
        rng = self.rng
        if budget < 2 or (not root and rng.random() < 0.25):
            return self.leaf(in_loop)
        kinds = ['while']
        if budget >= 3:
            kinds += ['seq', 'seq', 'if']
        kind = rng.choice(kinds)
        if kind == 'while':
            return While(self.test(), self.exp(budget - 1, True))
        left_budget = rng.randint(1, budget - 2)
        left = self.exp(left_budget, in_loop)
        right = self.exp(budget - 1 - left_budget, in_loop)
        if kind == 'seq':
            return Seq(left, right)
        return If(self.test(), left, right)


def _rebuild(e: Exp, children: Sequence[Exp]) -> Exp:
    if isinstance(e, Seq):
        return dataclasses.replace(e, first=children[0], second=children[1])
    if isinstance(e, If):
        return dataclasses.replace(e, then=children[0], orelse=children[1])
    if isinstance(e, While):
        return dataclasses.replace(e, body=children[0])
    return e


def _map_leaves(e: Exp, fn: Callable[[Exp], Exp]) -> Exp:
    children = exp_children(e)
    if not children:
        return fn(e)
    return _rebuild(e, [_map_leaves(c, fn) for c in children])


def _ensure_label(e: Exp, gen: _Generator) -> Exp:
    """Turn one leaf into a label when gotos are pending and none was generated."""
    positions = _positions(e)
    pending = [path for path, node in positions if isinstance(node, Goto)]
    if not pending or gen.used_labels or not gen.free_labels:
        return e
    spots = [path for path, node in positions if not exp_children(node) and not isinstance(node, Goto)]
    if not spots and len(pending) > 1:
        spots = pending
    if not spots:
        return e
    label = gen.free_labels.pop(0)
    gen.used_labels.append(label)
    return _replace_at(e, gen.rng.choice(spots), Label(label))


def random_program(seed: int, limits: Optional[ProgramLimits] = None) -> Exp:
    """
    A valid program of at most limits.max_nodes constructors. Same seed, same program.
    Tests are t0.., actions p0.., labels l0.., indicator values 0..
    """
    limits = limits or ProgramLimits()
    rng = random.Random(seed)
    gen = _Generator(rng, limits)
    e = _ensure_label(gen.exp(limits.max_nodes, False, root=True), gen)

    def bind(node: Exp) -> Exp:
        if isinstance(node, Goto) and node.label is _PENDING:
            if not gen.used_labels:
                return Return()
            return Goto(rng.choice(gen.used_labels))
        return node

    return _map_leaves(e, bind)


# ---------------------------------------------------------------- semantics-preserving rewrites

def _positions(e: Exp, path: Tuple[int, ...] = ()) -> List[Tuple[Tuple[int, ...], Exp]]:
    out = [(path, e)]
    for k, child in enumerate(exp_children(e)):
        out.extend(_positions(child, path + (k,)))
    return out


def _replace_at(e: Exp, path: Tuple[int, ...], new: Exp) -> Exp:
    if not path:
        return new
    children = list(exp_children(e))
    children[path[0]] = _replace_at(children[path[0]], path[1:], new)
    return _rebuild(e, children)


def _fresh_label(e: Exp) -> str:
    taken = {node.label for node in iter_exp(e) if isinstance(node, (Label, Goto))}
    k = 0
    while f"fresh{k}" in taken:
        k += 1
    return f"fresh{k}"


def preserving_rewrite(e: Exp, rng: random.Random) -> Exp:
    """
    One rewrite that keeps the trace semantics: an unused label next to a
    subterm, an If with negated guard and swapped branches, or a
    reassociated Seq.
    """
    positions = _positions(e)
    options: List[Tuple[str, Tuple[int, ...], Exp]] = [('label', p, n) for p, n in positions]
    for path, node in positions:
        if isinstance(node, If):
            options.append(('swap', path, node))
        if isinstance(node, Seq) and (isinstance(node.first, Seq) or isinstance(node.second, Seq)):
            options.append(('assoc', path, node))
    kind, path, node = rng.choice(options)
    if kind == 'swap':
        new = If(negate(node.cond), node.orelse, node.then, loc=node.loc)
    elif kind == 'assoc':
        if isinstance(node.first, Seq):
            a, b, c = node.first.first, node.first.second, node.second
            new = Seq(a, Seq(b, c))
        else:
            a, b, c = node.first, node.second.first, node.second.second
            new = Seq(Seq(a, b), c)
    else:
        label = Label(_fresh_label(e))
        new = Seq(label, node) if rng.random() < 0.5 else Seq(node, label)
    return _replace_at(e, path, new)


# ---------------------------------------------------------------- oracle cross-check

@dataclass
class CrosscheckResult:
    agree: bool
    bound: int
    per_indicator: Dict[Hashable, bool]
    # (value, word, side) for the first disagreement; side 'automaton' or 'oracle'
    difference: Optional[Tuple[Hashable, tuple, str]] = None

    def to_dict(self, show_atom: Optional[Callable[[int], str]] = None) -> Dict[str, Any]:
        diff = None
        if self.difference is not None:
            value, word, side = self.difference
            diff = {'indicator': str(value), 'word': format_word(word, show_atom), 'only_in': side}
        return {
            'agree': self.agree,
            'bound': self.bound,
            'per_indicator': {str(v): ok for v, ok in self.per_indicator.items()},
            'difference': diff,
        }


def mutate_automaton(G: GkatAutomaton, bound: int) -> GkatAutomaton:
    """Corrupt G so that its language up to `bound` changes. Negative control only."""
    rows = [list(row) for row in G.states]
    word = shortest_completion(G, G.start)
    if word is not None and len(word) // 2 <= bound:
        state = G.start
        for k in range(0, len(word) - 1, 2):
            state = rows[state][word[k]].state
        rows[state][word[-1]] = REJECT
    else:
        rows[G.start][0] = ACCEPT
    return GkatAutomaton(G.n_atoms, tuple(tuple(r) for r in rows), G.start, G.names, G.alphabet)


def crosscheck(e: Exp, bound: int, alphabets: Optional[Alphabets] = None, mutate: bool = False,
               max_tests: int = DEFAULT_MAX_TESTS) -> CrosscheckResult:
    """Compare the automaton pipeline's bounded language with the denotational one, per start value."""
    if bound < 0:
        raise ValueError("bound must be non-negative")
    require_valid(e)
    alphabets = alphabets or collect_alphabets(e, e)
    space = ContextSpace(alphabets, max_tests)
    A = compile_automaton(e, space)
    resolved = resolve_jumps(A.jump_map, space)
    expected = trace_languages(e, alphabets, bound)

    per_indicator: Dict[Hashable, bool] = {}
    difference = None
    for value in alphabets.indicators:
        G = lower(A, value, resolved)
        if mutate:
            G = mutate_automaton(G, bound)
        got = enumerate_language(G, bound)
        per_indicator[value] = got == expected[value]
        if difference is None and got != expected[value]:
            only_auto = sorted_words(got - expected[value])
            only_oracle = sorted_words(expected[value] - got)
            if only_auto and (not only_oracle or len(only_auto[0]) <= len(only_oracle[0])):
                difference = (value, only_auto[0], 'automaton')
            else:
                difference = (value, only_oracle[0], 'oracle')
    return CrosscheckResult(all(per_indicator.values()), bound, per_indicator, difference)
