"""
C front end: parse blinded C functions with pycparser, detect the indicator
variable, lift statements to program terms, and blind unrecognized code.

Blinded code calls `pact(n)` for primitive actions and `pbool(n)` for
primitive tests. Everything else must be control flow or an operation on
the indicator variable, unless a BlindingTable assigns ids to the rest.
"""
import copy
import logging
import re
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from pycparser import c_ast, c_generator, c_parser

from services.errors import (
    DoWhileWithBreakOrLabel, FrontendSyntaxError, FunctionNotFound, NonBlindableStatement,
    UnsupportedConstruct,
)
from services.syntax import (
    SKIP, Act, And, Assign, BExp, BFalse, BTrue, Break, Exp, Goto, IndEq, Label, Not, Or, Prim,
    Return, Seq, While, sequence,
)
from services.syntax import If as IfExp

logger = logging.getLogger(__name__)

PACT = 'pact'
PBOOL = 'pbool'

DEFAULT_INTEGER_TYPES = ('int', 'long', 'short', 'char', 'unsigned', 'signed')

# Type names commonly seen in blinded sources that pycparser cannot know without headers.
KNOWN_TYPEDEFS = ('bool', 'size_t', 'ssize_t', 'uintmax_t', 'intmax_t', 'uint64_t', 'int64_t',
                  'uint32_t', 'int32_t', 'uintptr_t', 'mpz_t', 'mp_limb_t', 'factors')

Location = Optional[Tuple[int, int]]

_COMMENT_OR_LITERAL = re.compile(
    r'//[^\n]*|/\*.*?\*/|"(?:\\.|[^"\\\n])*"|\'(?:\\.|[^\'\\\n])*\'',
    re.DOTALL,
)
_PARSE_ERROR_LOCATION = re.compile(r'^[^:]*:(\d+):(\d+):\s*(.*)$', re.DOTALL)


@dataclass
class SourceFunction:
    name: str
    node: c_ast.FuncDef
    loc: Location = None
    # auto_blind pins the indicator detected on the unblinded source
    blinded: bool = False
    indicator: Optional[str] = None

    @property
    def body(self) -> c_ast.Compound:
        return self.node.body


@dataclass
class IndicatorRules:
    """Which variables may serve as the indicator."""
    enabled: bool = True
    integer_types: Tuple[str, ...] = DEFAULT_INTEGER_TYPES
    allow_uninitialized: bool = True


@dataclass
class IndicatorCandidate:
    name: str
    qualifies: bool
    reason: str
    loc: Location = None

    def to_dict(self) -> dict:
        return {
            'name': self.name,
            'qualifies': self.qualifies,
            'reason': self.reason,
            'location': list(self.loc) if self.loc else None,
        }


@dataclass
class BlindingTable:
    """Canonical statement/condition text to pact/pbool ids, shared by both inputs."""
    actions: Dict[str, int] = field(default_factory=dict)
    tests: Dict[str, int] = field(default_factory=dict)
    next_action: int = 1
    next_test: int = 1

    def action_id(self, text: str) -> int:
        if text not in self.actions:
            self.actions[text] = self.next_action
            self.next_action += 1
        return self.actions[text]

    def test_id(self, text: str) -> int:
        if text not in self.tests:
            self.tests[text] = self.next_test
            self.next_test += 1
        return self.tests[text]

    def to_dict(self) -> dict:
        return {
            'actions': {str(v): k for k, v in sorted(self.actions.items(), key=lambda kv: kv[1])},
            'tests': {str(v): k for k, v in sorted(self.tests.items(), key=lambda kv: kv[1])},
        }


# ---------------------------------------------------------------- parsing

def _blank(match: 're.Match') -> str:
    text = match.group(0)
    if text.startswith('/'):
        # keep line structure so coordinates stay true
        return re.sub(r'[^\n]', ' ', text)
    return text


def clean_source(text: str) -> str:
    """Blank out comments and preprocessor lines, keeping line and column positions."""
    text = _COMMENT_OR_LITERAL.sub(_blank, text)
    lines = []
    for line in text.split('\n'):
        if line.lstrip().startswith('#'):
            lines.append('')
        else:
            lines.append(line)
    return '\n'.join(lines)


def _prelude(text: str) -> str:
    names = []
    for name in KNOWN_TYPEDEFS:
        if re.search(rf'\b{name}\b', text) and not re.search(rf'\btypedef\b[^;]*\b{name}\s*;', text):
            names.append(name)
    return ''.join(f'typedef int {name}; ' for name in names)


def node_loc(node: Optional[c_ast.Node], shift: int = 0) -> Location:
    coord = getattr(node, 'coord', None)
    if coord is None:
        return None
    column = coord.column or 0
    if coord.line == 1 and column:
        column = max(1, column - shift)
    return (coord.line, column)


def parse_functions(text: str) -> Dict[str, SourceFunction]:
    """All function definitions in a file, in source order."""
    clean = clean_source(text)
    prelude = _prelude(clean)
    try:
        ast = c_parser.CParser().parse(prelude + clean, filename='<input>')
    except c_parser.ParseError as exc:
        raise _syntax_error(str(exc), len(prelude))

    functions: Dict[str, SourceFunction] = {}
    for ext in ast.ext:
        if isinstance(ext, c_ast.FuncDef):
            name = ext.decl.name
            functions[name] = SourceFunction(name, ext, node_loc(ext, len(prelude)))
    return functions


def _syntax_error(message: str, shift: int) -> FrontendSyntaxError:
    match = _PARSE_ERROR_LOCATION.match(message)
    if not match:
        return FrontendSyntaxError(message)
    line, column, detail = int(match.group(1)), int(match.group(2)), match.group(3)
    if line == 1:
        column = max(1, column - shift)
    if detail.startswith('before:'):
        detail = f"unexpected token '{detail[len('before:'):].strip()}'"
    return FrontendSyntaxError(detail or 'syntax error', (line, column))


class _UnsupportedFinder(c_ast.NodeVisitor):
    def visit_Switch(self, node):
        raise UnsupportedConstruct('switch', node_loc(node))

    def visit_Continue(self, node):
        raise UnsupportedConstruct('continue', node_loc(node))

    def visit_TernaryOp(self, node):
        raise UnsupportedConstruct('ternary operator', node_loc(node))


def check_supported(fn: SourceFunction) -> None:
    """Raise UnsupportedConstruct for switch, continue or a ternary anywhere in fn."""
    _UnsupportedFinder().visit(fn.node)


def parse_function(text: str, name: Optional[str] = None) -> SourceFunction:
    """
    Parse one function out of a C file.

    Args:
        text: source text
        name: function to pick; the only function when omitted

    Returns:
        SourceFunction
    """
    functions = parse_functions(text)
    if name is None:
        if len(functions) != 1:
            raise FunctionNotFound('<unnamed>', functions)
        fn = next(iter(functions.values()))
    elif name in functions:
        fn = functions[name]
    else:
        raise FunctionNotFound(name, functions)
    check_supported(fn)
    return fn


# ---------------------------------------------------------------- small helpers

def _parse_int(literal: str) -> int:
    digits = literal.rstrip('uUlL')
    if len(digits) > 1 and digits[0] == '0' and digits[1] not in 'xXbB':
        return int(digits, 8)
    return int(digits, 0)


def int_constant(node: Optional[c_ast.Node]) -> Optional[int]:
    if isinstance(node, c_ast.Constant) and 'int' in node.type:
        return _parse_int(node.value)
    if isinstance(node, c_ast.UnaryOp) and node.op in ('-', '+'):
        inner = int_constant(node.expr)
        if inner is not None:
            return -inner if node.op == '-' else inner
    return None


def _primitive_call(node: c_ast.Node, callee: str) -> Optional[int]:
    if not isinstance(node, c_ast.FuncCall) or not isinstance(node.name, c_ast.ID):
        return None
    if node.name.name != callee or node.args is None or len(node.args.exprs) != 1:
        return None
    return int_constant(node.args.exprs[0])


def canonical_text(node: c_ast.Node) -> str:
    text = c_generator.CGenerator().visit(node)
    text = ' '.join(text.split())
    return text.rstrip(';').rstrip()


def _is_integer_decl(decl: c_ast.Decl, rules: IndicatorRules) -> bool:
    type_decl = decl.type
    if not isinstance(type_decl, c_ast.TypeDecl):
        return False
    base = type_decl.type
    if not isinstance(base, c_ast.IdentifierType):
        return False
    return all(n in rules.integer_types for n in base.names)


def _children(node: c_ast.Node):
    return [child for _, child in node.children()]


# ---------------------------------------------------------------- indicator detection

class _UsageScan:
    """Records every use of each local variable with a verdict on its shape."""

    def __init__(self):
        self.problems: Dict[str, str] = {}

    def flag(self, name: str, reason: str) -> None:
        self.problems.setdefault(name, reason)

    def scan(self, node: Optional[c_ast.Node], parent: Optional[c_ast.Node] = None) -> None:
        if node is None:
            return
        if isinstance(node, c_ast.Assignment) and isinstance(node.lvalue, c_ast.ID):
            if node.op != '=':
                self.flag(node.lvalue.name, f"updated with '{node.op}'")
            elif int_constant(node.rvalue) is None:
                self.flag(node.lvalue.name, 'assigned a non-constant value')
            self.scan(node.rvalue, node)
            return
        if isinstance(node, c_ast.BinaryOp) and node.op in ('==', '!='):
            left, right = node.left, node.right
            if isinstance(left, c_ast.ID) and int_constant(right) is not None:
                return
            if isinstance(right, c_ast.ID) and int_constant(left) is not None:
                return
        if isinstance(node, c_ast.ID):
            self.flag(node.name, self._reason(parent))
            return
        if isinstance(node, c_ast.FuncCall):
            # the callee name is not a variable use
            if node.args is not None:
                self.scan(node.args, node)
            return
        if isinstance(node, c_ast.Decl):
            self.scan(node.init, node)
            return
        for child in _children(node):
            self.scan(child, node)

    @staticmethod
    def _reason(parent: Optional[c_ast.Node]) -> str:
        if isinstance(parent, (c_ast.ExprList, c_ast.FuncCall)):
            return 'passed to a call'
        if isinstance(parent, c_ast.UnaryOp):
            if parent.op == '&':
                return 'address taken'
            if parent.op in ('++', '--', 'p++', 'p--'):
                return 'incremented or decremented'
            return f"used under unary '{parent.op}'"
        if isinstance(parent, c_ast.BinaryOp):
            if parent.op in ('==', '!='):
                return 'compared against a non-constant'
            return f"used arithmetically ('{parent.op}')"
        return 'read outside a comparison against a constant'


def _local_decls(fn: SourceFunction) -> List[c_ast.Decl]:
    found: List[c_ast.Decl] = []

    def walk(node):
        if isinstance(node, c_ast.Decl) and not isinstance(node.type, c_ast.FuncDecl):
            found.append(node)
        for child in _children(node):
            walk(child)

    walk(fn.body)
    return found


def analyze_indicator_candidates(fn: SourceFunction, rules: Optional[IndicatorRules] = None) -> List[IndicatorCandidate]:
    """Every local variable in declaration order, with whether it qualifies as the indicator."""
    rules = rules or IndicatorRules()
    scan = _UsageScan()
    scan.scan(fn.body)

    candidates: List[IndicatorCandidate] = []
    seen = set()
    for decl in _local_decls(fn):
        if decl.name is None or decl.name in seen:
            continue
        seen.add(decl.name)
        loc = node_loc(decl)
        if not _is_integer_decl(decl, rules):
            candidates.append(IndicatorCandidate(decl.name, False, 'not an integer variable', loc))
        elif decl.init is not None and int_constant(decl.init) is None:
            candidates.append(IndicatorCandidate(decl.name, False, 'initialized with a non-constant', loc))
        elif decl.init is None and not rules.allow_uninitialized:
            candidates.append(IndicatorCandidate(decl.name, False, 'declared without an initial value', loc))
        elif decl.name in scan.problems:
            candidates.append(IndicatorCandidate(decl.name, False, scan.problems[decl.name], loc))
        else:
            candidates.append(IndicatorCandidate(decl.name, True, 'constant assignments and comparisons only', loc))
    return candidates


def detect_indicator(fn: SourceFunction, rules: Optional[IndicatorRules] = None) -> Optional[str]:
    if fn.blinded:
        return fn.indicator
    rules = rules or IndicatorRules()
    if not rules.enabled:
        return None
    for candidate in analyze_indicator_candidates(fn, rules):
        if candidate.qualifies:
            logger.debug("indicator for %s: %s", fn.name, candidate.name)
            return candidate.name
    return None


# ---------------------------------------------------------------- lifting

def _breaks_at_this_level(node: Optional[c_ast.Node]) -> bool:
    if node is None:
        return False
    if isinstance(node, c_ast.Break):
        return True
    if isinstance(node, (c_ast.While, c_ast.DoWhile, c_ast.For, c_ast.Switch)):
        return False
    return any(_breaks_at_this_level(child) for child in _children(node))


def _has_label(node: Optional[c_ast.Node]) -> bool:
    if node is None:
        return False
    if isinstance(node, c_ast.Label):
        return True
    return any(_has_label(child) for child in _children(node))


class Lifter:
    """Turns one C function body into a program term."""

    def __init__(self, indicator: Optional[str], blinding: Optional[BlindingTable]):
        self.indicator = indicator
        self.blinding = blinding

    # -- statements

    def stmt(self, node: Optional[c_ast.Node]) -> Exp:
        if node is None or isinstance(node, c_ast.EmptyStatement):
            return SKIP
        loc = node_loc(node)
        method = getattr(self, f'_stmt_{type(node).__name__}', None)
        if method is not None:
            return method(node, loc)
        return self._opaque_action(node, loc)

    def _stmt_Compound(self, node, loc):
        return sequence([self.stmt(item) for item in node.block_items or []], loc)

    def _stmt_FuncCall(self, node, loc):
        action = _primitive_call(node, PACT)
        if action is not None:
            return Act(action, loc=loc)
        return self._opaque_action(node, loc)

    def _stmt_Assignment(self, node, loc):
        if self._is_indicator(node.lvalue) and node.op == '=':
            value = int_constant(node.rvalue)
            if value is not None:
                return Assign(value, loc=loc)
        return self._opaque_action(node, loc)

    def _stmt_Decl(self, node, loc):
        if self.indicator is not None and node.name == self.indicator:
            value = int_constant(node.init)
            return SKIP if value is None else Assign(value, loc=loc)
        if node.init is None or isinstance(node.type, c_ast.FuncDecl):
            return SKIP
        return self._opaque_action(node, loc)

    def _stmt_DeclList(self, node, loc):
        return sequence([self.stmt(d) for d in node.decls], loc)

    def _stmt_ExprList(self, node, loc):
        return sequence([self.stmt(e) for e in node.exprs], loc)

    def _stmt_If(self, node, loc):
        return IfExp(self.cond(node.cond), self.stmt(node.iftrue), self.stmt(node.iffalse), loc=loc)

    def _stmt_While(self, node, loc):
        return While(self.cond(node.cond), self.stmt(node.stmt), loc=loc)

    def _stmt_For(self, node, loc):
        guard = BTrue(loc=loc) if node.cond is None else self.cond(node.cond)
        body = self.stmt(node.stmt)
        if node.next is not None:
            body = Seq(body, self.stmt(node.next), loc=loc)
        loop = While(guard, body, loc=loc)
        if node.init is None:
            return loop
        return Seq(self.stmt(node.init), loop, loc=loc)

    def _stmt_DoWhile(self, node, loc):
        if _breaks_at_this_level(node.stmt) or _has_label(node.stmt):
            raise DoWhileWithBreakOrLabel(loc)
        body = self.stmt(node.stmt)
        if int_constant(node.cond) == 0:
            return body
        return Seq(body, While(self.cond(node.cond), body, loc=loc), loc=loc)

    def _stmt_Goto(self, node, loc):
        return Goto(node.name, loc=loc)

    def _stmt_Label(self, node, loc):
        return Seq(Label(node.name, loc=loc), self.stmt(node.stmt), loc=loc)

    def _stmt_Break(self, node, loc):
        return Break(loc=loc)

    def _stmt_Return(self, node, loc):
        if node.expr is None:
            return Return(loc=loc)
        return Seq(self._opaque_action(node, loc), Return(loc=loc), loc=loc)

    def _stmt_Continue(self, node, loc):
        raise UnsupportedConstruct('continue', loc)

    def _stmt_Switch(self, node, loc):
        raise UnsupportedConstruct('switch', loc)

    def _opaque_action(self, node, loc) -> Exp:
        text = canonical_text(node)
        if self.blinding is None:
            raise NonBlindableStatement(text, loc)
        return Act(self.blinding.action_id(text), loc=loc)

    # -- conditions

    def cond(self, node: c_ast.Node) -> BExp:
        loc = node_loc(node)
        test = _primitive_call(node, PBOOL)
        if test is not None:
            return Prim(test, loc=loc)
        constant = int_constant(node)
        if constant is not None:
            return BTrue(loc=loc) if constant else BFalse(loc=loc)
        if isinstance(node, c_ast.UnaryOp) and node.op == '!':
            return Not(self.cond(node.expr), loc=loc)
        if isinstance(node, c_ast.BinaryOp):
            if node.op == '&&':
                return And(self.cond(node.left), self.cond(node.right), loc=loc)
            if node.op == '||':
                return Or(self.cond(node.left), self.cond(node.right), loc=loc)
            if node.op in ('==', '!='):
                compared = self._indicator_comparison(node)
                if compared is not None:
                    test = IndEq(compared, loc=loc)
                    return test if node.op == '==' else Not(test, loc=loc)
        if isinstance(node, c_ast.TernaryOp):
            raise UnsupportedConstruct('ternary operator', loc)
        text = canonical_text(node)
        if self.blinding is None:
            raise NonBlindableStatement(text, loc)
        return Prim(self.blinding.test_id(text), loc=loc)

    def _is_indicator(self, node) -> bool:
        return self.indicator is not None and isinstance(node, c_ast.ID) and node.name == self.indicator

    def _indicator_comparison(self, node: c_ast.BinaryOp) -> Optional[int]:
        if self._is_indicator(node.left):
            return int_constant(node.right)
        if self._is_indicator(node.right):
            return int_constant(node.left)
        return None


def lift_to_exp(fn: SourceFunction, indicator: Optional[str] = None,
                blinding: Optional[BlindingTable] = None) -> Exp:
    """
    Lift a parsed function to a program term.

    Args:
        fn: parsed function
        indicator: name of the indicator variable, if any
        blinding: table for statements that are not pact/pbool/indicator/control flow

    Returns:
        Exp; falling off the end of the function is normal termination
    """
    return Lifter(indicator, blinding).stmt(fn.body)


# ---------------------------------------------------------------- auto blinding

def _max_primitive_ids(*functions: SourceFunction) -> Tuple[int, int]:
    top_action, top_test = 0, 0

    def walk(node):
        nonlocal top_action, top_test
        action = _primitive_call(node, PACT)
        if action is not None:
            top_action = max(top_action, action)
        test = _primitive_call(node, PBOOL)
        if test is not None:
            top_test = max(top_test, test)
        for child in _children(node):
            walk(child)

    for fn in functions:
        walk(fn.body)
    return top_action, top_test


def _call(callee: str, ident: int, coord) -> c_ast.FuncCall:
    return c_ast.FuncCall(
        c_ast.ID(callee, coord=coord),
        c_ast.ExprList([c_ast.Constant('int', str(ident), coord=coord)], coord=coord),
        coord=coord,
    )


class _Blinder:
    """Rewrites a copied function body in place, replacing opaque code with pact/pbool calls."""

    def __init__(self, table: BlindingTable, indicator: Optional[str]):
        self.table = table
        self.indicator = indicator

    def _opaque(self, node) -> c_ast.Node:
        return _call(PACT, self.table.action_id(canonical_text(node)), node.coord)

    def stmt(self, node):
        if node is None:
            return None
        if isinstance(node, c_ast.Compound):
            node.block_items = [self.stmt(item) for item in node.block_items or []]
            return node
        if isinstance(node, c_ast.If):
            node.cond = self.cond(node.cond)
            node.iftrue = self.stmt(node.iftrue)
            node.iffalse = self.stmt(node.iffalse)
            return node
        if isinstance(node, c_ast.While):
            node.cond = self.cond(node.cond)
            node.stmt = self.stmt(node.stmt)
            return node
        if isinstance(node, c_ast.DoWhile):
            node.cond = node.cond if int_constant(node.cond) == 0 else self.cond(node.cond)
            node.stmt = self.stmt(node.stmt)
            return node
        if isinstance(node, c_ast.For):
            node.init = self.stmt(node.init)
            node.cond = None if node.cond is None else self.cond(node.cond)
            node.next = self.stmt(node.next)
            node.stmt = self.stmt(node.stmt)
            return node
        if isinstance(node, c_ast.Label):
            node.stmt = self.stmt(node.stmt)
            return node
        if isinstance(node, (c_ast.Goto, c_ast.Break, c_ast.Continue, c_ast.EmptyStatement)):
            return node
        if isinstance(node, c_ast.Return):
            if node.expr is None:
                return node
            action = self._opaque(node)
            return c_ast.Compound([action, c_ast.Return(None, coord=node.coord)], coord=node.coord)
        if isinstance(node, c_ast.DeclList):
            items = [self.stmt(d) for d in node.decls]
            if all(item is d for item, d in zip(items, node.decls)):
                return node
            # mixed list: lifted item by item, never printed back as C
            return c_ast.ExprList(items, coord=node.coord)
        if isinstance(node, c_ast.Decl):
            if node.name == self.indicator or node.init is None:
                return node
            return self._opaque(node)
        if isinstance(node, c_ast.Assignment) and self._indicator_assignment(node):
            return node
        if _primitive_call(node, PACT) is not None:
            return node
        if isinstance(node, c_ast.ExprList):
            node.exprs = [self.stmt(e) for e in node.exprs]
            return node
        return self._opaque(node)

    def cond(self, node):
        if _primitive_call(node, PBOOL) is not None or int_constant(node) is not None:
            return node
        if isinstance(node, c_ast.UnaryOp) and node.op == '!':
            node.expr = self.cond(node.expr)
            return node
        if isinstance(node, c_ast.BinaryOp) and node.op in ('&&', '||'):
            node.left = self.cond(node.left)
            node.right = self.cond(node.right)
            return node
        if isinstance(node, c_ast.BinaryOp) and node.op in ('==', '!=') and self._indicator_comparison(node):
            return node
        return _call(PBOOL, self.table.test_id(canonical_text(node)), node.coord)

    def _is_indicator(self, node) -> bool:
        return self.indicator is not None and isinstance(node, c_ast.ID) and node.name == self.indicator

    def _indicator_assignment(self, node: c_ast.Assignment) -> bool:
        return self._is_indicator(node.lvalue) and node.op == '=' and int_constant(node.rvalue) is not None

    def _indicator_comparison(self, node: c_ast.BinaryOp) -> bool:
        if self._is_indicator(node.left):
            return int_constant(node.right) is not None
        if self._is_indicator(node.right):
            return int_constant(node.left) is not None
        return False


def auto_blind(fn_a: SourceFunction, fn_b: SourceFunction,
               rules: Optional[IndicatorRules] = None) -> Tuple[BlindingTable, SourceFunction, SourceFunction]:
    """
    Replace every statement and condition that is not control flow, a primitive
    or an indicator operation with pact(n)/pbool(n). Ids come from one table
    keyed by canonical text, numbered above the ids already used in either input.
    """
    top_action, top_test = _max_primitive_ids(fn_a, fn_b)
    table = BlindingTable(next_action=top_action + 1, next_test=top_test + 1)
    blinded = []
    for fn in (fn_a, fn_b):
        indicator = detect_indicator(fn, rules)
        node = copy.deepcopy(fn.node)
        _Blinder(table, indicator).stmt(node.body)
        blinded.append(SourceFunction(fn.name, node, fn.loc, blinded=True, indicator=indicator))
    logger.debug("blinded %d statements and %d conditions", len(table.actions), len(table.tests))
    return table, blinded[0], blinded[1]
