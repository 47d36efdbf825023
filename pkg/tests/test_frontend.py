import pytest

from programs import load_fixture
from services.errors import (
    DoWhileWithBreakOrLabel, FrontendSyntaxError, FunctionNotFound, NonBlindableStatement,
    UnsupportedConstruct,
)
from services.frontend import (
    IndicatorRules, analyze_indicator_candidates, auto_blind, canonical_text, clean_source,
    detect_indicator, int_constant, lift_to_exp, parse_function, parse_functions,
)
from services.oracle import trace_languages
from services.syntax import (
    SKIP, Act, Assign, BTrue, Break, Goto, If, IndEq, Label, Not, Prim, Return, Seq, While,
    collect_alphabets, count_actions, iter_exp, validate,
)


def lift(body, indicator=None):
    return lift_to_exp(parse_function(f"void f(void) {{ {body} }}"), indicator)


# ---------------------------------------------------------------- parsing

def test_single_call():
    assert lift("pact(1);") == Act(1)


def test_if_without_else():
    assert lift("if (pbool(83)) { pact(194); }") == If(Prim(83), Act(194), SKIP)


def test_hex_and_octal_ids():
    assert lift("pact(0xc5); pact(010);") == Seq(Act(197), Act(8))


def test_multiple_functions_in_order():
    functions = parse_functions(load_fixture('multi_a.c'))
    assert list(functions) == ['shared', 'only_here']
    assert functions['shared'].loc[0] == 1


def test_function_not_found():
    with pytest.raises(FunctionNotFound) as info:
        parse_function(load_fixture('multi_a.c'), 'missing')
    assert 'only_here, shared' in str(info.value)
    with pytest.raises(FunctionNotFound):
        parse_function(load_fixture('multi_a.c'))


def test_comments_and_directives_keep_positions():
    text = "#include <x.h>\n/* a\n b */ void f(void) { // c\n pact(1); }\n"
    cleaned = clean_source(text)
    assert cleaned.count('\n') == text.count('\n')
    assert 'include' not in cleaned and '//' not in cleaned
    e = lift_to_exp(parse_function(text))
    assert e == Act(1)
    assert e.loc == (4, 2)


def test_syntax_error_location():
    with pytest.raises(FrontendSyntaxError) as info:
        parse_functions("void f(void)\n{\n    pact(1)\n    pact(2);\n}\n")
    assert info.value.loc is not None
    assert info.value.loc[0] == 4
    assert 'pact' in info.value.message


def test_known_typedefs_parse():
    functions = parse_functions(load_fixture('blinding_a.c'))
    assert list(functions) == ['step']


def test_switch_is_unsupported():
    with pytest.raises(UnsupportedConstruct) as info:
        parse_function(load_fixture('switch.c'))
    assert info.value.construct == 'switch'
    assert info.value.loc[0] == 3


def test_continue_and_ternary_are_unsupported():
    with pytest.raises(UnsupportedConstruct):
        parse_function("void f(void) { while (pbool(1)) { continue; } }")
    with pytest.raises(UnsupportedConstruct):
        parse_function("void f(void) { int x = 0; if (pbool(1) ? 1 : 0) pact(1); }")


def test_int_constant():
    f = parse_function("void f(void) { g(0x1f, -3, 7UL, 'a'); }")
    args = f.body.block_items[0].args.exprs
    assert [int_constant(a) for a in args] == [31, -3, 7, None]


# ---------------------------------------------------------------- lifting

def test_do_while_is_unrolled_once():
    assert lift("do { pact(1); } while (pbool(2));") == Seq(Act(1), While(Prim(2), Act(1)))


def test_do_while_zero_is_its_body():
    assert lift("do { pact(1); } while (0);") == Act(1)


def test_for_ever():
    assert lift("for (;;) { pact(1); }") == While(BTrue(), Act(1))


def test_for_with_init_and_step():
    assert lift("for (pact(1); pbool(2); pact(3)) pact(4);") == Seq(
        Act(1), While(Prim(2), Seq(Act(4), Act(3)))
    )


def test_do_while_with_break_is_refused():
    with pytest.raises(DoWhileWithBreakOrLabel):
        lift("while (pbool(1)) { do { pact(1); break; } while (pbool(2)); }")


def test_do_while_with_inner_loop_break_is_fine():
    e = lift("do { while (pbool(1)) { break; } } while (pbool(2));")
    assert validate(e).is_valid


def test_indicator_statements():
    e = lift("int x; x = 2; if (x == 1) pact(7);", 'x')
    assert e == Seq(SKIP, Seq(Assign(2), If(IndEq(1), Act(7), SKIP)))


def test_indicator_comparison_either_side():
    assert lift("int x = 1; while (0 != x) pact(1);", 'x') == Seq(Assign(1), While(Not(IndEq(0)), Act(1)))


def test_labels_gotos_breaks_returns():
    e = lift("l: pact(1); while (pbool(1)) break; goto l; return;")
    assert e == Seq(
        Seq(Seq(Label('l'), Act(1)), While(Prim(1), Break())),
        Seq(Goto('l'), Return()),
    )


def test_opaque_code_needs_blinding():
    with pytest.raises(NonBlindableStatement) as info:
        lift("foo();")
    assert info.value.text == 'foo()'
    with pytest.raises(NonBlindableStatement):
        lift("if (k > 3) pact(1);")


def test_canonical_text_ignores_layout():
    a = parse_function("void f(void) { mpz_set( y,x ); }").body.block_items[0]
    b = parse_function("void f(void) {\n  mpz_set(y,\n          x);\n}").body.block_items[0]
    assert canonical_text(a) == canonical_text(b) == 'mpz_set(y, x)'


# ---------------------------------------------------------------- indicator detection

def test_calipso_flag_is_the_indicator():
    fn = parse_function(load_fixture('pollard_rho_calipso.c'))
    assert detect_indicator(fn) == 'factor_found'


def test_first_qualifying_candidate_wins():
    fn = parse_function(load_fixture('two_candidates.c'))
    candidates = {c.name: c for c in analyze_indicator_candidates(fn)}
    assert [c.name for c in analyze_indicator_candidates(fn)] == ['a', 'b', 'k']
    assert candidates['a'].qualifies and candidates['b'].qualifies
    assert not candidates['k'].qualifies
    assert candidates['k'].reason == 'assigned a non-constant value'
    assert detect_indicator(fn) == 'a'


def test_arithmetic_use_disqualifies():
    fn = parse_function("void f(void) { int k = 0; k = 3; if (k % 32 == 1) pact(1); }")
    (candidate,) = analyze_indicator_candidates(fn)
    assert not candidate.qualifies
    assert candidate.reason == "used arithmetically ('%')"
    assert detect_indicator(fn) is None


def test_other_escapes():
    reasons = {
        "int k = 0; g(k);": 'passed to a call',
        "int k = 0; k++;": 'incremented or decremented',
        "int k = 0; h(&k);": 'address taken',
        "int k = 0; k += 2;": "updated with '+='",
        "int k = n;": 'initialized with a non-constant',
        "double k = 0;": 'not an integer variable',
    }
    for body, reason in reasons.items():
        (candidate,) = analyze_indicator_candidates(parse_function(f"void f(void) {{ {body} }}"))
        assert candidate.reason == reason, body


def test_detection_rules():
    fn = parse_function("void f(void) { int k; k = 1; }")
    assert detect_indicator(fn) == 'k'
    assert detect_indicator(fn, IndicatorRules(allow_uninitialized=False)) is None
    assert detect_indicator(fn, IndicatorRules(enabled=False)) is None
    assert detect_indicator(fn, IndicatorRules(integer_types=('long',))) is None


# ---------------------------------------------------------------- auto blinding

def test_shared_table_across_inputs():
    a = parse_function(load_fixture('blinding_a.c'))
    b = parse_function(load_fixture('blinding_b.c'))
    table, fa, fb = auto_blind(a, b)
    # pact(1) is taken already
    assert table.actions == {'mpz_set(y, x)': 2, 'a++': 3, 'a += 1': 4}
    assert table.tests == {'mpz_cmp_ui(n, 1) != 0': 1}
    ea, eb = lift_to_exp(fa), lift_to_exp(fb)
    assert ea == Seq(Act(2), Seq(If(Prim(1), Act(1), SKIP), Act(3)))
    assert eb == Seq(Act(2), Seq(If(Prim(1), Act(1), SKIP), Act(4)))


def test_blinding_leaves_sources_untouched():
    a = parse_function(load_fixture('blinding_a.c'))
    auto_blind(a, a)
    with pytest.raises(NonBlindableStatement):
        lift_to_exp(a)


def test_blinding_keeps_indicator_code():
    fn = parse_function(load_fixture('two_candidates.c'))
    table, blinded, _ = auto_blind(fn, fn)
    e = lift_to_exp(blinded, detect_indicator(blinded))
    assert validate(e).is_valid
    assert Assign(1) in list(iter_exp(e))
    assert sorted(table.tests) == ['b == 2', 'k % 32 == 1']
    assert count_actions(e) == 5
    assert table.to_dict()['actions'] == {'2': 'int b = 0', '3': 'long k = 0', '4': 'b = 2', '5': 'k = k * 3'}


def test_blinded_return_value():
    fn = parse_function("int f(void) { if (pbool(1)) return g(); return 0; }")
    _, blinded, _ = auto_blind(fn, fn)
    e = lift_to_exp(blinded)
    assert e == Seq(If(Prim(1), Seq(Act(1), Return()), SKIP), Seq(Act(2), Return()))


LATE_INDICATOR = "void f(void) { int a; int b = 0; a = 1; foo(a); b = 1; if (b == 1) pact(1); }"


def test_blinding_pins_indicator_detected_before_blinding():
    fn = parse_function(LATE_INDICATOR)
    assert detect_indicator(fn) == 'b'
    table, blinded, _ = auto_blind(fn, fn)
    # once blinded, `a` no longer reaches foo() and would otherwise qualify first
    assert detect_indicator(blinded) == 'b'
    e = lift_to_exp(blinded, detect_indicator(blinded))
    nodes = list(iter_exp(e))
    assert Assign(0) in nodes and Assign(1) in nodes
    assert sorted(table.actions) == ['a = 1', 'foo(a)']


def test_blinding_keeps_missing_indicator():
    fn = parse_function("void f(void) { int a; a = g(); pact(1); }")
    _, blinded, _ = auto_blind(fn, fn)
    assert detect_indicator(blinded) is None


# ---------------------------------------------------------------- loop normalization under the semantics

LOOP_BODIES = [
    ("pact(1); if (pbool(1)) pact(2);", "pbool(2)"),
    ("if (x == 1) { pact(1); x = 0; } else { pact(2); x = 1; }", "x != 0"),
    ("pact(1); if (pbool(1)) return; pact(2);", "pbool(2)"),
    ("while (pbool(1)) { pact(1); break; } pact(2);", "!pbool(2)"),
]


def same_traces(a, b, bound=4):
    e, f = lift(f"int x = 0; {a}", 'x'), lift(f"int x = 0; {b}", 'x')
    alphabets = collect_alphabets(e, f)
    return trace_languages(e, alphabets, bound) == trace_languages(f, alphabets, bound)


@pytest.mark.parametrize('body, cond', LOOP_BODIES)
def test_do_while_matches_unrolling(body, cond):
    loop = f"do {{ {body} }} while ({cond});"
    assert same_traces(loop, f"{body} while ({cond}) {{ {body} }}")
    assert same_traces(loop, f"top: {body} if ({cond}) goto top;")


@pytest.mark.parametrize('body, cond', LOOP_BODIES[:3])
def test_for_matches_unrolling(body, cond):
    loop = f"for (pact(5); {cond}; pact(6)) {{ {body} }}"
    assert same_traces(loop, f"pact(5); while ({cond}) {{ {body} pact(6); }}")
    assert same_traces(loop, f"pact(5); top: if ({cond}) {{ {body} pact(6); goto top; }}")


def test_unrolling_comparison_sees_differences():
    assert not same_traces("do { pact(1); } while (pbool(2));", "while (pbool(2)) { pact(1); }")
