import os

import pydot

from programs import prog1, prog3
from services.boolean import ContextSpace
from services.driver import compile_automaton, lower_all
from services.dot_export import cf_automaton_to_dot, gkat_automaton_to_dot, write_dot_files
from services.syntax import collect_alphabets


def automaton(e):
    return compile_automaton(e, ContextSpace(collect_alphabets(e, e)))


def test_cf_automaton_graph():
    A = automaton(prog1())
    text = cf_automaton_to_dot(A, 'prog').to_string()
    assert 'ŝ' in text
    assert 'λ(l0)' in text and 'λ(l1)' in text
    assert 'digraph' in text


def test_gkat_automaton_graph():
    lowered = lower_all(automaton(prog1()))
    (G,) = lowered.values()
    graph = gkat_automaton_to_dot(G)
    text = graph.to_string()
    assert '⊤' in text
    # one node per state plus the accepting sink
    assert len(graph.get_nodes()) == G.state_count + 1
    assert any('| p' in edge.get_label() for edge in graph.get_edges())


def test_written_files_are_named_per_indicator(tmp_path):
    A = automaton(prog3())
    paths = write_dot_files(A, lower_all(A), str(tmp_path / 'out'), 'prog')
    names = [os.path.basename(p) for p in paths]
    assert names == ['prog.dot', 'prog.i0.dot', 'prog.i1.dot', 'prog.i2.dot', 'prog.i3.dot']
    graphs = pydot.graph_from_dot_file(paths[1], encoding='utf-8')
    assert graphs and graphs[0].get_name() == 'prog_i0'
