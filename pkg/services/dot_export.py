"""
Graphviz export of CF-GKAT and GKAT automata via pydot.
"""
import logging
import os
from typing import Dict, Hashable, List

import pydot

from services.automata import ACCEPT, CfAutomaton, GkatAutomaton, GkatStep, StartState, Step
from services.boolean import ContextSpace
from services.continuations import Acc, Brk, Jmp, Ret

logger = logging.getLogger(__name__)


def _continuation_node(graph: pydot.Dot, seen: Dict[str, str], entry) -> str:
    text = str(entry)
    if text not in seen:
        node_id = f"c{len(seen)}"
        seen[text] = node_id
        graph.add_node(pydot.Node(node_id, label=text, shape='box', style='rounded'))
    return seen[text]


def _dynamics_edges(graph: pydot.Dot, source: str, row, space: ContextSpace, conts: Dict[str, str]) -> None:
    grouped: Dict[object, List[str]] = {}
    for slot, entry in enumerate(row):
        if isinstance(entry, (Step, Acc, Brk, Ret, Jmp)):
            value, atom = space.unslot(slot)
            grouped.setdefault(entry, []).append(f"{value},{space.show_atom(atom)}")
    for entry, guards in grouped.items():
        label = " ; ".join(guards)
        if isinstance(entry, Step):
            graph.add_edge(pydot.Edge(source, f"s{entry.state}", label=f"{label} | {entry.action},{entry.value}"))
        else:
            target = _continuation_node(graph, conts, entry)
            graph.add_edge(pydot.Edge(source, target, label=label, color='black:black'))


def cf_automaton_to_dot(A: CfAutomaton, name: str = 'cfgkat') -> pydot.Dot:
    """States s<k>, the start as ŝ, jump-map rows from λ(label) nodes."""
    space = A.space
    graph = pydot.Dot(name, graph_type='digraph', rankdir='LR')
    conts: Dict[str, str] = {}
    start_state = A.start.state if isinstance(A.start, StartState) else None

    for k in range(A.state_count):
        label = 'ŝ' if k == start_state else f"s{k}"
        graph.add_node(pydot.Node(f"s{k}", label=label, shape='circle'))
    if start_state is None:
        graph.add_node(pydot.Node('start', label='ŝ', shape='circle', style='dashed'))
        _dynamics_edges(graph, 'start', A.start.dynamics, space, conts)

    for k, row in enumerate(A.states):
        _dynamics_edges(graph, f"s{k}", row, space, conts)
    for j, (label, row) in enumerate(A.jump_map.items()):
        node_id = f"lam{j}"
        graph.add_node(pydot.Node(node_id, label=f"λ({label})", shape='plaintext'))
        _dynamics_edges(graph, node_id, row, space, conts)
    return graph


def gkat_automaton_to_dot(G: GkatAutomaton, show_atom=None, name: str = 'gkat') -> pydot.Dot:
    """Nodes carry the lowered names (s, i); accepting atoms lead into ⊤."""
    show_atom = show_atom or (lambda a: f"α{a}")
    graph = pydot.Dot(name, graph_type='digraph', rankdir='LR')
    graph.add_node(pydot.Node('top', label='⊤', shape='doublecircle'))
    for s in range(G.state_count):
        attrs = {'shape': 'circle'}
        if s == G.start:
            attrs['penwidth'] = '2'
        graph.add_node(pydot.Node(f"q{s}", label=G.name(s), **attrs))

    for s, row in enumerate(G.states):
        steps: Dict[Hashable, List[str]] = {}
        accepting: List[str] = []
        for atom, t in enumerate(row):
            if t is ACCEPT:
                accepting.append(show_atom(atom))
            elif isinstance(t, GkatStep):
                steps.setdefault((t.action, t.state), []).append(show_atom(atom))
        for (action, target), atoms in steps.items():
            graph.add_edge(pydot.Edge(f"q{s}", f"q{target}", label=f"{' ; '.join(atoms)} | {action}"))
        if accepting:
            graph.add_edge(pydot.Edge(f"q{s}", 'top', label=' ; '.join(accepting), color='black:black'))
    return graph


def write_dot_files(A: CfAutomaton, lowered: Dict[Hashable, GkatAutomaton], folder: str, stem: str) -> List[str]:
    """
    Write `<stem>.dot` for the CF-GKAT automaton and `<stem>.i<k>.dot`
    for the automaton lowered at the k-th indicator value.

    Returns:
        Paths written, CF-GKAT first
    """
    os.makedirs(folder, exist_ok=True)
    paths = []
    path = os.path.join(folder, f"{stem}.dot")
    with open(path, 'w', encoding='utf-8') as f:
        f.write(cf_automaton_to_dot(A, stem).to_string())
    paths.append(path)
    for k, (value, G) in enumerate(lowered.items()):
        path = os.path.join(folder, f"{stem}.i{k}.dot")
        with open(path, 'w', encoding='utf-8') as f:
            f.write(gkat_automaton_to_dot(G, A.space.show_atom, f"{stem}_i{k}").to_string())
        paths.append(path)
    logger.debug("wrote %d dot files to %s", len(paths), folder)
    return paths
