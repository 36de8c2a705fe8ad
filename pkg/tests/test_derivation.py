import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ggec.derivation import (check_tree, conforms, constant, depth, from_bracketed, get_subtree,
                             iter_nodes, literal, node, node_depths, nodes_by_nonterminal, phenotype,
                             replace_subtree, to_bracketed)
from ggec.grammar import CodonValue, GrammarError, corpus_grammar, parse_bnf
from ggec.initializers import grow

E = parse_bnf("<e> ::= x | y | ( <e> <e> )\n<f> ::= z")


def ex(tok):
    return node("e", {"x": 0, "y": 1}[tok], [literal(tok)])


def pair(a, b):
    return node("e", 2, [literal("("), a, b, literal(")")])


def test_depth_examples():
    assert depth(ex("x")) == 2
    assert depth(pair(ex("x"), ex("x"))) == 3
    assert depth(from_bracketed(parse_bnf("<e> ::= x"), 'e#0("x")')) == 2


def test_phenotype_examples():
    assert phenotype(ex("x")) == "x"
    plus = parse_bnf("<e> ::= ( + <e> <e> ) | x | y")
    t = from_bracketed(plus, 'e#0("(" "+" e#1("x") e#2("y") ")")')
    assert phenotype(t) == "( + x y )"
    cv = CodonValue(-1.0, 1.0, 0.001)
    assert phenotype(node("c", 0, [constant(cv, 0.5)])) == "0.500"


def test_nodes_by_nonterminal_examples():
    assert nodes_by_nonterminal(ex("x")) == {"e": [()]}
    t = pair(ex("x"), ex("y"))
    assert nodes_by_nonterminal(t) == {"e": [(), (1,), (2,)]}
    g = parse_bnf("<e> ::= <f> x\n<f> ::= z")
    t2 = node("e", 0, [node("f", 0, [literal("z")]), literal("x")])
    assert set(nodes_by_nonterminal(t2)) == {"e", "f"}
    assert conforms(g, t2)


def test_replace_subtree_examples():
    t = pair(ex("x"), ex("x"))
    assert replace_subtree(t, (), t) == t
    u = replace_subtree(t, (2,), ex("y"))
    assert phenotype(u) == "( x y )"
    assert phenotype(t) == "( x x )"  # persistent
    with pytest.raises(GrammarError):
        replace_subtree(t, (1,), node("f", 0, [literal("z")]))
    with pytest.raises(GrammarError):
        replace_subtree(t, (0,), ex("x"))  # literal position


def test_bracketed_golden_ant():
    g = corpus_grammar("ant-g0")
    text = ('code#1(code#0(line#1(op#2("move()"))) line#0(condition#0("if(food_ahead())" "{" '
            'line#1(op#1("right()")) "}" "else" "{" line#1(op#0("left()")) "}")))')
    t = from_bracketed(g, text)
    assert to_bracketed(t) == text
    assert phenotype(t) == "move() if(food_ahead()) { right() } else { left() }"
    assert depth(t) == 6 and t.size == 19


def test_bracketed_constants():
    g = corpus_grammar("regression-g0")
    text = 'e#0("(" op2#2("*") e#2(v#1(c#0({0.500}))) e#2(v#0(var#0("x0"))) ")")'
    t = from_bracketed(g, text)
    assert phenotype(t) == "( * 0.500 x0 )"
    assert to_bracketed(t) == text


def test_check_tree_rejects_bad_trees():
    g = corpus_grammar("regression-g0")
    bad_index = node("e", 7, [literal("x0")])
    assert not conforms(g, bad_index)
    off_grid = from_bracketed(g, 'e#2(v#1(c#0({0.500})))')._replace()
    cv = g.rules["c"][0][0]
    wrong = node("e", 2, [node("v", 1, [node("c", 0, [constant(cv, 0.0005)])])])
    with pytest.raises(GrammarError):
        check_tree(g, wrong)
    assert conforms(g, off_grid)
    wrong_kid = node("e", 2, [node("v", 0, [node("c", 0, [constant(cv, 0.5)])])])
    assert not conforms(g, wrong_kid)


def test_node_depths_and_iteration_order():
    t = pair(ex("x"), pair(ex("y"), ex("x")))
    locs = [loc for loc, _ in iter_nodes(t)]
    assert locs[:3] == [(), (0,), (1,)]
    d = node_depths(t)
    assert d[()] == 1 and d[(2, 1)] == 3


@given(st.integers(0, 10_000))
@settings(max_examples=100, deadline=None)
def test_replace_preserves_conformance_and_bounds_depth(seed):
    g = corpus_grammar("regression-g0")
    a = g.analysis
    rng = random.Random(seed)
    t = grow(g, a, g.start, 7, rng)
    locs = [loc for loc, n in iter_nodes(t) if n.chosen is not None]
    at = locs[rng.randrange(len(locs))]
    name = get_subtree(t, at).symbol.name
    sub = grow(g, a, name, 5, rng)
    u = replace_subtree(t, at, sub)
    check_tree(g, u)
    assert u.depth <= max(t.depth, len(at) + sub.depth)
    assert get_subtree(u, at) == sub
    assert from_bracketed(g, to_bracketed(u)) == u
