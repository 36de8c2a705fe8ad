"""Derivation trees: the shared representation of CFG-GP, the tree-based
initialisers and GE's phenotype.

Trees are immutable named tuples; every operator returns a new tree and
shares untouched subtrees with its input.  A location is a tuple of child
indices leading from the root to a node.
"""

from __future__ import annotations

import json
import re
from typing import Dict, Iterator, List, NamedTuple, Optional, Tuple

from .grammar import CodonValue, Grammar, GrammarError, Literal, NonTerminal, Symbol

Location = Tuple[int, ...]


class DerivationTree(NamedTuple):
    symbol: Symbol
    chosen: Optional[int]
    children: Tuple["DerivationTree", ...]
    constant: Optional[float]
    depth: int
    size: int

    @property
    def name(self) -> str:
        return self.symbol.name

    @property
    def is_nonterminal(self) -> bool:
        return self.chosen is not None

    def __repr__(self):
        return f"DerivationTree({to_bracketed(self)})"


def node(name: str, chosen: int, children) -> DerivationTree:
    children = tuple(children)
    return DerivationTree(NonTerminal(name), chosen, children, None,
                          1 + max(c.depth for c in children),
                          1 + sum(c.size for c in children))


def literal(text_or_symbol) -> DerivationTree:
    sym = text_or_symbol if isinstance(text_or_symbol, Literal) else Literal(text_or_symbol)
    return DerivationTree(sym, None, (), None, 1, 1)


def constant(sym: CodonValue, value: float) -> DerivationTree:
    return DerivationTree(sym, None, (), value, 1, 1)


def depth(t: DerivationTree) -> int:
    return t.depth


def leaves(t: DerivationTree) -> List[DerivationTree]:
    """Terminal leaves in left-to-right order."""
    out, stack = [], [t]
    while stack:
        n = stack.pop()
        if n.children:
            stack.extend(reversed(n.children))
        else:
            out.append(n)
    return out


def leaf_token(n: DerivationTree) -> str:
    if n.constant is not None:
        return n.symbol.format(n.constant)
    return n.symbol.text


def phenotype(t: DerivationTree) -> str:
    """Terminal yield, single-space separated; constants use the step's decimals."""
    return " ".join(leaf_token(n) for n in leaves(t))


def iter_nodes(t: DerivationTree, at: Location = ()) -> Iterator[Tuple[Location, DerivationTree]]:
    """Pre-order walk yielding ``(location, node)``."""
    stack = [(at, t)]
    while stack:
        loc, n = stack.pop()
        yield loc, n
        for i in range(len(n.children) - 1, -1, -1):
            stack.append((loc + (i,), n.children[i]))


def nodes_by_nonterminal(t: DerivationTree) -> Dict[str, List[Location]]:
    out: Dict[str, List[Location]] = {}
    for loc, n in iter_nodes(t):
        if n.chosen is not None:
            out.setdefault(n.symbol.name, []).append(loc)
    return out


def get_subtree(t: DerivationTree, at: Location) -> DerivationTree:
    for i in at:
        t = t.children[i]
    return t


def replace_subtree(t: DerivationTree, at: Location, sub: DerivationTree) -> DerivationTree:
    """Return ``t`` with the subtree at ``at`` replaced by ``sub``.

    Both the old subtree and ``sub`` must be rooted at the same non-terminal.
    """
    old = get_subtree(t, at)
    if old.chosen is None or sub.chosen is None or old.symbol != sub.symbol:
        raise GrammarError(f"cannot replace {_label(old)} with {_label(sub)}")
    return _rebuild(t, at, sub)


def _rebuild(t, at, sub):
    if not at:
        return sub
    i = at[0]
    kids = t.children
    new_child = _rebuild(kids[i], at[1:], sub)
    kids = kids[:i] + (new_child,) + kids[i + 1:]
    return DerivationTree(t.symbol, t.chosen, kids, None,
                          1 + max(c.depth for c in kids), 1 + sum(c.size for c in kids))


def _label(n: DerivationTree) -> str:
    if n.chosen is not None:
        return f"<{n.symbol.name}>"
    return repr(leaf_token(n))


def node_depths(t: DerivationTree) -> Dict[Location, int]:
    """Depth of each node's position (root at 1)."""
    return {loc: len(loc) + 1 for loc, _ in iter_nodes(t)}


def check_tree(g: Grammar, t: DerivationTree) -> None:
    """Raise :class:`GrammarError` unless ``t`` is a complete derivation under ``g``."""
    if t.chosen is None or t.symbol.name != g.start:
        raise GrammarError(f"tree root {_label(t)} is not the start symbol <{g.start}>")
    _check(g, t)


def _check(g, t):
    if t.chosen is None:
        if t.children:
            raise GrammarError("terminal node with children")
        if isinstance(t.symbol, CodonValue):
            v = t.constant
            if v is None or not t.symbol.low - 1e-9 <= v <= t.symbol.high + 1e-9:
                raise GrammarError(f"constant {v} outside {t.symbol}")
            if abs(t.symbol.value(t.symbol.index_of(v)) - v) > 1e-9:
                raise GrammarError(f"constant {v} is not on the grid of {t.symbol}")
        return
    prods = g.rules.get(t.symbol.name)
    if prods is None:
        raise GrammarError(f"no rule for <{t.symbol.name}>")
    if not 0 <= t.chosen < len(prods):
        raise GrammarError(f"<{t.symbol.name}> has no production {t.chosen}")
    prod = prods[t.chosen]
    if len(prod) != len(t.children):
        raise GrammarError(f"<{t.symbol.name}>#{t.chosen} expects {len(prod)} children")
    for sym, child in zip(prod, t.children):
        if isinstance(sym, NonTerminal):
            if child.chosen is None or child.symbol != sym:
                raise GrammarError(f"expected <{sym.name}>, found {_label(child)}")
        elif child.chosen is not None or child.symbol != sym:
            raise GrammarError(f"expected {sym}, found {_label(child)}")
        _check(g, child)


def conforms(g: Grammar, t: DerivationTree) -> bool:
    try:
        check_tree(g, t)
    except GrammarError:
        return False
    return True


# ------------------------------------------------------------ debug format
#   name#chosen(child child ...)   non-terminal
#   "text"                          literal (JSON string)
#   {0.500}                         constant


def to_bracketed(t: DerivationTree) -> str:
    if t.chosen is not None:
        return f"{t.symbol.name}#{t.chosen}(" + " ".join(to_bracketed(c) for c in t.children) + ")"
    if t.constant is not None:
        return "{" + t.symbol.format(t.constant) + "}"
    return json.dumps(t.symbol.text)


_BR_TOKEN = re.compile(r'\s*(?:(?P<nt>[^\s#(){}"]+)#(?P<idx>\d+)\(|(?P<close>\))'
                       r'|(?P<str>"(?:[^"\\]|\\.)*")|\{(?P<num>[^}]*)\})')


def from_bracketed(g: Grammar, text: str) -> DerivationTree:
    """Inverse of :func:`to_bracketed`; symbols are taken from ``g``."""
    pos = 0

    def parse(expected: Symbol):
        nonlocal pos
        m = _BR_TOKEN.match(text, pos)
        if not m or m.group("close"):
            raise GrammarError(f"bad bracketed tree at offset {pos}")
        pos = m.end()
        if m.group("nt"):
            name, idx = m.group("nt"), int(m.group("idx"))
            if expected is not None and expected != NonTerminal(name):
                raise GrammarError(f"expected {expected}, found <{name}>")
            try:
                prod = g.rules[name][idx]
            except (KeyError, IndexError):
                raise GrammarError(f"no production <{name}>#{idx}") from None
            kids = [parse(sym) for sym in prod]
            m2 = _BR_TOKEN.match(text, pos)
            if not m2 or not m2.group("close"):
                raise GrammarError(f"expected ')' at offset {pos}")
            pos = m2.end()
            return node(name, idx, kids)
        if m.group("str") is not None:
            s = json.loads(m.group("str"))
            if expected != Literal(s):
                raise GrammarError(f"expected {expected}, found {s!r}")
            return literal(expected)
        if not isinstance(expected, CodonValue):
            raise GrammarError(f"expected {expected}, found a constant")
        return constant(expected, float(m.group("num")))

    tree = parse(NonTerminal(g.start))
    if text[pos:].strip():
        raise GrammarError(f"trailing text at offset {pos}")
    return tree
