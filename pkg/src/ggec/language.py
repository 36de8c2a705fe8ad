"""Bounded enumeration of derivations and an Earley recogniser.

Used to check that grammar rewrites preserve the generated language.
Enumeration stands every ``GECodonValue`` in for its lower bound, so a
constant terminal contributes one phenotype rather than one per grid point.
"""

from __future__ import annotations

import random
from typing import Dict, Iterable, List, Sequence, Set, Tuple

from .derivation import DerivationTree, constant, literal, node, phenotype
from .grammar import CodonValue, Grammar, Literal, NonTerminal
from .initializers import grow


class EnumerationLimit(RuntimeError):
    """More derivations than the caller allowed."""


def enumerate_trees(g: Grammar, nt: str, max_depth: int, limit: int = 1_000_000) -> List[DerivationTree]:
    """All complete derivation trees rooted at ``nt`` with depth <= ``max_depth``."""
    memo: Dict[Tuple[str, int], List[DerivationTree]] = {}

    def trees(name, d):
        key = (name, d)
        if key in memo:
            return memo[key]
        out: List[DerivationTree] = []
        if d >= 2:
            for i, prod in enumerate(g.rules[name]):
                options = []
                for sym in prod:
                    if isinstance(sym, NonTerminal):
                        options.append(trees(sym.name, d - 1))
                    elif isinstance(sym, CodonValue):
                        options.append([constant(sym, sym.value(0))])
                    else:
                        options.append([literal(sym)])
                n = 1
                for o in options:
                    n *= len(o)
                if len(out) + n > limit:
                    raise EnumerationLimit(f"more than {limit} trees for <{name}> at depth {d}")
                if n:
                    out.extend(node(name, i, kids) for kids in _product(options))
        memo[key] = out
        return out

    return trees(nt, max_depth)


def _product(options):
    if not options:
        yield ()
        return
    for head in options[0]:
        for rest in _product(options[1:]):
            yield (head,) + rest


def phenotype_set(g: Grammar, max_depth: int, limit: int = 1_000_000) -> Set[str]:
    """Distinct phenotypes of derivations with depth <= ``max_depth``.

    Works on strings rather than trees, de-duplicating per (non-terminal,
    depth), so duplicated productions do not inflate the search.
    """
    memo: Dict[Tuple[str, int], Set[str]] = {}

    def yields(name, d):
        key = (name, d)
        if key in memo:
            return memo[key]
        out: Set[str] = set()
        if d >= 2:
            for prod in g.rules[name]:
                options = []
                for sym in prod:
                    if isinstance(sym, NonTerminal):
                        options.append(sorted(yields(sym.name, d - 1)))
                    elif isinstance(sym, CodonValue):
                        options.append([sym.format(sym.value(0))])
                    else:
                        options.append([sym.text])
                n = 1
                for o in options:
                    n *= len(o)
                if n > limit:
                    raise EnumerationLimit(f"more than {limit} phenotypes for <{name}> at depth {d}")
                out.update(" ".join(parts) for parts in _product(options))
                if len(out) > limit:
                    raise EnumerationLimit(f"more than {limit} phenotypes for <{name}> at depth {d}")
        memo[key] = out
        return out

    return set(yields(g.start, max_depth))


def sample_phenotypes(g: Grammar, max_depth: int, n: int, rng: random.Random) -> Set[str]:
    a = g.analysis
    return {phenotype(t) for t in (grow(g, a, g.start, max_depth, rng) for _ in range(n))}


# ---------------------------------------------------------------- recogniser


def _matches(sym, tok: str) -> bool:
    if isinstance(sym, Literal):
        return sym.text == tok
    try:
        v = float(tok)
    except ValueError:
        return False
    if not sym.low - 1e-9 <= v <= sym.high + 1e-9:
        return False
    return sym.format(sym.value(sym.index_of(v))) == tok


def recognizes(g: Grammar, tokens: Sequence[str]) -> bool:
    """Earley recognition of a token sequence (the grammar has no epsilon rules)."""
    if isinstance(tokens, str):
        tokens = tokens.split()
    rules = g.rules
    n = len(tokens)
    chart: List[Set[Tuple[str, int, int, int]]] = [set() for _ in range(n + 1)]
    # item: (head, production index, dot, origin)
    for i in range(len(rules[g.start])):
        chart[0].add((g.start, i, 0, 0))
    for k in range(n + 1):
        agenda = list(chart[k])
        while agenda:
            item = agenda.pop()
            head, pi, dot, origin = item
            prod = rules[head][pi]
            if dot < len(prod):
                sym = prod[dot]
                if isinstance(sym, NonTerminal):
                    for j in range(len(rules[sym.name])):
                        new = (sym.name, j, 0, k)
                        if new not in chart[k]:
                            chart[k].add(new)
                            agenda.append(new)
                    # an already-completed sym at k can advance this item
                    for h2, p2, d2, o2 in list(chart[k]):
                        if h2 == sym.name and o2 == k and d2 == len(rules[h2][p2]):
                            new = (head, pi, dot + 1, origin)
                            if new not in chart[k]:
                                chart[k].add(new)
                                agenda.append(new)
                elif k < n and _matches(sym, tokens[k]):
                    chart[k + 1].add((head, pi, dot + 1, origin))
            else:
                for h2, p2, d2, o2 in list(chart[origin]):
                    prod2 = rules[h2][p2]
                    if d2 < len(prod2) and prod2[d2] == NonTerminal(head):
                        new = (h2, p2, d2 + 1, o2)
                        if new not in chart[k]:
                            chart[k].add(new)
                            agenda.append(new)
    return any(h == g.start and o == 0 and d == len(rules[h][p]) for h, p, d, o in chart[n])


def same_language_sample(before: Grammar, after: Grammar, phenos_before: Iterable[str],
                         phenos_after: Iterable[str]) -> List[Tuple[str, str]]:
    """Cross-recognise two phenotype samples; returns ``(direction, phenotype)`` failures."""
    bad = [("before->after", p) for p in phenos_before if not recognizes(after, p)]
    bad += [("after->before", p) for p in phenos_after if not recognizes(before, p)]
    return bad
