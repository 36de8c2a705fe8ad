"""Language-preserving grammar rewrites and GE bias diagnostics."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache, reduce
from typing import Dict, List

from .grammar import Grammar, GrammarError, Literal, NonTerminal, analyze


def balance(g: Grammar, nt: str) -> Grammar:
    """Duplicate the rarer of ``nt``'s terminating / recursive productions.

    Duplicates are taken round-robin from the rarer class and inserted after
    its last member, until both classes have the same size.
    """
    if nt not in g.rules:
        raise GrammarError(f"no rule <{nt}>")
    a = analyze(g)
    prods = list(g.rules[nt])
    rec = [i for i in range(len(prods)) if a.recursive_prod[(nt, i)]]
    term = [i for i in range(len(prods)) if not a.recursive_prod[(nt, i)]]
    if not rec or not term:
        raise GrammarError(f"<{nt}> has no {'recursive' if not rec else 'terminating'} "
                           "production; nothing to balance")
    if len(rec) == len(term):
        return g
    rare, common = (rec, term) if len(rec) < len(term) else (term, rec)
    extra = [prods[rare[j % len(rare)]] for j in range(len(common) - len(rare))]
    at = rare[-1] + 1
    prods[at:at] = extra
    rules = dict(g.rules)
    rules[nt] = tuple(prods)
    return Grammar(rules, g.start)


def inline_nonterminal(g: Grammar, nt: str) -> Grammar:
    """Substitute every use of ``nt`` by each of its productions and drop its rule.

    A production with several occurrences expands to the Cartesian product
    of ``nt``'s productions, in occurrence order.
    """
    if nt not in g.rules:
        raise GrammarError(f"no rule <{nt}>")
    if nt == g.start:
        raise GrammarError(f"cannot inline the start symbol <{nt}>")
    a = analyze(g)
    if a.recursive_nt[nt]:
        raise GrammarError(f"<{nt}> is recursive; inlining would not terminate")
    target = NonTerminal(nt)
    bodies = g.rules[nt]
    rules = {}
    for name, prods in g.rules.items():
        if name == nt:
            continue
        out = []
        for p in prods:
            slots = [bodies if s == target else ((s,),) for s in p]
            for combo in itertools.product(*slots):
                out.append(tuple(sym for part in combo for sym in part))
        rules[name] = tuple(out)
    return Grammar(rules, g.start)


def unlink(g: Grammar) -> Grammar:
    """Repeat each multi-production rule's list up to the LCM of all such counts.

    Single-production rules are left alone since GE consumes no codon there.
    """
    counts = [len(p) for p in g.rules.values() if len(p) > 1]
    if not counts:
        return g
    lcm = reduce(lambda x, y: x * y // math.gcd(x, y), counts)
    rules = {name: (prods * (lcm // len(prods)) if len(prods) > 1 else prods)
             for name, prods in g.rules.items()}
    return Grammar(rules, g.start)


@dataclass(frozen=True)
class BiasReport:
    termination_mass: Dict[str, float]
    terminal_sampling: Dict[str, float]
    codon_linkage: Dict[str, int]


def _terminal_key(sym) -> str:
    return sym.text if isinstance(sym, Literal) else str(sym)


def terminal_expectations(g: Grammar, depth_cap: int):
    """``(P(depth <= cap), {terminal: E[count * 1{depth <= cap}]})`` for the start symbol.

    Derivations pick productions uniformly at every non-terminal.
    """
    @lru_cache(maxsize=None)
    def prob(name, d):
        if d < 2:
            return 0.0
        prods = g.rules[name]
        return sum(_prod_prob(p, d) for p in prods) / len(prods)

    def _prod_prob(p, d):
        out = 1.0
        for s in p:
            if isinstance(s, NonTerminal):
                out *= prob(s.name, d - 1)
        return out

    @lru_cache(maxsize=None)
    def expect(name, d):
        if d < 2:
            return {}
        prods = g.rules[name]
        acc: Dict[str, float] = {}
        for p in prods:
            ps = [prob(s.name, d - 1) if isinstance(s, NonTerminal) else 1.0 for s in p]
            for j, s in enumerate(p):
                others = math.prod(ps[:j] + ps[j + 1:])
                if others == 0.0:
                    continue
                if isinstance(s, NonTerminal):
                    for key, v in expect(s.name, d - 1).items():
                        acc[key] = acc.get(key, 0.0) + v * others / len(prods)
                else:
                    key = _terminal_key(s)
                    acc[key] = acc.get(key, 0.0) + others / len(prods)
        return acc

    return prob(g.start, depth_cap), dict(expect(g.start, depth_cap))


def bias_report(g: Grammar, depth_cap: int) -> BiasReport:
    a = analyze(g)
    if depth_cap < a.min_depth_nt[g.start]:
        raise GrammarError(f"depth cap {depth_cap} below minimum depth {a.min_depth_nt[g.start]}")
    mass = {}
    for name, prods in g.rules.items():
        mass[name] = sum(not a.recursive_prod[(name, i)] for i in range(len(prods))) / len(prods)
    _, expected = terminal_expectations(g, depth_cap)
    total = sum(expected.values())
    sampling = {k: v / total for k, v in expected.items()}
    return BiasReport(mass, sampling, {name: len(p) for name, p in g.rules.items()})


def inlinable(g: Grammar) -> List[str]:
    """Non-terminals that :func:`inline_nonterminal` accepts."""
    a = analyze(g)
    return [n for n in g.rules if n != g.start and not a.recursive_nt[n]]


def balanceable(g: Grammar) -> List[str]:
    a = analyze(g)
    out = []
    for name, prods in g.rules.items():
        flags = {a.recursive_prod[(name, i)] for i in range(len(prods))}
        if flags == {True, False}:
            out.append(name)
    return out

