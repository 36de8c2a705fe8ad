"""GE genotype-to-phenotype mapping and tree-to-genome back-mapping.

A genome is a non-empty tuple of unsigned 32-bit codons.  Mapping expands
the leftmost outstanding non-terminal first.  A rule with ``k > 1``
productions consumes one codon and picks production ``codon % k``; a rule
with a single production consumes nothing.  Each ``GECodonValue`` terminal
consumes one codon.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

from .derivation import DerivationTree, check_tree, constant, literal
from .grammar import CodonValue, Grammar, NonTerminal

CODON_MAX = 2**32 - 1
Genome = Tuple[int, ...]


@dataclass(frozen=True)
class MappingOutcome:
    tree: Optional[DerivationTree]
    codons_used: int
    wraps_used: int

    @property
    def valid(self) -> bool:
        return self.tree is not None


class _Exhausted(Exception):
    pass


def codon_constant(c: int, low: float, high: float, step: float) -> float:
    return CodonValue(low, high, step).value(c)


def map_genome(g: Grammar, genome: Sequence[int], max_wraps: int = 0) -> MappingOutcome:
    if not genome:
        raise ValueError("genome must be non-empty")
    rules = g.rules
    n = len(genome)
    state = [0, 0, 0]  # position, codons used, wraps used

    def next_codon():
        if state[0] == n:
            if state[2] >= max_wraps:
                raise _Exhausted
            state[2] += 1
            state[0] = 0
        c = genome[state[0]]
        state[0] += 1
        state[1] += 1
        return c

    def expand(name):
        prods = rules[name]
        k = len(prods)
        i = next_codon() % k if k > 1 else 0
        kids = []
        for sym in prods[i]:
            t = type(sym)
            if t is NonTerminal:
                kids.append(expand(sym.name))
            elif t is CodonValue:
                kids.append(constant(sym, sym.value(next_codon())))
            else:
                kids.append(literal(sym))
        return DerivationTree(NonTerminal(name), i, tuple(kids), None,
                              1 + max(c.depth for c in kids), 1 + sum(c.size for c in kids))

    try:
        tree = expand(g.start)
    except _Exhausted:
        return MappingOutcome(None, state[1], state[2])
    return MappingOutcome(tree, state[1], state[2])


def _degenerate(i: int, k: int, rng) -> int:
    if rng is None:
        return i
    return i + k * rng.randint(0, (CODON_MAX - i) // k)


def backmap(g: Grammar, t: DerivationTree, rng: Optional[random.Random] = None) -> Genome:
    """Genome that maps back to ``t`` with zero wraps.

    With an ``rng`` each codon is a uniformly drawn member of its residue
    class, so the genome keeps GE's degeneracy; without one the smallest
    codon is emitted.
    """
    check_tree(g, t)
    out = []
    stack = [t]
    while stack:
        n = stack.pop()
        if n.chosen is not None:
            k = len(g.rules[n.symbol.name])
            if k > 1:
                out.append(_degenerate(n.chosen, k, rng))
            stack.extend(reversed(n.children))
        elif n.constant is not None:
            sym = n.symbol
            out.append(_degenerate(sym.index_of(n.constant), sym.n_values, rng))
    if not out:
        # a grammar without choices still needs a non-empty genome
        out.append(_degenerate(0, 1, rng))
    return tuple(out)
