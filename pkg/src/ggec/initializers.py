"""Population initialisation: random genomes, sensible initialisation
(grammar-aware ramped half-and-half) and PTC2.

All tree builders take an explicit ``random.Random``.  Depth budgets follow
the convention of :mod:`ggec.grammar` (a non-terminal over terminals has
depth 2).
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import List, Tuple

from .derivation import DerivationTree, constant, literal, phenotype
from .grammar import CodonValue, Grammar, GrammarAnalysis, GrammarError, NonTerminal
from .mapping import Genome

METHODS = ("Random", "Sensible", "PTC2")


@dataclass(frozen=True)
class InitConfig:
    method: str = "Random"
    random_codons: int = 31
    random_max_depth: int = 6
    sensible_max_depth: int = 6
    ptc2_max_expansions: int = 31
    unique: bool = True
    rng_seed: int = 0

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown initialiser {self.method!r}; expected one of {METHODS}")
        if self.random_codons < 1:
            raise ValueError("random_codons must be >= 1")
        if self.ptc2_max_expansions < 1:
            raise ValueError("ptc2_max_expansions must be >= 1")

    def check(self, a: GrammarAnalysis, start: str) -> None:
        need = a.min_depth_nt[start]
        if self.method == "Sensible" and self.sensible_max_depth < need:
            raise GrammarError(f"sensible_max_depth {self.sensible_max_depth} < minimum depth {need}")


def random_genome(cfg: InitConfig, rng: random.Random) -> Genome:
    return tuple(rng.getrandbits(32) for _ in range(cfg.random_codons))


def _random_constant(sym: CodonValue, rng) -> DerivationTree:
    return constant(sym, sym.value(rng.randrange(sym.n_values)))


def _build(g, a, name, budget, rng, prefer_recursive):
    prods = g.rules[name]
    feasible = [i for i in range(len(prods)) if a.min_depth_prod[(name, i)] <= budget]
    if not feasible:
        raise GrammarError(f"<{name}> cannot terminate within depth {budget}")
    if prefer_recursive:
        deep = [i for i in feasible if a.recursive_prod[(name, i)]]
        if deep:
            feasible = deep
    i = feasible[rng.randrange(len(feasible))] if len(feasible) > 1 else feasible[0]
    kids = []
    for sym in prods[i]:
        t = type(sym)
        if t is NonTerminal:
            kids.append(_build(g, a, sym.name, budget - 1, rng, prefer_recursive))
        elif t is CodonValue:
            kids.append(_random_constant(sym, rng))
        else:
            kids.append(literal(sym))
    return DerivationTree(NonTerminal(name), i, tuple(kids), None,
                          1 + max(c.depth for c in kids), 1 + sum(c.size for c in kids))


def grow(g: Grammar, a: GrammarAnalysis, nt: str, max_depth: int, rng: random.Random) -> DerivationTree:
    """Uniform choice among the productions that can still terminate in budget."""
    return _build(g, a, nt, max_depth, rng, False)


def full(g: Grammar, a: GrammarAnalysis, nt: str, max_depth: int, rng: random.Random) -> DerivationTree:
    """Like :func:`grow` but restricted to recursive productions while any fit."""
    return _build(g, a, nt, max_depth, rng, True)


def ramp_levels(a: GrammarAnalysis, start: str, n: int, max_depth: int) -> List[Tuple[int, int, int]]:
    """``(depth, n_grow, n_full)`` per ramp level; remainders go to the shallow levels."""
    lo = a.min_depth_nt[start]
    if max_depth < lo:
        raise GrammarError(f"max depth {max_depth} below minimum depth {lo} of <{start}>")
    depths = list(range(lo, max_depth + 1))
    base, extra = divmod(n, len(depths))
    out = []
    for j, d in enumerate(depths):
        m = base + (1 if j < extra else 0)
        if m:
            out.append((d, math.ceil(m / 2), m // 2))
    return out


def sensible_population(g: Grammar, a: GrammarAnalysis, n: int, cfg: InitConfig,
                        rng: random.Random, attempts: int = 10) -> List[DerivationTree]:
    if n < 1:
        raise ValueError("population size must be >= 1")
    seen = set()
    out = []
    for d, n_grow, n_full in ramp_levels(a, g.start, n, cfg.sensible_max_depth):
        for builder, count in ((grow, n_grow), (full, n_full)):
            for _ in range(count):
                for _ in range(attempts if cfg.unique else 1):
                    t = builder(g, a, g.start, d, rng)
                    key = phenotype(t)
                    if key not in seen:
                        break
                seen.add(key)
                out.append(t)
    return out


class _Open:
    """Mutable placeholder used while PTC2 grows a tree."""

    __slots__ = ("name", "chosen", "children")

    def __init__(self, name):
        self.name = name
        self.chosen = None
        self.children = None


def ptc2_sample(g: Grammar, a: GrammarAnalysis, nt: str, max_expansions: int,
                rng: random.Random) -> Tuple[DerivationTree, int]:
    """PTC2 tree plus the number of counted (random) expansions.

    Frontier positions are picked uniformly and expanded with a uniformly
    chosen production until ``max_expansions`` expansions have been made;
    the remaining frontier is then closed with minimal-depth productions,
    which are not counted.
    """
    if max_expansions < 1:
        raise ValueError("max_expansions must be >= 1")
    rules = g.rules

    def open_children(holder, name, i):
        holder.chosen = i
        kids = []
        for sym in rules[name][i]:
            t = type(sym)
            if t is NonTerminal:
                child = _Open(sym.name)
                kids.append(child)
                frontier.append(child)
            elif t is CodonValue:
                kids.append(_random_constant(sym, rng))
            else:
                kids.append(literal(sym))
        holder.children = kids

    root = _Open(nt)
    frontier = [root]
    count = 0
    while frontier and count < max_expansions:
        j = rng.randrange(len(frontier))
        frontier[j], frontier[-1] = frontier[-1], frontier[j]
        pos = frontier.pop()
        open_children(pos, pos.name, rng.randrange(len(rules[pos.name])))
        count += 1

    def freeze(x):
        if isinstance(x, DerivationTree):
            return x
        if x.chosen is None:
            return minimal_tree(g, a, x.name, rng)
        kids = tuple(freeze(c) for c in x.children)
        return DerivationTree(NonTerminal(x.name), x.chosen, kids, None,
                              1 + max(c.depth for c in kids), 1 + sum(c.size for c in kids))

    return freeze(root), count


def ptc2(g: Grammar, a: GrammarAnalysis, nt: str, max_expansions: int,
         rng: random.Random) -> DerivationTree:
    return ptc2_sample(g, a, nt, max_expansions, rng)[0]


def minimal_tree(g: Grammar, a: GrammarAnalysis, nt: str, rng: random.Random) -> DerivationTree:
    """Smallest-depth completion of ``nt``, ties broken uniformly."""
    return _build_minimal(g, a, nt, rng)


def _build_minimal(g, a, name, rng):
    best = a.min_depth_nt[name]
    prods = g.rules[name]
    cands = [i for i in range(len(prods)) if a.min_depth_prod[(name, i)] == best]
    i = cands[rng.randrange(len(cands))] if len(cands) > 1 else cands[0]
    kids = []
    for sym in prods[i]:
        t = type(sym)
        if t is NonTerminal:
            kids.append(_build_minimal(g, a, sym.name, rng))
        elif t is CodonValue:
            kids.append(_random_constant(sym, rng))
        else:
            kids.append(literal(sym))
    return DerivationTree(NonTerminal(name), i, tuple(kids), None,
                          1 + max(c.depth for c in kids), 1 + sum(c.size for c in kids))


def initial_trees(g: Grammar, a: GrammarAnalysis, n: int, cfg: InitConfig,
                  rng: random.Random) -> List[DerivationTree]:
    """``n`` trees from the configured tree initialiser.

    ``Random`` means grow at ``random_max_depth`` for tree-based methods.
    """
    if cfg.method == "Sensible":
        return sensible_population(g, a, n, cfg, rng)
    if cfg.method == "PTC2":
        return [ptc2(g, a, g.start, cfg.ptc2_max_expansions, rng) for _ in range(n)]
    return [grow(g, a, g.start, cfg.random_max_depth, rng) for _ in range(n)]


def random_codon(rng: random.Random) -> int:
    return rng.getrandbits(32)
