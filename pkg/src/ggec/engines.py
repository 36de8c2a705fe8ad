"""GE, CFG-GP and random search over a shared generational loop.

Fitness is minimised.  Invalid GE individuals (mappings that run out of
codons) and non-finite model outputs get ``inf``.  Every run is
deterministic given its seed: a single ``random.Random`` stream drives
initialisation, selection and variation in a fixed order.
"""

from __future__ import annotations

import math
import random
import sys
import time
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Dict, List, Optional, Sequence, Tuple

from .derivation import (DerivationTree, get_subtree, iter_nodes, nodes_by_nonterminal, phenotype,
                         replace_subtree)
from .grammar import Grammar, GrammarAnalysis, GrammarError, validate
from .initializers import InitConfig, grow, initial_trees, random_genome
from .mapping import Genome, backmap, map_genome

METHODS = ("GE", "CFGGP", "RandomSearch")
WORST = math.inf


class ConfigError(ValueError):
    pass


class _Default:
    def __repr__(self):
        return "DEFAULT"


DEFAULT = _Default()

# Default settings per method; random search gets the evolutionary budget plus 50.
METHOD_DEFAULTS = {
    "GE": dict(population=500, generations=50, elitism_fraction=0.01, tournament_fraction=0.01,
               crossover_rate=0.5, mutation_rate=1.0, max_tree_depth=None, max_mutation_depth=None,
               max_wraps=0),
    "CFGGP": dict(population=500, generations=50, elitism_fraction=0.01, tournament_fraction=0.01,
                  crossover_rate=0.9, mutation_rate=0.1, max_tree_depth=17, max_mutation_depth=4,
                  max_wraps=0),
    "RandomSearch": dict(population=25050, generations=1, elitism_fraction=0.0,
                         tournament_fraction=0.0, crossover_rate=0.0, mutation_rate=0.0,
                         max_tree_depth=None, max_mutation_depth=None, max_wraps=0),
}


@dataclass(frozen=True)
class EngineConfig:
    """Search settings; any field left at ``DEFAULT`` takes the method's default.

    ``mutation_rate`` is the per-offspring probability of mutation: for GE
    one mutation replaces exactly one codon, so 1.0 gives "one codon per
    individual".
    """

    method: str = "CFGGP"
    population: object = DEFAULT
    generations: object = DEFAULT
    elitism_fraction: object = DEFAULT
    tournament_fraction: object = DEFAULT
    crossover_rate: object = DEFAULT
    mutation_rate: object = DEFAULT
    max_tree_depth: object = DEFAULT
    max_mutation_depth: object = DEFAULT
    adaptive_mutation_depth: bool = False
    adaptive_rule: str = "deepest_min"
    crossover_selection: str = "by_name"
    max_wraps: object = DEFAULT
    init: InitConfig = field(default_factory=InitConfig)
    rng_seed: int = 0

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}; expected one of {METHODS}")
        for k, v in METHOD_DEFAULTS[self.method].items():
            if getattr(self, k) is DEFAULT:
                object.__setattr__(self, k, v)
        if self.population < 1 or self.generations < 1:
            raise ConfigError("population and generations must be >= 1")
        if self.method == "RandomSearch" and self.generations != 1:
            raise ConfigError("random search runs a single generation")
        if self.method != "CFGGP":
            if self.adaptive_mutation_depth:
                raise ConfigError(f"adaptive mutation depth is a CFG-GP option, not {self.method}")
            if self.max_tree_depth is not None or self.max_mutation_depth is not None:
                raise ConfigError(f"tree depth limits do not apply to {self.method}")
        else:
            if self.max_mutation_depth is None or self.max_mutation_depth < 1:
                raise ConfigError("CFG-GP needs max_mutation_depth >= 1")
        if self.adaptive_rule not in ("deepest_min", "longest_production"):
            raise ConfigError(f"unknown adaptive_rule {self.adaptive_rule!r}")
        if self.crossover_selection not in ("by_name", "by_pair"):
            raise ConfigError(f"unknown crossover_selection {self.crossover_selection!r}")
        for k in ("elitism_fraction", "tournament_fraction", "crossover_rate", "mutation_rate"):
            if not 0.0 <= getattr(self, k) <= 1.0:
                raise ConfigError(f"{k} must be in [0, 1]")
        if self.max_wraps < 0:
            raise ConfigError("max_wraps must be >= 0")

    @property
    def elite_count(self) -> int:
        return math.ceil(self.elitism_fraction * self.population - 1e-9)

    def with_(self, **changes) -> "EngineConfig":
        return replace(self, **changes)


@dataclass
class Individual:
    genome: Optional[Genome]
    tree: Optional[DerivationTree]
    phenotype: Optional[str]
    fitness: float

    @property
    def valid(self) -> bool:
        return self.tree is not None

    @property
    def representation(self):
        return self.genome if self.genome is not None else self.tree


class Evaluator:
    """Caches fitness by phenotype and counts evaluations."""

    def __init__(self, problem):
        self.problem = problem
        self.cache: Dict[str, float] = {}
        self.evaluations = 0
        self.unique_evaluations = 0

    def __call__(self, genome, tree) -> Individual:
        self.evaluations += 1
        if tree is None:
            return Individual(genome, None, None, WORST)
        key = phenotype(tree)
        fit = self.cache.get(key)
        if fit is None:
            fit = float(self.problem.fitness(tree))
            if math.isnan(fit):
                fit = WORST
            self.cache[key] = fit
            self.unique_evaluations += 1
        return Individual(genome, tree, key, fit)


# ---------------------------------------------------------------- selection


def tournament_size(fraction: float, n: int) -> int:
    return max(2, int(round(fraction * n)))


def tournament_select(pop: Sequence[Individual], fraction: float, rng: random.Random) -> Individual:
    n = len(pop)
    if n == 0:
        raise ValueError("empty population")
    cands = [pop[rng.randrange(n)] for _ in range(tournament_size(fraction, n))]
    best = min(c.fitness for c in cands)
    ties = [c for c in cands if c.fitness == best]
    return ties[rng.randrange(len(ties))] if len(ties) > 1 else ties[0]


# ---------------------------------------------------------------- GE operators


def ge_crossover(a: Genome, b: Genome, rng: random.Random, rate: float = 1.0,
                 cuts: Optional[Tuple[int, int]] = None) -> Tuple[Genome, Genome]:
    """Variable-length one-point crossover with an independent cut per parent.

    Cut pairs that would leave an offspring empty are redrawn.
    """
    if not a or not b:
        raise ValueError("genomes must be non-empty")
    if cuts is None and rng.random() >= rate:
        return a, b
    if cuts is not None:
        ca, cb = cuts
    else:
        while True:
            ca, cb = rng.randint(0, len(a)), rng.randint(0, len(b))
            if ca + len(b) - cb > 0 and cb + len(a) - ca > 0:
                break
    return tuple(a[:ca]) + tuple(b[cb:]), tuple(b[:cb]) + tuple(a[ca:])


def ge_mutate(genome: Genome, rng: random.Random) -> Genome:
    """Replace exactly one uniformly chosen codon by a fresh random codon."""
    if not genome:
        raise ValueError("genome must be non-empty")
    i = rng.randrange(len(genome))
    return genome[:i] + (rng.getrandbits(32),) + genome[i + 1:]


# ---------------------------------------------------------------- CFG-GP operators


def cfggp_crossover(a: DerivationTree, b: DerivationTree, depth_limit: Optional[int],
                    rng: random.Random, rate: float = 1.0,
                    selection: str = "by_name") -> Tuple[DerivationTree, DerivationTree]:
    """Swap subtrees rooted at the same non-terminal.

    ``by_name`` draws a shared non-terminal name uniformly, then a node of
    that name uniformly in each parent; ``by_pair`` draws uniformly over all
    matching node pairs.  An offspring deeper than ``depth_limit`` is
    replaced by its parent.
    """
    if rng.random() >= rate:
        return a, b
    na, nb = nodes_by_nonterminal(a), nodes_by_nonterminal(b)
    shared = [n for n in na if n in nb]
    if not shared:
        return a, b
    if selection == "by_pair":
        weights = [len(na[n]) * len(nb[n]) for n in shared]
        name = rng.choices(shared, weights)[0]
    else:
        name = shared[rng.randrange(len(shared))]
    la = na[name][rng.randrange(len(na[name]))]
    lb = nb[name][rng.randrange(len(nb[name]))]
    sa, sb = get_subtree(a, la), get_subtree(b, lb)
    c1 = replace_subtree(a, la, sb)
    c2 = replace_subtree(b, lb, sa)
    if depth_limit is not None:
        if c1.depth > depth_limit:
            c1 = a
        if c2.depth > depth_limit:
            c2 = b
    return c1, c2


def mutation_budget(a: GrammarAnalysis, g: Grammar, name: str, replaced_depth: int,
                    max_mut_depth: int, adaptive: bool, rule: str = "deepest_min") -> int:
    """Depth allowed for the regenerated subtree.

    Fixed mode uses ``max_mut_depth``.  Adaptive mode takes the larger of the
    depth needed by the non-terminal's deepest production and the depth of
    the subtree being replaced.  The budget never drops below what the
    non-terminal needs to terminate at all.
    """
    if adaptive:
        if rule == "longest_production":
            prods = g.rules[name]
            longest = max(range(len(prods)), key=lambda i: len(prods[i]))
            prod_depth = a.min_depth_prod[(name, longest)]
        else:
            prod_depth = a.deepest_production_depth(name)
        budget = max(prod_depth, replaced_depth)
    else:
        budget = max_mut_depth
    return max(budget, a.min_depth_nt[name])


@dataclass
class Mutation:
    tree: DerivationTree
    location: Tuple[int, ...]
    subtree: DerivationTree
    budget: int
    reverted: bool


def mutate_subtree(t: DerivationTree, g: Grammar, a: GrammarAnalysis, max_mut_depth: int,
                   adaptive: bool, depth_limit: Optional[int], rng: random.Random,
                   rule: str = "deepest_min") -> Mutation:
    """Subtree mutation with the details needed to inspect what was generated."""
    locs = [loc for loc, n in iter_nodes(t) if n.chosen is not None]
    loc = locs[rng.randrange(len(locs))]
    old = get_subtree(t, loc)
    name = old.symbol.name
    budget = mutation_budget(a, g, name, old.depth, max_mut_depth, adaptive, rule)
    sub = grow(g, a, name, budget, rng)
    new = replace_subtree(t, loc, sub)
    if depth_limit is not None and new.depth > depth_limit:
        return Mutation(t, loc, sub, budget, True)
    return Mutation(new, loc, sub, budget, False)


def cfggp_mutate(t: DerivationTree, g: Grammar, a: GrammarAnalysis, max_mut_depth: int,
                 adaptive: bool, depth_limit: Optional[int], rng: random.Random,
                 rule: str = "deepest_min") -> DerivationTree:
    return mutate_subtree(t, g, a, max_mut_depth, adaptive, depth_limit, rng, rule).tree


# ---------------------------------------------------------------- run loop


@dataclass
class RunRecord:
    best: List[float] = field(default_factory=list)
    mean: List[float] = field(default_factory=list)
    best_so_far: List[float] = field(default_factory=list)
    invalid: List[int] = field(default_factory=list)
    final_phenotype: Optional[str] = None
    final_fitness: float = WORST
    test_error: Optional[float] = None
    evaluations: int = 0
    unique_evaluations: int = 0
    problem: str = ""
    grammar: str = ""
    method: str = ""
    initialiser: str = ""
    seed: int = 0
    runtime_seconds: float = 0.0
    config_hash: str = ""

    @property
    def generations(self) -> int:
        return len(self.best)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "RunRecord":
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in names})


def _record_generation(rec: RunRecord, pop: Sequence[Individual]) -> None:
    fits = [ind.fitness for ind in pop]
    finite = [f for f in fits if math.isfinite(f)]
    best = min(fits)
    rec.best.append(best)
    rec.mean.append(sum(finite) / len(finite) if finite else WORST)
    rec.invalid.append(sum(1 for ind in pop if not ind.valid))
    prev = rec.best_so_far[-1] if rec.best_so_far else WORST
    rec.best_so_far.append(min(prev, best))


def _elites(pop, k):
    order = sorted(range(len(pop)), key=lambda i: pop[i].fitness)
    return [pop[i] for i in order[:k]]


class _Search:
    def __init__(self, cfg: EngineConfig, problem, g: Grammar, rng: random.Random):
        self.cfg, self.problem, self.g, self.rng = cfg, problem, g, rng
        self.a = g.analysis
        self.evaluate = Evaluator(problem)

    # -- initial populations
    def initial(self, n: int) -> List[Individual]:
        cfg, g, a, rng = self.cfg, self.g, self.a, self.rng
        cfg.init.check(a, g.start)
        if cfg.method == "CFGGP":
            return [self.evaluate(None, t) for t in initial_trees(g, a, n, cfg.init, rng)]
        if cfg.init.method == "Random":
            return [self.ge_individual(random_genome(cfg.init, rng)) for _ in range(n)]
        trees = initial_trees(g, a, n, cfg.init, rng)
        if cfg.method == "RandomSearch":
            return [self.evaluate(None, t) for t in trees]
        return [self.evaluate(backmap(g, t, rng), t) for t in trees]

    def ge_individual(self, genome: Genome) -> Individual:
        out = map_genome(self.g, genome, self.cfg.max_wraps)
        return self.evaluate(genome, out.tree)

    # -- variation
    def offspring(self, p1: Individual, p2: Individual) -> list:
        """Unevaluated child genomes or trees."""
        cfg, rng = self.cfg, self.rng
        if cfg.method == "GE":
            kids = ge_crossover(p1.genome, p2.genome, rng, cfg.crossover_rate)
            out = []
            for k in kids:
                if rng.random() < cfg.mutation_rate:
                    k = ge_mutate(k, rng)
                out.append(k)
            return out
        kids = cfggp_crossover(p1.tree, p2.tree, cfg.max_tree_depth, rng, cfg.crossover_rate,
                               cfg.crossover_selection)
        out = []
        for k in kids:
            if rng.random() < cfg.mutation_rate:
                k = cfggp_mutate(k, self.g, self.a, cfg.max_mutation_depth,
                                 cfg.adaptive_mutation_depth, cfg.max_tree_depth, rng,
                                 cfg.adaptive_rule)
            out.append(k)
        return out

    def realise(self, rep) -> Individual:
        if self.cfg.method == "GE":
            return self.ge_individual(rep)
        return self.evaluate(None, rep)


def run(cfg: EngineConfig, problem, g: Grammar, seed: Optional[int] = None) -> RunRecord:
    """One run; returns per-generation statistics and the final best solution."""
    bad = [d for d in validate(g) if d.kind != "unreachable"]
    if bad:
        raise GrammarError("grammar is not usable: " + ", ".join(map(str, bad)))
    sys.setrecursionlimit(max(sys.getrecursionlimit(), 20000))
    started = time.perf_counter()
    seed = cfg.rng_seed if seed is None else seed
    rng = random.Random(seed)
    search = _Search(cfg, problem, g, rng)
    rec = RunRecord(method=cfg.method, initialiser=cfg.init.method, seed=seed,
                    problem=getattr(problem, "name", ""))

    pop = search.initial(cfg.population)
    _record_generation(rec, pop)
    best = min(pop, key=lambda ind: ind.fitness)
    for _ in range(1, cfg.generations):
        nxt = _elites(pop, cfg.elite_count)
        while len(nxt) < cfg.population:
            p1 = tournament_select(pop, cfg.tournament_fraction, rng)
            p2 = tournament_select(pop, cfg.tournament_fraction, rng)
            for child in search.offspring(p1, p2):
                if len(nxt) < cfg.population:
                    nxt.append(search.realise(child))
        # elites are carried over, not re-evaluated, but still use budget
        search.evaluate.evaluations += cfg.elite_count
        pop = nxt
        _record_generation(rec, pop)
        gen_best = min(pop, key=lambda ind: ind.fitness)
        if gen_best.fitness < best.fitness:
            best = gen_best

    rec.final_phenotype = best.phenotype
    rec.final_fitness = best.fitness
    if best.tree is not None:
        rec.test_error = problem.test_error(best.tree)
    rec.evaluations = search.evaluate.evaluations
    rec.unique_evaluations = search.evaluate.unique_evaluations
    rec.runtime_seconds = time.perf_counter() - started
    return rec
