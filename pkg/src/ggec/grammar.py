"""BNF grammars: parsing, rendering, validation and structural analysis.

Depth convention used throughout the package: the depth of a derivation
tree is the number of nodes on its longest root-to-leaf path.  The root
non-terminal counts as 1 and terminals are leaves, so a non-terminal that
expands directly to terminals has depth 2.  Under this convention the
``<line> ::= <condition>`` production of the Santa Fe g0 grammar needs a
tree of depth 5 to terminate.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from functools import cached_property
from importlib import resources
from pathlib import Path
from typing import Dict, List, Mapping, Sequence, Tuple, Union


class GrammarError(ValueError):
    """Raised when a grammar cannot be used (bad structure, bad request)."""


class GrammarSyntaxError(GrammarError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


@dataclass(frozen=True)
class NonTerminal:
    name: str

    def __str__(self):
        return f"<{self.name}>"


@dataclass(frozen=True)
class Literal:
    text: str

    def __post_init__(self):
        if not self.text:
            raise GrammarError("literal text must be non-empty")

    def __str__(self):
        return self.text


@dataclass(frozen=True)
class CodonValue:
    """Numeric constant terminal ``<GECodonValue{low : high : step}>``.

    Values live on the grid ``low + k * step`` for ``k`` in ``[0, n_values)``.
    """

    low: float
    high: float
    step: float

    def __post_init__(self):
        if not self.low < self.high:
            raise GrammarError(f"GECodonValue needs low < high, got {self.low}, {self.high}")
        if not self.step > 0:
            raise GrammarError(f"GECodonValue needs step > 0, got {self.step}")
        span = (self.high - self.low) / self.step
        if abs(span - round(span)) > 1e-9:
            raise GrammarError("GECodonValue range is not a whole number of steps")

    @cached_property
    def n_values(self) -> int:
        return int(round((self.high - self.low) / self.step)) + 1

    @cached_property
    def decimals(self) -> int:
        # smallest number of decimals that represents the step exactly
        for d in range(16):
            if abs(round(self.step, d) - self.step) < 1e-12:
                return d
        return 15

    def value(self, index: int) -> float:
        v = round(self.low + (index % self.n_values) * self.step, self.decimals)
        return v + 0.0  # no negative zero

    def index_of(self, value: float) -> int:
        return int(round((value - self.low) / self.step))

    def format(self, value: float) -> str:
        return f"{value + 0.0:.{self.decimals}f}"

    def __str__(self):
        return f"<GECodonValue{{{self.low!r} : {self.high!r} : {self.step!r}}}>"


Symbol = Union[NonTerminal, Literal, CodonValue]
Production = Tuple[Symbol, ...]


@dataclass(frozen=True, eq=False)
class Grammar:
    """Immutable context-free grammar.

    ``rules`` maps each non-terminal name to its productions, in source
    order; both the rule order and the production order are significant
    (GE's modulo mapping indexes productions by position).
    """

    rules: Mapping[str, Tuple[Production, ...]]
    start: str

    def __post_init__(self):
        rules = {name: tuple(tuple(p) for p in prods) for name, prods in self.rules.items()}
        object.__setattr__(self, "rules", rules)

    def __eq__(self, other):
        if not isinstance(other, Grammar):
            return NotImplemented
        return (self.start == other.start
                and list(self.rules.items()) == list(other.rules.items()))

    def __hash__(self):
        return hash((self.start, tuple(self.rules.items())))

    @property
    def nonterminals(self) -> List[str]:
        return list(self.rules)

    @cached_property
    def analysis(self) -> "GrammarAnalysis":
        return analyze(self)

    def replace_rules(self, rules: Mapping[str, Sequence[Production]]) -> "Grammar":
        return Grammar(dict(rules), self.start)

    def __str__(self):
        return render(self)


# ---------------------------------------------------------------- parsing

_HEAD_RE = re.compile(r"\s*<([^<>\s|]+)>\s*::=")
_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+)
  | (?P<codon><GECodonValue\{(?P<cv>[^}]*)\}>)
  | (?P<quoted>"(?:[^"\\]|\\.)*"|'(?:[^'\\]|\\.)*')
  | (?P<meta>::=)
  | (?P<bar>\|)
  | (?P<nt><[^<>\s|]+>)
  | (?P<bare>[^\s|]+)
""", re.VERBOSE)
_EMBEDDED_NT = re.compile(r"<[A-Za-z_][\w\-]*>")


def _parse_codon_value(body: str, line: int, col: int) -> CodonValue:
    parts = [p.strip() for p in body.split(":")]
    if len(parts) != 3:
        raise GrammarSyntaxError("GECodonValue needs {low : high : step}", line, col)
    try:
        low, high, step = (float(p) for p in parts)
    except ValueError:
        raise GrammarSyntaxError(f"bad number in GECodonValue{{{body}}}", line, col) from None
    try:
        return CodonValue(low, high, step)
    except GrammarError as exc:
        raise GrammarSyntaxError(str(exc), line, col) from None


def _unquote(tok: str) -> str:
    if tok[0] == '"':
        return json.loads(tok)
    return tok[1:-1].replace("\\'", "'").replace("\\\\", "\\")


def parse_bnf(text: str) -> Grammar:
    """Parse BNF text into a :class:`Grammar`.

    One rule per logical line, ``<name> ::= alt | alt``; a line that does
    not open with ``<name> ::=`` continues the previous rule.  Blank lines
    and lines starting with ``#`` are ignored.  The first rule's head is the
    start symbol.  Undefined references are left for :func:`validate`.
    """
    rules: Dict[str, List[Production]] = {}
    current = None  # name of the rule being read
    alt: List[Symbol] = []
    alt_pos = (0, 0)
    expect_alt = False  # set after '::=' or '|'

    def close_rule(line_no, col):
        if current is not None and expect_alt:
            what = "trailing '|'" if rules[current] else "empty alternative"
            raise GrammarSyntaxError(f"{what} in rule <{current}>", line_no, col)

    for line_no, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        pos = 0
        head = _HEAD_RE.match(raw)
        if head:
            if current is not None:
                close_rule(line_no, 1)
                rules[current].append(tuple(alt))
            name = head.group(1)
            if name in rules:
                raise GrammarSyntaxError(f"duplicate rule <{name}>", line_no, head.start(1))
            current = name
            rules[name] = []
            alt, alt_pos, expect_alt = [], (line_no, head.end() + 1), True
            pos = head.end()
        elif current is None:
            raise GrammarSyntaxError("expected '<name> ::='", line_no, len(raw) - len(raw.lstrip()) + 1)

        while pos < len(raw):
            m = _TOKEN_RE.match(raw, pos)
            col = pos + 1
            pos = m.end()
            kind = m.lastgroup if m.lastgroup != "cv" else "codon"
            if kind == "ws":
                continue
            if kind == "meta":
                raise GrammarSyntaxError("unexpected '::='", line_no, col)
            if kind == "bar":
                if expect_alt or not alt:
                    raise GrammarSyntaxError(f"empty alternative in rule <{current}>", line_no, col)
                rules[current].append(tuple(alt))
                alt, alt_pos, expect_alt = [], (line_no, col), True
                continue
            if kind == "codon":
                sym = _parse_codon_value(m.group("cv"), line_no, col)
            elif kind == "quoted":
                text_ = _unquote(m.group("quoted"))
                if not text_:
                    raise GrammarSyntaxError("empty quoted terminal", line_no, col)
                sym = Literal(text_)
            elif kind == "nt":
                sym = NonTerminal(m.group("nt")[1:-1])
            else:
                tok = m.group("bare")
                if _EMBEDDED_NT.search(tok):
                    raise GrammarSyntaxError(
                        f"non-terminal inside token {tok!r}; separate symbols with whitespace",
                        line_no, col)
                sym = Literal(tok)
            alt.append(sym)
            expect_alt = False

    if current is None:
        raise GrammarSyntaxError("no rules found", 1, 1)
    if expect_alt:
        close_rule(*alt_pos)
    rules[current].append(tuple(alt))
    return Grammar(rules, next(iter(rules)))


def load_grammar(path: Union[str, Path]) -> Grammar:
    """Load a grammar file, or a corpus grammar given as ``builtin:<name>``."""
    path = str(path)
    if path.startswith("builtin:"):
        return parse_bnf(corpus_text(path[len("builtin:"):]))
    return parse_bnf(Path(path).read_text(encoding="utf-8"))


CORPUS = ("regression-g0", "regression-g6", "ant-g0", "ant-g1", "ant-g2", "ant-g3", "ant-g4")


def corpus_text(name: str) -> str:
    if name.endswith(".bnf"):
        name = name[:-4]
    if name not in CORPUS:
        raise GrammarError(f"unknown corpus grammar {name!r}; known: {', '.join(CORPUS)}")
    return resources.files("ggec").joinpath("grammars", f"{name}.bnf").read_text(encoding="utf-8")


def corpus_grammar(name: str) -> Grammar:
    return parse_bnf(corpus_text(name))


# ---------------------------------------------------------------- rendering

_BARE_OK = re.compile(r"[^\s|\"']+")


def _render_symbol(sym: Symbol) -> str:
    if isinstance(sym, NonTerminal):
        return f"<{sym.name}>"
    if isinstance(sym, CodonValue):
        return str(sym)
    text = sym.text
    if (_BARE_OK.fullmatch(text) and text != "::=" and not _EMBEDDED_NT.search(text)
            and not (text.startswith("<") and text.endswith(">"))):
        return text
    return json.dumps(text)


def render(g: Grammar) -> str:
    """Canonical BNF text; ``parse_bnf(render(g)) == g``."""
    lines = []
    for name, prods in g.rules.items():
        alts = " | ".join(" ".join(_render_symbol(s) for s in p) for p in prods)
        lines.append(f"<{name}> ::= {alts}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- validation


@dataclass(frozen=True)
class Diagnostic:
    kind: str  # "undefined" | "unreachable" | "non-terminating"
    name: str

    def __str__(self):
        return f"{self.kind}: {self.name}"


def _referenced(prods) -> List[str]:
    return [s.name for p in prods for s in p if isinstance(s, NonTerminal)]


def _reachable(g: Grammar) -> set:
    seen = set()
    todo = [g.start]
    while todo:
        name = todo.pop()
        if name in seen or name not in g.rules:
            continue
        seen.add(name)
        todo.extend(_referenced(g.rules[name]))
    return seen


def _min_depths(g: Grammar, undefined: float = math.inf):
    """Fixed point for minimum termination depths.

    Undefined names count as depth ``undefined`` (infinite by default).
    """
    nt_depth = {name: math.inf for name in g.rules}
    changed = True
    while changed:
        changed = False
        for name, prods in g.rules.items():
            for p in prods:
                d = 1 + max((nt_depth.get(s.name, undefined) if isinstance(s, NonTerminal) else 1
                             for s in p), default=1)
                if d < nt_depth[name]:
                    nt_depth[name] = d
                    changed = True
    return nt_depth


def validate(g: Grammar) -> List[Diagnostic]:
    """Diagnostics that make a grammar unusable; an empty list means usable."""
    out = []
    if g.start not in g.rules:
        out.append(Diagnostic("undefined", g.start))
    seen_undefined = set()
    for prods in g.rules.values():
        for name in _referenced(prods):
            if name not in g.rules and name not in seen_undefined:
                seen_undefined.add(name)
                out.append(Diagnostic("undefined", name))
    reach = _reachable(g)
    out.extend(Diagnostic("unreachable", name) for name in g.rules if name not in reach)
    # undefined references are already reported; do not blame their users too
    depths = _min_depths(g, undefined=1)
    out.extend(Diagnostic("non-terminating", name) for name, d in depths.items() if d == math.inf)
    return out


# ---------------------------------------------------------------- analysis


@dataclass(frozen=True)
class GrammarAnalysis:
    min_depth_nt: Dict[str, int]
    min_depth_prod: Dict[Tuple[str, int], int]
    recursive_prod: Dict[Tuple[str, int], bool]
    reachable: frozenset
    recursive_nt: Dict[str, bool] = field(default_factory=dict)

    def productions_within(self, name: str, budget: int, n: int) -> List[int]:
        return [i for i in range(n) if self.min_depth_prod[(name, i)] <= budget]

    def deepest_production_depth(self, name: str) -> int:
        return max(d for (nt, _), d in self.min_depth_prod.items() if nt == name)


def analyze(g: Grammar) -> GrammarAnalysis:
    """Minimum termination depths, recursion flags and reachability."""
    bad = [d for d in validate(g) if d.kind in ("undefined", "non-terminating")]
    if bad:
        raise GrammarError("grammar is not usable: " + ", ".join(map(str, bad)))
    nt_depth = _min_depths(g)
    prod_depth = {}
    for name, prods in g.rules.items():
        for i, p in enumerate(prods):
            prod_depth[(name, i)] = 1 + max(
                (nt_depth[s.name] if isinstance(s, NonTerminal) else 1 for s in p), default=1)

    # closure[a]: names derivable from a in one or more steps
    direct = {name: set(_referenced(prods)) for name, prods in g.rules.items()}
    closure = {}
    for name in g.rules:
        seen, todo = set(), list(direct[name])
        while todo:
            b = todo.pop()
            if b not in seen:
                seen.add(b)
                todo.extend(direct[b])
        closure[name] = seen

    recursive = {}
    for name, prods in g.rules.items():
        for i, p in enumerate(prods):
            recursive[(name, i)] = any(
                s.name == name or name in closure[s.name]
                for s in p if isinstance(s, NonTerminal))
    return GrammarAnalysis(
        min_depth_nt={k: int(v) for k, v in nt_depth.items()},
        min_depth_prod=prod_depth,
        recursive_prod=recursive,
        reachable=frozenset(_reachable(g)),
        recursive_nt={name: name in closure[name] for name in g.rules},
    )


def production_count(g: Grammar) -> int:
    return sum(len(prods) for prods in g.rules.values())


def bind_variables(g: Grammar, names: Sequence[str], rule: str = "var") -> Grammar:
    """Replace the productions of ``<var>`` with one literal per variable name."""
    if rule not in g.rules:
        raise GrammarError(f"grammar has no <{rule}> rule to bind variables into")
    if not names:
        raise GrammarError("no variable names to bind")
    rules = dict(g.rules)
    rules[rule] = tuple((Literal(n),) for n in names)
    return Grammar(rules, g.start)
