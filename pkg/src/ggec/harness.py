"""Experiment orchestration: spec files, the run grid, records and CSV tables.

An experiment spec is an INI file::

    [experiment]
    name = keijzer6-desk
    runs = 20            ; default 30
    base_seed = 0        ; run k uses seed base_seed + k
    output = results/keijzer6-desk

    [problem]
    name = keijzer6      ; keijzer6 | vladislavleva4 | santafe | csv

    [grammars]
    g0 = builtin:regression-g0

    [methods]
    use = CFGGP, GE, RandomSearch

    [initialisers]
    use = Random

    [engine]
    population = 200
    generations = 30

    [method:CFGGP-adaptive]
    method = CFGGP
    adaptive_mutation_depth = true
    max_tree_depth = none

Each entry of ``[methods] use`` is a method name or the label of a
``[method:LABEL]`` section.  ``[engine]`` keys apply to every method where
they are meaningful; section keys override them for one label.  Random
search gets ``population * generations`` samples unless
``random_search_population`` says otherwise.  Relative paths resolve
against the spec file's directory; without ``output`` results go to
``$GGEC_OUTPUT_DIR/<name>`` (default ``results/<name>``).
"""

from __future__ import annotations

import configparser
import csv
import hashlib
import io
import json
import logging
import math
import os
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from . import __version__
from .engines import METHOD_DEFAULTS, ConfigError, EngineConfig, RunRecord, run
from .grammar import Grammar, bind_variables, load_grammar, validate
from .initializers import METHODS as INIT_METHODS
from .initializers import InitConfig, grow
from .problems import SantaFeProblem, keijzer6_problem, load_csv, santa_fe_trail, vladislavleva4_problem
from .problems.regression import RegressionProblem
from .stats import cap_penalties, summarize

log = logging.getLogger(__name__)

OUTPUT_ENV = "GGEC_OUTPUT_DIR"
DEFAULT_RUNS = 30
STATISTICS = ("best", "mean", "best_so_far", "invalid")

_INIT_KEYS = {"random_codons": int, "random_max_depth": int, "sensible_max_depth": int,
              "ptc2_max_expansions": int, "unique": "bool"}
_ENGINE_KEYS = {"population": int, "generations": int, "elitism_fraction": float,
                "tournament_fraction": float, "crossover_rate": float, "mutation_rate": float,
                "max_tree_depth": "optint", "max_mutation_depth": int,
                "adaptive_mutation_depth": "bool", "adaptive_rule": str,
                "crossover_selection": str, "max_wraps": int}
_METHOD_KEYS = {
    "GE": {"population", "generations", "elitism_fraction", "tournament_fraction",
           "crossover_rate", "mutation_rate", "max_wraps"},
    "CFGGP": {"population", "generations", "elitism_fraction", "tournament_fraction",
              "crossover_rate", "mutation_rate", "max_tree_depth", "max_mutation_depth",
              "adaptive_mutation_depth", "adaptive_rule", "crossover_selection"},
    "RandomSearch": {"max_wraps"},
}


class SpecError(ValueError):
    """The experiment spec is malformed or inconsistent."""


# ---------------------------------------------------------------- spec


@dataclass
class MethodSpec:
    label: str
    method: str
    overrides: Dict[str, object] = field(default_factory=dict)


@dataclass
class ExperimentSpec:
    name: str
    problem: Dict[str, str]
    grammars: Dict[str, str]
    methods: List[MethodSpec]
    initialisers: List[str]
    runs: int = DEFAULT_RUNS
    base_seed: int = 0
    engine: Dict[str, object] = field(default_factory=dict)
    output: Optional[str] = None
    runs_defaulted: bool = False

    def resolved(self) -> dict:
        d = asdict(self)
        d.pop("output")
        return d

    def config_hash(self) -> str:
        blob = json.dumps(self.resolved(), sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def output_dir(self) -> Path:
        if self.output:
            return Path(self.output)
        return Path(os.environ.get(OUTPUT_ENV, "results")) / self.name


def _convert(key, raw, kind):
    raw = raw.strip()
    try:
        if kind == "bool":
            low = raw.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if kind == "optint":
            return None if raw.lower() in ("none", "") else int(raw)
        return kind(raw)
    except ValueError:
        raise SpecError(f"bad value for {key}: {raw!r}") from None


def _read_overrides(section, allowed_extra=()) -> Dict[str, object]:
    out = {}
    for key, raw in section.items():
        if key in _ENGINE_KEYS:
            out[key] = _convert(key, raw, _ENGINE_KEYS[key])
        elif key in _INIT_KEYS:
            out[key] = _convert(key, raw, _INIT_KEYS[key])
        elif key == "random_search_population":
            out[key] = _convert(key, raw, int)
        elif key not in allowed_extra:
            raise SpecError(f"unknown key {key!r} in [{section.name}]")
    return out


def _split_list(raw: str) -> List[str]:
    return [x.strip() for x in raw.replace("\n", ",").split(",") if x.strip()]


def parse_spec(text: str, base_dir: Path = Path(".")) -> ExperimentSpec:
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"), interpolation=None)
    try:
        cp.read_string(text)
    except configparser.Error as e:
        raise SpecError(f"cannot parse spec: {e}") from None
    for sec in ("experiment", "problem", "grammars", "methods"):
        if not cp.has_section(sec):
            raise SpecError(f"missing [{sec}] section")
    exp = cp["experiment"]
    name = exp.get("name", "experiment")
    runs_defaulted = "runs" not in exp
    runs = _convert("runs", exp.get("runs", str(DEFAULT_RUNS)), int)
    if runs < 1:
        raise SpecError("runs must be >= 1")
    base_seed = _convert("base_seed", exp.get("base_seed", "0"), int)
    output = exp.get("output")
    if output and not Path(output).is_absolute():
        output = str(base_dir / output)

    problem = dict(cp["problem"])
    if "name" not in problem:
        raise SpecError("[problem] needs a name")
    for key in ("path", "trail"):
        if key in problem and not Path(problem[key]).is_absolute():
            problem[key] = str(base_dir / problem[key])

    grammars = {}
    for label, src in cp["grammars"].items():
        if not src.startswith("builtin:") and not Path(src).is_absolute():
            src = str(base_dir / src)
        grammars[label] = src
    if not grammars:
        raise SpecError("[grammars] is empty")

    engine = _read_overrides(cp["engine"]) if cp.has_section("engine") else {}

    methods = []
    for label in _split_list(cp["methods"].get("use", "")):
        sec_name = f"method:{label}"
        if cp.has_section(sec_name):
            sec = cp[sec_name]
            method = sec.get("method", label)
            overrides = _read_overrides(sec, allowed_extra=("method",))
        else:
            method, overrides = label, {}
        if method not in METHOD_DEFAULTS:
            raise SpecError(f"unknown method {method!r} for {label!r}")
        methods.append(MethodSpec(label, method, overrides))
    if not methods:
        raise SpecError("[methods] use = ... lists no methods")

    inits = ["Random"]
    if cp.has_section("initialisers"):
        inits = _split_list(cp["initialisers"].get("use", "Random"))
    for i in inits:
        if i not in INIT_METHODS:
            raise SpecError(f"unknown initialiser {i!r}; expected one of {INIT_METHODS}")

    spec = ExperimentSpec(name, problem, grammars, methods, inits, runs, base_seed, engine, output,
                          runs_defaulted)
    for m in spec.methods:
        for i in spec.initialisers:
            engine_config(spec, m, i)
    return spec


def load_spec(path) -> ExperimentSpec:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise SpecError(f"cannot read spec {path}: {e.strerror}") from None
    return parse_spec(text, path.parent)


def engine_config(spec: ExperimentSpec, m: MethodSpec, init: str) -> EngineConfig:
    merged = dict(spec.engine)
    merged.update(m.overrides)
    init_kw = {k: merged.pop(k) for k in list(merged) if k in _INIT_KEYS}
    rs_pop = merged.pop("random_search_population", None)
    allowed = _METHOD_KEYS[m.method]
    kw = {k: v for k, v in merged.items() if k in allowed and (k in m.overrides or k in spec.engine)}
    stray = [k for k in m.overrides if k in _ENGINE_KEYS and k not in allowed]
    if stray:
        raise SpecError(f"{m.label}: {', '.join(stray)} do not apply to {m.method}")
    if m.method == "RandomSearch":
        pop = merged.get("population", METHOD_DEFAULTS["GE"]["population"])
        gens = merged.get("generations", METHOD_DEFAULTS["GE"]["generations"])
        if rs_pop is None:
            rs_pop = (METHOD_DEFAULTS["RandomSearch"]["population"]
                      if "population" not in merged and "generations" not in merged else pop * gens)
        kw["population"] = rs_pop
    try:
        return EngineConfig(method=m.method, init=InitConfig(method=init, **init_kw), **kw)
    except (ConfigError, ValueError, TypeError) as e:
        raise SpecError(f"{m.label} / {init}: {e}") from None


# ---------------------------------------------------------------- problems and grammars


def make_problem(p: Dict[str, str]):
    name = p["name"].lower()
    try:
        if name == "keijzer6":
            return keijzer6_problem()
        if name == "vladislavleva4":
            return vladislavleva4_problem(int(p.get("seed", "0")))
        if name == "santafe":
            return SantaFeProblem(santa_fe_trail(int(p.get("max_steps", "600")), p.get("trail")))
        if name == "csv":
            ds = load_csv(p["path"], p["target"], int(p.get("split_seed", "0")),
                          float(p.get("train_fraction", "0.75")))
            return RegressionProblem.from_dataset(p.get("label", Path(p["path"]).stem), ds)
    except KeyError as e:
        raise SpecError(f"[problem] {name} needs {e.args[0]!r}") from None
    raise SpecError(f"unknown problem {p['name']!r}")


def prepare_grammar(src: str, problem) -> Grammar:
    g = load_grammar(src)
    if isinstance(problem, RegressionProblem) and "var" in g.rules:
        g = bind_variables(g, problem.names)
    bad = [d for d in validate(g) if d.kind != "unreachable"]
    if bad:
        raise SpecError(f"grammar {src}: " + ", ".join(map(str, bad)))
    check_compatible(g, problem, src)
    return g


def check_compatible(g: Grammar, problem, label: str = "grammar", samples: int = 20) -> None:
    """Evaluate a few sampled derivations so a grammar/problem mismatch fails early."""
    a = g.analysis
    rng = random.Random(0)
    for _ in range(samples):
        t = grow(g, a, g.start, a.min_depth_nt[g.start] + 2, rng)
        try:
            problem.fitness(t)
        except Exception as e:
            raise SpecError(f"{label} does not fit problem {getattr(problem, 'name', '?')}: {e}") from None


# ---------------------------------------------------------------- running


@dataclass(frozen=True)
class Cell:
    grammar: str
    method: str
    initialiser: str

    def key(self, seed: int) -> str:
        return f"{self.grammar}__{self.method}__{self.initialiser}__seed{seed}"


def grid(spec: ExperimentSpec) -> List[Tuple[Cell, int]]:
    return [(Cell(g, m.label, i), spec.base_seed + k)
            for g in spec.grammars for m in spec.methods for i in spec.initialisers
            for k in range(spec.runs)]


def _cell_hash(spec: ExperimentSpec, cell: Cell, cfg: EngineConfig) -> str:
    blob = json.dumps({"problem": spec.problem, "grammar": spec.grammars[cell.grammar],
                       "config": asdict(cfg), "version": __version__}, sort_keys=True, default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _execute(job):
    cfg, problem, g, seed, identity, path = job
    rec = run(cfg, problem, g, seed=seed)
    for k, v in identity.items():
        setattr(rec, k, v)
    tmp = path.with_suffix(".tmp")
    tmp.write_text(json.dumps(rec.to_dict(), indent=1, sort_keys=True), encoding="utf-8")
    tmp.replace(path)
    return path


@dataclass
class RunSummary:
    output: Path
    computed: int
    skipped: int
    records: List[RunRecord]


def run_experiment(spec: ExperimentSpec, force: bool = False, jobs: int = 1,
                   output: Optional[Path] = None) -> RunSummary:
    out = Path(output) if output else spec.output_dir()
    rec_dir = out / "records"
    try:
        rec_dir.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise SpecError(f"cannot create output directory {out}: {e.strerror}") from None
    problem = make_problem(spec.problem)
    grammars = {label: prepare_grammar(src, problem) for label, src in spec.grammars.items()}
    methods = {m.label: m for m in spec.methods}

    todo, skipped, paths = [], 0, []
    for cell, seed in grid(spec):
        cfg = engine_config(spec, methods[cell.method], cell.initialiser)
        h = _cell_hash(spec, cell, cfg)
        path = rec_dir / f"{cell.key(seed)}.json"
        paths.append(path)
        if not force and path.exists():
            try:
                if json.loads(path.read_text(encoding="utf-8")).get("config_hash") == h:
                    skipped += 1
                    continue
            except (OSError, ValueError):
                pass
        identity = dict(problem=spec.problem["name"], grammar=cell.grammar, method=cell.method,
                        initialiser=cell.initialiser, config_hash=h)
        todo.append((cfg, problem, grammars[cell.grammar], seed, identity, path))

    if jobs > 1 and len(todo) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for p in pool.map(_execute, todo):
                log.info("wrote %s", p)
    else:
        for job in todo:
            log.info("wrote %s", _execute(job))

    records = [RunRecord.from_dict(json.loads(p.read_text(encoding="utf-8"))) for p in paths]
    write_results_csv(records, out / "results.csv")
    write_summary_csv(records, out / "summary.csv")
    write_manifest(spec, out / "manifest.json", len(records))
    return RunSummary(out, len(todo), skipped, records)


# ---------------------------------------------------------------- tables


CELL_COLUMNS = ("problem", "grammar", "method", "initialiser", "seed")


def _fmt(x) -> str:
    if isinstance(x, float):
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return repr(x)
    return str(x)


def results_rows(records: List[RunRecord]):
    for r in records:
        for gen in range(r.generations):
            for stat in STATISTICS:
                yield [r.problem, r.grammar, r.method, r.initialiser, r.seed, gen, stat,
                       getattr(r, stat)[gen]]


def write_results_csv(records: List[RunRecord], path: Path) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CELL_COLUMNS + ("generation", "statistic", "value"))
    for row in results_rows(records):
        w.writerow([_fmt(x) for x in row])
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def write_summary_csv(records: List[RunRecord], path: Path) -> None:
    cells: Dict[tuple, List[RunRecord]] = {}
    for r in records:
        cells.setdefault((r.problem, r.grammar, r.method, r.initialiser), []).append(r)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("problem", "grammar", "method", "initialiser", "runs", "final_best_mean",
                "final_best_ci_low", "final_best_ci_high", "test_error_mean", "test_error_ci_low",
                "test_error_ci_high", "evaluations_mean"))
    for key, recs in cells.items():
        s = summarize(cap_penalties([r.best_so_far[-1] for r in recs]))
        tests = [r.test_error for r in recs if r.test_error is not None]
        if tests:
            t = summarize(cap_penalties(tests))
            tcols = [t.mean, t.ci_low, t.ci_high]
        else:
            tcols = ["", "", ""]
        evals = sum(r.evaluations for r in recs) / len(recs)
        w.writerow([_fmt(x) for x in (*key, len(recs), s.mean, s.ci_low, s.ci_high, *tcols, evals)])
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def write_manifest(spec: ExperimentSpec, path: Path, n_records: int) -> None:
    defaults = []
    if spec.runs_defaulted:
        defaults.append(f"runs={DEFAULT_RUNS} (not set in spec)")
    data = {"name": spec.name, "config_hash": spec.config_hash(), "version": __version__,
            "base_seed": spec.base_seed, "runs": spec.runs, "records": n_records,
            "seed_policy": "base_seed + run index", "defaults": defaults, "spec": spec.resolved()}
    Path(path).write_text(json.dumps(data, indent=1, sort_keys=True, default=str) + "\n",
                          encoding="utf-8")


def read_results_csv(path) -> List[dict]:
    """Rows of a results CSV with typed ``seed``, ``generation`` and ``value``."""
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            need = set(CELL_COLUMNS) | {"generation", "statistic", "value"}
            if reader.fieldnames is None or not need <= set(reader.fieldnames):
                raise SpecError(f"{path}: not a results CSV (columns {reader.fieldnames})")
            rows = []
            for n, row in enumerate(reader, start=2):
                try:
                    row["seed"] = int(row["seed"])
                    row["generation"] = int(row["generation"])
                    row["value"] = float(row["value"])
                except (TypeError, ValueError):
                    raise SpecError(f"{path}:{n}: malformed row") from None
                rows.append(row)
    except OSError as e:
        raise SpecError(f"cannot read {path}: {e.strerror}") from None
    return rows
