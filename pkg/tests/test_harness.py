import csv
import json
from pathlib import Path

import pytest

from ggec.cli import main
from ggec.harness import (SpecError, engine_config, grid, load_spec, parse_spec, read_results_csv,
                          run_experiment)
from ggec.plotting import plot_results

DATA = Path(__file__).parent / "data"

SMALL = """
[experiment]
name = small
runs = 3
base_seed = 10

[problem]
name = keijzer6

[grammars]
g0 = builtin:regression-g0

[methods]
use = CFGGP, GE

[initialisers]
use = Random, Sensible

[engine]
population = 12
generations = 3
"""


@pytest.fixture
def small_spec():
    return parse_spec(SMALL)


def test_grid_arithmetic(small_spec):
    cells = grid(small_spec)
    assert len(cells) == 12
    assert sorted({seed for _, seed in cells}) == [10, 11, 12]


def test_run_writes_records_and_is_idempotent(small_spec, tmp_path):
    res = run_experiment(small_spec, output=tmp_path)
    assert res.computed == 12 and res.skipped == 0
    assert len(list((tmp_path / "records").glob("*.json"))) == 12
    first = (tmp_path / "results.csv").read_bytes()
    again = run_experiment(small_spec, output=tmp_path)
    assert again.computed == 0 and again.skipped == 12
    assert (tmp_path / "results.csv").read_bytes() == first
    forced = run_experiment(small_spec, force=True, jobs=2, output=tmp_path)
    assert forced.computed == 12
    assert (tmp_path / "results.csv").read_bytes() == first


def test_outputs_layout(small_spec, tmp_path):
    run_experiment(small_spec, output=tmp_path)
    rows = read_results_csv(tmp_path / "results.csv")
    # 12 runs x 3 generations x 4 statistics
    assert len(rows) == 144
    assert {r["statistic"] for r in rows} == {"best", "mean", "best_so_far", "invalid"}
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["config_hash"] == small_spec.config_hash()
    assert manifest["records"] == 12 and manifest["defaults"] == []
    with open(tmp_path / "summary.csv") as fh:
        summary = list(csv.DictReader(fh))
    assert len(summary) == 4
    assert all(float(r["evaluations_mean"]) == 36 for r in summary)


def test_changed_spec_recomputes(small_spec, tmp_path):
    run_experiment(small_spec, output=tmp_path)
    changed = parse_spec(SMALL.replace("generations = 3", "generations = 4"))
    assert run_experiment(changed, output=tmp_path).computed == 12


def test_random_search_matched_budget():
    spec = parse_spec(SMALL.replace("use = CFGGP, GE", "use = RandomSearch"))
    cfg = engine_config(spec, spec.methods[0], "Random")
    assert (cfg.population, cfg.generations) == (36, 1)
    plain = parse_spec(SMALL.replace("use = CFGGP, GE", "use = RandomSearch")
                       .replace("population = 12\ngenerations = 3", ""))
    assert engine_config(plain, plain.methods[0], "Random").population == 25050


def test_method_sections():
    text = SMALL.replace("use = CFGGP, GE", "use = fixed, adaptive") + """
[method:fixed]
method = CFGGP

[method:adaptive]
method = CFGGP
adaptive_mutation_depth = true
max_tree_depth = none
"""
    spec = parse_spec(text)
    cfg = engine_config(spec, spec.methods[1], "Random")
    assert cfg.adaptive_mutation_depth and cfg.max_tree_depth is None
    assert engine_config(spec, spec.methods[0], "Random").max_tree_depth == 17


@pytest.mark.parametrize("bad", [
    SMALL.replace("[grammars]", "[grams]"),
    SMALL.replace("use = CFGGP, GE", "use = Hill"),
    SMALL.replace("use = Random, Sensible", "use = Ramped"),
    SMALL.replace("generations = 3", "generations = three"),
    SMALL.replace("generations = 3", "colour = red"),
    SMALL.replace("runs = 3", "runs = 0"),
    SMALL + "\n[method:GE]\nmax_tree_depth = 9\n",
    "not an ini file",
])
def test_spec_errors(bad):
    with pytest.raises(SpecError):
        parse_spec(bad)


def test_problem_grammar_mismatch(tmp_path):
    spec = parse_spec(SMALL.replace("keijzer6", "santafe"))
    with pytest.raises(SpecError):
        run_experiment(spec, output=tmp_path)


def test_output_env(monkeypatch, tmp_path, small_spec):
    monkeypatch.setenv("GGEC_OUTPUT_DIR", str(tmp_path))
    assert small_spec.output_dir() == tmp_path / "small"


def test_shipped_specs_parse():
    root = Path(__file__).parents[1] / "src" / "ggec" / "experiments"
    specs = sorted(root.glob("*.ini"))
    assert len(specs) >= 5
    for p in specs:
        s = load_spec(p)
        assert s.methods and s.grammars


def test_runs_default_is_flagged(tmp_path):
    spec = parse_spec(SMALL.replace("runs = 3\n", ""))
    assert spec.runs == 30 and spec.runs_defaulted


# ---------------------------------------------------------------- plotting


def test_plot_golden(tmp_path):
    out = plot_results(DATA / "tiny_results.csv", tmp_path)
    assert len(out) == 1
    assert out[0].read_bytes() == (DATA / "tiny_keijzer6.svg").read_bytes()


def test_plot_legend_entries(tmp_path):
    svg = plot_results(DATA / "tiny_results.csv", tmp_path)[0].read_text()
    for label in ("CFGGP / Random", "GE / Random", "RandomSearch / Random"):
        assert svg.count(label) == 1


def test_plot_single_cell(tmp_path):
    path = tmp_path / "one.csv"
    path.write_text("problem,grammar,method,initialiser,seed,generation,statistic,value\n"
                    "p,g,CFGGP,Random,0,0,best_so_far,1.0\np,g,CFGGP,Random,0,1,best_so_far,0.5\n")
    out = plot_results(path, tmp_path / "plots")
    assert out[0].name == "p.svg" and out[0].read_text().count("CFGGP / Random") == 1


def test_plot_malformed(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,b\n1,2\n")
    with pytest.raises(SpecError):
        plot_results(path, tmp_path)


# ---------------------------------------------------------------- cli


def test_cli_run_and_plot(tmp_path, capsys):
    spec = tmp_path / "s.ini"
    spec.write_text(SMALL.replace("runs = 3", "runs = 1"))
    out = tmp_path / "out"
    assert main(["run", str(spec), "--out", str(out)]) == 0
    assert "4 run(s) computed" in capsys.readouterr().out
    assert main(["run", str(spec), "--out", str(out)]) == 0
    assert "0 run(s) computed" in capsys.readouterr().out
    assert main(["plot", str(out / "results.csv")]) == 0
    assert (out / "plots" / "keijzer6.svg").exists()


def test_cli_grammar_analyze(capsys):
    assert main(["grammar", "analyze", "builtin:ant-g0"]) == 0
    text = capsys.readouterr().out
    assert any("<condition>" in line and "min_depth=5" in line for line in text.splitlines())
    assert main(["grammar", "analyze", "builtin:ant-g0", "--json"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["nonterminals"]["line"]["productions"][0]["min_depth"] == 5


def test_cli_grammar_rewrites(tmp_path, capsys):
    g = tmp_path / "g.bnf"
    g.write_text("<e> ::= x | x | y\n")
    assert main(["grammar", "bias", str(g)]) == 0
    assert "x  0.6667" in capsys.readouterr().out
    out = tmp_path / "u.bnf"
    assert main(["grammar", "unlink", "builtin:ant-g0", "-o", str(out)]) == 0
    assert out.read_text().startswith("<code> ::=")
    assert main(["grammar", "inline", "builtin:ant-g0", "op"]) == 0
    assert "<op>" not in capsys.readouterr().out
    assert main(["grammar", "balance", "builtin:ant-g0", "line"]) == 0


def test_cli_errors(tmp_path, capsys):
    assert main(["grammar", "inline", "builtin:ant-g0", "line"]) == 1
    assert main(["grammar", "analyze", str(tmp_path / "nope.bnf")]) == 1
    bad = tmp_path / "bad.bnf"
    bad.write_text("<e> ::= x |\n")
    assert main(["grammar", "analyze", str(bad)]) == 1
    assert "bad.bnf" in capsys.readouterr().err
    spec = tmp_path / "s.ini"
    spec.write_text("[experiment]\n")
    assert main(["run", str(spec)]) == 1
    assert main(["frobnicate"]) == 1
    assert main(["run", str(spec), "--jobs", "0"]) == 1


def test_cli_internal_error_exit_2(monkeypatch, tmp_path):
    import ggec.harness

    def boom(*a, **k):
        raise RuntimeError("boom")

    spec = tmp_path / "s.ini"
    spec.write_text(SMALL)
    monkeypatch.setattr(ggec.harness, "run_experiment", boom)
    assert main(["run", str(spec), "--out", str(tmp_path)]) == 2
