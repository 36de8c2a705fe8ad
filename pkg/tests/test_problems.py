import csv
import logging
import math
import random
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import ant_oracle
from ggec.derivation import phenotype
from ggec.grammar import corpus_grammar
from ggec.initializers import grow
from ggec.problems import (PENALTY, DatasetError, SantaFeProblem, TrailWorld, eval_expression,
                           keijzer6, keijzer6_problem, load_csv, run_ant, santa_fe_trail, simulate,
                           vladislavleva4, vladislavleva4_problem)
from ggec.problems.ant import AntProgramError, compile_program, parse_trail
from ggec.problems.regression import EvaluationError, RegressionProblem

DATA = Path(__file__).parent / "data"


# ---------------------------------------------------------------- regression


def test_keijzer6_values():
    assert keijzer6(1) == 1.0
    assert keijzer6(3) == pytest.approx(1 + 1 / 2 + 1 / 3, abs=1e-15)
    assert abs(keijzer6(10) - sum(1.0 / i for i in range(1, 11))) < 1e-12
    with pytest.raises(ValueError):
        keijzer6(0)


def test_vladislavleva4_values():
    assert vladislavleva4((3, 3, 3, 3, 3)) == 2.0
    assert vladislavleva4((4, 3, 3, 3, 3)) == pytest.approx(10 / 6)
    assert vladislavleva4((0, 0, 0, 0, 0)) == pytest.approx(0.2)
    with pytest.raises(ValueError):
        vladislavleva4((1, 2))


def test_eval_expression_examples():
    assert eval_expression("( + x0 x0 )", [2.0]) == 4.0
    assert eval_expression("0.500", [7.0]) == 0.5
    assert not math.isfinite(eval_expression("( / x0 0.000 )", [1.0]))
    assert eval_expression("( sqrt ( * x0 x1 ) )", [2.0, 8.0]) == 4.0
    assert eval_expression("( exp ( log x0 ) )", [3.0]) == pytest.approx(3.0)
    with pytest.raises(EvaluationError):
        eval_expression("( % x0 x0 )", [1.0])
    with pytest.raises(EvaluationError):
        eval_expression("banana", [1.0])
    with pytest.raises(EvaluationError):
        eval_expression("( + x0", [1.0])


def test_eval_tree_with_constant():
    g = corpus_grammar("regression-g0")
    rng = random.Random(5)
    for _ in range(200):
        t = grow(g, g.analysis, g.start, 5, rng)
        a = eval_expression(t, [1.7])
        b = eval_expression(phenotype(t), [1.7])
        assert (a == b) or (math.isnan(a) and math.isnan(b))


def test_penalty_for_non_finite():
    p = keijzer6_problem()
    assert p.fitness("( / x0 0.000 )") == PENALTY
    assert p.fitness("( log ( - x0 x0 ) )") == PENALTY
    assert p.fitness("x0") < PENALTY


def test_zero_constant_rmse_is_target_rms():
    p = keijzer6_problem()
    assert p.fitness("0.000") == pytest.approx(math.sqrt(np.mean(p.y_train ** 2)), rel=1e-12)


def test_keijzer6_data_ranges():
    p = keijzer6_problem()
    assert p.X_train[:, 0].tolist() == list(range(1, 51))
    assert p.X_test[:, 0].tolist() == list(range(1, 121))
    assert p.y_test[9] == pytest.approx(keijzer6(10))


def test_vladislavleva4_data():
    p = vladislavleva4_problem(seed=0)
    assert p.X_train.shape == (1024, 5) and p.X_test.shape == (5000, 5)
    assert p.X_train.min() >= 0.05 and p.X_train.max() <= 6.05
    assert p.X_test.min() >= -0.25 and p.X_test.max() <= 6.35
    assert np.array_equal(p.X_train, vladislavleva4_problem(seed=0).X_train)
    assert p.names == ["x0", "x1", "x2", "x3", "x4"]


def test_fitness_non_negative_property():
    p = keijzer6_problem()
    g = corpus_grammar("regression-g6")
    rng = random.Random(9)
    for _ in range(300):
        f = p.fitness(grow(g, g.analysis, g.start, 6, rng))
        assert f >= 0.0


# ---------------------------------------------------------------- datasets


def _write(path, rows):
    with open(path, "w", newline="") as fh:
        csv.writer(fh).writerows(rows)


def test_load_csv_split(tmp_path):
    path = tmp_path / "d.csv"
    _write(path, [["a", "b", "y"]] + [[i, i * 2, i * 3] for i in range(100)])
    ds = load_csv(path, "y", split_seed=3)
    assert len(ds.train) == 75 and len(ds.test) == 25
    assert set(ds.train).isdisjoint(ds.test)
    assert set(ds.train) | set(ds.test) == set(range(100))
    again = load_csv(path, "y", split_seed=3)
    assert np.array_equal(ds.train, again.train)
    assert ds.names == ["a", "b"]
    assert np.array_equal(ds.target, np.arange(100) * 3.0)
    assert not np.array_equal(load_csv(path, "y", split_seed=4).train, ds.train)


def test_load_csv_drops_bad_rows(tmp_path, caplog):
    path = tmp_path / "d.csv"
    _write(path, [["a", "y"], [1, 2], ["oops", 3], [4, 5], [6, ""], [7, "nan"]])
    with caplog.at_level(logging.WARNING):
        ds = load_csv(path, "y")
    assert ds.dropped == 3 and len(ds.target) == 2
    assert "dropped 3" in caplog.text


def test_load_csv_errors(tmp_path):
    with pytest.raises(DatasetError):
        load_csv(tmp_path / "missing.csv", "y")
    path = tmp_path / "d.csv"
    _write(path, [["a", "y"], [1, 2]])
    with pytest.raises(DatasetError):
        load_csv(path, "z")
    _write(path, [["a", "y"], ["x", "y"]])
    with pytest.raises(DatasetError):
        load_csv(path, "y")


def test_problem_from_dataset(tmp_path):
    path = tmp_path / "d.csv"
    _write(path, [["u", "v", "y"]] + [[i, 1, i + 1] for i in range(40)])
    p = RegressionProblem.from_dataset("toy", load_csv(path, "y"))
    assert p.names == ["u", "v"]
    assert p.fitness("( + u v )") == 0.0
    assert p.test_error("( + u v )") == 0.0


# ---------------------------------------------------------------- ant


def test_trail_constants():
    w = santa_fe_trail()
    assert (w.rows, w.cols, w.food_total, w.max_steps) == (32, 32, 89, 600)
    assert w.start == (0, 0, 1)
    assert (0, 0) not in w.food


def test_turning_only_eats_nothing():
    w = santa_fe_trail()
    r = simulate("left()", w)
    assert r.eaten == 0 and r.steps == 600


def test_move_along_row():
    for k in (1, 5, 9):
        food = frozenset((0, c) for c in range(1, k + 1))
        w = TrailWorld(food, 32, 32, max_steps=40)
        r = simulate("move()", w)
        assert r.eaten == k
        assert r.steps == k  # stops once everything is eaten
        w_short = TrailWorld(frozenset((0, c) for c in range(1, 11)), 32, 32, max_steps=4)
        assert run_ant("move()", w_short) == 4


def test_toroidal_wrap():
    w = TrailWorld(frozenset({(0, 31)}), 32, 32, max_steps=10)
    r = simulate("right() right() move()", w)
    assert r.eaten == 1 and (r.row, r.col) == (0, 31)


def test_koza_follower_golden_trace():
    w = santa_fe_trail()
    r = simulate(ant_oracle.KOZA, w, trace=True)
    assert r.eaten == 89
    with open(DATA / "koza_trace.csv") as fh:
        golden = [tuple(int(x) for x in row) for row in list(csv.reader(fh))[1:]]
    assert r.trace == golden
    assert SantaFeProblem(w).fitness(ant_oracle.KOZA) == 0


def test_step_budget_is_exact():
    w = santa_fe_trail(max_steps=100)
    r = simulate(ant_oracle.KOZA, w)
    assert r.steps == 100
    for budget in (0, 1, 7, 599):
        # the follower clears the trail at step 538
        assert simulate(ant_oracle.KOZA, w.with_budget(budget)).steps == min(budget, 538)


def test_compile_errors():
    with pytest.raises(AntProgramError):
        compile_program("jump()")
    with pytest.raises(AntProgramError):
        compile_program("if(food_ahead()) { move() }")
    with pytest.raises(AntProgramError):
        compile_program("move() }")


def test_parse_trail_validation():
    with pytest.raises(ValueError):
        parse_trail("#..\n#.")
    with pytest.raises(ValueError):
        parse_trail("#x.")
    w = parse_trail("S#\n..")
    assert w.food == frozenset({(0, 1)}) and w.start == (0, 0, 1)


@pytest.mark.parametrize("name", ["ant-g0", "ant-g1", "ant-g2", "ant-g3", "ant-g4"])
def test_simulator_matches_oracle(name):
    g = corpus_grammar(name)
    w = santa_fe_trail()
    rng = random.Random(21)
    for _ in range(150):
        t = grow(g, g.analysis, g.start, 8, rng)
        prog = phenotype(t)
        r = simulate(t, w, trace=True)
        eaten, steps, trace = ant_oracle.run(prog, w.food)
        assert (r.eaten, r.steps) == (eaten, steps)
        assert r.trace == trace
        assert 0 <= SantaFeProblem(w).fitness(t) <= 89


@given(st.integers(0, 10_000))
@settings(max_examples=50, deadline=None)
def test_simulator_deterministic(seed):
    g = corpus_grammar("ant-g3")
    t = grow(g, g.analysis, g.start, 7, random.Random(seed))
    w = santa_fe_trail()
    a, b = simulate(t, w), simulate(t, w)
    assert (a.eaten, a.steps, a.row, a.col, a.heading) == (b.eaten, b.steps, b.row, b.col, b.heading)
    assert a.steps <= w.max_steps
