"""Symbolic regression over prefix-notation phenotypes.

Trees are read through their terminal yield, so any grammar that produces
``( op arg ... )`` prefix expressions over the bound variable names works.
Arithmetic is deliberately unprotected; non-finite predictions earn the
penalty fitness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..derivation import DerivationTree, leaves
from .datasets import Dataset

PENALTY = math.inf

BINARY = {
    "+": np.add,
    "-": np.subtract,
    "*": np.multiply,
    "/": np.divide,
    "pow": np.power,
}
UNARY = {
    "sqrt": np.sqrt,
    "log": np.log,
    "exp": np.exp,
    "sin": np.sin,
    "cos": np.cos,
    "neg": np.negative,
    "inv": np.reciprocal,
    "sq": np.square,
}


class EvaluationError(ValueError):
    """Phenotype contains a symbol the evaluator does not know."""


def _tokens(t):
    out = []
    for n in leaves(t):
        if n.constant is not None:
            out.append(n.constant)
        else:
            out.append(n.symbol.text)
    return out


def evaluate(t, X: np.ndarray, names: Sequence[str]) -> np.ndarray:
    """Vectorised value of tree (or phenotype string) ``t`` on the rows of ``X``."""
    toks = t.split() if isinstance(t, str) else _tokens(t)
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    index = {n: i for i, n in enumerate(names)}
    rows = X.shape[0]
    pos = 0

    def expr():
        nonlocal pos
        if pos >= len(toks):
            raise EvaluationError("unexpected end of expression")
        tok = toks[pos]
        pos += 1
        if isinstance(tok, float):
            return np.full(rows, tok)
        if tok == "(":
            op = toks[pos]
            pos += 1
            if op in BINARY:
                a = expr()
                b = expr()
                val = BINARY[op](a, b)
            elif op in UNARY:
                val = UNARY[op](expr())
            else:
                raise EvaluationError(f"unknown operator {op!r}")
            if pos >= len(toks) or toks[pos] != ")":
                raise EvaluationError("expected ')'")
            pos += 1
            return val
        if tok in index:
            return X[:, index[tok]]
        try:
            return np.full(rows, float(tok))
        except ValueError:
            raise EvaluationError(f"unknown terminal {tok!r}") from None

    with np.errstate(all="ignore"):
        out = expr()
    if pos != len(toks):
        raise EvaluationError("trailing symbols after expression")
    return out


def eval_expression(t, row: Sequence[float], names: Optional[Sequence[str]] = None) -> float:
    row = np.asarray(row, dtype=float)
    names = names if names is not None else [f"x{i}" for i in range(row.shape[0])]
    return float(evaluate(t, row[None, :], names)[0])


def rmse(pred: np.ndarray, y: np.ndarray) -> float:
    with np.errstate(all="ignore"):
        err = float(np.sqrt(np.mean((pred - y) ** 2)))
    return err if math.isfinite(err) else PENALTY


def keijzer6(x: int) -> float:
    """Harmonic number ``sum(1/i for i in 1..x)``."""
    if x < 1:
        raise ValueError("keijzer6 is defined for x >= 1")
    return math.fsum(1.0 / i for i in range(1, int(x) + 1))


def vladislavleva4(x: Sequence[float]) -> float:
    if len(x) != 5:
        raise ValueError("vladislavleva4 takes exactly 5 inputs")
    return 10.0 / (5.0 + sum((xi - 3.0) ** 2 for xi in x))


@dataclass
class RegressionProblem:
    name: str
    names: Sequence[str]
    X_train: np.ndarray
    y_train: np.ndarray
    X_test: np.ndarray
    y_test: np.ndarray
    kind: str = field(default="regression", init=False)

    def fitness(self, t: DerivationTree) -> float:
        """Training RMSE, or the penalty for non-finite output."""
        return rmse(evaluate(t, self.X_train, self.names), self.y_train)

    def test_error(self, t: DerivationTree) -> float:
        return rmse(evaluate(t, self.X_test, self.names), self.y_test)

    @classmethod
    def from_dataset(cls, name: str, ds: Dataset) -> "RegressionProblem":
        return cls(name, list(ds.names), ds.features[ds.train], ds.target[ds.train],
                   ds.features[ds.test], ds.target[ds.test])


def keijzer6_problem() -> RegressionProblem:
    xtr = np.arange(1, 51, dtype=float)
    xte = np.arange(1, 121, dtype=float)
    return RegressionProblem(
        "keijzer6", ["x0"], xtr[:, None], np.array([keijzer6(int(x)) for x in xtr]),
        xte[:, None], np.array([keijzer6(int(x)) for x in xte]))


def vladislavleva4_problem(seed: int = 0) -> RegressionProblem:
    rng = np.random.default_rng(seed)
    xtr = rng.uniform(0.05, 6.05, size=(1024, 5))
    xte = rng.uniform(-0.25, 6.35, size=(5000, 5))
    f = lambda X: np.array([vladislavleva4(r) for r in X])
    return RegressionProblem("vladislavleva4", [f"x{i}" for i in range(5)],
                             xtr, f(xtr), xte, f(xte))

