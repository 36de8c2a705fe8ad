"""Fitness environments.

A problem exposes ``fitness(tree) -> float`` (minimised, ``inf`` marks a
penalised individual) and ``test_error(tree)`` (``None`` when there is no
held-out data).
"""

from .ant import SantaFeProblem, TrailWorld, run_ant, santa_fe_trail, simulate
from .datasets import Dataset, DatasetError, load_csv
from .regression import (PENALTY, RegressionProblem, eval_expression, keijzer6, keijzer6_problem,
                         vladislavleva4, vladislavleva4_problem)

__all__ = [
    "PENALTY", "Dataset", "DatasetError", "RegressionProblem", "SantaFeProblem", "TrailWorld",
    "eval_expression", "keijzer6", "keijzer6_problem", "load_csv", "run_ant", "santa_fe_trail",
    "simulate", "vladislavleva4", "vladislavleva4_problem",
]
