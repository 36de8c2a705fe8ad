"""CSV ingestion for the real-world regression datasets."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import List, Union

import numpy as np

log = logging.getLogger(__name__)


class DatasetError(ValueError):
    pass


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray
    target: np.ndarray
    names: List[str]
    train: np.ndarray
    test: np.ndarray
    dropped: int = 0


def _clean_name(name: str) -> str:
    return "_".join(name.strip().split()) or "col"


def load_csv(path: Union[str, Path], target_column: str, split_seed: int = 0,
             train_fraction: float = 0.75) -> Dataset:
    """Read a header-first, comma-separated numeric CSV and split it.

    Rows holding a missing or non-numeric (or non-finite) value are dropped;
    the count is logged and kept on the dataset.  The split is a seeded
    shuffle with ``round(train_fraction * rows)`` training rows.
    """
    path = Path(path)
    if not path.is_file():
        raise DatasetError(f"no such file: {path}")
    if not 0.0 < train_fraction <= 1.0:
        raise DatasetError("train_fraction must be in (0, 1]")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DatasetError(f"{path} is empty") from None
        if target_column not in header:
            raise DatasetError(f"column {target_column!r} not in {path} (have {header})")
        rows, dropped = [], 0
        for rec in reader:
            if not rec or all(not c.strip() for c in rec):
                continue
            try:
                vals = [float(c) for c in rec]
            except ValueError:
                dropped += 1
                continue
            if len(vals) != len(header) or not all(math.isfinite(v) for v in vals):
                dropped += 1
                continue
            rows.append(vals)
    if dropped:
        log.warning("%s: dropped %d unparseable row(s)", path, dropped)
    if not rows:
        raise DatasetError(f"{path} has no usable rows")
    data = np.array(rows, dtype=float)
    t = header.index(target_column)
    feat_idx = [i for i in range(len(header)) if i != t]
    perm = np.random.default_rng(split_seed).permutation(len(rows))
    n_train = int(round(train_fraction * len(rows)))
    return Dataset(
        features=data[:, feat_idx],
        target=data[:, t],
        names=[_clean_name(header[i]) for i in feat_idx],
        train=np.sort(perm[:n_train]),
        test=np.sort(perm[n_train:]),
        dropped=dropped,
    )
