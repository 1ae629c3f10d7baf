"""CSV ingestion and per-variable discretisation."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import LabelParse, MissingColumn, NonFiniteValue, ShapeMismatch
from .model import DIM_NAMES, Dataset, DiscreteDataset, SkeletonSpec

log = logging.getLogger(__name__)

STRATEGIES = ("quantile", "uniform")


@dataclass(frozen=True)
class CsvSchema:
    frame_column: str
    coordinate_columns: tuple[str, ...]
    behavior_column: str
    exercise_column: str | None = None

    @classmethod
    def for_skeleton(cls, skeleton: SkeletonSpec, n_dims: int = 3,
                     frame_column: str = "frame", behavior_column: str = "protective",
                     exercise_column: str | None = None) -> "CsvSchema":
        """Columns named ``<joint>_<dim>`` in joint-major, dim-major order."""
        cols = tuple(f"{name}_{DIM_NAMES[k] if n_dims <= 3 else k}"
                     for name in skeleton.joint_names for k in range(n_dims))
        return cls(frame_column, cols, behavior_column, exercise_column)

    def to_dict(self) -> dict:
        return {
            "frame_column": self.frame_column,
            "coordinate_columns": list(self.coordinate_columns),
            "behavior_column": self.behavior_column,
            "exercise_column": self.exercise_column,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CsvSchema":
        return cls(d["frame_column"], tuple(d["coordinate_columns"]), d["behavior_column"],
                   d.get("exercise_column"))


def _parse_label(raw: str, row: int) -> int:
    s = raw.strip().lower()
    if s in ("0", "0.0", "false", "no"):
        return 0
    if s in ("1", "1.0", "true", "yes"):
        return 1
    raise LabelParse(row, raw)


def load_csv(path: str | Path, schema: CsvSchema, skeleton: SkeletonSpec, n_dims: int = 3) -> Dataset:
    expected = skeleton.n_joints * n_dims
    if len(schema.coordinate_columns) != expected:
        raise ShapeMismatch(expected, len(schema.coordinate_columns))
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ShapeMismatch("header row", "empty file") from None
        index = {name.strip(): k for k, name in enumerate(header)}
        wanted = [schema.frame_column, *schema.coordinate_columns, schema.behavior_column]
        if schema.exercise_column:
            wanted.append(schema.exercise_column)
        for name in wanted:
            if name not in index:
                raise MissingColumn(name)
        coord_idx = [index[c] for c in schema.coordinate_columns]
        rows, labels, exercises = [], [], []
        for r, rec in enumerate(reader, start=1):
            if not rec:
                continue
            if len(rec) != len(header):
                raise ShapeMismatch(len(header), len(rec))
            values = []
            for c, k in zip(schema.coordinate_columns, coord_idx):
                try:
                    v = float(rec[k])
                except ValueError:
                    raise NonFiniteValue(r, c) from None
                if not math.isfinite(v):
                    raise NonFiniteValue(r, c)
                values.append(v)
            rows.append(values)
            labels.append(_parse_label(rec[index[schema.behavior_column]], r))
            if schema.exercise_column:
                exercises.append(rec[index[schema.exercise_column]])
    data = np.array(rows, dtype=float).reshape(len(rows), expected)
    return Dataset(data, n_dims, np.array(labels, dtype=int),
                   tuple(exercises) if schema.exercise_column else None)


def write_csv(path: str | Path, d: Dataset, schema: CsvSchema) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        header = [schema.frame_column, *schema.coordinate_columns, schema.behavior_column]
        if schema.exercise_column:
            header.append(schema.exercise_column)
        w.writerow(header)
        for t in range(d.n_frames):
            row = [str(t), *(repr(float(v)) for v in d.data[t]), str(int(d.behavior_labels[t]))]
            if schema.exercise_column:
                row.append("" if d.exercise_labels is None else d.exercise_labels[t])
            w.writerow(row)


def _quantile_states(x: np.ndarray, n_bins: int) -> np.ndarray:
    # rank = number of strictly smaller values, so ties share the lowest rank
    order = np.sort(x)
    rank = np.searchsorted(order, x, side="left")
    return (rank * n_bins) // len(x)


def _uniform_states(x: np.ndarray, n_bins: int) -> np.ndarray:
    lo, hi = x.min(), x.max()
    s = np.floor((x - lo) / (hi - lo) * n_bins).astype(np.int64)
    return np.minimum(s, n_bins - 1)


def _edges_from_states(x: np.ndarray, states: np.ndarray) -> np.ndarray:
    # smallest value observed in each occupied bin beyond the first
    occupied = np.unique(states)
    return np.array([x[states == s].min() for s in occupied[1:]], dtype=float)


def discretize(d: Dataset, n_bins: int = 8, strategy: str = "quantile") -> DiscreteDataset:
    """Bin every variable into ``n_bins`` integer states.

    ``quantile`` (equal-frequency) bins depend only on ranks, so any strictly
    increasing column transform leaves the states unchanged. ``uniform``
    (equal-width between the column's min and max) is invariant under
    positive affine maps only. Constant columns get the single state 0 and
    are listed in ``degenerate``.
    """
    if n_bins < 2:
        raise ValueError("n_bins must be >= 2")
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown binning strategy {strategy!r}")
    n, p = d.data.shape
    states = np.zeros((n, p), dtype=np.int64)
    edges, degenerate = [], []
    for c in range(p):
        x = d.data[:, c]
        if n == 0 or x.min() == x.max():
            degenerate.append(c)
            edges.append(np.zeros(0))
            continue
        s = _quantile_states(x, n_bins) if strategy == "quantile" else _uniform_states(x, n_bins)
        states[:, c] = s
        edges.append(_edges_from_states(x, s))
    if degenerate:
        log.warning("degenerate (constant) variables: %s", degenerate)
    return DiscreteDataset(states, n_bins, tuple(edges), d.n_dims, tuple(degenerate), strategy)
