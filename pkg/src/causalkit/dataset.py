"""Typed tabular samples and their tab-separated text format.

Text layout::

    line 1   column names, tab separated
    line 2   column kinds: ``d<cardinality>`` (discrete) or ``c`` (continuous)
    line 3+  one sample per line, tab separated

Discrete values are 0-based category indices. Continuous values are written
with ``repr`` so that reading back reproduces the same doubles.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Optional, Sequence

import numpy as np


class DatasetFormatError(ValueError):
    """Malformed dataset text or values; carries 1-based line/column."""

    def __init__(self, message, line=None, column=None):
        loc = ""
        if line is not None:
            loc = f"line {line}" + (f", column {column}" if column is not None else "") + ": "
        super().__init__(loc + message)
        self.line = line
        self.column = column


@dataclass(frozen=True, eq=False)
class Dataset:
    """Samples over named columns.

    Parameters
    ----------
    column_names : sequence of str
    cardinalities : sequence of int or None
        Category count per discrete column; ``None`` marks a continuous column.
    values : array of shape (n, p)
        Integer array when every column is discrete, float array otherwise.
    """

    column_names: tuple
    cardinalities: tuple
    values: np.ndarray

    def __post_init__(self):
        names = tuple(str(c) for c in self.column_names)
        cards = tuple(None if c is None else int(c) for c in self.cardinalities)
        if len(names) != len(cards):
            raise DatasetFormatError("one kind per column required")
        for nm in names:
            if not nm or any(ch in nm for ch in "\t\r\n"):
                raise DatasetFormatError(f"bad column name {nm!r}: must be nonempty, without tabs or newlines")
        if len(set(names)) != len(names):
            raise DatasetFormatError("column names must be unique")
        for nm, c in zip(names, cards):
            if c is not None and c < 1:
                raise DatasetFormatError(f"column {nm!r}: cardinality must be positive")
        all_discrete = all(c is not None for c in cards)
        vals = np.asarray(self.values)
        if vals.ndim == 1 and vals.size == 0:
            vals = vals.reshape(0, len(names))
        if vals.ndim != 2 or vals.shape[1] != len(names):
            raise DatasetFormatError(f"values must have shape (n, {len(names)})")
        if all_discrete:
            if vals.size and not np.all(np.equal(np.mod(vals, 1), 0)):
                raise DatasetFormatError("discrete columns must hold integer category indices")
            vals = vals.astype(np.int64)
        else:
            vals = vals.astype(np.float64)
        for j, c in enumerate(cards):
            col = vals[:, j]
            if c is not None and col.size:
                if col.min() < 0 or col.max() >= c or np.any(col != np.floor(col)):
                    raise DatasetFormatError(f"column {names[j]!r}: values must be integers in [0, {c})")
            if col.size and not np.all(np.isfinite(col)):
                raise DatasetFormatError(f"column {names[j]!r}: missing or non-finite values")
        vals = np.ascontiguousarray(vals)
        vals.setflags(write=False)
        object.__setattr__(self, "column_names", names)
        object.__setattr__(self, "cardinalities", cards)
        object.__setattr__(self, "values", vals)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def n_columns(self) -> int:
        return len(self.column_names)

    @cached_property
    def index(self) -> dict:
        return {c: i for i, c in enumerate(self.column_names)}

    def column(self, key) -> int:
        if isinstance(key, str):
            if key not in self.index:
                raise KeyError(f"unknown column {key!r}")
            return self.index[key]
        i = int(key)
        if not 0 <= i < self.n_columns:
            raise KeyError(f"unknown column index {key!r}")
        return i

    @property
    def is_discrete(self) -> bool:
        return all(c is not None for c in self.cardinalities)

    @property
    def is_continuous(self) -> bool:
        return all(c is None for c in self.cardinalities)

    @property
    def kind(self) -> str:
        if self.is_discrete:
            return "discrete"
        if self.is_continuous:
            return "continuous"
        return "mixed"

    def select(self, columns: Sequence) -> "Dataset":
        idx = [self.column(c) for c in columns]
        return Dataset(
            tuple(self.column_names[i] for i in idx),
            tuple(self.cardinalities[i] for i in idx),
            self.values[:, idx],
        )

    def head(self, n: int) -> "Dataset":
        return Dataset(self.column_names, self.cardinalities, self.values[:n])

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.column_names == other.column_names
            and self.cardinalities == other.cardinalities
            and self.values.dtype == other.values.dtype
            and np.array_equal(self.values, other.values)
        )

    __hash__ = None

    def __repr__(self):
        return f"Dataset(n={self.n}, columns={self.n_columns}, kind={self.kind})"


def _kind_token(card: Optional[int]) -> str:
    return "c" if card is None else f"d{card}"


def write_dataset(data: Dataset) -> str:
    """Serialize to the tab-separated text format."""
    lines = ["\t".join(data.column_names), "\t".join(_kind_token(c) for c in data.cardinalities)]
    if data.is_discrete:
        lines += ["\t".join(str(int(v)) for v in row) for row in data.values]
    else:
        for row in data.values:
            cells = [str(int(v)) if c is not None else repr(float(v)) for v, c in zip(row, data.cardinalities)]
            lines.append("\t".join(cells))
    return "\n".join(lines) + "\n"


def read_dataset(text: str) -> Dataset:
    """Parse the tab-separated text format."""
    lines = text.replace("\r\n", "\n").split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if len(lines) < 2:
        raise DatasetFormatError("expected a header line and a kinds line", line=len(lines) + 1)
    names = lines[0].split("\t") if lines[0] else []
    kinds = lines[1].split("\t") if lines[1] else []
    if len(kinds) != len(names):
        raise DatasetFormatError(f"expected {len(names)} kinds, got {len(kinds)}", line=2)
    cards = []
    for j, tok in enumerate(kinds, start=1):
        tok = tok.strip()
        if tok == "c":
            cards.append(None)
        elif tok.startswith("d") and tok[1:].isdigit() and int(tok[1:]) > 0:
            cards.append(int(tok[1:]))
        else:
            raise DatasetFormatError(f"bad column kind {tok!r}", line=2, column=j)
    p = len(names)
    all_discrete = all(c is not None for c in cards)
    rows = []
    for i, ln in enumerate(lines[2:], start=3):
        cells = ln.split("\t")
        if len(cells) != p:
            raise DatasetFormatError(f"ragged row: expected {p} values, got {len(cells)}", line=i)
        row = []
        for j, (cell, c) in enumerate(zip(cells, cards), start=1):
            try:
                v = int(cell) if c is not None else float(cell)
            except ValueError:
                raise DatasetFormatError(f"cannot parse value {cell!r}", line=i, column=j) from None
            if c is not None and not 0 <= v < c:
                raise DatasetFormatError(f"category {v} out of range [0, {c})", line=i, column=j)
            if c is None and not np.isfinite(v):
                raise DatasetFormatError(f"non-finite value {cell!r}", line=i, column=j)
            row.append(v)
        rows.append(row)
    dtype = np.int64 if all_discrete else np.float64
    values = np.array(rows, dtype=dtype).reshape(len(rows), p)
    return Dataset(tuple(names), tuple(cards), values)


def load_dataset(path) -> Dataset:
    with open(path, encoding="utf-8") as fh:
        return read_dataset(fh.read())


def save_dataset(data: Dataset, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(write_dataset(data))
