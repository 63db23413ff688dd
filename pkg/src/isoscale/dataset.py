"""Response matrices and bad-item labels.

A response matrix holds ``n`` respondents (rows) by ``p`` items (columns).
Missing cells are stored as NaN; every pairwise statistic in the package uses
pairwise-complete rows.
"""

from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DimensionError, DomainError, LabelReferenceError, ParseError, SchemaError

BINARY = "binary"
ORDINAL = "ordinal"
CONTINUOUS = "continuous"
CONSTANT = "constant"


def column_type(values) -> str:
    """Tag a column by its set of finite values.

    ``binary`` if the values are a subset of {0, 1}, ``ordinal`` if they are
    all integers, ``continuous`` otherwise. The tag depends only on the value
    set, never on order or multiplicity.
    """
    v = np.asarray(values, dtype=float)
    v = np.unique(v[np.isfinite(v)])
    if v.size and np.all((v == 0) | (v == 1)):
        return BINARY
    if v.size and np.all(v == np.round(v)):
        return ORDINAL
    return CONTINUOUS


@dataclass(frozen=True, eq=False)
class ResponseMatrix:
    """Immutable respondents x items score grid.

    Parameters
    ----------
    values : array_like, shape (n, p)
        Scores; NaN marks a missing cell.
    item_ids : sequence of str, optional
        Unique, non-empty item identifiers. Defaults to ``q1..qp``.
    respondent_ids : sequence of str, optional
        Defaults to ``r1..rn``.
    """

    values: np.ndarray
    item_ids: tuple = None
    respondent_ids: tuple = None
    _types: tuple = field(default=None, repr=False)

    def __post_init__(self):
        vals = np.array(self.values, dtype=float, copy=True)
        if vals.ndim != 2:
            raise DimensionError(f"response matrix must be 2-D, got shape {vals.shape}")
        n, p = vals.shape
        if n < 2 or p < 2:
            raise DimensionError(f"need at least 2 respondents and 2 items, got n={n}, p={p}")
        if np.isinf(vals).any():
            raise DomainError("response matrix contains infinite values")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

        item_ids = self.item_ids
        if item_ids is None:
            item_ids = tuple(f"q{j + 1}" for j in range(p))
        item_ids = tuple(str(s) for s in item_ids)
        if len(item_ids) != p:
            raise SchemaError(f"{len(item_ids)} item ids for {p} columns")
        if any(not s for s in item_ids):
            raise SchemaError("empty item id")
        if len(set(item_ids)) != p:
            dup = sorted({s for s in item_ids if item_ids.count(s) > 1})
            raise SchemaError(f"duplicate item id(s): {', '.join(dup)}")
        object.__setattr__(self, "item_ids", item_ids)

        resp = self.respondent_ids
        if resp is None:
            resp = tuple(f"r{r + 1}" for r in range(n))
        resp = tuple(str(s) for s in resp)
        if len(resp) != n:
            raise SchemaError(f"{len(resp)} respondent ids for {n} rows")
        object.__setattr__(self, "respondent_ids", resp)

        observed = np.isfinite(vals)
        empty = np.flatnonzero(~observed.any(axis=0))
        if empty.size:
            raise DomainError(f"item(s) with no observed values: {[item_ids[j] for j in empty]}")
        object.__setattr__(self, "_types", tuple(column_type(vals[:, j]) for j in range(p)))

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]

    @property
    def column_types(self) -> tuple:
        return self._types

    @property
    def observed(self) -> np.ndarray:
        return np.isfinite(self.values)

    @property
    def has_missing(self) -> bool:
        return not bool(np.isfinite(self.values).all())

    @property
    def is_binary(self) -> bool:
        return all(t == BINARY for t in self._types)

    @property
    def constant_items(self) -> tuple:
        """Item ids whose observed values have zero variance (kept, but flagged)."""
        out = []
        for j in range(self.p):
            col = self.values[:, j]
            col = col[np.isfinite(col)]
            if np.all(col == col[0]):
                out.append(self.item_ids[j])
        return tuple(out)

    def index_of(self, item) -> int:
        if isinstance(item, (int, np.integer)):
            if not 0 <= item < self.p:
                raise IndexError(f"item index {item} out of range for p={self.p}")
            return int(item)
        try:
            return self.item_ids.index(item)
        except ValueError:
            raise KeyError(f"unknown item id {item!r}") from None

    def column(self, item) -> np.ndarray:
        return column(self, item)

    def select(self, rows=None, cols=None) -> "ResponseMatrix":
        """Sub-matrix by positional row and column indices (rows may repeat)."""
        rows = np.arange(self.n) if rows is None else np.asarray(rows, dtype=int)
        cols = np.arange(self.p) if cols is None else np.asarray(cols, dtype=int)
        resp = [self.respondent_ids[r] for r in rows]
        if len(set(resp)) != len(resp):
            # repeated rows from resampling with replacement get suffixed ids
            seen = {}
            uniq = []
            for r in resp:
                k = seen.get(r, 0)
                seen[r] = k + 1
                uniq.append(r if k == 0 else f"{r}#{k}")
            resp = uniq
        return ResponseMatrix(self.values[np.ix_(rows, cols)], [self.item_ids[c] for c in cols], resp)

    def with_column(self, item, new_values) -> "ResponseMatrix":
        j = self.index_of(item)
        vals = np.array(self.values, copy=True)
        vals[:, j] = new_values
        return ResponseMatrix(vals, self.item_ids, self.respondent_ids)

    def reverse_coded(self, items: Iterable) -> "ResponseMatrix":
        """Reflect the listed items within their observed range (x -> min + max - x)."""
        vals = np.array(self.values, copy=True)
        for it in items:
            j = self.index_of(it)
            col = vals[:, j]
            lo, hi = np.nanmin(col), np.nanmax(col)
            vals[:, j] = lo + hi - col
        return ResponseMatrix(vals, self.item_ids, self.respondent_ids)

    def __repr__(self):
        return f"ResponseMatrix(n={self.n}, p={self.p})"


def column(matrix: ResponseMatrix, item) -> np.ndarray:
    """Score vector of one item; missing entries are NaN. Read-only view."""
    j = matrix.index_of(item)
    return matrix.values[:, j]


def _parse_cell(text, row, col):
    text = text.strip()
    if text == "":
        return math.nan
    try:
        v = float(text)
    except ValueError:
        raise ParseError(f"malformed numeric cell {text!r}", row=row, column=col) from None
    if not math.isfinite(v):
        raise ParseError(f"non-finite cell {text!r}", row=row, column=col)
    return v


def read_matrix(stream) -> ResponseMatrix:
    reader = csv.reader(stream)
    try:
        header = next(reader)
    except StopIteration:
        raise DimensionError("empty matrix file") from None
    header = [h.strip() for h in header]
    if header and header[0].startswith("﻿"):
        header[0] = header[0][1:]
    has_resp = bool(header) and header[0] == "respondent_id"
    item_ids = header[1:] if has_resp else header
    if len(set(item_ids)) != len(item_ids):
        dup = sorted({s for s in item_ids if item_ids.count(s) > 1})
        raise SchemaError(f"duplicate item id(s) in header: {', '.join(dup)}")
    if any(not s for s in item_ids):
        raise SchemaError("empty item id in header")
    rows, resp = [], []
    for lineno, rec in enumerate(reader, start=2):
        if not rec or all(not c.strip() for c in rec):
            continue
        if len(rec) != len(header):
            raise ParseError(f"expected {len(header)} fields, got {len(rec)}", row=lineno)
        if has_resp:
            resp.append(rec[0].strip())
            rec = rec[1:]
        rows.append([_parse_cell(c, lineno, item_ids[k]) for k, c in enumerate(rec)])
    if len(rows) < 2 or len(item_ids) < 2:
        raise DimensionError(f"need at least 2 rows and 2 item columns, got {len(rows)}x{len(item_ids)}")
    return ResponseMatrix(np.array(rows, dtype=float), item_ids, resp if has_resp else None)


def load_matrix(path, format: str = "csv-wide") -> ResponseMatrix:
    """Load a wide CSV: header of item ids, optional leading ``respondent_id``.

    Empty cells become missing (NaN).
    """
    if format != "csv-wide":
        raise ValueError(f"unsupported matrix format {format!r}")
    with open(path, newline="", encoding="utf-8") as fh:
        return read_matrix(fh)


def _format_value(v: float) -> str:
    if not math.isfinite(v):
        return ""
    if v.is_integer() and abs(v) < 2**53:
        return str(int(v))
    return repr(float(v))


def write_matrix(matrix: ResponseMatrix, path_or_stream, include_respondents: bool = True) -> None:
    """Write the wide CSV format read by :func:`load_matrix` (round-trips exactly)."""
    own = isinstance(path_or_stream, (str, os.PathLike))
    fh = open(path_or_stream, "w", newline="", encoding="utf-8") if own else path_or_stream
    try:
        w = csv.writer(fh, lineterminator="\n")
        head = list(matrix.item_ids)
        w.writerow(["respondent_id"] + head if include_respondents else head)
        for r in range(matrix.n):
            cells = [_format_value(v) for v in matrix.values[r]]
            w.writerow([matrix.respondent_ids[r]] + cells if include_respondents else cells)
    finally:
        if own:
            fh.close()


@dataclass(frozen=True)
class ItemLabelSet:
    """Ground-truth flags: item id -> 1 (bad) or 0 (good).

    Items absent from the mapping count as good.
    """

    labels: Mapping[str, int]
    diagnostics: Mapping[str, int] = field(default_factory=dict)

    def is_bad(self, item_id) -> bool:
        return bool(self.labels.get(item_id, 0))

    def vector(self, item_ids: Sequence[str]) -> np.ndarray:
        return np.array([1 if self.is_bad(i) else 0 for i in item_ids], dtype=int)

    @property
    def bad_items(self) -> tuple:
        return tuple(k for k, v in self.labels.items() if v)

    def restrict(self, item_ids: Sequence[str]) -> "ItemLabelSet":
        return ItemLabelSet({i: int(self.is_bad(i)) for i in item_ids})

    @classmethod
    def from_bad(cls, item_ids: Sequence[str], bad: Iterable[str]) -> "ItemLabelSet":
        bad = set(bad)
        return cls({i: int(i in bad) for i in item_ids})


def read_labels(stream, matrix: ResponseMatrix | None = None) -> ItemLabelSet:
    text = stream.read()
    labels = {}
    reader = csv.reader(io.StringIO(text))
    for lineno, rec in enumerate(reader, start=1):
        if not rec or all(not c.strip() for c in rec):
            continue
        if len(rec) != 2:
            raise ParseError(f"expected 2 fields item_id,is_bad, got {len(rec)}", row=lineno)
        item, flag = rec[0].strip(), rec[1].strip()
        if lineno == 1 and item == "item_id":
            continue
        if flag not in ("0", "1"):
            raise ParseError(f"is_bad must be 0 or 1, got {flag!r}", row=lineno, column="is_bad")
        if item in labels:
            raise SchemaError(f"item {item!r} labelled twice")
        labels[item] = int(flag)
    diag = {"n_unlabeled": 0}
    if matrix is not None:
        unknown = [k for k in labels if k not in set(matrix.item_ids)]
        if unknown:
            raise LabelReferenceError(f"label(s) for unknown item(s): {', '.join(unknown)}")
        missing = [i for i in matrix.item_ids if i not in labels]
        diag["n_unlabeled"] = len(missing)
        for i in missing:
            labels[i] = 0
        labels = {i: labels[i] for i in matrix.item_ids}
    return ItemLabelSet(labels, diag)


def load_labels(path, matrix: ResponseMatrix | None = None) -> ItemLabelSet:
    """Load ``item_id,is_bad`` rows (header optional).

    With ``matrix`` given, labels are cross-checked against its item ids and
    unlabeled items default to good; ``diagnostics['n_unlabeled']`` counts them.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        return read_labels(fh, matrix)


def write_labels(labels: ItemLabelSet, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["item_id", "is_bad"])
        for k, v in labels.labels.items():
            w.writerow([k, int(v)])
