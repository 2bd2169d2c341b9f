"""Typed in-memory weather table: CSV loading, class counts and holdout splits.

Storage per column kind:

* ``numeric``      float64 values; cells under the missing mask are 0.0 and never read
* ``categorical``  int32 codes into a per-column vocabulary, -1 where missing
* ``date``         int32 array of shape (n, 3) holding (year, month, day)
* ``binary_label`` int8 values in {0, 1}

Tables are immutable: every array is marked read-only and every operation
returns a new table.
"""
from __future__ import annotations

import csv
import datetime
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DataError

log = logging.getLogger(__name__)

KINDS = ("numeric", "categorical", "date", "binary_label")
MISSING_TOKENS = frozenset({"NA", ""})
LABEL_TOKENS = {"No": 0, "Yes": 1}
POSITIVE_MEANING = "RainTomorrow = Yes"
TARGET = "RainTomorrow"
LEAKY_COLUMNS = ("RISK_MM",)


@dataclass(frozen=True)
class ColumnSchema:
    name: str
    kind: str
    nullable: bool = True

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown column kind {self.kind!r} for {self.name!r}")


def _weather_schema(with_risk: bool = True) -> list[ColumnSchema]:
    num = "numeric"
    cat = "categorical"
    cols = [
        ColumnSchema("Date", "date", nullable=False),
        ColumnSchema("Location", cat, nullable=False),
        ColumnSchema("MinTemp", num),
        ColumnSchema("MaxTemp", num),
        ColumnSchema("Rainfall", num),
        ColumnSchema("Evaporation", num),
        ColumnSchema("Sunshine", num),
        ColumnSchema("WindGustDir", cat),
        ColumnSchema("WindGustSpeed", num),
        ColumnSchema("WindDir9am", cat),
        ColumnSchema("WindDir3pm", cat),
        ColumnSchema("WindSpeed9am", num),
        ColumnSchema("WindSpeed3pm", num),
        ColumnSchema("Humidity9am", num),
        ColumnSchema("Humidity3pm", num),
        ColumnSchema("Pressure9am", num),
        ColumnSchema("Pressure3pm", num),
        ColumnSchema("Cloud9am", num),
        ColumnSchema("Cloud3pm", num),
        ColumnSchema("Temp9am", num),
        ColumnSchema("Temp3pm", num),
        ColumnSchema("RainToday", cat),
        ColumnSchema("RISK_MM", num),
        ColumnSchema("RainTomorrow", "binary_label"),
    ]
    if not with_risk:
        cols = [c for c in cols if c.name != "RISK_MM"]
    return cols


#: The 24-column Kaggle ``weatherAUS.csv`` layout (rattle package export).
WEATHER_SCHEMA = _weather_schema(with_risk=True)
#: Later revisions of the Kaggle file ship without RISK_MM.
WEATHER_SCHEMA_NO_RISK = _weather_schema(with_risk=False)


def validate_schema(schema: Sequence[ColumnSchema]) -> None:
    names = [c.name for c in schema]
    if len(set(names)) != len(names):
        dupes = sorted({n for n in names if names.count(n) > 1})
        raise DataError(f"duplicate column names in schema: {dupes}")
    n_labels = sum(c.kind == "binary_label" for c in schema)
    if n_labels != 1:
        raise DataError(f"schema must have exactly one binary_label column, found {n_labels}")


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


class Table:
    """Column-typed dataset with a per-cell missing mask."""

    def __init__(self, schema, data, missing, vocab=None, n_dropped_unlabeled=0):
        schema = list(schema)
        names = [c.name for c in schema]
        if len(set(names)) != len(names):
            raise DataError("column names must be unique")
        self.schema = schema
        self._by_name = {c.name: c for c in schema}
        self.vocab = {k: tuple(v) for k, v in (vocab or {}).items()}
        self.n_dropped_unlabeled = n_dropped_unlabeled

        lengths = {len(data[n]) for n in names}
        if len(lengths) > 1:
            raise DataError(f"ragged columns: lengths {sorted(lengths)}")
        self.n_rows = lengths.pop() if lengths else 0
        self._data = {n: _readonly(np.asarray(data[n])) for n in names}
        self._missing = {n: _readonly(np.asarray(missing[n], dtype=bool)) for n in names}
        for c in schema:
            if c.kind == "categorical" and c.name not in self.vocab:
                raise DataError(f"categorical column {c.name!r} has no vocabulary")

    # -- access -------------------------------------------------------------

    @property
    def names(self) -> list[str]:
        return [c.name for c in self.schema]

    @property
    def n_cols(self) -> int:
        return len(self.schema)

    def __contains__(self, name: str) -> bool:
        return name in self._by_name

    def __repr__(self):
        return f"Table(n_rows={self.n_rows}, columns={self.names})"

    def spec(self, name: str) -> ColumnSchema:
        try:
            return self._by_name[name]
        except KeyError:
            raise DataError(f"unknown column {name!r}") from None

    def values(self, name: str) -> np.ndarray:
        self.spec(name)
        return self._data[name]

    def missing(self, name: str) -> np.ndarray:
        self.spec(name)
        return self._missing[name]

    def strings(self, name: str) -> list[str | None]:
        """Decode a categorical column back to text (None where missing)."""
        if self.spec(name).kind != "categorical":
            raise DataError(f"column {name!r} is not categorical")
        vocab = self.vocab[name]
        return [None if c < 0 else vocab[c] for c in self._data[name].tolist()]

    def columns_of_kind(self, kind: str) -> list[str]:
        return [c.name for c in self.schema if c.kind == kind]

    @property
    def label_column(self) -> str:
        return self.columns_of_kind("binary_label")[0]

    def labels(self) -> np.ndarray:
        """The binary target as an int8 vector; 1 means ``POSITIVE_MEANING``."""
        name = self.label_column
        if self._missing[name].any():
            raise DataError(f"label column {name!r} has missing cells")
        return np.asarray(self._data[name], dtype=np.int8)

    # -- derivation ---------------------------------------------------------

    def take(self, indices) -> "Table":
        idx = np.asarray(indices, dtype=np.intp)
        return Table(
            self.schema,
            {n: self._data[n][idx] for n in self.names},
            {n: self._missing[n][idx] for n in self.names},
            self.vocab,
            self.n_dropped_unlabeled,
        )

    def replace(self, drop: Iterable[str] = (), add=(), at: str | None = None) -> "Table":
        """Return a table with ``drop`` removed and ``add`` columns inserted.

        ``add`` is a sequence of ``(ColumnSchema, values, missing, vocab_or_None)``;
        new columns go where ``at`` used to be, or at the end.
        """
        drop = list(drop)
        for name in drop:
            self.spec(name)
        schema, data, missing = [], {}, {}
        vocab = {k: v for k, v in self.vocab.items() if k not in drop}

        def _emit_added():
            for col, vals, miss, voc in add:
                schema.append(col)
                data[col.name] = vals
                missing[col.name] = miss
                if voc is not None:
                    vocab[col.name] = voc

        for c in self.schema:
            if c.name == at:
                _emit_added()
            if c.name in drop:
                continue
            schema.append(c)
            data[c.name] = self._data[c.name]
            missing[c.name] = self._missing[c.name]
        if at is None or at not in self._by_name:
            _emit_added()
        return Table(schema, data, missing, vocab, self.n_dropped_unlabeled)


# -- loading ----------------------------------------------------------------


def _parse_numeric(name: str, tokens: list[str], row_offset: int):
    arr = np.asarray(tokens, dtype=object)
    miss = np.isin(arr, list(MISSING_TOKENS))
    out = np.zeros(len(tokens), dtype=np.float64)
    present = np.flatnonzero(~miss)

    def _fail(i):
        raise DataError(
            f"row {i + row_offset}, column {name!r}: cannot parse numeric token {tokens[i]!r}"
        )

    try:
        vals = arr[present].astype(np.float64)
    except ValueError:
        for i in present:
            try:
                float(tokens[i])
            except ValueError:
                _fail(i)
        raise
    bad = np.flatnonzero(~np.isfinite(vals))
    if bad.size:
        _fail(present[bad[0]])
    out[present] = vals
    return out, miss


def _parse_categorical(tokens: list[str]):
    vocab: dict[str, int] = {}
    codes = np.empty(len(tokens), dtype=np.int32)
    miss = np.zeros(len(tokens), dtype=bool)
    for i, tok in enumerate(tokens):
        if tok in MISSING_TOKENS:
            codes[i] = -1
            miss[i] = True
        else:
            codes[i] = vocab.setdefault(tok, len(vocab))
    # vocabulary in sorted order so codes do not depend on row order
    ordered = sorted(vocab)
    remap = np.empty(len(ordered) + 1, dtype=np.int32)
    remap[-1] = -1
    for new, tok in enumerate(ordered):
        remap[vocab[tok]] = new
    return remap[codes], miss, tuple(ordered)


def _parse_date(name: str, tokens: list[str], row_offset: int):
    out = np.zeros((len(tokens), 3), dtype=np.int32)
    miss = np.zeros(len(tokens), dtype=bool)
    for i, tok in enumerate(tokens):
        if tok in MISSING_TOKENS:
            miss[i] = True
            continue
        parts = tok.split("-")
        try:
            if len(parts) != 3 or len(parts[0]) != 4 or len(parts[1]) != 2 or len(parts[2]) != 2:
                raise ValueError
            d = datetime.date(int(parts[0]), int(parts[1]), int(parts[2]))
        except ValueError:
            raise DataError(
                f"row {i + row_offset}, column {name!r}: cannot parse date token {tok!r} "
                "(expected a valid YYYY-MM-DD)"
            ) from None
        out[i] = (d.year, d.month, d.day)
    return out, miss


def _parse_label(name: str, tokens: list[str], row_offset: int):
    out = np.zeros(len(tokens), dtype=np.int8)
    miss = np.zeros(len(tokens), dtype=bool)
    for i, tok in enumerate(tokens):
        if tok in MISSING_TOKENS:
            miss[i] = True
        elif tok in LABEL_TOKENS:
            out[i] = LABEL_TOKENS[tok]
        else:
            raise DataError(
                f"row {i + row_offset}, column {name!r}: label must be Yes/No, got {tok!r}"
            )
    return out, miss


def load_csv(path, schema: Sequence[ColumnSchema] = WEATHER_SCHEMA) -> Table:
    """Read a comma-delimited UTF-8 file whose header matches ``schema`` in order.

    ``NA`` and the empty string mark missing cells. Rows with a missing label
    are dropped; their number is kept in ``Table.n_dropped_unlabeled``.
    Reported row numbers are 1-based file lines (the header is line 1).
    """
    validate_schema(schema)
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except (OSError, UnicodeDecodeError) as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise DataError(f"{path}: file is empty (no header row)")

    header = [h.strip() for h in rows[0]]
    expected = [c.name for c in schema]
    if header != expected:
        missing = [n for n in expected if n not in header]
        extra = [n for n in header if n not in expected]
        misplaced = [
            f"{i}:{got}!={want}" for i, (got, want) in enumerate(zip(header, expected)) if got != want
        ]
        raise DataError(
            f"{path}: header mismatch; missing={missing} unexpected={extra} misplaced={misplaced[:5]}"
        )
    body = rows[1:]
    width = len(expected)
    for i, r in enumerate(body):
        if len(r) != width:
            raise DataError(f"row {i + 2}: expected {width} fields, found {len(r)}")

    columns = list(zip(*body)) if body else [()] * width
    data, missing, vocab = {}, {}, {}
    for col, tokens in zip(schema, columns):
        tokens = list(tokens)
        if col.kind == "numeric":
            data[col.name], missing[col.name] = _parse_numeric(col.name, tokens, 2)
        elif col.kind == "categorical":
            data[col.name], missing[col.name], vocab[col.name] = _parse_categorical(tokens)
        elif col.kind == "date":
            data[col.name], missing[col.name] = _parse_date(col.name, tokens, 2)
        else:
            data[col.name], missing[col.name] = _parse_label(col.name, tokens, 2)

    table = Table(schema, data, missing, vocab)
    label_missing = table.missing(table.label_column)
    n_drop = int(label_missing.sum())
    if n_drop:
        table = table.take(np.flatnonzero(~label_missing))
        table.n_dropped_unlabeled = n_drop
        log.info("dropped %d rows with missing %s", n_drop, table.label_column)
    return table


def load_weather_csv(path) -> Table:
    """Load a Kaggle weatherAUS export, with or without the RISK_MM column."""
    try:
        with Path(path).open(newline="", encoding="utf-8") as fh:
            header = next(csv.reader(fh), [])
    except (OSError, UnicodeDecodeError) as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if "RISK_MM" in header:
        return load_csv(path, WEATHER_SCHEMA)
    return load_csv(path, WEATHER_SCHEMA_NO_RISK)


def write_csv(table: Table, path) -> None:
    """Serialize a table back to CSV (numbers to 10 significant digits, ``NA`` for missing)."""
    cols = []
    for c in table.schema:
        vals = table.values(c.name)
        miss = table.missing(c.name)
        if c.kind == "numeric":
            txt = [f"{v:.10g}" for v in vals.tolist()]
        elif c.kind == "categorical":
            txt = [t if t is not None else "NA" for t in table.strings(c.name)]
        elif c.kind == "date":
            txt = [f"{y:04d}-{m:02d}-{d:02d}" for y, m, d in vals.tolist()]
        else:
            txt = ["Yes" if v else "No" for v in vals.tolist()]
        cols.append(["NA" if m else t for t, m in zip(txt, miss.tolist())])
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(table.names)
        w.writerows(zip(*cols))


# -- statistics and splitting ---------------------------------------------


def class_counts(labels) -> dict[str, int]:
    y = np.asarray(labels)
    n_pos = int(np.count_nonzero(y == 1))
    return {"n_negative": int(y.size - n_pos), "n_positive": n_pos}


@dataclass(frozen=True)
class SplitPair:
    train_indices: np.ndarray
    test_indices: np.ndarray
    ratio: float


def split_holdout(n_rows: int, labels, ratio: float, seed: int) -> SplitPair:
    """Stratified shuffle split; each class contributes round(ratio * n_c) rows to train."""
    y = np.asarray(labels)
    if y.shape != (n_rows,):
        raise DataError(f"labels length {y.size} does not match n_rows {n_rows}")
    if not 0.0 < ratio < 1.0:
        raise DataError(f"ratio must be in (0, 1), got {ratio}")
    rng = np.random.default_rng(seed)
    train, test = [], []
    for c in np.unique(y):
        members = np.flatnonzero(y == c)
        if members.size < 2:
            raise DataError(f"class {c} has {members.size} member(s); cannot stratify")
        members = rng.permutation(members)
        n_train = min(max(math.floor(ratio * members.size + 0.5), 1), members.size - 1)
        train.append(members[:n_train])
        test.append(members[n_train:])
    tr = np.sort(np.concatenate(train)) if train else np.zeros(0, dtype=np.intp)
    te = np.sort(np.concatenate(test)) if test else np.zeros(0, dtype=np.intp)
    return SplitPair(tr, te, ratio)
