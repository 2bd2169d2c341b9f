"""Turn a raw weather ``Table`` into a dense, scaled, feature-selected matrix.

Every learned step is a fitted transform: it is fit once (on training rows)
and afterwards applied unchanged to any table or matrix, so test data never
influences the parameters. Each transform round-trips through a plain dict
(``to_dict`` / ``transform_from_dict``) for the JSON sidecar written by the
experiment runner.

Order used by :class:`Preprocessor`::

    drop leaky -> impute -> expand date -> encode -> min-max scale -> chi2 select
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .dataset import LEAKY_COLUMNS, ColumnSchema, Table
from .errors import ConfigError, DataError, LeakageError

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class FeatureMatrix:
    values: np.ndarray
    col_names: tuple[str, ...]

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.ndim != 2:
            raise DataError(f"feature matrix must be 2-D, got shape {vals.shape}")
        names = tuple(self.col_names)
        if len(names) != vals.shape[1]:
            raise DataError(f"{len(names)} column names for {vals.shape[1]} columns")
        if len(set(names)) != len(names):
            raise DataError("feature column names must be unique")
        if np.isnan(vals).any():
            raise DataError("feature matrix contains missing values")
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "col_names", names)

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_cols(self) -> int:
        return self.values.shape[1]

    def take_rows(self, idx) -> "FeatureMatrix":
        return FeatureMatrix(self.values[idx], self.col_names)


def _as_array(matrix) -> np.ndarray:
    if isinstance(matrix, FeatureMatrix):
        return matrix.values
    return np.asarray(matrix, dtype=np.float64)


def _names_of(matrix) -> tuple[str, ...]:
    if isinstance(matrix, FeatureMatrix):
        return matrix.col_names
    return tuple(f"x{j}" for j in range(np.shape(matrix)[1]))


# -- column plumbing ---------------------------------------------------------


def drop_columns(table: Table, names: Sequence[str]) -> Table:
    unknown = [n for n in names if n not in table]
    if unknown:
        raise DataError(f"cannot drop unknown column(s): {unknown}")
    return table.replace(drop=names)


def check_no_leakage(feature_names: Iterable[str]) -> None:
    """Refuse any feature list that includes a target-derived column."""
    leaky = [n for n in feature_names if n in LEAKY_COLUMNS]
    if leaky:
        raise LeakageError(
            f"{leaky} is derived from the target (next-day rainfall) and cannot be a feature"
        )


def expand_date(table: Table) -> Table:
    """Replace the date column by numeric Year, Month and Day columns."""
    dates = table.columns_of_kind("date")
    if not dates:
        raise DataError("table has no date column to expand")
    name = dates[0]
    ymd = table.values(name)
    miss = table.missing(name)
    add = [
        (ColumnSchema(part, "numeric"), ymd[:, i].astype(np.float64), miss.copy(), None)
        for i, part in enumerate(("Year", "Month", "Day"))
    ]
    return table.replace(drop=[name], add=add, at=name)


# -- imputation --------------------------------------------------------------


def _group_keys(table: Table, group_cols: Sequence[str]) -> list[tuple]:
    """Per-row group key; ``None`` where any component is missing.

    ``Month`` resolves to the date column's month when no Month column exists,
    so imputation can run before the date is expanded.
    """
    parts = []
    for g in group_cols:
        if g in table:
            kind = table.spec(g).kind
            miss = table.missing(g).tolist()
            if kind == "categorical":
                vals = table.strings(g)
            elif kind == "date":
                vals = ["%04d-%02d-%02d" % tuple(r) for r in table.values(g).tolist()]
            else:
                vals = table.values(g).tolist()
        elif g == "Month" and table.columns_of_kind("date"):
            d = table.columns_of_kind("date")[0]
            vals = table.values(d)[:, 1].tolist()
            miss = table.missing(d).tolist()
        else:
            raise DataError(f"unknown grouping column {g!r}")
        parts.append([None if m else v for v, m in zip(vals, miss)])
    keys = list(zip(*parts)) if parts else [()] * table.n_rows
    return [None if any(p is None for p in k) else k for k in keys]


def _key_str(key: tuple) -> str:
    return "|".join(str(int(p)) if isinstance(p, float) and p.is_integer() else str(p) for p in key)


class GroupImputer:
    """Fill missing cells from per-group statistics, falling back to the global one.

    Numeric columns use the group mean, categorical columns the group mode
    (ties go to the alphabetically first category).
    """

    kind = "group_mean_imputer"

    def __init__(self, group_cols, numeric=None, categorical=None):
        self.group_cols = list(group_cols)
        # {column: {"global": value, "groups": {key_str: value}}}
        self.numeric = numeric or {}
        self.categorical = categorical or {}

    @classmethod
    def fit(cls, table: Table, columns: Sequence[str], group_cols=("Location", "Month")):
        keys = [None if k is None else _key_str(k) for k in _group_keys(table, group_cols)]
        uniq = sorted({k for k in keys if k is not None})
        pos = {k: i for i, k in enumerate(uniq)}
        gid = np.array([-1 if k is None else pos[k] for k in keys], dtype=np.intp)
        numeric, categorical = {}, {}
        for col in columns:
            kind = table.spec(col).kind
            miss = table.missing(col)
            if miss.all():
                raise DataError(f"column {col!r} is entirely missing; nothing to impute from")
            observed = ~miss & (gid >= 0)
            if kind == "numeric":
                vals = table.values(col)
                glob = float(vals[~miss].mean())
                sums = np.bincount(gid[observed], weights=vals[observed], minlength=len(uniq))
                cnts = np.bincount(gid[observed], minlength=len(uniq))
                groups = {uniq[i]: float(sums[i] / cnts[i]) for i in np.flatnonzero(cnts)}
                numeric[col] = {"global": glob, "groups": groups}
            elif kind == "categorical":
                codes = table.values(col)
                vocab = table.vocab[col]
                glob = vocab[int(np.argmax(np.bincount(codes[~miss], minlength=len(vocab))))]
                counts = np.zeros((len(uniq), len(vocab)), dtype=np.int64)
                np.add.at(counts, (gid[observed], codes[observed]), 1)
                has = counts.sum(axis=1) > 0
                best = counts.argmax(axis=1)
                groups = {uniq[i]: vocab[best[i]] for i in np.flatnonzero(has)}
                categorical[col] = {"global": glob, "groups": groups}
            else:
                raise DataError(f"cannot impute column {col!r} of kind {kind}")
        return cls(group_cols, numeric, categorical)

    def apply(self, table: Table) -> Table:
        keys = [None if k is None else _key_str(k) for k in _group_keys(table, self.group_cols)]
        add = []
        for col, params in self.numeric.items():
            if table.spec(col).kind != "numeric":
                raise DataError(f"column {col!r} is not numeric")
            miss = table.missing(col)
            vals = table.values(col).copy()
            groups, glob = params["groups"], params["global"]
            for i in np.flatnonzero(miss):
                vals[i] = groups.get(keys[i], glob)
            add.append((table.spec(col), vals, np.zeros_like(miss), None))
        for col, params in self.categorical.items():
            miss = table.missing(col)
            vocab = list(table.vocab[col])
            lookup = {v: i for i, v in enumerate(vocab)}
            codes = table.values(col).copy()
            groups, glob = params["groups"], params["global"]
            for i in np.flatnonzero(miss):
                tok = groups.get(keys[i], glob)
                if tok not in lookup:
                    lookup[tok] = len(vocab)
                    vocab.append(tok)
                codes[i] = lookup[tok]
            add.append((table.spec(col), codes, np.zeros_like(miss), tuple(vocab)))
        out = table
        for entry in add:
            out = out.replace(drop=[entry[0].name], add=[entry], at=entry[0].name)
        return out

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "group_cols": self.group_cols,
            "numeric": self.numeric,
            "categorical": self.categorical,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(d["group_cols"], d["numeric"], d["categorical"])


def impute_group_mean(table: Table, value_col: str, group_cols=("Location", "Month")) -> Table:
    """Fill ``value_col`` with its group mean (global mean for unobserved groups)."""
    if table.spec(value_col).kind != "numeric":
        raise DataError(f"column {value_col!r} is not numeric")
    return GroupImputer.fit(table, [value_col], group_cols).apply(table)


# -- categorical encoders ----------------------------------------------------


class EncodedBlock(NamedTuple):
    values: np.ndarray
    names: list[str]
    n_unseen: int


class OneHotEncoder:
    """One indicator column per category seen at fit time."""

    kind = "onehot"

    def __init__(self, column: str, categories: Sequence[str]):
        self.column = column
        self.categories = list(categories)

    @classmethod
    def fit(cls, table: Table, col: str) -> "OneHotEncoder":
        if table.spec(col).kind != "categorical":
            raise DataError(f"column {col!r} is not categorical")
        codes = table.values(col)
        seen = np.unique(codes[codes >= 0])
        return cls(col, sorted(table.vocab[col][c] for c in seen))

    @property
    def output_names(self) -> list[str]:
        return [f"{self.column}_{c}" for c in self.categories]

    def apply(self, table: Table) -> EncodedBlock:
        if table.spec(self.column).kind != "categorical":
            raise DataError(f"column {self.column!r} is not categorical")
        pos = {c: j for j, c in enumerate(self.categories)}
        vocab = table.vocab[self.column]
        # code -> output column, -1 for unseen; last slot handles missing (-1 codes)
        remap = np.array([pos.get(v, -1) for v in vocab] + [-1], dtype=np.intp)
        codes = table.values(self.column)
        cols = remap[codes]
        out = np.zeros((table.n_rows, len(self.categories)))
        hit = cols >= 0
        out[np.flatnonzero(hit), cols[hit]] = 1.0
        n_unseen = int(np.count_nonzero(~hit & (codes >= 0)))
        if n_unseen:
            log.warning("%s: %d row(s) with categories unseen at fit time", self.column, n_unseen)
        return EncodedBlock(out, self.output_names, n_unseen)

    def to_dict(self):
        return {"kind": self.kind, "column": self.column, "categories": self.categories}

    @classmethod
    def from_dict(cls, d):
        return cls(d["column"], d["categories"])


def encode_onehot(table: Table, col: str) -> OneHotEncoder:
    return OneHotEncoder.fit(table, col)


FNV64_OFFSET = 0xCBF29CE484222325
FNV64_PRIME = 0x100000001B3
_MASK64 = (1 << 64) - 1


def fnv1a_64(text: str) -> int:
    """64-bit FNV-1a over the UTF-8 bytes of ``text``."""
    h = FNV64_OFFSET
    for b in text.encode("utf-8"):
        h = ((h ^ b) * FNV64_PRIME) & _MASK64
    return h


def hash_slot(text: str, width: int, signed: bool = True) -> tuple[int, float]:
    """Column index and sign (+1/-1) for one category under the hashing trick."""
    h = fnv1a_64(text)
    sign = -1.0 if signed and (h >> 32) & 1 else 1.0
    return h % width, sign


class FeatureHasher:
    """Hash each category into a fixed-width vector holding a single +/-1."""

    kind = "hasher"

    def __init__(self, column: str, width: int, signed: bool = True):
        if width < 1:
            raise ConfigError(f"hash width must be >= 1, got {width}")
        self.column = column
        self.width = int(width)
        self.signed = bool(signed)

    @classmethod
    def fit(cls, table: Table, col: str, width: int, signed: bool = True):
        if table.spec(col).kind != "categorical":
            raise DataError(f"column {col!r} is not categorical")
        return cls(col, width, signed)

    @property
    def output_names(self) -> list[str]:
        return [f"{self.column}_h{j}" for j in range(self.width)]

    def apply(self, table: Table) -> EncodedBlock:
        if table.spec(self.column).kind != "categorical":
            raise DataError(f"column {self.column!r} is not categorical")
        slots = [hash_slot(v, self.width, self.signed) for v in table.vocab[self.column]]
        idx = np.array([s[0] for s in slots] + [-1], dtype=np.intp)
        sign = np.array([s[1] for s in slots] + [0.0])
        codes = table.values(self.column)
        out = np.zeros((table.n_rows, self.width))
        rows = np.flatnonzero(codes >= 0)
        out[rows, idx[codes[rows]]] = sign[codes[rows]]
        return EncodedBlock(out, self.output_names, 0)

    def to_dict(self):
        return {"kind": self.kind, "column": self.column, "width": self.width, "signed": self.signed}

    @classmethod
    def from_dict(cls, d):
        return cls(d["column"], d["width"], d["signed"])


def encode_hashed(table: Table, col: str, m: int, signed: bool = True) -> FeatureHasher:
    return FeatureHasher.fit(table, col, m, signed)


# -- scaling and selection ---------------------------------------------------


@dataclass
class MinMaxScaler:
    """Per-column affine map onto [0, 1]; constant columns map to 0."""

    mins: np.ndarray
    maxs: np.ndarray
    kind: str = field(default="minmax", init=False)

    @classmethod
    def fit(cls, matrix) -> "MinMaxScaler":
        X = _as_array(matrix)
        if X.shape[0] == 0:
            return cls(np.zeros(X.shape[1]), np.zeros(X.shape[1]))
        return cls(X.min(axis=0), X.max(axis=0))

    def apply(self, matrix):
        X = _as_array(matrix)
        span = self.maxs - self.mins
        safe = np.where(span > 0, span, 1.0)
        out = np.where(span > 0, (X - self.mins) / safe, 0.0)
        out = np.clip(out, 0.0, 1.0)
        if isinstance(matrix, FeatureMatrix):
            return FeatureMatrix(out, matrix.col_names)
        return out

    def to_dict(self):
        return {"kind": self.kind, "min": self.mins.tolist(), "max": self.maxs.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(np.asarray(d["min"], dtype=np.float64), np.asarray(d["max"], dtype=np.float64))


def minmax_scale(matrix):
    scaler = MinMaxScaler.fit(matrix)
    return scaler, scaler.apply(matrix)


def chi2_scores(matrix, labels) -> np.ndarray:
    """Chi-squared statistic of each non-negative feature against a binary target.

    Observed per class is the feature sum over that class; expected is the
    total sum split by class frequency.
    """
    X = _as_array(matrix)
    y = np.asarray(labels)
    if y.shape != (X.shape[0],):
        raise DataError(f"labels length {y.size} does not match {X.shape[0]} rows")
    neg = np.flatnonzero((X < 0).any(axis=0))
    if neg.size:
        names = _names_of(matrix)
        raise DataError(f"chi2 requires non-negative features; column {names[neg[0]]!r} has negatives")
    n = X.shape[0]
    total = X.sum(axis=0)
    scores = np.zeros(X.shape[1])
    if n == 0:
        return scores
    for c in (0, 1):
        in_c = y == c
        observed = X[in_c].sum(axis=0)
        expected = in_c.sum() / n * total
        ok = expected > 0
        scores[ok] += (observed[ok] - expected[ok]) ** 2 / expected[ok]
    return scores


class KBestSelector:
    kind = "selector"

    def __init__(self, kept: Sequence[int], kept_names: Sequence[str], scores=None):
        self.kept = [int(i) for i in kept]
        self.kept_names = list(kept_names)
        self.scores = None if scores is None else [float(s) for s in scores]

    def apply(self, matrix):
        X = _as_array(matrix)
        out = X[:, self.kept]
        if isinstance(matrix, FeatureMatrix):
            if tuple(matrix.col_names[i] for i in self.kept) != tuple(self.kept_names):
                raise DataError("selector applied to a matrix with different columns")
            return FeatureMatrix(out, self.kept_names)
        return out

    def to_dict(self):
        return {"kind": self.kind, "kept": self.kept, "kept_names": self.kept_names,
                "scores": self.scores}

    @classmethod
    def from_dict(cls, d):
        return cls(d["kept"], d["kept_names"], d.get("scores"))


def select_k_best(matrix, labels, k: int) -> KBestSelector:
    """Keep the ``k`` highest-scoring chi2 columns (ties: lower index first)."""
    X = _as_array(matrix)
    if not 1 <= k <= X.shape[1]:
        raise ConfigError(f"k must be in [1, {X.shape[1]}], got {k}")
    scores = chi2_scores(matrix, labels)
    order = np.lexsort((np.arange(len(scores)), -scores))
    kept = np.sort(order[:k])
    names = _names_of(matrix)
    return KBestSelector(kept, [names[i] for i in kept], scores)


@dataclass
class Correlation:
    target: np.ndarray  # r of each column against the labels
    pairwise: np.ndarray  # column-by-column r
    constant: np.ndarray  # columns with zero variance (their r set to 0)


def _pearson_block(A: np.ndarray, B: np.ndarray):
    A = A - A.mean(axis=0)
    B = B - B.mean(axis=0)
    na = np.sqrt((A * A).sum(axis=0))
    nb = np.sqrt((B * B).sum(axis=0))
    num = A.T @ B
    den = np.outer(na, nb)
    with np.errstate(invalid="ignore", divide="ignore"):
        r = np.where(den > 0, num / np.where(den > 0, den, 1.0), 0.0)
    return np.clip(r, -1.0, 1.0), na == 0


def pearson_correlation(matrix, labels) -> Correlation:
    X = _as_array(matrix)
    y = np.asarray(labels, dtype=np.float64)
    if X.shape[0] < 2:
        raise DataError("correlation needs at least 2 rows")
    if y.shape != (X.shape[0],):
        raise DataError(f"labels length {y.size} does not match {X.shape[0]} rows")
    target, constant = _pearson_block(X, y[:, None])
    pairwise, _ = _pearson_block(X, X)
    diag = np.arange(X.shape[1])
    pairwise[diag, diag] = np.where(constant, 0.0, 1.0)
    return Correlation(target[:, 0], pairwise, constant)


# -- end-to-end preprocessing -----------------------------------------------

_TRANSFORMS = {
    "group_mean_imputer": GroupImputer,
    "onehot": OneHotEncoder,
    "hasher": FeatureHasher,
    "minmax": MinMaxScaler,
    "selector": KBestSelector,
}


def transform_from_dict(d: dict):
    try:
        return _TRANSFORMS[d["kind"]].from_dict(d)
    except KeyError:
        raise DataError(f"unknown transform kind {d.get('kind')!r}") from None


@dataclass
class Preprocessor:
    """The full table-to-matrix pipeline with fit-on-train semantics."""

    hash_columns: tuple[str, ...] = ("Location", "WindGustDir", "WindDir9am", "WindDir3pm")
    onehot_columns: tuple[str, ...] = ("RainToday",)
    hash_width: int = 8
    signed_hash: bool = True
    selector_k: int | None = 4
    group_cols: tuple[str, ...] = ("Location", "Month")
    # raw columns allowed into the matrix (None: all); "Date" admits Year/Month/Day
    feature_columns: tuple[str, ...] | None = None

    imputer: GroupImputer | None = None
    encoders: list = field(default_factory=list)
    scaler: MinMaxScaler | None = None
    selector: KBestSelector | None = None
    leaky_dropped: list[str] = field(default_factory=list)

    def _prepare(self, table: Table) -> Table:
        leaky = [c for c in LEAKY_COLUMNS if c in table]
        return drop_columns(table, leaky) if leaky else table

    def _allowed(self, name: str) -> bool:
        if self.feature_columns is None:
            return True
        if name in ("Year", "Month", "Day"):
            return "Date" in self.feature_columns
        return name in self.feature_columns

    def _encode(self, table: Table) -> FeatureMatrix:
        blocks, names = [], []
        by_col = {e.column: e for e in self.encoders}
        for col in table.schema:
            if not self._allowed(col.name):
                continue
            if col.kind == "numeric":
                if table.missing(col.name).any():
                    raise DataError(f"column {col.name!r} still has missing cells after imputation")
                blocks.append(table.values(col.name)[:, None])
                names.append(col.name)
            elif col.kind == "categorical":
                if col.name not in by_col:
                    continue
                block = by_col[col.name].apply(table)
                blocks.append(block.values)
                names.extend(block.names)
        values = np.hstack(blocks) if blocks else np.zeros((table.n_rows, 0))
        return FeatureMatrix(values, names)

    def fit(self, table: Table) -> FeatureMatrix:
        """Fit every step on ``table`` and return its transformed matrix."""
        check_no_leakage([*self.hash_columns, *self.onehot_columns, *(self.feature_columns or ())])
        self.leaky_dropped = [c for c in LEAKY_COLUMNS if c in table]
        base = self._prepare(table)
        encoded_cols = set(self.hash_columns) | set(self.onehot_columns)
        cols = [c.name for c in base.schema
                if c.kind == "numeric" or (c.kind == "categorical" and c.name in encoded_cols)]
        cols = [c for c in cols if c not in self.group_cols]
        self.imputer = GroupImputer.fit(base, cols, self.group_cols)
        filled = expand_date(self.imputer.apply(base))
        self.encoders = []
        for col in filled.schema:
            if col.kind != "categorical":
                continue
            if col.name in self.hash_columns:
                self.encoders.append(FeatureHasher.fit(filled, col.name, self.hash_width, self.signed_hash))
            elif col.name in self.onehot_columns:
                self.encoders.append(OneHotEncoder.fit(filled, col.name))
        raw = self._encode(filled)
        self.scaler = MinMaxScaler.fit(raw)
        scaled = self.scaler.apply(raw)
        if self.selector_k is not None:
            self.selector = select_k_best(scaled, filled.labels(), self.selector_k)
        return self.transform(table)

    def transform(self, table: Table) -> FeatureMatrix:
        if self.scaler is None:
            raise RuntimeError("Preprocessor is not fitted")
        filled = expand_date(self.imputer.apply(self._prepare(table)))
        out = self.scaler.apply(self._encode(filled))
        if self.selector is not None:
            out = self.selector.apply(out)
        check_no_leakage(out.col_names)
        return out

    @property
    def selected_features(self) -> list[str]:
        return list(self.selector.kept_names) if self.selector else []

    def to_dict(self) -> dict:
        steps = [self.imputer.to_dict(), *(e.to_dict() for e in self.encoders), self.scaler.to_dict()]
        if self.selector is not None:
            steps.append(self.selector.to_dict())
        return {
            "hash_columns": list(self.hash_columns),
            "onehot_columns": list(self.onehot_columns),
            "hash_width": self.hash_width,
            "signed_hash": self.signed_hash,
            "selector_k": self.selector_k,
            "group_cols": list(self.group_cols),
            "feature_columns": None if self.feature_columns is None else list(self.feature_columns),
            "leaky_dropped": self.leaky_dropped,
            "transforms": steps,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Preprocessor":
        pre = cls(tuple(d["hash_columns"]), tuple(d["onehot_columns"]), d["hash_width"],
                  d["signed_hash"], d["selector_k"], tuple(d["group_cols"]),
                  None if d.get("feature_columns") is None else tuple(d["feature_columns"]))
        pre.leaky_dropped = list(d.get("leaky_dropped", []))
        for t in map(transform_from_dict, d["transforms"]):
            if isinstance(t, GroupImputer):
                pre.imputer = t
            elif isinstance(t, (OneHotEncoder, FeatureHasher)):
                pre.encoders.append(t)
            elif isinstance(t, MinMaxScaler):
                pre.scaler = t
            else:
                pre.selector = t
        return pre
