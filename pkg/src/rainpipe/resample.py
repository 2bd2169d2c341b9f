"""Rebalance a training set: majority undersampling or SMOTE oversampling.

Only training rows are ever resampled; callers keep the test split untouched.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .errors import ConfigError, DataError
from .neighbors import kneighbors
from .preprocess import FeatureMatrix

MODES = ("none", "undersample_random", "undersample_distance", "smote")


@dataclass(frozen=True)
class ResamplePlan:
    mode: str = "none"
    k_neighbors: int = 5
    seed: int = 42

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"unknown resample mode {self.mode!r}; expected one of {MODES}")
        if self.mode == "smote" and self.k_neighbors < 1:
            raise ConfigError("k_neighbors must be >= 1 for smote")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict | None) -> "ResamplePlan":
        if d is None:
            return cls()
        unknown = set(d) - {"mode", "k_neighbors", "seed"}
        if unknown:
            raise ConfigError(f"unknown resample field(s): {sorted(unknown)}")
        return cls(**d)


def _split_classes(y: np.ndarray):
    counts = np.bincount(y.astype(np.intp), minlength=2)
    if counts.size > 2 or (counts == 0).any():
        raise DataError(f"resampling needs both classes present, got counts {counts.tolist()}")
    minority = int(np.argmin(counts)) if counts[0] != counts[1] else 1
    return minority, 1 - minority, counts


def _unwrap(X):
    if isinstance(X, FeatureMatrix):
        return X.values, X.col_names
    return np.asarray(X, dtype=np.float64), None


def _wrap(values, names):
    return values if names is None else FeatureMatrix(values, names)


def undersample(X, y, plan: ResamplePlan):
    """Keep every minority row and as many majority rows, returned in input order."""
    if plan.mode not in ("undersample_random", "undersample_distance"):
        raise ConfigError(f"undersample called with mode {plan.mode!r}")
    values, names = _unwrap(X)
    y = np.asarray(y)
    minority, majority, counts = _split_classes(y)
    n_min = int(counts[minority])
    maj_idx = np.flatnonzero(y == majority)
    min_idx = np.flatnonzero(y == minority)

    if plan.mode == "undersample_random":
        rng = np.random.default_rng(plan.seed)
        keep_maj = rng.choice(maj_idx, size=n_min, replace=False)
    else:
        # keep majority rows far from the minority class: the mean distance to
        # the nearest minority rows is largest where the majority is not redundant
        k = min(3, min_idx.size)
        sq, _ = kneighbors(values[min_idx], values[maj_idx], k)
        score = np.sqrt(sq).mean(axis=1)
        order = np.lexsort((maj_idx, -score))
        keep_maj = maj_idx[order[:n_min]]
    keep = np.sort(np.concatenate([min_idx, keep_maj]))
    return _wrap(values[keep], names), y[keep]


def smote(X, y, plan: ResamplePlan):
    """Append synthetic minority rows until both classes have the same count.

    Seeds are taken round-robin over a shuffled copy of the minority rows; each
    synthetic row lies on the segment from its seed to one of the seed's
    ``k_neighbors`` nearest minority neighbours. Original rows come first,
    unchanged.
    """
    if plan.mode != "smote":
        raise ConfigError(f"smote called with mode {plan.mode!r}")
    values, names = _unwrap(X)
    y = np.asarray(y)
    minority, majority, counts = _split_classes(y)
    min_idx = np.flatnonzero(y == minority)
    k = plan.k_neighbors
    if min_idx.size <= k:
        raise DataError(
            f"smote needs more than k_neighbors={k} minority rows, found {min_idx.size}; "
            "lower k_neighbors"
        )
    n_new = int(counts[majority] - counts[minority])
    if n_new == 0:
        return _wrap(values.copy(), names), y.copy()

    pts = values[min_idx]
    rng = np.random.default_rng(plan.seed)
    order = rng.permutation(min_idx.size)
    seeds = order[np.arange(n_new) % min_idx.size]
    pick = rng.integers(0, k, size=n_new)
    u = rng.random(n_new)

    used = np.unique(seeds)
    _, nbr = kneighbors(pts, pts[used], k, exclude=used)
    row_of = np.empty(min_idx.size, dtype=np.intp)
    row_of[used] = np.arange(used.size)
    partner = nbr[row_of[seeds], pick]

    x, z = pts[seeds], pts[partner]
    synth = x + u[:, None] * (z - x)
    # guard against rounding past the segment ends
    synth = np.clip(synth, np.minimum(x, z), np.maximum(x, z))
    out = np.vstack([values, synth])
    labels = np.concatenate([y, np.full(n_new, minority, dtype=y.dtype)])
    return _wrap(out, names), labels


def resample(X, y, plan: ResamplePlan):
    if plan.mode == "none":
        return X, np.asarray(y)
    if plan.mode == "smote":
        return smote(X, y, plan)
    return undersample(X, y, plan)
