"""Binary CART trees on numeric features.

A fitted tree is stored as flat parallel arrays (one slot per node) so that
prediction is a vectorized walk and serialization is a handful of lists.
Internal nodes send ``x[feature] <= threshold`` left.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, DataError
from .base import Classifier, as_matrix, register

LEAF = -1
# gains within this of each other count as tied (lower feature, lower threshold wins)
TIE_TOL = 1e-12


@dataclass
class Tree:
    feature: np.ndarray  # int, LEAF for leaves
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray  # class-1 fraction, or a regression value
    n_samples: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.feature.size

    @property
    def depth(self) -> int:
        depth = np.zeros(self.n_nodes, dtype=np.intp)
        for i in range(self.n_nodes):  # children always follow their parent
            if self.feature[i] != LEAF:
                depth[self.left[i]] = depth[self.right[i]] = depth[i] + 1
        return int(depth.max(initial=0))

    def apply(self, X) -> np.ndarray:
        """Leaf index reached by each row."""
        X = np.asarray(X, dtype=np.float64)
        node = np.zeros(X.shape[0], dtype=np.intp)
        active = np.flatnonzero(self.feature[node] != LEAF)
        while active.size:
            cur = node[active]
            go_left = X[active, self.feature[cur]] <= self.threshold[cur]
            node[active] = np.where(go_left, self.left[cur], self.right[cur])
            active = active[self.feature[node[active]] != LEAF]
        return node

    def predict_value(self, X) -> np.ndarray:
        return self.value[self.apply(X)]

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
            "n_samples": self.n_samples.tolist(),
        }

    @classmethod
    def from_dict(cls, d) -> "Tree":
        return cls(
            np.asarray(d["feature"], dtype=np.intp),
            np.asarray(d["threshold"], dtype=np.float64),
            np.asarray(d["left"], dtype=np.intp),
            np.asarray(d["right"], dtype=np.intp),
            np.asarray(d["value"], dtype=np.float64),
            np.asarray(d["n_samples"], dtype=np.int64),
        )


def _split_candidates(x_sorted: np.ndarray):
    """Positions i where a threshold between sorted values i and i+1 exists."""
    return np.flatnonzero(x_sorted[:-1] < x_sorted[1:])


def _midpoint(lo: float, hi: float) -> float:
    mid = lo + (hi - lo) / 2.0
    # adjacent floats: the midpoint may round up to hi, which would send hi left
    return lo if mid >= hi else mid


def _scan(xs, ws, ts, criterion: str):
    """Gain of every admissible threshold for one feature, rows sorted by that feature.

    Returns ``(gain, pos)`` where ``pos[i]`` is the last left-hand row of
    candidate ``i``; both are empty when the feature is constant.
    """
    pos = _split_candidates(xs)
    if pos.size == 0:
        return pos, pos
    W = ws.sum()
    cw = np.cumsum(ws)[pos]
    WL, WR = cw, W - cw
    wt = ws * ts
    cs = np.cumsum(wt)[pos]
    S = wt.sum()
    if criterion == "gini":
        pl = cs / WL
        pr = (S - cs) / WR
        p = S / W
        parent = 2.0 * p * (1.0 - p)
        child = (WL * 2.0 * pl * (1.0 - pl) + WR * 2.0 * pr * (1.0 - pr)) / W
        gain = parent - child
    else:
        gain = (cs * cs / WL + (S - cs) ** 2 / WR - S * S / W) / W
    return gain, pos


def _pick(gain, pos, xs, f, best):
    top = gain.max()
    # lowest threshold among the (near-)maximal gains
    j = int(np.flatnonzero(gain >= top - TIE_TOL)[0])
    g = float(gain[j])
    if best is None or g > best[0] + TIE_TOL:
        i = pos[j]
        return (g, int(f), _midpoint(float(xs[i]), float(xs[i + 1])))
    return best


def best_split(X, idx, target, weight, criterion: str, features):
    """Best ``(gain, feature, threshold)`` over ``features`` for the rows ``idx``.

    ``criterion`` is ``"gini"`` (target in {0, 1}, weighted Gini impurity) or
    ``"mse"`` (weighted squared error). Returns ``None`` when no feature has
    two distinct values among the rows.
    """
    best = None
    for f in features:
        order = idx[np.argsort(X[idx, f], kind="stable")]
        xs = X[order, f]
        gain, pos = _scan(xs, weight[order], target[order], criterion)
        if pos.size:
            best = _pick(gain, pos, xs, f, best)
    return best


def build_tree(X, target, weight=None, *, criterion="gini", max_depth=None,
               min_samples_split=2, max_features=None, rng=None, presorted=None) -> Tree:
    """Grow a tree depth-first.

    Splitting stops at ``max_depth``, below ``min_samples_split`` rows, on a
    pure node, or when no feature separates the rows. Splits with zero gain
    are allowed (they are what lets a depth-2 tree solve XOR). When
    ``max_features`` is below the feature count, a fresh random subset of that
    size is drawn at every node.

    ``presorted`` may carry ``presort(X)`` when the same matrix is reused
    across many fits (boosting rounds), or a row subset of it: the tree is
    then grown on those rows only.
    """
    X = np.asarray(X, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    n, d = X.shape
    if n == 0:
        raise DataError("cannot fit a tree on empty input")
    weight = np.ones(n) if weight is None else np.asarray(weight, dtype=np.float64)
    if max_features is not None and max_features < d and rng is None:
        raise ConfigError("a random generator is required when max_features < n_features")
    if presorted is None:
        presorted = presort(X)

    feature, threshold, left, right, value, count = [], [], [], [], [], []

    def new_node(idx):
        w = weight[idx]
        value.append(float((w * target[idx]).sum() / w.sum()))
        count.append(int(idx.size))
        feature.append(LEAF)
        threshold.append(0.0)
        left.append(LEAF)
        right.append(LEAF)
        return len(value) - 1

    go_left = np.zeros(n, dtype=bool)
    root_rows = presorted[0] if d else np.arange(n)
    if root_rows.size == 0:
        raise DataError("cannot fit a tree on empty input")
    root = new_node(root_rows)
    stack = [(root, list(presorted), 0)]
    while stack:
        node, orders, depth = stack.pop()
        idx = orders[0] if d else root_rows
        if max_depth is not None and depth >= max_depth:
            continue
        if idx.size < min_samples_split or d == 0:
            continue
        t = target[idx]
        if t.min() == t.max():
            continue
        if max_features is not None and max_features < d:
            feats = np.sort(rng.choice(d, size=max_features, replace=False))
        else:
            feats = range(d)
        best = None
        for f in feats:
            o = orders[f]
            xs = X[o, f]
            gain, pos = _scan(xs, weight[o], target[o], criterion)
            if pos.size:
                best = _pick(gain, pos, xs, f, best)
        if best is None or best[0] < -TIE_TOL:
            continue
        _, f, thr = best
        o = orders[f]
        li = o[X[o, f] <= thr]
        go_left[li] = True
        l_orders = [a[go_left[a]] for a in orders]
        r_orders = [a[~go_left[a]] for a in orders]
        go_left[li] = False
        feature[node] = f
        threshold[node] = thr
        left[node] = new_node(l_orders[0])
        right[node] = new_node(r_orders[0])
        # right pushed first so the left subtree is expanded first
        stack.append((right[node], r_orders, depth + 1))
        stack.append((left[node], l_orders, depth + 1))

    return Tree(
        np.asarray(feature, dtype=np.intp),
        np.asarray(threshold, dtype=np.float64),
        np.asarray(left, dtype=np.intp),
        np.asarray(right, dtype=np.intp),
        np.asarray(value, dtype=np.float64),
        np.asarray(count, dtype=np.int64),
    )


def presort(X) -> list[np.ndarray]:
    """Row order of each feature column (stable, so equal values keep row order)."""
    X = np.asarray(X, dtype=np.float64)
    return [np.argsort(X[:, f], kind="stable") for f in range(X.shape[1])]


def check_depth(max_depth):
    if max_depth is not None and (int(max_depth) != max_depth or max_depth < 1):
        raise ConfigError(f"max_depth must be None or an integer >= 1, got {max_depth}")


@register("tree")
class DecisionTree(Classifier):
    """CART classifier; leaves hold the class-1 fraction of their training rows."""

    defaults = {"max_depth": None, "min_samples_split": 2}

    def validate(self):
        check_depth(self.params["max_depth"])
        if self.params["min_samples_split"] < 2:
            raise ConfigError("min_samples_split must be >= 2")

    def _fit(self, X, y):
        self.tree_ = build_tree(X, y, criterion="gini", max_depth=self.params["max_depth"],
                                min_samples_split=self.params["min_samples_split"])

    def score(self, X):
        return self.tree_.predict_value(as_matrix(X))

    def _state(self):
        return {"tree": self.tree_.to_dict()}

    def _load(self, state):
        self.tree_ = Tree.from_dict(state["tree"])
