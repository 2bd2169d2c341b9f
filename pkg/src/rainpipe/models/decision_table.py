"""Decision table: wrapper-selected feature subset plus a lookup of binned rows.

Each feature is cut into equal-frequency bins. Features are added greedily
while the cross-validated accuracy of the induced table improves; the final
table maps every observed bin tuple to the class-1 fraction of its rows, and
unseen tuples fall back to the global fraction.
"""
import numpy as np

from ..errors import ConfigError, DataError
from .base import Classifier, as_matrix, register


def equal_frequency_edges(x: np.ndarray, n_bins: int) -> np.ndarray:
    qs = np.quantile(x, np.arange(1, n_bins) / n_bins)
    return np.unique(qs)


def digitize(X: np.ndarray, edges: list) -> np.ndarray:
    """Bin id per cell: the number of edges strictly below the value."""
    return np.column_stack(
        [np.searchsorted(e, X[:, j], side="left") for j, e in enumerate(edges)]
    ) if edges else np.zeros((X.shape[0], 0), dtype=np.intp)


def _keys(bins: np.ndarray, subset, radix: int) -> np.ndarray:
    key = np.zeros(bins.shape[0], dtype=np.int64)
    for f in subset:
        key = key * radix + bins[:, f]
    return key


def _table(keys: np.ndarray, y: np.ndarray):
    uniq, inv = np.unique(keys, return_inverse=True)
    pos = np.bincount(inv, weights=y)
    cnt = np.bincount(inv)
    return uniq, pos / cnt, cnt


def _lookup(uniq, frac, keys, default):
    at = np.searchsorted(uniq, keys)
    at_c = np.minimum(at, max(uniq.size - 1, 0))
    hit = (at < uniq.size) & (uniq[at_c] == keys) if uniq.size else np.zeros(keys.size, bool)
    return np.where(hit, frac[at_c] if uniq.size else default, default)


def cv_accuracy(bins: np.ndarray, y: np.ndarray, subset, folds: np.ndarray, radix: int) -> float:
    """Pooled out-of-fold accuracy of the table induced by ``subset``."""
    keys = _keys(bins, subset, radix)
    correct = 0
    for f in np.unique(folds):
        test = folds == f
        train = ~test
        uniq, frac, _ = _table(keys[train], y[train])
        default = y[train].mean()
        score = _lookup(uniq, frac, keys[test], default)
        correct += int(((score >= 0.5).astype(np.int8) == y[test]).sum())
    return correct / y.size


@register("decision_table")
class DecisionTable(Classifier):
    defaults = {"n_bins": 10, "max_subset_size": 4, "cv_folds": 5}

    def validate(self):
        p = self.params
        if p["n_bins"] < 2:
            raise ConfigError("n_bins must be >= 2")
        if p["max_subset_size"] < 0:
            raise ConfigError("max_subset_size must be >= 0")
        if p["cv_folds"] < 2:
            raise ConfigError("cv_folds must be >= 2")

    def _fit(self, X, y):
        from ..evaluation import stratified_kfold

        n, d = X.shape
        k = int(self.params["cv_folds"])
        if n < k:
            raise DataError(f"decision table needs at least cv_folds={k} rows, got {n}")
        self.edges_ = [equal_frequency_edges(X[:, j], int(self.params["n_bins"])) for j in range(d)]
        bins = digitize(X, self.edges_)
        radix = self.params["n_bins"] + 1
        counts = np.bincount(y, minlength=2)
        if counts.min() >= k:
            folds = stratified_kfold(y, k, self.seed).fold_of
        else:
            folds = np.random.default_rng(self.seed).permutation(n) % k

        subset: list[int] = []
        best_acc = cv_accuracy(bins, y, subset, folds, radix)
        self.search_trace_ = [((), best_acc)]
        while len(subset) < self.params["max_subset_size"]:
            cand_best, cand_acc = None, -1.0
            for f in range(d):
                if f in subset:
                    continue
                acc = cv_accuracy(bins, y, subset + [f], folds, radix)
                self.search_trace_.append((tuple(subset + [f]), acc))
                if acc > cand_acc:
                    cand_best, cand_acc = f, acc
            if cand_best is None or cand_acc <= best_acc:
                break
            subset.append(cand_best)
            best_acc = cand_acc
        self.subset_ = subset
        self.cv_accuracy_ = best_acc
        self.default_ = float(y.mean())
        self.keys_, self.frac_, self.count_ = _table(_keys(bins, subset, radix), y)

    def score(self, X):
        X = as_matrix(X)
        bins = digitize(X, self.edges_)
        keys = _keys(bins, self.subset_, self.params["n_bins"] + 1)
        return _lookup(self.keys_, self.frac_, keys, self.default_)

    def rules(self):
        """The table as ``(bin tuple, class-1 fraction, count)`` rows."""
        radix = self.params["n_bins"] + 1
        out = []
        for key, frac, cnt in zip(self.keys_.tolist(), self.frac_.tolist(), self.count_.tolist()):
            parts = []
            for _ in self.subset_:
                parts.append(key % radix)
                key //= radix
            out.append((tuple(reversed(parts)), frac, cnt))
        return out

    def _state(self):
        return {
            "subset": self.subset_,
            "edges": [e.tolist() for e in self.edges_],
            "keys": self.keys_.tolist(),
            "fraction": self.frac_.tolist(),
            "count": self.count_.tolist(),
            "default": self.default_,
        }

    def _load(self, state):
        self.subset_ = list(state["subset"])
        self.edges_ = [np.asarray(e, dtype=np.float64) for e in state["edges"]]
        self.keys_ = np.asarray(state["keys"], dtype=np.int64)
        self.frac_ = np.asarray(state["fraction"], dtype=np.float64)
        self.count_ = np.asarray(state["count"], dtype=np.int64)
        self.default_ = float(state["default"])
