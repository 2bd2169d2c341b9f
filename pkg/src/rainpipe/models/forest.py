import math

import numpy as np

from ..errors import ConfigError
from .base import Classifier, as_matrix, register
from .tree import Tree, build_tree, check_depth, presort


def resolve_max_features(spec, n_features: int) -> int:
    """Map a max_features setting ("sqrt", "all", None or an int) to a count."""
    if spec in (None, "all"):
        return n_features
    if spec == "sqrt":
        return max(1, math.ceil(math.sqrt(n_features)))
    if isinstance(spec, (int, np.integer)) and not isinstance(spec, bool) and spec >= 1:
        return min(int(spec), n_features)
    raise ConfigError(f"max_features must be 'sqrt', 'all' or a positive integer, got {spec!r}")


@register("random_forest")
class RandomForest(Classifier):
    """Bagged CART trees with a random feature subset drawn at every split.

    Each tree gets its own generator spawned from the model seed, so the
    ensemble does not depend on the order trees are grown in.
    """

    defaults = {"n_estimators": 100, "max_depth": 4, "max_features": "sqrt",
                "bootstrap": True, "min_samples_split": 2}

    def validate(self):
        p = self.params
        if p["n_estimators"] < 1:
            raise ConfigError("n_estimators must be >= 1")
        check_depth(p["max_depth"])
        resolve_max_features(p["max_features"], 1)

    def _fit(self, X, y):
        n, d = X.shape
        if n < 2:
            raise ConfigError("random forest needs at least 2 rows")
        m = resolve_max_features(self.params["max_features"], d)
        streams = np.random.SeedSequence(self.seed).spawn(int(self.params["n_estimators"]))
        orders = presort(X)
        self.trees_ = []
        for ss in streams:
            rng = np.random.default_rng(ss)
            if self.params["bootstrap"]:
                # a bootstrap sample is the original rows weighted by their draw counts
                counts = np.bincount(rng.integers(0, n, n), minlength=n).astype(np.float64)
                drawn = counts > 0
                tree_orders = [o[drawn[o]] for o in orders]
            else:
                counts, tree_orders = None, orders
            self.trees_.append(build_tree(
                X, y, counts, criterion="gini", max_depth=self.params["max_depth"],
                min_samples_split=self.params["min_samples_split"], max_features=m, rng=rng,
                presorted=tree_orders,
            ))

    def score(self, X):
        X = as_matrix(X)
        total = np.zeros(X.shape[0])
        for t in self.trees_:
            total += t.predict_value(X)
        return total / len(self.trees_)

    def _state(self):
        return {"trees": [t.to_dict() for t in self.trees_]}

    def _load(self, state):
        self.trees_ = [Tree.from_dict(t) for t in state["trees"]]
