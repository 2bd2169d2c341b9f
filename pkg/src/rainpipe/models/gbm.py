import math

import numpy as np

from ..errors import ConfigError, DataError
from .base import Classifier, as_matrix, register
from .forest import resolve_max_features
from .logreg import sigmoid
from .tree import Tree, build_tree, check_depth, presort

LEAF_CLAMP = 4.0


def log_loss(y, F) -> float:
    return float(np.mean(np.logaddexp(0.0, F) - y * F))


@register("gbm")
class GradientBoosting(Classifier):
    """Binomial-deviance gradient boosting with Newton-step leaf values.

    Each round fits a squared-error regression tree to the residuals
    ``y - p``; a leaf's value is ``sum(r) / sum(p (1 - p))`` over its rows,
    clamped to [-4, 4], and the ensemble adds ``learning_rate`` times it.
    """

    defaults = {"n_estimators": 100, "learning_rate": 0.1, "max_depth": 2, "max_features": 2}

    def validate(self):
        p = self.params
        if p["n_estimators"] < 0:
            raise ConfigError("n_estimators must be >= 0")
        if not p["learning_rate"] > 0:
            raise ConfigError("learning_rate must be > 0")
        check_depth(p["max_depth"])
        resolve_max_features(p["max_features"], 1)

    def _fit(self, X, y):
        pbar = float(y.mean())
        if pbar in (0.0, 1.0):
            raise DataError("gradient boosting needs both classes present")
        self.init_ = math.log(pbar / (1 - pbar))
        lr = float(self.params["learning_rate"])
        m = resolve_max_features(self.params["max_features"], X.shape[1])
        rng = np.random.default_rng(self.seed)
        yf = y.astype(np.float64)
        F = np.full(y.size, self.init_)
        self.trees_ = []
        orders = presort(X)
        self.train_loss_ = [log_loss(yf, F)]
        for _ in range(int(self.params["n_estimators"])):
            p = sigmoid(F)
            r = yf - p
            tree = build_tree(X, r, criterion="mse", max_depth=self.params["max_depth"],
                              max_features=m, rng=rng, presorted=orders)
            leaf = tree.apply(X)
            num = np.bincount(leaf, weights=r, minlength=tree.n_nodes)
            den = np.bincount(leaf, weights=p * (1 - p), minlength=tree.n_nodes)
            step = np.divide(num, den, out=np.zeros_like(num), where=den > 0)
            tree.value = np.clip(step, -LEAF_CLAMP, LEAF_CLAMP)
            F = F + lr * tree.value[leaf]
            self.trees_.append(tree)
            self.train_loss_.append(log_loss(yf, F))

    def decision_function(self, X):
        X = as_matrix(X)
        F = np.full(X.shape[0], self.init_)
        lr = float(self.params["learning_rate"])
        for tree in self.trees_:
            F += lr * tree.predict_value(X)
        return F

    def score(self, X):
        return sigmoid(self.decision_function(X))

    def _state(self):
        return {"init": self.init_, "trees": [t.to_dict() for t in self.trees_]}

    def _load(self, state):
        self.init_ = float(state["init"])
        self.trees_ = [Tree.from_dict(t) for t in state["trees"]]
