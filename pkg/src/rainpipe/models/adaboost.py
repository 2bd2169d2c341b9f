import math

import numpy as np

from ..errors import ConfigError, DataError
from .base import Classifier, as_matrix, register
from .logreg import sigmoid
from .tree import Tree, build_tree, presort

EPS_FLOOR = 1e-10
ALPHA_CAP = 0.5 * math.log((1 - EPS_FLOOR) / EPS_FLOOR)


def stump_sign(stump: Tree, X) -> np.ndarray:
    return np.where(stump.predict_value(X) >= 0.5, 1.0, -1.0)


@register("adaboost")
class AdaBoost(Classifier):
    """Discrete AdaBoost over depth-1 trees grown on weighted Gini.

    Boosting stops early when a stump's weighted error reaches 0.5 (that
    stump is discarded) or hits 0 (kept, with its weight capped).
    """

    defaults = {"n_estimators": 50}

    def validate(self):
        if self.params["n_estimators"] < 1:
            raise ConfigError("n_estimators must be >= 1")

    def _fit(self, X, y):
        if np.unique(y).size < 2:
            raise DataError("adaboost needs both classes present")
        sign = 2.0 * y - 1.0
        w = np.full(y.size, 1.0 / y.size)
        self.stumps_, self.alphas_ = [], []
        self.errors_, self.weight_sums_ = [], []
        orders = presort(X)
        for _ in range(int(self.params["n_estimators"])):
            stump = build_tree(X, y, w, criterion="gini", max_depth=1, presorted=orders)
            h = stump_sign(stump, X)
            eps = float(w[h != sign].sum())
            self.errors_.append(eps)
            if eps >= 0.5:
                break
            alpha = 0.5 * math.log((1 - max(eps, EPS_FLOOR)) / max(eps, EPS_FLOOR))
            self.stumps_.append(stump)
            self.alphas_.append(alpha)
            if eps <= 0.0:
                break
            w = w * np.exp(-alpha * sign * h)
            w /= w.sum()
            self.weight_sums_.append(float(w.sum()))

    def decision_function(self, X):
        X = as_matrix(X)
        total = np.zeros(X.shape[0])
        for stump, alpha in zip(self.stumps_, self.alphas_):
            total += alpha * stump_sign(stump, X)
        return total

    def score(self, X):
        return sigmoid(2.0 * self.decision_function(X))

    def predict(self, X):
        return (self.decision_function(X) >= 0).astype(np.int8)

    def _state(self):
        return {"stumps": [s.to_dict() for s in self.stumps_], "alphas": self.alphas_}

    def _load(self, state):
        self.stumps_ = [Tree.from_dict(s) for s in state["stumps"]]
        self.alphas_ = list(state["alphas"])
