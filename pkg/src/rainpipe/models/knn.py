import numpy as np

from ..errors import ConfigError, DataError
from ..neighbors import kneighbors
from .base import Classifier, as_matrix, register


@register("knn")
class KNearestNeighbors(Classifier):
    """Lazy k-NN vote with Euclidean distance.

    Distance ties are broken by lower training row. An exactly split vote
    (only possible when ``k`` is even) goes to the class whose members among
    the neighbours have the smaller summed distance, and to class 1 if that
    is tied too.
    """

    defaults = {"k": 25}

    def validate(self):
        k = self.params["k"]
        if int(k) != k or k < 1:
            raise ConfigError(f"k must be a positive integer, got {k}")
        if k % 2 == 0:
            raise ConfigError(f"k must be odd, got {k}")

    def _fit(self, X, y):
        if self.params["k"] > X.shape[0]:
            raise DataError(f"k={self.params['k']} exceeds the {X.shape[0]} training rows")
        self.X_ = X.copy()
        self.y_ = y.copy()

    def _neighbors(self, X):
        return kneighbors(self.X_, as_matrix(X), int(self.params["k"]))

    def score(self, X):
        _, idx = self._neighbors(X)
        return self.y_[idx].mean(axis=1)

    def predict(self, X):
        sq, idx = self._neighbors(X)
        votes = self.y_[idx]
        frac = votes.mean(axis=1)
        pred = (frac > 0.5).astype(np.int8)
        tied = np.flatnonzero(frac == 0.5)
        if tied.size:
            dist = np.sqrt(sq[tied])
            near1 = (dist * votes[tied]).sum(axis=1)
            near0 = (dist * (1 - votes[tied])).sum(axis=1)
            pred[tied] = (near1 <= near0).astype(np.int8)
        return pred

    def _state(self):
        return {"X": self.X_.tolist(), "y": self.y_.tolist()}

    def _load(self, state):
        self.X_ = np.asarray(state["X"], dtype=np.float64).reshape(len(state["y"]), -1)
        self.y_ = np.asarray(state["y"], dtype=np.int8)
