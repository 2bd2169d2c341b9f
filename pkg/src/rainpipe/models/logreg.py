import numpy as np
from scipy.special import expit

from ..errors import ConfigError, NumericError
from .base import Classifier, as_matrix, register


def sigmoid(z):
    return expit(np.asarray(z, dtype=np.float64))


def loss_and_grad(w, b, X, y, l2=0.0):
    """Mean cross-entropy plus ``l2/2 * |w|^2`` and its gradient in (w, b)."""
    z = X @ w + b
    loss = np.mean(np.logaddexp(0.0, z) - y * z) + 0.5 * l2 * (w @ w)
    r = sigmoid(z) - y
    grad_w = X.T @ r / X.shape[0] + l2 * w
    grad_b = r.mean()
    return loss, grad_w, grad_b


@register("logreg")
class LogisticRegression(Classifier):
    """Full-batch gradient descent on the L2-penalized mean log-loss."""

    defaults = {"learning_rate": 0.1, "n_iters": 1000, "l2": 0.0}

    def validate(self):
        p = self.params
        if not p["learning_rate"] > 0:
            raise ConfigError("learning_rate must be > 0")
        if p["n_iters"] < 0:
            raise ConfigError("n_iters must be >= 0")
        if p["l2"] < 0:
            raise ConfigError("l2 must be >= 0")

    def _fit(self, X, y):
        lr, l2 = self.params["learning_rate"], self.params["l2"]
        y = y.astype(np.float64)
        w = np.zeros(X.shape[1])
        b = 0.0
        history = []
        for it in range(int(self.params["n_iters"])):
            with np.errstate(over="ignore", invalid="ignore"):
                loss, gw, gb = loss_and_grad(w, b, X, y, l2)
            if not np.isfinite(loss):
                raise NumericError(
                    f"logistic regression loss became non-finite at iteration {it}; "
                    "lower the learning rate"
                )
            history.append(float(loss))
            with np.errstate(over="ignore", invalid="ignore"):
                w = w - lr * gw
                b = b - lr * gb
        self.weights_ = w
        self.bias_ = float(b)
        self.loss_history_ = history

    def score(self, X):
        return sigmoid(as_matrix(X) @ self.weights_ + self.bias_)

    def _state(self):
        return {"weights": self.weights_.tolist(), "bias": self.bias_}

    def _load(self, state):
        self.weights_ = np.asarray(state["weights"], dtype=np.float64)
        self.bias_ = float(state["bias"])
