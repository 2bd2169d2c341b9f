"""The shared classifier contract and the spec/registry that builds models."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError, DataError

_REGISTRY: dict[str, type["Classifier"]] = {}


def register(kind: str):
    def deco(cls):
        cls.kind = kind
        _REGISTRY[kind] = cls
        return cls

    return deco


def as_matrix(X) -> np.ndarray:
    values = getattr(X, "values", X)
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 2:
        raise DataError(f"expected a 2-D feature matrix, got shape {arr.shape}")
    return arr


def as_labels(y, n_rows: int) -> np.ndarray:
    arr = np.asarray(y)
    if arr.shape != (n_rows,):
        raise DataError(f"labels length {arr.size} does not match {n_rows} rows")
    if arr.size and not np.isin(arr, (0, 1)).all():
        raise DataError("labels must be 0/1")
    return arr.astype(np.int8)


class Classifier:
    """fit(X, y) / predict(X) / score(X) over dense numeric features.

    ``score`` is the per-row probability of class 1; ``predict`` thresholds
    it at 0.5 unless a subclass documents a different tie rule.
    """

    kind = "abstract"
    defaults: dict = {}

    def __init__(self, seed: int = 0, **params):
        unknown = set(params) - set(self.defaults)
        if unknown:
            raise ConfigError(f"{self.kind}: unknown hyperparameter(s) {sorted(unknown)}")
        self.params = {**self.defaults, **params}
        self.seed = int(seed)
        self.validate()

    def validate(self):
        pass

    def fit(self, X, y):
        X = as_matrix(X)
        y = as_labels(y, X.shape[0])
        if not np.isfinite(X).all():
            raise DataError("feature matrix has non-finite values")
        self.n_features_ = X.shape[1]
        self._fit(X, y)
        return self

    def _fit(self, X, y):
        raise NotImplementedError

    def score(self, X) -> np.ndarray:
        raise NotImplementedError

    def predict(self, X) -> np.ndarray:
        return (self.score(X) >= 0.5).astype(np.int8)

    # -- serialization --------------------------------------------------------

    def _state(self) -> dict:
        raise NotImplementedError

    def _load(self, state: dict):
        raise NotImplementedError

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "hyperparameters": self.params,
            "seed": self.seed,
            "n_features": self.n_features_,
            "state": self._state(),
        }

    @staticmethod
    def from_dict(d: dict) -> "Classifier":
        model = make_classifier(d["kind"], d["hyperparameters"], d["seed"])
        model.n_features_ = d["n_features"]
        model._load(d["state"])
        return model


def make_classifier(kind: str, hyperparameters=None, seed: int = 0) -> Classifier:
    try:
        cls = _REGISTRY[kind]
    except KeyError:
        raise ConfigError(f"unknown classifier kind {kind!r}; known: {sorted(_REGISTRY)}") from None
    return cls(seed=seed, **(hyperparameters or {}))


@dataclass(frozen=True)
class ClassifierSpec:
    kind: str
    hyperparameters: dict = field(default_factory=dict)
    seed: int = 0
    name: str | None = None

    @property
    def label(self) -> str:
        return self.name or self.kind

    def build(self, seed: int | None = None) -> Classifier:
        return make_classifier(self.kind, self.hyperparameters, self.seed if seed is None else seed)

    def validate(self) -> None:
        self.build()

    def to_dict(self) -> dict:
        return {"kind": self.kind, "hyperparameters": dict(self.hyperparameters),
                "seed": self.seed, "name": self.label}

    @classmethod
    def from_dict(cls, d: dict) -> "ClassifierSpec":
        unknown = set(d) - {"kind", "hyperparameters", "seed", "name"}
        if unknown:
            raise ConfigError(f"unknown model field(s): {sorted(unknown)}")
        if "kind" not in d:
            raise ConfigError("model entry needs a 'kind'")
        return cls(d["kind"], dict(d.get("hyperparameters") or {}), int(d.get("seed", 0)), d.get("name"))
