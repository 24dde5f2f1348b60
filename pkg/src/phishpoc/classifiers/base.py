"""Uniform train / predict / grid-search contract over the classifier suite."""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from ..dataset import PHISHING, Dataset, Sample
from ..errors import (
    GridExhausted,
    InvalidHyperparameter,
    NonFiniteFeature,
    PocError,
    SchemaMismatch,
    SingleClassTraining,
    UnknownHyperparameter,
)
from .estimators import GaussianNaiveBayes, KNearest, SgdLogistic, TreeEnsemble

MODEL_FORMAT = "phishpoc-model/1"

_TREE_KEYS = {"max_depth": None, "min_samples_leaf": 1, "max_bins": 64}
_FOREST_KEYS = {**_TREE_KEYS, "n_estimators": 100}

DEFAULTS: dict[str, dict[str, Any]] = {
    "DecisionTree": dict(_TREE_KEYS),
    "RandomForest": {**_FOREST_KEYS, "max_features": "sqrt"},
    "ExtraTrees": {**_FOREST_KEYS, "max_features": "sqrt"},
    "Bagging": dict(_FOREST_KEYS),
    "KNN": {"k": 5},
    "NaiveBayes": {"var_floor": 1e-9},
    "SgdLogistic": {"alpha": 1e-4, "eta0": 0.1, "power_t": 0.5, "epochs": 20, "batch_size": 32},
}
ALGORITHMS = tuple(DEFAULTS)

# smallest legal value of each integer-valued hyperparameter (None allowed for max_depth)
_MINIMA = {"max_depth": 1, "min_samples_leaf": 1, "max_bins": 2, "n_estimators": 1, "k": 1,
           "epochs": 1, "batch_size": 1}


@dataclass(frozen=True)
class ClassifierSpec:
    algorithm: str
    hyperparams: Mapping[str, Any] = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.algorithm not in DEFAULTS:
            raise UnknownHyperparameter(f"unknown algorithm {self.algorithm!r}; expected one of {ALGORITHMS}")
        unknown = set(self.hyperparams) - set(DEFAULTS[self.algorithm])
        if unknown:
            raise UnknownHyperparameter(f"{self.algorithm} does not accept {sorted(unknown)}")
        for key, value in self.hyperparams.items():
            low = _MINIMA.get(key)
            if low is not None and value is not None and (not isinstance(value, int) or value < low):
                raise InvalidHyperparameter(f"{self.algorithm}: {key} must be an integer >= {low}, got {value!r}")
        object.__setattr__(self, "hyperparams", dict(self.hyperparams))

    @property
    def params(self) -> dict[str, Any]:
        return {**DEFAULTS[self.algorithm], **self.hyperparams}

    def to_dict(self) -> dict:
        return {"algorithm": self.algorithm, "hyperparams": dict(sorted(self.hyperparams.items())), "seed": self.seed}

    @classmethod
    def from_dict(cls, d: Mapping) -> "ClassifierSpec":
        return cls(d["algorithm"], dict(d.get("hyperparams", {})), int(d.get("seed", 0)))

    def complexity(self) -> tuple:
        """Ordering key where smaller means a simpler (more regularised) model."""
        p = self.params
        inf = math.inf
        if self.algorithm in ("DecisionTree", "RandomForest", "ExtraTrees", "Bagging"):
            depth = inf if p["max_depth"] is None else p["max_depth"]
            return (p.get("n_estimators", 1), depth, -p["min_samples_leaf"])
        if self.algorithm == "KNN":
            return (-p["k"],)
        if self.algorithm == "NaiveBayes":
            return (-p["var_floor"],)
        return (-p["alpha"], p["epochs"])


def _build(spec: ClassifierSpec):
    p = spec.params
    a = spec.algorithm
    if a == "DecisionTree":
        return TreeEnsemble(1, p["max_depth"], p["min_samples_leaf"], None, False, "best", p["max_bins"])
    if a == "RandomForest":
        return TreeEnsemble(p["n_estimators"], p["max_depth"], p["min_samples_leaf"], p["max_features"],
                            True, "best", p["max_bins"])
    if a == "ExtraTrees":
        return TreeEnsemble(p["n_estimators"], p["max_depth"], p["min_samples_leaf"], p["max_features"],
                            False, "random", p["max_bins"])
    if a == "Bagging":
        return TreeEnsemble(p["n_estimators"], p["max_depth"], p["min_samples_leaf"], None, True, "best",
                            p["max_bins"])
    if a == "KNN":
        return KNearest(p["k"])
    if a == "NaiveBayes":
        return GaussianNaiveBayes(p["var_floor"])
    return SgdLogistic(p["alpha"], p["eta0"], p["power_t"], p["epochs"], p["batch_size"])


class TrainedModel:
    """A fitted classifier bound to the schema it was trained on."""

    def __init__(self, spec: ClassifierSpec, schema_fingerprint: str, n_features: int, estimator, metadata: dict):
        self.spec = spec
        self.schema_fingerprint = schema_fingerprint
        self.n_features = n_features
        self.estimator = estimator
        self.metadata = metadata

    def __repr__(self):
        return f"TrainedModel({self.spec.algorithm}, rows={self.metadata.get('n_rows')})"

    def predict_proba(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise SchemaMismatch(f"expected {self.n_features} features, got shape {X.shape}")
        return self.estimator.predict_proba(X)

    def predict(self, X) -> np.ndarray:
        """0/1 labels; probabilities of exactly one half resolve to phishing."""
        return (self.predict_proba(X) >= 0.5).astype(np.int8)

    def predict_dataset(self, dataset: Dataset) -> np.ndarray:
        if dataset.schema.fingerprint() != self.schema_fingerprint:
            raise SchemaMismatch("dataset schema differs from the training schema")
        return self.predict(dataset.X)

    def to_json(self) -> str:
        doc = {
            "format": MODEL_FORMAT,
            "spec": self.spec.to_dict(),
            "schema_fingerprint": self.schema_fingerprint,
            "n_features": self.n_features,
            "metadata": self.metadata,
            "params": self.estimator.to_dict(),
        }
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text: str) -> "TrainedModel":
        doc = json.loads(text)
        if doc.get("format") != MODEL_FORMAT:
            raise PocError(f"unsupported model format {doc.get('format')!r}")
        spec = ClassifierSpec.from_dict(doc["spec"])
        est = _build(spec).load(doc["params"])
        return cls(spec, doc["schema_fingerprint"], int(doc["n_features"]), est, doc["metadata"])

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "TrainedModel":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


def _canonical_order(X: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Row order that depends only on row contents, making training order-invariant."""
    keys = [y] + [X[:, j] for j in range(X.shape[1] - 1, -1, -1)]
    return np.lexsort(keys[::-1]) if keys else np.arange(len(y))


def train(spec: ClassifierSpec, data: Dataset) -> TrainedModel:
    X, y = data.X, data.y.astype(np.int64)
    if len(np.unique(y)) < 2:
        raise SingleClassTraining(f"training data for {spec.algorithm} contains a single class")
    if not np.all(np.isfinite(X)):
        raise NonFiniteFeature("training features must be finite")
    order = _canonical_order(X, y)
    X, y = X[order], y[order]
    est = _build(spec).fit(X, y, spec.seed)
    n_phish = int(y.sum())
    meta = {
        "n_rows": int(len(y)),
        "priors": {"benign": (len(y) - n_phish) / len(y), "phishing": n_phish / len(y)},
    }
    return TrainedModel(spec, data.schema.fingerprint(), X.shape[1], est, meta)


def predict(model, item) -> Any:
    """Predict one Sample (returns 0/1) or a whole Dataset (returns an array)."""
    if isinstance(item, Dataset):
        return model.predict_dataset(item)
    if isinstance(item, Sample):
        if item.schema is not None and item.schema.fingerprint() != model.schema_fingerprint:
            raise SchemaMismatch("sample schema differs from the training schema")
        return int(model.predict(item.values[None, :])[0])
    return model.predict(np.asarray(item, dtype=float))


def stratified_folds(y: np.ndarray, folds: int, seed: int) -> np.ndarray:
    """Fold id per row: classes are shuffled, concatenated and dealt round-robin."""
    rng = np.random.default_rng(seed)
    order = np.concatenate([rng.permutation(np.flatnonzero(y == c)) for c in (0, 1)])
    fold = np.empty(len(y), dtype=np.int64)
    fold[order] = np.arange(len(y)) % folds
    return fold


def _f1(y_true, y_pred) -> float:
    tp = int(np.sum((y_pred == PHISHING) & (y_true == PHISHING)))
    fp = int(np.sum((y_pred == PHISHING) & (y_true != PHISHING)))
    fn = int(np.sum((y_pred != PHISHING) & (y_true == PHISHING)))
    return 0.0 if tp == 0 else 2 * tp / (2 * tp + fp + fn)


def grid_search(
    algorithm: str,
    data: Dataset,
    grid: Mapping[str, list],
    folds: int = 3,
    seed: int = 0,
    return_scores: bool = False,
):
    """Pick the grid point with the best mean cross-validated F1.

    Ties go to the simpler model (see ``ClassifierSpec.complexity``), then to
    the earlier grid point.
    """
    if folds < 2:
        raise ValueError("folds must be >= 2")
    keys = sorted(grid)
    points = [dict(zip(keys, vals)) for vals in itertools.product(*(grid[k] for k in keys))]
    if not points:
        raise GridExhausted("empty grid")
    fold = stratified_folds(data.y, folds, seed)
    scored = []
    errors = []
    for pos, hp in enumerate(points):
        try:
            spec = ClassifierSpec(algorithm, hp, seed)
            f1s = []
            for k in range(folds):
                tr = data.take(np.flatnonzero(fold != k))
                te = data.take(np.flatnonzero(fold == k))
                model = train(spec, tr)
                f1s.append(_f1(te.y, model.predict(te.X)))
            scored.append((float(np.mean(f1s)), spec, pos))
        except PocError as exc:
            errors.append((hp, exc))
    if not scored:
        raise GridExhausted(f"every grid point failed: {errors[0][1] if errors else 'no points'}")
    best = min(scored, key=lambda s: (-s[0], s[1].complexity(), s[2]))
    if return_scores:
        return best[1], [(s[1], s[0]) for s in scored]
    return best[1]
