"""Numpy estimators behind the uniform classifier contract.

Each estimator exposes ``fit(X, y, rng)``, ``predict_proba(X)`` returning
P(phishing), and a JSON-able ``to_dict``/``from_dict`` pair.
"""

from __future__ import annotations

import math

import numpy as np

from .trees import Binner, Tree, grow_tree


def _resolve_max_features(spec, n_features: int) -> int | None:
    if spec is None or spec == "all":
        return None
    if spec == "sqrt":
        return max(1, int(math.sqrt(n_features)))
    if spec == "log2":
        return max(1, int(math.log2(n_features)))
    if isinstance(spec, float) and 0 < spec <= 1:
        return max(1, int(spec * n_features))
    return max(1, min(int(spec), n_features))


class TreeEnsemble:
    """One or more CART trees; covers DecisionTree, RandomForest, ExtraTrees and Bagging."""

    def __init__(self, n_estimators=1, max_depth=None, min_samples_leaf=1, max_features=None,
                 bootstrap=False, splitter="best", max_bins=64):
        self.n_estimators = n_estimators
        self.max_depth = max_depth
        self.min_samples_leaf = min_samples_leaf
        self.max_features = max_features
        self.bootstrap = bootstrap
        self.splitter = splitter
        self.max_bins = max_bins
        self.trees: list[Tree] = []

    def fit(self, X, y, seed: int):
        binner = Binner(X, self.max_bins)
        codes = binner.codes(X)
        n = len(y)
        k = _resolve_max_features(self.max_features, X.shape[1])
        self.trees = []
        for t in range(self.n_estimators):
            rng = np.random.default_rng([seed, t])
            if self.bootstrap:
                w = np.bincount(rng.integers(0, n, size=n), minlength=n).astype(float)
            else:
                w = np.ones(n)
            self.trees.append(
                grow_tree(codes, y, w, binner, rng, self.max_depth, self.min_samples_leaf, k, self.splitter)
            )
        return self

    def predict_proba(self, X):
        p = np.zeros(len(X))
        for tree in self.trees:
            p += tree.predict_proba(X)
        return p / len(self.trees)

    def to_dict(self):
        return {"trees": [t.to_dict() for t in self.trees]}

    def load(self, d):
        self.trees = [Tree.from_dict(t) for t in d["trees"]]
        return self


def _standardizer(X):
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    std[std == 0] = 1.0
    return mean, std


class KNearest:
    """Majority vote of the k nearest standardized neighbours; equal votes go to phishing."""

    def __init__(self, k=5, chunk=64):
        self.k = k
        self.chunk = chunk

    def fit(self, X, y, seed: int):
        self.mean, self.std = _standardizer(X)
        self.Z = (X - self.mean) / self.std
        self.y = y.astype(float)
        return self

    def predict_proba(self, X):
        Q = (np.asarray(X, dtype=float) - self.mean) / self.std
        k = min(self.k, len(self.y))
        out = np.empty(len(Q))
        for s in range(0, len(Q), self.chunk):
            q = Q[s : s + self.chunk]
            d = ((q[:, None, :] - self.Z[None, :, :]) ** 2).sum(axis=2)
            # stable sort keeps the canonical training order among equal distances
            nn = np.argsort(d, axis=1, kind="stable")[:, :k]
            out[s : s + self.chunk] = self.y[nn].mean(axis=1)
        return out

    def to_dict(self):
        return {"mean": self.mean.tolist(), "std": self.std.tolist(), "Z": self.Z.tolist(), "y": self.y.tolist()}

    def load(self, d):
        self.mean, self.std = np.array(d["mean"]), np.array(d["std"])
        self.Z = np.array(d["Z"]).reshape(len(d["y"]), -1)
        self.y = np.array(d["y"])
        return self


class GaussianNaiveBayes:
    def __init__(self, var_floor=1e-9):
        self.var_floor = var_floor

    def fit(self, X, y, seed: int):
        self.theta = np.array([X[y == c].mean(axis=0) for c in (0, 1)])
        self.var = np.maximum(np.array([X[y == c].var(axis=0) for c in (0, 1)]), self.var_floor)
        self.prior = np.array([np.mean(y == c) for c in (0, 1)])
        return self

    def joint_log_likelihood(self, X):
        X = np.asarray(X, dtype=float)
        jll = []
        for c in (0, 1):
            ll = -0.5 * np.sum(np.log(2 * np.pi * self.var[c]))
            ll = ll - 0.5 * np.sum((X - self.theta[c]) ** 2 / self.var[c], axis=1)
            jll.append(np.log(self.prior[c]) + ll)
        return np.stack(jll, axis=1)

    def predict_proba(self, X):
        jll = self.joint_log_likelihood(X)
        diff = np.clip(jll[:, 0] - jll[:, 1], -700, 700)
        return 1.0 / (1.0 + np.exp(diff))

    def to_dict(self):
        return {"theta": self.theta.tolist(), "var": self.var.tolist(), "prior": self.prior.tolist()}

    def load(self, d):
        self.theta, self.var, self.prior = (np.array(d[k]) for k in ("theta", "var", "prior"))
        return self


def _log_loss(z, y):
    # log(1 + exp(-s z)) with s = +-1, computed stably
    s = 2 * y - 1
    return np.logaddexp(0.0, -s * z)


class SgdLogistic:
    """L2-regularised logistic regression fit by mini-batch SGD on z-scored inputs.

    The step size decays as ``eta0 / t**power_t`` over update count ``t``.
    """

    def __init__(self, alpha=1e-4, eta0=0.1, power_t=0.5, epochs=20, batch_size=32):
        self.alpha = alpha
        self.eta0 = eta0
        self.power_t = power_t
        self.epochs = epochs
        self.batch_size = batch_size

    def loss(self, Z, y):
        z = Z @ self.w + self.b
        return float(np.mean(_log_loss(z, y)) + 0.5 * self.alpha * self.w @ self.w)

    def fit(self, X, y, seed: int):
        rng = np.random.default_rng(seed)
        self.mean, self.std = _standardizer(X)
        Z = (X - self.mean) / self.std
        y = y.astype(float)
        n, d = Z.shape
        self.w = np.zeros(d)
        self.b = 0.0
        self.history = []
        t = 0
        for _ in range(self.epochs):
            order = rng.permutation(n)
            for s in range(0, n, self.batch_size):
                batch = order[s : s + self.batch_size]
                t += 1
                eta = self.eta0 / t**self.power_t
                z = Z[batch] @ self.w + self.b
                p = 0.5 * (1.0 + np.tanh(0.5 * z))
                g = p - y[batch]
                self.w -= eta * (Z[batch].T @ g / len(batch) + self.alpha * self.w)
                self.b -= eta * g.mean()
            self.history.append(self.loss(Z, y))
        return self

    def decision_function(self, X):
        return ((np.asarray(X, dtype=float) - self.mean) / self.std) @ self.w + self.b

    def predict_proba(self, X):
        return 0.5 * (1.0 + np.tanh(0.5 * self.decision_function(X)))

    def to_dict(self):
        return {"mean": self.mean.tolist(), "std": self.std.tolist(), "w": self.w.tolist(), "b": self.b,
                "history": self.history}

    def load(self, d):
        self.mean, self.std, self.w = np.array(d["mean"]), np.array(d["std"]), np.array(d["w"])
        self.b = float(d["b"])
        self.history = list(d.get("history", []))
        return self
