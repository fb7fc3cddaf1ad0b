"""Non-tree baselines for the model comparison: logistic regression trained
by full-batch gradient descent on standardized features, and Gaussian naive
Bayes with a variance floor.

Both expose predict_proba/predict like the tree models; probabilities are for
the positive (phishing) class.
"""

import json
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateClass, SchemaMismatch, UnknownModel


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


@dataclass
class LogisticRegressionModel:
    feature_names: tuple
    coef: np.ndarray
    intercept: float
    mean: np.ndarray
    std: np.ndarray
    params: dict

    def margin(self, X):
        X = np.asarray(X, dtype=np.float64)
        if X.shape[1] != len(self.feature_names):
            raise SchemaMismatch(f"{X.shape[1]} columns, model has {len(self.feature_names)}")
        Z = (X - self.mean) / self.std
        return Z @ self.coef + self.intercept

    def predict_proba(self, X):
        return _sigmoid(self.margin(X))

    def predict(self, X):
        return (self.predict_proba(X) >= 0.5).astype(np.int8)

    def to_json(self):
        return {
            "schema_version": 1,
            "kind": "lr",
            "feature_names": list(self.feature_names),
            "coef": self.coef.tolist(),
            "intercept": self.intercept,
            "mean": self.mean.tolist(),
            "std": self.std.tolist(),
            "params": self.params,
        }

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json(), fh, indent=1, sort_keys=True)
            fh.write("\n")


def fit_logistic_regression(X, y, feature_names, epochs=400, learning_rate=0.5,
                            l2=0.0):
    """Full-batch gradient descent on the log loss.

    Features are standardized with training mean/std (std floored at 1e-9 so
    constant columns contribute nothing instead of exploding).
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if y.min() == y.max():
        raise DegenerateClass("single-class training labels")
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    std = np.where(std > 1e-9, std, 1.0)
    Z = (X - mean) / std
    n, m = Z.shape

    coef = np.zeros(m)
    intercept = 0.0
    for _ in range(epochs):
        p = _sigmoid(Z @ coef + intercept)
        err = p - y
        grad_w = Z.T @ err / n + l2 * coef
        grad_b = err.mean()
        coef -= learning_rate * grad_w
        intercept -= learning_rate * grad_b
    return LogisticRegressionModel(tuple(feature_names), coef, float(intercept),
                                   mean, std,
                                   {"epochs": epochs, "learning_rate": learning_rate, "l2": l2})


@dataclass
class GaussianNBModel:
    feature_names: tuple
    log_prior: np.ndarray  # (2,)
    mu: np.ndarray         # (2, m)
    var: np.ndarray        # (2, m)
    params: dict

    def _log_joint(self, X):
        X = np.asarray(X, dtype=np.float64)
        if X.shape[1] != len(self.feature_names):
            raise SchemaMismatch(f"{X.shape[1]} columns, model has {len(self.feature_names)}")
        out = np.empty((X.shape[0], 2))
        for c in (0, 1):
            d = X - self.mu[c]
            out[:, c] = self.log_prior[c] - 0.5 * np.sum(
                np.log(2.0 * np.pi * self.var[c]) + d * d / self.var[c], axis=1)
        return out

    def margin(self, X):
        lj = self._log_joint(X)
        return lj[:, 1] - lj[:, 0]

    def predict_proba(self, X):
        return _sigmoid(self.margin(X))

    def predict(self, X):
        return (self.predict_proba(X) >= 0.5).astype(np.int8)

    def to_json(self):
        return {
            "schema_version": 1,
            "kind": "nb",
            "feature_names": list(self.feature_names),
            "log_prior": self.log_prior.tolist(),
            "mu": self.mu.tolist(),
            "var": self.var.tolist(),
            "params": self.params,
        }

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json(), fh, indent=1, sort_keys=True)
            fh.write("\n")


def baseline_from_json(doc):
    if doc.get("schema_version") != 1:
        raise ValueError(f"unsupported model schema_version {doc.get('schema_version')!r}")
    names = tuple(doc["feature_names"])
    if doc["kind"] == "lr":
        return LogisticRegressionModel(
            names, np.asarray(doc["coef"], dtype=np.float64),
            float(doc["intercept"]), np.asarray(doc["mean"], dtype=np.float64),
            np.asarray(doc["std"], dtype=np.float64), dict(doc.get("params", {})))
    if doc["kind"] == "nb":
        return GaussianNBModel(
            names, np.asarray(doc["log_prior"], dtype=np.float64),
            np.asarray(doc["mu"], dtype=np.float64),
            np.asarray(doc["var"], dtype=np.float64), dict(doc.get("params", {})))
    raise UnknownModel(f"not a baseline model kind: {doc.get('kind')!r}")


def fit_gaussian_nb(X, y, feature_names, variance_floor=1e-9):
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    n = X.shape[0]
    mu = np.empty((2, X.shape[1]))
    var = np.empty((2, X.shape[1]))
    prior = np.empty(2)
    for c in (0, 1):
        rows = X[y == c]
        if rows.shape[0] == 0:
            raise DegenerateClass(f"no rows for class {c}")
        mu[c] = rows.mean(axis=0)
        var[c] = np.maximum(rows.var(axis=0), variance_floor)
        prior[c] = rows.shape[0] / n
    return GaussianNBModel(tuple(feature_names), np.log(prior), mu, var,
                           {"variance_floor": variance_floor})
