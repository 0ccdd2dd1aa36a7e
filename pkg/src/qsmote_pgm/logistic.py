"""Binary logistic regression fit by full-batch gradient descent."""

from __future__ import annotations

import numpy as np

from .errors import SingleClass


def sigmoid(z):
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


class LogisticRegression:
    """Sigmoid-link linear model with an L2 penalty on the weights (not the bias).

    The positive class is the larger of the two label values.
    """

    def __init__(self, learning_rate: float = 0.1, n_iter: int = 2000, l2: float = 1e-4):
        self.learning_rate = learning_rate
        self.n_iter = n_iter
        self.l2 = l2
        self.coef_ = None
        self.intercept_ = 0.0
        self.classes_ = None

    def fit(self, X, y):
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y)
        classes = np.unique(y)
        if len(classes) != 2:
            raise SingleClass(f"logistic regression needs two classes, got {classes.tolist()}")
        self.classes_ = classes
        t = (y == classes[1]).astype(np.float64)
        N, d = X.shape
        w = np.zeros(d)
        b = 0.0
        for _ in range(self.n_iter):
            r = sigmoid(X @ w + b) - t
            w -= self.learning_rate * (X.T @ r / N + self.l2 * w)
            b -= self.learning_rate * r.mean()
        self.coef_ = w
        self.intercept_ = b
        return self

    def decision_function(self, X) -> np.ndarray:
        return np.asarray(X, dtype=np.float64) @ self.coef_ + self.intercept_

    def predict_proba(self, X) -> np.ndarray:
        """Columns ``[P(y=0|x), P(y=1|x)]``."""
        p1 = sigmoid(self.decision_function(X))
        return np.column_stack([1.0 - p1, p1])

    def predict(self, X) -> np.ndarray:
        return self.classes_[(self.decision_function(X) >= 0).astype(int)]


def fit_logistic(X, y, learning_rate: float = 0.1, n_iter: int = 2000, l2: float = 1e-4):
    return LogisticRegression(learning_rate, n_iter, l2).fit(X, y)
