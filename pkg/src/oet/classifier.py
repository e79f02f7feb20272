"""Linear classifier on subspace embeddings; supplies the discrimination error."""

from dataclasses import dataclass

import numpy as np


class InvalidTrainingSetError(ValueError):
    """Raised when classifier training data lacks one of the two classes."""


@dataclass(frozen=True)
class LinearClassifier:
    """Ridge-regression classifier: response is w . z + b.

    degenerate is set when the training embeddings carry no spread at all
    (every column identical), in which case the responses are constant and
    the classifier cannot discriminate.
    """

    weights: np.ndarray
    bias: float
    reg: float
    degenerate: bool = False


def train_classifier(Z, labels, reg):
    """Closed-form regularized least squares with an unpenalized bias.

    Z is d x n (columns = embeddings), labels are n scalars in {1, 0}
    (target = 1).  Minimizes sum_i (w.z_i + b - y_i)^2 + reg * ||w||^2 via
    the centering identity: center Z and y, ridge-solve for w, then set
    b = mean(y) - w . mean(z).
    """
    Z = np.asarray(Z, dtype=float)
    y = np.asarray(labels, dtype=float).ravel()
    if Z.ndim != 2 or Z.shape[1] != y.shape[0]:
        raise ValueError(f"embedding matrix {Z.shape} does not match {y.shape[0]} labels")
    if reg <= 0:
        raise ValueError(f"reg must be positive, got {reg}")
    if not (np.any(y == 1.0) and np.any(y == 0.0)):
        raise InvalidTrainingSetError("training labels must include both classes")

    d, n = Z.shape
    zbar = Z.mean(axis=1)
    ybar = y.mean()
    Zc = Z - zbar[:, None]
    spread = np.max(np.abs(Zc), initial=0.0)
    degenerate = spread <= 1e-12 * max(1.0, np.max(np.abs(zbar), initial=0.0))

    G = Zc @ Zc.T + reg * np.eye(d)
    w = np.linalg.solve(G, Zc @ (y - ybar))
    b = ybar - float(w @ zbar)
    return LinearClassifier(weights=w, bias=b, reg=float(reg), degenerate=degenerate)


def predict(clf, z):
    """Classifier response w . z + b."""
    z = np.asarray(z, dtype=float).ravel()
    if z.shape[0] != clf.weights.shape[0]:
        raise ValueError(f"embedding length {z.shape[0]} != classifier dimension {clf.weights.shape[0]}")
    return float(clf.weights @ z + clf.bias)


def discrimination_error(clf, z):
    """Distance of the response from the target label: |pi(z) - 1|."""
    return abs(predict(clf, z) - 1.0)
