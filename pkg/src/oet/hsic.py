"""Kernel construction and the empirical Hilbert-Schmidt independence criterion.

Conventions: feature matrices are m x n with samples as columns; label
matrices are 2 x n with each column [1, 0] (target) or [0, 1] (background).
"""

import numpy as np

TARGET_LABEL = np.array([1.0, 0.0])
BACKGROUND_LABEL = np.array([0.0, 1.0])


def center_samples(X):
    """Subtract the mean sample from every column.

    Returns ``(Xc, mean)`` with ``Xc + mean[:, None] == X`` and the row-wise
    mean of ``Xc`` equal to zero.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] < 1:
        raise ValueError(f"expected an m x n matrix with n >= 1, got shape {X.shape}")
    mean = X.mean(axis=1)
    return X - mean[:, None], mean


def gaussian_kernel(Y, sigma=1.0):
    """Gaussian kernel matrix on the columns of Y.

    ``L[i, j] = exp(-||y_i - y_j||^2 / (2 sigma^2))``
    """
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    Y = np.asarray(Y, dtype=float)
    sq = np.sum(Y * Y, axis=0)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (Y.T @ Y)
    np.clip(d2, 0.0, None, out=d2)
    L = np.exp(-d2 / (2.0 * sigma * sigma))
    return (L + L.T) / 2.0


def linear_kernel(Z):
    """Gram matrix Z^T Z on the columns of Z."""
    Z = np.asarray(Z, dtype=float)
    K = Z.T @ Z
    return (K + K.T) / 2.0


def center_kernel(L):
    """Double-center a kernel matrix: H L H with H = I - ones/n."""
    L = np.asarray(L, dtype=float)
    n = L.shape[0]
    rows = L.mean(axis=0)
    cols = L.mean(axis=1)
    Lc = L - rows[None, :] - cols[:, None] + L.mean()
    return (Lc + Lc.T) / 2.0


def label_kernel(Y, sigma=1.0):
    """Supervision kernel used by the subspace learner.

    Gaussian kernel on label columns, double-centered, then normalized to
    unit spectral norm so the supervision strength is independent of the
    sample count.  A constant label set centers to the zero matrix and is
    returned as-is (no normalization possible).
    """
    L = center_kernel(gaussian_kernel(Y, sigma))
    top = np.linalg.norm(L, 2)
    if top > 0:
        L = L / top
    return L


def make_labels(n_pos, n_neg):
    """Canonical 2 x (n_pos + n_neg) label matrix: targets first."""
    if n_pos < 0 or n_neg < 0:
        raise ValueError("label counts must be non-negative")
    Y = np.zeros((2, n_pos + n_neg))
    Y[0, :n_pos] = 1.0
    Y[1, n_pos:] = 1.0
    return Y


def empirical_hsic(K, L):
    """Empirical dependence measure ``tr(K L) / (n - 1)``.

    Both kernels must be n x n with n >= 2.
    """
    K = np.asarray(K, dtype=float)
    L = np.asarray(L, dtype=float)
    if K.shape != L.shape or K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise ValueError(f"kernel shapes must match and be square, got {K.shape} vs {L.shape}")
    n = K.shape[0]
    if n < 2:
        raise ValueError("need at least two samples")
    return float(np.sum(K * L.T) / (n - 1))
