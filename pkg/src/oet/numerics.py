"""Shared proximal and spectral primitives used by the subspace learner."""

from typing import NamedTuple

import numpy as np


class NotPositiveSemidefiniteError(ValueError):
    """Raised when a matrix required to be PSD has a significantly negative eigenvalue."""


class SvdFactors(NamedTuple):
    """Thin SVD factors: ``M = U @ diag(s) @ Vt``."""

    U: np.ndarray
    s: np.ndarray
    Vt: np.ndarray


def soft_threshold(theta, x):
    """Elementwise shrinkage ``sign(x) * max(|x| - theta, 0)``.

    Parameters
    ----------
    theta : float or ndarray
        Non-negative threshold(s), broadcastable against ``x``.
    x : scalar or ndarray

    Returns
    -------
    Same shape as ``x``; a python float for scalar input.
    """
    theta = np.asarray(theta, dtype=float)
    if np.any(theta < 0):
        raise ValueError(f"threshold must be non-negative, got {theta}")
    x = np.asarray(x, dtype=float)
    out = np.sign(x) * np.maximum(np.abs(x) - theta, 0.0)
    if out.ndim == 0:
        return float(out)
    return out


def svd(M):
    """Thin SVD of ``M`` with singular values sorted descending.

    Raises ``ValueError`` on non-finite input.
    """
    M = np.asarray(M, dtype=float)
    if not np.all(np.isfinite(M)):
        raise ValueError("svd input contains non-finite values")
    U, s, Vt = np.linalg.svd(M, full_matrices=False)
    return SvdFactors(U, s, Vt)


def singular_value_shrinkage(theta, M):
    """Proximal operator of ``theta * ||.||_*``: shrink the singular values of ``M``.

    Minimizes ``theta * ||A||_* + 0.5 * ||A - M||_F^2`` over ``A``.
    """
    U, s, Vt = svd(M)
    return (U * soft_threshold(theta, s)) @ Vt


def psd_factor(L, sym_tol=1e-10):
    """Factor a PSD matrix as ``L = Q.T @ Q`` via its eigendecomposition.

    ``Q = sqrt(Lambda) @ V.T`` with eigenvalue dust (small negatives from
    rounding) clamped to zero.  A significantly negative eigenvalue
    (below ``-1e-6 * ||L||_2``) raises ``NotPositiveSemidefiniteError``.
    """
    L = np.asarray(L, dtype=float)
    if L.ndim != 2 or L.shape[0] != L.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {L.shape}")
    if np.max(np.abs(L - L.T), initial=0.0) > sym_tol:
        raise ValueError("matrix is not symmetric within tolerance")
    w, V = np.linalg.eigh((L + L.T) / 2.0)
    scale = np.max(np.abs(w), initial=0.0)
    if w.min(initial=0.0) < -1e-6 * scale:
        raise NotPositiveSemidefiniteError(
            f"eigenvalue {w.min():.3e} below -1e-6 * ||L||_2 = {-1e-6 * scale:.3e}"
        )
    w = np.clip(w, 0.0, None)
    return (np.sqrt(w)[:, None]) * V.T


def numerical_rank(s, rel_tol=1e-10):
    """Number of singular values strictly above ``rel_tol * max(s)``."""
    s = np.asarray(s, dtype=float)
    if s.size == 0:
        return 0
    top = s.max()
    if top <= 0:
        return 0
    return int(np.sum(s > rel_tol * top))
