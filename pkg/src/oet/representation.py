"""Candidate projection onto a learned subspace with a sparse residual."""

from dataclasses import dataclass

import numpy as np

from .numerics import soft_threshold

PROJECT_MAX_ITER = 200


@dataclass(frozen=True)
class CandidateEmbedding:
    """Result of projecting one candidate.

    z          subspace coordinates (length d)
    e          sparse residual in feature space (length m); the centered
               candidate equals P z + e exactly
    rep_error  ||e||_1, the representation error used for scoring
    converged  False when the iteration cap was hit
    n_iter     alternating iterations performed
    """

    z: np.ndarray
    e: np.ndarray
    rep_error: float
    converged: bool = True
    n_iter: int = 0


def project_candidate(c, model, cfg=None):
    """Decompose a candidate as mean + P z + e with e sparse.

    Alternates the two closed-form blocks of

        min_z,e  theta * ||e||_1 + 0.5 * ||(c - mean) - P z - e||_2^2

    i.e. z <- P^T (cc - e), then e <- soft_threshold(theta, cc - P z),
    until ||e||_1 stabilizes (tol from cfg, default 1e-8) or 200 iterations.
    The returned e is the exact final residual cc - P z, so reconstruction
    is lossless and rep_error measures everything the subspace missed.

    theta = 1 / mu_c with mu_c = 10 / ||c - mean||_inf unless cfg.mu is set.
    """
    c = np.asarray(c, dtype=float).ravel()
    P = model.basis
    m = P.shape[0]
    if c.shape[0] != m:
        raise ValueError(f"candidate length {c.shape[0]} != model dimension {m}")
    tol = cfg.tol if cfg is not None else 1e-8
    cc = c - model.mean

    peak = np.max(np.abs(cc), initial=0.0)
    if peak == 0.0:
        return CandidateEmbedding(
            z=np.zeros(P.shape[1]), e=np.zeros(m), rep_error=0.0, converged=True, n_iter=0
        )
    mu_c = cfg.mu if (cfg is not None and cfg.mu is not None) else 10.0 / peak
    theta = 1.0 / mu_c

    e = np.zeros(m)
    prev_l1 = 0.0
    converged = False
    it = 0
    for it in range(1, PROJECT_MAX_ITER + 1):
        z = P.T @ (cc - e)
        e = soft_threshold(theta, cc - P @ z)
        l1 = float(np.abs(e).sum())
        if abs(l1 - prev_l1) < tol:
            converged = True
            break
        prev_l1 = l1

    z = P.T @ (cc - e)
    e = cc - P @ z
    return CandidateEmbedding(
        z=z,
        e=e,
        rep_error=float(np.abs(e).sum()),
        converged=converged,
        n_iter=it,
    )


def representation_error(emb):
    """l1 norm of the sparse residual."""
    return float(np.abs(emb.e).sum())
