"""Discriminative orthogonal subspace learner.

Learns a column-orthonormal basis P whose embedding Z = P^T X is maximally
dependent (in the HSIC sense) on the training labels, while absorbing gross
pixel corruption into a sparse error term.  The dimension of the basis is not
fixed in advance: a nuclear-norm relaxation shrinks uninformative directions
to exactly zero and the surviving rank becomes the subspace dimension.

The solver alternates three closed-form blocks on the penalized objective

    ||A||_* + lam ||E1||_1 + (mu/2) ||A - (X - E2) Q^T||_F^2
            + (mu/2) ||E1 - E2||_F^2

where Q is a square root of the (centered, normalized) label kernel L = Q^T Q.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .hsic import center_samples, label_kernel
from .numerics import (
    numerical_rank,
    psd_factor,
    singular_value_shrinkage,
    soft_threshold,
    svd,
)


class DegenerateSubspaceError(RuntimeError):
    """All directions were shrunk away (d = 0); no usable basis exists."""


@dataclass(frozen=True)
class SolverConfig:
    """Hyperparameters of the subspace solver.

    lam          weight of the sparse error term (scale-free; see
                 effective_sparse_weight for the size normalization)
    mu           quadratic-penalty weight; None selects 10 / ||X Q^T||_2
    tol          stop when the objective changes by less than this
    max_iter     iteration cap
    kernel_sigma Gaussian bandwidth of the label kernel
    """

    lam: float = 1e-4
    mu: Optional[float] = None
    tol: float = 1e-8
    max_iter: int = 500
    kernel_sigma: float = 1.0

    def __post_init__(self):
        if self.lam <= 0:
            raise ValueError(f"lam must be positive, got {self.lam}")
        if self.mu is not None and self.mu <= 0:
            raise ValueError(f"mu must be positive, got {self.mu}")
        if self.tol <= 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")
        if self.kernel_sigma <= 0:
            raise ValueError(f"kernel_sigma must be positive, got {self.kernel_sigma}")


@dataclass(frozen=True)
class TrainingSet:
    """Feature matrix (columns = samples) plus its label partition.

    The first n_pos columns are target samples, the remaining n_neg are
    background samples; labels holds the matching 2 x n one-hot columns.
    """

    features: np.ndarray
    labels: np.ndarray
    n_pos: int
    n_neg: int

    def __post_init__(self):
        X = np.asarray(self.features, dtype=float)
        Y = np.asarray(self.labels, dtype=float)
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", Y)
        if X.ndim != 2:
            raise ValueError(f"features must be 2-D, got shape {X.shape}")
        if not np.all(np.isfinite(X)):
            raise ValueError("features contain non-finite values")
        if self.n_pos < 1 or self.n_neg < 1:
            raise ValueError("need at least one sample of each class")
        n = self.n_pos + self.n_neg
        if X.shape[1] != n:
            raise ValueError(f"feature count {X.shape[1]} != n_pos + n_neg = {n}")
        if Y.shape != (2, n):
            raise ValueError(f"labels must be 2 x {n}, got {Y.shape}")

    @property
    def n(self):
        return self.n_pos + self.n_neg


@dataclass(frozen=True)
class SubspaceModel:
    """Learned appearance model.

    basis            m x d column-orthonormal matrix P
    dim              adaptive subspace dimension d
    mean             training mean sample (length m)
    error            final sparse error matrix E1 (m x n)
    objective_trace  objective value per iteration (index 0 = initialization)
    converged        True if |delta objective| fell below tol before max_iter
    n_iter           iterations performed
    """

    basis: np.ndarray
    dim: int
    mean: np.ndarray
    error: np.ndarray
    objective_trace: list = field(repr=False)
    converged: bool = True
    n_iter: int = 0


def _fix_column_signs(P):
    """Flip column signs so the largest-magnitude entry of each is positive."""
    P = np.array(P, dtype=float)
    for j in range(P.shape[1]):
        k = int(np.argmax(np.abs(P[:, j])))
        if P[k, j] < 0:
            P[:, j] = -P[:, j]
    return P


def supervised_pca(X, L, d):
    """Top-d eigenvectors of X L X^T (label-weighted covariance).

    X must already be centered.  With L = I this is plain PCA.
    """
    X = np.asarray(X, dtype=float)
    L = np.asarray(L, dtype=float)
    m, n = X.shape
    if not 1 <= d <= min(m, n):
        raise ValueError(f"d must be in [1, {min(m, n)}], got {d}")
    C = X @ L @ X.T
    w, V = np.linalg.eigh((C + C.T) / 2.0)
    P = V[:, ::-1][:, :d]
    return _fix_column_signs(P)


def step_a(X, E2, Q, mu):
    """Low-rank block update: shrink the singular values of (X - E2) Q^T."""
    if mu <= 0:
        raise ValueError(f"mu must be positive, got {mu}")
    return singular_value_shrinkage(1.0 / mu, (X - E2) @ Q.T)


def step_e1(E2, lam, mu):
    """Sparse block update: elementwise shrinkage of E2 at threshold lam/mu."""
    if lam <= 0 or mu <= 0:
        raise ValueError("lam and mu must be positive")
    return soft_threshold(lam / mu, E2)


def step_e2(A, X, Q, E1, printed_sign=False):
    """Splitting-variable update: least-squares solution coupling A and E1.

    Minimizes ||A - (X - E2) Q^T||_F^2 + ||E1 - E2||_F^2 over E2, whose
    stationarity condition gives E2 (Q^T Q + I) = X Q^T Q - A Q + E1.

    printed_sign is a diagnostic hook that flips the sign of the first two
    terms; the resulting matrix does NOT satisfy the stationarity condition
    and exists only so gradient checks can prove they would catch the error.
    """
    A = np.asarray(A, dtype=float)
    X = np.asarray(X, dtype=float)
    Q = np.asarray(Q, dtype=float)
    E1 = np.asarray(E1, dtype=float)
    G = Q.T @ Q
    M = G + np.eye(G.shape[0])
    if printed_sign:
        B = A @ Q - X @ G + E1
    else:
        B = X @ G - A @ Q + E1
    return np.linalg.solve(M.T, B.T).T


def objective(A, E1, E2, X, Q, lam, mu):
    """Penalized objective value at the current block iterates."""
    nuc = float(np.sum(svd(A).s))
    fit = np.linalg.norm(A - (X - E2) @ Q.T, "fro") ** 2
    tie = np.linalg.norm(E1 - E2, "fro") ** 2
    return nuc + lam * float(np.abs(E1).sum()) + 0.5 * mu * (fit + tie)


def effective_sparse_weight(lam, m, n):
    """Size-normalized sparse weight actually fed to the solver.

    The quadratic coupling spreads the shrinkage bias of the low-rank block
    across all m*n entries of the splitting variable, so a fixed per-entry
    threshold loses all effect as the problem grows.  Scaling by
    m * n / sqrt(max(m, n)) keeps the sparse term competitive with the
    nuclear term at every problem size while leaving lam itself a small,
    size-free knob.
    """
    return lam * m * n / np.sqrt(max(m, n))


def learn_embedding(train, cfg=None, kernel=None, freeze_error=False):
    """Run the alternating solver and extract the adaptive-dimension basis.

    kernel        diagnostic hook: bypass the label kernel with an explicit
                  n x n PSD matrix (e.g. the identity, which ignores labels
                  and reduces the method to robust PCA)
    freeze_error  diagnostic hook: pin E1 = E2 = 0, disabling the sparse
                  term so the fixed point is the label-weighted PCA basis

    Returns a SubspaceModel; raises DegenerateSubspaceError when every
    direction is shrunk away (d = 0).
    """
    if cfg is None:
        cfg = SolverConfig()
    X = train.features
    m, n = X.shape
    if m < 2 or n < 2:
        raise ValueError(f"need at least a 2 x 2 problem, got {m} x {n}")

    Xc, mean = center_samples(X)
    if kernel is None:
        L = label_kernel(train.labels, cfg.kernel_sigma)
    else:
        L = np.asarray(kernel, dtype=float)
        if L.shape != (n, n):
            raise ValueError(f"kernel override must be {n} x {n}, got {L.shape}")
    Q = psd_factor(L)

    A = Xc @ Q.T
    top = np.linalg.norm(A, 2)
    if top <= 0:
        raise DegenerateSubspaceError("X Q^T is zero; nothing to embed")
    mu = cfg.mu if cfg.mu is not None else 10.0 / top
    lam_eff = effective_sparse_weight(cfg.lam, m, n)

    E1 = np.zeros_like(Xc)
    E2 = np.zeros_like(Xc)
    trace = [objective(A, E1, E2, Xc, Q, lam_eff, mu)]
    converged = False
    it = 0
    for it in range(1, cfg.max_iter + 1):
        A = step_a(Xc, E2, Q, mu)
        if not freeze_error:
            E1 = step_e1(E2, lam_eff, mu)
            E2 = step_e2(A, Xc, Q, E1)
        trace.append(objective(A, E1, E2, Xc, Q, lam_eff, mu))
        if abs(trace[-2] - trace[-1]) < cfg.tol:
            converged = True
            break

    U, s, _ = svd(A)
    d = numerical_rank(s)
    if d == 0:
        raise DegenerateSubspaceError(
            f"all {min(m, n)} directions shrunk away after {it} iterations"
        )
    P = _fix_column_signs(U[:, :d])
    return SubspaceModel(
        basis=P,
        dim=d,
        mean=mean,
        error=E1,
        objective_trace=trace,
        converged=converged,
        n_iter=it,
    )
