"""Spectral radius and (I - M) solves for nonnegative matrices."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.sparse.csgraph import connected_components

from .errors import NonConverged, SpectralRadiusTooLarge

RHO_MARGIN = 1e-12
SHIFT_FACTOR = 1e-3


def as_nonneg_matrix(M) -> np.ndarray:
    M = np.array(M, dtype=float, ndmin=2)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix has non-finite entries")
    if np.any(M < 0):
        raise ValueError("matrix has negative entries")
    return M


def _irreducible_radius(A: np.ndarray, tol: float, max_iter: int) -> float:
    """Power iteration on an irreducible nonnegative block.

    The diagonal shift makes ``A + sigma*I`` primitive, so the normalized
    iterates stay strictly positive and the Collatz-Wielandt bounds
    ``min (Bx)_i/x_i <= rho(B) <= max (Bx)_i/x_i`` close on the Perron root.
    """
    n = A.shape[0]
    # diagonal balancing is an exact similarity; it evens out entry magnitudes so
    # the shift below stays comparable to rho
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        A, _ = scipy.linalg.matrix_balance(A, permute=False)
    # rho is positively homogeneous; unit scale keeps tiny blocks out of the subnormal range
    scale = float(A.max())
    A = A / scale
    sigma = SHIFT_FACTOR * float(A.sum(axis=1).max())
    B = A + sigma * np.eye(n)
    x = np.full(n, 1.0 / n)
    lo = hi = 0.0
    for _ in range(max_iter):
        y = B @ x
        ratios = y / x
        lo, hi = float(ratios.min()), float(ratios.max())
        # second term: the bracket cannot close below round-off of the shifted values
        if hi - lo <= max(tol * (0.5 * (lo + hi) - sigma), 16 * np.finfo(float).eps * hi):
            break
        x = y / y.sum()
    else:
        raise NonConverged(
            f"power iteration stalled after {max_iter} steps (bound gap {hi - lo:.3g})",
            residual=float(np.max(np.abs(B @ x - 0.5 * (lo + hi) * x))),
        )
    return scale * max(0.5 * (lo + hi) - sigma, 0.0)


def spectral_radius(M, tol: float = 1e-12, max_iter: int = 1_000_000) -> float:
    """Spectral radius of a nonnegative matrix.

    The matrix is split into strongly connected components (its Frobenius
    normal form); rho is the largest Perron root over the irreducible
    diagonal blocks.
    """
    M = as_nonneg_matrix(M)
    n_comp, labels = connected_components(M > 0, directed=True, connection="strong")
    rho = 0.0
    for c in range(n_comp):
        idx = np.flatnonzero(labels == c)
        block = M[np.ix_(idx, idx)]
        if len(idx) == 1:
            rho = max(rho, float(block[0, 0]))
        else:
            rho = max(rho, _irreducible_radius(block, tol, max_iter))
    return rho


@dataclass(frozen=True)
class FactoredSystem:
    """LU factorization of ``I - M`` for repeated solves."""

    M: np.ndarray
    rho: float
    lu: tuple

    def solve(self, b) -> np.ndarray:
        b = np.asarray(b, dtype=float)
        return scipy.linalg.lu_solve(self.lu, b, check_finite=False)

    @property
    def dimension(self) -> int:
        return self.M.shape[0]


def factor(M, rho: float | None = None) -> FactoredSystem:
    """Factor ``I - M``; requires ``rho(M) < 1 - 1e-12``."""
    M = as_nonneg_matrix(M)
    if rho is None:
        rho = spectral_radius(M)
    if rho >= 1.0 - RHO_MARGIN:
        raise SpectralRadiusTooLarge(rho)
    lu = scipy.linalg.lu_factor(np.eye(M.shape[0]) - M, check_finite=False)
    M = M.copy()
    M.setflags(write=False)
    return FactoredSystem(M=M, rho=rho, lu=lu)


def neumann_sum(M, b, terms: int) -> np.ndarray:
    """Truncated series ``sum_{k=0}^{terms} M^k b``."""
    M = as_nonneg_matrix(M)
    term = np.asarray(b, dtype=float).copy()
    total = term.copy()
    for _ in range(terms):
        term = M @ term
        total += term
    return total


def similar(M, d) -> np.ndarray:
    """``diag(d)^-1 M diag(d)``."""
    M = as_nonneg_matrix(M)
    d = np.asarray(d, dtype=float)
    if np.any(d <= 0):
        raise ValueError("similarity scaling must be strictly positive")
    # ratio first, so equal scalings reproduce M bit for bit
    return M * (d[np.newaxis, :] / d[:, np.newaxis])


def similar_spectrum_check(M, d) -> bool:
    rho = spectral_radius(M)
    rho_s = spectral_radius(similar(M, d))
    return abs(rho - rho_s) <= 1e-8 * (1.0 + rho)
