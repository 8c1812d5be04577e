"""Symmetric matrix square roots via eigendecomposition.

The correction formulas need the unique symmetric PSD root (and its
inverse), not a Cholesky factor: downstream sandwiches rely on the root
itself being symmetric.  Everything here is a small dense K-by-K problem
(K is a predictor count, rarely above a dozen), so plain ``numpy.linalg.eigh``
is the whole implementation.
"""

from __future__ import annotations

import numpy as np

from .errors import NotPsd, NotSymmetric, Singular

__all__ = ["sym_sqrt", "sym_inv_sqrt"]

# Tolerances follow the kernel contract: symmetry within 1e-12, eigenvalues
# in [-1e-10, 0) clamped to zero, inverse roots refused past condition 1e12.
# Each is scaled by max(1, matrix magnitude) so unit-scale inputs see the
# bare constants while large sample-covariance sandwiches are not rejected
# over eigenvalue rounding.
_SYM_TOL = 1e-12
_PSD_TOL = 1e-10
_COND_TOL = 1e-12


def _as_symmetric(a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise NotSymmetric(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NotSymmetric("matrix contains non-finite entries")
    scale = max(1.0, float(np.abs(a).max()))
    gap = float(np.abs(a - a.T).max())
    if gap > _SYM_TOL * scale:
        raise NotSymmetric(f"matrix is asymmetric by {gap:.3e} (scale {scale:.3e})")
    # Fold residual rounding asymmetry away before eigh.
    return 0.5 * (a + a.T)


def sym_sqrt(a) -> np.ndarray:
    """Principal square root of a symmetric PSD matrix.

    Computes ``A = Q diag(w) Q'`` and returns ``Q diag(sqrt(w)) Q'``.
    Eigenvalues slightly below zero (rounding noise on rank-deficient
    covariances) are clamped to zero; clearly negative ones raise.

    Parameters
    ----------
    a : array_like, shape (k, k)
        Symmetric positive-semidefinite matrix.

    Returns
    -------
    numpy.ndarray
        Symmetric matrix ``S`` with ``S @ S`` reproducing ``a``.

    Raises
    ------
    NotSymmetric
        If ``a`` is not symmetric within tolerance.
    NotPsd
        If an eigenvalue is below the negativity tolerance.
    """
    a = _as_symmetric(a)
    w, q = np.linalg.eigh(a)
    w_max = float(w[-1])
    floor = -_PSD_TOL * max(1.0, w_max)
    if float(w[0]) < floor:
        raise NotPsd(f"eigenvalue {w[0]:.6e} below tolerance {floor:.1e}")
    w = np.clip(w, 0.0, None)
    root = (q * np.sqrt(w)) @ q.T
    return 0.5 * (root + root.T)


def sym_inv_sqrt(a) -> np.ndarray:
    """Inverse of the principal square root of a symmetric PD matrix.

    Raises
    ------
    Singular
        If the smallest eigenvalue is not positive or falls below
        ``1e-12`` times the largest (condition threshold).
    """
    a = _as_symmetric(a)
    w, q = np.linalg.eigh(a)
    w_min, w_max = float(w[0]), float(w[-1])
    if w_max <= 0.0 or w_min <= _COND_TOL * w_max:
        raise Singular(
            f"matrix not safely positive definite (eigenvalues in [{w_min:.3e}, {w_max:.3e}])"
        )
    inv_root = (q / np.sqrt(w)) @ q.T
    return 0.5 * (inv_root + inv_root.T)
