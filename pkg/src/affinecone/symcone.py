"""Algebra on symmetric matrices and the positive semidefinite cone.

Everything downstream (parameter sets, Riccati flows, stationary-law
computations, path simulation) works with plain ``numpy`` arrays
representing symmetric ``d x d`` matrices.  This module fixes the
conventions once:

* the trace inner product ``<x, y> = tr(x y)`` and its Frobenius norm,
* a relative tolerance for cone membership (``psd_tol``),
* spectral operations (square root, projection onto the cone),
* the orthonormal vectorization of symmetric matrices used to represent
  linear maps on symmetric matrices as ordinary ``D x D`` matrices,
  with ``D = d(d+1)/2``.

The vectorization basis is fixed globally: diagonal units ``E_ii`` first
(in index order), then ``(E_ij + E_ji)/sqrt(2)`` for ``i < j`` in
lexicographic order.  Operator matrices built anywhere in the package
compose correctly only because every module uses this one ordering.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg


class ConeViolationError(ValueError):
    """A matrix required to be positive semidefinite is not (beyond tolerance)."""


def symmetrize(a) -> np.ndarray:
    """Return ``(a + a.T) / 2`` as a float array.

    Construction-time symmetrization: upstream ODE steps and matrix
    products introduce asymmetry at roundoff level, which we remove
    rather than reject.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix entries must be finite")
    return (a + a.T) / 2.0


def inner(x, y) -> float:
    """Trace inner product ``tr(x y)`` of two symmetric matrices."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
    # tr(xy) = sum_ij x_ij y_ji = sum_ij x_ij y_ij for symmetric inputs
    return float(np.sum(x * y))


def frobenius(x) -> float:
    """Frobenius norm ``<x, x>**0.5``."""
    return float(np.linalg.norm(np.asarray(x, dtype=float)))


def psd_tol(x) -> float:
    """Relative eigenvalue floor for cone membership: ``1e-10 * max(1, ||x||)``."""
    return 1e-10 * max(1.0, frobenius(x))


def min_eigval(x) -> float:
    """Smallest eigenvalue of a symmetric matrix."""
    return float(np.linalg.eigvalsh(symmetrize(x))[0])


def is_psd(x, tol: float | None = None) -> bool:
    """Whether ``x`` lies in the cone within the relative tolerance."""
    if tol is None:
        tol = psd_tol(x)
    return min_eigval(x) >= -tol


def check_cone(x, tol: float | None = None) -> float:
    """Validate cone membership and return the eigenvalue floor found.

    Raises
    ------
    ConeViolationError
        If the smallest eigenvalue is below ``-tol``.
    """
    x = symmetrize(x)
    if tol is None:
        tol = psd_tol(x)
    floor = min_eigval(x)
    if floor < -tol:
        raise ConeViolationError(
            f"matrix is not positive semidefinite: min eigenvalue {floor:.3e} < -{tol:.3e}"
        )
    return floor


def trace_norm_bracket(x) -> tuple[bool, bool]:
    """Check ``||x|| <= tr(x) <= sqrt(d) ||x||`` for a PSD matrix.

    Exists as a property-test oracle; both flags are true for every PSD
    input.  A small slack at roundoff scale is granted on each side.
    """
    x = symmetrize(x)
    d = x.shape[0]
    nrm = frobenius(x)
    tr = float(np.trace(x))
    slack = 1e-12 * max(1.0, nrm)
    return (nrm <= tr + slack, tr <= np.sqrt(d) * nrm + slack)


def mat_exp(a) -> np.ndarray:
    """Matrix exponential of a real square matrix.

    Evaluated by scaling and squaring (Pade approximant).  Overflow for
    extreme norms is reported, never silently saturated.
    """
    a = np.asarray(a, dtype=float)
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix entries must be finite")
    out = scipy.linalg.expm(a)
    if not np.all(np.isfinite(out)):
        raise OverflowError(f"matrix exponential overflowed (input norm {np.linalg.norm(a):.3e})")
    return out


def sqrt_psd(x) -> np.ndarray:
    """Symmetric PSD square root via eigendecomposition.

    Eigenvalues in ``[-psd_tol, 0)`` are clipped to zero first; anything
    below that is a cone violation.
    """
    x = symmetrize(x)
    tol = psd_tol(x)
    w, q = np.linalg.eigh(x)
    if w[0] < -tol:
        raise ConeViolationError(
            f"cannot take PSD square root: min eigenvalue {w[0]:.3e} < -{tol:.3e}"
        )
    w = np.clip(w, 0.0, None)
    return symmetrize((q * np.sqrt(w)) @ q.T)


def project_psd(x) -> np.ndarray:
    """Nearest-point projection onto the PSD cone (negative eigenvalues clipped).

    Idempotent, and the identity on cone members.
    """
    x = symmetrize(x)
    w, q = np.linalg.eigh(x)
    if w[0] >= 0.0:
        return x
    w = np.clip(w, 0.0, None)
    return symmetrize((q * w) @ q.T)


def sym_dim(d: int) -> int:
    """Dimension ``d(d+1)/2`` of the space of symmetric ``d x d`` matrices."""
    return d * (d + 1) // 2


_SQRT2 = np.sqrt(2.0)


def vectorize(x) -> np.ndarray:
    """Coordinates of a symmetric matrix in the fixed orthonormal basis.

    The map is a linear isometry: dot products of coordinate vectors
    equal trace inner products of the matrices.
    """
    x = np.asarray(x, dtype=float)
    d = x.shape[0]
    iu = np.triu_indices(d, k=1)
    return np.concatenate([np.diagonal(x), _SQRT2 * x[iu]])


def unvectorize(v) -> np.ndarray:
    """Inverse of :func:`vectorize`; the dimension is implied by the length."""
    v = np.asarray(v, dtype=float)
    d = int(round((np.sqrt(8 * v.size + 1) - 1) / 2))
    if sym_dim(d) != v.size:
        raise ValueError(f"length {v.size} is not d(d+1)/2 for any integer d")
    x = np.zeros((d, d))
    np.fill_diagonal(x, v[:d])
    iu = np.triu_indices(d, k=1)
    x[iu] = v[d:] / _SQRT2
    return x + np.triu(x, k=1).T


def sym_basis(d: int) -> list[np.ndarray]:
    """The orthonormal basis matrices, in vectorization order."""
    out = []
    for i in range(d):
        e = np.zeros((d, d))
        e[i, i] = 1.0
        out.append(e)
    for i in range(d):
        for j in range(i + 1, d):
            e = np.zeros((d, d))
            e[i, j] = e[j, i] = 1.0 / _SQRT2
            out.append(e)
    return out


def random_psd(d: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    """Random PSD matrix ``scale * G G.T / d`` with standard normal ``G``."""
    g = rng.standard_normal((d, d))
    return symmetrize(scale * g @ g.T / d)
