"""Small-dimension symmetric linear algebra (d = 2 or 3).

Self-contained eigendecompositions: closed form in 2D, cyclic Jacobi
rotations in 3D.  Everything downstream (kernel detection, positive
definiteness, PSD square roots, span comparisons) is built on these, with
scale-aware thresholds relative to max(1, spectral radius) so that exact
degenerate matrices and grid-rounded ones are treated alike.

All functions are pure; inputs are never mutated.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

SYM_RTOL = 1e-12
DEFAULT_TOL = 1e-10


def as_sym_matrix(m, name: str = "matrix") -> np.ndarray:
    """Validate and return a symmetric d x d float array, d in {2, 3}."""
    a = np.asarray(m, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValidationError(f"{name} must be square, got shape {a.shape}")
    d = a.shape[0]
    if d not in (2, 3):
        raise ValidationError(f"{name} must be 2x2 or 3x3, got {d}x{d}")
    if not np.all(np.isfinite(a)):
        raise ValidationError(f"{name} has non-finite entries")
    scale = max(1.0, float(np.abs(a).max()))
    if np.abs(a - a.T).max() > SYM_RTOL * scale:
        raise ValidationError(f"{name} is not symmetric to {SYM_RTOL:g} relative")
    return 0.5 * (a + a.T)


def as_vector(v, dim: int | None = None, name: str = "vector") -> np.ndarray:
    """Validate and return a finite 1-d float array of dimension 2 or 3."""
    a = np.asarray(v, dtype=float)
    if a.ndim != 1 or a.shape[0] not in (2, 3):
        raise ValidationError(f"{name} must be a 2- or 3-vector, got shape {a.shape}")
    if dim is not None and a.shape[0] != dim:
        raise ValidationError(f"{name} has dimension {a.shape[0]}, expected {dim}")
    if not np.all(np.isfinite(a)):
        raise ValidationError(f"{name} has non-finite entries")
    return a


@dataclass(frozen=True)
class EigenDecomp:
    """Orthogonal diagonalization m = rotation @ diag(eigenvalues) @ rotation.T.

    Eigenvalues are ascending; rotation columns are the matching
    orthonormal eigenvectors.
    """

    rotation: np.ndarray
    eigenvalues: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return self.rotation @ np.diag(self.eigenvalues) @ self.rotation.T


def _eig2(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    a, b, c = m[0, 0], m[0, 1], m[1, 1]
    if b == 0.0:
        w = np.array([a, c])
        r = np.eye(2)
        order = np.argsort(w)
        return w[order], r[:, order]
    half_tr = 0.5 * (a + c)
    rad = np.hypot(0.5 * (a - c), b)
    lo, hi = half_tr - rad, half_tr + rad
    # Eigenvector for hi from the better-conditioned row of (m - hi I);
    # max-normalize before the 2-norm so subnormal entries cannot underflow.
    v1 = np.array([b, hi - a])
    v2 = np.array([hi - c, b])
    v = v1 if np.abs(v1).max() >= np.abs(v2).max() else v2
    v = v / np.abs(v).max()
    v = v / np.linalg.norm(v)
    r = np.column_stack([np.array([-v[1], v[0]]), v])
    return np.array([lo, hi]), r


def _eig3_jacobi(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # Cyclic Jacobi; converges quadratically, 6-10 sweeps suffice at fp64.
    a = m.copy()
    r = np.eye(3)
    for _ in range(60):
        off = np.sqrt(a[0, 1] ** 2 + a[0, 2] ** 2 + a[1, 2] ** 2)
        if off <= 1e-15 * max(1.0, np.abs(np.diag(a)).max()):
            break
        for p in range(2):
            for q in range(p + 1, 3):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                tau = (a[q, q] - a[p, p]) / (2.0 * apq)
                if tau == 0.0:
                    t = 1.0
                elif abs(tau) > 1e150:  # avoid overflow in tau*tau
                    t = 0.5 / tau
                else:
                    t = np.sign(tau) / (abs(tau) + np.sqrt(1.0 + tau * tau))
                cth = 1.0 / np.sqrt(1.0 + t * t)
                sth = t * cth
                g = np.eye(3)
                g[p, p] = g[q, q] = cth
                g[p, q] = sth
                g[q, p] = -sth
                a = g.T @ a @ g
                a[p, q] = a[q, p] = 0.0
                r = r @ g
    w = np.diag(a).copy()
    order = np.argsort(w)
    return w[order], r[:, order]


def sym_eig(m) -> EigenDecomp:
    """Eigendecomposition of a symmetric 2x2 or 3x3 matrix.

    Returns ascending eigenvalues and an orthogonal matrix of eigenvectors
    satisfying the reconstruction identity to 1e-10 relative.
    """
    a = as_sym_matrix(m)
    if a.shape[0] == 2:
        w, r = _eig2(a)
    else:
        w, r = _eig3_jacobi(a)
    return EigenDecomp(rotation=r, eigenvalues=w)


def spectral_radius(m) -> float:
    return float(np.abs(sym_eig(m).eigenvalues).max())


def _psd_eigs(m, tol: float, name: str) -> EigenDecomp:
    dec = sym_eig(m)
    rho = float(np.abs(dec.eigenvalues).max())
    if dec.eigenvalues[0] < -tol * max(1.0, rho):
        raise ValidationError(
            f"{name} is not PSD: eigenvalue {dec.eigenvalues[0]:.3e} below "
            f"-{tol:g} * max(1, spectral radius)"
        )
    return dec


def kernel_basis(m, tol: float = DEFAULT_TOL) -> list[np.ndarray]:
    """Orthonormal basis of the near-kernel of a symmetric PSD matrix.

    Returns the eigenvectors whose eigenvalue is at most
    tol * max(1, spectral radius); empty when the matrix is positive
    definite above that threshold.  Raises when an eigenvalue dips below
    the negative of the same threshold.
    """
    if tol <= 0:
        raise ValidationError("tol must be positive")
    dec = _psd_eigs(m, tol, "matrix")
    cut = tol * max(1.0, float(np.abs(dec.eigenvalues).max()))
    return [dec.rotation[:, i].copy() for i in range(len(dec.eigenvalues))
            if dec.eigenvalues[i] <= cut]


def is_positive_definite(m, tol: float = DEFAULT_TOL) -> bool:
    """True iff the smallest eigenvalue exceeds tol * max(1, spectral radius)."""
    dec = sym_eig(m)
    cut = tol * max(1.0, float(np.abs(dec.eigenvalues).max()))
    return bool(dec.eigenvalues[0] > cut)


def sqrt_psd(m) -> np.ndarray:
    """Symmetric PSD square root.

    Eigenvalues in [-1e-10 * max(1, spectral radius), 0) are clamped to
    zero; anything lower raises.
    """
    dec = _psd_eigs(m, 1e-10, "matrix")
    w = np.maximum(dec.eigenvalues, 0.0)
    root = dec.rotation @ np.diag(np.sqrt(w)) @ dec.rotation.T
    return 0.5 * (root + root.T)


def _span_rank(vectors, dim: int, tol: float) -> tuple[int, np.ndarray]:
    """Rank of the span and an orthonormal basis, via Gram-Schmidt."""
    basis: list[np.ndarray] = []
    for v in vectors:
        w = v.astype(float).copy()
        nv = np.linalg.norm(w)
        if nv <= tol:
            continue
        w /= nv
        for b in basis:
            w -= (w @ b) * b
        nw = np.linalg.norm(w)
        if nw > tol:
            basis.append(w / nw)
    if basis:
        return len(basis), np.array(basis)
    return 0, np.zeros((0, dim))


def span_equals_orthocomplement(spanners, kernel, tol: float = DEFAULT_TOL) -> bool:
    """True iff span(spanners) is exactly the orthogonal complement of span(kernel).

    Decided by rank: rank(S) + rank(K) must equal the ambient dimension and
    every spanner must be orthogonal to every kernel vector, both with
    threshold ``tol``.
    """
    spanners = [as_vector(v, name="spanner") for v in spanners]
    kernel = [as_vector(v, name="kernel vector") for v in kernel]
    dims = {v.shape[0] for v in spanners} | {v.shape[0] for v in kernel}
    if len(dims) > 1:
        raise ValidationError(f"mixed vector dimensions {sorted(dims)}")
    if not dims:
        raise ValidationError("at least one vector is required to fix the dimension")
    d = dims.pop()
    rs, bs = _span_rank(spanners, d, tol)
    rk, bk = _span_rank(kernel, d, tol)
    if rs + rk != d:
        return False
    if rs and rk and np.abs(bs @ bk.T).max() > tol:
        return False
    return True
