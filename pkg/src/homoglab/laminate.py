"""Effective tensors of two-phase rank-one laminates with degenerate phases.

A laminate alternates two constant symmetric PSD conductivities ``A1``
(volume fraction ``theta``) and ``A2`` along a unit normal ``n``.  With

    a = (1 - theta) * A1 n.n + theta * A2 n.n,

the effective tensor is, for a > 0,

    A* = theta A1 + (1-theta) A2
         - theta (1-theta) / a * ((A2 - A1) n) otimes ((A2 - A1) n),

and the plain arithmetic average when a = 0.  The formula stays valid when
one or both phases are singular, which is the regime of interest here:
``A*`` may then lose definiteness, and the condition checkers below decide
whether it does.

Internally every computation rotates the normal onto the first coordinate
axis, applies the axis-aligned formulas, and rotates back; orthogonal
conjugation preserves them exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from . import linalg
from .linalg import as_sym_matrix, as_vector, is_positive_definite, kernel_basis, sym_eig

RANK_TOL = 1e-10


def rotation_to_axis(n: np.ndarray) -> np.ndarray:
    """Orthogonal Q with Q n = e1, the identity when n is already e1.

    Householder reflection through the bisector of n and e1; returning the
    exact identity for n = e1 keeps axis-aligned inputs bit-exact.
    """
    d = n.shape[0]
    e1 = np.zeros(d)
    e1[0] = 1.0
    v = n - e1
    nv2 = v @ v
    if nv2 < 1e-28:
        return np.eye(d)
    return np.eye(d) - 2.0 * np.outer(v, v) / nv2


@dataclass(frozen=True)
class LaminateSpec:
    """Two PSD phases, a volume fraction in (0, 1), and a unit normal."""

    phase1: np.ndarray
    phase2: np.ndarray
    theta: float
    direction: np.ndarray

    def __post_init__(self):
        p1 = as_sym_matrix(self.phase1, "phase1")
        p2 = as_sym_matrix(self.phase2, "phase2")
        if p1.shape != p2.shape:
            raise ValidationError("phases must share a dimension")
        n = as_vector(self.direction, dim=p1.shape[0], name="direction")
        if abs(np.linalg.norm(n) - 1.0) > 1e-12:
            raise ValidationError("direction must be a unit vector to 1e-12")
        if not (0.0 < self.theta < 1.0):
            raise ValidationError(f"theta must lie in (0, 1), got {self.theta}")
        for name, p in (("phase1", p1), ("phase2", p2)):
            kernel_basis(p, RANK_TOL)  # raises if not PSD
        object.__setattr__(self, "phase1", p1)
        object.__setattr__(self, "phase2", p2)
        object.__setattr__(self, "direction", n)

    @property
    def dim(self) -> int:
        return self.phase1.shape[0]

    def to_dict(self) -> dict:
        return {
            "phase1": self.phase1.tolist(),
            "phase2": self.phase2.tolist(),
            "theta": float(self.theta),
            "direction": self.direction.tolist(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "LaminateSpec":
        missing = {"phase1", "phase2", "theta", "direction"} - set(doc)
        if missing:
            raise ValidationError(f"laminate document missing keys {sorted(missing)}")
        return cls(
            phase1=np.asarray(doc["phase1"], dtype=float),
            phase2=np.asarray(doc["phase2"], dtype=float),
            theta=float(doc["theta"]),
            direction=np.asarray(doc["direction"], dtype=float),
        )


@dataclass(frozen=True)
class HomogenizedLaminate:
    """a-value, effective tensor, branch taken, and its definiteness data."""

    a_value: float
    tensor: np.ndarray
    branch: str  # "regular" | "degenerate_average"
    pd: bool
    kernel: list[np.ndarray]


@dataclass(frozen=True)
class ConditionDetail:
    name: str
    passed: bool
    value: float
    threshold: float


@dataclass(frozen=True)
class ConditionReport:
    """Outcome of the algebraic structure conditions, with raw quantities."""

    h2_holds: bool
    details: tuple[ConditionDetail, ...] = field(default_factory=tuple)

    def detail(self, name: str) -> ConditionDetail:
        for d in self.details:
            if d.name == name:
                return d
        raise KeyError(name)


def laminate_a(spec: LaminateSpec) -> float:
    """The cross-interface coefficient (1-theta) A1 n.n + theta A2 n.n."""
    n = spec.direction
    return float((1.0 - spec.theta) * (spec.phase1 @ n) @ n
                 + spec.theta * (spec.phase2 @ n) @ n)


def default_a_tol(spec: LaminateSpec) -> float:
    return 1e-12 * (linalg.spectral_radius(spec.phase1)
                    + linalg.spectral_radius(spec.phase2))


def homogenize_laminate(spec: LaminateSpec, a_tol: float | None = None) -> HomogenizedLaminate:
    """Effective tensor of the laminate, choosing the a = 0 branch when
    the cross coefficient falls below ``a_tol`` (scale-aware default)."""
    if a_tol is None:
        a_tol = default_a_tol(spec)
    q = rotation_to_axis(spec.direction)
    a1 = q @ spec.phase1 @ q.T
    a2 = q @ spec.phase2 @ q.T
    th = spec.theta
    a = laminate_a(spec)
    mean = th * a1 + (1.0 - th) * a2
    if a > a_tol:
        jump = (a2 - a1)[:, 0]  # (A2 - A1) e1 in the rotated frame
        tensor = mean - (th * (1.0 - th) / a) * np.outer(jump, jump)
        branch = "regular"
    else:
        tensor = mean
        branch = "degenerate_average"
    tensor = q.T @ tensor @ q
    tensor = 0.5 * (tensor + tensor.T)
    return HomogenizedLaminate(
        a_value=a,
        tensor=tensor,
        branch=branch,
        pd=is_positive_definite(tensor),
        kernel=kernel_basis(tensor),
    )


def _rank_one_vector(m: np.ndarray, name: str) -> np.ndarray:
    """Extract xi with m = xi otimes xi, validating rank one to RANK_TOL."""
    dec = sym_eig(m)
    lam = dec.eigenvalues
    top = lam[-1]
    if top <= 0.0:
        raise ValidationError(f"{name} must be a nonzero rank-one matrix")
    if np.abs(lam[:-1]).max() > RANK_TOL * top:
        raise ValidationError(
            f"{name} is not rank one within {RANK_TOL:g} relative "
            f"(eigenvalues {lam.tolist()})"
        )
    return np.sqrt(top) * dec.rotation[:, -1]


def _rank_two_kernel(m: np.ndarray, name: str) -> np.ndarray:
    ker = kernel_basis(m, RANK_TOL)
    if len(ker) != 1:
        raise ValidationError(
            f"{name} must have rank two (one-dimensional kernel), found "
            f"kernel dimension {len(ker)}"
        )
    return ker[0]


def check_conditions_2d(spec: LaminateSpec, xi=None, tol: float = RANK_TOL) -> ConditionReport:
    """Structure conditions for the 2D family: phase1 = xi otimes xi, phase2 PD.

    Sub-conditions, all relative to the lamination normal n:
      * xi_not_orthogonal: |xi . n| > tol * |xi|
      * xi_A2n_independent: |det[xi, A2 n]| > tol * |xi| * |A2 n|
      * phase2_pd: phase2 positive definite
    """
    if spec.dim != 2:
        raise ValidationError("check_conditions_2d requires 2x2 phases")
    xi_m = _rank_one_vector(spec.phase1, "phase1")
    if xi is not None:
        xi = as_vector(xi, dim=2, name="xi")
        gap = np.abs(spec.phase1 - np.outer(xi, xi)).max()
        if gap > RANK_TOL * max(1.0, np.abs(spec.phase1).max()):
            raise ValidationError("phase1 does not equal xi otimes xi to 1e-10 relative")
    else:
        xi = xi_m
    n = spec.direction
    a2n = spec.phase2 @ n
    nxi = np.linalg.norm(xi)
    c1 = abs(float(xi @ n))
    t1 = tol * nxi
    c2 = abs(float(xi[0] * a2n[1] - xi[1] * a2n[0]))
    t2 = tol * nxi * np.linalg.norm(a2n)
    pd2 = is_positive_definite(spec.phase2)
    details = (
        ConditionDetail("xi_not_orthogonal", c1 > t1, c1, t1),
        ConditionDetail("xi_A2n_independent", c2 > t2, c2, t2),
        ConditionDetail("phase2_pd", pd2, float(sym_eig(spec.phase2).eigenvalues[0]), 0.0),
    )
    return ConditionReport(h2_holds=all(d.passed for d in details), details=details)


def check_conditions_3d(spec: LaminateSpec, tol: float = RANK_TOL) -> ConditionReport:
    """Structure conditions for the 3D family: both phases rank two.

    Sub-conditions:
      * n_eta1_eta2_independent: |det[n, eta1, eta2]| > tol (etas orthonormal)
      * A1n_A2n_independent: Gram determinant of {A1 n, A2 n} above
        tol^2 * |A1 n|^2 |A2 n|^2
    """
    if spec.dim != 3:
        raise ValidationError("check_conditions_3d requires 3x3 phases")
    eta1 = _rank_two_kernel(spec.phase1, "phase1")
    eta2 = _rank_two_kernel(spec.phase2, "phase2")
    n = spec.direction
    c1 = abs(float(np.linalg.det(np.column_stack([n, eta1, eta2]))))
    t1 = tol  # all three columns are unit vectors
    v1 = spec.phase1 @ n
    v2 = spec.phase2 @ n
    gram = float((v1 @ v1) * (v2 @ v2) - (v1 @ v2) ** 2)
    t2 = tol * tol * float(v1 @ v1) * float(v2 @ v2)
    details = (
        ConditionDetail("n_eta1_eta2_independent", c1 > t1, c1, t1),
        ConditionDetail("A1n_A2n_independent", gram > t2, gram, t2),
    )
    return ConditionReport(h2_holds=all(d.passed for d in details), details=details)


def _unit_complement(n: np.ndarray) -> list[np.ndarray]:
    """Orthonormal basis of the hyperplane orthogonal to unit n."""
    q = rotation_to_axis(n)
    return [q.T[:, k].copy() for k in range(1, n.shape[0])]


def _null_space_of_row(row: np.ndarray) -> list[np.ndarray]:
    """Orthonormal basis of the kernel of a single linear form on R^m."""
    m = row.shape[0]
    nr = np.linalg.norm(row)
    basis: list[np.ndarray] = []
    unit = row / nr if nr > 0 else None
    for k in range(m):
        v = np.zeros(m)
        v[k] = 1.0
        if unit is not None:
            v -= (v @ unit) * unit
        for b in basis:
            v -= (v @ b) * b
        nv = np.linalg.norm(v)
        if nv > 1e-12:
            basis.append(v / nv)
    return basis


def _range_basis(m: np.ndarray, tol: float = RANK_TOL) -> list[np.ndarray]:
    """Orthonormal eigenvectors spanning the range of a PSD matrix."""
    dec = sym_eig(m)
    cut = tol * max(1.0, float(np.abs(dec.eigenvalues).max()))
    return [dec.rotation[:, i].copy() for i in range(len(dec.eigenvalues))
            if dec.eigenvalues[i] > cut]


def v_space_basis(spec: LaminateSpec, xi=None) -> list[np.ndarray]:
    """Generators of the space of mean values of divergence-free laminate fields.

    The admissible fields are piecewise constant per phase, each phase
    value in the range of its matrix, with the jump across the interface
    orthogonal to the lamination normal; the generator attached to a pair
    (xi1, xi2) is theta xi1 + (1 - theta) xi2.  The rank-one/PD family in
    2D keeps the explicit basis {xi, (1 - theta) t}, t a unit vector
    orthogonal to n; in every other case (rank-two pairs in 3D, general
    PSD phases) the pair space is computed as the kernel of the single
    interface constraint over range(A1) x range(A2).
    """
    n = spec.direction
    th = spec.theta
    if xi is not None:
        xi = as_vector(xi, dim=spec.dim, name="xi")
        gap = np.abs(spec.phase1 - np.outer(xi, xi)).max()
        if gap > RANK_TOL * max(1.0, np.abs(spec.phase1).max()):
            raise ValidationError("phase1 does not equal xi otimes xi to 1e-10 relative")
    if spec.dim == 2 and is_positive_definite(spec.phase2):
        dec = sym_eig(spec.phase1)
        top = dec.eigenvalues[-1]
        if top > 0.0 and abs(dec.eigenvalues[0]) <= RANK_TOL * top:
            if xi is None:
                xi = _rank_one_vector(spec.phase1, "phase1")
            t = _unit_complement(n)[0]
            return [xi, (1.0 - th) * t]
    p = _range_basis(spec.phase1)
    q = _range_basis(spec.phase2)
    if not p or not q:
        raise ValidationError("both phases must be nonzero to carry a flux field")
    row = np.array([v @ n for v in p] + [-(v @ n) for v in q])
    gens = []
    for coeff in _null_space_of_row(row):
        xi1 = sum(coeff[k] * p[k] for k in range(len(p)))
        xi2 = sum(coeff[len(p) + k] * q[k] for k in range(len(q)))
        gens.append(th * xi1 + (1.0 - th) * xi2)
    return gens


def verify_kernel_identity(spec: LaminateSpec, tol: float = 1e-10) -> bool:
    """Check ker(A*) = (span of laminate field means)^perp for this spec."""
    hom = homogenize_laminate(spec)
    gens = v_space_basis(spec)
    ker = kernel_basis(hom.tensor, tol)
    return linalg.span_equals_orthocomplement(gens, ker, tol)
