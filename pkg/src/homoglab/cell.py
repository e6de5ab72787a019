"""Periodic cell problems for grid-sampled PSD coefficients.

Computes the effective tensor of a Y_d-periodic coefficient A(y) that may
be degenerate:  A is replaced by A + delta I, the corrector problem

    min over periodic v of  sum_cells  (lam + grad v) . A_delta (lam + grad v) h^d

is solved for a schedule of shrinking delta, and the delta -> 0 limit is
estimated by a linear Richardson fit through the two smallest delta.

Discretization: corrector values live on the periodic node grid, the
gradient is the edge-averaged first-order difference per cell (exact under
axis permutations and reflections of the grid), and the coefficient is
sampled at cell centers.  The linear systems are solved by conjugate
gradients preconditioned with the constant-coefficient operator inverted
in Fourier space.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError, ValidationError

DELTA0_DEFAULT = 1e-1
N_DELTA_DEFAULT = 6
DELTA_SHRINK = 4.0


@dataclass(frozen=True)
class SolverConfig:
    """CG controls: relative residual target and iteration cap."""

    tol: float = 1e-9
    max_iter: int = 20000
    delta0: float = DELTA0_DEFAULT
    n_delta: int = N_DELTA_DEFAULT

    def deltas(self) -> np.ndarray:
        return self.delta0 * DELTA_SHRINK ** (-np.arange(self.n_delta, dtype=float))


@dataclass(frozen=True)
class PeriodicCoefficient:
    """Cell-centered samples of a periodic symmetric PSD coefficient field.

    ``samples`` has shape (n,)*dim + (dim, dim); cell (i, j, ...) covers
    [i h, (i+1) h) x ... with h = 1/n and is sampled at its center.
    """

    dim: int
    n_grid: int
    samples: np.ndarray

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ValidationError(f"dim must be 2 or 3, got {self.dim}")
        n = self.n_grid
        if n < 4 or (n & (n - 1)) != 0:
            raise ValidationError(f"n_grid must be a power of two >= 4, got {n}")
        a = np.asarray(self.samples, dtype=float)
        want = (n,) * self.dim + (self.dim, self.dim)
        if a.shape != want:
            raise ValidationError(f"samples must have shape {want}, got {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ValidationError("samples contain non-finite values")
        flat = a.reshape(-1, self.dim, self.dim)
        scale = max(1.0, float(np.abs(flat).max()))
        if np.abs(flat - flat.transpose(0, 2, 1)).max() > 1e-12 * scale:
            raise ValidationError("samples are not symmetric to 1e-12 relative")
        evals = np.linalg.eigvalsh(flat)
        if evals.min() < -1e-10 * scale:
            raise ValidationError(
                f"samples are not PSD (smallest eigenvalue {evals.min():.3e})"
            )
        object.__setattr__(self, "samples", a)

    @property
    def h(self) -> float:
        return 1.0 / self.n_grid


@dataclass(frozen=True)
class CellSolution:
    """One corrector solve: direction, regularization, energy, gradient field."""

    delta: float
    direction: np.ndarray
    corrector: np.ndarray  # node values, shape (n,)*dim, mean zero
    corrector_grad: np.ndarray  # shape (n,)*dim + (dim,), cell-based
    energy: float
    residual: float  # relative CG residual at exit
    iterations: int


@dataclass(frozen=True)
class ExtrapolationResult:
    """A*_delta along the schedule plus the linear delta -> 0 estimate."""

    deltas: np.ndarray
    tensors: list[np.ndarray]
    estimate: np.ndarray | None
    fit_residual: float
    monotone: bool
    stalled: bool


# ---------------------------------------------------------------------------
# coefficient constructors and file I/O
# ---------------------------------------------------------------------------

def constant_coefficient(matrix, dim: int, n_grid: int) -> PeriodicCoefficient:
    m = np.asarray(matrix, dtype=float)
    samples = np.broadcast_to(m, (n_grid,) * dim + m.shape).copy()
    return PeriodicCoefficient(dim=dim, n_grid=n_grid, samples=samples)


def laminate_coefficient(phase1, phase2, theta: float, dim: int, n_grid: int,
                         axis: int = 0) -> PeriodicCoefficient:
    """Sample a rank-one laminate with normal along a grid axis."""
    if not 0 <= axis < dim:
        raise ValidationError(f"axis must be < dim, got {axis}")
    a1 = np.asarray(phase1, dtype=float)
    a2 = np.asarray(phase2, dtype=float)
    centers = (np.arange(n_grid) + 0.5) / n_grid
    chi = centers < theta
    samples = np.empty((n_grid,) * dim + a1.shape)
    shape = [1] * dim
    shape[axis] = n_grid
    mask = chi.reshape(shape + [1, 1])
    samples[...] = np.where(mask, a1, a2)
    return PeriodicCoefficient(dim=dim, n_grid=n_grid, samples=samples)


def checkerboard_coefficient(alpha: float, beta: float, n_grid: int) -> PeriodicCoefficient:
    """2D checkerboard of isotropic phases alpha I and beta I (half-period cells)."""
    centers = (np.arange(n_grid) + 0.5) / n_grid
    ix = (centers < 0.5).astype(int)
    parity = ix[:, None] ^ ix[None, :]
    vals = np.where(parity[..., None, None] == 0, alpha, beta)
    samples = vals * np.eye(2)
    return PeriodicCoefficient(dim=2, n_grid=n_grid, samples=samples)


def _triu_indices(dim: int) -> list[tuple[int, int]]:
    return [(i, j) for i in range(dim) for j in range(i, dim)]


def save_coefficient(coeff: PeriodicCoefficient, path) -> None:
    """Write 'dim n_grid channels' header then row-major upper-triangle floats."""
    idx = _triu_indices(coeff.dim)
    flat = coeff.samples.reshape(-1, coeff.dim, coeff.dim)
    cols = np.column_stack([flat[:, i, j] for i, j in idx])
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"{coeff.dim} {coeff.n_grid} {len(idx)}\n")
        for row in cols:
            fh.write(" ".join(repr(float(v)) for v in row) + "\n")


def load_coefficient(path) -> PeriodicCoefficient:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 3:
            raise ValidationError("coefficient file must start with 'dim n_grid channels'")
        dim, n, channels = (int(x) for x in header)
        want = dim * (dim + 1) // 2
        if channels != want:
            raise ValidationError(f"expected {want} channels for dim {dim}, got {channels}")
        data = np.loadtxt(fh, dtype=float, ndmin=2)
    cells = n ** dim
    if data.shape != (cells, channels):
        raise ValidationError(
            f"expected {cells} rows of {channels} floats, got shape {data.shape}"
        )
    flat = np.zeros((cells, dim, dim))
    for k, (i, j) in enumerate(_triu_indices(dim)):
        flat[:, i, j] = data[:, k]
        flat[:, j, i] = data[:, k]
    samples = flat.reshape((n,) * dim + (dim, dim))
    return PeriodicCoefficient(dim=dim, n_grid=n, samples=samples)


# ---------------------------------------------------------------------------
# discrete operators
# ---------------------------------------------------------------------------

def _cell_gradient(v: np.ndarray, h: float) -> np.ndarray:
    """Edge-averaged forward differences per cell; out shape v.shape + (dim,)."""
    dim = v.ndim
    out = np.empty(v.shape + (dim,))
    for ax in range(dim):
        diff = (np.roll(v, -1, axis=ax) - v) / h
        # Average the parallel edges of the cell: mean over the other axes'
        # two bounding nodes.
        g = diff
        for other in range(dim):
            if other == ax:
                continue
            g = 0.5 * (g + np.roll(g, -1, axis=other))
        out[..., ax] = g
    return out


def _cell_gradient_adjoint(w: np.ndarray, h: float) -> np.ndarray:
    """Adjoint of _cell_gradient for the unweighted inner products."""
    dim = w.ndim - 1
    out = np.zeros(w.shape[:-1])
    for ax in range(dim):
        g = w[..., ax]
        for other in range(dim):
            if other == ax:
                continue
            g = 0.5 * (g + np.roll(g, 1, axis=other))
        out += (np.roll(g, 1, axis=ax) - g) / h
    return out


def _apply_coeff(samples: np.ndarray, delta: float, w: np.ndarray) -> np.ndarray:
    """(A + delta I) applied per cell to a cell vector field."""
    return np.einsum("...ij,...j->...i", samples, w) + delta * w


def _precond_symbol(dim: int, n: int, h: float, scale: float) -> np.ndarray:
    """Fourier symbol of the constant-coefficient operator scale * G^T G.

    Kernel modes of the averaged-difference gradient (constant and
    checkerboard patterns) get symbol zero and are projected out by the
    preconditioner.
    """
    k = np.arange(n)
    phase = np.exp(2j * np.pi * k / n)
    diff2 = np.abs((phase - 1.0) / h) ** 2
    avg2 = np.abs(0.5 * (1.0 + phase)) ** 2
    sym = np.zeros((n,) * dim)
    for ax in range(dim):
        term = np.ones((n,) * dim)
        for other in range(dim):
            oshape = [1] * dim
            oshape[other] = n
            factor = diff2 if other == ax else avg2
            term = term * factor.reshape(oshape)
        sym = sym + term
    return scale * sym


def energy_of_field(coeff: PeriodicCoefficient, delta: float, direction,
                    corrector_grad: np.ndarray) -> float:
    """Quadrature of (lam + g) . A_delta (lam + g) over the cell grid."""
    lam = np.asarray(direction, dtype=float)
    if lam.shape != (coeff.dim,):
        raise ValidationError(f"direction must have shape ({coeff.dim},)")
    g = np.asarray(corrector_grad, dtype=float)
    want = (coeff.n_grid,) * coeff.dim + (coeff.dim,)
    if g.shape != want:
        raise ValidationError(f"corrector_grad must have shape {want}, got {g.shape}")
    field = g + lam
    flux = _apply_coeff(coeff.samples, delta, field)
    return float(np.sum(field * flux) * coeff.h ** coeff.dim)


def solve_cell_problem(coeff: PeriodicCoefficient, delta: float, direction,
                       cfg: SolverConfig = SolverConfig(),
                       initial: np.ndarray | None = None) -> CellSolution:
    """Minimize the regularized cell energy for one macroscopic direction.

    Preconditioned CG on G^T A_delta G v = -G^T A_delta lam with the
    constant-coefficient FFT preconditioner; converges when the relative
    residual drops below cfg.tol.
    """
    if delta <= 0:
        raise ValidationError("delta must be positive")
    lam = np.asarray(direction, dtype=float)
    if lam.shape != (coeff.dim,) or abs(np.linalg.norm(lam) - 1.0) > 1e-12:
        raise ValidationError("direction must be a unit vector of the grid dimension")
    n, h, dim = coeff.n_grid, coeff.h, coeff.dim
    samples = coeff.samples

    def op(v):
        return _cell_gradient_adjoint(
            _apply_coeff(samples, delta, _cell_gradient(v, h)), h)

    lam_field = np.broadcast_to(lam, (n,) * dim + (dim,))
    b = -_cell_gradient_adjoint(_apply_coeff(samples, delta, np.array(lam_field)), h)

    mean_diag = float(np.einsum("...ii->...", samples).mean() / dim)
    sym = _precond_symbol(dim, n, h, mean_diag + delta)
    inv_sym = np.zeros_like(sym)
    good = sym > 1e-12 * sym.max()
    inv_sym[good] = 1.0 / sym[good]

    def precond(r):
        return np.real(np.fft.ifftn(np.fft.fftn(r) * inv_sym))

    bnorm = float(np.linalg.norm(b))
    v = np.zeros((n,) * dim) if initial is None else initial.copy()
    if bnorm == 0.0:
        v[...] = 0.0
        grad = _cell_gradient(v, h)
        return CellSolution(delta=delta, direction=lam, corrector=v,
                            corrector_grad=grad,
                            energy=energy_of_field(coeff, delta, lam, grad),
                            residual=0.0, iterations=0)
    r = b - op(v)
    z = precond(r)
    p = z.copy()
    rz = float(np.sum(r * z))
    rel = float(np.linalg.norm(r)) / bnorm
    it = 0
    while rel > cfg.tol:
        if it >= cfg.max_iter:
            raise ConvergenceError(
                f"cell problem CG exceeded {cfg.max_iter} iterations", rel)
        ap = op(p)
        alpha = rz / float(np.sum(p * ap))
        v += alpha * p
        r -= alpha * ap
        rel = float(np.linalg.norm(r)) / bnorm
        z = precond(r)
        rz_new = float(np.sum(r * z))
        p = z + (rz_new / rz) * p
        rz = rz_new
        it += 1
    v -= v.mean()
    grad = _cell_gradient(v, h)
    return CellSolution(delta=delta, direction=lam, corrector=v,
                        corrector_grad=grad,
                        energy=energy_of_field(coeff, delta, lam, grad),
                        residual=rel, iterations=it)


def _unit_directions(dim: int) -> list[np.ndarray]:
    dirs = [np.eye(dim)[i] for i in range(dim)]
    for i in range(dim):
        for j in range(i + 1, dim):
            v = np.zeros(dim)
            v[i] = v[j] = 1.0 / np.sqrt(2.0)
            dirs.append(v)
    return dirs


def _assemble_tensor(dim: int, energies: dict) -> np.ndarray:
    """Diagonal entries from axis directions, off-diagonals by polarization."""
    t = np.zeros((dim, dim))
    for i in range(dim):
        t[i, i] = energies[(i, i)]
    for i in range(dim):
        for j in range(i + 1, dim):
            t[i, j] = t[j, i] = energies[(i, j)] - 0.5 * (t[i, i] + t[j, j])
    return t


def homogenize_general(coeff: PeriodicCoefficient,
                       cfg: SolverConfig = SolverConfig()) -> ExtrapolationResult:
    """Effective tensor of a grid coefficient via the vanishing-delta schedule.

    Solves every unit direction e_i and (e_i + e_j)/sqrt(2) for each delta
    (warm-starting along the schedule), assembles A*_delta, and estimates
    the delta -> 0 limit by the straight line through the two smallest
    delta.  ``fit_residual`` is the largest relative deviation of the
    remaining schedule points from that line; ``monotone`` flags whether
    A*_delta decreased as quadratic forms along the schedule; ``stalled``
    (estimate withheld) flags a clearly non-PSD extrapolation.
    """
    deltas = cfg.deltas()
    dim = coeff.dim
    dirs = _unit_directions(dim)
    keys = [(i, i) for i in range(dim)] + [(i, j) for i in range(dim)
                                           for j in range(i + 1, dim)]
    energy_table = np.zeros((len(deltas), len(dirs)))
    for d_idx, lam in enumerate(dirs):
        guess = None
        for k, delta in enumerate(deltas):
            sol = solve_cell_problem(coeff, delta, lam, cfg, initial=guess)
            energy_table[k, d_idx] = sol.energy
            guess = sol.corrector
    tensors = []
    for k in range(len(deltas)):
        e = {key: energy_table[k, idx] for idx, key in enumerate(keys)}
        tensors.append(_assemble_tensor(dim, e))
    monotone = True
    scale = max(1.0, float(np.abs(tensors[0]).max()))
    for k in range(len(deltas) - 1):
        diff = tensors[k] - tensors[k + 1]
        if np.linalg.eigvalsh(diff).min() < -1e-8 * scale:
            monotone = False
    if len(deltas) >= 2:
        d1, d0 = deltas[-2], deltas[-1]
        t1, t0 = tensors[-2], tensors[-1]
        slope = (t1 - t0) / (d1 - d0)
        estimate = t0 - slope * d0
        fit_residual = 0.0
        for k in range(len(deltas)):
            pred = estimate + slope * deltas[k]
            fit_residual = max(fit_residual, float(
                np.abs(pred - tensors[k]).max() / scale))
    else:
        estimate = tensors[-1]
        fit_residual = 0.0
    estimate = 0.5 * (estimate + estimate.T)
    stalled = bool(np.linalg.eigvalsh(estimate).min()
                   < -1e-3 * max(1.0, float(np.abs(estimate).max())))
    return ExtrapolationResult(
        deltas=deltas,
        tensors=tensors,
        estimate=None if stalled else estimate,
        fit_residual=fit_residual,
        monotone=monotone,
        stalled=stalled,
    )
