"""Map hypercube points to random density matrices.

A point in [0,1)^s splits into a simplex block (d-1 coordinates, or d-2
with one eigenvalue pinned to zero for the rank-deficient boundary) and an
angle block (d^2-d coordinates).  Both maps are measure-exact: the simplex
block pushes forward to the uniform (Lebesgue) measure on the eigenvalue
simplex via stick-breaking with Beta inverse CDFs, and the angle block
pushes forward to the Haar measure on the eigenvector flag manifold via a
chain of two-level complex rotations whose mixing coordinates are warped
through the inverse CDF of their Haar marginals.  Consequently no Jacobian
weight is needed for either block; the only quasi-Monte Carlo weight left
downstream is the eigenvalue density of the chosen measure.

Coordinate layout is fixed: simplex block first, then angle block.  For a
d x d state that is (d-1) + (d^2-d) coordinates full rank (80 for d=9) and
(d-2) + (d^2-d) on the rank-(d-1) boundary (79 for d=9).

Eigenvalues are kept in construction order (no sorting) so the map stays
smooth, which matters for quasi-Monte Carlo convergence.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

HERMITICITY_TOL = 1e-12
TRACE_TOL = 1e-12
UNITARITY_TOL = 1e-10
EIG_MATCH_TOL = 1e-10


@dataclass(frozen=True)
class SpectrumPoint:
    """Eigenvalues on the probability simplex, in construction order."""

    lambdas: np.ndarray
    rank_deficient: bool = False

    def __post_init__(self):
        object.__setattr__(
            self, "lambdas", np.asarray(self.lambdas, dtype=np.float64)
        )

    @property
    def d(self) -> int:
        return self.lambdas.size


def coordinate_count(d: int, rank_deficient: bool) -> int:
    """Total hypercube dimension consumed for a d x d state."""
    simplex = d - 2 if rank_deficient else d - 1
    return simplex + d * d - d


def simplex_from_cube(u, rank_deficient: bool = False) -> SpectrumPoint:
    """Stick-breaking map from [0,1)^(d-1) onto the uniform eigenvalue simplex.

    With k coordinates remaining the next eigenvalue takes the fraction
    1 - u^(1/k) of the remaining mass, which is the Beta(1, k) inverse CDF,
    so the pushforward of Lebesgue measure on the cube is exactly the
    uniform measure on the simplex.  For ``rank_deficient`` the map runs on
    d-1 eigenvalues and appends an exact zero.
    """
    u = np.asarray(u, dtype=np.float64)
    lam = simplex_from_cube_batch(u[None, :], rank_deficient)[0]
    return SpectrumPoint(lam, rank_deficient)


def simplex_from_cube_batch(u: np.ndarray, rank_deficient: bool = False) -> np.ndarray:
    """Vectorized simplex map; u has shape (n, d-1) or (n, d-2)."""
    u = np.asarray(u, dtype=np.float64)
    if u.ndim != 2:
        raise ValueError("expected a 2-d array of cube coordinates")
    if np.any(u < 0.0) or np.any(u >= 1.0):
        raise ValueError("cube coordinates must lie in [0, 1)")
    n, k = u.shape
    # k == 0 is legal: the d=2 boundary has no free eigenvalue, lambda=(1,0).
    nlam = k + 1
    lam = np.empty((n, nlam + 1 if rank_deficient else nlam), dtype=np.float64)
    remaining = np.ones(n)
    for i in range(k):
        frac = 1.0 - u[:, i] ** (1.0 / (k - i))
        lam[:, i] = remaining * frac
        remaining = remaining * (1.0 - frac)
    lam[:, k] = remaining
    if rank_deficient:
        lam[:, k + 1] = 0.0
    return lam


def unitary_from_cube(v) -> np.ndarray:
    """Haar-exact unitary from d^2-d cube coordinates.

    The matrix is an ordered product of two-level complex rotations.  Level
    l (l = 0..d-2) builds the first column of the trailing (d-l) x (d-l)
    block through the chain R(d-2,d-1) ... R(l+1,l+2) R(l,l+1), the row-l
    rotation acting first; each rotation consumes one mixing coordinate u
    and one phase coordinate w.
    The mixing coordinate is warped as sin(theta) = u^(1/(2t)) with t the
    number of rotations left in the chain, which is the inverse CDF of the
    Haar marginal, so uniform cube measure pushes forward to exactly the
    Haar measure of the eigenvector frame.  The all-zero point maps to the
    identity.
    """
    v = np.asarray(v, dtype=np.float64)
    return unitary_from_cube_batch(v[None, :])[0]


def _rotation_schedule(d: int):
    """(level, row, tail) for every elementary rotation, in product order."""
    sched = []
    for level in range(d - 1):
        for r in range(d - 1 - level):
            sched.append((level, level + r, d - 1 - level - r))
    return sched


def unitary_from_cube_batch(v: np.ndarray) -> np.ndarray:
    """Vectorized Haar map; v has shape (n, d^2-d); returns (n, d, d)."""
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 2:
        raise ValueError("expected a 2-d array of cube coordinates")
    if np.any(v < 0.0) or np.any(v >= 1.0):
        raise ValueError("cube coordinates must lie in [0, 1)")
    n, m = v.shape
    d = int(round((1.0 + np.sqrt(1.0 + 4.0 * m)) / 2.0))
    if d * d - d != m:
        raise ValueError(f"coordinate count {m} is not d^2-d for integer d")
    U = np.zeros((n, d, d), dtype=np.complex128)
    U[:, np.arange(d), np.arange(d)] = 1.0
    # Composed product: level-0 chain leftmost, and within each level the
    # row-l rotation is the rightmost (first-applied) factor.  Building by
    # successive left-multiplication therefore walks levels from the last
    # down to the first, rows ascending inside a level.
    sched = _rotation_schedule(d)
    by_level = {}
    for pos, (level, i, tail) in enumerate(sched):
        by_level.setdefault(level, []).append((pos, i, tail))
    for level in reversed(range(d - 1)):
        for pos, i, tail in by_level[level]:
            u = v[:, 2 * pos]
            w = v[:, 2 * pos + 1]
            s2 = u ** (1.0 / tail)
            s = np.sqrt(s2)
            c = np.sqrt(1.0 - s2)
            phase = np.exp(2j * np.pi * w)
            row_i = U[:, i, :].copy()
            row_j = U[:, i + 1, :]
            U[:, i, :] = c[:, None] * row_i - (s * phase.conj())[:, None] * row_j
            U[:, i + 1, :] = (s * phase)[:, None] * row_i + c[:, None] * row_j
    return U


def assemble_state(spectrum: SpectrumPoint, unitary: np.ndarray) -> np.ndarray:
    """rho = U diag(lambda) U^dagger."""
    lam = spectrum.lambdas
    if unitary.shape != (lam.size, lam.size):
        raise ValueError("spectrum and unitary dimensions disagree")
    rho = (unitary * lam[None, :]) @ unitary.conj().T
    return 0.5 * (rho + rho.conj().T)


def cube_to_state(point, d: int, rank_deficient: bool = False):
    """Split a cube point into (simplex, angles) and assemble the state.

    Returns (rho, SpectrumPoint); the spectrum is returned so measure
    weights need no re-diagonalization.
    """
    point = np.asarray(point, dtype=np.float64)
    need = coordinate_count(d, rank_deficient)
    if point.size != need:
        raise ValueError(
            f"point has {point.size} coordinates, expected {need} for "
            f"d={d}, rank_deficient={rank_deficient}"
        )
    nsimp = d - 2 if rank_deficient else d - 1
    spec = simplex_from_cube(point[:nsimp], rank_deficient)
    U = unitary_from_cube(point[nsimp:])
    return assemble_state(spec, U), spec


def cube_to_state_batch(points: np.ndarray, d: int, rank_deficient: bool = False):
    """Vectorized cube_to_state: (n, s) -> (rho (n,d,d), lambdas (n,d))."""
    points = np.asarray(points, dtype=np.float64)
    need = coordinate_count(d, rank_deficient)
    if points.ndim != 2 or points.shape[1] != need:
        raise ValueError(
            f"points must have shape (n, {need}) for d={d}, "
            f"rank_deficient={rank_deficient}"
        )
    nsimp = d - 2 if rank_deficient else d - 1
    lam = simplex_from_cube_batch(points[:, :nsimp], rank_deficient)
    U = unitary_from_cube_batch(points[:, nsimp:])
    rho = np.einsum("nij,nj,nkj->nik", U, lam, U.conj(), optimize=True)
    rho = 0.5 * (rho + rho.conj().transpose(0, 2, 1))
    return rho, lam


def check_density_matrix(rho: np.ndarray) -> None:
    """Raise if rho violates the density-matrix invariants."""
    if np.max(np.abs(rho - rho.conj().T)) > HERMITICITY_TOL:
        raise ValueError("matrix is not Hermitian within tolerance")
    if abs(np.trace(rho).real - 1.0) > TRACE_TOL:
        raise ValueError("trace differs from 1 beyond tolerance")
    if np.linalg.eigvalsh(rho).min() < -EIG_MATCH_TOL:
        raise ValueError("matrix has an eigenvalue below -1e-10")
