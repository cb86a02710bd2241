"""Entanglement-related criteria on bipartite density matrices.

A d x d matrix with d = N*M admits two inequivalent block transpositions:

* ``inner``  -- read the matrix as an N x N grid of M x M blocks (the
  natural A(x)B reading with dim(A)=N, dim(B)=M) and transpose every
  M x M block in place.  There are N^2 such blocks.  This is the partial
  transpose on the second factor.
* ``outer``  -- re-read the same matrix as an M x M grid of N x N blocks
  (M^2 blocks) and transpose each of those in place, i.e. interpret the
  matrix as M(x)N and transpose on its second factor.

For N = M the two operations coincide entry for entry.  For N != M they
are genuinely different: a state can pass the PPT test under one and fail
it under the other, so estimates are kept per convention.

The realignment map and the cross-norm (trace-norm) test use the canonical
A(x)B reading only.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

INNER = "inner"
OUTER = "outer"
CONVENTIONS = (INNER, OUTER)

# Accepted spellings for the two block conventions.
_CONVENTION_ALIASES = {
    INNER: INNER,
    "transpose_inner_blocks": INNER,
    OUTER: OUTER,
    "transpose_outer_blocks": OUTER,
}

DEFAULT_TOL = 1e-10


@dataclass(frozen=True)
class Split:
    """Bipartite split d = d_a * d_b plus the block-transposition convention."""

    d_a: int
    d_b: int
    convention: str = INNER

    def __post_init__(self):
        if self.d_a < 1 or self.d_b < 1:
            raise ValueError("subsystem dimensions must be positive")
        conv = _CONVENTION_ALIASES.get(self.convention)
        if conv is None:
            raise ValueError(f"unknown convention {self.convention!r}")
        object.__setattr__(self, "convention", conv)

    @property
    def d(self) -> int:
        return self.d_a * self.d_b


@dataclass(frozen=True)
class CriterionOutcome:
    """Decisions for one state: PPT per convention plus one cross-norm value."""

    ppt_pass: dict = field(default_factory=dict)
    min_pt_eigenvalue: dict = field(default_factory=dict)
    cross_norm_value: float = float("nan")
    cn_pass: bool | None = None


def _check_split(rho: np.ndarray, split: Split) -> None:
    d = rho.shape[-1]
    if rho.shape[-2] != d or split.d != d:
        raise ValueError(
            f"split {split.d_a}x{split.d_b} does not match matrix dimension {d}"
        )


def partial_transpose_batch(rho: np.ndarray, split: Split) -> np.ndarray:
    """Block-transpose a stack of matrices (..., d, d) under the split's convention."""
    _check_split(rho, split)
    n_lead = rho.shape[:-2]
    if split.convention == INNER:
        outer_dim, inner_dim = split.d_a, split.d_b
    else:
        outer_dim, inner_dim = split.d_b, split.d_a
    r4 = rho.reshape(n_lead + (outer_dim, inner_dim, outer_dim, inner_dim))
    # (i,k),(j,l) <- (i,l),(j,k): transpose each inner block in place.
    r4 = np.swapaxes(r4, -1, -3)
    return r4.reshape(n_lead + (split.d, split.d))


def partial_transpose(rho: np.ndarray, split: Split) -> np.ndarray:
    """In-place block transposition of a single d x d matrix."""
    return partial_transpose_batch(np.asarray(rho), split)


def is_ppt(rho: np.ndarray, split: Split, tol: float = DEFAULT_TOL):
    """(pass, min eigenvalue) of the partial transpose.

    Near-threshold states (min eigenvalue in [-tol, 0)) count as PPT: the
    decision boundary has measure zero and the symmetric treatment avoids
    bias.
    """
    if tol < 0:
        raise ValueError("tol must be >= 0")
    w = np.linalg.eigvalsh(partial_transpose(rho, split))
    min_eig = float(w[0])
    return min_eig >= -tol, min_eig


def is_ppt_batch(rho: np.ndarray, split: Split, tol: float = DEFAULT_TOL):
    """Vectorized is_ppt over a stack (n, d, d) -> (bool (n,), min_eig (n,))."""
    if tol < 0:
        raise ValueError("tol must be >= 0")
    w = np.linalg.eigvalsh(partial_transpose_batch(rho, split))
    min_eig = w[..., 0]
    return min_eig >= -tol, min_eig


def realign_batch(rho: np.ndarray, split: Split) -> np.ndarray:
    """Realignment of a stack (..., d, d) -> (..., d_a^2, d_b^2).

    Entry ((i,k),(j,l)) of the result is rho[(i,j),(k,l)] in the A(x)B
    reading: every M x M block of rho becomes one row.  The split's
    convention field is irrelevant here; the canonical reading is used.
    """
    _check_split(rho, split)
    n_lead = rho.shape[:-2]
    na, nb = split.d_a, split.d_b
    r4 = rho.reshape(n_lead + (na, nb, na, nb))
    r4 = np.swapaxes(r4, -2, -3)
    return r4.reshape(n_lead + (na * na, nb * nb))


def realign(rho: np.ndarray, split: Split) -> np.ndarray:
    return realign_batch(np.asarray(rho), split)


def cross_norm_value_batch(rho: np.ndarray, split: Split) -> np.ndarray:
    """Trace norm of the realignment for a stack of states."""
    sv = np.linalg.svd(realign_batch(rho, split), compute_uv=False)
    return sv.sum(axis=-1)


def cross_norm_pass(rho: np.ndarray, split: Split, tol: float = DEFAULT_TOL):
    """(pass, value): value = sum of singular values of the realignment.

    Separable states satisfy value <= 1, so value > 1 + tol certifies
    entanglement (the test is necessary for separability, not sufficient).
    """
    if tol < 0:
        raise ValueError("tol must be >= 0")
    value = float(cross_norm_value_batch(np.asarray(rho), split))
    return value <= 1.0 + tol, value


def conventions_for(d_a: int, d_b: int):
    """Conventions to evaluate: both for N != M, one for N = M (identical ops)."""
    return (INNER,) if d_a == d_b else CONVENTIONS


def evaluate_criteria(
    rho: np.ndarray,
    d_a: int,
    d_b: int,
    criteria=("ppt", "cross_norm"),
    ppt_tol: float = DEFAULT_TOL,
    cn_tol: float = DEFAULT_TOL,
) -> CriterionOutcome:
    """Evaluate the requested criteria for a single state."""
    ppt_pass = {}
    min_eig = {}
    cn_value = float("nan")
    cn_ok = None
    if "ppt" in criteria:
        for conv in conventions_for(d_a, d_b):
            ok, me = is_ppt(rho, Split(d_a, d_b, conv), ppt_tol)
            ppt_pass[conv] = ok
            min_eig[conv] = me
    if "cross_norm" in criteria:
        cn_ok, cn_value = cross_norm_pass(rho, Split(d_a, d_b), cn_tol)
    return CriterionOutcome(ppt_pass, min_eig, cn_value, cn_ok)


def evaluate_criteria_batch(
    rho: np.ndarray,
    d_a: int,
    d_b: int,
    criteria=("ppt", "cross_norm"),
    ppt_tol: float = DEFAULT_TOL,
    cn_tol: float = DEFAULT_TOL,
):
    """Vectorized criteria evaluation.

    Returns (ppt_pass: {convention: bool (n,)}, cn_pass: bool (n,) or None).
    """
    ppt_pass = {}
    cn_pass = None
    if "ppt" in criteria:
        for conv in conventions_for(d_a, d_b):
            ok, _ = is_ppt_batch(rho, Split(d_a, d_b, conv), ppt_tol)
            ppt_pass[conv] = ok
    if "cross_norm" in criteria:
        values = cross_norm_value_batch(rho, Split(d_a, d_b))
        cn_pass = values <= 1.0 + cn_tol
    return ppt_pass, cn_pass
