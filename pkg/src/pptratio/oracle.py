"""Independent validation: exact reference quantities and a Ginibre sampler.

The Ginibre route samples the Hilbert-Schmidt measure directly
(rho = G G^dag / tr with G a square complex Gaussian matrix), giving a plain
Monte Carlo estimate with a defined standard error, against which the
weighted quasi-Monte Carlo estimates can be checked.  It shares the
criteria code deliberately: it validates the measure weights and the cube
parameterization, not the partial-transpose code (the test suite carries a
naive loop-based partial transpose for that).

The parameterization is measure-exact in both blocks, so converting mean
weights into absolute volumes only requires the flag-manifold and simplex
volumes plus the eigenvalue-permutation overcount; those constants are
assembled here from Gamma-function expressions and validated against the
known total hyperarea-to-volume ratio.
"""

from __future__ import annotations

import math

import numpy as np

from . import criteria
from .estimator import Accumulator, EstimateUndefined, NotApplicable


def exact_area_to_volume_ratio(d: int) -> float:
    """Known ratio of the total boundary hyperarea to the total volume of
    d x d states under the Hilbert-Schmidt metric: sqrt(d(d-1)) (d^2-1)."""
    if d < 2:
        raise ValueError("d must be >= 2")
    return math.sqrt(d * (d - 1)) * (d * d - 1)


def _prod_factorials(n: int) -> int:
    out = 1
    for k in range(1, n + 1):
        out *= math.factorial(k)
    return out


def flag_manifold_volume(d: int) -> float:
    """Volume of the eigenvector flag manifold U(d)/U(1)^d in the metric
    where each off-diagonal complex direction counts with coefficient 1."""
    dd = d * (d - 1) // 2
    return math.pi**dd / _prod_factorials(d - 1)


def hs_volume_constant(d: int) -> float:
    """Maps the mean full-rank weight to the absolute HS volume.

    V = const * E[weight]: sqrt(d) from the trace constraint, 2^(d(d-1)/2)
    from the off-diagonal metric blocks, the flag and simplex volumes from
    the two measure-exact blocks, and 1/d! for the eigenvalue-ordering
    overcount of the spectral parameterization.
    """
    dd = d * (d - 1) // 2
    return (
        math.sqrt(d)
        * 2.0**dd
        * flag_manifold_volume(d)
        / math.factorial(d - 1)
        / math.factorial(d)
    )


def hs_area_constant(d: int) -> float:
    """Maps the mean boundary weight to the absolute HS hyperarea."""
    if d < 2:
        raise ValueError("d must be >= 2")
    dd = d * (d - 1) // 2
    return (
        math.sqrt(d - 1)
        * 2.0**dd
        * flag_manifold_volume(d)
        / math.factorial(d - 2)
        / math.factorial(d - 1)
    )


def hs_total_volume_exact(d: int) -> float:
    """Closed-form total HS volume of d x d density matrices."""
    dd = d * (d - 1) // 2
    return math.sqrt(d) * (2 * math.pi) ** dd * _prod_factorials(d - 1) / math.factorial(d * d - 1)


def hs_total_hyperarea_exact(d: int) -> float:
    return hs_total_volume_exact(d) * exact_area_to_volume_ratio(d)


def _mean_hs_weight(acc: Accumulator) -> float:
    if "hs" not in acc.metrics:
        raise NotApplicable("run did not accumulate Hilbert-Schmidt weights")
    if acc.n_points == 0:
        raise EstimateUndefined("empty accumulator")
    return acc.sum_weight["hs"].value / acc.n_points


def area_to_volume_numeric(full: Accumulator, boundary: Accumulator, d: int) -> float:
    """Numeric total hyperarea-to-volume ratio from two paired runs."""
    return (
        hs_area_constant(d)
        / hs_volume_constant(d)
        * _mean_hs_weight(boundary)
        / _mean_hs_weight(full)
    )


def qmc_area_to_volume_check(full: Accumulator, boundary: Accumulator, d: int) -> float:
    """|numeric / exact - 1| for the total hyperarea-to-volume ratio."""
    return abs(area_to_volume_numeric(full, boundary, d) / exact_area_to_volume_ratio(d) - 1.0)


# ---------------------------------------------------------------------------
# Ginibre-ensemble Monte Carlo


def ginibre_state(rng: np.random.Generator, d: int, k: int) -> np.ndarray:
    """One draw of G G^dag / tr(G G^dag) with G a d x k complex Gaussian.

    k = d samples the HS measure over full-rank states; k < d samples the
    induced measure over rank-k states.
    """
    if not 1 <= k <= d:
        raise ValueError("need 1 <= k <= d")
    return ginibre_states_block(rng, 1, d, k)[0]


def ginibre_states_block(rng: np.random.Generator, n: int, d: int, k: int) -> np.ndarray:
    g = rng.standard_normal((n, d, k)) + 1j * rng.standard_normal((n, d, k))
    rho = g @ g.conj().transpose(0, 2, 1)
    tr = np.einsum("nii->n", rho).real
    return rho / tr[:, None, None]


def mc_ppt_probability(
    d_a: int,
    d_b: int,
    rank: int,
    n: int,
    seed: int,
    tol: float = criteria.DEFAULT_TOL,
    convention: str = criteria.INNER,
    batch_size: int = 1 << 15,
):
    """(estimate, standard error) of the PPT probability under the Ginibre
    measure for the requested rank.

    Batch b is seeded by (seed, b), so the result depends only on (seed, n,
    batch_size) and shards can be evaluated in any order or in parallel.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    d = d_a * d_b
    split = criteria.Split(d_a, d_b, convention)
    passes = 0
    done = 0
    batch_index = 0
    while done < n:
        m = min(batch_size, n - done)
        rng = np.random.default_rng((seed, batch_index))
        rho = ginibre_states_block(rng, m, d, rank)
        ok, _ = criteria.is_ppt_batch(rho, split, tol)
        passes += int(np.count_nonzero(ok))
        done += m
        batch_index += 1
    p = passes / n
    se = math.sqrt(max(p * (1.0 - p), 0.0) / n)
    return p, se
