import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pptratio.faure import SequenceConfig, prng_stream, stream
from pptratio.states import (
    SpectrumPoint,
    assemble_state,
    check_density_matrix,
    coordinate_count,
    cube_to_state,
    cube_to_state_batch,
    simplex_from_cube,
    simplex_from_cube_batch,
    unitary_from_cube,
    unitary_from_cube_batch,
)


def test_coordinate_counts():
    assert coordinate_count(2, False) == 3
    assert coordinate_count(4, False) == 15
    assert coordinate_count(4, True) == 14
    assert coordinate_count(6, False) == 35
    assert coordinate_count(6, True) == 34
    assert coordinate_count(9, False) == 80
    assert coordinate_count(9, True) == 79


def test_simplex_d2_examples():
    np.testing.assert_allclose(
        simplex_from_cube(np.array([0.0])).lambdas, [1.0, 0.0], atol=0
    )
    np.testing.assert_allclose(
        simplex_from_cube(np.array([0.25])).lambdas, [0.75, 0.25], atol=1e-15
    )


def test_simplex_domain_error():
    with pytest.raises(ValueError):
        simplex_from_cube(np.array([1.0]))
    with pytest.raises(ValueError):
        simplex_from_cube(np.array([-0.1]))


def test_simplex_rank_deficient_pins_zero():
    spec = simplex_from_cube(np.array([0.3, 0.6]), rank_deficient=True)
    assert spec.lambdas.shape == (4,)
    assert spec.lambdas[-1] == 0.0
    assert spec.lambdas.sum() == pytest.approx(1.0, abs=1e-12)
    # d=2 boundary consumes no coordinates at all
    spec2 = simplex_from_cube(np.empty(0), rank_deficient=True)
    np.testing.assert_array_equal(spec2.lambdas, [1.0, 0.0])


@settings(deadline=None, max_examples=60)
@given(
    u=st.lists(st.floats(min_value=0.0, max_value=0.999999), min_size=1, max_size=8)
)
def test_simplex_invariants(u):
    lam = simplex_from_cube(np.array(u)).lambdas
    assert np.all(lam >= 0.0)
    assert abs(lam.sum() - 1.0) < 1e-12


def test_simplex_uniform_pushforward_moments():
    # d=3 first moment against the uniform-simplex value 1/3, per the
    # brute-force quadrature oracle E[lam_1] = 1/d.
    cfg = SequenceConfig(dimension=2, base=2)
    lam = simplex_from_cube_batch(stream(cfg, 0, 10**6))
    assert abs(lam[:, 0].mean() - 1.0 / 3.0) < 0.01
    # second moment of the uniform 2-simplex: E[lam^2] = 1/6
    assert abs((lam[:, 0] ** 2).mean() - 1.0 / 6.0) < 0.01


def test_simplex_batch_matches_single():
    pts = prng_stream(3, 5, 50)
    batch = simplex_from_cube_batch(pts)
    single = np.array([simplex_from_cube(p).lambdas for p in pts])
    np.testing.assert_array_equal(batch, single)


def test_unitary_identity_at_origin():
    for d in (2, 3, 9):
        U = unitary_from_cube(np.zeros(d * d - d))
        np.testing.assert_array_equal(U, np.eye(d))


def test_unitary_is_unitary_and_unimodular():
    rng_pts = prng_stream(11, 30, 40)  # d = 6
    U = unitary_from_cube_batch(rng_pts)
    eye = np.einsum("nij,nkj->nik", U, U.conj())
    assert np.max(np.abs(eye - np.eye(6))) < 1e-10
    assert np.max(np.abs(np.abs(np.linalg.det(U)) - 1.0)) < 1e-10


def test_unitary_wrong_count():
    with pytest.raises(ValueError):
        unitary_from_cube(np.zeros(5))
    with pytest.raises(ValueError):
        unitary_from_cube(np.array([1.0, 0.0]))


def test_unitary_haar_marginal_d2():
    # |U_11|^2 is uniform on [0,1] under Haar for d=2.
    n = 10**5
    U = unitary_from_cube_batch(stream(SequenceConfig(dimension=2, base=2), 0, n))
    x = np.sort(np.abs(U[:, 0, 0]) ** 2)
    ks = np.max(np.abs(x - (np.arange(1, n + 1) - 0.5) / n))
    assert ks < 0.01


def test_unitary_haar_marginal_d3():
    # Under Haar every |U_ij|^2 has the Beta(1, d-1) law; check the CDF fit
    # and the 1/d mean for a couple of entries.
    n = 10**5
    U = unitary_from_cube_batch(stream(SequenceConfig(dimension=6, base=7), 0, n))
    for i, j in ((0, 0), (1, 1), (2, 0)):
        x = np.sort(np.abs(U[:, i, j]) ** 2)
        cdf = 1.0 - (1.0 - x) ** 2
        ks = np.max(np.abs(cdf - (np.arange(1, n + 1) - 0.5) / n))
        assert ks < 0.01, (i, j)


def test_assemble_maximally_mixed():
    d = 3
    U = unitary_from_cube(prng_stream(5, d * d - d, 1)[0])
    rho = assemble_state(SpectrumPoint(np.full(d, 1.0 / d)), U)
    np.testing.assert_allclose(rho, np.eye(d) / d, atol=1e-14)


def test_assemble_identity_unitary():
    rho = assemble_state(SpectrumPoint(np.array([0.75, 0.25])), np.eye(2, dtype=complex))
    np.testing.assert_allclose(rho, np.diag([0.75, 0.25]), atol=0)


def test_assemble_dimension_mismatch():
    with pytest.raises(ValueError):
        assemble_state(SpectrumPoint(np.array([0.5, 0.5])), np.eye(3, dtype=complex))


def test_assemble_round_trip_spectrum():
    pts = prng_stream(17, coordinate_count(4, False), 200)
    rho, lam = cube_to_state_batch(pts, 4)
    eig = np.linalg.eigvalsh(rho)
    assert np.max(np.abs(eig - np.sort(lam, axis=1))) < 1e-10


def test_lambda_permutation_leaves_spectrum():
    pts = prng_stream(23, coordinate_count(3, False), 20)
    for p in pts:
        spec = simplex_from_cube(p[:2])
        U = unitary_from_cube(p[2:])
        rho = assemble_state(spec, U)
        perm = SpectrumPoint(spec.lambdas[[2, 0, 1]])
        rho_p = assemble_state(perm, U)
        np.testing.assert_allclose(
            np.linalg.eigvalsh(rho), np.linalg.eigvalsh(rho_p), atol=1e-12
        )


def test_cube_to_state_counts_and_errors():
    rho, spec = cube_to_state(prng_stream(1, 3, 1)[0], 2)
    assert rho.shape == (2, 2) and spec.d == 2
    rho, spec = cube_to_state(prng_stream(1, 80, 1)[0], 9)
    assert rho.shape == (9, 9) and not spec.rank_deficient
    rho, spec = cube_to_state(prng_stream(1, 79, 1)[0], 9, rank_deficient=True)
    assert spec.rank_deficient and spec.lambdas[-1] == 0.0
    with pytest.raises(ValueError):
        cube_to_state(prng_stream(1, 79, 1)[0], 9)


def test_cube_to_state_invariants_and_batch_equivalence():
    pts = prng_stream(29, coordinate_count(6, True), 64)
    rho, lam = cube_to_state_batch(pts, 6, rank_deficient=True)
    for k in range(0, 64, 7):
        check_density_matrix(rho[k])
        single_rho, single_spec = cube_to_state(pts[k], 6, rank_deficient=True)
        np.testing.assert_array_equal(single_spec.lambdas, lam[k])
        np.testing.assert_allclose(single_rho, rho[k], atol=1e-15)
    # rank deficiency: smallest eigenvalue ~0, remaining sum to 1
    eig = np.linalg.eigvalsh(rho)
    assert np.max(np.abs(eig[:, 0])) < 1e-10
    assert np.max(np.abs(eig[:, 1:].sum(axis=1) - 1.0)) < 1e-10
