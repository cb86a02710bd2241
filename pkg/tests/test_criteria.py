import math

import numpy as np
import pytest

from pptratio import criteria
from pptratio.criteria import (
    INNER,
    OUTER,
    CriterionOutcome,
    Split,
    conventions_for,
    cross_norm_pass,
    cross_norm_value_batch,
    evaluate_criteria,
    evaluate_criteria_batch,
    is_ppt,
    is_ppt_batch,
    partial_transpose,
    realign,
)
from pptratio.oracle import ginibre_states_block
from pptratio.states import unitary_from_cube


def naive_pt(rho, d_a, d_b, convention):
    """Quadruple-loop partial-transpose oracle, independent of the library's
    reshape tricks."""
    out = np.empty_like(rho)
    no, ni = (d_a, d_b) if convention == INNER else (d_b, d_a)
    for i in range(no):
        for j in range(no):
            for k in range(ni):
                for l in range(ni):
                    out[i * ni + k, j * ni + l] = rho[i * ni + l, j * ni + k]
    return out


def naive_pt_on_first_factor(rho, d_a, d_b):
    """PT on subsystem A in the A(x)B reading (test-side oracle only)."""
    out = np.empty_like(rho)
    for i in range(d_a):
        for j in range(d_a):
            for k in range(d_b):
                for l in range(d_b):
                    out[i * d_b + k, j * d_b + l] = rho[j * d_b + k, i * d_b + l]
    return out


def werner(p):
    psi = np.array([0.0, 1.0, -1.0, 0.0]) / math.sqrt(2)
    return p * np.outer(psi, psi) + (1 - p) * np.eye(4) / 4


def bell_state():
    psi = np.zeros(4, dtype=complex)
    psi[0] = psi[3] = 1 / math.sqrt(2)
    return np.outer(psi, psi.conj())


def random_states(seed, n, d):
    return ginibre_states_block(np.random.default_rng(seed), n, d, d)


def test_split_validation():
    with pytest.raises(ValueError):
        Split(0, 2)
    with pytest.raises(ValueError):
        Split(2, 2, "sideways")
    assert Split(2, 3, "transpose_inner_blocks").convention == INNER
    assert Split(2, 3, "transpose_outer_blocks").convention == OUTER
    with pytest.raises(ValueError):
        partial_transpose(np.eye(6), Split(2, 2))


def test_maximally_mixed_fixed_point():
    for conv in (INNER, OUTER):
        np.testing.assert_array_equal(
            partial_transpose(np.eye(6) / 6, Split(2, 3, conv)), np.eye(6) / 6
        )


def test_werner_pt_spectrum():
    # PT spectrum of the Werner family is {(1+p)/4 x3, (1-3p)/4}.
    for p in (0.0, 1.0 / 3.0, 0.5, 1.0):
        w = np.linalg.eigvalsh(partial_transpose(werner(p), Split(2, 2)))
        want = np.sort([(1 + p) / 4] * 3 + [(1 - 3 * p) / 4])
        np.testing.assert_allclose(w, want, atol=1e-10)


def test_werner_ppt_decisions():
    ok, me = is_ppt(werner(0.5), Split(2, 2))
    assert not ok and me == pytest.approx(-0.125, abs=1e-12)
    ok, me = is_ppt(werner(1.0 / 3.0), Split(2, 2))
    assert ok and abs(me) < 1e-12
    ok, _ = is_ppt(werner(0.9), Split(2, 2))
    assert not ok
    ok, _ = is_ppt(werner(0.0), Split(2, 2))
    assert ok


def test_separable_product_always_ppt():
    # The guarantee is for the convention matching the product structure
    # (inner, i.e. the A(x)B reading); the outer convention re-reads the
    # matrix under a different tensor grouping and can legitimately fail.
    rng = np.random.default_rng(0)
    for _ in range(20):
        ra = ginibre_states_block(rng, 1, 2, 2)[0]
        rb = ginibre_states_block(rng, 1, 3, 3)[0]
        ok, _ = is_ppt(np.kron(ra, rb), Split(2, 3, INNER))
        assert ok
        rc = ginibre_states_block(rng, 1, 3, 3)[0]
        for conv in (INNER, OUTER):  # identical operations for N = M
            ok, _ = is_ppt(np.kron(rb, rc), Split(3, 3, conv))
            assert ok


def test_involution_hermiticity_trace_exact():
    for d_a, d_b in ((2, 3), (3, 3), (2, 2)):
        for rho in random_states(1, 10, d_a * d_b):
            for conv in conventions_for(d_a, d_b):
                s = Split(d_a, d_b, conv)
                pt = partial_transpose(rho, s)
                assert np.array_equal(partial_transpose(pt, s), rho)
                assert np.trace(pt) == np.trace(rho)
                assert np.max(np.abs(pt - pt.conj().T)) < 1e-14
                assert abs(np.linalg.eigvalsh(pt).sum() - 1.0) < 1e-12


def test_matches_naive_loop_oracle():
    for d_a, d_b in ((2, 3), (3, 2), (2, 2), (3, 3)):
        for rho in random_states(2, 5, d_a * d_b):
            for conv in (INNER, OUTER):
                got = partial_transpose(rho, Split(d_a, d_b, conv))
                np.testing.assert_array_equal(got, naive_pt(rho, d_a, d_b, conv))


def test_convention_duality_spectra():
    # PT on A equals the global transpose of PT on B (inner), so their
    # spectra agree as multisets.
    for rho in random_states(3, 10, 6):
        pt_b = partial_transpose(rho, Split(2, 3, INNER))
        pt_a = naive_pt_on_first_factor(rho, 2, 3)
        np.testing.assert_array_equal(pt_a, pt_b.T)
        np.testing.assert_allclose(
            np.linalg.eigvalsh(pt_a), np.linalg.eigvalsh(pt_b), atol=1e-10
        )


def test_equal_subsystems_conventions_coincide():
    for rho in random_states(4, 10, 9):
        np.testing.assert_array_equal(
            partial_transpose(rho, Split(3, 3, INNER)),
            partial_transpose(rho, Split(3, 3, OUTER)),
        )
    assert conventions_for(3, 3) == (INNER,)
    assert conventions_for(2, 3) == (INNER, OUTER)


def test_six_by_six_conventions_can_disagree():
    # The two block transpositions are inequivalent: search for a state that
    # is PPT under one and not the other.
    rng = np.random.default_rng(42)
    for _ in range(200):
        rho = ginibre_states_block(rng, 64, 6, 6)
        ok_i, _ = is_ppt_batch(rho, Split(2, 3, INNER))
        ok_o, _ = is_ppt_batch(rho, Split(2, 3, OUTER))
        mism = ok_i != ok_o
        if np.any(mism):
            k = int(np.argmax(mism))
            assert ok_i[k] != ok_o[k]
            return
    pytest.fail("no convention-discrepant state found")


def test_realign_shape_and_product_rank():
    ra = np.diag([0.7, 0.3]).astype(complex)
    rb = np.diag([0.5, 0.3, 0.2]).astype(complex)
    R = realign(np.kron(ra, rb), Split(2, 3))
    assert R.shape == (4, 9)
    assert np.linalg.matrix_rank(R) == 1
    np.testing.assert_allclose(
        R, np.outer(ra.reshape(-1), rb.reshape(-1)), atol=1e-14
    )


def test_cross_norm_reference_values():
    _, v = cross_norm_pass(bell_state(), Split(2, 2))
    assert v == pytest.approx(2.0, abs=1e-10)
    for d in (2, 3):
        ok, v = cross_norm_pass(np.eye(d * d) / (d * d), Split(d, d))
        assert ok and v == pytest.approx(1.0 / d, abs=1e-10)
    # pure product state sits exactly on the boundary
    pa = np.outer([1, 0], [1, 0]).astype(complex)
    pb = np.outer([0, 1, 0], [0, 1, 0]).astype(complex)
    ok, v = cross_norm_pass(np.kron(pa, pb), Split(2, 3))
    assert ok and v == pytest.approx(1.0, abs=1e-10)


def test_cross_norm_local_unitary_invariance():
    rng = np.random.default_rng(7)
    ua = unitary_from_cube(rng.random(2))
    ub = unitary_from_cube(rng.random(6))
    u = np.kron(ua, ub)
    for rho in random_states(8, 10, 6):
        _, v = cross_norm_pass(rho, Split(2, 3))
        _, v2 = cross_norm_pass(u @ rho @ u.conj().T, Split(2, 3))
        assert abs(v - v2) < 1e-8


def test_ppt_tolerance_insensitivity():
    # Pass decisions are identical for tol in {1e-12, 1e-8} over 1e5 states.
    n = 100_000
    split = Split(2, 2)
    matches = 0
    for b in range(0, n, 1 << 15):
        m = min(1 << 15, n - b)
        rho = ginibre_states_block(np.random.default_rng((9, b)), m, 4, 4)
        lo, _ = is_ppt_batch(rho, split, tol=1e-12)
        hi, _ = is_ppt_batch(rho, split, tol=1e-8)
        matches += int(np.count_nonzero(lo == hi))
    assert matches == n


def test_evaluate_criteria_single_vs_batch():
    rhos = random_states(10, 16, 6)
    ppt_b, cn_b = evaluate_criteria_batch(rhos, 2, 3)
    for k, rho in enumerate(rhos):
        out = evaluate_criteria(rho, 2, 3)
        assert isinstance(out, CriterionOutcome)
        for conv in (INNER, OUTER):
            assert out.ppt_pass[conv] == ppt_b[conv][k]
        assert out.cn_pass == cn_b[k]
    # values of the batch match the scalar computation
    vals = cross_norm_value_batch(rhos, Split(2, 3))
    for k, rho in enumerate(rhos):
        _, v = cross_norm_pass(rho, Split(2, 3))
        assert v == pytest.approx(vals[k], abs=1e-12)


def test_criteria_subsets():
    rho = werner(0.2)
    out = evaluate_criteria(rho, 2, 2, criteria=("ppt",))
    assert out.cn_pass is None and math.isnan(out.cross_norm_value)
    out = evaluate_criteria(rho, 2, 2, criteria=("cross_norm",))
    assert out.ppt_pass == {}
