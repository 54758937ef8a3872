import numpy as np
import pytest

from litfit2d.errors import ParameterError
from litfit2d.solver import (
    TsvdOptions,
    tsvd_dense_solve,
    tsvd_kron_solve,
    tsvd_separable_solve,
)


def oracle_kron_tsvd(A, B, F, eps):
    """Truncated pseudoinverse of the explicitly formed Kronecker product."""
    K = np.kron(B, A)
    u, s, vh = np.linalg.svd(K, full_matrices=False)
    s1 = (np.linalg.svd(A, compute_uv=False)[0]
          * np.linalg.svd(B, compute_uv=False)[0])
    s_inv = np.where(s >= eps * s1, np.divide(1.0, s, where=s > 0), 0.0)
    c = vh.conj().T @ (s_inv * (u.conj().T @ F.reshape(-1, order="F")))
    return c.reshape(A.shape[1], B.shape[1], order="F")


def random_instance(rng, ma=None, na=None, mb=None, nb=None):
    ma = ma or int(rng.integers(6, 25))
    na = na or int(rng.integers(2, 11))
    mb = mb or int(rng.integers(6, 25))
    nb = nb or int(rng.integers(2, 11))
    c = lambda m, n: rng.standard_normal((m, n)) + 1j * rng.standard_normal((m, n))
    return c(ma, na), c(mb, nb), c(ma, mb)


def test_identity_factors_return_f():
    rng = np.random.default_rng(0)
    F = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    I2 = np.eye(2)
    for solve in (tsvd_kron_solve, tsvd_separable_solve):
        C, rep = solve(I2, I2, F, TsvdOptions(epsilon=1e-14))
        assert np.allclose(C, F, atol=1e-14)
        assert rep.kept_singular_pairs == 4


def test_truncated_direction_zeroed():
    eps = 1e-6
    A = np.diag([1.0, eps / 2]).astype(complex)
    C, rep = tsvd_kron_solve(A, np.eye(2), np.eye(2), TsvdOptions(epsilon=eps))
    assert np.allclose(C[0], [1.0, 0.0], atol=1e-14)
    assert np.allclose(C[1], 0.0)
    assert rep.kept_singular_pairs == 2  # (1,1) pairs with both of B's values


def test_kron_matches_bruteforce_oracle():
    rng = np.random.default_rng(42)
    worst = 0.0
    for _ in range(20):
        A, B, F = random_instance(rng)
        for eps in (1e-2, 1e-6, 1e-10):
            C, _ = tsvd_kron_solve(A, B, F, TsvdOptions(epsilon=eps))
            C_ref = oracle_kron_tsvd(A, B, F, eps)
            worst = max(worst,
                        np.abs(C - C_ref).max() / np.abs(C_ref).max())
    assert worst < 1e-12


def test_dense_matches_bruteforce_oracle():
    rng = np.random.default_rng(3)
    A = rng.standard_normal((200, 50)) + 1j * rng.standard_normal((200, 50))
    f = rng.standard_normal(200) + 1j * rng.standard_normal(200)
    c, _ = tsvd_dense_solve(A, f, 1e-10)
    u, s, vh = np.linalg.svd(A, full_matrices=False)
    keep = s >= 1e-10 * s[0]
    c_ref = vh[keep].conj().T @ ((u[:, keep].conj().T @ f) / s[keep])
    assert np.abs(c - c_ref).max() / np.abs(c_ref).max() < 1e-12


def test_dense_identity_and_projection():
    f = np.array([1.0, 2.0, -3.0], dtype=complex)
    c, rep = tsvd_dense_solve(np.eye(3), f, 1e-14)
    assert np.allclose(c, f, atol=1e-14)
    # orthonormal columns: solution is Q* f, residual the out-of-span part
    rng = np.random.default_rng(5)
    Q, _ = np.linalg.qr(rng.standard_normal((6, 3))
                        + 1j * rng.standard_normal((6, 3)))
    f = rng.standard_normal(6) + 1j * rng.standard_normal(6)
    c, rep = tsvd_dense_solve(Q, f, 1e-14)
    assert np.allclose(c, Q.conj().T @ f, atol=1e-13)
    assert rep.residual_frobenius == pytest.approx(
        np.linalg.norm(f - Q @ (Q.conj().T @ f)), rel=1e-12)


def test_separable_keeps_epsilon_squared_cross_terms():
    # kron drops the (2,2) pair (product 4*eps^2 < eps) while the separable
    # rule keeps both factor directions (2*eps >= eps each)
    eps = 1e-6
    A = np.diag([1.0, 2 * eps]).astype(complex)
    F = np.ones((2, 2), dtype=complex)
    Ck, repk = tsvd_kron_solve(A, A, F, TsvdOptions(epsilon=eps))
    Cs, reps = tsvd_separable_solve(A, A, F, TsvdOptions(epsilon=eps))
    assert repk.kept_singular_pairs == 3
    assert reps.kept_singular_pairs == 4
    assert Ck[1, 1] == 0.0
    assert Cs[1, 1] == pytest.approx(1.0 / (4 * eps ** 2), rel=1e-12)


def test_residual_bounds_hold():
    rng = np.random.default_rng(7)
    for _ in range(10):
        A, B, F = random_instance(rng)
        K = np.kron(B, A)
        x_ls, *_ = np.linalg.lstsq(K, F.reshape(-1, order="F"), rcond=None)
        X_ls = x_ls.reshape(A.shape[1], B.shape[1], order="F")
        na = np.linalg.norm(A, 2)
        nb = np.linalg.norm(B, 2)
        for eps in (1e-2, 1e-6, 1e-10):
            Ck, _ = tsvd_kron_solve(A, B, F, TsvdOptions(epsilon=eps))
            Cs, _ = tsvd_separable_solve(A, B, F, TsvdOptions(epsilon=eps))
            rk = np.linalg.norm(F - A @ Ck @ B.T)
            rs = np.linalg.norm(F - A @ Cs @ B.T)
            for X in (np.zeros_like(Ck), X_ls):
                rx = np.linalg.norm(F - A @ X @ B.T)
                nx = np.linalg.norm(X)
                assert rk <= rx + eps * na * nb * nx + 1e-12
                assert rs <= 2 * rx + (2 + eps) * na * nb * eps * nx + 1e-12


def test_residual_monotonicity():
    rng = np.random.default_rng(11)
    for _ in range(5):
        A, B, F = random_instance(rng)
        for solve in (tsvd_kron_solve, tsvd_separable_solve):
            _, rep = solve(A, B, F, TsvdOptions(epsilon=1e-3))
            assert rep.residual_frobenius <= np.linalg.norm(F) * (1 + 1e-12)


def test_scale_equivariance():
    rng = np.random.default_rng(13)
    A, B, F = random_instance(rng, 12, 5, 10, 4)
    C1, _ = tsvd_kron_solve(A, B, F, TsvdOptions(epsilon=1e-6))
    C2, _ = tsvd_kron_solve(3.0 * A, B, 3.0 * F, TsvdOptions(epsilon=1e-6))
    assert np.abs(C1 - C2).max() <= 1e-12 * np.abs(C1).max()


def test_zero_matrix_gives_zero_solution():
    Z = np.zeros((4, 3))
    F = np.ones((4, 5))
    B = np.ones((5, 2))
    C, rep = tsvd_kron_solve(Z, B, F, TsvdOptions())
    assert np.all(C == 0)
    assert rep.kept_singular_pairs == 0
    c, _ = tsvd_dense_solve(np.zeros((4, 2)), np.ones(4), 1e-14)
    assert np.all(c == 0)


def test_report_residual_recompute():
    rng = np.random.default_rng(17)
    A, B, F = random_instance(rng)
    C, rep = tsvd_kron_solve(A, B, F, TsvdOptions(epsilon=1e-8))
    resid = F - A @ C @ B.T
    assert rep.residual_frobenius == pytest.approx(np.linalg.norm(resid),
                                                   rel=1e-12)
    assert rep.residual_max == pytest.approx(np.abs(resid).max(), rel=1e-12)
    assert rep.coeff_frobenius == pytest.approx(np.linalg.norm(C), rel=1e-12)
    assert rep.sigma1_A == pytest.approx(np.linalg.norm(A, 2), rel=1e-12)


def test_shape_and_option_validation():
    with pytest.raises(ParameterError):
        TsvdOptions(epsilon=0.0)
    with pytest.raises(ParameterError):
        TsvdOptions(epsilon=1.5)
    with pytest.raises(ParameterError):
        TsvdOptions(mode="qr")
    with pytest.raises(ParameterError):
        tsvd_kron_solve(np.eye(3), np.eye(2), np.eye(3))
    with pytest.raises(ParameterError):
        tsvd_dense_solve(np.eye(3), np.ones(4))
