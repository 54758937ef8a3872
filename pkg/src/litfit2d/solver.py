"""Regularized least-squares solvers based on the truncated SVD.

Three entry points:

* :func:`tsvd_kron_solve` minimizes ||A C B^T - F||_F by truncating the
  singular values of the Kronecker product B (x) A at a relative threshold,
  without ever forming that product: only the SVDs of A and B are needed.
  The pair (sigma_k(A), sigma_l(B)) is kept iff its product is at least
  epsilon * sigma_1(A) * sigma_1(B).
* :func:`tsvd_separable_solve` truncates A and B independently at
  epsilon * ||A||_2 and epsilon * ||B||_2.  Simpler, but keeps cross terms
  of order epsilon^2 and is less stable for very small thresholds, hence
  the Kronecker variant is the default everywhere.
* :func:`tsvd_dense_solve` is the plain truncated-SVD pseudoinverse for a
  single design matrix, used by the curved-singularity scheme.

Note the transpose (not conjugate transpose) on the B side of the residual
throughout: real sample matrices with complex bases make B^T the correct
pairing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, ParameterError


@dataclass(frozen=True)
class TsvdOptions:
    """Relative truncation threshold and solver variant."""

    epsilon: float = 1e-14
    mode: str = "kronecker"  # or "separable"

    def __post_init__(self):
        if not (0.0 < self.epsilon < 1.0):
            raise ParameterError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if self.mode not in ("kronecker", "separable"):
            raise ParameterError(f"unknown solver mode {self.mode!r}")


@dataclass(frozen=True)
class FitReport:
    """Residual and truncation statistics of a completed solve."""

    residual_frobenius: float
    residual_max: float
    coeff_frobenius: float
    kept_singular_pairs: int
    sigma1_A: float
    sigma1_B: float


def _svd(m: np.ndarray, label: str):
    try:
        return np.linalg.svd(m, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"SVD of {label} matrix failed: {exc}") from exc


def _report(residual: np.ndarray, coeffs: np.ndarray, kept: int,
            s1a: float, s1b: float) -> FitReport:
    return FitReport(
        residual_frobenius=float(np.linalg.norm(residual)),
        residual_max=float(np.max(np.abs(residual))) if residual.size else 0.0,
        coeff_frobenius=float(np.linalg.norm(coeffs)),
        kept_singular_pairs=kept,
        sigma1_A=s1a,
        sigma1_B=s1b,
    )


def tsvd_kron_solve(A, B, F, opts: TsvdOptions = TsvdOptions()):
    """Solve min ||A C B^T - F||_F with Kronecker-level TSVD regularization.

    Equivalent to applying the truncated pseudoinverse of B (x) A to
    vec(F): products sigma_k(A)*sigma_l(B) below
    epsilon*sigma_1(A)*sigma_1(B) are zeroed.

    Returns (C, FitReport).
    """
    A = np.asarray(A, dtype=complex)
    B = np.asarray(B, dtype=complex)
    F = np.asarray(F, dtype=complex)
    if F.shape != (A.shape[0], B.shape[0]):
        raise ParameterError(
            f"shape mismatch: A {A.shape}, B {B.shape} need F "
            f"{(A.shape[0], B.shape[0])}, got {F.shape}"
        )
    ua, sa, vha = _svd(A, "A")
    ub, sb, vhb = _svd(B, "B")
    s1a = float(sa[0]) if sa.size else 0.0
    s1b = float(sb[0]) if sb.size else 0.0
    cutoff = opts.epsilon * s1a * s1b
    prod = sa[:, None] * sb[None, :]
    keep = (prod >= cutoff) & (prod > 0.0)
    s_inv = np.zeros_like(prod)
    s_inv[keep] = 1.0 / prod[keep]
    # core = U_A^* F conj(U_B); the Hadamard product applies the truncated
    # pseudoinverse of the Kronecker singular values, and vhb.conj() is V_B^T
    core = ua.conj().T @ F @ ub.conj()
    C = vha.conj().T @ (s_inv * core) @ vhb.conj()
    residual = F - A @ C @ B.T
    return C, _report(residual, C, int(keep.sum()), s1a, s1b)


def tsvd_separable_solve(A, B, F, opts: TsvdOptions = TsvdOptions()):
    """Solve min ||A C B^T - F||_F truncating A and B independently.

    Keeps sigma_k(A) >= epsilon*||A||_2 and sigma_l(B) >= epsilon*||B||_2;
    compared with the Kronecker rule this preserves cross products of
    order epsilon^2.

    Returns (C, FitReport).
    """
    A = np.asarray(A, dtype=complex)
    B = np.asarray(B, dtype=complex)
    F = np.asarray(F, dtype=complex)
    if F.shape != (A.shape[0], B.shape[0]):
        raise ParameterError(
            f"shape mismatch: A {A.shape}, B {B.shape} need F "
            f"{(A.shape[0], B.shape[0])}, got {F.shape}"
        )
    ua, sa, vha = _svd(A, "A")
    ub, sb, vhb = _svd(B, "B")
    s1a = float(sa[0]) if sa.size else 0.0
    s1b = float(sb[0]) if sb.size else 0.0
    ka = int(np.sum(sa >= opts.epsilon * s1a)) if s1a > 0 else 0
    kb = int(np.sum(sb >= opts.epsilon * s1b)) if s1b > 0 else 0
    core = ua[:, :ka].conj().T @ F @ ub[:, :kb].conj()
    core /= sa[:ka, None]
    core /= sb[None, :kb]
    C = vha[:ka].conj().T @ core @ vhb[:kb].conj()
    residual = F - A @ C @ B.T
    return C, _report(residual, C, ka * kb, s1a, s1b)


def tsvd_dense_solve(A, f, epsilon: float = 1e-14):
    """Truncated-SVD least-squares solution of min ||A c - f||_2.

    Singular values below epsilon*sigma_1(A) are zeroed before applying
    the pseudoinverse.  Returns (c, FitReport); sigma1_B is reported as 0
    since there is no second factor.
    """
    if not (0.0 < epsilon < 1.0):
        raise ParameterError(f"epsilon must lie in (0, 1), got {epsilon}")
    A = np.asarray(A, dtype=complex)
    f = np.asarray(f, dtype=complex).ravel()
    if f.shape[0] != A.shape[0]:
        raise ParameterError(
            f"shape mismatch: A {A.shape} needs rhs of length {A.shape[0]}, "
            f"got {f.shape[0]}"
        )
    u, s, vh = _svd(A, "dense")
    s1 = float(s[0]) if s.size else 0.0
    k = int(np.sum(s >= epsilon * s1)) if s1 > 0 else 0
    coeff = u[:, :k].conj().T @ f
    coeff /= s[:k]
    c = vh[:k].conj().T @ coeff
    residual = f - A @ c
    return c, _report(residual, c, k, s1, 0.0)
