"""Tensor-product rational fitting on rectangles.

The sample grid is a superposition of a Chebyshev (or, for a periodic
axis, equispaced) product grid with log-spaced points clustering towards
each singular line.  The coefficient matrix C of

    r(x, y) = rowA(x) . C . rowB(y)^T

is found by the regularized solvers in :mod:`litfit2d.solver`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .basis import AxisBasisSpec, axis_design_matrix
from .errors import DataError, ParameterError
from .poles import clustered_samples
from .solver import FitReport, TsvdOptions, tsvd_kron_solve, tsvd_separable_solve

_LOC_TOL = 1e-14


@dataclass(frozen=True)
class GridSpec:
    """Sample counts per axis: m_cheb smooth points, m_cluster per singular line.

    The oversampling factors record how the counts relate to the basis
    degrees (m_cluster = round(oversample_q * N_q), m_cheb =
    round(oversample_p * N_p)); for a Fourier axis the smooth count is
    derived as round(oversample_p * number of Fourier columns).
    """

    m_cheb: int
    m_cluster: int
    oversample_q: float = 3.0
    oversample_p: float = 2.0

    def __post_init__(self):
        if self.m_cheb < 1:
            raise ParameterError(f"m_cheb must be >= 1, got {self.m_cheb}")
        if self.m_cluster < 2:
            raise ParameterError(f"m_cluster must be >= 2, got {self.m_cluster}")

    @classmethod
    def for_degrees(cls, n_q: int, n_p: int,
                    oversample_q: float = 3.0, oversample_p: float = 2.0):
        return cls(
            m_cheb=max(1, int(round(oversample_p * n_p))),
            m_cluster=max(2, int(round(oversample_q * n_q))),
            oversample_q=oversample_q,
            oversample_p=oversample_p,
        )


@dataclass(frozen=True)
class TensorApproximant:
    """Fitted tensor-product rational approximant."""

    x_spec: AxisBasisSpec
    y_spec: AxisBasisSpec
    coeffs: np.ndarray = field(repr=False)
    report: FitReport = None


def chebyshev_points(m: int, interval=(-1.0, 1.0)) -> np.ndarray:
    """m Chebyshev points (extrema grid) on an interval, ascending."""
    a, b = interval
    if m == 1:
        return np.array([0.5 * (a + b)])
    k = np.arange(m, dtype=float)
    t = np.cos(np.pi * k / (m - 1))
    return np.sort(0.5 * (a + b) + 0.5 * (b - a) * t)


def equispaced_angles(m: int) -> np.ndarray:
    """m equispaced points on the periodic cell [-pi, pi)."""
    return -np.pi + 2.0 * np.pi * np.arange(m, dtype=float) / m


def _axis_sample_nodes(spec: AxisBasisSpec, grid: GridSpec) -> np.ndarray:
    a, b = spec.interval
    if spec.poly.kind == "fourier":
        base = equispaced_angles(
            max(1, int(round(grid.oversample_p * spec.poly.n_columns)))
        )
    else:
        base = chebyshev_points(grid.m_cheb, (a, b))
    parts = [base]
    offs = clustered_samples(grid.m_cluster)
    for ps in spec.clusters:
        loc = ps.spec.location
        scale_ref = max(abs(a), abs(b), 1.0)
        if abs(loc - a) <= _LOC_TOL * scale_ref:
            # edge singularity at the left end: sample into the domain
            cand = loc + min(b - a, 1.0) * offs
        elif abs(loc - b) <= _LOC_TOL * scale_ref:
            cand = loc - min(b - a, 1.0) * offs
        else:
            # interior singular line: cluster from both sides
            scale = min(loc - a, b - loc, 1.0)
            cand = np.concatenate([loc + scale * offs, loc - scale * offs])
        parts.append(cand[(cand >= a) & (cand <= b)])
    nodes = np.unique(np.concatenate(parts))
    return nodes


def build_sample_grid(x_spec: AxisBasisSpec, y_spec: AxisBasisSpec,
                      grid: GridSpec):
    """Per-axis sample nodes (sorted, exact duplicates removed)."""
    return _axis_sample_nodes(x_spec, grid), _axis_sample_nodes(y_spec, grid)


def sample_function(f, x_nodes, y_nodes) -> np.ndarray:
    """Evaluate f on the product grid, F[i, j] = f(x_i, y_j).

    Tries a vectorized call first and falls back to a scalar loop.  Any
    non-finite sample is a fatal data error naming the offending node.
    """
    X, Y = np.meshgrid(x_nodes, y_nodes, indexing="ij")
    try:
        F = np.asarray(f(X, Y), dtype=complex)
        if F.shape != X.shape:
            raise TypeError
    except (TypeError, ValueError):
        F = np.empty(X.shape, dtype=complex)
        for i, xv in enumerate(x_nodes):
            for j, yv in enumerate(y_nodes):
                F[i, j] = f(xv, yv)
    bad = ~np.isfinite(F)
    if np.any(bad):
        i, j = np.argwhere(bad)[0]
        raise DataError(
            f"non-finite sample value at node ({x_nodes[i]!r}, {y_nodes[j]!r})"
        )
    return F


def _solve(A, B, F, opts: TsvdOptions):
    if opts.mode == "separable":
        return tsvd_separable_solve(A, B, F, opts)
    return tsvd_kron_solve(A, B, F, opts)


def fit_tensor_samples(x_nodes, y_nodes, F, x_spec: AxisBasisSpec,
                       y_spec: AxisBasisSpec,
                       opts: TsvdOptions = TsvdOptions()) -> TensorApproximant:
    """Fit from an already-sampled product grid (F[i, j] at (x_i, y_j))."""
    F = np.asarray(F, dtype=complex)
    if F.shape != (len(x_nodes), len(y_nodes)):
        raise ParameterError(
            f"sample matrix shape {F.shape} does not match grid "
            f"({len(x_nodes)}, {len(y_nodes)})"
        )
    if not np.all(np.isfinite(F)):
        i, j = np.argwhere(~np.isfinite(F))[0]
        raise DataError(
            f"non-finite sample value at node ({x_nodes[i]!r}, {y_nodes[j]!r})"
        )
    A = axis_design_matrix(x_nodes, x_spec)
    B = axis_design_matrix(y_nodes, y_spec)
    C, report = _solve(A, B, F, opts)
    return TensorApproximant(x_spec=x_spec, y_spec=y_spec, coeffs=C,
                             report=report)


def fit_tensor(f, x_spec: AxisBasisSpec, y_spec: AxisBasisSpec,
               grid: GridSpec, opts: TsvdOptions = TsvdOptions()
               ) -> TensorApproximant:
    """Sample f on the clustered grid and solve for the coefficient matrix."""
    x_nodes, y_nodes = build_sample_grid(x_spec, y_spec, grid)
    F = sample_function(f, x_nodes, y_nodes)
    return fit_tensor_samples(x_nodes, y_nodes, F, x_spec, y_spec, opts)


def eval_tensor_grid(r: TensorApproximant, x_nodes, y_nodes) -> np.ndarray:
    """Evaluate on a product grid; entry (i, j) is r(x_i, y_j)."""
    RA = axis_design_matrix(x_nodes, r.x_spec)
    RB = axis_design_matrix(y_nodes, r.y_spec)
    return RA @ r.coeffs @ RB.T


def eval_tensor(r: TensorApproximant, points, chunk: int = 4096) -> np.ndarray:
    """Evaluate at a list of (x, y) points; returns complex values."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    out = np.empty(len(pts), dtype=complex)
    for lo in range(0, len(pts), chunk):
        sl = slice(lo, min(lo + chunk, len(pts)))
        RA = axis_design_matrix(pts[sl, 0], r.x_spec)
        RB = axis_design_matrix(pts[sl, 1], r.y_spec)
        out[sl] = np.einsum("ij,jk,ik->i", RA, r.coeffs, RB)
    return out


def default_poly_degree(n_q: int) -> int:
    """Smooth-part degree paired with rational degree n_q, round(1.3*sqrt(n_q))."""
    if n_q < 1:
        raise ParameterError(f"n_q must be >= 1, got {n_q}")
    return int(round(1.3 * np.sqrt(n_q)))
