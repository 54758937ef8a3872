import numpy as np
import pytest

from litfit2d.basis import chebyshev_matrix
from litfit2d.curved import (
    CurvedApproximant,
    build_curved_grid,
    curved_design_matrix,
    eval_curved,
    eval_poly_q,
    fit_curved,
    fit_diagonal,
    grad_q,
    poly_table,
    trace_curve,
)
from litfit2d.errors import DataError, MemoryGuardError, ParameterError
from litfit2d.poles import ClusterSpec, materialize_poles
from litfit2d.solver import TsvdOptions, tsvd_dense_solve

DIAG = poly_table([(1, 0, 1.0), (0, 1, -1.0)])
CIRCLE = poly_table([(2, 0, 1.0), (0, 2, 1.0), (0, 0, -1.0)])
ELLIPTIC = poly_table([(3, 0, 1.0), (1, 0, -2.0), (0, 0, 1.0), (0, 2, -1.0)])
CROSS = poly_table([(1, 1, 1.0), (1, 0, -0.5), (0, 1, -0.5), (0, 0, 0.25)])


def curve_of(table, domain, resolution=256):
    return trace_curve(table, domain, resolution)


def test_poly_eval_and_gradient():
    diag = curve_of(DIAG, ((0, 1), (0, 1)), 64)
    assert eval_poly_q(diag, 0.3, 0.3) == 0.0
    assert grad_q(diag, 0.3, 0.3) == (1.0, -1.0)
    circ = curve_of(CIRCLE, ((-2, 2), (-2, 2)), 64)
    assert eval_poly_q(circ, 1.0, 0.0) == 0.0
    gx, gy = grad_q(circ, 1.0, 0.0)
    assert (gx, gy) == (2.0, 0.0)
    ell = curve_of(ELLIPTIC, ((-2, 2), (-2, 2)), 64)
    assert eval_poly_q(ell, 1.0, 0.0) == 0.0


def test_poly_table_validation():
    with pytest.raises(ParameterError):
        poly_table([])
    with pytest.raises(ParameterError):
        poly_table([(11, 0, 1.0)])
    with pytest.raises(ParameterError):
        poly_table([(-1, 0, 1.0)])
    with pytest.raises(ParameterError):
        trace_curve([(1, 0, 1.0)], ((0, 1), (0, 1)))  # triples, not a table


def test_trace_circle():
    curve = curve_of(CIRCLE, ((-2, 2), (-2, 2)))
    assert len(curve.components) == 1
    assert curve.components[0].closed
    pts = curve.components[0].points
    assert np.abs(np.hypot(pts[:, 0], pts[:, 1]) - 1.0).max() < 1e-12
    q = eval_poly_q(curve, pts[:, 0], pts[:, 1])
    assert np.abs(q).max() <= 1e-12 * curve.scale
    normals = curve.components[0].normals
    assert np.abs(np.hypot(normals[:, 0], normals[:, 1]) - 1.0).max() < 1e-12
    # normals align with the gradient, which points radially outward here
    radial = pts / np.hypot(pts[:, 0], pts[:, 1])[:, None]
    assert np.abs(normals - radial).max() < 1e-10


def test_trace_elliptic_two_components():
    curve = curve_of(ELLIPTIC, ((-2, 2), (-2, 2)), 512)
    assert len(curve.components) == 2
    for comp in curve.components:
        q = eval_poly_q(curve, comp.points[:, 0], comp.points[:, 1])
        assert np.abs(q).max() <= 1e-12 * curve.scale


def test_trace_self_intersecting_covers_both_lines():
    curve = curve_of(CROSS, ((0, 1), (0, 1)), 128)
    pts = np.vstack([c.points for c in curve.components])
    for probe in [(0.2, 0.5), (0.8, 0.5), (0.5, 0.2), (0.5, 0.8)]:
        d = np.hypot(pts[:, 0] - probe[0], pts[:, 1] - probe[1]).min()
        assert d < 0.02


def test_trace_empty_when_no_crossing():
    curve = trace_curve(poly_table([(0, 0, 1.0), (2, 0, 1.0)]),
                        ((0, 1), (0, 1)), 64)
    assert curve.components == ()


def test_trace_rejects_low_resolution():
    with pytest.raises(ParameterError):
        trace_curve(DIAG, ((0, 1), (0, 1)), 16)


def test_build_grid_pure_chebyshev_when_no_curve_points():
    curve = curve_of(CIRCLE, ((-2, 2), (-2, 2)), 64)
    pts = build_curved_grid(curve, 0, 4, 5, 2 * np.pi)
    assert len(pts) == 25


def test_build_grid_hand_geometry_diagonal():
    curve = curve_of(DIAG, ((0, 1), (0, 1)), 64)
    # the single Chebyshev point (0.5, 0.5) sits exactly on the curve and is
    # dropped, leaving 2 offsets on each side of one resampled curve point
    pts = build_curved_grid(curve, 1, 2, 1, 2 * np.pi)
    assert len(pts) == 4
    d = (pts[:, 0] - pts[:, 1]) / np.sqrt(2.0)
    along = (pts[:, 0] + pts[:, 1]) / 2.0
    assert np.allclose(along, along[0], atol=1e-12)
    assert np.sum(d > 0) == 2 and np.sum(d < 0) == 2


def test_on_curve_rational_columns_reduce_to_polynomials():
    curve = curve_of(CIRCLE, ((-2, 2), (-2, 2)))
    pts = curve.components[0].points[::8]
    levels = materialize_poles(ClusterSpec(location=0.0, n_levels=2))
    np_deg, ns_deg = 2, 1
    A = curved_design_matrix(curve, levels, np_deg, ns_deg, pts, "general")
    tx = chebyshev_matrix(pts[:, 0], np_deg, (-2, 2))
    ty = chebyshev_matrix(pts[:, 1], np_deg, (-2, 2))
    block = np.einsum("ik,il->ikl", tx, ty).reshape(len(pts), -1)
    for j in range(len(levels)):
        cols = A[:, j * block.shape[1]:(j + 1) * block.shape[1]]
        assert np.abs(cols + block).max() < 1e-12


def test_column_count_and_order():
    curve = curve_of(DIAG, ((0, 1), (0, 1)), 64)
    levels = materialize_poles(ClusterSpec(location=0.0, n_levels=1))
    pts = np.array([[0.2, 0.6]])
    A = curved_design_matrix(curve, levels, 0, 0, pts, "general")
    assert A.shape == (1, 2 + 1)
    A = curved_design_matrix(curve, levels, 3, 2, pts, "diagonal")
    assert A.shape == (1, 2 * 4 + 9)


def test_exact_span_single_level():
    levels = materialize_poles(ClusterSpec(location=0.0, n_levels=1))
    p1 = levels.offsets[0]

    def f(x, y):
        return (1.0 / ((x - y) - p1)).real

    ca = fit_diagonal(f, nq=1, np_deg=0, ns_deg=0)
    assert ca.report.residual_frobenius <= 1e-10


def test_smooth_function_without_levels():
    curve = curve_of(CIRCLE, ((-1, 1), (-1, 1)), 64)
    f = lambda x, y: np.cos(x) * np.exp(y)
    ca = fit_curved(f, curve, nq=0, np_deg=0, ns_deg=10)
    rng = np.random.default_rng(2)
    pts = rng.uniform(-1, 1, (400, 2))
    err = np.abs(eval_curved(ca, pts) - f(pts[:, 0], pts[:, 1])).max()
    assert err < 1e-8


def test_eval_trivial_coefficients():
    ca = fit_diagonal(lambda x, y: np.ones_like(x), nq=1, np_deg=0, ns_deg=1)
    zero = CurvedApproximant(curve=ca.curve, levels=ca.levels, np_deg=ca.np_deg,
                             ns_deg=ca.ns_deg,
                             coeffs=np.zeros_like(ca.coeffs), form=ca.form)
    pts = np.array([[0.3, 0.8], [0.9, 0.2]])
    assert np.all(eval_curved(zero, pts) == 0)
    single = np.zeros_like(ca.coeffs)
    single[len(ca.levels) * (ca.np_deg + 1)] = 1.0  # smooth (0, 0) column
    const = CurvedApproximant(curve=ca.curve, levels=ca.levels,
                              np_deg=ca.np_deg, ns_deg=ca.ns_deg,
                              coeffs=single, form=ca.form)
    assert np.allclose(eval_curved(const, pts), 1.0, atol=1e-15)


def test_diagonal_within_general_span():
    # identical sample data: the general-form residual cannot exceed the
    # diagonal-form residual (its basis contains the diagonal one) + slack
    def f(x, y):
        with np.errstate(divide="ignore"):
            return np.log(1.0 / np.abs(x - y)) + x

    curve = curve_of(DIAG, ((0, 1), (0, 1)), 64)
    nq, np_deg, ns_deg = 6, 2, 2
    levels = materialize_poles(ClusterSpec(location=0.0, n_levels=nq))
    pts = build_curved_grid(curve, 8, 2 * nq, 10, 2 * np.pi, n_levels=nq)
    vals = f(pts[:, 0], pts[:, 1])
    A_diag = curved_design_matrix(curve, levels, np_deg, ns_deg, pts, "diagonal")
    A_gen = curved_design_matrix(curve, levels, 2 * np_deg, ns_deg, pts, "general")
    _, rep_d = tsvd_dense_solve(A_diag, vals, 1e-14)
    _, rep_g = tsvd_dense_solve(A_gen, vals, 1e-14)
    assert rep_g.residual_frobenius <= rep_d.residual_frobenius + 1e-8


def test_imaginary_part_bounded_at_samples():
    def f(x, y):
        with np.errstate(divide="ignore"):
            return np.log(1.0 / np.abs(x - y))

    ca = fit_diagonal(f, nq=8, np_deg=2, ns_deg=4)
    curve = ca.curve
    pts = build_curved_grid(curve, 6, 16, 8, 2 * np.pi, n_levels=8)
    vals = eval_curved(ca, pts)
    err = np.abs(f(pts[:, 0], pts[:, 1]) - vals)
    assert np.all(np.abs(vals.imag) <= err + 1e-18)


def test_memory_guard():
    curve = curve_of(ELLIPTIC, ((-2, 2), (-2, 2)), 64)
    with pytest.raises(MemoryGuardError):
        fit_curved(lambda x, y: x, curve, nq=50, np_deg=60, ns_deg=3)
    # a tiny explicit cap trips even on small problems
    with pytest.raises(MemoryGuardError):
        fit_diagonal(lambda x, y: x, nq=2, np_deg=1, ns_deg=1, max_entries=10)


def test_non_finite_sample_is_fatal():
    bad = lambda x, y: np.sqrt(x - 0.5)  # NaN on half the domain
    with pytest.raises(DataError):
        fit_diagonal(bad, nq=2, np_deg=1, ns_deg=1)


def test_dropped_vertex_counter_is_int():
    curve = curve_of(ELLIPTIC, ((-2, 2), (-2, 2)), 128)
    assert isinstance(curve.dropped_vertices, int)
    assert curve.dropped_vertices >= 0
