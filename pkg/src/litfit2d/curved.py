"""Global rational fitting for singularities along polynomial zero curves.

The singular set is the zero level of a bivariate polynomial Q(x, y).
Denominators Q(x, y) - p_j with imaginary shifts p_j clustering towards
zero act as curves of poles closing in on the singularity in the normal
direction.  Numerators are bivariate Chebyshev products (general form) or
univariate Chebyshev in x+y (compact diagonal form for Q = x - y), plus a
smooth bivariate polynomial block.  The resulting single large
least-squares system is solved with the dense truncated-SVD solver.

Curve geometry is extracted by marching squares on a sign grid followed
by Newton projection of every vertex onto Q = 0 along the gradient.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .basis import chebyshev_matrix
from .errors import DataError, MemoryGuardError, ParameterError
from .poles import ClusterSpec, PoleSet, materialize_poles
from .solver import FitReport, TsvdOptions, tsvd_dense_solve
from .tensor_fit import chebyshev_points

MAX_Q_DEGREE = 10
DEFAULT_RESOLUTION = 512
DEFAULT_ENTRY_CAP = int(2e8)


@dataclass(frozen=True)
class CurveComponent:
    """One traced polyline: refined on-curve points with unit normals."""

    points: np.ndarray = field(repr=False)   # (n, 2)
    normals: np.ndarray = field(repr=False)  # (n, 2), aligned with grad Q
    closed: bool = False

    def __len__(self):
        return len(self.points)


@dataclass(frozen=True)
class ImplicitCurve:
    """Zero level set of a bivariate polynomial on a rectangle.

    ``q_coeffs[i, j]`` multiplies x**i * y**j.  ``scale`` is max |Q| over
    a coarse grid on the domain, used to make residual tolerances
    dimensionless.  ``dropped_vertices`` counts marching-squares vertices
    whose Newton projection failed to converge.
    """

    q_coeffs: np.ndarray = field(repr=False)
    domain: tuple[tuple[float, float], tuple[float, float]]
    components: tuple[CurveComponent, ...] = ()
    scale: float = 1.0
    dropped_vertices: int = 0


def poly_table(terms) -> np.ndarray:
    """Dense coefficient table from [(i, j, c), ...] monomial terms."""
    terms = list(terms)
    if not terms:
        raise ParameterError("polynomial needs at least one term")
    deg_x = max(t[0] for t in terms)
    deg_y = max(t[1] for t in terms)
    if deg_x > MAX_Q_DEGREE or deg_y > MAX_Q_DEGREE:
        raise ParameterError(
            f"polynomial degree ({deg_x}, {deg_y}) exceeds the supported "
            f"maximum {MAX_Q_DEGREE}"
        )
    if min(t[0] for t in terms) < 0 or min(t[1] for t in terms) < 0:
        raise ParameterError("monomial exponents must be nonnegative")
    table = np.zeros((deg_x + 1, deg_y + 1))
    for i, j, c in terms:
        table[i, j] += c
    return table


def eval_poly_q(curve: ImplicitCurve, x, y):
    """Evaluate Q at points (vectorized)."""
    return np.polynomial.polynomial.polyval2d(
        np.asarray(x, dtype=float), np.asarray(y, dtype=float), curve.q_coeffs
    )


def grad_q(curve: ImplicitCurve, x, y):
    """Analytic partial derivatives (dQ/dx, dQ/dy) at points."""
    c = curve.q_coeffs
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    cx = c[1:, :] * np.arange(1, c.shape[0])[:, None] if c.shape[0] > 1 else np.zeros((1, 1))
    cy = c[:, 1:] * np.arange(1, c.shape[1])[None, :] if c.shape[1] > 1 else np.zeros((1, 1))
    return (
        np.polynomial.polynomial.polyval2d(x, y, cx),
        np.polynomial.polynomial.polyval2d(x, y, cy),
    )


def _poly_scale(table: np.ndarray, domain) -> float:
    (a1, b1), (a2, b2) = domain
    gx = np.linspace(a1, b1, 33)
    gy = np.linspace(a2, b2, 33)
    X, Y = np.meshgrid(gx, gy, indexing="ij")
    return float(np.abs(np.polynomial.polynomial.polyval2d(X, Y, table)).max())


def _newton_project(curve: ImplicitCurve, pts: np.ndarray,
                    tol: float, max_iter: int = 20):
    """Project points onto Q = 0 along grad Q; returns (points, converged)."""
    p = pts.copy()
    for _ in range(max_iter):
        q = eval_poly_q(curve, p[:, 0], p[:, 1])
        if np.all(np.abs(q) <= tol):
            break
        gx, gy = grad_q(curve, p[:, 0], p[:, 1])
        g2 = gx * gx + gy * gy
        step = np.where(g2 > 0, q / np.where(g2 > 0, g2, 1.0), 0.0)
        move = np.abs(q) > tol
        p[move, 0] -= (step * gx)[move]
        p[move, 1] -= (step * gy)[move]
    q = eval_poly_q(curve, p[:, 0], p[:, 1])
    return p, np.abs(q) <= tol


def _cell_segments(neg, V, xs, ys, table):
    """Marching-squares segments as pairs of edge keys, plus crossing points.

    Edge keys: ("x", i, j) is the edge from node (i, j) to (i+1, j);
    ("y", i, j) runs from (i, j) to (i, j+1).
    """
    crossings = {}

    def crossing(kind, i, j):
        key = (kind, i, j)
        if key in crossings:
            return key
        if kind == "x":
            v1, v2 = V[i, j], V[i + 1, j]
            t = v1 / (v1 - v2)
            pt = (xs[i] + t * (xs[i + 1] - xs[i]), ys[j])
        else:
            v1, v2 = V[i, j], V[i, j + 1]
            t = v1 / (v1 - v2)
            pt = (xs[i], ys[j] + t * (ys[j + 1] - ys[j]))
        crossings[key] = pt
        return key

    segments = []
    nx, ny = neg.shape
    cross_x = neg[:-1, :] != neg[1:, :]
    cross_y = neg[:, :-1] != neg[:, 1:]
    for i in range(nx - 1):
        for j in range(ny - 1):
            edges = []
            if cross_x[i, j]:
                edges.append(("S", crossing("x", i, j)))
            if cross_y[i + 1, j]:
                edges.append(("E", crossing("y", i + 1, j)))
            if cross_x[i, j + 1]:
                edges.append(("N", crossing("x", i, j + 1)))
            if cross_y[i, j]:
                edges.append(("W", crossing("y", i, j)))
            if len(edges) == 2:
                segments.append((edges[0][1], edges[1][1]))
            elif len(edges) == 4:
                # saddle cell: pair crossings by the sign at the center
                keys = dict(edges)
                cx = 0.5 * (xs[i] + xs[i + 1])
                cy = 0.5 * (ys[j] + ys[j + 1])
                center_neg = (
                    np.polynomial.polynomial.polyval2d(cx, cy, table) < 0.0
                )
                if center_neg == neg[i, j]:
                    segments.append((keys["S"], keys["E"]))
                    segments.append((keys["W"], keys["N"]))
                else:
                    segments.append((keys["S"], keys["W"]))
                    segments.append((keys["E"], keys["N"]))
    return segments, crossings


def _chain_segments(segments):
    """Group segments into ordered chains of edge keys."""
    adj = {}
    for a, b in segments:
        adj.setdefault(a, []).append(b)
        adj.setdefault(b, []).append(a)
    visited = set()
    chains = []

    def walk(start, nxt):
        chain = [start, nxt]
        visited.add(frozenset((start, nxt)))
        while True:
            cur, prev = chain[-1], chain[-2]
            step = None
            for cand in adj[cur]:
                if frozenset((cur, cand)) not in visited:
                    step = cand
                    break
            if step is None:
                return chain, False
            visited.add(frozenset((cur, step)))
            chain.append(step)
            if step == chain[0]:
                return chain[:-1], True

    # open chains first (degree-1 endpoints), then remaining loops
    for node in [n for n, nb in adj.items() if len(nb) == 1]:
        for nxt in adj[node]:
            if frozenset((node, nxt)) not in visited:
                chains.append(walk(node, nxt))
    for a, b in segments:
        if frozenset((a, b)) not in visited:
            chains.append(walk(a, b))
    return chains


def trace_curve(q_coeffs, domain, resolution: int = DEFAULT_RESOLUTION) -> ImplicitCurve:
    """Trace Q = 0 on a rectangle by marching squares plus Newton refinement.

    Vertices whose Newton projection does not reach |Q| <= 1e-13 * scale(Q)
    within 20 iterations are dropped and counted.  An empty component list
    is a valid result when the curve misses the domain.
    """
    if resolution < 32:
        raise ParameterError(f"resolution must be >= 32, got {resolution}")
    table = np.asarray(q_coeffs, dtype=float)
    if table.ndim != 2:
        raise ParameterError(
            "q_coeffs must be a dense 2D coefficient table; build one from "
            "monomial terms with poly_table()"
        )
    if table.shape[0] > MAX_Q_DEGREE + 1 or table.shape[1] > MAX_Q_DEGREE + 1:
        raise ParameterError(
            f"polynomial degree {(table.shape[0] - 1, table.shape[1] - 1)} "
            f"exceeds the supported maximum {MAX_Q_DEGREE}"
        )
    (a1, b1), (a2, b2) = domain
    if not (b1 > a1 and b2 > a2):
        raise ParameterError(f"degenerate domain {domain}")
    scale = _poly_scale(table, domain)
    if scale == 0.0:
        raise ParameterError("polynomial vanishes identically on the domain")
    base = ImplicitCurve(q_coeffs=table, domain=domain, scale=scale)

    xs = np.linspace(a1, b1, resolution)
    ys = np.linspace(a2, b2, resolution)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    V = np.polynomial.polynomial.polyval2d(X, Y, table)
    segments, crossings = _cell_segments(V < 0, V, xs, ys, table)
    chains = _chain_segments(segments)

    tol = 1e-13 * scale
    components = []
    dropped = 0
    for keys, closed in chains:
        raw = np.array([crossings[k] for k in keys])
        pts, ok = _newton_project(base, raw, tol)
        dropped += int(np.sum(~ok))
        pts = pts[ok]
        if len(pts) < 2:
            continue
        gx, gy = grad_q(base, pts[:, 0], pts[:, 1])
        norm = np.hypot(gx, gy)
        keep = norm > 0
        pts = pts[keep]
        normals = np.column_stack([gx[keep] / norm[keep], gy[keep] / norm[keep]])
        components.append(CurveComponent(points=pts, normals=normals, closed=closed))
    return ImplicitCurve(
        q_coeffs=table,
        domain=domain,
        components=tuple(components),
        scale=scale,
        dropped_vertices=dropped,
    )


def _resample_component(curve: ImplicitCurve, comp: CurveComponent, m: int):
    """m arclength-uniform points (midpoint rule) on a component, reprojected."""
    pts = comp.points
    if comp.closed:
        pts = np.vstack([pts, pts[:1]])
    seg = np.diff(pts, axis=0)
    seg_len = np.hypot(seg[:, 0], seg[:, 1])
    cum = np.concatenate([[0.0], np.cumsum(seg_len)])
    total = cum[-1]
    if total == 0.0:
        return comp.points[:1], comp.normals[:1]
    targets = (np.arange(m) + 0.5) * total / m
    x = np.interp(targets, cum, pts[:, 0])
    y = np.interp(targets, cum, pts[:, 1])
    out = np.column_stack([x, y])
    out, ok = _newton_project(curve, out, 1e-13 * curve.scale)
    out = out[ok]
    gx, gy = grad_q(curve, out[:, 0], out[:, 1])
    norm = np.hypot(gx, gy)
    keep = norm > 0
    out = out[keep]
    normals = np.column_stack([gx[keep] / norm[keep], gy[keep] / norm[keep]])
    return out, normals


def _normal_offsets(m: int, sigma: float, n_levels: int, cap: float) -> np.ndarray:
    """m tapered offsets spanning [deepest pole modulus, cap].

    The tapered spacing law is kept but rescaled in log space so that the
    deepest sample sits at the deepest pole modulus exp(-sigma*(sqrt(n)-1))
    rather than decades below it: samples deeper than the pole family can
    resolve carry unfittable variation that only poisons the least squares.
    """
    i = np.arange(1, m + 1, dtype=float)
    pos = (np.sqrt(m) - np.sqrt(i)) / max(np.sqrt(m) - 1.0, 1e-15)
    p_min = np.exp(-sigma * (np.sqrt(n_levels) - 1.0))
    lo = p_min if p_min < cap else cap * p_min
    return cap * (lo / cap) ** pos


def build_curved_grid(curve: ImplicitCurve, m_curve: int, m_cluster: int,
                      m_cheb: int, sigma: float,
                      n_levels: int = None) -> np.ndarray:
    """Chebyshev product grid plus points clustering normal to the curve.

    At each of m_curve arclength-uniform points per component, m_cluster
    tapered offsets are laid out along +/- the unit normal, capped by L =
    min(half the shorter domain side, distance to the domain boundary)
    and reaching down to the deepest pole modulus of an n_levels cluster
    (n_levels defaults to m_cluster // 2, matching the m_cluster = 2 * nq
    sampling rule).  Offset points outside the domain, or collapsing (in
    floating point) onto the curve point itself, are discarded, as are
    points where Q evaluates to exactly zero: the singular set itself
    carries no samples because f need not be defined there.
    """
    if n_levels is None:
        n_levels = max(1, m_cluster // 2)
    (a1, b1), (a2, b2) = curve.domain
    gx = chebyshev_points(m_cheb, (a1, b1))
    gy = chebyshev_points(m_cheb, (a2, b2))
    X, Y = np.meshgrid(gx, gy, indexing="ij")
    parts = [np.column_stack([X.ravel(), Y.ravel()])]
    if m_curve > 0 and curve.components:
        half_min_side = 0.5 * min(b1 - a1, b2 - a2)
        for comp in curve.components:
            pts, normals = _resample_component(curve, comp, m_curve)
            for (px, py), (nx, ny) in zip(pts, normals):
                cap = min(
                    half_min_side,
                    px - a1, b1 - px, py - a2, b2 - py,
                )
                if cap <= 0.0:
                    continue
                d = _normal_offsets(m_cluster, sigma, n_levels, cap)
                for sign in (1.0, -1.0):
                    cx = px + sign * d * nx
                    cy = py + sign * d * ny
                    keep = (
                        (cx >= a1) & (cx <= b1) & (cy >= a2) & (cy <= b2)
                        & ~((cx == px) & (cy == py))
                    )
                    parts.append(np.column_stack([cx[keep], cy[keep]]))
    pts = np.vstack(parts)
    on_curve = eval_poly_q(curve, pts[:, 0], pts[:, 1]) == 0.0
    return pts[~on_curve]


@dataclass(frozen=True)
class CurvedApproximant:
    """Fitted curve-clustered rational approximant.

    ``form`` is "general" (bivariate tensor numerators per shift) or
    "diagonal" (univariate numerators in x+y for Q = x - y).  Coefficient
    length is len(levels)*(np_deg+1)**2 + (ns_deg+1)**2 for the general
    form and len(levels)*(np_deg+1) + (ns_deg+1)**2 for the diagonal one.
    """

    curve: ImplicitCurve
    levels: PoleSet
    np_deg: int
    ns_deg: int
    coeffs: np.ndarray = field(repr=False)
    form: str = "general"
    report: FitReport = None

    @property
    def n_columns(self) -> int:
        per_shift = (self.np_deg + 1) ** 2 if self.form == "general" else self.np_deg + 1
        return len(self.levels) * per_shift + (self.ns_deg + 1) ** 2


def _diag_interval(domain):
    (a1, b1), (a2, b2) = domain
    return (a1 + a2, b1 + b2)


def curved_design_matrix(curve: ImplicitCurve, levels: PoleSet, np_deg: int,
                         ns_deg: int, points, form: str = "general") -> np.ndarray:
    """Design matrix with columns (j, k, l) for the rational block, then (k, l).

    Rational entries are p_j * P_k(x) * P_l(y) / (Q(x, y) - p_j) in the
    general form; the diagonal form replaces P_k(x) P_l(y) by P_k(x + y)
    scaled over the range of x + y on the domain.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    (a1, b1), (a2, b2) = curve.domain
    q = eval_poly_q(curve, pts[:, 0], pts[:, 1])
    shifts = levels.offsets
    blocks = []
    if form == "general":
        tx = chebyshev_matrix(pts[:, 0], np_deg, (a1, b1))
        ty = chebyshev_matrix(pts[:, 1], np_deg, (a2, b2))
        numer = np.einsum("ik,il->ikl", tx, ty).reshape(len(pts), -1)
    elif form == "diagonal":
        numer = chebyshev_matrix(pts[:, 0] + pts[:, 1], np_deg, _diag_interval(curve.domain))
    else:
        raise ParameterError(f"unknown form {form!r}")
    for p in shifts:
        den = q - p
        blocks.append((p / den)[:, None] * numer)
    sx = chebyshev_matrix(pts[:, 0], ns_deg, (a1, b1))
    sy = chebyshev_matrix(pts[:, 1], ns_deg, (a2, b2))
    blocks.append(np.einsum("ik,il->ikl", sx, sy).reshape(len(pts), -1))
    return np.hstack([np.asarray(b, dtype=complex) for b in blocks])


def _guard(n_rows: int, n_cols: int, max_entries: int):
    if n_rows * n_cols > max_entries:
        raise MemoryGuardError(
            f"design matrix would hold {n_rows}x{n_cols} = "
            f"{n_rows * n_cols:.3g} entries, above the cap {max_entries:.3g}; "
            "reduce the degrees or raise max_entries"
        )


def _sample_points(f, pts: np.ndarray) -> np.ndarray:
    try:
        vals = np.asarray(f(pts[:, 0], pts[:, 1]), dtype=complex)
        if vals.shape != (len(pts),):
            raise TypeError
    except (TypeError, ValueError):
        vals = np.array([f(x, y) for x, y in pts], dtype=complex)
    bad = ~np.isfinite(vals)
    if np.any(bad):
        i = int(np.argmax(bad))
        raise DataError(
            f"non-finite sample value at point ({pts[i, 0]!r}, {pts[i, 1]!r})"
        )
    return vals


def _levels_for(nq: int, sigma: float) -> PoleSet:
    """Conjugate-pair shifts for nq clustering levels (empty for nq = 0)."""
    if nq == 0:
        return PoleSet(offsets=np.empty(0, dtype=complex), spec=None)
    return materialize_poles(ClusterSpec(location=0.0, n_levels=nq, sigma=sigma))


def _fit_points(f, curve, levels, np_deg, ns_deg, pts, opts, form, max_entries):
    per_shift = (np_deg + 1) ** 2 if form == "general" else np_deg + 1
    n_cols = len(levels) * per_shift + (ns_deg + 1) ** 2
    _guard(len(pts), n_cols, max_entries)
    vals = _sample_points(f, pts)
    A = curved_design_matrix(curve, levels, np_deg, ns_deg, pts, form)
    c, report = tsvd_dense_solve(A, vals, opts.epsilon)
    return CurvedApproximant(
        curve=curve, levels=levels, np_deg=np_deg, ns_deg=ns_deg,
        coeffs=c, form=form, report=report,
    )


def fit_curved(f, curve: ImplicitCurve, nq: int, np_deg: int, ns_deg: int,
               sigma: float = None, opts: TsvdOptions = TsvdOptions(),
               m_curve: int = None, m_cluster: int = None, m_cheb: int = None,
               max_entries: int = DEFAULT_ENTRY_CAP) -> CurvedApproximant:
    """Fit the general curve-clustered form.

    nq counts clustering levels; the shifts are the conjugate pairs
    +/- i e_j, so the rational block has 2*nq*(np_deg+1)**2 columns.
    Sampling defaults: m_curve = 20 points per component, m_cluster =
    2*nq offsets per normal direction, m_cheb = max(2*np_deg, 2*(ns_deg+1))
    Chebyshev points per axis.
    """
    from .poles import DEFAULT_SIGMA

    sigma = DEFAULT_SIGMA if sigma is None else sigma
    m_curve = (20 if nq > 0 else 0) if m_curve is None else m_curve
    m_cluster = max(2 * nq, 2) if m_cluster is None else m_cluster
    m_cheb = max(2 * np_deg, 2 * (ns_deg + 1)) if m_cheb is None else m_cheb
    levels = _levels_for(nq, sigma)
    pts = build_curved_grid(curve, m_curve, m_cluster, m_cheb, sigma,
                            n_levels=max(nq, 1))
    return _fit_points(f, curve, levels, np_deg, ns_deg, pts, opts,
                       "general", max_entries)


def fit_diagonal(f, nq: int, np_deg: int, ns_deg: int, sigma: float = None,
                 opts: TsvdOptions = TsvdOptions(),
                 domain=((0.0, 1.0), (0.0, 1.0)),
                 m_curve: int = None, m_cluster: int = None, m_cheb: int = None,
                 max_entries: int = DEFAULT_ENTRY_CAP) -> CurvedApproximant:
    """Fit the compact diagonal form for a singularity along x = y.

    Numerators are Chebyshev in x + y (constant along the normal
    direction of the diagonal).  Sampling defaults follow the same
    oversampling rules with m_curve = 2*np_deg curve points.
    """
    from .poles import DEFAULT_SIGMA

    sigma = DEFAULT_SIGMA if sigma is None else sigma
    m_curve = max(2 * np_deg, 2) if m_curve is None else m_curve
    m_cluster = max(2 * nq, 2) if m_cluster is None else m_cluster
    m_cheb = 2 * max(ns_deg, 1) if m_cheb is None else m_cheb
    curve = trace_curve(poly_table([(1, 0, 1.0), (0, 1, -1.0)]), domain)
    levels = _levels_for(nq, sigma)
    pts = build_curved_grid(curve, m_curve, m_cluster, m_cheb, sigma,
                            n_levels=max(nq, 1))
    return _fit_points(f, curve, levels, np_deg, ns_deg, pts, opts,
                       "diagonal", max_entries)


def eval_curved(ca: CurvedApproximant, points, chunk: int = None) -> np.ndarray:
    """Evaluate the stored form at (x, y) points; returns complex values."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if chunk is None:
        chunk = max(64, min(8192, int(5e6 / max(1, ca.n_columns))))
    out = np.empty(len(pts), dtype=complex)
    for lo in range(0, len(pts), chunk):
        sl = slice(lo, min(lo + chunk, len(pts)))
        A = curved_design_matrix(
            ca.curve, ca.levels, ca.np_deg, ca.ns_deg, pts[sl], ca.form
        )
        out[sl] = A @ ca.coeffs
    return out
