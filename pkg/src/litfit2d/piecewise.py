"""Piecewise tensor-product fitting on quadrilateral meshes.

Each patch is a strictly convex quadrilateral mapped from the unit
reference square by bilinear interpolation of its corners.  The target
function is composed with the patch map and fitted on the reference
square, with pole clusters attached to whichever reference edges carry
the singularity; smooth patches get a plain bivariate Chebyshev fit.
Evaluation locates the owning patch by inverting the bilinear map
(lowest patch index wins on shared edges).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .basis import AxisBasisSpec, PolyFamily
from .errors import LitfitError, ParameterError
from .poles import ClusterSpec, materialize_poles
from .solver import TsvdOptions
from .tensor_fit import (
    GridSpec,
    TensorApproximant,
    eval_tensor,
    eval_tensor_grid,
    fit_tensor,
)

EDGE_NAMES = ("south", "east", "north", "west")
INSIDE_TOL = 1e-10

# reference-square geometry of each named edge: (axis, location)
# south: t = 0, east: s = 1, north: t = 1, west: s = 0
_EDGE_AXIS_LOC = {
    "south": ("t", 0.0),
    "east": ("s", 1.0),
    "north": ("t", 1.0),
    "west": ("s", 0.0),
}


@dataclass(frozen=True)
class QuadPatch:
    """Convex quadrilateral with counterclockwise corners.

    ``singular_edges`` flags the reference edges that carry pole clusters
    after mapping; ``n_levels``/``poly_degree`` are the per-patch fit
    degrees (rational levels are ignored on patches with no flagged edge).
    """

    corners: tuple[tuple[float, float], ...]
    singular_edges: tuple[str, ...] = ()
    n_levels: int = 150
    poly_degree: int = 25

    def __post_init__(self):
        if len(self.corners) != 4:
            raise ParameterError("a patch needs exactly 4 corners")
        for name in self.singular_edges:
            if name not in EDGE_NAMES:
                raise ParameterError(f"unknown edge name {name!r}")
        c = np.asarray(self.corners, dtype=float)
        for i in range(4):
            e1 = c[(i + 1) % 4] - c[i]
            e2 = c[(i + 2) % 4] - c[(i + 1) % 4]
            if e1[0] * e2[1] - e1[1] * e2[0] <= 0:
                raise ParameterError(
                    "corners must form a strictly convex counterclockwise "
                    f"quadrilateral, got {self.corners}"
                )


@dataclass(frozen=True)
class PiecewiseApproximant:
    """Per-patch tensor approximants over a quadrilateral mesh."""

    patches: tuple[tuple[QuadPatch, TensorApproximant], ...] = field(repr=False)


def bilinear_map(patch: QuadPatch, s, t):
    """Map reference coordinates (s, t) in [0,1]^2 to the patch.

    Corners map to corners in order: (0,0), (1,0), (1,1), (0,1).
    """
    c = np.asarray(patch.corners, dtype=float)
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    w0 = (1 - s) * (1 - t)
    w1 = s * (1 - t)
    w2 = s * t
    w3 = (1 - s) * t
    x = w0 * c[0, 0] + w1 * c[1, 0] + w2 * c[2, 0] + w3 * c[3, 0]
    y = w0 * c[0, 1] + w1 * c[1, 1] + w2 * c[2, 1] + w3 * c[3, 1]
    return x, y


_EDGE_SNAP = 1e-15


def _snap_unit(v: np.ndarray) -> np.ndarray:
    """Snap reference coordinates within 1e-15 of an edge onto the edge.

    Inversion roundoff puts points that lie exactly on a patch edge a few
    ulps inside the reference square, below the clustered sample range
    where the rational part is unconstrained; the edge value is the
    correct limit there.
    """
    v = np.where(v < _EDGE_SNAP, 0.0, v)
    return np.where(v > 1.0 - _EDGE_SNAP, 1.0, v)


def _bilinear_coeffs(patch: QuadPatch) -> np.ndarray:
    """Coefficients a[k] of p_k(s,t) = a0 + a1 s + a2 t + a3 s t, k = x, y."""
    c = np.asarray(patch.corners, dtype=float)
    a = np.empty((2, 4))
    for k in range(2):
        a[k, 0] = c[0, k]
        a[k, 1] = c[1, k] - c[0, k]
        a[k, 2] = c[3, k] - c[0, k]
        a[k, 3] = c[0, k] - c[1, k] + c[2, k] - c[3, k]
    return a


def invert_bilinear_points(patch: QuadPatch, x, y):
    """Vectorized bilinear inversion.

    Returns (s, t, inside) arrays; s and t are clipped into [0, 1] and
    only meaningful where ``inside`` is True (membership within 1e-10).
    Eliminating s between the two bilinear equations leaves a scalar
    quadratic in t; affine patches fall through to the linear branch.
    """
    a = _bilinear_coeffs(patch)
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    r0 = a[0, 0] - x
    r1 = a[1, 0] - y
    qa = a[0, 3] * a[1, 2] - a[1, 3] * a[0, 2]
    qb = a[0, 3] * r1 - a[1, 3] * r0 + a[0, 1] * a[1, 2] - a[1, 1] * a[0, 2]
    qc = a[0, 1] * r1 - a[1, 1] * r0
    n = len(x)
    roots = np.full((2, n), np.nan)
    scale = max(abs(qa), float(np.max(np.abs(qb), initial=0.0)), 1e-300)
    if abs(qa) <= 1e-14 * scale:
        with np.errstate(divide="ignore", invalid="ignore"):
            roots[0] = np.where(qb != 0.0, -qc / qb, np.nan)
    else:
        disc = qb * qb - 4.0 * qa * qc
        disc = np.where((disc < 0.0) & (disc > -1e-12 * scale * scale), 0.0, disc)
        ok = disc >= 0.0
        root = np.sqrt(np.where(ok, disc, 0.0))
        roots[0] = np.where(ok, (-qb + root) / (2 * qa), np.nan)
        roots[1] = np.where(ok, (-qb - root) / (2 * qa), np.nan)

    s_out = np.full(n, np.nan)
    t_out = np.full(n, np.nan)
    inside = np.zeros(n, dtype=bool)
    for t in roots:
        t_ok = (t >= -INSIDE_TOL) & (t <= 1.0 + INSIDE_TOL) & ~inside
        if not np.any(t_ok):
            continue
        den_x = a[0, 1] + a[0, 3] * t
        den_y = a[1, 1] + a[1, 3] * t
        use_x = np.abs(den_x) >= np.abs(den_y)
        with np.errstate(divide="ignore", invalid="ignore"):
            s = np.where(
                use_x,
                -(r0 + a[0, 2] * t) / den_x,
                -(r1 + a[1, 2] * t) / den_y,
            )
        s_ok = t_ok & (s >= -INSIDE_TOL) & (s <= 1.0 + INSIDE_TOL)
        s_out[s_ok] = _snap_unit(np.clip(s[s_ok], 0.0, 1.0))
        t_out[s_ok] = _snap_unit(np.clip(t[s_ok], 0.0, 1.0))
        inside |= s_ok
    return s_out, t_out, inside


def inverse_bilinear(patch: QuadPatch, x: float, y: float):
    """Invert the bilinear map at one point.

    Returns (s, t) in [0, 1]^2 (membership tolerance 1e-10, then clipped)
    or None when the point lies outside the patch.
    """
    s, t, inside = invert_bilinear_points(patch, [x], [y])
    if not inside[0]:
        return None
    return float(s[0]), float(t[0])


def _reference_specs(patch: QuadPatch, sigma: float):
    s_clusters, t_clusters = [], []
    for name in patch.singular_edges:
        axis, loc = _EDGE_AXIS_LOC[name]
        ps = materialize_poles(
            ClusterSpec(location=loc, n_levels=patch.n_levels, sigma=sigma)
        )
        (s_clusters if axis == "s" else t_clusters).append(ps)
    poly = PolyFamily("chebyshev", patch.poly_degree, (0.0, 1.0))
    return (
        AxisBasisSpec(poly=poly, clusters=tuple(s_clusters)),
        AxisBasisSpec(poly=poly, clusters=tuple(t_clusters)),
    )


def fit_piecewise(f, patches, grid: GridSpec = None,
                  opts: TsvdOptions = TsvdOptions(),
                  sigma: float = None, threads: int = 1) -> PiecewiseApproximant:
    """Fit f patch by patch on the reference square.

    ``grid`` defaults to the per-patch degrees with the standard
    oversampling; pass one to override all patches at once.  Patch fits
    are independent; ``threads`` > 1 runs them on a thread pool (the
    result does not depend on scheduling).
    """
    from .poles import DEFAULT_SIGMA

    sigma = DEFAULT_SIGMA if sigma is None else sigma

    def fit_one(idx_patch):
        idx, patch = idx_patch
        s_spec, t_spec = _reference_specs(patch, sigma)
        g = grid or GridSpec.for_degrees(patch.n_levels, patch.poly_degree)

        def gf(s, t):
            x, y = bilinear_map(patch, s, t)
            return f(x, y)

        try:
            return patch, fit_tensor(gf, s_spec, t_spec, g, opts)
        except LitfitError as exc:
            raise type(exc)(f"patch {idx}: {exc}") from exc

    jobs = list(enumerate(patches))
    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            fitted = list(pool.map(fit_one, jobs))
    else:
        fitted = [fit_one(j) for j in jobs]
    return PiecewiseApproximant(patches=tuple(fitted))


def locate_patch(pa: PiecewiseApproximant, x: float, y: float):
    """Index of the owning patch and its reference coordinates, or None."""
    for idx, (patch, _) in enumerate(pa.patches):
        st = inverse_bilinear(patch, x, y)
        if st is not None:
            return idx, st
    return None


def eval_piecewise(pa: PiecewiseApproximant, points):
    """Evaluate at (x, y) points.

    Ownership ties on shared edges go to the lowest patch index.
    Returns (values, owner) where owner[i] is the owning patch index or
    -1 for points covered by no patch (their value is NaN).
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    values = np.full(len(pts), np.nan, dtype=complex)
    owner = np.full(len(pts), -1, dtype=int)
    st = np.empty((len(pts), 2))
    for idx, (patch, _) in enumerate(pa.patches):
        todo = owner < 0
        if not np.any(todo):
            break
        s, t, inside = invert_bilinear_points(patch, pts[todo, 0], pts[todo, 1])
        claimed = np.flatnonzero(todo)[inside]
        owner[claimed] = idx
        st[claimed, 0] = s[inside]
        st[claimed, 1] = t[inside]
    for idx in range(len(pa.patches)):
        mask = owner == idx
        if np.any(mask):
            values[mask] = eval_tensor(pa.patches[idx][1], st[mask])
    return values, owner


def patch_reference_errors(pa: PiecewiseApproximant, f, n: int = 500) -> float:
    """Max |f - r| over an n x n reference grid on every patch."""
    worst = 0.0
    g = np.linspace(0.0, 1.0, n)
    for patch, approx in pa.patches:
        S, T = np.meshgrid(g, g, indexing="ij")
        X, Y = bilinear_map(patch, S, T)
        vals = eval_tensor_grid(approx, g, g)
        worst = max(worst, float(np.abs(f(X, Y) - vals).max()))
    return worst


def diagonal_mesh(n_levels: int = 150, poly_degree: int = 25):
    """Six-quad barycentric mesh of the unit square split along x = y.

    Each of the two triangles (below and above the diagonal) is split
    into three quadrilaterals by joining its centroid to the edge
    midpoints; the four quads adjacent to the diagonal are flagged on
    the edge that lies on it.
    """

    def bary_quads(v0, v1, v2):
        v0, v1, v2 = (np.asarray(v, dtype=float) for v in (v0, v1, v2))
        g = (v0 + v1 + v2) / 3.0
        m01, m12, m20 = (v0 + v1) / 2, (v1 + v2) / 2, (v2 + v0) / 2
        return [
            (v0, m01, g, m20),
            (v1, m12, g, m01),
            (v2, m20, g, m12),
        ]

    lower = bary_quads((0, 0), (1, 0), (1, 1))   # below the diagonal
    upper = bary_quads((0, 0), (1, 1), (0, 1))   # above the diagonal
    flags = [
        ("west",),   # lower quad at (0,0): its west edge lies on x = y
        (),          # lower quad at (1,0): away from the diagonal
        ("south",),  # lower quad at (1,1): its south edge lies on x = y
        ("south",),  # upper quad at (0,0)
        ("west",),   # upper quad at (1,1)
        (),          # upper quad at (0,1)
    ]
    patches = []
    for quad, edges in zip(lower + upper, flags):
        patches.append(
            QuadPatch(
                corners=tuple((float(p[0]), float(p[1])) for p in quad),
                singular_edges=edges,
                n_levels=n_levels,
                poly_degree=poly_degree,
            )
        )
    return patches
