"""One-dimensional basis families and per-axis design matrices.

An axis basis is a set of clustered partial fractions (one block per
singularity on that axis) followed by a smooth polynomial block, either
Chebyshev on an interval or a real Fourier basis on [-pi, pi).  The
partial fractions carry the pole in the numerator, q/(x - q), so every
basis function is O(1) on the axis and equals -1 exactly at the
singularity location.  No further column scaling is applied.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, ParameterError
from .poles import PoleSet

CLAMP_TOL = 1e-12


@dataclass(frozen=True)
class PolyFamily:
    """Smooth polynomial part of an axis basis.

    ``chebyshev`` on ``interval`` has degree+1 columns; ``fourier`` on the
    fixed cell [-pi, pi) has 2*degree+1 columns (constant, then
    cos/sin pairs).
    """

    kind: str  # "chebyshev" or "fourier"
    degree: int
    interval: tuple[float, float] = (-1.0, 1.0)

    def __post_init__(self):
        if self.kind not in ("chebyshev", "fourier"):
            raise ParameterError(f"unknown polynomial family {self.kind!r}")
        if self.degree < 0:
            raise ParameterError(f"degree must be >= 0, got {self.degree}")
        if self.kind == "chebyshev" and not (self.interval[1] > self.interval[0]):
            raise ParameterError(f"degenerate interval {self.interval}")

    @property
    def n_columns(self) -> int:
        if self.kind == "chebyshev":
            return self.degree + 1
        return 2 * self.degree + 1


@dataclass(frozen=True)
class AxisBasisSpec:
    """Per-axis basis: clustered partial-fraction families plus polynomials.

    Cluster locations are carried by each PoleSet's own spec and must lie
    inside (or on the boundary of) the axis interval.
    """

    poly: PolyFamily
    clusters: tuple[PoleSet, ...] = ()

    def __post_init__(self):
        a, b = self.interval
        for ps in self.clusters:
            loc = ps.spec.location
            if not (a - CLAMP_TOL <= loc <= b + CLAMP_TOL):
                raise ParameterError(
                    f"cluster location {loc} outside axis interval [{a}, {b}]"
                )

    @property
    def interval(self) -> tuple[float, float]:
        if self.poly.kind == "fourier":
            return (-np.pi, np.pi)
        return self.poly.interval

    @property
    def n_columns(self) -> int:
        return sum(len(ps) for ps in self.clusters) + self.poly.n_columns


def _clamp_to_interval(points: np.ndarray, a: float, b: float) -> np.ndarray:
    """Clamp points marginally outside [a, b]; reject anything further out.

    The tolerance absorbs floating-point noise from patch mappings.
    """
    pts = np.asarray(points, dtype=float)
    scale = max(abs(a), abs(b), 1.0)
    tol = CLAMP_TOL * scale
    if np.any(pts < a - tol) or np.any(pts > b + tol):
        worst = pts[np.argmax(np.maximum(a - pts, pts - b))]
        raise ParameterError(f"point {worst} outside interval [{a}, {b}]")
    return np.clip(pts, a, b)


def chebyshev_matrix(points, degree: int, interval=(-1.0, 1.0)) -> np.ndarray:
    """Chebyshev Vandermonde matrix on an interval, by three-term recurrence.

    Entry (i, k) is T_k(t_i) with t_i the affine image of points[i] in
    [-1, 1].
    """
    a, b = interval
    if not (b > a):
        raise ParameterError(f"degenerate interval {interval}")
    if degree < 0:
        raise ParameterError(f"degree must be >= 0, got {degree}")
    pts = _clamp_to_interval(points, a, b)
    t = (2.0 * pts - (a + b)) / (b - a)
    out = np.empty((len(t), degree + 1))
    out[:, 0] = 1.0
    if degree >= 1:
        out[:, 1] = t
    for k in range(2, degree + 1):
        out[:, k] = 2.0 * t * out[:, k - 1] - out[:, k - 2]
    return out


def fourier_matrix(points, degree: int) -> np.ndarray:
    """Real Fourier design matrix, columns [1, cos t, sin t, ..., cos Nt, sin Nt]."""
    if degree < 0:
        raise ParameterError(f"degree must be >= 0, got {degree}")
    t = np.asarray(points, dtype=float)
    out = np.empty((len(t), 2 * degree + 1))
    out[:, 0] = 1.0
    for k in range(1, degree + 1):
        out[:, 2 * k - 1] = np.cos(k * t)
        out[:, 2 * k] = np.sin(k * t)
    return out


def partial_fraction_matrix(points, location: float, poles: PoleSet) -> np.ndarray:
    """Partial-fraction block with entries q_j / ((x_i - location) - q_j).

    Each column is bounded by 1 for imaginary poles and equals -1 on the
    whole row at x_i = location.  A real pole coinciding exactly with a
    sample point is a configuration error, not a numerical accident.
    """
    x = np.asarray(points, dtype=float)
    q = poles.offsets
    den = (x[:, None] - location) - q[None, :]
    hit = den == 0
    if np.any(hit):
        i, j = np.argwhere(hit)[0]
        raise ConfigError(
            f"sample point {x[i]} coincides with pole {location + q[j]}"
        )
    return q[None, :] / den


def axis_design_matrix(points, spec: AxisBasisSpec) -> np.ndarray:
    """Concatenate cluster partial-fraction blocks and the polynomial block.

    Column order is deterministic: clusters in spec order, then the
    polynomial family.
    """
    blocks = []
    for ps in spec.clusters:
        blocks.append(partial_fraction_matrix(points, ps.spec.location, ps))
    if spec.poly.kind == "chebyshev":
        blocks.append(chebyshev_matrix(points, spec.poly.degree, spec.poly.interval))
    else:
        blocks.append(fourier_matrix(points, spec.poly.degree))
    out = np.hstack([np.asarray(b, dtype=complex) for b in blocks])
    return out
