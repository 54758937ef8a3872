"""Clustered pole offsets and clustered sampling abscissae.

Every fitting scheme in this package places simple poles at exponentially
decreasing distances from a known singularity.  Two spacings are provided:

* ``tapered``:  e_j = exp(-sigma * (sqrt(n) - sqrt(j))),  j = 1..n,
  increasingly dense towards the singularity, with e_n = 1 exactly.
* ``uniform``:  e_j = exp(-sigma * j / sqrt(n)),  j = 0..n-1, a plain
  geometric sequence starting at 1.

The tapered spacing is the default; it converges faster for branch-point
type behaviour, while the uniform spacing can be preferable for jumps.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError

DEFAULT_SIGMA = 2.0 * np.pi


@dataclass(frozen=True)
class ClusterSpec:
    """One family of poles clustered towards a singularity location.

    ``n_levels`` counts clustering levels; with ``imaginary_pair``
    orientation each level contributes a conjugate pole pair (2*n_levels
    poles total), with ``real_oneside`` a single real pole per level.
    ``side_scale`` multiplies all offsets (poles live within distance
    ``side_scale`` of the location).
    """

    location: float
    n_levels: int
    sigma: float = DEFAULT_SIGMA
    taper: str = "tapered"  # or "uniform"
    orientation: str = "imaginary_pair"  # or "real_oneside"
    side_scale: float = 1.0

    def __post_init__(self):
        if self.n_levels < 1:
            raise ParameterError(f"n_levels must be >= 1, got {self.n_levels}")
        if not (self.sigma > 0):
            raise ParameterError(f"sigma must be > 0, got {self.sigma}")
        if not (self.side_scale > 0):
            raise ParameterError(f"side_scale must be > 0, got {self.side_scale}")
        if self.taper not in ("tapered", "uniform"):
            raise ParameterError(f"unknown taper mode {self.taper!r}")
        if self.orientation not in ("imaginary_pair", "real_oneside"):
            raise ParameterError(f"unknown orientation {self.orientation!r}")


@dataclass(frozen=True)
class PoleSet:
    """Materialized pole offsets q_j relative to the singularity location.

    For ``imaginary_pair`` orientation the offsets are closed under
    conjugation and ordered [+i*s*e_1, -i*s*e_1, +i*s*e_2, ...]; for
    ``real_oneside`` they are [-s*e_1, ..., -s*e_n].
    """

    offsets: np.ndarray = field(repr=False)
    spec: ClusterSpec = None

    def __len__(self):
        return len(self.offsets)


def tapered_offsets(n_levels: int, sigma: float) -> np.ndarray:
    """Offsets exp(-sigma*(sqrt(n)-sqrt(j))) for j = 1..n_levels.

    Strictly increasing, final entry exactly 1.
    """
    if n_levels < 1:
        raise ParameterError(f"n_levels must be >= 1, got {n_levels}")
    if not (sigma > 0):
        raise ParameterError(f"sigma must be > 0, got {sigma}")
    j = np.arange(1, n_levels + 1, dtype=float)
    return np.exp(-sigma * (np.sqrt(float(n_levels)) - np.sqrt(j)))


def uniform_offsets(n_levels: int, sigma: float) -> np.ndarray:
    """Offsets exp(-sigma*j/sqrt(n)) for j = 0..n_levels-1.

    A geometric sequence with ratio exp(-sigma/sqrt(n)); first entry 1.
    """
    if n_levels < 1:
        raise ParameterError(f"n_levels must be >= 1, got {n_levels}")
    if not (sigma > 0):
        raise ParameterError(f"sigma must be > 0, got {sigma}")
    j = np.arange(n_levels, dtype=float)
    return np.exp(-sigma * j / np.sqrt(float(n_levels)))


def materialize_poles(spec: ClusterSpec) -> PoleSet:
    """Turn a cluster description into concrete complex pole offsets."""
    if spec.taper == "tapered":
        e = tapered_offsets(spec.n_levels, spec.sigma)
    else:
        e = uniform_offsets(spec.n_levels, spec.sigma)
    e = spec.side_scale * e
    if spec.orientation == "imaginary_pair":
        q = np.empty(2 * len(e), dtype=complex)
        q[0::2] = 1j * e
        q[1::2] = -1j * e
    else:
        q = (-e).astype(complex)
    return PoleSet(offsets=q, spec=spec)


def clustered_samples(m_points: int, decades: float = 16.0) -> np.ndarray:
    """Log-spaced abscissae 10**(-decades) .. 1 resolving a singularity at 0.

    Returns x_i = 10**(-decades + decades*(i-1)/(m-1)) for i = 1..m_points,
    strictly increasing with x_1 = 10**-decades and x_m = 1.
    """
    if m_points < 2:
        raise ParameterError(f"m_points must be >= 2, got {m_points}")
    if not (decades > 0):
        raise ParameterError(f"decades must be > 0, got {decades}")
    i = np.arange(m_points, dtype=float)
    return 10.0 ** (-decades + decades * i / (m_points - 1))
