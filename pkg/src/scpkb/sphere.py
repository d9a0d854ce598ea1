"""Geometry and parameterization substrate.

Directional observations live on the unit sphere S^d embedded in R^(d+1).
Both distribution families are parameterized either by (m, rho) with m a
unit vector and rho in [0, 1), or by the single unconstrained vector
mu = gamma * m with gamma = 2*rho/(1 - rho^2). The unconstrained form is
the primary optimization variable; (m, rho) is a derived view.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .rng import as_generator

__all__ = [
    "UNIT_NORM_TOL",
    "SphericalParams",
    "rho_to_gamma",
    "gamma_to_rho",
    "normalize",
    "as_directional",
    "sample_uniform_sphere",
    "direction_at_angle",
    "random_orthogonal",
]

# validation tolerance for "is on the sphere"; construction uses 1e-12
UNIT_NORM_TOL = 1e-10

FAMILIES = ("sc", "pkb")


def rho_to_gamma(rho):
    """Map concentration rho in [0, 1) to gamma = 2*rho/(1 - rho^2)."""
    rho = np.asarray(rho, dtype=np.float64)
    if np.any(rho < 0.0) or np.any(rho >= 1.0):
        raise ValueError("rho must lie in [0, 1)")
    out = 2.0 * rho / (1.0 - rho * rho)
    return float(out) if out.ndim == 0 else out


def gamma_to_rho(gamma):
    """Inverse map, computed as gamma / (1 + sqrt(gamma^2 + 1)).

    This form avoids the cancellation in (sqrt(gamma^2+1) - 1)/gamma for
    small gamma and needs no special case at gamma = 0.
    """
    gamma = np.asarray(gamma, dtype=np.float64)
    if np.any(gamma < 0.0):
        raise ValueError("gamma must be non-negative")
    out = gamma / (1.0 + np.sqrt(gamma * gamma + 1.0))
    return float(out) if out.ndim == 0 else out


def normalize(mu):
    """Split an unconstrained location into (m, gamma).

    Raises ValueError when the norm is below 1e-12, where the direction is
    undefined.
    """
    mu = np.asarray(mu, dtype=np.float64)
    if mu.ndim != 1 or mu.size < 2:
        raise ValueError("mu must be a vector of length >= 2")
    gamma = float(np.linalg.norm(mu))
    if gamma < 1e-12:
        raise ValueError("degenerate location: ||mu|| < 1e-12, direction undefined")
    return mu / gamma, gamma


@dataclass(frozen=True)
class SphericalParams:
    """Family tag plus the unconstrained location vector mu in R^(d+1).

    gamma, m and rho are derived views of mu. gamma = 0 encodes the
    uniform law, where m is undefined.
    """

    family: str
    mu: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"family must be one of {FAMILIES}, got {self.family!r}")
        mu = np.ascontiguousarray(self.mu, dtype=np.float64)
        if mu.ndim != 1 or mu.size < 2:
            raise ValueError("mu must be a vector of length >= 2 (d >= 1)")
        if not np.all(np.isfinite(mu)):
            raise ValueError("mu must be finite")
        object.__setattr__(self, "mu", mu)

    @classmethod
    def from_m_rho(cls, family, m, rho):
        m = np.asarray(m, dtype=np.float64)
        nrm = np.linalg.norm(m)
        if m.ndim != 1 or m.size < 2 or abs(nrm - 1.0) > UNIT_NORM_TOL:
            raise ValueError("m must be a unit vector of length >= 2")
        return cls(family, (m / nrm) * rho_to_gamma(float(rho)))

    @property
    def d(self) -> int:
        return self.mu.size - 1

    @property
    def gamma(self) -> float:
        return float(np.linalg.norm(self.mu))

    @property
    def rho(self) -> float:
        return gamma_to_rho(self.gamma)

    @property
    def m(self) -> np.ndarray:
        return normalize(self.mu)[0]

    def __repr__(self):  # compact: mu can be long
        if self.gamma < 1e-12:
            return f"SphericalParams(family={self.family!r}, d={self.d}, rho=0)"
        return (
            f"SphericalParams(family={self.family!r}, d={self.d}, "
            f"rho={self.rho:.6g}, m={np.array2string(self.m, precision=4)})"
        )


def as_directional(Y, project=False, tol=UNIT_NORM_TOL):
    """Validate (or project) an array of rows meant to lie on the sphere.

    Returns a C-contiguous float64 (n, d+1) array. A single vector is
    promoted to one row. With project=True, rows are renormalized and
    zero-norm rows are an error; otherwise off-sphere rows are rejected.
    """
    Y = np.asarray(Y, dtype=np.float64)
    if Y.ndim == 1:
        Y = Y[None, :]
    if Y.ndim != 2 or Y.shape[1] < 2 or Y.shape[0] < 1:
        raise ValueError("expected an (n, d+1) array with n >= 1 and d >= 1")
    if not np.all(np.isfinite(Y)):
        raise ValueError("directional data must be finite")
    norms = np.linalg.norm(Y, axis=1)
    if project:
        bad = np.flatnonzero(norms < 1e-12)
        if bad.size:
            raise ValueError(f"cannot project zero-norm row {bad[0]}")
        return np.ascontiguousarray(Y / norms[:, None])
    bad = np.flatnonzero(np.abs(norms - 1.0) > tol)
    if bad.size:
        raise ValueError(
            f"row {bad[0]} is off the unit sphere (norm {norms[bad[0]]:.12g}); "
            "pass project=True to renormalize"
        )
    return np.ascontiguousarray(Y)


def sample_uniform_sphere(d, n, rng):
    """n iid uniform draws on S^d: normalized (d+1)-variate standard normals."""
    if d < 1 or n < 1:
        raise ValueError("need d >= 1 and n >= 1")
    gen = as_generator(rng)
    z = gen.standard_normal((n, d + 1))
    norms = np.linalg.norm(z, axis=1)
    # a numerically zero normal vector has probability ~0; resample defensively
    while np.any(norms < 1e-12):
        idx = norms < 1e-12
        z[idx] = gen.standard_normal((int(idx.sum()), d + 1))
        norms = np.linalg.norm(z, axis=1)
    return z / norms[:, None]


def direction_at_angle(m, theta, axis=None, rng=None):
    """Unit vector at angle theta (radians) from unit vector m.

    The rotation happens in the plane spanned by m and a reference
    direction: `axis` if given (orthogonalized against m), otherwise the
    first coordinate basis vector not parallel to m, otherwise a random
    direction from rng.
    """
    m = np.asarray(m, dtype=np.float64)
    if abs(np.linalg.norm(m) - 1.0) > UNIT_NORM_TOL:
        raise ValueError("m must be a unit vector")
    if axis is None and rng is not None:
        axis = as_generator(rng).standard_normal(m.size)
    if axis is None:
        k = int(np.argmin(np.abs(m)))  # basis vector least aligned with m
        axis = np.zeros(m.size)
        axis[k] = 1.0
    v = np.asarray(axis, dtype=np.float64) - (np.asarray(axis, float) @ m) * m
    nv = np.linalg.norm(v)
    if nv < 1e-12:
        raise ValueError("axis is parallel to m; angle direction undefined")
    v = v / nv
    out = math.cos(theta) * m + math.sin(theta) * v
    return out / np.linalg.norm(out)


def random_orthogonal(dim, rng):
    """Haar-ish random orthogonal matrix via QR with sign correction."""
    gen = as_generator(rng)
    a = gen.standard_normal((dim, dim))
    q, r = np.linalg.qr(a)
    return q * np.sign(np.diag(r))
