"""Exact geometry of the second-order (Lorentz) cone.

The cone lives in R^(m+1) with m >= 1 and consists of the vectors
y = (y0, yr) with ||yr|| <= y0.  Vectors are plain 1-D numpy arrays of
length m+1; the first entry is the "time" component y0 and the rest is
the "space" block yr.  Everything here is a pure function of its inputs.
"""

from __future__ import annotations

import enum

import numpy as np

# Absolute classification tolerance, scaled by max(1, ||y||).
TAU_CONE = 1e-12


class ConeRegion(enum.Enum):
    INTERIOR_Q = "InteriorQ"
    BOUNDARY_Q_NONZERO = "BoundaryQNonzero"
    ZERO = "Zero"
    INTERIOR_POLAR = "InteriorPolar"
    BOUNDARY_POLAR_NONZERO = "BoundaryPolarNonzero"
    OUTSIDE = "Outside"


def as_cone_vec(y) -> np.ndarray:
    """Validate and return y as a float array of length m+1 >= 2.

    Length-1 vectors (m = 0, where the cone degenerates to the half line)
    are rejected because the projection calculus divides by ||yr||.
    """
    arr = np.asarray(y, dtype=float)
    if arr.ndim != 1 or arr.size < 2:
        raise ValueError(f"cone vector must be 1-D with length >= 2, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("cone vector has non-finite entries")
    return arr


def tilde(y) -> np.ndarray:
    """Reflection (y0, yr) -> (-y0, yr); an involution."""
    y = as_cone_vec(y)
    out = y.copy()
    out[0] = -out[0]
    return out


def classify(y, tol: float = TAU_CONE) -> ConeRegion:
    """Locate y relative to the cone Q and its polar -Q.

    The six regions are decided from the signs of ||yr|| - y0 and
    ||yr|| + y0 against tol * max(1, ||y||); exactly one region matches.
    """
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    y = as_cone_vec(y)
    nrm = np.linalg.norm(y)
    t = tol * max(1.0, nrm)
    if nrm <= t:
        return ConeRegion.ZERO
    rnorm = np.linalg.norm(y[1:])
    a = rnorm - y[0]  # <= 0 inside Q
    b = rnorm + y[0]  # <= 0 inside -Q
    if a < -t:
        return ConeRegion.INTERIOR_Q
    if a <= t:
        return ConeRegion.BOUNDARY_Q_NONZERO
    if b < -t:
        return ConeRegion.INTERIOR_POLAR
    if b <= t:
        return ConeRegion.BOUNDARY_POLAR_NONZERO
    return ConeRegion.OUTSIDE


def project_q(y) -> np.ndarray:
    """Euclidean projection onto Q (closed form).

    Returns y inside Q, 0 inside -Q and otherwise the boundary point
    ((y0 + ||yr||) / 2) * (1, yr / ||yr||).
    """
    y = as_cone_vec(y)
    rnorm = np.linalg.norm(y[1:])
    if rnorm <= y[0]:
        return y.copy()
    if rnorm <= -y[0]:
        return np.zeros_like(y)
    coef = 0.5 * (y[0] + rnorm)
    out = np.empty_like(y)
    out[0] = coef
    out[1:] = (coef / rnorm) * y[1:]
    return out


def project_polar(y) -> np.ndarray:
    """Euclidean projection onto -Q, computed as y - project_q(y)."""
    y = as_cone_vec(y)
    return y - project_q(y)


def dist2_q(y) -> float:
    """Squared distance of y to Q; equals ||project_polar(y)||^2."""
    return float(np.dot(*(2 * [project_polar(y)])))


def jacobian_project_polar(y) -> np.ndarray:
    """A generalized Jacobian of the polar projection at y.

    Identity inside -Q, zero inside Q, and the smooth-Jacobian block
    matrix elsewhere.  On the cone boundaries the limit from the outside
    region is returned, which keeps semismooth Newton steps reproducible;
    when ||yr|| <= TAU_CONE the formula degenerates and the adjacent
    interior-region matrix is used instead.
    """
    y = as_cone_vec(y)
    n = y.size
    m = n - 1
    region = classify(y, TAU_CONE)
    if region is ConeRegion.INTERIOR_POLAR:
        return np.eye(n)
    if region is ConeRegion.INTERIOR_Q:
        return np.zeros((n, n))
    rnorm = np.linalg.norm(y[1:])
    if rnorm <= TAU_CONE * max(1.0, np.linalg.norm(y)):
        # y ~ (y0, 0): the outside region is not adjacent, fall back to
        # the interior selection on either side of the axis.
        return np.zeros((n, n)) if y[0] >= 0 else np.eye(n)
    u = y[1:] / rnorm
    ratio = y[0] / rnorm
    out = np.empty((n, n))
    out[0, 0] = 0.5
    out[0, 1:] = -0.5 * u
    out[1:, 0] = -0.5 * u
    out[1:, 1:] = 0.5 * ((1.0 - ratio) * np.eye(m) + ratio * np.outer(u, u))
    return out


def in_normal_cone(lam, y, tol: float = 1e-10) -> bool:
    """Whether lam lies in the normal cone to Q at y (projection test).

    Uses the characterization lam in N_Q(y) iff project_q(y + lam) = y.
    Raises if y itself is farther than tol from Q.
    """
    lam = as_cone_vec(lam)
    y = as_cone_vec(y)
    if lam.size != y.size:
        raise ValueError("dimension mismatch between lam and y")
    scale = max(1.0, float(np.linalg.norm(y)))
    if np.linalg.norm(y - project_q(y)) > tol * scale:
        raise ValueError("base point is not in the cone within tolerance")
    return bool(np.linalg.norm(project_q(y + lam) - y) <= tol * max(scale, float(np.linalg.norm(lam))))
