"""The univariate-Gaussian statistical manifold.

A normal distribution N(mu, sigma^2) is a point (mu, sigma) on a manifold
whose Fisher-information metric has line element

    ds^2 = dmu^2 / sigma^2 + 2 dsigma^2 / sigma^2.

Substituting u = mu / sqrt(2) turns this into twice the Poincare
half-plane metric in (u, sigma), so geodesics are vertical segments
(equal means) or half-circles centered on the sigma = 0 axis, and the
geodesic distance has a closed form. The half-plane substitution is an
internal representation only; every public signature speaks (mu, sigma).

``numeric_geodesic_length`` integrates the line element along the curve
with composite Simpson quadrature. It is deliberately independent of the
closed form and serves as its cross-check.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

SQRT2 = math.sqrt(2.0)

# Cap on the atanh argument: exactly 1 is unreachable for positive sigmas
# but rounding could produce it, and atanh(1) is infinite.
_DELTA_CAP = 1.0 - 1e-15

VERTICAL = "vertical-line"
HALF_CIRCLE = "half-circle"


@dataclass(frozen=True)
class GaussianPoint:
    """A univariate normal N(mu, sigma^2) as a point on the manifold."""

    mu: float
    sigma: float

    def __post_init__(self):
        if not (math.isfinite(self.mu) and math.isfinite(self.sigma)):
            raise ValueError(f"GaussianPoint fields must be finite, got ({self.mu}, {self.sigma})")
        if self.sigma <= 0.0:
            raise ValueError(f"sigma must be > 0, got {self.sigma}")


@dataclass(frozen=True)
class GeodesicPath:
    """Geodesic between two points, in closed form.

    ``center_u`` and ``radius`` describe the half-circle in (u, sigma)
    coordinates with u = mu / sqrt(2). For vertical paths both are unused
    and set to 0.
    """

    start: GaussianPoint
    end: GaussianPoint
    kind: str
    center_u: float = 0.0
    radius: float = 0.0


def _u(mu):
    return mu / SQRT2


def rao_distance(p: GaussianPoint, q: GaussianPoint) -> float:
    """Rao geodesic distance between two Gaussians.

    Closed form: 2*sqrt(2)*atanh(delta) with

        delta = sqrt( ((mu1-mu2)^2 + 2(s1-s2)^2) / ((mu1-mu2)^2 + 2(s1+s2)^2) ).

    Symmetric, zero iff p == q, finite for all valid points.
    """
    dmu2 = (p.mu - q.mu) ** 2
    num = dmu2 + 2.0 * (p.sigma - q.sigma) ** 2
    if num == 0.0:
        return 0.0
    den = dmu2 + 2.0 * (p.sigma + q.sigma) ** 2
    delta = min(math.sqrt(num / den), _DELTA_CAP)
    return 2.0 * SQRT2 * math.atanh(delta)


def fixed_sigma_distance(mu1: float, mu2: float, sigma: float) -> float:
    """Length of the constant-sigma path between (mu1, sigma) and (mu2, sigma).

    Along sigma = const the line element reduces to |dmu| / sigma, so the
    path length is |mu1 - mu2| / sigma: the Mahalanobis distance. The
    constant-sigma path is not a geodesic, hence this is an upper bound on
    ``rao_distance`` of the same endpoints.
    """
    if sigma <= 0.0 or not math.isfinite(sigma):
        raise ValueError(f"sigma must be > 0, got {sigma}")
    return abs(mu1 - mu2) / sigma


def geodesic_between(p: GaussianPoint, q: GaussianPoint) -> GeodesicPath:
    """Construct the geodesic path from p to q.

    Equal means give the vertical segment. Otherwise the unique half-circle
    through both points centered on the sigma = 0 axis is found by solving
    (u - c)^2 + sigma^2 = r^2 for the two endpoints.

    Raises ValueError for p == q (a zero-length path has no unique
    parameterization; use ``rao_distance`` directly).
    """
    if p == q:
        raise ValueError("geodesic is degenerate for identical endpoints")
    if p.mu == q.mu:
        return GeodesicPath(p, q, VERTICAL)
    u1, u2 = _u(p.mu), _u(q.mu)
    c = (u1 * u1 + p.sigma**2 - u2 * u2 - q.sigma**2) / (2.0 * (u1 - u2))
    r = math.hypot(u1 - c, p.sigma)
    return GeodesicPath(p, q, HALF_CIRCLE, center_u=c, radius=r)


def _angles(path: GeodesicPath):
    """Polar angles of the two endpoints on the half-circle, in (0, pi)."""
    ph1 = math.atan2(path.start.sigma, _u(path.start.mu) - path.center_u)
    ph2 = math.atan2(path.end.sigma, _u(path.end.mu) - path.center_u)
    return ph1, ph2


def geodesic_point(path: GeodesicPath, t: float) -> GaussianPoint:
    """Point at arc-length fraction t in [0, 1] along the path.

    Arc-length-proportional: the distance from the start to the returned
    point is t times the total path length.
    """
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"t must lie in [0, 1], got {t}")
    if path.kind == VERTICAL:
        # equal-mean distance is sqrt(2)*|ln s2/s1|, so arc length is
        # uniform in log sigma
        s1, s2 = path.start.sigma, path.end.sigma
        return GaussianPoint(path.start.mu, s1 * (s2 / s1) ** t)
    # Along u = c + r cos(phi), sigma = r sin(phi) the arc length is
    # uniform in log tan(phi/2).
    ph1, ph2 = _angles(path)
    a = math.log(math.tan(0.5 * ph1))
    b = math.log(math.tan(0.5 * ph2))
    phi = 2.0 * math.atan(math.exp(a + t * (b - a)))
    u = path.center_u + path.radius * math.cos(phi)
    return GaussianPoint(u * SQRT2, path.radius * math.sin(phi))


def numeric_geodesic_length(path: GeodesicPath, n_steps: int) -> float:
    """Composite-Simpson quadrature of the line element along the path.

    For half-circles the integration variable is the arc angle phi, where
    the integrand is sqrt(2)/sin(phi); for vertical segments it is a linear
    sigma parameterization. Independent of the closed-form distance; Simpson
    converges at fourth order in the step size. Odd ``n_steps`` is rounded
    up to even.
    """
    if n_steps < 2:
        raise ValueError(f"n_steps must be >= 2, got {n_steps}")
    import numpy as np

    n = n_steps + (n_steps % 2)
    if path.kind == VERTICAL:
        s1, s2 = path.start.sigma, path.end.sigma
        if s1 == s2:
            return 0.0
        lo, hi = 0.0, 1.0
        t = np.linspace(lo, hi, n + 1)
        f = SQRT2 * abs(s2 - s1) / (s1 + t * (s2 - s1))
    else:
        ph1, ph2 = _angles(path)
        lo, hi = min(ph1, ph2), max(ph1, ph2)
        phi = np.linspace(lo, hi, n + 1)
        f = SQRT2 / np.sin(phi)
    h = (hi - lo) / n
    acc = f[0] + f[-1] + 4.0 * float(np.sum(f[1:-1:2])) + 2.0 * float(np.sum(f[2:-1:2]))
    return acc * h / 3.0


def sample_path(path: GeodesicPath, n_points: int):
    """n_points arc-length-equispaced samples as (t, mu, sigma) rows."""
    if n_points < 2:
        raise ValueError(f"n_points must be >= 2, got {n_points}")
    rows = []
    for i in range(n_points):
        t = i / (n_points - 1)
        pt = geodesic_point(path, t)
        rows.append((t, pt.mu, pt.sigma))
    return rows


def write_path_csv(path: GeodesicPath, n_points: int, dest):
    """Sample the path and write (t, mu, sigma) rows to a CSV file.

    ``dest`` is a filesystem path or an open text file.
    """
    rows = sample_path(path, n_points)
    if hasattr(dest, "write"):
        _write_rows(dest, rows)
    else:
        with open(dest, "w", newline="", encoding="utf-8") as fh:
            _write_rows(fh, rows)


def _write_rows(fh, rows):
    w = csv.writer(fh)
    w.writerow(["t", "mu", "sigma"])
    for t, mu, sigma in rows:
        w.writerow([repr(t), repr(mu), repr(sigma)])
