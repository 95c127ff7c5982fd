"""Planar and spherical geometry shared by every module.

The sphere is the unit sphere in R^3 with geodesic metric d.  The plane is
the stereographic chart tangent at the south pole v = (0, 0, -1), projected
from the north pole, scaled so that the round metric pulls back to
g(x) (dx1^2 + dx2^2) with g(x) = (1 + |x|^2/4)^{-2}.  In this chart the
geodesic ball of radius h(r) = 2 arctan(r/2) around v is exactly the
Euclidean disk of radius r around the origin, which is why all radius
ladders are specified through Euclidean radii.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import PreconditionError

SOUTH_POLE = np.array([0.0, 0.0, -1.0])
NORTH_POLE = np.array([0.0, 0.0, 1.0])

# Empirical covering-radius constant of the Fibonacci lattice (~2.7/sqrt(n)),
# padded so the audit in the test suite has slack.
_FIB_COVER_CONST = 3.1


def geodesic_of_euclidean(r):
    """Geodesic radius 2*arctan(r/2) of the chart disk of Euclidean radius r."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise PreconditionError("euclidean radius must be positive")
    out = 2.0 * np.arctan(r / 2.0)
    return float(out) if out.ndim == 0 else out


def euclidean_of_geodesic(h):
    """Inverse of geodesic_of_euclidean: 2*tan(h/2), valid for 0 < h < pi."""
    h = np.asarray(h, dtype=float)
    if np.any(h <= 0) or np.any(h >= np.pi):
        raise PreconditionError("geodesic radius must lie in (0, pi)")
    out = 2.0 * np.tan(h / 2.0)
    return float(out) if out.ndim == 0 else out


def chart_radius(r_star):
    """Euclidean radius of the chart image of the cap B_d(v, r_star)."""
    return euclidean_of_geodesic(r_star)


def lift_to_sphere(p):
    """Map chart point(s) (..., 2) to unit sphere point(s) (..., 3)."""
    p = np.asarray(p, dtype=float)
    s = p[..., 0] ** 2 + p[..., 1] ** 2
    denom = s + 4.0
    out = np.empty(p.shape[:-1] + (3,))
    out[..., 0] = 4.0 * p[..., 0] / denom
    out[..., 1] = 4.0 * p[..., 1] / denom
    out[..., 2] = (s - 4.0) / denom
    return out


def drop_to_plane(u):
    """Inverse stereographic map, sphere (..., 3) to chart (..., 2).

    Rejects the north pole (the projection point).
    """
    u = np.asarray(u, dtype=float)
    if np.any(u[..., 2] >= 1.0 - 1e-15):
        raise PreconditionError("north pole has no chart image")
    denom = 1.0 - u[..., 2]
    out = np.empty(u.shape[:-1] + (2,))
    out[..., 0] = 2.0 * u[..., 0] / denom
    out[..., 1] = 2.0 * u[..., 1] / denom
    return out


def geodesic_distance(u, w):
    """Angle between unit vectors, numerically stable near 0 and pi."""
    u = np.asarray(u, dtype=float)
    w = np.asarray(w, dtype=float)
    dot = np.sum(u * w, axis=-1)
    cross = np.cross(u, w)
    norm = np.linalg.norm(np.atleast_2d(cross), axis=-1).reshape(dot.shape)
    out = np.arctan2(norm, dot)
    return float(out) if out.ndim == 0 else out


def conformal_factor(p):
    """Round-metric conformal factor g(x) = (1 + |x|^2 / 4)^{-2} in the chart."""
    p = np.asarray(p, dtype=float)
    s = p[..., 0] ** 2 + p[..., 1] ** 2
    out = 1.0 / (1.0 + 0.25 * s) ** 2
    return float(out) if out.ndim == 0 else out


def spherical_cap_area(eps):
    """Area 2*pi*(1 - cos eps) of a geodesic ball of radius eps, 0 < eps <= pi."""
    eps = np.asarray(eps, dtype=float)
    if np.any(eps <= 0) or np.any(eps > np.pi):
        raise PreconditionError("cap radius must lie in (0, pi]")
    out = 2.0 * np.pi * (1.0 - np.cos(eps))
    return float(out) if out.ndim == 0 else out


def geodesic_disk_in_chart(center, h):
    """Chart image of the geodesic disk B_d(center, h).

    Stereographic projection sends circles to circles, so the image is a
    Euclidean disk; returns (chart_center (2,), euclidean_radius).  The image
    must be bounded, i.e. the disk may not contain the north pole.
    """
    center = np.asarray(center, dtype=float)
    dv = geodesic_distance(SOUTH_POLE, center)
    if dv + h >= np.pi:
        raise PreconditionError("disk reaches the projection pole")
    t_hi = 2.0 * math.tan((dv + h) / 2.0)
    t_lo = 2.0 * math.tan((dv - h) / 2.0)
    if dv < 1e-14:
        return np.zeros(2), t_hi
    ray = drop_to_plane(center)
    ray = ray / np.linalg.norm(ray)
    return 0.5 * (t_lo + t_hi) * ray, 0.5 * (t_hi - t_lo)


def geodesic_disks_in_chart(centers, h):
    """Vectorised geodesic_disk_in_chart over (n, 3) centers at one radius.

    Returns (chart_centers (n, 2), radii (n,)).
    """
    centers = np.asarray(centers, dtype=float)
    dv = np.atleast_1d(
        geodesic_distance(np.broadcast_to(SOUTH_POLE, centers.shape), centers)
    )
    if np.any(dv + h >= np.pi):
        raise PreconditionError("a disk reaches the projection pole")
    t_hi = 2.0 * np.tan((dv + h) / 2.0)
    t_lo = 2.0 * np.tan((dv - h) / 2.0)
    out_c = np.zeros((len(dv), 2))
    radii = 0.5 * (t_hi - t_lo)
    off = dv >= 1e-14
    ray = drop_to_plane(centers[off])
    ray /= np.linalg.norm(ray, axis=1, keepdims=True)
    out_c[off] = 0.5 * (t_lo + t_hi)[off, None] * ray
    return out_c, radii


@dataclass(frozen=True)
class RadiiLadder:
    """Geometric radius ladder r_l = r0 * e^{-l} with geodesic images h_l.

    Built through build_ladder, which certifies r_l - r_l^3 <= h_l <= r_l and
    |h'(x) - 1| <= x^2 on (0, r0].
    """

    r0: float
    L: int
    r: np.ndarray = field(repr=False)
    h: np.ndarray = field(repr=False)

    def r_at(self, l):
        """Euclidean radius at any integer level (also outside 0..L)."""
        return self.r0 * np.exp(-np.asarray(l, dtype=float))

    def h_at(self, l):
        """Geodesic radius at any integer level."""
        return 2.0 * np.arctan(self.r_at(l) / 2.0)


def build_ladder(r0, L, check_points=4096):
    """Construct a RadiiLadder, rejecting parameters that break the geodesic
    sandwich x - x^3 <= h(x) <= x or the derivative bound |h'(x) - 1| <= x^2
    anywhere on (0, r0].  The failing level (or grid point) is named.
    """
    if not 0.0 < r0 < 1.0:
        raise PreconditionError(f"base radius must lie in (0, 1), got {r0}")
    if L < 1:
        raise PreconditionError("ladder depth must be at least 1")
    levels = np.arange(L + 1, dtype=float)
    r = r0 * np.exp(-levels)
    h = 2.0 * np.arctan(r / 2.0)
    for l in range(L + 1):
        x = r[l]
        if not (x - x**3 <= h[l] <= x):
            raise PreconditionError(
                f"geodesic sandwich fails at level {l} (r0 too large)"
            )
    xs = np.linspace(r0 / check_points, r0, check_points)
    hp = 1.0 / (1.0 + xs**2 / 4.0)
    bad = np.abs(hp - 1.0) > xs**2
    if bad.any():
        raise PreconditionError(
            f"derivative bound fails near x={xs[bad][0]:.6g} (r0 too large)"
        )
    return RadiiLadder(r0=float(r0), L=int(L), r=r, h=h)


@dataclass(frozen=True)
class CoveringNet:
    """Centers of a spacing-dense covering of the sphere (or of a cap).

    spacing is the geodesic covering radius d0 * h_level.  pole_index[i] is
    the smallest k with h_k <= d(v, center_i); centers at the pole carry the
    sentinel value 2**62.  Minimum pairwise separation >= spacing / 2 by
    construction, which pins the cardinality to the r_level^{-2} scale.
    """

    level: int
    spacing: float
    centers: np.ndarray = field(repr=False)
    pole_index: np.ndarray = field(repr=False)
    cap: float | None = None

    def __len__(self):
        return len(self.centers)

    def chart_centers(self):
        return drop_to_plane(self.centers)


POLE_INDEX_SENTINEL = 2**62


def pole_index_of(points, ladder):
    """Smallest k with h_k <= d(v, y) for each point, vectorised."""
    d = geodesic_distance(np.broadcast_to(SOUTH_POLE, np.shape(points)), points)
    d = np.atleast_1d(np.asarray(d, dtype=float))
    out = np.full(d.shape, POLE_INDEX_SENTINEL, dtype=np.int64)
    pos = d > 0
    # h_k <= d  <=>  r0 e^{-k} <= 2 tan(d/2)
    k = np.ceil(np.log(ladder.r0 / (2.0 * np.tan(d[pos] / 2.0))) - 1e-12)
    out[pos] = np.maximum(0, k).astype(np.int64)
    return out


def _fibonacci_points(n, cap=None):
    """Deterministic quasi-uniform points; cap restricts to B_d(v, cap)."""
    i = np.arange(n) + 0.5
    if cap is None:
        z = 1.0 - 2.0 * i / n
    else:
        z_top = -math.cos(cap)
        z = -1.0 + (z_top + 1.0) * i / n
    phi = np.pi * (3.0 - np.sqrt(5.0)) * i
    rho = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    return np.column_stack([rho * np.cos(phi), rho * np.sin(phi), z])


def _greedy_thin(points, sep_chord):
    """Keep a maximal subset with pairwise chord distance >= sep_chord,
    scanning in the given (deterministic) order with a uniform grid hash."""
    cell = sep_chord
    keys = np.floor(points / cell).astype(np.int64)
    grid = {}
    kept = []
    sep2 = sep_chord * sep_chord
    for idx in range(len(points)):
        p = points[idx]
        kx, ky, kz = keys[idx]
        ok = True
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                for dz in (-1, 0, 1):
                    bucket = grid.get((kx + dx, ky + dy, kz + dz))
                    if not bucket:
                        continue
                    q = points[bucket]
                    if np.min(np.sum((q - p) ** 2, axis=1)) < sep2:
                        ok = False
                        break
                if not ok:
                    break
            if not ok:
                break
        if ok:
            grid.setdefault((kx, ky, kz), []).append(idx)
            kept.append(idx)
    return points[np.array(kept, dtype=np.int64)]


def build_net(ladder, level, d0=1e-3, cap=None):
    """Covering net at the given ladder level with geodesic spacing d0 * h_l.

    Candidates come from a Fibonacci lattice dense enough to cover at half
    the spacing; greedy thinning then enforces separation >= spacing / 2, so
    the survivors still cover at the full spacing while their count stays
    within constant factors of r_l^{-2} (cap area over separation area).
    d0 defaults to 1/1000; desk-scale runs may pass a larger value.
    """
    if level > ladder.L:
        raise PreconditionError(f"level {level} exceeds ladder depth {ladder.L}")
    if d0 <= 0:
        raise PreconditionError("spacing factor must be positive")
    spacing = d0 * float(ladder.h[level])
    raw_cover = spacing / 2.0
    area = 4.0 * np.pi if cap is None else spherical_cap_area(cap)
    n_raw = int(math.ceil((_FIB_COVER_CONST / raw_cover) ** 2 * area / (4.0 * np.pi)))
    n_raw = max(n_raw, 8)
    candidates = _fibonacci_points(n_raw, cap=cap)
    if cap is not None and spacing >= cap:
        # degenerate covering: a single center at the pole suffices
        centers = SOUTH_POLE[None, :].copy()
    else:
        sep_chord = 2.0 * math.sin(spacing / 4.0)  # chord of geodesic spacing/2
        centers = _greedy_thin(candidates, sep_chord)
    return CoveringNet(
        level=int(level),
        spacing=spacing,
        centers=centers,
        pole_index=pole_index_of(centers, ladder),
        cap=cap,
    )


def interpolation_inclusion(y, y_prime, eps_y, eps_y_prime, ladder, a, b, c1):
    """Decide B_d(y', eps_y') <= B_d(y, (1 + c1/L) eps_y) by the triangle
    criterion d(y, y') + eps_y' <= (1 + c1/L) eps_y.

    Preconditions (violations raise, they are not a False result):
    d(y, y') <= a h_L / L, |eps_y - eps_y'| <= b h_L / L, and both radii in
    [h_L / 30, 2 h_{L+1}].
    """
    L = ladder.L
    h_L = float(ladder.h[L])
    h_next = float(ladder.h_at(L + 1))
    dist = geodesic_distance(y, y_prime)
    tol = 1e-12
    if dist > a * h_L / L + tol:
        raise PreconditionError("centers farther apart than a*h_L/L")
    if abs(eps_y - eps_y_prime) > b * h_L / L + tol:
        raise PreconditionError("radii differ by more than b*h_L/L")
    for e in (eps_y, eps_y_prime):
        if not (h_L / 30.0 - tol <= e <= 2.0 * h_next + tol):
            raise PreconditionError("radius outside [h_L/30, 2 h_{L+1}]")
    return bool(dist + eps_y_prime <= (1.0 + c1 / L) * eps_y)
