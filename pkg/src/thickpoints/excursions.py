"""Excursion bookkeeping over a radius ladder: per-center downcrossing
counts, angular increments with their empirical measures, Wasserstein-1
comparison against the circle exit law, and supremum statistics over
covering nets (hash-indexed engine plus an index-free oracle).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import geometry
from ._backend import kernels
from .errors import PreconditionError, ResolutionError


@dataclass(frozen=True)
class ExcursionCounts:
    """Per-level downcrossing tallies for one center.

    counts[l] is the number of completed passages from the circle at level
    l-1 to the one at level l under the stopping rule named in provenance.
    """

    center: np.ndarray
    counts: np.ndarray
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        if np.any(self.counts < 0):
            raise PreconditionError("counts must be nonnegative")


@dataclass(frozen=True)
class AngularSample:
    """Angles of excursion endpoints at one level, in [0, 2 pi)."""

    level: int
    angles: np.ndarray

    @property
    def n(self):
        return len(self.angles)


@dataclass(frozen=True)
class DiscreteMeasure:
    """Finite-support probability measure on the line."""

    atoms: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        if len(self.atoms) != len(self.weights) or len(self.atoms) == 0:
            raise PreconditionError("atoms and weights must align")
        if abs(float(np.sum(self.weights)) - 1.0) > 1e-9 or np.any(
            np.asarray(self.weights) < 0
        ):
            raise PreconditionError("weights must be a probability vector")

    @classmethod
    def empirical(cls, values):
        values = np.asarray(values, dtype=float)
        return cls(values, np.full(len(values), 1.0 / len(values)))


# ---------------------------------------------------------------------------
# counting on materialised paths


def _chart_circles(center, ladder, levels):
    """Chart disks of the geodesic circles around a center, per level."""
    cs, rs = [], []
    for l in levels:
        c, r = geometry.geodesic_disk_in_chart(center, float(ladder.h[l]))
        cs.append(c)
        rs.append(r)
    return np.asarray(cs), np.asarray(rs)


def _seg_min_dist(p0, p1, c):
    d = p1 - p0
    w = c - p0
    denom = np.sum(d * d, axis=-1)
    t = np.divide(
        np.sum(w * d, axis=-1), denom, out=np.zeros_like(denom), where=denom > 0
    )
    t = np.clip(t, 0.0, 1.0)
    e = p0 + t[..., None] * d - c
    return np.sqrt(np.sum(e * e, axis=-1))


def count_excursions(path, center, ladder, stopping_rule="tau",
                     violation_budget=None):
    """Downcrossing counts per level along a discretised path.

    stopping_rule "tau" counts over the whole path; ("k_to_0", k) counts
    between the first touch of circle k and the following first touch of
    circle 0, zeroing levels <= k by convention.  Crossings are detected by
    segment-circle intersection.  Steps long enough to span two circles at
    once are counted as resolution violations; if a budget is given and
    exceeded, ResolutionError is raised.
    """
    L = ladder.L
    centers, radii = _chart_circles(center, ladder, range(L + 1))
    pos = path.positions
    p0, p1 = pos[:-1], pos[1:]
    # a segment touches a circle iff its distance-to-center range spans the
    # circle radius (min over the segment below, endpoint max above)
    dmin = np.stack([_seg_min_dist(p0, p1, centers[l]) for l in range(L + 1)])
    dend = np.stack(
        [
            np.maximum(
                np.hypot(p0[:, 0] - centers[l][0], p0[:, 1] - centers[l][1]),
                np.hypot(p1[:, 0] - centers[l][0], p1[:, 1] - centers[l][1]),
            )
            for l in range(L + 1)
        ]
    )
    touch = (dmin <= radii[:, None]) & (dend >= radii[:, None])
    start_idx, stop_idx = 0, len(p0)
    k0 = None
    if stopping_rule != "tau":
        rule, k0 = stopping_rule
        if rule != "k_to_0":
            raise PreconditionError(f"unknown stopping rule {stopping_rule!r}")
        hits_k = np.flatnonzero(touch[k0])
        if hits_k.size == 0:
            counts = np.zeros(L + 1, dtype=np.int64)
            return ExcursionCounts(np.asarray(center), counts,
                                   {"rule": stopping_rule, "violations": 0})
        start_idx = int(hits_k[0])
        hits_0 = np.flatnonzero(touch[0][start_idx:])
        stop_idx = start_idx + int(hits_0[0]) + 1 if hits_0.size else len(p0)
    counts = np.zeros(L + 1, dtype=np.int64)
    violations = 0
    for l in range(1, L + 1):
        ti = touch[l][start_idx:stop_idx]
        ro = touch[l - 1][start_idx:stop_idx]
        events = np.flatnonzero(ti | ro)
        armed = False
        for e in events:
            if armed and ti[e]:
                counts[l] += 1
                armed = False
                if ro[e]:
                    violations += 1
            if ro[e]:
                armed = True
    if stopping_rule != "tau":
        counts[: k0 + 1] = 0
    if violation_budget is not None and violations > violation_budget:
        raise ResolutionError(
            f"{violations} resolution violations exceed budget {violation_budget}"
        )
    return ExcursionCounts(
        np.asarray(center), counts, {"rule": stopping_rule, "violations": violations}
    )


def angular_increments(path, center, k, ladder):
    """Angles swept by completed inner-to-outer passages at level k.

    One angle per excursion from the circle at level k to the one at level
    k-1: the chart argument (about the ball's chart center) of the outer
    endpoint minus that of the inner endpoint, mod 2 pi.  Crossing points
    are linearly interpolated, so a dt-dependent tolerance applies.
    """
    centers, radii = _chart_circles(center, ladder, [k - 1, k])
    c_out, r_out = centers[0], radii[0]
    c_in, r_in = centers[1], radii[1]
    pos = path.positions
    p0, p1 = pos[:-1], pos[1:]
    din = _seg_min_dist(p0, p1, c_in)
    dout = _seg_min_dist(p0, p1, c_out)

    def _dend(c):
        return np.maximum(
            np.hypot(p0[:, 0] - c[0], p0[:, 1] - c[1]),
            np.hypot(p1[:, 0] - c[0], p1[:, 1] - c[1]),
        )

    touch_in = (din <= r_in) & (_dend(c_in) >= r_in)
    touch_out = (dout <= r_out) & (_dend(c_out) >= r_out)
    angles = []
    waiting_for_in = True
    start_angle = 0.0
    for i in np.flatnonzero(touch_in | touch_out):
        if waiting_for_in and touch_in[i]:
            q = _cross_point(p0[i], p1[i], c_in, r_in, inward=True)
            start_angle = math.atan2(q[1] - c_in[1], q[0] - c_in[0])
            waiting_for_in = False
        elif not waiting_for_in and touch_out[i]:
            q = _cross_point(p0[i], p1[i], c_out, r_out, inward=False)
            end_angle = math.atan2(q[1] - c_out[1], q[0] - c_out[0])
            angles.append((end_angle - start_angle) % (2.0 * math.pi))
            waiting_for_in = True
    return AngularSample(level=k, angles=np.asarray(angles))


def _cross_point(p0, p1, c, r, inward):
    d = p1 - p0
    w = p0 - c
    a = float(d @ d)
    if a == 0.0:
        return p0
    b = 2.0 * float(w @ d)
    cc = float(w @ w) - r * r
    disc = b * b - 4.0 * a * cc
    if disc <= 0.0:
        t = -b / (2.0 * a)
    else:
        root = math.sqrt(disc)
        t = (-b - root) / (2.0 * a) if inward else (-b + root) / (2.0 * a)
    t = min(max(t, 0.0), 1.0)
    return p0 + t * d


def sample_angular_increments(n, rng, rho=math.exp(-1.0), level=1):
    """Exact iid draws from the excursion endpoint angle law (the circle
    exit law at radius ratio rho; rho = 1/e on the unit-log ladder)."""
    from .analytic import CircleExitLaw

    return AngularSample(level=level, angles=CircleExitLaw(rho).sample(rng, n))


# ---------------------------------------------------------------------------
# Wasserstein-1 on the line


def _w1_discrete(mu, nu):
    atoms = np.concatenate([mu.atoms, nu.atoms])
    order = np.argsort(atoms, kind="stable")
    atoms = atoms[order]
    signed = np.concatenate([mu.weights, -nu.weights])[order]
    cdf_diff = np.cumsum(signed)[:-1]
    return float(np.sum(np.abs(cdf_diff) * np.diff(atoms)))


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)


def wasserstein1(sample, reference):
    """Wasserstein L1 distance between an empirical (or discrete) measure
    and a reference measure on the line.

    Discrete references are integrated exactly through the CDF difference.
    Continuous references (objects with a ppf) use the quantile form with
    per-piece Gauss-Legendre quadrature, exact up to the smoothness of the
    reference quantile on each 1/n sliver.
    """
    if isinstance(sample, AngularSample):
        values = sample.angles
    elif isinstance(sample, DiscreteMeasure):
        values = None
    else:
        values = np.asarray(sample, dtype=float)
    if values is not None and len(values) == 0:
        raise PreconditionError("empty sample")
    if isinstance(reference, DiscreteMeasure):
        mu = DiscreteMeasure.empirical(values) if values is not None else sample
        return _w1_discrete(mu, reference)
    if values is None:
        raise PreconditionError("weighted sample needs a discrete reference")
    return float(_w1_quantile(np.sort(values)[None, :], reference)[0])


def _w1_quantile(sorted_rows, law):
    """Batched quantile-form W1: rows are sorted samples of equal length.
    Replica-chunked so the (rows, n, nodes) work tensor stays small."""
    R, n = sorted_rows.shape
    edges = np.arange(n + 1) / n
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 / n
    u = mid[:, None] + half * _GL_NODES[None, :]  # (n, 16)
    q = law.ppf(u)  # shared across rows
    out = np.empty(R)
    chunk = max(1, int(4_000_000 // max(n, 1)))
    for lo in range(0, R, chunk):
        rows = sorted_rows[lo:lo + chunk]
        diff = np.abs(rows[:, :, None] - q[None, :, :])
        out[lo:lo + chunk] = np.sum(diff @ _GL_WEIGHTS, axis=1) * half
    return out


def wasserstein1_batch(samples, law):
    """W1 against a continuous law for many equal-size samples at once."""
    samples = np.asarray(samples, dtype=float)
    return _w1_quantile(np.sort(samples, axis=1), law)


def increment_concentration_event(sample, reference, c0, L, k):
    """Whether the empirical increment measure sits within the calibrated
    Wasserstein radius c0 log(L - k) / (2 sqrt(n)) of the reference."""
    if L - k < 2:
        raise PreconditionError("need k <= L - 2")
    d = wasserstein1(sample, reference)
    n = sample.n if isinstance(sample, AngularSample) else len(sample)
    return d <= c0 * math.log(L - k) / (2.0 * math.sqrt(n))


# ---------------------------------------------------------------------------
# net supremum statistics


@dataclass(frozen=True)
class NetStatistic:
    mode: str
    value: float
    argmax: int
    per_center: np.ndarray | None = None
    violations: int = 0

    def __post_init__(self):
        if self.per_center is not None and len(self.per_center):
            expect = float(np.max(self.per_center))
            if not math.isclose(self.value, expect, rel_tol=1e-12, abs_tol=1e-12):
                raise PreconditionError("value must equal the per-center max")


class SupremumEngine:
    """Runs the multi-center kernel over a subsampled net and reduces
    per-center statistics to their supremum.

    mode "counts" tracks sqrt(2 T) of level-`level` downcrossings per
    center; mode "occupation" additionally needs eps (geodesic) and tracks
    the normalised spherical occupation of B_d(center, eps).
    """

    def __init__(self, ladder, net, level, r_star, mode="counts", eps=None,
                 dt_scale=0.1, adapt=0.1, max_steps=10**9,
                 stop_upcross=None):
        if level > ladder.L or level < 1:
            raise PreconditionError("level must lie in 1..ladder depth")
        if mode == "occupation":
            if eps is None:
                raise PreconditionError("occupation mode needs eps")
            h_l = float(ladder.h[level])
            if not h_l / 100.0 - 1e-12 <= eps <= h_l + 1e-12:
                raise PreconditionError("eps outside [h_level/100, h_level]")
        elif mode != "counts":
            raise PreconditionError(f"unknown mode {mode!r}")
        self.ladder = ladder
        self.net = net
        self.level = int(level)
        self.mode = mode
        self.eps = eps
        self.r_star = float(r_star)
        self.exit_radius = geometry.chart_radius(r_star)
        m = len(net)
        h_out = float(ladder.h[level - 1])
        h_in = float(ladder.h[level])
        ac, ar = geometry.geodesic_disks_in_chart(net.centers, h_out)
        cc, cr = geometry.geodesic_disks_in_chart(net.centers, h_in)
        ax, ay = np.ascontiguousarray(ac[:, 0]), np.ascontiguousarray(ac[:, 1])
        cx, cy = np.ascontiguousarray(cc[:, 0]), np.ascontiguousarray(cc[:, 1])
        self._outer = (ax, ay, ar)
        self._inner = (cx, cy, cr)
        if mode == "occupation":
            oc, orad = geometry.geodesic_disks_in_chart(net.centers, eps)
            ox = np.ascontiguousarray(oc[:, 0])
            oy = np.ascontiguousarray(oc[:, 1])
            self._occ = (ox, oy, orad, np.ones(m, dtype=np.uint8))
        else:
            self._occ = (np.empty(0), np.empty(0), np.empty(0),
                         np.empty(0, dtype=np.uint8))
        gap = float(np.min(ar - cr))
        self.dt_cap = (dt_scale * gap) ** 2
        self.adapt = adapt
        self.max_steps = int(max_steps)
        self.stop_upcross = stop_upcross or (0.0, 0.0, 0)
        max_step_len = 6.0 * math.sqrt(2.0 * self.dt_cap)
        self._grid = build_center_grid(ax, ay, float(np.max(ar)) + max_step_len,
                                       self.exit_radius)

    def run(self, rng, positions=None):
        (ax, ay, ar) = self._outer
        (cx, cy, cr) = self._inner
        (ox, oy, orad, ow) = self._occ
        (x0, y0, inv_cell, nx, ny, cell_start, items) = self._grid
        up_in, up_out, n_up = self.stop_upcross
        counts, occ, violations, steps, reason = kernels.multi_center_excursions(
            self.exit_radius, ax, ay, ar, cx, cy, cr, ox, oy, orad, ow,
            x0, y0, inv_cell, nx, ny, cell_start, items,
            up_in, up_out, n_up, self.dt_cap, 1e-18, self.adapt,
            self.max_steps, rng, positions,
        )
        if reason == 2 and positions is None:
            raise ResolutionError(f"step budget {self.max_steps} exhausted")
        if self.mode == "counts":
            per = np.sqrt(2.0 * counts)
        else:
            per = occ / geometry.spherical_cap_area(self.eps)
        arg = int(np.argmax(per))
        return NetStatistic(self.mode, float(per[arg]), arg, per, violations)


def build_center_grid(ax, ay, cell, extent):
    """Uniform CSR grid over center positions; cell must be at least the
    largest tracked radius plus the largest step length."""
    x0 = min(float(np.min(ax)) - cell, -extent) - cell
    y0 = min(float(np.min(ay)) - cell, -extent) - cell
    x1 = max(float(np.max(ax)) + cell, extent) + cell
    y1 = max(float(np.max(ay)) + cell, extent) + cell
    nx = int(math.ceil((x1 - x0) / cell)) + 1
    ny = int(math.ceil((y1 - y0) / cell)) + 1
    gx = ((ax - x0) / cell).astype(np.int64)
    gy = ((ay - y0) / cell).astype(np.int64)
    flat = gx * ny + gy
    order = np.argsort(flat, kind="stable")
    items = order.astype(np.int64)
    cell_start = np.zeros(nx * ny + 1, dtype=np.int64)
    np.add.at(cell_start, flat + 1, 1)
    cell_start = np.cumsum(cell_start)
    return (x0, y0, 1.0 / cell, nx, ny, cell_start.astype(np.int64), items)


def net_supremum_bruteforce(path, net, ladder, level, mode="counts", eps=None):
    """Index-free oracle: every center checked against every path segment
    with the same segment-intersection events as the engine."""
    per = np.empty(len(net))
    violations = 0
    for j, u in enumerate(net.centers):
        if mode == "counts":
            ec = count_excursions(path, u, ladder, "tau")
            per[j] = math.sqrt(2.0 * ec.counts[level])
            violations += ec.provenance["violations"]
        else:
            from .brownian import occupation_time

            per[j] = occupation_time(path, u, eps, "sphere")
    arg = int(np.argmax(per))
    return NetStatistic(mode, float(per[arg]), arg, per, violations)
