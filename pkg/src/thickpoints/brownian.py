"""Path engines.

Two engines by design: an exact no-time radial level chain for excursion
count laws (unbiased, fast), and a discretised planar walk with exact
Gaussian increments for everything involving time.  Spherical quantities
come from the planar walk through the stereographic chart: hitting events
are invariant under the time change, and the spherical clock is recovered by
weighting planar time increments with the conformal factor g.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import geometry
from ._backend import kernels
from .analytic import CircleExitLaw
from .errors import PreconditionError, ResolutionError


@dataclass(frozen=True)
class PathConfig:
    """Discretised-walk configuration.

    domain is ("disk", radius), ("annulus", r_in, r_out) or ("cap", r_star);
    the cap form is the chart image B_e(0, 2 tan(r_star/2)).  dt_cap is the
    largest time step, dt scales down as adapt * d^2 with the distance d to
    the tracked boundary, floored at dt_floor.
    """

    domain: tuple
    dt_cap: float = 1e-4
    dt_floor: float = 1e-12  # keeps accumulated times strictly increasing
    adapt: float = 0.1
    max_steps: int = 10**8
    seed: int = 0
    start: tuple = (0.0, 0.0)

    def __post_init__(self):
        if self.dt_cap <= 0 or self.dt_floor <= 0 or self.adapt <= 0:
            raise PreconditionError("step policy must be positive")

    def rng(self):
        return np.random.default_rng(np.random.SeedSequence(self.seed))


@dataclass(frozen=True)
class DiscretePath:
    """A discretised trajectory in the chart with its planar clock."""

    positions: np.ndarray
    times: np.ndarray
    terminal_reason: str

    def __post_init__(self):
        if len(self.positions) != len(self.times):
            raise PreconditionError("positions and times must align")
        if len(self.times) > 1 and not np.all(np.diff(self.times) > 0):
            raise PreconditionError("times must be strictly increasing")

    @property
    def duration(self):
        return float(self.times[-1])


def sample_circle_exit(start, center, radius, rng):
    """Exact exit point on the circle |x - center| = radius for a walk from
    an interior start, sampled from the harmonic-measure angle law."""
    start = np.asarray(start, dtype=float)
    center = np.asarray(center, dtype=float)
    offset = start - center
    rho = math.hypot(offset[0], offset[1]) / radius
    if rho >= 1.0:
        raise PreconditionError("start must lie strictly inside the circle")
    if rho == 0.0:
        theta = 2.0 * math.pi * rng.random()
        return center + radius * np.array([math.cos(theta), math.sin(theta)])
    base = math.atan2(offset[1], offset[0])
    theta = base + CircleExitLaw(rho).sample(rng)
    return center + radius * np.array([math.cos(theta), math.sin(theta)])


def radial_excursion_chain(k_start, ladder, target_level, rng, n_chains=1):
    """Exact-in-law per-level downcrossing counts for the nested-circle
    chain released at level k_start and stopped at level 0.

    On the unit-log ladder the level index is a fair walk on 0..target_level
    (reflected below, absorbed at 0), and each inward move l-1 -> l is one
    downcrossing at level l.  Counts at levels <= k_start are zeroed by
    convention.  Returns an int64 array (n_chains, target_level + 1).
    """
    if not 0 < k_start < target_level:
        raise PreconditionError("need 0 < k_start < target_level")
    if target_level > ladder.L:
        raise PreconditionError("target level exceeds ladder depth")
    M = int(target_level)
    counts = np.zeros((n_chains, M + 1), dtype=np.int64)
    level = np.full(n_chains, int(k_start), dtype=np.int64)
    alive = level > 0
    while alive.any():
        idx = np.flatnonzero(alive)
        up = rng.random(idx.size) < 0.5
        lev = level[idx]
        move = np.where(lev >= M, -1, np.where(up, 1, -1))
        lev = lev + move
        level[idx] = lev
        movers = idx[move > 0]
        if movers.size:
            np.add.at(counts, (movers, level[movers]), 1)
        alive[idx[lev == 0]] = False
    counts[:, : k_start + 1] = 0
    return counts


def chain_children_counts(n_parents, level, depth, n_samples, rng):
    """Conditional one-level cascade of the nested-circle chain: total
    downcrossings at level+1 produced by n_parents completed downcrossings
    at the given level, walked on levels level-1..depth (reflected at depth).

    Samples the walk dynamics directly (fair steps), without assuming the
    geometric offspring reduction, so it can serve as its empirical check.
    """
    if not 0 < level < depth:
        raise PreconditionError("need 0 < level < depth")
    total = np.zeros(n_samples, dtype=np.int64)
    for _ in range(n_parents):
        pos = np.full(n_samples, int(level), dtype=np.int64)
        active = np.ones(n_samples, dtype=bool)
        while active.any():
            idx = np.flatnonzero(active)
            up = rng.random(idx.size) < 0.5
            lev = pos[idx]
            move = np.where(lev >= depth, -1, np.where(up, 1, -1))
            lev = lev + move
            pos[idx] = lev
            dived = idx[(move > 0) & (lev == level + 1)]
            total[dived] += 1
            active[idx[lev == level - 1]] = False
    return total


def simulate_planar_path(config, rng=None):
    """Discretised walk until first exit of the configured domain.

    Increments are exactly Gaussian with variance dt per coordinate; dt
    follows the adaptive policy of the config.  Raises ResolutionError when
    the step budget runs out rather than truncating silently.
    """
    if rng is None:
        rng = config.rng()
    kind = config.domain[0]
    if kind == "disk":
        radius = config.domain[1]
    elif kind == "cap":
        radius = geometry.chart_radius(config.domain[1])
    elif kind == "annulus":
        return _annulus_path(config, rng)
    else:
        raise PreconditionError(f"unknown domain {config.domain!r}")
    xs, ys, ts, reason = kernels.disk_exit_path(
        config.start[0], config.start[1], radius, config.dt_cap,
        config.dt_floor, config.adapt, config.max_steps, rng,
    )
    if reason == 2:
        raise ResolutionError(f"step budget {config.max_steps} exhausted")
    return DiscretePath(np.column_stack([xs, ys]), ts, "boundary")


def _annulus_path(config, rng):
    r_in, r_out = config.domain[1], config.domain[2]
    x, y = config.start
    if not r_in < math.hypot(x, y) < r_out:
        raise PreconditionError("start must lie inside the annulus")
    xs, ys, ts = [x], [y], [0.0]
    t = 0.0
    for _ in range(config.max_steps):
        r = math.hypot(x, y)
        if r <= r_in:
            return DiscretePath(np.column_stack([xs, ys]), np.asarray(ts), "inner")
        if r >= r_out:
            return DiscretePath(np.column_stack([xs, ys]), np.asarray(ts), "outer")
        d = min(r - r_in, r_out - r)
        dt = min(max(config.adapt * d * d, config.dt_floor), config.dt_cap)
        g = rng.standard_normal(2)
        s = math.sqrt(dt)
        x += s * g[0]
        y += s * g[1]
        t += dt
        xs.append(x)
        ys.append(y)
        ts.append(t)
    raise ResolutionError(f"step budget {config.max_steps} exhausted")


def hitting_fraction(u1, u2, u3, n_paths, rng, adapt=0.1, max_steps=10**7):
    """Monte Carlo estimate of reaching the circle at ladder scale u1 before
    the one at u3 from a uniform start on u2 (chart radii equal the scales).
    Returns (fraction, budget_exhausted)."""
    if not 0 < u1 < u2 < u3:
        raise PreconditionError("need 0 < u1 < u2 < u3")
    floor = (1e-6 * u1) ** 2
    hit, budget = kernels.annulus_exit_batch(
        n_paths, u2, u1, u3, 1.0, floor, adapt, max_steps, rng
    )
    return float(np.mean(hit)), budget


def occupation_time(path, center, eps, normalization="plane"):
    """Normalised occupation of a ball along a discretised path: midpoint
    indicator weighting of each time increment, divided by pi eps^2 in the
    plane or by the cap area on the sphere (with the spherical clock)."""
    if eps <= 0:
        raise PreconditionError("ball radius must be positive")
    pos = path.positions
    if len(pos) < 2:
        return 0.0
    mids = 0.5 * (pos[1:] + pos[:-1])
    dts = np.diff(path.times)
    if normalization == "plane":
        center = np.asarray(center, dtype=float)
        inside = (mids[:, 0] - center[0]) ** 2 + (mids[:, 1] - center[1]) ** 2 <= eps**2
        return float(np.sum(dts[inside]) / (math.pi * eps**2))
    if normalization == "sphere":
        c, radius = geometry.geodesic_disk_in_chart(center, eps)
        inside = (mids[:, 0] - c[0]) ** 2 + (mids[:, 1] - c[1]) ** 2 <= radius**2
        weights = geometry.conformal_factor(mids[inside])
        return float(np.sum(dts[inside] * weights) / geometry.spherical_cap_area(eps))
    raise PreconditionError(f"unknown normalization {normalization!r}")


@dataclass(frozen=True)
class TimeChangedPath:
    """Planar path re-read as a spherical one: lifted positions and the
    spherical clock tau(t) = integral of g along the planar path."""

    sphere_points: np.ndarray
    sphere_times: np.ndarray
    plane_times: np.ndarray = field(repr=False)

    def plane_time_of(self, sphere_t):
        """The time-change map: planar time at a given spherical time."""
        return np.interp(sphere_t, self.sphere_times, self.plane_times)

    def sphere_time_of(self, plane_t):
        return np.interp(plane_t, self.plane_times, self.sphere_times)


def time_change(path):
    """Lift a planar path to the sphere with its reparametrised clock.

    The spherical time increment over a planar step of length dt is
    g(midpoint) * dt, so the clock is strictly increasing and the planar
    exit time is the clock image of the spherical exit time (up to
    discretisation of g along the segment).
    """
    pos = path.positions
    mids = 0.5 * (pos[1:] + pos[:-1])
    dts = np.diff(path.times)
    sphere_times = np.concatenate(
        [[0.0], np.cumsum(geometry.conformal_factor(mids) * dts)]
    )
    return TimeChangedPath(
        sphere_points=geometry.lift_to_sphere(pos),
        sphere_times=sphere_times,
        plane_times=path.times.copy(),
    )


def exit_statistics(n_paths, start, radius, rng, dt_cap=1e-4, adapt=0.1,
                    dt_floor=1e-18, max_steps=10**8):
    """Exit angles and exit times of disk walks (kernel backed)."""
    return kernels.disk_exit_angles_batch(
        n_paths, start[0], start[1], radius, dt_cap, dt_floor, adapt,
        max_steps, rng,
    )
