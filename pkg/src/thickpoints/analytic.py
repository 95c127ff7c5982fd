"""Closed-form oracles: hitting laws, excursion tails, barrier curves,
thickness scales, Green's functions, Kac moments, and the circle exit law.

Everything here is deterministic.  Bounds that the source estimates hold
only up to an absolute constant are exposed with the constant set to 1;
callers calibrate the constant (see calibrate_constant).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import PreconditionError, RegimeError

# Exponential rate constant of the square-root occupation supremum tail:
# the tail decays like z * exp(-SUP_TAIL_RATE * sqrt(pi) * z).
SUP_TAIL_RATE = 2.0 * math.sqrt(2.0)


# ---------------------------------------------------------------------------
# thickness scales


def barrier_slope(L):
    """Per-level slope 2 - log(L)/L of the recentred count barrier."""
    if L < 2:
        raise PreconditionError("depth must be at least 2")
    return 2.0 - math.log(L) / L


def edge_distance(l, L):
    """Distance min(l, L - l) of a level from the ends of a depth-L ladder."""
    l = np.asarray(l)
    out = np.minimum(l, L - l)
    return out.item() if out.ndim == 0 else out


def thick_centering(eps):
    """Centering sqrt(2/pi) * (log(1/eps) - 0.5 * log log(1/eps)) for the
    square-root of the supremum occupation density; needs eps < 1/e."""
    if not 0.0 < eps < math.exp(-1.0):
        raise RegimeError("eps must lie in (0, e^{-1})")
    le = math.log(1.0 / eps)
    return math.sqrt(2.0 / math.pi) * (le - 0.5 * math.log(le))


def count_threshold(z, L):
    """Excursion-count threshold 2L(L - log L + z) matching offset z."""
    if L < 2:
        raise PreconditionError("depth must be at least 2")
    return 2.0 * L * (L - math.log(L) + np.asarray(z, dtype=float))


def occupation_count_shift(z, c):
    """Offset map z -> sqrt(2 pi) z + c linking occupation and count scales;
    c is a calibration constant depending on the base radius."""
    return math.sqrt(2.0 * math.pi) * np.asarray(z, dtype=float) + c


def thickness_scale(kind, **kw):
    """Dispatcher over the scale evaluators: kind in {'centering',
    'count_threshold', 'slope', 'edge'}."""
    if kind == "centering":
        return thick_centering(kw["eps"])
    if kind == "count_threshold":
        return count_threshold(kw["z"], kw["L"])
    if kind == "slope":
        return barrier_slope(kw["L"])
    if kind == "edge":
        return edge_distance(kw["l"], kw["L"])
    raise PreconditionError(f"unknown thickness scale {kind!r}")


# ---------------------------------------------------------------------------
# hitting and excursion laws


def hitting_probability(u1, u2, u3):
    """Probability log(u2/u3)/log(u1/u3) of reaching the circle at ladder
    scale u1 before the one at u3, starting on u2; needs u1 <= u2 <= u3."""
    if not (0 < u1 <= u2 <= u3) or u1 == u3:
        raise PreconditionError("need 0 < u1 <= u2 <= u3 with u1 < u3")
    return math.log(u2 / u3) / math.log(u1 / u3)


def excursion_count_tail(k, l, n):
    """Survival function (k/(l-1)) * (1 - 1/l)^n of the level-l downcrossing
    count for a walk released at level k and stopped at level 0."""
    if not 1 <= k <= l - 1:
        raise PreconditionError("need 1 <= k <= l - 1")
    n = np.asarray(n)
    if np.any(n < 0):
        raise PreconditionError("count must be nonnegative")
    out = (k / (l - 1.0)) * (1.0 - 1.0 / l) ** np.asarray(n, dtype=float)
    return out.item() if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# barrier curves


@dataclass(frozen=True)
class BarrierSpec:
    """A barrier curve on the sqrt(2 T) scale over levels 0..L.

    kinds:
      center       slope * l + z
      upper        center + edge^{1/4}
      lower        center - edge^{1/4}
      linear       a + (b - a) * l / L
      pinned       xhat * (1 - l/L) + slope * l + z * l / L
      pinned_lower pinned - edge^{1/4}
    """

    kind: str
    L: int
    z: float = 0.0
    a: float | None = None
    b: float | None = None
    xhat: float | None = None

    def __call__(self, l):
        return barrier_value(self, l)


def barrier_value(spec, l):
    l = np.asarray(l, dtype=float)
    if np.any(l < 0) or np.any(l > spec.L):
        raise PreconditionError("level outside 0..L")
    L = spec.L
    kind = spec.kind
    if kind == "linear":
        out = spec.a + (spec.b - spec.a) * l / L
    else:
        rho = barrier_slope(L)
        if kind == "center":
            out = rho * l + spec.z
        elif kind == "upper":
            out = rho * l + spec.z + edge_distance(l, L) ** 0.25
        elif kind == "lower":
            out = rho * l + spec.z - edge_distance(l, L) ** 0.25
        elif kind == "pinned":
            out = spec.xhat * (1.0 - l / L) + rho * l + spec.z * l / L
        elif kind == "pinned_lower":
            out = (
                spec.xhat * (1.0 - l / L)
                + rho * l
                + spec.z * l / L
                - edge_distance(l, L) ** 0.25
            )
        else:
            raise PreconditionError(f"unknown barrier kind {spec.kind!r}")
    return out.item() if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# Green's function on disks


def green_disk(a, x, y):
    """Green's function of the Euclidean disk B_e(0, a):
    -(1/pi) log|x-y| + (1/pi) log((|y|/a) |x - y*|), y* = a^2 y / |y|^2,
    with the y = 0 row -(1/pi) log(|x|/a)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    rx = math.hypot(x[0], x[1])
    ry = math.hypot(y[0], y[1])
    if rx > a + 1e-12 or ry > a + 1e-12:
        raise PreconditionError("points must lie in the closed disk")
    d = math.hypot(x[0] - y[0], x[1] - y[1])
    if d == 0.0:
        raise PreconditionError("Green's function diverges on the diagonal")
    if ry == 0.0:
        return (-math.log(rx) + math.log(a)) / math.pi
    ystar = (a * a / (ry * ry)) * y
    return (
        -math.log(d) + math.log((ry / a) * math.hypot(x[0] - ystar[0], x[1] - ystar[1]))
    ) / math.pi


def circle_average_log(b, y):
    """Average of log|x - y| over the circle |x| = b: log(max(b, |y|))."""
    y = np.asarray(y, dtype=float)
    ry = math.hypot(y[0], y[1])
    return math.log(max(b, ry))


def circle_average_green(k, ladder, y):
    """Uniform average of G_{r_{k-1}}(., y) over the circle |x| = r_k.

    For |y| <= r_k the averaged log terms telescope to
    (1/pi) log(r_{k-1}/r_k) = 1/pi exactly (unit log spacing)."""
    if not 1 <= k <= ladder.L:
        raise PreconditionError("level must satisfy 1 <= k <= L")
    y = np.asarray(y, dtype=float)
    ry = math.hypot(y[0], y[1])
    if ry > ladder.r[k] + 1e-12:
        raise PreconditionError("point must lie inside the averaging circle")
    return 1.0 / math.pi


# ---------------------------------------------------------------------------
# occupation moments (Kac)


@dataclass(frozen=True)
class OccupationMoment:
    order: int
    value: float
    stderr: float
    envelope: float


def occupation_moment(n, k, alpha, ladder, rng=None, samples=200_000, c=1.0, c0=1.0):
    """Moments of the occupation time of B_d(v, h(alpha)) over one excursion
    from the circle at level k to the one at level k-1.

    n = 1 is exact: omega_{h(alpha)} / pi.  For n >= 2 a Monte Carlo
    evaluation of the n-fold Kac integral (chained disk Green's kernels with
    conformal area weights) is returned together with the envelope
    c^n n! alpha^{2n} (log(r_{k-1}/alpha) + c0)^n.
    """
    from .geometry import conformal_factor, geodesic_of_euclidean, spherical_cap_area

    if n < 1:
        raise PreconditionError("moment order must be >= 1")
    if not 1 <= k <= ladder.L:
        raise PreconditionError("level must satisfy 1 <= k <= L")
    eps = geodesic_of_euclidean(alpha)
    h_k = float(ladder.h[k])
    if not h_k / 100.0 - 1e-12 <= eps <= h_k + 1e-12:
        raise RegimeError("ball radius outside [h_k/100, h_k]")
    r_out = float(ladder.r[k - 1])
    envelope = (
        c**n
        * math.factorial(n)
        * alpha ** (2 * n)
        * (math.log(r_out / alpha) + c0) ** n
    )
    if n == 1:
        return OccupationMoment(1, spherical_cap_area(eps) / math.pi, 0.0, envelope)
    if rng is None:
        rng = np.random.default_rng(0)
    start = np.array([float(ladder.r[k]), 0.0])
    pts = np.empty((samples, n, 2))
    for j in range(n):
        rad = alpha * np.sqrt(rng.random(samples))
        ang = rng.random(samples) * 2.0 * np.pi
        pts[:, j, 0] = rad * np.cos(ang)
        pts[:, j, 1] = rad * np.sin(ang)
    vals = _green_chain(start, pts, r_out)
    vals *= np.prod(conformal_factor(pts), axis=1)
    scale = math.factorial(n) * (math.pi * alpha**2) ** n
    value = scale * float(np.mean(vals))
    stderr = scale * float(np.std(vals, ddof=1) / math.sqrt(samples))
    return OccupationMoment(n, value, stderr, envelope)


def _green_vec(a, x, y):
    """Vectorised disk Green's function for point arrays (m, 2)."""
    d = np.hypot(x[:, 0] - y[:, 0], x[:, 1] - y[:, 1])
    ry = np.hypot(y[:, 0], y[:, 1])
    out = np.empty(len(d))
    zero = ry < 1e-300
    ystar = np.empty_like(y)
    ry_safe = np.where(zero, 1.0, ry)
    ystar[:, 0] = a * a * y[:, 0] / ry_safe**2
    ystar[:, 1] = a * a * y[:, 1] / ry_safe**2
    reg = np.hypot(x[:, 0] - ystar[:, 0], x[:, 1] - ystar[:, 1])
    with np.errstate(divide="ignore"):
        out = (-np.log(d) + np.log((ry_safe / a) * reg)) / math.pi
        rx = np.hypot(x[:, 0], x[:, 1])
        out[zero] = (-np.log(rx[zero]) + math.log(a)) / math.pi
    return out


def _green_chain(start, pts, a):
    m, n, _ = pts.shape
    x0 = np.broadcast_to(start, (m, 2))
    vals = _green_vec(a, x0, pts[:, 0, :])
    for j in range(1, n):
        vals = vals * _green_vec(a, pts[:, j - 1, :], pts[:, j, :])
    return vals


# ---------------------------------------------------------------------------
# circle exit law (harmonic measure seen from an interior point)


class CircleExitLaw:
    """Exit-position angle law on a circle for a walk started at relative
    radius rho in (0, 1), measured from the start's direction, supported on
    [0, 2 pi).  Density (1 - rho^2) / (2 pi (1 - 2 rho cos t + rho^2))."""

    def __init__(self, rho):
        if not 0.0 < rho < 1.0:
            raise PreconditionError("radius ratio must lie in (0, 1)")
        self.rho = float(rho)
        self._kappa = (1.0 + rho) / (1.0 - rho)

    def density(self, theta):
        theta = np.asarray(theta, dtype=float)
        rho = self.rho
        out = (1.0 - rho * rho) / (
            2.0 * np.pi * (1.0 - 2.0 * rho * np.cos(theta) + rho * rho)
        )
        return out.item() if out.ndim == 0 else out

    def cdf(self, theta):
        theta = np.asarray(theta, dtype=float)
        t = np.clip(theta, 0.0, 2.0 * np.pi)
        lower = (1.0 / np.pi) * np.arctan(self._kappa * np.tan(t / 2.0))
        upper = 1.0 - (1.0 / np.pi) * np.arctan(
            self._kappa * np.tan((2.0 * np.pi - t) / 2.0)
        )
        out = np.where(t < np.pi, lower, upper)
        out = np.where(np.isclose(t, np.pi), 0.5, out)
        return out.item() if out.ndim == 0 else out

    def ppf(self, u):
        u = np.asarray(u, dtype=float)
        lo = 2.0 * np.arctan(np.tan(np.pi * u) / self._kappa)
        hi = 2.0 * np.pi - 2.0 * np.arctan(np.tan(np.pi * (1.0 - u)) / self._kappa)
        out = np.where(u < 0.5, lo, hi)
        out = np.where(np.isclose(u, 0.5), np.pi, out)
        return out.item() if out.ndim == 0 else out

    def sample(self, rng, size=None):
        return self.ppf(rng.random(size))

    def fourier_coefficient(self):
        """E[exp(i theta)] = rho, the first Fourier coefficient."""
        return self.rho


def exit_angle_density(rho, theta):
    return CircleExitLaw(rho).density(theta)


def exit_angle_sample(rho, rng, size=None):
    return CircleExitLaw(rho).sample(rng, size)


# ---------------------------------------------------------------------------
# envelope shapes (constants set to 1, regimes enforced)


def _check(cond, msg):
    if not cond:
        raise RegimeError(msg)


def bound_envelope(kind, **p):
    """Evaluate the functional shape of a named tail or barrier bound with
    its constant factor set to 1.  Out-of-regime parameters raise RegimeError.

    kinds and parameters:
      count_tail_near_pole      k, L, z        k L e^{-2L} e^{-2z}
      increment_tail            L, k, a, b     e^{-2(L-k)-2(a-b)-(a-b)^2/2(L-k)} L^{2(L-k)/L}
      barrier_endpoint          L, z           (1+z) e^{-2L-2z-z^2/4L}
      barrier_interior          L, k, z, p     (1+z)(1+p) e^{-2k-2(z-p)-(z-p)^2/4k}
      barrier_from_level        L, k, t, m     (1+t) sqrt(m) e^{-2(L-k)-2t-t^2/4(L-k)}
      barrier_window            L, k, z, j, m  e^{-2k-2z-2k_edge^{1/4}+2j} m^2 (1+z+m+k_edge^{1/4})(1+j)
      barrier_endpoint_left     L, z           e^{-2L-2z-z^2/4L}
      barrier_interior_left     L, k, z, p     (1+p) e^{-2k-2(z-p)-(z-p)^2/4k}
      barrier_from_level_left   L, k, t, m     as barrier_from_level
      sup_count_tail            z, L           z e^{-2z}
      sup_occupation_tail       z              z e^{-2 sqrt(2 pi) z}
      sup_count_lower           z, c           (1+z)e^{-2z} / ((1+z)e^{-2z} + c)
      gw_barrier_upper          L, x, y, a, b  ((1+a-x)(1+b-y)/L) sqrt(x/(yL)) e^{-(x-y)^2/2L}
      gw_barrier_lower          L, x, y, a, b  ((1+a-x)(1+b-y)/L) min(sqrt(x/(yL)),1) e^{-(x-y)^2/2L}
      gw_increment_tail         l, theta       e^{-theta^2/2l}
      occupation_deviation      n, delta       e^{-delta^2 n}
      wasserstein_tail          x              2 e^{-x^2}
      occupation_difference_tail theta, dbar   e^{-theta^2/sqrt(dbar)}
    """
    if kind == "count_tail_near_pole":
        L, k, z = p["L"], p["k"], p["z"]
        _check(1 <= k <= L - 1, "need 1 <= k <= L-1")
        _check(abs(z) <= math.log(L), "need |z| <= log L")
        return k * L * math.exp(-2.0 * L - 2.0 * z)
    if kind == "increment_tail":
        L, k, a, b = p["L"], p["k"], p["a"], p["b"]
        _check(0 <= k < L, "need 0 <= k < L")
        lim = L / math.log(L)
        _check(a <= lim and b <= lim, "need a, b <= L/log L")
        g = L - k
        return math.exp(-2.0 * g - 2.0 * (a - b) - (a - b) ** 2 / (2.0 * g)) * L ** (
            2.0 * g / L
        )
    if kind == "barrier_endpoint":
        L, z = p["L"], p["z"]
        _check(0 <= z <= math.log(L), "need 0 <= z <= log L")
        return (1.0 + z) * math.exp(-2.0 * L - 2.0 * z - z * z / (4.0 * L))
    if kind == "barrier_interior":
        L, k, z, q = p["L"], p["k"], p["z"], p["p"]
        _check(k >= L / 2.0, "need k >= L/2")
        _check(0 <= z <= math.log(L), "need 0 <= z <= log L")
        _check(0 <= q <= k, "need 0 <= p <= k")
        return (
            (1.0 + z)
            * (1.0 + q)
            * math.exp(-2.0 * k - 2.0 * (z - q) - (z - q) ** 2 / (4.0 * k))
        )
    if kind in ("barrier_from_level", "barrier_from_level_left"):
        L, k, t, m = p["L"], p["k"], p["t"], p["m"]
        _check(k <= math.log(L) ** 5, "need k <= log^5 L")
        _check(t >= 0 and m > 0, "need t >= 0 and positive start")
        g = L - k
        return (1.0 + t) * math.sqrt(m) * math.exp(
            -2.0 * g - 2.0 * t - t * t / (4.0 * g)
        )
    if kind == "barrier_window":
        L, k, z, j, m = p["L"], p["k"], p["z"], p["j"], p["m"]
        _check(m <= math.log(L), "need start band within log L of the pole")
        _check(k >= L - math.log(L) ** 4, "need k >= L - log^4 L")
        _check(0 <= z <= math.log(L), "need 0 <= z <= log L")
        ke = edge_distance(k, L) ** 0.25
        alpha_k = barrier_slope(L) * k + z + ke
        _check(0 <= j <= alpha_k / 2.0, "need 0 <= j <= barrier(k)/2")
        return (
            math.exp(-2.0 * k - 2.0 * z - 2.0 * ke + 2.0 * j)
            * m**2
            * (1.0 + z + m + ke)
            * (1.0 + j)
        )
    if kind == "barrier_endpoint_left":
        L, z = p["L"], p["z"]
        _check(abs(z) <= math.log(L), "need |z| <= log L")
        return math.exp(-2.0 * L - 2.0 * z - z * z / (4.0 * L))
    if kind == "barrier_interior_left":
        L, k, z, q = p["L"], p["k"], p["z"], p["p"]
        _check(k >= L / 2.0, "need k >= L/2")
        _check(abs(z) <= math.log(L), "need |z| <= log L")
        _check(q <= k, "need p <= k")
        return (1.0 + q) * math.exp(
            -2.0 * k - 2.0 * (z - q) - (z - q) ** 2 / (4.0 * k)
        )
    if kind == "sup_count_tail":
        z, L = p["z"], p["L"]
        _check(0 <= z <= math.log(L), "need 0 <= z <= log L")
        return z * math.exp(-2.0 * z)
    if kind == "sup_occupation_tail":
        z = p["z"]
        _check(z >= 0, "need z >= 0")
        return z * math.exp(-SUP_TAIL_RATE * math.sqrt(math.pi) * z)
    if kind == "sup_count_lower":
        z, c = p["z"], p["c"]
        _check(z >= 0 and c > 0, "need z >= 0 and c > 0")
        base = (1.0 + z) * math.exp(-2.0 * z)
        return base / (base + c)
    if kind in ("gw_barrier_upper", "gw_barrier_lower"):
        L, x, y, a, b = p["L"], p["x"], p["y"], p["a"], p["b"]
        eta = p.get("eta", 2.0)
        _check(math.sqrt(2.0) <= x <= eta * L, "need sqrt(2) <= x <= eta L")
        _check(math.sqrt(2.0) <= y <= eta * L, "need sqrt(2) <= y <= eta L")
        _check(x <= a and y <= b, "need x <= a and y <= b")
        pref = (1.0 + a - x) * (1.0 + b - y) / L
        root = math.sqrt(x / (y * L))
        if kind == "gw_barrier_lower":
            root = min(root, 1.0)
        return pref * root * math.exp(-((x - y) ** 2) / (2.0 * L))
    if kind == "gw_increment_tail":
        l, theta = p["l"], p["theta"]
        _check(l >= 1 and theta >= 0, "need l >= 1 and theta >= 0")
        return math.exp(-theta * theta / (2.0 * l))
    if kind == "occupation_deviation":
        n, delta = p["n"], p["delta"]
        _check(n >= 1 and 0 < delta < 1, "need n >= 1 and delta in (0,1)")
        return math.exp(-delta * delta * n)
    if kind == "wasserstein_tail":
        x = p["x"]
        _check(x > 0, "need x > 0")
        return 2.0 * math.exp(-x * x)
    if kind == "occupation_difference_tail":
        theta, dbar = p["theta"], p["dbar"]
        _check(theta >= 0 and dbar > 0, "need theta >= 0 and dbar > 0")
        return math.exp(-theta * theta / math.sqrt(dbar))
    raise RegimeError(f"unknown envelope kind {kind!r}")


def calibrate_constant(values, envelopes, bound="upper"):
    """Single constant making value <= c * envelope (upper) or
    value >= c * envelope (lower) hold across the whole grid."""
    values = np.asarray(values, dtype=float)
    envelopes = np.asarray(envelopes, dtype=float)
    if np.any(envelopes <= 0):
        raise PreconditionError("envelopes must be positive")
    ratios = values / envelopes
    return float(ratios.max()) if bound == "upper" else float(ratios.min())
