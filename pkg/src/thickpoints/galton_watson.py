"""Critical Galton-Watson engine with geometric(1/2) offspring.

One step of the chain takes n parents to a negative-binomial number of
children (the n-fold convolution of geometric(1/2) on {0, 1, 2, ...}), which
is exactly the level-to-level law of nested-annulus downcrossing counts on
the unit-log radius ladder.  Everything distributional here is computed by
exact dynamic programming over a truncated state space; every truncated
result carries a certificate of lost mass.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln, nbdtrc

from .analytic import BarrierSpec, bound_envelope
from .errors import PreconditionError, TruncationError


def offspring_pmf(j):
    """Geometric(1/2) offspring mass 2^{-(j+1)} on {0, 1, 2, ...}."""
    j = np.asarray(j)
    if np.any(j < 0):
        raise PreconditionError("offspring count must be nonnegative")
    out = np.exp2(-(np.asarray(j, dtype=float) + 1.0))
    return out.item() if out.ndim == 0 else out


def transition_pmf(n, j):
    """One-step mass P(T' = j | T = n): C(n+j-1, j) 2^{-(n+j)} for n >= 1,
    computed in log space; n = 0 is absorbing (point mass at 0)."""
    n = int(n)
    j = np.asarray(j)
    if np.any(j < 0):
        raise PreconditionError("child count must be nonnegative")
    jf = np.asarray(j, dtype=float)
    if n == 0:
        out = np.where(jf == 0, 1.0, 0.0)
        return out.item() if out.ndim == 0 else out
    logp = (
        gammaln(n + jf)
        - gammaln(jf + 1.0)
        - gammaln(float(n))
        - (n + jf) * math.log(2.0)
    )
    out = np.exp(logp)
    return out.item() if out.ndim == 0 else out


_MATRIX_CACHE = {"size": 0, "matrix": None}


def transition_matrix(size):
    """Dense one-step matrix T[n, j] for 0 <= n, j < size, cached and grown
    on demand.  Row 0 is the absorbing point mass at 0."""
    if _MATRIX_CACHE["size"] >= size:
        return _MATRIX_CACHE["matrix"][:size, :size]
    n = np.arange(size, dtype=float)[:, None]
    j = np.arange(size, dtype=float)[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        logp = (
            gammaln(n + j) - gammaln(j + 1.0) - gammaln(np.maximum(n, 1.0))
            - (n + j) * math.log(2.0)
        )
    mat = np.exp(logp)
    mat[0, :] = 0.0
    mat[0, 0] = 1.0
    _MATRIX_CACHE["size"] = size
    _MATRIX_CACHE["matrix"] = mat
    return mat


def simulate_gw(n0, steps, rng, n_paths=1):
    """Trajectories of the chain from n0, shape (n_paths, steps + 1)."""
    if n0 < 0:
        raise PreconditionError("initial count must be nonnegative")
    out = np.zeros((n_paths, steps + 1), dtype=np.int64)
    out[:, 0] = n0
    cur = out[:, 0].copy()
    for l in range(1, steps + 1):
        alive = cur > 0
        nxt = np.zeros_like(cur)
        if alive.any():
            nxt[alive] = rng.negative_binomial(cur[alive], 0.5)
        out[:, l] = nxt
        cur = nxt
    return out if n_paths > 1 else out[0]


def _propagate(pi, width):
    """One exact DP step: pi' = pi @ T restricted to j < width."""
    mat = transition_matrix(max(len(pi), width))
    return pi @ mat[: len(pi), :width]


def sqrt_increment_tail(n0, l, theta, tol=1e-12):
    """Exact P(|sqrt(2 T_l) - sqrt(2 T_0)| >= theta) from T_0 = n0, via DP
    with certified state truncation (lost mass < tol or TruncationError)."""
    probs, lost = sqrt_increment_tail_grid([n0], l, np.atleast_1d(theta), tol=tol)
    return float(probs[0, l - 1, 0]) if np.ndim(theta) == 0 else probs[0, l - 1]


def sqrt_increment_tail_grid(n0_list, l_max, thetas, tol=1e-12):
    """Tail probabilities for every (n0, l <= l_max, theta) in one DP sweep.

    Returns (probs, lost) with probs shaped (len(n0_list), l_max,
    len(thetas)); lost is the common truncation certificate.
    """
    n0_list = [int(v) for v in n0_list]
    thetas = np.asarray(thetas, dtype=float)
    if min(n0_list) < 1 or l_max < 1 or np.any(thetas < 0):
        raise PreconditionError("need n0 >= 1, l >= 1, theta >= 0")
    width = max(n0_list) + 1
    for attempt in range(8):
        cap = int(
            (math.sqrt(2.0 * max(n0_list)) + 6.0 * math.sqrt(l_max) + 8.0 * (attempt + 2)) ** 2
            * (attempt + 1)
        )
        cap = max(cap, 4 * width, 256)
        pis = np.zeros((len(n0_list), cap))
        for i, n0 in enumerate(n0_list):
            pis[i, n0] = 1.0
        sqrt2j = np.sqrt(2.0 * np.arange(cap))
        probs = np.empty((len(n0_list), l_max, len(thetas)))
        worst_lost = 0.0
        mat = transition_matrix(cap)
        for l in range(1, l_max + 1):
            pis = pis @ mat
            mass = pis.sum(axis=1)
            worst_lost = max(worst_lost, float((1.0 - mass).max()))
            cum = np.cumsum(pis, axis=1)
            for i, n0 in enumerate(n0_list):
                centre = math.sqrt(2.0 * n0)
                lo_idx = np.searchsorted(sqrt2j, centre - thetas, side="right")
                hi_idx = np.searchsorted(sqrt2j, centre + thetas - 1e-12, side="left")
                below = np.where(lo_idx > 0, cum[i, np.maximum(lo_idx - 1, 0)], 0.0)
                above = mass[i] - np.where(hi_idx > 0, cum[i, hi_idx - 1], 0.0)
                probs[i, l - 1, :] = np.where(thetas <= 0, 1.0, below + above)
        if worst_lost < tol:
            return probs, worst_lost
    raise TruncationError(
        f"could not certify truncation below {tol}", achieved=worst_lost
    )


@dataclass(frozen=True)
class GWBarrierProblem:
    """A barrier-crossing event for the chain on the sqrt(2 T) scale.

    The chain starts with mass n0 at level start_level and runs to level L.
    At each intermediate level l (start_level < l < L, l not in skip) the
    constraint is sqrt(2 T_l) <= barrier(l), and above tube(l) when a tube is
    present (both non-strict).  The terminal readout at level L is either
    ("bin", y, delta) for sqrt(2 T_L) in [y, y + delta] or ("tail", y) for
    sqrt(2 T_L) >= y.
    """

    n0: int
    L: int
    barrier: object  # callable level -> value, or BarrierSpec
    terminal: tuple
    tube: object | None = None
    skip: frozenset = field(default_factory=frozenset)
    start_level: int = 0

    def barrier_at(self, l):
        return float(self.barrier(l))

    def tube_at(self, l):
        return float(self.tube(l)) if self.tube is not None else None


@dataclass(frozen=True)
class BarrierResult:
    prob: float
    lost_mass: float
    widths: tuple


def _allowed_width(bound, cap):
    """Largest state count such that sqrt(2 (width - 1)) <= bound."""
    if bound < 0:
        return 0
    return min(int(math.floor(bound * bound / 2.0)) + 1, cap)


def barrier_probability(problem, tol=1e-12, initial=None):
    """Exact probability of the barrier event by truncated DP.

    On barrier-constrained levels the truncation IS the event constraint, so
    no mass is lost there.  Skip levels carry no constraint; they use a wide
    cap whose overflow is measured exactly each step and certified below tol
    (TruncationError otherwise).  A "tail" readout evaluates the final step
    through the exact negative-binomial survival function, which is free of
    cancellation even for very small tails.  `initial` may carry a
    distribution over states at start_level in place of the point mass n0.
    """
    L, s0 = problem.L, problem.start_level
    if L <= s0:
        raise PreconditionError("horizon must exceed the start level")
    if initial is None:
        pi = np.zeros(problem.n0 + 1)
        pi[problem.n0] = 1.0
    else:
        pi = np.asarray(initial, dtype=float).copy()
    kind = problem.terminal[0]
    if kind == "bin":
        y, delta = problem.terminal[1], problem.terminal[2]
        end_width = int(math.floor((y + delta) ** 2 / 2.0 + 1e-9)) + 2
    elif kind == "tail":
        y, delta = problem.terminal[1], None
        end_width = None  # closed-form readout at the last step
    else:
        raise PreconditionError(f"unknown terminal readout {kind!r}")
    # diffusion cap: mass from the start scale cannot reach this far within
    # L steps except with sub-tolerance probability (measured, certified)
    start_scale = math.sqrt(2.0 * max(problem.n0, len(pi)))
    cap = int((max(start_scale, y) + 40.0 * math.sqrt(L) + 40.0) ** 2 / 2.0) + 64
    widths = []
    lost = 0.0
    for l in range(s0 + 1, L + 1):
        if l == L and kind == "tail":
            t_min = max(int(math.ceil(y * y / 2.0 - 1e-9)), 0)
            widths.append(-t_min)
            prob = float(pi[0]) if t_min <= 0 else 0.0
            states = np.arange(1, len(pi))
            prob += float(np.sum(pi[1:] * nbdtrc(max(t_min - 1, 0), states,
                                                 0.5))) if t_min > 0 else float(
                pi[1:].sum())
            if lost > tol:
                raise TruncationError(
                    f"skip-level cap loss {lost:.3e} above tolerance",
                    achieved=lost,
                )
            return BarrierResult(prob, lost, tuple(widths))
        constrained = l != L and l not in problem.skip
        if constrained:
            width = _allowed_width(problem.barrier_at(l), cap)
            clamped = problem.barrier_at(l) > math.sqrt(2.0 * cap)
        else:
            width = end_width if l == L else cap
            clamped = l != L
        widths.append(width)
        if width == 0:
            return BarrierResult(0.0, lost, tuple(widths))
        mass_before = pi.sum()
        pi = _propagate(pi, width)
        if clamped:
            lost += max(0.0, float(mass_before - pi.sum()))
        if constrained:
            lo = problem.tube_at(l)
            if lo is not None and lo > 0:
                cut = int(math.ceil(lo * lo / 2.0 - 1e-9))
                pi[:cut] = 0.0
    if lost > tol:
        raise TruncationError(
            f"skip-level cap loss {lost:.3e} above tolerance", achieved=lost
        )
    sqrt2j = np.sqrt(2.0 * np.arange(len(pi)))
    sel = (sqrt2j >= y - 1e-12) & (sqrt2j <= y + delta + 1e-12)
    return BarrierResult(float(pi[sel].sum()), lost, tuple(widths))


def terminal_distribution(n0, steps, width):
    """Unconstrained DP: distribution of T_steps from T_0 = n0 on [0, width)."""
    pi = np.zeros(n0 + 1)
    pi[n0] = 1.0
    for _ in range(steps):
        pi = _propagate(pi, width)
    return pi


# ---------------------------------------------------------------------------
# envelope sweeps


@dataclass
class EnvelopeRow:
    params: dict
    dp: float
    envelope: float


@dataclass
class EnvelopeReport:
    kind: str
    rows: list
    fitted_constant: float
    worst_ratio: float
    skipped: list

    def ratios(self):
        return np.array([r.dp / r.envelope for r in self.rows])


def _beta_curve(L, z):
    return BarrierSpec(kind="center", L=L, z=z)


def _lower_curve(L, z):
    return BarrierSpec(kind="lower", L=L, z=z)


def envelope_check(kind, grid, tol=1e-12):
    """Exact DP probabilities against a bound shape over a parameter grid.

    kind selects the problem family; grid is an iterable of parameter dicts
    (see the builders below for the required keys).  Returns an
    EnvelopeReport with the single fitted constant: max dp/envelope for
    upper-bound families, min for lower-bound families.
    """
    builder = _FAMILIES.get(kind)
    if builder is None:
        raise PreconditionError(f"unknown envelope family {kind!r}")
    rows, skipped = [], []
    for params in grid:
        built = builder(dict(params))
        if built is None:
            skipped.append(dict(params))
            continue
        problem, env, initial = built
        res = barrier_probability(problem, tol=tol, initial=initial)
        rows.append(EnvelopeRow(dict(params), res.prob, env))
    if not rows:
        raise PreconditionError("empty admissible grid")
    ratios = np.array([r.dp / r.envelope for r in rows])
    lower = kind in ("gw_barrier_lower", "barrier_endpoint_lower")
    fitted = float(ratios.min() if lower else ratios.max())
    worst = float(ratios.max() / max(ratios.min(), 1e-300))
    return EnvelopeReport(kind, rows, fitted, worst, skipped)


def _family_gw_upper(p):
    L, x, y = p["L"], p["x"], p["y"]
    a, b = p.get("a", x), p.get("b", y)
    delta = p.get("delta", 1.0)
    C, eps = p.get("C", 0.0), p.get("eps", 0.25)
    n0 = int(round(x * x / 2.0))
    if abs(n0 - x * x / 2.0) > 1e-9 or n0 < 1:
        return None
    spec = BarrierSpec(kind="linear", L=L, a=a, b=b)

    def barrier(l):
        from .analytic import edge_distance

        return spec(l) + C * edge_distance(l, L) ** (0.5 - eps)

    env = bound_envelope(
        "gw_barrier_upper", L=L, x=x, y=y, a=a, b=b, eta=p.get("eta", 2.0)
    )
    problem = GWBarrierProblem(
        n0=n0, L=L, barrier=barrier, terminal=("bin", y, delta),
        skip=frozenset(p.get("skip", ())),
    )
    return problem, env, None


def _family_gw_lower(p):
    from .analytic import edge_distance

    L, x, y = p["L"], p["x"], p["y"]
    a, b = p.get("a", x), p.get("b", y)
    delta = p.get("delta", 1.0)
    C, Ct, eps = p.get("C", 0.0), p.get("Ct", 3.0), p.get("eps", 0.25)
    eta = p.get("eta", 2.0)
    if (1.0 + a - x) * (1.0 + b - y) > eta * L:
        return None
    if max(x * y, abs(y - x)) < L / eta:
        return None
    n0 = int(round(x * x / 2.0))
    if abs(n0 - x * x / 2.0) > 1e-9 or n0 < 1:
        return None
    hi_spec = BarrierSpec(kind="linear", L=L, a=a, b=b)
    lo_spec = BarrierSpec(kind="linear", L=L, a=x, b=y)

    def barrier(l):
        return hi_spec(l) - C * edge_distance(l, L) ** (0.5 - eps)

    def tube(l):
        return lo_spec(l) - Ct * edge_distance(l, L) ** (0.5 + eps)

    # the tube must contain a lattice point sqrt(2 N) at every level
    for l in range(1, L):
        lo, hi = tube(l), barrier(l)
        if hi < 0:
            return None
        nmin = math.ceil(max(lo, 0.0) ** 2 / 2.0 - 1e-9)
        if math.sqrt(2.0 * nmin) > hi + 1e-12:
            return None
    # terminal window must contain a lattice point sqrt(2 Z)
    nmin = math.ceil(y * y / 2.0 - 1e-9)
    if math.sqrt(2.0 * nmin) > y + delta + 1e-12:
        return None
    env = bound_envelope("gw_barrier_lower", L=L, x=x, y=y, a=a, b=b, eta=eta)
    problem = GWBarrierProblem(
        n0=n0, L=L, barrier=barrier, tube=tube, terminal=("bin", y, delta)
    )
    return problem, env, None


def _family_barrier_endpoint(p, lower=False, left=False):
    from .analytic import barrier_slope

    L, z = p["L"], p["z"]
    n0 = p.get("n0", 1)
    xhat = p.get("xhat", math.sqrt(2.0 * n0))
    rho = barrier_slope(L)
    if left:
        curve = BarrierSpec(
            kind="pinned_lower" if lower else "pinned", L=L, z=z, xhat=xhat
        )
        env = bound_envelope("barrier_endpoint_left", L=L, z=z)
    else:
        curve = BarrierSpec(kind="lower" if lower else "center", L=L, z=z)
        env = bound_envelope("barrier_endpoint", L=L, z=z)
    terminal = ("bin", rho * L + z, 1.0) if lower else ("tail", rho * L + z)
    problem = GWBarrierProblem(
        n0=n0, L=L, barrier=curve, terminal=terminal, start_level=1,
        skip=frozenset(p.get("skip", ())),
    )
    return problem, env, None


def _family_barrier_interior(p, left=False):
    from .analytic import barrier_slope

    L, k, z, q = p["L"], p["k"], p["z"], p["p"]
    n0 = p.get("n0", 1)
    rho = barrier_slope(L)
    if left:
        xhat = p.get("xhat", math.sqrt(2.0 * n0))
        curve = BarrierSpec(kind="pinned", L=L, z=z, xhat=xhat)
        env = bound_envelope("barrier_interior_left", L=L, k=k, z=z, p=q)
    else:
        curve = BarrierSpec(kind="center", L=L, z=z)
        env = bound_envelope("barrier_interior", L=L, k=k, z=z, p=q)
    y = float(curve(k)) - q
    if y < 0:
        return None
    problem = GWBarrierProblem(
        n0=n0, L=k, barrier=curve, terminal=("bin", y, 1.0), start_level=1
    )
    return problem, env, None


def _family_barrier_from_level(p, left=False):
    from .analytic import barrier_slope

    L, k, t = p["L"], p["k"], p["t"]
    z = p["z"]
    rho = barrier_slope(L)
    if left:
        xhat = p.get("xhat", 2.0)
        curve = BarrierSpec(kind="pinned", L=L, z=z, xhat=xhat)
    else:
        curve = BarrierSpec(kind="center", L=L, z=z)
    m_val = float(curve(k)) - t
    if m_val <= 0:
        return None
    n0 = int(round(m_val * m_val / 2.0))
    if n0 < 1:
        return None
    m_val = math.sqrt(2.0 * n0)  # realign to the state lattice
    env = bound_envelope(
        "barrier_from_level_left" if left else "barrier_from_level",
        L=L, k=k, t=t, m=m_val,
    )
    problem = GWBarrierProblem(
        n0=n0, L=L, barrier=curve, terminal=("tail", rho * L + z),
        start_level=k,
    )
    return problem, env, None


def _family_barrier_window(p):
    """Window family: geometric initial mass at a low level m0, barrier on
    the upper guard curve up to level k, terminal bin one unit wide at
    barrier(k) - j."""
    from .analytic import barrier_slope, edge_distance

    L, k, z, j, m0 = p["L"], p["k"], p["z"], p["j"], p["m"]
    curve = BarrierSpec(kind="upper", L=L, z=z)
    env = bound_envelope("barrier_window", L=L, k=k, z=z, j=j, m=m0)
    y = float(curve(k)) - j
    if y < 0:
        return None
    cap = int(2.0 * (float(curve(m0)) + 14.0) ** 2) + 8
    n = np.arange(cap)
    initial = (1.0 - 1.0 / m0) ** n * (1.0 / m0) if m0 > 1 else np.where(n == 0, 1.0, 0.0)
    width0 = _allowed_width(float(curve(m0)), cap)
    initial = initial[:width0] if width0 < cap else initial
    problem = GWBarrierProblem(
        n0=1, L=k, barrier=curve, terminal=("bin", y, 1.0), start_level=m0
    )
    return problem, env, initial


_FAMILIES = {
    "gw_barrier_upper": _family_gw_upper,
    "gw_barrier_lower": _family_gw_lower,
    "barrier_endpoint": lambda p: _family_barrier_endpoint(p),
    "barrier_endpoint_lower": lambda p: _family_barrier_endpoint(p, lower=True),
    "barrier_endpoint_left": lambda p: _family_barrier_endpoint(p, left=True),
    "barrier_interior": lambda p: _family_barrier_interior(p),
    "barrier_interior_left": lambda p: _family_barrier_interior(p, left=True),
    "barrier_from_level": lambda p: _family_barrier_from_level(p),
    "barrier_from_level_left": lambda p: _family_barrier_from_level(p, left=True),
    "barrier_window": _family_barrier_window,
}
