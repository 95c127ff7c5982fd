# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled hot loops for the planar Euler path engines.

Every kernel consumes standard normals from a numpy Generator in fixed-size
blocks, so results are reproducible per (seed, config, backend).  The
pure-python module _kernels_py exposes the same API.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport atan2, cos, exp, fabs, sin, sqrt

cnp.import_array()

DEF BLOCK = 16384


cdef class _Normals:
    """Blocked standard-normal and uniform source over a numpy Generator."""
    cdef object rng
    cdef double[::1] buf
    cdef double[::1] ubuf
    cdef Py_ssize_t pos
    cdef Py_ssize_t upos

    def __init__(self, rng):
        self.rng = rng
        self.buf = rng.standard_normal(BLOCK)
        self.pos = 0
        self.ubuf = rng.random(BLOCK)
        self.upos = 0

    cdef inline double next(self):
        if self.pos >= BLOCK:
            self.buf = self.rng.standard_normal(BLOCK)
            self.pos = 0
        self.pos += 1
        return self.buf[self.pos - 1]

    cdef inline double uniform(self):
        if self.upos >= BLOCK:
            self.ubuf = self.rng.random(BLOCK)
            self.upos = 0
        self.upos += 1
        return self.ubuf[self.upos - 1]


cdef inline double _clip(double v, double lo, double hi):
    if v < lo:
        return lo
    if v > hi:
        return hi
    return v


cdef inline double _seg_min_dist2(double px, double py, double qx, double qy,
                                  double cx, double cy):
    """Squared distance from point c to segment [p, q]."""
    cdef double dx = qx - px
    cdef double dy = qy - py
    cdef double wx = cx - px
    cdef double wy = cy - py
    cdef double denom = dx * dx + dy * dy
    cdef double t
    if denom <= 0.0:
        return wx * wx + wy * wy
    t = (wx * dx + wy * dy) / denom
    if t < 0.0:
        t = 0.0
    elif t > 1.0:
        t = 1.0
    dx = px + t * dx - cx
    dy = py + t * dy - cy
    return dx * dx + dy * dy


cdef inline double _g(double x, double y):
    cdef double s = 1.0 + 0.25 * (x * x + y * y)
    return 1.0 / (s * s)


cdef inline bint _bridge_touch(_Normals src, double d1, double d2, double dt):
    """Brownian-bridge correction: endpoints at same-side distances d1, d2
    from a (locally flat) boundary touch it with prob exp(-2 d1 d2 / dt)."""
    cdef double q = 2.0 * d1 * d2 / dt
    if q > 30.0:
        return 0
    return src.uniform() < exp(-q)


def annulus_exit_batch(Py_ssize_t n, double start_radius, double r_in,
                       double r_out, double dt_cap, double dt_floor,
                       double adapt, long max_steps, rng):
    """Walk from |x| = start_radius until the inner circle r_in is touched or
    the outer circle r_out is exceeded.  Returns (hit_inner uint8[n],
    budget_exhausted count)."""
    cdef _Normals src = _Normals(rng)
    out_arr = np.zeros(n, dtype=np.uint8)
    cdef unsigned char[::1] out = out_arr
    cdef double[::1] angles = rng.random(n)
    cdef Py_ssize_t i
    cdef long step, budget = 0
    cdef double x, y, px, py, r, rp, d, dt, s, ang
    cdef bint hit_in, hit_out
    for i in range(n):
        ang = 6.283185307179586 * angles[i]
        x = start_radius * cos(ang)
        y = start_radius * sin(ang)
        for step in range(max_steps):
            r = sqrt(x * x + y * y)
            if r <= r_in:
                out[i] = 1
                break
            if r >= r_out:
                break
            d = r - r_in
            if r_out - r < d:
                d = r_out - r
            dt = _clip(adapt * d * d, dt_floor, dt_cap)
            s = sqrt(dt)
            px = x
            py = y
            rp = r
            x += s * src.next()
            y += s * src.next()
            r = sqrt(x * x + y * y)
            # segment test plus Brownian-bridge coin at each circle
            hit_in = _seg_min_dist2(px, py, x, y, 0.0, 0.0) <= r_in * r_in
            if not hit_in and r > r_in:
                hit_in = _bridge_touch(src, rp - r_in, r - r_in, dt)
            hit_out = 0
            if r < r_out:
                hit_out = _bridge_touch(src, r_out - rp, r_out - r, dt)
            if hit_in and (not hit_out or rp - r_in <= r_out - rp):
                out[i] = 1
                break
            if hit_out:
                break
        else:
            budget += 1
    return out_arr, budget


def disk_exit_path(double x0, double y0, double radius, double dt_cap,
                   double dt_floor, double adapt, long max_steps, rng):
    """Materialised walk from (x0, y0) until |x| >= radius.  Returns
    (xs, ys, ts, reason) with reason 0 on exit, 2 on exhausted budget."""
    cdef _Normals src = _Normals(rng)
    xs, ys, ts = [x0], [y0], [0.0]
    cdef double x = x0, y = y0, t = 0.0
    cdef double r, d, dt, s
    cdef long step
    cdef int reason = 2
    for step in range(max_steps):
        r = sqrt(x * x + y * y)
        if r >= radius:
            reason = 0
            break
        d = radius - r
        dt = _clip(adapt * d * d, dt_floor, dt_cap)
        s = sqrt(dt)
        x += s * src.next()
        y += s * src.next()
        t += dt
        xs.append(x)
        ys.append(y)
        ts.append(t)
    return (np.asarray(xs), np.asarray(ys), np.asarray(ts), reason)


def disk_exit_angles_batch(Py_ssize_t n, double x0, double y0, double radius,
                           double dt_cap, double dt_floor, double adapt,
                           long max_steps, rng):
    """Exit angles (interpolated onto the circle) and exit times of walks
    from (x0, y0).  Returns (angles[n], times[n])."""
    cdef _Normals src = _Normals(rng)
    out_arr = np.empty(n, dtype=np.float64)
    times_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef double[::1] times = times_arr
    cdef Py_ssize_t i
    cdef long step
    cdef double x, y, px, py, r, d, dt, s, t
    cdef double a, b, c, tpar, ex, ey
    for i in range(n):
        x = x0
        y = y0
        t = 0.0
        for step in range(max_steps):
            r = sqrt(x * x + y * y)
            if r >= radius:
                break
            d = radius - r
            dt = _clip(adapt * d * d, dt_floor, dt_cap)
            s = sqrt(dt)
            px = x
            py = y
            x += s * src.next()
            y += s * src.next()
            if x * x + y * y >= radius * radius:
                # interpolate the crossing point and time on the segment
                a = (x - px) ** 2 + (y - py) ** 2
                b = 2.0 * (px * (x - px) + py * (y - py))
                c = px * px + py * py - radius * radius
                tpar = (-b + sqrt(b * b - 4.0 * a * c)) / (2.0 * a)
                ex = px + tpar * (x - px)
                ey = py + tpar * (y - py)
                out[i] = atan2(ey, ex)
                t += tpar * dt
                break
            t += dt
        else:
            out[i] = atan2(y, x)
        times[i] = t
    return out_arr, times_arr


def tracked_occupation_batch(Py_ssize_t n, double start_radius,
                             double exit_radius, double[::1] ball_x,
                             double[::1] ball_y, double[::1] ball_r,
                             unsigned char[::1] ball_weight, double dt_cap,
                             double dt_floor, double adapt, long max_steps,
                             rng):
    """Occupation of tracked balls along walks from |x| = start_radius (or
    the origin when start_radius = 0) to |x| >= exit_radius.

    Midpoint rule: each step adds dt (ball_weight 0) or dt * g(midpoint)
    (ball_weight 1, the spherical clock) to every ball containing the
    segment midpoint.  Returns (occ (n, m), budget_exhausted)."""
    cdef _Normals src = _Normals(rng)
    cdef Py_ssize_t m = ball_x.shape[0]
    occ_arr = np.zeros((n, m), dtype=np.float64)
    cdef double[:, ::1] occ = occ_arr
    cdef double[::1] angles = rng.random(n)
    cdef Py_ssize_t i, j
    cdef long step, budget = 0
    cdef double x, y, px, py, r, d, dd, dt, s, ang, mx, my, w, dist, d_ball
    for i in range(n):
        ang = 6.283185307179586 * angles[i]
        x = start_radius * cos(ang)
        y = start_radius * sin(ang)
        for step in range(max_steps):
            r = sqrt(x * x + y * y)
            if r >= exit_radius:
                break
            d = exit_radius - r
            d_ball = 1e300
            for j in range(m):
                dist = sqrt((x - ball_x[j]) ** 2 + (y - ball_y[j]) ** 2)
                dd = dist - ball_r[j]
                if dd < 0.0:
                    dd = 0.0
                if dd < d_ball:
                    d_ball = dd
            # fine step dt_cap near or inside a ball, quadratic growth away
            # from it, extra refinement only near the exit circle
            dt = adapt * d_ball * d_ball
            if dt < dt_cap:
                dt = dt_cap
            dd = adapt * d * d
            if dd < dt:
                dt = dd
            if dt < dt_floor:
                dt = dt_floor
            s = sqrt(dt)
            px = x
            py = y
            x += s * src.next()
            y += s * src.next()
            mx = 0.5 * (px + x)
            my = 0.5 * (py + y)
            for j in range(m):
                if (mx - ball_x[j]) ** 2 + (my - ball_y[j]) ** 2 <= ball_r[j] * ball_r[j]:
                    w = _g(mx, my) if ball_weight[j] else 1.0
                    occ[i, j] += dt * w
        else:
            budget += 1
    return occ_arr, budget


def concentric_crossing_batch(Py_ssize_t n, double[::1] radii,
                              Py_ssize_t k_start, double dt_cap,
                              double dt_floor, double adapt, long max_steps,
                              rng):
    """Per-level downcrossing counts for nested circles radii[0] > ... >
    radii[M], walks released on circle k_start and stopped on exit of
    radii[0].  A level-l downcrossing is a passage from circle l-1 to circle
    l; detection is segment-based.  Returns (counts (n, M+1) int64,
    violations, budget_exhausted)."""
    cdef _Normals src = _Normals(rng)
    cdef Py_ssize_t M = radii.shape[0] - 1
    counts_arr = np.zeros((n, M + 1), dtype=np.int64)
    cdef long[:, ::1] counts = counts_arr
    armed_arr = np.zeros(M + 1, dtype=np.uint8)
    cdef unsigned char[::1] armed = armed_arr
    # interior circles are not absorbing, so the step refinement near circle
    # l is floored at a fraction of its local gap to keep crossings cheap
    floor_arr = np.empty(M + 1, dtype=np.float64)
    cdef double[::1] dist_floor = floor_arr
    cdef double[::1] angles = rng.random(n)
    cdef Py_ssize_t i, l
    cdef long step, violations = 0, budget = 0, spanned
    cdef double x, y, px, py, r0, rprev, ang, d, dt, s, rmax, rminseg, gap
    for l in range(1, M + 1):
        gap = radii[l - 1] - radii[l]
        if l < M and radii[l] - radii[l + 1] < gap:
            gap = radii[l] - radii[l + 1]
        if l == M and radii[M] < gap:
            gap = radii[M]
        dist_floor[l] = 0.2 * gap
    dist_floor[0] = 0.0
    for i in range(n):
        ang = 6.283185307179586 * angles[i]
        x = radii[k_start] * cos(ang)
        y = radii[k_start] * sin(ang)
        r0 = radii[k_start]
        for l in range(1, M + 1):
            # levels strictly deeper than the release circle start armed;
            # shallower levels arm only after a genuine outer-circle touch
            armed[l] = 1 if radii[l] < r0 * (1.0 - 1e-12) else 0
        for step in range(max_steps):
            r0 = sqrt(x * x + y * y)
            if r0 >= radii[0]:
                break
            d = radii[0] - r0
            for l in range(1, M + 1):
                dt = fabs(r0 - radii[l])
                if dt < dist_floor[l]:
                    dt = dist_floor[l]
                if dt < d:
                    d = dt
            dt = _clip(adapt * d * d, dt_floor, dt_cap)
            s = sqrt(dt)
            px = x
            py = y
            x += s * src.next()
            y += s * src.next()
            rprev = sqrt(px * px + py * py)
            r0 = sqrt(x * x + y * y)
            rmax = rprev if rprev > r0 else r0
            rminseg = sqrt(_seg_min_dist2(px, py, x, y, 0.0, 0.0))
            spanned = 0
            for l in range(1, M + 1):
                if rminseg <= radii[l] and radii[l] <= rmax:
                    spanned += 1
            if spanned >= 2:
                violations += 1
            for l in range(M, 0, -1):
                if armed[l]:
                    if rminseg <= radii[l]:
                        counts[i, l] += 1
                        armed[l] = 0
                    elif rminseg - radii[l] < 6.0 * s and _bridge_touch(
                        src, rprev - radii[l], r0 - radii[l], dt
                    ):
                        counts[i, l] += 1
                        armed[l] = 0
            for l in range(1, M + 1):
                if not armed[l]:
                    if rmax >= radii[l - 1]:
                        armed[l] = 1
                    elif radii[l - 1] - rmax < 6.0 * s and _bridge_touch(
                        src, radii[l - 1] - rprev, radii[l - 1] - r0, dt
                    ):
                        armed[l] = 1
        else:
            budget += 1
    return counts_arr, violations, budget


def multi_center_excursions(double exit_radius, double[::1] ax,
                            double[::1] ay, double[::1] ar, double[::1] cx,
                            double[::1] cy, double[::1] cr, double[::1] ox,
                            double[::1] oy, double[::1] orad,
                            unsigned char[::1] oweight, double grid_x0,
                            double grid_y0, double inv_cell, long nx, long ny,
                            long[::1] cell_start, long[::1] items,
                            double up_in, double up_out, long n_up,
                            double dt_cap, double dt_floor, double adapt,
                            long max_steps, rng, positions=None):
    """One walk from the origin with per-center excursion counting.

    Center j owns an outer circle (ax, ay, ar)[j] and an inner circle
    (cx, cy, cr)[j] in the chart; a downcrossing is registered when, armed by
    a touch of the outer circle, the segment reaches the inner one.  Optional
    occupation balls (ox, oy, orad, oweight) accumulate midpoint-rule time.
    The walk stops on |x| >= exit_radius, or once n_up > 0 upcrossings from
    |x| <= up_in to |x| >= up_out have completed.  The uniform grid over
    outer-circle centers (CSR: cell_start, items) must have cells no smaller
    than max(ar) + max step length.  If `positions` (N, 2) is given the walk
    is replayed from it instead of being generated.

    Returns (counts int64[m], occ float64[m], violations, steps, reason)
    with reason 0 = domain exit, 1 = upcross stop, 2 = budget exhausted.
    """
    cdef _Normals src
    cdef double[:, ::1] pos
    cdef bint replay = positions is not None
    cdef Py_ssize_t n_pos = 0
    if replay:
        pos = np.ascontiguousarray(positions, dtype=np.float64)
        n_pos = pos.shape[0]
    else:
        src = _Normals(rng)
    cdef Py_ssize_t m = ax.shape[0]
    counts_arr = np.zeros(m, dtype=np.int64)
    occ_arr = np.zeros(m, dtype=np.float64)
    cdef long[::1] counts = counts_arr
    cdef double[::1] occ = occ_arr
    state_arr = np.zeros(m, dtype=np.uint8)  # 1 = armed
    cdef unsigned char[::1] armed = state_arr
    cdef double x = 0.0, y = 0.0, px, py, r, d, dd, dt, s, mx, my
    cdef double seg2, seg_len, d2, rr, reach, margin
    cdef long step, violations = 0, ups = 0
    cdef int reason = 2
    cdef bint below_up = True
    cdef Py_ssize_t j, idx, c0x, c0y, gx, gy, cell, a, b
    cdef long have_occ = ox.shape[0]
    for step in range(max_steps):
        if replay and step + 1 >= n_pos:
            reason = 0
            break
        r = sqrt(x * x + y * y)
        if r >= exit_radius:
            reason = 0
            break
        if replay:
            px = x
            py = y
            x = pos[step + 1, 0]
            y = pos[step + 1, 1]
            dt = dt_cap
        else:
            d = exit_radius - r
            dt = _clip(adapt * d * d, dt_floor, dt_cap)
            s = sqrt(dt)
            px = x
            py = y
            x += s * src.next()
            y += s * src.next()
        # upcrossing stop rule on circles around the origin
        if n_up > 0:
            rr = sqrt(x * x + y * y)
            if below_up:
                if rr >= up_out:
                    ups += 1
                    below_up = False
                    if ups >= n_up:
                        reason = 1
                        break
            elif rr <= up_in:
                below_up = True
        mx = 0.5 * (px + x)
        my = 0.5 * (py + y)
        seg2 = (x - px) ** 2 + (y - py) ** 2
        seg_len = sqrt(seg2)
        margin = seg_len + 8.0 * sqrt(dt)
        # candidate centers from the 3x3 cell neighbourhood of the midpoint
        c0x = <Py_ssize_t>((mx - grid_x0) * inv_cell)
        c0y = <Py_ssize_t>((my - grid_y0) * inv_cell)
        for gx in range(c0x - 1, c0x + 2):
            if gx < 0 or gx >= nx:
                continue
            for gy in range(c0y - 1, c0y + 2):
                if gy < 0 or gy >= ny:
                    continue
                cell = gx * ny + gy
                a = cell_start[cell]
                b = cell_start[cell + 1]
                for idx in range(a, b):
                    j = items[idx]
                    if armed[j]:
                        # armed centers can only fire near their inner circle
                        dd = x - cx[j]
                        d2 = y - cy[j]
                        reach = cr[j] + margin
                        if dd * dd + d2 * d2 <= reach * reach:
                            d2 = sqrt(_seg_min_dist2(px, py, x, y, cx[j], cy[j]))
                            if d2 <= cr[j]:
                                counts[j] += 1
                                armed[j] = 0
                                if seg2 > 0.4 * (ar[j] - cr[j]) ** 2:
                                    violations += 1
                            elif not replay and _bridge_touch(
                                src,
                                sqrt((px - cx[j]) ** 2 + (py - cy[j]) ** 2) - cr[j],
                                sqrt((x - cx[j]) ** 2 + (y - cy[j]) ** 2) - cr[j],
                                dt,
                            ):
                                counts[j] += 1
                                armed[j] = 0
                    if not armed[j]:
                        # disarmed centers can only arm near or beyond their
                        # outer circle
                        dd = x - ax[j]
                        d2 = y - ay[j]
                        reach = ar[j] - margin
                        if reach <= 0.0 or dd * dd + d2 * d2 > reach * reach:
                            dd = sqrt((px - ax[j]) ** 2 + (py - ay[j]) ** 2)
                            d2 = sqrt((x - ax[j]) ** 2 + (y - ay[j]) ** 2)
                            if d2 < dd:
                                d2 = dd
                            if d2 >= ar[j]:
                                armed[j] = 1
                            elif not replay and _bridge_touch(
                                src,
                                ar[j] - sqrt((px - ax[j]) ** 2 + (py - ay[j]) ** 2),
                                ar[j] - sqrt((x - ax[j]) ** 2 + (y - ay[j]) ** 2),
                                dt,
                            ):
                                armed[j] = 1
                    if have_occ:
                        d2 = (mx - ox[j]) ** 2 + (my - oy[j]) ** 2
                        if d2 <= orad[j] * orad[j]:
                            occ[j] += dt * (_g(mx, my) if oweight[j] else 1.0)
    return counts_arr, occ_arr, violations, step, reason
