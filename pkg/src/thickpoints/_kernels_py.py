"""Pure-python / numpy fallback for the compiled kernels.

Same API and semantics as the compiled module _kernels; batch kernels are
vectorised across walks (stepping all active walks together), so the random
stream layout differs from the compiled backend, but each backend is fully
deterministic for a given (seed, config).
"""

from __future__ import annotations

import numpy as np


def _seg_min_dist2(px, py, qx, qy, cx, cy):
    """Squared distance from point(s) c to segment(s) [p, q], vectorised."""
    dx, dy = qx - px, qy - py
    wx, wy = cx - px, cy - py
    denom = dx * dx + dy * dy
    with np.errstate(invalid="ignore", divide="ignore"):
        t = np.where(denom > 0.0, (wx * dx + wy * dy) / denom, 0.0)
    t = np.clip(t, 0.0, 1.0)
    ex = px + t * dx - cx
    ey = py + t * dy - cy
    return ex * ex + ey * ey


def _g(x, y):
    s = 1.0 + 0.25 * (x * x + y * y)
    return 1.0 / (s * s)


def _bridge_touch(rng, d1, d2, dt):
    """Vectorised Brownian-bridge touch coin: endpoints at same-side
    distances d1, d2 from a locally flat boundary, step variance dt."""
    q = 2.0 * d1 * d2 / dt
    p = np.where(q < 30.0, np.exp(-np.minimum(q, 30.0)), 0.0)
    out = np.zeros(np.shape(q), dtype=bool)
    need = p > 0
    if np.any(need):
        out[need] = rng.random(int(np.sum(need))) < p[need]
    return out


def annulus_exit_batch(n, start_radius, r_in, r_out, dt_cap, dt_floor, adapt,
                       max_steps, rng):
    ang = 2.0 * np.pi * rng.random(n)
    x = start_radius * np.cos(ang)
    y = start_radius * np.sin(ang)
    hit = np.zeros(n, dtype=np.uint8)
    active = np.ones(n, dtype=bool)
    budget = 0
    for _ in range(max_steps):
        if not active.any():
            break
        xa, ya = x[active], y[active]
        r = np.hypot(xa, ya)
        inner = r <= r_in
        outer = r >= r_out
        done = inner | outer
        if done.any():
            idx = np.flatnonzero(active)
            hit[idx[inner]] = 1
            active[idx[done]] = False
            keep = ~done
            xa, ya, r = xa[keep], ya[keep], r[keep]
            if xa.size == 0:
                continue
        d = np.minimum(r - r_in, r_out - r)
        dt = np.clip(adapt * d * d, dt_floor, dt_cap)
        s = np.sqrt(dt)
        steps = rng.standard_normal((xa.size, 2))
        nx = xa + s * steps[:, 0]
        ny = ya + s * steps[:, 1]
        rn = np.hypot(nx, ny)
        hit_in = _seg_min_dist2(xa, ya, nx, ny, 0.0, 0.0) <= r_in * r_in
        coin_in = ~hit_in & (rn > r_in) & _bridge_touch(
            rng, r - r_in, np.maximum(rn - r_in, 1e-300), dt)
        hit_in |= coin_in
        hit_out = (rn < r_out) & _bridge_touch(
            rng, r_out - r, np.maximum(r_out - rn, 1e-300), dt)
        inner_first = hit_in & (~hit_out | (r - r_in <= r_out - r))
        outer_first = hit_out & ~inner_first
        idx = np.flatnonzero(active)
        x[idx], y[idx] = nx, ny
        if inner_first.any():
            hit[idx[inner_first]] = 1
            active[idx[inner_first]] = False
        if outer_first.any():
            active[idx[outer_first]] = False
    budget = int(active.sum())
    return hit, budget


def disk_exit_path(x0, y0, radius, dt_cap, dt_floor, adapt, max_steps, rng):
    xs, ys, ts = [x0], [y0], [0.0]
    x, y, t = x0, y0, 0.0
    reason = 2
    for _ in range(max_steps):
        r = np.hypot(x, y)
        if r >= radius:
            reason = 0
            break
        d = radius - r
        dt = min(max(adapt * d * d, dt_floor), dt_cap)
        s = np.sqrt(dt)
        g = rng.standard_normal(2)
        x += s * g[0]
        y += s * g[1]
        t += dt
        xs.append(x)
        ys.append(y)
        ts.append(t)
    return np.asarray(xs), np.asarray(ys), np.asarray(ts), reason


def disk_exit_angles_batch(n, x0, y0, radius, dt_cap, dt_floor, adapt,
                           max_steps, rng):
    out = np.empty(n)
    times = np.zeros(n)
    x = np.full(n, float(x0))
    y = np.full(n, float(y0))
    active = np.ones(n, dtype=bool)
    for _ in range(max_steps):
        if not active.any():
            break
        xa, ya = x[active], y[active]
        r = np.hypot(xa, ya)
        d = radius - r
        dt = np.clip(adapt * d * d, dt_floor, dt_cap)
        s = np.sqrt(dt)
        steps = rng.standard_normal((xa.size, 2))
        nx = xa + s * steps[:, 0]
        ny = ya + s * steps[:, 1]
        crossed = nx * nx + ny * ny >= radius * radius
        idx = np.flatnonzero(active)
        if crossed.any():
            pxc, pyc = xa[crossed], ya[crossed]
            dxc, dyc = nx[crossed] - pxc, ny[crossed] - pyc
            a = dxc * dxc + dyc * dyc
            b = 2.0 * (pxc * dxc + pyc * dyc)
            c = pxc * pxc + pyc * pyc - radius * radius
            tpar = (-b + np.sqrt(b * b - 4.0 * a * c)) / (2.0 * a)
            out[idx[crossed]] = np.arctan2(pyc + tpar * dyc, pxc + tpar * dxc)
            times[idx[crossed]] += tpar * dt[crossed]
            active[idx[crossed]] = False
        times[idx[~crossed]] += dt[~crossed]
        x[idx], y[idx] = nx, ny
    if active.any():
        out[active] = np.arctan2(y[active], x[active])
    return out, times


def tracked_occupation_batch(n, start_radius, exit_radius, ball_x, ball_y,
                             ball_r, ball_weight, dt_cap, dt_floor, adapt,
                             max_steps, rng):
    ball_x = np.asarray(ball_x)
    ball_y = np.asarray(ball_y)
    ball_r = np.asarray(ball_r)
    ball_weight = np.asarray(ball_weight).astype(bool)
    m = ball_x.size
    ang = 2.0 * np.pi * rng.random(n)
    x = start_radius * np.cos(ang)
    y = start_radius * np.sin(ang)
    occ = np.zeros((n, m))
    active = np.ones(n, dtype=bool)
    for _ in range(max_steps):
        if not active.any():
            break
        idx = np.flatnonzero(active)
        xa, ya = x[idx], y[idx]
        r = np.hypot(xa, ya)
        done = r >= exit_radius
        if done.any():
            active[idx[done]] = False
            idx = idx[~done]
            if idx.size == 0:
                continue
            xa, ya, r = xa[~done], ya[~done], r[~done]
        dist = np.hypot(xa[:, None] - ball_x, ya[:, None] - ball_y)
        if m:
            d_ball = np.maximum(dist - ball_r, 0.0).min(axis=1)
        else:
            d_ball = np.full(xa.size, np.inf)
        dt = np.minimum(
            np.maximum(adapt * d_ball * d_ball, dt_cap),
            adapt * (exit_radius - r) ** 2,
        )
        dt = np.maximum(dt, dt_floor)
        s = np.sqrt(dt)
        steps = rng.standard_normal((idx.size, 2))
        nx = xa + s * steps[:, 0]
        ny = ya + s * steps[:, 1]
        mx, my = 0.5 * (xa + nx), 0.5 * (ya + ny)
        inside = (mx[:, None] - ball_x) ** 2 + (my[:, None] - ball_y) ** 2 <= ball_r**2
        if inside.any():
            w = np.where(ball_weight[None, :], _g(mx, my)[:, None], 1.0)
            occ[idx] += inside * (dt[:, None] * w)
        x[idx], y[idx] = nx, ny
    return occ, int(active.sum())


def concentric_crossing_batch(n, radii, k_start, dt_cap, dt_floor, adapt,
                              max_steps, rng):
    radii = np.asarray(radii)
    M = radii.size - 1
    counts = np.zeros((n, M + 1), dtype=np.int64)
    ang = 2.0 * np.pi * rng.random(n)
    x = radii[k_start] * np.cos(ang)
    y = radii[k_start] * np.sin(ang)
    armed = np.zeros((n, M + 1), dtype=bool)
    armed[:, :] = radii[None, :] < radii[k_start] * (1.0 - 1e-12)
    armed[:, 0] = False
    active = np.ones(n, dtype=bool)
    # interior circles are not absorbing: floor the refinement near circle l
    # at a fraction of its local gap (see the compiled kernel)
    gaps = radii[:-1] - radii[1:]
    local = np.empty(M + 1)
    local[1:] = gaps
    local[1:M] = np.minimum(gaps[:-1], gaps[1:])
    if M >= 1:
        local[M] = min(gaps[-1], radii[M])
    dist_floor = 0.2 * local
    dist_floor[0] = 0.0
    violations = 0
    for _ in range(max_steps):
        if not active.any():
            break
        idx = np.flatnonzero(active)
        xa, ya = x[idx], y[idx]
        r = np.hypot(xa, ya)
        done = r >= radii[0]
        if done.any():
            active[idx[done]] = False
            idx = idx[~done]
            if idx.size == 0:
                continue
            xa, ya, r = xa[~done], ya[~done], r[~done]
        dcirc = np.maximum(
            np.abs(r[:, None] - radii[1:]), dist_floor[1:]
        ).min(axis=1)
        d = np.minimum(radii[0] - r, dcirc)
        dt = np.clip(adapt * d * d, dt_floor, dt_cap)
        s = np.sqrt(dt)
        steps = rng.standard_normal((idx.size, 2))
        nx = xa + s * steps[:, 0]
        ny = ya + s * steps[:, 1]
        rnew = np.hypot(nx, ny)
        rmax = np.maximum(r, rnew)
        rminseg = np.sqrt(_seg_min_dist2(xa, ya, nx, ny, 0.0, 0.0))
        spanned = (rminseg[:, None] <= radii[None, 1:]) & (
            radii[None, 1:] <= rmax[:, None]
        )
        violations += int(np.sum(spanned.sum(axis=1) >= 2))
        hit = armed[idx, :] & (rminseg[:, None] <= radii[None, :])
        bridge = armed[idx, :] & ~hit
        bridge[:, 0] = False
        if bridge.any():
            d1 = r[:, None] - radii[None, :]
            d2 = rnew[:, None] - radii[None, :]
            coin = _bridge_touch(rng, np.maximum(d1, 1e-300),
                                 np.maximum(d2, 1e-300), dt[:, None])
            hit |= bridge & coin
        hit[:, 0] = False
        counts[idx] += hit
        armed[idx] = armed[idx] & ~hit
        arm = rmax[:, None] >= radii[None, :][:, :-1]
        e1 = radii[None, :][:, :-1] - r[:, None]
        e2 = radii[None, :][:, :-1] - rnew[:, None]
        arm |= _bridge_touch(rng, np.maximum(e1, 1e-300),
                             np.maximum(e2, 1e-300), dt[:, None])
        upd = armed[idx]
        upd[:, 1:] |= arm
        armed[idx] = upd
        x[idx], y[idx] = nx, ny
    return counts, violations, int(active.sum())


def multi_center_excursions(exit_radius, ax, ay, ar, cx, cy, cr, ox, oy,
                            orad, oweight, grid_x0, grid_y0, inv_cell, nx,
                            ny, cell_start, items, up_in, up_out, n_up,
                            dt_cap, dt_floor, adapt, max_steps, rng,
                            positions=None):
    ax, ay, ar = (np.asarray(v) for v in (ax, ay, ar))
    cx, cy, cr = (np.asarray(v) for v in (cx, cy, cr))
    ox, oy, orad = (np.asarray(v) for v in (ox, oy, orad))
    oweight = np.asarray(oweight).astype(bool)
    m = ax.size
    counts = np.zeros(m, dtype=np.int64)
    occ = np.zeros(m)
    armed = np.zeros(m, dtype=bool)
    have_occ = ox.size > 0
    replay = positions is not None
    x = y = 0.0
    reason = 2
    below_up = True
    ups = 0
    step = 0
    violations = 0
    for step in range(max_steps):
        r = np.hypot(x, y)
        if r >= exit_radius:
            reason = 0
            break
        if replay:
            if step + 1 >= len(positions):
                reason = 0
                break
            px, py = x, y
            x, y = positions[step + 1]
            dt = dt_cap
        else:
            d = exit_radius - r
            dt = min(max(adapt * d * d, dt_floor), dt_cap)
            s = np.sqrt(dt)
            g = rng.standard_normal(2)
            px, py = x, y
            x = px + s * g[0]
            y = py + s * g[1]
        if n_up > 0:
            rr = np.hypot(x, y)
            if below_up:
                if rr >= up_out:
                    ups += 1
                    below_up = False
                    if ups >= n_up:
                        reason = 1
                        break
            elif rr <= up_in:
                below_up = True
        mx, my = 0.5 * (px + x), 0.5 * (py + y)
        c0x = int((mx - grid_x0) * inv_cell)
        c0y = int((my - grid_y0) * inv_cell)
        cand = []
        for gx in range(c0x - 1, c0x + 2):
            if gx < 0 or gx >= nx:
                continue
            for gy in range(c0y - 1, c0y + 2):
                if gy < 0 or gy >= ny:
                    continue
                cell = gx * ny + gy
                cand.extend(items[cell_start[cell]:cell_start[cell + 1]])
        if not cand:
            continue
        j = np.asarray(cand, dtype=np.int64)
        seg2 = (x - px) ** 2 + (y - py) ** 2
        was_armed = armed[j]
        d2 = _seg_min_dist2(px, py, x, y, cx[j], cy[j])
        hit = was_armed & (d2 <= cr[j] ** 2)
        if not replay:
            miss = was_armed & ~hit
            if miss.any():
                p1 = np.hypot(px - cx[j], py - cy[j]) - cr[j]
                p2 = np.hypot(x - cx[j], y - cy[j]) - cr[j]
                coin = _bridge_touch(rng, np.maximum(p1, 1e-300),
                                     np.maximum(p2, 1e-300),
                                     np.full(j.size, dt))
                hit |= miss & coin
        counts[j] += hit
        armed[j] &= ~hit
        emax = np.maximum(
            np.hypot(px - ax[j], py - ay[j]), np.hypot(x - ax[j], y - ay[j])
        )
        arm = ~armed[j] & (emax >= ar[j])
        if not replay:
            dis = ~armed[j] & ~arm
            if dis.any():
                e1 = ar[j] - np.hypot(px - ax[j], py - ay[j])
                e2 = ar[j] - np.hypot(x - ax[j], y - ay[j])
                coin = _bridge_touch(rng, np.maximum(e1, 1e-300),
                                     np.maximum(e2, 1e-300),
                                     np.full(j.size, dt))
                arm |= dis & coin
        armed[j] |= arm
        if hit.any():
            violations += int(np.sum(seg2 > 0.4 * (ar[j][hit] - cr[j][hit]) ** 2))
        if have_occ:
            od2 = (mx - ox[j]) ** 2 + (my - oy[j]) ** 2
            inb = od2 <= orad[j] ** 2
            if inb.any():
                w = np.where(oweight[j][inb], _g(mx, my), 1.0)
                occ[j[inb]] += dt * w
    return counts, occ, violations, step, reason
