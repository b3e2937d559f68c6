"""Numba kernels for the hot loops: ray tracing on the obstacle lattice,
batched transfer maps, billiard iteration, and a float-precision partition
parameter pipeline for large ensembles.

All batch kernels write per-sample slots of preallocated output arrays, so
results are bit-identical regardless of thread scheduling.

Geometry conventions (shared with lattice.py):
  - obstacles are disks of radius r centered at integer points;
  - n_x is the unit normal at a boundary point pointing away from the
    obstacle center (into the free domain);
  - the impact parameter is h = omega cross n_x = sin of the CCW angle
    from omega to n_x, identical before and after specular reflection;
  - rescaled flight lengths are s = 2 r tau (the obstacle shadow width
    2r is the Boltzmann-Grad unit; it is the scaling under which
    Q = eps * q_N reproduces the exact map).
"""

import numpy as np
from numba import njit, prange

# Tangency cutoff: discriminant below this counts as no collision.
TANGENT_DISC = 1e-14
# Reject roots this close to the ray origin (the start obstacle itself).
T_EPS = 1e-10
# Cells a candidate hit can precede the cell-entry parameter by (3x3
# neighborhood diagonal, rounded up); used to stop the grid walk.
_WALK_MARGIN = 3.0

STATUS_OK = 0
STATUS_NO_HIT = 1  # horizon exhausted
STATUS_CAPPED = 2  # no obstacle within the requested flight-time cap
STATUS_RATIONAL = 3  # rational / numerically degenerate slope

DEFAULT_MAX_CELLS = 10_000_000


@njit(cache=True)
def _disk_hit(x0, y0, wx, wy, cx, cy, r):
    """First intersection parameter of the ray with the disk at (cx, cy).

    Returns -1.0 for a miss (including tangency and hits behind the
    origin).  The discriminant is formed from the perpendicular distance
    of the center to the ray line, which avoids the cancellation of the
    naive quadratic at grazing incidence.
    """
    dx = cx - x0
    dy = cy - y0
    b = dx * wx + dy * wy
    if b <= 0.0:
        return -1.0
    cross = dx * wy - dy * wx
    disc = r * r - cross * cross
    if disc < TANGENT_DISC:
        return -1.0
    t = b - np.sqrt(disc)
    if t <= T_EPS:
        return -1.0
    return t


@njit(cache=True)
def ray_trace(x0, y0, wx, wy, r, max_cells, t_cap):
    """Walk the unit grid along the ray and return the first obstacle hit.

    Cells are centered at integer points; each visited cell contributes
    the three centers newly entering its 3x3 neighborhood.  Returns
    (status, t, ci, cj, h) where h is the impact parameter at the hit
    (invariant under the reflection there).  status is STATUS_OK,
    STATUS_NO_HIT (horizon) or STATUS_CAPPED (t_cap reached first).
    """
    i = int(np.floor(x0 + 0.5))
    j = int(np.floor(y0 + 0.5))
    best_t = np.inf
    best_i = 0
    best_j = 0
    for di in range(-1, 2):
        for dj in range(-1, 2):
            t = _disk_hit(x0, y0, wx, wy, float(i + di), float(j + dj), r)
            if 0.0 < t < best_t:
                best_t = t
                best_i = i + di
                best_j = j + dj

    sx = 1 if wx > 0.0 else -1
    sy = 1 if wy > 0.0 else -1
    if wx != 0.0:
        tmaxx = ((i + 0.5 * sx) - x0) / wx
        tdx = sx / wx
    else:
        tmaxx = np.inf
        tdx = np.inf
    if wy != 0.0:
        tmaxy = ((j + 0.5 * sy) - y0) / wy
        tdy = sy / wy
    else:
        tmaxy = np.inf
        tdy = np.inf

    t_entry = 0.0
    cells = 0
    while cells < max_cells:
        if t_entry - _WALK_MARGIN > best_t:
            break
        if t_entry - _WALK_MARGIN > t_cap:
            break
        if tmaxx < tmaxy:
            t_entry = tmaxx
            tmaxx += tdx
            i += sx
            ni = i + sx
            for dj in range(-1, 2):
                t = _disk_hit(x0, y0, wx, wy, float(ni), float(j + dj), r)
                if 0.0 < t < best_t:
                    best_t = t
                    best_i = ni
                    best_j = j + dj
        else:
            t_entry = tmaxy
            tmaxy += tdy
            j += sy
            nj = j + sy
            for di in range(-1, 2):
                t = _disk_hit(x0, y0, wx, wy, float(i + di), float(nj), r)
                if 0.0 < t < best_t:
                    best_t = t
                    best_i = i + di
                    best_j = nj
        cells += 1

    if not np.isfinite(best_t):
        if cells >= max_cells:
            return STATUS_NO_HIT, 0.0, 0, 0, 0.0
        return STATUS_CAPPED, 0.0, 0, 0, 0.0
    if best_t > t_cap:
        return STATUS_CAPPED, 0.0, 0, 0, 0.0
    # h = omega cross (x0 - c) / r, constant along the ray.
    h = (wx * (y0 - best_j) - wy * (x0 - best_i)) / r
    return STATUS_OK, best_t, best_i, best_j, h


@njit(cache=True)
def lift_point(phi, r):
    """Boundary point of the obstacle at the origin with normal angle phi."""
    return r * np.cos(phi), r * np.sin(phi)


@njit(cache=True)
def transfer_exact_one(hprime, theta, r, max_cells):
    """One evaluation of the exact transfer map T_r(h', omega).

    Lifts (h', omega) to the outgoing boundary point on the obstacle at
    the origin, traces to the next obstacle, and returns
    (status, s, h) with s = 2 r tau.
    """
    phi = theta + np.arcsin(hprime)
    x0, y0 = lift_point(phi, r)
    wx = np.cos(theta)
    wy = np.sin(theta)
    status, t, ci, cj, h = ray_trace(x0, y0, wx, wy, r, max_cells, np.inf)
    if status != STATUS_OK:
        return status, 0.0, 0.0
    return STATUS_OK, 2.0 * r * t, h


@njit(cache=True, parallel=True)
def transfer_exact_batch(hprime, theta, r, max_cells, s_out, h_out, status):
    """Batched exact transfer map; arrays are per-sample aligned."""
    n = theta.shape[0]
    for k in prange(n):
        st, s, h = transfer_exact_one(hprime[k], theta[k], r, max_cells)
        status[k] = st
        s_out[k] = s
        h_out[k] = h


@njit(cache=True)
def billiard_step_one(phi, theta, r, max_cells):
    """One application of the billiard map in boundary coordinates.

    Input: outgoing state on the obstacle at some lattice point (the
    quotient by lattice translations drops the center), given by the
    normal angle phi of the departure point and the direction angle
    theta.  Output: (status, phi', h', theta', s) on the next obstacle,
    post-reflection, with s = 2 r tau.
    """
    x0, y0 = lift_point(phi, r)
    wx = np.cos(theta)
    wy = np.sin(theta)
    status, t, ci, cj, h_new = ray_trace(x0, y0, wx, wy, r, max_cells, np.inf)
    if status != STATUS_OK:
        return status, 0.0, 0.0, 0.0, 0.0
    px = x0 + t * wx - ci
    py = y0 + t * wy - cj
    phi_new = np.arctan2(py, px)
    # Specular reflection: angle(omega') = 2*phi' + pi - angle(omega).
    theta_new = 2.0 * phi_new + np.pi - theta
    # wrap to (-pi, pi]
    theta_new = np.arctan2(np.sin(theta_new), np.cos(theta_new))
    return STATUS_OK, phi_new, h_new, theta_new, 2.0 * r * t


@njit(cache=True, parallel=True)
def billiard_orbit_batch(phi, h, theta, r, n_steps, max_cells,
                         h_hist, theta_hist, status):
    """Iterate the billiard map n_steps times for each initial state.

    h_hist/theta_hist have shape (n, n_steps + 1) and record the outgoing
    state at each collision (slot 0 is the initial state).  A sample that
    loses its obstacle within the horizon keeps its last valid slots and
    gets a nonzero status.
    """
    n = phi.shape[0]
    for k in prange(n):
        ph = phi[k]
        hh = h[k]
        th = theta[k]
        h_hist[k, 0] = hh
        theta_hist[k, 0] = th
        status[k] = STATUS_OK
        for m in range(n_steps):
            st, ph2, h2, th2, s = billiard_step_one(ph, th, r, max_cells)
            if st != STATUS_OK:
                status[k] = st
                for mm in range(m + 1, n_steps + 1):
                    h_hist[k, mm] = np.nan
                    theta_hist[k, mm] = np.nan
                break
            ph = ph2
            hh = h2
            th = th2
            h_hist[k, m + 1] = hh
            theta_hist[k, m + 1] = th


@njit(cache=True)
def evolve_one(x, y, theta, r, t_total, max_cells):
    """Billiard flow for time t_total from (x, y) with direction theta.

    Returns (status, x, y, theta, n_collisions).  STATUS_NO_HIT means a
    flight exhausted the cell horizon before its next collision.
    """
    wx = np.cos(theta)
    wy = np.sin(theta)
    t_rem = t_total
    ncoll = 0
    while t_rem > 0.0:
        status, t, ci, cj, h = ray_trace(x, y, wx, wy, r, max_cells, t_rem)
        if status == STATUS_CAPPED or (status == STATUS_OK and t > t_rem):
            x += t_rem * wx
            y += t_rem * wy
            t_rem = 0.0
            break
        if status != STATUS_OK:
            return status, x, y, np.arctan2(wy, wx), ncoll
        x += t * wx
        y += t * wy
        t_rem -= t
        nx = (x - ci) / r
        ny = (y - cj) / r
        dot = wx * nx + wy * ny
        wx -= 2.0 * dot * nx
        wy -= 2.0 * dot * ny
        # renormalize to keep |omega| = 1 over long orbits
        norm = np.sqrt(wx * wx + wy * wy)
        wx /= norm
        wy /= norm
        ncoll += 1
    return STATUS_OK, x, y, np.arctan2(wy, wx), ncoll


@njit(cache=True, parallel=True)
def evolve_batch(x, y, theta, r, t_total, max_cells,
                 x_out, y_out, theta_out, ncoll_out, status):
    n = x.shape[0]
    for k in prange(n):
        st, xf, yf, thf, nc = evolve_one(x[k], y[k], theta[k], r,
                                         t_total, max_cells)
        status[k] = st
        x_out[k] = xf
        y_out[k] = yf
        theta_out[k] = thf
        ncoll_out[k] = nc


@njit(cache=True)
def partition_params_one(alpha, eps):
    """Float-precision (A, B, Q, parity) for slope alpha and width eps.

    Fast path for large ensembles; the mpmath pipeline in contfrac.py is
    the reference implementation and the two are cross-checked in tests.
    Returns (status, A, B, Q, parity).
    """
    if not (0.0 < alpha < 1.0) or eps >= 1.0 or eps <= 0.0:
        return STATUS_RATIONAL, 0.0, 0.0, 0.0, 0
    d_prev = 1.0
    d_cur = alpha
    q_prev = 0.0
    q_cur = 1.0
    x = alpha
    n = 1
    while d_cur > eps:
        if x <= 0.0:
            return STATUS_RATIONAL, 0.0, 0.0, 0.0, 0
        inv = 1.0 / x
        a = np.floor(inv)
        if a > 1e15:
            return STATUS_RATIONAL, 0.0, 0.0, 0.0, 0
        x = inv - a
        d_next = d_prev - a * d_cur
        if d_next <= 0.0 or d_next >= d_cur:
            # digit misextraction at double precision
            return STATUS_RATIONAL, 0.0, 0.0, 0.0, 0
        q_next = a * q_cur + q_prev
        d_prev = d_cur
        d_cur = d_next
        q_prev = q_cur
        q_cur = q_next
        n += 1
    k = -np.floor((eps - d_prev) / d_cur)
    if k < 1.0:
        return STATUS_RATIONAL, 0.0, 0.0, 0.0, 0
    a_par = 1.0 - d_cur / eps
    b_par = 1.0 - (d_prev - k * d_cur) / eps
    q_par = eps * q_cur
    return STATUS_OK, a_par, b_par, q_par, n % 2


@njit(cache=True, parallel=True)
def partition_params_batch(alpha, r, a_out, b_out, q_out, parity_out, status):
    n = alpha.shape[0]
    for i in prange(n):
        eps = 2.0 * r * np.sqrt(1.0 + alpha[i] * alpha[i])
        st, a_par, b_par, q_par, par = partition_params_one(alpha[i], eps)
        status[i] = st
        a_out[i] = a_par
        b_out[i] = b_par
        q_out[i] = q_par
        parity_out[i] = par
