"""Hot numeric kernels with numba-jitted and pure-numpy implementations.

Every public name here is resolved once at import time to either the jitted
or the numpy variant.  Selection:

  * ``GAPSBM_NUMBA=0`` (or ``false``/``off``) forces the numpy fallbacks,
  * anything else (including unset) uses numba when it imports cleanly.

Both paths compute identical values; ``benchmarks/bench_kernels.py``
compares their throughput.
"""

from __future__ import annotations

import os

import numpy as np


def _want_numba() -> bool:
    flag = os.environ.get("GAPSBM_NUMBA", "auto").strip().lower()
    return flag not in ("0", "false", "off", "no")


USING_NUMBA = False
if _want_numba():
    try:
        from numba import njit

        USING_NUMBA = True
    except ImportError:  # pragma: no cover - numba is a hard dep, but stay usable
        USING_NUMBA = False

if not USING_NUMBA:
    def njit(*args, **kwargs):  # type: ignore[misc]
        if args and callable(args[0]):
            return args[0]

        def deco(fn):
            return fn

        return deco


# ---------------------------------------------------------------------------
# point-in-polygon (winding number, nonzero rule)
# ---------------------------------------------------------------------------

@njit(cache=True)
def _winding_numbers_loop(px, py, vx, vy):
    n = px.size
    m = vx.size
    out = np.zeros(n, dtype=np.int64)
    for k in range(n):
        x = px[k]
        y = py[k]
        wn = 0
        for i in range(m):
            j = i + 1
            if j == m:
                j = 0
            y0 = vy[i]
            y1 = vy[j]
            if y0 <= y:
                if y1 > y:
                    # upward crossing: left test
                    cross = (vx[j] - vx[i]) * (y - y0) - (x - vx[i]) * (y1 - y0)
                    if cross > 0.0:
                        wn += 1
            else:
                if y1 <= y:
                    cross = (vx[j] - vx[i]) * (y - y0) - (x - vx[i]) * (y1 - y0)
                    if cross < 0.0:
                        wn -= 1
        out[k] = wn
    return out


def _winding_numbers_numpy(px, py, vx, vy):
    # chunk over query points so the (chunk, nseg) temporaries stay bounded
    n = px.size
    m = vx.size
    out = np.zeros(n, dtype=np.int64)
    x0 = vx
    y0 = vy
    x1 = np.roll(vx, -1)
    y1 = np.roll(vy, -1)
    chunk = max(1, int(4_000_000 // max(m, 1)))
    for s in range(0, n, chunk):
        x = px[s : s + chunk, None]
        y = py[s : s + chunk, None]
        cross = (x1 - x0) * (y - y0) - (x - x0) * (y1 - y0)
        up = (y0 <= y) & (y1 > y) & (cross > 0.0)
        dn = (y0 > y) & (y1 <= y) & (cross < 0.0)
        out[s : s + chunk] = up.sum(axis=1) - dn.sum(axis=1)
    return out


# ---------------------------------------------------------------------------
# closest point on a closed polyline
# ---------------------------------------------------------------------------

@njit(cache=True)
def _polyline_closest_loop(px, py, vx, vy):
    n = px.size
    m = vx.size
    best_d2 = np.empty(n, dtype=np.float64)
    best_seg = np.empty(n, dtype=np.int64)
    best_t = np.empty(n, dtype=np.float64)
    for k in range(n):
        x = px[k]
        y = py[k]
        bd = 1e300
        bs = 0
        bt = 0.0
        for i in range(m):
            j = i + 1
            if j == m:
                j = 0
            ax = vx[i]
            ay = vy[i]
            ex = vx[j] - ax
            ey = vy[j] - ay
            L2 = ex * ex + ey * ey
            if L2 > 0.0:
                t = ((x - ax) * ex + (y - ay) * ey) / L2
                if t < 0.0:
                    t = 0.0
                elif t > 1.0:
                    t = 1.0
            else:
                t = 0.0
            dx = x - (ax + t * ex)
            dy = y - (ay + t * ey)
            d2 = dx * dx + dy * dy
            if d2 < bd:
                bd = d2
                bs = i
                bt = t
        best_d2[k] = bd
        best_seg[k] = bs
        best_t[k] = bt
    return best_d2, best_seg, best_t


def _polyline_closest_numpy(px, py, vx, vy):
    n = px.size
    m = vx.size
    ax = vx
    ay = vy
    ex = np.roll(vx, -1) - ax
    ey = np.roll(vy, -1) - ay
    L2 = ex * ex + ey * ey
    L2safe = np.where(L2 > 0.0, L2, 1.0)
    best_d2 = np.empty(n, dtype=np.float64)
    best_seg = np.empty(n, dtype=np.int64)
    best_t = np.empty(n, dtype=np.float64)
    chunk = max(1, int(2_000_000 // max(m, 1)))
    for s in range(0, n, chunk):
        x = px[s : s + chunk, None]
        y = py[s : s + chunk, None]
        t = ((x - ax) * ex + (y - ay) * ey) / L2safe
        t = np.clip(t, 0.0, 1.0)
        t = np.where(L2 > 0.0, t, 0.0)
        dx = x - (ax + t * ex)
        dy = y - (ay + t * ey)
        d2 = dx * dx + dy * dy
        idx = np.argmin(d2, axis=1)
        rows = np.arange(d2.shape[0])
        best_d2[s : s + chunk] = d2[rows, idx]
        best_seg[s : s + chunk] = idx
        best_t[s : s + chunk] = t[rows, idx]
    return best_d2, best_seg, best_t


# ---------------------------------------------------------------------------
# P1 triangle geometry: physical gradients and areas
# ---------------------------------------------------------------------------

@njit(cache=True)
def _tri_p1_grads_areas_loop(nx, ny, cells):
    nc = cells.shape[0]
    grads = np.empty((nc, 3, 2), dtype=np.float64)
    areas = np.empty(nc, dtype=np.float64)
    for c in range(nc):
        i0 = cells[c, 0]
        i1 = cells[c, 1]
        i2 = cells[c, 2]
        x0 = nx[i0]
        y0 = ny[i0]
        x1 = nx[i1]
        y1 = ny[i1]
        x2 = nx[i2]
        y2 = ny[i2]
        det = (x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0)
        areas[c] = 0.5 * det
        inv = 1.0 / det
        grads[c, 0, 0] = (y1 - y2) * inv
        grads[c, 0, 1] = (x2 - x1) * inv
        grads[c, 1, 0] = (y2 - y0) * inv
        grads[c, 1, 1] = (x0 - x2) * inv
        grads[c, 2, 0] = (y0 - y1) * inv
        grads[c, 2, 1] = (x1 - x0) * inv
    return grads, areas


def _tri_p1_grads_areas_numpy(nx, ny, cells):
    x = nx[cells]
    y = ny[cells]
    det = (x[:, 1] - x[:, 0]) * (y[:, 2] - y[:, 0]) - (x[:, 2] - x[:, 0]) * (
        y[:, 1] - y[:, 0]
    )
    areas = 0.5 * det
    inv = 1.0 / det
    grads = np.empty((cells.shape[0], 3, 2), dtype=np.float64)
    grads[:, 0, 0] = (y[:, 1] - y[:, 2]) * inv
    grads[:, 0, 1] = (x[:, 2] - x[:, 1]) * inv
    grads[:, 1, 0] = (y[:, 2] - y[:, 0]) * inv
    grads[:, 1, 1] = (x[:, 0] - x[:, 2]) * inv
    grads[:, 2, 0] = (y[:, 0] - y[:, 1]) * inv
    grads[:, 2, 1] = (x[:, 1] - x[:, 0]) * inv
    return grads, areas


# ---------------------------------------------------------------------------
# quadrature accumulation for error norms
# ---------------------------------------------------------------------------

@njit(cache=True)
def _accumulate_norms_loop(err_val2, err_grad2, wdetj):
    # err_val2, err_grad2: (ncells, npts); wdetj: (ncells, npts)
    nc, nq = err_val2.shape
    l2 = 0.0
    h1 = 0.0
    for c in range(nc):
        for q in range(nq):
            w = wdetj[c, q]
            l2 += w * err_val2[c, q]
            h1 += w * err_grad2[c, q]
    return l2, h1


def _accumulate_norms_numpy(err_val2, err_grad2, wdetj):
    return float(np.sum(err_val2 * wdetj)), float(np.sum(err_grad2 * wdetj))


if USING_NUMBA:
    winding_numbers = _winding_numbers_loop
    polyline_closest = _polyline_closest_loop
    tri_p1_grads_areas = _tri_p1_grads_areas_loop
    accumulate_norms = _accumulate_norms_loop
else:
    winding_numbers = _winding_numbers_numpy
    polyline_closest = _polyline_closest_numpy
    tri_p1_grads_areas = _tri_p1_grads_areas_numpy
    accumulate_norms = _accumulate_norms_numpy
