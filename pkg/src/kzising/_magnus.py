"""Compiled sixth-order Magnus propagator for the 2x2 BdG problem.

Within one segment the BdG generator is ``H(t) = a(t) sz + b sx`` with
``a = 2 (g(t) - cos k)`` linear in time and ``b = 2 sin k`` constant.  For a
step ``h`` centred at ``t_m`` put ``x1 = h b``, ``x3 = h a(t_m)`` and
``y = 2 h^2 dg/dt``.  Because every commutator of Pauli vectors is again a
Pauli vector, the three-node Gauss-Legendre Magnus expansion collapses to
closed forms for the rotation vector ``w``:

    order 4:  w = (x1, x1 y / 6, x3)
    order 6:  w += (-x1 y^2 (1 + x1^2/15) / 60,
                     x1 y (x1^2 + x3^2) / 90,
                    -x1^2 x3 y^2 / 900)

The step advances with the sixth-order vector and the difference between the
two orders drives step-size control.  ``exp(-i w.sigma)`` is applied exactly,
so every step is unitary.  Steps never straddle a segment breakpoint.
"""

import math

import numba as nb
import numpy as np

# the bundled TBB is too old for numba; stay on a portable layer
if nb.config.THREADING_LAYER == "default":
    nb.config.THREADING_LAYER = "workqueue"

H_MIN = 1e-13
SAFETY = 0.9
# prange runs over fixed blocks so the vector/remainder split of the inner
# loop, and hence every rounding, is independent of the thread count
BLOCK = 64


@nb.njit(cache=True, parallel=True)
def _max_error(h, y, gm, b, c2):
    n = b.shape[0]
    nblk = (n + BLOCK - 1) // BLOCK
    worst = np.zeros(nblk)
    for blk in nb.prange(nblk):
        err2 = 0.0
        for i in range(blk * BLOCK, min(n, (blk + 1) * BLOCK)):
            x1 = h * b[i]
            x3 = h * (2.0 * gm - c2[i])
            x1s = x1 * x1
            ex = -x1 * y * y * (1.0 + x1s / 15.0) / 60.0
            ey = x1 * y * (x1s + x3 * x3) / 90.0
            ez = -x1s * x3 * y * y / 900.0
            e2 = ex * ex + ey * ey + ez * ez
            err2 = max(err2, e2)
        worst[blk] = err2
    return math.sqrt(np.max(worst)) if nblk else 0.0


@nb.njit(cache=True)
def _argmax_error(h, y, gm, b, c2):
    best = -1.0
    idx = 0
    for i in range(b.shape[0]):
        x1 = h * b[i]
        x3 = h * (2.0 * gm - c2[i])
        x1s = x1 * x1
        ey = x1 * y * (x1s + x3 * x3) / 90.0
        if abs(ey) > best:
            best = abs(ey)
            idx = i
    return idx


@nb.njit(cache=True, parallel=True)
def _apply_step(h, y, gm, b, c2, ur, ui, vr, vi):
    n = b.shape[0]
    for blk in nb.prange((n + BLOCK - 1) // BLOCK):
        for i in range(blk * BLOCK, min(n, (blk + 1) * BLOCK)):
            x1 = h * b[i]
            x3 = h * (2.0 * gm - c2[i])
            x1s = x1 * x1
            wx = x1 - x1 * y * y * (1.0 + x1s / 15.0) / 60.0
            wy = x1 * y / 6.0 + x1 * y * (x1s + x3 * x3) / 90.0
            wz = x3 - x1s * x3 * y * y / 900.0
            th = math.sqrt(wx * wx + wy * wy + wz * wz)
            cs = math.cos(th)
            sn = math.sin(th) / th if th > 0.0 else 1.0
            sx = sn * wx
            sy = sn * wy
            sz = sn * wz
            a_r = ur[i]
            a_i = ui[i]
            b_r = vr[i]
            b_i = vi[i]
            # u <- (cs - i sz) u + (-sy - i sx) v
            ur[i] = cs * a_r + sz * a_i - sy * b_r + sx * b_i
            ui[i] = cs * a_i - sz * a_r - sy * b_i - sx * b_r
            # v <- (sy - i sx) u + (cs + i sz) v
            vr[i] = sy * a_r + sx * a_i + cs * b_r - sz * b_i
            vi[i] = sy * a_i - sx * a_r + cs * b_i + sz * b_r


@nb.njit(cache=True)
def propagate_segment(b, c2, ur, ui, vr, vi, t0, t1, g_start, slope,
                      tol, h, max_step):
    """Advance all modes in place from ``t0`` to ``t1``.

    Returns ``(status, t, h, n_accepted, n_rejected, worst_index)``;
    ``status`` is 0 on success and 1 on step-size underflow.
    """
    t = t0
    n_acc = 0
    n_rej = 0
    if h > max_step:
        h = max_step
    while t < t1:
        hs = h
        last = False
        if t + hs >= t1:
            hs = t1 - t
            last = True
        gm = g_start + slope * (t + 0.5 * hs - t0)
        y = 2.0 * hs * hs * slope
        err = _max_error(hs, y, gm, b, c2)
        if err <= tol:
            _apply_step(hs, y, gm, b, c2, ur, ui, vr, vi)
            n_acc += 1
            if last:
                t = t1
                break
            t += hs
        else:
            n_rej += 1
            if hs < H_MIN * max(1.0, abs(t)):
                return 1, t, hs, n_acc, n_rej, _argmax_error(hs, y, gm, b, c2)
        if err > 0.0:
            fac = min(4.0, max(0.2, SAFETY * (tol / err) ** 0.2))
        else:
            fac = 4.0
        h = min(hs * fac, max_step)
    return 0, t, h, n_acc, n_rej, -1


def set_threads(n=None):
    """Apply the thread count (``KZ_THREADS`` when ``n`` is None)."""
    import os

    if n is None:
        env = os.environ.get("KZ_THREADS")
        if not env:
            return nb.get_num_threads()
        n = int(env)
    n = max(1, min(int(n), nb.config.NUMBA_NUM_THREADS))
    nb.set_num_threads(n)
    return n


def propagate(b, c2, u, v, segments, tol, max_step=np.inf, h0=1e-2):
    """Run all segments; returns complex ``(u, v)`` and step statistics.

    Raises nothing itself: on underflow the returned ``status`` dict carries
    the failing time and mode index.
    """
    b = np.ascontiguousarray(b, dtype=np.float64)
    c2 = np.ascontiguousarray(c2, dtype=np.float64)
    ur = np.ascontiguousarray(np.real(u), dtype=np.float64).copy()
    ui = np.ascontiguousarray(np.imag(u), dtype=np.float64).copy()
    vr = np.ascontiguousarray(np.real(v), dtype=np.float64).copy()
    vi = np.ascontiguousarray(np.imag(v), dtype=np.float64).copy()
    h = min(h0, max_step)
    stats = {"accepted": 0, "rejected": 0, "failed": False}
    for seg in segments:
        if seg.t1 <= seg.t0:
            continue
        status, t, h, na, nr, worst = propagate_segment(
            b, c2, ur, ui, vr, vi, float(seg.t0), float(seg.t1),
            float(seg.g0), float(seg.slope), float(tol), float(h),
            float(max_step))
        stats["accepted"] += na
        stats["rejected"] += nr
        if status:
            stats.update(failed=True, t=t, index=worst)
            break
    return ur + 1j * ui, vr + 1j * vi, stats
