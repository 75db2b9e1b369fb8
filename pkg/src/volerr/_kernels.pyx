# cython: boundscheck=False, wraparound=False, cdivision=True
# cython: language_level=3
"""Compiled versions of the hot simulation kernels.

Semantics match :mod:`volerr._kernels_np` (the pure-numpy reference); see
there for the contracts.  The smoothed-call kernel restricts each
correction sum to the window of nodes whose Gaussian factor does not
underflow (the node abscissae are ascending, so the window is found by
bisection).  Per-output accumulation order is fixed, so results are
independent of scheduling.
"""

import numpy as np

from libc.math cimport erf, exp, log, sqrt

IMPL = "compiled"

cdef double U_SAT = 40.0          # |u| beyond which sigmoid(u) is 0/1 to 4e-18
cdef double INV_SQRT2 = 0.7071067811865475244


cdef inline double _ndtr(double x) noexcept nogil:
    return 0.5 * (1.0 + erf(x * INV_SQRT2))


cdef inline double _sigmoid(double u) noexcept nogil:
    if u >= U_SAT:
        return 1.0
    if u <= -U_SAT:
        return 0.0
    if u >= 0.0:
        return 1.0 / (1.0 + exp(-u))
    cdef double e = exp(u)
    return e / (1.0 + e)


cdef inline Py_ssize_t _first_geq(const double[::1] a, Py_ssize_t n, double x) noexcept nogil:
    """First index with a[idx] >= x (a ascending), or n."""
    cdef Py_ssize_t lo = 0, hi = n, mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if a[mid] >= x:
            hi = mid
        else:
            lo = mid + 1
    return lo


cdef inline Py_ssize_t _first_gt(const double[::1] a, Py_ssize_t n, double x) noexcept nogil:
    """First index with a[idx] > x (a ascending), or n."""
    cdef Py_ssize_t lo = 0, hi = n, mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if a[mid] > x:
            hi = mid
        else:
            lo = mid + 1
    return lo


def call_hedge_sums(const double[:, ::1] ln_s, const double[:, ::1] ds,
                    const double[::1] taus, const double[::1] sigmas,
                    double strike):
    cdef Py_ssize_t n_sig = sigmas.shape[0]
    cdef Py_ssize_t n_paths = ds.shape[0]
    cdef Py_ssize_t n_steps = ds.shape[1]
    out = np.zeros((n_sig, n_paths))
    v_buf_arr = np.empty(n_steps)
    cdef double[:, ::1] v_out = out
    cdef double[::1] v_buf = v_buf_arr
    cdef Py_ssize_t m, p, j
    cdef double sig, acc, v
    cdef double ln_k = log(strike)
    with nogil:
        for m in range(n_sig):
            sig = sigmas[m]
            for j in range(n_steps):
                v_buf[j] = sig * sqrt(taus[j])
            for p in range(n_paths):
                acc = 0.0
                for j in range(n_steps):
                    v = v_buf[j]
                    if v <= 0.0:
                        if ln_s[p, j] > ln_k:
                            acc += ds[p, j]
                    else:
                        acc += _ndtr((ln_s[p, j] - ln_k) / v + 0.5 * v) * ds[p, j]
                v_out[m, p] = acc
    return out


def softplus_call_hedge_sums(const double[:, ::1] s, const double[:, ::1] ln_s,
                             const double[:, ::1] ds, const double[::1] taus,
                             const double[::1] sigmas, double strike,
                             double kappa, const double[::1] lnk,
                             const double[::1] w_delta):
    cdef Py_ssize_t n_sig = sigmas.shape[0]
    cdef Py_ssize_t n_paths = ds.shape[0]
    cdef Py_ssize_t n_steps = ds.shape[1]
    cdef Py_ssize_t n_q = lnk.shape[0]
    out = np.zeros((n_sig, n_paths))
    cdef double[:, ::1] v_out = out

    # Per-step tables, rebuilt for each sigma.
    v_arr = np.empty(n_steps)
    inv_arr = np.empty(n_steps)
    cdef double[::1] v_buf = v_arr
    cdef double[::1] inv_buf = inv_arr

    cdef double Z_CUT = 38.0      # exp(-z^2/2) underflows past |z| ~ 38.6
    cdef double ln_k = log(strike)
    cdef Py_ssize_t m, p, j, q, q_hi, q_lo
    cdef double sig, v, inv_v, half_v, acc, delta, corr, lns, z
    with nogil:
        for m in range(n_sig):
            sig = sigmas[m]
            for j in range(n_steps):
                v = sig * sqrt(taus[j])
                v_buf[j] = v
                inv_buf[j] = 1.0 / v if v > 0.0 else 0.0
            for p in range(n_paths):
                acc = 0.0
                for j in range(n_steps):
                    v = v_buf[j]
                    if v <= 0.0:
                        delta = _sigmoid((s[p, j] - strike) / kappa)
                    else:
                        inv_v = inv_buf[j]
                        half_v = 0.5 * v
                        lns = ln_s[p, j]
                        delta = _ndtr((lns - ln_k) * inv_v + half_v)
                        q_lo = _first_geq(lnk, n_q, lns - Z_CUT * v - half_v * v)
                        q_hi = _first_gt(lnk, n_q, lns + Z_CUT * v - half_v * v)
                        corr = 0.0
                        for q in range(q_lo, q_hi):
                            z = (lnk[q] - lns) * inv_v + half_v
                            corr += w_delta[q] * exp(-0.5 * z * z)
                        delta += corr * kappa * inv_v / s[p, j]
                    acc += delta * ds[p, j]
                v_out[m, p] = acc
    return out


def draw_stats(const double[:, ::1] v_t, const double[::1] phi,
               const double[:, ::1] weights, const double[::1] f,
               const double[::1] base_h, double h0, double h1, double h2):
    cdef Py_ssize_t n_draws = weights.shape[0]
    cdef Py_ssize_t n_paths = v_t.shape[0]
    cdef Py_ssize_t n_nodes = v_t.shape[1]
    mean_h_arr = np.empty(n_draws)
    std_h_arr = np.empty(n_draws)
    mean_d_arr = np.empty(n_draws)
    std_d_arr = np.empty(n_draws)
    h_buf_arr = np.empty(n_paths)
    d_buf_arr = np.empty(n_paths)
    cdef double[::1] mean_h = mean_h_arr
    cdef double[::1] std_h = std_h_arr
    cdef double[::1] mean_d = mean_d_arr
    cdef double[::1] std_d = std_d_arr
    cdef double[::1] h_buf = h_buf_arr
    cdef double[::1] d_buf = d_buf_arr
    cdef Py_ssize_t d, p, m, denom
    cdef double fd, pnl, h, sh, sd, vh, vd, dev
    denom = n_paths - 1 if n_paths > 1 else 1
    with nogil:
        for d in range(n_draws):
            fd = f[d]
            sh = 0.0
            sd = 0.0
            for p in range(n_paths):
                pnl = fd - phi[p]
                for m in range(n_nodes):
                    pnl += v_t[p, m] * weights[d, m]
                h = h0 + h1 * pnl + 0.5 * h2 * pnl * pnl
                h_buf[p] = h
                d_buf[p] = h - base_h[p]
                sh += h
                sd += d_buf[p]
            mean_h[d] = sh / n_paths
            mean_d[d] = sd / n_paths
            vh = 0.0
            vd = 0.0
            for p in range(n_paths):
                dev = h_buf[p] - mean_h[d]
                vh += dev * dev
                dev = d_buf[p] - mean_d[d]
                vd += dev * dev
            std_h[d] = sqrt(vh / denom)
            std_d[d] = sqrt(vd / denom)
    return mean_h_arr, std_h_arr, mean_d_arr, std_d_arr
