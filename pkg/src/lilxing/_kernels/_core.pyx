# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled path kernels.

Mirrors _pyref.py operation for operation: same inputs (pre-drawn normals
and log-uniforms), same arithmetic expressions in the same evaluation
order, so results are bit-identical to the NumPy backend. Decisions use
only +, *, / and comparisons (bridge draws are compared in log space), so
no libm call can introduce a last-ulp discrepancy between backends.

The hot loops run without the GIL; thread pools over path chunks scale.
"""

import numpy as np

cimport cython
from libc.math cimport fabs

FAMILY_CONSTANT = 0
FAMILY_OU = 1
FAMILY_STATE_VOL = 2


def bm_crossing(double[:, ::1] dwn, log_unif, double[::1] sqdt,
                double[::1] inv_h, double[::1] boundary, double[::1] inv_dt,
                double threshold, bint use_bridge):
    cdef Py_ssize_t m = dwn.shape[0]
    cdef Py_ssize_t k = dwn.shape[1]
    sup_np = np.empty(m, dtype=np.float64)
    crossed_np = np.zeros(m, dtype=np.uint8)
    cdef double[::1] sup = sup_np
    cdef unsigned char[::1] crossed = crossed_np
    cdef double[:, ::1] lu
    cdef Py_ssize_t i, j
    cdef double w, s, best, r_prev, r_cur
    cdef bint hit

    if use_bridge:
        lu = log_unif
        with nogil:
            for i in range(m):
                w = dwn[i, 0] * sqdt[0]
                best = w * inv_h[0]
                r_prev = boundary[0] - w
                hit = r_prev <= 0.0
                for j in range(1, k):
                    w = w + dwn[i, j] * sqdt[j]
                    s = w * inv_h[j]
                    if s > best:
                        best = s
                    r_cur = boundary[j] - w
                    if not hit:
                        if r_prev <= 0.0 or r_cur <= 0.0:
                            hit = True
                        elif lu[i, j - 1] < -2.0 * r_prev * r_cur * inv_dt[j - 1]:
                            hit = True
                    r_prev = r_cur
                sup[i] = best
                crossed[i] = 1 if hit else 0
    else:
        with nogil:
            for i in range(m):
                w = dwn[i, 0] * sqdt[0]
                best = w * inv_h[0]
                for j in range(1, k):
                    w = w + dwn[i, j] * sqdt[j]
                    s = w * inv_h[j]
                    if s > best:
                        best = s
                sup[i] = best
                crossed[i] = 1 if best >= threshold else 0
    return sup_np, crossed_np


def bm_first_hit(double[:, ::1] dwn, log_unif, double[::1] sqdt,
                 double[::1] psi, double[::1] inv_dt, bint use_bridge):
    cdef Py_ssize_t m = dwn.shape[0]
    cdef Py_ssize_t k = dwn.shape[1]
    idx_np = np.empty(m, dtype=np.int64)
    cdef long long[::1] idx = idx_np
    cdef double[:, ::1] lu
    cdef Py_ssize_t i, j
    cdef double w, r_prev, r_cur
    cdef long long found

    if use_bridge:
        lu = log_unif
        with nogil:
            for i in range(m):
                w = dwn[i, 0] * sqdt[0]
                r_prev = psi[0] - w
                found = 0 if r_prev <= 0.0 else -1
                if found < 0:
                    for j in range(1, k):
                        w = w + dwn[i, j] * sqdt[j]
                        r_cur = psi[j] - w
                        if r_prev <= 0.0 or r_cur <= 0.0 or \
                                lu[i, j - 1] < -2.0 * r_prev * r_cur * inv_dt[j - 1]:
                            found = j
                            break
                        r_prev = r_cur
                idx[i] = found
    else:
        with nogil:
            for i in range(m):
                w = dwn[i, 0] * sqdt[0]
                found = 0 if psi[0] - w <= 0.0 else -1
                if found < 0:
                    for j in range(1, k):
                        w = w + dwn[i, j] * sqdt[j]
                        if psi[j] - w <= 0.0:
                            found = j
                            break
                idx[i] = found
    return idx_np


def diffusion_crossing(int family, double param, double sigma0,
                       double[:, ::1] dwn, log_unif, double[::1] sqdt,
                       double[::1] dts, double[::1] inv_h, double[::1] boundary,
                       double[::1] inv_dt, double x_cap, bint use_bridge):
    cdef Py_ssize_t m = dwn.shape[0]
    cdef Py_ssize_t k = dwn.shape[1]
    sup_np = np.empty(m, dtype=np.float64)
    crossed_np = np.zeros(m, dtype=np.uint8)
    supabs_np = np.empty(m, dtype=np.float64)
    div_np = np.zeros(m, dtype=np.uint8)
    cdef double[::1] sup = sup_np
    cdef unsigned char[::1] crossed = crossed_np
    cdef double[::1] supabs = supabs_np
    cdef unsigned char[::1] div = div_np
    cdef double[:, ::1] lu
    cdef int fam = family
    cdef Py_ssize_t i, j
    cdef double x, sv, s, ax, best, besta, r_prev, r_cur, local, dt
    cdef bint alive, hit

    if family not in (FAMILY_CONSTANT, FAMILY_OU, FAMILY_STATE_VOL):
        raise ValueError(f"unknown family code {family}")
    if use_bridge:
        lu = log_unif
    else:
        lu = np.zeros((1, 1))  # unused

    with nogil:
        for i in range(m):
            x = (sigma0 * sqdt[0]) * dwn[i, 0]
            alive = fabs(x) <= x_cap
            best = x * inv_h[0]
            besta = fabs(x)
            r_prev = boundary[0] - x
            hit = alive and r_prev <= 0.0
            for j in range(1, k):
                dt = dts[j - 1]
                if fam == 0:
                    sv = sigma0
                    if alive:
                        x = x + sigma0 * (sqdt[j] * dwn[i, j])
                elif fam == 1:
                    sv = sigma0
                    if alive:
                        x = (x + (-param * x) * dt) + sigma0 * (sqdt[j] * dwn[i, j])
                else:
                    sv = sigma0 * (1.0 + param * (x * x))
                    if alive:
                        x = x + sv * (sqdt[j] * dwn[i, j])
                if alive and fabs(x) > x_cap:
                    div[i] = 1
                    alive = False
                s = x * inv_h[j]
                if alive and s > best:
                    best = s
                ax = fabs(x)
                if alive and ax > besta:
                    besta = ax
                r_cur = boundary[j] - x
                if alive and not hit:
                    if use_bridge:
                        local = inv_dt[j - 1] / (sv * sv)
                        if r_prev <= 0.0 or r_cur <= 0.0:
                            hit = True
                        elif lu[i, j - 1] < -2.0 * r_prev * r_cur * local:
                            hit = True
                    else:
                        if r_cur <= 0.0:
                            hit = True
                r_prev = r_cur
            sup[i] = best
            supabs[i] = besta
            crossed[i] = 1 if hit else 0
    return sup_np, crossed_np, supabs_np, div_np
