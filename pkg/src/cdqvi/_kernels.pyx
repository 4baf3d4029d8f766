# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled elementwise kernels and the active-set enumeration loop.

Mirrors :mod:`cdqvi._kernels_py` exactly; see that module for the contract
of each function.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs

cnp.import_array()

cdef double _INV_SQRT2 = 0.7071067811865476


def fb_vec(a, b):
    cdef const double[::1] av = np.ascontiguousarray(a, dtype=np.float64).ravel()
    cdef const double[::1] bv = np.ascontiguousarray(b, dtype=np.float64).ravel()
    cdef Py_ssize_t n = av.shape[0], i
    if bv.shape[0] != n:
        raise ValueError("fb_vec: length mismatch")
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    for i in range(n):
        o[i] = sqrt(av[i] * av[i] + bv[i] * bv[i]) - (av[i] + bv[i])
    return out


def fb_smoothed_vec(a, b, double eps):
    cdef const double[::1] av = np.ascontiguousarray(a, dtype=np.float64).ravel()
    cdef const double[::1] bv = np.ascontiguousarray(b, dtype=np.float64).ravel()
    cdef Py_ssize_t n = av.shape[0], i
    cdef double e2 = eps * eps
    if bv.shape[0] != n:
        raise ValueError("fb_smoothed_vec: length mismatch")
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    for i in range(n):
        o[i] = sqrt(av[i] * av[i] + bv[i] * bv[i] + e2) - (av[i] + bv[i])
    return out


def fb_partials(a, b):
    cdef const double[::1] av = np.ascontiguousarray(a, dtype=np.float64).ravel()
    cdef const double[::1] bv = np.ascontiguousarray(b, dtype=np.float64).ravel()
    cdef Py_ssize_t n = av.shape[0], i
    cdef double rho
    da = np.empty(n, dtype=np.float64)
    db = np.empty(n, dtype=np.float64)
    cdef double[::1] dav = da
    cdef double[::1] dbv = db
    for i in range(n):
        rho = sqrt(av[i] * av[i] + bv[i] * bv[i])
        if rho == 0.0:
            dav[i] = _INV_SQRT2 - 1.0
            dbv[i] = _INV_SQRT2 - 1.0
        else:
            dav[i] = av[i] / rho - 1.0
            dbv[i] = bv[i] / rho - 1.0
    return da, db


def smoothed_root_terms(lam, g, double eps):
    cdef const double[::1] lv = np.ascontiguousarray(lam, dtype=np.float64).ravel()
    cdef const double[::1] gv = np.ascontiguousarray(g, dtype=np.float64).ravel()
    cdef Py_ssize_t n = lv.shape[0], i
    cdef double e2 = eps * eps, rho, rho3, l, gg
    if gv.shape[0] != n:
        raise ValueError("smoothed_root_terms: length mismatch")
    s = np.empty(n, dtype=np.float64)
    ds_dlam = np.empty(n, dtype=np.float64)
    ds_dg = np.empty(n, dtype=np.float64)
    h_ll = np.empty(n, dtype=np.float64)
    h_lg = np.empty(n, dtype=np.float64)
    h_gg = np.empty(n, dtype=np.float64)
    cdef double[::1] sv = s, dl = ds_dlam, dg = ds_dg, hll = h_ll, hlg = h_lg, hgg = h_gg
    for i in range(n):
        l = lv[i]
        gg = gv[i]
        rho = sqrt(l * l + gg * gg + e2)
        sv[i] = rho - l + gg
        if rho == 0.0:
            dl[i] = _INV_SQRT2 - 1.0
            dg[i] = 1.0 - _INV_SQRT2
            hll[i] = 0.0
            hlg[i] = 0.0
            hgg[i] = 0.0
        else:
            rho3 = rho * rho * rho
            dl[i] = l / rho - 1.0
            dg[i] = gg / rho + 1.0
            hll[i] = (gg * gg + e2) / rho3
            hlg[i] = -l * gg / rho3
            hgg[i] = (l * l + e2) / rho3
    return s, ds_dlam, ds_dg, h_ll, h_lg, h_gg


cdef bint _consistent(double[:, ::1] K, double[::1] rhs, Py_ssize_t n,
                      double pivot_tol, double consist_tol):
    # complete-pivot elimination; True if the residual rows are (near) zero
    cdef Py_ssize_t col, r, j, pr, pc
    cdef double scale = 0.0, rscale = 0.0, best, t, factor
    cdef Py_ssize_t rank = n
    perm_arr = np.arange(n, dtype=np.intp)
    for r in range(n):
        if fabs(rhs[r]) > rscale:
            rscale = fabs(rhs[r])
        for j in range(n):
            if fabs(K[r, j]) > scale:
                scale = fabs(K[r, j])
    for col in range(n):
        best = 0.0
        pr = col
        pc = col
        for r in range(col, n):
            for j in range(col, n):
                if fabs(K[r, j]) > best:
                    best = fabs(K[r, j])
                    pr = r
                    pc = j
        if best <= pivot_tol * scale:
            rank = col
            break
        if pr != col:
            for j in range(n):
                t = K[col, j]
                K[col, j] = K[pr, j]
                K[pr, j] = t
            t = rhs[col]
            rhs[col] = rhs[pr]
            rhs[pr] = t
        if pc != col:
            for r in range(n):
                t = K[r, col]
                K[r, col] = K[r, pc]
                K[r, pc] = t
        for r in range(col + 1, n):
            factor = K[r, col] / K[col, col]
            if factor != 0.0:
                for j in range(col, n):
                    K[r, j] -= factor * K[col, j]
                rhs[r] -= factor * rhs[col]
    for r in range(rank, n):
        if fabs(rhs[r]) > consist_tol * (1.0 + rscale):
            return False
    return True


cdef void _fill(double[:, ::1] K, double[::1] rhs, const double[:, ::1] Dv,
                const double[:, ::1] Av, const double[:, ::1] Gv, const double[::1] ev,
                const double[::1] cv, Py_ssize_t[::1] idx, Py_ssize_t N, Py_ssize_t k):
    # [[D, A_S^T], [G_S, 0]] [tau; lam_S] = [-e; c_S]
    cdef Py_ssize_t i, j, p, n = N + k
    for i in range(N):
        for j in range(N):
            K[i, j] = Dv[i, j]
        for p in range(k):
            K[i, N + p] = Av[idx[p], i]
        rhs[i] = -ev[i]
    for p in range(k):
        for j in range(N):
            K[N + p, j] = Gv[idx[p], j]
        for j in range(N, n):
            K[N + p, j] = 0.0
        rhs[N + p] = cv[idx[p]]


def enumerate_active_sets(D, A, G, e, c, double tol, double pivot_tol,
                          double consist_tol=1e-8):
    cdef const double[:, ::1] Dv = np.ascontiguousarray(D, dtype=np.float64)
    cdef const double[:, ::1] Av = np.ascontiguousarray(A, dtype=np.float64)
    cdef const double[:, ::1] Gv = np.ascontiguousarray(G, dtype=np.float64)
    cdef const double[::1] ev = np.ascontiguousarray(e, dtype=np.float64)
    cdef const double[::1] cv = np.ascontiguousarray(c, dtype=np.float64)
    cdef Py_ssize_t N = Dv.shape[0], m = Av.shape[0]
    if m > 62:
        raise ValueError("enumerate_active_sets: too many constraints")
    cdef Py_ssize_t nmax = N + m
    K_arr = np.empty((nmax, nmax), dtype=np.float64)
    rhs_arr = np.empty(nmax, dtype=np.float64)
    x_arr = np.empty(nmax, dtype=np.float64)
    idx_arr = np.empty(m, dtype=np.intp)
    lam_arr = np.empty(m, dtype=np.float64)
    cdef double[:, ::1] K = K_arr
    cdef double[::1] rhs = rhs_arr, x = x_arr, lam = lam_arr
    cdef Py_ssize_t[::1] idx = idx_arr
    cdef long long mask, nmask = (<long long>1) << m
    cdef Py_ssize_t k, n, i, j, p, col, piv, r
    cdef double scale, best, t, factor, gi
    cdef bint ok
    accepted = []
    singular = []

    for mask in range(nmask):
        k = 0
        for i in range(m):
            if (mask >> i) & 1:
                idx[k] = i
                k += 1
        n = N + k
        _fill(K, rhs, Dv, Av, Gv, ev, cv, idx, N, k)
        scale = 0.0
        for i in range(n):
            for j in range(n):
                if fabs(K[i, j]) > scale:
                    scale = fabs(K[i, j])

        ok = True
        for col in range(n):
            piv = col
            best = fabs(K[col, col])
            for r in range(col + 1, n):
                if fabs(K[r, col]) > best:
                    best = fabs(K[r, col])
                    piv = r
            if best <= pivot_tol * scale:
                ok = False
                break
            if piv != col:
                for j in range(col, n):
                    t = K[col, j]
                    K[col, j] = K[piv, j]
                    K[piv, j] = t
                t = rhs[col]
                rhs[col] = rhs[piv]
                rhs[piv] = t
            for r in range(col + 1, n):
                factor = K[r, col] / K[col, col]
                if factor != 0.0:
                    for j in range(col, n):
                        K[r, j] -= factor * K[col, j]
                    rhs[r] -= factor * rhs[col]
        if not ok:
            _fill(K, rhs, Dv, Av, Gv, ev, cv, idx, N, k)
            if _consistent(K, rhs, n, pivot_tol, consist_tol):
                singular.append(mask)
            continue
        for i in range(n - 1, -1, -1):
            t = rhs[i]
            for j in range(i + 1, n):
                t -= K[i, j] * x[j]
            x[i] = t / K[i, i]

        for p in range(k):
            if x[N + p] < -tol:
                ok = False
                break
        if not ok:
            continue
        for i in range(m):
            gi = -cv[i]
            for j in range(N):
                gi += Gv[i, j] * x[j]
            if gi > tol:
                ok = False
                break
        if not ok:
            continue
        for i in range(m):
            lam[i] = 0.0
        for p in range(k):
            lam[idx[p]] = x[N + p]
        accepted.append((mask, np.array(x_arr[:N]), np.array(lam_arr)))
    return accepted, singular
