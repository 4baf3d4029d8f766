"""Pure-Python/numpy kernels.

Reference twin of the compiled ``_kernels`` extension. Both expose the same
functions with identical semantics; :mod:`cdqvi.kernels` picks one at import.
"""

import numpy as np

_INV_SQRT2 = 0.7071067811865476


def _vec(x):
    return np.ascontiguousarray(x, dtype=np.float64).ravel()


def fb_vec(a, b):
    """Elementwise Fischer-Burmeister value sqrt(a^2 + b^2) - (a + b)."""
    a, b = _vec(a), _vec(b)
    if a.shape != b.shape:
        raise ValueError("fb_vec: length mismatch")
    return np.sqrt(a * a + b * b) - (a + b)


def fb_smoothed_vec(a, b, eps):
    a, b = _vec(a), _vec(b)
    if a.shape != b.shape:
        raise ValueError("fb_smoothed_vec: length mismatch")
    return np.sqrt(a * a + b * b + eps * eps) - (a + b)


def fb_partials(a, b):
    """Element of the generalized gradient of the FB function.

    Returns ``(d/da, d/db)``. At the kink ``(0, 0)`` the direction
    ``(1, 1)/sqrt(2)`` is used, i.e. both partials equal ``1/sqrt(2) - 1``.
    """
    a, b = _vec(a), _vec(b)
    rho = np.sqrt(a * a + b * b)
    kink = rho == 0.0
    safe = np.where(kink, 1.0, rho)
    da = np.where(kink, _INV_SQRT2 - 1.0, a / safe - 1.0)
    db = np.where(kink, _INV_SQRT2 - 1.0, b / safe - 1.0)
    return da, db


def smoothed_root_terms(lam, g, eps):
    """Value, gradient and Hessian entries of s = sqrt(lam^2 + g^2 + eps^2) - lam + g.

    Returns ``(s, ds_dlam, ds_dg, h_ll, h_lg, h_gg)`` where the ``h_*`` are
    the second derivatives with respect to ``(lam, g)``. The Hessian is
    reported as zero at the kink (only reachable with ``eps == 0``).
    """
    lam, g = _vec(lam), _vec(g)
    if lam.shape != g.shape:
        raise ValueError("smoothed_root_terms: length mismatch")
    e2 = eps * eps
    rho = np.sqrt(lam * lam + g * g + e2)
    s = rho - lam + g
    kink = rho == 0.0
    safe = np.where(kink, 1.0, rho)
    rho3 = safe ** 3
    ds_dlam = np.where(kink, _INV_SQRT2 - 1.0, lam / safe - 1.0)
    ds_dg = np.where(kink, 1.0 - _INV_SQRT2, g / safe + 1.0)
    h_ll = np.where(kink, 0.0, (g * g + e2) / rho3)
    h_lg = np.where(kink, 0.0, -lam * g / rho3)
    h_gg = np.where(kink, 0.0, (lam * lam + e2) / rho3)
    return s, ds_dlam, ds_dg, h_ll, h_lg, h_gg


def _solve_partial_pivot(K, rhs, pivot_tol):
    # Same elimination order and singularity test as the compiled loop.
    n = K.shape[0]
    scale = np.abs(K).max() if n else 0.0
    for col in range(n):
        piv = col + int(np.argmax(np.abs(K[col:, col])))
        if abs(K[piv, col]) <= pivot_tol * scale:
            return None
        if piv != col:
            K[[col, piv], col:] = K[[piv, col], col:]
            rhs[[col, piv]] = rhs[[piv, col]]
        factors = K[col + 1:, col] / K[col, col]
        K[col + 1:, col:] -= np.outer(factors, K[col, col:])
        rhs[col + 1:] -= factors * rhs[col]
    x = np.empty(n)
    for i in range(n - 1, -1, -1):
        x[i] = (rhs[i] - K[i, i + 1:] @ x[i + 1:]) / K[i, i]
    return x


def _consistent(K, rhs, pivot_tol, consist_tol):
    # complete-pivot elimination; True if the residual rows are (near) zero
    K, rhs = K.copy(), rhs.copy()
    n = K.shape[0]
    scale = np.abs(K).max() if n else 0.0
    rscale = np.abs(rhs).max() if n else 0.0
    rank = n
    for col in range(n):
        sub = np.abs(K[col:, col:])
        pr, pc = np.unravel_index(int(np.argmax(sub)), sub.shape)
        pr, pc = pr + col, pc + col
        if sub.size == 0 or abs(K[pr, pc]) <= pivot_tol * scale:
            rank = col
            break
        if pr != col:
            K[[col, pr]] = K[[pr, col]]
            rhs[[col, pr]] = rhs[[pr, col]]
        if pc != col:
            K[:, [col, pc]] = K[:, [pc, col]]
        factors = K[col + 1:, col] / K[col, col]
        K[col + 1:, col:] -= np.outer(factors, K[col, col:])
        rhs[col + 1:] -= factors * rhs[col]
    return bool(np.all(np.abs(rhs[rank:]) <= consist_tol * (1.0 + rscale)))


def enumerate_active_sets(D, A, G, e, c, tol, pivot_tol, consist_tol=1e-8):
    """Solve the equality-constrained KKT system for every active set.

    For each bitmask ``S`` over the ``m`` constraints solves::

        [[D, A_S^T], [G_S, 0]] [tau; lam_S] = [-e; c_S]

    and keeps solutions with ``lam_S >= -tol`` and ``G tau - c <= tol``.
    Returns ``(accepted, singular)``: ``accepted`` is a list of
    ``(mask, tau, lam)`` with ``lam`` of length ``m``; ``singular`` lists the
    masks whose system failed the pivot test but is consistent up to
    ``consist_tol`` (candidates for a least-squares solve).
    """
    D = np.ascontiguousarray(D, dtype=np.float64)
    A = np.ascontiguousarray(A, dtype=np.float64)
    G = np.ascontiguousarray(G, dtype=np.float64)
    e, c = _vec(e), _vec(c)
    N, m = D.shape[0], A.shape[0]
    if m > 62:
        raise ValueError("enumerate_active_sets: too many constraints")
    accepted, singular = [], []
    for mask in range(1 << m):
        idx = [i for i in range(m) if (mask >> i) & 1]
        k = len(idx)
        n = N + k
        K = np.zeros((n, n))
        K[:N, :N] = D
        K[:N, N:] = A[idx].T
        K[N:, :N] = G[idx]
        rhs = np.concatenate([-e, c[idx]])
        x = _solve_partial_pivot(K.copy(), rhs.copy(), pivot_tol)
        if x is None:
            if _consistent(K, rhs, pivot_tol, consist_tol):
                singular.append(mask)
            continue
        tau, lam_s = x[:N], x[N:]
        if np.any(lam_s < -tol):
            continue
        if np.any(G @ tau - c > tol):
            continue
        lam = np.zeros(m)
        lam[idx] = lam_s
        accepted.append((mask, tau.copy(), lam))
    return accepted, singular
