"""Canonical dual transformation of the FB merit problem.

With ``xi = Lambda(tau, lam)``, ``xi_i = sqrt(lam_i^2 + g_i^2) - lam_i + g_i``
and the quadratic canonical function ``V0(xi) = 1/2 |xi|^2``, the total
complementarity function is::

    Xi_eps(tau, lam, sigma) = sum_i [sigma_i s_i - 1/2 sigma_i^2]
                              + 1/2 z^T M z - fvec^T z,

    s_i = sqrt(lam_i^2 + g_i^2 + eps^2) - lam_i + g_i,   z = (tau, lam).

``eps = 0`` gives the nonsmooth ``Xi_0``. ``Xi_eps`` is concave in ``sigma``
and convex in ``z`` for ``sigma >= 0``; the saddle operator
``H_eps = (grad_z Xi_eps, -grad_sigma Xi_eps)`` is therefore monotone there.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from . import kernels
from .core import AqviInstance, _check_vec, constraint_values


@dataclasses.dataclass(frozen=True)
class CanonicalEval:
    xi: np.ndarray
    value: float
    grad_primal: np.ndarray
    grad_dual: np.ndarray
    eps: float


def lambda_op(inst: AqviInstance, tau, lam) -> np.ndarray:
    """Geometric operator ``xi_i = sqrt(lam_i^2 + g_i^2) - lam_i + g_i``.

    Identical to ``fb(lam_i, -g_i)``.
    """
    lam = _check_vec(lam, inst.m, "lam")
    g = constraint_values(inst, tau)
    return np.hypot(lam, g) - lam + g


def v0(xi) -> float:
    xi = np.asarray(xi, dtype=np.float64)
    return float(0.5 * xi @ xi)


def v0_conj(sigma) -> float:
    """Legendre conjugate of ``v0``; the quadratic is self-conjugate."""
    sigma = np.asarray(sigma, dtype=np.float64)
    return float(0.5 * sigma @ sigma)


def fbar(inst: AqviInstance, sigma) -> np.ndarray:
    """Linear term with the sigma-linear parts of ``g`` and ``-lam`` regrouped.

    ``fvec + (-(A+B)^T sigma, sigma)``. Not used by the evaluators: the sigma
    sum in ``Xi`` already carries these terms, so adding them would count
    them twice. Kept so the regrouping can be checked:
    ``sum sigma_i (g_i - lam_i) - fvec^T z == -fbar(sigma)^T z - c^T sigma``.
    """
    sigma = _check_vec(sigma, inst.m, "sigma")
    return inst.fvec + np.concatenate([-(inst.G.T @ sigma), sigma])


def _parts(inst, tau, lam, sigma, eps):
    tau = _check_vec(tau, inst.N, "tau")
    lam = _check_vec(lam, inst.m, "lam")
    sigma = _check_vec(sigma, inst.m, "sigma")
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    z = np.concatenate([tau, lam])
    g = inst.G @ tau - inst.c
    return z, g, lam, sigma


def total_complementarity_smoothed(inst: AqviInstance, tau, lam, sigma, eps: float) -> float:
    z, g, lam, sigma = _parts(inst, tau, lam, sigma, eps)
    s = np.sqrt(lam * lam + g * g + eps * eps) - lam + g
    return float(sigma @ s - 0.5 * sigma @ sigma + 0.5 * z @ inst.M @ z - inst.fvec @ z)


def total_complementarity(inst: AqviInstance, tau, lam, sigma) -> float:
    """``Xi_0``; at ``sigma = lambda_op(tau, lam)`` equals ``primal_merit``."""
    return total_complementarity_smoothed(inst, tau, lam, sigma, 0.0)


def evaluate(inst: AqviInstance, tau, lam, sigma, eps: float) -> CanonicalEval:
    z, g, lam, sigma = _parts(inst, tau, lam, sigma, eps)
    s, ds_dlam, ds_dg, *_ = kernels.smoothed_root_terms(lam, g, eps)
    Mz = inst.M @ z
    grad = Mz - inst.fvec
    grad[: inst.N] += inst.G.T @ (sigma * ds_dg)
    grad[inst.N:] += sigma * ds_dlam
    value = float(sigma @ s - 0.5 * sigma @ sigma + 0.5 * z @ Mz - inst.fvec @ z)
    xi = np.hypot(lam, g) - lam + g
    return CanonicalEval(xi=xi, value=value, grad_primal=grad, grad_dual=s - sigma, eps=eps)


def h_eps_z(inst: AqviInstance, w, eps: float) -> np.ndarray:
    """``H_eps`` on the stacked vector ``w = (tau, lam, sigma)``."""
    if not eps > 0:
        raise ValueError("H_eps is only defined for eps > 0")
    N, m = inst.N, inst.m
    w = _check_vec(w, N + 2 * m, "w")
    tau, lam, sigma = w[:N], w[N:N + m], w[N + m:]
    z = w[:N + m]
    g = inst.G @ tau - inst.c
    s, ds_dlam, ds_dg, *_ = kernels.smoothed_root_terms(lam, g, eps)
    out = np.empty(N + 2 * m)
    out[:N + m] = inst.M @ z - inst.fvec
    out[:N] += inst.G.T @ (sigma * ds_dg)
    out[N:N + m] += sigma * ds_dlam
    out[N + m:] = sigma - s
    return out


def jh_eps_z(inst: AqviInstance, w, eps: float) -> np.ndarray:
    """Jacobian of :func:`h_eps_z`.

    Block form ``[[M + sum sigma_i H_i, S], [-S^T, I_m]]`` with ``S`` the
    gradients of the smoothed roots and ``H_i`` their (PSD) Hessians.
    """
    if not eps > 0:
        raise ValueError("JH_eps is only defined for eps > 0")
    N, m = inst.N, inst.m
    w = _check_vec(w, N + 2 * m, "w")
    tau, lam, sigma = w[:N], w[N:N + m], w[N + m:]
    G = inst.G
    g = G @ tau - inst.c
    _, ds_dlam, ds_dg, h_ll, h_lg, h_gg = kernels.smoothed_root_terms(lam, g, eps)
    n = N + 2 * m
    J = np.zeros((n, n))
    UL = J[:N + m, :N + m]
    UL[:] = inst.M
    UL[:N, :N] += G.T @ ((sigma * h_gg)[:, None] * G)
    cross = G.T * (sigma * h_lg)  # N x m
    UL[:N, N:] += cross
    UL[N:, :N] += cross.T
    UL[N:, N:][np.diag_indices(m)] += sigma * h_ll
    S = np.vstack([G.T * ds_dg, np.diag(ds_dlam)])  # (N+m) x m
    J[:N + m, N + m:] = S
    J[N + m:, :N + m] = -S.T
    J[N + m:, N + m:] = np.eye(m)
    return J


def h_eps(inst: AqviInstance, tau, lam, sigma, eps: float) -> np.ndarray:
    w = np.concatenate([_check_vec(tau, inst.N, "tau"), _check_vec(lam, inst.m, "lam"),
                        _check_vec(sigma, inst.m, "sigma")])
    return h_eps_z(inst, w, eps)


def jh_eps(inst: AqviInstance, tau, lam, sigma, eps: float) -> np.ndarray:
    w = np.concatenate([_check_vec(tau, inst.N, "tau"), _check_vec(lam, inst.m, "lam"),
                        _check_vec(sigma, inst.m, "sigma")])
    return jh_eps_z(inst, w, eps)
