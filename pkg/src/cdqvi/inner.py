"""Box-constrained VI solver (mixed complementarity form).

Finds ``z`` with ``z_i >= lower_i`` and, componentwise,
``H_i(z) = 0`` where ``lower_i = -inf`` and
``0 <= z_i - lower_i  _|_  H_i(z) >= 0`` otherwise.

A short crash phase runs first: damped Newton on ``H(z) = 0`` with every
step cut back to stay inside the box. If it reaches a point interior to the
box with small residual, that point solves the VI. Otherwise the main phase
starts again from ``z0``: a projected semismooth Newton iteration on the FB
residual with Levenberg-Marquardt damping for ill-conditioned Jacobians,
Armijo backtracking on ``1/2 |r|^2`` and a projected-gradient fallback when
the Newton direction is not a descent direction. Every point at which ``H``
or ``JH`` is evaluated lies inside the box.
"""

from __future__ import annotations

import dataclasses
import enum
import logging
from typing import Callable

import numpy as np

from . import kernels

logger = logging.getLogger(__name__)


class InnerStatus(enum.Enum):
    CONVERGED = "converged"
    MAX_ITER = "max_iter"
    STALLED = "stalled"


@dataclasses.dataclass
class BoxVi:
    operator: Callable[[np.ndarray], np.ndarray]
    jacobian: Callable[[np.ndarray], np.ndarray]
    lower: np.ndarray

    def __post_init__(self):
        self.lower = np.asarray(self.lower, dtype=np.float64)
        if self.lower.ndim != 1 or np.any(np.isnan(self.lower)) or np.any(self.lower == np.inf):
            raise ValueError("lower must be a vector of finite values or -inf")

    @property
    def dim(self) -> int:
        return self.lower.shape[0]

    @property
    def bounded(self) -> np.ndarray:
        return np.isfinite(self.lower)

    def project(self, z: np.ndarray) -> np.ndarray:
        return np.maximum(z, self.lower)


@dataclasses.dataclass
class InnerResult:
    z: np.ndarray
    residual: float
    iterations: int
    op_evals: int
    jac_evals: int
    status: InnerStatus
    newton_steps: int = 0
    linesearch_steps: int = 0
    fallback_steps: int = 0
    crash_steps: int = 0


def _residual_from(vi: BoxVi, z, Hz) -> np.ndarray:
    r = np.array(Hz, dtype=np.float64)
    b = vi.bounded
    if b.any():
        r[b] = kernels.fb_vec(z[b] - vi.lower[b], Hz[b])
    return r


def mcp_residual(vi: BoxVi, z) -> np.ndarray:
    """``H_i(z)`` on free components, ``fb(z_i - lower_i, H_i(z))`` on bounded ones."""
    z = np.asarray(z, dtype=np.float64)
    if z.shape != (vi.dim,):
        raise ValueError(f"z has shape {z.shape}, expected ({vi.dim},)")
    return _residual_from(vi, z, vi.operator(z))


def _generalized_jacobian(vi: BoxVi, z, Hz, JH) -> np.ndarray:
    V = np.array(JH, dtype=np.float64)
    b = np.flatnonzero(vi.bounded)
    if b.size:
        da, db = kernels.fb_partials(z[b] - vi.lower[b], Hz[b])
        V[b] *= db[:, None]
        V[b, b] += da
    return V


def _newton_direction(V, r, grad, cond_limit, lm_scale):
    d = None
    try:
        if np.linalg.cond(V) < cond_limit:
            d = np.linalg.solve(V, -r)
    except np.linalg.LinAlgError:
        d = None
    if d is None or not np.all(np.isfinite(d)):
        mu = lm_scale * np.linalg.norm(r)
        try:
            d = np.linalg.solve(V.T @ V + mu * np.eye(V.shape[0]), -grad)
        except np.linalg.LinAlgError:
            d = None
    if d is None or not np.all(np.isfinite(d)):
        return None
    return d


class _Counter:
    def __init__(self, vi: BoxVi):
        self.vi = vi
        self.op = 0
        self.jac = 0

    def H(self, z):
        self.op += 1
        return self.vi.operator(z)

    def JH(self, z):
        self.jac += 1
        return self.vi.jacobian(z)


def _crash(vi: BoxVi, ev: _Counter, z, tol, max_iter, armijo, backtrack,
           newton_min_step, lm_scale, cond_limit, boundary_frac=0.995):
    """Interior damped Newton on H = 0. Returns (z, H(z), steps, line-search steps)."""
    b = vi.bounded
    Hz = ev.H(z)
    phi = 0.5 * Hz @ Hz
    steps = ls = 0
    for _ in range(max_iter):
        if np.max(np.abs(Hz), initial=0.0) <= tol:
            break
        J = ev.JH(z)
        grad = J.T @ Hz
        d = _newton_direction(J, Hz, grad, cond_limit, lm_scale)
        if d is None or not grad @ d < 0:
            break
        t = 1.0
        shrink = b & (d < 0)
        if shrink.any():
            gap = z[shrink] - vi.lower[shrink]
            t = min(1.0, boundary_frac * float(np.min(gap / -d[shrink])))
        if t < newton_min_step:
            break
        accepted = False
        while t >= newton_min_step:
            trial = z + t * d
            H_trial = ev.H(trial)
            phi_trial = 0.5 * H_trial @ H_trial
            if np.isfinite(phi_trial) and phi_trial <= phi + armijo * t * (grad @ d):
                accepted = True
                break
            t *= backtrack
            ls += 1
        if not accepted:
            break
        z, Hz, phi = trial, H_trial, phi_trial
        steps += 1
    return z, Hz, steps, ls


def solve_box_vi(vi: BoxVi, z0, tol: float = 1e-8, max_iter: int = 200, *,
                 armijo: float = 1e-4, backtrack: float = 0.5, newton_min_step: float = 1e-10,
                 min_step: float = 1e-14,
                 lm_scale: float = 1e-8, cond_limit: float = 1e12,
                 stall_tol: float = 1e-16, stall_window: int = 10,
                 crash_iter: int = 50) -> InnerResult:
    if not tol > 0:
        raise ValueError("tol must be positive")
    z = np.asarray(z0, dtype=np.float64).copy()
    if z.shape != (vi.dim,) or not np.all(np.isfinite(z)):
        raise ValueError("z0 must be a finite vector of the problem dimension")
    z = vi.project(z)
    ev = _Counter(vi)
    newton = ls = fallback = crash = 0

    if crash_iter > 0:
        zc, Hc, crash, crash_ls = _crash(vi, ev, z, tol, crash_iter, armijo, backtrack,
                                         newton_min_step, lm_scale, cond_limit)
        ls += crash_ls
        rc = _residual_from(vi, zc, Hc)
        res = float(np.max(np.abs(rc), initial=0.0))
        if res <= tol:
            return InnerResult(z=zc, residual=res, iterations=crash, op_evals=ev.op,
                               jac_evals=ev.jac, status=InnerStatus.CONVERGED,
                               newton_steps=0, linesearch_steps=ls, fallback_steps=0,
                               crash_steps=crash)

    Hz = ev.H(z)
    r = _residual_from(vi, z, Hz)
    psi = 0.5 * r @ r
    stall = 0
    status = InnerStatus.MAX_ITER
    it = 0
    for it in range(max_iter + 1):
        if np.max(np.abs(r), initial=0.0) <= tol:
            status = InnerStatus.CONVERGED
            break
        if it == max_iter:
            break
        V = _generalized_jacobian(vi, z, Hz, ev.JH(z))
        grad = V.T @ r
        d = _newton_direction(V, r, grad, cond_limit, lm_scale)
        use_newton = d is not None and grad @ d <= -1e-8 * (d @ d) ** 1.05
        if use_newton:
            newton += 1
        else:
            d = -grad
            fallback += 1

        t = 1.0
        accepted = False
        floor = newton_min_step if use_newton else min_step
        while t >= floor:
            trial = vi.project(z + t * d)
            H_trial = ev.H(trial)
            r_trial = _residual_from(vi, trial, H_trial)
            psi_trial = 0.5 * r_trial @ r_trial
            if np.isfinite(psi_trial) and psi_trial <= psi + armijo * (grad @ (trial - z)):
                accepted = True
                break
            t *= backtrack
            ls += 1
        if not accepted:
            if use_newton:
                # retry once along the gradient before giving up on this iterate
                d = -grad
                fallback += 1
                t = 1.0 / max(1.0, np.linalg.norm(grad))
                while t >= min_step:
                    trial = vi.project(z + t * d)
                    H_trial = ev.H(trial)
                    r_trial = _residual_from(vi, trial, H_trial)
                    psi_trial = 0.5 * r_trial @ r_trial
                    if np.isfinite(psi_trial) and psi_trial <= psi + armijo * (grad @ (trial - z)):
                        accepted = True
                        break
                    t *= backtrack
                    ls += 1
            if not accepted:
                status = InnerStatus.STALLED
                break

        decrease = psi - psi_trial
        z, Hz, r = trial, H_trial, r_trial
        psi = psi_trial
        stall = stall + 1 if decrease <= stall_tol * max(1.0, psi) else 0
        if stall >= stall_window:
            status = InnerStatus.STALLED
            break

    res = float(np.max(np.abs(r), initial=0.0))
    logger.debug("box VI: %s after %d iterations, residual %.3e", status.value, it, res)
    return InnerResult(z=z, residual=res, iterations=crash + it, op_evals=ev.op,
                       jac_evals=ev.jac, status=status, newton_steps=newton,
                       linesearch_steps=ls, fallback_steps=fallback, crash_steps=crash)
