"""Brute-force KKT enumeration for small AQVIs.

Every subset ``S`` of constraints is treated as active: the square system
``D tau + A_S^T lam_S = -e``, ``(A+B)_S tau = c_S`` is solved, the inactive
multipliers are set to zero and sign-feasible solutions are kept. Singular
systems are solved in the least-squares sense, which picks the minimum-norm
multiplier on degenerate faces.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from . import kernels
from .core import AqviInstance, kkt_residual

MAX_CONSTRAINTS = 20


class CapabilityError(RuntimeError):
    """Problem too large for exhaustive enumeration."""


@dataclasses.dataclass(frozen=True)
class KktPoint:
    tau: np.ndarray
    lam: np.ndarray
    active_set: tuple[int, ...]
    residual: float


def _lstsq_candidate(inst: AqviInstance, mask: int):
    N, m = inst.N, inst.m
    idx = [i for i in range(m) if (mask >> i) & 1]
    k = len(idx)
    K = np.zeros((N + k, N + k))
    K[:N, :N] = inst.D
    K[:N, N:] = inst.A[idx].T
    K[N:, :N] = inst.G[idx]
    rhs = np.concatenate([-inst.e, inst.c[idx]])
    x, *_ = np.linalg.lstsq(K, rhs, rcond=None)
    if np.max(np.abs(K @ x - rhs), initial=0.0) > 1e-10:
        return None
    lam = np.zeros(m)
    lam[idx] = x[N:]
    return x[:N], lam


def enumerate_kkt(inst: AqviInstance, tol: float = 1e-9, *, pivot_tol: float = 1e-12,
                  residual_cap: float = 1e-10, dedup: float = 1e-8) -> list[KktPoint]:
    """All KKT points reachable by active-set enumeration, sorted by active-set bitmask."""
    if inst.m > MAX_CONSTRAINTS:
        raise CapabilityError(f"enumeration is capped at m <= {MAX_CONSTRAINTS}, got m = {inst.m}")
    accepted, singular = kernels.enumerate_active_sets(
        inst.D, inst.A, inst.G, inst.e, inst.c, tol, pivot_tol)
    candidates = [(mask, tau, lam) for mask, tau, lam in accepted]
    for mask in singular:
        sol = _lstsq_candidate(inst, mask)
        if sol is None:
            continue
        tau, lam = sol
        if np.any(lam < -tol) or np.any(inst.G @ tau - inst.c > tol):
            continue
        candidates.append((mask, tau, lam))
    candidates.sort(key=lambda t: t[0])

    points: list[KktPoint] = []
    for mask, tau, lam in candidates:
        lam = np.where(lam < 0.0, 0.0, lam)  # sign roundoff within tol
        res = float(np.max(np.abs(kkt_residual(inst, tau, lam))))
        if res > residual_cap:
            continue
        z = np.concatenate([tau, lam])
        if any(np.max(np.abs(z - np.concatenate([p.tau, p.lam]))) < dedup for p in points):
            continue
        active = tuple(i for i in range(inst.m) if (mask >> i) & 1)
        points.append(KktPoint(tau=tau, lam=lam, active_set=active, residual=res))
    return points
