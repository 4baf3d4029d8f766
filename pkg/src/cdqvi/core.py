"""AQVI data model, Fischer-Burmeister function, KKT residual and primal merit.

An affine QVI is given by ``(A, B, c, D, e)``: find ``tau`` with::

    <D tau + e, mu - tau> >= 0   for all mu with A mu + B tau - c <= 0.

Its KKT system is ``D tau + e + A^T lam = 0`` and
``0 <= lam  _|_  (A + B) tau - c <= 0``.
"""

from __future__ import annotations

import dataclasses
from typing import Any

import numpy as np
import scipy.linalg

from . import kernels


class InvalidInstanceError(ValueError):
    """Raised when instance data violate the AQVI invariants."""


def fb(a: float, b: float) -> float:
    """Fischer-Burmeister function; zero iff a >= 0, b >= 0 and ab = 0."""
    return float(np.hypot(a, b) - (a + b))


def fb_smoothed(a: float, b: float, eps: float) -> float:
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    return float(np.sqrt(a * a + b * b + eps * eps) - (a + b))


def _frozen(x) -> np.ndarray:
    arr = np.array(x, dtype=np.float64)
    arr.setflags(write=False)
    return arr


def assemble_quadratic(D, A, e) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(M, fvec)`` with ``M = [D^T; A][D, A^T]`` and ``fvec = -[D^T; A] e``.

    ``1/2 z^T M z - fvec^T z`` equals ``1/2 ||D tau + e + A^T lam||^2 - 1/2 e^T e``
    for ``z = (tau, lam)``.
    """
    D = np.asarray(D, dtype=np.float64)
    A = np.asarray(A, dtype=np.float64)
    e = np.asarray(e, dtype=np.float64)
    if D.ndim != 2 or D.shape[0] != D.shape[1]:
        raise ValueError(f"D must be square, got shape {D.shape}")
    N = D.shape[0]
    if A.ndim != 2 or A.shape[1] != N:
        raise ValueError(f"A must have {N} columns, got shape {A.shape}")
    if e.shape != (N,):
        raise ValueError(f"e must have length {N}, got shape {e.shape}")
    P = np.vstack([D.T, A])  # (N+m) x N
    M = P @ P.T
    M = 0.5 * (M + M.T)
    return M, -(P @ e)


@dataclasses.dataclass(frozen=True, eq=False)
class AqviInstance:
    """One affine QVI. ``M`` and ``fvec`` are derived and cached.

    ``phi`` and ``l`` are the contact parameters the constraint matrices were
    built from (``None`` for instances of other origin).
    """

    A: np.ndarray
    B: np.ndarray
    c: np.ndarray
    D: np.ndarray
    e: np.ndarray
    phi: float | None = None
    l: float | None = None
    meta: dict[str, Any] = dataclasses.field(default_factory=dict)
    M: np.ndarray = dataclasses.field(init=False, repr=False)
    fvec: np.ndarray = dataclasses.field(init=False, repr=False)
    G: np.ndarray = dataclasses.field(init=False, repr=False)

    def __post_init__(self):
        A, B, c, D, e = (_frozen(x) for x in (self.A, self.B, self.c, self.D, self.e))
        if D.ndim != 2 or D.shape[0] != D.shape[1]:
            raise InvalidInstanceError(f"D must be square, got shape {D.shape}")
        N = D.shape[0]
        if N == 0 or N % 2:
            raise InvalidInstanceError(f"N must be positive and even, got {N}")
        if A.ndim != 2 or A.shape[1] != N:
            raise InvalidInstanceError(f"A has shape {A.shape}, expected (m, {N})")
        m = A.shape[0]
        if m != 2 * N:
            raise InvalidInstanceError(f"m must equal 2N = {2 * N}, got {m}")
        if B.shape != (m, N):
            raise InvalidInstanceError(f"B has shape {B.shape}, expected {(m, N)}")
        if c.shape != (m,):
            raise InvalidInstanceError(f"c has shape {c.shape}, expected ({m},)")
        if e.shape != (N,):
            raise InvalidInstanceError(f"e has shape {e.shape}, expected ({N},)")
        for name, arr in (("A", A), ("B", B), ("c", c), ("D", D), ("e", e)):
            if not np.all(np.isfinite(arr)):
                raise InvalidInstanceError(f"{name} has non-finite entries")
        scale = max(1.0, float(np.abs(D).max()))
        if np.abs(D - D.T).max() > 1e-10 * scale:
            raise InvalidInstanceError("D is not symmetric")
        try:
            scipy.linalg.cholesky(D, lower=True)
        except np.linalg.LinAlgError as exc:
            raise InvalidInstanceError("D is not positive definite") from exc
        M, fvec = assemble_quadratic(D, A, e)
        if M.size and np.linalg.eigvalsh(M).min() < -1e-10 * np.abs(M).max():
            raise InvalidInstanceError("M is not positive semidefinite")
        for name, arr in (("A", A), ("B", B), ("c", c), ("D", D), ("e", e),
                          ("M", _frozen(M)), ("fvec", _frozen(fvec)), ("G", _frozen(A + B))):
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "meta", dict(self.meta))

    @property
    def N(self) -> int:
        return self.D.shape[0]

    @property
    def m(self) -> int:
        return self.A.shape[0]

    def split(self, z) -> tuple[np.ndarray, np.ndarray]:
        z = np.asarray(z, dtype=np.float64)
        return z[: self.N], z[self.N: self.N + self.m]


@dataclasses.dataclass
class PrimalDualPoint:
    """Stress ``tau`` (N), KKT multipliers ``lam`` (m), canonical dual ``sigma`` (m)."""

    tau: np.ndarray
    lam: np.ndarray
    sigma: np.ndarray

    @classmethod
    def zeros(cls, inst: AqviInstance) -> "PrimalDualPoint":
        return cls(np.zeros(inst.N), np.zeros(inst.m), np.zeros(inst.m))

    def check(self, inst: AqviInstance) -> None:
        for name, arr, n in (("tau", self.tau, inst.N), ("lam", self.lam, inst.m),
                             ("sigma", self.sigma, inst.m)):
            if np.shape(arr) != (n,):
                raise ValueError(f"{name} has shape {np.shape(arr)}, expected ({n},)")

    def stacked(self) -> np.ndarray:
        return np.concatenate([self.tau, self.lam, self.sigma])


def _check_vec(x, n: int, name: str) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (n,):
        raise ValueError(f"{name} has shape {x.shape}, expected ({n},)")
    return x


def constraint_values(inst: AqviInstance, tau) -> np.ndarray:
    """g(tau) = (A + B) tau - c."""
    tau = _check_vec(tau, inst.N, "tau")
    return inst.G @ tau - inst.c


def kkt_residual(inst: AqviInstance, tau, lam) -> np.ndarray:
    """Residual ``Y = (D tau + e + A^T lam, fb(lam_i, -g_i(tau)))``.

    ``||Y||_inf`` is the termination measure of the outer algorithm.
    """
    tau = _check_vec(tau, inst.N, "tau")
    lam = _check_vec(lam, inst.m, "lam")
    stat = inst.D @ tau + inst.e + inst.A.T @ lam
    comp = kernels.fb_vec(lam, -constraint_values(inst, tau))
    return np.concatenate([stat, comp])


def primal_merit(inst: AqviInstance, tau, lam) -> float:
    """Primal objective ``1/2 sum fb(lam, -g)^2 + 1/2 z^T M z - fvec^T z``.

    Equals ``1/2 ||Y||^2 - 1/2 e^T e``; its global minimum value ``-1/2 e^T e``
    is attained exactly at KKT points.
    """
    tau = _check_vec(tau, inst.N, "tau")
    lam = _check_vec(lam, inst.m, "lam")
    z = np.concatenate([tau, lam])
    w = kernels.fb_vec(lam, -constraint_values(inst, tau))
    return float(0.5 * w @ w + 0.5 * z @ inst.M @ z - inst.fvec @ z)
