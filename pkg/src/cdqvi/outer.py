"""Outer shrinking-box loop.

Each outer iteration solves ``VI(H_eps_k, {sigma >= -delta_k})`` from
``(tau_k, lam_k, 0)`` and stops once ``||Y(tau_k, lam_k)||_inf`` is small.
Smoothing follows ``eps_{k+1} = 10^-(k+1) eps_k`` and the box shrinks as
``delta_{k+1} = gamma delta_k``.
"""

from __future__ import annotations

import dataclasses
import enum
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Sequence

import numpy as np

from .canonical import h_eps_z, jh_eps_z
from .contact import with_friction
from .core import AqviInstance, PrimalDualPoint, kkt_residual
from .inner import BoxVi, InnerStatus, solve_box_vi

logger = logging.getLogger(__name__)

EPS_FLOOR = 1e-300
PHI_GRID = (1e-3, 1e-2, 1e-1, 1e0, 1e1, 1e2, 1e3, 1e4, 1e5)


class Status(enum.Enum):
    SOLVED = "solved"
    FAILURE = "failure"


@dataclasses.dataclass(frozen=True)
class SolverParams:
    eps0: float = 1e-4
    delta0: float = 0.1
    gamma: float = 0.1
    outer_tol: float = 1e-4
    max_outer: int = 20
    inner_tol0: float = 1e-5
    inner_max_iter: int = 200
    stagnation_window: int = 3
    stagnation_ratio: float = 1e-3

    def __post_init__(self):
        if not self.eps0 > 0:
            raise ValueError("eps0 must be positive")
        if not self.delta0 > 0:
            raise ValueError("delta0 must be positive")
        if not 0 < self.gamma < 1:
            raise ValueError("gamma must lie in (0, 1)")
        if not self.outer_tol > 0:
            raise ValueError("outer_tol must be positive")
        if self.max_outer < 0 or self.inner_max_iter < 1:
            raise ValueError("iteration caps must be nonnegative (inner: positive)")
        if not self.inner_tol0 > 0:
            raise ValueError("inner_tol0 must be positive")

    def eps(self, k: int) -> float:
        """Smoothing at outer iteration ``k``: ``eps0 * prod_{j=1..k} 10^-j``."""
        e = self.eps0
        for j in range(1, k + 1):
            e = max(e * 10.0 ** (-j), EPS_FLOOR)
        return e

    def delta(self, k: int) -> float:
        """Box relaxation at outer iteration ``k``, multiplied out as the loop does."""
        d = self.delta0
        for _ in range(k):
            d = self.gamma * d
        return d

    def inner_tol(self, eps: float) -> float:
        return self.inner_tol0 * min(1.0, eps / self.eps0)


@dataclasses.dataclass
class SolveReport:
    """One solve. ``inner_newton`` counts every Newton step, crash steps
    included; ``inner_crash`` is that subset."""

    problem: str
    phi: float | None
    status: Status
    outer_iterations: int
    inner_newton: int
    inner_linesearch: int
    inner_fallback: int
    inner_crash: int
    h_evals: int
    jh_evals: int
    wall_time: float
    final_residual: float
    solution: PrimalDualPoint
    eps_history: list[float] = dataclasses.field(default_factory=list)
    delta_history: list[float] = dataclasses.field(default_factory=list)
    inner_status: list[str] = dataclasses.field(default_factory=list)

    @property
    def solved(self) -> bool:
        return self.status is Status.SOLVED


def _box(inst: AqviInstance, eps: float, delta: float) -> BoxVi:
    N, m = inst.N, inst.m
    lower = np.full(N + 2 * m, -np.inf)
    lower[N + m:] = -delta
    return BoxVi(operator=lambda w: h_eps_z(inst, w, eps),
                 jacobian=lambda w: jh_eps_z(inst, w, eps),
                 lower=lower)


def solve_aqvi(inst: AqviInstance, params: SolverParams | None = None,
               start: PrimalDualPoint | None = None, problem: str = "") -> SolveReport:
    params = params or SolverParams()
    pt = start or PrimalDualPoint.zeros(inst)
    pt.check(inst)
    N, m = inst.N, inst.m
    tau = np.array(pt.tau, dtype=np.float64)
    lam = np.array(pt.lam, dtype=np.float64)
    sigma = np.array(pt.sigma, dtype=np.float64)

    t0 = time.perf_counter()
    newton = ls = fb_steps = crash = h_evals = jh_evals = 0
    eps_hist: list[float] = []
    delta_hist: list[float] = []
    inner_status: list[str] = []
    residuals: list[float] = []
    stalled_in_row = 0
    k = 0
    eps, delta = params.eps0, params.delta0
    status = Status.FAILURE
    while True:
        res = float(np.max(np.abs(kkt_residual(inst, tau, lam))))
        residuals.append(res)
        if res <= params.outer_tol:
            status = Status.SOLVED
            break
        if k >= params.max_outer:
            break
        if stalled_in_row >= 2:
            logger.info("two consecutive stalled inner solves; giving up")
            break
        w = params.stagnation_window
        if len(residuals) > w and residuals[-1] > (1.0 - params.stagnation_ratio) * residuals[-1 - w]:
            logger.info("KKT residual stagnated at %.3e", res)
            break

        vi = _box(inst, eps, delta)
        w0 = np.concatenate([tau, lam, np.zeros(m)])
        out = solve_box_vi(vi, w0, tol=params.inner_tol(eps), max_iter=params.inner_max_iter)
        eps_hist.append(eps)
        delta_hist.append(delta)
        inner_status.append(out.status.value)
        newton += out.newton_steps + out.crash_steps
        ls += out.linesearch_steps
        fb_steps += out.fallback_steps
        crash += out.crash_steps
        h_evals += out.op_evals
        jh_evals += out.jac_evals
        stalled_in_row = stalled_in_row + 1 if out.status is InnerStatus.STALLED else 0
        logger.debug("outer %d: eps=%.1e delta=%.1e inner %s residual %.3e", k, eps, delta,
                     out.status.value, out.residual)

        tau = out.z[:N].copy()
        lam = out.z[N:N + m].copy()
        sigma = out.z[N + m:].copy()
        delta = params.gamma * delta
        k += 1
        eps = max(eps * 10.0 ** (-k), EPS_FLOOR)

    wall = time.perf_counter() - t0
    return SolveReport(
        problem=problem or str(inst.meta.get("name", "")),
        phi=inst.phi,
        status=status,
        outer_iterations=k,
        inner_newton=newton,
        inner_linesearch=ls,
        inner_fallback=fb_steps,
        inner_crash=crash,
        h_evals=h_evals,
        jh_evals=jh_evals,
        wall_time=wall,
        final_residual=residuals[-1],
        solution=PrimalDualPoint(tau, lam, sigma),
        eps_history=eps_hist,
        delta_history=delta_hist,
        inner_status=inner_status,
    )


def sweep(instances: Sequence[AqviInstance] | Sequence[tuple[str, AqviInstance]],
          phis: Sequence[float], params: SolverParams | None = None,
          jobs: int = 1) -> list[SolveReport]:
    """Solve every (instance, phi) pair; reports come back in input order.

    ``instances`` may hold bare instances or ``(name, instance)`` pairs.
    Constraint matrices are rebuilt for each phi.
    """
    tasks = []
    for i, item in enumerate(instances):
        name, inst = item if isinstance(item, tuple) else (str(item.meta.get("name", f"P{i}")), item)
        for phi in phis:
            tasks.append((name, with_friction(inst, float(phi))))
    if not tasks:
        return []

    def run(task):
        name, inst = task
        return solve_aqvi(inst, params, problem=name)

    if jobs <= 1:
        return [run(t) for t in tasks]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(run, tasks))
