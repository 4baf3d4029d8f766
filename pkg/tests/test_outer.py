import numpy as np
import pytest

from cdqvi import (
    PHI_GRID, ContactSpec, PrimalDualPoint, SolverParams, Status, constraint_values,
    contact_instance, enumerate_kkt, kkt_residual, solve_aqvi, sweep,
)
from cdqvi.outer import EPS_FLOOR

TOL = SolverParams().outer_tol


def test_interior_solution(tiny_interior):
    rep = solve_aqvi(tiny_interior)
    assert rep.status is Status.SOLVED
    assert rep.outer_iterations <= 2
    np.testing.assert_allclose(rep.solution.tau, [0.0, -1.0], atol=1e-4)
    np.testing.assert_allclose(rep.solution.lam, 0.0, atol=1e-4)


def test_contact_solution(tiny):
    rep = solve_aqvi(tiny)
    assert rep.solved and rep.final_residual <= 1e-4
    np.testing.assert_allclose(rep.solution.tau, [0.0, 0.0], atol=1e-4)
    assert rep.solution.lam[2] == pytest.approx(1.0, abs=1e-4)


def test_start_at_solution_needs_no_iteration(tiny):
    (pt,) = enumerate_kkt(tiny)
    rep = solve_aqvi(tiny, start=PrimalDualPoint(pt.tau, pt.lam, np.zeros(4)))
    assert rep.solved and rep.outer_iterations == 0
    assert rep.eps_history == [] and rep.h_evals == 0


def test_r2_matches_frozen_oracle(r2_coupled):
    rep = solve_aqvi(r2_coupled)
    assert rep.solved
    np.testing.assert_allclose(rep.solution.tau, [1.5, -3.0, 0.69, -3.0], atol=1e-4)


def test_solved_points_pass_independent_checks():
    inst = contact_instance(ContactSpec(5, 1.0, 1000.0))
    rep = solve_aqvi(inst)
    assert rep.solved
    tol = TOL
    tau, lam = rep.solution.tau, rep.solution.lam
    assert np.max(np.abs(inst.D @ tau + inst.e + inst.A.T @ lam)) <= tol
    g = constraint_values(inst, tau)
    assert np.all(lam >= -tol) and np.all(g <= tol)
    assert np.all(np.abs(lam * g) <= tol * (1 + np.abs(lam)) * (1 + np.abs(g)))
    assert rep.final_residual == np.max(np.abs(kkt_residual(inst, tau, lam)))


def test_failure_is_reported():
    inst = contact_instance(ContactSpec(15, 1e5, 1000.0))
    rep = solve_aqvi(inst)
    assert rep.status is Status.FAILURE
    assert rep.final_residual > TOL and rep.outer_iterations <= 20


def test_max_outer_cap():
    inst = contact_instance(ContactSpec(3, 1.0, 1000.0))
    rep = solve_aqvi(inst, SolverParams(outer_tol=1e-15, max_outer=1))
    assert rep.outer_iterations == 1 and rep.status is Status.FAILURE


def test_status_matches_residual():
    for phi in (1e-3, 1.0, 1e4):
        rep = solve_aqvi(contact_instance(ContactSpec(4, phi, 1000.0)))
        assert rep.solved == (rep.final_residual <= TOL)


def test_schedule_helpers():
    p = SolverParams()
    assert p.eps(0) == 1e-4
    assert p.eps(1) == 1e-4 * 1e-1
    assert p.eps(2) == 1e-4 * 1e-1 * 1e-2
    eps = [p.eps(k) for k in range(30)]
    assert all(a > b for a, b in zip(eps, eps[1:]) if b > EPS_FLOOR)
    assert min(eps) == EPS_FLOOR
    assert p.delta(0) == 0.1 and p.delta(2) == 0.1 * 0.1 * 0.1


def test_schedule_recorded():
    rep = solve_aqvi(contact_instance(ContactSpec(15, 1e4, 1000.0)))
    k = len(rep.eps_history)
    assert k == rep.outer_iterations >= 2
    p = SolverParams()
    assert rep.eps_history == [p.eps(j) for j in range(k)]
    assert rep.delta_history == [p.delta(j) for j in range(k)]


@pytest.mark.parametrize("kw", [dict(eps0=0), dict(delta0=-1), dict(gamma=1.0), dict(gamma=0.0),
                                dict(outer_tol=0), dict(max_outer=-1), dict(inner_max_iter=0),
                                dict(inner_tol0=0)])
def test_params_validation(kw):
    with pytest.raises(ValueError):
        SolverParams(**kw)


def test_solve_is_deterministic(r2_coupled):
    a, b = solve_aqvi(r2_coupled), solve_aqvi(r2_coupled)
    np.testing.assert_array_equal(a.solution.stacked(), b.solution.stacked())
    assert (a.h_evals, a.jh_evals, a.inner_newton) == (b.h_evals, b.jh_evals, b.inner_newton)


def test_sweep_shapes_and_order():
    inst = contact_instance(ContactSpec(3, 1.0, 1000.0))
    reps = sweep([("a", inst)], PHI_GRID)
    assert [r.phi for r in reps] == list(PHI_GRID)
    assert all(r.problem == "a" for r in reps)
    assert sweep([inst], []) == []
    par = sweep([("a", inst)], PHI_GRID, jobs=4)
    for x, y in zip(reps, par):
        assert x.status == y.status and x.final_residual == y.final_residual


def test_sweep_r15_easy_friction():
    (rep,) = sweep([contact_instance(ContactSpec(15, 1.0, 1000.0))], [1e-3])
    assert rep.solved and rep.final_residual <= 1e-4
