import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cdqvi import (
    AqviInstance, ContactSpec, InvalidInstanceError, PrimalDualPoint, assemble_quadratic, constraint_values,
    contact_instance, fb, fb_smoothed, kkt_residual, primal_merit,
)

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


@pytest.mark.parametrize("a, b, expected", [(0, 0, 0.0), (3, 4, -2.0), (0, -2, 4.0)])
def test_fb_examples(a, b, expected):
    assert fb(a, b) == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize("a, b, eps, expected", [(3, 4, 0, -2.0), (0, 0, 1, 1.0), (0, 0, 1e-4, 1e-4)])
def test_fb_smoothed_examples(a, b, eps, expected):
    assert fb_smoothed(a, b, eps) == pytest.approx(expected, rel=1e-15)


def test_fb_smoothed_rejects_negative_eps():
    with pytest.raises(ValueError):
        fb_smoothed(1.0, 1.0, -1e-3)


@given(finite, finite, st.floats(0, 10))
def test_fb_smoothed_close_to_fb(a, b, eps):
    gap = fb_smoothed(a, b, eps) - fb(a, b)
    assert -1e-12 * (1 + abs(a) + abs(b)) <= gap <= eps + 1e-9


@given(finite, finite, st.floats(0, 1), st.floats(0, 1))
def test_fb_smoothed_monotone_in_eps(a, b, e1, e2):
    lo, hi = sorted((e1, e2))
    assert fb_smoothed(a, b, lo) <= fb_smoothed(a, b, hi) + 1e-12


def test_constraint_values_tiny(tiny):
    np.testing.assert_array_equal(constraint_values(tiny, [0, 0]), [0, 0, 0, -10])
    np.testing.assert_array_equal(constraint_values(tiny, [0, -1]), [-1, -1, -1, -9])


def test_constraint_values_on_boundary(r2_coupled):
    # friction bound and normal lower bound active at both nodes
    rows = [0, 3, 4, 7]
    tau = np.linalg.solve(r2_coupled.G[rows], r2_coupled.c[rows])
    np.testing.assert_allclose(tau, [1.5, -3.0, 1.5, -3.0])
    np.testing.assert_allclose(constraint_values(r2_coupled, tau)[rows], 0, atol=1e-12)


def test_constraint_values_dimension_check(tiny):
    with pytest.raises(ValueError):
        constraint_values(tiny, [0.0, 0.0, 0.0])


def test_kkt_residual_zero_at_known_solutions(tiny, tiny_interior):
    np.testing.assert_array_equal(kkt_residual(tiny, [0, 0], [0, 0, 1, 0]), 0)
    np.testing.assert_array_equal(kkt_residual(tiny_interior, [0, -1], [0, 0, 0, 0]), 0)


def test_kkt_residual_complementarity_block_vanishes_for_feasible_zero_multipliers(r2_coupled):
    tau = np.array([0.1, -1.0, -0.2, -2.0])
    assert np.all(constraint_values(r2_coupled, tau) <= 0)
    Y = kkt_residual(r2_coupled, tau, np.zeros(8))
    np.testing.assert_array_equal(Y[4:], 0)


def test_primal_merit_values(tiny, r2_coupled):
    assert primal_merit(r2_coupled, np.zeros(4), np.zeros(8)) == pytest.approx(0.0, abs=1e-12)
    assert primal_merit(tiny, [0, 0], [0, 0, 1, 0]) == pytest.approx(-0.5, abs=1e-15)


def test_primal_merit_identity(random_small):
    rng = np.random.default_rng(1)
    for seed in range(5):
        inst = random_small(seed)
        for _ in range(20):
            tau, lam = rng.normal(size=inst.N), rng.normal(size=inst.m)
            Y = kkt_residual(inst, tau, lam)
            lhs = primal_merit(inst, tau, lam)
            rhs = 0.5 * Y @ Y - 0.5 * inst.e @ inst.e
            assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)
            assert lhs >= -0.5 * inst.e @ inst.e - 1e-12


def test_assemble_quadratic_tiny_block(tiny):
    M, fvec = assemble_quadratic(np.eye(2), tiny.A, np.zeros(2))
    np.testing.assert_array_equal(fvec, 0)
    stacked = np.vstack([np.eye(2), tiny.A])
    np.testing.assert_array_equal(M, stacked @ stacked.T)
    np.testing.assert_array_equal(M[:2, :2], np.eye(2))


def test_assemble_quadratic_psd_random():
    rng = np.random.default_rng(3)
    for _ in range(10):
        N = 4
        Q = rng.normal(size=(N, N))
        D = Q @ Q.T + np.eye(N)
        A = rng.normal(size=(2 * N, N))
        M, fvec = assemble_quadratic(D, A, rng.normal(size=N))
        assert np.max(np.abs(M - M.T)) == 0
        assert np.linalg.eigvalsh(M).min() >= -1e-10 * np.linalg.norm(M)


def test_assemble_quadratic_dimension_errors():
    with pytest.raises(ValueError):
        assemble_quadratic(np.eye(2), np.zeros((4, 3)), np.zeros(2))
    with pytest.raises(ValueError):
        assemble_quadratic(np.eye(2), np.zeros((4, 2)), np.zeros(3))


def test_instance_validation(tiny):
    A, B, c, D, e = tiny.A, tiny.B, tiny.c, tiny.D, tiny.e
    with pytest.raises(InvalidInstanceError):
        AqviInstance(A[:3], B[:3], c[:3], D, e)  # m != 2N
    with pytest.raises(InvalidInstanceError):
        AqviInstance(A, B, c, np.array([[1.0, 0.5], [0.0, 1.0]]), e)  # not symmetric
    with pytest.raises(InvalidInstanceError):
        AqviInstance(A, B, c, -np.eye(2), e)  # not PD
    with pytest.raises(InvalidInstanceError):
        AqviInstance(A, B, c, D, np.array([np.nan, 0.0]))


def test_instance_is_immutable(tiny):
    with pytest.raises(ValueError):
        tiny.D[0, 0] = 2.0


def test_primal_dual_point_dimensions(tiny):
    pt = PrimalDualPoint.zeros(tiny)
    pt.check(tiny)
    assert pt.stacked().shape == (2 + 4 + 4,)
    with pytest.raises(ValueError):
        PrimalDualPoint(np.zeros(3), np.zeros(4), np.zeros(4)).check(tiny)


@settings(max_examples=50)
@given(st.lists(finite, min_size=2, max_size=2), st.lists(finite, min_size=4, max_size=4))
def test_merit_bounded_below(tau, lam):
    inst = contact_instance(ContactSpec(1, 1.0, 10.0))
    assert primal_merit(inst, tau, lam) >= -0.5 * inst.e @ inst.e - 1e-9 * (1 + max(map(abs, tau + lam))) ** 2
