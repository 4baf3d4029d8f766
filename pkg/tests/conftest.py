import numpy as np
import pytest

from cdqvi import AqviInstance, ContactSpec, SpringLattice, contact_instance
from cdqvi import _kernels_py
from cdqvi.contact import build_constraint_matrices, build_instance, random_instance

try:
    from cdqvi import _kernels as _kernels_c
except ImportError:
    _kernels_c = None

BACKENDS = [pytest.param(_kernels_py, id="python"),
            pytest.param(_kernels_c, id="cython",
                         marks=pytest.mark.skipif(_kernels_c is None, reason="extension not built"))]

# criterion number -> (passed, detail); filled by test_acceptance
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture(params=BACKENDS)
def backend(request):
    return request.param


@pytest.fixture
def tiny() -> AqviInstance:
    """r=1, phi=1, l=10, C=I, fext=(0,1): D=I, e=(0,-1)."""
    return contact_instance(ContactSpec(1, 1.0, 10.0))


@pytest.fixture
def tiny_interior() -> AqviInstance:
    """Same constraints, e=(0,1): the unconstrained minimizer is feasible."""
    A, B, c = build_constraint_matrices(1, 1.0, 10.0)
    return build_instance(np.eye(2), np.array([0.0, -1.0]), A, B, c, phi=1.0, l=10.0)


@pytest.fixture
def r2_coupled() -> AqviInstance:
    return contact_instance(ContactSpec(2, 0.5, 3.0, SpringLattice(1.0, 1.0, 0.3)))


@pytest.fixture
def random_small():
    def make(seed, r=2, phi=1.0):
        return random_instance(r, phi, np.random.default_rng(seed))
    return make


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}")
