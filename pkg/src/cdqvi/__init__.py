"""Canonical-duality solver for affine QVIs from contact problems with Coulomb friction."""

from .canonical import (
    CanonicalEval, evaluate, h_eps, jh_eps, lambda_op, total_complementarity,
    total_complementarity_smoothed, v0, v0_conj,
)
from .contact import (
    ContactSpec, FromFile, SpringLattice, build_constraint_matrices, build_instance,
    build_stiffness, contact_instance, load_instance, save_instance,
)
from .core import (
    AqviInstance, InvalidInstanceError, PrimalDualPoint, assemble_quadratic,
    constraint_values, fb, fb_smoothed, kkt_residual, primal_merit,
)
from .inner import BoxVi, InnerResult, InnerStatus, mcp_residual, solve_box_vi
from .kernels import BACKEND
from .oracle import CapabilityError, KktPoint, enumerate_kkt
from .outer import PHI_GRID, SolveReport, SolverParams, Status, solve_aqvi, sweep

__version__ = "0.1.0"
