"""Frictional-contact AQVI instances.

Variables come in pairs per contact node: index ``2j-1`` (1-based) is the
tangential stress, ``2j`` the normal stress. The feasible set encoded by
``A mu + B tau - c <= 0`` is::

    -l <= mu_2j <= 0,   |mu_{2j-1}| <= phi * |tau_2j|.

The stiffness matrices of the classical OKZ benchmark problems are not
distributed, so :class:`SpringLattice` provides a deterministic SPD surrogate
and :class:`FromFile` imports an externally supplied matrix.
"""

from __future__ import annotations

import dataclasses
import json
import math
from pathlib import Path
from typing import Any

import numpy as np
import scipy.linalg

from .core import AqviInstance, InvalidInstanceError


class InstanceFileError(InvalidInstanceError):
    """Malformed or inconsistent instance file."""


@dataclasses.dataclass(frozen=True)
class SpringLattice:
    k_t: float = 1.0
    k_n: float = 1.0
    coupling: float = 0.3

    def __post_init__(self):
        if not (self.k_t > 0 and self.k_n > 0 and self.coupling >= 0):
            raise ValueError("SpringLattice needs k_t > 0, k_n > 0, coupling >= 0")


@dataclasses.dataclass(frozen=True)
class FromFile:
    path: str


@dataclasses.dataclass(frozen=True)
class ContactSpec:
    r: int
    phi: float
    l: float
    stiffness_model: SpringLattice | FromFile = SpringLattice()
    fext: np.ndarray | None = None

    def __post_init__(self):
        if self.r < 1:
            raise ValueError("r must be >= 1")
        if not (self.phi > 0 and self.l > 0):
            raise ValueError("phi and l must be positive")
        if self.fext is not None and np.shape(self.fext) != (2 * self.r,):
            raise ValueError(f"fext must have length {2 * self.r}")

    @property
    def N(self) -> int:
        return 2 * self.r


def build_constraint_matrices(r: int, phi: float, l: float):
    """Return ``(A, B, c)`` for ``r`` contact nodes.

    Rows ``2k-1, 2k`` act on variable ``k``. For tangential ``k`` they read
    ``+-mu_k + phi tau_{k+1} <= 0``; for normal ``k`` they read ``mu_k <= 0``
    and ``-mu_k - l <= 0``.
    """
    if r < 1 or not phi > 0 or not l > 0:
        raise ValueError("need r >= 1, phi > 0, l > 0")
    N = 2 * r
    m = 2 * N
    A = np.zeros((m, N))
    B = np.zeros((m, N))
    c = np.zeros(m)
    for i in range(1, m + 1):
        if i % 2:
            A[i - 1, (i + 1) // 2 - 1] = 1.0
        else:
            A[i - 1, i // 2 - 1] = -1.0
        k = (i + 1) // 2
        if k % 2:
            B[i - 1, k] = phi  # column k+1 in 1-based indexing
        if i % 4 == 0:
            c[i - 1] = l
    return A, B, c


def _spring_lattice(r: int, model: SpringLattice) -> np.ndarray:
    N = 2 * r
    C = np.zeros((N, N))
    for j in range(r):
        C[2 * j, 2 * j] = model.k_t
        C[2 * j + 1, 2 * j + 1] = model.k_n
        if j + 1 < r:
            for off in (0, 1):
                a, b = 2 * j + off, 2 * (j + 1) + off
                C[a, b] = C[b, a] = -model.coupling
    C = 0.5 * (C + C.T)
    # smallest eigenvalue >= 1e-8 * max diagonal, measured after the shift
    rel = 1.01e-8
    dmax = np.diag(C).max()
    lo = np.linalg.eigvalsh(C).min()
    if lo < 1e-8 * dmax:
        C += (rel * dmax - lo) / (1.0 - rel) * np.eye(N)
    return C


def _read_matrix_file(path: str | Path) -> np.ndarray:
    path = Path(path)
    text = path.read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError:
        return np.loadtxt(path, ndmin=2)
    if isinstance(data, dict):
        if "C" in data:
            return np.asarray(data["C"], dtype=np.float64)
        if "D" in data:
            return np.linalg.inv(np.asarray(data["D"], dtype=np.float64))
        raise InstanceFileError(f"{path}: expected a 'C' or 'D' entry")
    return np.asarray(data, dtype=np.float64)


def check_spd(C: np.ndarray, name: str = "C") -> None:
    C = np.asarray(C)
    if C.ndim != 2 or C.shape[0] != C.shape[1]:
        raise InvalidInstanceError(f"{name} must be square, got shape {C.shape}")
    if not np.all(np.isfinite(C)):
        raise InvalidInstanceError(f"{name} has non-finite entries")
    if np.abs(C - C.T).max() > 1e-10 * max(1.0, np.abs(C).max()):
        raise InvalidInstanceError(f"{name} is not symmetric")
    try:
        scipy.linalg.cholesky(C, lower=True)
    except np.linalg.LinAlgError as exc:
        raise InvalidInstanceError(f"{name} is not positive definite") from exc


def build_stiffness(spec: ContactSpec) -> np.ndarray:
    model = spec.stiffness_model
    if isinstance(model, SpringLattice):
        return _spring_lattice(spec.r, model)
    if isinstance(model, FromFile):
        C = _read_matrix_file(model.path)
        if C.shape != (spec.N, spec.N):
            raise InvalidInstanceError(f"stiffness file has shape {C.shape}, expected {(spec.N, spec.N)}")
        check_spd(C)
        return 0.5 * (C + C.T)
    raise TypeError(f"unknown stiffness model {model!r}")


def default_fext(r: int, l: float) -> np.ndarray:
    """Deterministic load: nodes near the ends lift off, central nodes press
    past the bound ``-l``, every node is pushed tangentially.

    A single node gets the unit load ``(0, 1)`` so the smallest instance has
    the hand-checkable solution ``tau = 0``.
    """
    if r == 1:
        return np.array([0.0, 1.0])
    N = 2 * r
    f = np.empty(N)
    for j in range(r):
        s = math.sin(math.pi * (j + 1) / (r + 1))
        f[2 * j] = 0.4 * l * (1.0 + 0.5 * math.cos(math.pi * j / max(r - 1, 1)))
        f[2 * j + 1] = l * (0.25 - 1.5 * s)
    return f


def build_instance(C, fext, A, B, c, *, phi=None, l=None, meta=None) -> AqviInstance:
    """Instance with ``D = C^{-1}`` and ``e = -C^{-1} fext``."""
    C = np.asarray(C, dtype=np.float64)
    fext = np.asarray(fext, dtype=np.float64)
    check_spd(C)
    if fext.shape != (C.shape[0],):
        raise ValueError(f"fext has shape {fext.shape}, expected ({C.shape[0]},)")
    factor = scipy.linalg.cho_factor(C, lower=True)
    D = scipy.linalg.cho_solve(factor, np.eye(C.shape[0]))
    D = 0.5 * (D + D.T)
    e = 0.0 - scipy.linalg.cho_solve(factor, fext)  # no negative zeros in files
    return AqviInstance(A, B, c, D, e, phi=phi, l=l, meta=dict(meta or {}))


def contact_instance(spec: ContactSpec, name: str | None = None) -> AqviInstance:
    C = build_stiffness(spec)
    fext = default_fext(spec.r, spec.l) if spec.fext is None else np.asarray(spec.fext, dtype=np.float64)
    A, B, c = build_constraint_matrices(spec.r, spec.phi, spec.l)
    meta: dict[str, Any] = {"r": spec.r}
    if isinstance(spec.stiffness_model, SpringLattice):
        meta["stiffness"] = dataclasses.asdict(spec.stiffness_model) | {"model": "spring_lattice"}
    else:
        meta["stiffness"] = {"model": "file", "path": str(spec.stiffness_model.path)}
    if name:
        meta["name"] = name
    return build_instance(C, fext, A, B, c, phi=spec.phi, l=spec.l, meta=meta)


def random_spd(n: int, rng: np.random.Generator, cond: float = 10.0) -> np.ndarray:
    """Random SPD matrix with eigenvalues spread log-uniformly in [1, cond]."""
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    w = np.exp(rng.uniform(0.0, math.log(cond), n))
    C = (Q * w) @ Q.T
    return 0.5 * (C + C.T)


def random_instance(r: int, phi: float, rng: np.random.Generator, l: float = 1.5) -> AqviInstance:
    """Small contact instance with random SPD stiffness and random load."""
    C = random_spd(2 * r, rng)
    fext = rng.uniform(-1.0, 1.0, 2 * r) * np.tile([1.0, 2.0], r)
    A, B, c = build_constraint_matrices(r, phi, l)
    return build_instance(C, fext, A, B, c, phi=phi, l=l, meta={"r": r, "random": True})


def with_friction(inst: AqviInstance, phi: float) -> AqviInstance:
    """Same stiffness and load, constraint matrices rebuilt for ``phi``."""
    if inst.phi is None or inst.l is None:
        raise InvalidInstanceError("instance carries no phi/l; cannot rebuild constraints")
    r = inst.N // 2
    A0, B0, c0 = build_constraint_matrices(r, inst.phi, inst.l)
    if not (np.array_equal(A0, inst.A) and np.array_equal(B0, inst.B) and np.array_equal(c0, inst.c)):
        raise InvalidInstanceError("constraint matrices do not follow the contact pattern")
    A, B, c = build_constraint_matrices(r, phi, inst.l)
    return AqviInstance(A, B, c, inst.D, inst.e, phi=phi, l=inst.l, meta=inst.meta)


# -- instance files ---------------------------------------------------------

def instance_to_dict(inst: AqviInstance) -> dict[str, Any]:
    return {
        "N": inst.N,
        "m": inst.m,
        "A": inst.A.tolist(),
        "B": inst.B.tolist(),
        "c": inst.c.tolist(),
        "D": inst.D.tolist(),
        "e": inst.e.tolist(),
        "phi": inst.phi,
        "l": inst.l,
        "meta": inst.meta,
    }


def save_instance(inst: AqviInstance, path: str | Path) -> None:
    Path(path).write_text(json.dumps(instance_to_dict(inst), indent=1) + "\n")


def _matrix(data, key, shape):
    try:
        arr = np.asarray(data[key], dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise InstanceFileError(f"'{key}' is not a numeric array") from exc
    if arr.shape != shape:
        raise InstanceFileError(f"'{key}' has shape {arr.shape}, expected {shape}")
    return arr


def instance_from_dict(data: dict[str, Any]) -> AqviInstance:
    if not isinstance(data, dict):
        raise InstanceFileError("instance file must hold a JSON object")
    for key in ("N", "m", "A", "B", "c"):
        if key not in data:
            raise InstanceFileError(f"missing '{key}'")
    N, m = data["N"], data["m"]
    if not (isinstance(N, int) and isinstance(m, int) and N > 0):
        raise InstanceFileError("'N' and 'm' must be positive integers")
    if m != 2 * N:
        raise InstanceFileError(f"m must equal 2N, got N={N}, m={m}")
    A = _matrix(data, "A", (m, N))
    B = _matrix(data, "B", (m, N))
    c = _matrix(data, "c", (m,))
    has_c, has_d = data.get("C") is not None, data.get("D") is not None
    if has_c == has_d:
        raise InstanceFileError("exactly one of 'C' and 'D' is required")
    has_f, has_e = data.get("fext") is not None, data.get("e") is not None
    if has_f == has_e:
        raise InstanceFileError("exactly one of 'fext' and 'e' is required")
    if has_d:
        D = _matrix(data, "D", (N, N))
    else:
        C = _matrix(data, "C", (N, N))
        check_spd(C)
        D = scipy.linalg.cho_solve(scipy.linalg.cho_factor(C, lower=True), np.eye(N))
        D = 0.5 * (D + D.T)
    if has_e:
        e = _matrix(data, "e", (N,))
    else:
        e = -(D @ _matrix(data, "fext", (N,)))
    phi, l = data.get("phi"), data.get("l")
    meta = data.get("meta") or {}
    if not isinstance(meta, dict):
        raise InstanceFileError("'meta' must be an object")
    return AqviInstance(A, B, c, D, e,
                        phi=None if phi is None else float(phi),
                        l=None if l is None else float(l), meta=meta)


def load_instance(path: str | Path) -> AqviInstance:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InstanceFileError(f"{path}: not valid JSON ({exc})") from exc
    return instance_from_dict(data)
