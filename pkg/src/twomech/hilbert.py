"""Truncated Fock-space master-equation solver.

Density matrices are vectorized column-major (``vec(A X B) = (B^T kron A)
vec(X)``). Hamiltonians and rates are given as nu-values in MHz;
``build_liouvillian`` is the only place they are multiplied by 2pi.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.sparse.csgraph import reverse_cuthill_mckee

from .errors import (
    DegenerateSteadyStateError,
    InstabilityError,
    InvalidDimensionError,
    NonHermitianError,
    ValidationError,
)
from .gaussian import CouplingKind, LinearModel, MomentSet
from .units import TWO_PI

log = logging.getLogger(__name__)

HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10
POSITIVITY_TOL = 1e-8
# superoperators at or below this size get a dense spectral check
DENSE_CHECK_MAX = 900
# "auto" uses sparse LU up to this many unknowns, GMRES beyond
DIRECT_MAX = 2500
MAX_CONDITION = 1e12
GMRES_RTOL = 1e-12
# (drop_tol, fill_factor), tried in order
ILU_SETTINGS = ((1e-3, 5), (1e-4, 10), (1e-6, 30))


@dataclass(frozen=True)
class FockSpace:
    dims: Tuple[int, ...]
    mode_labels: Tuple[str, ...] = ()

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if any(d < 2 for d in dims):
            raise InvalidDimensionError(f"every truncation must be >= 2, got {dims}")
        labels = tuple(self.mode_labels) or tuple(f"mode{i}" for i in range(len(dims)))
        if len(labels) != len(dims):
            raise ValidationError("mode_labels and dims differ in length")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "mode_labels", labels)

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.dims))

    @property
    def n_modes(self) -> int:
        return len(self.dims)

    def annihilation(self, i: int) -> sp.csr_matrix:
        return embed_operator(self, i, annihilation_op(self.dims[i]))


def annihilation_op(dim: int) -> np.ndarray:
    if dim < 2:
        raise InvalidDimensionError(f"Fock truncation must be >= 2, got {dim}")
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1).astype(complex)


def embed_operator(space: FockSpace, mode_index: int, local_op) -> sp.csr_matrix:
    if not 0 <= mode_index < space.n_modes:
        raise IndexError(f"mode index {mode_index} outside 0..{space.n_modes - 1}")
    local = sp.csr_matrix(local_op, dtype=complex)
    if local.shape != (space.dims[mode_index],) * 2:
        raise InvalidDimensionError(
            f"operator shape {local.shape} does not match dim {space.dims[mode_index]}"
        )
    out = sp.identity(1, dtype=complex, format="csr")
    for i, d in enumerate(space.dims):
        factor = local if i == mode_index else sp.identity(d, dtype=complex, format="csr")
        out = sp.kron(out, factor, format="csr")
    return out


@dataclass(frozen=True)
class CollapseChannel:
    operator: sp.spmatrix
    rate: float
    label: str = ""

    def __post_init__(self):
        if self.rate < 0:
            raise ValidationError(f"collapse rate must be >= 0, got {self.rate}")


@dataclass
class DensityMatrix:
    space: FockSpace
    data: np.ndarray

    def check(self):
        rho = self.data
        if np.max(np.abs(rho - rho.conj().T)) > HERMITIAN_TOL:
            raise ValidationError("density matrix is not Hermitian")
        if abs(np.trace(rho) - 1) > TRACE_TOL:
            raise ValidationError(f"density matrix trace {np.trace(rho)} != 1")
        low = np.min(np.linalg.eigvalsh(rho))
        if low < -POSITIVITY_TOL:
            raise ValidationError(f"density matrix has eigenvalue {low:.3g} < 0")
        return self


def _as_sparse(op) -> sp.csr_matrix:
    return op.tocsr() if sp.issparse(op) else sp.csr_matrix(np.asarray(op, dtype=complex))


def build_liouvillian(H, channels: Sequence[CollapseChannel]) -> sp.csc_matrix:
    """Superoperator of d rho/dt = -i[H, rho] + sum_c rate_c D[A_c] rho.

    ``H`` and every rate are nu-values in MHz; the result is in rad/us.
    """
    H = _as_sparse(H)
    if H.shape[0] != H.shape[1]:
        raise InvalidDimensionError("Hamiltonian must be square")
    if H.nnz and abs(H - H.conj().T).max() > HERMITIAN_TOL:
        raise NonHermitianError("Hamiltonian is not Hermitian")
    n = H.shape[0]
    eye = sp.identity(n, dtype=complex, format="csr")
    L = -1j * (sp.kron(eye, H) - sp.kron(H.T, eye))
    for ch in channels:
        if ch.rate == 0:
            continue
        A = _as_sparse(ch.operator)
        AdA = (A.conj().T @ A).tocsr()
        L = L + ch.rate * (
            sp.kron(A.conj(), A) - 0.5 * sp.kron(eye, AdA) - 0.5 * sp.kron(AdA.T, eye)
        )
    return (TWO_PI * L).tocsc()


def _trace_row(n: int) -> np.ndarray:
    return np.eye(n, dtype=complex).reshape(-1, order="F")


def _spectral_check(L: sp.spmatrix, scale: float):
    """Reject multi-dimensional kernels and growing modes by full diagonalization."""
    tol = 1e-9 * scale
    ev = np.linalg.eigvals(L.toarray())
    if np.max(ev.real) > 1e-8 * scale:
        worst = ev[np.argmax(ev.real)]
        raise InstabilityError(f"Liouvillian eigenvalue {worst:.4g} grows", eigenvalue=worst)
    n_zero = int(np.sum(np.abs(ev) <= tol))
    if n_zero != 1:
        raise DegenerateSteadyStateError(
            f"Liouvillian kernel has dimension {n_zero} (tolerance {tol:.3g})"
        )


def _condition_check(system: sp.spmatrix, solve, solve_h):
    """One-norm condition estimate of the bordered system from a few solves.

    A second steady state makes the bordered system singular, so a huge
    condition number flags a degenerate kernel without an eigensolve.
    """
    inv = spla.LinearOperator(system.shape, matvec=solve, rmatvec=solve_h, dtype=complex)
    cond = spla.norm(system, 1) * spla.onenormest(inv)
    if not cond < MAX_CONDITION:
        raise DegenerateSteadyStateError(
            f"steady-state system is (nearly) singular, condition ~ {cond:.3g}"
        )
    return cond


def _solve_direct(L, n, check):
    # rho_00's equation is implied by trace preservation; swap it for Tr rho = 1
    system = L.tolil()
    system[0, :] = _trace_row(n)
    system = system.tocsc()
    rhs = np.zeros(n * n, dtype=complex)
    rhs[0] = 1.0
    try:
        lu = spla.splu(system)
    except RuntimeError as exc:
        raise DegenerateSteadyStateError(f"steady-state system is singular: {exc}") from None
    if check:
        _condition_check(system, lu.solve, lambda v: lu.solve(v, trans="H"))
    return lu.solve(rhs)


def _solve_iterative(L, n, check):
    """GMRES on L + w |e_0><Tr| with an ILU preconditioner in RCM order.

    Adding the trace functional to the first row, rather than overwriting
    the row, keeps the matrix close to L and the incomplete factors useful.
    """
    size = n * n
    w = float(np.mean(np.abs(L.diagonal())))
    border = sp.csr_matrix(
        (np.full(n, w, dtype=complex), (np.zeros(n, dtype=int), np.arange(n) * (n + 1))),
        shape=(size, size),
    )
    system = (L + border).tocsr()
    perm = reverse_cuthill_mckee(system, symmetric_mode=False)
    inv_perm = np.empty_like(perm)
    inv_perm[perm] = np.arange(size)
    P = system[perm][:, perm].tocsc()
    rhs = np.zeros(size, dtype=complex)
    rhs[0] = w
    info = None
    for drop_tol, fill in ILU_SETTINGS:
        try:
            ilu = spla.spilu(P, drop_tol=drop_tol, fill_factor=fill, permc_spec="NATURAL")
        except RuntimeError as exc:
            log.info("ILU failed with drop_tol=%g: %s", drop_tol, exc)
            continue

        def solve(b, trans=False, ilu=ilu):
            A = P.conj().T if trans else P
            pre = (lambda v: ilu.solve(v, trans="H")) if trans else ilu.solve
            x, info = spla.gmres(A, b, M=spla.LinearOperator(P.shape, pre, dtype=complex),
                                 rtol=GMRES_RTOL, atol=0.0, restart=50, maxiter=40)
            return x, info

        y, info = solve(rhs[perm])
        if info == 0:
            break
        log.info("GMRES stalled with drop_tol=%g; tightening the preconditioner", drop_tol)
    else:
        raise DegenerateSteadyStateError(
            f"no preconditioned GMRES solve converged (last info={info}); "
            "the steady state is likely not unique"
        )
    if check:
        def fwd(v):
            return solve(np.asarray(v, dtype=complex).ravel()[perm])[0][inv_perm]

        def adj(v):
            return solve(np.asarray(v, dtype=complex).ravel()[perm], trans=True)[0][inv_perm]

        _condition_check(system, fwd, adj)
    return y[inv_perm]


def steady_state_density(
    L: sp.spmatrix,
    space: Optional[FockSpace] = None,
    method: str = "auto",
    check_kernel: bool = True,
) -> DensityMatrix:
    """Null vector of ``L`` normalized to unit trace.

    ``method`` is ``"direct"`` (sparse LU), ``"iterative"`` (preconditioned
    GMRES) or ``"auto"``, which switches to GMRES above ``DIRECT_MAX``
    unknowns. With ``check_kernel`` small generators are diagonalized in
    full; larger ones get a condition estimate of the bordered system.
    """
    L = sp.csc_matrix(L)
    size = L.shape[0]
    n = int(round(np.sqrt(size)))
    if n * n != size:
        raise InvalidDimensionError("superoperator size is not a square number")
    if space is None:
        space = FockSpace((n,))
    elif space.total_dim != n:
        raise InvalidDimensionError("space does not match the superoperator")
    if method == "auto":
        method = "direct" if size <= DIRECT_MAX else "iterative"
    scale = spla.norm(L, 1)
    dense_check = check_kernel and size <= DENSE_CHECK_MAX
    if dense_check:
        _spectral_check(L, scale)
    if method == "direct":
        x = _solve_direct(L, n, check_kernel and not dense_check)
    elif method == "iterative":
        x = _solve_iterative(L, n, check_kernel and not dense_check)
    else:
        raise ValueError(f"unknown method {method!r}")

    rho = x.reshape((n, n), order="F")
    rho = (rho + rho.conj().T) / 2
    rho /= np.trace(rho).real
    residual = np.linalg.norm(L @ rho.reshape(-1, order="F"))
    if residual > 1e-8 * scale:
        raise DegenerateSteadyStateError(
            f"steady-state residual {residual:.3g} exceeds tolerance"
        )
    return DensityMatrix(space, rho).check()


def expectation(rho: DensityMatrix, op) -> complex:
    data = rho.data if isinstance(rho, DensityMatrix) else np.asarray(rho)
    if op.shape != data.shape:
        raise InvalidDimensionError(f"operator shape {op.shape} vs state {data.shape}")
    # Tr(op rho) without forming the product
    if sp.issparse(op):
        return complex(op.multiply(data.T).sum())
    return complex(np.sum(np.asarray(op) * data.T))


def thermal_state(dim: int, n_th: float) -> np.ndarray:
    """Truncated thermal state, renormalized on the kept levels."""
    if n_th == 0:
        p = np.zeros(dim)
        p[0] = 1.0
    else:
        p = (n_th / (n_th + 1)) ** np.arange(dim)
    return np.diag(p / p.sum()).astype(complex)


def fock_problem(model: LinearModel, dims: Sequence[int]):
    """Hamiltonian (nu-units) and collapse channels realizing a LinearModel.

    Each mode decays through damping (n_th + 1) D[a] and damping n_th D[a^dag].
    """
    labels = tuple(m.label for m in model.modes)
    space = FockSpace(tuple(dims), labels)
    a = [space.annihilation(i) for i in range(space.n_modes)]
    ad = [op.conj().T.tocsr() for op in a]
    H = sp.csr_matrix((space.total_dim, space.total_dim), dtype=complex)
    for i, mode in enumerate(model.modes):
        if mode.detuning:
            H = H + mode.detuning * (ad[i] @ a[i])
    for c in model.couplings:
        g = c.strength
        if c.kind is CouplingKind.BEAMSPLITTER:
            term = g * (ad[c.a] @ a[c.b])
        else:
            term = g * (ad[c.a] @ ad[c.b])
        H = H + term + term.conj().T
    for d in model.drives:
        # i (F a^dag - F* a) gives d<a>/dt = F
        H = H + 1j * (d.amplitude * ad[d.mode] - np.conj(d.amplitude) * a[d.mode])
    channels = []
    for i, mode in enumerate(model.modes):
        channels.append(CollapseChannel(a[i], mode.damping * (mode.n_th + 1), f"{mode.label}"))
        if mode.n_th > 0:
            channels.append(CollapseChannel(ad[i], mode.damping * mode.n_th, f"{mode.label}^dag"))
    return space, H.tocsr(), channels


def moments_from_density(rho: DensityMatrix) -> MomentSet:
    space = rho.space
    a = [space.annihilation(i) for i in range(space.n_modes)]
    n = space.n_modes
    first = np.array([expectation(rho, op) for op in a])
    N = np.zeros((n, n), dtype=complex)
    M = np.zeros((n, n), dtype=complex)
    for i in range(n):
        for j in range(n):
            N[i, j] = expectation(rho, a[i].conj().T @ a[j])
            M[i, j] = expectation(rho, a[i] @ a[j])
    return MomentSet(first, N, M, labels=space.mode_labels)


def ordered_moment(rho: DensityMatrix, ops) -> complex:
    """<X_1 ... X_n> with ``ops`` a list of ``(mode, is_creation)``."""
    space = rho.space
    prod = sp.identity(space.total_dim, dtype=complex, format="csr")
    for i, dagger in ops:
        a = space.annihilation(i)
        prod = prod @ (a.conj().T if dagger else a)
    return expectation(rho, prod.tocsr())


def solve_model(model: LinearModel, dims: Sequence[int], method: str = "auto",
                check_kernel: bool = True) -> DensityMatrix:
    space, H, channels = fock_problem(model, dims)
    L = build_liouvillian(H, channels)
    return steady_state_density(L, space, method=method, check_kernel=check_kernel)
