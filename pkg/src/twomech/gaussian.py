"""Exact Gaussian-state dynamics of linearized bosonic networks.

Operator vector convention: ``dO/dt = -U O + F + noise``. Without
two-mode-squeezing terms ``O = (a_1 .. a_N)``; otherwise the doubled vector
``O = (a_1 .. a_N, a_1^dag .. a_N^dag)`` is used. Matrices returned here are
in angular units (rad/us); everything passed in is a nu-value in MHz.

Centered second moments ``V = <dO dO^dag>`` solve ``U V + V U^dag = D`` with
``D = diag(damping (n_th + 1))`` on annihilation rows and
``diag(damping n_th)`` on creation rows.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import solve_continuous_lyapunov

from .errors import InstabilityError, SingularityError, ValidationError
from .units import TWO_PI

STABILITY_MARGIN = 1e-12


class CouplingKind(str, Enum):
    BEAMSPLITTER = "beamsplitter"  # G a^dag b + G* a b^dag
    TWO_MODE_SQUEEZE = "two_mode_squeeze"  # G a^dag b^dag + G* a b


@dataclass(frozen=True)
class Mode:
    label: str
    detuning: float = 0.0
    damping: float = 1.0
    external_coupling: float = 0.0
    n_th: float = 0.0


@dataclass(frozen=True)
class Coupling:
    a: int
    b: int
    kind: CouplingKind
    strength: complex


@dataclass(frozen=True)
class Drive:
    mode: int
    amplitude: complex  # nu-units: d<a>/dt contribution divided by 2pi


@dataclass(frozen=True)
class LinearModel:
    modes: Tuple[Mode, ...]
    couplings: Tuple[Coupling, ...] = ()
    drives: Tuple[Drive, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "modes", tuple(self.modes))
        object.__setattr__(
            self,
            "couplings",
            tuple(
                Coupling(c.a, c.b, CouplingKind(c.kind), complex(c.strength))
                for c in self.couplings
            ),
        )
        object.__setattr__(self, "drives", tuple(self.drives))
        n = len(self.modes)
        for mode in self.modes:
            if mode.damping < 0 or mode.n_th < 0 or mode.external_coupling < 0:
                raise ValidationError(f"mode {mode.label!r}: negative rate or n_th")
            if mode.external_coupling > mode.damping:
                raise ValidationError(
                    f"mode {mode.label!r}: external_coupling {mode.external_coupling}"
                    f" exceeds damping {mode.damping}"
                )
        for c in self.couplings:
            if not (0 <= c.a < n and 0 <= c.b < n):
                raise ValidationError(f"coupling {c} refers to a missing mode")
            if c.a == c.b:
                raise ValidationError(f"self-coupling on mode {c.a} is not allowed")
        for d in self.drives:
            if not 0 <= d.mode < n:
                raise ValidationError(f"drive {d} refers to a missing mode")

    @property
    def n_modes(self) -> int:
        return len(self.modes)

    @property
    def has_squeezing(self) -> bool:
        return any(c.kind is CouplingKind.TWO_MODE_SQUEEZE for c in self.couplings)

    def index(self, label: str) -> int:
        for i, mode in enumerate(self.modes):
            if mode.label == label:
                return i
        raise KeyError(label)


@dataclass(frozen=True)
class DriftMatrix:
    A: np.ndarray
    basis_doubled: bool
    labels: Tuple[str, ...] = ()

    @property
    def n_modes(self) -> int:
        return self.A.shape[0] // 2 if self.basis_doubled else self.A.shape[0]

    @property
    def nu(self) -> np.ndarray:
        """The matrix divided by 2pi, i.e. in the MHz units it was specified in."""
        return self.A / TWO_PI


def _as_matrix(A) -> np.ndarray:
    return A.A if isinstance(A, DriftMatrix) else np.asarray(A, dtype=complex)


def build_drift(model: LinearModel, doubled: Optional[bool] = None) -> DriftMatrix:
    n = model.n_modes
    doubled = model.has_squeezing if doubled is None else doubled
    if model.has_squeezing and not doubled:
        raise ValidationError("squeezing couplings require the doubled basis")
    size = 2 * n if doubled else n
    A = np.zeros((size, size), dtype=complex)
    for i, mode in enumerate(model.modes):
        A[i, i] = 1j * mode.detuning + mode.damping / 2
        if doubled:
            A[n + i, n + i] = np.conj(A[i, i])
    for c in model.couplings:
        g = c.strength
        if c.kind is CouplingKind.BEAMSPLITTER:
            A[c.a, c.b] += 1j * g
            A[c.b, c.a] += 1j * np.conj(g)
            if doubled:
                A[n + c.a, n + c.b] += -1j * np.conj(g)
                A[n + c.b, n + c.a] += -1j * g
        else:
            A[c.a, n + c.b] += 1j * g
            A[c.b, n + c.a] += 1j * g
            A[n + c.a, c.b] += -1j * np.conj(g)
            A[n + c.b, c.a] += -1j * np.conj(g)
    labels = tuple(m.label for m in model.modes)
    if doubled:
        labels = labels + tuple(f"{m.label}^dag" for m in model.modes)
    return DriftMatrix(TWO_PI * A, doubled, labels)


def drive_vector(model: LinearModel, doubled: Optional[bool] = None) -> np.ndarray:
    n = model.n_modes
    doubled = model.has_squeezing if doubled is None else doubled
    F = np.zeros(2 * n if doubled else n, dtype=complex)
    for d in model.drives:
        F[d.mode] += TWO_PI * d.amplitude
    if doubled:
        F[n:] = np.conj(F[:n])
    return F


def noise_inputs(model: LinearModel):
    return [(m.damping, m.n_th) for m in model.modes]


def diffusion_matrix(noise, doubled: bool) -> np.ndarray:
    damping = np.array([d for d, _ in noise], dtype=float)
    n_th = np.array([n for _, n in noise], dtype=float)
    upper = damping * (n_th + 1)
    diag = np.concatenate([upper, damping * n_th]) if doubled else upper
    return np.diag(TWO_PI * diag).astype(complex)


def max_growth_rate(A) -> float:
    """Largest real part among the eigenvalues of -A."""
    return float(np.max(np.real(-np.linalg.eigvals(_as_matrix(A)))))


def stability_check(A) -> bool:
    return max_growth_rate(A) < -STABILITY_MARGIN


def _require_stable(A):
    lam = -np.linalg.eigvals(_as_matrix(A))
    worst = lam[np.argmax(lam.real)]
    if not worst.real < -STABILITY_MARGIN:
        raise InstabilityError(
            f"drift matrix has a non-decaying eigenmode, eigenvalue of -U = {worst:.6g}",
            eigenvalue=worst,
        )


def routh_hurwitz_pairgen(G_k: float, G_mk: float, kappa: float, gamma: float) -> bool:
    """Closed-form stability of the two-drive, three-mode pair generator."""
    if not (kappa > 0 and gamma > 0):
        raise ValidationError("kappa and gamma must be positive")
    return G_k**2 - G_mk**2 > -kappa * gamma / 4


def first_moments_steady(A, drive) -> np.ndarray:
    M = _as_matrix(A)
    _require_stable(M)
    try:
        return np.linalg.solve(M, np.asarray(drive, dtype=complex))
    except np.linalg.LinAlgError as exc:
        raise SingularityError("drift matrix is singular at omega = 0", omega=0.0) from exc


@dataclass
class MomentSet:
    """First and (non-centered) second moments of a set of bosonic modes.

    ``N[i, j] = <a_i^dag a_j>`` and ``M[i, j] = <a_i a_j>``.
    """

    first: np.ndarray
    N: np.ndarray
    M: np.ndarray
    labels: Tuple[str, ...] = field(default=())

    @property
    def n_modes(self) -> int:
        return len(self.first)

    def occupation(self, i: int) -> float:
        return float(self.N[i, i].real)

    def centered_N(self) -> np.ndarray:
        return self.N - np.outer(np.conj(self.first), self.first)

    def centered_M(self) -> np.ndarray:
        return self.M - np.outer(self.first, self.first)

    def mean(self, op) -> complex:
        i, dagger = op
        return np.conj(self.first[i]) if dagger else self.first[i]

    def contraction(self, left, right) -> complex:
        """Centered ordered pair <d(left) d(right)>."""
        (i, di), (j, dj) = left, right
        if not di and not dj:
            return self.centered_M()[i, j]
        if di and dj:
            return np.conj(self.centered_M()[i, j])
        if di and not dj:
            return self.centered_N()[i, j]
        return self.centered_N()[j, i] + (1.0 if i == j else 0.0)


def second_moments_steady(A, noise, first=None) -> MomentSet:
    """Steady-state moments from the Lyapunov equation.

    ``noise`` lists ``(damping, n_th)`` per mode in MHz. ``first`` is the
    mean vector in the same basis as ``A`` (zero when omitted).
    """
    dm = A if isinstance(A, DriftMatrix) else None
    M_ = _as_matrix(A)
    _require_stable(M_)
    n = len(noise)
    doubled = M_.shape[0] == 2 * n
    if not doubled and M_.shape[0] != n:
        raise ValidationError("noise list does not match the drift matrix size")
    D = diffusion_matrix(noise, doubled)
    V = solve_continuous_lyapunov(M_, D)
    mean = np.zeros(n, dtype=complex) if first is None else np.asarray(first)[:n]
    if doubled:
        Nc = V[n:, n:]
        Mc = V[:n, n:]
    else:
        Nc = V.T - np.eye(n)
        Mc = np.zeros((n, n), dtype=complex)
    Nc = (Nc + Nc.conj().T) / 2
    Mc = (Mc + Mc.T) / 2
    labels = dm.labels[:n] if dm is not None else ()
    return MomentSet(
        first=mean.copy(),
        N=Nc + np.outer(np.conj(mean), mean),
        M=Mc + np.outer(mean, mean),
        labels=labels,
    )


def lyapunov_residual(A, noise) -> float:
    """Relative residual ||U V + V U^dag - D|| / ||D|| of the centered solve."""
    M_ = _as_matrix(A)
    n = len(noise)
    D = diffusion_matrix(noise, M_.shape[0] == 2 * n)
    V = solve_continuous_lyapunov(M_, D)
    return float(np.linalg.norm(M_ @ V + V @ M_.conj().T - D) / np.linalg.norm(D))


def steady_moments(model: LinearModel) -> MomentSet:
    drift = build_drift(model)
    mean = first_moments_steady(drift, drive_vector(model))
    return second_moments_steady(drift, noise_inputs(model), first=mean)


def gaussian_fourth_moment(m: MomentSet, ops: Sequence) -> complex:
    """Ordered moment <X_1 X_2 ... X_n> of a Gaussian state.

    ``ops`` is a list of ``(mode, is_creation)``. All cumulants beyond second
    order vanish, so the moment expands over every way of splitting the
    product into means and ordered centered pairs. The name reflects the
    main use (fourth order); any length works.
    """
    ops = [(int(i), bool(d)) for i, d in ops]

    def expand(seq):
        if not seq:
            return 1.0 + 0j
        head, rest = seq[0], seq[1:]
        total = m.mean(head) * expand(rest)
        for t in range(len(rest)):
            total += m.contraction(head, rest[t]) * expand(rest[:t] + rest[t + 1 :])
        return total

    return complex(expand(ops))
