"""CW/CCW photon-pair generation through a breathing mechanical mode.

The CW mode a_k is pumped on the red sideband (beamsplitter coupling G_k to
b_0), the CCW mode a_-k on the blue sideband (two-mode squeezing G_-k), and a
weak signal of detuning delta_k drives a_k.

Frame: in the pump frames the signal oscillates at omega_m + delta_k.
Rotating further with (a_k^dag a_k - a_-k^dag a_-k + b^dag b) at that
frequency leaves both couplings invariant and makes every term static, with
Hamiltonian detunings -delta_k on a_k and b_0 and +delta_k on a_-k.

Mode order is fixed: 0 = a_k, 1 = b_0, 2 = a_-k.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, replace
from typing import Optional, Sequence

import numpy as np

from . import gaussian, hilbert
from .errors import InstabilityError, TwomechError, UndefinedWitnessError, ValidationError
from .gaussian import Coupling, CouplingKind, Drive, LinearModel, Mode, MomentSet
from .units import TWO_PI, drive_rate

log = logging.getLogger(__name__)

A_K, B_0, A_MK = 0, 1, 2
MODE_LABELS = ("a_k", "b_0", "a_-k")
WITNESS_FLOOR = 1e-12
# optical mode 4 keeps two-photon moments converged well below 1e-3
DEFAULT_DIMS = (4, 5, 4)


@dataclass(frozen=True)
class PairgenParams:
    kappa: float = 15.0
    kappa_in: float = 7.5
    gamma_m: float = 0.022
    n_th: float = 0.0
    G_k: float = 0.3
    G_mk: float = 0.1
    eps_s: float = 0.1
    delta_k: float = 0.0

    def __post_init__(self):
        for name in ("kappa", "kappa_in", "gamma_m"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"{name} must be > 0, got {getattr(self, name)}")
        if self.kappa_in > self.kappa:
            raise ValidationError(f"kappa_in={self.kappa_in} exceeds kappa={self.kappa}")
        if self.n_th < 0:
            raise ValidationError(f"n_th must be >= 0, got {self.n_th}")
        if self.G_k < 0 or self.G_mk < 0:
            raise ValidationError("coupling strengths must be >= 0")
        # keep the blue-detuned pump below threshold for every G_k
        if not self.G_mk**2 < self.kappa * self.gamma_m / 4:
            raise ValidationError(
                f"G_mk^2 = {self.G_mk**2:.4g} must stay below kappa*gamma_m/4 = "
                f"{self.kappa * self.gamma_m / 4:.4g}"
            )

    def to_dict(self) -> dict:
        return asdict(self)


def pairgen_model(kappa, kappa_in, gamma_m, n_th, G_k, G_mk, eps_s, delta_k) -> LinearModel:
    """Three-mode linear model without the parameter-set checks.

    Used directly when scanning into the unstable region.
    """
    modes = (
        Mode("a_k", -delta_k, kappa, kappa_in, 0.0),
        Mode("b_0", -delta_k, gamma_m, 0.0, n_th),
        Mode("a_-k", delta_k, kappa, 0.0, 0.0),
    )
    couplings = (
        Coupling(A_K, B_0, CouplingKind.BEAMSPLITTER, G_k),
        Coupling(A_MK, B_0, CouplingKind.TWO_MODE_SQUEEZE, G_mk),
    )
    drives = (Drive(A_K, drive_rate(kappa_in, eps_s) / TWO_PI),)
    return LinearModel(modes, couplings, drives)


def build_pairgen_model(p: PairgenParams) -> LinearModel:
    return pairgen_model(**asdict(p))


def _fourth_moments_gaussian(m: MomentSet, k: int, mk: int):
    num_k = gaussian.gaussian_fourth_moment(m, [(k, True), (k, True), (k, False), (k, False)])
    num_mk = gaussian.gaussian_fourth_moment(m, [(mk, True), (mk, True), (mk, False), (mk, False)])
    den = gaussian.gaussian_fourth_moment(m, [(k, True), (k, False), (mk, True), (mk, False)])
    return num_k.real, num_mk.real, den.real


def _fourth_moments_fock(rho: hilbert.DensityMatrix, k: int, mk: int):
    num_k = hilbert.ordered_moment(rho, [(k, True), (k, True), (k, False), (k, False)])
    num_mk = hilbert.ordered_moment(rho, [(mk, True), (mk, True), (mk, False), (mk, False)])
    den = hilbert.ordered_moment(rho, [(k, True), (k, False), (mk, True), (mk, False)])
    return num_k.real, num_mk.real, den.real


def witness_moments(state, mode_k: int = A_K, mode_mk: int = A_MK):
    """(<a_k^dag2 a_k^2>, <a_-k^dag2 a_-k^2>, <n_k n_-k>) for either engine."""
    if isinstance(state, MomentSet):
        return _fourth_moments_gaussian(state, mode_k, mode_mk)
    if isinstance(state, hilbert.DensityMatrix):
        return _fourth_moments_fock(state, mode_k, mode_mk)
    raise TypeError(f"expected MomentSet or DensityMatrix, got {type(state).__name__}")


def nonclassicality_I(state, mode_k: int = A_K, mode_mk: int = A_MK) -> float:
    """Two-mode moment witness; 0 for coherent products, negative if nonclassical.

    I = sqrt(<a_k^dag2 a_k^2> <a_-k^dag2 a_-k^2>) / <n_k n_-k> - 1
    """
    num_k, num_mk, den = witness_moments(state, mode_k, mode_mk)
    if not den > WITNESS_FLOOR:
        raise UndefinedWitnessError(
            f"<n_k n_-k> = {den:.3g} is below {WITNESS_FLOOR:g}; witness undefined"
        )
    value = float(np.sqrt(max(num_k, 0.0) * max(num_mk, 0.0)) / den - 1.0)
    # Cauchy-Schwarz lower bound, allowing for rounding
    assert value >= -1.0 - 1e-9, f"witness {value} below its lower bound"
    return value


@dataclass
class FockResult:
    rho: hilbert.DensityMatrix
    dims: tuple
    converged: bool
    change: float  # relative moment change at the last escalation step


def moment_vector(m: MomentSet) -> np.ndarray:
    """First moments, then the upper triangles of N and M, as one flat vector."""
    n = m.n_modes
    iu = np.triu_indices(n)
    return np.concatenate([m.first, m.N[iu], m.M[iu]])


def relative_change(a: np.ndarray, b: np.ndarray) -> float:
    """max_i |a_i - b_i| / |b_i| over entries that are not numerically zero."""
    scale = np.max(np.abs(b))
    mask = np.abs(b) > 1e-9 * scale
    return float(np.max(np.abs(a[mask] - b[mask]) / np.abs(b[mask])))


def fock_steady_state(
    p: PairgenParams,
    dims: Sequence[int] = DEFAULT_DIMS,
    tol: float = 1e-3,
    max_dim: int = 14,
    escalate: str = "mechanical",
    method: str = "auto",
) -> FockResult:
    """Fock-space steady state with automatic truncation escalation.

    Each step raises the truncation by one (only the phonon mode with
    ``escalate="mechanical"``, every mode with ``"all"``) until no first or
    second moment moves by more than ``tol`` relative. ``converged`` is
    False when ``max_dim`` is reached first.
    """
    if escalate not in ("mechanical", "all", "none"):
        raise ValueError(f"unknown escalation {escalate!r}")
    model = build_pairgen_model(p)
    dims = tuple(dims)
    rho = hilbert.solve_model(model, dims, method=method)
    if escalate == "none":
        return FockResult(rho, dims, True, float("nan"))
    prev = moment_vector(hilbert.moments_from_density(rho))
    change = float("inf")
    while max(dims) < max_dim:
        if escalate == "all":
            nxt = tuple(d + 1 for d in dims)
        else:
            nxt = tuple(d + 1 if i == B_0 else d for i, d in enumerate(dims))
        rho_next = hilbert.solve_model(model, nxt, method=method)
        cur = moment_vector(hilbert.moments_from_density(rho_next))
        change = relative_change(prev, cur)
        rho, dims, prev = rho_next, nxt, cur
        if change <= tol:
            return FockResult(rho, dims, True, change)
    log.warning("Fock truncation not converged at dims %s (change %.3g)", dims, change)
    return FockResult(rho, dims, False, change)


def pairgen_I(p: PairgenParams, engine: str = "gaussian", **fock_kw) -> float:
    if engine == "gaussian":
        return nonclassicality_I(gaussian.steady_moments(build_pairgen_model(p)))
    if engine == "fock":
        return nonclassicality_I(fock_steady_state(p, **fock_kw).rho)
    raise ValueError(f"unknown engine {engine!r}")


@dataclass
class SweepPoint:
    value: float
    I: float
    error: Optional[str] = None
    fock_I: Optional[float] = None


SWEEP_AXES = ("delta_k", "G_k", "n_th", "G_mk", "eps_s")


def sweep_nonclassicality(
    p: PairgenParams,
    axis: str,
    grid: Sequence[float],
    engine: str = "gaussian",
    fock_checks: int = 0,
    fock_kw: Optional[dict] = None,
) -> list:
    """Witness along one parameter axis.

    Points that fail validation, violate the closed-form stability condition
    or hit a solver error are kept with ``I = nan`` and an error string.
    ``fock_checks`` evenly spaced points are additionally evaluated with the
    Fock engine when the main engine is Gaussian.
    """
    if axis not in SWEEP_AXES:
        raise ValidationError(f"sweep axis must be one of {SWEEP_AXES}, got {axis!r}")
    fock_kw = fock_kw or {}
    grid = list(grid)
    check_at = set()
    if fock_checks and engine == "gaussian" and grid:
        check_at = set(np.linspace(0, len(grid) - 1, min(fock_checks, len(grid))).round().astype(int))
    points = []
    for idx, value in enumerate(grid):
        try:
            q = replace(p, **{axis: float(value)})
            if not gaussian.routh_hurwitz_pairgen(q.G_k, q.G_mk, q.kappa, q.gamma_m):
                raise InstabilityError("closed-form stability condition violated")
            if engine == "fock":
                point = SweepPoint(float(value), pairgen_I(q, "fock", **fock_kw))
            else:
                point = SweepPoint(float(value), pairgen_I(q, "gaussian"))
            if idx in check_at:
                point.fock_I = pairgen_I(q, "fock", **fock_kw)
        except TwomechError as exc:
            point = SweepPoint(float(value), float("nan"), f"{type(exc).__name__}: {exc}")
        points.append(point)
    return points
