"""Phase-controlled CW <-> CCW conversion through two breathing modes.

Port order is (a_k, a_-k, b_1, b_2). All couplings are beamsplitter-type
and real except G_k2 = |G_k2| exp(i theta); |G| follows from the
cooperativity C = 4|G|^2 / (kappa gamma).
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import SingularityError, ValidationError
from .gaussian import Coupling, CouplingKind, DriftMatrix, LinearModel, Mode, build_drift
from .units import TWO_PI

log = logging.getLogger(__name__)

PORTS = ("a_k", "a_-k", "b_1", "b_2")
K, MK = 0, 1
RATIO_FLOOR = 1e-300


@dataclass(frozen=True)
class ConversionParams:
    kappa: float = 15.0
    gamma_m1: float = 0.022
    gamma_m2: float = 0.0022
    C_k1: float = 1.0
    C_mk1: float = 1.0
    C_k2: float = 2.5
    C_mk2: float = 2.5
    theta: float = 0.0
    # None reproduces the scalar-kappa input-output relation
    kappa_in: Optional[float] = None

    def __post_init__(self):
        for name in ("kappa", "gamma_m1", "gamma_m2"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"{name} must be > 0, got {getattr(self, name)}")
        for name in ("C_k1", "C_mk1", "C_k2", "C_mk2"):
            if getattr(self, name) < 0:
                raise ValidationError(f"{name} must be >= 0, got {getattr(self, name)}")
        if not math.isfinite(self.theta):
            raise ValidationError("theta must be finite")
        if self.kappa_in is not None and not 0 < self.kappa_in <= self.kappa:
            raise ValidationError(f"kappa_in must lie in (0, kappa], got {self.kappa_in}")

    @property
    def theta_wrapped(self) -> float:
        return self.theta % (2 * math.pi)

    @property
    def input_coupling(self) -> float:
        return self.kappa if self.kappa_in is None else self.kappa_in

    def to_dict(self) -> dict:
        return asdict(self)


def coupling_from_cooperativity(C: float, kappa: float, gamma: float) -> float:
    return math.sqrt(C * kappa * gamma / 4)


def couplings(p: ConversionParams):
    """(G_k1, G_-k1, G_k2, G_-k2) in MHz."""
    G_k1 = coupling_from_cooperativity(p.C_k1, p.kappa, p.gamma_m1)
    G_mk1 = coupling_from_cooperativity(p.C_mk1, p.kappa, p.gamma_m1)
    G_k2 = coupling_from_cooperativity(p.C_k2, p.kappa, p.gamma_m2) * np.exp(1j * p.theta)
    G_mk2 = coupling_from_cooperativity(p.C_mk2, p.kappa, p.gamma_m2)
    return complex(G_k1), complex(G_mk1), complex(G_k2), complex(G_mk2)


def conversion_model(p: ConversionParams, phases=None) -> LinearModel:
    """Four-mode beamsplitter network. ``phases`` overrides all four coupling
    phases (G_k1, G_-k1, G_k2, G_-k2) for studies beyond the single-phase case."""
    G = list(couplings(p))
    if phases is not None:
        G = [abs(g) * np.exp(1j * ph) for g, ph in zip(G, phases)]
    kin = p.input_coupling
    modes = (
        Mode("a_k", 0.0, p.kappa, kin),
        Mode("a_-k", 0.0, p.kappa, kin),
        Mode("b_1", 0.0, p.gamma_m1),
        Mode("b_2", 0.0, p.gamma_m2),
    )
    bs = CouplingKind.BEAMSPLITTER
    links = (
        Coupling(0, 2, bs, G[0]),
        Coupling(1, 2, bs, G[1]),
        Coupling(0, 3, bs, G[2]),
        Coupling(1, 3, bs, G[3]),
    )
    return LinearModel(modes, links)


def build_conversion_drift(p: ConversionParams, phases=None) -> DriftMatrix:
    return build_drift(conversion_model(p, phases))


@dataclass(frozen=True)
class ScatteringMatrix:
    omega: float
    R: np.ndarray
    port_labels: tuple = PORTS

    def efficiency(self, out_port: int, in_port: int) -> float:
        return float(abs(self.R[out_port, in_port]) ** 2)


def _resolvent(U: np.ndarray, omega: float) -> np.ndarray:
    w = TWO_PI * omega
    M = U - 1j * w * np.eye(U.shape[0])
    try:
        inv = np.linalg.inv(M)
    except np.linalg.LinAlgError as exc:
        raise SingularityError(f"U - i omega I is singular at omega = {omega} MHz", omega) from exc
    if np.linalg.cond(M) > 1e14:
        raise SingularityError(f"U - i omega I is numerically singular at omega = {omega} MHz", omega)
    return inv


def scattering_matrix(U, kappa: float, omega: float) -> ScatteringMatrix:
    """R = kappa (U - i omega I)^-1 - I with one scalar kappa for every port.

    ``kappa`` and ``omega`` are in MHz; ``U`` is a DriftMatrix or an
    angular-unit array.
    """
    A = U.A if isinstance(U, DriftMatrix) else np.asarray(U, dtype=complex)
    R = TWO_PI * kappa * _resolvent(A, omega) - np.eye(A.shape[0])
    return ScatteringMatrix(float(omega), R)


def scattering_matrix_ports(U, kappa_ext: Sequence[float], omega: float) -> ScatteringMatrix:
    """R = sqrt(K) (U - i omega I)^-1 sqrt(K) - I with per-port external rates.

    Ports with zero external coupling simply reflect (R_ii = -1).
    """
    A = U.A if isinstance(U, DriftMatrix) else np.asarray(U, dtype=complex)
    root = np.diag(np.sqrt(TWO_PI * np.asarray(kappa_ext, dtype=float)))
    R = root @ _resolvent(A, omega) @ root - np.eye(A.shape[0])
    return ScatteringMatrix(float(omega), R)


def conversion_efficiencies(p: ConversionParams, omega: float):
    """(|R_{k,-k}|^2, |R_{-k,k}|^2) at signal detuning ``omega`` (MHz).

    The first entry converts CCW input into CW output, the second CW into CCW.
    """
    S = scattering_matrix(build_conversion_drift(p), p.input_coupling, omega)
    return S.efficiency(K, MK), S.efficiency(MK, K)


def nonreciprocity_ratio(p: ConversionParams, omega: float) -> float:
    """eta = |R_{k,-k}|^2 / |R_{-k,k}|^2; +inf when the backward path vanishes."""
    forward, backward = conversion_efficiencies(p, omega)
    if backward <= RATIO_FLOOR:
        log.warning("backward efficiency %.3g underflows; reporting eta = inf", backward)
        return math.inf
    return forward / backward


def efficiency_spectrum(p: ConversionParams, omegas: Sequence[float]):
    """Arrays (forward, backward) over a signal-frequency grid."""
    U = build_conversion_drift(p)
    fwd, bwd = [], []
    for w in omegas:
        S = scattering_matrix(U, p.input_coupling, w)
        fwd.append(S.efficiency(K, MK))
        bwd.append(S.efficiency(MK, K))
    return np.array(fwd), np.array(bwd)
