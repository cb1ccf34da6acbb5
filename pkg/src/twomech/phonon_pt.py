"""Parity-time symmetric CW/CCW acoustic modes in a deformed resonator.

Labeling: the pump on a_j scatters into a_k (loss channel for b_l), the
pump on a_-k scatters into a_-j (gain channel for b_-l), and the probe
drives a_-j. Backscattering J couples b_l and b_-l.

The operator vector is (a_k, a_-j^dag, b_l, b_-l). With both pumps on their
resonant choice and the probe detuned by delta from a_-j, the diagonal
detunings are (delta, -delta, delta, delta).
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass
from enum import Enum
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.signal import find_peaks

from .errors import InstabilityError, ValidationError
from .gaussian import (
    STABILITY_MARGIN,
    Coupling,
    CouplingKind,
    DriftMatrix,
    LinearModel,
    Mode,
)
from .units import TWO_PI, drive_rate

log = logging.getLogger(__name__)

FIELDS = ("a_k", "a_-j", "b_l", "b_-l")
PEAK_PROMINENCE = 0.05
ADIABATIC_RATIO = 100.0
CLOSED_FORM_RTOL = 1e-10


@dataclass(frozen=True)
class PTParams:
    omega_ml: float = 42.3
    gamma_m: float = 0.004
    G_l: float = 0.14
    G_ml: float = 0.14
    J: float = 0.016
    kappa1: float = 3.5
    kappa2: float = 3.5
    kappa_in: Optional[float] = None  # defaults to kappa1 / 2

    def __post_init__(self):
        for name in ("omega_ml", "gamma_m", "kappa1", "kappa2"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"{name} must be > 0, got {getattr(self, name)}")
        for name in ("G_l", "G_ml", "J"):
            if getattr(self, name) < 0:
                raise ValidationError(f"{name} must be >= 0, got {getattr(self, name)}")
        if self.kappa_in is not None and not 0 < self.kappa_in <= self.kappa1:
            raise ValidationError(f"kappa_in must lie in (0, kappa1], got {self.kappa_in}")

    @property
    def probe_coupling(self) -> float:
        return self.kappa1 / 2 if self.kappa_in is None else self.kappa_in

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class EffectiveRates:
    gamma_l: float  # optically induced loss on b_l
    gamma_ml: float  # optically induced gain on b_-l (negative)
    omega0: float = 0.0

    def __post_init__(self):
        if self.gamma_l < 0 or self.gamma_ml > 0:
            raise ValidationError("expected gamma_l >= 0 and gamma_ml <= 0")


class Regime(str, Enum):
    UNBROKEN = "unbroken"
    EXCEPTIONAL = "exceptional"
    BROKEN = "broken"


@dataclass(frozen=True)
class SupermodePair:
    omega_plus: complex
    omega_minus: complex
    regime: Regime


def build_pt_drift(p: PTParams, detunings=(0.0, 0.0, 0.0, 0.0)) -> DriftMatrix:
    """Drift matrix over (a_k, a_-j^dag, b_l, b_-l), in rad/us."""
    d_k, d_mj, d_l, d_ml = detunings
    U = np.array(
        [
            [1j * d_k + p.kappa2 / 2, 0, 1j * p.G_l, 0],
            [0, -1j * d_mj + p.kappa1 / 2, 0, -1j * p.G_ml],
            [1j * p.G_l, 0, 1j * d_l + p.gamma_m / 2, 1j * p.J],
            [0, 1j * p.G_ml, 1j * p.J, 1j * d_ml + p.gamma_m / 2],
        ],
        dtype=complex,
    )
    labels = ("a_k", "a_-j^dag", "b_l", "b_-l")
    return DriftMatrix(TWO_PI * U, basis_doubled=False, labels=labels)


def probe_detunings(delta: float):
    return (delta, -delta, delta, delta)


def pt_linear_model(p: PTParams, delta: float = 0.0) -> LinearModel:
    """The same network as a generic LinearModel (modes a_k, a_-j, b_l, b_-l)."""
    modes = (
        Mode("a_k", delta, p.kappa2),
        Mode("a_-j", -delta, p.kappa1, p.probe_coupling),
        Mode("b_l", delta, p.gamma_m),
        Mode("b_-l", delta, p.gamma_m),
    )
    couplings = (
        Coupling(0, 2, CouplingKind.BEAMSPLITTER, p.G_l),
        Coupling(1, 3, CouplingKind.TWO_MODE_SQUEEZE, p.G_ml),
        Coupling(2, 3, CouplingKind.BEAMSPLITTER, p.J),
    )
    return LinearModel(modes, couplings)


def adiabatic_effective_rates(p: PTParams) -> EffectiveRates:
    """Optically induced rates after eliminating the two fast optical modes."""
    ratio = min(p.kappa1, p.kappa2) / p.gamma_m
    if ratio < ADIABATIC_RATIO:
        log.warning("kappa/gamma_m = %.3g; adiabatic elimination is marginal", ratio)
    return EffectiveRates(
        gamma_l=4 * p.G_l**2 / p.kappa2,
        gamma_ml=-4 * p.G_ml**2 / p.kappa1,
    )


def effective_matrix(r: EffectiveRates, gamma_m: float, J: float) -> np.ndarray:
    """2x2 generator M with d(b_l, b_-l)/dt = -M (b_l, b_-l), MHz units."""
    return np.array(
        [
            [1j * r.omega0 + (gamma_m + r.gamma_l) / 2, 1j * J],
            [1j * J, 1j * r.omega0 + (gamma_m + r.gamma_ml) / 2],
        ],
        dtype=complex,
    )


def classify_regime(r: EffectiveRates, J: float, tol: float = 1e-12) -> Regime:
    disc = 16 * J**2 - (r.gamma_ml - r.gamma_l) ** 2
    scale = max(16 * J**2, (r.gamma_ml - r.gamma_l) ** 2, 1e-300)
    if abs(disc) <= tol * scale:
        return Regime.EXCEPTIONAL
    return Regime.UNBROKEN if disc > 0 else Regime.BROKEN


def supermode_eigenfrequencies(r: EffectiveRates, gamma_m: float, J: float) -> SupermodePair:
    """omega_pm = omega0 - i(2 gamma_m + gamma_-l + gamma_l)/4 pm sqrt(16J^2 - (gamma_-l - gamma_l)^2)/4."""
    center = r.omega0 - 0.25j * (2 * gamma_m + r.gamma_ml + r.gamma_l)
    root = 0.25 * np.sqrt(complex(16 * J**2 - (r.gamma_ml - r.gamma_l) ** 2))
    regime = classify_regime(r, J)
    if regime is Regime.EXCEPTIONAL:
        root = 0.0
    return SupermodePair(complex(center + root), complex(center - root), regime)


def pt_threshold(r: EffectiveRates, gamma_m: float, tol: float = 1e-9) -> Tuple[float, Optional[float]]:
    """Threshold backscattering J_PT and, at gain/loss balance, its balanced form.

    The second value is returned only when
    |(gamma_-l + gamma_m) + (gamma_l + gamma_m)| <= tol.
    """
    j_pt = abs(r.gamma_ml - r.gamma_l) / 4
    balanced = None
    if abs((r.gamma_ml + gamma_m) + (r.gamma_l + gamma_m)) <= tol:
        balanced = (r.gamma_l + gamma_m) / 2
    return j_pt, balanced


def balanced_G_l(p: PTParams) -> float:
    """Loss-side coupling that balances gain and loss for the given G_-l."""
    gamma_ml = -4 * p.G_ml**2 / p.kappa1
    gamma_l = -gamma_ml - 2 * p.gamma_m
    if gamma_l < 0:
        raise ValidationError("gain too weak to balance the intrinsic loss")
    return math.sqrt(gamma_l * p.kappa2 / 4)


def require_stable(U: DriftMatrix):
    lam = -np.linalg.eigvals(U.A)
    worst = lam[np.argmax(lam.real)]
    if not worst.real < -STABILITY_MARGIN:
        raise InstabilityError(
            f"growing eigenmode: eigenvalue of -U = {worst / TWO_PI:.6g} x 2pi rad/us",
            eigenvalue=worst,
        )


def closed_form_fields(p: PTParams, delta: float, eps_p: float):
    """Steady-state (a_k, a_-j^dag, b_l, b_-l) from the eliminated equations."""
    d = TWO_PI * delta
    k1, k2 = TWO_PI * p.kappa1 / 2, TWO_PI * p.kappa2 / 2
    g, Gl, Gml, J = TWO_PI * p.gamma_m, TWO_PI * p.G_l, TWO_PI * p.G_ml, TWO_PI * p.J
    source = drive_rate(p.probe_coupling, eps_p)
    F1 = -1j * d - g / 2 + Gml**2 / (1j * d + k1)
    F2 = -1j * d - g / 2 - Gl**2 / (1j * d + k2)
    b_ml = 1j * Gml * source / (1j * d + k1) / (F1 + J**2 / F2)
    b_l = 1j * J * b_ml / F2
    a_mj_dag = (1j * Gml * b_ml + source) / (1j * d + k1)
    a_k = -1j * Gl * b_l / (1j * d + k2)
    return complex(a_k), complex(a_mj_dag), complex(b_l), complex(b_ml)


def linear_solve_fields(p: PTParams, delta: float, eps_p: float):
    U = build_pt_drift(p, probe_detunings(delta))
    rhs = np.array([0, drive_rate(p.probe_coupling, eps_p), 0, 0], dtype=complex)
    return tuple(complex(x) for x in np.linalg.solve(U.A, rhs))


def pt_steady_fields(p: PTParams, delta: float, eps_p: float, check: bool = True):
    """Closed-form steady fields, cross-checked against the direct 4x4 solve."""
    require_stable(build_pt_drift(p, probe_detunings(delta)))
    fields = closed_form_fields(p, delta, eps_p)
    if check:
        direct = np.array(linear_solve_fields(p, delta, eps_p))
        got = np.array(fields)
        scale = np.max(np.abs(direct))
        if scale > 0 and np.max(np.abs(got - direct)) > CLOSED_FORM_RTOL * scale:
            raise ArithmeticError(
                f"closed form and linear solve disagree at delta={delta}: {got} vs {direct}"
            )
    return fields


def adiabatic_fields(p: PTParams, delta: float, eps_p: float):
    """Fields from the 2x2 phonon model with optical responses frozen at delta=0."""
    r = adiabatic_effective_rates(p)
    M = TWO_PI * effective_matrix(EffectiveRates(r.gamma_l, r.gamma_ml, delta), p.gamma_m, p.J)
    k1, k2 = TWO_PI * p.kappa1 / 2, TWO_PI * p.kappa2 / 2
    Gl, Gml = TWO_PI * p.G_l, TWO_PI * p.G_ml
    source = drive_rate(p.probe_coupling, eps_p)
    rhs = np.array([0.0, -1j * Gml * source / k1])
    b_l, b_ml = np.linalg.solve(M, rhs)
    a_mj_dag = (1j * Gml * b_ml + source) / k1
    a_k = -1j * Gl * b_l / k2
    return complex(a_k), complex(a_mj_dag), complex(b_l), complex(b_ml)


def count_peaks(y, prominence: float = PEAK_PROMINENCE) -> int:
    y = np.asarray(y, dtype=float)
    if y.size < 3 or np.max(y) <= 0:
        return 0
    peaks, _ = find_peaks(y, prominence=prominence * np.max(y))
    return int(len(peaks))


def peak_positions(x, y, prominence: float = PEAK_PROMINENCE) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    peaks, _ = find_peaks(y, prominence=prominence * np.max(y))
    return np.asarray(x)[peaks]


@dataclass
class PTSpectrum:
    delta: np.ndarray
    intensities: dict  # field label -> |field|^2 over delta
    peak_counts: dict
    extended: bool = False


def required_span(p: PTParams) -> float:
    """Half-width of a delta window that holds both supermode resonances."""
    r = adiabatic_effective_rates(p)
    pair = supermode_eigenfrequencies(r, p.gamma_m, p.J)
    half_split = abs(pair.omega_plus.real - pair.omega_minus.real) / 2
    width = max(abs(pair.omega_plus.imag), abs(pair.omega_minus.imag))
    return half_split + 10 * width


def default_delta_grid(p: PTParams, n: int = 2001) -> np.ndarray:
    half = required_span(p)
    return np.linspace(-half, half, n)


def _extend_grid(grid: np.ndarray, half: float) -> np.ndarray:
    step = np.min(np.diff(grid)) if grid.size > 1 else half / 500
    lo = np.arange(grid[0] - step, -half - step, -step)[::-1]
    hi = np.arange(grid[-1] + step, half + step, step)
    return np.concatenate([lo, grid, hi])


def pt_spectrum(
    p: PTParams,
    delta_grid: Optional[Sequence[float]] = None,
    eps_p: float = 1.0,
    adiabatic: bool = False,
    extend: bool = True,
) -> PTSpectrum:
    """|field|^2 of all four modes over the probe detuning, with peak counts."""
    r = adiabatic_effective_rates(p)
    pair = supermode_eigenfrequencies(r, p.gamma_m, p.J)
    if max(pair.omega_plus.imag, pair.omega_minus.imag) > 0:
        raise InstabilityError(
            f"supermode with Im(omega - omega0) > 0: {pair.omega_plus}, {pair.omega_minus}"
        )
    grid = default_delta_grid(p) if delta_grid is None else np.sort(np.asarray(delta_grid, float))
    extended = False
    if extend and grid.size:
        half = required_span(p)
        if grid[0] > -half or grid[-1] < half:
            grid = _extend_grid(grid, half)
            extended = True
    solver = adiabatic_fields if adiabatic else pt_steady_fields
    rows = np.array([solver(p, d, eps_p) for d in grid]).reshape(-1, 4)
    intensities = {name: np.abs(rows[:, i]) ** 2 for i, name in enumerate(FIELDS)}
    counts = {name: count_peaks(v) for name, v in intensities.items()}
    return PTSpectrum(grid, intensities, counts, extended)
