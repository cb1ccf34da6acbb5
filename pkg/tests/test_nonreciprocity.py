from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from twomech import nonreciprocity as nr
from twomech.errors import SingularityError, ValidationError
from twomech.nonreciprocity import ConversionParams
from twomech.units import TWO_PI

angles = st.floats(-2 * math.pi, 2 * math.pi)
omegas = st.floats(-0.05, 0.05)


def test_coupling_magnitudes():
    G_k1, G_mk1, G_k2, G_mk2 = nr.couplings(ConversionParams())
    assert abs(G_k1) == pytest.approx(math.sqrt(15 * 0.022 / 4), rel=1e-12)
    assert abs(G_k1) == pytest.approx(0.2872, abs=5e-5)
    assert abs(G_k2) == pytest.approx(0.1436, abs=5e-5)
    assert G_mk1 == G_k1


@pytest.mark.parametrize("theta", [0.0, 0.3, 3 * math.pi / 4])
def test_drift_matches_printed_matrix(theta):
    p = ConversionParams(theta=theta)
    G_k1, G_mk1, G_k2, G_mk2 = nr.couplings(p)
    k, g1, g2 = p.kappa, p.gamma_m1, p.gamma_m2
    expected = np.array(
        [
            [k / 2, 0, 1j * G_k1, 1j * G_k2],
            [0, k / 2, 1j * G_mk1, 1j * G_mk2],
            [1j * np.conj(G_k1), 1j * np.conj(G_mk1), g1 / 2, 0],
            [1j * np.conj(G_k2), 1j * np.conj(G_mk2), 0, g2 / 2],
        ]
    )
    U = nr.build_conversion_drift(p)
    assert np.allclose(U.nu, expected, atol=1e-15)
    assert np.allclose(U.A, TWO_PI * expected)


def test_zero_phase_drift_is_symmetric():
    U = nr.build_conversion_drift(ConversionParams()).A
    assert np.allclose(U, U.T)


def test_zero_cooperativity_is_diagonal():
    p = ConversionParams(C_k1=0, C_mk1=0, C_k2=0, C_mk2=0)
    U = nr.build_conversion_drift(p).A
    assert np.count_nonzero(U - np.diag(np.diag(U))) == 0
    R = nr.scattering_matrix(U, p.kappa, 0.003).R
    assert np.count_nonzero(R - np.diag(np.diag(R))) == 0


def test_decoupled_cavity_reflection():
    kappa = 15.0
    U = np.array([[TWO_PI * kappa / 2]])
    assert nr.scattering_matrix(U, kappa, 0.0).R[0, 0] == pytest.approx(1.0)


def test_far_detuned_limit():
    p = ConversionParams(theta=1.0)
    R = nr.scattering_matrix(nr.build_conversion_drift(p), p.kappa, 1e9).R
    assert np.allclose(R, -np.eye(4), atol=1e-6)


def test_singular_resolvent():
    with pytest.raises(SingularityError):
        nr.scattering_matrix(np.zeros((2, 2)), 1.0, 0.0)


def test_reciprocal_at_zero_phase():
    fwd, bwd = nr.efficiency_spectrum(ConversionParams(), np.linspace(-0.01, 0.01, 201))
    assert np.max(np.abs(fwd - bwd)) <= 1e-12
    assert nr.nonreciprocity_ratio(ConversionParams(), 0.004) == pytest.approx(1.0, abs=1e-12)


def test_backward_suppressed_and_roles_swap():
    p = ConversionParams(theta=3 * math.pi / 4)
    fwd, bwd = nr.conversion_efficiencies(p, -p.gamma_m2)
    assert fwd > 0.1
    assert bwd < 0.02 * fwd
    fwd2, bwd2 = nr.conversion_efficiencies(p, p.gamma_m2)
    assert fwd2 == pytest.approx(bwd, rel=1e-9)
    assert bwd2 == pytest.approx(fwd, rel=1e-9)


@settings(max_examples=100, deadline=None)
@given(omegas, angles)
def test_transpose_identity(omega, theta):
    f_plus, b_plus = nr.conversion_efficiencies(ConversionParams(theta=theta), omega)
    f_minus, b_minus = nr.conversion_efficiencies(ConversionParams(theta=-theta), omega)
    assert abs(b_plus - f_minus) <= 1e-12
    assert abs(f_plus - b_minus) <= 1e-12


@settings(max_examples=60, deadline=None)
@given(omegas, st.floats(0.05, 3.0))
def test_ratio_product_is_one(omega, theta):
    eta_p = nr.nonreciprocity_ratio(ConversionParams(theta=theta), omega)
    eta_m = nr.nonreciprocity_ratio(ConversionParams(theta=-theta), omega)
    assert eta_p * eta_m == pytest.approx(1.0, rel=1e-8)


@settings(max_examples=60, deadline=None)
@given(omegas, angles)
def test_two_pi_periodic(omega, theta):
    a = nr.conversion_efficiencies(ConversionParams(theta=theta), omega)
    b = nr.conversion_efficiencies(ConversionParams(theta=theta + 2 * math.pi), omega)
    assert np.allclose(a, b, rtol=1e-10, atol=1e-14)


def test_passive_conversion_over_sweep():
    for theta in np.linspace(0, 2 * math.pi, 13):
        fwd, bwd = nr.efficiency_spectrum(ConversionParams(theta=theta), np.linspace(-0.02, 0.02, 101))
        assert np.all(fwd <= 1) and np.all(bwd <= 1)


def test_port_variant_matches_scalar_optical_block():
    p = ConversionParams(theta=0.9)
    U = nr.build_conversion_drift(p)
    scalar = nr.scattering_matrix(U, p.kappa, -0.001).R
    ports = nr.scattering_matrix_ports(U, (p.kappa, p.kappa, 0, 0), -0.001).R
    assert np.allclose(scalar[:2, :2], ports[:2, :2], atol=1e-13)
    assert np.allclose(np.diag(ports)[2:], -1)


def test_input_coupling_switch():
    half = ConversionParams(theta=3 * math.pi / 4, kappa_in=7.5)
    full = ConversionParams(theta=3 * math.pi / 4)
    assert half.input_coupling == 7.5 and full.input_coupling == 15.0
    assert nr.conversion_efficiencies(half, 0.0)[0] != nr.conversion_efficiencies(full, 0.0)[0]


def test_ratio_infinite_sentinel(caplog):
    p = ConversionParams(C_mk1=0, C_mk2=0)
    assert nr.nonreciprocity_ratio(p, 0.0) == math.inf
    assert "eta = inf" in caplog.text


@pytest.mark.parametrize(
    "kwargs", [dict(kappa=0), dict(C_k1=-1), dict(theta=math.nan), dict(kappa_in=20)]
)
def test_params_validation(kwargs):
    with pytest.raises(ValidationError):
        ConversionParams(**kwargs)
