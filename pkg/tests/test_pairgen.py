from __future__ import annotations

import math

import numpy as np
import pytest

from twomech import gaussian, pairgen
from twomech.errors import UndefinedWitnessError, ValidationError
from twomech.gaussian import Drive, LinearModel, Mode
from twomech.pairgen import PairgenParams


def test_zero_detuning_model():
    model = pairgen.build_pairgen_model(PairgenParams())
    assert all(m.detuning == 0 for m in model.modes)
    assert [m.label for m in model.modes] == ["a_k", "b_0", "a_-k"]


def test_detunings_follow_rotating_frame():
    model = pairgen.build_pairgen_model(PairgenParams(delta_k=0.07))
    assert [m.detuning for m in model.modes] == [-0.07, -0.07, 0.07]


def test_reference_point_is_stable():
    U = gaussian.build_drift(pairgen.build_pairgen_model(PairgenParams()))
    assert gaussian.stability_check(U)


def test_decoupled_limit_has_undefined_witness():
    p = PairgenParams(G_k=0.0, G_mk=0.0)
    with pytest.raises(UndefinedWitnessError):
        pairgen.pairgen_I(p)


def test_coherent_product_gives_zero():
    model = LinearModel(
        (Mode("x", 0.0, 2.0, 1.0), Mode("y", 0.3, 1.0, 0.5)),
        drives=(Drive(0, 0.4), Drive(1, 0.25 - 0.1j)),
    )
    m = gaussian.steady_moments(model)
    assert pairgen.nonclassicality_I(m, 0, 1) == pytest.approx(0.0, abs=1e-12)


def test_witness_negative_at_reference_point():
    assert pairgen.pairgen_I(PairgenParams()) < 0


def test_symmetric_in_detuning():
    grid = np.linspace(-0.2, 0.2, 41)
    values = np.array([pt.I for pt in pairgen.sweep_nonclassicality(PairgenParams(), "delta_k", grid)])
    assert np.max(np.abs(values - values[::-1])) <= 1e-6


def test_thermal_ordering():
    I = [pairgen.pairgen_I(PairgenParams(n_th=n)) for n in (0.0, 0.1, 0.2)]
    assert I[0] < I[1] < I[2]


def test_coupling_ordering():
    I = [pairgen.pairgen_I(PairgenParams(n_th=0.2, G_k=G)) for G in (0.3, 0.4, 0.5)]
    assert I[0] > I[1] > I[2]


def test_large_coupling_approaches_lower_bound():
    grid = np.linspace(0.3, 5.0, 48)
    I = np.array([pt.I for pt in pairgen.sweep_nonclassicality(PairgenParams(n_th=0.2), "G_k", grid)])
    assert np.all(np.diff(I) < 0)
    assert np.all(I >= -1)
    assert I[-1] < -0.98


def test_sweep_keeps_going_past_bad_points():
    points = pairgen.sweep_nonclassicality(PairgenParams(), "G_mk", [0.1, 0.5, 0.05])
    assert math.isfinite(points[0].I) and math.isfinite(points[2].I)
    assert math.isnan(points[1].I)
    assert points[1].error.startswith("ValidationError")


def test_sweep_rejects_unknown_axis():
    with pytest.raises(ValidationError):
        pairgen.sweep_nonclassicality(PairgenParams(), "kappa", [1.0])


def test_empty_sweep():
    assert pairgen.sweep_nonclassicality(PairgenParams(), "delta_k", []) == []


@pytest.mark.parametrize(
    "kwargs",
    [dict(kappa=0), dict(kappa_in=20), dict(n_th=-1), dict(G_k=-0.1), dict(G_mk=0.3)],
)
def test_params_validation(kwargs):
    with pytest.raises(ValidationError):
        PairgenParams(**kwargs)


def test_fock_escalation_reports_non_convergence():
    res = pairgen.fock_steady_state(PairgenParams(), dims=(3, 4, 3), tol=1e-8, max_dim=5)
    assert not res.converged
    assert res.dims == (3, 5, 3)


def test_fock_witness_spot_check():
    p = PairgenParams()
    I_gauss = pairgen.pairgen_I(p)
    I_fock = pairgen.pairgen_I(p, "fock", dims=(4, 7, 4), escalate="none")
    assert abs(I_fock - I_gauss) <= 1e-3


def test_sweep_fock_spot_checks():
    points = pairgen.sweep_nonclassicality(
        PairgenParams(), "delta_k", [-0.1, 0.0, 0.1], fock_checks=1,
        fock_kw={"dims": (4, 6, 4), "escalate": "none"},
    )
    checked = [pt for pt in points if pt.fock_I is not None]
    assert len(checked) == 1
    assert abs(checked[0].fock_I - checked[0].I) <= 1e-3
