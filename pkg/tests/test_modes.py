from __future__ import annotations

import pytest
from hypothesis import given, strategies as st

from twomech.errors import ValidationError
from twomech.modes import (
    AzimuthalMode,
    Category,
    InteractionTerm,
    ModeKind,
    azimuthal_charge,
    classify_interaction,
    enumerate_brillouin_triples,
    is_term_allowed,
    with_partners,
)

ladder = st.tuples(st.integers(-25, 25), st.booleans())


@pytest.mark.parametrize(
    "j, k, l, expected",
    [
        ((12, True), (7, False), (5, False), True),
        ((4, True), (4, False), (0, False), True),
        ((-9, True), (-9, False), (0, True), True),
        ((5, True), (3, False), (1, False), False),
    ],
)
def test_is_term_allowed_examples(j, k, l, expected):
    assert is_term_allowed(j, k, l) is expected


def test_charge_signs():
    assert azimuthal_charge((3, False)) == 3
    assert azimuthal_charge((3, True)) == -3


@pytest.mark.parametrize(
    "term, category",
    [
        (InteractionTerm((6, True), (6, False), (0, False)), Category.DISPERSIVE),
        (InteractionTerm((12, True), (7, False), (5, False)), Category.TRIPLE_RESONANT),
        (InteractionTerm((12, True), (7, False), (19, False)), Category.FORBIDDEN),
        # both optical creation operators: not a scattering term
        (InteractionTerm((3, True), (-8, True), (5, True)), Category.FORBIDDEN),
    ],
)
def test_classify_examples(term, category):
    assert classify_interaction(term) is category


@given(ladder, ladder, ladder)
def test_mirror_and_conjugate_closure(j, k, l):
    term = InteractionTerm(j, k, l)
    assert term.mirrored().allowed == term.allowed
    assert term.hermitian_conjugate().allowed == term.allowed
    assert classify_interaction(term.mirrored()) is classify_interaction(term)


@given(ladder, ladder, ladder)
def test_dispersive_only_with_zero_phonon(j, k, l):
    if classify_interaction(InteractionTerm(j, k, l)) is Category.DISPERSIVE:
        assert l[0] == 0


def _opt(m, nu, kappa=15.0):
    return AzimuthalMode(ModeKind.OPTICAL, m, nu, kappa)


def _mech(m, nu, gamma=0.004):
    return AzimuthalMode(ModeKind.MECHANICAL, m, nu, gamma)


def test_enumerate_one_triple():
    optical = [_opt(12, 194042.3), _opt(7, 194000.0)]
    triples = enumerate_brillouin_triples(optical, [_mech(5, 42.3)], freq_tol=0.1)
    assert len(triples) == 1
    t = triples[0]
    assert (t.optical_a, t.optical_b, t.mech) == ((12, True), (7, False), (5, False))
    assert t.category is Category.TRIPLE_RESONANT


def test_enumerate_single_optical_mode_is_empty():
    assert enumerate_brillouin_triples([_opt(3, 1000.0)], [_mech(0, 42.3)], 1.0) == []


def test_enumerate_rejects_frequency_mismatch():
    optical = [_opt(12, 194047.3), _opt(7, 194000.0)]
    assert enumerate_brillouin_triples(optical, [_mech(5, 42.3)], freq_tol=1.0) == []


def test_enumerate_default_tolerance_is_phonon_linewidth():
    optical = [_opt(12, 194042.303), _opt(7, 194000.0)]
    assert enumerate_brillouin_triples(optical, [_mech(5, 42.3, gamma=0.004)]) != []
    assert enumerate_brillouin_triples(optical, [_mech(5, 42.3, gamma=0.001)]) == []


def test_partners_give_mirrored_triple():
    optical = with_partners([_opt(12, 194042.3), _opt(7, 194000.0)])
    mech = with_partners([_mech(5, 42.3)])
    found = {(t.optical_a[0], t.optical_b[0], t.mech[0]) for t in enumerate_brillouin_triples(optical, mech)}
    assert found == {(12, 7, 5), (-12, -7, -5)}


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(kind="optical", m=1, nu=0.0, damping_nu=1.0),
        dict(kind="optical", m=1, nu=10.0, damping_nu=0.0),
        dict(kind="mechanical", m=1, nu=10.0, damping_nu=1.0, n_th=-0.1),
        dict(kind="optical", m=1, nu=10.0, damping_nu=1.0, n_th=0.5),
    ],
)
def test_mode_validation(kwargs):
    with pytest.raises(ValidationError):
        AzimuthalMode(**kwargs)
