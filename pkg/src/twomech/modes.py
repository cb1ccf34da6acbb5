"""Azimuthal mode bookkeeping and the angular-momentum selection rule.

A traveling-wave field on mode ``m`` varies as exp(-i m phi). An annihilation
operator on that mode therefore contributes +m to the azimuthal sum of a
product term and a creation operator contributes -m; a cubic term survives
the azimuthal integral only when that sum vanishes.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace
from enum import Enum
from typing import Iterable, NamedTuple, Optional, Tuple

from .errors import ValidationError

# (azimuthal number, is_creation)
Ladder = Tuple[int, bool]


class ModeKind(str, Enum):
    OPTICAL = "optical"
    MECHANICAL = "mechanical"


class Category(str, Enum):
    DISPERSIVE = "dispersive"
    TRIPLE_RESONANT = "triple_resonant"
    FORBIDDEN = "forbidden"


@dataclass(frozen=True)
class AzimuthalMode:
    kind: ModeKind
    m: int
    nu: float
    damping_nu: float
    n_th: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", ModeKind(self.kind))
        if not self.nu > 0:
            raise ValidationError(f"mode m={self.m}: nu must be > 0, got {self.nu}")
        if not self.damping_nu > 0:
            raise ValidationError(
                f"mode m={self.m}: damping_nu must be > 0, got {self.damping_nu}"
            )
        if self.n_th < 0:
            raise ValidationError(f"mode m={self.m}: n_th must be >= 0, got {self.n_th}")
        if self.kind is ModeKind.OPTICAL and self.n_th != 0:
            raise ValidationError("optical modes carry no thermal occupancy")

    def partner(self) -> "AzimuthalMode":
        """The degenerate counter-propagating mode -m."""
        return replace(self, m=-self.m)


def with_partners(modes: Iterable[AzimuthalMode]) -> list:
    """Close a mode list under m -> -m, keeping the first occurrence of each m."""
    out = {}
    for mode in modes:
        out.setdefault((mode.kind, mode.m), mode)
        out.setdefault((mode.kind, -mode.m), mode.partner())
    return list(out.values())


def azimuthal_charge(op: Ladder) -> int:
    m, dagger = op
    return -m if dagger else m


def is_term_allowed(j: Ladder, k: Ladder, l: Ladder) -> bool:
    """Selection rule for the cubic term built from ladders ``j``, ``k``, ``l``.

    Each argument is ``(m, is_creation)``; the first two act on optical modes,
    the third on a mechanical mode.

    >>> is_term_allowed((12, True), (7, False), (5, False))
    True
    """
    return azimuthal_charge(j) + azimuthal_charge(k) + azimuthal_charge(l) == 0


def _conjugate(op: Ladder) -> Ladder:
    return (op[0], not op[1])


class InteractionTerm(NamedTuple):
    """Cubic term optical_a * optical_b * mech, each factor a ladder operator."""

    optical_a: Ladder
    optical_b: Ladder
    mech: Ladder
    g: Optional[float] = None

    @property
    def category(self) -> Category:
        return classify_interaction(self)

    @property
    def allowed(self) -> bool:
        return is_term_allowed(self.optical_a, self.optical_b, self.mech)

    def hermitian_conjugate(self) -> "InteractionTerm":
        return InteractionTerm(
            _conjugate(self.optical_a),
            _conjugate(self.optical_b),
            _conjugate(self.mech),
            self.g,
        )

    def mirrored(self) -> "InteractionTerm":
        """CW <-> CCW image: every azimuthal number flips sign."""
        (ma, da), (mb, db), (ml, dl) = self.optical_a, self.optical_b, self.mech
        return InteractionTerm((-ma, da), (-mb, db), (-ml, dl), self.g)


def classify_interaction(term: InteractionTerm) -> Category:
    """Dispersive, triple-resonant (Brillouin) or forbidden.

    Only number-conserving optical pairs (one creation, one annihilation)
    are kept; a_j a_k and a_j^dag a_k^dag products are counter-rotating and
    classified as forbidden together with terms breaking the selection rule.
    """
    (ma, da), (mb, db), mech, _ = term
    if da == db or not is_term_allowed((ma, da), (mb, db), mech):
        return Category.FORBIDDEN
    if ma == mb:
        # the selection rule then forces the mechanical number to zero
        return Category.DISPERSIVE
    return Category.TRIPLE_RESONANT


def enumerate_brillouin_triples(
    optical: Iterable[AzimuthalMode],
    mechanical: Iterable[AzimuthalMode],
    freq_tol: Optional[float] = None,
) -> list:
    """All energy- and momentum-matched triples a_j^dag a_k b_{j-k}.

    A triple is kept when a mechanical mode with ``m == j - k`` exists and
    ``|(nu_j - nu_k) - nu_mech| <= freq_tol``. Without an explicit tolerance
    the linewidth of the candidate phonon mode is used.
    """
    if freq_tol is not None and not freq_tol > 0:
        raise ValidationError(f"freq_tol must be > 0, got {freq_tol}")
    optical = list(optical)
    by_m = {}
    for mode in mechanical:
        by_m.setdefault(mode.m, []).append(mode)

    triples = []
    for a, b in itertools.permutations(optical, 2):
        if a.m == b.m:
            continue
        for phonon in by_m.get(a.m - b.m, ()):
            tol = phonon.damping_nu if freq_tol is None else freq_tol
            if abs((a.nu - b.nu) - phonon.nu) <= tol:
                term = InteractionTerm((a.m, True), (b.m, False), (phonon.m, False))
                triples.append(term)
    return triples
