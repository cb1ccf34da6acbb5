"""Frequency conventions.

Every public quantity is a plain frequency nu = omega / 2pi in MHz. Solvers
convert to angular units (rad/us) at a single point through ``to_angular``.
"""

import numpy as np

TWO_PI = 2.0 * np.pi

UNITS_NOTE = "all rates are nu = omega/2pi in MHz"


def to_angular(nu):
    return TWO_PI * np.asarray(nu)


def drive_rate(kappa_in, eps):
    """Angular-unit drive term sqrt(kappa_in) * eps entering d<a>/dt.

    ``kappa_in`` is a nu-value in MHz and is converted to rad/us before the
    square root; ``eps`` is taken as given.
    """
    return np.sqrt(TWO_PI * kappa_in) * eps
