"""Linearized optomechanics of counter-propagating (CW/CCW) resonator modes.

Submodules: ``modes`` (selection rule), ``gaussian`` (drift matrices and
Lyapunov moments), ``hilbert`` (Fock-space master equation), and the three
devices ``pairgen``, ``nonreciprocity`` and ``phonon_pt``. ``cli`` is the
command-line front end.
"""

__version__ = "0.1.0"
