"""Truncated Fock-space toolkit for optical quantum states.

State construction and operator algebra live in :mod:`fockspace.hilbert`,
truncated unitaries in :mod:`fockspace.transforms`, photon counting in
:mod:`fockspace.photon_stats`, characteristic functions and
quasi-probabilities in :mod:`fockspace.phase_space`, quadrature statistics
and Monte Carlo detection in :mod:`fockspace.homodyne`, and pattern-function
estimation in :mod:`fockspace.tomography`.  ``fockspace.cli`` exposes the
scenario runner.
"""

from . import (errors, hilbert, homodyne, phase_space, photon_stats,
               tomography, transforms)
from .hilbert import (DensityMatrix, Ket, TwoModeDensityMatrix, TwoModeKet,
                      make_coherent, make_fock, make_squeezed_vacuum,
                      make_thermal, make_twin_beam)

__all__ = [
    "errors", "hilbert", "transforms", "photon_stats", "phase_space",
    "homodyne", "tomography",
    "Ket", "DensityMatrix", "TwoModeKet", "TwoModeDensityMatrix",
    "make_fock", "make_coherent", "make_thermal", "make_squeezed_vacuum",
    "make_twin_beam",
]

__version__ = "0.1.0"
