"""Truncated-Fock-space simulator and analysis toolkit for a Kerr
parametric oscillator cat qubit: pulsed dynamics, quasienergy spectra,
Wigner tomography, and process tomography of the Fock-to-cat mapping and
cat-qubit gates."""

from . import (cli, dynamics, errors, fileio, fockspace, model, parallel,
               qpt, spectral, tomography, units)

__version__ = "0.1.0"

__all__ = [
    "cli", "dynamics", "errors", "fileio", "fockspace", "model", "parallel",
    "qpt", "spectral", "tomography", "units", "__version__",
]
