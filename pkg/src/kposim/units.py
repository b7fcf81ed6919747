"""Unit conventions and conversions.

All internal quantities are kept in a single consistent system:

* angular frequency in rad/us,
* time in us,
* decay rates in 1/us.

Interfaces that face configuration files or publication-style numbers use
ordinary frequencies in MHz and durations in ns; the helpers here convert at
that boundary.  A quantity quoted as ``f`` MHz corresponds to ``2*pi*f``
rad/us, so e.g. a Kerr coefficient "K/2pi = 3.1 MHz" enters the Hamiltonian
as ``K = 2*pi*3.1`` rad/us.
"""

import math

__all__ = [
    "TWO_PI",
    "mhz_to_angular",
    "angular_to_mhz",
    "ns_to_us",
    "us_to_ns",
]

TWO_PI = 2.0 * math.pi


def mhz_to_angular(f_mhz):
    """Ordinary frequency in MHz -> angular frequency in rad/us."""
    return TWO_PI * f_mhz


def angular_to_mhz(omega):
    """Angular frequency in rad/us -> ordinary frequency in MHz."""
    return omega / TWO_PI


def ns_to_us(t_ns):
    """Duration in ns -> us."""
    return t_ns * 1e-3


def us_to_ns(t_us):
    """Duration in us -> ns."""
    return t_us * 1e3
