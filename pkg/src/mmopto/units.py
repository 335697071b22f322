"""Unit conversion factors.

Internally every frequency is angular (rad/s) and every length is in
meters.  Configuration files and CSV outputs use ordinary frequencies
(the "/2π" values quoted in laboratory tables); these factors convert at
the boundary.
"""

from math import pi

TWO_PI = 2.0 * pi

HZ = TWO_PI
KHZ = TWO_PI * 1e3
MHZ = TWO_PI * 1e6
THZ = TWO_PI * 1e12

NM = 1e-9
MHZ_PER_NM = MHZ / NM

UW = 1e-6
NG = 1e-12  # nanogram in kg


def to_hz(omega):
    """Angular frequency (rad/s) to ordinary frequency (Hz)."""
    return omega / TWO_PI
