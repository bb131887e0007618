"""Shared physical constants and simulator-wide defaults."""

# Propagation speed used consistently by synthesis and processing.  The
# nominal 3e8 m/s keeps the sweep tables (range resolution c/2B etc.) at
# their exact textbook values.
C = 3.0e8

# Default carrier frequency (Hz).  77 GHz automotive band.
DEFAULT_F0 = 77.0e9


def wavelength(f0: float = DEFAULT_F0) -> float:
    return C / f0
