"""
eTPA virtual-state spectroscopy toolkit.

Simulates delay scans of entangled two-photon absorption for a multi-level
sample, Fourier-transforms them and recovers the intermediate-state energies
by correlating spectra taken at several pump wavelengths.
"""

__version__ = "1.0.0"
