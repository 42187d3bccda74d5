"""Transfer-matrix analysis of 1D periodic dielectric media with a single defect.

Band structure, defect-mode dispersion, finite-structure reflection and
transmission, the pole/zero pair a defect mode spawns in the complex
wavenumber plane, and the supercell (periodized defect) picture.
"""

__version__ = "0.1.0"

from .medium import (  # noqa: F401
    CrystalSpec,
    DefectSpec,
    FixedAlpha,
    FixedTheta,
    LayerProfile,
    Polarization,
    epsilon_at,
    validate_crystal,
)
