"""darkfront: dark-soliton interface dynamics in the 2D parametric NLS.

Subpackages cover the full verification chain: 1D line operators and their
kernels (`line1d`), curvature-flow coefficients alpha0/nu/zeta
(`coefficients`), spectral certification (`spectra`), the 2D pseudo-spectral
solver (`pnls2d`), interface extraction (`interface`), the sharp-interface
marker solver (`curveflow`), and the command-line driver (`cli`).
"""

__version__ = "0.1.0"

from .params import (
    PhysicalParams,
    ScaledParams,
    equilibrium_amplitude,
    scale_params,
    unscale_params,
)

__all__ = [
    "PhysicalParams",
    "ScaledParams",
    "scale_params",
    "unscale_params",
    "equilibrium_amplitude",
    "__version__",
]
