import numpy as np
import pytest

from darkfront import line1d

# exact integrals of the front profiles, used as oracles throughout
NORM_DPHI_SQ = 4.0 / 3.0        # int sech^4
NORM_PSI_SQ = 2.0               # int sech^2
IP_DPHI_PSI = np.pi / 2.0       # int sech^3


@pytest.fixture(scope="session")
def grid_default():
    """Spec default line grid (Z = 20, n = 2048)."""
    return line1d.build_grid(20.0, 2048)


@pytest.fixture(scope="session")
def grid_fast():
    """Cheaper grid for tests whose tolerances allow it."""
    return line1d.build_grid(20.0, 1024)


@pytest.fixture(scope="session")
def grid_wide():
    """Wide grid (Z = 30): needed by eigen-residual claims on sech-tailed
    profiles, whose accuracy at Z = 20 is limited by the e^{-Z} boundary
    tail rather than the interior stencil order."""
    return line1d.build_grid(30.0, 2048)


def quad_norm(grid, values):
    return float(np.sqrt(np.sum(grid.weights * np.asarray(values) ** 2)))
