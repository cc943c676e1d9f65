"""Parameter conversions for the parametric NLS.

The physical equation for the complex field Theta,

    i Theta_t + (eps^2/2) Lap Theta - |Theta|^2 Theta + (i + a) Theta
        - gamma * conj(Theta) = 0,

is rescaled (amplitude 2/sqrt(beta), phase theta, time 2t/beta, space
2x/sqrt(beta)) into a real two-component system whose only parameters are
(beta, mu, eps).  This module converts between the two parameterizations and
supplies the spatially uniform equilibrium used to build initial data.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass


@dataclass(frozen=True)
class PhysicalParams:
    """Parameters of the physical equation.

    a:     phase rotation
    gamma: parametric pump strength (> 1)
    eps:   dispersive-length to domain-size ratio, in (0, 1)
    box:   periodic domain edge length
    """

    a: float
    gamma: float
    eps: float = 0.3
    box: float = 12.0

    def __post_init__(self):
        if not self.gamma > 1.0:
            raise ValueError(
                f"pump below parametric threshold: gamma = {self.gamma} <= 1"
            )
        s = math.sqrt(self.gamma**2 - 1.0)
        if not self.a + s > 0.0:
            raise ValueError(
                f"negative scaling denominator: a + sqrt(gamma^2-1) = {self.a + s}"
            )
        if not 0.0 < self.eps < 1.0:
            raise ValueError(f"eps must lie in (0, 1), got {self.eps}")
        if not self.box > 0.0:
            raise ValueError(f"box must be positive, got {self.box}")


@dataclass(frozen=True)
class ScaledParams:
    """Parameters of the rescaled real system.

    beta:  damping coefficient, 4 / (a + sqrt(gamma^2 - 1)) > 0
    mu:    bifurcation parameter in [-1, 3]; mu > 0 gives motion by curvature,
           mu < 0 motion against curvature
    theta: phase angle of the equilibrium, solving
           gamma * exp(-2i theta) = -sqrt(gamma^2 - 1) + i
    """

    beta: float
    mu: float
    theta: float
    eps: float = 0.3
    box: float = 12.0

    def __post_init__(self):
        if not self.beta > 0.0:
            raise ValueError(f"beta must be positive, got {self.beta}")
        if not -1.0 - 1e-9 <= self.mu <= 3.0 + 1e-9:
            raise ValueError(f"mu must lie in [-1, 3], got {self.mu}")


def scale_params(p: PhysicalParams) -> ScaledParams:
    """Map (a, gamma) to (beta, mu, theta).

    beta = 4/(a + s), mu = -(a - 3s)/(a + s) with s = sqrt(gamma^2 - 1).
    The phase branch is fixed so that gamma*exp(-2i theta) = -s + i holds
    exactly; theta = -atan2(1, -s)/2 lands in (-pi/2, -pi/4].
    """
    s = math.sqrt(p.gamma**2 - 1.0)
    denom = p.a + s
    beta = 4.0 / denom
    mu = -(p.a - 3.0 * s) / denom
    theta = -0.5 * math.atan2(1.0, -s)
    return ScaledParams(beta=beta, mu=mu, theta=theta, eps=p.eps, box=p.box)


def unscale_params(beta: float, mu: float, eps: float = 0.3,
                   box: float = 12.0) -> PhysicalParams:
    """Invert the scaling: a = (3 - mu)/beta, gamma = sqrt(1 + ((1+mu)/beta)^2).

    Round-trips through scale_params to machine precision.
    """
    if not beta > 0.0:
        raise ValueError(f"beta must be positive, got {beta}")
    if not -1.0 <= mu <= 3.0:
        raise ValueError(f"mu must lie in [-1, 3], got {mu}")
    s = (1.0 + mu) / beta
    a = (3.0 - mu) / beta
    gamma = math.sqrt(1.0 + s * s)
    return PhysicalParams(a=a, gamma=gamma, eps=eps, box=box)


def equilibrium_amplitude(p: PhysicalParams) -> complex:
    """Complex equilibrium A of the physical equation.

    |A| = 2/sqrt(beta) and arg A = theta; the constant field Theta == A
    annihilates the right-hand side exactly.
    """
    sp = scale_params(p)
    return (2.0 / math.sqrt(sp.beta)) * cmath.exp(1j * sp.theta)


def equilibrium_residual(p: PhysicalParams, amplitude: complex) -> float:
    """|spatial-free right-hand side| at the constant field `amplitude`."""
    rhs = (
        -abs(amplitude) ** 2 * amplitude
        + (1j + p.a) * amplitude
        - p.gamma * amplitude.conjugate()
    )
    return abs(rhs)


def figure_path_beta(mu: float) -> float:
    """beta along the reference parameter path (a == 1), i.e. beta = 3 - mu."""
    if not -1.0 <= mu < 3.0:
        raise ValueError(f"path beta = 3 - mu requires mu in [-1, 3), got {mu}")
    return 3.0 - mu
