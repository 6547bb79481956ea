"""Kolmogorov-model channel quantities.

The only two pieces of turbulence physics the closed forms need are the
spherical-wave coherence length rho0(z) and the ensemble-averaged two-point
factor in its quadratic approximation. An infinite coherence length is
represented by the explicit float('inf') sentinel, never by a large number;
downstream closed forms branch on it and use their exact algebraic free-space
limits, which avoids catastrophic cancellation at weak turbulence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .params import ParameterError, PhysicalSetup

INFINITE = math.inf


@dataclass(frozen=True)
class TurbulenceChannel:
    """One statistically independent turbulent path.

    structure_constant is Cn^2 in m^(-2/3); zero means vacuum propagation.
    """

    structure_constant: float

    def __post_init__(self):
        cn2 = float(self.structure_constant)
        if not math.isfinite(cn2) or cn2 < 0.0:
            raise ParameterError(
                f"structure_constant must be finite and >= 0, got {cn2!r}"
            )
        object.__setattr__(self, "structure_constant", cn2)

    @property
    def free_space(self) -> bool:
        return self.structure_constant == 0.0


def coherence_length(channel: TurbulenceChannel, setup: PhysicalSetup, z: float) -> float:
    """Spherical-wave coherence length (0.546 Cn^2 k^2 z)^(-3/5) in meters.

    Returns the infinite sentinel for a vacuum channel or at z = 0, where no
    turbulence has been accumulated along the path.
    """
    if z < 0.0:
        raise ParameterError(f"z must be >= 0, got {z!r}")
    strength = 0.546 * channel.structure_constant * setup.wavenumber**2 * z
    if strength == 0.0:
        return INFINITE
    return strength ** (-3.0 / 5.0)


def turbulence_factor(channel, setup, z, rho_d_prime, rho_d):
    """Ensemble-averaged two-point factor, quadratic approximation.

    exp[-(|rho_d'|^2 + rho_d'.rho_d + |rho_d|^2) / rho0^2], identically 1 in
    free space. Arguments are transverse 2-vectors (trailing axis of length 2,
    broadcastable). The quadratic form is positive semidefinite, so the result
    lies in (0, 1].
    """
    rho0 = coherence_length(channel, setup, z)
    rho_d_prime = np.asarray(rho_d_prime, dtype=float)
    rho_d = np.asarray(rho_d, dtype=float)
    if math.isinf(rho0):
        shape = np.broadcast_shapes(rho_d_prime.shape[:-1], rho_d.shape[:-1])
        return np.ones(shape) if shape else 1.0
    quad = (
        np.sum(rho_d_prime**2, axis=-1)
        + np.sum(rho_d_prime * rho_d, axis=-1)
        + np.sum(rho_d**2, axis=-1)
    )
    return np.exp(-quad / rho0**2)
