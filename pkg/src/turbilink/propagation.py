"""Closed-form propagation of the collimated two-photon kernel.

The second-order cross-spectral density after both photons travel a distance z
through independent turbulent paths keeps a six-factor Gaussian form in the
sqrt(2)-normalized sum/difference coordinates: two real width Gaussians, two
quadratic phase factors, and two coupling Gaussians that encode decoherence.
This module evaluates the six z-dependent parameters of that form and the
kernel itself. The phase-curvature parameters are stored as squared lengths
(the direct phase divisors), which sidesteps sign and branch issues.

Everything here is a pure function of immutable inputs; grid sweeps may be
evaluated concurrently with bitwise reproducible results.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .params import ParameterError, PhysicalSetup
from .turbulence import INFINITE, TurbulenceChannel, coherence_length

_SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class PropagatedMoments:
    """The six closed-form parameters of the propagated kernel at one z.

    w and sigma are the sum/difference widths (m), r_plus_sq / r_minus_sq the
    squared phase-curvature parameters (m^2, infinite at z = 0), and c_plus /
    c_minus the coupling lengths (m, infinite in free space or at z = 0).
    The wavenumber tags along so the kernel can be evaluated standalone.
    """

    z: float
    wavenumber: float
    w: float
    sigma: float
    r_plus_sq: float
    r_minus_sq: float
    c_plus: float
    c_minus: float
    is_free_space: bool


def _width_sq(a: float, z: float, k: float, rho0: float) -> float:
    if math.isinf(rho0):
        return a**2 + z**2 / (k**2 * a**2)
    return a**2 + (z**2 / k**2) * (1.0 / a**2 + 4.0 / rho0**2)


def _curvature_sq(a: float, z: float, k: float, rho0: float) -> float:
    if z == 0.0:
        return INFINITE
    if math.isinf(rho0):
        return (k**2 * a**4 + z**2) / z
    num = k**2 * rho0**2 * a**4 + (rho0**2 + 4.0 * a**2) * z**2
    return num / ((rho0**2 + 6.0 * a**2) * z)


def _coupling_sq(a: float, z: float, k: float, rho0: float) -> float:
    if math.isinf(rho0):
        return INFINITE
    num = k**2 * rho0**4 * a**4 + rho0**2 * (rho0**2 + 4.0 * a**2) * z**2
    den = 3.0 * k**2 * rho0**2 * a**4 + (rho0**2 + 3.0 * a**2) * z**2
    return num / den


def propagated_moments(
    setup: PhysicalSetup, channel: TurbulenceChannel, z: float
) -> PropagatedMoments:
    """Evaluate the six kernel parameters at distance z from the input plane.

    The collimated waists take the place of the crystal-plane widths. For a
    vacuum channel (or z = 0, where the coherence length sentinel is infinite)
    the exact free-space limits are used: the couplings are infinite and the
    widths reduce to ordinary Gaussian-beam spreading.
    """
    if z < 0.0:
        raise ParameterError(f"z must be >= 0, got {z!r}")
    z = float(z)
    k = setup.wavenumber
    a = setup.collimated_sum_waist
    b = setup.collimated_diff_waist
    rho0 = coherence_length(channel, setup, z)
    c_plus_sq = _coupling_sq(a, z, k, rho0)
    c_minus_sq = _coupling_sq(b, z, k, rho0)
    return PropagatedMoments(
        z=z,
        wavenumber=k,
        w=math.sqrt(_width_sq(a, z, k, rho0)),
        sigma=math.sqrt(_width_sq(b, z, k, rho0)),
        r_plus_sq=_curvature_sq(a, z, k, rho0),
        r_minus_sq=_curvature_sq(b, z, k, rho0),
        c_plus=math.sqrt(c_plus_sq),
        c_minus=math.sqrt(c_minus_sq),
        is_free_space=channel.free_space,
    )


def to_sum_diff(rho_s, rho_i):
    """Orthogonal sqrt(2)-normalized transform to sum/difference coordinates."""
    rho_s = np.asarray(rho_s, dtype=float)
    rho_i = np.asarray(rho_i, dtype=float)
    return (rho_s + rho_i) / _SQRT2, (rho_s - rho_i) / _SQRT2


def from_sum_diff(rho_plus, rho_minus):
    """Exact inverse of to_sum_diff."""
    rho_plus = np.asarray(rho_plus, dtype=float)
    rho_minus = np.asarray(rho_minus, dtype=float)
    return (rho_plus + rho_minus) / _SQRT2, (rho_plus - rho_minus) / _SQRT2


@dataclass(frozen=True)
class BiphotonCoords:
    """Four transverse receiver positions (signal/idler, kernel index 1/2)."""

    rho_s1: np.ndarray
    rho_i1: np.ndarray
    rho_s2: np.ndarray
    rho_i2: np.ndarray

    def __post_init__(self):
        for name in ("rho_s1", "rho_i1", "rho_s2", "rho_i2"):
            vec = np.asarray(getattr(self, name), dtype=float)
            if vec.shape != (2,):
                raise ParameterError(f"{name} must be a transverse 2-vector")
            object.__setattr__(self, name, vec)

    @property
    def rho_plus_1(self):
        return (self.rho_s1 + self.rho_i1) / _SQRT2

    @property
    def rho_minus_1(self):
        return (self.rho_s1 - self.rho_i1) / _SQRT2

    @property
    def rho_plus_2(self):
        return (self.rho_s2 + self.rho_i2) / _SQRT2

    @property
    def rho_minus_2(self):
        return (self.rho_s2 - self.rho_i2) / _SQRT2


def _axis_factor(m: PropagatedMoments, p1, m1, p2, m2) -> complex:
    """One-axis kernel value from scalar sum/difference components."""
    expo = -(p2 * p2 + p1 * p1) / (2.0 * m.w**2) - (m2 * m2 + m1 * m1) / (
        2.0 * m.sigma**2
    )
    phase = 0.0
    if not math.isinf(m.r_plus_sq):
        phase += m.wavenumber * (p2 * p2 - p1 * p1) / (2.0 * m.r_plus_sq)
    if not math.isinf(m.r_minus_sq):
        phase += m.wavenumber * (m2 * m2 - m1 * m1) / (2.0 * m.r_minus_sq)
    if not math.isinf(m.c_plus):
        expo -= (p2 - p1) ** 2 / m.c_plus**2
    if not math.isinf(m.c_minus):
        expo -= (m2 - m1) ** 2 / m.c_minus**2
    return complex(math.exp(expo) * math.cos(phase), math.exp(expo) * math.sin(phase))


def cross_spectral_density(moments: PropagatedMoments, coords: BiphotonCoords) -> complex:
    """Six-factor kernel value at the given receiver coordinates.

    The two transverse axes separate exactly, so the 2-D value is the product
    of per-axis factors. Coupling factors are identically 1 when the coupling
    lengths carry the free-space sentinel. The overall normalization constant
    is omitted; every consumer normalizes over its own domain.
    """
    p1, m1 = coords.rho_plus_1, coords.rho_minus_1
    p2, m2 = coords.rho_plus_2, coords.rho_minus_2
    value = 1.0 + 0.0j
    for axis in (0, 1):
        value *= _axis_factor(moments, p1[axis], m1[axis], p2[axis], m2[axis])
    return value
