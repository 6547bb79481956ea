"""Physical input parameters and every derived static quantity.

All quantities are SI (meters, radians) internally. The propagating fields
are the degenerate signal/idler pair, so the working wavelength is twice the
pump wavelength and the pump enters only through the transverse correlation
length of the source. The crystal-plane waists are mapped through an ideal
thin-lens collimation stage before any propagation, so the downstream modules
only ever see the collimated waists.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


class ParameterError(ValueError):
    """Invalid physical parameter; message names the offending field."""


def _require_positive(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value) or value <= 0.0:
        raise ParameterError(f"{name} must be finite and > 0, got {value!r}")
    return value


@dataclass(frozen=True)
class PhysicalSetup:
    """Source, lens, and derived beam parameters. Immutable; safe to share.

    Attributes
    ----------
    pump_wavelength : float
        Pump wavelength in meters.
    downconverted_wavelength : float
        Common signal/idler wavelength, twice the pump wavelength (m).
    wavenumber : float
        2 pi / downconverted_wavelength (rad/m).
    pump_waist : float
        Gaussian pump waist at the crystal (m).
    crystal_length : float
        Nonlinear crystal thickness (m).
    spdc_correlation_length : float
        Transverse correlation length of the two-photon source (m).
    lens_focal_length : float
        Focal length of the collimating thin lens (m).
    collimated_sum_waist : float
        Sum-coordinate waist after collimation (m).
    collimated_diff_waist : float
        Difference-coordinate waist after collimation (m).
    """

    pump_wavelength: float
    downconverted_wavelength: float
    wavenumber: float
    pump_waist: float
    crystal_length: float
    spdc_correlation_length: float
    lens_focal_length: float
    collimated_sum_waist: float
    collimated_diff_waist: float


def correlation_length(pump_wavelength: float, crystal_length: float) -> float:
    """Transverse correlation length sqrt(0.455 L lambda_p / 2 pi) in meters."""
    pump_wavelength = _require_positive("pump_wavelength", pump_wavelength)
    crystal_length = _require_positive("crystal_length", crystal_length)
    return math.sqrt(0.455 * crystal_length * pump_wavelength / (2.0 * math.pi))


def collimated_waist(wavelength: float, focal_length: float, waist: float) -> float:
    """Thin-lens Fourier mapping of a crystal-plane width: lambda f / (2 pi w)."""
    return wavelength * focal_length / (2.0 * math.pi * waist)


def derive_setup(
    pump_wavelength: float,
    pump_waist: float,
    crystal_length: float,
    focal_length: float,
) -> PhysicalSetup:
    """Build a fully derived PhysicalSetup from the four free inputs.

    Raises ParameterError when any input is non-positive or non-finite.
    """
    pump_wavelength = _require_positive("pump_wavelength", pump_wavelength)
    pump_waist = _require_positive("pump_waist", pump_waist)
    crystal_length = _require_positive("crystal_length", crystal_length)
    focal_length = _require_positive("focal_length", focal_length)

    wavelength = 2.0 * pump_wavelength
    sigma0 = correlation_length(pump_wavelength, crystal_length)
    return PhysicalSetup(
        pump_wavelength=pump_wavelength,
        downconverted_wavelength=wavelength,
        wavenumber=2.0 * math.pi / wavelength,
        pump_waist=pump_waist,
        crystal_length=crystal_length,
        spdc_correlation_length=sigma0,
        lens_focal_length=focal_length,
        collimated_sum_waist=collimated_waist(wavelength, focal_length, pump_waist),
        collimated_diff_waist=collimated_waist(wavelength, focal_length, sigma0),
    )
