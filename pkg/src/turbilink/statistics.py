"""State statistics: purity, spatial correlation, position and angle laws.

The joint angle distribution comes from tracing the radial coordinates out of
the polar-form position law. That radial double integral concentrates along
the r_s = r_i diagonal whenever the sum and difference widths are very
different, so it is evaluated in rotated diagonal coordinates: the
cross-diagonal integral has an exact error-function form and the remaining
semi-infinite integral is Gaussian-decaying and handled by the mapped
Gauss-Legendre engine.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erf

from . import quadrature
from .params import ParameterError
from .propagation import PropagatedMoments

_RADIAL_REL_TOL = 1e-9


@dataclass(frozen=True)
class AngleDistribution:
    """Conditional angle law P(theta_s | theta_i = 0) over one 2 pi window.

    The window is centered on the circular mean of the distribution; the
    boundary density is the value at the window edges (center +- pi) and
    circular_std is the ordinary standard deviation within the window.
    """

    thetas: np.ndarray
    density: np.ndarray
    window_center: float
    boundary_density: float
    circular_std: float


def purity(moments: PropagatedMoments) -> float:
    """Trace of the squared density operator, exactly 1 without coupling."""
    if math.isinf(moments.c_plus) or math.isinf(moments.c_minus):
        return 1.0
    cp2 = moments.c_plus**2
    cm2 = moments.c_minus**2
    return (cm2 * cp2) / ((cm2 + 4.0 * moments.sigma**2) * (cp2 + 4.0 * moments.w**2))


def spatial_correlation(moments: PropagatedMoments) -> float:
    """Normalized signal/idler position cross-correlation in [-1, 1]."""
    s2 = moments.sigma**2
    return 1.0 - 2.0 * s2 / (s2 + moments.w**2)


def joint_position_pdf(moments: PropagatedMoments, rho_s, rho_i):
    """Unnormalized coincidence position density.

    exp[-(rho_s+rho_i)^2 / 2w^2 - (rho_s-rho_i)^2 / 2sigma^2]; callers
    normalize over their own grids. Accepts broadcastable (..., 2) arrays.
    """
    rho_s = np.asarray(rho_s, dtype=float)
    rho_i = np.asarray(rho_i, dtype=float)
    plus = np.sum((rho_s + rho_i) ** 2, axis=-1)
    minus = np.sum((rho_s - rho_i) ** 2, axis=-1)
    return np.exp(-plus / (2.0 * moments.w**2) - minus / (2.0 * moments.sigma**2))


def _gaussian_coeffs(moments):
    alpha = 0.5 / moments.w**2 + 0.5 / moments.sigma**2
    beta = 0.5 / moments.sigma**2 - 0.5 / moments.w**2
    return alpha, beta


def _cross_diag_integral(xi, t):
    """int_{-xi}^{xi} (xi^2 - eta^2) exp(-t eta^2) d eta, exact in eta.

    Small t*xi^2 switches to the series branch; the erf expression loses all
    significant digits there through cancellation.
    """
    xi = np.asarray(xi, dtype=float)
    txx = t * xi * xi
    out = np.empty_like(xi)
    small = txx < 1e-3
    if np.any(small):
        x = xi[small]
        tx = txx[small]
        out[small] = x**3 * (
            4.0 / 3.0 - tx * (4.0 / 15.0) + tx**2 * (2.0 / 35.0) - tx**3 * (2.0 / 189.0)
        )
    if np.any(~small):
        x = xi[~small]
        rt = math.sqrt(t)
        out[~small] = (
            math.sqrt(math.pi) / rt * erf(rt * x) * (x * x - 0.5 / t)
            + x * np.exp(-t * x * x) / t
        )
    return out


def _radial_pair_integral(alpha: float, gamma: float) -> float:
    """iint_0^inf r_s r_i exp(-alpha (r_s^2+r_i^2) + 2 gamma r_s r_i) dr dr.

    Rotated to diagonal coordinates the integrand factorizes; the remaining
    semi-infinite integral uses the mapped Gauss-Legendre engine with the
    mapping scale tied to the slow diagonal decay rate (equivalently
    4 max(w, sigma) at the correlation extremes).
    """
    s = alpha - gamma
    t = alpha + gamma
    if s <= 0.0 or t <= 0.0:
        raise ParameterError("angle kernel requires |gamma| < alpha")
    spec = quadrature.QuadratureSpec(
        method=quadrature.MAPPED_GAUSS_LEGENDRE,
        nodes=48,
        scale=4.0 / math.sqrt(s),
        rel_tol=_RADIAL_REL_TOL,
        max_levels=8,
    )
    value, _ = quadrature.integrate_radial(
        lambda xi: 0.5 * np.exp(-s * xi * xi) * _cross_diag_integral(xi, t), spec
    )
    return value


def joint_angle_pdf(moments: PropagatedMoments, theta_s: float, theta_i: float) -> float:
    """Unnormalized joint angle density, a function of theta_s - theta_i only."""
    alpha, beta = _gaussian_coeffs(moments)
    gamma = beta * math.cos(theta_s - theta_i)
    return _radial_pair_integral(alpha, gamma)


def _graded_panel_nodes(center: float, peak_width: float, nodes_per_panel: int = 24):
    """Deterministic panels over [center-pi, center+pi], graded around the peak.

    Panel edges grow geometrically away from the center so a near-Lorentzian
    peak of the given width and its slow tails are both resolved.
    """
    width = min(max(peak_width, 1e-4), math.pi / 3.0)
    edges = [0.0]
    e = width
    while e < math.pi:
        edges.append(e)
        e *= 3.0
    edges.append(math.pi)
    xs, ws = [], []
    gl_x, gl_w = quadrature.gauss_legendre_nodes(nodes_per_panel)
    for lo, hi in zip(edges[:-1], edges[1:]):
        half = 0.5 * (hi - lo)
        mid = 0.5 * (hi + lo)
        for sign in (-1.0, 1.0):
            xs.append(center + sign * (mid + half * gl_x))
            ws.append(half * gl_w)
    return np.concatenate(xs), np.concatenate(ws)


def conditional_angle_stats(
    moments: PropagatedMoments, grid_size: int = 256
) -> AngleDistribution:
    """Normalized conditional angle distribution and its summary statistics.

    The idler angle is fixed at zero. The 2 pi window is centered on the
    circular mean, which by the cos(theta_s - theta_i) dependence of the
    joint law sits at 0 when the widths make the angles correlated and at pi
    when they are anti-correlated.
    """
    if grid_size < 64:
        raise ParameterError(f"grid_size must be >= 64, got {grid_size}")
    alpha, beta = _gaussian_coeffs(moments)
    center = 0.0 if beta >= 0.0 else math.pi

    f_c = abs(spatial_correlation(moments))
    peak_width = math.sqrt(max(2.0 * (1.0 - f_c), 1e-30))
    thetas_q, weights_q = _graded_panel_nodes(center, peak_width)

    dens = np.array(
        [_radial_pair_integral(alpha, beta * math.cos(t)) for t in thetas_q]
    )
    norm = float(np.sum(weights_q * dens))
    var = float(np.sum(weights_q * dens * (thetas_q - center) ** 2)) / norm
    boundary = _radial_pair_integral(alpha, beta * math.cos(center + math.pi)) / norm

    grid = center + (-math.pi + 2.0 * math.pi * (np.arange(grid_size) + 0.5) / grid_size)
    grid_density = (
        np.array([_radial_pair_integral(alpha, beta * math.cos(t)) for t in grid])
        / norm
    )
    return AngleDistribution(
        thetas=grid,
        density=grid_density,
        window_center=center,
        boundary_density=boundary,
        circular_std=math.sqrt(var),
    )
