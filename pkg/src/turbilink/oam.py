"""Conditional orbital-angular-momentum spectrum of the heralded signal field.

The joint azimuthal-index law is a projection of the propagated kernel onto
helical modes, traced over the radial mode index. Summing the complete radial
basis collapses analytically (the radial-mode completeness identity), leaving
a four-angle, two-radius integral with the kernel evaluated at coincident
radii. Only three angle differences matter after removing a global rotation,
and the integrand is harmonic in one of them, so that one is integrated in
closed Bessel form. What remains is a two-angle, two-radius quadrature:

* the two radii run over the diagonal/cross-diagonal wedge (the integrand
  rides a diagonal ridge of width min(w, sigma) whenever the two propagated
  widths separate),
* the two angle differences use trapezoid grids pushed through a Moebius
  circle map, which clusters nodes around zero separation where strong
  coupling concentrates the integrand while keeping spectral accuracy.

The collapsed radial sum makes the result independent of the analysis-basis
waist; the waist is kept as metadata and for the truncated-basis validators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, i0e, j0

from . import quadrature
from .params import ParameterError, PhysicalSetup
from .propagation import PropagatedMoments

LAGUERRE_MAX_ORDER = 300


class OamTruncationError(RuntimeError):
    """Spectrum tail beyond l_max carries too much mass; enlarge l_max."""

    def __init__(self, message, tail_mass=None, suggested_l_max=None):
        super().__init__(message)
        self.tail_mass = tail_mass
        self.suggested_l_max = suggested_l_max


class OamConsistencyError(RuntimeError):
    """Internal consistency violation (asymmetric spectrum)."""


@dataclass(frozen=True)
class LgIndex:
    """Azimuthal (signed) and radial (non-negative) mode indices."""

    l: int
    p: int

    def __post_init__(self):
        if self.p < 0:
            raise ParameterError(f"radial index p must be >= 0, got {self.p}")


@dataclass(frozen=True)
class OamSpectrum:
    """Normalized conditional azimuthal spectrum over l in [-l_max, l_max]."""

    l_max: int
    probabilities: np.ndarray
    tail_mass: float
    analysis_waist: float
    z: float

    @property
    def ls(self):
        return np.arange(-self.l_max, self.l_max + 1)


def laguerre_poly(p: int, alpha: float, x):
    """Generalized Laguerre polynomial by the stable three-term recurrence.

    Vectorized over x. Orders above the stability bound are refused.
    """
    if p < 0 or p != int(p):
        raise ParameterError(f"order p must be a non-negative integer, got {p!r}")
    if p > LAGUERRE_MAX_ORDER:
        raise ParameterError(
            f"order p={p} beyond stability bound {LAGUERRE_MAX_ORDER}"
        )
    x = np.asarray(x, dtype=float)
    if p == 0:
        return np.ones_like(x)
    prev = np.ones_like(x)
    curr = 1.0 + alpha - x
    for n in range(1, p):
        prev, curr = curr, ((2 * n + 1 + alpha - x) * curr - (n + alpha) * prev) / (
            n + 1.0
        )
    return curr


def _laguerre_table(p_max, alpha, x):
    """All orders 0..p_max at once; shares the recurrence sweep."""
    x = np.asarray(x, dtype=float)
    out = np.empty((p_max + 1,) + x.shape)
    out[0] = 1.0
    if p_max >= 1:
        out[1] = 1.0 + alpha - x
    for n in range(1, p_max):
        out[n + 1] = ((2 * n + 1 + alpha - x) * out[n] - (n + alpha) * out[n - 1]) / (
            n + 1.0
        )
    return out


def lg_mode(index: LgIndex, waist: float, point):
    """Helical mode value at polar point (r, theta), unit L2 norm.

    The radial profile integrates to one against r dr dtheta over the plane.
    """
    if not (waist > 0.0 and math.isfinite(waist)):
        raise ParameterError(f"waist must be positive and finite, got {waist!r}")
    r, theta = point
    r = np.asarray(r, dtype=float)
    theta = np.asarray(theta, dtype=float)
    la = abs(index.l)
    norm = (
        math.sqrt(2.0 / math.pi)
        * math.exp(0.5 * (gammaln(index.p + 1) - gammaln(index.p + la + 1)))
        / waist
    )
    t = 2.0 * r**2 / waist**2
    radial = (
        (math.sqrt(2.0) * r / waist) ** la
        * laguerre_poly(index.p, la, t)
        * np.exp(-(r**2) / waist**2)
    )
    return norm * radial * np.exp(1j * index.l * theta)


def _mobius_angle_grid(n: int, cluster: float, period: float = 2.0 * math.pi):
    """Midpoint trapezoid grid pushed through a Moebius circle map.

    cluster = 1 is the uniform grid; smaller values concentrate nodes near
    zero angle by that factor while preserving periodic spectral accuracy.
    The grid covers one period centered on zero. Suitable for plain
    integration only; a harmonic weight would oscillate wildly in the
    de-clustered region.
    """
    half = 0.5 * period
    tau = -half + period * (np.arange(n) + 0.5) / n
    s = math.pi / period
    angle = np.arctan(cluster * np.tan(s * tau)) / s
    jac = cluster / (np.cos(s * tau) ** 2 + cluster**2 * np.sin(s * tau) ** 2)
    return angle, jac * (period / n)


def _harmonic_angle_panels(l_max: int, concentration: float, scale: int = 1):
    """Graded Gauss-Legendre panels on [0, pi] for the heralding angle.

    The integrand is even with a peak of width ~ 3/sqrt(1+concentration) at
    zero plus slowly varying algebraic tails, and it gets multiplied by
    cos(l A) for l up to l_max. Panel edges grow geometrically from the peak
    width; each panel carries enough nodes for its own length times l_max.
    Weights include the factor 2 for the even reflection onto [-pi, 0].
    """
    width = 3.0 / math.sqrt(1.0 + concentration)
    width = min(max(width, 1e-4), math.pi / 4.0)
    edges = [0.0]
    e = width
    while e < math.pi:
        edges.append(e)
        e *= 3.0
    edges.append(math.pi)
    xs, ws = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        n = scale * (int(0.8 * l_max * (hi - lo)) + 16)
        gx, gw = quadrature.gauss_legendre_nodes(n)
        half = 0.5 * (hi - lo)
        xs.append(0.5 * (hi + lo) + half * gx)
        ws.append(2.0 * half * gw)
    return np.concatenate(xs), np.concatenate(ws)


def _kernel_params(moments: PropagatedMoments):
    w2 = moments.w**2
    s2 = moments.sigma**2
    inv_cp = 0.0 if math.isinf(moments.c_plus) else 1.0 / moments.c_plus**2
    inv_cm = 0.0 if math.isinf(moments.c_minus) else 1.0 / moments.c_minus**2
    rp = 0.0 if math.isinf(moments.r_plus_sq) else 0.5 / moments.r_plus_sq
    rm = 0.0 if math.isinf(moments.r_minus_sq) else 0.5 / moments.r_minus_sq
    return {
        "alpha": 0.5 / w2 + 0.5 / s2,
        "a": 0.5 / s2 - 0.5 / w2,
        "delta": inv_cp - inv_cm,
        "kappa": inv_cp + inv_cm,
        "k_delta": moments.wavenumber * (rp - rm),
    }


def _wedge_radial_grid(moments, n_xi, n_eta):
    """Diagonal-coordinate radial grid with the ridge width resolved.

    xi = (r_s + r_i)/sqrt2 runs over [0, inf); for each xi the cross
    coordinate eta spans the wedge cut [-min(xi, reach), min(xi, reach)]
    with reach = 8 min(w, sigma). The min() kink would wreck Gauss-Legendre
    convergence, so the xi axis is split exactly there: a finite panel where
    the wedge itself truncates eta, then a mapped semi-infinite panel with a
    constant eta reach.
    """
    wide = max(moments.w, moments.sigma)
    narrow = min(moments.w, moments.sigma)
    reach = 8.0 * narrow

    n1 = max(12, n_xi // 2)
    gx1, gw1 = quadrature.gauss_legendre_nodes(n1)
    xi1 = 0.5 * reach * (gx1 + 1.0)
    w_xi1 = 0.5 * reach * gw1

    xi2, w_xi2 = quadrature.axis_nodes(
        quadrature.QuadratureSpec(
            method=quadrature.MAPPED_GAUSS_LEGENDRE, nodes=n_xi, scale=2.5 * wide
        )
    )
    xi2 = xi2 + reach

    xi = np.concatenate([xi1, xi2])
    w_xi = np.concatenate([w_xi1, w_xi2])
    gl_x, gl_w = quadrature.gauss_legendre_nodes(n_eta)
    half = np.minimum(xi, reach)
    eta = half[:, None] * gl_x[None, :]
    w_eta = half[:, None] * gl_w[None, :]
    return xi, w_xi, eta, w_eta


def _raw_oam_coefficients(
    moments, l_max, n_xi, n_eta, a_scale, n_u, u_scale=1, u_width=1.0, chunk=8
):
    """Unnormalized Q(l) for l = 0..l_max by the collapsed reduction.

    Integration variables are the heralding angle difference A and the
    half-sum offset u = (B - A)/2, in which the integrand is pi-periodic and
    concentrates at u = 0 (the Bessel ridge) for every A. A rides graded
    harmonic panels (it carries the cos(l A) weight). The u treatment is
    chosen per radial chunk: a truncated Gauss-Legendre segment when the
    chunk's ridge decay provably confines the integrand (node count tracking
    the phase oscillation budget), else a Moebius trapezoid over the full
    period. u_scale multiplies u node counts and u_width the truncation
    window; the refinement driver uses them to probe both error sources.
    """
    par = _kernel_params(moments)
    alpha, a, delta, kappa, k_delta = (
        par["alpha"],
        par["a"],
        par["delta"],
        par["kappa"],
        par["k_delta"],
    )

    wide = max(moments.w, moments.sigma)
    conc_a = (3.0 * wide) ** 2 * kappa
    ang_a, w_a = _harmonic_angle_panels(l_max, conc_a, a_scale)
    cos_a = np.cos(ang_a)
    cos_lA = np.cos(np.arange(l_max + 1)[:, None] * ang_a[None, :])

    xi, w_xi, eta, w_eta = _wedge_radial_grid(moments, n_xi, n_eta)
    coef_full = abs(a - delta) + abs(delta) + kappa + abs(k_delta)
    decay_coef = max(abs(a - delta) - abs(delta), 0.0) + max(kappa - abs(delta), 0.0)

    g_of_a = np.zeros(len(ang_a))
    for start in range(0, len(xi), chunk):
        sl = slice(start, min(start + chunk, len(xi)))
        x = (xi[sl, None] + eta[sl]) / math.sqrt(2.0)
        y = (xi[sl, None] - eta[sl]) / math.sqrt(2.0)
        xy = x * y
        r2 = x**2 + y**2

        # all u structure (ridge, coupling valley, phase oscillation) scales
        # with the chunk's product of radii; grid the half-sum angle per chunk
        xy_min = float(np.min(xy))
        xy_max = float(np.max(xy))
        conc_t = xy_min * decay_coef
        if conc_t * (1.0 - math.cos(min(13.0 / math.sqrt(conc_t + 1e-300), 0.5 * math.pi))) > 80.0:
            half_u = min(13.0 / math.sqrt(conc_t), 0.5 * math.pi) * u_width
            n_t = u_scale * (int(4.0 * half_u * xy_max * abs(k_delta) / math.pi) + 24)
            gx, gw = quadrature.gauss_legendre_nodes(n_t)
            ang_u = half_u * gx
            w_u = 2.0 * half_u * gw
        else:
            cluster = min(1.0, 3.0 / math.sqrt(1.0 + 2.0 * xy_max * coef_full))
            n_m = u_scale * n_u
            cluster = max(cluster, 10.0 / n_m)
            ang_u, w_u = _mobius_angle_grid(n_m, cluster, period=math.pi)
            w_u = 2.0 * w_u  # dB = 2 du

        A2 = ang_a[:, None]
        U2 = ang_u[None, :]
        p_ang = (a - delta) * np.cos(U2) + delta * np.cos(A2 + U2)
        q2 = p_ang**2 - (k_delta * np.sin(U2)) ** 2
        root = np.sqrt(np.abs(q2))
        positive = q2 >= 0.0
        cos_b = np.cos(A2 + 2.0 * U2)

        base = (
            (-alpha * r2)[..., None, None]
            - kappa * x[..., None, None] ** 2 * (1.0 - cos_a)[:, None]
            - kappa * y[..., None, None] ** 2 * (1.0 - cos_b)
        )
        arg = 2.0 * xy[..., None, None] * root
        vals = np.empty_like(arg)
        pos = np.broadcast_to(positive, arg.shape)
        vals[pos] = np.exp(base[pos] + arg[pos]) * i0e(arg[pos])
        neg = ~pos
        vals[neg] = np.exp(base[neg]) * j0(arg[neg])
        # contract u, then the wedge measure, leaving the A profile
        profile = vals @ w_u
        measure = 0.5 * (xi[sl, None] ** 2 - eta[sl] ** 2) * w_eta[sl] * w_xi[sl, None]
        g_of_a += np.einsum("ce,cea->a", measure, profile)
    return cos_lA @ (g_of_a * w_a)


def _converged_coefficients(
    moments, l_max, n_xi, n_eta, a_scale, n_u, tol, max_doublings
):
    """Raw coefficients with radial and angular refinement control.

    The radial error is probed with incommensurate Gauss-Legendre orders
    (cheaper than doubling and just as honest for smooth integrands); the two
    angular grids refine independently, doubling whichever moves the
    coefficient vector most.
    """
    q = _raw_oam_coefficients(moments, l_max, n_xi, n_eta, a_scale, n_u)
    for level in range(max_doublings + 1):
        probe = _raw_oam_coefficients(
            moments, l_max, n_xi + 16, n_eta + 8, a_scale, n_u
        )
        drift = np.max(np.abs(probe - q)) / max(probe[0], 1e-300)
        q = probe
        if drift < 10.0 * tol:
            break
        if level == max_doublings:
            raise quadrature.QuadratureError(
                "radial grid for the OAM spectrum did not converge", best_value=q
            )
        n_xi, n_eta = 2 * n_xi, 2 * n_eta
        q = _raw_oam_coefficients(moments, l_max, n_xi, n_eta, a_scale, n_u)
    n_xi, n_eta = n_xi + 16, n_eta + 8

    for level in range(max_doublings + 1):
        probe_a = _raw_oam_coefficients(moments, l_max, n_xi, n_eta, 2 * a_scale, n_u)
        probe_u = _raw_oam_coefficients(moments, l_max, n_xi, n_eta, a_scale, 2 * n_u)
        scale = max(q[0], 1e-300)
        drift_a = np.max(np.abs(probe_a - q)) / scale
        drift_u = np.max(np.abs(probe_u - q)) / scale
        if max(drift_a, drift_u) < tol:
            return q
        if level == max_doublings:
            break
        if drift_a >= drift_u:
            a_scale, q = 2 * a_scale, probe_a
        else:
            n_u, q = 2 * n_u, probe_u
    raise quadrature.QuadratureError(
        "angular grid for the OAM spectrum did not converge", best_value=q
    )


def conditional_oam_distribution(
    moments: PropagatedMoments,
    setup: PhysicalSetup,
    l_max: int = 15,
    analysis_waist: float | None = None,
    n_xi: int = 48,
    n_eta: int = 36,
    a_scale: int = 1,
    n_u: int = 64,
    conv_tol: float = 1e-8,
    max_doublings: int = 3,
    check_convergence: bool = True,
) -> OamSpectrum:
    """Conditional azimuthal spectrum P(l | 0; z) on the truncated index range.

    With check_convergence the radial and angular grids refine until the
    coefficient vector is stable to conv_tol of the total weight; without it
    a single evaluation at the given grid sizes is used (for sweeps that have
    already validated those sizes at sample points). The tail beyond l_max is
    estimated from the geometric decay of the last computed coefficients and
    folded into the normalization; a tail above 1% raises OamTruncationError
    instead of returning a biased spectrum.
    """
    if l_max < 1:
        raise ParameterError(f"l_max must be >= 1, got {l_max}")
    if analysis_waist is None:
        analysis_waist = setup.collimated_diff_waist
    if not (analysis_waist > 0.0 and math.isfinite(analysis_waist)):
        raise ParameterError(f"analysis_waist must be positive, got {analysis_waist!r}")

    if check_convergence:
        q = _converged_coefficients(
            moments, l_max, n_xi, n_eta, a_scale, n_u, conv_tol, max_doublings
        )
    else:
        q = _raw_oam_coefficients(moments, l_max, n_xi, n_eta, a_scale, n_u)

    total_raw = q[0] + 2.0 * np.sum(q[1:])
    if q[0] <= 0.0 or total_raw <= 0.0:
        raise OamConsistencyError("non-positive spectrum weight")
    floor = 1e-12 * q[0]
    if np.any(q < -floor):
        raise OamConsistencyError("significantly negative spectrum coefficient")
    q = np.maximum(q, 0.0)

    # geometric tail from the decay of the last three coefficients
    tail_raw = 0.0
    if l_max >= 2 and q[l_max] > floor and q[l_max - 2] > 0.0:
        ratio = math.sqrt(q[l_max] / q[l_max - 2])
        if ratio >= 1.0:
            raise OamTruncationError(
                "spectrum is not decaying at l_max; enlarge l_max",
                tail_mass=None,
                suggested_l_max=2 * l_max,
            )
        tail_raw = 2.0 * q[l_max] * ratio / (1.0 - ratio)

    total = total_raw + tail_raw
    tail_mass = tail_raw / total
    if tail_mass > 0.01:
        raise OamTruncationError(
            f"estimated tail mass {tail_mass:.3e} exceeds 1%; enlarge l_max",
            tail_mass=tail_mass,
            suggested_l_max=2 * l_max,
        )
    probabilities = np.concatenate([q[::-1], q[1:]]) / total
    return OamSpectrum(
        l_max=l_max,
        probabilities=probabilities,
        tail_mass=tail_mass,
        analysis_waist=float(analysis_waist),
        z=moments.z,
    )


def conditional_oam_uncertainty(spectrum: OamSpectrum) -> float:
    """Standard deviation of the azimuthal index, in units of hbar.

    The spectrum mean must vanish (the construction is symmetric in l); a
    mean beyond 1e-6 signals an internal error rather than physics.
    """
    ls = spectrum.ls
    weight = float(np.sum(spectrum.probabilities))
    mean = float(np.sum(ls * spectrum.probabilities)) / weight
    if abs(mean) > 1e-6:
        raise OamConsistencyError(f"asymmetric spectrum: mean = {mean:.3e}")
    var = float(np.sum((ls - mean) ** 2 * spectrum.probabilities)) / weight
    return math.sqrt(var)
