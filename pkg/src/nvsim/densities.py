"""Spin-frequency distributions and their principal-value (Lamb shift) transforms.

All densities are normalised to unit area and parameterised by their true
full width at half maximum.  Principal-value integrals are evaluated in
units of the FWHM.
"""
from __future__ import annotations

import functools
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, special

KINDS = ("gaussian", "lorentzian", "pseudo_voigt")

_LN2 = math.log(2.0)
_BREAKS = (-200.0, -50.0, -10.0, -3.0, -1.0, -0.25, 0.0, 0.25, 1.0, 3.0, 10.0, 50.0, 200.0)


class QuadratureWarning(RuntimeWarning):
    """Principal-value quadrature did not reach its error target."""


def _gaussian_unit(u):
    # unit FWHM, unit area
    return 2.0 * math.sqrt(_LN2 / math.pi) * np.exp(-4.0 * _LN2 * np.square(u))


def _lorentzian_unit(u):
    return 0.5 / (math.pi * (0.25 + np.square(u)))


def printed_gaussian(x, width):
    """The Gaussian exactly as printed, sqrt(ln 2)/w * exp(-(x/w)^2).

    Its area is sqrt(pi ln 2) and its FWHM is 2 sqrt(ln 2) w; kept only to
    document the renormalisation applied in :class:`SpectralDensity`.
    """
    return math.sqrt(_LN2) / width * np.exp(-np.square(np.asarray(x) / width))


@functools.lru_cache(maxsize=64)
def _unit_area(kind, mixing):
    f = _unit_shape(kind, mixing)
    total = 0.0
    edges = (-np.inf,) + _BREAKS + (np.inf,)
    for a, b in zip(edges[:-1], edges[1:]):
        val, _ = integrate.quad(f, a, b, epsabs=1e-15, epsrel=1e-13, limit=200)
        total += val
    return total


def _unit_shape(kind, mixing):
    if kind == "gaussian":
        return _gaussian_unit
    if kind == "lorentzian":
        return _lorentzian_unit
    return lambda u: mixing * _lorentzian_unit(u) + (1.0 - mixing) * _gaussian_unit(u)


@dataclass(frozen=True)
class SpectralDensity:
    """Normalised distribution rho(omega) of spin transition frequencies.

    Parameters
    ----------
    kind : {"gaussian", "lorentzian", "pseudo_voigt"}
    fwhm : float
        Full width at half maximum Delta_en in Hz.
    center : float
        Distribution centre omega_0 in Hz.
    mixing : float
        Lorentzian fraction of the pseudo-Voigt profile, in [0, 1]. Ignored
        for the pure shapes.

    Notes
    -----
    On construction the area is checked by quadrature; ``norm_factor`` holds
    the reciprocal of the measured area and is applied on evaluation.
    """

    kind: str
    fwhm: float
    center: float = 0.0
    mixing: float = 0.0
    norm_factor: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown distribution kind {self.kind!r}; expected one of {KINDS}")
        if not (math.isfinite(self.fwhm) and self.fwhm > 0):
            raise ValueError("fwhm must be finite and positive")
        if not (0.0 <= self.mixing <= 1.0):
            raise ValueError("mixing must lie in [0, 1]")
        mixing = self.mixing if self.kind == "pseudo_voigt" else 0.0
        area = _unit_area(self.kind, mixing)
        if abs(area - 1.0) > 1e-6:
            raise ArithmeticError(f"{self.kind} density integrates to {area}, not 1")
        object.__setattr__(self, "norm_factor", 1.0 / area)

    @property
    def lorentzian_fraction(self):
        if self.kind == "lorentzian":
            return 1.0
        if self.kind == "gaussian":
            return 0.0
        return self.mixing

    def unit(self, u):
        """Density in units of the FWHM: rho(center + u*fwhm) * fwhm."""
        w = self.lorentzian_fraction
        out = 0.0
        if w > 0:
            out = out + w * _lorentzian_unit(u)
        if w < 1:
            out = out + (1.0 - w) * _gaussian_unit(u)
        return self.norm_factor * out

    def __call__(self, omega):
        return density_eval(self, omega)


def density_eval(d, omega):
    """rho(omega) in 1/Hz; accepts scalars or arrays."""
    u = (np.asarray(omega, dtype=float) - d.center) / d.fwhm
    out = d.unit(u) / d.fwhm
    return float(out) if np.ndim(out) == 0 else out


# principal-value transforms

def lorentzian_hilbert(detuning, fwhm):
    """Closed form of PV int rho_L(w')/(w - w') dw' at w - w_0 = ``detuning``."""
    x = np.asarray(detuning, dtype=float)
    out = x / (np.square(x) + (fwhm / 2.0) ** 2)
    return float(out) if np.ndim(out) == 0 else out


def gaussian_hilbert(detuning, fwhm):
    """Closed form of the Gaussian PV transform via the Dawson function."""
    w = fwhm / (2.0 * math.sqrt(_LN2))
    x = np.asarray(detuning, dtype=float)
    out = 2.0 / w * special.dawsn(x / w)
    return float(out) if np.ndim(out) == 0 else out


def lamb_shift_closed(d, omega):
    """Closed-form Lambda(omega) for any supported density (vectorised)."""
    x = np.asarray(omega, dtype=float) - d.center
    w = d.lorentzian_fraction
    out = 0.0
    if w > 0:
        out = out + w * lorentzian_hilbert(x, d.fwhm)
    if w < 1:
        out = out + (1.0 - w) * gaussian_hilbert(x, d.fwhm)
    out = d.norm_factor * np.asarray(out, dtype=float)
    return float(out) if np.ndim(out) == 0 else out


def _pv_unit(f, u, half_width, epsrel):
    """PV int f(t)/(u - t) dt over the real line, f in FWHM units."""
    quad = functools.partial(integrate.quad, epsabs=1e-15, epsrel=epsrel, limit=400)
    # excluded strip: symmetric pairing makes the integrand regular
    inner, err = quad(lambda t: (f(u - t) - f(u + t)) / t, 0.0, half_width)
    total, error = inner, err
    lo, hi = u - half_width, u + half_width
    points = sorted({p for p in _BREAKS if p <= lo or p >= hi} | {lo, hi})
    kernel = lambda t: f(t) / (u - t)
    segments = [(-np.inf, points[0])]
    segments += [(a, b) for a, b in zip(points[:-1], points[1:]) if not (a == lo and b == hi)]
    segments.append((points[-1], np.inf))
    for a, b in segments:
        val, err = quad(kernel, a, b)
        total += val
        error += err
    return total, error


def lamb_shift(d, omega, *, epsrel=1e-11, strip=0.5):
    """Lambda(omega) = PV int rho(w')/(omega - w') dw' by adaptive quadrature.

    The singular point is enclosed in a symmetric strip of half-width
    ``strip`` (in FWHM units) where the integrand is folded onto its odd
    part; the rest of the line is integrated directly.  A
    :class:`QuadratureWarning` is issued when the estimated error exceeds
    1e-8 relative.
    """
    u = (float(omega) - d.center) / d.fwhm
    value, error = _pv_unit(d.unit, u, strip, epsrel)
    scale = max(abs(value), 1e-4)  # Lambda vanishes at the centre; unit-scale peak is O(1)
    if error > 1e-8 * scale:
        warnings.warn(f"PV quadrature error {error:.3g} exceeds target at u={u:.6g}", QuadratureWarning)
    return value / d.fwhm
