"""Interference of the dressed state with an uncoupled scattering mode.

The scattered mode is a unit-peak complex Lorentzian amplitude::

    t_s(nu) = A (i Gamma_s/2) / ((nu_s - nu) + i Gamma_s/2),   Gamma_s = nu_s / Q_s

and the composite signal is ``|t_c + t_ens + exp(-i phi) t_s|^2``.  Detuning
always moves ``nu_s`` relative to a fixed dressed-state frequency.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import interpolate, optimize

from . import spectrum as sp
from .spectrum import ComplexSpectrum


class GridResolutionError(ValueError):
    """The frequency grid does not resolve the narrowest linewidth."""

    def __init__(self, message, suggested_points):
        super().__init__(f"{message}; suggested grid: {suggested_points} points")
        self.suggested_points = suggested_points


class DivergentLinewidthError(ArithmeticError):
    """Gamma_p + exp(-i phi) Gamma_s vanishes (phi = pi with Gamma_p = Gamma_s)."""


def wrap_phase(phi):
    """Map an angle to (-pi, pi]."""
    out = math.remainder(phi, 2 * math.pi)
    return math.pi if out == -math.pi else out


def phase_mismatch(radius, index, wavelength_dressed, wavelength_scattered):
    """Relative phase (rad) of two first-order radial disk modes, wrapped to (-pi, pi]."""
    for name, value in (("radius", radius), ("index", index),
                        ("wavelength_dressed", wavelength_dressed),
                        ("wavelength_scattered", wavelength_scattered)):
        if not value > 0:
            raise ValueError(f"{name} must be positive")
    k = 2 * math.pi * radius * index
    return wrap_phase(0.5 * math.pi * (math.cos(k / wavelength_dressed) - math.cos(k / wavelength_scattered)))


@dataclass(frozen=True)
class ScatterParams:
    """Uncoupled scattering mode.

    Parameters
    ----------
    quality : float
        Q_s of the scattering mode.
    frequency : float, optional
        Absolute nu_s in Hz.  When omitted the mode sits at the upper
        dressed state plus ``detuning``.
    detuning : float
        Offset of nu_s from the dressed state (Hz), used when ``frequency``
        is None.
    phase : float
        Relative phase phi in rad, stored wrapped to (-pi, pi].
    amplitude : float
        Peak amplitude A of t_s.
    """

    quality: float
    frequency: float | None = None
    detuning: float = 0.0
    phase: float = math.pi
    amplitude: float = 1.0

    def __post_init__(self):
        if not (self.quality > 0 and math.isfinite(self.quality)):
            raise ValueError("scatter quality must be positive")
        if self.frequency is not None and not self.frequency > 0:
            raise ValueError("scatter frequency must be positive")
        if not (math.isfinite(self.amplitude) and self.amplitude >= 0):
            raise ValueError("scatter amplitude must be finite and nonnegative")
        object.__setattr__(self, "phase", wrap_phase(float(self.phase)))

    @classmethod
    def from_geometry(cls, quality, radius, index, wavelength_dressed, wavelength_scattered, **kw):
        return cls(quality, phase=phase_mismatch(radius, index, wavelength_dressed, wavelength_scattered), **kw)

    def resolve_frequency(self, params):
        if self.frequency is not None:
            return self.frequency
        return dressed_frequency(params) + self.detuning

    def linewidth(self, params):
        return self.resolve_frequency(params) / self.quality

    def replace(self, **changes):
        import dataclasses
        return dataclasses.replace(self, **changes)


def dressed_frequency(params):
    """Upper dressed-state frequency, or the cavity frequency when Omega = 0."""
    if params.collective == 0:
        return params.cavity_frequency
    return sp.polariton_frequencies(params)[1]


def mit_linewidth(gamma_p, gamma_s, phi):
    """|Gamma_p Gamma_s / (Gamma_p + exp(-i phi) Gamma_s)| in Hz."""
    if not (gamma_p > 0 and gamma_s > 0):
        raise ValueError("linewidths must be positive")
    den = abs(gamma_p + complex(math.cos(phi), -math.sin(phi)) * gamma_s)
    if den < 1e-12 * max(gamma_p, gamma_s):
        raise DivergentLinewidthError(
            f"Gamma_p + exp(-i phi) Gamma_s vanishes (Gamma_p={gamma_p!r}, Gamma_s={gamma_s!r}, phi={phi!r})")
    return gamma_p * gamma_s / den


def scattered_amplitude(params, scatter, nu):
    nu = np.asarray(nu, dtype=float)
    nu_s = scatter.resolve_frequency(params)
    half = 0.5 * nu_s / scatter.quality
    return scatter.amplitude * (1j * half) / ((nu_s - nu) + 1j * half)


def features(params, scatter):
    """[(centre, width)] of the dressed line and of the scattering mode.

    Each width is the narrower of the line's own width and Gamma_MIT, which
    is where the transparency window forms.
    """
    f0 = dressed_frequency(params)
    gs = scatter.linewidth(params)
    gp = sp.protected_linewidth(params) if params.collective > 0 else params.kappa + params.gamma1
    try:
        gm = mit_linewidth(gp, gs, scatter.phase)
    except DivergentLinewidthError:
        gm = math.inf
    return [(f0, min(gp, gm)), (scatter.resolve_frequency(params), min(gs, gm))]


def narrowest_width(params, scatter):
    """min(Gamma_p, Gamma_s, Gamma_MIT); Gamma_MIT is skipped when divergent."""
    return min(w for _, w in features(params, scatter))


def check_resolution(params, scatter, nu, per_width=10):
    """Require ``per_width`` samples per linewidth within 3 widths of each feature."""
    nu = np.asarray(nu, dtype=float)
    for centre, width in features(params, scatter):
        if not nu[0] <= centre <= nu[-1]:
            continue
        lo = max(int(np.searchsorted(nu, centre - 3 * width)) - 1, 0)
        hi = min(int(np.searchsorted(nu, centre + 3 * width)) + 1, nu.size)
        step = float(np.max(np.diff(nu[lo:hi]))) if hi - lo > 1 else float(nu[-1] - nu[0])
        if step * per_width > width:
            raise GridResolutionError(
                f"grid step {step:.4g} Hz near {centre:.10g} Hz does not give {per_width} points "
                f"per linewidth {width:.4g} Hz",
                int(math.ceil((nu[-1] - nu[0]) * per_width / width)) + 1)


def fano_spectrum(params, scatter, nu, *, check=True):
    """Composite amplitude t_c + t_ens + exp(-i phi) t_s on ``nu``."""
    if check:
        check_resolution(params, scatter, nu)
    return ComplexSpectrum(nu, fano_amplitude(params, scatter, nu), "fano")


def fano_amplitude(params, scatter, nu):
    ts = scattered_amplitude(params, scatter, nu)
    return sp.odmr_amplitude(params, nu) + np.exp(-1j * scatter.phase) * ts


MAX_GRID_POINTS = 400_001


def fano_grid(params, scatter, points=4001, half_widths=12.0, per_width=20):
    """Grid covering the dressed state and nu_s, refined around each feature.

    A uniform base grid spans ``half_widths`` of the broader line beyond
    both centres with at least ``points`` samples and ``per_width`` samples
    per broad linewidth.  Each feature then gets a patch of ``per_width``
    samples per its own width over +/- ``half_widths`` widths, so a narrow
    scattering mode next to a broad dressed state stays cheap.
    """
    feats = features(params, scatter)
    f0, fs = feats[0][0], feats[1][0]
    gp = sp.protected_linewidth(params) if params.collective > 0 else params.kappa + params.gamma1
    wide = max(gp, scatter.linewidth(params))
    lo = min(f0, fs) - half_widths * wide
    hi = max(f0, fs) + half_widths * wide
    need = int(math.ceil((hi - lo) * per_width / wide)) + 1
    if need > MAX_GRID_POINTS:
        raise GridResolutionError("dressed state and scattering mode too far apart for the grid", need)
    parts = [np.linspace(lo, hi, max(int(points), need))]
    patch = int(2 * half_widths * per_width) + 1
    for centre, width in feats:
        parts.append(np.linspace(centre - half_widths * width, centre + half_widths * width, patch))
    nu = np.unique(np.concatenate(parts))
    nu = nu[(nu >= lo) & (nu <= hi)]
    # drop near-duplicates that would make finite differences ill-conditioned
    keep = np.concatenate(([True], np.diff(nu) > 1e-9 * (hi - lo)))
    return nu[keep]


# slopes

def max_slope(spectrum, window=None):
    """(max |dI/dnu|, frequency) with coarse scan plus bounded refinement.

    The coarse scan uses central differences on the grid; the maximum is then
    refined by a bounded golden-section search on the derivative of a cubic
    spline through the samples.
    """
    f, y = spectrum.frequencies, spectrum.intensity
    if window is not None:
        keep = (f >= window[0]) & (f <= window[1])
        f, y = f[keep], y[keep]
    if f.size < 5:
        raise GridResolutionError("too few points for a slope", 5)
    d = np.gradient(y, f)
    k = int(np.argmax(np.abs(d)))
    spline = interpolate.CubicSpline(f, y)
    dspline = spline.derivative()
    lo, hi = f[max(k - 1, 0)], f[min(k + 1, f.size - 1)]
    res = optimize.minimize_scalar(lambda x: -abs(float(dspline(x))), bounds=(lo, hi),
                                   method="bounded", options={"xatol": 1e-9 * (hi - lo)})
    best = max((abs(float(dspline(x))), float(x)) for x in (lo, hi, res.x))
    return best


def slope_ratio(params, scatter, points=4001):
    """Max slope of the Fano signal over that of the unscattered dressed state.

    Returns (ratio, frequency of the steepest Fano point).
    """
    nu = fano_grid(params, scatter, points)
    fano = fano_spectrum(params, scatter, nu)
    base = sp.odmr_intensity(params, nu)
    s_f, at = max_slope(fano)
    s_0, _ = max_slope(base)
    return s_f / s_0, at


@dataclass(frozen=True)
class SlopeTable:
    detuning: np.ndarray
    ratio: np.ndarray
    argmax_frequency: np.ndarray

    def rows(self):
        return zip(self.detuning, self.ratio, self.argmax_frequency)


DEFAULT_DETUNING_STEP = 0.025  # in units of Gamma_p
DEFAULT_DETUNING_SPAN = 5.0


def default_detunings(params, span=DEFAULT_DETUNING_SPAN, step=DEFAULT_DETUNING_STEP):
    """Detunings (Hz) on +/- ``span`` Gamma_p in steps of ``step`` Gamma_p.

    The ratio has a cusp at zero detuning where it is smallest; the fine
    step keeps adjacent samples within 20% of each other there.
    """
    n = int(round(span / step))
    return np.arange(-n, n + 1) * step * sp.protected_linewidth(params)


def slope_enhancement(params, scatter, detunings=None, points=4001):
    """Slope ratio at each detuning of nu_s from the dressed state."""
    if detunings is None:
        detunings = default_detunings(params)
    f0 = dressed_frequency(params)
    ratios, where = [], []
    for d in detunings:
        s = scatter.replace(frequency=f0 + float(d))
        r, at = slope_ratio(params, s, points)
        ratios.append(r)
        where.append(at)
    return SlopeTable(np.asarray(detunings, dtype=float), np.array(ratios), np.array(where))


def asymmetry(spectrum):
    """Skewness of the intensity profile about its maximum.

    Uses the intensity above the grid minimum as weights and the peak
    frequency as origin: sum(w x^3) / sum(w x^2)^(3/2) with ``x`` measured
    from the maximum.  Positive when the tail extends to higher frequency.
    """
    f, y = spectrum.frequencies, spectrum.intensity
    w = y - y.min()
    x = f - f[int(np.argmax(y))]
    m2 = float(np.sum(w * x ** 2))
    if m2 == 0:
        return 0.0
    return float(np.sum(w * x ** 3)) / m2 ** 1.5 * math.sqrt(float(np.sum(w)))


def dip_depth(params, scatter, nu):
    """Transparency-dip depth at the dressed-state frequency.

    Returns (depth, unscattered peak, composite value, has_flanks) where
    depth = (I_unscattered - I_fano) / I_unscattered evaluated at the
    dressed state, and ``has_flanks`` tells whether that point is a local
    minimum with a higher maximum on each side.
    """
    f0 = dressed_frequency(params)
    i_unsc = abs(sp.odmr_amplitude(params, f0)) ** 2
    i_fano = abs(fano_amplitude(params, scatter, f0)) ** 2
    spec = fano_spectrum(params, scatter, nu)
    y = spec.intensity
    k = int(np.argmin(np.abs(spec.frequencies - f0)))
    left, right = y[:k], y[k + 1:]
    flanks = bool(left.size and right.size and left.max() > y[k] and right.max() > y[k]
                  and y[k] <= y[k - 1] and y[k] <= y[k + 1])
    return (i_unsc - i_fano) / i_unsc, i_unsc, i_fano, flanks
