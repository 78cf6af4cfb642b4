"""Steady-state transmission of a cavity coupled to an inhomogeneous spin ensemble.

Conventions
-----------
Frequencies are in Hz and ``dw = nu_c - nu`` is the probe detuning from the
cavity.  The ensemble enters through the density ``rho`` (1/Hz) and its
principal-value transform ``Lambda`` (1/Hz)::

    t_c(nu) = (i kappa/2) / (dw + Omega^2 Lambda(nu) + i (kappa + gamma1 + 2 pi Omega^2 rho(nu))/2)

The real part of the denominator vanishes at the dressed-state (polariton)
frequencies, close to ``nu_0 +/- Omega`` when ``Omega >> Delta_en``; there the
intensity ``|t_c|^2`` has FWHM ``Gamma_p`` and the bare cavity (Omega = 0) has
FWHM ``kappa + gamma1``.

The ensemble contribution to the ODMR signal,
``t_ens = (dw + i kappa) Lambda sqrt(t_c) / Omega^2``, is not dimensionless;
it is evaluated with every frequency measured in units of ``Delta_en``
(equivalently, multiplied by ``Delta_en^2``).  ``sqrt`` is the principal
root, which is continuous here because ``Re t_c > 0`` for every probe
frequency; a continuity guard still checks each generated grid.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .densities import density_eval, lamb_shift, lamb_shift_closed
from .io import fingerprint, write_csv

SPECTRUM_KINDS = ("cavity", "ensemble", "odmr", "fano")
SPECTRUM_COLUMNS = ("freq_hz", "re_amp", "im_amp", "intensity")
MIN_POINTS = 4001


class BranchWarning(RuntimeWarning):
    """The square-root branch had to be flipped to keep it continuous."""


class UnresolvedPeakError(ValueError):
    """A requested peak is missing or sampled too coarsely."""


@dataclass(frozen=True)
class ComplexSpectrum:
    """Complex amplitude on a strictly increasing frequency grid (Hz)."""

    frequencies: np.ndarray
    amplitude: np.ndarray
    kind: str
    intensity: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        f = np.asarray(self.frequencies, dtype=float)
        a = np.asarray(self.amplitude, dtype=complex)
        if f.ndim != 1 or f.shape != a.shape:
            raise ValueError("frequencies and amplitude must be 1-d arrays of equal length")
        if f.size < 2 or np.any(np.diff(f) <= 0):
            raise ValueError("frequency grid must be strictly increasing")
        if self.kind not in SPECTRUM_KINDS:
            raise ValueError(f"unknown spectrum kind {self.kind!r}")
        object.__setattr__(self, "frequencies", f)
        object.__setattr__(self, "amplitude", a)
        object.__setattr__(self, "intensity", a.real ** 2 + a.imag ** 2)

    def rows(self):
        return zip(self.frequencies, self.amplitude.real, self.amplitude.imag, self.intensity)

    def to_csv(self, path, params=None, extra_header=None):
        header = {"kind": f"spectrum/{self.kind}"}
        if params is not None:
            header.update(params=params, fingerprint=fingerprint(params))
        header.update(extra_header or {})
        return write_csv(path, header, SPECTRUM_COLUMNS, self.rows())


# grids

def default_grid(params, points=MIN_POINTS, span=None):
    """Uniform grid on nu_0 +/- max(5 Delta_en, 3 Omega) (or +/- ``span``)."""
    if points < 3:
        raise ValueError("need at least 3 grid points")
    half = span if span is not None else max(5 * params.gamma2, 3 * params.collective)
    return np.linspace(params.spin_frequency - half, params.spin_frequency + half, int(points))


def peak_grid(center, width, points=2001, half_widths=10.0):
    """Uniform grid of ``points`` samples on center +/- half_widths * width."""
    return np.linspace(center - half_widths * width, center + half_widths * width, int(points))


# core quantities

def _lambda(params, nu, method):
    d = params.distribution
    if method == "closed":
        return lamb_shift_closed(d, nu)
    if method == "quad":
        return np.array([lamb_shift(d, x) for x in np.atleast_1d(nu)]).reshape(np.shape(nu))
    raise ValueError(f"unknown Lambda method {method!r}")


def transmission_denominator(params, nu, *, lamb="closed"):
    """Complex denominator of t_c (Hz)."""
    nu = np.asarray(nu, dtype=float)
    omega2 = params.collective ** 2
    dw = params.cavity_frequency - nu
    if omega2 == 0:
        return dw + 0.5j * (params.kappa + params.gamma1)
    rho = density_eval(params.distribution, nu)
    lam = _lambda(params, nu, lamb)
    loss = params.kappa + params.gamma1 + 2 * math.pi * omega2 * rho
    return dw + omega2 * lam + 0.5j * loss


def cavity_transmission(params, nu, *, lamb="closed"):
    """t_c at probe frequency (or frequencies) ``nu`` in Hz.

    ``lamb`` selects the Lamb-shift evaluation: ``closed`` (Dawson /
    rational closed forms) or ``quad`` (principal-value quadrature).
    """
    out = 0.5j * params.kappa / transmission_denominator(params, nu, lamb=lamb)
    return complex(out) if np.ndim(out) == 0 else out


def continuous_sqrt(z):
    """Square root along a grid, sign-adjusted to be continuous.

    Starts on the principal branch at the first sample.  Emits
    :class:`BranchWarning` if any flip was needed (a phase jump of more
    than pi in ``z`` between neighbours).
    """
    r = np.sqrt(np.asarray(z, dtype=complex))
    if r.ndim == 0 or r.size < 2:
        return r
    flips = 0
    sign = 1.0
    out = np.empty_like(r)
    out[0] = r[0]
    for k in range(1, r.size):
        cand = sign * r[k]
        if abs(cand - out[k - 1]) > abs(cand + out[k - 1]):
            sign = -sign
            cand = -cand
            flips += 1
        out[k] = cand
    if flips:
        warnings.warn(f"square-root branch flipped {flips} times; refine the grid near the jumps",
                      BranchWarning)
    return out


def ensemble_transmission(params, nu, t_c=None, *, lamb="closed"):
    """t_ens in units of Delta_en (see module notes)."""
    nu = np.asarray(nu, dtype=float)
    omega = params.collective
    if omega == 0:
        raise ValueError("ensemble term requires Omega > 0")
    if t_c is None:
        t_c = cavity_transmission(params, nu, lamb=lamb)
    unit = params.gamma2
    dw = (params.cavity_frequency - nu) / unit
    lam = _lambda(params, nu, lamb) * unit
    return (dw + 1j * params.kappa / unit) * lam * continuous_sqrt(t_c) / (omega / unit) ** 2


def _check_passive(t_c):
    worst = float(np.max(np.abs(t_c)))
    if worst > 1.0 + 1e-12:
        raise ArithmeticError(f"|t_c| = {worst!r} exceeds 1")


def cavity_spectrum(params, nu, *, lamb="closed"):
    t_c = np.asarray(cavity_transmission(params, nu, lamb=lamb))
    _check_passive(t_c)
    return ComplexSpectrum(nu, t_c, "cavity")


def odmr_amplitude(params, nu, *, lamb="closed"):
    """t_c + t_ens at ``nu`` (the ensemble term is absent when Omega = 0)."""
    t_c = np.asarray(cavity_transmission(params, nu, lamb=lamb))
    _check_passive(t_c)
    if params.collective == 0:
        return t_c
    return t_c + ensemble_transmission(params, nu, t_c, lamb=lamb)


def odmr_intensity(params, nu, *, lamb="closed"):
    """ComplexSpectrum of t_c + t_ens; intensity is I_ODMR."""
    return ComplexSpectrum(nu, odmr_amplitude(params, nu, lamb=lamb), "odmr")


def protected_linewidth(params):
    """Gamma_p = (kappa + gamma1 + 2 pi Omega^2 rho(nu_0 + Omega)) / 2 in Hz."""
    omega = params.collective
    if omega <= 0:
        raise ValueError("protected linewidth requires Omega > 0")
    rho = density_eval(params.distribution, params.spin_frequency + omega)
    return 0.5 * (params.kappa + params.gamma1 + 2 * math.pi * omega ** 2 * rho)


def polariton_frequencies(params, *, lamb="closed"):
    """(lower, upper) outermost roots of Re(denominator of t_c), in Hz."""
    omega = params.collective
    if omega <= 0:
        raise ValueError("polaritons require Omega > 0")

    def re_den(x):
        return float(np.real(transmission_denominator(params, x, lamb=lamb)))

    c = params.spin_frequency
    reach = abs(params.detuning) + 2 * omega + 10 * params.gamma2
    out = []
    for sgn in (-1.0, 1.0):
        # scan inward from far outside until the sign changes
        xs = c + sgn * reach * np.linspace(1.0, 0.0, 4001)
        vals = np.real(transmission_denominator(params, xs, lamb=lamb))
        change = np.nonzero(np.sign(vals[:-1]) != np.sign(vals[1:]))[0]
        if change.size == 0:
            raise UnresolvedPeakError("no polariton root found")
        k = change[0]
        a, b = sorted((xs[k], xs[k + 1]))
        out.append(optimize.brentq(re_den, a, b, xtol=1e-9, rtol=1e-15))
    return tuple(out)


# numeric linewidth

def local_maxima(y, rel_height=0.1):
    """Indices of interior local maxima at least ``rel_height`` of the global max."""
    y = np.asarray(y)
    idx = np.nonzero((y[1:-1] > y[:-2]) & (y[1:-1] >= y[2:]))[0] + 1
    return idx[y[idx] >= rel_height * y.max()]


def _crossing(f, y, k, step, half):
    j = k
    while 0 <= j + step < y.size:
        nxt = j + step
        if y[nxt] < half:
            # linear interpolation between j and nxt
            return f[j] + (f[nxt] - f[j]) * (y[j] - half) / (y[j] - y[nxt])
        if y[nxt] > y[j] and y[j] < y[k]:
            break  # climbing into another peak before reaching half maximum
        j = nxt
    raise UnresolvedPeakError("half-maximum crossing not found; peak overlaps its neighbour or runs off the grid")


def linewidth_numeric(spectrum, which_peak="upper", rel_height=0.1):
    """FWHM (Hz) of the upper or lower significant peak of ``spectrum.intensity``.

    Peaks lower than ``rel_height`` times the global maximum are ignored.
    Half-maximum crossings are linearly interpolated.

    Raises
    ------
    UnresolvedPeakError
        If no peak is found, the peak spans fewer than 3 grid points above
        half maximum, or a crossing is missing.
    """
    if which_peak not in ("upper", "lower"):
        raise ValueError("which_peak must be 'upper' or 'lower'")
    f, y = spectrum.frequencies, spectrum.intensity
    peaks = local_maxima(y, rel_height)
    if peaks.size == 0:
        raise UnresolvedPeakError("no resolvable peak")
    k = int(peaks[-1] if which_peak == "upper" else peaks[0])
    half = 0.5 * y[k]
    lo, hi = _crossing(f, y, k, -1, half), _crossing(f, y, k, +1, half)
    inside = np.count_nonzero((f > lo) & (f < hi))
    if inside < 3:
        raise UnresolvedPeakError(f"peak sampled by only {inside} points above half maximum")
    return hi - lo


def peak_frequency(spectrum, which_peak="upper", rel_height=0.1):
    """Grid frequency of the upper/lower significant peak, refined by a parabola."""
    f, y = spectrum.frequencies, spectrum.intensity
    peaks = local_maxima(y, rel_height)
    if peaks.size == 0:
        raise UnresolvedPeakError("no resolvable peak")
    k = int(peaks[-1] if which_peak == "upper" else peaks[0])
    y0, y1, y2 = y[k - 1], y[k], y[k + 1]
    denom = y0 - 2 * y1 + y2
    shift = 0.0 if denom == 0 else 0.5 * (y0 - y2) / denom
    return f[k] + shift * (f[k + 1] - f[k])


def detuning_map(params, detunings, nu, *, lamb="closed"):
    """ODMR intensity over (cavity detuning, probe frequency).

    ``detunings`` are nu_c - nu_0 in Hz, realised by moving the cavity at a
    fixed spin centre.  Returns an array of shape (len(detunings), len(nu)).
    """
    out = np.empty((len(detunings), len(nu)))
    for i, d in enumerate(detunings):
        p = params.replace(cavity_frequency=params.spin_frequency + d)
        out[i] = odmr_intensity(p, nu, lamb=lamb).intensity
    return out
