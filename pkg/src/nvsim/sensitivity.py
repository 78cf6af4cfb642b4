"""Shot-noise-limited DC magnetic sensitivity and (Q_p, density) maps.

Two routes to delta_B (T/sqrt(Hz)):

* linewidth route: ``delta_B = P_F Gamma / (gamma_e C sqrt(zeta))`` (``P_F = 1``
  gives the plain linewidth estimate);
* numeric route for an arbitrary normalised lineshape ``I(nu)``:
  ``delta_B = sqrt(I_peak) / (gamma_e sqrt(zeta) max|dI/dnu|)``, i.e. the
  photon count ``beta = zeta I_peak`` sets the shot noise and ``zeta I`` the
  signal.  For a Lorentzian this reproduces the linewidth route with
  ``P_F = 4/(3 sqrt 3)``.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import fano as fn
from . import spectrum as sp
from .io import fingerprint, write_csv, write_json
from .params import CM3, DEFAULT_CONSTANTS

MAP_MODES = ("dressed", "mit", "fano")
MAP_COLUMNS = ("q_p", "density_m3", "delta_b_tesla_sqrthz", "protected", "flagged")


@dataclass(frozen=True)
class PhotonBudget:
    """Detected-photon budget; ``spin_count`` is filled per map cell."""

    detection_efficiency: float = 0.70
    extraction_efficiency: float = 0.50
    spin_count: float = 1.0
    measurement_time: float = 1.0
    cycling_rate: float = 1.3e8
    quantum_efficiency: float = 0.80

    def __post_init__(self):
        for name in ("detection_efficiency", "extraction_efficiency", "quantum_efficiency"):
            value = getattr(self, name)
            if not (0 < value <= 1):
                raise ValueError(f"{name} must lie in (0, 1], got {value!r}")
        for name in ("spin_count", "measurement_time", "cycling_rate"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be positive and finite, got {value!r}")

    def with_spin_count(self, n):
        import dataclasses
        return dataclasses.replace(self, spin_count=n)


def photon_count(budget):
    """zeta = eta_det * eta_ext * N * t_m * gamma_cyc * eta_nvqe."""
    return (budget.detection_efficiency * budget.extraction_efficiency * budget.spin_count
            * budget.measurement_time * budget.cycling_rate * budget.quantum_efficiency)


_PF = {"lorentzian": 4.0 / (3.0 * math.sqrt(3.0)),
       "gaussian": math.sqrt(math.e / (8.0 * math.log(2.0)))}


def pf_constant(kind):
    """FWHM-to-max-slope constant: max|I'| = C I / (FWHM P_F)."""
    try:
        return _PF[kind]
    except KeyError:
        raise ValueError(f"P_F defined for {tuple(_PF)}, not {kind!r}") from None


def sensitivity_from_linewidth(linewidth, contrast, zeta, pf=1.0, constants=DEFAULT_CONSTANTS):
    """pf * Gamma / (gamma_e C sqrt(zeta)) in T/sqrt(Hz)."""
    if not linewidth > 0:
        raise ValueError("linewidth must be positive")
    if not (0 < contrast <= 1):
        raise ValueError("contrast must lie in (0, 1]")
    if not zeta > 0:
        raise ValueError("zeta must be positive")
    return pf * linewidth / (constants.gyromagnetic_ratio * contrast * math.sqrt(zeta))


def sensitivity_numeric(spectrum, zeta, constants=DEFAULT_CONSTANTS, window=None):
    """sqrt(I_peak) / (gamma_e sqrt(zeta) max|dI/dnu|) from a sampled lineshape."""
    if not zeta > 0:
        raise ValueError("zeta must be positive")
    slope, _ = fn.max_slope(spectrum, window)
    if slope <= 0:
        raise ValueError("lineshape has no slope")
    peak = float(spectrum.intensity.max())
    return math.sqrt(peak) / (constants.gyromagnetic_ratio * math.sqrt(zeta) * slope)


def spectral_contrast(spectrum, center, linewidth):
    """(peak - baseline)/peak with the baseline read 10 linewidths from ``center``."""
    f, y = spectrum.frequencies, spectrum.intensity
    peak = float(np.interp(center, f, y))
    probe = center + 10 * linewidth
    if not (f[0] <= probe <= f[-1]):
        raise ValueError("spectrum does not reach 10 linewidths from the peak")
    base = float(np.interp(probe, f, y))
    return (peak - base) / peak


# maps

@dataclass(frozen=True)
class SensitivityMap:
    """delta_B on a (quality, density) grid.

    ``q_axis`` is Q_p for the dressed and MIT modes and Q_s for the Fano
    mode.  ``density_axis`` is in m^-3.  Arrays are indexed [q, density].
    """

    q_axis: np.ndarray
    density_axis: np.ndarray
    delta_b: np.ndarray
    protected: np.ndarray
    flagged: np.ndarray
    mode: str
    params_snapshot: object
    metadata: dict = field(default_factory=dict)
    cell_info: dict = field(default_factory=dict)

    def rows(self):
        for i, q in enumerate(self.q_axis):
            for j, n in enumerate(self.density_axis):
                yield q, n, self.delta_b[i, j], bool(self.protected[i, j]), bool(self.flagged[i, j])

    def header(self):
        return {"kind": f"sensitivity-map/{self.mode}", "params": self.params_snapshot,
                "fingerprint": fingerprint(self.params_snapshot), "metadata": self.metadata}

    def to_csv(self, path, extra_header=None):
        header = self.header()
        header.update(extra_header or {})
        return write_csv(path, header, MAP_COLUMNS, self.rows())

    def sidecar(self, path, extra=None):
        payload = self.header()
        payload["cells"] = self.cell_info
        payload.update(extra or {})
        return write_json(path, payload)


@dataclass(frozen=True)
class MapSettings:
    """Per-mode knobs of :func:`sensitivity_map`.

    Attributes
    ----------
    contrast : float or None
        Fixed contrast C; None derives it from the generated spectrum.
    mit_contrast_factor : float
        Multiplier on C in MIT mode (half contrast on the transparency dip).
    fano_quality : float
        Q_p held fixed in Fano mode.
    fano_detunings : int
        Number of detunings (in units of Gamma_p, spanning +/- 5) searched
        for the steepest Fano slope per cell.
    fano_points : int
        Grid points of each Fano spectrum.
    """

    contrast: float | None = 1.0
    mit_contrast_factor: float = 0.5
    fano_quality: float = 1e5
    fano_detunings: int = 21
    fano_points: int = 2001


def _dressed_contrast(params):
    gp = sp.protected_linewidth(params)
    f0 = fn.dressed_frequency(params)
    grid = sp.peak_grid(f0, gp, 801, half_widths=12.0)
    return spectral_contrast(sp.odmr_intensity(params, grid), f0, gp)


def _cell(base, budget, mode, scatter, settings, q, density, volume):
    """Compute one cell; returns (delta_b, protected, flagged, info)."""
    info = {}
    try:
        if mode == "fano":
            params = base.with_quality(settings.fano_quality).replace(spin_count=density * volume)
        else:
            params = base.with_quality(q).replace(spin_count=density * volume)
        omega = params.collective
        protected = bool(omega >= params.gamma2)
        zeta = photon_count(budget.with_spin_count(params.spin_count))
        gp = sp.protected_linewidth(params)
        info.update(omega_hz=omega, gamma_p_hz=gp, zeta=zeta)
        if mode == "dressed":
            c = settings.contrast if settings.contrast is not None else _dressed_contrast(params)
            info.update(contrast=c)
            return sensitivity_from_linewidth(gp, c, zeta, constants=params.constants), protected, False, info
        if mode == "mit":
            gs = scatter.linewidth(params)
            g_mit = fn.mit_linewidth(gp, gs, scatter.phase)
            c = settings.contrast if settings.contrast is not None else _dressed_contrast(params)
            c *= settings.mit_contrast_factor
            info.update(contrast=c, gamma_s_hz=gs, gamma_mit_hz=g_mit)
            return sensitivity_from_linewidth(g_mit, c, zeta, constants=params.constants), protected, False, info
        # fano: scan detunings, keep the steepest lineshape
        s = scatter.replace(quality=q)
        f0 = fn.dressed_frequency(params)
        best = None
        for d in np.linspace(-5, 5, settings.fano_detunings) * gp:
            cand = s.replace(frequency=f0 + float(d))
            nu = fn.fano_grid(params, cand, settings.fano_points)
            spec = fn.fano_spectrum(params, cand, nu)
            db = sensitivity_numeric(spec, zeta, params.constants)
            if best is None or db < best[0]:
                best = (db, float(d))
        info.update(detuning_hz=best[1])
        return best[0], protected, False, info
    except (ValueError, ArithmeticError) as exc:
        info.update(error=f"{type(exc).__name__}: {exc}")
        return float("nan"), False, True, info


def sensitivity_map(base, budget, mode, q_grid, density_grid, scatter=None, *,
                    settings=MapSettings(), mode_volume=None, threads=1):
    """delta_B over (quality, density).

    Parameters
    ----------
    base : SystemParams
        Provides every rate not on the axes; ``mode_volume`` (default
        ``base.mode_volume`` or 1 cm^3) converts density to spin count.
    budget : PhotonBudget
    mode : {"dressed", "mit", "fano"}
    q_grid, density_grid : array_like
        Strictly increasing axes; density in m^-3.
    scatter : ScatterParams, optional
        Required for ``mit`` and ``fano``.  In MIT mode its quality is Q_s;
        in Fano mode the q axis overrides it.
    threads : int
        Worker threads; results are merged by index.

    Returns
    -------
    SensitivityMap
        Cells that raised are NaN and flagged; the ``protected`` column marks
        Omega_{T,N} >= Delta_en.
    """
    if mode not in MAP_MODES:
        raise ValueError(f"mode must be one of {MAP_MODES}")
    if mode in ("mit", "fano") and scatter is None:
        raise ValueError(f"{mode} mode needs ScatterParams")
    q = np.asarray(q_grid, dtype=float)
    dens = np.asarray(density_grid, dtype=float)
    for name, axis in (("q_grid", q), ("density_grid", dens)):
        if axis.ndim != 1 or axis.size == 0 or np.any(np.diff(axis) <= 0) or np.any(axis <= 0):
            raise ValueError(f"{name} must be a nonempty, strictly increasing, positive axis")
    volume = mode_volume or base.mode_volume or CM3
    jobs = [(i, j) for i in range(q.size) for j in range(dens.size)]

    def work(ij):
        i, j = ij
        return _cell(base, budget, mode, scatter, settings, q[i], dens[j], volume)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, jobs))
    else:
        results = [work(ij) for ij in jobs]
    db = np.empty((q.size, dens.size))
    prot = np.zeros_like(db, dtype=bool)
    flag = np.zeros_like(db, dtype=bool)
    cells = {}
    for (i, j), (value, p, fl, info) in zip(jobs, results):
        db[i, j], prot[i, j], flag[i, j] = value, p, fl
        cells[f"{i},{j}"] = info
    meta = {"mode": mode, "mode_volume_m3": volume, "q_axis": "Q_s" if mode == "fano" else "Q_p",
            "density_to_spin_count": "N = density * mode_volume", "settings": settings,
            "budget": budget, "scatter": scatter}
    return SensitivityMap(q, dens, db, prot, flag, mode, base, meta, cells)
