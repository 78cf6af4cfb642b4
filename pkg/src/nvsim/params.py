"""Physical constants, unit conventions and parameter-level derived quantities.

Unit convention
---------------
Every user-facing frequency and rate is an ordinary frequency in Hz.  Factors
of 2*pi are applied internally only where an energy (h*nu) or a coherent phase
evolution is needed.  Cavity decay follows ``kappa = cavity_frequency / quality``.

The canonical symbol table (physics symbol -> field -> unit) is available from
:func:`symbol_table` and is rendered into ``docs/symbols.md`` by
``scripts/write_symbol_table.py``.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

import scipy.constants as sc

from .densities import SpectralDensity

CM3 = 1e-6  # m^3 per cm^3
PER_CM3 = 1e6  # m^-3 per cm^-3

THERMAL_ARGUMENTS = ("physical", "literal")


@dataclass(frozen=True)
class PhysicalConstants:
    """SI constants (CODATA 2018) plus the NV gyromagnetic ratio in Hz/T."""

    planck: float = sc.h
    planck_reduced: float = sc.hbar
    boltzmann: float = sc.k
    vacuum_permeability: float = 1.25663706212e-6  # CODATA 2018
    speed_of_light: float = sc.c
    gyromagnetic_ratio: float = 2.8e10  # 2.8 MHz/G

    def __post_init__(self):
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"constant {f.name} must be finite and positive, got {value!r}")


DEFAULT_CONSTANTS = PhysicalConstants()


def _check_finite(**values):
    for name, value in values.items():
        if not math.isfinite(value):
            raise ValueError(f"{name} must be finite, got {value!r}")


def thermal_occupation(frequency, temperature, constants=DEFAULT_CONSTANTS):
    """Bose-Einstein occupation of a mode at ``frequency`` (Hz) and ``temperature`` (K).

    Exactly zero at T = 0.
    """
    _check_finite(frequency=frequency, temperature=temperature)
    if frequency <= 0:
        raise ValueError("frequency must be positive")
    if temperature < 0:
        raise ValueError("temperature must be nonnegative")
    if temperature == 0:
        return 0.0
    x = constants.planck * frequency / (constants.boltzmann * temperature)
    if x > 700.0:  # expm1 overflows; the occupation is below 1e-304
        return math.exp(-x)
    return 1.0 / math.expm1(x)


def single_spin_coupling(cavity_frequency, mode_volume, constants=DEFAULT_CONSTANTS):
    """Single-spin magnetic coupling g (Hz) for a mode of volume ``mode_volume`` (m^3).

    g = gamma_e * sqrt(hbar * omega_c * mu_0 / V_eff) with omega_c = 2*pi*cavity_frequency.
    """
    _check_finite(cavity_frequency=cavity_frequency, mode_volume=mode_volume)
    if cavity_frequency <= 0 or mode_volume <= 0:
        raise ValueError("cavity_frequency and mode_volume must be positive")
    energy = constants.planck_reduced * 2 * math.pi * cavity_frequency
    return constants.gyromagnetic_ratio * math.sqrt(energy * constants.vacuum_permeability / mode_volume)


def mode_volume_for_coupling(cavity_frequency, coupling, constants=DEFAULT_CONSTANTS):
    """Inverse of :func:`single_spin_coupling`."""
    if coupling <= 0:
        raise ValueError("coupling must be positive")
    energy = constants.planck_reduced * 2 * math.pi * cavity_frequency
    return energy * constants.vacuum_permeability * (constants.gyromagnetic_ratio / coupling) ** 2


def thermal_argument(spin_frequency, temperature, convention="physical", constants=DEFAULT_CONSTANTS):
    """Argument of the tanh polarisation law.

    ``physical``: h*nu_0 / (2 k_B T), the two-level thermal polarisation.
    ``literal``: h*nu_0 / (4 pi k_B T), the printed omega_0 / (4 pi k_B T) with omega_0 = 2 pi nu_0.
    """
    if convention not in THERMAL_ARGUMENTS:
        raise ValueError(f"thermal argument must be one of {THERMAL_ARGUMENTS}, got {convention!r}")
    if temperature == 0:
        return math.inf
    energy = constants.planck * spin_frequency
    if convention == "physical":
        return energy / (2 * constants.boltzmann * temperature)
    return energy / (4 * math.pi * constants.boltzmann * temperature)


def thermal_polarization(spin_frequency, temperature, convention="physical", constants=DEFAULT_CONSTANTS):
    """tanh of :func:`thermal_argument`; exactly 1 at T = 0."""
    if temperature == 0:
        return 1.0
    return math.tanh(thermal_argument(spin_frequency, temperature, convention, constants))


def collective_coupling(coupling, spin_count, spin_frequency, temperature,
                        convention="physical", constants=DEFAULT_CONSTANTS):
    """Temperature-dependent collective coupling Omega_{T,N} = g sqrt(N tanh(theta)) in Hz."""
    _check_finite(coupling=coupling, spin_count=spin_count,
                  spin_frequency=spin_frequency, temperature=temperature)
    if coupling <= 0:
        raise ValueError("coupling must be positive")
    if spin_count < 1:
        raise ValueError("spin_count must be >= 1")
    if spin_frequency <= 0:
        raise ValueError("spin_frequency must be positive")
    if temperature < 0:
        raise ValueError("temperature must be nonnegative")
    if temperature == 0:
        return coupling * math.sqrt(spin_count)
    pol = thermal_polarization(spin_frequency, temperature, convention, constants)
    return coupling * math.sqrt(spin_count * pol)


def dipole_dipole_scale(constants=DEFAULT_CONSTANTS):
    """NV-NV dipolar coupling scale gamma_e^2 mu_0 h / 2 in Hz m^3 (about 3.3e-19)."""
    return constants.gyromagnetic_ratio ** 2 * constants.vacuum_permeability * constants.planck / 2


@dataclass(frozen=True)
class SystemParams:
    """Resolved parameter set for one simulation scenario.

    Build through :meth:`build` when some quantities are derived (kappa from
    quality, g from mode volume, N from density).  The direct constructor takes
    already-resolved values.
    """

    cavity_frequency: float
    spin_frequency: float
    kappa: float
    gamma1: float
    gamma2: float
    pump: float
    coupling: float
    spin_count: float
    temperature: float = 300.0
    distribution_kind: str = "gaussian"
    mixing: float = 0.2
    mode_volume: float | None = None
    thermal_argument: str = "physical"
    constants: PhysicalConstants = field(default=DEFAULT_CONSTANTS)

    def __post_init__(self):
        for name in ("cavity_frequency", "spin_frequency", "kappa", "gamma1", "gamma2",
                     "pump", "coupling", "spin_count", "temperature", "mixing"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value!r}")
        if self.cavity_frequency <= 0 or self.spin_frequency <= 0:
            raise ValueError("frequencies must be positive")
        for name in ("kappa", "gamma1", "pump", "coupling"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        if self.gamma2 <= 0:
            raise ValueError("gamma2 (inhomogeneous width) must be positive")
        if self.spin_count < 1:
            raise ValueError("spin_count must be >= 1")
        if self.temperature < 0:
            raise ValueError("temperature must be nonnegative")
        if self.mode_volume is not None and self.mode_volume <= 0:
            raise ValueError("mode_volume must be positive")
        if self.thermal_argument not in THERMAL_ARGUMENTS:
            raise ValueError(f"thermal_argument must be one of {THERMAL_ARGUMENTS}")
        # validates kind and mixing
        self.distribution

    @classmethod
    def build(cls, cavity_frequency, *, spin_frequency=None, quality=None, kappa=None,
              gamma1=0.0, gamma2, pump=0.0, coupling=None, mode_volume=None,
              spin_count=None, spin_density=None, temperature=300.0,
              distribution_kind="gaussian", mixing=0.2, thermal_argument="physical",
              constants=DEFAULT_CONSTANTS):
        """Resolve the mutually exclusive input pairs and construct."""
        if (quality is None) == (kappa is None):
            raise ValueError("exactly one of quality, kappa must be given")
        if (coupling is None) == (mode_volume is None):
            raise ValueError("exactly one of coupling, mode_volume must be given")
        if (spin_count is None) == (spin_density is None):
            raise ValueError("exactly one of spin_count, spin_density must be given")
        if quality is not None:
            if quality <= 0:
                raise ValueError("quality must be positive")
            kappa = cavity_frequency / quality
        if mode_volume is not None:
            coupling = single_spin_coupling(cavity_frequency, mode_volume, constants)
        if spin_density is not None:
            if mode_volume is None:
                raise ValueError("spin_density requires mode_volume")
            spin_count = spin_density * mode_volume
        return cls(cavity_frequency=cavity_frequency,
                   spin_frequency=cavity_frequency if spin_frequency is None else spin_frequency,
                   kappa=kappa, gamma1=gamma1, gamma2=gamma2, pump=pump, coupling=coupling,
                   spin_count=spin_count, temperature=temperature,
                   distribution_kind=distribution_kind, mixing=mixing, mode_volume=mode_volume,
                   thermal_argument=thermal_argument, constants=constants)

    # derived quantities

    @property
    def quality(self):
        return self.cavity_frequency / self.kappa

    @property
    def inhomogeneous_width(self):
        return self.gamma2

    @property
    def detuning(self):
        """Spin-cavity detuning nu_0 - nu_c in Hz."""
        return self.spin_frequency - self.cavity_frequency

    @property
    def spin_density(self):
        if self.mode_volume is None:
            return None
        return self.spin_count / self.mode_volume

    @property
    def distribution(self):
        return SpectralDensity(self.distribution_kind, fwhm=self.gamma2,
                               center=self.spin_frequency, mixing=self.mixing)

    @property
    def nbar_cavity(self):
        return thermal_occupation(self.cavity_frequency, self.temperature, self.constants)

    @property
    def nbar_spin(self):
        return thermal_occupation(self.spin_frequency, self.temperature, self.constants)

    @property
    def collective(self):
        """Omega_{T,N} in Hz."""
        if self.coupling == 0:
            return 0.0
        return collective_coupling(self.coupling, self.spin_count, self.spin_frequency,
                                   self.temperature, self.thermal_argument, self.constants)

    # copies with re-derived fields

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def with_quality(self, quality):
        return self.replace(kappa=self.cavity_frequency / quality)

    def with_spin_density(self, density):
        if self.mode_volume is None:
            raise ValueError("spin density requires a mode volume")
        return self.replace(spin_count=density * self.mode_volume)

    def with_mode_volume(self, volume):
        return self.replace(mode_volume=volume,
                            coupling=single_spin_coupling(self.cavity_frequency, volume, self.constants))

    def to_dict(self):
        out = {}
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            out[f.name] = dataclasses.asdict(value) if f.name == "constants" else value
        return out


def symbol_table():
    """Rows of (symbol, field, unit, note) documenting the parameter mapping."""
    return [
        ("omega_c", "SystemParams.cavity_frequency", "Hz", "ordinary frequency nu_c; 2*pi applied for energies"),
        ("omega_0", "SystemParams.spin_frequency", "Hz", "centre of the spin distribution"),
        ("Q_p", "SystemParams.quality", "1", "derived: cavity_frequency / kappa"),
        ("kappa", "SystemParams.kappa", "Hz", "kappa = nu_c / Q_p; amplitude decay in the cumulant equations"),
        ("gamma_1", "SystemParams.gamma1", "Hz", "longitudinal relaxation rate 1/T1"),
        ("gamma_2 = Delta_en", "SystemParams.gamma2", "Hz", "FWHM of rho(omega); pure dephasing rate in the dynamics"),
        ("v", "SystemParams.pump", "Hz", "incoherent pump rate"),
        ("g", "SystemParams.coupling", "Hz", "single-spin coupling; 2*pi*g enters the coherent dynamics"),
        ("V_eff", "SystemParams.mode_volume", "m^3", "g = gamma_e sqrt(hbar 2 pi nu_c mu_0 / V_eff)"),
        ("N", "SystemParams.spin_count", "1", "N = n_v * V_eff when a density is given"),
        ("n_v", "SystemParams.spin_density", "m^-3", "derived"),
        ("T", "SystemParams.temperature", "K", ""),
        ("theta", "thermal_argument()", "1", "physical: h nu_0/(2 k_B T); literal: h nu_0/(4 pi k_B T)"),
        ("Omega_{T,N}", "SystemParams.collective", "Hz", "g sqrt(N tanh theta)"),
        ("n_bar", "thermal_occupation()", "1", "evaluated at nu_c for cavity terms, nu_0 for spin terms"),
        ("Im(omega~_c)", "dynamics", "Hz", "-kappa"),
        ("Im(omega~_k)", "dynamics", "Hz", "-(gamma_1 (2 n_bar + 1) + v)/2 - gamma_2"),
        ("rho(omega)", "SpectralDensity", "1/Hz", "normalised to unit area, FWHM = Delta_en"),
        ("theta_pV", "SpectralDensity.mixing", "1", "Lorentzian fraction of the pseudo-Voigt"),
        ("Lambda", "lamb_shift()", "1/Hz", "PV integral of rho(w')/(w - w')"),
        ("Gamma_p", "protected_linewidth()", "Hz", "(kappa + gamma_1 + 2 pi Omega^2 rho(Omega))/2"),
        ("Q_s, Gamma_s", "ScatterParams", "1, Hz", "Gamma_s = nu_s / Q_s"),
        ("phi", "ScatterParams.phase", "rad", "wrapped to (-pi, pi]"),
        ("gamma_e", "PhysicalConstants.gyromagnetic_ratio", "Hz/T", "2.8e10 by default"),
        ("zeta", "photon_count()", "1", "eta_det eta_ext N t_m gamma_cyc eta_nvqe"),
        ("P_F", "pf_constant()", "1", "4/(3 sqrt 3) Lorentzian, sqrt(e/(8 ln 2)) Gaussian"),
    ]
