"""Second-order cumulant dynamics of a thermal spin ensemble in a lossy cavity.

Four expectation values are tracked in the frame rotating at the cavity
frequency:

* ``s = <sigma_z>`` (single-spin inversion),
* ``n = <a^dag a>``,
* ``c = <sigma_- a^dag>`` (complex),
* ``e = <sigma_+^j sigma_-^k>`` for j != k (pair correlation).

With interaction ``g (sigma_+ a + sigma_- a^dag)`` the equations are (rates in
s^-1, coherent terms carry 2*pi)::

    ds/dt = -(gamma1 + v)(2 nbar_s + 1) s + (v - gamma1) - 4 (2 pi g) Im c
    dn/dt = -2 kappa (n - nbar_c) + 2 (2 pi g) N Im c
    dc/dt = -(i delta + Gamma_c) c + i (2 pi g) [(s + 1)/2 + s n + (N - 1) e]
    de/dt = 2 (2 pi g) s Im c - (gamma1 + v) e

with ``delta = 2 pi (nu_0 - nu_c)`` and
``Gamma_c = kappa + (gamma1 (2 nbar_s + 1) + v)/2 + gamma2``.

Large-N grouping
----------------
The integrator works on ``c' = sqrt(N) c`` and ``e' = N e`` with the
collective rate ``G = 2 pi g sqrt(N)``.  Then ``g N Im c = G Im c'``,
``g (N - 1) e = G (1 - 1/N) e'`` and the back-action on ``s`` is
``(4 G / N) Im c'``.  No product is formed that grows like N, so N up to
1e20 and beyond stays well inside double range.  Time is measured internally
in units of 1/kappa (or the largest rate when kappa = 0).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import exprb
from .exprb import StepSizeUnderflow
from .io import fingerprint, write_csv
from .params import SystemParams

__all__ = ["CumulantState", "Trajectory", "InvariantViolation", "StepSizeUnderflow",
           "rhs", "integrate", "steady_state", "thermal_state", "TRAJECTORY_COLUMNS"]

INVARIANT_TOL = 1e-9
TRAJECTORY_COLUMNS = ("time_s", "sigma_z", "photon_number", "re_coherence",
                      "im_coherence", "spin_excitation")


class InvariantViolation(RuntimeError):
    """A physical bound on the cumulant state was broken during integration."""


@dataclass(frozen=True)
class CumulantState:
    """The four tracked expectation values (coherence is complex)."""

    inversion: float
    photon_number: float
    coherence: complex = 0j
    spin_excitation: float = 0.0

    def as_tuple(self):
        c = complex(self.coherence)
        return (float(self.inversion), float(self.photon_number), c.real, c.imag,
                float(self.spin_excitation))


def thermal_state(params):
    """Unpolarised spins with the cavity in thermal equilibrium."""
    return CumulantState(0.0, params.nbar_cavity, 0j, 0.0)


@dataclass(frozen=True)
class _Model:
    """Rates and scalings resolved from SystemParams, in s^-1."""

    nbar_s: float
    nbar_c: float
    kappa: float
    relax: float  # gamma1 + v
    drive: float  # v - gamma1
    gamma_c: float
    delta: float
    G: float  # 2 pi g sqrt(N)
    back: float  # 4 * 2 pi g / sqrt(N)
    frac: float  # 1 - 1/N
    sqrt_n: float
    n: float

    @classmethod
    def of(cls, p):
        nbar_s, nbar_c = p.nbar_spin, p.nbar_cavity
        w = 2 * math.pi * p.coupling
        sqrt_n = math.sqrt(p.spin_count)
        return cls(nbar_s=nbar_s, nbar_c=nbar_c, kappa=p.kappa, relax=p.gamma1 + p.pump,
                   drive=p.pump - p.gamma1,
                   gamma_c=p.kappa + 0.5 * (p.gamma1 * (2 * nbar_s + 1) + p.pump) + p.gamma2,
                   delta=2 * math.pi * p.detuning, G=w * sqrt_n, back=4 * w / sqrt_n,
                   frac=1.0 - 1.0 / p.spin_count, sqrt_n=sqrt_n, n=float(p.spin_count))

    def to_scaled(self, state):
        s, n, cr, ci, e = state.as_tuple()
        return np.array([s, n, cr * self.sqrt_n, ci * self.sqrt_n, e * self.n])

    def from_scaled(self, y):
        y = np.asarray(y, dtype=float)
        return y[..., 0], y[..., 1], (y[..., 2] + 1j * y[..., 3]) / self.sqrt_n, y[..., 4] / self.n

    def field(self, y, unit=1.0):
        s, n, cr, ci, e = y
        G, gc, d = self.G, self.gamma_c, self.delta
        out = np.array([
            -self.back * ci - self.relax * (2 * self.nbar_s + 1) * s + self.drive,
            2 * G * ci - 2 * self.kappa * (n - self.nbar_c),
            -gc * cr + d * ci,
            -gc * ci - d * cr + G * (0.5 * (s + 1) + s * n + self.frac * e),
            2 * G * s * ci - self.relax * e,
        ])
        return out * unit

    def jacobian(self, y, unit=1.0):
        s, n, cr, ci, e = y
        G = self.G
        J = np.zeros((5, 5))
        J[0, 0] = -self.relax * (2 * self.nbar_s + 1)
        J[0, 3] = -self.back
        J[1, 1] = -2 * self.kappa
        J[1, 3] = 2 * G
        J[2, 2] = -self.gamma_c
        J[2, 3] = self.delta
        J[3, 0] = G * (0.5 + n)
        J[3, 1] = G * s
        J[3, 2] = -self.delta
        J[3, 3] = -self.gamma_c
        J[3, 4] = G * self.frac
        J[4, 0] = 2 * G * ci
        J[4, 3] = 2 * G * s
        J[4, 4] = -self.relax
        return J * unit

    def time_unit(self):
        """Seconds per internal time unit."""
        if self.kappa > 0:
            return 1.0 / self.kappa
        rate = max(self.relax, self.gamma_c, abs(self.delta), self.G)
        return 1.0 / rate if rate > 0 else 1.0


def rhs(state, params):
    """Time derivative of ``state`` in s^-1, returned as a CumulantState."""
    m = _Model.of(params)
    dy = m.field(m.to_scaled(state))
    ds, dn, dc, de = m.from_scaled(dy)
    return CumulantState(float(ds), float(dn), complex(dc), float(de))


@dataclass(frozen=True)
class Trajectory:
    """Sampled cumulant trajectory.

    Attributes
    ----------
    times : ndarray
        Sample times in seconds, starting at 0.
    inversion, photon_number, spin_excitation : ndarray
    coherence : ndarray of complex
    params_snapshot : SystemParams
    stats : dict
        Integrator counters (accepted/rejected steps, smallest step).
    """

    times: np.ndarray
    inversion: np.ndarray
    photon_number: np.ndarray
    coherence: np.ndarray
    spin_excitation: np.ndarray
    params_snapshot: SystemParams
    stats: dict

    def __len__(self):
        return self.times.size

    @property
    def states(self):
        return [CumulantState(float(s), float(n), complex(c), float(e)) for s, n, c, e in
                zip(self.inversion, self.photon_number, self.coherence, self.spin_excitation)]

    @property
    def final(self):
        return CumulantState(float(self.inversion[-1]), float(self.photon_number[-1]),
                             complex(self.coherence[-1]), float(self.spin_excitation[-1]))

    def rows(self):
        return zip(self.times, self.inversion, self.photon_number, self.coherence.real,
                   self.coherence.imag, self.spin_excitation)

    def to_csv(self, path, extra_header=None):
        header = {"kind": "trajectory", "params": self.params_snapshot,
                  "fingerprint": fingerprint(self.params_snapshot)}
        header.update(extra_header or {})
        return write_csv(path, header, TRAJECTORY_COLUMNS, self.rows())


def _sample_grid(t_end, sampling):
    if np.isscalar(sampling):
        count = int(sampling)
        if count < 2:
            raise ValueError("sampling needs at least 2 points")
        return np.linspace(0.0, t_end, count)
    grid = np.asarray(sampling, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("sampling grid must be a nonempty 1-d array")
    if np.any(np.diff(grid) <= 0) or grid[0] < 0 or grid[-1] > t_end:
        raise ValueError("sampling grid must be strictly increasing within [0, t_end]")
    return grid if grid[0] == 0 else np.concatenate(([0.0], grid))


def _checker(m, unit):
    n_tol = INVARIANT_TOL * (m.nbar_c + 1.0)

    def check(t, y):
        s, n, cr, ci, e_scaled = y
        e = e_scaled / m.n
        if not np.all(np.isfinite(y)):
            raise InvariantViolation(f"non-finite state at t={t * unit:.6g} s: {y}")
        if abs(s) > 1.0 + INVARIANT_TOL:
            raise InvariantViolation(f"inversion {s!r} outside [-1, 1] at t={t * unit:.6g} s")
        if n < -n_tol:
            raise InvariantViolation(f"photon number {n!r} negative at t={t * unit:.6g} s")
        if abs(e) > 1.0 + INVARIANT_TOL:
            raise InvariantViolation(f"spin pair correlation {e!r} outside [-1, 1] at t={t * unit:.6g} s")
    return check


def integrate(initial, params, t_end, sampling=1001, *, rtol=1e-8, atol=1e-10, method="exprb32"):
    """Integrate the cumulant equations from ``initial`` to ``t_end`` seconds.

    Parameters
    ----------
    initial : CumulantState
    params : SystemParams
    t_end : float
        Final time in seconds, > 0.
    sampling : int or array_like
        Number of equally spaced samples on [0, t_end], or explicit sample
        times (0 is prepended if absent).
    rtol, atol : float
        Relative and absolute tolerances.  ``atol`` applies per component of
        the internal state; the photon number's is multiplied by nbar + 1.
    method : {"exprb32", "radau"}
        ``radau`` uses scipy's implicit Radau IIA and is practical only for
        moderate N; it serves as a cross-check.

    Returns
    -------
    Trajectory

    Raises
    ------
    StepSizeUnderflow
        With the failure time (in internal units) attached.
    InvariantViolation
        If inversion, photon number or pair correlation leave their bounds.
    """
    if not (t_end > 0 and math.isfinite(t_end)):
        raise ValueError("t_end must be positive and finite")
    grid = _sample_grid(t_end, sampling)
    m = _Model.of(params)
    unit = m.time_unit()
    y0 = m.to_scaled(initial)
    scale = np.array([1.0, m.nbar_c + 1.0, 1.0, 1.0, 1.0])
    check = _checker(m, unit)
    check(0.0, y0)

    def f(y):
        return m.field(y, unit)

    def jac(y):
        return m.jacobian(y, unit)

    if method == "exprb32":
        try:
            ys, st = exprb.integrate(f, jac, y0, t_end / unit, grid / unit, rtol=rtol,
                                     atol=atol, scale=scale, check=check)
        except StepSizeUnderflow as exc:
            raise StepSizeUnderflow(exc.time * unit, exc.step * unit) from None
        stats = {"method": method, "accepted": st.accepted, "rejected": st.rejected,
                 "min_step_s": st.min_step * unit}
    elif method == "radau":
        from scipy.integrate import solve_ivp
        sol = solve_ivp(lambda t, y: f(y), (0.0, t_end / unit), y0, method="Radau",
                        t_eval=grid / unit, rtol=rtol, atol=atol * scale, jac=lambda t, y: jac(y))
        if not sol.success:
            raise RuntimeError(f"Radau failed: {sol.message}")
        ys = sol.y.T
        for t, y in zip(sol.t, ys):
            check(t, y)
        stats = {"method": method, "accepted": int(sol.nfev), "rejected": 0, "min_step_s": float("nan")}
    else:
        raise ValueError(f"unknown method {method!r}")

    s, n, c, e = m.from_scaled(ys)
    # the first sample is the supplied state, untouched by scaling round trips
    s[0], n[0], e[0] = initial.inversion, initial.photon_number, initial.spin_excitation
    c = np.array(c, dtype=complex)
    c[0] = complex(initial.coherence)
    return Trajectory(grid, s, n, c, e, params, stats)


def steady_state(params, initial_inversion=None, initial_photons=None):
    """Closed-form steady state (inversion, photon number).

    ``initial_photons`` defaults to the cavity's thermal occupation.  When
    ``initial_inversion`` is None the inversion entering the photon-number
    formula is the steady-state inversion itself, the self-consistent
    choice under which the pair is a fixed point of the dynamics; pass 0.0
    for an unpolarised start.

    Raises
    ------
    ZeroDivisionError
        When v = gamma1 = 0, or when kappa = 0 and the photon number is not
        determined.
    """
    relax = params.gamma1 + params.pump
    if relax == 0:
        raise ZeroDivisionError("steady state undefined for v = gamma1 = 0")
    nbar_s, nbar_c = params.nbar_spin, params.nbar_cavity
    n_in = nbar_c if initial_photons is None else initial_photons
    balance = (params.pump - params.gamma1) / relax
    excess = n_in - nbar_c
    if excess != 0 and params.kappa == 0:
        raise ZeroDivisionError("kappa = 0 with a non-thermal initial photon number")
    inversion = ((params.pump - params.gamma1) - (4 * params.kappa / params.spin_count) * excess) \
        / (relax * (2 * nbar_s + 1))
    if initial_inversion is None:
        # the bracket reduces to -(4 kappa / N) excess / relax, so n_ss = n_in;
        # written out to avoid an O(1) cancellation multiplied by N
        return inversion, n_in
    bracket = initial_inversion * (1 + 2 * nbar_s) - balance
    if bracket == 0:
        return inversion, nbar_c
    if params.kappa == 0:
        raise ZeroDivisionError("kappa = 0: photon number diverges")
    photons = nbar_c - params.spin_count * relax / (4 * params.kappa) * bracket
    return inversion, photons
