"""Brute-force Lindblad master equation for a few spins in a truncated cavity.

Test-only reference for the cumulant equations.  The Hilbert space is
``spin_1 x ... x spin_N x Fock(0..n_cut)``, at most 2^3 * 11 = 88 states,
and the Liouvillian is a dense matrix acting on column-stacked density
matrices, ``vec(A rho B) = (B^T kron A) vec(rho)``.

Model (frame rotating at the cavity frequency, 2*pi applied to Hz inputs)::

    H = sum_k [delta/2 sigma_z^k + g (sigma_+^k a + sigma_-^k a^dag)]
    L = 2 kappa (nbar+1) D[a] + 2 kappa nbar D[a^dag]
        + sum_k gamma1 (nbar+1) D[sigma_-^k] + gamma1 nbar D[sigma_+^k]
        + v D[sigma_+^k] + gamma2/2 (sigma_z^k rho sigma_z^k - rho)

with ``D[L] rho = L rho L^dag - {L^dag L, rho}/2``.  The pump is an upward
incoherent process with positive rate.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce

import numpy as np
from scipy.linalg import expm

MAX_SPINS = 3
MAX_CUTOFF = 10
MAX_NBAR = 0.5
LEAK_LIMIT = 1e-6


class TruncationError(RuntimeError):
    """Population reached the top Fock level; raise n_cut."""


class DensityMatrixError(RuntimeError):
    """Hermiticity, trace or positivity was lost."""


_SP = np.array([[0.0, 0.0], [1.0, 0.0]])  # sigma_+ in basis (ground, excited)
_SM = _SP.T.copy()
_SZ = np.diag([-1.0, 1.0])
_I2 = np.eye(2)


def _embed(ops):
    return reduce(np.kron, ops)


@dataclass(frozen=True)
class Operators:
    """Operators on the full space for ``spin_count`` spins and ``n_cut``."""

    spin_count: int
    n_cut: int

    @property
    def dim(self):
        return 2 ** self.spin_count * (self.n_cut + 1)

    def spin(self, op, k):
        ops = [_I2] * self.spin_count + [np.eye(self.n_cut + 1)]
        ops[k] = op
        return _embed(ops)

    def sigma_plus(self, k):
        return self.spin(_SP, k)

    def sigma_minus(self, k):
        return self.spin(_SM, k)

    def sigma_z(self, k):
        return self.spin(_SZ, k)

    @property
    def a(self):
        lower = np.diag(np.sqrt(np.arange(1, self.n_cut + 1)), 1)
        return _embed([_I2] * self.spin_count + [lower])

    @property
    def number(self):
        return _embed([_I2] * self.spin_count + [np.diag(np.arange(self.n_cut + 1.0))])

    @property
    def top_projector(self):
        top = np.zeros((self.n_cut + 1, self.n_cut + 1))
        top[-1, -1] = 1.0
        return _embed([_I2] * self.spin_count + [top])


def _check_scope(params, n_cut):
    if not (1 <= params.spin_count <= MAX_SPINS) or params.spin_count != int(params.spin_count):
        raise ValueError(f"oracle supports 1..{MAX_SPINS} spins, got {params.spin_count}")
    if not (1 <= n_cut <= MAX_CUTOFF):
        raise ValueError(f"n_cut must lie in 1..{MAX_CUTOFF}")
    if params.nbar_cavity > MAX_NBAR:
        raise ValueError(f"thermal occupation {params.nbar_cavity:.3g} too large for a truncated cavity")


def hamiltonian(params, n_cut):
    ops = Operators(int(params.spin_count), n_cut)
    a = ops.a
    delta = 2 * math.pi * params.detuning
    g = 2 * math.pi * params.coupling
    h = np.zeros((ops.dim, ops.dim), dtype=complex)
    for k in range(ops.spin_count):
        sp = ops.sigma_plus(k)
        h += 0.5 * delta * ops.sigma_z(k) + g * (sp @ a + sp.T @ a.T)
    return h


def _collapse(params, n_cut):
    """List of (rate, operator) pairs; operators are real."""
    ops = Operators(int(params.spin_count), n_cut)
    nc, ns = params.nbar_cavity, params.nbar_spin
    out = [(2 * params.kappa * (nc + 1), ops.a), (2 * params.kappa * nc, ops.a.T)]
    for k in range(ops.spin_count):
        sp, sm = ops.sigma_plus(k), ops.sigma_minus(k)
        out += [(params.gamma1 * (ns + 1), sm), (params.gamma1 * ns + params.pump, sp),
                # gamma2/2 (sz rho sz - rho) == gamma2/2 * 2 D[sz] / 2
                (0.5 * params.gamma2, ops.sigma_z(k))]
    return [(r, op) for r, op in out if r > 0]


def lindblad_rhs(rho, params, n_cut):
    """d rho / dt in s^-1 for a dense density matrix ``rho``."""
    _check_scope(params, n_cut)
    h = hamiltonian(params, n_cut)
    out = -1j * (h @ rho - rho @ h)
    for rate, L in _collapse(params, n_cut):
        LdL = L.T @ L
        out += rate * (L @ rho @ L.T - 0.5 * (LdL @ rho + rho @ LdL))
    return out


def liouvillian(params, n_cut):
    """Dense superoperator acting on column-stacked density matrices."""
    _check_scope(params, n_cut)
    h = hamiltonian(params, n_cut)
    eye = np.eye(h.shape[0])
    sup = -1j * (np.kron(eye, h) - np.kron(h.T, eye))
    for rate, L in _collapse(params, n_cut):
        LdL = L.T @ L
        sup += rate * (np.kron(L, L) - 0.5 * (np.kron(eye, LdL) + np.kron(LdL.T, eye)))
    return sup


def product_state(spin_count, inversion, n_cut, *, photons=0.0, fock=None):
    """Uncorrelated spins of equal ``inversion`` times a cavity state.

    The cavity is thermal with mean ``photons`` (renormalised after
    truncation) unless ``fock`` selects a number state.
    """
    spin = np.diag([(1 - inversion) / 2, (1 + inversion) / 2])
    if fock is not None:
        cav = np.zeros(n_cut + 1)
        cav[fock] = 1.0
    elif photons == 0:
        cav = np.zeros(n_cut + 1)
        cav[0] = 1.0
    else:
        q = photons / (1 + photons)
        cav = q ** np.arange(n_cut + 1)
        cav /= cav.sum()
    return _embed([spin] * spin_count + [np.diag(cav)]).astype(complex)


def check_density(rho, where=""):
    """Assert Hermiticity (1e-12), unit trace (1e-10) and positivity (-1e-9)."""
    herm = np.max(np.abs(rho - rho.conj().T))
    if herm > 1e-12:
        raise DensityMatrixError(f"{where}: Hermiticity error {herm:.3g}")
    tr = np.trace(rho).real
    if abs(tr - 1) > 1e-10:
        raise DensityMatrixError(f"{where}: trace {tr!r}")
    lo = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0]
    if lo < -1e-9:
        raise DensityMatrixError(f"{where}: eigenvalue {lo:.3g}")


@dataclass(frozen=True)
class OracleResult:
    """Observables sampled on ``times``.

    ``per_spin_inversion`` has one column per spin; ``inversion`` is their
    mean.  ``coherence`` is <sigma_- a^dag> for spin 0 and ``pair`` is
    <sigma_+^0 sigma_-^1> (zero for a single spin).
    """

    times: np.ndarray
    inversion: np.ndarray
    per_spin_inversion: np.ndarray
    photon_number: np.ndarray
    coherence: np.ndarray
    pair: np.ndarray
    top_population: np.ndarray


def evolve(rho0, params, n_cut, times):
    """Propagate ``rho0`` with the exact Liouvillian and sample observables.

    Raises
    ------
    TruncationError
        When the top Fock level holds more than 1e-6 population.
    DensityMatrixError
        When a sampled state is not a valid density matrix.
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or np.any(np.diff(times) < 0) or times[0] < 0:
        raise ValueError("times must be nondecreasing and nonnegative")
    sup = liouvillian(params, n_cut)
    ops = Operators(int(params.spin_count), n_cut)
    dim = ops.dim
    obs_z = [ops.sigma_z(k) for k in range(ops.spin_count)]
    num, top = ops.number, ops.top_projector
    coh = ops.sigma_minus(0) @ ops.a.T
    pair = ops.sigma_plus(0) @ ops.sigma_minus(1) if ops.spin_count > 1 else None

    vec = np.asarray(rho0, dtype=complex).reshape(-1, order="F")
    cache = {}
    rows = []
    t_prev = 0.0
    for t in times:
        dt = float(t - t_prev)
        if dt > 0:
            key = round(dt, 15)
            if key not in cache:
                cache[key] = expm(sup * dt)
            vec = cache[key] @ vec
        t_prev = t
        rho = vec.reshape(dim, dim, order="F")
        check_density(rho, f"t={t:.6g}")
        leak = np.trace(top @ rho).real
        if leak > LEAK_LIMIT:
            raise TruncationError(f"top Fock level population {leak:.3g} at t={t:.6g}; raise n_cut")
        rows.append(([np.trace(z @ rho).real for z in obs_z], np.trace(num @ rho).real,
                     np.trace(coh @ rho), 0j if pair is None else np.trace(pair @ rho), leak))
    per_spin = np.array([r[0] for r in rows])
    return OracleResult(times=times, inversion=per_spin.mean(axis=1), per_spin_inversion=per_spin,
                        photon_number=np.array([r[1] for r in rows]),
                        coherence=np.array([r[2] for r in rows]),
                        pair=np.array([r[3] for r in rows]),
                        top_population=np.array([r[4] for r in rows]))
