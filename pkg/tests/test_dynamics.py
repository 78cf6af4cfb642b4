import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from nvsim import dynamics as dyn
from nvsim import oracle
from nvsim.io import read_csv
from nvsim.params import SystemParams, thermal_polarization


def params(**kw):
    base = dict(cavity_frequency=3e9, spin_frequency=3e9, kappa=3e3, gamma1=250.0, gamma2=1e6,
                pump=25.0, coupling=1.0, spin_count=1e10, temperature=300.0)
    base.update(kw)
    return SystemParams(**base)


def test_rhs_hand_values():
    p = params(pump=0.0, temperature=0.0, coupling=0.0, gamma2=1.0)
    d = dyn.rhs(dyn.CumulantState(1.0, 2.0, 0j, 0.0), p)
    assert d.inversion == pytest.approx(-2 * 250.0)
    assert d.photon_number == pytest.approx(-2 * 3e3 * 2.0)
    assert d.coherence == 0 and d.spin_excitation == 0


@given(s=st.floats(-1, 1), photons=st.floats(0, 0.05), n_spins=st.integers(1, 2),
       g=st.floats(10, 1e4), detune=st.floats(-1e4, 1e4), temp=st.floats(0.02, 0.1))
def test_rhs_matches_lindblad_for_product_states(s, photons, n_spins, g, detune, temp):
    # for uncorrelated diagonal states every neglected cumulant vanishes
    p = SystemParams(3e9, 3e9 + detune, 2e3, 250.0, 40.0, 0.0, g, n_spins, temp)
    cut = 10
    rho = oracle.product_state(n_spins, s, cut, photons=photons)
    dr = oracle.lindblad_rhs(rho, p, cut)
    ops = oracle.Operators(n_spins, cut)
    n = np.trace(ops.number @ rho).real
    d = dyn.rhs(dyn.CumulantState(s, n, 0j, 0.0), p)
    ds = np.trace(ops.sigma_z(0) @ dr).real
    dn = np.trace(ops.number @ dr).real
    dc = np.trace(ops.sigma_minus(0) @ ops.a.T @ dr)
    scale = 2 * math.pi * g + 1e3
    assert ds == pytest.approx(d.inversion, abs=1e-9 * scale)
    assert dn == pytest.approx(d.photon_number, abs=1e-7 * scale)
    assert abs(dc - d.coherence) < 1e-6 * scale


def test_thermal_state_is_stationary_without_coupling():
    p = params(coupling=0.0, pump=0.0)
    s_ss, _ = dyn.steady_state(p)
    d = dyn.rhs(dyn.CumulantState(s_ss, p.nbar_cavity), p)
    assert abs(d.inversion) < 1e-12 and abs(d.photon_number) < 1e-9


def test_ground_state_stays_put_at_zero_temperature():
    p = params(temperature=0.0, pump=0.0)
    tr = dyn.integrate(dyn.CumulantState(-1.0, 0.0), p, 1e-2, 11)
    assert np.allclose(tr.inversion, -1.0, atol=1e-12)
    assert np.allclose(tr.photon_number, 0.0, atol=1e-12)


def test_trajectory_reaches_closed_form():
    p = params(temperature=4.0, pump=1.0, spin_count=1e8)
    tr = dyn.integrate(dyn.thermal_state(p), p, 0.12, 5)
    s_ss, n_ss = dyn.steady_state(p)
    assert tr.final.inversion == pytest.approx(s_ss, rel=1e-6)
    assert tr.final.photon_number == pytest.approx(n_ss, rel=1e-3)


def test_tanh_law_in_closed_form():
    for t in (1.0, 4.0, 77.0, 300.0):
        ratio = dyn.steady_state(params(temperature=t))[0] / dyn.steady_state(params(temperature=0.0))[0]
        assert ratio == pytest.approx(thermal_polarization(3e9, t), rel=1e-12)


def test_steady_state_with_explicit_inversion():
    p = params()
    s, n = dyn.steady_state(p, initial_inversion=0.0)
    relax = p.gamma1 + p.pump
    expected = p.nbar_cavity - p.spin_count * relax / (4 * p.kappa) * (-(p.pump - p.gamma1) / relax)
    assert n == pytest.approx(expected)


def test_steady_state_errors():
    with pytest.raises(ZeroDivisionError):
        dyn.steady_state(params(pump=0.0, gamma1=0.0))
    with pytest.raises(ZeroDivisionError):
        dyn.steady_state(params(kappa=0.0), initial_photons=5.0)


def test_radau_agrees_with_default():
    p = params(spin_count=1e6, temperature=10.0)
    a = dyn.integrate(dyn.thermal_state(p), p, 5e-3, 6)
    b = dyn.integrate(dyn.thermal_state(p), p, 5e-3, 6, method="radau", rtol=1e-10, atol=1e-12)
    assert np.allclose(a.inversion, b.inversion, atol=1e-7)
    assert np.allclose(a.photon_number, b.photon_number, rtol=1e-5)


def test_large_ensemble_stays_finite():
    p = params(spin_count=1e20)
    tr = dyn.integrate(dyn.thermal_state(p), p, 2e-5, 3)
    assert np.all(np.isfinite(tr.photon_number))
    assert np.all(np.abs(tr.inversion) <= 1)


def test_sampling_grid_and_first_sample():
    p = params()
    init = dyn.CumulantState(0.1, 5.0, 0.01j, 0.0)
    tr = dyn.integrate(init, p, 1e-3, [2e-4, 1e-3])
    assert tr.times[0] == 0.0 and len(tr) == 3
    assert tr.states[0] == init
    with pytest.raises(ValueError):
        dyn.integrate(init, p, 1e-3, 1)


@given(temp=st.floats(0.5, 400), pump=st.floats(0, 200), log_n=st.floats(3, 11),
       s0=st.floats(-1, 1))
def test_invariants_hold_along_trajectories(temp, pump, log_n, s0):
    p = params(temperature=temp, pump=pump, spin_count=10 ** log_n)
    tr = dyn.integrate(dyn.CumulantState(s0, p.nbar_cavity), p, 2e-3, 21)
    assert np.all(np.abs(tr.inversion) <= 1 + 1e-9)
    assert np.all(tr.photon_number >= -1e-9 * (p.nbar_cavity + 1))
    assert np.all(np.abs(tr.spin_excitation) <= 1 + 1e-9)


def test_invalid_state_raises():
    p = params()
    with pytest.raises(dyn.InvariantViolation):
        dyn.integrate(dyn.CumulantState(1.5, 0.0), p, 1e-4, 3)


def test_trajectory_csv(tmp_path):
    p = params(spin_count=1e6)
    tr = dyn.integrate(dyn.thermal_state(p), p, 1e-3, 5)
    path = tr.to_csv(tmp_path / "t.csv")
    header, cols, data = read_csv(path)
    assert tuple(cols) == dyn.TRAJECTORY_COLUMNS
    assert header["kind"] == "trajectory"
    assert np.allclose(data[:, 1], tr.inversion, rtol=0, atol=0)
