import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from nvsim.params import (CM3, DEFAULT_CONSTANTS, SystemParams, collective_coupling, dipole_dipole_scale,
                          mode_volume_for_coupling, single_spin_coupling, symbol_table, thermal_argument,
                          thermal_occupation, thermal_polarization)

# 30-digit references computed independently with mpmath
NBAR_300K = 2083.16195232644942
NBAR_4K = 27.2851582932569331
G_1CM3 = 0.0442539056450291280
G_2E3CM3 = 0.989547412921468084


def test_thermal_occupation_reference():
    assert thermal_occupation(3e9, 300.0) == pytest.approx(NBAR_300K, rel=1e-13)
    assert thermal_occupation(3e9, 4.0) == pytest.approx(NBAR_4K, rel=1e-13)


def test_thermal_occupation_zero_temperature():
    assert thermal_occupation(3e9, 0.0) == 0.0


def test_coupling_reference():
    assert single_spin_coupling(3e9, CM3) == pytest.approx(G_1CM3, rel=1e-13)
    assert single_spin_coupling(3e9, 2e-3 * CM3) == pytest.approx(G_2E3CM3, rel=1e-13)


@given(st.floats(1e8, 1e11), st.floats(1e-12, 1e-3))
def test_mode_volume_round_trip(nu, volume):
    g = single_spin_coupling(nu, volume)
    assert mode_volume_for_coupling(nu, g) == pytest.approx(volume, rel=1e-12)


@given(st.floats(1e8, 1e11), st.floats(1e-3, 1e4))
def test_tanh_identity(nu, temperature):
    # 1/(2 nbar + 1) = tanh(h nu / 2 k T)
    nbar = thermal_occupation(nu, temperature)
    assert 1 / (2 * nbar + 1) == pytest.approx(thermal_polarization(nu, temperature), rel=1e-10)


def test_literal_thermal_argument_is_smaller_by_two_pi():
    phys = thermal_argument(3e9, 300.0)
    lit = thermal_argument(3e9, 300.0, "literal")
    assert phys / lit == pytest.approx(2 * math.pi, rel=1e-15)


@given(st.floats(1e3, 1e20), st.floats(0.01, 500.0))
def test_collective_coupling_monotone(n, temperature):
    omega = collective_coupling(1.0, n, 3e9, temperature)
    assert omega <= collective_coupling(1.0, 2 * n, 3e9, temperature)
    assert omega >= collective_coupling(1.0, n, 3e9, 2 * temperature)
    assert omega <= math.sqrt(n)


def test_collective_coupling_zero_temperature():
    assert collective_coupling(2.0, 1e6, 3e9, 0.0) == pytest.approx(2e3)


@pytest.mark.parametrize("kw", [dict(coupling=0.0), dict(spin_count=0.5), dict(temperature=-1.0),
                                dict(spin_frequency=0.0)])
def test_collective_coupling_rejects(kw):
    args = dict(coupling=1.0, spin_count=1e6, spin_frequency=3e9, temperature=300.0)
    args.update(kw)
    with pytest.raises(ValueError):
        collective_coupling(**args)


def test_dipole_scale_value():
    c = DEFAULT_CONSTANTS
    assert dipole_dipole_scale() == pytest.approx(c.gyromagnetic_ratio ** 2 * c.vacuum_permeability * c.planck / 2)
    assert 3.2e-19 < dipole_dipole_scale() < 3.3e-19


def test_build_resolves_pairs():
    p = SystemParams.build(3e9, quality=1e6, gamma1=250.0, gamma2=1e6, mode_volume=CM3, spin_density=1e24)
    assert p.kappa == pytest.approx(3e3)
    assert p.coupling == pytest.approx(G_1CM3, rel=1e-13)
    assert p.spin_count == pytest.approx(1e18)
    assert p.spin_density == pytest.approx(1e24)
    assert p.quality == pytest.approx(1e6)


@pytest.mark.parametrize("kw", [
    dict(quality=1e6, kappa=3e3, coupling=1.0, spin_count=1.0),
    dict(coupling=1.0, spin_count=1.0),
    dict(quality=1e6, coupling=1.0, mode_volume=CM3, spin_count=1.0),
    dict(quality=1e6, coupling=1.0, spin_density=1e20),
])
def test_build_rejects_bad_pairs(kw):
    with pytest.raises(ValueError):
        SystemParams.build(3e9, gamma2=1e6, **kw)


@pytest.mark.parametrize("field,value", [("gamma2", 0.0), ("spin_count", 0.0), ("kappa", -1.0),
                                         ("temperature", float("nan")), ("distribution_kind", "cauchy"),
                                         ("mixing", 1.5), ("thermal_argument", "other")])
def test_params_validation(field, value):
    args = dict(cavity_frequency=3e9, spin_frequency=3e9, kappa=3e3, gamma1=250.0, gamma2=1e6,
                pump=0.0, coupling=1.0, spin_count=1e10)
    args[field] = value
    with pytest.raises(ValueError):
        SystemParams(**args)


def test_copies_rederive(fig2_params):
    p = fig2_params.with_quality(1e4)
    assert p.kappa == pytest.approx(3e5)
    q = fig2_params.with_mode_volume(CM3).with_spin_density(1e24)
    assert q.spin_count == pytest.approx(1e18)
    assert q.coupling == pytest.approx(G_1CM3, rel=1e-13)
    with pytest.raises(ValueError):
        fig2_params.with_spin_density(1e24)


def test_symbol_table_covers_fields():
    fields = {row[1] for row in symbol_table()}
    for name in ("cavity_frequency", "kappa", "gamma1", "gamma2", "pump", "coupling", "spin_count"):
        assert f"SystemParams.{name}" in fields
