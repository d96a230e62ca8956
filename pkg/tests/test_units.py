import math

import numpy as np
import pytest

from trapgate import (HBAR, RB87_MASS_KG, SpatialGrid, TimeGrid, from_si,
                      make_unit_system, to_si)


def test_rb87_at_100khz_matches_published_scales():
    u = make_unit_system(RB87_MASS_KG, 2 * np.pi * 1e5)
    assert abs(u.a - 34e-9) < 1e-9                       # a = 34 nm
    assert u.eps == pytest.approx(2 * np.pi * HBAR * 50e3, rel=1e-12)
    assert u.eps == pytest.approx(HBAR * u.omega / 2, rel=1e-12)


def test_natural_units_identity_case():
    u = make_unit_system(1.0, 1.0, hbar=1.0)
    assert u.a == 1.0
    assert u.eps == 0.5
    assert u.time_unit == 2.0


def test_oscillator_length_against_direct_formula():
    # independent hand evaluation of sqrt(hbar/(m*omega)) at 2*pi*25 kHz
    mass = 86.909180531 * 1.66053906660e-27
    omega = 2 * math.pi * 25e3
    expected = math.sqrt(1.054571817e-34 / (mass * omega))
    u = make_unit_system(mass, omega)
    assert u.a == pytest.approx(expected, rel=1e-14)


@pytest.mark.parametrize("mass,omega", [(RB87_MASS_KG, 2 * np.pi * 1e5),
                                        (RB87_MASS_KG, 2 * np.pi * 25e3),
                                        (2.2e-25, 5e4)])
def test_energy_unit_identity(mass, omega):
    u = make_unit_system(mass, omega)
    assert u.eps * 2 * mass * u.a**2 / HBAR**2 == pytest.approx(1.0, rel=1e-12)


@pytest.mark.parametrize("bad_mass,bad_omega", [(0.0, 1.0), (-1.0, 1.0),
                                                (1.0, 0.0), (1.0, -2.0)])
def test_nonpositive_inputs_rejected(bad_mass, bad_omega):
    with pytest.raises(ValueError):
        make_unit_system(bad_mass, bad_omega)


def test_si_conversions():
    u = make_unit_system(RB87_MASS_KG, 2 * np.pi * 1e5)
    assert to_si(500.0, "time", u) == pytest.approx(1.6e-3, rel=0.05)
    assert to_si(0.0, "length", u) == 0.0
    assert to_si(0.0, "energy", u) == 0.0
    assert abs(to_si(1.0, "length", u) - 34e-9) < 1e-9


def test_unknown_conversion_kind():
    u = make_unit_system(RB87_MASS_KG, 2 * np.pi * 1e5)
    with pytest.raises(ValueError, match="unknown conversion kind"):
        to_si(1.0, "mass", u)


@pytest.mark.parametrize("kind", ["length", "energy", "time"])
def test_si_round_trip(kind):
    u = make_unit_system(RB87_MASS_KG, 2 * np.pi * 1e5)
    for value in (1e-6, 0.37, 500.0, 1e4):
        assert from_si(to_si(value, kind, u), kind, u) == pytest.approx(value, rel=1e-12)


def test_spatial_grid_validation():
    g = SpatialGrid(-16.0, 16.0, 1024)
    assert g.spacing == pytest.approx(32.0 / 1023)
    assert len(g.points()) == 1024
    with pytest.raises(ValueError):
        SpatialGrid(-1.0, 1.0, 2)
    with pytest.raises(ValueError):
        SpatialGrid(1.0, -1.0, 16)


def test_time_grid_validation():
    tg = TimeGrid(500.0, 50000)
    assert tg.dt == pytest.approx(0.01)
    with pytest.raises(ValueError):
        TimeGrid(500.0, 0)
    with pytest.raises(ValueError):
        TimeGrid(-1.0, 10)
