import math

import numpy as np
import pytest

import ringtrap


def test_fock_darwin_levels():
    for nu in (0.0, 1.0, 2.0):
        sol = ringtrap.solve_sector(nu, 0.0, 1)
        a = math.sqrt(1 + nu * nu / 4)
        assert abs(sol.ground_energy - (2 * a - nu / 2)) < 1e-8
        assert sol.coefficients.shape == (30, 30)


def test_ground_state_has_m1_in_the_ring_regime():
    rec = ringtrap.ground_state_scan(1.0, 5.0)
    assert rec["m_star"] == 1
    assert len(rec["sector_energies"]) == 10


def test_effective_potential_broadcasts():
    rho = np.linspace(0.5, 3.0, 6)
    v = ringtrap.effective_potential(0.5, 0.1, 1, rho)
    assert v.shape == rho.shape
    expected = -0.5 + (1 + 0.0625) * rho**2 + 0.75 / rho**2 + 0.2 / rho
    assert np.allclose(v, expected, rtol=1e-14)


def test_current_changes_sign_at_sqrt2():
    rho = np.linspace(0.01, 4.0, 400)
    j = ringtrap.current_density(1.0, 2.0, 1, rho)
    flips = np.nonzero(np.diff(np.sign(j)))[0]
    assert len(flips) == 1
    assert abs(rho[flips[0]] - math.sqrt(2)) < rho[1] - rho[0]


def test_velocity_sweep_and_crossing():
    sweep = ringtrap.ground_velocity_sweep(1.0, np.arange(0.0, 2.0, 0.1))
    assert sweep["m_star"][0] == 0 and sweep["m_star"][-1] == 1
    crossing = ringtrap.find_ground_crossings(1.0, 0.0, 2.0)[0]
    assert (crossing["m1"], crossing["m2"]) == (0, 1)
    assert 1.0 < crossing["nu_star"] < 1.5


def test_harmonic_orbit_and_norm():
    grid = ringtrap.GridSpec(64, 8.0)
    psi = ringtrap.gaussian_packet(grid, 2.0, 0.5)
    assert psi.shape == (64, 64)
    out = ringtrap.evolve(grid, psi, 0.0, 0.0, dtau=math.pi / 300, tau_end=math.pi, observe_every=50)
    assert np.all(np.abs(out["norm"] - 1) < 1e-10)
    assert abs(out["cx"][-1] + 2.0) < 1e-3  # half a period
    assert out["final"].shape == (64, 64)


def test_imaginary_time_sector():
    grid = ringtrap.GridSpec(64, 6.0)
    res = ringtrap.imaginary_time_ground(grid, 1.0, 0.0, 1)
    assert abs(res["energy"] - ringtrap.fock_darwin_energy(1.0, 1)) < 1e-6
    assert abs(res["lz"] - 1) < 1e-6


def test_errors_map_to_python_exceptions():
    with pytest.raises(ringtrap.ConfigError):
        ringtrap.solve_sector(1.0, -1.0, 0)
    with pytest.raises(ringtrap.ConfigError):
        ringtrap.GridSpec(64, -1.0)
    assert issubclass(ringtrap.NumericalError, ringtrap.Error)
