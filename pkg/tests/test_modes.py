import numpy as np
import pytest

from ymgap.helmholtz import gauge_div
from ymgap.lattice import Grid, energy
from ymgap.lie import build_algebra
from ymgap.modes import build_mode_basis


@pytest.fixture(scope="module")
def basis():
    return build_mode_basis(build_algebra("su", 2), Grid(6, 0.8), 12)


def test_orthonormal_and_transversal(basis):
    assert np.allclose(basis.gram(), np.eye(basis.M), atol=1e-13)
    zero = basis.grid.zeros(basis.g)
    for u in basis.fields:
        assert np.max(np.abs(gauge_div(basis.g, basis.grid, zero, u))) <= 1e-12


def test_first_shell_frequency(basis):
    grid = basis.grid
    k = 2 * np.pi / (grid.n * grid.h)
    assert np.allclose(basis.omegas, np.sin(k * grid.h) / grid.h)
    assert np.all(np.diff([m.omega for m in basis.modes]) >= -1e-12)


def test_coordinate_roundtrip(basis, rng):
    z = rng.normal(size=basis.M) + 1j * rng.normal(size=basis.M)
    assert np.allclose(basis.from_fields(basis.to_fields(z)), z, atol=1e-13)
    A, E = basis.amplitudes(z)
    w = basis.omegas
    assert np.allclose((np.sqrt(w) * A + 1j * E / np.sqrt(w)) / np.sqrt(2), z)


def test_free_energy_is_frequency_weighted_number(basis, rng):
    z = rng.normal(size=basis.M) + 1j * rng.normal(size=basis.M)
    c = basis.to_fields(z)
    assert energy(basis.g, basis.grid, c, coupling=0.0) == pytest.approx(np.sum(basis.omegas * abs(z) ** 2), rel=1e-12)


def test_prefix_property_and_determinism():
    g = build_algebra("su", 2)
    big = build_mode_basis(g, Grid(4), 12)
    small = build_mode_basis(g, Grid(4), 5)
    assert big.modes[:5] == small.modes
    assert np.array_equal(big.fields[:5], small.fields)
    # staggered polarization / Lie order makes the first two modes noncommuting
    assert small.modes[0].lie_index != small.modes[1].lie_index


def test_too_many_modes_rejected():
    g = build_algebra("su", 2)
    with pytest.raises(ValueError):
        build_mode_basis(g, Grid(4), 10_000)
    with pytest.raises(ValueError):
        build_mode_basis(g, Grid(4), 0)


def test_nyquist_momenta_skipped():
    g = build_algebra("su", 2)
    mb = build_mode_basis(g, Grid(4), 60, k_max=2)
    assert all(all(abs(x) < 2 for x in m.momentum) for m in mb.modes)
    assert np.all(mb.omegas > 0)
