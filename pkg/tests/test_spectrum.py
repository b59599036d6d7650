from itertools import combinations

import numpy as np
import pytest
import sympy
from hypothesis import given
from hypothesis import strategies as st

from ymgap.fock import FockBasis, ladder, number_operator, quantize_normal
from ymgap.lattice import CauchyData, Grid, energy
from ymgap.lie import build_algebra
from ymgap.modes import build_mode_basis
from ymgap.spectrum import (assemble_H, bound_check, build_energy_symbol, casimir_quadratic, gap_scan,
                            killing_quartic, sector_minima, spectrum_report, vn_minimax, wick_mass_term)
from ymgap.symbols import PolynomialSymbol

SU2 = build_algebra("su", 2)


@pytest.fixture(scope="module")
def setup():
    grid = Grid(4, 1.0)
    mb = build_mode_basis(SU2, grid, 3)
    es = build_energy_symbol(mb, 1.0, n_max=6)
    fb = FockBasis(3, 6)
    return mb, es, fb, assemble_H(es, fb)


def quartic_from_lattice(mb, A):
    """Quartic part of the magnetic energy: even in the coupling, order coupling^2."""
    a = np.tensordot(A, mb.fields, axes=1)
    E = lambda c: energy(mb.g, mb.grid, CauchyData(a, np.zeros_like(a)), coupling=c)
    return 0.5 * (E(1.0) + E(-1.0)) - E(0.0)


def brute_force_minimax(A, grades, j):
    sectors = sorted(set(grades))
    best = -np.inf
    for removed in combinations(sectors, j):
        keep = ~np.isin(grades, removed)
        if keep.any():
            best = max(best, np.linalg.eigvalsh(A[np.ix_(keep, keep)])[0])
    return best


def test_free_symbol_is_harmonic():
    mb = build_mode_basis(SU2, Grid(6, 0.7), 5)
    es = build_energy_symbol(mb, 0.0)
    expected = PolynomialSymbol.quadratic_form(np.diag(mb.omegas))
    assert es.sym.allclose(expected, 1e-13)
    assert es.mass.terms == {} and es.quartic.terms == {}
    assert es.k == pytest.approx(mb.omegas.sum(), rel=1e-14)


@pytest.mark.parametrize("coupling", [0.5, 1.0, 1.7])
def test_symbol_equals_lattice_energy(coupling, rng):
    mb = build_mode_basis(SU2, Grid(4, 0.9), 4)
    es = build_energy_symbol(mb, coupling)
    assert es.sym.is_real()
    for _ in range(5):
        z = 0.6 * (rng.normal(size=4) + 1j * rng.normal(size=4))
        lattice = energy(SU2, mb.grid, mb.to_fields(z), coupling)
        assert es.sym.evaluate(z).real == pytest.approx(lattice, rel=1e-12)


def test_quartic_matches_lattice_and_is_nonnegative(setup, rng):
    mb, es, _, _ = setup
    for _ in range(5):
        z = rng.normal(size=3) + 1j * rng.normal(size=3)
        A, _ = mb.amplitudes(z)
        q = es.quartic.evaluate(z).real
        assert q == pytest.approx(quartic_from_lattice(mb, A), rel=1e-10)
        assert q >= 0
    # two modes with different Lie directions: the |z0|^2 |z1|^2 coefficient is positive
    assert es.quartic.coefficient((1, 1, 0), (1, 1, 0)).real > 0


def test_mass_term_is_contracted_quartic(setup, rng):
    # z-contraction equals (1 / 2w) d^2/dA^2; second derivatives of the quartic by
    # Richardson-extrapolated central differences (exact for quartic polynomials)
    mb, es, _, _ = setup
    w = mb.omegas
    for _ in range(3):
        z = rng.normal(size=3) + 1j * rng.normal(size=3)
        A, _ = mb.amplitudes(z)
        total = 0.0
        for m in range(3):
            e = np.eye(3)[m]
            d2 = lambda h: (quartic_from_lattice(mb, A + h * e) - 2 * quartic_from_lattice(mb, A)
                            + quartic_from_lattice(mb, A - h * e)) / h ** 2
            total += (4 * d2(0.05) - d2(0.1)) / 3 / (2 * w[m])
        assert es.mass.evaluate(z).real == pytest.approx(es.s * total, rel=1e-7)


def test_decomposition_sums_to_normal_symbol(setup):
    _, es, _, _ = setup
    parts = es.kinetic + es.cubic + es.quartic + es.linear + es.mass + es.k
    assert parts.allclose(es.normal, 1e-12)
    assert es.k > 0


def test_operator_is_hermitian_with_vacuum_value_k(setup):
    _, es, fb, H = setup
    assert H.hermiticity_residual() <= 1e-12
    assert abs(H.toarray()[0, 0] - es.k) <= 1e-10


def test_free_eigenvalues_are_harmonic_sums():
    mb = build_mode_basis(SU2, Grid(8, 1.0), 3)
    es = build_energy_symbol(mb, 0.0)
    fb = FockBasis(3, 6)
    block = assemble_H(es, fb).safe_block(4)
    idx = fb.safe_indices(4)
    expected = np.sort(fb.states[idx] @ mb.omegas + es.k)
    assert np.max(np.abs(np.linalg.eigvalsh(block) - expected)) <= 1e-10


def test_vn_minimax_examples():
    fb = FockBasis(2, 5)
    N = number_operator(fb)
    assert vn_minimax(N, fb.grades, 4) == [0.0, 1.0, 2.0, 3.0, 4.0]
    assert vn_minimax(np.eye(fb.dim), fb.grades, 3) == [1.0, 1.0, 1.0, 1.0]
    grades = np.array([0, 1, 1, 2])
    L = np.diag([0.0, 2.0, 5.0, 3.5])
    assert sector_minima(L, grades) == {0: 0.0, 1: 2.0, 2: 3.5}
    vals = vn_minimax(L, grades, 2)
    assert vals[:2] == [0.0, 2.0]
    assert vals == [brute_force_minimax(L, grades, j) for j in range(3)]
    with pytest.raises(ValueError):
        vn_minimax(np.array([[0, 1], [0, 0]]), [0, 1], 1)
    with pytest.raises(ValueError):
        vn_minimax(np.eye(2), [0], 1)


@given(st.integers(0, 2 ** 32 - 1))
def test_vn_minimax_against_brute_force(seed):
    rng = np.random.default_rng(seed)
    grades = np.sort(rng.integers(0, 4, 9))
    X = rng.normal(size=(9, 9)) + 1j * rng.normal(size=(9, 9))
    L = X + X.conj().T
    vals = vn_minimax(L, grades, 3)
    assert vals == [brute_force_minimax(L, grades, j) for j in range(len(vals))]
    assert vals[0] == np.linalg.eigvalsh(L)[0]


@given(st.integers(0, 2 ** 32 - 1))
def test_vn_minimax_dominates_conventional_for_sector_diagonal(seed):
    # holds whenever L commutes with the number operator
    rng = np.random.default_rng(seed)
    grades = np.sort(rng.integers(0, 4, 10))
    L = np.zeros((10, 10), complex)
    for s in set(grades.tolist()):
        idx = np.flatnonzero(grades == s)
        X = rng.normal(size=(len(idx),) * 2) + 1j * rng.normal(size=(len(idx),) * 2)
        L[np.ix_(idx, idx)] = X + X.conj().T
    conv = np.linalg.eigvalsh(L)
    vals = vn_minimax(L, grades, 3)
    assert all(v >= conv[j] - 1e-12 for j, v in enumerate(vals))


def test_vn_minimax_can_undercut_conventional_when_sectors_mix():
    # two one-state sectors coupled by an off-diagonal element
    L = np.array([[1.0, 0.5], [0.5, 1.0]])
    assert vn_minimax(L, [0, 1], 1)[1] == pytest.approx(1.0)
    assert np.linalg.eigvalsh(L)[1] == pytest.approx(1.5)


@pytest.mark.parametrize("coupling", [0.0, 0.5, 1.0])
def test_vn_minimax_dominates_conventional_on_energy_operator(coupling):
    r = spectrum_report(SU2, Grid(4), 3, 6, coupling, levels=3)
    assert r.minimax[0] == r.eigenvalues[0]
    assert all(v >= r.eigenvalues[j] - 1e-12 for j, v in enumerate(r.minimax))


def test_bound_check_vacuum_and_free(setup):
    mb, es, fb, H = setup
    rep = bound_check(H, es, fb, 200, seed=1)
    assert rep.vacuum_slack == 0.0 or abs(rep.vacuum_slack) <= 1e-14
    assert rep.min_slack >= -1e-10 and rep.passed_slack
    free = build_energy_symbol(mb, 0.0)
    rep0 = bound_check(assemble_H(free, fb), free, fb, 200, seed=1)
    assert free.mass.terms == {}
    assert rep0.min_slack >= -1e-12 and rep0.min_kinetic >= 0
    assert rep0.passed_positivity


def test_bound_check_thousand_trials(setup):
    _, es, fb, H = setup
    rep = bound_check(H, es, fb, 1000, seed=7)
    assert rep.trials == 1000
    assert rep.min_slack >= -1e-10
    assert rep.slack_min_eig >= -1e-10


def test_quartic_normal_operator_is_indefinite(setup):
    # the normal-ordered quartic is not a positive operator: exact oracle built
    # from ladder matrices, compared with what bound_check reports
    _, es, fb, H = setup
    a = [ladder(m, "annihilate", fb).toarray() for m in range(3)]
    ad = [ladder(m, "create", fb).toarray() for m in range(3)]
    Q = np.zeros((fb.dim, fb.dim), complex)
    for (alpha, beta), c in es.quartic.terms.items():
        op = np.eye(fb.dim)
        for m in range(3):
            op = op @ np.linalg.matrix_power(ad[m], alpha[m])
        for m in range(3):
            op = op @ np.linalg.matrix_power(a[m], beta[m])
        Q += c * op
    idx = fb.safe_indices(4)
    oracle_min = np.linalg.eigvalsh(Q[np.ix_(idx, idx)])[0]
    rep = bound_check(H, es, fb, 50, seed=0)
    assert rep.quartic_min_eig == pytest.approx(oracle_min, abs=1e-12)
    assert oracle_min < -1e-3
    assert not rep.passed_positivity


def test_energy_operator_dips_below_vacuum_value_when_coupled():
    free = spectrum_report(SU2, Grid(4), 3, 6, 0.0)
    assert free.eigenvalues[0] == pytest.approx(free.k, abs=1e-12)
    coupled = spectrum_report(SU2, Grid(4), 3, 6, 1.0)
    assert coupled.eigenvalues[0] < coupled.k


def test_spectrum_report_fields():
    r = spectrum_report(SU2, Grid(8), 3, 6, 0.5, levels=2, bound_trials=10, seed=3)
    assert r.block_dim == FockBasis(3, 2).dim
    assert r.gap == r.minimax[1] - r.minimax[0] == r.lambda1 - r.lambda0
    assert r.min_slack is not None and r.min_slack >= -1e-10
    assert set(r.to_dict()) >= {"M", "n_max", "coupling", "k", "eigenvalues", "minimax", "gap"}
    with pytest.raises(ValueError):
        spectrum_report(SU2, Grid(8), 3, 4, 0.5)


def test_gap_scan_free_gap_and_skips():
    grid = Grid(8)
    reports, skipped = gap_scan(SU2, grid, [3, 12], [6, 12], [0.0, 1.0])
    assert skipped and all("skipped" in s for s in skipped)
    w_min = build_mode_basis(SU2, grid, 3).omegas.min()
    free = [r for r in reports if r.coupling == 0.0]
    assert free and all(abs(r.gap - w_min) <= 1e-10 for r in free)
    again, _ = gap_scan(SU2, grid, [3], [6], [0.0, 1.0])
    assert [r.to_dict() for r in again] == [r.to_dict() for r in reports if r.M == 3 and r.n_max == 6]


def test_gap_is_continuous_in_coupling():
    grid = Grid(4)
    base = spectrum_report(SU2, grid, 3, 6, 0.5).gap
    diffs = [abs(spectrum_report(SU2, grid, 3, 6, 0.5 + d).gap - base) for d in (0.2, 0.1, 0.05)]
    assert diffs[0] > diffs[1] > diffs[2]
    assert diffs[2] <= 1e-2


# ---------------------------------------------------------------------------
# Wick mass-term identity against a real-variable symbolic oracle
# ---------------------------------------------------------------------------

def symbolic_contraction(g, s):
    """Quadratic part of exp(s d_z d_z*) of 1/2 |[a1, a2]|^2.

    With a = (z + z*)/sqrt(2) the contraction d_z d_z* equals (1/2) d^2/da^2,
    so the quadratic part is (s/2) times the real Laplacian of the quartic.
    """
    d = g.dim_g
    a1 = sympy.symbols(f"x0:{d}", real=True)
    a2 = sympy.symbols(f"y0:{d}", real=True)
    c = [[[sympy.Float(g.c[i, j, k], 30) for k in range(d)] for j in range(d)] for i in range(d)]
    comps = [sum(c[i][j][k] * a1[i] * a2[j] for i in range(d) for j in range(d) if g.c[i, j, k] != 0)
             for k in range(d)]
    Q = sympy.expand(sum(comp ** 2 for comp in comps) / 2)
    lap = sum(sympy.diff(Q, v, 2) for v in a1 + a2)
    casimir = sum(c[i][j][k] * c[l][j][k] * (a1[i] * a1[l] + a2[i] * a2[l])
                  for i in range(d) for l in range(d) for j in range(d) for k in range(d)
                  if g.c[i, j, k] != 0 and g.c[l, j, k] != 0)
    return sympy.expand(s / 2 * lap), sympy.expand(s / 2 * casimir), a1 + a2


@pytest.mark.parametrize("group,N", [("su", 2), ("su", 3)])
@pytest.mark.parametrize("s", [0.5, 1.0])
def test_wick_mass_identity(group, N, s, rng):
    g = build_algebra(group, N)
    oracle, casimir_form, variables = symbolic_contraction(g, s)
    assert sympy.Poly(oracle - casimir_form, *variables).max_norm() <= 1e-12
    ours = wick_mass_term(g, s)
    assert ours.allclose(casimir_quadratic(g, s / 2), 1e-12)
    f = sympy.lambdify(variables, oracle)
    for _ in range(3):
        z = rng.normal(size=2 * g.dim_g) + 1j * rng.normal(size=2 * g.dim_g)
        a = np.sqrt(2) * z.real
        assert ours.evaluate(z).real == pytest.approx(float(f(*a)), rel=1e-10)


def test_wick_identity_quarter_coefficient():
    for g in (SU2, build_algebra("su", 3)):
        mass = wick_mass_term(g, 0.5)
        d = g.dim_g
        # 1/4 a*a: a = (z + z*)/sqrt(2), so z*_m z_m has coefficient 1/4
        for m in range(2 * d):
            unit = tuple(int(i == m) for i in range(2 * d))
            assert mass.coefficient(unit, unit) == pytest.approx(0.25, abs=1e-12)
    assert killing_quartic(SU2).degree == 4
