import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ymgap.lie import (LieAlgebraSpec, antisymmetry_residual, build_algebra, casimir_contract,
                       jacobi_residual, killing_product, parse_gauge_group)

ALGEBRAS = [("su", 2), ("su", 3), ("su", 4), ("so", 3), ("so", 4), ("so", 5)]


def levi_civita():
    eps = np.zeros((3, 3, 3))
    for p in itertools.permutations(range(3)):
        eps[p] = np.linalg.det(np.eye(3)[list(p)])
    return eps


def oracle_structure_constants(mats):
    """Brute-force commutator expansion with an independent least-squares fit."""
    n = len(mats)
    basis = np.array([m.ravel() for m in mats]).T
    c = np.zeros((n, n, n))
    for i in range(n):
        for j in range(n):
            comm = mats[i] @ mats[j] - mats[j] @ mats[i]
            coef, *_ = np.linalg.lstsq(basis, comm.ravel(), rcond=None)
            c[i, j] = coef.real
    return c


def test_su2_orthonormal_constants_are_scaled_levi_civita(su2):
    # Pauli generators -i/2 sigma close with eps_ijk, Killing metric 2 I,
    # so the orthonormal rescaling divides the constants by sqrt(2).
    pauli = [np.array([[0, 1], [1, 0]]), np.array([[0, -1j], [1j, 0]]), np.array([[1, 0], [0, -1]])]
    raw = oracle_structure_constants([-0.5j * s for s in pauli])
    assert np.allclose(raw, levi_civita(), atol=1e-14)
    killing = -np.einsum("ijk,lkj->il", raw, raw)
    assert np.allclose(killing, 2 * np.eye(3), atol=1e-14)
    assert np.max(np.abs(su2.c - levi_civita() / np.sqrt(2))) <= 1e-14


def test_unnormalized_su2_uses_pauli_basis():
    g = build_algebra("su", 2, orthonormalize=False)
    assert np.max(np.abs(g.c - levi_civita())) <= 1e-14
    assert np.allclose(g.metric, 2 * np.eye(3), atol=1e-14)


@pytest.mark.parametrize("group,N", ALGEBRAS)
def test_structural_identities(group, N):
    g = build_algebra(group, N)
    expected_dim = N * N - 1 if group == "su" else N * (N - 1) // 2
    assert g.dim_g == expected_dim
    assert jacobi_residual(g) <= 1e-12
    assert antisymmetry_residual(g) <= 1e-12
    assert np.max(np.abs(g.metric - np.eye(g.dim_g))) <= 1e-12
    assert np.max(np.abs(casimir_contract(g) - np.eye(g.dim_g))) <= 1e-12


@pytest.mark.parametrize("group,N", ALGEBRAS)
def test_constants_agree_with_matrix_commutators(group, N):
    g = build_algebra(group, N)
    assert np.allclose(oracle_structure_constants(list(g.generators)), g.c, atol=1e-12)


def test_su3_metric_is_killing_of_oracle_constants(su3):
    c = oracle_structure_constants(list(su3.generators))
    assert np.allclose(-np.einsum("ijk,lkj->il", c, c), np.eye(8), atol=1e-12)


@pytest.mark.parametrize("group,N", [("sp", 2), ("su", 1), ("so", 2), ("gl", 3)])
def test_unsupported_or_degenerate_groups_raise(group, N):
    with pytest.raises(ValueError):
        build_algebra(group, N)


def test_parse_gauge_group_spellings():
    assert parse_gauge_group("su2").label == "su2"
    assert parse_gauge_group(" SU3 ").dim_g == 8
    assert parse_gauge_group("suN", 4).dim_g == 15
    assert parse_gauge_group("so5").dim_g == 10
    for bad, N in [("suN", None), ("su-2", None), ("u1", None)]:
        with pytest.raises(ValueError):
            parse_gauge_group(bad, N)


def test_killing_product_examples(su2):
    e = np.eye(3)
    assert killing_product(su2, e[0], e[0]) == pytest.approx(1.0, abs=1e-14)
    assert killing_product(su2, e[0], e[1]) == pytest.approx(0.0, abs=1e-14)
    with pytest.raises(ValueError):
        killing_product(su2, e[0], np.ones(2))


def test_abelian_spec_has_zero_casimir():
    g = LieAlgebraSpec(dim_g=2, c=np.zeros((2, 2, 2)), metric=np.eye(2), label="u1xu1")
    assert np.all(casimir_contract(g) == 0)
    assert jacobi_residual(g) == 0
    with pytest.raises(ValueError):
        g.to_matrix(np.ones(2))


vectors = st.lists(st.floats(-3, 3, allow_nan=False), min_size=8, max_size=8)


@given(vectors, vectors)
def test_bracket_antisymmetric_and_ad_invariant(xs, ys):
    g = build_algebra("su", 3)
    X, Y = np.array(xs), np.array(ys)
    assert np.allclose(g.bracket(X, Y), -g.bracket(Y, X), atol=1e-12)
    # ad X is antisymmetric for the Killing metric
    adX = g.ad(X)
    assert np.allclose(adX, -adX.T, atol=1e-12)
    assert killing_product(g, X, X) >= 0
    assert killing_product(g, g.bracket(X, Y), Y) == pytest.approx(0.0, abs=1e-10)


@given(vectors, vectors)
def test_bracket_matches_matrix_commutator(xs, ys):
    g = build_algebra("su", 3)
    X, Y = np.array(xs), np.array(ys)
    A, B = g.to_matrix(X), g.to_matrix(Y)
    assert np.allclose(g.to_matrix(g.bracket(X, Y)), A @ B - B @ A, atol=1e-10)
    assert np.allclose(g.from_matrix(A), X, atol=1e-12)
