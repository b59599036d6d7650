"""Quantized lattice energy on a truncated Fock space and its low spectrum.

The classical lattice energy restricted to a finite mode set is a degree-4
polynomial in ``(z*, z)``.  Its anti-Wick quantization is the energy operator;
the heat transform rewrites it in normal order and splits off

* the free quadratic part (electric energy plus linearized magnetic energy),
* the quartic bracket part,
* a quadratic "mass" part produced by contracting the quartic once,
* a constant produced by contracting everything fully.
"""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field
from itertools import combinations

import numpy as np
import scipy.sparse.linalg as spla

from .fock import DENSE_LIMIT, FockBasis, FockOperator, number_operator, quantize_antiwick, quantize_normal
from .lattice import PAIRS, Grid, diff
from .lie import LieAlgebraSpec, casimir_contract
from .modes import ModeBasis, build_mode_basis
from .symbols import PolynomialSymbol, heat_transform

log = logging.getLogger(__name__)

EXHAUSTIVE_LEVELS = 3

__all__ = [
    "EnergySymbol",
    "build_energy_symbol",
    "energy_tensors",
    "assemble_H",
    "vn_minimax",
    "BoundReport",
    "bound_check",
    "SpectrumReport",
    "spectrum_report",
    "gap_scan",
    "killing_quartic",
    "casimir_quadratic",
    "wick_mass_term",
]


# --------------------------------------------------------------------------
# classical energy as a symbol
# --------------------------------------------------------------------------

def energy_tensors(basis: ModeBasis, coupling: float):
    """Coefficient tensors of the magnetic energy in real mode amplitudes ``A``.

    Returns ``(K, T, Q)`` with magnetic energy
    ``1/2 A K A + T[m,r,t] A_m A_r A_t + Q[r,t,m,l] A_r A_t A_m A_l``.
    """
    g, grid = basis.g, basis.grid
    U = basis.fields
    M = basis.M
    cell = grid.cell
    lin = np.stack([diff(U[..., k, :], j + 1, grid.h) - diff(U[..., j, :], k + 1, grid.h)
                    for j, k in PAIRS], axis=1)  # (M, pair, n, n, n, dim)
    # [u_r, j , u_t, k] for every pair: (r, t, pair, n, n, n, dim)
    br = np.stack([g.bracket(U[:, None, ..., j, :], U[None, :, ..., k, :]) for j, k in PAIRS], axis=2)
    L2 = lin.reshape(M, -1)
    B2 = br.reshape(M, M, -1)
    K = cell * L2 @ L2.T
    T = -coupling * cell * np.einsum("mx,rtx->mrt", L2, B2)
    Q = 0.5 * coupling ** 2 * cell * np.einsum("rtx,mlx->rtml", B2, B2)
    return K, T, Q


def _real_coordinates(basis: ModeBasis):
    M, w = basis.M, basis.omegas
    z = [PolynomialSymbol.z(M, m) for m in range(M)]
    zb = [PolynomialSymbol.zbar(M, m) for m in range(M)]
    A = [(z[m] + zb[m]) * (1 / np.sqrt(2 * w[m])) for m in range(M)]
    E = [(z[m] - zb[m]) * (-1j * np.sqrt(w[m] / 2)) for m in range(M)]
    return A, E


def _clean(sym: PolynomialSymbol, tol: float) -> PolynomialSymbol:
    return sym.prune(tol).real_part_coefficients()


@dataclass(frozen=True)
class EnergySymbol:
    """Energy symbol and its normal-order decomposition for ordering parameter ``s``.

    ``normal == kinetic + cubic + quartic + linear + mass + k`` where ``normal``
    is ``heat_transform(sym, s)``.
    """

    sym: PolynomialSymbol
    kinetic: PolynomialSymbol
    cubic: PolynomialSymbol
    quartic: PolynomialSymbol
    linear: PolynomialSymbol
    mass: PolynomialSymbol
    k: float
    s: float
    coupling: float
    omegas: np.ndarray = field(repr=False)

    @property
    def M(self) -> int:
        return self.sym.M

    @property
    def normal(self) -> PolynomialSymbol:
        return heat_transform(self.sym, self.s)


def build_energy_symbol(basis: ModeBasis, coupling: float, s: float = 1.0,
                        n_max: int | None = None) -> EnergySymbol:
    if n_max is not None and n_max < 4:
        raise ValueError(f"energy symbol has degree 4 but n_max = {n_max}")
    M = basis.M
    K, T, Q = energy_tensors(basis, coupling)
    scale = max(1.0, np.abs(K).max(), np.abs(Q).max())
    tol = 1e-13 * scale
    K[np.abs(K) < tol] = 0
    T[np.abs(T) < tol] = 0
    Q[np.abs(Q) < tol] = 0
    A, E = _real_coordinates(basis)
    zero = PolynomialSymbol(M)

    kin = zero
    for m in range(M):
        kin = kin + E[m] * E[m] * 0.5
    AA = {}
    for m in range(M):
        for l in range(M):
            AA[m, l] = A[m] * A[l]
    for m, l in zip(*np.nonzero(K)):
        kin = kin + AA[m, l] * (0.5 * K[m, l])
    cubic = zero
    for m, r, t in zip(*np.nonzero(T)):
        cubic = cubic + A[m] * AA[r, t] * T[m, r, t]
    quartic = zero
    for r in range(M):
        for t in range(M):
            inner = zero
            for m, l in zip(*np.nonzero(Q[r, t])):
                inner = inner + AA[m, l] * Q[r, t, m, l]
            if inner.terms:
                quartic = quartic + AA[r, t] * inner
    kin, cubic, quartic = (_clean(x, tol) for x in (kin, cubic, quartic))
    sym = kin + cubic + quartic

    q1 = quartic.contract()
    mass = _clean(q1 * s, tol)
    linear = _clean(cubic.contract() * s, tol)
    const = kin.contract() * s + q1.contract() * (s * s / 2)
    k = complex(const.coefficient((0,) * M, (0,) * M))
    if abs(k.imag) > 1e-12 * max(1, abs(k)):
        raise ArithmeticError("constant term is not real")
    return EnergySymbol(sym, kin, cubic, quartic, linear, mass, float(k.real), s, coupling, basis.omegas)


def assemble_H(es: EnergySymbol, fb: FockBasis) -> FockOperator:
    """Anti-Wick quantization of the energy symbol."""
    return quantize_antiwick(es.sym, fb, provenance=f"energy coupling={es.coupling}")


# --------------------------------------------------------------------------
# variational spectra
# --------------------------------------------------------------------------

def _as_dense_hermitian(L, idx=None) -> np.ndarray:
    A = L.toarray() if isinstance(L, FockOperator) else np.asarray(L)
    if idx is not None:
        A = A[np.ix_(idx, idx)]
    res = np.max(np.abs(A - A.conj().T)) if A.size else 0.0
    if res > 1e-10 * max(1.0, np.max(np.abs(A))):
        raise ValueError(f"operator is not Hermitian (residual {res:.3e})")
    return 0.5 * (A + A.conj().T)


def _min_eig(A: np.ndarray) -> float:
    if A.shape[0] > DENSE_LIMIT:
        return float(spla.eigsh(A, k=1, which="SA", tol=1e-10)[0][0])
    return float(np.linalg.eigvalsh(A)[0])


def vn_minimax(L, grades, n: int) -> list[float]:
    """Variational values ``lambda_0..lambda_n`` with whole number sectors removed.

    ``L`` is Hermitian (FockOperator or dense array) on states whose particle
    numbers are ``grades``.  ``lambda_j`` is the maximum over sets of ``j``
    sectors of the lowest eigenvalue of ``L`` restricted to the remaining
    sectors.  The first maximizing set in lexicographic order wins.  Search is
    exhaustive for ``j <= 3`` and greedy (extending the previous optimum) above.
    Values that would require removing every sector are omitted.
    """
    A = _as_dense_hermitian(L)
    grades = np.asarray(grades)
    if grades.shape != (A.shape[0],):
        raise ValueError("one grade per basis state required")
    sectors = sorted(set(grades.tolist()))
    out = []
    best_prev: tuple = ()
    for j in range(n + 1):
        if j >= len(sectors):
            break
        if j <= EXHAUSTIVE_LEVELS:
            candidates = combinations(sectors, j)
        else:
            candidates = (tuple(sorted(best_prev + (s,))) for s in sectors if s not in best_prev)
        best, best_set = -np.inf, None
        for removed in candidates:
            keep = ~np.isin(grades, removed)
            val = _min_eig(A[np.ix_(keep, keep)])
            if val > best:
                best, best_set = val, removed
        out.append(float(best))
        best_prev = best_set
    return out


def sector_minima(L, grades) -> dict[int, float]:
    A = _as_dense_hermitian(L)
    grades = np.asarray(grades)
    return {int(s): _min_eig(A[np.ix_(grades == s, grades == s)]) for s in sorted(set(grades.tolist()))}


# --------------------------------------------------------------------------
# lower bound
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class BoundReport:
    trials: int
    min_slack: float
    min_kinetic: float
    min_quartic: float
    quartic_min_eig: float
    slack_min_eig: float
    vacuum_slack: float
    passed_slack: bool
    passed_positivity: bool


def bound_check(H: FockOperator, es: EnergySymbol, fb: FockBasis, trials: int, seed: int,
                tol: float = 1e-10) -> BoundReport:
    """Check ``<H> - <mass> - k >= 0`` and the sign of its kinetic/quartic parts.

    Random states are complex Gaussian vectors on the safe block (the basis
    states where degree-4 operators are free of truncation effects).  The exact
    worst cases, lowest eigenvalues of the compressed operators, are reported
    alongside.
    """
    idx = fb.safe_indices(4)
    if len(idx) == 0:
        raise ValueError("safe block is empty; need n_max >= 4")
    Hs = H.safe_block(4)
    Ms = quantize_normal(es.mass, fb).safe_block(4)
    Ks = quantize_normal(es.kinetic, fb).safe_block(4)
    Qs = quantize_normal(es.quartic, fb).safe_block(4)
    S = Hs - Ms - es.k * np.eye(len(idx))
    rng = np.random.default_rng(seed)
    psi = rng.normal(size=(trials, len(idx))) + 1j * rng.normal(size=(trials, len(idx)))
    psi /= np.linalg.norm(psi, axis=1, keepdims=True)

    def expect(A):
        return np.einsum("ti,ij,tj->t", psi.conj(), A, psi).real

    slack, kin, qua = expect(S), expect(Ks), expect(Qs)
    min_slack = float(min(slack.min(), S[0, 0].real))
    min_kin, min_qua = float(kin.min()), float(qua.min())
    return BoundReport(
        trials=trials,
        min_slack=min_slack,
        min_kinetic=min_kin,
        min_quartic=min_qua,
        quartic_min_eig=float(np.linalg.eigvalsh(0.5 * (Qs + Qs.conj().T))[0]),
        slack_min_eig=float(np.linalg.eigvalsh(0.5 * (S + S.conj().T))[0]),
        vacuum_slack=float(S[0, 0].real),
        passed_slack=min_slack >= -tol,
        passed_positivity=min_kin >= -tol and min_qua >= -tol,
    )


# --------------------------------------------------------------------------
# reports
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SpectrumReport:
    M: int
    n_max: int
    coupling: float
    s: float
    n: int
    h: float
    gauge_group: str
    block_dim: int
    k: float
    eigenvalues: list
    sector_minima: dict
    minimax: list
    gap: float
    conventional_gap: float
    min_slack: float | None = None

    @property
    def lambda0(self) -> float:
        return self.minimax[0]

    @property
    def lambda1(self) -> float:
        return self.minimax[1] if len(self.minimax) > 1 else float("nan")

    def to_dict(self) -> dict:
        return asdict(self)


def spectrum_report(g: LieAlgebraSpec, grid: Grid, M: int, n_max: int, coupling: float,
                    s: float = 1.0, k_max: int = 1, levels: int = 3,
                    bound_trials: int = 0, seed: int = 0) -> SpectrumReport:
    """Spectrum of the energy operator compressed to the safe block (``sum n <= n_max - 4``)."""
    if n_max < 5:
        raise ValueError("need n_max >= 5 so the safe block holds at least two sectors")
    fb = FockBasis(M, n_max)
    idx = fb.safe_indices(4)
    if len(idx) > DENSE_LIMIT:
        raise ValueError(f"safe block dimension {len(idx)} exceeds dense limit {DENSE_LIMIT}")
    mb = build_mode_basis(g, grid, M, k_max)
    es = build_energy_symbol(mb, coupling, s, n_max)
    H = assemble_H(es, fb)
    A = _as_dense_hermitian(H.safe_block(4))
    grades = fb.grades[idx]
    evals = np.linalg.eigvalsh(A)
    mm = vn_minimax(A, grades, levels)
    slack = None
    if bound_trials:
        slack = bound_check(H, es, fb, bound_trials, seed).min_slack
    return SpectrumReport(
        M=M, n_max=n_max, coupling=float(coupling), s=float(s), n=grid.n, h=grid.h,
        gauge_group=g.label, block_dim=len(idx), k=es.k,
        eigenvalues=[float(x) for x in evals],
        sector_minima=sector_minima(A, grades),
        minimax=mm,
        gap=float(mm[1] - mm[0]),
        conventional_gap=float(evals[1] - evals[0]),
        min_slack=slack,
    )


def gap_scan(g: LieAlgebraSpec, grid: Grid, Ms, n_maxes, couplings, s: float = 1.0,
             k_max: int = 1, bound_trials: int = 0, seed: int = 0) -> tuple[list[SpectrumReport], list[str]]:
    """Reports over the product of configurations, plus notices for skipped ones."""
    reports, skipped = [], []
    for M in Ms:
        for n_max in n_maxes:
            dim = FockBasis(M, max(n_max - 4, 0)).dim
            if dim > DENSE_LIMIT:
                msg = f"skipped M={M} n_max={n_max}: safe block dimension {dim} > {DENSE_LIMIT}"
                log.warning(msg)
                skipped.append(msg)
                continue
            for c in couplings:
                reports.append(spectrum_report(g, grid, M, n_max, c, s, k_max,
                                               bound_trials=bound_trials, seed=seed))
    return reports, skipped


# --------------------------------------------------------------------------
# contraction identity for the quartic Killing polynomial
# --------------------------------------------------------------------------

def _component_coords(g: LieAlgebraSpec, n_comp: int):
    """Real coordinates ``a[p][i] = (z + z*)/sqrt(2)`` for ``n_comp`` algebra-valued components."""
    M = n_comp * g.dim_g
    out = []
    for p in range(n_comp):
        row = []
        for i in range(g.dim_g):
            m = p * g.dim_g + i
            row.append((PolynomialSymbol.z(M, m) + PolynomialSymbol.zbar(M, m)) * (1 / np.sqrt(2)))
        out.append(row)
    return out


def killing_quartic(g: LieAlgebraSpec) -> PolynomialSymbol:
    """``1/2 [a_1, a_2] * [a_1, a_2]`` for two algebra-valued components."""
    a1, a2 = _component_coords(g, 2)
    d = g.dim_g
    out = PolynomialSymbol(2 * d)
    for k in range(d):
        comp = PolynomialSymbol(2 * d)
        for i, j in zip(*np.nonzero(np.abs(g.c[:, :, k]) > 1e-14)):
            comp = comp + a1[i] * a2[j] * g.c[i, j, k]
        out = out + comp * comp * 0.5
    return _clean(out, 1e-14)


def casimir_quadratic(g: LieAlgebraSpec, coeff: float) -> PolynomialSymbol:
    """``coeff * sum_p a_p C a_p`` with ``C`` the contracted structure constants."""
    C = casimir_contract(g)
    comps = _component_coords(g, 2)
    out = PolynomialSymbol(2 * g.dim_g)
    for a in comps:
        for i, l in zip(*np.nonzero(np.abs(C) > 1e-14)):
            out = out + a[i] * a[l] * (coeff * C[i, l])
    return _clean(out, 1e-14)


def wick_mass_term(g: LieAlgebraSpec, s: float) -> PolynomialSymbol:
    """Quadratic part of ``heat_transform(killing_quartic, s)``."""
    return _clean(heat_transform(killing_quartic(g), s).homogeneous(total=2), 1e-14)
