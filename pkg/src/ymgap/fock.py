"""Truncated bosonic Fock space over ``M`` complex modes.

Basis states are occupation vectors with total particle number at most
``n_max``, enumerated grade by grade (total number ascending) and, inside a
grade, in descending lexicographic order.  Operators are stored as sparse CSR
matrices.

Two quantizations of a polynomial symbol ``sum c z*^alpha z^beta`` are provided:

* normal: ``c (a^dagger)^alpha a^beta``
* anti-Wick: ``c a^beta (a^dagger)^alpha``

Both are computed from closed-form matrix elements rather than by multiplying
ladder matrices; the tests check the two agree.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from math import comb, factorial
from pathlib import Path

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .symbols import PolynomialSymbol, heat_transform

DENSE_LIMIT = 4096

__all__ = [
    "DENSE_LIMIT",
    "FockBasis",
    "FockOperator",
    "ladder",
    "number_operator",
    "coherent_vector",
    "coherent_tail",
    "quantize_normal",
    "quantize_antiwick",
    "ordering_shift",
    "kernel_check",
    "weyl_relation_check",
]


def _compositions(total: int, M: int):
    """All length-``M`` tuples summing to ``total``, descending lexicographic."""
    if M == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, M - 1):
            yield (first,) + rest


@dataclass(frozen=True)
class FockBasis:
    M: int
    n_max: int

    def __post_init__(self):
        if int(self.M) != self.M or self.M < 1:
            raise ValueError(f"mode count M must be a positive integer, got {self.M}")
        if int(self.n_max) != self.n_max or self.n_max < 0:
            raise ValueError(f"n_max must be a nonnegative integer, got {self.n_max}")

    @property
    def dim(self) -> int:
        return comb(self.M + self.n_max, self.M)

    @cached_property
    def states(self) -> np.ndarray:
        """Occupation vectors, shape ``(dim, M)``."""
        rows = [s for d in range(self.n_max + 1) for s in _compositions(d, self.M)]
        return np.array(rows, dtype=np.int64).reshape(-1, self.M)

    @cached_property
    def grades(self) -> np.ndarray:
        return self.states.sum(axis=1)

    @cached_property
    def _codes(self):
        codes = self._encode(self.states)
        order = np.argsort(codes)
        return codes[order], order

    def _encode(self, occ: np.ndarray) -> np.ndarray:
        base = self.n_max + 1
        return occ @ (base ** np.arange(self.M - 1, -1, -1, dtype=np.int64))

    def index_of(self, occ) -> np.ndarray:
        """Basis indices of occupation vectors (each must lie in the basis)."""
        occ = np.atleast_2d(np.asarray(occ, dtype=np.int64))
        if occ.shape[-1] != self.M or np.any(occ < 0) or np.any(occ.sum(-1) > self.n_max):
            raise ValueError("occupation vector outside the truncated basis")
        sorted_codes, order = self._codes
        return order[np.searchsorted(sorted_codes, self._encode(occ))]

    def safe_indices(self, degree: int) -> np.ndarray:
        """States with ``sum n <= n_max - degree``; the grade-ordering makes this a prefix."""
        return np.flatnonzero(self.grades <= self.n_max - degree)

    def sector(self, n: int) -> np.ndarray:
        return np.flatnonzero(self.grades == n)


@dataclass(frozen=True)
class FockOperator:
    matrix: sp.csr_matrix
    basis: FockBasis
    ordering: str = "none"
    degree: int = 0
    provenance: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.matrix.shape != (self.basis.dim, self.basis.dim):
            raise ValueError(f"matrix shape {self.matrix.shape} does not match basis dimension {self.basis.dim}")

    @property
    def shape(self):
        return self.matrix.shape

    def toarray(self) -> np.ndarray:
        if self.basis.dim > DENSE_LIMIT:
            raise ValueError(f"dimension {self.basis.dim} exceeds dense limit {DENSE_LIMIT}")
        return self.matrix.toarray()

    def safe_block(self, degree: int | None = None) -> np.ndarray:
        """Dense compression onto the safe block for the given (default: own) degree."""
        d = self.degree if degree is None else degree
        idx = self.basis.safe_indices(d)
        return self.matrix[idx][:, idx].toarray()

    def hermiticity_residual(self, safe: bool = True) -> float:
        A = self.safe_block() if safe else self.toarray()
        return float(np.max(np.abs(A - A.conj().T))) if A.size else 0.0

    def __matmul__(self, other: "FockOperator") -> "FockOperator":
        return FockOperator((self.matrix @ other.matrix).tocsr(), self.basis, "product",
                            self.degree + other.degree, f"({self.provenance})@({other.provenance})")

    def dump(self, path) -> Path:
        """Write a JSON header line followed by ``row col re im`` lines."""
        path = Path(path)
        coo = self.matrix.tocoo()
        order = np.lexsort((coo.col, coo.row))
        header = {
            "format": "ymgap-fock-operator-v1",
            "M": self.basis.M,
            "n_max": self.basis.n_max,
            "dim": self.basis.dim,
            "enumeration": "grade ascending, descending lexicographic within grade",
            "ordering": self.ordering,
            "degree": self.degree,
            "provenance": self.provenance,
            "nnz": int(len(order)),
        }
        with path.open("w") as fh:
            fh.write(json.dumps(header, sort_keys=True) + "\n")
            for i in order:
                v = coo.data[i]
                fh.write(f"{coo.row[i]} {coo.col[i]} {v.real:.17g} {v.imag:.17g}\n")
        return path

    @classmethod
    def load(cls, path) -> "FockOperator":
        lines = Path(path).read_text().splitlines()
        header = json.loads(lines[0])
        basis = FockBasis(header["M"], header["n_max"])
        if not lines[1:]:
            data = np.zeros((0, 4))
        else:
            data = np.array([ln.split() for ln in lines[1:]], dtype=float).reshape(-1, 4)
        mat = sp.csr_matrix((data[:, 2] + 1j * data[:, 3], (data[:, 0].astype(int), data[:, 1].astype(int))),
                            shape=(basis.dim, basis.dim))
        return cls(mat, basis, header["ordering"], header["degree"], header["provenance"])


def _check_mode(m: int, basis: FockBasis):
    if int(m) != m or not 0 <= m < basis.M:
        raise IndexError(f"mode index {m} out of range for M = {basis.M}")


def ladder(m: int, kind: str, basis: FockBasis) -> FockOperator:
    """Annihilation or creation operator of mode ``m``; creation kills the top grade."""
    _check_mode(m, basis)
    S = basis.states
    if kind == "annihilate":
        src = np.flatnonzero(S[:, m] > 0)
        tgt = S[src].copy()
        tgt[:, m] -= 1
        vals = np.sqrt(S[src, m].astype(float))
    elif kind == "create":
        src = np.flatnonzero(basis.grades < basis.n_max)
        tgt = S[src].copy()
        tgt[:, m] += 1
        vals = np.sqrt(tgt[:, m].astype(float))
    else:
        raise ValueError(f"kind must be 'create' or 'annihilate', got {kind!r}")
    rows = basis.index_of(tgt) if len(src) else np.zeros(0, int)
    mat = sp.csr_matrix((vals.astype(complex), (rows, src)), shape=(basis.dim, basis.dim))
    return FockOperator(mat, basis, kind, 1, f"{kind}[{m}]")


def number_operator(basis: FockBasis, m: int | None = None) -> FockOperator:
    """Total number operator, or that of mode ``m``."""
    if m is not None:
        _check_mode(m, basis)
        diag = basis.states[:, m]
    else:
        diag = basis.grades
    return FockOperator(sp.diags(diag.astype(complex)).tocsr(), basis, "normal", 2,
                        "N" if m is None else f"N[{m}]")


def coherent_vector(z, basis: FockBasis) -> np.ndarray:
    """Components ``z^alpha / sqrt(alpha!)`` (unnormalized; ``<e_z|e_w> ~ exp(conj(z) w)``)."""
    z = np.asarray(z, dtype=complex).reshape(-1)
    if z.shape != (basis.M,):
        raise ValueError(f"expected {basis.M} mode amplitudes, got {z.shape}")
    S = basis.states
    fact = np.array([float(factorial(k)) for k in range(basis.n_max + 1)])
    return np.prod(z[None, :] ** S / np.sqrt(fact[S]), axis=1)


def coherent_tail(x: float, n_max: int) -> float:
    """Bound on ``sum_{k > n_max} x^k / k!`` for ``x >= 0`` (geometric majorant)."""
    x = abs(x)
    first = x ** (n_max + 1) / factorial(n_max + 1)
    ratio = x / (n_max + 2)
    return first / (1 - ratio) if ratio < 1 else float("inf")


def _factorials(n: int) -> np.ndarray:
    return np.array([float(factorial(k)) for k in range(n + 1)])


def _assemble(sym: PolynomialSymbol, basis: FockBasis, ordering: str, compress: bool) -> sp.csr_matrix:
    if sym.M != basis.M:
        raise ValueError(f"symbol has {sym.M} modes, basis has {basis.M}")
    S = basis.states
    grade = basis.grades
    fact = _factorials(basis.n_max + max(sym.degree, 1))
    rows, cols, vals = [], [], []
    for (alpha, beta), c in sym.terms.items():
        al = np.array(alpha, dtype=np.int64)
        be = np.array(beta, dtype=np.int64)
        da, db = al.sum(), be.sum()
        if ordering == "normal":
            # a^beta first, then creators (intermediate S - beta must be >= 0)
            ok = np.all(S >= be, axis=1) & (grade - db + da <= basis.n_max)
            src = S[ok]
            mid = src - be
            tgt = mid + al
            amp = np.sqrt(np.prod(fact[src] / fact[mid], axis=1) * np.prod(fact[tgt] / fact[mid], axis=1))
        elif ordering == "antiwick":
            # creators first (may leave the truncated space unless compressed), then a^beta
            ok = np.all(S + al >= be, axis=1) & (grade + da - db <= basis.n_max)
            if not compress:
                ok &= grade + da <= basis.n_max
            src = S[ok]
            mid = src + al
            tgt = mid - be
            amp = np.prod(fact[mid], axis=1) / np.sqrt(np.prod(fact[src], axis=1) * np.prod(fact[tgt], axis=1))
        else:
            raise ValueError(f"unknown ordering {ordering!r}")
        if not len(src):
            continue
        rows.append(basis.index_of(tgt))
        cols.append(np.flatnonzero(ok))
        vals.append(c * amp)
    if not rows:
        return sp.csr_matrix((basis.dim, basis.dim), dtype=complex)
    mat = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                        shape=(basis.dim, basis.dim))
    mat.sum_duplicates()
    return mat


def _check_degree(sym: PolynomialSymbol, basis: FockBasis):
    if sym.degree > basis.n_max:
        raise ValueError(f"symbol degree {sym.degree} exceeds cutoff n_max = {basis.n_max}")


def quantize_normal(sym: PolynomialSymbol, basis: FockBasis, provenance: str = "") -> FockOperator:
    """Creators to the left: ``z*^alpha z^beta -> (a^dagger)^alpha a^beta``."""
    _check_degree(sym, basis)
    return FockOperator(_assemble(sym, basis, "normal", False), basis, "normal", sym.degree, provenance)


def quantize_antiwick(sym: PolynomialSymbol, basis: FockBasis, compress: bool = False,
                      provenance: str = "") -> FockOperator:
    """Annihilators to the left: ``z*^alpha z^beta -> a^beta (a^dagger)^alpha``.

    With ``compress=False`` the product of truncated ladder matrices is
    reproduced, which is exact only on the safe block.  ``compress=True``
    returns the compression of the untruncated Toeplitz operator to the
    truncated space, exact on every basis state; in that case the degree
    limit does not apply.
    """
    if not compress:
        _check_degree(sym, basis)
    return FockOperator(_assemble(sym, basis, "antiwick", compress), basis,
                        "antiwick-compressed" if compress else "antiwick", sym.degree, provenance)


def ordering_shift(n_max: int = 6) -> float:
    """Heat-transform parameter relating anti-Wick and normal quantization of ``z* z``.

    Determined from matrices alone: ``antiwick(z*z) - normal(z*z)`` is ``s``
    times the identity on the safe block.
    """
    basis = FockBasis(1, n_max)
    sym = PolynomialSymbol.monomial((1,), (1,))
    diff = quantize_antiwick(sym, basis).safe_block() - quantize_normal(sym, basis).safe_block(2)
    shift = np.diag(diff).real
    off = diff - np.diag(np.diag(diff))
    if np.ptp(shift) > 1e-12 or (off.size and np.max(np.abs(off)) > 1e-12):
        raise ArithmeticError("anti-Wick minus normal is not a multiple of the identity")
    return float(shift.mean())


def kernel_check(sym: PolynomialSymbol, basis: FockBasis, samples, s: float = 1.0,
                 tail_tol: float = 1e-6) -> dict:
    """Compare coherent-state expectations of the anti-Wick operator with the symbol.

    Deviations are scaled by ``exp(|z|^2)``.  ``uncorrected`` compares with
    ``sym(z) exp(|z|^2)``; ``corrected`` with ``heat_transform(sym, s)(z) exp(|z|^2)``.
    """
    samples = np.atleast_2d(np.asarray(samples, dtype=complex))
    op = quantize_antiwick(sym, basis, compress=True).matrix
    corr = heat_transform(sym, s)
    worst_tail = 0.0
    dev_raw, dev_cor = [], []
    for z in samples:
        r2 = float(np.vdot(z, z).real)
        tail = coherent_tail(r2, basis.n_max - sym.degree) * (1 + r2) ** sym.degree
        worst_tail = max(worst_tail, tail / np.exp(r2))
        if worst_tail > tail_tol:
            raise ValueError(f"sample |z|^2 = {r2:g} outside validated tail region (tail {worst_tail:.2e})")
        v = coherent_vector(z, basis)
        lhs = np.vdot(v, op @ v)
        scale = np.exp(r2)
        dev_raw.append(abs(lhs - sym.evaluate(z) * scale) / scale)
        dev_cor.append(abs(lhs - corr.evaluate(z) * scale) / scale)
    return {"uncorrected": float(max(dev_raw)), "corrected": float(max(dev_cor)),
            "s": s, "tail_bound": worst_tail, "samples": len(samples)}


def weyl_relation_check(z, basis: FockBasis, block: int | None = None) -> float:
    """Residual of ``e^{z* a} e^{z a^dagger} = e^{|z|^2} e^{z a^dagger} e^{z* a}``.

    Dense exponentials of truncated ladder combinations, compared on states
    with total number at most ``block`` (default ``n_max // 2``).
    """
    z = np.asarray(z, dtype=complex).reshape(-1)
    if z.shape != (basis.M,):
        raise ValueError(f"expected {basis.M} mode amplitudes")
    A = sum(np.conj(z[m]) * ladder(m, "annihilate", basis).toarray() for m in range(basis.M))
    C = sum(z[m] * ladder(m, "create", basis).toarray() for m in range(basis.M))
    eA, eC = scipy.linalg.expm(A), scipy.linalg.expm(C)
    lhs = eA @ eC
    rhs = np.exp(np.vdot(z, z).real) * eC @ eA
    idx = basis.safe_indices(basis.n_max - (basis.n_max // 2 if block is None else block))
    return float(np.max(np.abs((lhs - rhs)[np.ix_(idx, idx)])))
