"""Sparse polynomials in complex mode coordinates ``(z*, z)``.

A symbol ``sum c[alpha, beta] z*^alpha z^beta`` is stored as a dict keyed by
pairs of multi-indices (tuples of length ``M``): ``alpha`` counts conjugate
variables, ``beta`` holomorphic ones.
"""
from __future__ import annotations

from math import factorial
from numbers import Number

import numpy as np

__all__ = ["PolynomialSymbol", "heat_transform", "random_symbol"]


def _add(x: tuple, y: tuple) -> tuple:
    return tuple(i + j for i, j in zip(x, y))


class PolynomialSymbol:
    __slots__ = ("M", "terms")

    def __init__(self, M: int, terms: dict | None = None):
        self.M = int(M)
        self.terms = {}
        for (alpha, beta), c in (terms or {}).items():
            alpha, beta = tuple(alpha), tuple(beta)
            if len(alpha) != self.M or len(beta) != self.M:
                raise ValueError(f"multi-index length must be {self.M}")
            if c != 0:
                self.terms[(alpha, beta)] = self.terms.get((alpha, beta), 0) + complex(c)

    # -- constructors -------------------------------------------------------
    @classmethod
    def constant(cls, M: int, c: complex = 1.0) -> "PolynomialSymbol":
        zero = (0,) * M
        return cls(M, {(zero, zero): c})

    @classmethod
    def _unit(cls, M, m):
        if not 0 <= m < M:
            raise IndexError(f"mode {m} out of range for M = {M}")
        return tuple(int(i == m) for i in range(M))

    @classmethod
    def z(cls, M: int, m: int) -> "PolynomialSymbol":
        return cls(M, {((0,) * M, cls._unit(M, m)): 1.0})

    @classmethod
    def zbar(cls, M: int, m: int) -> "PolynomialSymbol":
        return cls(M, {(cls._unit(M, m), (0,) * M): 1.0})

    @classmethod
    def monomial(cls, alpha, beta, c: complex = 1.0) -> "PolynomialSymbol":
        return cls(len(alpha), {(tuple(alpha), tuple(beta)): c})

    @classmethod
    def quadratic_form(cls, L) -> "PolynomialSymbol":
        """``z* L z`` for an ``M x M`` matrix ``L``."""
        L = np.asarray(L)
        M = L.shape[0]
        terms = {}
        for i in range(M):
            for j in range(M):
                if L[i, j] != 0:
                    terms[(cls._unit(M, i), cls._unit(M, j))] = L[i, j]
        return cls(M, terms)

    # -- arithmetic ---------------------------------------------------------
    def _coerce(self, other) -> "PolynomialSymbol":
        if isinstance(other, PolynomialSymbol):
            if other.M != self.M:
                raise ValueError(f"mode count mismatch: {self.M} vs {other.M}")
            return other
        if isinstance(other, Number):
            return PolynomialSymbol.constant(self.M, other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        terms = dict(self.terms)
        for k, c in other.terms.items():
            terms[k] = terms.get(k, 0) + c
        return PolynomialSymbol(self.M, {k: c for k, c in terms.items() if c != 0})

    __radd__ = __add__

    def __neg__(self):
        return PolynomialSymbol(self.M, {k: -c for k, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Number):
            return PolynomialSymbol(self.M, {k: c * other for k, c in self.terms.items()})
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        terms = {}
        for (a1, b1), c1 in self.terms.items():
            for (a2, b2), c2 in other.terms.items():
                key = (_add(a1, a2), _add(b1, b2))
                terms[key] = terms.get(key, 0) + c1 * c2
        return PolynomialSymbol(self.M, terms)

    def __rmul__(self, other):
        return self * other

    def __pow__(self, k: int):
        if int(k) != k or k < 0:
            raise ValueError("only nonnegative integer powers")
        out = PolynomialSymbol.constant(self.M)
        for _ in range(int(k)):
            out = out * self
        return out

    def __len__(self):
        return len(self.terms)

    def __iter__(self):
        return iter(sorted(self.terms.items()))

    def __repr__(self):
        if not self.terms:
            return "PolynomialSymbol(0)"
        parts = []
        for (alpha, beta), c in sorted(self.terms.items()):
            mono = "".join(f" z*{m}^{p}" for m, p in enumerate(alpha) if p)
            mono += "".join(f" z{m}^{p}" for m, p in enumerate(beta) if p)
            parts.append(f"({c:.6g}){mono}")
        return "PolynomialSymbol(" + " + ".join(parts) + ")"

    # -- structure ----------------------------------------------------------
    @property
    def degree(self) -> int:
        return max((sum(a) + sum(b) for a, b in self.terms), default=0)

    def coefficient(self, alpha, beta) -> complex:
        return self.terms.get((tuple(alpha), tuple(beta)), 0j)

    def conj(self) -> "PolynomialSymbol":
        """Complex conjugate as a function on the diagonal ``w = z``."""
        return PolynomialSymbol(self.M, {(b, a): np.conj(c) for (a, b), c in self.terms.items()})

    def is_real(self, tol: float = 1e-12) -> bool:
        return (self - self.conj()).max_abs() <= tol

    def max_abs(self) -> float:
        return max((abs(c) for c in self.terms.values()), default=0.0)

    def allclose(self, other, tol: float = 1e-12) -> bool:
        return (self - other).max_abs() <= tol

    def prune(self, tol: float = 1e-14) -> "PolynomialSymbol":
        return PolynomialSymbol(self.M, {k: c for k, c in self.terms.items() if abs(c) > tol})

    def real_part_coefficients(self) -> "PolynomialSymbol":
        """Drop imaginary parts below rounding (useful after exact cancellations)."""
        return PolynomialSymbol(self.M, {k: (c.real if abs(c.imag) < 1e-15 * max(1, abs(c)) else c)
                                         for k, c in self.terms.items()})

    def homogeneous(self, n_conj: int | None = None, n_hol: int | None = None,
                    total: int | None = None) -> "PolynomialSymbol":
        """Terms with the given conjugate/holomorphic/total degrees."""
        out = {}
        for (a, b), c in self.terms.items():
            if n_conj is not None and sum(a) != n_conj:
                continue
            if n_hol is not None and sum(b) != n_hol:
                continue
            if total is not None and sum(a) + sum(b) != total:
                continue
            out[(a, b)] = c
        return PolynomialSymbol(self.M, out)

    def evaluate(self, z) -> complex:
        """Value on the diagonal: ``sum c conj(z)^alpha z^beta``."""
        z = np.asarray(z, dtype=complex)
        zb = np.conj(z)
        total = 0j
        for (a, b), c in self.terms.items():
            total += c * np.prod(zb ** np.array(a)) * np.prod(z ** np.array(b))
        return total

    def contract(self) -> "PolynomialSymbol":
        """Apply ``sum_m d/dz*_m d/dz_m``."""
        terms = {}
        for (a, b), c in self.terms.items():
            for m in range(self.M):
                if a[m] and b[m]:
                    a2 = a[:m] + (a[m] - 1,) + a[m + 1:]
                    b2 = b[:m] + (b[m] - 1,) + b[m + 1:]
                    terms[(a2, b2)] = terms.get((a2, b2), 0) + c * a[m] * b[m]
        return PolynomialSymbol(self.M, terms)


def heat_transform(sym: PolynomialSymbol, s: float) -> PolynomialSymbol:
    """``exp(s * sum_m d/dz*_m d/dz_m)`` applied exactly (the series terminates)."""
    out = sym
    term = sym
    k = 0
    while True:
        k += 1
        term = term.contract()
        if not term.terms:
            return out
        out = out + term * (s ** k / factorial(k))


def random_symbol(M: int, max_degree: int, rng: np.random.Generator, n_terms: int = 6,
                  real: bool = False) -> PolynomialSymbol:
    """Random sparse symbol with Gaussian complex coefficients.

    With ``real=True`` the result is made real on the diagonal by adding its
    conjugate.
    """
    terms = {}
    for _ in range(n_terms):
        deg = int(rng.integers(0, max_degree + 1))
        cuts = np.sort(rng.integers(0, deg + 1, size=2 * M - 1))
        parts = np.diff(np.concatenate([[0], cuts, [deg]]))
        key = (tuple(int(v) for v in parts[:M]), tuple(int(v) for v in parts[M:]))
        terms[key] = terms.get(key, 0) + complex(rng.normal(), rng.normal())
    sym = PolynomialSymbol(M, terms)
    return (sym + sym.conj()) * 0.5 if real else sym
