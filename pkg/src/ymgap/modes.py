"""Finite set of transversal lattice Fourier modes and complex mode coordinates.

Each mode is a real field ``u_m(x) = profile(x) * pol * e_lie`` with a cosine
or sine profile of a nonzero lattice momentum, a polarization orthogonal to
the central-difference symbol ``s(k)_j = sin(k_j h) / h``, and one Killing
orthonormal Lie basis vector.  Mode fields are orthonormal for the grid inner
product ``h^3 sum_x``.

Complex coordinates are frequency scaled,

    z_m = (sqrt(w_m) A_m + i E_m / sqrt(w_m)) / sqrt(2),

so that the free energy is ``sum_m w_m z*_m z_m``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .lattice import CauchyData, Grid
from .lie import LieAlgebraSpec

__all__ = ["Mode", "ModeBasis", "build_mode_basis"]


@dataclass(frozen=True)
class Mode:
    momentum: tuple[int, int, int]  # integer lattice momentum; physical k = 2 pi m / (n h)
    profile: str  # "cos" or "sin"
    polarization: int
    lie_index: int
    omega: float
    pol_vector: tuple[float, float, float]


@dataclass(frozen=True)
class ModeBasis:
    g: LieAlgebraSpec
    grid: Grid
    modes: tuple[Mode, ...]
    fields: np.ndarray = field(repr=False)  # (M, n, n, n, 3, dim_g)

    @property
    def M(self) -> int:
        return len(self.modes)

    @property
    def omegas(self) -> np.ndarray:
        return np.array([m.omega for m in self.modes])

    def amplitudes(self, z) -> tuple[np.ndarray, np.ndarray]:
        """Real mode amplitudes ``(A, E)`` of complex coordinates ``z``."""
        z = np.asarray(z, dtype=complex)
        w = self.omegas
        return np.sqrt(2 / w) * z.real, np.sqrt(2 * w) * z.imag

    def to_fields(self, z) -> CauchyData:
        A, E = self.amplitudes(z)
        return CauchyData(np.tensordot(A, self.fields, axes=1), np.tensordot(E, self.fields, axes=1))

    def from_fields(self, c: CauchyData) -> np.ndarray:
        """Orthogonal projection of ``(a, e)`` onto the mode span, as coordinates ``z``."""
        cell = self.grid.cell
        A = cell * np.tensordot(self.fields, c.a, axes=c.a.ndim)
        E = cell * np.tensordot(self.fields, c.e, axes=c.e.ndim)
        w = self.omegas
        return (np.sqrt(w) * A + 1j * E / np.sqrt(w)) / np.sqrt(2)

    def gram(self) -> np.ndarray:
        F = self.fields.reshape(self.M, -1)
        return self.grid.cell * F @ F.T


def _polarizations(s: np.ndarray) -> list[np.ndarray]:
    """Two orthonormal vectors orthogonal to ``s`` (deterministic choice)."""
    s = s / np.linalg.norm(s)
    trial = np.eye(3)[np.argmin(np.abs(s))]
    p0 = trial - (trial @ s) * s
    p0 /= np.linalg.norm(p0)
    p1 = np.cross(s, p0)
    return [p0, p1]


def _momenta(n: int, k_max: int) -> list[tuple[int, int, int]]:
    """One representative of each nonzero ``+-m`` pair with ``max|m_i| <= k_max``.

    Momenta with a Nyquist component are skipped: the central difference
    annihilates them.
    """
    half = n // 2
    rng = [i for i in range(-half, half + 1) if abs(i) <= k_max]
    out = []
    for m in product(rng, repeat=3):
        if m == (0, 0, 0):
            continue
        if any((2 * x) % n == 0 and x != 0 for x in m):
            continue  # Nyquist components: central difference symbol vanishes
        if tuple(-x for x in m) > m:  # keep one of +-m
            continue
        out.append(m)
    return out


def build_mode_basis(g: LieAlgebraSpec, grid: Grid, M: int, k_max: int = 1) -> ModeBasis:
    """Lowest-frequency transversal modes, truncated to the first ``M``.

    Ordering: momenta by increasing frequency (ties broken by the momentum
    tuple, descending), then cosine before sine, then the ``2 * dim_g``
    polarization/Lie combinations of that profile in a staggered order
    (polarization 0 with ``e_t``, polarization 1 with ``e_{t+1}``) so that
    short prefixes already contain noncommuting modes.
    """
    if int(M) != M or M < 1:
        raise ValueError(f"mode count M must be a positive integer, got {M}")
    n, h = grid.n, grid.h
    x = np.arange(n)
    X = np.stack(np.meshgrid(x, x, x, indexing="ij"), axis=-1)
    d = g.dim_g
    entries = []
    for m in _momenta(n, k_max):
        k = 2 * np.pi * np.array(m) / (n * h)
        s = np.sin(k * h) / h
        omega = float(np.linalg.norm(s))
        if omega < 1e-12:
            continue
        entries.append((omega, m, k, s))
    entries.sort(key=lambda t: (round(t[0], 12), tuple(-v for v in t[1])))
    modes, fields = [], []
    for omega, m, k, s in entries:
        phase = (X * h) @ k
        pols = _polarizations(s)
        for prof_name, prof in (("cos", np.cos(phase)), ("sin", np.sin(phase))):
            prof = prof / np.sqrt(grid.cell * np.sum(prof ** 2))
            for j in range(2 * d):
                t = j // 2
                p = j % 2
                lie = t if p == 0 else (t + 1) % d
                u = np.zeros((n, n, n, 3, d))
                u[..., :, lie] = prof[..., None] * pols[p]
                modes.append(Mode(tuple(int(v) for v in m), prof_name, p, lie, omega, tuple(pols[p])))
                fields.append(u)
                if len(modes) == M:
                    return ModeBasis(g, grid, tuple(modes), np.array(fields))
    raise ValueError(f"only {len(modes)} transversal modes available with k_max = {k_max}; requested M = {M}")
