"""Periodic-cube discretization of temporal-gauge Cauchy data.

Fields are plain numpy arrays:

* gauge fields ``a``, ``e``: shape ``(n, n, n, 3, dim_g)``
* scalar (algebra-valued) fields ``u``: shape ``(n, n, n, dim_g)``
* curvature ``F``: shape ``(n, n, n, 3, dim_g)`` indexed by the axis pairs
  ``(0, 1), (0, 2), (1, 2)``.

All spatial derivatives are periodic central differences.  The dynamics is
the Hamiltonian flow of the lattice energy, integrated with kick-drift-kick
leapfrog (electric field at half steps internally, synchronized on output).
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

import numpy as np

from .lie import LieAlgebraSpec

PAIRS = ((0, 1), (0, 2), (1, 2))

__all__ = [
    "Grid",
    "CauchyData",
    "diff",
    "curvature",
    "full_curvature",
    "magnetic",
    "energy",
    "force",
    "evolve",
    "evolve_iter",
    "cfl_bound",
    "covariant_divergence",
    "constraint_residual",
    "gauge_transform",
    "save_cauchy",
    "load_cauchy",
]


@dataclass(frozen=True)
class Grid:
    n: int
    h: float = 1.0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"grid needs n >= 2 sites per axis, got {self.n}")
        if not self.h > 0:
            raise ValueError(f"lattice spacing must be positive, got {self.h}")

    @property
    def volume(self) -> float:
        return (self.n * self.h) ** 3

    @property
    def cell(self) -> float:
        return self.h ** 3

    def coords(self) -> np.ndarray:
        """Site coordinates, shape ``(n, n, n, 3)``."""
        x = np.arange(self.n) * self.h
        return np.stack(np.meshgrid(x, x, x, indexing="ij"), axis=-1)

    def gauge_shape(self, g: LieAlgebraSpec) -> tuple:
        return (self.n, self.n, self.n, 3, g.dim_g)

    def scalar_shape(self, g: LieAlgebraSpec) -> tuple:
        return (self.n, self.n, self.n, g.dim_g)

    def zeros(self, g: LieAlgebraSpec) -> np.ndarray:
        return np.zeros(self.gauge_shape(g))


@dataclass(frozen=True)
class CauchyData:
    a: np.ndarray
    e: np.ndarray

    def __post_init__(self):
        if self.a.shape != self.e.shape:
            raise ValueError(f"shape mismatch: a {self.a.shape} vs e {self.e.shape}")


def _check(g: LieAlgebraSpec, grid: Grid, *fields, scalar=False):
    shape = grid.scalar_shape(g) if scalar else grid.gauge_shape(g)
    for f in fields:
        if np.shape(f) != shape:
            raise ValueError(f"field shape {np.shape(f)} does not match {shape}")


def diff(f: np.ndarray, axis: int, h: float) -> np.ndarray:
    """Periodic central difference along spatial ``axis`` (0, 1 or 2)."""
    return (np.roll(f, -1, axis=axis) - np.roll(f, 1, axis=axis)) / (2.0 * h)


def full_curvature(g: LieAlgebraSpec, grid: Grid, a: np.ndarray, coupling: float = 1.0) -> np.ndarray:
    """Antisymmetric ``F[..., j, k, :]`` for all axis pairs."""
    F = np.zeros(a.shape[:3] + (3, 3, g.dim_g))
    for j, k in PAIRS:
        Fjk = (diff(a[..., k, :], j, grid.h) - diff(a[..., j, :], k, grid.h)
               - coupling * g.bracket(a[..., j, :], a[..., k, :]))
        F[..., j, k, :] = Fjk
        F[..., k, j, :] = -Fjk
    return F


def curvature(g: LieAlgebraSpec, grid: Grid, a: np.ndarray, coupling: float = 1.0) -> np.ndarray:
    """``F_jk = D_j a_k - D_k a_j - [a_j, a_k]`` for ``j < k`` in ``PAIRS`` order."""
    _check(g, grid, a)
    F = full_curvature(g, grid, a, coupling)
    return np.stack([F[..., j, k, :] for j, k in PAIRS], axis=-2)


def magnetic(g: LieAlgebraSpec, grid: Grid, a: np.ndarray, coupling: float = 1.0) -> np.ndarray:
    """``B = (F_23, F_31, F_12)``."""
    F = curvature(g, grid, a, coupling)
    return np.stack([F[..., 2, :], -F[..., 1, :], F[..., 0, :]], axis=-2)


def energy(g: LieAlgebraSpec, grid: Grid, c: CauchyData, coupling: float = 1.0) -> float:
    _check(g, grid, c.a, c.e)
    B = magnetic(g, grid, c.a, coupling)
    density = 0.5 * (np.einsum("...i,ij,...j->...", c.e, g.metric, c.e)
                     + np.einsum("...i,ij,...j->...", B, g.metric, B))
    return float(grid.cell * density.sum())


def force(g: LieAlgebraSpec, grid: Grid, a: np.ndarray, coupling: float = 1.0) -> np.ndarray:
    """Right-hand side of the electric equation, ``D_j F_jk - [a_j, F_jk]``.

    This is exactly minus the gradient of the lattice magnetic energy divided by
    the cell volume, so the semi-discrete system is Hamiltonian.
    """
    F = full_curvature(g, grid, a, coupling)
    out = np.zeros_like(a)
    for j in range(3):
        Fj = F[..., j, :, :]
        out += diff(Fj, j, grid.h) - coupling * g.bracket(a[..., j, None, :], Fj)
    return out


def cfl_bound(grid: Grid) -> float:
    return 0.5 * grid.h / np.sqrt(3.0)


def evolve_iter(g: LieAlgebraSpec, grid: Grid, c0: CauchyData, dt: float, steps: int,
                coupling: float = 1.0) -> Iterator[tuple[float, CauchyData]]:
    """Yield ``(t, data)`` after every leapfrog step (not including ``t = 0``)."""
    _check(g, grid, c0.a, c0.e)
    bound = cfl_bound(grid)
    if abs(dt) > bound:
        raise ValueError(f"time step |dt| = {abs(dt):g} exceeds stability bound {bound:g}")
    if steps < 1:
        raise ValueError("steps must be positive")
    a = c0.a.copy()
    e = c0.e.copy()
    f = force(g, grid, a, coupling)
    for s in range(1, steps + 1):
        e = e + 0.5 * dt * f
        a = a + dt * e
        f = force(g, grid, a, coupling)
        e = e + 0.5 * dt * f
        yield s * dt, CauchyData(a.copy(), e.copy())


def evolve(g: LieAlgebraSpec, grid: Grid, c0: CauchyData, dt: float, steps: int,
           coupling: float = 1.0) -> CauchyData:
    """Leapfrog integration to ``t = dt * steps``; a negative ``dt`` runs backwards."""
    out = c0
    for _, out in evolve_iter(g, grid, c0, dt, steps, coupling):
        pass
    return out


def covariant_divergence(g: LieAlgebraSpec, grid: Grid, a: np.ndarray, v: np.ndarray,
                         coupling: float = 1.0) -> np.ndarray:
    """``sum_k D_k v_k - [a_k, v_k]``."""
    out = np.zeros(v.shape[:3] + (g.dim_g,))
    for k in range(3):
        out += diff(v[..., k, :], k, grid.h) - coupling * g.bracket(a[..., k, :], v[..., k, :])
    return out


def constraint_residual(g: LieAlgebraSpec, grid: Grid, c: CauchyData, coupling: float = 1.0) -> float:
    """Grid L2 norm of the Gauss-law violation ``div_a e``."""
    _check(g, grid, c.a, c.e)
    G = covariant_divergence(g, grid, c.a, c.e, coupling)
    return float(np.sqrt(grid.cell * np.sum(G * G)))


def gauge_transform(g: LieAlgebraSpec, grid: Grid, a: np.ndarray, gfun: np.ndarray) -> np.ndarray:
    """``a^g = Ad(g) a + (D g) g^{-1}`` with ``gfun`` of shape ``(n, n, n, N, N)``.

    The sign of the inhomogeneous term is the one that makes the curvature
    ``D_j a_k - D_k a_j - [a_j, a_k]`` covariant, ``F(a^g) = Ad(g) F(a)`` (up
    to the lattice product-rule error).
    """
    _check(g, grid, a)
    gfun = np.asarray(gfun)
    if gfun.shape != (grid.n,) * 3 + (g.N, g.N):
        raise ValueError(f"gauge function shape {gfun.shape} does not match grid and N = {g.N}")
    ginv = np.conj(np.swapaxes(gfun, -1, -2))
    unit = np.max(np.abs(gfun @ ginv - np.eye(g.N)))
    if unit > 1e-10:
        raise ValueError(f"gauge function is not unitary (residual {unit:.3e})")
    out = np.empty_like(a)
    for k in range(3):
        A = g.to_matrix(a[..., k, :])
        Ag = gfun @ A @ ginv + diff(gfun, k, grid.h) @ ginv
        out[..., k, :] = g.from_matrix(Ag)
    return out


def save_cauchy(prefix, g: LieAlgebraSpec, grid: Grid, c: CauchyData, **meta) -> tuple[Path, Path]:
    """Write ``<prefix>.bin`` (a then e, float64 little-endian, C order
    ``(x, y, z, axis, lie)``) and a ``<prefix>.json`` header."""
    prefix = Path(prefix)
    header = {
        "format": "ymgap-cauchy-v1",
        "layout": ["field(a,e)", "x", "y", "z", "axis", "lie"],
        "dtype": "<f8",
        "n": grid.n,
        "h": grid.h,
        "dim_g": g.dim_g,
        "gauge_group": g.label,
        **meta,
    }
    bin_path = prefix.with_suffix(".bin")
    json_path = prefix.with_suffix(".json")
    np.stack([c.a, c.e]).astype("<f8").tofile(bin_path)
    json_path.write_text(json.dumps(header, indent=2, sort_keys=True) + "\n")
    return bin_path, json_path


def load_cauchy(prefix) -> tuple[dict, CauchyData]:
    prefix = Path(prefix)
    header = json.loads(prefix.with_suffix(".json").read_text())
    n, d = header["n"], header["dim_g"]
    data = np.fromfile(prefix.with_suffix(".bin"), dtype="<f8").reshape(2, n, n, n, 3, d)
    return header, CauchyData(data[0].copy(), data[1].copy())
