"""Gauge-covariant vector calculus and the gauge Helmholtz projector.

``div_a`` is the negative lattice adjoint of ``grad_a``, so
``<-grad_a u | v> = <u | div_a v>`` holds to rounding and ``Delta_a`` is
symmetric negative semidefinite.  On the periodic cube ``Delta_a`` has a
kernel (covariantly constant fields; for ``a = 0`` and even ``n`` the central
difference also annihilates the staggered modes).  That kernel is detected
by block inverse iteration and deflated out of the conjugate-gradient solve.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .lattice import CauchyData, Grid, covariant_divergence, diff, gauge_transform
from .lie import LieAlgebraSpec

log = logging.getLogger(__name__)

__all__ = [
    "SolverConfig",
    "NonConvergenceError",
    "RankDeficiencyError",
    "inner",
    "gauge_grad",
    "gauge_div",
    "gauge_laplacian",
    "GaugeLaplacian",
    "solve_laplacian",
    "helmholtz_project",
    "transversal",
    "OrbitResult",
    "minimize_orbit",
    "projector_identities",
    "fourier_residuals",
]


class NonConvergenceError(RuntimeError):
    def __init__(self, msg, residual):
        super().__init__(f"{msg} (last relative residual {residual:.3e})")
        self.residual = residual


class RankDeficiencyError(ValueError):
    def __init__(self, msg, kernel_component):
        super().__init__(f"{msg} (relative kernel component {kernel_component:.3e})")
        self.kernel_component = kernel_component


@dataclass(frozen=True)
class SolverConfig:
    tol: float = 1e-8
    max_iter: int | None = None
    deflate_tol: float = 1e-10

    def __post_init__(self):
        if not 0 < self.tol < 1:
            raise ValueError(f"tol must lie in (0, 1), got {self.tol}")
        if self.max_iter is not None and self.max_iter < 1:
            raise ValueError("max_iter must be positive")
        if self.deflate_tol < 0:
            raise ValueError("deflate_tol must be nonnegative")

    def iterations(self, ndof: int) -> int:
        return self.max_iter if self.max_iter is not None else 10 * ndof


def inner(x: np.ndarray, y: np.ndarray, grid: Grid) -> float:
    """Lattice L2 inner product (Killing-orthonormal Lie index)."""
    return float(grid.cell * np.sum(x * y))


def gauge_grad(g: LieAlgebraSpec, grid: Grid, a: np.ndarray, u: np.ndarray,
               coupling: float = 1.0) -> np.ndarray:
    """``grad_a u = D_k u - [a_k, u]`` stacked on the axis index."""
    if u.shape != grid.scalar_shape(g) or a.shape != grid.gauge_shape(g):
        raise ValueError("shape mismatch between a, u and the grid")
    return np.stack([diff(u, k, grid.h) - coupling * g.bracket(a[..., k, :], u) for k in range(3)],
                    axis=-2)


def gauge_div(g: LieAlgebraSpec, grid: Grid, a: np.ndarray, v: np.ndarray,
              coupling: float = 1.0) -> np.ndarray:
    if v.shape != grid.gauge_shape(g) or a.shape != grid.gauge_shape(g):
        raise ValueError("shape mismatch between a, v and the grid")
    return covariant_divergence(g, grid, a, v, coupling)


def gauge_laplacian(g: LieAlgebraSpec, grid: Grid, a: np.ndarray, u: np.ndarray,
                    coupling: float = 1.0) -> np.ndarray:
    return gauge_div(g, grid, a, gauge_grad(g, grid, a, u, coupling), coupling)


def _diff_matrix(n: int, h: float, axis: int) -> sp.csr_matrix:
    d1 = sp.diags([np.ones(n - 1), -np.ones(n - 1), [1.0], [-1.0]],
                  [1, -1, -(n - 1), n - 1], shape=(n, n)) / (2.0 * h)
    if n == 2:
        d1 = sp.csr_matrix((n, n))  # forward and backward neighbours coincide
    eye = sp.identity(n, format="csr")
    mats = [eye, eye, eye]
    mats[axis] = d1
    return sp.kron(sp.kron(mats[0], mats[1]), mats[2], format="csr")


class GaugeLaplacian:
    """Assembled ``-Delta_a = grad_a^T grad_a`` with its detected kernel.

    Vectors are flattened scalar fields ``(x, y, z, lie)`` in C order.
    """

    def __init__(self, g: LieAlgebraSpec, grid: Grid, a: np.ndarray, cfg: SolverConfig | None = None,
                 coupling: float = 1.0):
        self.g, self.grid, self.a = g, grid, a
        self.cfg = cfg or SolverConfig()
        self.coupling = coupling
        n, d = grid.n, g.dim_g
        self.shape = grid.scalar_shape(g)
        self.ndof = n ** 3 * d
        blocks = []
        for k in range(3):
            Dk = sp.kron(_diff_matrix(n, grid.h, k), sp.identity(d), format="csr")
            adk = g.ad(a[..., k, :]).reshape(-1, d, d)
            blocks.append(Dk - coupling * sp.block_diag(list(adk), format="csr"))
        self.G = sp.vstack(blocks, format="csr")  # maps u to (axis-major) gradient
        self.L = (self.G.T @ self.G).tocsr()
        self._kernel = None

    def matvec(self, x: np.ndarray) -> np.ndarray:
        return self.L @ x

    @property
    def kernel(self) -> np.ndarray:
        """Orthonormal basis (columns) of eigenvectors with eigenvalue below ``deflate_tol``."""
        if self._kernel is None:
            self._kernel = self._detect_kernel()
        return self._kernel

    def _detect_kernel(self) -> np.ndarray:
        L, N = self.L, self.ndof
        scale = max(abs(L).sum(axis=1).max(), 1.0)
        shift = 1e-8 * scale
        lu = spla.splu((L + shift * sp.identity(N, format="csc")).tocsc())
        rng = np.random.default_rng(12345)
        p = min(N, 8 * self.g.dim_g + 4)
        while True:
            X = np.linalg.qr(rng.standard_normal((N, p)))[0]
            for _ in range(4):
                X = np.linalg.qr(lu.solve(X))[0]
            w, V = np.linalg.eigh(X.T @ (L @ X))
            X = X @ V
            small = np.abs(w) < self.cfg.deflate_tol
            if small.all() and p < N:
                p = min(N, 2 * p)
                continue
            K = X[:, small]
            log.debug("gauge Laplacian kernel dimension %d (block %d)", K.shape[1], p)
            return K

    def solve(self, f: np.ndarray, scale: float = 0.0) -> np.ndarray:
        """Solve ``Delta_a u = f`` on the orthogonal complement of the kernel.

        Tolerances are relative to ``max(|f|, scale)``; callers whose ``f`` is
        itself a small derived quantity (a divergence) pass the size it should
        be measured against.
        """
        cfg = self.cfg
        b = -np.asarray(f, dtype=float).reshape(-1)
        bnorm = max(np.linalg.norm(b), scale)
        if bnorm == 0.0:
            return np.zeros(self.shape)
        K = self.kernel
        kb = K.T @ b
        kernel_part = np.linalg.norm(kb) / bnorm
        if kernel_part > cfg.tol:
            raise RankDeficiencyError("right-hand side has a component in the kernel of Delta_a",
                                      kernel_part)
        b = b - K @ kb
        bnorm = max(np.linalg.norm(b), scale)
        if bnorm == 0.0:
            return np.zeros(self.shape)

        def project(x):
            return x - K @ (K.T @ x)

        x = np.zeros_like(b)
        r = b.copy()
        p = r.copy()
        rr = r @ r
        maxit = cfg.iterations(self.ndof)
        for it in range(maxit):
            if np.sqrt(rr) <= cfg.tol * bnorm:
                break
            Ap = project(self.L @ p)
            alpha = rr / (p @ Ap)
            x += alpha * p
            r -= alpha * Ap
            rr_new = r @ r
            p = r + (rr_new / rr) * p
            rr = rr_new
        else:
            raise NonConvergenceError(f"CG did not converge in {maxit} iterations",
                                      np.sqrt(rr) / bnorm)
        # report the true residual, not the recursive one
        res = np.linalg.norm(project(self.L @ x) - b) / bnorm
        if res > 10 * cfg.tol:
            raise NonConvergenceError("CG residual drifted above tolerance", res)
        return project(x).reshape(self.shape)

    def project(self, v: np.ndarray) -> np.ndarray:
        """``P_a v = grad_a Delta_a^{-1} div_a v``."""
        f = gauge_div(self.g, self.grid, self.a, v, self.coupling)
        u = self.solve(f, scale=np.linalg.norm(v) / self.grid.h)
        return gauge_grad(self.g, self.grid, self.a, u, self.coupling)


def solve_laplacian(g: LieAlgebraSpec, grid: Grid, a: np.ndarray, f: np.ndarray,
                    cfg: SolverConfig | None = None, coupling: float = 1.0) -> np.ndarray:
    return GaugeLaplacian(g, grid, a, cfg, coupling).solve(f)


def helmholtz_project(g: LieAlgebraSpec, grid: Grid, a: np.ndarray, v: np.ndarray,
                      cfg: SolverConfig | None = None, coupling: float = 1.0) -> np.ndarray:
    return GaugeLaplacian(g, grid, a, cfg, coupling).project(v)


def transversal(g: LieAlgebraSpec, grid: Grid, c: CauchyData, cfg: SolverConfig | None = None,
                coupling: float = 1.0) -> CauchyData:
    """``(a, e - P_a e)``."""
    return CauchyData(c.a.copy(), c.e - helmholtz_project(g, grid, c.a, c.e, cfg, coupling))


def projector_identities(g: LieAlgebraSpec, grid: Grid, a: np.ndarray, v: np.ndarray,
                         w: np.ndarray, u: np.ndarray, cfg: SolverConfig | None = None) -> dict:
    """Relative residuals of the projector identities for one draw of fields."""
    op = GaugeLaplacian(g, grid, a, cfg)
    norm = np.linalg.norm
    Pv = op.project(v)
    PPv = op.project(Pv)
    Pw = op.project(w)
    gu = gauge_grad(g, grid, a, u)
    Pgu = op.project(gu)
    lhs = inner(-gu, v, grid)
    rhs = inner(u, gauge_div(g, grid, a, v), grid)
    scale = np.sqrt(inner(gu, gu, grid) * inner(v, v, grid))
    return {
        "adjointness": abs(lhs - rhs) / scale,
        "idempotence": norm(PPv - Pv) / max(norm(Pv), 1e-300),
        "grad_fixed": norm(Pgu - gu) / norm(gu),
        "div_transversal": norm(gauge_div(g, grid, a, v - Pv)) / norm(v),
        "orthogonality": abs(inner(Pv, w - Pw, grid)) / (norm(v) * norm(w) * grid.cell),
        "kernel_dimension": int(op.kernel.shape[1]),
    }


def fourier_residuals(g: LieAlgebraSpec, grid: Grid, cfg: SolverConfig | None = None,
                      momentum=(1, 2, 0), lie: int = 0) -> dict:
    """Compare the solver and projector at ``a = 0`` with plane-wave closed forms.

    With ``s_j = sin(k_j h) / h`` the central difference maps ``cos(k.x)`` to
    ``-s_j sin(k.x)``, so ``Delta_0 cos = -|s|^2 cos``; ``s * cos`` is
    longitudinal (a lattice gradient of ``sin / 1``) and anything orthogonal
    to ``s`` times ``cos`` is transversal.
    """
    k = 2 * np.pi * np.asarray(momentum, float) / (grid.n * grid.h)
    s = np.sin(k * grid.h) / grid.h
    s2 = float(s @ s)
    if s2 < 1e-12:
        raise ValueError("momentum is annihilated by the central difference")
    phase = grid.coords() @ k
    zero = grid.zeros(g)
    op = GaugeLaplacian(g, grid, zero, cfg)
    f = np.zeros(grid.scalar_shape(g))
    f[..., lie] = np.cos(phase)
    u = op.solve(f)
    long_dir = s / np.sqrt(s2)
    trans_dir = np.cross(long_dir, np.eye(3)[np.argmin(np.abs(long_dir))])
    trans_dir /= np.linalg.norm(trans_dir)
    vl = np.zeros_like(zero)
    vt = np.zeros_like(zero)
    vl[..., :, lie] = np.cos(phase)[..., None] * long_dir
    vt[..., :, lie] = np.cos(phase)[..., None] * trans_dir
    return {
        "solve": float(np.max(np.abs(u + f / s2))),
        "longitudinal": float(np.max(np.abs(op.project(vl) - vl))),
        "transversal": float(np.max(np.abs(op.project(vt)))),
    }


@dataclass
class OrbitResult:
    a: np.ndarray
    converged: bool
    iterations: int
    grad_norm: float
    norm: float


def _exp_algebra(g: LieAlgebraSpec, u: np.ndarray) -> np.ndarray:
    return scipy.linalg.expm(g.to_matrix(u))


def minimize_orbit(g: LieAlgebraSpec, grid: Grid, a: np.ndarray, cfg: SolverConfig | None = None,
                   max_iter: int | None = None) -> OrbitResult:
    """Steepest descent of ``||a^g||^2`` over lattice gauge functions.

    The gradient with respect to an infinitesimal gauge parameter ``u`` at the
    identity is ``-2 div a`` (ordinary divergence; the bracket term drops out
    by ad-invariance), so stationary points are divergence free.  Each step
    applies ``g = exp(alpha div a)`` to the current iterate with Armijo
    backtracking on ``alpha``.
    """
    cfg = cfg or SolverConfig()
    if not np.all(np.isfinite(a)):
        raise ValueError("connection has non-finite entries")
    zero = np.zeros_like(a)
    maxit = max_iter if max_iter is not None else cfg.iterations(grid.n ** 3 * g.dim_g)

    def objective(x):
        return grid.cell * np.sum(x * x)

    def l2(x):
        return np.sqrt(grid.cell * np.sum(x * x))

    cur = a.copy()
    f = objective(cur)
    step = grid.h ** 2 / 3.0
    for it in range(maxit + 1):
        d = gauge_div(g, grid, zero, cur)
        gnorm = l2(d)
        if gnorm < cfg.tol:
            return OrbitResult(cur, True, it, gnorm, np.sqrt(f))
        if it == maxit:
            break
        slope = 2.0 * grid.cell * np.sum(d * d)
        alpha = 2.0 * step
        while True:
            trial = gauge_transform(g, grid, cur, _exp_algebra(g, alpha * d))
            ft = objective(trial)
            if ft <= f - 1e-4 * alpha * slope:
                break
            alpha *= 0.5
            if alpha < 1e-14 * step:
                log.warning("orbit minimization: line search stalled at iteration %d", it)
                return OrbitResult(cur, False, it, gnorm, np.sqrt(f))
        step = alpha
        cur, f = trial, ft
    return OrbitResult(cur, False, maxit, gnorm, np.sqrt(f))
