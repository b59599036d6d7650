"""Chernoff-product approximation of coherent-state transition amplitudes.

One time step of length ``tau`` is the anti-Wick (Toeplitz) quantization of
the phase factor ``exp(-i tau H(z*, z))``, compressed to the truncated Fock
space.  ``N`` steps applied to a coherent vector approximate
``<e_zt| exp(-i t H_hat) |e_z0>`` with ``H_hat`` the compressed anti-Wick
quantization of ``H``; the error is first order in ``1/N``.

Two step constructions are available:

* ``taylor``: expand the phase factor to a finite order and quantize each
  power exactly (convergent for quadratic ``H`` when ``tau * |H|`` is small;
  only asymptotic for quartic ``H``);
* ``quadrature``: tensor Gauss-Hermite quadrature of the Toeplitz integral in
  the ``2M`` real coordinates (``M <= 2``).

Both estimate their own accuracy by doubling the order.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import factorial

import numpy as np
import scipy.sparse as sp
from scipy.special import roots_hermite

from .fock import DENSE_LIMIT, FockBasis, FockOperator, coherent_tail, coherent_vector, quantize_antiwick
from .symbols import PolynomialSymbol

__all__ = [
    "QuadratureError",
    "PropagationConfig",
    "chernoff_step",
    "limit_operator",
    "propagate",
    "exact_amplitude",
    "discrete_action",
    "convergence_study",
]

_CHUNK = 50_000


class QuadratureError(RuntimeError):
    """The step operator failed its order-doubling accuracy test."""

    def __init__(self, msg: str, disagreement: float):
        super().__init__(msg)
        self.disagreement = disagreement


@dataclass(frozen=True)
class PropagationConfig:
    t: float
    N: int
    method: str = "taylor"  # or "quadrature"
    order: int | None = None  # Taylor order or Gauss-Hermite points per real axis
    tol: float = 1e-10

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ValueError(f"number of steps N must be a positive integer, got {self.N}")
        if self.method not in ("taylor", "quadrature"):
            raise ValueError(f"unknown step method {self.method!r}")
        if self.order is not None and self.order < 1:
            raise ValueError("order must be positive")

    @property
    def tau(self) -> float:
        return self.t / self.N


def limit_operator(H_sym: PolynomialSymbol, fb: FockBasis) -> FockOperator:
    """Compressed anti-Wick quantization of ``H``: the generator the product converges to."""
    return quantize_antiwick(H_sym, fb, compress=True)


def _taylor_step(H_sym, tau, fb, order, tol=0.0, max_order=200):
    """Sum of quantized Taylor terms; with ``order=None`` stop once two
    consecutive terms fall below ``tol / 10``."""
    term = PolynomialSymbol.constant(fb.M)
    total = quantize_antiwick(term, fb, compress=True).matrix
    small = 0
    k = 0
    while order is None or k < order:
        k += 1
        if order is None and k > max_order:
            raise QuadratureError(f"Taylor series not converged after {max_order} terms", float("inf"))
        term = term * H_sym * (-1j * tau / k)
        part = quantize_antiwick(term, fb, compress=True).matrix
        total = total + part
        size = abs(part).max() if part.nnz else 0.0
        small = small + 1 if size < tol / 10 else 0
        if order is None and small >= 2:
            break
    return total.tocsr(), k


def _reference_frequency(H_sym: PolynomialSymbol) -> float:
    """Mean real coefficient of the ``z*_m z_m`` terms (0 if there are none)."""
    M = H_sym.M
    vals = []
    for m in range(M):
        unit = tuple(int(i == m) for i in range(M))
        c = H_sym.coefficient(unit, unit)
        if c != 0:
            vals.append(c.real)
    return float(np.mean(vals)) if vals else 0.0


def _quadrature_step(H_sym, tau, fb, order):
    # The Gaussian e^{-|z|^2} and the free phase e^{-i tau w |z|^2} are merged
    # into e^{-c |z|^2}, c = 1 + i tau w, and the real integration axes are
    # rotated by c^{-1/2}.  The remaining integrand is entire and decays along
    # the rotated contour, so plain Gauss-Hermite nodes apply.
    M = fb.M
    w_ref = _reference_frequency(H_sym)
    c = 1 + 1j * tau * w_ref
    rest = H_sym - PolynomialSymbol.quadratic_form(w_ref * np.eye(M))
    x, w = roots_hermite(order)
    axes = np.meshgrid(*([x] * (2 * M)), indexing="ij")
    weights = np.ones_like(axes[0])
    for wg in np.meshgrid(*([w] * (2 * M)), indexing="ij"):
        weights = weights * wg
    scale = 1 / np.sqrt(c)
    re = np.stack([a.ravel() for a in axes[0::2]], axis=1) * scale
    im = np.stack([a.ravel() for a in axes[1::2]], axis=1) * scale
    z, zb = re + 1j * im, re - 1j * im
    weights = weights.ravel() / (np.pi * c) ** M
    S = fb.states
    norm = np.sqrt(np.array([np.prod([float(factorial(v)) for v in row]) for row in S]))
    T = np.zeros((fb.dim, fb.dim), complex)
    for lo in range(0, len(z), _CHUNK):
        sl = slice(lo, lo + _CHUNK)
        f = np.exp(-1j * tau * _evaluate_many(rest, z[sl], zb[sl]))
        phi = _monomials(z[sl], S, fb.n_max) / norm  # z^p / sqrt(p!)
        phib = _monomials(zb[sl], S, fb.n_max) / norm
        # <p|T|q> = int f z^p conj(z)^q dmu / sqrt(p! q!)
        T += (phi * (weights[sl] * f)[:, None]).T @ phib
    return T


def _monomials(z: np.ndarray, S: np.ndarray, n_max: int) -> np.ndarray:
    """``z^p`` for every point (rows) and occupation vector ``p`` (columns)."""
    powers = z[:, :, None] ** np.arange(n_max + 1)  # (points, M, n_max + 1)
    out = powers[:, 0, S[:, 0]]
    for m in range(1, z.shape[1]):
        out = out * powers[:, m, S[:, m]]
    return out


def _evaluate_many(sym: PolynomialSymbol, z: np.ndarray, zb: np.ndarray) -> np.ndarray:
    """Evaluate with ``z`` and ``z*`` treated as independent variables."""
    out = np.zeros(len(z), complex)
    for (a, b), coef in sym.terms.items():
        out += coef * np.prod(zb ** np.array(a), axis=1) * np.prod(z ** np.array(b), axis=1)
    return out


def chernoff_step(H_sym: PolynomialSymbol, tau: float, fb: FockBasis, method: str = "taylor",
                  order: int | None = None, tol: float = 1e-10, check: bool = True) -> FockOperator:
    """Anti-Wick quantization of ``exp(-i tau H)`` compressed to ``fb``.

    Raises :class:`QuadratureError` when doubling the Taylor order or the
    quadrature order changes the matrix by more than ``tol``.
    """
    if H_sym.M != fb.M:
        raise ValueError(f"symbol has {H_sym.M} modes, basis has {fb.M}")
    if tau == 0 or not H_sym.terms:
        return quantize_antiwick(PolynomialSymbol.constant(fb.M), fb, compress=True)
    if method == "taylor":
        mat, used = _taylor_step(H_sym, tau, fb, order, tol)
        if check and order is not None:
            fine, _ = _taylor_step(H_sym, tau, fb, 2 * order)
            gap = abs(fine - mat).max()
            if gap > tol:
                raise QuadratureError(f"Taylor order {order} disagrees with order {2 * order} by {gap:.2e}", gap)
            mat = fine
    elif method == "quadrature":
        if fb.M > 2:
            raise ValueError("quadrature path supports M <= 2 only")
        order = order or (fb.n_max + 6)
        dense = _quadrature_step(H_sym, tau, fb, order)
        if check:
            fine = _quadrature_step(H_sym, tau, fb, 2 * order)
            gap = np.abs(fine - dense).max()
            if gap > tol:
                raise QuadratureError(f"{order}-point quadrature disagrees with {2 * order} points by {gap:.2e}", gap)
            dense = fine
        mat = sp.csr_matrix(dense)
    else:
        raise ValueError(f"unknown step method {method!r}")
    return FockOperator(mat.tocsr(), fb, "antiwick-compressed", H_sym.degree,
                        f"exp(-i tau H), tau={tau:g}, {method}")


def propagate(H_sym: PolynomialSymbol, z0, zt, cfg: PropagationConfig, fb: FockBasis,
              step: FockOperator | None = None) -> complex:
    """``<e_zt| A^N |e_z0>`` with ``A`` the Chernoff step for ``tau = t / N``."""
    if step is None:
        step = chernoff_step(H_sym, cfg.tau, fb, cfg.method, cfg.order, cfg.tol)
    v = coherent_vector(z0, fb)
    for _ in range(cfg.N):
        v = step.matrix @ v
    return complex(np.vdot(coherent_vector(zt, fb), v))


def exact_amplitude(H: FockOperator, z0, zt, t: float) -> complex:
    """``<e_zt| exp(-i t H) |e_z0>`` by Hermitian eigendecomposition."""
    if H.basis.dim > DENSE_LIMIT:
        raise ValueError(f"dimension {H.basis.dim} exceeds dense limit {DENSE_LIMIT}")
    A = H.toarray()
    res = np.max(np.abs(A - A.conj().T))
    if res > 1e-10 * max(1.0, np.abs(A).max()):
        raise ValueError(f"generator is not Hermitian (residual {res:.2e})")
    w, V = np.linalg.eigh(0.5 * (A + A.conj().T))
    v0 = coherent_vector(z0, H.basis)
    vt = coherent_vector(zt, H.basis)
    return complex(np.vdot(V.conj().T @ vt, np.exp(-1j * t * w) * (V.conj().T @ v0)))


def discrete_action(H_sym: PolynomialSymbol, z0, zt, t: float, N: int) -> complex:
    """``sum_j [(z_{j+1} - z_j)* z_j - i tau H(z_j)]`` on the straight path from ``z0`` to ``zt``."""
    z0 = np.asarray(z0, complex)
    zt = np.asarray(zt, complex)
    tau = t / N
    path = [z0 + (zt - z0) * j / N for j in range(N + 1)]
    return complex(sum(np.vdot(path[j + 1] - path[j], path[j]) - 1j * tau * H_sym.evaluate(path[j])
                       for j in range(N)))


def convergence_study(H_sym: PolynomialSymbol, z0, zt, t: float, N_list, fb: FockBasis,
                      method: str = "taylor", order: int | None = None, tol: float = 1e-10) -> dict:
    """Chernoff error against the exact amplitude for each ``N`` and the fitted order."""
    exact = exact_amplitude(limit_operator(H_sym, fb), z0, zt, t)
    rows = []
    for N in N_list:
        cfg = PropagationConfig(t, N, method, order, tol)
        amp = propagate(H_sym, z0, zt, cfg, fb)
        rows.append({
            "N": int(N),
            "amplitude_re": amp.real,
            "amplitude_im": amp.imag,
            "error": abs(amp - exact),
            "action_re": discrete_action(H_sym, z0, zt, t, N).real,
            "action_im": discrete_action(H_sym, z0, zt, t, N).imag,
        })
    Ns = np.array([r["N"] for r in rows], float)
    errs = np.array([r["error"] for r in rows])
    ok = errs > 0
    order_fit = float(-np.polyfit(np.log(Ns[ok]), np.log(errs[ok]), 1)[0]) if ok.sum() >= 2 else float("nan")
    r2 = max(float(np.vdot(z0, z0).real), float(np.vdot(zt, zt).real))
    return {"exact": exact, "rows": rows, "order": order_fit,
            "tail_bound": coherent_tail(r2, fb.n_max)}
