"""Compact semisimple Lie algebras from explicit matrix generators.

The working basis is orthonormal for the Killing product
``X * Y = -Trace(ad X ad Y)``, so structure constants come out totally
antisymmetric and the metric is the identity.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

TOL = 1e-12

__all__ = [
    "LieAlgebraSpec",
    "build_algebra",
    "killing_product",
    "casimir_contract",
    "parse_gauge_group",
    "jacobi_residual",
    "antisymmetry_residual",
]


@dataclass(frozen=True)
class LieAlgebraSpec:
    """Structure constants, Killing metric and defining-representation generators.

    ``c[i, j, k]`` is the coefficient of ``e_k`` in ``[e_i, e_j]``.
    ``generators[i]`` is the matrix of ``e_i`` in the defining representation
    (anti-Hermitian for su(N), real antisymmetric for so(N)).
    """

    dim_g: int
    c: np.ndarray
    metric: np.ndarray
    label: str
    generators: np.ndarray | None = field(default=None, repr=False)

    @property
    def N(self) -> int:
        return 0 if self.generators is None else self.generators.shape[-1]

    def ad(self, X) -> np.ndarray:
        """Matrix of ``ad X`` acting on coefficient vectors: ``(ad X)[k, j] = X_i c[i, j, k]``."""
        X = np.asarray(X, dtype=float)
        return np.einsum("...i,ijk->...kj", X, self.c)

    def bracket(self, X, Y) -> np.ndarray:
        """Pointwise bracket of coefficient arrays with the Lie index last."""
        return np.einsum("...i,...j,ijk->...k", X, Y, self.c)

    def to_matrix(self, X) -> np.ndarray:
        if self.generators is None:
            raise ValueError(f"{self.label} has no matrix realization")
        return np.einsum("...i,iab->...ab", np.asarray(X), self.generators)

    def from_matrix(self, A) -> np.ndarray:
        """Coefficients of algebra-valued matrices ``A`` (shape ``(..., N, N)``)."""
        if self.generators is None:
            raise ValueError(f"{self.label} has no matrix realization")
        T = self.generators
        gram = np.einsum("iab,jab->ij", T.conj(), T).real
        rhs = np.einsum("iab,...ab->...i", T.conj(), A).real
        return np.linalg.solve(gram, rhs[..., None])[..., 0]


def _su_generators(N: int) -> list[np.ndarray]:
    # -(i/2) x generalized Gell-Mann matrices; for N = 2 this gives [e_i, e_j] = eps_ijk e_k
    gens = []
    for j, k in combinations(range(N), 2):
        S = np.zeros((N, N), complex)
        S[j, k] = S[k, j] = 1.0
        gens.append(S)
        A = np.zeros((N, N), complex)
        A[j, k], A[k, j] = -1j, 1j
        gens.append(A)
    for l in range(1, N):
        D = np.zeros((N, N), complex)
        D[np.arange(l), np.arange(l)] = 1.0
        D[l, l] = -l
        gens.append(D * np.sqrt(2.0 / (l * (l + 1))))
    return [-0.5j * G for G in gens]


def _so_generators(N: int) -> list[np.ndarray]:
    gens = []
    for a, b in combinations(range(N), 2):
        E = np.zeros((N, N), complex)
        E[a, b], E[b, a] = 1.0, -1.0
        gens.append(E)
    return gens


def _structure_constants(T: np.ndarray) -> np.ndarray:
    gram = np.einsum("iab,jab->ij", T.conj(), T)
    comm = np.einsum("iab,jbc->ijac", T, T) - np.einsum("jab,ibc->ijac", T, T)
    rhs = np.einsum("kab,ijab->ijk", T.conj(), comm)
    c = np.linalg.solve(gram, rhs.reshape(-1, len(T)).T).T.reshape(rhs.shape)
    recon = np.einsum("ijk,kab->ijab", c, T)
    if np.max(np.abs(recon - comm)) > 1e-10 or np.max(np.abs(c.imag)) > 1e-10:
        raise ValueError("generators do not close under the commutator")
    return c.real


def _killing_metric(c: np.ndarray) -> np.ndarray:
    # -Trace(ad e_i ad e_l) with (ad e_i)[k, j] = c[i, j, k]
    return -np.einsum("ijk,lkj->il", c, c)


def build_algebra(group_id: str, N: int, orthonormalize: bool = True) -> LieAlgebraSpec:
    """Build su(N) or so(N) in a Killing-orthonormal basis.

    Raises ``ValueError`` for unsupported groups or a degenerate Killing metric.
    """
    if group_id == "su":
        if N < 2:
            raise ValueError("su(N) requires N >= 2")
        gens = _su_generators(N)
    elif group_id == "so":
        if N < 3:
            raise ValueError("so(N) requires N >= 3")
        gens = _so_generators(N)
    else:
        raise ValueError(f"unsupported gauge group {group_id!r}; expected 'su' or 'so'")
    T = np.array(gens)
    c = _structure_constants(T)
    metric = _killing_metric(c)
    w, V = np.linalg.eigh(metric)
    if w.min() <= TOL * max(1.0, w.max()):
        raise ValueError(f"degenerate Killing metric for {group_id}({N}): not semisimple")
    if orthonormalize:
        S = V @ np.diag(w ** -0.5) @ V.T
        T = np.einsum("ia,ibc->abc", S, T)
        c = _structure_constants(T)
        metric = _killing_metric(c)
        # symmetrize away rounding so the identity metric is exact
        metric = 0.5 * (metric + metric.T)
    return LieAlgebraSpec(dim_g=len(T), c=c, metric=metric, label=f"{group_id}{N}", generators=T)


def parse_gauge_group(name: str, N: int | None = None) -> LieAlgebraSpec:
    """Accept config spellings ``su2``, ``su3``, ``suN``/``soN`` (with ``N``) or ``so5``."""
    name = name.strip().lower()
    group_id, rest = name[:2], name[2:]
    if rest in ("", "n"):
        if N is None:
            raise ValueError(f"gauge_group {name!r} needs an integer N")
        return build_algebra(group_id, int(N))
    if not rest.isdigit():
        raise ValueError(f"cannot parse gauge_group {name!r}")
    return build_algebra(group_id, int(rest))


def killing_product(g: LieAlgebraSpec, X, Y) -> float:
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if X.shape != (g.dim_g,) or Y.shape != (g.dim_g,):
        raise ValueError(f"expected coefficient vectors of length {g.dim_g}")
    return float(X @ g.metric @ Y)


def casimir_contract(g: LieAlgebraSpec) -> np.ndarray:
    """``M[i, l] = sum_{j,k} c[i, j, k] c[l, j, k]``."""
    return np.einsum("ijk,ljk->il", g.c, g.c)


def jacobi_residual(g: LieAlgebraSpec) -> float:
    c = g.c
    r = (np.einsum("ijm,mkl->ijkl", c, c)
         + np.einsum("jkm,mil->ijkl", c, c)
         + np.einsum("kim,mjl->ijkl", c, c))
    return float(np.max(np.abs(r))) if r.size else 0.0


def antisymmetry_residual(g: LieAlgebraSpec) -> float:
    """Largest deviation from total antisymmetry of ``c`` under index permutations."""
    c = g.c
    perms = [c.transpose(1, 0, 2), c.transpose(0, 2, 1), c.transpose(2, 1, 0)]
    return float(max(np.max(np.abs(c + p)) for p in perms)) if c.size else 0.0
