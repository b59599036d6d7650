"""Chernoff-product error versus step count, free mode and interacting su(2) modes.

    python scripts/chernoff_convergence.py --t 1.0 --n-max 8
"""
import argparse

import numpy as np

from ymgap.fock import FockBasis
from ymgap.lattice import Grid
from ymgap.lie import build_algebra
from ymgap.modes import build_mode_basis
from ymgap.propagator import convergence_study
from ymgap.spectrum import build_energy_symbol
from ymgap.symbols import PolynomialSymbol


def show(label, study):
    print(f"# {label}: exact = {study['exact']:.12g}, fitted order {study['order']:.3f}, "
          f"coherent tail <= {study['tail_bound']:.1e}")
    print("N,error,action_re,action_im")
    for r in study["rows"]:
        print(f"{r['N']},{r['error']:.6e},{r['action_re']:.6g},{r['action_im']:.6g}")


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--n-max", type=int, default=8)
    p.add_argument("--coupling", type=float, default=1.0)
    p.add_argument("--N", type=int, nargs="+", default=[4, 8, 16, 32, 64])
    args = p.parse_args()
    free = PolynomialSymbol.quadratic_form([[1.0]])
    show("free mode, w = 1", convergence_study(free, [0.5], [0.3 + 0.2j], args.t, args.N, FockBasis(1, 16)))
    mb = build_mode_basis(build_algebra("su", 2), Grid(4), 2)
    H = build_energy_symbol(mb, args.coupling).sym
    study = convergence_study(H, np.array([0.4, 0.3j]), np.array([0.3, 0.2 + 0.1j]), args.t, args.N,
                              FockBasis(2, args.n_max), "quadrature")
    show(f"su(2), 2 modes, coupling {args.coupling}, n_max {args.n_max}", study)


if __name__ == "__main__":
    main()
