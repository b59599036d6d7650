"""Energy drift and Gauss-law error of the leapfrog integrator under dt-halving."""
import argparse

import numpy as np

from ymgap.helmholtz import SolverConfig, transversal
from ymgap.lattice import CauchyData, Grid, constraint_residual, covariant_divergence, energy, evolve
from ymgap.lie import parse_gauge_group
from ymgap.modes import build_mode_basis


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--group", default="su2")
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--T", type=float, default=1.0)
    p.add_argument("--amplitude", type=float, default=0.3)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()
    g = parse_gauge_group(args.group)
    grid = Grid(args.n)
    rng = np.random.default_rng(args.seed)
    mb = build_mode_basis(g, grid, 12)
    c = mb.to_fields(args.amplitude * (rng.normal(size=12) + 1j * rng.normal(size=12)))
    c0 = transversal(g, grid, CauchyData(c.a + 0.05 * rng.normal(size=c.a.shape), c.e), SolverConfig(tol=1e-12))
    E0 = energy(g, grid, c0)
    print(f"# initial energy {E0:.12g}, Gauss residual {constraint_residual(g, grid, c0):.2e}")
    print("dt,energy_drift,gauss_residual,drift_order,gauss_self_convergence_order")
    prev_drift, Gs = None, []
    for steps in (10, 20, 40, 80, 160):
        out = evolve(g, grid, c0, args.T / steps, steps)
        drift = abs(energy(g, grid, out) - E0)
        Gs.append(covariant_divergence(g, grid, out.a, out.e))
        order = np.log2(prev_drift / drift) if prev_drift else float("nan")
        gorder = (np.log2(np.linalg.norm(Gs[-3] - Gs[-2]) / np.linalg.norm(Gs[-2] - Gs[-1]))
                  if len(Gs) >= 3 else float("nan"))
        print(f"{args.T / steps:.5g},{drift:.3e},{constraint_residual(g, grid, out):.6e},{order:.3f},{gorder:.3f}")
        prev_drift = drift


if __name__ == "__main__":
    main()
