"""Which heat-transform parameter relates anti-Wick and normal quantization?

Scans s and reports the safe-block residual of
antiwick(sym) - normal(heat_transform(sym, s)) for random symbols.
"""
import numpy as np

from ymgap.fock import FockBasis, ordering_shift, quantize_antiwick, quantize_normal
from ymgap.symbols import heat_transform, random_symbol


def main():
    rng = np.random.default_rng(0)
    syms = [random_symbol(1 + i % 3, 4, rng) for i in range(20)]
    print("s,worst_residual")
    for s in np.linspace(0.0, 1.5, 7):
        worst = 0.0
        for sym in syms:
            basis = FockBasis(sym.M, 10)
            d = sym.degree
            diff = quantize_antiwick(sym, basis).safe_block(d) - quantize_normal(heat_transform(sym, s), basis).safe_block(d)
            worst = max(worst, float(np.max(np.abs(diff))))
        print(f"{s:.2f},{worst:.3e}")
    print(f"# matrix-determined shift: {ordering_shift()}")


if __name__ == "__main__":
    main()
