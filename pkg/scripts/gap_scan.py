"""Gap trend versus truncation and coupling for su(2) on a small lattice.

    python scripts/gap_scan.py --n 8 --M 2 3 4 --n-max 6 7 8 --coupling 0 0.5 1 2 > gaps.csv
"""
import argparse
import csv
import sys

from ymgap.lattice import Grid
from ymgap.lie import parse_gauge_group
from ymgap.spectrum import gap_scan


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--group", default="su2")
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--h", type=float, default=1.0)
    p.add_argument("--M", type=int, nargs="+", default=[2, 3, 4])
    p.add_argument("--n-max", type=int, nargs="+", default=[6, 7, 8])
    p.add_argument("--coupling", type=float, nargs="+", default=[0.0, 0.5, 1.0, 2.0])
    p.add_argument("--trials", type=int, default=50)
    args = p.parse_args()
    g = parse_gauge_group(args.group)
    reports, skipped = gap_scan(g, Grid(args.n, args.h), args.M, args.n_max, args.coupling,
                                bound_trials=args.trials, seed=0)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["M", "n_max", "coupling", "k", "lambda0", "lambda1", "gap", "conventional_gap", "min_slack",
                "lambda0_minus_k"])
    for r in reports:
        w.writerow([r.M, r.n_max, r.coupling, f"{r.k:.12g}", f"{r.lambda0:.12g}", f"{r.lambda1:.12g}",
                    f"{r.gap:.12g}", f"{r.conventional_gap:.12g}", f"{r.min_slack:.3g}", f"{r.lambda0 - r.k:.3g}"])
    for msg in skipped:
        print(msg, file=sys.stderr)


if __name__ == "__main__":
    main()
