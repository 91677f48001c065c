"""Write the cooling-advantage lower-bound surface over (d, eta) as CSV.

    python scripts/fig3_surface.py --dmax 50 --step 0.02 --out fig3.csv
"""

import argparse
import sys

from steerkit.bounds import FIG3_COLUMNS, eta_grid, fig3_surface, rows_to_csv


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--dmin", type=int, default=2)
    ap.add_argument("--dmax", type=int, default=50)
    ap.add_argument("--step", type=float, default=0.02)
    ap.add_argument("--out", default=None)
    args = ap.parse_args()
    rows = fig3_surface(range(args.dmin, args.dmax + 1), eta_grid(0, 1, args.step))
    if args.out:
        with open(args.out, "w") as fh:
            rows_to_csv(rows, FIG3_COLUMNS, fh)
    else:
        rows_to_csv(rows, FIG3_COLUMNS, sys.stdout)


if __name__ == "__main__":
    main()
