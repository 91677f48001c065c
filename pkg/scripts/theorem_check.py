"""Tabulate xi against 1 + R on witness Hamiltonians for isotropic assemblages.

    python scripts/theorem_check.py --dims 2 3 --etas 0.6 0.8 1.0
"""

import argparse

from steerkit.assemblage import isotropic_assemblage
from steerkit.cooling import certified_advantage
from steerkit.mub import mub_family
from steerkit.steering import robustness_dual


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--dims", type=int, nargs="+", default=[2, 3])
    ap.add_argument("--etas", type=float, nargs="+", default=[0.6, 0.8, 1.0])
    ap.add_argument("--eps", type=float, nargs="+", default=[0.1, 1.0, 10.0])
    ap.add_argument("--betas", type=float, nargs="+", default=[0.1, 1.0, 10.0])
    args = ap.parse_args()
    print(f"{'d':>2} {'eta':>5} {'eps':>5} {'beta':>5} {'1+R':>10} {'xi':>10} {'S':>12} {'z':>10}  verdict")
    for d in args.dims:
        f = mub_family(d)
        for eta in args.etas:
            a = isotropic_assemblage(d, eta, f)
            res = robustness_dual(a)
            for beta in args.betas:
                for eps in args.eps:
                    r = certified_advantage(a, eps, beta, robustness=res)
                    xi = "-" if r.xi is None else f"{r.xi:10.6f}"
                    print(f"{d:2d} {eta:5.2f} {eps:5.1f} {beta:5.1f} {r.one_plus_R:10.6f} {xi:>10} "
                          f"{r.S:12.9f} {r.z:10.6f}  {r.verdict.value}")


if __name__ == "__main__":
    main()
