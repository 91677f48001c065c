"""Locate the visibility where the SDP robustness of the isotropic MUB assemblage turns positive.

Bisects on eta and compares with the closed-form thresholds.

    python scripts/threshold_scan.py --dims 2 3
"""

import argparse

from steerkit.assemblage import isotropic_assemblage
from steerkit.bounds import thresholds
from steerkit.mub import mub_family
from steerkit.steering import STEERABLE_R, robustness_dual


def onset(d, iters=30):
    f = mub_family(d)
    lo, hi = 0.0, 1.0
    for _ in range(iters):
        mid = (lo + hi) / 2
        if robustness_dual(isotropic_assemblage(d, mid, f)).R > STEERABLE_R:
            hi = mid
        else:
            lo = mid
    return (lo + hi) / 2


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--dims", type=int, nargs="+", default=[2, 3])
    args = ap.parse_args()
    print(" d   SDP onset   (H_d-1)/(d-1)   advantage")
    for d in args.dims:
        t = thresholds(d)
        print(f"{d:2d}  {onset(d):10.6f}  {t.unsteerable:14.6f}  {t.advantage:10.6f}")


if __name__ == "__main__":
    main()
