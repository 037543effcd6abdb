"""Excess versus the first excess bound on the max-norm plane.

For each L, scans eps over (0, L/2) and prints E, the bound and the gap,
followed by the bisection summary (eps* and whether the gap ever changes sign).
"""

import argparse
import csv
import sys

import numpy as np

from agcomp.excess import ag1_bound
from agcomp.kernels import CurvatureDimension
from agcomp.models import linf_counterexample, linf_violation_threshold


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--L", type=float, nargs="+", default=[0.5, 1.0, 4.0])
    ap.add_argument("--points", type=int, default=12)
    args = ap.parse_args()
    cd = CurvatureDimension(0.0, 2.0)
    w = csv.writer(sys.stdout)
    w.writerow(["L", "eps", "E", "h", "l", "bound", "gap", "E_over_h"])
    for L in args.L:
        for eps in np.geomspace(1e-6 * L, 0.49 * L, args.points):
            _, _, st = linf_counterexample(L, float(eps))
            b = ag1_bound(cd, st.h, st.l)
            w.writerow([L, eps, st.E, st.h, st.l, b, st.E - b, st.E / st.h])
    for L in args.L:
        res = linf_violation_threshold(L)
        print(f"# L={L}: eps*={res['eps_star']!r} sign_change={res['sign_change']}", file=sys.stderr)


if __name__ == "__main__":
    main()
