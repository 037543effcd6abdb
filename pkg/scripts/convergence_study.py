"""Mesh refinement of the discrete Laplacian comparison, phi supersolution and chain rule.

Prints one CSV row per (space, mesh): worst positive margins of
Delta(d^2/2) - N tau~ and Delta d - c, worst Delta phi - 1, the cubic
chain-rule residual, and the ratio to the previous mesh for each.
"""

import argparse
import csv
import sys

import numpy as np

from agcomp.graphs import (
    TOL_C,
    chain_rule_residual,
    grid_discretize,
    laplacian_comparison_check,
    phi_supersolution_check,
)
from agcomp.models import Euclidean, Hyperbolic

SPACES = {"euclidean": lambda K: Euclidean(2), "hyperbolic": lambda K: Hyperbolic(2, K)}
CUBIC = (lambda z: z**3 / 3, lambda z: z * z, lambda z: 2 * z)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--space", choices=sorted(SPACES), nargs="+", default=sorted(SPACES))
    ap.add_argument("--K", type=float, default=-1.0, help="curvature of the hyperbolic plane")
    ap.add_argument("--meshes", type=float, nargs="+", default=[0.08, 0.04, 0.02, 0.01])
    ap.add_argument("--radius", type=float, default=1.0)
    ap.add_argument("--exclude", type=float, default=None, help="default: radius / 4")
    args = ap.parse_args()
    exclude = args.radius / 4 if args.exclude is None else args.exclude
    cols = ["space", "mesh", "vertices", "sq", "sq_ratio", "d", "d_ratio", "phi", "phi_ratio", "chain", "chain_ratio"]
    w = csv.DictWriter(sys.stdout, cols)
    w.writeheader()
    for name in args.space:
        space = SPACES[name](args.K)
        cd = space.native_cd
        prev = None
        for mesh in args.meshes:
            G = grid_discretize(space, space.origin(), args.radius, mesh)
            tol = TOL_C * mesh
            rep = laplacian_comparison_check(G, G.center, cd, tol, exclude=exclude)
            sup = phi_supersolution_check(G, G.center, cd, args.radius, tol, exclude=exclude)
            d = G.vertex_distances(G.center)
            chain = chain_rule_residual(G, d, CUBIC, G.interior & (d > exclude))
            row = {"space": name, "mesh": mesh, "vertices": G.n, "sq": max(rep.worst_sq, 0.0),
                   "d": max(rep.worst_d, 0.0), "phi": sup.worst, "chain": chain}
            for key in ("sq", "d", "phi", "chain"):
                num = abs(prev[key]) if prev else np.nan
                den = abs(row[key])
                row[f"{key}_ratio"] = num / den if prev and den > 0 else ""
            w.writerow(row)
            prev = row


if __name__ == "__main__":
    main()
