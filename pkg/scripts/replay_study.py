"""Discrete replay of the maximum-principle excess bound.

Euclidean thin triangle across meshes (which step binds, discrete and
continuum bounds against the measured excess), then the max-norm
counterexample across eps (which step fails first).
"""

import argparse
import math

import numpy as np

from agcomp.errors import ConfigError
from agcomp.excess import pre_ab_minimize
from agcomp.graphs import grid_discretize, proof_replay
from agcomp.kernels import c_model
from agcomp.models import Euclidean, GeodesicConfig, NormedPlane, excess_stats, linf_counterexample


def run(space, cfg, x, R, mesh):
    cd = space.native_cd
    st = excess_stats(space, cfg, x)
    a = 2 * float(c_model(cd, st.l - R))
    theta = pre_ab_minimize(cd, 2.0, a, st.h, R)[1]
    G = grid_discretize(space, x, R + 3 * mesh, mesh)
    return proof_replay(G, cfg, cd, theta, R, a=a)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--meshes", type=float, nargs="+", default=[0.04, 0.02, 0.01, 0.005])
    ap.add_argument("--eps", type=float, nargs="+", default=[0.2, 0.1, 0.05, 0.02])
    args = ap.parse_args()
    sp = Euclidean(2)
    cfg = GeodesicConfig(np.array([-2.0, 0.0]), np.array([2.0, 0.0]))
    x = np.array([0.0, 0.3])
    print("euclidean: mesh, passed, binding, E, discrete_bound, continuum_bound")
    for mesh in args.meshes:
        r = run(sp, cfg, x, 0.5, mesh)
        print(f"  {mesh:7.4f} {r.passed!s:5s} {r.binding:22s} {r.E_apex:.4f} {r.discrete_bound:.4f} {r.continuum_bound:.4f}")
    lp = NormedPlane(math.inf)
    print("max-norm: eps, passed, failed, min Laplacian, E, discrete_bound")
    for eps in args.eps:
        cfg2, x2, st = linf_counterexample(1.0, eps)
        try:
            r = run(lp, cfg2, x2, 2 * st.h, st.h / 20)
        except ConfigError as exc:
            print(f"  {eps:7.4f} not replayable at this mesh ({exc})")
            continue
        lap = r.steps["laplacian_positivity"]["min_laplacian"]
        print(f"  {eps:7.4f} {r.passed!s:5s} {str(r.failed):22s} {lap:10.1f} {r.E_apex:.4f} {r.discrete_bound:.4f}")


if __name__ == "__main__":
    main()
