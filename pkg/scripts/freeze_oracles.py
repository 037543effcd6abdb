"""Freeze the independent nested-quadrature oracle for phi and its derivatives.

The oracle evaluates the defining double integral with scipy's adaptive
QUADPACK routines and its own copy of s_{K,N}; nothing from agcomp is used.
Output: tests/data/kernel_oracle.json (500 points).
"""

import argparse
import json
import math
from pathlib import Path

import numpy as np
from scipy import integrate

OPTS = dict(epsabs=0.0, epsrel=1e-13, limit=400)


def s(K, N, t):
    if K == 0:
        return t
    a = math.sqrt(-K / (N - 1))
    return math.sinh(a * t) / a


def ds(K, N, t):
    if K == 0:
        return 1.0
    a = math.sqrt(-K / (N - 1))
    return math.cosh(a * t)


def oracle(K, N, r, R):
    def inner(eta):
        return integrate.quad(lambda xi: s(K, N, xi) ** (1 - N), r, eta, **OPTS)[0]

    value = integrate.quad(lambda eta: s(K, N, eta) ** (N - 1) * inner(eta), r, R, **OPTS)[0]
    w = integrate.quad(lambda eta: s(K, N, eta) ** (N - 1), r, R, **OPTS)[0] * s(K, N, r) ** (1 - N)
    d2 = 1.0 + (N - 1) * ds(K, N, r) / s(K, N, r) * w
    return value, -w, d2


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--points", type=int, default=500)
    ap.add_argument("--seed", type=int, default=20240611)
    ap.add_argument("--out", default=str(Path(__file__).resolve().parents[1] / "tests/data/kernel_oracle.json"))
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    rows = []
    for _ in range(args.points):
        K = float(rng.uniform(-4.0, 0.0))
        N = float(rng.uniform(1.01, 6.0))
        R = float(rng.uniform(0.05, 3.0))
        r = float(R * rng.uniform(0.02, 0.98))
        v, d1, d2 = oracle(K, N, r, R)
        rows.append(dict(K=K, N=N, r=r, R=R, phi=v, phi_d1=d1, phi_d2=d2))
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    with open(args.out, "w") as fh:
        json.dump({"seed": args.seed, "epsrel": OPTS["epsrel"], "points": rows}, fh, indent=1)
    print(f"wrote {len(rows)} points to {args.out}")


if __name__ == "__main__":
    main()
