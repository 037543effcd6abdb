"""Small one-dimensional minimizers used by the bound and geometry code."""

from __future__ import annotations

import math

import numpy as np

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section(f, a: float, b: float, tol: float = 1e-10, max_iter: int = 200):
    """Minimize a unimodal scalar function on [a, b].

    Returns ``(x, fx)``.  The endpoints are compared against the interior
    estimate, so a monotone objective returns its boundary infimum.
    """
    fa, fb = f(a), f(b)
    x1 = b - INV_PHI * (b - a)
    x2 = a + INV_PHI * (b - a)
    f1, f2 = f(x1), f(x2)
    lo, hi = a, b
    for _ in range(max_iter):
        if hi - lo <= tol:
            break
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - INV_PHI * (hi - lo)
            f1 = f(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + INV_PHI * (hi - lo)
            f2 = f(x2)
    x, fx = (x1, f1) if f1 <= f2 else (x2, f2)
    if fa < fx:
        x, fx = a, fa
    if fb < fx:
        x, fx = b, fb
    return x, fx


def golden_section_batch(f, a, b, tol: float = 1e-10, max_iter: int = 200):
    """Vectorized golden section: ``f`` maps an array of abscissae to values.

    ``a`` and ``b`` are arrays of bracket ends, one problem per entry.
    """
    lo = np.array(a, dtype=float, copy=True)
    hi = np.array(b, dtype=float, copy=True)
    x1 = hi - INV_PHI * (hi - lo)
    x2 = lo + INV_PHI * (hi - lo)
    f1, f2 = f(x1), f(x2)
    for _ in range(max_iter):
        if np.all(hi - lo <= tol):
            break
        left = f1 <= f2
        # shrink toward the smaller interior value
        new_hi = np.where(left, x2, hi)
        new_lo = np.where(left, lo, x1)
        keep = np.where(left, x1, x2)
        fkeep = np.where(left, f1, f2)
        lo, hi = new_lo, new_hi
        probe = np.where(left, hi - INV_PHI * (hi - lo), lo + INV_PHI * (hi - lo))
        fprobe = f(probe)
        x1 = np.where(left, probe, keep)
        f1 = np.where(left, fprobe, fkeep)
        x2 = np.where(left, keep, probe)
        f2 = np.where(left, fkeep, fprobe)
    pick = f1 <= f2
    return np.where(pick, x1, x2), np.where(pick, f1, f2)
