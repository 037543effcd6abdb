"""Curvature-dimension checks on weighted intervals.

On the line the optimal coupling of two atomless measures is the monotone
one, so displacement interpolation is linear in quantile functions.  Here
measures are piecewise constant on a fixed grid of cells.  The quantile maps
are then piecewise linear, and every interpolant is binned back onto the
grid exactly (cell averages of the interpolated measure).
"""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import DomainError, GridMismatch, InvalidInput
from .kernels import CurvatureDimension, tau

MASS_TOL = 1e-10
# Gauss-Legendre nodes for the coupled integral on each quantile segment
_GL_X, _GL_W = np.polynomial.legendre.leggauss(6)
_GL_X, _GL_W = (_GL_X + 1) / 2, _GL_W / 2


def _edges(grid) -> np.ndarray:
    x = np.asarray(grid, dtype=float)
    if x.ndim != 1 or x.size < 2 or not np.all(np.isfinite(x)) or np.any(np.diff(x) <= 0):
        raise InvalidInput("grid must be a strictly increasing array of at least two finite points")
    return x


@dataclass(frozen=True, eq=False)
class Measure1D:
    """Probability measure with constant density on each grid cell."""

    grid: np.ndarray
    density: np.ndarray

    def __post_init__(self):
        x = _edges(self.grid)
        rho = np.asarray(self.density, dtype=float)
        if rho.shape != (x.size - 1,):
            raise InvalidInput(f"need {x.size - 1} cell densities, got shape {rho.shape}")
        if not np.all(np.isfinite(rho)) or np.any(rho < 0):
            raise InvalidInput("density must be finite and nonnegative")
        if abs(float(np.sum(rho * np.diff(x))) - 1.0) > MASS_TOL:
            raise InvalidInput("total mass must be 1")
        object.__setattr__(self, "grid", x)
        object.__setattr__(self, "density", rho)

    @classmethod
    def from_masses(cls, grid, masses) -> "Measure1D":
        x = _edges(grid)
        q = np.asarray(masses, dtype=float)
        if np.any(q < 0) or q.sum() <= 0:
            raise InvalidInput("masses must be nonnegative with positive total")
        return cls(x, q / q.sum() / np.diff(x))

    @classmethod
    def from_function(cls, grid, f) -> "Measure1D":
        """Normalize the cell-midpoint values of a nonnegative function."""
        x = _edges(grid)
        return cls.from_masses(x, np.asarray(f(0.5 * (x[1:] + x[:-1])), float) * np.diff(x))

    @classmethod
    def uniform(cls, grid, lo: float, hi: float) -> "Measure1D":
        """Uniform law on [lo, hi], cut exactly at cell boundaries."""
        x = _edges(grid)
        overlap = np.clip(np.minimum(x[1:], hi) - np.maximum(x[:-1], lo), 0.0, None)
        return cls.from_masses(x, overlap)

    @property
    def masses(self) -> np.ndarray:
        return self.density * np.diff(self.grid)

    @property
    def cdf(self) -> np.ndarray:
        """CDF at the grid points (first value 0, last value 1)."""
        c = np.concatenate([[0.0], np.cumsum(self.masses)])
        return c / c[-1]

    def quantile(self, u) -> np.ndarray:
        """Left-continuous quantile function."""
        return _quantile(self, np.asarray(u, dtype=float), None)


@dataclass(frozen=True, eq=False)
class Space1D:
    """Interval [grid[0], grid[-1]] with reference measure ref(x) dx, ref constant per cell."""

    grid: np.ndarray
    ref: np.ndarray

    def __post_init__(self):
        x = _edges(self.grid)
        r = np.asarray(self.ref, dtype=float)
        if r.shape != (x.size - 1,):
            raise InvalidInput(f"need {x.size - 1} reference values, got shape {r.shape}")
        if not np.all(np.isfinite(r)) or np.any(r <= 0):
            raise InvalidInput("reference density must be positive")
        object.__setattr__(self, "grid", x)
        object.__setattr__(self, "ref", r)

    @classmethod
    def from_function(cls, a: float, b: float, cells: int, f) -> "Space1D":
        """Cell averages of ``f`` (5-point Gauss rule) on a uniform grid."""
        x = np.linspace(a, b, cells + 1)
        gx, gw = np.polynomial.legendre.leggauss(5)
        mid, half = 0.5 * (x[1:] + x[:-1]), 0.5 * np.diff(x)
        vals = np.asarray(f(mid[:, None] + half[:, None] * gx[None, :]), float)
        return cls(x, vals @ gw / 2.0)

    @property
    def cells(self) -> int:
        return self.grid.size - 1

    @property
    def binning_tol(self) -> float:
        return 2.0 / self.cells


def _same_grid(*objs):
    g = objs[0].grid
    for o in objs[1:]:
        if o.grid.shape != g.shape or not np.array_equal(o.grid, g):
            raise GridMismatch("measures and space must share the same grid")


def _cell_of(mu: Measure1D, u: np.ndarray) -> np.ndarray:
    """First cell whose right CDF value reaches u; always a cell of positive mass."""
    F = mu.cdf
    j = np.searchsorted(F[1:], u, side="left")
    first = int(np.flatnonzero(mu.masses > 0)[0])
    return np.clip(np.where(u <= 0, first, j), 0, mu.grid.size - 2)


def _quantile(mu: Measure1D, u: np.ndarray, cell) -> np.ndarray:
    j = _cell_of(mu, u) if cell is None else cell
    F, x = mu.cdf, mu.grid
    mass = F[j + 1] - F[j]
    return x[j] + (u - F[j]) / mass * (x[j + 1] - x[j])


def _segments(mu0: Measure1D, mu1: Measure1D):
    """Quantile segments on which both maps are affine, with their cells."""
    U = np.union1d(mu0.cdf, mu1.cdf)
    U = U[(U >= 0) & (U <= 1)]
    lo, hi = U[:-1], U[1:]
    keep = hi > lo
    lo, hi = lo[keep], hi[keep]
    mid = 0.5 * (lo + hi)
    return lo, hi, _cell_of(mu0, mid), _cell_of(mu1, mid)


def _bin(grid: np.ndarray, a: np.ndarray, b: np.ndarray, mass: np.ndarray) -> np.ndarray:
    """Cell masses of a sum of uniform pieces [a_i, b_i] (ordered, disjoint)."""
    xp = np.empty(2 * a.size)
    xp[0::2], xp[1::2] = a, b
    cum = np.concatenate([[0.0], np.cumsum(mass)])
    fp = np.empty(2 * a.size)
    fp[0::2], fp[1::2] = cum[:-1], cum[1:]
    xp = np.maximum.accumulate(xp)  # guard against rounding in the endpoints
    F = np.interp(grid, xp, fp, left=0.0, right=cum[-1])
    return np.diff(F)


def quantile_interpolation(mu0: Measure1D, mu1: Measure1D, t: float) -> Measure1D:
    """Displacement interpolation at time t via the monotone coupling."""
    _same_grid(mu0, mu1)
    if not 0 <= t <= 1:
        raise InvalidInput("t must lie in [0, 1]")
    lo, hi, j0, j1 = _segments(mu0, mu1)
    a = (1 - t) * _quantile(mu0, lo, j0) + t * _quantile(mu1, lo, j1)
    b = (1 - t) * _quantile(mu0, hi, j0) + t * _quantile(mu1, hi, j1)
    masses = _bin(mu0.grid, a, b, hi - lo)
    return Measure1D.from_masses(mu0.grid, np.maximum(masses, 0.0))


def w2_distance(mu0: Measure1D, mu1: Measure1D) -> float:
    """Exact W2 between piecewise-constant densities on a common grid."""
    _same_grid(mu0, mu1)
    lo, hi, j0, j1 = _segments(mu0, mu1)
    dl = _quantile(mu1, lo, j1) - _quantile(mu0, lo, j0)
    dr = _quantile(mu1, hi, j1) - _quantile(mu0, hi, j0)
    return float(math.sqrt(max(np.sum((hi - lo) * (dl * dl + dl * dr + dr * dr) / 3.0), 0.0)))


def renyi_entropy(mu: Measure1D, space: Space1D, Nprime: float) -> float:
    """U_{N'}(mu) = -int (d mu/d m)^{1 - 1/N'} dm."""
    _same_grid(mu, space)
    if not Nprime > 1:
        raise DomainError("N' must exceed 1")
    rel = mu.density / space.ref
    return float(-np.sum(rel ** (1 - 1 / Nprime) * space.ref * np.diff(space.grid)))


def _coupled_rhs(mu0: Measure1D, mu1: Measure1D, space: Space1D, cd: CurvatureDimension, t: float) -> float:
    lo, hi, j0, j1 = _segments(mu0, mu1)
    Np = cd.N
    r0 = (mu0.density[j0] / space.ref[j0]) ** (-1 / Np)
    r1 = (mu1.density[j1] / space.ref[j1]) ** (-1 / Np)
    u = lo[:, None] + (hi - lo)[:, None] * _GL_X[None, :]
    dist = np.abs(_quantile(mu1, u, j1[:, None]) - _quantile(mu0, u, j0[:, None]))
    if cd.K == 0:
        w0 = np.full(dist.shape, 1 - t)
        w1 = np.full(dist.shape, t)
    else:
        w0 = np.asarray(tau(cd, 1 - t, dist))
        w1 = np.asarray(tau(cd, t, dist))
    integrand = w0 * r0[:, None] + w1 * r1[:, None]
    return float(-np.sum((hi - lo) * (integrand @ _GL_W)))


@dataclass
class CDReport:
    """Per-(t, N') records of LHS - RHS; positive values violate the inequality."""

    K: float
    N: float
    cells: int
    binning_tol: float
    threshold: float
    records: list = field(default_factory=list)

    @property
    def max_violation(self) -> float:
        return max((r["violation"] for r in self.records), default=-math.inf)

    @property
    def passed(self) -> bool:
        return self.max_violation <= self.threshold

    def worst(self) -> dict:
        return max(self.records, key=lambda r: r["violation"])

    def to_dict(self) -> dict:
        return {**asdict(self), "max_violation": self.max_violation, "passed": self.passed}


def _support(mu: Measure1D):
    nz = np.flatnonzero(mu.masses > 0)
    return mu.grid[nz[0]], mu.grid[nz[-1] + 1]


def cd_inequality_check(space: Space1D, mu0: Measure1D, mu1: Measure1D, K: float, N: float, t_grid,
                        nprimes=None) -> CDReport:
    """LHS - RHS of the entropy convexity inequality along the monotone coupling.

    ``nprimes`` defaults to (N, 2N).  The pass threshold is three times the
    binning tolerance 2/cells.
    """
    _same_grid(space, mu0, mu1)
    if K > 0:
        a0, b0 = _support(mu0)
        a1, b1 = _support(mu1)
        diam = max(b0, b1) - min(a0, a1)
        if K * diam**2 >= (N - 1) * math.pi**2:
            raise DomainError("K * diam^2 must stay below (N-1) pi^2")
    nprimes = (N, 2 * N) if nprimes is None else tuple(nprimes)
    if any(Np < N for Np in nprimes):
        raise DomainError("every N' must be at least N")
    rep = CDReport(K=float(K), N=float(N), cells=space.cells, binning_tol=space.binning_tol,
                   threshold=3 * space.binning_tol)
    for t in t_grid:
        mut = quantile_interpolation(mu0, mu1, float(t))
        for Np in nprimes:
            cd = CurvatureDimension(K, Np)
            lhs = renyi_entropy(mut, space, Np)
            rhs = _coupled_rhs(mu0, mu1, space, cd, float(t))
            rep.records.append({"t": float(t), "Nprime": float(Np), "lhs": lhs, "rhs": rhs, "violation": lhs - rhs})
    return rep


def density_cd_oracle(space: Space1D, N: float, rtol: float = 1e-9) -> bool:
    """True when ref^{1/(N-1)} is concave on the cell midpoints (divided differences)."""
    if not N > 1:
        raise DomainError("N must exceed 1")
    x = 0.5 * (space.grid[1:] + space.grid[:-1])
    f = space.ref ** (1 / (N - 1))
    if f.size < 3:
        return True
    s = np.diff(f) / np.diff(x)
    second = np.diff(s)
    return bool(np.all(second <= rtol * np.max(np.abs(s)) + 1e-300))


def violation_search(space: Space1D, K: float, N: float, widths=(0.05, 0.1, 0.2), n_pos: int = 9,
                     t_grid=(0.25, 0.5, 0.75)) -> dict:
    """Grid search over pairs of uniform blocks for the largest violation."""
    a, b = space.grid[0], space.grid[-1]
    best = {"violation": -math.inf}
    for w in widths:
        L = (b - a) * w
        starts = np.linspace(a, b - L, n_pos)
        for s0 in starts:
            for s1 in starts:
                if s1 <= s0:
                    continue
                mu0 = Measure1D.uniform(space.grid, s0, s0 + L)
                mu1 = Measure1D.uniform(space.grid, s1, s1 + L)
                rep = cd_inequality_check(space, mu0, mu1, K, N, t_grid, nprimes=(N,))
                w_rec = rep.worst()
                if w_rec["violation"] > best["violation"]:
                    best = {**w_rec, "mu0": [float(s0), float(s0 + L)], "mu1": [float(s1), float(s1 + L)],
                            "threshold": rep.threshold}
    return best


def load_density_csv(path):
    """Read ``x,density`` rows; returns (grid, cell values) with trapezoidal cell averages."""
    xs, ys = [], []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].strip().startswith("#"):
                continue
            try:
                xs.append(float(row[0]))
                ys.append(float(row[1]))
            except ValueError:
                if xs:
                    raise InvalidInput(f"bad CSV row {row!r}") from None
                continue  # header line
    if not xs:
        raise InvalidInput(f"no numeric rows in {path}")
    x, y = _edges(xs), np.asarray(ys)
    return x, 0.5 * (y[1:] + y[:-1])


def measure_from_csv(path) -> Measure1D:
    x, v = load_density_csv(path)
    return Measure1D.from_masses(x, v * np.diff(x))


def space_from_csv(path) -> Space1D:
    x, v = load_density_csv(path)
    return Space1D(x, v)
