"""Exact model geometries: Euclidean, round sphere, hyperbolic space, l^p plane.

Points are plain numpy arrays in embedding coordinates:

* Euclidean(n), NormedPlane(p): Cartesian coordinates in R^n (R^2).
* Sphere(n, K): R^{n+1} with |x|^2 = 1/K.
* Hyperbolic(n, K): hyperboloid in R^{1,n}, <x,x> = -x_0^2 + |x_s|^2 = 1/K, x_0 > 0.

``K`` of Sphere/Hyperbolic is the sectional curvature; the Ricci lower bound
of the model is (n-1)K, so ``native_cd`` is CD((n-1)K, n).  Distances and
geodesics broadcast over leading axes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import DomainError, InvalidConfig, InvalidPoint
from .excess import TriangleStats, ag1_bound
from .kernels import CurvatureDimension
from .numerics import golden_section_batch


class ModelSpace:
    dim: int
    K: float = 0.0
    ambient_dim: int

    @property
    def native_cd(self) -> CurvatureDimension:
        return CurvatureDimension((self.dim - 1) * self.K, float(self.dim))

    def origin(self) -> np.ndarray:
        return np.zeros(self.ambient_dim)

    def check_point(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1:] != (self.ambient_dim,) or not np.all(np.isfinite(x)):
            raise InvalidPoint(f"expected finite coordinates of length {self.ambient_dim}")
        return x

    def distance(self, x, y):
        raise NotImplementedError

    def geodesic(self, x0, x1, t):
        """Constant speed geodesic from x0 (t=0) to x1 (t=1), t broadcast on the left."""
        t = np.asarray(t, dtype=float)[..., None]
        return (1 - t) * x0 + t * x1

    def exp_origin(self, v) -> np.ndarray:
        """Exponential map at :meth:`origin` for tangent coordinates v in R^dim."""
        return np.asarray(v, dtype=float)

    def move_origin_to(self, center, pts) -> np.ndarray:
        """Apply an isometry sending the origin to ``center``."""
        return np.asarray(pts) + np.asarray(center)

    def ball_volume(self, r: float) -> float:
        raise NotImplementedError

    def radial_quantile(self, u, r: float):
        """Radius whose ball has a fraction u of the volume of B_r."""
        return r * np.asarray(u) ** (1.0 / self.dim)


@dataclass(frozen=True)
class Euclidean(ModelSpace):
    dim: int = 2

    def __post_init__(self):
        if self.dim < 1:
            raise InvalidConfig("dim must be >= 1")

    @property
    def ambient_dim(self):
        return self.dim

    def distance(self, x, y):
        return np.linalg.norm(np.asarray(y, float) - np.asarray(x, float), axis=-1)

    def ball_volume(self, r: float) -> float:
        if r < 0:
            raise DomainError("r must be nonnegative")
        n = self.dim
        return math.pi ** (n / 2) / math.gamma(n / 2 + 1) * r**n


@dataclass(frozen=True)
class NormedPlane(ModelSpace):
    p: float = 2.0
    dim: int = 2

    def __post_init__(self):
        if not self.p >= 1:
            raise InvalidConfig("p must lie in [1, inf]")

    @property
    def ambient_dim(self):
        return 2

    @property
    def native_cd(self) -> CurvatureDimension:
        return CurvatureDimension(0.0, 2.0)

    def distance(self, x, y):
        return np.linalg.norm(np.asarray(y, float) - np.asarray(x, float), ord=self.p, axis=-1)

    def ball_volume(self, r: float) -> float:
        if r < 0:
            raise DomainError("r must be nonnegative")
        if math.isinf(self.p):
            return 4.0 * r * r
        return 4.0 * math.gamma(1 + 1 / self.p) ** 2 / math.gamma(1 + 2 / self.p) * r * r

    def radial_quantile(self, u, r):
        return r * np.sqrt(u)


def _y_minus_sin(y: float) -> float:
    """y - sin(y) without cancellation for small y."""
    if abs(y) > 0.5:
        return y - math.sin(y)
    term, total, k = y**3 / 6, 0.0, 0
    while abs(term) > 1e-17 * abs(total) or k == 0:
        total += term
        k += 1
        term *= -y * y / ((2 * k + 2) * (2 * k + 3))
    return total


def _sinh_minus_y(y: float) -> float:
    """sinh(y) - y without cancellation for small y."""
    if abs(y) > 0.5:
        return math.sinh(y) - y
    term, total, k = y**3 / 6, 0.0, 0
    while abs(term) > 1e-17 * abs(total) or k == 0:
        total += term
        k += 1
        term *= y * y / ((2 * k + 2) * (2 * k + 3))
    return total


def _sphere_area(n: int) -> float:
    """Area of the unit sphere S^{n-1} in R^n."""
    return 2 * math.pi ** (n / 2) / math.gamma(n / 2)


class _CurvedModel(ModelSpace):
    """Shared code for the sphere and hyperbolic models."""

    @property
    def ambient_dim(self):
        return self.dim + 1

    @property
    def kappa(self) -> float:
        return math.sqrt(abs(self.K))

    def origin(self):
        o = np.zeros(self.dim + 1)
        o[0] = 1.0 / self.kappa
        return o

    def _radial_density(self, t):
        raise NotImplementedError

    def _radial_volume(self, r):
        """Volume of a geodesic ball of radius r, numerically."""
        val, _ = integrate.quad(self._radial_density, 0.0, r, epsabs=0, epsrel=1e-13, limit=200)
        return _sphere_area(self.dim) * val

    def radial_quantile(self, u, r):
        grid = np.linspace(0.0, r, 8193)
        cdf = integrate.cumulative_simpson(self._radial_density(grid), x=grid, initial=0.0)
        cdf /= cdf[-1]
        return np.interp(u, cdf, grid)


@dataclass(frozen=True)
class Sphere(_CurvedModel):
    dim: int = 2
    K: float = 1.0

    def __post_init__(self):
        if self.dim < 1 or not self.K > 0:
            raise InvalidConfig("Sphere needs dim >= 1 and K > 0")

    @property
    def diameter(self) -> float:
        return math.pi / self.kappa

    def check_point(self, x):
        x = super().check_point(x)
        if np.any(np.abs(self.K * np.sum(x * x, axis=-1) - 1.0) > 1e-12):
            raise InvalidPoint("point is off the sphere |x|^2 = 1/K")
        return x

    def distance(self, x, y):
        x, y = np.asarray(x, float), np.asarray(y, float)
        ang = 2 * np.arctan2(np.linalg.norm(x - y, axis=-1), np.linalg.norm(x + y, axis=-1))
        return ang / self.kappa

    def geodesic(self, x0, x1, t):
        t = np.asarray(t, dtype=float)[..., None]
        om = self.kappa * self.distance(x0, x1)
        om = np.asarray(om)[..., None]
        return (np.sin((1 - t) * om) * x0 + np.sin(t * om) * x1) / np.sin(om)

    def exp_origin(self, v):
        v = np.asarray(v, dtype=float)
        rho = np.linalg.norm(v, axis=-1, keepdims=True)
        k = self.kappa
        with np.errstate(invalid="ignore", divide="ignore"):
            unit = np.where(rho > 0, v / rho, 0.0)
        return np.concatenate([np.cos(k * rho) / k, np.sin(k * rho) / k * unit], axis=-1)

    def move_origin_to(self, center, pts):
        c = np.asarray(center, float) * self.kappa
        e0 = np.zeros_like(c)
        e0[0] = 1.0
        u = e0 - c
        nu = u @ u
        pts = np.asarray(pts, float)
        if nu < 1e-30:
            return pts.copy()
        # Householder reflection exchanging e0 and the unit center
        return pts - 2.0 * np.outer(pts @ u, u).reshape(pts.shape) / nu

    def _radial_density(self, t):
        return (np.sin(self.kappa * np.asarray(t)) / self.kappa) ** (self.dim - 1)

    def ball_volume(self, r: float) -> float:
        if r < 0 or r > self.diameter * (1 + 1e-14):
            raise DomainError("r must lie in [0, pi/sqrt(K)]")
        k, K = self.kappa, self.K
        if self.dim == 1:
            return 2 * r
        if self.dim == 2:
            return 4 * math.pi * math.sin(k * r / 2) ** 2 / K
        if self.dim == 3:
            return math.pi / (K * k) * _y_minus_sin(2 * k * r)
        return self._radial_volume(r)


@dataclass(frozen=True)
class Hyperbolic(_CurvedModel):
    dim: int = 2
    K: float = -1.0

    def __post_init__(self):
        if self.dim < 1 or not self.K < 0:
            raise InvalidConfig("Hyperbolic needs dim >= 1 and K < 0")

    @staticmethod
    def minkowski(x, y):
        x, y = np.asarray(x, float), np.asarray(y, float)
        return -x[..., 0] * y[..., 0] + np.sum(x[..., 1:] * y[..., 1:], axis=-1)

    def check_point(self, x):
        x = super().check_point(x)
        scale = 1.0 + self.kappa**2 * np.sum(x * x, axis=-1)
        if np.any(np.abs(self.kappa**2 * self.minkowski(x, x) + 1.0) > 1e-12 * scale) or np.any(x[..., 0] <= 0):
            raise InvalidPoint("point is off the upper hyperboloid sheet")
        return x

    def distance(self, x, y):
        x, y = np.asarray(x, float), np.asarray(y, float)
        q = np.maximum(self.minkowski(x - y, x - y), 0.0)
        return 2.0 / self.kappa * np.arcsinh(self.kappa * np.sqrt(q) / 2.0)

    def geodesic(self, x0, x1, t):
        t = np.asarray(t, dtype=float)[..., None]
        om = np.asarray(self.kappa * self.distance(x0, x1))[..., None]
        return (np.sinh((1 - t) * om) * x0 + np.sinh(t * om) * x1) / np.sinh(om)

    def exp_origin(self, v):
        v = np.asarray(v, dtype=float)
        rho = np.linalg.norm(v, axis=-1, keepdims=True)
        k = self.kappa
        with np.errstate(invalid="ignore", divide="ignore"):
            unit = np.where(rho > 0, v / rho, 0.0)
        return np.concatenate([np.cosh(k * rho) / k, np.sinh(k * rho) / k * unit], axis=-1)

    def boost(self, center) -> np.ndarray:
        """Lorentz boost matrix sending the origin to ``center``."""
        p = np.asarray(center, float) * self.kappa
        n = self.dim
        B = np.eye(n + 1)
        ps = p[1:]
        B[0, 0] = p[0]
        B[0, 1:] = ps
        B[1:, 0] = ps
        B[1:, 1:] += np.outer(ps, ps) / (1.0 + p[0])
        return B

    def move_origin_to(self, center, pts):
        return np.asarray(pts, float) @ self.boost(center).T

    def _radial_density(self, t):
        return (np.sinh(self.kappa * np.asarray(t)) / self.kappa) ** (self.dim - 1)

    def ball_volume(self, r: float) -> float:
        if r < 0:
            raise DomainError("r must be nonnegative")
        k, K = self.kappa, -self.K
        if self.dim == 1:
            return 2 * r
        if self.dim == 2:
            return 4 * math.pi * math.sinh(k * r / 2) ** 2 / K
        if self.dim == 3:
            return math.pi / (K * k) * _sinh_minus_y(2 * k * r)
        return self._radial_volume(r)

    def to_poincare(self, x):
        x = np.asarray(x, float)
        k = self.kappa
        return x[..., 1:] / (1.0 + k * x[..., :1])

    def from_poincare(self, y):
        y = np.asarray(y, float)
        k = self.kappa
        q = k * k * np.sum(y * y, axis=-1, keepdims=True)
        return np.concatenate([(1 + q) / (k * (1 - q)), 2 * y / (1 - q)], axis=-1)


# --- module level operations ----------------------------------------------


@dataclass(frozen=True)
class GeodesicConfig:
    """Endpoints of the reference minimizing geodesic."""

    x0: np.ndarray
    x1: np.ndarray

    def validate(self, space: ModelSpace) -> float:
        space.check_point(self.x0)
        space.check_point(self.x1)
        d = float(space.distance(self.x0, self.x1))
        if not d > 0:
            raise InvalidConfig("geodesic endpoints coincide")
        if isinstance(space, Sphere) and d >= space.diameter * (1 - 1e-12):
            raise InvalidConfig("sphere endpoints must be closer than pi/sqrt(K)")
        return d


def distance(space: ModelSpace, x, y):
    x, y = space.check_point(x), space.check_point(y)
    d = space.distance(x, y)
    return float(d) if np.ndim(d) == 0 else d


def geodesic_point(space: ModelSpace, cfg: GeodesicConfig, t):
    cfg.validate(space)
    t = np.asarray(t, dtype=float)
    if np.any((t < 0) | (t > 1)):
        raise InvalidConfig("t must lie in [0, 1]")
    return space.geodesic(np.asarray(cfg.x0, float), np.asarray(cfg.x1, float), t)


PRESCAN = 64


def height_arrays(space: ModelSpace, X0, X1, X, tol: float = 1e-14):
    """min over t of d(x, gamma_t), one geodesic (row of X0, X1) per point.

    A 64-point scan picks the bracketing cell, golden section refines it.
    Returns (h, t_min).
    """
    X0, X1, X = (np.atleast_2d(np.asarray(a, float)) for a in (X0, X1, X))
    X0, X1, X = np.broadcast_arrays(X0, X1, X)
    grid = np.linspace(0.0, 1.0, PRESCAN + 1)
    G = space.geodesic(X0[:, None, :], X1[:, None, :], grid[None, :])
    D = space.distance(X[:, None, :], G)
    j = np.argmin(D, axis=1)
    lo = grid[np.maximum(j - 1, 0)]
    hi = grid[np.minimum(j + 1, PRESCAN)]

    def f(t):
        return space.distance(X, space.geodesic(X0, X1, t))

    t, h = golden_section_batch(f, lo, hi, tol=tol)
    dmin = D[np.arange(len(X)), j]
    better = dmin < h
    return np.where(better, dmin, h), np.where(better, grid[j], t)


def excess_arrays(space: ModelSpace, X0, X1, X):
    """Arrays (E, h, l) for points X relative to the geodesics X0 -> X1 (rowwise)."""
    X0, X1, X = (space.check_point(np.atleast_2d(np.asarray(a, float))) for a in (X0, X1, X))
    d01 = space.distance(X0, X1)
    d0 = space.distance(X, X0)
    d1 = space.distance(X, X1)
    E = np.maximum(d0 + d1 - d01, 0.0)
    h, _ = height_arrays(space, X0, X1, X)
    return E, h, np.minimum(d0, d1)


def excess_batch(space: ModelSpace, cfg: GeodesicConfig, X):
    """Arrays (E, h, l) for each row of X against one geodesic."""
    cfg.validate(space)
    return excess_arrays(space, cfg.x0[None, :], cfg.x1[None, :], X)


def excess_stats(space: ModelSpace, cfg: GeodesicConfig, x) -> TriangleStats:
    E, h, l = excess_batch(space, cfg, x)
    return TriangleStats(float(E[0]), float(h[0]), float(l[0]))


def linf_counterexample(L: float, eps: float):
    """Thin triangle in the max-norm plane with E = 2h, i.e. no excess decay."""
    if not (L > 0 and 0 < eps < L / 2):
        raise DomainError("need L > 0 and 0 < eps < L/2")
    space = NormedPlane(math.inf)
    cfg = GeodesicConfig(np.array([0.0, 0.0]), np.array([L, L]))
    x = np.array([L / 2 + eps, L / 2])
    return cfg, x, excess_stats(space, cfg, x)


def linf_gap(L: float, eps: float) -> float:
    """E - ag1_bound(CD(0,2), h, l) on the max-norm counterexample."""
    _, _, st = linf_counterexample(L, eps)
    return st.E - ag1_bound(CurvatureDimension(0.0, 2.0), st.h, st.l)


def linf_violation_threshold(L: float = 1.0, n_scan: int = 200, tol: float = 1e-12) -> dict:
    """Largest eps* such that the max-norm plane violates AG1 for all eps < eps*.

    The gap is scanned on a log grid of (0, L/2); the first sign change, if
    any, is refined by bisection.  When the gap stays positive on the whole
    admissible range, eps* is the upper end of the scan.
    """
    eps_max = 0.5 * L * (1 - 1e-9)
    grid = np.geomspace(1e-9 * L, eps_max, n_scan)
    gaps = np.array([linf_gap(L, e) for e in grid])
    trace = [{"eps": float(e), "gap": float(g)} for e, g in zip(grid, gaps)]
    bad = np.nonzero(gaps <= 0)[0]
    if len(bad) == 0:
        return {"eps_star": float(eps_max), "sign_change": False, "trace": trace}
    k = int(bad[0])
    if k == 0:
        return {"eps_star": 0.0, "sign_change": True, "trace": trace}
    lo, hi = grid[k - 1], grid[k]
    while hi - lo > tol * L:
        mid = 0.5 * (lo + hi)
        g = linf_gap(L, mid)
        trace.append({"eps": float(mid), "gap": float(g)})
        lo, hi = (mid, hi) if g > 0 else (lo, mid)
    return {"eps_star": float(lo), "sign_change": True, "trace": trace}


def ball_volume(space: ModelSpace, r: float) -> float:
    return space.ball_volume(r)


def sample_uniform_ball(space: ModelSpace, center, r: float, seed, n: int | None = None):
    """Uniform sample(s) from the ball B_r(center) w.r.t. the model volume."""
    center = space.check_point(center)
    if not r > 0:
        raise DomainError("r must be positive")
    if isinstance(space, Sphere) and r > space.diameter:
        raise DomainError("r exceeds the sphere diameter")
    rng = np.random.default_rng(seed)
    m = 1 if n is None else int(n)
    if isinstance(space, NormedPlane):
        out = np.empty((0, 2))
        while len(out) < m:
            cand = rng.uniform(-r, r, size=(2 * m + 16, 2))
            cand = cand[np.linalg.norm(cand, ord=space.p, axis=1) <= r]
            out = np.vstack([out, cand])
        pts = out[:m] + center
    else:
        g = rng.standard_normal((m, space.dim))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        rho = space.radial_quantile(rng.uniform(size=m), r)
        pts = space.move_origin_to(center, space.exp_origin(g * rho[:, None]))
    return pts[0] if n is None else pts


def thin_triangles(space: ModelSpace, n: int, seed) -> tuple[list[GeodesicConfig], np.ndarray]:
    """Random geodesics with one apex each, the apex projecting inside the segment.

    Heights are log-uniform in [1e-3, 1] times the half-length, so the batch
    sweeps from very thin to fat triangles.  Returns (configs, apexes).
    """
    if isinstance(space, NormedPlane):
        raise InvalidConfig("thin triangles are generated on Riemannian models only")
    rng = np.random.default_rng(seed)
    cfgs, apex = [], []
    dim = space.dim
    for _ in range(n):
        half = rng.uniform(0.25, 2.0)
        if isinstance(space, Sphere):
            half = min(half, 0.45 * space.diameter)
        s = rng.uniform(-0.95, 0.95) * half
        hgt = half * 10 ** rng.uniform(-3, 0)
        if dim > 1:
            nrm = rng.standard_normal(dim - 1)
            nrm /= np.linalg.norm(nrm)
        e1 = np.zeros(dim)
        e1[0] = 1.0
        if isinstance(space, Euclidean):
            x0, x1 = -half * e1, half * e1
            x = s * e1 + hgt * np.concatenate([[0.0], nrm])
            Q, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
            shift = rng.uniform(-5, 5, size=dim)
            x0, x1, x = (Q @ x0 + shift, Q @ x1 + shift, Q @ x + shift)
        else:
            x0, x1, foot = space.exp_origin(-half * e1), space.exp_origin(half * e1), space.exp_origin(s * e1)
            nvec = np.concatenate([[0.0, 0.0], nrm])
            # perpendicular geodesic from the foot point, inside span(e0, e1, normal)
            k = space.kappa
            if isinstance(space, Hyperbolic):
                x = np.cosh(k * hgt) * foot + np.sinh(k * hgt) / k * nvec
            else:
                x = np.cos(k * hgt) * foot + np.sin(k * hgt) / k * nvec
            center = space.exp_origin(rng.uniform(-1, 1, size=dim))
            x0, x1, x = space.move_origin_to(center, np.stack([x0, x1, x]))
        cfgs.append(GeodesicConfig(np.asarray(x0), np.asarray(x1)))
        apex.append(x)
    return cfgs, np.asarray(apex)


def ag1_sample(space: ModelSpace, n: int, seed) -> list[dict]:
    """E versus the AG1 bound at random thin-triangle apexes."""
    cd = space.native_cd
    cfgs, X = thin_triangles(space, n, seed)
    X0 = np.array([c.x0 for c in cfgs])
    X1 = np.array([c.x1 for c in cfgs])
    Es, hs, ls = excess_arrays(space, X0, X1, X)
    rows = []
    for E, h, l in zip(Es.tolist(), hs.tolist(), ls.tolist()):
        if not l > h:
            continue
        b = ag1_bound(cd, h, l)
        rows.append({"E": E, "h": h, "l": l, "bound": b, "margin": b - E, "pass": E <= b})
    return rows

