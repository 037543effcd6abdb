"""Calculus on finite weighted graphs viewed as metric measure spaces.

A graph carries symmetric conductances ``w``, edge lengths and a positive
vertex measure ``m``.  The carre du champ, the measure Laplacian and the
Dirichlet energy below are the standard quadratic-form objects, so the
parallelogram, Leibniz and integration-by-parts identities hold exactly up
to rounding.  ``grid_discretize`` builds lattice graphs approximating a ball
in a model space; the comparison checks and ``proof_replay`` run on those.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph
from scipy.sparse.linalg import spsolve

from .errors import (
    BoundaryEmpty,
    ConfigError,
    DegenerateBall,
    DimensionMismatch,
    DomainError,
    InvalidInput,
    ResourceError,
)
from .kernels import CurvatureDimension, PhiProfile, c_model, tau_tilde
from .models import Euclidean, GeodesicConfig, Hyperbolic, ModelSpace, NormedPlane, excess_arrays, geodesic_point
from .numerics import golden_section

DEFAULT_BUDGET = 10**6
# tol = TOL_C * mesh for mesh-dependent statements, calibrated on Euclidean(2)
TOL_C = 5.0


@dataclass(frozen=True, eq=False)
class WeightedGraphMMS:
    """Finite metric measure space on vertices ``0..n-1``.

    Edges are stored in both directions: ``rows[k] -> cols[k]`` with
    conductance ``w[k]`` and length ``length[k]``.  Build instances with
    :meth:`from_edges` rather than calling the constructor directly.
    """

    n: int
    rows: np.ndarray
    cols: np.ndarray
    w: np.ndarray
    length: np.ndarray
    m: np.ndarray
    coords: np.ndarray | None = None
    space: ModelSpace | None = None
    mesh: float | None = None
    interior: np.ndarray | None = None
    center: int | None = None

    @classmethod
    def from_edges(cls, n, src, dst, w, length, m, **meta) -> "WeightedGraphMMS":
        """Build from undirected edges listed once each."""
        src = np.asarray(src, dtype=np.int64)
        dst = np.asarray(dst, dtype=np.int64)
        w = np.broadcast_to(np.asarray(w, dtype=float), src.shape)
        length = np.broadcast_to(np.asarray(length, dtype=float), src.shape)
        m = np.asarray(m, dtype=float)
        if m.shape != (n,):
            raise DimensionMismatch(f"measure has shape {m.shape}, expected ({n},)")
        if np.any(src == dst):
            raise InvalidInput("self loops are not allowed")
        if src.size and (src.min() < 0 or max(src.max(), dst.max()) >= n):
            raise InvalidInput("edge endpoint out of range")
        G = cls(
            n=int(n),
            rows=np.concatenate([src, dst]),
            cols=np.concatenate([dst, src]),
            w=np.concatenate([w, w]),
            length=np.concatenate([length, length]),
            m=m,
            **meta,
        )
        G.validate()
        return G

    @classmethod
    def from_sparse(cls, W, lengths, m, **meta) -> "WeightedGraphMMS":
        """Build from symmetric sparse conductance and length matrices."""
        W = sparse.coo_matrix(W)
        Lm = sparse.csr_matrix(lengths)
        if abs(W - W.T).max() > 1e-14 * max(abs(W).max(), 1.0):
            raise InvalidInput("conductance matrix is not symmetric")
        upper = W.row < W.col
        src, dst = W.row[upper], W.col[upper]
        ell = np.asarray(Lm[src, dst]).ravel()
        return cls.from_edges(W.shape[0], src, dst, W.data[upper], ell, m, **meta)

    def validate(self) -> None:
        if self.n < 1:
            raise InvalidInput("graph has no vertices")
        if not np.all(np.isfinite(self.m)) or np.any(self.m <= 0):
            raise InvalidInput("vertex measure must be finite and positive")
        if np.any(~np.isfinite(self.w)) or np.any(self.w <= 0):
            raise InvalidInput("conductances must be finite and positive")
        if np.any(~np.isfinite(self.length)) or np.any(self.length <= 0):
            raise InvalidInput("edge lengths must be finite and positive")
        half = self.rows.size // 2
        a, b = self.rows[:half], self.cols[:half]
        key = np.minimum(a, b) * self.n + np.maximum(a, b)
        if np.unique(key).size != key.size:
            raise InvalidInput("duplicate edges")
        ncomp, _ = csgraph.connected_components(self.adjacency(), directed=False)
        if ncomp != 1:
            raise InvalidInput(f"graph is not connected ({ncomp} components)")

    def adjacency(self, values=None) -> sparse.csr_matrix:
        data = self.w if values is None else values
        return sparse.csr_matrix((data, (self.rows, self.cols)), shape=(self.n, self.n))

    @property
    def n_edges(self) -> int:
        return self.rows.size // 2

    def degree(self) -> np.ndarray:
        return np.bincount(self.rows, minlength=self.n)

    def neighbors(self, v: int) -> np.ndarray:
        return self.cols[self.rows == v]

    def path_distances(self, source: int, limit: float = np.inf) -> np.ndarray:
        """Shortest-path distances from ``source`` using edge lengths."""
        return csgraph.dijkstra(self.adjacency(self.length), directed=False, indices=source, limit=limit)

    def vertex_distances(self, v: int) -> np.ndarray:
        """Exact model distances from vertex ``v`` when the graph is a grid."""
        if self.space is None or self.coords is None:
            return self.path_distances(v)
        return np.asarray(self.space.distance(self.coords[v], self.coords), dtype=float)


def _vf(G: WeightedGraphMMS, f) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    if f.shape != (G.n,):
        raise DimensionMismatch(f"vertex function has shape {f.shape}, expected ({G.n},)")
    return f


def carre_du_champ(G: WeightedGraphMMS, f, g) -> np.ndarray:
    """Gamma(f, g)(v) = 1/(2 m(v)) sum_u w(v,u) (f(u)-f(v)) (g(u)-g(v))."""
    f, g = _vf(G, f), _vf(G, g)
    r, c = G.rows, G.cols
    # product of differences first, so that Gamma(f, g) == Gamma(g, f) bitwise
    s = np.bincount(r, weights=G.w * ((f[c] - f[r]) * (g[c] - g[r])), minlength=G.n)
    return s / (2.0 * G.m)


def dirichlet_energy(G: WeightedGraphMMS, f) -> float:
    """sum_v Gamma(f, f)(v) m(v)."""
    return float(np.sum(carre_du_champ(G, f, f) * G.m))


def vertical_derivative_gamma(G: WeightedGraphMMS, f, g, eps: float) -> np.ndarray:
    """(Gamma(g + eps f) - Gamma(g)) / (2 eps), which equals Gamma(f,g) + eps/2 Gamma(f,f)."""
    if eps == 0 or not math.isfinite(eps):
        raise DomainError("eps must be finite and nonzero")
    f, g = _vf(G, f), _vf(G, g)
    h = g + eps * f
    return (carre_du_champ(G, h, h) - carre_du_champ(G, g, g)) / (2.0 * eps)


def parallelogram_check(G: WeightedGraphMMS, f, g) -> float:
    f, g = _vf(G, f), _vf(G, g)
    a, b = f + g, f - g
    res = carre_du_champ(G, a, a) + carre_du_champ(G, b, b) - 2 * carre_du_champ(G, f, f) - 2 * carre_du_champ(G, g, g)
    return float(np.max(np.abs(res)))


def laplacian_measure(G: WeightedGraphMMS, g) -> np.ndarray:
    """Mass of the measure Laplacian at each vertex: sum_u w(v,u) (g(u) - g(v))."""
    g = _vf(G, g)
    r, c = G.rows, G.cols
    return np.bincount(r, weights=G.w * (g[c] - g[r]), minlength=G.n)


def laplacian(G: WeightedGraphMMS, g) -> np.ndarray:
    """Density of the measure Laplacian with respect to m."""
    return laplacian_measure(G, g) / G.m


def integration_by_parts_residual(G: WeightedGraphMMS, f, g) -> float:
    """|sum Gamma(f,g) m + sum f (Delta g m)|."""
    f, g = _vf(G, f), _vf(G, g)
    return float(abs(np.sum(carre_du_champ(G, f, g) * G.m) + np.sum(f * laplacian_measure(G, g))))


def leibniz_residual(G: WeightedGraphMMS, g1, g2) -> float:
    g1, g2 = _vf(G, g1), _vf(G, g2)
    res = laplacian(G, g1 * g2) - g1 * laplacian(G, g2) - g2 * laplacian(G, g1) - 2 * carre_du_champ(G, g1, g2)
    return float(np.max(np.abs(res)))


def chain_rule_residual(G: WeightedGraphMMS, g, phi, mask=None) -> float:
    """max |Delta(phi o g) - phi'(g) Delta g - phi''(g) Gamma(g,g)| over ``mask``.

    ``phi`` is a triple of callables ``(phi, phi', phi'')``.  The default
    mask is the grid interior, or every vertex for a general graph.
    """
    f0, f1, f2 = phi
    g = _vf(G, g)
    res = laplacian(G, f0(g)) - f1(g) * laplacian(G, g) - f2(g) * carre_du_champ(G, g, g)
    if mask is None:
        mask = G.interior if G.interior is not None else np.ones(G.n, bool)
    return float(np.max(np.abs(res[mask]))) if np.any(mask) else 0.0


def minimizer_gap(G: WeightedGraphMMS, g, f) -> float:
    """Energy difference E(g + f) - E(g); nonnegative when f <= 0 on a set where Delta g >= 0."""
    return dirichlet_energy(G, _vf(G, g) + _vf(G, f)) - dirichlet_energy(G, g)


# --- maximum principle -------------------------------------------------------


def _as_mask(G: WeightedGraphMMS, Omega) -> np.ndarray:
    Omega = np.asarray(Omega)
    if Omega.dtype == bool:
        if Omega.shape != (G.n,):
            raise DimensionMismatch("Omega mask has the wrong length")
        return Omega.copy()
    mask = np.zeros(G.n, bool)
    mask[Omega.astype(np.int64)] = True
    return mask


def outer_boundary(G: WeightedGraphMMS, Omega) -> np.ndarray:
    """Vertices outside Omega adjacent to some vertex of Omega."""
    inside = _as_mask(G, Omega)
    touch = np.zeros(G.n, bool)
    touch[G.cols[inside[G.rows]]] = True
    return touch & ~inside


@dataclass(frozen=True)
class MaxPrincipleResult:
    verdict: bool
    hypothesis: bool
    argmax: int
    max_omega: float
    max_boundary: float
    min_laplacian: float

    def __bool__(self) -> bool:
        return self.verdict


def max_principle_check(G: WeightedGraphMMS, g, Omega, tol: float | None = None) -> MaxPrincipleResult:
    """Check that the maximum of g over Omega and its boundary sits on the boundary.

    ``hypothesis`` records whether (Delta g m) >= -tol on Omega; the verdict
    is the conclusion itself and is only guaranteed when the hypothesis holds.
    ``argmax`` is a maximizing vertex of the closure, preferring the boundary.
    """
    g = _vf(G, g)
    inside = _as_mask(G, Omega)
    if not inside.any():
        raise BoundaryEmpty("Omega is empty")
    bdry = outer_boundary(G, inside)
    if not bdry.any():
        raise BoundaryEmpty("Omega has no exterior neighbours")
    if tol is None:
        tol = 1e-12 * max(float(np.max(np.abs(g))), 1.0) * float(np.max(G.w)) * 10
    lap = laplacian_measure(G, g)[inside]
    mo = float(np.max(g[inside]))
    mb = float(np.max(g[bdry]))
    if mb >= mo:
        arg = int(np.flatnonzero(bdry)[np.argmax(g[bdry])])
    else:
        arg = int(np.flatnonzero(inside)[np.argmax(g[inside])])
    return MaxPrincipleResult(
        verdict=bool(mo <= mb + tol),
        hypothesis=bool(lap.min() >= -tol),
        argmax=arg,
        max_omega=mo,
        max_boundary=mb,
        min_laplacian=float(lap.min()),
    )


# --- generators and I/O ------------------------------------------------------


def random_connected_graph(n: int, seed, extra: float = 1.5, lo: float = 0.5, hi: float = 2.0) -> WeightedGraphMMS:
    """Random tree on n vertices plus about ``extra * n`` chords.

    Conductances, lengths and masses are uniform on [lo, hi].
    """
    if n < 2:
        raise InvalidInput("need at least two vertices")
    rng = np.random.default_rng(seed)
    parent = np.array([rng.integers(0, v) for v in range(1, n)])
    src, dst = list(range(1, n)), list(parent)
    seen = {(min(a, b), max(a, b)) for a, b in zip(src, dst)}
    for _ in range(int(extra * n)):
        a, b = rng.integers(0, n, size=2)
        e = (int(min(a, b)), int(max(a, b)))
        if a != b and e not in seen:
            seen.add(e)
            src.append(e[0])
            dst.append(e[1])
    k = len(src)
    return WeightedGraphMMS.from_edges(
        n, src, dst, rng.uniform(lo, hi, k), rng.uniform(lo, hi, k), rng.uniform(lo, hi, n)
    )


def subharmonic_instance(seed, n_range=(20, 300)):
    """Random (G, g, Omega) with (Delta g m) >= 0 on Omega by construction.

    Omega is a breadth-first ball about half the graph; boundary values are
    random and the interior solves Delta g m = rho for a random rho >= 0
    (rho = 0 in a quarter of the instances).
    """
    rng = np.random.default_rng(seed)
    n = int(rng.integers(*n_range))
    G = random_connected_graph(n, rng)
    order = csgraph.breadth_first_order(G.adjacency(), int(rng.integers(n)), directed=False, return_predecessors=False)
    k = int(rng.integers(1, max(2, n // 2)))
    inside = np.zeros(n, bool)
    inside[order[:k]] = True
    bdry = outer_boundary(G, inside)
    g = rng.normal(size=n)
    rho = np.zeros(n)
    if rng.random() > 0.25:
        rho = rng.exponential(size=n) * (rng.random(n) < 0.5)
    A = G.adjacency()
    Lap = (A - sparse.diags(np.asarray(A.sum(axis=1)).ravel())).tocsr()
    idx = np.flatnonzero(inside)
    rhs = rho[idx] - Lap[idx][:, ~inside] @ g[~inside]
    g[idx] = np.atleast_1d(spsolve(Lap[idx][:, idx].tocsc(), rhs))
    assert bdry.any()
    return G, g, inside


def write_edge_list(G: WeightedGraphMMS, edge_path, measure_path) -> None:
    """Write ``v u w l`` lines (each edge once) and ``v m`` lines."""
    half = G.n_edges
    with open(edge_path, "w") as fh:
        for v, u, w, ell in zip(G.rows[:half], G.cols[:half], G.w[:half], G.length[:half]):
            fh.write(f"{int(v)} {int(u)} {float(w)!r} {float(ell)!r}\n")
    with open(measure_path, "w") as fh:
        for v, mv in enumerate(G.m):
            fh.write(f"{v} {float(mv)!r}\n")


def read_edge_list(edge_path, measure_path) -> WeightedGraphMMS:
    e = np.loadtxt(edge_path, ndmin=2, comments="#")
    mm = np.loadtxt(measure_path, ndmin=2, comments="#")
    if e.shape[1] != 4 or mm.shape[1] != 2:
        raise InvalidInput("expected 'v u w l' edge lines and 'v m' measure lines")
    order = np.argsort(mm[:, 0])
    ids = mm[order, 0].astype(np.int64)
    if not np.array_equal(ids, np.arange(ids.size)):
        raise InvalidInput("measure lines must list vertices 0..n-1 exactly once")
    return WeightedGraphMMS.from_edges(ids.size, e[:, 0].astype(np.int64), e[:, 1].astype(np.int64), e[:, 2], e[:, 3], mm[order, 1])


# --- lattice discretization of model balls ----------------------------------


def _lattice(dim: int, n_side: int, keep):
    """Integer points of [-n, n]^dim accepted by ``keep`` plus axis-neighbour pairs."""
    side = 2 * n_side + 1
    axes = np.arange(-n_side, n_side + 1)
    K = np.stack(np.meshgrid(*([axes] * dim), indexing="ij"), axis=-1).reshape(-1, dim)
    ok = keep(K)
    lookup = np.full(side**dim, -1, dtype=np.int64)
    lookup[np.flatnonzero(ok)] = np.arange(int(ok.sum()))
    K = K[ok]
    flat = np.ravel_multi_index(tuple((K + n_side).T), (side,) * dim)
    strides = [side ** (dim - 1 - i) for i in range(dim)]
    src, dst = [], []
    for i in range(dim):
        can = K[:, i] < n_side
        j = lookup[flat[can] + strides[i]]
        good = j >= 0
        src.append(np.flatnonzero(can)[good])
        dst.append(j[good])
    return K, np.concatenate(src), np.concatenate(dst)


def grid_discretize(space: ModelSpace, center, radius: float, mesh: float, budget: int = DEFAULT_BUDGET) -> WeightedGraphMMS:
    """Cubic lattice graph on the closed ball B_radius(center).

    Euclidean and max/ell-p planes use the straight lattice with spacing
    ``mesh``, ``m = mesh^n`` and ``w = mesh^(n-2)``.  Hyperbolic space uses
    the lattice of the Poincare ball chart with spacing ``mesh/2``, so the
    model spacing at the center is ``mesh``; with conformal factor lambda,
    ``m = (lambda delta)^n`` and ``w = (lambda_mid delta)^(n-2)``.  In all
    cases ``w`` is ``m / length^2`` to leading order, and the graph
    Laplacian is a second-order approximation of the Laplace-Beltrami
    operator at interior vertices.  The center is a vertex.
    """
    if not (radius > 0 and mesh > 0):
        raise DomainError("radius and mesh must be positive")
    if mesh > radius / 2:
        raise DomainError("mesh must be small compared to the radius")
    center = space.check_point(center)
    if isinstance(space, Hyperbolic):
        k, n = space.kappa, space.dim
        delta = mesh / 2.0
        rho = math.tanh(k * radius / 2.0) / k
    elif isinstance(space, (Euclidean, NormedPlane)):
        n = space.dim
        delta = mesh
        rho = radius
    else:
        raise DomainError(f"grid_discretize supports Euclidean, NormedPlane and Hyperbolic, not {type(space).__name__}")
    n_side = int(math.floor(rho / delta * (1 + 1e-12)))
    unit_ball = math.pi ** (n / 2) / math.gamma(n / 2 + 1)
    estimate = unit_ball * (rho / delta + 1) ** n
    if estimate > budget or (2 * n_side + 1) ** n > 4 * max(budget, 1):
        raise ResourceError(f"about {estimate:.3g} vertices requested, budget is {budget}")

    if isinstance(space, NormedPlane):
        p = space.p
        norm = (lambda K: np.max(np.abs(K), axis=1)) if math.isinf(p) else (lambda K: np.sum(np.abs(K) ** p, axis=1) ** (1 / p))
        keep = lambda K: norm(K * delta) <= rho * (1 + 1e-12)  # noqa: E731
    else:
        keep = lambda K: np.sqrt(np.sum((K * delta) ** 2, axis=1)) <= rho * (1 + 1e-12)  # noqa: E731
    K, src, dst = _lattice(n, n_side, keep)
    pos = np.flatnonzero(np.all(K == 0, axis=1))[0]

    if isinstance(space, Hyperbolic):
        y = K * delta
        lam = lambda z: 2.0 / (1.0 - k * k * np.sum(z * z, axis=-1))  # noqa: E731
        m = (lam(y) * delta) ** n
        w = (lam(0.5 * (y[src] + y[dst])) * delta) ** (n - 2)
        coords = space.move_origin_to(center, space.from_poincare(y))
    else:
        m = np.full(K.shape[0], delta**n)
        w = np.full(src.size, delta ** (n - 2))
        coords = center + K * delta
    length = np.asarray(space.distance(coords[src], coords[dst]), dtype=float)
    deg = np.bincount(np.concatenate([src, dst]), minlength=K.shape[0])
    return WeightedGraphMMS.from_edges(
        K.shape[0], src, dst, w, length, m,
        coords=coords, space=space, mesh=float(mesh), interior=deg == 2 * n, center=int(pos),
    )


def nearest_vertex(G: WeightedGraphMMS, x) -> int:
    if G.space is None or G.coords is None:
        raise InvalidInput("graph has no model coordinates")
    return int(np.argmin(G.space.distance(np.asarray(x, float), G.coords)))


# --- comparison checks on grids ---------------------------------------------


def _require_grid(G: WeightedGraphMMS):
    if G.space is None or G.coords is None or G.mesh is None or G.interior is None:
        raise InvalidInput("check requires a graph built by grid_discretize")


@dataclass
class ComparisonReport:
    """Margins are discrete value minus comparison bound (positive is bad)."""

    n_checked: int
    tol: float
    exclude: float
    worst_sq: float
    worst_d: float
    violations: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {**asdict(self), "passed": self.passed}


def laplacian_comparison_check(G: WeightedGraphMMS, xbar: int, cd: CurvatureDimension, tol: float,
                               exclude: float | None = None, outer: float | None = None) -> ComparisonReport:
    """Discrete Laplacian comparison for d^2/2 and d about vertex ``xbar``.

    Checked at interior vertices with ``exclude < d < outer``.  The default
    exclusion radius is ``3 * mesh``; ``outer`` defaults to infinity.
    """
    _require_grid(G)
    exclude = 3 * G.mesh if exclude is None else exclude
    outer = math.inf if outer is None else outer
    d = G.vertex_distances(xbar)
    mask = G.interior & (d > exclude) & (d < outer)
    idx = np.flatnonzero(mask)
    dm = d[idx]
    m_sq = laplacian(G, 0.5 * d * d)[idx] - cd.N * np.asarray(tau_tilde(cd, dm))
    m_d = laplacian(G, d)[idx] - np.asarray(c_model(cd, dm))
    viol = []
    for kind, marg in (("half_sq", m_sq), ("dist", m_d)):
        for j in np.flatnonzero(marg > tol):
            viol.append({"vertex": int(idx[j]), "kind": kind, "d": float(dm[j]), "margin": float(marg[j])})
    return ComparisonReport(
        n_checked=int(idx.size), tol=float(tol), exclude=float(exclude),
        worst_sq=float(m_sq.max()) if idx.size else -math.inf,
        worst_d=float(m_d.max()) if idx.size else -math.inf,
        violations=viol,
    )


def _phi_values(cd: CurvatureDimension, R: float, d: np.ndarray) -> np.ndarray:
    """phi(d, R) on every vertex with d > 0, nan at d = 0."""
    out = np.full(d.shape, np.nan)
    pos = d > 0
    prof = PhiProfile(cd, R, float(min(d[pos].min(), R)), float(max(d.max(), R)))
    out[pos] = prof.value(d[pos])
    return out


@dataclass
class SupersolutionReport:
    """Margins are Delta phi - 1 (negative is bad)."""

    n_checked: int
    tol: float
    exclude: float
    worst: float
    violations: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {**asdict(self), "passed": self.passed}


def phi_supersolution_check(G: WeightedGraphMMS, xbar: int, cd: CurvatureDimension, R: float, tol: float,
                            exclude: float | None = None) -> SupersolutionReport:
    """Check Delta phi(d(xbar, .), R) >= 1 - tol on the annulus exclude < d < R."""
    _require_grid(G)
    if cd.K > 0 and cd.K * R * R >= (cd.N - 1) * math.pi**2:
        raise DomainError("need K R^2 < (N-1) pi^2")
    exclude = 3 * G.mesh if exclude is None else exclude
    d = G.vertex_distances(xbar)
    mask = G.interior & (d > exclude) & (d < R)
    # neighbours of xbar never enter the mask, so the nan at d = 0 stays out
    idx = np.flatnonzero(mask & (d > G.mesh * 1.5))
    marg = laplacian(G, _phi_values(cd, R, d))[idx] - 1.0
    viol = [{"vertex": int(idx[j]), "d": float(d[idx[j]]), "margin": float(marg[j])} for j in np.flatnonzero(marg < -tol)]
    return SupersolutionReport(
        n_checked=int(idx.size), tol=float(tol), exclude=float(exclude),
        worst=float(marg.min()) if idx.size else math.inf, violations=viol,
    )


# --- discrete replay of the maximum-principle argument ----------------------

REPLAY_STEPS = ("laplacian_positivity", "outer_boundary", "max_principle", "positivity_at_foot", "apex_bound")


@dataclass
class ReplayReport:
    steps: dict
    binding: str
    passed: bool
    failed: str | None
    theta: float
    R: float
    a: float
    tol: float
    E_apex: float
    discrete_bound: float
    continuum_bound: float

    def to_dict(self) -> dict:
        return asdict(self)


def proof_replay(G: WeightedGraphMMS, cfg: GeodesicConfig, cd: CurvatureDimension, theta: float, R: float,
                 a: float | None = None, tol: float | None = None, lip: float = 2.0) -> ReplayReport:
    """Replay the maximum-principle bound for the excess at the grid center.

    Let u = a phi(d(xbar, .), R) - E and A = {theta < d < R} (interior
    vertices), with vertex boundary split into an inner band (d <= theta)
    and an outer band.  Set B = max over the inner band of
    lip d + a phi(d).  If E(xbar) > B, the Lipschitz bound on E makes u < 0
    on the inner band, so u <= max(u_outer, 0) on the boundary, hence on A,
    contradicting u(p) > max(u_outer, 0) at the foot p.  The replay checks

    * laplacian_positivity: Delta u >= -tol on A,
    * outer_boundary: u <= max(a, 1) tol mesh on the outer band,
    * max_principle: max_A u <= max_boundary u + tol R^2 / (2 n),
    * positivity_at_foot: p lies in A and u(p) > max(u_outer, 0),
    * apex_bound: E(xbar) <= B.

    ``a`` defaults to 2 c_{K,N}(l - R) and ``tol`` to TOL_C * mesh.  Each
    step records a slack that is >= 0 when it passes; the binding step is
    the first failure, or the step with the least slack.
    """
    _require_grid(G)
    space, mesh = G.space, G.mesh
    xbar = G.center
    tol = TOL_C * mesh if tol is None else tol
    X = G.coords
    E_all, h_all, l_all = excess_arrays(space, np.broadcast_to(cfg.x0, X.shape), np.broadcast_to(cfg.x1, X.shape), X)
    E_all, h, l = np.asarray(E_all), float(h_all[xbar]), float(l_all[xbar])
    if not (0 < theta < h):
        raise ConfigError("theta", f"need 0 < theta < h = {h}")
    if not (h < R < l):
        raise ConfigError("R", f"need h = {h} < R < l = {l}")
    if a is None:
        a = 2.0 * float(c_model(cd, l - R))
    d = G.vertex_distances(xbar)
    if d.max() < R + mesh:
        raise ConfigError("radius", "grid does not reach past the sphere S_R")
    annulus = G.interior & (d > theta) & (d < R)
    if not annulus.any():
        raise ConfigError("mesh", "annulus contains no interior vertex at this mesh")
    bdry = outer_boundary(G, annulus)
    inner = bdry & (d <= theta)
    outer = bdry & ~inner
    phi_v = _phi_values(cd, R, d)
    u = a * phi_v - E_all
    if not np.all(np.isfinite(u[annulus | bdry])):
        raise ConfigError("theta", "annulus closure reaches the center vertex")
    if not inner.any():
        raise ConfigError("theta", "inner band is empty")

    steps = {}
    lap = laplacian(G, u)[annulus]
    steps["laplacian_positivity"] = {"slack": float(lap.min() + tol), "min_laplacian": float(lap.min()),
                                     "d_at_min": float(d[annulus][np.argmin(lap)])}
    u_out = float(u[outer].max()) if outer.any() else -math.inf
    steps["outer_boundary"] = {"slack": float(max(a, 1.0) * tol * mesh - u_out), "max_u": u_out}
    mp = max_principle_check(G, u, annulus, tol=tol)
    tol_mp = tol * R * R / (2 * space.dim)
    steps["max_principle"] = {"slack": float(mp.max_boundary + tol_mp - mp.max_omega), "argmax": mp.argmax,
                              "max_annulus": mp.max_omega, "max_boundary": mp.max_boundary}
    p = nearest_vertex(G, geodesic_foot(space, cfg, X[xbar]))
    foot_slack = float(u[p] - max(u_out, 0.0)) if annulus[p] else -math.inf
    steps["positivity_at_foot"] = {"slack": foot_slack, "vertex": p, "d": float(d[p]), "E": float(E_all[p]),
                                   "in_annulus": bool(annulus[p])}
    cand = lip * d[inner] + a * phi_v[inner]
    bound = float(cand.max())
    E_apex = float(E_all[xbar])
    steps["apex_bound"] = {"slack": bound - E_apex, "vertex": int(np.flatnonzero(inner)[np.argmax(cand)])}
    cont = float(lip * theta + a * PhiProfile(cd, R, theta).value(theta))

    failed = next((s for s in REPLAY_STEPS if not steps[s]["slack"] >= 0), None)
    for s in REPLAY_STEPS:
        steps[s]["passed"] = bool(steps[s]["slack"] >= 0)
    binding = failed if failed is not None else min(REPLAY_STEPS, key=lambda s: steps[s]["slack"])
    return ReplayReport(steps=steps, binding=binding, passed=failed is None, failed=failed, theta=float(theta),
                        R=float(R), a=float(a), tol=float(tol), E_apex=E_apex, discrete_bound=bound,
                        continuum_bound=cont)


def geodesic_foot(space: ModelSpace, cfg: GeodesicConfig, x) -> np.ndarray:
    """A point of the reference geodesic nearest to x (prescan plus golden section)."""
    ts = np.linspace(0.0, 1.0, 65)
    pts = geodesic_point(space, cfg, ts)
    dist = np.asarray(space.distance(x, pts))
    j = int(np.argmin(dist))
    lo, hi = ts[max(j - 1, 0)], ts[min(j + 1, 64)]
    t, _ = golden_section(lambda s: float(space.distance(x, geodesic_point(space, cfg, s))), lo, hi, tol=1e-12)
    return np.asarray(geodesic_point(space, cfg, t))


# --- Poincare diagnostic -----------------------------------------------------


def poincare_ratio(G: WeightedGraphMMS, v0: int, r: float, f=None, seed=None) -> float:
    """Empirical constant in the local (1,1) Poincare inequality.

    Averages of |f - <f>| over B_r(v0) divided by r times the average of
    sqrt(Gamma(f,f)) over B_2r(v0); balls use graph path distances.  When
    ``f`` is omitted a random Gaussian function drawn from ``seed`` is used.
    """
    d = G.path_distances(v0, limit=2 * r * (1 + 1e-12))
    b1 = d <= r * (1 + 1e-12)
    b2 = d <= 2 * r * (1 + 1e-12)
    if b1.sum() < 2:
        raise DegenerateBall(f"B_r(v0) has {int(b1.sum())} vertex")
    if f is None:
        f = np.random.default_rng(seed).normal(size=G.n)
    f = _vf(G, f)
    m1 = G.m[b1]
    mean = np.sum(f[b1] * m1) / m1.sum()
    lhs = np.sum(np.abs(f[b1] - mean) * m1) / m1.sum()
    grad = np.sqrt(np.maximum(carre_du_champ(G, f, f), 0.0))
    rhs = r * np.sum(grad[b2] * G.m[b2]) / G.m[b2].sum()
    if lhs == 0:
        return 0.0
    return float(lhs / rhs) if rhs > 0 else math.inf
