import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from agcomp.errors import BoundaryEmpty, ConfigError, DegenerateBall, DimensionMismatch, DomainError, ResourceError
from agcomp.graphs import (
    TOL_C,
    WeightedGraphMMS,
    carre_du_champ,
    chain_rule_residual,
    grid_discretize,
    integration_by_parts_residual,
    laplacian,
    laplacian_comparison_check,
    laplacian_measure,
    leibniz_residual,
    max_principle_check,
    minimizer_gap,
    outer_boundary,
    parallelogram_check,
    phi_supersolution_check,
    poincare_ratio,
    proof_replay,
    random_connected_graph,
    read_edge_list,
    subharmonic_instance,
    vertical_derivative_gamma,
    write_edge_list,
)
from agcomp.kernels import CurvatureDimension as CD
from agcomp.models import Euclidean, GeodesicConfig, Hyperbolic, NormedPlane, Sphere, linf_counterexample


def path3():
    return WeightedGraphMMS.from_edges(3, [0, 1], [1, 2], [1.0, 1.0], [1.0, 1.0], [1.0, 1.0, 1.0])


def star(k):
    return WeightedGraphMMS.from_edges(k + 1, [0] * k, list(range(1, k + 1)), np.ones(k), np.ones(k), np.ones(k + 1))


@pytest.fixture(scope="module")
def e2_grid():
    return grid_discretize(Euclidean(2), np.zeros(2), 1.0, 0.05)


def test_graph_validation():
    with pytest.raises(ValueError):
        WeightedGraphMMS.from_edges(3, [0], [1], [1.0], [1.0], [1.0, 1.0, 1.0])  # disconnected
    with pytest.raises(ValueError):
        WeightedGraphMMS.from_edges(2, [0], [1], [-1.0], [1.0], [1.0, 1.0])
    with pytest.raises(ValueError):
        WeightedGraphMMS.from_edges(2, [0], [1], [1.0], [1.0], [1.0, 0.0])


def test_carre_du_champ_examples():
    G = path3()
    f = np.array([0.0, 1.0, 2.0])
    assert carre_du_champ(G, f, f)[1] == pytest.approx(1.0)
    G = random_connected_graph(50, 0)
    g = np.random.default_rng(0).normal(size=50)
    assert np.all(carre_du_champ(G, np.full(50, 3.0), g) == 0)
    assert np.array_equal(carre_du_champ(G, f := g[::-1].copy(), g), carre_du_champ(G, g, f))
    with pytest.raises(DimensionMismatch):
        carre_du_champ(G, np.ones(3), g)


def test_laplacian_examples():
    G = path3()
    assert laplacian_measure(G, np.array([0.0, 1.0, 2.0]))[1] == 0.0
    k = 5
    ind = np.zeros(k + 1)
    ind[0] = 1.0
    assert laplacian_measure(star(k), ind)[0] == -k


def test_vertical_derivative():
    rng = np.random.default_rng(2)
    G = random_connected_graph(80, 2)
    f, g = rng.normal(size=(2, 80))
    eps = 1e-3
    out = vertical_derivative_gamma(G, f, g, eps)
    expected = carre_du_champ(G, f, g) + eps / 2 * carre_du_champ(G, f, f)
    assert np.max(np.abs(out - expected)) < 1e-10
    # f = g: (Gamma((1+eps)g) - Gamma(g)) / (2 eps) = Gamma(g,g) (1 + eps/2)
    out = vertical_derivative_gamma(G, g, g, 0.3)
    assert np.allclose(out, carre_du_champ(G, g, g) * 1.15, rtol=1e-12, atol=1e-14)
    vals = [vertical_derivative_gamma(G, f, g, e) for e in (1.0, 0.1, 0.01)]
    pos = carre_du_champ(G, f, f) > 0
    assert np.all(np.argmin(np.stack(vals), axis=0)[pos] == 2)
    with pytest.raises(DomainError):
        vertical_derivative_gamma(G, f, g, 0.0)


@given(st.integers(0, 2**31 - 1), st.integers(2, 200))
def test_exact_identities(seed, n):
    rng = np.random.default_rng(seed)
    G = random_connected_graph(n, seed)
    f, g, h = rng.normal(size=(3, n))
    scale = max(1.0, float(np.max(G.w) / np.min(G.m)))
    assert parallelogram_check(G, f, g) < 1e-12 * scale * 50
    assert parallelogram_check(G, f, f) < 1e-12 * scale * 50
    assert parallelogram_check(G, f, -f) < 1e-12 * scale * 50
    ibp = integration_by_parts_residual(G, f, g)
    assert ibp < 1e-12 * np.abs(f).max() * np.abs(g).max() * G.w.sum()
    assert leibniz_residual(G, f, g) < 1e-12 * scale * 50
    assert leibniz_residual(G, np.full(n, 2.5), g) < 1e-12 * scale * 50
    gfg, gff, ggg = carre_du_champ(G, f, g), carre_du_champ(G, f, f), carre_du_champ(G, g, g)
    assert np.all(gff >= 0)
    assert np.all(gfg**2 <= gff * ggg * (1 + 1e-12) + 1e-300)
    lin = carre_du_champ(G, 2.0 * f - 3.0 * h, g) - (2.0 * gfg - 3.0 * carre_du_champ(G, h, g))
    assert np.max(np.abs(lin)) < 1e-12 * scale * 50
    # g1 = g2 reduces to Delta g^2 = 2 g Delta g + 2 Gamma(g, g)
    res = laplacian(G, g * g) - 2 * g * laplacian(G, g) - 2 * ggg
    assert np.max(np.abs(res)) < 1e-12 * scale * 50


def test_locality_of_gamma():
    G = random_connected_graph(60, 5)
    rng = np.random.default_rng(5)
    f, g = rng.normal(size=(2, 60))
    v = 7
    far = np.ones(60, bool)
    far[v] = False
    far[G.neighbors(v)] = False
    f2 = f.copy()
    f2[far] += rng.normal(size=far.sum())
    assert carre_du_champ(G, f2, g)[v] == carre_du_champ(G, f, g)[v]


def test_max_principle_cases():
    G = random_connected_graph(40, 1)
    Om = np.zeros(40, bool)
    Om[:10] = True
    assert max_principle_check(G, np.ones(40), Om)
    for seed in range(20):
        G, g, inside = subharmonic_instance(seed)
        res = max_principle_check(G, g, inside)
        assert res.hypothesis and res.verdict
        assert not inside[res.argmax]
    with pytest.raises(BoundaryEmpty):
        max_principle_check(G, np.ones(G.n), np.ones(G.n, bool))
    with pytest.raises(BoundaryEmpty):
        max_principle_check(G, np.ones(G.n), np.zeros(G.n, bool))


def test_max_principle_detects_interior_max():
    G = path3()
    r = max_principle_check(G, np.array([0.0, 1.0, 0.0]), [1])
    assert not r.hypothesis and not r.verdict and r.argmax == 1


def test_harmonic_extension():
    G = random_connected_graph(120, 9)
    rng = np.random.default_rng(9)
    inside = np.zeros(120, bool)
    inside[rng.choice(120, 50, replace=False)] = True
    bd = outer_boundary(G, inside)
    if not bd.any():
        pytest.skip("no boundary")
    from scipy.sparse.linalg import spsolve

    A = G.adjacency()
    L = (A - np.diag(np.asarray(A.sum(axis=1)).ravel())).A if hasattr(A, "A") else None
    L = A.toarray() - np.diag(A.toarray().sum(axis=1))
    g = rng.normal(size=120)
    idx = np.flatnonzero(inside)
    g[idx] = np.linalg.solve(L[np.ix_(idx, idx)], -L[np.ix_(idx, ~inside)] @ g[~inside])
    assert np.max(np.abs(laplacian_measure(G, g)[idx])) < 1e-9
    assert max_principle_check(G, g, inside, tol=1e-9)


def test_minimizer_equivalence():
    for seed in range(10):
        G, g, inside = subharmonic_instance(seed)
        rng = np.random.default_rng(seed)
        for _ in range(10):
            f = np.zeros(G.n)
            f[inside] = -rng.exponential(size=inside.sum()) * rng.uniform(0, 3)
            assert minimizer_gap(G, g, f) >= -1e-9 * max(1.0, abs(float(np.sum(g * g))))


def test_edge_list_round_trip(tmp_path):
    G = random_connected_graph(30, 4)
    write_edge_list(G, tmp_path / "e.txt", tmp_path / "m.txt")
    H = read_edge_list(tmp_path / "e.txt", tmp_path / "m.txt")
    f = np.random.default_rng(0).normal(size=30)
    assert np.array_equal(laplacian_measure(G, f), laplacian_measure(H, f))
    assert np.array_equal(G.m, H.m)


# --- grids --------------------------------------------------------------------


def test_grid_laplacian_examples(e2_grid):
    G = e2_grid
    x = G.coords
    q = laplacian(G, 0.5 * np.sum(x * x, axis=1))
    assert np.allclose(q[G.interior], 2.0, atol=1e-9)
    aff = laplacian(G, 3.0 * x[:, 0] - 2.0 * x[:, 1] + 1.0)
    assert np.max(np.abs(aff[G.interior])) < 1e-10
    assert G.interior[G.center]
    assert np.allclose(x[G.center], 0.0)


def test_grid_errors():
    with pytest.raises(DomainError):
        grid_discretize(Sphere(2, 1.0), Sphere(2, 1.0).origin(), 0.5, 0.05)
    with pytest.raises(ResourceError):
        grid_discretize(Euclidean(3), np.zeros(3), 1.0, 0.01, budget=10_000)
    with pytest.raises(DomainError):
        grid_discretize(Euclidean(2), np.zeros(2), 1.0, 0.8)


def test_hyperbolic_grid_laplacian_consistency():
    H = Hyperbolic(2, -1.0)
    errs = []
    for mesh in (0.04, 0.02):
        G = grid_discretize(H, H.origin(), 1.0, mesh)
        d = G.vertex_distances(G.center)
        mask = G.interior & (d > 0.25)
        # Delta cosh d = 2 cosh d on H^2
        f = np.cosh(d)
        errs.append(np.max(np.abs(laplacian(G, f)[mask] - 2 * f[mask])))
    assert errs[1] <= errs[0] / 1.8


def test_distance_convergence_halving():
    errs = []
    for mesh in (0.04, 0.02, 0.01):
        G = grid_discretize(Euclidean(2), np.zeros(2), 1.0, mesh)
        d = G.vertex_distances(G.center)
        mask = G.interior & (d > 0.25)
        errs.append(np.max(np.abs(laplacian(G, d)[mask] - 1 / d[mask])))
    assert errs[1] <= errs[0] / 2 and errs[2] <= errs[1] / 2


def test_chain_rule(e2_grid):
    G = e2_grid
    g = G.coords[:, 0]
    aff = (lambda z: 2 * z + 1, lambda z: 2 + 0 * z, lambda z: 0 * z)
    assert chain_rule_residual(G, g, aff) < 1e-12
    sq = (lambda z: z * z, lambda z: 2 * z, lambda z: 2 + 0 * z)
    assert chain_rule_residual(G, g, sq) < 1e-10
    res = []
    for mesh in (0.04, 0.02, 0.01):
        H = grid_discretize(Euclidean(2), np.zeros(2), 1.0, mesh)
        d = H.vertex_distances(H.center)
        mask = H.interior & (d > 0.25)
        # z^2/2 is exact by the Leibniz identity, a cubic exercises the error term
        half = (lambda z: z * z / 2, lambda z: z, lambda z: 1 + 0 * z)
        assert chain_rule_residual(H, d, half, mask) < 1e-9
        cub = (lambda z: z**3 / 3, lambda z: z * z, lambda z: 2 * z)
        res.append(chain_rule_residual(H, d, cub, mask))
    assert res[0] / res[1] >= 1.8 and res[1] / res[2] >= 1.8


def test_laplacian_comparison_small():
    cd = CD(0.0, 2.0)
    G = grid_discretize(Euclidean(2), np.zeros(2), 1.0, 0.04)
    rep = laplacian_comparison_check(G, G.center, cd, tol=TOL_C * 0.04, exclude=0.25)
    assert rep.passed and rep.n_checked > 100
    assert rep.worst_sq < 1e-9
    H = Hyperbolic(2, -1.0)
    G = grid_discretize(H, H.origin(), 1.0, 0.04)
    rep = laplacian_comparison_check(G, G.center, H.native_cd, tol=TOL_C * 0.04, exclude=0.25)
    assert rep.passed


def test_supersolution_mask_and_sign():
    cd = CD(0.0, 2.0)
    G = grid_discretize(Euclidean(2), np.zeros(2), 1.2, 0.04)
    rep = phi_supersolution_check(G, G.center, cd, 1.0, tol=TOL_C * 0.04, exclude=0.25)
    assert rep.passed
    d = G.vertex_distances(G.center)
    assert rep.n_checked == int(np.sum(G.interior & (d > 0.25) & (d < 1.0)))


def test_poincare():
    G = grid_discretize(Euclidean(2), np.zeros(2), 1.0, 0.05)
    assert poincare_ratio(G, G.center, 0.3, f=np.ones(G.n)) == 0.0
    ratios = []
    for mesh in (0.04, 0.02):
        H = grid_discretize(Euclidean(2), np.zeros(2), 1.0, mesh)
        ratios.append(poincare_ratio(H, H.center, 0.3, f=H.coords[:, 0]))
    assert abs(ratios[1] / ratios[0] - 1) < 0.2
    for seed in range(100):
        R = random_connected_graph(20 + seed % 30, seed)
        assert math.isfinite(poincare_ratio(R, 0, 2.0, seed=seed))
    with pytest.raises(DegenerateBall):
        poincare_ratio(G, G.center, 1e-3)


def test_proof_replay_errors():
    sp = Euclidean(2)
    G = grid_discretize(sp, np.array([0.0, 0.3]), 0.6, 0.02)
    cfg = GeodesicConfig(np.array([-2.0, 0.0]), np.array([2.0, 0.0]))
    with pytest.raises(ConfigError) as exc:
        proof_replay(G, cfg, sp.native_cd, theta=0.35, R=0.5)
    assert exc.value.field == "theta"
    with pytest.raises(ConfigError):
        proof_replay(G, cfg, sp.native_cd, theta=0.1, R=0.2)


def test_proof_replay_linf_localizes_failure():
    eps = 0.1
    cfg, x, st_ = linf_counterexample(1.0, eps)
    sp = NormedPlane(math.inf)
    h = st_.h
    G = grid_discretize(sp, x, 2.5 * h, h / 10)
    rep = proof_replay(G, cfg, sp.native_cd, theta=0.25 * h, R=2 * h)
    assert not rep.passed
    assert rep.failed == "laplacian_positivity"
