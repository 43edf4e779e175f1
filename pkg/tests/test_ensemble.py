from __future__ import annotations

import numpy as np
import pytest

from mixhj.effective import simplecell, walsh_decompose
from mixhj.errors import InvalidArgument, ResourceLimit
from mixhj.fields import PiecewisePath, custom_field, gen_rademacher, rescale, sample_seed
from mixhj.hamiltonians import GradientPart, HamiltonianSpec, Term, sawtooth
from mixhj.hjsolver import GridFunction
from mixhj.pathwise import solve_scaled
from mixhj.problems import build_grid, build_model
from mixhj.ensemble import (
    evaluate,
    homog_gap,
    ks_normal,
    ks_statistic,
    rate_fit,
    run_ensemble,
    sample_bm,
    solve_effective_spde,
    solve_intermediate,
)

P = np.linspace(-3, 3, 601)


def line_grid(f, lo=-2.0, hi=2.0, dx=1 / 128):
    n = int(round((hi - lo) / dx)) + 1
    x = lo + dx * np.arange(n)
    return GridFunction(f(x), dx, origin=(lo,), boundary="lipschitz_extend")


def single(values):
    return walsh_decompose({(1,): values, (-1,): -values}, P)


# --- Brownian paths -------------------------------------------------------------


def test_bm_starts_at_zero_and_is_seeded():
    a = sample_bm(3, 1.0, 0.01, 5)
    b = sample_bm(3, 1.0, 0.01, 5)
    assert all(z(0.0) == 0.0 for z in a)
    for z, w in zip(a, b):
        np.testing.assert_array_equal(z.values, w.values)
    assert not np.array_equal(a[0].values, a[1].values)


def test_bm_variance():
    ends = np.array([sample_bm(1, 1.0, 0.1, sample_seed(3, i))[0](1.0) for i in range(10_000)])
    assert 0.94 <= ends.var() <= 1.06


def test_bm_short_last_step():
    (z,) = sample_bm(1, 1.05, 0.1, 0)
    assert z.T == pytest.approx(1.05)
    assert np.diff(z.breakpoints)[-1] == pytest.approx(0.05)
    with pytest.raises(InvalidArgument):
        sample_bm(1, 0.01, 0.1, 0)


# --- effective equation ------------------------------------------------------------


def test_effective_linear_transport():
    dec = single(P.copy())
    u0 = line_grid(np.abs)
    (B,) = sample_bm(1, 1.0, 0.01, 2)
    snaps = solve_effective_spde(dec, [B], u0, 0.01, times=[0.5, 1.0])
    x = u0.axis()
    inner = np.abs(x) <= 1.0
    for t, g in snaps[1:]:
        # u_t + u_x dB = 0 moves the datum by -B(t); grid restriction rounds the kink
        err = np.abs(g.values - np.abs(x - B(t)))
        away = inner & (np.abs(x - B(t)) > 0.1)
        assert np.max(err[away]) < 1e-10
        assert np.max(err[inner]) <= 5 * u0.dx


def test_effective_eikonal_explicit():
    dec = single(np.abs(P))
    u0 = line_grid(np.abs, lo=-3, hi=3, dx=1 / 256)
    x = u0.axis()
    inner = np.abs(x) <= 2.0
    dt = 0.01
    for i in range(3):
        (B,) = sample_bm(1, 1.0, dt, sample_seed(21, i))
        drive = PiecewisePath(B.breakpoints, -B.values)
        (_, u), = solve_effective_spde(dec, [drive], u0, dt)[1:]
        exact = np.maximum(np.abs(x) + B(1.0), np.max(B.values))
        assert np.max(np.abs(u.values - exact)[inner]) <= u0.dx + dt


def test_effective_zero_paths():
    p = P
    cube = {(a, b): a * simplecell(sawtooth(0.3).scaled(float(a * b)), p) for a in (1, -1) for b in (1, -1)}
    dec = walsh_decompose(cube, p)
    u0 = line_grid(lambda x: np.minimum(np.abs(x), 1.0))
    zero = PiecewisePath(np.array([0.0, 1.0]), np.zeros(2))
    snaps = solve_effective_spde(dec, [zero] * len(dec.odd_subsets()), u0, 0.1, n_snapshots=3)
    for _, g in snaps:
        np.testing.assert_array_equal(g.values, u0.values)


def test_effective_refinement_stable():
    dec = single(0.5 * P**2)
    u0 = line_grid(lambda x: np.minimum(np.abs(x), 1.0))
    (B,) = sample_bm(1, 1.0, 0.005, 4)
    a = solve_effective_spde(dec, [B], u0, 0.02)[-1][1].values
    b = solve_effective_spde(dec, [B], u0, 0.01)[-1][1].values
    c = solve_effective_spde(dec, [B], u0, 0.005)[-1][1].values
    assert np.max(np.abs(b - c)) <= np.max(np.abs(a - b)) + 1e-12


def test_effective_path_count_and_window():
    dec = single(np.abs(P))
    u0 = line_grid(np.abs)
    B = sample_bm(2, 1.0, 0.1, 0)
    with pytest.raises(InvalidArgument):
        solve_effective_spde(dec, B, u0, 0.1)
    steep = line_grid(lambda x: 5 * x)
    with pytest.raises(InvalidArgument):
        solve_effective_spde(dec, B[:1], steep, 0.1)


# --- intermediate equation ---------------------------------------------------------


def test_intermediate_affine_exact():
    dec = single(np.abs(P) + 0.2)
    eps, gamma, p = 0.1, 0.25, 0.6
    f = gen_rademacher(1, 100, 6)
    u0 = line_grid(lambda x: p * x)
    snaps = solve_intermediate(dec, f, eps, gamma, u0, 1.0, times=[0.3, 1.0])
    z = rescale(f, 0, eps, gamma)
    for t, g in snaps:
        np.testing.assert_allclose(g.values, u0.values - (abs(p) + 0.2) * z(t), atol=1e-10)


def test_intermediate_zero_field():
    dec = single(np.abs(P))
    u0 = line_grid(np.sin)
    snaps = solve_intermediate(dec, custom_field(np.zeros((50, 1))), 0.1, 0.25, u0, 1.0, n_snapshots=2)
    for _, g in snaps:
        np.testing.assert_array_equal(g.values, u0.values)


def test_homog_gap_x_independent():
    spec = HamiltonianSpec(1, 1, (Term(GradientPart("eikonal"), None, 0),))
    dec = single(np.abs(P))
    eps, gamma = 1 / 8, 0.1
    f = gen_rademacher(1, 200, 3)
    u0 = build_grid({"kind": "min_abs"}, [-2.0, 2.0], eps / 64)
    gap = homog_gap(eps, gamma, spec, dec, f, u0, 0.5)
    assert gap < 4 * u0.dx


def test_homog_gap_decreases():
    model = build_model({"model": "convex_single", "f": {"kind": "sawtooth", "s": 0.5}})
    p = np.linspace(-2.5, 2.5, 501)
    dec = walsh_decompose(model.cube(p), p)
    gaps = []
    for eps in (1 / 8, 1 / 16, 1 / 32):
        u0 = build_grid({"kind": "min_abs"}, [-2.5, 2.5], eps / 64)
        f = gen_rademacher(1, 400, 1)
        gaps.append(homog_gap(eps, 0.1, model.spec, dec, f, u0, 0.5, interior=1.5))
    assert gaps[0] > gaps[1] > gaps[2]


# --- statistics --------------------------------------------------------------------


def test_ks_examples():
    a = np.random.default_rng(0).normal(size=100)
    assert ks_statistic(a, a) == 0.0
    assert ks_statistic(np.zeros(10), np.ones(10)) == 1.0
    with pytest.raises(InvalidArgument):
        ks_statistic([], [1.0])
    rng = np.random.default_rng(1)
    assert ks_statistic(rng.normal(size=10_000), rng.normal(size=10_000)) < 0.03
    assert ks_normal(rng.normal(scale=2.0, size=10_000), 2.0) < 0.03


def test_rate_fit_examples():
    eps = np.array([1 / 8, 1 / 16, 1 / 32, 1 / 64])
    s, r2 = rate_fit(eps, eps)
    assert s == pytest.approx(1.0, abs=1e-12) and r2 == pytest.approx(1.0)
    assert rate_fit(eps, eps ** (1 / 3))[0] == pytest.approx(1 / 3, abs=1e-12)
    noise = 1 + 0.05 * np.random.default_rng(2).uniform(-1, 1, eps.size)
    assert 0.7 <= rate_fit(eps, eps**0.8 * noise)[0] <= 0.9
    with pytest.raises(InvalidArgument):
        rate_fit(eps[:2], eps[:2])
    with pytest.raises(InvalidArgument):
        rate_fit(eps, -eps)


# --- ensembles ----------------------------------------------------------------------

SMALL = {"model": "convex_single", "f": {"kind": "sawtooth", "s": 0.5}, "u0": {"kind": "min_abs"},
         "epsilon": 0.25, "gamma": 0.25, "T": 0.5, "window": [-1.0, 1.0], "cell_nodes": 64}
PROBES = [(0.0, 0.25), (0.5, 0.5)]


def test_single_sample_matches_direct_solve():
    res = run_ensemble(SMALL, 1, 17, PROBES)
    model = build_model(SMALL)
    seed = sample_seed(17, 0)
    eps, gamma = SMALL["epsilon"], SMALL["gamma"]
    fld = model.field(int(np.ceil(0.5 / eps ** (2 * gamma))), seed)
    u0 = build_grid(SMALL["u0"], SMALL["window"], eps / 64)
    snaps = dict(solve_scaled(eps, gamma, model.spec, fld, u0, 0.5, times=[0.25, 0.5]))
    for k, (x, t) in enumerate(PROBES):
        assert res.values[0, k] == evaluate(snaps[t], x)
    assert res.zetas[0, 1, 0] == rescale(fld, 0, eps, gamma)(0.5)


def test_order_independence(tmp_path):
    a = run_ensemble(SMALL, 4, 3, PROBES)
    b = run_ensemble(SMALL, 4, 3, PROBES, order=[2, 0, 3, 1])
    a.to_csv(tmp_path / "a.csv")
    b.to_csv(tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert a.to_json() == b.to_json()
    with pytest.raises(InvalidArgument):
        run_ensemble(SMALL, 3, 3, PROBES, order=[0, 0, 1])


def test_parallel_matches_serial():
    a = run_ensemble(SMALL, 3, 8, PROBES)
    b = run_ensemble(SMALL, 3, 8, PROBES, jobs=2)
    np.testing.assert_array_equal(a.values, b.values)


def test_degenerate_zero_datum():
    cfg = {"model": "custom", "hamiltonian": HamiltonianSpec(1, 1, (Term(GradientPart("eikonal"), None, 0),)).to_dict(),
           "u0": {"kind": "zero"}, "epsilon": 0.25, "gamma": 0.25, "T": 1.0, "window": [-1.0, 1.0]}
    res = run_ensemble(cfg, 5, 1, [(0.0, 1.0)])
    np.testing.assert_array_equal(res.values, 0.0)
    assert np.std(res.zetas[:, 0, 0]) > 0


def test_resource_guard():
    with pytest.raises(ResourceLimit, match="estimated work"):
        run_ensemble(SMALL, 10, 0, PROBES, max_work=1.0)


def test_csv_layout(tmp_path):
    res = run_ensemble(SMALL, 2, 0, PROBES)
    res.to_csv(tmp_path / "e.csv")
    rows = (tmp_path / "e.csv").read_text().splitlines()
    assert rows[0] == "sample,x,t,value,zeta_0"
    assert len(rows) == 1 + 2 * len(PROBES)
    np.testing.assert_array_equal(res.probe(0.5, 0.5), res.values[:, 1])
