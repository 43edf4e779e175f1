from __future__ import annotations

import itertools

import numpy as np
import pytest

from mixhj.errors import InvalidArgument
from mixhj.effective import (
    EffectiveTable,
    ballistic_constant,
    case_of,
    cell_numeric,
    chi,
    corrector_Hs,
    dc_split,
    effective_eikonal,
    effective_Hs,
    fourpath_formulas,
    harmonic_speed,
    nonconvex_relations,
    onedexample_formulas,
    psi_branches,
    simplecell,
    skew,
    subsets,
    thresholds,
    verify_corrector,
    walsh_decompose,
)
from mixhj.hamiltonians import (
    GradientPart,
    HamiltonianSpec,
    Term,
    build_nonconvex_F,
    constant,
    cosine,
    quadratic,
    samples_function,
    sawtooth,
)

TH = (1.5, 1.0, 0.5)


@pytest.fixture(scope="module")
def F():
    return build_nonconvex_F(*TH)


def eikonal_plus(f):
    return HamiltonianSpec(1, 1, (Term(GradientPart("eikonal"), None, 0), Term(None, f, 0)))


# --- numeric cell problems ---------------------------------------------------


def test_cell_x_independent_is_exact():
    spec = HamiltonianSpec(1, 1, (Term(GradientPart("function", quadratic(0.5)), None, 0),))
    p = np.array([-1.0, 0.0, 0.3, 2.0])
    res = cell_numeric(spec, [1.0], p, n=64, T1=2, T2=4)
    np.testing.assert_allclose(res.lam, p * p / 2, atol=1e-12)


def test_cell_sawtooth_at_zero():
    res = cell_numeric(eikonal_plus(sawtooth(0.5)), [1.0], 0.0, n=256)
    assert abs(res.lam - 1.0) <= max(2 / 256, res.error)


def test_cell_consistency_under_negation():
    f = cosine(0.5, 0.5)
    pos = HamiltonianSpec(1, 1, (Term(GradientPart("function", quadratic(0.5)), None, 0), Term(None, f, 0)))
    neg = HamiltonianSpec(1, 1, (Term(GradientPart("function", quadratic(-0.5)), None, 0), Term(None, f.scaled(-1.0), 0)))
    p = np.array([0.0, 0.7, 1.5])
    a = cell_numeric(pos, [1.0], p, n=128)
    b = cell_numeric(neg, [1.0], p, n=128)
    np.testing.assert_allclose(b.lam, -a.lam, atol=2 / 128)


def test_cell_rejects_non_coercive():
    spec = HamiltonianSpec(1, 1, (Term(GradientPart("linear"), None, 0), Term(None, cosine(1, 0), 0)))
    with pytest.raises(InvalidArgument):
        cell_numeric(spec, [1.0], 0.5, n=32)


def test_cell_growth_envelope():
    f = cosine(0.4, 0.2)
    spec = HamiltonianSpec(1, 1, (Term(GradientPart("function", quadratic(0.5)), None, 0), Term(None, f, 0)))
    p = np.linspace(-2, 2, 9)
    res = cell_numeric(spec, [1.0], p, n=128)
    mx, mn, _ = f.stats()
    assert np.all(res.lam >= p * p / 2 + mn - 1e-9)
    assert np.all(res.lam <= p * p / 2 + mx + 1e-9)


# --- closed forms -------------------------------------------------------------


def test_simplecell_examples():
    assert simplecell(constant(0.0), -1.3) == pytest.approx(1.3)
    assert simplecell(sawtooth(0.5), 0.2) == pytest.approx(1.0)
    assert simplecell(sawtooth(0.5), 5.0) == pytest.approx(5.5)


def test_simplecell_matches_numeric_random():
    rng = np.random.default_rng(7)
    n = 256
    for _ in range(20):
        if rng.random() < 0.5:
            f = sawtooth(float(rng.uniform(0.1, 0.9)))
        else:
            f = cosine(float(rng.uniform(0.1, 1.0)), float(rng.uniform(-0.5, 0.5)))
        p = float(rng.uniform(-2.5, 2.5))
        res = cell_numeric(eikonal_plus(f), [1.0], p, n=n, T1=10, T2=20)
        assert abs(res.lam - simplecell(f, p)) <= max(2 / n, res.error) + 1e-12


def test_skew_classification():
    assert skew(sawtooth(0.5)) == "balanced"
    up = samples_function(np.array([0.0, 1.0, 0.0, 0.0]), 0.25)
    assert skew(up) == "up" or skew(up) == "down"
    assert skew(up.scaled(-1.0)) != skew(up)


def _cube_from_simplecell(f, p):
    cube = {}
    for xi in itertools.product((1, -1), repeat=2):
        # xi1 |p| + xi2 f(y); negative xi1 via the -H consistency relation
        g = f.scaled(float(xi[1] * xi[0]))
        cube[xi] = xi[0] * simplecell(g, p)
    return cube


@pytest.mark.parametrize("vals", [[0.0, 1.0, 0.2, 0.1], [1.0, 0.0, 0.8, 0.9]])
def test_onedexample_matches_walsh(vals):
    f = samples_function(np.array(vals), 0.25)
    p = np.linspace(-3, 3, 121)
    dec = walsh_decompose(_cube_from_simplecell(f, p), p)
    H1, H2 = onedexample_formulas(f, p)
    assert np.max(np.abs(dec.coefficients[(0,)] - H1)) < 1e-10
    assert np.max(np.abs(dec.coefficients[(1,)] - H2)) < 1e-10


def test_onedexample_regimes():
    f = samples_function(np.array([1.0, 0.0, 0.8, 0.9]), 0.25)
    mx, mn, g = f.stats()
    assert skew(f) == "up"
    H1, H2 = onedexample_formulas(f, 0.5 * (mx - g))
    assert (H1, H2) == pytest.approx(((mx - mn) / 2, (mx + mn) / 2))
    H1, H2 = onedexample_formulas(f, 2.0)
    assert (H1, H2) == pytest.approx((2.0, g))


def test_fourpath_regimes_and_collapse():
    f = samples_function(np.array([0.3, 0.0, 0.25, 0.28]), 0.25)
    mx, mn, g = f.stats()
    a, b = np.sqrt(1.2), np.sqrt(0.8)
    assert a * (mx - g) < b * (g - mn)
    low = fourpath_formulas(f, a, b, 0.5 * b * (mx - g))
    assert low["H_1"] == pytest.approx((a + b) / 4 * (mx - mn))
    high = fourpath_formulas(f, a, b, 1.1 * a * (g - mn))
    assert high["H_1"] == pytest.approx(1.1 * a * (g - mn))
    assert high["H_123"] == pytest.approx(0.0, abs=1e-15)
    p = np.linspace(-1, 1, 41)
    c = fourpath_formulas(f, 1.0, 1.0, p, relaxed=True)
    H1, H2 = onedexample_formulas(f, p)
    np.testing.assert_allclose(c["H_3"], 0.0, atol=1e-15)
    np.testing.assert_allclose(c["H_123"], 0.0, atol=1e-15)
    np.testing.assert_allclose(c["H_1"], H1, atol=1e-12)
    np.testing.assert_allclose(c["H_2"], H2, atol=1e-12)
    with pytest.raises(InvalidArgument):
        fourpath_formulas(f, b, a, 0.1)


def test_fourpath_against_cube():
    f = samples_function(np.array([0.3, 0.0, 0.25, 0.28]), 0.25)
    a, b = np.sqrt(1.2), np.sqrt(0.8)
    p = np.linspace(-2, 2, 81)
    cube = {}
    for X, Y, Z in itertools.product((1, -1), repeat=3):
        c = (a + b) / 2 * Y + (a - b) / 2 * Z
        cube[(X, Y, Z)] = X * simplecell(f.scaled(float(X * c)), p)
    dec = walsh_decompose(cube, p)
    got = fourpath_formulas(f, a, b, p)
    for key, j in (("H_1", (0,)), ("H_2", (1,)), ("H_3", (2,)), ("H_123", (0, 1, 2))):
        assert np.max(np.abs(dec.coefficients[j] - got[key])) < 1e-10


# --- Walsh expansion ----------------------------------------------------------


def test_walsh_single_odd():
    p = np.linspace(-1, 1, 11)
    dec = walsh_decompose({(1,): p**2, (-1,): -(p**2)}, p)
    np.testing.assert_allclose(dec.odd[(0,)].values, p**2)
    assert dec.even_norm == 0.0


def test_walsh_constant_input():
    p = np.linspace(-1, 1, 11)
    cube = {xi: 1 + p**2 for xi in itertools.product((1, -1), repeat=2)}
    dec = walsh_decompose(cube, p)
    np.testing.assert_allclose(dec.coefficients[()], 1 + p**2)
    assert all(np.max(np.abs(t.values)) == 0 for t in dec.odd.values())


def test_walsh_odd_count_and_grid_mismatch():
    for m in (1, 2, 3, 4):
        assert sum(len(j) % 2 for j in subsets(m)) == 2 ** (m - 1)
    a = EffectiveTable(np.linspace(-1, 1, 5), np.zeros(5))
    b = EffectiveTable(np.linspace(-1, 1, 7), np.zeros(7))
    with pytest.raises(InvalidArgument):
        walsh_decompose({(1,): a, (-1,): b})


def test_dc_split_parts_convex():
    p = np.linspace(-3, 3, 301)
    v = np.sin(2 * p) + 0.1 * p**2
    h1, h2 = dc_split(v, p[1] - p[0])
    np.testing.assert_allclose(h1 - h2, v, atol=1e-12)
    assert np.all(np.diff(h1, 2) >= -1e-12) and np.all(np.diff(h2, 2) >= -1e-12)


def test_table_interpolation_and_csv(tmp_path):
    p = np.linspace(-2, 2, 41)
    t = EffectiveTable(p, np.abs(p), "custom")
    assert t(0.05) == pytest.approx(0.05)
    assert t(3.0) == pytest.approx(3.0)
    t.to_csv(tmp_path / "t.csv", header={"note": "abs"})
    back = EffectiveTable.from_csv(tmp_path / "t.csv")
    np.testing.assert_array_equal(back.values, t.values)


# --- nonconvex example ------------------------------------------------------


def test_psi_anchor_values(F):
    assert psi_branches(F, 0.0)[2] == pytest.approx(0.0, abs=1e-12)
    # F'(theta2) = 0, so a 1e-12 level residual moves the root by ~1e-6
    assert psi_branches(F, 0.5)[1] == pytest.approx(TH[1], abs=1e-5)
    assert psi_branches(F, 1 / 3)[0] == pytest.approx(TH[0], abs=1e-9)


@pytest.mark.parametrize("s", [0.2, 0.35, 0.5, 0.65, 0.8])
def test_threshold_ordering(F, s):
    th = thresholds(F, s)
    assert th["p0"] < th["p4"] < th["p3"] < th["p2"] < th["p1"] < th["p_plus"]
    assert th["p_plus"] <= th["q_minus"] <= th["q_plus"]


def test_thresholds_special(F):
    assert thresholds(F, 0.5)["p0"] == pytest.approx(0.0, abs=1e-12)
    assert thresholds(F, 0.2)["q_plus"] == pytest.approx(thresholds(F, 0.7)["q_plus"], abs=1e-12)


def test_effective_Hs_examples(F):
    th = thresholds(F, 0.3)
    assert effective_Hs(F, 0.3, 0.0) == 0.0
    mid = 0.5 * (th["q_minus"] + th["q_plus"])
    assert effective_Hs(F, 0.3, mid) == pytest.approx(1 / 3)
    assert effective_Hs(F, 0.3, th["q_plus"]) == pytest.approx(1 / 3, abs=1e-8)


@pytest.mark.parametrize("s", [0.2, 0.5, 0.8])
def test_effective_Hs_continuous_and_monotone(F, s):
    th = thresholds(F, s)
    for key in ("p_plus", "q_minus", "q_plus"):
        v = th[key]
        assert abs(effective_Hs(F, s, v + 1e-9) - effective_Hs(F, s, v - 1e-9)) < 1e-6
    p = np.linspace(th["p0"], th["q_plus"] + 2, 200)
    assert np.all(np.diff(effective_Hs(F, s, p)) >= -1e-10)


def test_s_sensitivity(F):
    p = np.linspace(-3, 3, 121)
    assert np.max(np.abs(effective_Hs(F, 0.3, p) - effective_Hs(F, 0.7, p))) > 1e-3
    assert np.max(np.abs(effective_Hs(F, 0.5, p) - effective_Hs(F, 0.5, -p))) < 1e-10


def test_corrector_case9(F):
    th = thresholds(F, 0.35)
    p = th["q_plus"] + 0.5
    prof = corrector_Hs(F, 0.35, p)
    assert prof.case == 9
    rep = verify_corrector(prof)
    assert rep.passed() and rep.jumps and all(j["type"] == "continuous" for j in rep.jumps)
    assert prof.lam == pytest.approx(effective_Hs(F, 0.35, p), abs=1e-10)


def test_corrector_case_boundary(F):
    th = thresholds(F, 0.35)
    prof = corrector_Hs(F, 0.35, th["p_plus"])
    assert prof.lam == pytest.approx(0.0, abs=1e-10)
    assert verify_corrector(prof).passed()


def test_corrector_symmetric_at_half(F):
    prof = corrector_Hs(F, 0.5, 0.0)
    x = np.linspace(0.005, 0.495, 50)
    np.testing.assert_allclose(prof(x), -prof(1 - x), atol=1e-9)
    assert verify_corrector(prof).mean_gradient_error < 1e-8


def test_corrupted_corrector_flagged(F):
    prof = corrector_Hs(F, 0.35, thresholds(F, 0.35)["q_plus"] + 0.5)
    rep = verify_corrector(prof, lam=prof.lam + 0.01)
    assert rep.ode_residual == pytest.approx(0.01, abs=1e-9)
    assert not rep.passed()
    # shifting the stored value moves the whole profile, which breaks the mean
    bad = type(prof)(prof.F, prof.s, prof.p, prof.lam + 0.01, prof.case, prof.pieces)
    assert verify_corrector(bad).mean_gradient_error > 1e-3


def test_corrector_every_case(F):
    s = 0.35
    th = thresholds(F, s)
    seen = set()
    for p in np.linspace(th["p0"], th["q_plus"] + 1, 120):
        prof = corrector_Hs(F, s, float(p))
        assert verify_corrector(prof).passed(), (p, prof.case)
        seen.add(prof.case)
    assert seen == set(range(1, 10))
    assert case_of(F, s, th["q_plus"] + 1) == 9
    with pytest.raises(InvalidArgument):
        corrector_Hs(F, s, th["p0"] - 0.1)
    assert verify_corrector(corrector_Hs(F, s, th["p0"] - 0.1, reduce=True)).passed()


def test_nonconvex_relations_reconstruction(F):
    s = 0.3
    p = np.linspace(-2, 2, 41)
    r = nonconvex_relations(F, s, p)
    np.testing.assert_array_equal(r["H0"], 0.0)
    np.testing.assert_array_equal(r["H2"], 0.5)
    hs, h1s = effective_Hs(F, s, p), effective_Hs(F, 1 - s, p)
    expect = {(1, 1): h1s + 1, (1, -1): hs, (-1, 1): -h1s, (-1, -1): -hs - 1}
    for xi, v in expect.items():
        got = r["H0"] + r["H1"] * xi[0] + r["H2"] * xi[1] + r["H12"] * chi(xi, (0, 1))
        np.testing.assert_allclose(got, v, atol=1e-12)
    np.testing.assert_allclose(nonconvex_relations(F, 0.5, p)["H12"], 0.0, atol=1e-12)


def test_nonconvex_pattern_against_cell_numeric(F):
    # F(p) + V_s(y) should homogenize to 1 + H_{1-s}
    s = 0.3
    spec = HamiltonianSpec(1, 1, (Term(GradientPart("function", F), None, 0), Term(None, sawtooth(s), 0)))
    p = np.array([0.0, 0.8, 2.5])
    res = cell_numeric(spec, [1.0], p, n=256, T1=10, T2=20)
    expect = 1 + effective_Hs(F, 1 - s, p)
    assert np.all(np.abs(res.lam - expect) <= np.maximum(3 / 256, res.error))


def test_ballistic_constant(F):
    assert ballistic_constant(F, 0.5, 1.37) == 0.0
    small = 0.5 * min(thresholds(F, 0.3)["p_plus"], thresholds(F, 0.7)["p_plus"])
    assert ballistic_constant(F, 0.3, small) == 0.0
    th = thresholds(F, 0.3)
    p0 = 0.5 * (th["p_plus"] + th["q_minus"])
    assert abs(ballistic_constant(F, 0.3, p0)) > 1e-4


# --- eikonal front speeds ------------------------------------------------------


def test_effective_eikonal_constant_speeds():
    res = effective_eikonal([constant(1.0), constant(0.4)], [1, -1], [1.0], n=32, T1=2, T2=4)
    assert res.lam == pytest.approx(0.6, abs=1e-10)


def test_effective_eikonal_harmonic_mean():
    a = cosine(1.0, 0.5)
    res = effective_eikonal([a], [1], [1.0], n=256)
    assert abs(res.lam - harmonic_speed(a)) <= max(3 / 256, res.error)


def test_effective_eikonal_homogeneity_2d():
    a = samples_function(np.array([[1.0, 1.5], [1.2, 0.8]]), 0.5, domain="torus_2d")
    r1 = effective_eikonal([a], [1], [1.0, 0.0], n=32, T1=4, T2=8)
    r2 = effective_eikonal([a], [1], [2.0, 0.0], n=32, T1=4, T2=8)
    assert r2.lam == pytest.approx(2 * r1.lam, abs=4 / 32)


def test_effective_eikonal_rejects_sign_change():
    with pytest.raises(InvalidArgument):
        effective_eikonal([cosine(0.0, 1.0)], [1], [1.0], n=32)
