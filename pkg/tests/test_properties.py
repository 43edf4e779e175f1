"""Property-based checks of the invariants that hold for every input."""

from __future__ import annotations

import itertools

import numpy as np
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from mixhj.effective import chi, dc_split, effective_Hs, simplecell, subsets, walsh_decompose
from mixhj.ensemble import rate_fit
from mixhj.fields import custom_field, product_field, rescale
from mixhj.hamiltonians import (
    GradientPart,
    HamiltonianSpec,
    Term,
    build_nonconvex_F,
    cosine,
    legendre_many,
    quadratic,
    sawtooth,
)
from mixhj.hjsolver import GridFunction, hopf_lax, solve_frozen

FAST = settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])
F_NC = build_nonconvex_F(1.5, 1.0, 0.5)

signs = st.sampled_from([-1.0, 1.0])


@st.composite
def sign_matrix(draw, max_rows=40, max_cols=4):
    n = draw(st.integers(1, max_rows))
    m = draw(st.integers(1, max_cols))
    flat = draw(st.lists(signs, min_size=n * m, max_size=n * m))
    return np.array(flat).reshape(n, m)


@FAST
@given(sign_matrix(), st.data())
def test_product_field_is_a_sign(vals, data):
    m = vals.shape[1]
    idx = data.draw(st.sets(st.integers(0, m - 1), min_size=1))
    out = product_field(custom_field(vals), sorted(idx)).values[:, 0]
    np.testing.assert_array_equal(out, np.prod(vals[:, sorted(idx)], axis=1))
    assert set(np.unique(out)) <= {-1.0, 1.0}


@FAST
@given(sign_matrix(max_cols=1), st.floats(0.01, 0.9), st.floats(0.05, 0.45))
def test_rescale_hits_partial_sums(vals, eps, gamma):
    z = rescale(custom_field(vals), 0, eps, gamma)
    h = eps ** (2 * gamma)
    k = np.arange(vals.shape[0] + 1)
    np.testing.assert_allclose(z(k * h), eps**gamma * np.concatenate([[0.0], np.cumsum(vals[:, 0])]), atol=1e-9)


@FAST
@given(st.integers(1, 3), st.integers(0, 2**31 - 1))
def test_walsh_reconstruct_identity_on_odd_cubes(m, seed):
    rng = np.random.default_rng(seed)
    p = np.linspace(-1, 1, 7)
    odd = {j: rng.normal(size=p.size) for j in subsets(m) if len(j) % 2}
    cube = {xi: sum(c * chi(xi, j) for j, c in odd.items()) for xi in itertools.product((1, -1), repeat=m)}
    dec = walsh_decompose(cube, p)
    assert dec.even_norm < 1e-12
    for xi, v in cube.items():
        assert np.max(np.abs(dec.reconstruct(xi) - v)) < 1e-10


@FAST
@given(st.floats(-2.5, 2.5), st.floats(-3, 3))
def test_young_inequality(p, q):
    Fs = float(legendre_many(F_NC, np.array([q]), 6.0)[0])
    assert p * q <= float(F_NC(p)) + Fs + 1e-8


@FAST
@given(st.floats(0.05, 0.95), st.floats(-3, 3))
def test_simplecell_lower_bounds(s, p):
    f = sawtooth(s)
    v = simplecell(f, p)
    assert v >= 1.0 - 1e-12 and v >= abs(p) + 0.5 - 1e-12


@settings(max_examples=25, deadline=None)
@given(st.floats(0.1, 0.9), st.floats(-3, 3))
def test_effective_Hs_symmetry(s, p):
    assert abs(effective_Hs(F_NC, s, p) - effective_Hs(F_NC, 1 - s, -p)) < 1e-9


@FAST
@given(st.lists(st.floats(-3, 3), min_size=5, max_size=40))
def test_dc_split_reconstructs(vals):
    v = np.array(vals)
    h1, h2 = dc_split(v, 0.1)
    np.testing.assert_allclose(h1 - h2, v, atol=1e-9)
    assert np.all(np.diff(h1, 2) >= -1e-9) and np.all(np.diff(h2, 2) >= -1e-9)


@FAST
@given(st.floats(0.1, 2.0), st.floats(-1, 1))
def test_rate_fit_power_law(k, logc):
    eps = np.array([1 / 8, 1 / 16, 1 / 32])
    slope, r2 = rate_fit(eps, np.exp(logc) * eps**k)
    assert abs(slope - k) < 1e-9 and r2 > 1 - 1e-9


def _periodic(coeffs, n=64):
    x = np.arange(n) / n
    vals = sum(a * np.sin(2 * np.pi * (k + 1) * x + b) for k, (a, b) in enumerate(coeffs))
    return GridFunction(np.asarray(vals, dtype=float), 1.0 / n)


waves = st.lists(st.tuples(st.floats(-0.3, 0.3), st.floats(0, 6.28)), min_size=1, max_size=3)
SPECS = [
    HamiltonianSpec(1, 1, (Term(GradientPart("function", quadratic(0.5)), None, 0), Term(None, cosine(0.5, 0.5), 0))),
    HamiltonianSpec(1, 1, (Term(GradientPart("eikonal"), cosine(1.0, 0.3), 0),)),
    HamiltonianSpec(1, 1, (Term(GradientPart("function", F_NC), None, 0), Term(None, sawtooth(0.3), 0))),
]


@FAST
@given(waves, waves, st.sampled_from(range(len(SPECS))), signs, st.floats(0.01, 0.3))
def test_frozen_solve_contraction_and_order(a, b, k, sign, T):
    u, v = _periodic(a), _periodic(b)
    pair = u.with_values(np.stack([u.values, v.values]))
    out, rep = solve_frozen(SPECS[k], [1.0], sign, pair, T)
    su, sv = out.values
    assert np.max(np.abs(su - sv)) <= np.max(np.abs(u.values - v.values)) + 1e-12
    assert rep.cfl_ratio <= 1 + 1e-12
    # ordered data stay ordered
    w = u.with_values(np.stack([u.values, u.values + np.abs(v.values)]))
    lo, hi = solve_frozen(SPECS[k], [1.0], sign, w, T)[0].values
    assert np.all(lo <= hi + 1e-12)


@FAST
@given(st.integers(1, 3), st.integers(-2, 2), st.integers(1, 20), st.integers(1, 20), waves)
def test_hopf_lax_semigroup_piecewise_linear(a, b, j1, j2, w):
    n = 64
    u = _periodic(w, n)
    F = lambda p, a=a, b=b: a * np.abs(p) + b * p
    t1, t2 = j1 * u.dx, j2 * u.dx
    once = hopf_lax(F, u, t1 + t2)
    twice = hopf_lax(F, hopf_lax(F, u, t1), t2)
    assert np.max(np.abs(once.values - twice.values)) <= 1e-12
