from __future__ import annotations

import numpy as np
import pytest

from mixhj.errors import InvalidArgument
from mixhj.hamiltonians import (
    GradientPart,
    HamiltonianSpec,
    Term,
    constant,
    cosine,
    quadratic,
)
from mixhj.hjsolver import (
    GridFunction,
    S_pm,
    action_L,
    domain_of_dependence_check,
    grid_lipschitz,
    hopf_lax,
    solve_frozen,
    step_lax_friedrichs,
)


def line_grid(f, lo=-2.0, hi=2.0, n=401, **kw):
    x = np.linspace(lo, hi, n)
    return GridFunction(f(x), x[1] - x[0], origin=(lo,), boundary="lipschitz_extend", **kw)


def periodic_grid(f, n=256):
    dx = 1.0 / n
    return GridFunction(f(dx * np.arange(n)), dx)


def spec_of(part: GradientPart, potential=None) -> HamiltonianSpec:
    terms = (Term(part, None, 0),)
    if potential is not None:
        terms = terms + (Term(None, potential, 0),)
    return HamiltonianSpec(1, 1, terms)


EIKONAL = spec_of(GradientPart("eikonal"))
QUAD = spec_of(GradientPart("function", quadratic(0.5)))
ADVECT = spec_of(GradientPart("linear"))


def test_lf_constant_hamiltonian_shifts():
    spec = HamiltonianSpec(1, 1, (Term(None, constant(0.7), 0),))
    u = periodic_grid(lambda x: np.sin(2 * np.pi * x))
    out = step_lax_friedrichs(spec, [1.0], 2.0, u, 0.01)
    np.testing.assert_allclose(out.values, u.values - 0.01 * 2.0 * 0.7, atol=1e-14)


def test_lf_affine_data_stays_affine():
    u = line_grid(lambda x: 0.8 * x)
    out = step_lax_friedrichs(QUAD, [1.0], 1.0, u, 0.002)
    np.testing.assert_allclose(out.values, u.values - 0.002 * 0.32, atol=1e-13)


def test_eikonal_rarefaction_one_step():
    u = line_grid(np.abs, n=801)
    dt = 0.5 * u.dx
    out = step_lax_friedrichs(EIKONAL, [1.0], 1.0, u, dt)
    x = u.axis()
    np.testing.assert_allclose(out.values, np.maximum(np.abs(x) - dt, 0.0), atol=2 * u.dx)


def test_solve_frozen_zero_time_identity():
    u = periodic_grid(lambda x: np.cos(2 * np.pi * x))
    out, rep = solve_frozen(QUAD, [1.0], 1.0, u, 0.0)
    np.testing.assert_array_equal(out.values, u.values)
    assert rep.steps == 0


def test_linear_advection_translates():
    u = periodic_grid(lambda x: np.sin(2 * np.pi * x), n=512)
    out, rep = solve_frozen(ADVECT, [1.0], 1.0, u, 1.0)
    # u_t + u_x = 0 on the unit torus: back to the start after one period
    assert np.max(np.abs(out.values - u.values)) < 40 * u.dx
    assert rep.cfl_ratio <= 1.0 + 1e-12


def test_linear_advection_first_order():
    errs = []
    for n in (128, 256, 512):
        u = periodic_grid(lambda x: np.sin(2 * np.pi * x), n=n)
        out, _ = solve_frozen(ADVECT, [1.0], 1.0, u, 0.25)
        exact = np.sin(2 * np.pi * (u.axis() - 0.25))
        errs.append(np.max(np.abs(out.values - exact)))
    assert errs[0] > errs[1] > errs[2]
    assert errs[1] / errs[2] > 1.6


def test_comparison_principle():
    rng = np.random.default_rng(1)
    u = periodic_grid(lambda x: np.sin(2 * np.pi * x))
    bump = np.abs(rng.normal(size=u.n)) * 0.05
    pair = u.with_values(np.stack([u.values, u.values + bump]))
    spec = spec_of(GradientPart("function", quadratic(0.5)), cosine(0.5, 0.5))
    out, _ = solve_frozen(spec, [1.0], 1.0, pair, 0.3)
    assert np.all(out.values[0] <= out.values[1] + 1e-14)


def test_solve_frozen_rejects_negative_time():
    with pytest.raises(InvalidArgument):
        solve_frozen(QUAD, [1.0], 1.0, periodic_grid(np.sin), -1.0)


def test_hopf_lax_small_time_identity():
    u = line_grid(lambda x: np.abs(x - 0.3))
    out = hopf_lax(quadratic(0.5), u, 1e-9)
    np.testing.assert_allclose(out.values, u.values, atol=1e-6)


def test_hopf_lax_eikonal_oracle():
    u = line_grid(np.abs, n=801)
    for t in (0.25, 0.5, 1.0):
        out = hopf_lax(lambda p: np.abs(p), u, t)
        inner = np.abs(u.axis()) <= 2.0 - t
        np.testing.assert_allclose(out.values[inner], np.maximum(np.abs(u.axis()) - t, 0.0)[inner], atol=1e-12)


def test_hopf_lax_quadratic_oracle():
    u = line_grid(lambda x: x * x / 2, n=801)
    t = 0.5
    out = hopf_lax(quadratic(0.5), u, t)
    x = u.axis()
    inner = np.abs(x) <= 1.5
    np.testing.assert_allclose(out.values[inner], (x * x / (2 * (1 + t)))[inner], atol=2 * u.dx)


def test_hopf_lax_rejects_nonconvex():
    u = line_grid(np.sin)
    with pytest.raises(InvalidArgument):
        hopf_lax(lambda p: np.cos(p), u, 0.1)


def test_hopf_lax_sup_convolution_sign():
    u = line_grid(lambda x: -np.abs(x), n=801)
    out = hopf_lax(lambda p: np.abs(p), u, 0.5, sign=-1)
    x = u.axis()
    inner = np.abs(x) <= 1.5
    np.testing.assert_allclose(out.values[inner], np.minimum(-np.abs(x) + 0.5, 0.0)[inner], atol=1e-12)


def test_S_pm_zero_is_identity():
    u = periodic_grid(lambda x: np.sin(2 * np.pi * x))
    np.testing.assert_array_equal(S_pm(QUAD, [1.0], 1, 0.0, u).values, u.values)


def test_S_pm_matches_hopf_lax():
    u = line_grid(lambda x: np.abs(x) - 0.5 * np.abs(x - 0.7), n=401)
    L = grid_lipschitz(u)
    hl = S_pm(QUAD, [1.0], 1, 0.4, u)
    fd = S_pm(QUAD, [1.0], 1, 0.4, u, use_hopf_lax=False)
    inner = np.abs(u.axis()) <= 1.2
    assert np.max(np.abs(hl.values - fd.values)[inner]) <= 2 * u.dx * max(L, 1.0)


def test_inf_sup_convolution_idempotence():
    u = line_grid(lambda x: np.sin(3 * x), n=201)
    a = 0.3
    once = S_pm(QUAD, [1.0], 1, a, u)
    thrice = S_pm(QUAD, [1.0], 1, a, S_pm(QUAD, [1.0], -1, a, once))
    inner = np.abs(u.axis()) <= 1.0
    assert np.max(np.abs(once.values - thrice.values)[inner]) < 2 * u.dx


def test_action_quadratic_straight_line():
    for x, y, tau in ((0.0, 1.0, 1.0), (0.5, -0.5, 2.0), (0.2, 0.2, 0.7)):
        L = action_L(QUAD, x, y, tau, 20, dx=0.01)
        assert L == pytest.approx((x - y) ** 2 / (2 * tau), abs=0.02)


def test_action_constant_path():
    spec = spec_of(GradientPart("function", quadratic(0.5, offset=0.3)))
    assert action_L(spec, 0.4, 0.4, 1.5, 10, dx=0.02) == pytest.approx(-1.5 * 0.3, abs=1e-12)


def test_action_envelope_bounds():
    spec = spec_of(GradientPart("function", quadratic(0.5)), cosine(0.5, 0.5))
    for x, y, tau in ((0.0, 0.6, 1.0), (0.3, -0.9, 0.8)):
        v = abs(x - y) / tau
        L = action_L(spec, x, y, tau, 24, dx=0.01)
        # envelopes p^2/2 <= H <= p^2/2 + 1
        assert tau * (v * v / 2 - 1) - 1e-9 <= L <= tau * v * v / 2 + 0.03


def test_action_rejects_bad_tau():
    with pytest.raises(InvalidArgument):
        action_L(QUAD, 0.0, 1.0, 0.0, 5)


def test_domain_of_dependence_identical_data():
    u = line_grid(np.sin, lo=-3, hi=3, n=301)
    assert domain_of_dependence_check(QUAD, u, u.copy(), 1.0, 0.0, 0.5)


def test_domain_of_dependence_far_perturbation():
    u = line_grid(lambda x: 0.5 * np.sin(x), lo=-4, hi=4, n=401)
    x = u.axis()
    v = u.with_values(u.values + np.where(np.abs(x) > 2.5, 0.3 * (np.abs(x) - 2.5), 0.0))
    assert domain_of_dependence_check(QUAD, u, v, 2.4, 0.0, 0.5)
    out, _ = solve_frozen(QUAD, [1.0], 1.0, u.with_values(np.stack([u.values, v.values])), 0.5)
    # physical speed <= 0.8 here; the scheme leaks only a tail far below dx
    inner = np.abs(x) <= 1.5
    assert np.max(np.abs(out.values[0] - out.values[1])[inner]) < 0.02 * u.dx


def test_domain_of_dependence_linear_cone():
    u = line_grid(lambda x: np.zeros_like(x), lo=-3, hi=3, n=601)
    x = u.axis()
    v = u.with_values(np.where(np.abs(x - 2.0) < 0.2, 0.1, 0.0))
    out_u, _ = solve_frozen(ADVECT, [1.0], 1.0, u, 1.0)
    out_v, _ = solve_frozen(ADVECT, [1.0], 1.0, v, 1.0)
    diff = np.abs(out_u.values - out_v.values)
    # data moves right at unit speed; left of the cone nothing changes
    assert np.max(diff[x < 1.5]) < 1e-12
    assert domain_of_dependence_check(ADVECT, u, v, 1.5, 0.0, 1.0, center=-0.5)
