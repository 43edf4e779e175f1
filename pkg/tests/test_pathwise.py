from __future__ import annotations

import numpy as np
import pytest

from mixhj.errors import InvalidArgument
from mixhj.fields import PiecewisePath, custom_field, gen_rademacher, rescale
from mixhj.hamiltonians import GradientPart, HamiltonianSpec, Term, cosine, quadratic
from mixhj.hjsolver import GridFunction, grid_lipschitz
from mixhj.pathwise import (
    PathwiseProblem,
    lipschitz_bound,
    snapshot_times,
    snapshots_to_csv,
    solve_pathwise,
    solve_scaled,
    stability_gap,
)


def line_grid(f, lo=-2.0, hi=2.0, n=400):
    dx = (hi - lo) / n
    x = lo + dx * np.arange(n)
    return GridFunction(f(x), dx, origin=(lo,), boundary="lipschitz_extend")


def path(t, v):
    return PiecewisePath(np.asarray(t, dtype=float), np.asarray(v, dtype=float))


QUAD = HamiltonianSpec(1, 1, (Term(GradientPart("function", quadratic(0.5)), None, 0),),
                       envelope={"lower": quadratic(0.5), "upper": quadratic(0.5)})
ABS = HamiltonianSpec(1, 1, (Term(GradientPart("eikonal"), None, 0),))
WITH_V = HamiltonianSpec(1, 1, (Term(GradientPart("function", quadratic(0.5)), None, 0), Term(None, cosine(0.5, 0.5), 0)),
                         envelope={"lower": quadratic(0.5), "upper": quadratic(0.5, 1.0)})


def test_snapshot_times():
    np.testing.assert_allclose(snapshot_times(1.0, 4), [0, 0.25, 0.5, 0.75, 1.0])


def test_zero_path_is_identity():
    u = line_grid(np.sin)
    snaps = solve_pathwise(PathwiseProblem(QUAD, u, 1.0, paths=(path([0, 1], [0, 0]),)), 4)
    assert len(snaps) == 5
    for _, g in snaps:
        np.testing.assert_array_equal(g.values, u.values)


@pytest.mark.parametrize("p", [-1.2, 0.0, 0.7])
def test_affine_data_exact(p):
    u = line_grid(lambda x: p * x)
    z = path([0, 0.3, 0.6, 1.0], [0, 0.4, -0.1, 0.2])
    snaps = solve_pathwise(PathwiseProblem(QUAD, u, 1.0, paths=(z,)), times=[0.3, 0.6, 1.0])
    for t, g in snaps:
        np.testing.assert_allclose(g.values, u.values - p * p / 2 * z(t), atol=1e-12)


def test_up_down_versus_straight_both_stable():
    u = line_grid(lambda x: np.abs(np.sin(x)))
    zig = path([0, 0.5, 1.0], [0, 0.6, 0.2])
    straight = path([0, 1.0], [0, 0.2])
    res = stability_gap(QUAD, u, zig, straight, 1.0)
    assert res.gap > 1e-3
    assert res.holds


def test_stability_identical_paths():
    u = line_grid(np.sin)
    z = path([0, 0.5, 1.0], [0, 0.3, -0.2])
    gap, bound = stability_gap(QUAD, u, z, z, 1.0)
    assert gap == 0.0 and bound == 0.0


def test_stability_drift():
    u = line_grid(lambda x: 0.5 * np.sin(2 * x), n=400)
    z1 = path([0, 0.5, 1.0], [0, 0.3, -0.2])
    delta = 0.1
    z2 = path([0, 0.5, 1.0], [0, 0.3 + delta * 0.5, -0.2 + delta])
    res = stability_gap(WITH_V, u, z1, z2, 1.0)
    assert res.path_gap == pytest.approx(delta)
    assert res.holds


def test_stability_needs_envelope():
    u = line_grid(np.sin)
    z = path([0, 1], [0, 1])
    with pytest.raises(InvalidArgument):
        stability_gap(ABS, u, z, z, 1.0)


def test_lipschitz_bound_examples():
    assert lipschitz_bound(QUAD, 1.5) == pytest.approx(1.5)
    # p^2/2 = L^2/2 + 1
    assert lipschitz_bound(WITH_V, 1.0) == pytest.approx(np.sqrt(3.0))


def test_scaled_zero_field():
    eps, gamma = 1 / 8, 0.25
    n = 8 * 64
    u = GridFunction(np.sin(2 * np.pi * np.arange(n) / n), 1.0 / n)
    f = custom_field(np.zeros((20, 1)))
    snaps = solve_scaled(eps, gamma, WITH_V, f, u, 1.0, n_snapshots=2)
    for _, g in snaps:
        np.testing.assert_array_equal(g.values, u.values)


def test_scaled_abs_affine():
    eps, gamma, p = 0.1, 0.3, 0.8
    f = gen_rademacher(1, 100, 4)
    u = line_grid(lambda x: p * x)
    snaps = solve_scaled(eps, gamma, ABS, f, u, 1.0, times=[0.25, 0.5, 1.0])
    z = rescale(f, 0, eps, gamma)
    for t, g in snaps:
        np.testing.assert_allclose(g.values, u.values - abs(p) * z(t), atol=1e-10)


def test_scaled_grid_and_step_checks():
    eps, gamma = 1 / 8, 0.25
    coarse = GridFunction(np.zeros(64), 1 / 64)
    with pytest.raises(InvalidArgument, match="too coarse"):
        solve_scaled(eps, gamma, WITH_V, gen_rademacher(1, 50, 0), coarse, 1.0)
    fine = GridFunction(np.zeros(512), 1 / 512)
    with pytest.raises(InvalidArgument, match="steps"):
        solve_scaled(eps, gamma, WITH_V, gen_rademacher(1, 2, 0), fine, 1.0)


def test_problem_validation():
    u = line_grid(np.sin)
    with pytest.raises(InvalidArgument):
        PathwiseProblem(QUAD, u, 1.0)
    with pytest.raises(InvalidArgument):
        PathwiseProblem(QUAD, u, 2.0, paths=(path([0, 1], [0, 1]),))
    with pytest.raises(InvalidArgument):
        PathwiseProblem(QUAD, u, 1.0, field=gen_rademacher(1, 100, 0))


def test_problem_json_round_trip():
    u = line_grid(np.sin, n=40)
    prob = PathwiseProblem(WITH_V, u, 1.0, paths=(path([0, 0.5, 1.0], [0, 0.2, 0.1]),))
    back = PathwiseProblem.from_json(prob.to_json())
    assert back.to_dict() == prob.to_dict()
    a = solve_pathwise(prob)[-1][1].values
    b = solve_pathwise(back)[-1][1].values
    np.testing.assert_array_equal(a, b)


def test_lipschitz_preserved_along_solution():
    u = line_grid(lambda x: np.abs(np.sin(2 * x)), n=400)
    L = grid_lipschitz(u)
    z = path([0, 0.3, 0.6, 1.0], [0, 0.5, -0.3, 0.4])
    snaps = solve_pathwise(PathwiseProblem(WITH_V, u, 1.0, paths=(z,)), 8)
    cap = lipschitz_bound(WITH_V, L) + 4 * u.dx
    assert all(grid_lipschitz(g) <= cap for _, g in snaps)


def test_refinement_cauchy():
    z = path([0, 0.5, 1.0], [0, 0.4, 0.1])
    outs = []
    for n in (200, 400, 800):
        u = line_grid(lambda x: np.sin(2 * x), n=n)
        outs.append(solve_pathwise(PathwiseProblem(WITH_V, u, 1.0, paths=(z,)))[-1][1])
    d1 = np.max(np.abs(outs[0].values - outs[1].values[::2]))
    d2 = np.max(np.abs(outs[1].values - outs[2].values[::2]))
    assert d2 < d1
    assert d2 < 5 * outs[1].dx


def test_snapshots_csv(tmp_path):
    u = line_grid(np.sin, n=20)
    snaps = solve_pathwise(PathwiseProblem(QUAD, u, 1.0, paths=(path([0, 1], [0, 0.5]),)), 2)
    snapshots_to_csv(snaps, tmp_path / "s.csv")
    rows = (tmp_path / "s.csv").read_text().strip().splitlines()
    assert rows[0].split(",")[:3] == ["t", "x", "u"]
    assert len(rows) == 1 + 3 * 20
