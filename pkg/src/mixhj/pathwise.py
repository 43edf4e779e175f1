"""Pathwise solutions driven by piecewise-linear paths or step fields.

For a single driving path the equation ``u_t + H(Du, y) zeta'(t) = 0`` is
solved segment by segment: on a maximal monotone run of ``zeta`` it becomes
``u_s + sign H = 0`` run for the rise ``|delta zeta|``.  Several paths are
handled on the common linear pieces, where the velocity vector is constant.
A step field gives a frozen noise vector on every interval of length
``eps^(2 gamma)``, solved with the prefactor ``eps^(-gamma)`` and spatial
argument ``x / eps``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import InvalidArgument
from .fields import PiecewisePath, StepField, monotone_segments
from .hamiltonians import FrozenHamiltonian, HamiltonianSpec
from .hjsolver import GridFunction, S_pm, grid_lipschitz, solve_frozen

__all__ = [
    "PathwiseProblem",
    "solve_pathwise",
    "solve_scaled",
    "stability_gap",
    "StabilityResult",
    "lipschitz_bound",
    "snapshot_times",
    "snapshots_to_csv",
    "grid_to_dict",
    "grid_from_dict",
    "MIN_CELL_NODES",
]

MIN_CELL_NODES = 64
_TOL = 1e-12

Snapshots = list  # list of (time, GridFunction)


def grid_to_dict(gf: GridFunction) -> dict:
    tilt = gf.tilt
    if isinstance(tilt, np.ndarray):
        tilt = tilt.tolist()
    return {
        "values": np.asarray(gf.values).tolist(),
        "dx": gf.dx,
        "origin": list(gf.origin),
        "boundary": gf.boundary,
        "d": gf.d,
        "lip": gf.lip,
        "tilt": tilt,
    }


def grid_from_dict(d: dict) -> GridFunction:
    tilt = d.get("tilt", 0.0)
    if isinstance(tilt, list) and d.get("d", 1) == 1:
        tilt = np.asarray(tilt, dtype=float)
    elif isinstance(tilt, list):
        tilt = tuple(tilt)
    return GridFunction(
        np.asarray(d["values"], dtype=float), float(d["dx"]), tuple(d["origin"]), d["boundary"], int(d["d"]), d.get("lip"), tilt
    )


@dataclass(frozen=True, eq=False)
class PathwiseProblem:
    """``u_t + sum_i H^i(Du, y_scale x) dzeta^i = 0`` on ``[0, T]``.

    Give either ``paths`` (one per noise component) or a step ``field`` with
    ``epsilon`` and ``gamma``.  In the field case the Hamiltonian carries the
    prefactor ``eps^-gamma`` and ``y_scale`` defaults to ``1/eps``.
    """

    spec: HamiltonianSpec
    u0: GridFunction
    T: float
    paths: tuple | None = None
    field: StepField | None = None
    epsilon: float | None = None
    gamma: float | None = None
    y_scale: float | None = None
    scheme: str = "auto"

    def __post_init__(self) -> None:
        if self.T < 0:
            raise InvalidArgument("T must be non-negative")
        if (self.paths is None) == (self.field is None):
            raise InvalidArgument("give exactly one of paths or field")
        if self.u0.d != self.spec.d:
            raise InvalidArgument("grid dimension differs from the Hamiltonian's")
        if self.paths is not None:
            paths = tuple(self.paths)
            if len(paths) != self.spec.m:
                raise InvalidArgument(f"need {self.spec.m} paths, got {len(paths)}")
            for z in paths:
                if z.T < self.T * (1 - _TOL):
                    raise InvalidArgument(f"path ends at {z.T} before T = {self.T}")
            object.__setattr__(self, "paths", paths)
            if self.y_scale is None:
                object.__setattr__(self, "y_scale", 1.0)
        else:
            if self.epsilon is None or self.gamma is None:
                raise InvalidArgument("a field needs epsilon and gamma")
            if not (0 < self.epsilon <= 1) or self.gamma <= 0:
                raise InvalidArgument("need epsilon in (0, 1] and gamma > 0")
            if self.field.m != self.spec.m:
                raise InvalidArgument(f"field has {self.field.m} components, Hamiltonian expects {self.spec.m}")
            need = math.ceil(self.T / self.step_length * (1 - _TOL))
            if self.field.n_steps < need:
                raise InvalidArgument(f"field has {self.field.n_steps} steps, T = {self.T} needs {need}")
            if self.y_scale is None:
                object.__setattr__(self, "y_scale", 1.0 / self.epsilon)

    @property
    def step_length(self) -> float:
        return self.epsilon ** (2.0 * self.gamma)

    @property
    def prefactor(self) -> float:
        return self.epsilon ** (-self.gamma) if self.field is not None else 1.0

    def to_dict(self) -> dict:
        d = {"spec": self.spec.to_dict(), "u0": grid_to_dict(self.u0), "T": self.T, "y_scale": self.y_scale, "scheme": self.scheme}
        if self.paths is not None:
            d["paths"] = [{"breakpoints": z.breakpoints.tolist(), "values": z.values.tolist()} for z in self.paths]
        else:
            d["field"] = {"values": self.field.values.tolist(), "law": self.field.law, "params": self.field.params}
            d["epsilon"], d["gamma"] = self.epsilon, self.gamma
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "PathwiseProblem":
        extra = set(d) - {"spec", "u0", "T", "y_scale", "scheme", "paths", "field", "epsilon", "gamma"}
        if extra:
            raise InvalidArgument(f"unknown keys in problem: {sorted(extra)}")
        paths = None
        if d.get("paths") is not None:
            paths = tuple(PiecewisePath(np.asarray(z["breakpoints"]), np.asarray(z["values"])) for z in d["paths"])
        fld = None
        if d.get("field") is not None:
            f = d["field"]
            fld = StepField(np.asarray(f["values"], dtype=float), f.get("law", "custom"), dict(f.get("params", {})))
        return cls(
            HamiltonianSpec.from_dict(d["spec"]),
            grid_from_dict(d["u0"]),
            float(d["T"]),
            paths,
            fld,
            d.get("epsilon"),
            d.get("gamma"),
            d.get("y_scale"),
            d.get("scheme", "auto"),
        )

    @classmethod
    def from_json(cls, text: str) -> "PathwiseProblem":
        return cls.from_dict(json.loads(text))


def snapshot_times(T: float, n_snapshots: int) -> np.ndarray:
    """``0`` followed by ``n_snapshots`` equally spaced times ending at ``T``."""
    if n_snapshots < 1:
        raise InvalidArgument("n_snapshots must be at least 1")
    return np.linspace(0.0, T, n_snapshots + 1)


class _Advancer:
    """Runs frozen pieces, caching frozen Hamiltonians per noise vector."""

    def __init__(self, spec: HamiltonianSpec, y_scale: float, scheme: str):
        self.spec, self.y_scale, self.scheme = spec, y_scale, scheme
        self.cache: dict[tuple, FrozenHamiltonian] = {}

    def run(self, u: GridFunction, xi, scale: float, duration: float) -> GridFunction:
        """Advance ``u_t + scale * H(Du, y_scale x, xi) = 0`` for ``duration``."""
        xi = np.asarray(xi, dtype=float)
        if duration <= 0 or scale == 0 or not np.any(xi):
            return u
        if self.spec.x_independent and self.spec.d == 1:
            sign = 1 if scale > 0 else -1
            return S_pm(self.spec, xi, sign, abs(scale) * duration, u, scheme=self.scheme)
        key = tuple(float(v) for v in xi) + (float(scale),)
        fz = self.cache.get(key)
        if fz is None:
            coords = tuple(c * self.y_scale for c in u.coords())
            fz = FrozenHamiltonian(self.spec, xi, coords, scale)
            self.cache[key] = fz
        out, _ = solve_frozen(None, xi, scale, u, duration, scheme=self.scheme, frozen=fz)
        return out


def _unit(m: int, i: int) -> np.ndarray:
    e = np.zeros(m)
    e[i] = 1.0
    return e


def _drive_single(adv: _Advancer, u: GridFunction, path: PiecewisePath, comp: int, m: int, times: np.ndarray) -> Snapshots:
    """Monotone-segment splitting for one driving path."""
    xi = _unit(m, comp)
    out = [(float(times[0]), u)]
    t_now = float(times[0])
    pending = list(times[1:])
    T = float(times[-1])
    for seg in monotone_segments(path):
        if seg.t_start >= T - _TOL:
            break
        t_end = min(seg.t_end, T)
        while pending and pending[0] <= t_end + _TOL:
            tau = pending.pop(0)
            u = adv.run(u, xi, float(seg.direction), abs(path(tau) - path(t_now)))
            t_now = tau
            out.append((float(tau), u))
        if t_end > t_now:
            u = adv.run(u, xi, float(seg.direction), abs(path(t_end) - path(t_now)))
            t_now = t_end
    for tau in pending:
        out.append((float(tau), u))
    return out


def _drive_multi(adv: _Advancer, u: GridFunction, paths: Sequence[PiecewisePath], times: np.ndarray) -> Snapshots:
    """Common linear pieces with a constant velocity vector."""
    T = float(times[-1])
    knots = np.unique(np.concatenate([z.breakpoints[z.breakpoints < T] for z in paths] + [times]))
    knots = knots[knots <= T]
    out = [(float(times[0]), u)]
    snap = set(float(t) for t in times[1:])
    for a, b in zip(knots[:-1], knots[1:]):
        vel = np.array([(z(b) - z(a)) / (b - a) for z in paths])
        u = adv.run(u, vel, 1.0, b - a)
        if float(b) in snap:
            out.append((float(b), u))
    return out


def _drive_field(adv: _Advancer, u: GridFunction, prob: PathwiseProblem, times: np.ndarray) -> Snapshots:
    h = prob.step_length
    scale = prob.prefactor
    X = prob.field.values
    out = [(float(times[0]), u)]
    t_now = 0.0
    T = float(times[-1])
    k = 0
    pending = list(times[1:])
    while t_now < T - _TOL * max(1.0, T):
        end = min((k + 1) * h, T)
        while pending and pending[0] <= end + _TOL:
            tau = pending.pop(0)
            u = adv.run(u, X[k], scale, tau - t_now)
            t_now = max(t_now, tau)
            out.append((float(tau), u))
        if end > t_now:
            u = adv.run(u, X[k], scale, end - t_now)
            t_now = end
        k += 1
    for tau in pending:
        out.append((float(tau), u))
    return out


def solve_pathwise(problem: PathwiseProblem, n_snapshots: int = 1, times: Sequence[float] | None = None) -> Snapshots:
    """Snapshots ``[(t, u(., t))]`` at ``0`` and ``n_snapshots`` equal steps up to ``T``.

    Explicit ``times`` (sorted, within ``[0, T]``) override the uniform grid;
    time 0 is always included.
    """
    T = problem.T
    if times is None:
        ts = snapshot_times(T, n_snapshots)
    else:
        ts = np.unique(np.concatenate([[0.0], np.asarray(times, dtype=float)]))
        if ts[-1] > T * (1 + _TOL) or ts[0] < 0:
            raise InvalidArgument("snapshot times must lie in [0, T]")
    adv = _Advancer(problem.spec, problem.y_scale, problem.scheme)
    u0 = problem.u0
    if problem.field is not None:
        return _drive_field(adv, u0, problem, ts)
    paths = problem.paths
    moving = [i for i, z in enumerate(paths) if np.any(z(np.append(z.breakpoints[z.breakpoints <= T], T)) != 0.0)]
    if not moving:
        return [(float(t), u0) for t in ts]
    if len(moving) == 1:
        i = moving[0]
        return _drive_single(adv, u0, paths[i], i, problem.spec.m, ts)
    return _drive_multi(adv, u0, paths, ts)


def _check_scaled_grid(spec: HamiltonianSpec, u0: GridFunction, epsilon: float, cell_nodes: int) -> None:
    if spec.x_independent:
        return
    need = epsilon / cell_nodes
    if u0.dx > need * (1 + 1e-9):
        n_req = [int(math.ceil(u0.length(i) / need)) for i in range(u0.d)]
        raise InvalidArgument(f"grid spacing {u0.dx} too coarse: need dx <= eps/{cell_nodes} = {need} ({n_req} nodes)")
    if u0.boundary == "periodic":
        for i in range(u0.d):
            r = u0.length(i) / epsilon
            if abs(r - round(r)) > 1e-9 * max(1.0, r):
                raise InvalidArgument("a periodic window must hold a whole number of eps-cells")


def solve_scaled(
    epsilon: float,
    gamma: float,
    spec: HamiltonianSpec,
    field: StepField,
    u0: GridFunction,
    T: float,
    *,
    n_snapshots: int = 1,
    times: Sequence[float] | None = None,
    scheme: str = "auto",
    cell_nodes: int = MIN_CELL_NODES,
) -> Snapshots:
    """``u_t + eps^-gamma sum_i H^i(Du, x/eps) X_k^i = 0`` on ``[k eps^(2 gamma), (k+1) eps^(2 gamma))``."""
    _check_scaled_grid(spec, u0, epsilon, cell_nodes)
    prob = PathwiseProblem(spec, u0, T, field=field, epsilon=epsilon, gamma=gamma, scheme=scheme)
    return solve_pathwise(prob, n_snapshots, times)


def _inverse_increasing(fn, target: float, hi: float = 1.0) -> float:
    while fn(hi) < target:
        hi *= 2.0
        if hi > 1e12:
            raise InvalidArgument("envelope does not reach the target level")
    lo = 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if fn(mid) < target:
            lo = mid
        else:
            hi = mid
    return hi


def lipschitz_bound(spec: HamiltonianSpec, L: float) -> float:
    """``nu_lower^{-1}(nu_upper(L))`` from the recorded radial envelopes."""
    if spec.envelope is None:
        raise InvalidArgument("Hamiltonian has no recorded envelope")
    lo, up = spec.envelope["lower"], spec.envelope["upper"]
    return _inverse_increasing(lambda r: float(lo(r)), float(up(L)))


def _sup_path_gap(z1: PiecewisePath, z2: PiecewisePath, T: float) -> tuple[float, float]:
    t = np.unique(np.concatenate([z1.breakpoints, z2.breakpoints, [T]]))
    t = t[t <= T]
    g = z1(t) - z2(t)
    return float(np.max(np.abs(g))), float(g[-1])


@dataclass
class StabilityResult:
    gap: float
    bound: float
    scheme_error: float
    path_gap: float
    L: float

    @property
    def holds(self) -> bool:
        return self.gap <= self.bound + 5.0 * self.scheme_error

    def __iter__(self):
        yield self.gap
        yield self.bound


def _coarsen(gf: GridFunction) -> GridFunction:
    if gf.d != 1 or gf.n % 2:
        raise InvalidArgument("coarsening needs a 1-d grid with an even node count")
    return GridFunction(gf.values[..., ::2], 2 * gf.dx, gf.origin, gf.boundary, 1, gf.lip, gf.tilt)


def stability_gap(
    spec: HamiltonianSpec,
    u0: GridFunction,
    zeta1: PiecewisePath,
    zeta2: PiecewisePath,
    T: float,
    *,
    v0: GridFunction | None = None,
    n_snapshots: int = 16,
    scheme: str = "auto",
) -> StabilityResult:
    """Measured ``max |u1 - u2|`` against the path-stability bound.

    The bound is ``|u0 - v0| + nu_upper(L) M + nu_lower(0)_- (M + |zeta1(T) - zeta2(T)|)``
    with ``M = max |zeta1 - zeta2|``; it covers both orderings of the pair.
    The scheme error is the larger of ``max |u_h - u_2h|`` over the two runs.
    Only one-component Hamiltonians are accepted.
    """
    if spec.envelope is None:
        raise InvalidArgument("stability_gap needs the envelope functions nu_lower and nu_upper")
    if spec.m != 1:
        raise InvalidArgument("stability_gap compares single-path problems")
    v0 = u0 if v0 is None else v0
    L = max(grid_lipschitz(u0), grid_lipschitz(v0))
    M, D = _sup_path_gap(zeta1, zeta2, T)
    up = float(spec.envelope["upper"](L))
    lo0 = float(spec.envelope["lower"](0.0))
    bound = float(np.max(np.abs(u0.values - v0.values))) + up * M + max(-lo0, 0.0) * (M + abs(D))

    def run(z, w):
        return solve_pathwise(PathwiseProblem(spec, w, T, paths=(z,), scheme=scheme), n_snapshots)

    fine1, fine2 = run(zeta1, u0), run(zeta2, v0)
    gap = max(float(np.max(np.abs(a.values - b.values))) for (_, a), (_, b) in zip(fine1, fine2))
    err = 0.0
    if u0.d == 1 and u0.n % 2 == 0:
        for z, w, fine in ((zeta1, u0, fine1), (zeta2, v0, fine2)):
            coarse = run(z, _coarsen(w))
            for (_, a), (_, c) in zip(fine, coarse):
                err = max(err, float(np.max(np.abs(a.values[..., ::2] - c.values))))
    return StabilityResult(gap, bound, err, M, L)


def snapshots_to_csv(snaps: Snapshots, path: str | Path) -> None:
    """One row per (time, node): ``t,x,u`` in 1-d, ``t,x1,x2,u`` in 2-d."""
    with open(path, "w") as fh:
        first = snaps[0][1]
        fh.write("t,x,u\n" if first.d == 1 else "t,x1,x2,u\n")
        for t, gf in snaps:
            if gf.values.ndim != gf.d:
                raise InvalidArgument("export batched grids one sample at a time")
            if gf.d == 1:
                for x, u in zip(gf.axis(0), gf.values):
                    fh.write(f"{t!r},{float(x)!r},{float(u)!r}\n")
            else:
                X, Y = gf.coords()
                for x, y, u in zip(X.ravel(), Y.ravel(), gf.values.ravel()):
                    fh.write(f"{t!r},{float(x)!r},{float(y)!r},{float(u)!r}\n")
