"""Deterministic viscosity-solution engines on uniform grids.

The frozen equation ``u_t + scale * H(Du, y, xi) = 0`` is advanced with a
monotone Lax-Friedrichs scheme, or in one dimension with the exact Godunov flux
when the Hamiltonian has a single gradient part.  For spatially homogeneous
convex Hamiltonians the Hopf-Lax formula gives an independent solver.  The
module also computes the action functional ``L(x, y, tau)`` by dynamic
programming over grid paths.

Grid values may carry leading batch axes; all stencils act on the trailing
``d`` axes.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import CFLViolation, InvalidArgument, WindowTooSmall
from .hamiltonians import FrozenHamiltonian, HamiltonianSpec, ScalarFunction, conjugate_on_window

__all__ = [
    "GridFunction",
    "SolveReport",
    "step_lax_friedrichs",
    "step_godunov",
    "solve_frozen",
    "hopf_lax",
    "S_pm",
    "conjugate_function",
    "action_L",
    "domain_of_dependence_check",
    "grid_lipschitz",
]

ALPHA_INFLATION = 1.1


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Samples ``values[..., i] = u(origin + i dx)`` (per axis in 2-d).

    ``boundary='periodic'`` wraps with an affine offset: ``u(x + P) = u(x) + tilt * P``
    where ``P = n dx``.  ``boundary='lipschitz_extend'`` fills ghost nodes by
    extrapolating the end slope, clipped to ``lip`` when it is set.
    """

    values: np.ndarray
    dx: float
    origin: tuple = (0.0,)
    boundary: str = "periodic"
    d: int = 1
    lip: float | None = None
    tilt: object = 0.0

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=float)
        if self.d not in (1, 2) or vals.ndim < self.d:
            raise InvalidArgument("values must have at least d axes, d in {1, 2}")
        if self.boundary not in ("periodic", "lipschitz_extend"):
            raise InvalidArgument(f"unknown boundary {self.boundary!r}")
        if self.dx <= 0:
            raise InvalidArgument("dx must be positive")
        if not np.all(np.isfinite(vals)):
            raise InvalidArgument("grid values must be finite")
        if any(s < 3 for s in vals.shape[-self.d :]):
            raise InvalidArgument("need at least 3 nodes per axis")
        origin = self.origin
        if np.ndim(origin) == 0:
            origin = (float(origin),) * self.d
        object.__setattr__(self, "origin", tuple(float(o) for o in origin))
        object.__setattr__(self, "values", vals)

    @property
    def shape(self) -> tuple:
        return self.values.shape[-self.d :]

    @property
    def n(self) -> int:
        return self.shape[0]

    def axis(self, i: int = 0) -> np.ndarray:
        return self.origin[i] + self.dx * np.arange(self.shape[i])

    def coords(self) -> tuple:
        if self.d == 1:
            return (self.axis(0),)
        return tuple(np.meshgrid(self.axis(0), self.axis(1), indexing="ij"))

    def length(self, i: int = 0) -> float:
        return self.shape[i] * self.dx

    def tilt_axis(self, i: int):
        t = self.tilt
        if self.d == 2 and isinstance(t, (tuple, list)):
            return t[i]
        return t

    def with_values(self, values: np.ndarray) -> "GridFunction":
        return replace(self, values=np.asarray(values, dtype=float))

    def copy(self) -> "GridFunction":
        return self.with_values(self.values.copy())

    def __call__(self, x):
        """Piecewise-linear interpolation in 1-d (no batch axes)."""
        if self.d != 1 or self.values.ndim != 1:
            raise InvalidArgument("interpolation is implemented for unbatched 1-d grids")
        xs = self.axis(0)
        return np.interp(x, xs, self.values)

    def to_csv(self, path: str | Path, t: float | None = None) -> None:
        if self.values.ndim != self.d:
            raise InvalidArgument("export batched grids one sample at a time")
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            cols = ["x"] if self.d == 1 else ["x1", "x2"]
            w.writerow((["t"] if t is not None else []) + cols + ["u"])
            pre = [repr(float(t))] if t is not None else []
            if self.d == 1:
                for x, u in zip(self.axis(0), self.values):
                    w.writerow(pre + [repr(float(x)), repr(float(u))])
            else:
                X, Y = self.coords()
                for x, y, u in zip(X.ravel(), Y.ravel(), self.values.ravel()):
                    w.writerow(pre + [repr(float(x)), repr(float(y)), repr(float(u))])


@dataclass
class SolveReport:
    steps: int = 0
    dt: float = 0.0
    max_grad: float = 0.0
    cfl_ratio: float = 0.0
    last_change: float = 0.0
    scheme: str = ""

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


# --------------------------------------------------------------------------
# ghost nodes and one-sided differences


def _ghosts(gf: GridFunction, v: np.ndarray, axis: int, width: int = 1):
    """Left and right ghost layers (each ``width`` deep) along a trailing axis."""
    ax = v.ndim - gf.d + axis
    n = v.shape[ax]
    take = lambda idx: np.take(v, idx, axis=ax)
    if gf.boundary == "periodic":
        shift = gf.tilt_axis(axis) * gf.length(axis)
        shift = np.asarray(shift, dtype=float)
        left = take(np.arange(n - width, n)) - shift
        right = take(np.arange(0, width)) + shift
        return left, right
    lip = gf.lip
    s_lo = (take([1]) - take([0])) / gf.dx
    s_hi = (take([n - 1]) - take([n - 2])) / gf.dx
    if lip is not None:
        s_lo = np.clip(s_lo, -lip, lip)
        s_hi = np.clip(s_hi, -lip, lip)
    shape = [1] * v.ndim
    shape[ax] = width
    k_left = np.arange(width, 0, -1, dtype=float).reshape(shape)
    k_right = np.arange(1, width + 1, dtype=float).reshape(shape)
    left = take([0]) - s_lo * gf.dx * k_left
    right = take([n - 1]) + s_hi * gf.dx * k_right
    return left, right


def _one_sided(gf: GridFunction, v: np.ndarray):
    """Backward and forward differences per axis."""
    out = []
    for axis in range(gf.d):
        ax = v.ndim - gf.d + axis
        left, right = _ghosts(gf, v, axis)
        padded = np.concatenate([left, v, right], axis=ax)
        n = v.shape[ax]
        lo = np.take(padded, np.arange(0, n), axis=ax)
        hi = np.take(padded, np.arange(2, n + 2), axis=ax)
        out.append(((v - lo) / gf.dx, (hi - v) / gf.dx))
    return out


def grid_lipschitz(gf: GridFunction) -> float:
    """Largest one-sided difference quotient, ghosts included."""
    return float(max(max(np.max(np.abs(a)), np.max(np.abs(b))) for a, b in _one_sided(gf, gf.values)))


# --------------------------------------------------------------------------
# explicit steps


def _frozen_for(spec: HamiltonianSpec, xi, scale: float, gf: GridFunction, y_scale: float) -> FrozenHamiltonian:
    coords = tuple(c * y_scale for c in gf.coords())
    return FrozenHamiltonian(spec, xi, coords, scale)


def _lf_rhs(fz: FrozenHamiltonian, diffs, alpha: float):
    mids = [(a + b) / 2 for a, b in diffs]
    H = fz.H(*mids)
    for a, b in diffs:
        H = H - alpha * (b - a) / 2
    return H


def _max_grad(diffs) -> float:
    return float(max(max(np.max(np.abs(a)), np.max(np.abs(b))) for a, b in diffs))


def _dt_limit(fz: FrozenHamiltonian, R: float, dx: float, scheme: str) -> tuple[float, float]:
    alpha = ALPHA_INFLATION * fz.alpha(R)
    if alpha == 0.0:
        return math.inf, 0.0
    if scheme == "godunov":
        return dx / alpha, alpha
    return dx / (fz.d * alpha), alpha


def step_lax_friedrichs(spec: HamiltonianSpec, xi, scale: float, u: GridFunction, dt: float, y_scale: float = 1.0) -> GridFunction:
    """One forward-Euler Lax-Friedrichs step; rejects steps that break monotonicity."""
    fz = _frozen_for(spec, xi, scale, u, y_scale)
    diffs = _one_sided(u, u.values)
    dt_max, alpha = _dt_limit(fz, _max_grad(diffs), u.dx, "lf")
    if dt > dt_max * (1 + 1e-12):
        raise CFLViolation(f"time step {dt} exceeds the CFL limit {dt_max}", suggested_dt=0.9 * dt_max)
    return u.with_values(u.values - dt * _lf_rhs(fz, diffs, alpha))


def step_godunov(spec: HamiltonianSpec, xi, scale: float, u: GridFunction, dt: float, y_scale: float = 1.0) -> GridFunction:
    """One forward-Euler step with the exact 1-d Godunov flux."""
    fz = _frozen_for(spec, xi, scale, u, y_scale)
    if not fz.godunov_ready:
        raise InvalidArgument("Godunov flux needs d = 1 and a single gradient part")
    diffs = _one_sided(u, u.values)
    dt_max, _ = _dt_limit(fz, _max_grad(diffs), u.dx, "godunov")
    if dt > dt_max * (1 + 1e-12):
        raise CFLViolation(f"time step {dt} exceeds the CFL limit {dt_max}", suggested_dt=0.9 * dt_max)
    a, b = diffs[0]
    return u.with_values(u.values - dt * fz.godunov_flux(a, b))


def _pick_scheme(fz: FrozenHamiltonian, scheme: str) -> str:
    if scheme == "auto":
        return "godunov" if fz.godunov_ready else "lf"
    if scheme == "godunov" and not fz.godunov_ready:
        raise InvalidArgument("Godunov flux needs d = 1 and a single gradient part")
    if scheme not in ("lf", "godunov"):
        raise InvalidArgument(f"unknown scheme {scheme!r}")
    return scheme


def solve_frozen(
    spec: HamiltonianSpec | None,
    xi,
    scale: float,
    u0: GridFunction,
    T: float,
    *,
    y_scale: float = 1.0,
    scheme: str = "auto",
    cfl: float = 0.9,
    frozen: FrozenHamiltonian | None = None,
) -> tuple[GridFunction, SolveReport]:
    """Advance ``u_t + scale * H(Du, y_scale * x, xi) = 0`` to exactly time ``T``."""
    if T < 0:
        raise InvalidArgument("T must be non-negative")
    if not 0 < cfl <= 1:
        raise InvalidArgument("cfl must lie in (0, 1]")
    fz = frozen if frozen is not None else _frozen_for(spec, xi, scale, u0, y_scale)
    scheme = _pick_scheme(fz, scheme)
    rep = SolveReport(scheme=scheme)
    v = u0.values.copy()
    t = 0.0
    while T - t > 1e-13 * max(T, 1.0):
        diffs = _one_sided(u0, v)
        R = _max_grad(diffs)
        rep.max_grad = max(rep.max_grad, R)
        dt_max, alpha = _dt_limit(fz, R, u0.dx, scheme)
        dt = min(cfl * dt_max, T - t)
        if scheme == "godunov":
            rhs = fz.godunov_flux(*diffs[0])
        else:
            rhs = _lf_rhs(fz, diffs, alpha)
        new = v - dt * rhs
        rep.last_change = float(np.max(np.abs(new - v)))
        v = new
        t += dt
        rep.steps += 1
        rep.dt = max(rep.dt, dt)
        if math.isfinite(dt_max):
            rep.cfl_ratio = max(rep.cfl_ratio, dt / dt_max)
    rep.max_grad = max(rep.max_grad, _max_grad(_one_sided(u0, v)))
    return u0.with_values(v), rep


# --------------------------------------------------------------------------
# Hopf-Lax


def _extended(gf: GridFunction, v: np.ndarray, K: int) -> np.ndarray:
    """Values on nodes -K..n-1+K (1-d, trailing axis)."""
    if gf.boundary == "periodic":
        n = v.shape[-1]
        reps = K // n + 1
        shift = np.asarray(gf.tilt_axis(0), dtype=float) * gf.length(0)
        parts = [v + j * shift for j in range(-reps, reps + 1)]
        big = np.concatenate(parts, axis=-1)
        start = reps * n - K
        return big[..., start : start + n + 2 * K]
    left, right = _ghosts(gf, v, 0, width=K) if K > 0 else (v[..., :0], v[..., :0])
    return np.concatenate([left, v, right], axis=-1)


def _as_callable(F) -> Callable:
    if isinstance(F, ScalarFunction) or callable(F):
        return lambda p: np.asarray(F(np.asarray(p, dtype=float)), dtype=float)
    raise InvalidArgument("F must be a ScalarFunction or a callable")


def hopf_lax(F, u0: GridFunction, t: float, sign: int = 1, n_grid: int = 4001) -> GridFunction:
    """Discrete Hopf-Lax solution of ``u_t + sign * F(Du) = 0`` at time ``t``.

    ``sign=+1``: ``u(x) = min_y [u0(y) + t F*((x - y)/t)]``.
    ``sign=-1``: ``u(x) = max_y [u0(y) - t F*((y - x)/t)]``.
    The minimization runs over grid nodes.  ``F*`` is the conjugate restricted
    to ``|p| <= Lip(u0)``, which leaves the value unchanged for Lipschitz data.
    Ties go to the smaller ``|x - y|``.
    """
    if u0.d != 1:
        raise InvalidArgument("hopf_lax is implemented in one dimension")
    if t < 0:
        raise InvalidArgument("t must be non-negative")
    if sign not in (1, -1):
        raise InvalidArgument("sign must be +1 or -1")
    if t == 0:
        return u0.copy()
    f = _as_callable(F)
    P = max(grid_lipschitz(u0), 1e-9) * (1 + 1e-12)
    pg = np.linspace(-P, P, n_grid)
    fp = f(pg)
    d2 = np.diff(fp, 2)
    if np.any(d2 < -1e-9 * max(1.0, float(np.max(np.abs(fp))))):
        raise InvalidArgument("hopf_lax needs a convex F")
    S = float(np.max(np.abs(np.diff(fp)))) / (pg[1] - pg[0])
    dx = u0.dx
    K = int(math.ceil(t * S / dx)) + 1
    K = min(K, 10 * u0.n + 1) if u0.boundary == "lipschitz_extend" else K
    ks = np.arange(-K, K + 1)
    fstar, _, _ = conjugate_on_window(f, ks * dx / t, P, n_grid)
    cost = t * fstar
    ext = _extended(u0, u0.values, K)
    n = u0.n
    order = sorted(range(-K, K + 1), key=lambda k: (abs(k), k))
    out = None
    for k in order:
        c = cost[k + K]
        if sign == 1:
            cand = ext[..., K - k : K - k + n] + c
            out = cand if out is None else np.where(cand < out, cand, out)
        else:
            cand = ext[..., K + k : K + k + n] - c
            out = cand if out is None else np.where(cand > out, cand, out)
    return u0.with_values(out)


# --------------------------------------------------------------------------
# forward operators


def S_pm(
    spec: HamiltonianSpec,
    xi,
    sign: int,
    duration: float,
    u0: GridFunction,
    *,
    y_scale: float = 1.0,
    scheme: str = "auto",
    use_hopf_lax: bool = True,
) -> GridFunction:
    """Solve ``u_t + sign * H(Du, y, xi) = 0`` for ``duration``.

    Spatially homogeneous convex (or concave) 1-d Hamiltonians go through
    :func:`hopf_lax`; everything else uses :func:`solve_frozen`.
    """
    if duration < 0:
        raise InvalidArgument("duration must be non-negative")
    if sign not in (1, -1):
        raise InvalidArgument("sign must be +1 or -1")
    if duration == 0:
        return u0.copy()
    if use_hopf_lax and spec.x_independent and spec.d == 1:
        fz = FrozenHamiltonian(spec, xi)
        conv = fz.convexity_1d(max(grid_lipschitz(u0), 1.0))
        if conv in ("convex", "linear"):
            return hopf_lax(fz.as_function_of_p(), u0, duration, sign)
        if conv == "concave":
            h = fz.as_function_of_p()
            return hopf_lax(lambda p: -h(p), u0, duration, -sign)
    out, _ = solve_frozen(spec, xi, float(sign), u0, duration, y_scale=y_scale, scheme=scheme)
    return out


# --------------------------------------------------------------------------
# action functional


def conjugate_function(G: ScalarFunction, p_window: float = 50.0) -> Callable:
    """Vectorized ``G*`` with ``+inf`` outside the effective domain."""
    P = G.params
    if G.kind == "quadratic":
        c, off = P["c"], P.get("offset", 0.0)
        if c <= 0:
            raise InvalidArgument("conjugate needs a convex quadratic")
        return lambda v: np.asarray(v, dtype=float) ** 2 / (4 * c) - off
    if G.kind == "abs":
        c, off = P.get("c", 1.0), P.get("offset", 0.0)
        return lambda v: np.where(np.abs(np.asarray(v, dtype=float)) <= c * (1 + 1e-12), -off, np.inf)
    if G.kind == "constant":
        return lambda v: np.where(np.asarray(v, dtype=float) == 0, -P["c"], np.inf)

    def numeric(v):
        v = np.asarray(v, dtype=float)
        vals, _, boundary = conjugate_on_window(G, v.ravel(), p_window)
        return np.where(boundary, np.inf, vals).reshape(v.shape)

    return numeric


def _envelope_conjugate(nu: ScalarFunction) -> Callable:
    """Conjugate of the even function p -> nu(|p|), as a function of s >= 0."""
    return conjugate_function(nu)


def action_L(
    spec: HamiltonianSpec,
    x: float,
    y: float,
    tau: float,
    n_time: int,
    *,
    xi=None,
    dx: float | None = None,
    pad: float | None = None,
) -> float:
    """``inf int_0^tau H*(-gamma', gamma) ds`` over grid paths from x to y.

    Requires a 1-d frozen Hamiltonian ``c(z) G(p) + w(z)`` with ``G`` convex and
    ``c > 0``.  The dynamic programme runs on the nodes ``y + k dx``; ``x`` is
    snapped to the nearest node.
    """
    if tau <= 0 or n_time < 1:
        raise InvalidArgument("need tau > 0 and n_time >= 1")
    if spec.d != 1:
        raise InvalidArgument("action_L is one-dimensional")
    xi = np.ones(spec.m) if xi is None else np.asarray(xi, dtype=float)
    if pad is None:
        pad = 1.0 + abs(x - y)
    lo, hi = min(x, y) - pad, max(x, y) + pad
    if dx is None:
        dx = (hi - lo) / 400
    k_lo, k_hi = int(math.floor((lo - y) / dx)), int(math.ceil((hi - y) / dx))
    z = y + dx * np.arange(k_lo, k_hi + 1)
    fz = FrozenHamiltonian(spec, xi, (z,))
    if len(fz.groups) != 1:
        raise InvalidArgument("action_L needs exactly one gradient part")
    g, c = fz.groups[0]
    c = np.broadcast_to(np.asarray(c, dtype=float), z.shape)
    w = np.broadcast_to(np.asarray(fz.potential, dtype=float), z.shape)
    if np.any(c <= 0) or g.convexity not in ("convex", "linear"):
        raise InvalidArgument("action_L needs c(z) > 0 and a convex gradient part")
    if g.kind == "eikonal":
        Gs = conjugate_function(ScalarFunction("abs", {"c": 1.0}, "real_line"))
    elif g.kind == "linear":
        Gs = conjugate_function(ScalarFunction("abs", {"c": 0.0}, "real_line"))
    else:
        Gs = conjugate_function(g.func)
    dtau = tau / n_time
    # velocity of the step from z_i to z_j is (z_j - z_i)/dtau, Lagrangian H*(-v, z_i)
    V = (z[None, :] - z[:, None]) / dtau
    with np.errstate(invalid="ignore"):
        C = dtau * (c[:, None] * Gs(-V / c[:, None]) - w[:, None])
    L = np.full(z.shape, np.inf)
    j0 = -k_lo
    L[j0] = 0.0
    for _ in range(n_time):
        L = np.min(C + L[None, :], axis=1)
    i = int(np.argmin(np.abs(z - x)))
    val = float(L[i])
    if not math.isfinite(val):
        raise WindowTooSmall("no admissible grid path joins x and y")
    return val


# --------------------------------------------------------------------------
# finite speed of propagation


def domain_of_dependence_check(
    spec: HamiltonianSpec,
    u0: GridFunction,
    v0: GridFunction,
    R: float,
    s: float,
    t: float,
    *,
    xi=None,
    center: float = 0.0,
    scale: float = 1.0,
    slack: float | None = None,
) -> bool:
    """Check ``max_{B(R - c(t-s))} |u - v|(t) <= max_{B(R)} |u - v|(s) + slack``.

    ``u0`` and ``v0`` are the states at time ``s``; the speed ``c`` is the
    Lipschitz constant of ``scale * H`` on the observed gradient range.
    """
    if u0.d != 1:
        raise InvalidArgument("domain_of_dependence_check is one-dimensional")
    if t < s:
        raise InvalidArgument("need t >= s")
    xi = np.ones(spec.m) if xi is None else xi
    u1, ru = solve_frozen(spec, xi, scale, u0, t - s)
    v1, rv = solve_frozen(spec, xi, scale, v0, t - s)
    fz = _frozen_for(spec, xi, scale, u0, 1.0)
    speed = fz.alpha(max(ru.max_grad, rv.max_grad))
    x = u0.axis(0)
    inner = np.abs(x - center) <= R - speed * (t - s)
    outer = np.abs(x - center) <= R
    if slack is None:
        slack = 4 * u0.dx * max(1.0, speed)
    if not np.any(inner):
        return True
    lhs = float(np.max(np.abs(u1.values - v1.values)[..., inner]))
    rhs = float(np.max(np.abs(u0.values - v0.values)[..., outer]))
    return lhs <= rhs + slack
