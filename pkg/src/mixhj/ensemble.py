"""Monte Carlo engine for the scaled and the limiting problems.

* :func:`sample_bm` draws piecewise-linear Brownian paths.
* :func:`solve_effective_spde` plays several Brownian drivers through the
  odd Walsh coefficients with Lie (or Strang) splitting.
* :func:`solve_intermediate` solves the spatially homogeneous equation driven
  by the same step field as the oscillating problem.
* :func:`run_ensemble` evaluates many seeded realizations, in parallel if
  asked, and gathers probe values by sample index.
"""

from __future__ import annotations

import hashlib
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from scipy import stats

from .effective.tables import EffectiveTable, WalshDecomposition, chi, walsh_decompose
from .errors import InvalidArgument, ResourceLimit
from .fields import PiecewisePath, StepField, make_rng, rescale, sample_seed
from .hamiltonians import GradientPart, HamiltonianSpec, Term
from .hjsolver import GridFunction, S_pm, grid_lipschitz
from .pathwise import Snapshots, snapshot_times, solve_scaled
from .problems import Model, build_grid, build_model, u0_lipschitz

__all__ = [
    "sample_bm",
    "solve_effective_spde",
    "solve_intermediate",
    "homog_gap",
    "EnsembleResult",
    "run_ensemble",
    "run_sample",
    "ks_statistic",
    "ks_normal",
    "rate_fit",
    "evaluate",
    "config_hash",
    "decomposition_for",
    "DEFAULT_MAX_WORK",
]

DEFAULT_MAX_WORK = 5e11
_TOL = 1e-12


def sample_bm(dims: int, T: float, dt: float, seed) -> list[PiecewisePath]:
    """``dims`` independent Brownian paths on ``[0, T]`` with Gaussian steps of variance ``dt``.

    The last step is shortened when ``T`` is not a multiple of ``dt``.
    """
    if dims < 1:
        raise InvalidArgument("dims must be positive")
    if dt <= 0 or T < dt * (1 - _TOL):
        raise InvalidArgument("need dt > 0 and T >= dt")
    n = int(math.ceil(T / dt - 1e-9))
    t = np.minimum(dt * np.arange(n + 1), T)
    t[-1] = T
    h = np.diff(t)
    rng = make_rng(seed)
    z = rng.standard_normal((dims, n)) * np.sqrt(h)[None, :]
    vals = np.concatenate([np.zeros((dims, 1)), np.cumsum(z, axis=1)], axis=1)
    return [PiecewisePath(t, vals[i]) for i in range(dims)]


# --------------------------------------------------------------------------
# spatially homogeneous solves from tables


def _table_spec(values: np.ndarray, p: np.ndarray) -> HamiltonianSpec:
    tab = EffectiveTable(p, values, "walsh")
    return HamiltonianSpec(1, 1, (Term(GradientPart("function", tab.as_function()), None, 0),))


def _check_window(u: GridFunction, p: np.ndarray) -> None:
    L = grid_lipschitz(u)
    if L > max(abs(p[0]), abs(p[-1])) * (1 + 1e-9):
        raise InvalidArgument(f"table covers |p| <= {max(abs(p[0]), abs(p[-1]))} but the data has slope {L}")


def _odd_tables(decomp: WalshDecomposition, paths) -> list[tuple[tuple, EffectiveTable, PiecewisePath]]:
    subsets = decomp.odd_subsets()
    if isinstance(paths, Mapping):
        missing = [j for j in subsets if tuple(j) not in paths]
        if missing:
            raise InvalidArgument(f"no path for subsets {missing}")
        seq = [paths[tuple(j)] for j in subsets]
    else:
        seq = list(paths)
        if len(seq) != len(subsets):
            raise InvalidArgument(f"need one path per odd subset ({len(subsets)}), got {len(seq)}")
    return [(j, decomp.odd[j], z) for j, z in zip(subsets, seq)]


def solve_effective_spde(
    decomp: WalshDecomposition,
    paths,
    u0: GridFunction,
    dt_split: float,
    *,
    T: float | None = None,
    n_snapshots: int = 1,
    times: Sequence[float] | None = None,
    strang: bool = False,
) -> Snapshots:
    """``du + sum_j H^j(Du) dB^j = 0`` by splitting over windows of length ``dt_split``.

    Within a window each odd coefficient ``H^j`` is run for the increment of
    its path, in the fixed subset order.  Convex or concave coefficients use
    Hopf-Lax, the others the Godunov scheme on the tabulated function.
    """
    if dt_split <= 0:
        raise InvalidArgument("dt_split must be positive")
    items = _odd_tables(decomp, paths)
    T = min(z.T for _, _, z in items) if T is None else T
    if any(z.T < T * (1 - _TOL) for _, _, z in items):
        raise InvalidArgument("paths end before T")
    _check_window(u0, decomp.p)
    specs = [(_table_spec(tab.values, tab.p), z) for _, tab, z in items]
    ts = snapshot_times(T, n_snapshots) if times is None else np.unique(np.concatenate([[0.0], np.asarray(times, float)]))
    n_win = int(math.ceil(T / dt_split - 1e-9))
    knots = np.unique(np.concatenate([np.minimum(dt_split * np.arange(n_win + 1), T), ts]))
    snaps = set(float(t) for t in ts[1:])
    u = u0
    out = [(0.0, u0)]

    def run(u, spec, dz):
        if dz == 0:
            return u
        return S_pm(spec, [1.0], 1 if dz > 0 else -1, abs(dz), u)

    for a, b in zip(knots[:-1], knots[1:]):
        incs = [float(z(b) - z(a)) for _, z in specs]
        if strang:
            for (spec, _), dz in zip(specs, incs):
                u = run(u, spec, dz / 2)
            for (spec, _), dz in zip(reversed(specs), reversed(incs)):
                u = run(u, spec, dz / 2)
        else:
            for (spec, _), dz in zip(specs, incs):
                u = run(u, spec, dz)
        if float(b) in snaps:
            out.append((float(b), u))
    return out


def solve_intermediate(
    decomp: WalshDecomposition,
    field: StepField,
    epsilon: float,
    gamma: float,
    u0: GridFunction,
    T: float,
    *,
    n_snapshots: int = 1,
    times: Sequence[float] | None = None,
    odd_only: bool = True,
) -> Snapshots:
    """``u_t + eps^-gamma sum_j H^j(Du) X_k^j = 0``, frozen on each interval of length ``eps^(2 gamma)``.

    ``field`` holds the signs indexing the cube (``decomp.m`` columns).  With
    ``odd_only`` the even coefficients are dropped.
    """
    if field.m != decomp.m:
        raise InvalidArgument(f"field has {field.m} columns, the decomposition expects {decomp.m}")
    if not (0 < epsilon <= 1) or gamma <= 0:
        raise InvalidArgument("need epsilon in (0, 1] and gamma > 0")
    h = epsilon ** (2 * gamma)
    need = math.ceil(T / h * (1 - _TOL))
    if field.n_steps < need:
        raise InvalidArgument(f"field has {field.n_steps} steps, T = {T} needs {need}")
    _check_window(u0, decomp.p)
    scale = epsilon ** (-gamma)
    cache: dict[tuple, HamiltonianSpec | None] = {}

    def spec_for(xi) -> HamiltonianSpec | None:
        key = tuple(float(v) for v in xi)
        if key not in cache:
            vals = np.zeros_like(decomp.p)
            for j, c in decomp.coefficients.items():
                if odd_only and len(j) % 2 == 0:
                    continue
                vals = vals + c * chi(xi, j)
            cache[key] = None if np.all(vals == 0) else _table_spec(vals, decomp.p)
        return cache[key]

    ts = snapshot_times(T, n_snapshots) if times is None else np.unique(np.concatenate([[0.0], np.asarray(times, float)]))
    out = [(0.0, u0)]
    u = u0
    t_now = 0.0
    k = 0
    pending = list(ts[1:])
    while t_now < T - _TOL * max(1.0, T):
        end = min((k + 1) * h, T)
        spec = spec_for(field.values[k])
        while pending and pending[0] <= end + _TOL:
            tau = pending.pop(0)
            if spec is not None and tau > t_now:
                u = S_pm(spec, [1.0], 1, scale * (tau - t_now), u)
            t_now = max(t_now, tau)
            out.append((float(tau), u))
        if end > t_now:
            if spec is not None:
                u = S_pm(spec, [1.0], 1, scale * (end - t_now), u)
            t_now = end
        k += 1
    for tau in pending:
        out.append((float(tau), u))
    return out


def homog_gap(
    epsilon: float,
    gamma: float,
    spec: HamiltonianSpec,
    decomp: WalshDecomposition,
    field: StepField,
    u0: GridFunction,
    T: float,
    *,
    signs: StepField | None = None,
    n_snapshots: int = 4,
    interior: float | None = None,
) -> float:
    """``sup |u_eps - ubar_eps|`` over the snapshots (and ``|x| <= interior`` if given).

    ``field`` drives the oscillating problem; ``signs`` (default: ``field``)
    indexes the effective cube.
    """
    fine = solve_scaled(epsilon, gamma, spec, field, u0, T, n_snapshots=n_snapshots)
    eff = solve_intermediate(decomp, signs if signs is not None else field, epsilon, gamma, u0, T, n_snapshots=n_snapshots)
    mask = slice(None)
    if interior is not None:
        mask = np.abs(u0.axis(0)) <= interior
    return max(float(np.max(np.abs(a.values - b.values)[..., mask])) for (_, a), (_, b) in zip(fine, eff))


# --------------------------------------------------------------------------
# statistics


def ks_statistic(a, b) -> float:
    """Two-sample Kolmogorov-Smirnov distance."""
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.size == 0 or b.size == 0:
        raise InvalidArgument("both samples must be nonempty")
    return float(stats.ks_2samp(a, b).statistic)


def ks_normal(a, scale: float = 1.0) -> float:
    """KS distance of a sample to the centred normal law with standard deviation ``scale``."""
    a = np.asarray(a, dtype=float).ravel()
    if a.size == 0:
        raise InvalidArgument("sample must be nonempty")
    return float(stats.kstest(a / scale, "norm").statistic)


def rate_fit(epsilons, errors) -> tuple[float, float]:
    """Least-squares slope of ``log error`` against ``log eps`` and its ``r^2``."""
    e = np.asarray(epsilons, dtype=float)
    r = np.asarray(errors, dtype=float)
    if e.size < 3 or e.shape != r.shape:
        raise InvalidArgument("need at least three (epsilon, error) pairs")
    if np.any(e <= 0) or np.any(r <= 0):
        raise InvalidArgument("epsilons and errors must be positive")
    x, y = np.log(e), np.log(r)
    res = stats.linregress(x, y)
    return float(res.slope), float(res.rvalue**2)


# --------------------------------------------------------------------------
# ensembles


def config_hash(cfg: dict) -> str:
    return hashlib.sha256(json.dumps(cfg, sort_keys=True).encode()).hexdigest()[:16]


def evaluate(gf: GridFunction, x) -> np.ndarray:
    """Linear interpolation of a 1-d grid function, using the periodic wrap when present."""
    x = np.asarray(x, dtype=float)
    xs = gf.axis(0)
    if gf.boundary == "periodic":
        L = gf.length(0)
        tilt = float(np.asarray(gf.tilt))
        k = np.floor((x - gf.origin[0]) / L)
        xr = x - k * L
        ext_x = np.append(xs, xs[0] + L)
        ext_v = np.append(gf.values, gf.values[0] + tilt * L)
        return np.interp(xr, ext_x, ext_v) + k * tilt * L
    if np.any(x < xs[0] - 1e-12) or np.any(x > xs[-1] + 1e-12):
        raise InvalidArgument("probe outside the computational window")
    return np.interp(x, xs, gf.values)


@lru_cache(maxsize=8)
def _decomposition_cached(model_json: str) -> WalshDecomposition:
    cfg = json.loads(model_json)
    model = build_model(cfg)
    P = float(cfg.get("p_window", 3.0))
    n_p = int(cfg.get("n_p", 601))
    p = np.linspace(-P, P, n_p)
    return walsh_decompose(model.cube(p), p)


def decomposition_for(cfg: dict) -> WalshDecomposition:
    """Walsh decomposition of the model's effective cube on ``[-p_window, p_window]``."""
    return _decomposition_cached(json.dumps(cfg, sort_keys=True))


def _grid_for(cfg: dict, fine: bool) -> GridFunction:
    eps = float(cfg.get("epsilon", 1.0))
    if fine:
        dx = eps / int(cfg.get("cell_nodes", 64))
    else:
        dx = float(cfg.get("dx", 1.0 / 256))
    if cfg.get("periodic_cell"):
        return build_grid(cfg.get("u0"), None, dx, periodic_cell=eps if fine else 1.0)
    return build_grid(cfg.get("u0"), cfg.get("window", [-2.0, 2.0]), dx)


def _n_steps(cfg: dict) -> int:
    h = float(cfg["epsilon"]) ** (2 * float(cfg["gamma"]))
    return int(math.ceil(float(cfg.get("T", 1.0)) / h * (1 - _TOL)))


def run_sample(cfg: dict, seed, probes: Sequence[tuple[float, float]]) -> tuple[np.ndarray, np.ndarray]:
    """Probe values and driving-path values for one realization.

    ``cfg['solver']`` selects ``scaled`` (the oscillating equation),
    ``intermediate`` (effective cube with the same step field) or
    ``effective`` (Brownian drivers of the odd coefficients).
    """
    solver = cfg.get("solver", "scaled")
    T = float(cfg.get("T", 1.0))
    times = sorted({float(t) for _, t in probes if t > 0})
    model = build_model(cfg)
    if solver == "effective":
        decomp = decomposition_for(cfg)
        dt = float(cfg.get("dt_split", 0.01))
        paths = sample_bm(len(decomp.odd_subsets()), T, float(cfg.get("dt_bm", dt)), seed)
        snaps = solve_effective_spde(decomp, paths, _grid_for(cfg, False), dt, T=T, times=times)
        drivers = paths
    else:
        eps, gamma = float(cfg["epsilon"]), float(cfg["gamma"])
        n = _n_steps(cfg)
        fld = model.field(n, seed)
        if solver == "scaled":
            snaps = solve_scaled(eps, gamma, model.spec, fld, _grid_for(cfg, True), T, times=times, cell_nodes=int(cfg.get("cell_nodes", 64)))
        elif solver == "intermediate":
            decomp = decomposition_for(cfg)
            snaps = solve_intermediate(decomp, model.signs(n, seed), eps, gamma, _grid_for(cfg, False), T, times=times)
        else:
            raise InvalidArgument(f"unknown solver {solver!r}")
        drivers = [rescale(fld, i, eps, gamma) for i in range(fld.m)]
    by_time = {float(t): g for t, g in snaps}
    vals = np.array([float(evaluate(by_time[float(t)], x)) for x, t in probes])
    zetas = np.array([[float(z(min(t, z.T))) for z in drivers] for _, t in probes])
    return vals, zetas


def _work_estimate(cfg: dict, N: int) -> float:
    solver = cfg.get("solver", "scaled")
    T = float(cfg.get("T", 1.0))
    g = _grid_for(cfg, solver == "scaled")
    nodes = g.n
    speed = max(1.0, 2 * u0_lipschitz(cfg.get("u0")) + 1.0)
    if solver == "effective":
        steps = T / float(cfg.get("dt_split", 0.01)) * 4 + speed * 3 * T / g.dx
    else:
        steps = speed * float(cfg["epsilon"]) ** (-float(cfg["gamma"])) * T / g.dx
    return float(N) * nodes * steps


@dataclass
class EnsembleResult:
    """Probe values ``values[i, k]`` of sample ``i`` at probe ``k``; ``zetas[i, k, c]`` driver values."""

    config: dict
    config_hash: str
    master_seed: int
    probes: list
    values: np.ndarray
    zetas: np.ndarray
    seeds: list
    timing: dict = field(default_factory=dict)

    @property
    def N(self) -> int:
        return int(self.values.shape[0])

    def probe(self, x: float, t: float) -> np.ndarray:
        for k, (px, pt) in enumerate(self.probes):
            if abs(px - x) < 1e-12 and abs(pt - t) < 1e-12:
                return self.values[:, k]
        raise InvalidArgument(f"no probe at ({x}, {t})")

    def to_csv(self, path: str | Path) -> None:
        nz = self.zetas.shape[2] if self.zetas.ndim == 3 else 0
        with open(path, "w") as fh:
            fh.write(",".join(["sample", "x", "t", "value"] + [f"zeta_{c}" for c in range(nz)]) + "\n")
            for i in range(self.N):
                for k, (x, t) in enumerate(self.probes):
                    row = [str(i), repr(float(x)), repr(float(t)), repr(float(self.values[i, k]))]
                    row += [repr(float(v)) for v in self.zetas[i, k]]
                    fh.write(",".join(row) + "\n")

    def summary(self, include_timing: bool = False) -> dict:
        out = {
            "config": self.config,
            "config_hash": self.config_hash,
            "master_seed": self.master_seed,
            "N": self.N,
            "probes": [list(p) for p in self.probes],
            "mean": self.values.mean(axis=0).tolist(),
            "std": self.values.std(axis=0).tolist(),
        }
        if include_timing:
            out["timing"] = self.timing
        return out

    def to_json(self, include_timing: bool = False) -> str:
        return json.dumps(self.summary(include_timing), sort_keys=True, indent=2)


def _job(args):
    cfg, master_seed, index, probes = args
    return index, run_sample(cfg, sample_seed(master_seed, index), probes)


def run_ensemble(
    cfg: dict,
    N: int,
    master_seed: int,
    probes: Sequence[tuple[float, float]],
    *,
    jobs: int = 1,
    order: Sequence[int] | None = None,
    max_work: float | None = None,
) -> EnsembleResult:
    """``N`` seeded realizations; sample ``i`` uses the entropy ``(master_seed, i)``.

    ``order`` permutes the evaluation order (results are gathered by index).
    The work estimate ``N x nodes x time steps`` must stay below ``max_work``.
    """
    if N < 1:
        raise InvalidArgument("N must be at least 1")
    probes = [(float(x), float(t)) for x, t in probes]
    if not probes:
        raise InvalidArgument("need at least one probe")
    T = float(cfg.get("T", 1.0))
    if any(t < 0 or t > T * (1 + _TOL) for _, t in probes):
        raise InvalidArgument("probe times must lie in [0, T]")
    limit = DEFAULT_MAX_WORK if max_work is None else max_work
    est = _work_estimate(cfg, N)
    if est > limit:
        raise ResourceLimit(f"estimated work {est:.3g} exceeds the budget {limit:.3g}; reduce N or the grid")
    idx = list(range(N)) if order is None else [int(i) for i in order]
    if sorted(idx) != list(range(N)):
        raise InvalidArgument("order must be a permutation of range(N)")
    start = time.perf_counter()
    tasks = [(cfg, master_seed, i, probes) for i in idx]
    results: dict[int, tuple] = {}
    if jobs > 1 and N > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            for i, res in ex.map(_job, tasks, chunksize=max(1, N // (4 * jobs))):
                results[i] = res
    else:
        for task in tasks:
            i, res = _job(task)
            results[i] = res
    values = np.array([results[i][0] for i in range(N)])
    zetas = np.array([results[i][1] for i in range(N)])
    elapsed = time.perf_counter() - start
    return EnsembleResult(
        dict(cfg), config_hash(cfg), int(master_seed), probes, values, zetas,
        [sample_seed(master_seed, i) for i in range(N)], {"seconds": elapsed, "jobs": jobs},
    )
