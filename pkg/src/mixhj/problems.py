"""Named model problems built from plain dictionaries.

Used by the ensemble runner and the command line.  A model block names the
Hamiltonian family and its ingredients; :func:`build_model` returns the
Hamiltonian, the noise law and a routine producing the cube of effective
Hamiltonians over the sign patterns.

Models
------
``onedexample``      ``|p| xi_0 + f(y) xi_1``
``fourpath``         the same Hamiltonian driven by the correlated pair ``(X, (a+b)/2 Y + (a-b)/2 Z)``
``convex_single``    ``(|p| + V(y)) xi_0``
``nonconvex_single`` ``(F(p) - V_s(y)) xi_0``
``nonconvex_pair``   ``F(p) xi_0 + V_s(y) xi_1``
``custom``           any serialized :class:`HamiltonianSpec`; effective values from cell problems
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import InvalidArgument
from .fields import StepField, gen_correlated_pair, gen_rademacher
from .hamiltonians import (
    GradientPart,
    HamiltonianSpec,
    ScalarFunction,
    Term,
    build_nonconvex_F,
    cosine,
    sawtooth,
)
from .hjsolver import GridFunction

__all__ = ["Model", "build_model", "build_u0", "build_grid", "function_from_config", "MODELS", "effective_cube"]

MODELS = ("onedexample", "fourpath", "convex_single", "nonconvex_single", "nonconvex_pair", "custom")


def function_from_config(cfg) -> ScalarFunction:
    """A torus function from ``{"kind": "sawtooth", "s": ..}``, ``cosine``, ``cospow`` or a serialized dict."""
    if isinstance(cfg, ScalarFunction):
        return cfg
    if cfg is None:
        return cosine(0.5, 0.5)
    kind = cfg.get("kind")
    if kind == "sawtooth":
        return sawtooth(cfg.get("s", 0.5))
    if kind == "cosine":
        return cosine(cfg.get("a", 0.5), cfg.get("b", 0.5))
    if kind == "cospow":
        # ((1 + cos 2 pi y) / 2)^k sampled finely; skewed for k > 1
        n = int(cfg.get("n", 1024))
        y = np.arange(n) / n
        vals = ((1 + np.cos(2 * np.pi * y)) / 2) ** float(cfg.get("k", 2))
        return ScalarFunction("samples", {}, "torus_1d", 1.0, vals, 1.0 / n, 0.0)
    return ScalarFunction.from_dict(cfg)


@dataclass
class Model:
    name: str
    spec: HamiltonianSpec
    law: str
    params: dict = field(default_factory=dict)
    cube: Callable | None = None  # p-grid -> {sign tuple: values}

    @property
    def m(self) -> int:
        return self.spec.m

    def field(self, n_steps: int, seed) -> StepField:
        if self.law == "correlated_pair":
            return gen_correlated_pair(self.params["a"], self.params["b"], n_steps, seed)
        return gen_rademacher(self.m, n_steps, seed)

    def signs(self, n_steps: int, seed) -> StepField:
        """The Rademacher signs indexing the effective cube (same seed as :meth:`field`)."""
        if self.law == "correlated_pair":
            return gen_rademacher(3, n_steps, seed)
        return gen_rademacher(self.m, n_steps, seed)


def _simplecell_cube(f: ScalarFunction) -> Callable:
    from .effective.formulas import simplecell

    neg = f.scaled(-1.0)

    def cube(p):
        # xi_0 |p| + xi_1 f: xi_0 * simplecell(xi_0 xi_1 f)
        out = {}
        for x0, x1 in itertools.product((1, -1), repeat=2):
            g = f if x0 * x1 == 1 else neg
            out[(x0, x1)] = x0 * np.asarray(simplecell(g, p), dtype=float)
        return out

    return cube


def effective_cube(model: Model, p) -> dict:
    p = np.asarray(p, dtype=float)
    if model.cube is None:
        raise InvalidArgument(f"model {model.name!r} has no effective cube")
    return model.cube(p)


def build_model(cfg: dict) -> Model:
    name = cfg.get("model", "onedexample")
    if name not in MODELS:
        raise InvalidArgument(f"unknown model {name!r}; choose from {MODELS}")
    if name in ("onedexample", "fourpath"):
        f = function_from_config(cfg.get("f"))
        spec = HamiltonianSpec(1, 2, (Term(GradientPart("eikonal"), None, 0), Term(None, f, 1)))
        if name == "onedexample":
            return Model(name, spec, "rademacher", {}, _simplecell_cube(f))
        a, b = float(cfg.get("a", math.sqrt(1.5))), float(cfg.get("b", math.sqrt(0.5)))
        return Model(name, spec, "correlated_pair", {"a": a, "b": b}, _fourpath_cube(f, a, b))
    if name == "convex_single":
        V = function_from_config(cfg.get("f"))
        spec = HamiltonianSpec(1, 1, (Term(GradientPart("eikonal"), None, 0), Term(None, V, 0)))
        from .effective.formulas import simplecell

        def cube(p):
            h = np.asarray(simplecell(V, p), dtype=float)
            return {(1,): h, (-1,): -h}

        return Model(name, spec, "rademacher", {}, cube)
    if name in ("nonconvex_single", "nonconvex_pair"):
        th = cfg.get("theta", [1.5, 1.0, 0.5])
        F = build_nonconvex_F(*th, k=cfg.get("k", 1.0))
        s = float(cfg.get("s", 0.3))
        Vs = sawtooth(s)
        from .effective.nonconvex import effective_Hs

        hs = lambda p: np.array([effective_Hs(F, s, q) for q in np.atleast_1d(p)])
        h1s = lambda p: np.array([effective_Hs(F, 1 - s, q) for q in np.atleast_1d(p)])
        if name == "nonconvex_single":
            spec = HamiltonianSpec(1, 1, (Term(GradientPart("function", F), None, 0), Term(None, Vs.scaled(-1.0), 0)))
            return Model(name, spec, "rademacher", {"s": s, "F": F}, lambda p: {(1,): hs(p), (-1,): -h1s(p)})
        spec = HamiltonianSpec(1, 2, (Term(GradientPart("function", F), None, 0), Term(None, Vs, 1)))

        def cube(p):
            a, b = hs(p), h1s(p)
            return {(1, 1): b + 1, (1, -1): a, (-1, 1): -b, (-1, -1): -a - 1}

        return Model(name, spec, "rademacher", {"s": s, "F": F}, cube)
    spec = HamiltonianSpec.from_dict(cfg["hamiltonian"])
    n_cell = int(cfg.get("cell_n", 128))

    def numeric_cube(p):
        from .effective.cell import cell_numeric

        if spec.d != 1:
            raise InvalidArgument("numeric cubes are one-dimensional")
        return {
            tuple(int(v) for v in xi): np.asarray(cell_numeric(spec, xi, p, n=n_cell).lam, dtype=float)
            for xi in spec.patterns()
        }

    return Model(name, spec, "rademacher", {}, numeric_cube)


def _fourpath_cube(f: ScalarFunction, a: float, b: float) -> Callable:
    from .effective.formulas import simplecell

    def cube(p):
        out = {}
        for X, Y, Z in itertools.product((1, -1), repeat=3):
            c = (a + b) / 2 * Y + (a - b) / 2 * Z
            g = f.scaled(X * c)
            out[(X, Y, Z)] = X * np.asarray(simplecell(g, p), dtype=float)
        return out

    return cube


def build_u0(cfg: dict | None) -> Callable:
    """Initial datum ``x -> u0(x)`` from ``{"kind": abs|min_abs|linear|zero|cos, ...}``."""
    cfg = cfg or {"kind": "abs"}
    kind = cfg.get("kind", "abs")
    if kind == "abs":
        return lambda x: np.abs(x)
    if kind == "min_abs":
        cap = float(cfg.get("cap", 1.0))
        return lambda x: np.minimum(np.abs(x), cap)
    if kind == "linear":
        p = float(cfg.get("p", 1.0))
        return lambda x: p * np.asarray(x, dtype=float)
    if kind == "zero":
        return lambda x: 0.0 * np.asarray(x, dtype=float)
    if kind == "cos":
        amp = float(cfg.get("amp", 0.25))
        return lambda x: amp * np.cos(2 * np.pi * np.asarray(x, dtype=float))
    raise InvalidArgument(f"unknown initial datum {kind!r}")


def u0_lipschitz(cfg: dict | None) -> float:
    cfg = cfg or {"kind": "abs"}
    kind = cfg.get("kind", "abs")
    if kind in ("abs", "min_abs"):
        return 1.0
    if kind == "linear":
        return abs(float(cfg.get("p", 1.0)))
    if kind == "cos":
        return 2 * np.pi * abs(float(cfg.get("amp", 0.25)))
    return 0.0


def build_grid(u0_cfg: dict | None, window, dx: float, *, periodic_cell: float | None = None) -> GridFunction:
    """Grid for ``u0`` on ``window`` (Lipschitz extension outside).

    With ``periodic_cell = P`` and a linear datum the grid is one period
    ``[0, P)`` with the affine wrap ``u(x + P) = u(x) + p P``.
    """
    u0 = build_u0(u0_cfg)
    if periodic_cell is not None:
        if (u0_cfg or {}).get("kind") not in ("linear", "zero"):
            raise InvalidArgument("the periodic cell reduction needs a linear datum")
        n = int(round(periodic_cell / dx))
        x = dx * np.arange(n)
        p = float((u0_cfg or {}).get("p", 0.0)) if (u0_cfg or {}).get("kind") == "linear" else 0.0
        return GridFunction(u0(x), dx, (0.0,), "periodic", 1, tilt=p)
    a, b = float(window[0]), float(window[1])
    if not b > a:
        raise InvalidArgument("window must be increasing")
    n = int(round((b - a) / dx)) + 1
    x = a + dx * np.arange(n)
    return GridFunction(u0(x), dx, (a,), "lipschitz_extend", 1, lip=u0_lipschitz(u0_cfg))
