"""Tabulated effective Hamiltonians and the Walsh expansion over sign patterns."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

from ..errors import InvalidArgument
from ..hamiltonians import ScalarFunction

__all__ = ["EffectiveTable", "WalshDecomposition", "walsh_decompose", "dc_split", "subsets", "chi"]

PROVENANCES = ("numeric", "simplecell", "onedexample", "appendixB", "fourpath", "walsh", "custom")


def dc_split(values: np.ndarray, dp: float) -> tuple[np.ndarray, np.ndarray]:
    """Split a broken line into ``h1 - h2`` with both parts discretely convex.

    Positive slope increments go to ``h1``, negative ones to ``h2``.  ``h2``
    starts at 0 with slope 0.
    """
    v = np.asarray(values, dtype=float)
    s = np.diff(v) / dp
    ds = np.diff(s)
    t = np.concatenate([[s[0]], s[0] + np.cumsum(np.maximum(ds, 0.0))])
    r = np.concatenate([[0.0], np.cumsum(np.maximum(-ds, 0.0))])
    h1 = v[0] + np.concatenate([[0.0], np.cumsum(t) * dp])
    h2 = np.concatenate([[0.0], np.cumsum(r) * dp])
    return h1, h2


def _classify(values: np.ndarray) -> str:
    d2 = np.diff(values, 2)
    tol = 1e-10 * max(1.0, float(np.max(np.abs(values))))
    if np.all(d2 >= -tol):
        return "convex"
    if np.all(d2 <= tol):
        return "concave"
    return "difference_of_convex"


@dataclass(frozen=True, eq=False)
class EffectiveTable:
    """``p -> H(p)`` on a uniform grid, interpolated piecewise-linearly.

    Outside the grid the table continues linearly with its end slopes.
    """

    p: np.ndarray
    values: np.ndarray
    provenance: str = "custom"
    convexity: str | None = None
    split: tuple | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        p = np.asarray(self.p, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if p.ndim != 1 or p.shape != v.shape or p.size < 3:
            raise InvalidArgument("p-grid and values must be 1-d of equal length >= 3")
        dp = np.diff(p)
        if np.any(dp <= 0) or np.max(np.abs(dp - dp[0])) > 1e-9 * max(1.0, abs(dp[0])):
            raise InvalidArgument("p-grid must be uniform and increasing")
        if self.provenance not in PROVENANCES:
            raise InvalidArgument(f"unknown provenance {self.provenance!r}")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "values", v)
        conv = self.convexity or _classify(v)
        object.__setattr__(self, "convexity", conv)
        if conv == "difference_of_convex" and self.split is None:
            object.__setattr__(self, "split", dc_split(v, self.dp))

    @property
    def dp(self) -> float:
        return float(self.p[1] - self.p[0])

    def __call__(self, q):
        q = np.asarray(q, dtype=float)
        p, v = self.p, self.values
        out = np.interp(q, p, v)
        lo_slope = (v[1] - v[0]) / self.dp
        hi_slope = (v[-1] - v[-2]) / self.dp
        out = out + lo_slope * np.minimum(q - p[0], 0.0) + hi_slope * np.maximum(q - p[-1], 0.0)
        return float(out) if out.ndim == 0 else out

    def as_function(self) -> ScalarFunction:
        return ScalarFunction("samples", {}, "real_line", 1.0, self.values, self.dp, float(self.p[0]))

    def scaled(self, c: float) -> "EffectiveTable":
        return EffectiveTable(self.p, c * self.values, self.provenance, meta=dict(self.meta))

    def to_csv(self, path: str | Path, header: dict | None = None) -> None:
        info = {"provenance": self.provenance, "convexity": self.convexity, **self.meta, **(header or {})}
        cols = ["p", "value"]
        data = [self.p, self.values]
        if self.split is not None:
            cols += ["h1", "h2"]
            data += list(self.split)
        with open(path, "w") as fh:
            fh.write("# " + json.dumps(info, sort_keys=True, default=float) + "\n")
            fh.write(",".join(cols) + "\n")
            for row in zip(*data):
                fh.write(",".join(repr(float(x)) for x in row) + "\n")

    @classmethod
    def from_csv(cls, path: str | Path) -> "EffectiveTable":
        with open(path) as fh:
            first = fh.readline()
        info = json.loads(first[2:]) if first.startswith("# ") else {}
        data = np.loadtxt(path, delimiter=",", skiprows=2, ndmin=2)
        prov = info.pop("provenance", "custom")
        info.pop("convexity", None)
        return cls(data[:, 0], data[:, 1], prov, meta=info)


def subsets(m: int) -> list[tuple[int, ...]]:
    """All subsets of {0..m-1}, ordered by size then lexicographically."""
    out: list[tuple[int, ...]] = []
    for k in range(m + 1):
        out.extend(itertools.combinations(range(m), k))
    return out


def chi(xi, subset) -> float:
    """The Walsh character ``xi^j = prod_{i in j} xi_i``."""
    return float(np.prod([xi[i] for i in subset])) if subset else 1.0


@dataclass(frozen=True, eq=False)
class WalshDecomposition:
    """Walsh coefficients ``f_j(p)`` of a cube ``xi -> H(p, xi)``."""

    m: int
    p: np.ndarray
    coefficients: dict
    odd: dict
    even_norm: float

    def reconstruct(self, xi, odd_only: bool = False) -> np.ndarray:
        out = np.zeros_like(self.p)
        for j, c in self.coefficients.items():
            if odd_only and len(j) % 2 == 0:
                continue
            out = out + c * chi(xi, j)
        return out

    def odd_subsets(self) -> list[tuple[int, ...]]:
        return [j for j in subsets(self.m) if len(j) % 2 == 1]


def walsh_decompose(cube: Mapping, p: np.ndarray | None = None) -> WalshDecomposition:
    """Coefficients ``f_j(p) = 2^-m sum_xi H(p, xi) xi^j`` for every subset ``j``.

    ``cube`` maps sign tuples to EffectiveTables (sharing one grid) or to
    value arrays on the grid ``p``.
    """
    keys = list(cube)
    if not keys:
        raise InvalidArgument("empty cube")
    m = len(keys[0])
    expected = set(itertools.product((1, -1), repeat=m))
    if {tuple(int(v) for v in k) for k in keys} != expected:
        raise InvalidArgument(f"cube must contain all 2^{m} sign patterns")
    vals = {}
    grid = p
    for k, tab in cube.items():
        key = tuple(int(v) for v in k)
        if isinstance(tab, EffectiveTable):
            if grid is None:
                grid = tab.p
            elif tab.p.shape != np.shape(grid) or np.max(np.abs(tab.p - grid)) > 1e-12:
                raise InvalidArgument("tables must share one p-grid")
            vals[key] = tab.values
        else:
            vals[key] = np.asarray(tab, dtype=float)
    if grid is None:
        raise InvalidArgument("a p-grid is required for raw arrays")
    grid = np.asarray(grid, dtype=float)
    for v in vals.values():
        if v.shape != grid.shape:
            raise InvalidArgument("value arrays must match the p-grid")
    coefs = {}
    for j in subsets(m):
        acc = np.zeros_like(grid)
        for xi, v in vals.items():
            acc = acc + v * chi(xi, j)
        coefs[j] = acc / 2**m
    odd = {j: EffectiveTable(grid, c, "walsh", meta={"subset": list(j)}) for j, c in coefs.items() if len(j) % 2 == 1}
    even = [np.max(np.abs(c)) for j, c in coefs.items() if len(j) % 2 == 0]
    return WalshDecomposition(m, grid, coefs, odd, float(max(even)))
