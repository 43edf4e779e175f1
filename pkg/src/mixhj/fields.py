"""Discrete mixing fields and their diffusively rescaled paths.

A :class:`StepField` stores noise values ``X_k^i`` that are constant on the unit
intervals ``[k, k+1)``.  :func:`rescale` turns one component into the
piecewise-linear path ``zeta(t) = eps^gamma * sum_{j<k} X_j`` sampled at
``t_k = k * eps^(2 gamma)``.

Random numbers come from numpy's Philox counter-based bit generator.  Seeds are
expanded with :class:`numpy.random.SeedSequence`, and per-sample streams use the
entropy pair ``(master_seed, sample_index)`` so results do not depend on the
order in which samples are evaluated.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import InvalidArgument

__all__ = [
    "StepField",
    "PiecewisePath",
    "Segment",
    "make_rng",
    "sample_seed",
    "gen_rademacher",
    "gen_correlated_pair",
    "custom_field",
    "product_field",
    "rescale",
    "monotone_segments",
]


def make_rng(seed: int | Sequence[int]) -> np.random.Generator:
    """Philox generator seeded through a SeedSequence."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def sample_seed(master_seed: int, index: int) -> list[int]:
    """Entropy for sample ``index`` of an ensemble; hashed by SeedSequence."""
    if master_seed < 0 or index < 0:
        raise InvalidArgument("seeds and sample indices must be non-negative")
    return [int(master_seed), int(index)]


@dataclass(frozen=True)
class StepField:
    """Noise values ``values[k, i] = X_k^i`` on the unit intervals ``[k, k+1)``."""

    values: np.ndarray
    law: str = "custom"
    params: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        vals = np.array(self.values, dtype=float)
        if vals.ndim == 1:
            vals = vals[:, None]
        if vals.ndim != 2 or vals.shape[0] < 1 or vals.shape[1] < 1:
            raise InvalidArgument("field values must be an n_steps x m matrix with n_steps, m >= 1")
        if not np.all(np.isfinite(vals)):
            raise InvalidArgument("field values must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        if self.law == "rademacher" and not np.all(np.abs(vals) == 1.0):
            raise InvalidArgument("rademacher field entries must be +-1")
        if self.law == "correlated_pair":
            a, b = self.params["a"], self.params["b"]
            allowed = np.array([-a, -b, b, a])
            comp2 = vals[:, 1]
            if not np.all(np.min(np.abs(comp2[:, None] - allowed[None, :]), axis=1) == 0.0):
                raise InvalidArgument("correlated_pair component 2 must take values in {+-a, +-b}")

    @property
    def m(self) -> int:
        return self.values.shape[1]

    @property
    def n_steps(self) -> int:
        return self.values.shape[0]

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["step"] + [f"xi_{i}" for i in range(self.m)])
            for k, row in enumerate(self.values):
                w.writerow([k] + [repr(float(v)) for v in row])

    @classmethod
    def from_csv(cls, path: str | Path, law: str = "custom", params: dict | None = None) -> "StepField":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(data[:, 1:], law=law, params=dict(params or {}))


def gen_rademacher(m: int, n_steps: int, seed: int | Sequence[int]) -> StepField:
    """i.i.d. uniform signs, ``n_steps`` rows and ``m`` columns."""
    if m < 1 or n_steps < 1:
        raise InvalidArgument("m and n_steps must be positive")
    rng = make_rng(seed)
    vals = 2.0 * rng.integers(0, 2, size=(n_steps, m)) - 1.0
    return StepField(vals, law="rademacher")


def gen_correlated_pair(a: float, b: float, n_steps: int, seed: int | Sequence[int]) -> StepField:
    """Pair ``(X_k, (a+b)/2 Y_k + (a-b)/2 Z_k)`` with X, Y, Z independent signs."""
    if not (0.0 < b <= a) or abs(a * a + b * b - 2.0) > 1e-12:
        raise InvalidArgument("need 0 < b <= a and a^2 + b^2 = 2")
    if n_steps < 1:
        raise InvalidArgument("n_steps must be positive")
    signs = gen_rademacher(3, n_steps, seed).values
    # (a+b)/2 Y + (a-b)/2 Z equals a Y when Y = Z and b Y otherwise; select exactly
    comp2 = np.where(signs[:, 1] == signs[:, 2], a, b) * signs[:, 1]
    vals = np.column_stack([signs[:, 0], comp2])
    return StepField(vals, law="correlated_pair", params={"a": float(a), "b": float(b)})


def custom_field(values: np.ndarray) -> StepField:
    return StepField(np.asarray(values, dtype=float), law="custom")


def product_field(fld: StepField, index_set: Sequence[int]) -> StepField:
    """Entrywise product of the selected components (0-based indices)."""
    idx = list(index_set)
    if not idx:
        raise InvalidArgument("index set must be nonempty")
    if len(set(idx)) != len(idx) or min(idx) < 0 or max(idx) >= fld.m:
        raise InvalidArgument(f"indices must be distinct and in 0..{fld.m - 1}")
    prod = np.prod(fld.values[:, idx], axis=1)
    law = "rademacher" if fld.law == "rademacher" else "custom"
    return StepField(prod[:, None], law=law)


@dataclass(frozen=True)
class PiecewisePath:
    """Continuous piecewise-linear path through ``(breakpoints[k], values[k])``."""

    breakpoints: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        t = np.array(self.breakpoints, dtype=float)
        v = np.array(self.values, dtype=float)
        if t.ndim != 1 or t.shape != v.shape or t.size < 2:
            raise InvalidArgument("breakpoints and values must be 1-d arrays of equal length >= 2")
        if t[0] != 0.0 or np.any(np.diff(t) <= 0):
            raise InvalidArgument("breakpoints must start at 0 and increase strictly")
        if v[0] != 0.0:
            raise InvalidArgument("path must start at 0")
        t.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "breakpoints", t)
        object.__setattr__(self, "values", v)

    @property
    def T(self) -> float:
        return float(self.breakpoints[-1])

    def __call__(self, t):
        t_arr = np.asarray(t, dtype=float)
        if np.any(t_arr < 0) or np.any(t_arr > self.T * (1 + 1e-14)):
            raise InvalidArgument("time outside the path's range")
        out = np.interp(t_arr, self.breakpoints, self.values)
        return float(out) if out.ndim == 0 else out

    def restrict(self, t0: float, t1: float) -> "PiecewisePath":
        """Path ``s -> zeta(t0 + s) - zeta(t0)`` on ``[0, t1 - t0]``."""
        inner = self.breakpoints[(self.breakpoints > t0) & (self.breakpoints < t1)]
        t = np.concatenate([[t0], inner, [t1]])
        v = self(t)
        return PiecewisePath(t - t0, v - v[0])

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "value"])
            for t, v in zip(self.breakpoints, self.values):
                w.writerow([repr(float(t)), repr(float(v))])

    @classmethod
    def from_csv(cls, path: str | Path) -> "PiecewisePath":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(data[:, 0], data[:, 1])


def rescale(fld: StepField, component: int, epsilon: float, gamma: float) -> PiecewisePath:
    """Donsker rescaling of one component: steps of length eps^(2 gamma), increments eps^gamma X_k."""
    if not (0.0 < epsilon <= 1.0) or gamma <= 0.0:
        raise InvalidArgument("need epsilon in (0, 1] and gamma > 0")
    if not 0 <= component < fld.m:
        raise InvalidArgument("component index out of range")
    h = epsilon ** (2.0 * gamma)
    t = h * np.arange(fld.n_steps + 1, dtype=float)
    v = np.concatenate([[0.0], epsilon**gamma * np.cumsum(fld.values[:, component])])
    return PiecewisePath(t, v)


@dataclass(frozen=True)
class Segment:
    t_start: float
    t_end: float
    direction: int
    rise: float


def monotone_segments(path: PiecewisePath) -> list[Segment]:
    """Maximal monotone runs of a path; flat pieces join the preceding run."""
    t, v = path.breakpoints, path.values
    slopes = np.sign(np.diff(v))
    segs: list[list] = []
    for k, sgn in enumerate(slopes):
        if segs and (sgn == 0 or sgn == segs[-1][2]):
            segs[-1][1] = t[k + 1]
        elif sgn == 0:
            segs.append([t[k], t[k + 1], 0])
        elif segs and segs[-1][2] == 0:
            # leading flat run adopts the first nonzero direction
            segs[-1][1] = t[k + 1]
            segs[-1][2] = int(sgn)
        else:
            segs.append([t[k], t[k + 1], int(sgn)])
    out = []
    for t0, t1, d in segs:
        rise = abs(float(path(t1)) - float(path(t0)))
        out.append(Segment(float(t0), float(t1), d if d != 0 else 1, rise))
    return out
