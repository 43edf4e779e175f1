"""Hamiltonians of separable multi-noise form and their ingredient functions.

A :class:`HamiltonianSpec` is a list of terms ``G_i(p) V_i(y) xi^{c_i}``.  A term
may omit the gradient part (a pure potential) or the spatial part (constant 1),
which covers both ``sum_i H^i(p, y) xi^i`` and the additive form
``F(p) xi^1 + V(y) xi^2``.  Noise components are 0-based.

:class:`ScalarFunction` holds the one-variable ingredients (``F``, ``V_s``,
``f``, speeds ``a^i``) either as a named closed form or as uniform samples with
piecewise-linear interpolation.
"""

from __future__ import annotations

import csv
import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .errors import InvalidArgument, WindowTooSmall

__all__ = [
    "ScalarFunction",
    "NonconvexFImpl",
    "build_nonconvex_F",
    "sawtooth_Vs",
    "sawtooth",
    "cosine",
    "constant",
    "quadratic",
    "abs_function",
    "linear_function",
    "samples_function",
    "legendre",
    "legendre_many",
    "conjugate_on_window",
    "GradientPart",
    "Term",
    "HamiltonianSpec",
    "FrozenHamiltonian",
    "eval_H",
]

DOMAINS = ("torus_1d", "torus_2d", "real_line")


# --------------------------------------------------------------------------
# the nonconvex F


class NonconvexFImpl:
    """Even C^1 function with F(0)=0, F(theta3)=1/3, F(theta2)=1/2, F(theta1)=1/3.

    On ``[0, theta1]`` it is a monotone cubic Hermite interpolant through the four
    knots with zero slope at ``0``, ``theta2`` and ``theta1``.  The slope at
    ``theta3`` is the harmonic mean of the adjacent secants, which keeps both
    cubics strictly increasing.  Beyond ``theta1`` it continues as
    ``1/3 + k (x - theta1)^2``.
    """

    def __init__(self, theta1: float, theta2: float, theta3: float, k: float = 1.0):
        if not (0.0 < theta3 < theta2 < theta1) or k <= 0.0:
            raise InvalidArgument("need 0 < theta3 < theta2 < theta1 and k > 0")
        self.theta1, self.theta2, self.theta3, self.k = float(theta1), float(theta2), float(theta3), float(k)
        knots = np.array([0.0, theta3, theta2, theta1])
        vals = np.array([0.0, 1.0 / 3.0, 0.5, 1.0 / 3.0])
        d1 = vals[1] / theta3
        d2 = (vals[2] - vals[1]) / (theta2 - theta3)
        m3 = 2.0 * d1 * d2 / (d1 + d2)
        slopes = np.array([0.0, m3, 0.0, 0.0])
        self.knots, self.knot_values, self.knot_slopes = knots, vals, slopes
        # polynomial coefficients in the local variable t = (x - x0)/h, ascending powers
        coefs = []
        for j in range(3):
            h = knots[j + 1] - knots[j]
            y0, y1 = vals[j], vals[j + 1]
            m0, m1 = h * slopes[j], h * slopes[j + 1]
            coefs.append((y0, m0, -3 * y0 - 2 * m0 + 3 * y1 - m1, 2 * y0 + m0 - 2 * y1 + m1))
        self.coefs = np.array(coefs)
        # cumulative antiderivative at knots
        cum = [0.0]
        for j in range(3):
            h = knots[j + 1] - knots[j]
            c = self.coefs[j]
            cum.append(cum[-1] + h * (c[0] + c[1] / 2 + c[2] / 3 + c[3] / 4))
        self.cum = np.array(cum)
        self._knots_py = [float(v) for v in knots]
        self._widths_py = [float(knots[j + 1] - knots[j]) for j in range(3)]
        self._coefs_py = [tuple(float(v) for v in row) for row in self.coefs]
        self._inner_knots = knots[1:3].copy()
        self._x0 = knots[:3].copy()
        self._inv_h = 1.0 / np.diff(knots)
        self._cols = [np.ascontiguousarray(self.coefs[:, i]) for i in range(4)]
        self._slope_max_core = self._core_slope_max()

    # evaluation on x >= 0
    def _eval_pos(self, x: np.ndarray) -> np.ndarray:
        xc = np.minimum(x, self.theta1)
        j = np.searchsorted(self._inner_knots, xc, side="right")
        t = (xc - self._x0.take(j)) * self._inv_h.take(j)
        C = self._cols
        core = C[0].take(j) + t * (C[1].take(j) + t * (C[2].take(j) + t * C[3].take(j)))
        d = np.maximum(x - self.theta1, 0.0)
        return np.where(x >= self.theta1, 1.0 / 3.0 + self.k * d * d, core)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = self._eval_pos(np.abs(np.atleast_1d(x)))
        return out.reshape(x.shape) if x.ndim else float(out[0])

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        ax = np.abs(np.atleast_1d(x))
        out = np.empty_like(ax)
        tail = ax >= self.theta1
        out[tail] = 2.0 * self.k * (ax[tail] - self.theta1)
        for j in range(3):
            x0, x1 = self.knots[j], self.knots[j + 1]
            sel = (ax >= x0) & (ax < x1) if j < 2 else (ax >= x0) & ~tail
            t = (ax[sel] - x0) / (x1 - x0)
            c = self.coefs[j]
            out[sel] = (c[1] + t * (2 * c[2] + t * 3 * c[3])) / (x1 - x0)
        out *= np.sign(np.atleast_1d(x))
        return out.reshape(x.shape) if x.ndim else float(out[0])

    def scalar(self, x: float) -> float:
        """Fast scalar evaluation (used inside scalar quadrature and root finding)."""
        return self.scalar_with_slope(x)[0]

    def scalar_with_slope(self, x: float) -> tuple[float, float]:
        sgn = -1.0 if x < 0 else 1.0
        x = abs(x)
        if x >= self.theta1:
            d = x - self.theta1
            return 1.0 / 3.0 + self.k * d * d, sgn * 2.0 * self.k * d
        j = 0 if x < self.theta3 else (1 if x < self.theta2 else 2)
        x0, h = self._knots_py[j], self._widths_py[j]
        c0, c1, c2, c3 = self._coefs_py[j]
        t = (x - x0) / h
        return c0 + t * (c1 + t * (c2 + t * c3)), sgn * (c1 + t * (2 * c2 + 3 * t * c3)) / h

    def antiderivative(self, x):
        """G(x) = int_0^x F, odd in x."""
        x = np.asarray(x, dtype=float)
        ax = np.abs(np.atleast_1d(x))
        out = np.empty_like(ax)
        tail = ax >= self.theta1
        d = ax[tail] - self.theta1
        out[tail] = self.cum[3] + d / 3.0 + self.k * d**3 / 3.0
        for j in range(3):
            x0, x1 = self.knots[j], self.knots[j + 1]
            sel = (ax >= x0) & (ax < x1) if j < 2 else (ax >= x0) & ~tail
            h = x1 - x0
            t = (ax[sel] - x0) / h
            c = self.coefs[j]
            out[sel] = self.cum[j] + h * t * (c[0] + t * (c[1] / 2 + t * (c[2] / 3 + t * c[3] / 4)))
        out *= np.sign(np.atleast_1d(x))
        return out.reshape(x.shape) if x.ndim else float(out[0])

    def _core_slope_max(self) -> float:
        xs = np.linspace(0.0, self.theta1, 20001)
        return float(np.max(np.abs(self.derivative(xs))))

    def slope_bound(self, R: float) -> float:
        return max(self._slope_max_core, 2.0 * self.k * max(R - self.theta1, 0.0))

    @property
    def critical_points(self) -> np.ndarray:
        t1, t2 = self.theta1, self.theta2
        return np.array([-t1, -t2, 0.0, t2, t1])


# --------------------------------------------------------------------------
# scalar functions


def _sawtooth_eval(params, x):
    s = params["s"]
    y = np.mod(x, 1.0)
    return np.where(y <= s, y / s, (1.0 - y) / (1.0 - s))


def _check_sawtooth(params):
    if not 0.0 < params["s"] < 1.0:
        raise InvalidArgument("sawtooth parameter s must lie in (0, 1)")


_CLOSED: dict[str, dict] = {
    "constant": {
        "eval": lambda P, *x: np.full(np.broadcast(*[np.asarray(c) for c in x]).shape, float(P["c"])),
        "stats": lambda P: (P["c"], P["c"], P["c"]),
        "domains": DOMAINS,
        "convexity": "linear",
        "crit": lambda P: np.array([]),
        "deriv": lambda P, x: np.zeros_like(np.asarray(x, dtype=float)),
        "slope": lambda P, R: 0.0,
    },
    "sawtooth": {
        "eval": lambda P, x: _sawtooth_eval(P, np.asarray(x, dtype=float)),
        "stats": lambda P: (1.0, 0.0, 0.5),
        "domains": ("torus_1d",),
        "check": _check_sawtooth,
    },
    "cosine": {
        "eval": lambda P, x: P["a"] + P["b"] * np.cos(2 * np.pi * np.asarray(x, dtype=float)),
        "stats": lambda P: (P["a"] + abs(P["b"]), P["a"] - abs(P["b"]), P["a"]),
        "domains": ("torus_1d",),
    },
    "cosine2d": {
        "eval": lambda P, y1, y2: P["a"]
        + P["b1"] * np.cos(2 * np.pi * np.asarray(y1, dtype=float))
        + P["b2"] * np.cos(2 * np.pi * np.asarray(y2, dtype=float)),
        "stats": lambda P: (
            P["a"] + abs(P["b1"]) + abs(P["b2"]),
            P["a"] - abs(P["b1"]) - abs(P["b2"]),
            P["a"],
        ),
        "domains": ("torus_2d",),
    },
    "quadratic": {
        "eval": lambda P, x: P["c"] * np.asarray(x, dtype=float) ** 2 + P.get("offset", 0.0),
        "domains": ("real_line",),
        "convexity": lambda P: "convex" if P["c"] >= 0 else "concave",
        "crit": lambda P: np.array([0.0]),
        "deriv": lambda P, x: 2.0 * P["c"] * np.asarray(x, dtype=float),
        "slope": lambda P, R: 2.0 * abs(P["c"]) * R,
    },
    "abs": {
        "eval": lambda P, x: P.get("c", 1.0) * np.abs(np.asarray(x, dtype=float)) + P.get("offset", 0.0),
        "domains": ("real_line",),
        "convexity": lambda P: "convex" if P.get("c", 1.0) >= 0 else "concave",
        "crit": lambda P: np.array([0.0]),
        "deriv": lambda P, x: P.get("c", 1.0) * np.sign(np.asarray(x, dtype=float)),
        "slope": lambda P, R: abs(P.get("c", 1.0)),
    },
    "linear": {
        "eval": lambda P, x: P.get("c", 1.0) * np.asarray(x, dtype=float),
        "domains": ("real_line",),
        "convexity": "linear",
        "crit": lambda P: np.array([]),
        "deriv": lambda P, x: np.full_like(np.asarray(x, dtype=float), P.get("c", 1.0)),
        "slope": lambda P, R: abs(P.get("c", 1.0)),
    },
}


@dataclass(frozen=True, eq=False)
class ScalarFunction:
    """A one-variable (or torus_2d) function: closed form or uniform samples.

    ``samples`` holds node values at ``origin + i * spacing``.  On torus domains
    the samples cover one period (``n * spacing == period``) and wrap.  On the
    real line evaluation beyond the last node continues linearly with the end
    slope plus ``params['tail_quadratic'] * d**2``.
    """

    kind: str
    params: dict = field(default_factory=dict)
    domain: str = "torus_1d"
    period: float = 1.0
    samples: np.ndarray | None = None
    spacing: float | None = None
    origin: float = 0.0

    def __post_init__(self) -> None:
        if self.domain not in DOMAINS:
            raise InvalidArgument(f"unknown domain {self.domain!r}")
        if self.kind == "samples":
            vals = np.array(self.samples, dtype=float)
            if vals.ndim != (2 if self.domain == "torus_2d" else 1) or vals.shape[0] < 2:
                raise InvalidArgument("sample array has the wrong shape")
            if self.spacing is None or self.spacing <= 0:
                raise InvalidArgument("samples need a positive spacing")
            if self.domain != "real_line" and abs(vals.shape[0] * self.spacing - self.period) > 1e-9 * self.period:
                raise InvalidArgument("torus samples must cover exactly one period")
            vals.setflags(write=False)
            object.__setattr__(self, "samples", vals)
        elif self.kind == "nonconvex_F":
            if self.domain != "real_line":
                raise InvalidArgument("nonconvex_F lives on the real line")
            P = self.params
            object.__setattr__(self, "_impl", NonconvexFImpl(P["theta1"], P["theta2"], P["theta3"], P.get("k", 1.0)))
        elif self.kind == "scaled":
            base = self.params["base"]
            base = base if isinstance(base, ScalarFunction) else ScalarFunction.from_dict(base)
            if base.domain != self.domain:
                raise InvalidArgument("scaled function must keep the base domain")
            object.__setattr__(self, "_base", base)
            object.__setattr__(self, "params", {"c": float(self.params["c"]), "base": base.to_dict()})
        elif self.kind in _CLOSED:
            entry = _CLOSED[self.kind]
            if self.domain not in entry["domains"]:
                raise InvalidArgument(f"{self.kind} is not defined on {self.domain}")
            if "check" in entry:
                entry["check"](self.params)
        else:
            raise InvalidArgument(f"unknown function kind {self.kind!r}")

    # -- evaluation -------------------------------------------------------
    @property
    def impl(self) -> NonconvexFImpl:
        if self.kind != "nonconvex_F":
            raise InvalidArgument("only nonconvex_F carries an implementation object")
        return self._impl  # type: ignore[attr-defined]

    def __call__(self, *x):
        if self.kind == "nonconvex_F":
            return self._impl(x[0])  # type: ignore[attr-defined]
        if self.kind == "samples":
            return self._eval_samples(*x)
        if self.kind == "scaled":
            out = self.params["c"] * np.asarray(self._base(*x), dtype=float)  # type: ignore[attr-defined]
            return float(out) if np.ndim(out) == 0 else out
        out = _CLOSED[self.kind]["eval"](self.params, *x)
        if np.ndim(out) == 0:
            return float(out)
        return out

    def _eval_samples(self, *x):
        vals = self.samples
        if self.domain == "torus_1d":
            xx = np.asarray(x[0], dtype=float)
            n = vals.shape[0]
            pos = np.mod((xx - self.origin) / self.spacing, n)
            i = np.floor(pos).astype(int) % n
            w = pos - np.floor(pos)
            out = (1 - w) * vals[i] + w * vals[(i + 1) % n]
            return float(out) if out.ndim == 0 else out
        if self.domain == "torus_2d":
            n1, n2 = vals.shape
            p1 = np.mod((np.asarray(x[0], dtype=float) - self.origin) / self.spacing, n1)
            p2 = np.mod((np.asarray(x[1], dtype=float) - self.origin) / self.spacing, n2)
            i1, i2 = np.floor(p1).astype(int) % n1, np.floor(p2).astype(int) % n2
            w1, w2 = p1 - np.floor(p1), p2 - np.floor(p2)
            j1, j2 = (i1 + 1) % n1, (i2 + 1) % n2
            out = (
                (1 - w1) * (1 - w2) * vals[i1, i2]
                + w1 * (1 - w2) * vals[j1, i2]
                + (1 - w1) * w2 * vals[i1, j2]
                + w1 * w2 * vals[j1, j2]
            )
            return float(out) if out.ndim == 0 else out
        xx = np.asarray(x[0], dtype=float)
        nodes = self.origin + self.spacing * np.arange(vals.shape[0])
        out = np.interp(xx, nodes, vals)
        c2 = self.params.get("tail_quadratic", 0.0)
        lo, hi = nodes[0], nodes[-1]
        sl_lo = (vals[1] - vals[0]) / self.spacing
        sl_hi = (vals[-1] - vals[-2]) / self.spacing
        d_lo = np.minimum(xx - lo, 0.0)
        d_hi = np.maximum(xx - hi, 0.0)
        out = out + sl_lo * d_lo + c2 * d_lo**2 + sl_hi * d_hi + c2 * d_hi**2
        return float(out) if np.ndim(out) == 0 else out

    # -- statistics ---------------------------------------------------------
    def stats(self) -> tuple[float, float, float]:
        """(max, min, mean) over one period; exact for samples and named forms."""
        if self.domain == "real_line":
            raise InvalidArgument("max/min/mean are defined for torus functions only")
        if self.kind == "samples":
            v = self.samples
            # the periodic broken line has mean equal to the node average
            return float(v.max()), float(v.min()), float(v.mean())
        if self.kind == "scaled":
            c = self.params["c"]
            mx, mn, me = self._base.stats()  # type: ignore[attr-defined]
            return (c * mx, c * mn, c * me) if c >= 0 else (c * mn, c * mx, c * me)
        entry = _CLOSED[self.kind]
        if "stats" in entry:
            mx, mn, me = entry["stats"](self.params)
            return float(mx), float(mn), float(me)
        raise InvalidArgument(f"no statistics available for {self.kind}")

    def max(self) -> float:
        return self.stats()[0]

    def min(self) -> float:
        return self.stats()[1]

    def mean(self) -> float:
        return self.stats()[2]

    # -- real-line structure ---------------------------------------------
    def derivative(self, x):
        if self.kind == "nonconvex_F":
            return self._impl.derivative(x)  # type: ignore[attr-defined]
        if self.kind == "samples" and self.domain == "real_line":
            h = 1e-7 * max(1.0, self.spacing)
            xx = np.asarray(x, dtype=float)
            return (self(xx + h) - self(xx - h)) / (2 * h)
        if self.kind == "scaled":
            return self.params["c"] * np.asarray(self._base.derivative(x))  # type: ignore[attr-defined]
        entry = _CLOSED.get(self.kind, {})
        if "deriv" in entry:
            return entry["deriv"](self.params, x)
        raise InvalidArgument(f"no derivative for {self.kind}")

    def slope_bound(self, R: float) -> float:
        """Upper bound of |F'| on [-R, R]."""
        if self.kind == "nonconvex_F":
            return self._impl.slope_bound(R)  # type: ignore[attr-defined]
        if self.kind == "samples" and self.domain == "real_line":
            v = self.samples
            slopes = np.abs(np.diff(v)) / self.spacing
            nodes = self.origin + self.spacing * np.arange(v.shape[0])
            extra = 2 * abs(self.params.get("tail_quadratic", 0.0)) * max(R - nodes[-1], nodes[0] + R, 0.0)
            return float(slopes.max() + extra)
        if self.kind == "scaled":
            return abs(self.params["c"]) * self._base.slope_bound(R)  # type: ignore[attr-defined]
        entry = _CLOSED.get(self.kind, {})
        if "slope" in entry:
            return float(entry["slope"](self.params, R))
        raise InvalidArgument(f"no slope bound for {self.kind}")

    @property
    def critical_points(self) -> np.ndarray:
        """Points where F may have a local extremum (stationary points or kinks)."""
        if self.kind == "nonconvex_F":
            return self._impl.critical_points  # type: ignore[attr-defined]
        if self.kind == "samples" and self.domain == "real_line":
            v = self.samples
            d = np.sign(np.diff(v))
            nodes = self.origin + self.spacing * np.arange(v.shape[0])
            turn = np.nonzero(d[1:] != d[:-1])[0] + 1
            return nodes[turn]
        if self.kind == "scaled":
            return self._base.critical_points  # type: ignore[attr-defined]
        entry = _CLOSED.get(self.kind, {})
        if "crit" in entry:
            return entry["crit"](self.params)
        raise InvalidArgument(f"no critical points for {self.kind}")

    @property
    def convexity(self) -> str:
        """One of convex, concave, linear, nonconvex (real-line functions)."""
        if self.kind == "nonconvex_F":
            return "nonconvex"
        if self.kind == "samples":
            d2 = np.diff(self.samples, 2)
            c2 = self.params.get("tail_quadratic", 0.0)
            tol = 1e-12 * max(1.0, float(np.max(np.abs(self.samples))))
            if np.all(np.abs(d2) <= tol) and c2 == 0:
                return "linear"
            if np.all(d2 >= -tol) and c2 >= 0:
                return "convex"
            if np.all(d2 <= tol) and c2 <= 0:
                return "concave"
            return "nonconvex"
        if self.kind == "scaled":
            conv = self._base.convexity  # type: ignore[attr-defined]
            c = self.params["c"]
            if c == 0:
                return "linear"
            flip = {"convex": "concave", "concave": "convex"}
            return flip.get(conv, conv) if c < 0 else conv
        conv = _CLOSED[self.kind].get("convexity", "nonconvex")
        return conv(self.params) if callable(conv) else conv

    @property
    def is_constant(self) -> bool:
        if self.kind == "scaled":
            return self.params["c"] == 0 or self._base.is_constant  # type: ignore[attr-defined]
        return self.kind == "constant"

    def scaled(self, c: float) -> "ScalarFunction":
        """The function ``c * self``."""
        c = float(c)
        if c == 1.0:
            return self
        if self.kind == "samples":
            params = dict(self.params)
            if "tail_quadratic" in params:
                params["tail_quadratic"] = c * params["tail_quadratic"]
            return ScalarFunction("samples", params, self.domain, self.period, c * self.samples, self.spacing, self.origin)
        if self.kind == "constant":
            return constant(c * self.params["c"], self.domain)
        if self.kind == "cosine":
            return cosine(c * self.params["a"], c * self.params["b"])
        if self.kind == "scaled":
            return ScalarFunction("scaled", {"c": c * self.params["c"], "base": self.params["base"]}, self.domain, self.period)
        return ScalarFunction("scaled", {"c": c, "base": self.to_dict()}, self.domain, self.period)

    # -- serialization ----------------------------------------------------
    def to_dict(self) -> dict:
        d = {"kind": self.kind, "params": dict(self.params), "domain": self.domain, "period": self.period}
        if self.kind == "samples":
            d.update(samples=self.samples.tolist(), spacing=self.spacing, origin=self.origin)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ScalarFunction":
        allowed = {"kind", "params", "domain", "period", "samples", "spacing", "origin"}
        extra = set(d) - allowed
        if extra:
            raise InvalidArgument(f"unknown keys in function description: {sorted(extra)}")
        return cls(
            kind=d["kind"],
            params=dict(d.get("params", {})),
            domain=d.get("domain", "torus_1d"),
            period=float(d.get("period", 1.0)),
            samples=None if d.get("samples") is None else np.asarray(d["samples"], dtype=float),
            spacing=d.get("spacing"),
            origin=float(d.get("origin", 0.0)),
        )

    def to_csv(self, path: str | Path, n: int = 1024, window: float = 5.0) -> None:
        """Two-column (x, value) export; closed forms are sampled on ``n`` nodes."""
        if self.domain == "torus_2d":
            raise InvalidArgument("two-column export is for one-variable functions")
        if self.kind == "samples":
            xs = self.origin + self.spacing * np.arange(self.samples.shape[0])
            vs = self.samples
        elif self.domain == "torus_1d":
            xs = self.period * np.arange(n) / n
            vs = np.asarray(self(xs))
        else:
            xs = np.linspace(-window, window, n)
            vs = np.asarray(self(xs))
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "value"])
            for a, b in zip(xs, vs):
                w.writerow([repr(float(a)), repr(float(b))])

    @classmethod
    def from_csv(cls, path: str | Path, domain: str = "torus_1d", period: float = 1.0) -> "ScalarFunction":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        xs, vs = data[:, 0], data[:, 1]
        dx = np.diff(xs)
        if np.any(np.abs(dx - dx[0]) > 1e-9 * max(1.0, abs(dx[0]))):
            raise InvalidArgument("CSV samples must be uniformly spaced")
        return cls("samples", {}, domain, period, vs, float(dx[0]), float(xs[0]))


def build_nonconvex_F(theta1: float, theta2: float, theta3: float, k: float = 1.0) -> ScalarFunction:
    """Even nonconvex F with the prescribed knot values (see :class:`NonconvexFImpl`)."""
    return ScalarFunction("nonconvex_F", {"theta1": theta1, "theta2": theta2, "theta3": theta3, "k": k}, "real_line")


def sawtooth(s: float) -> ScalarFunction:
    return ScalarFunction("sawtooth", {"s": float(s)}, "torus_1d")


def sawtooth_Vs(s: float, x):
    """The 1-periodic tent ``x/s`` on ``[0, s]``, ``(1-x)/(1-s)`` on ``(s, 1]``."""
    return sawtooth(s)(x)


def cosine(a: float, b: float) -> ScalarFunction:
    """``a + b cos(2 pi y)`` on the unit torus."""
    return ScalarFunction("cosine", {"a": float(a), "b": float(b)}, "torus_1d")


def constant(c: float, domain: str = "torus_1d") -> ScalarFunction:
    return ScalarFunction("constant", {"c": float(c)}, domain)


def quadratic(c: float = 0.5, offset: float = 0.0) -> ScalarFunction:
    return ScalarFunction("quadratic", {"c": float(c), "offset": float(offset)}, "real_line")


def abs_function(c: float = 1.0, offset: float = 0.0) -> ScalarFunction:
    return ScalarFunction("abs", {"c": float(c), "offset": float(offset)}, "real_line")


def linear_function(c: float = 1.0) -> ScalarFunction:
    return ScalarFunction("linear", {"c": float(c)}, "real_line")


def samples_function(values, spacing: float, origin: float = 0.0, domain: str = "torus_1d", **params) -> ScalarFunction:
    period = len(values) * spacing if domain != "real_line" else 1.0
    return ScalarFunction("samples", dict(params), domain, period, np.asarray(values, dtype=float), float(spacing), origin)


# --------------------------------------------------------------------------
# Legendre transform


def _golden_max(g: Callable[[np.ndarray], np.ndarray], a: np.ndarray, b: np.ndarray, iters: int = 80):
    """Vectorized golden-section search for the maximum of g on [a, b]."""
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = a.copy(), b.copy()
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    gc, gd = g(c), g(d)
    for _ in range(iters):
        left = gc >= gd
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        new_c = b - invphi * (b - a)
        new_d = a + invphi * (b - a)
        c_next = np.where(left, new_c, d)
        d_next = np.where(left, c, new_d)
        gc_next = np.where(left, g(new_c), gd)
        gd_next = np.where(left, gc, g(new_d))
        c, d, gc, gd = c_next, d_next, gc_next, gd_next
    x = 0.5 * (a + b)
    return x, g(x)


def conjugate_on_window(F: Callable, q, P: float, n_grid: int = 4001, strict: bool = False):
    """``sup_{|p| <= P} (p q - F(p))`` for an array of slopes ``q``.

    Returns ``(values, argmax, on_boundary)``.  With ``strict`` a maximizer on
    the window boundary raises :class:`WindowTooSmall`.
    """
    q = np.atleast_1d(np.asarray(q, dtype=float))
    p = np.linspace(-P, P, n_grid)
    Fp = np.asarray(F(p), dtype=float)
    h = p[1] - p[0]
    best = np.empty(q.shape)
    arg = np.empty(q.shape, dtype=int)
    chunk = max(1, 4_000_000 // n_grid)
    for s in range(0, q.size, chunk):
        qq = q[s : s + chunk]
        obj = qq[:, None] * p[None, :] - Fp[None, :]
        arg[s : s + chunk] = np.argmax(obj, axis=1)
    boundary = (arg == 0) | (arg == n_grid - 1)
    if strict and np.any(boundary):
        raise WindowTooSmall(f"supremum attained on the window boundary |p| = {P}")
    lo = np.maximum(p[arg] - h, -P)
    hi = np.minimum(p[arg] + h, P)
    sel_q = q

    def g(x):
        return sel_q * x - np.asarray(F(x), dtype=float)

    x, val = _golden_max(g, lo, hi)
    grid_val = q * p[arg] - Fp[arg]
    better = grid_val > val
    best = np.where(better, grid_val, val)
    argmax = np.where(better, p[arg], x)
    return best, argmax, boundary


def legendre(F: ScalarFunction | Callable, q: float, p_window: float, n_grid: int = 4001) -> tuple[float, float]:
    """``F*(q)`` as a windowed supremum; returns ``(value, maximizer)``."""
    vals, arg, _ = conjugate_on_window(F, [q], p_window, n_grid, strict=True)
    return float(vals[0]), float(arg[0])


def legendre_many(F: ScalarFunction | Callable, q, p_window: float, n_grid: int = 4001) -> np.ndarray:
    vals, _, _ = conjugate_on_window(F, q, p_window, n_grid, strict=True)
    return vals


# --------------------------------------------------------------------------
# Hamiltonian specs


@dataclass(frozen=True, eq=False)
class GradientPart:
    """``function`` F(p) (radial F(|p|) in d=2), ``eikonal`` |p|, or ``linear`` c.p."""

    kind: str
    func: ScalarFunction | None = None
    direction: tuple[float, ...] = (1.0,)

    def __post_init__(self) -> None:
        if self.kind not in ("function", "eikonal", "linear"):
            raise InvalidArgument(f"unknown gradient part {self.kind!r}")
        if self.kind == "function" and (self.func is None or self.func.domain != "real_line"):
            raise InvalidArgument("function gradient part needs a real_line ScalarFunction")

    def key(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def value(self, *p):
        if len(p) == 1:
            p0 = np.asarray(p[0], dtype=float)
            if self.kind == "function":
                return self.func(p0)
            if self.kind == "eikonal":
                return np.abs(p0)
            return self.direction[0] * p0
        if self.kind == "linear":
            return sum(c * np.asarray(pi, dtype=float) for c, pi in zip(self.direction, p))
        r = np.sqrt(sum(np.asarray(pi, dtype=float) ** 2 for pi in p))
        return r if self.kind == "eikonal" else self.func(r)

    def slope_bound(self, R: float, d: int = 1) -> float:
        if self.kind == "eikonal":
            return 1.0
        if self.kind == "linear":
            return float(max(abs(c) for c in self.direction))
        return self.func.slope_bound(R * np.sqrt(d))

    @property
    def critical_points(self) -> np.ndarray:
        if self.kind == "eikonal":
            return np.array([0.0])
        if self.kind == "linear":
            return np.array([])
        return self.func.critical_points

    @property
    def convexity(self) -> str:
        if self.kind == "eikonal":
            return "convex"
        if self.kind == "linear":
            return "linear"
        return self.func.convexity

    def to_dict(self) -> dict:
        d: dict = {"kind": self.kind}
        if self.func is not None:
            d["func"] = self.func.to_dict()
        if self.kind == "linear":
            d["direction"] = list(self.direction)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "GradientPart":
        extra = set(d) - {"kind", "func", "direction"}
        if extra:
            raise InvalidArgument(f"unknown keys in gradient part: {sorted(extra)}")
        func = ScalarFunction.from_dict(d["func"]) if d.get("func") is not None else None
        return cls(d["kind"], func, tuple(d.get("direction", (1.0,))))


@dataclass(frozen=True, eq=False)
class Term:
    """``gradient(p) * spatial(y) * xi[component]``; a missing part counts as 1."""

    gradient: GradientPart | None
    spatial: ScalarFunction | None
    component: int

    def to_dict(self) -> dict:
        return {
            "gradient": None if self.gradient is None else self.gradient.to_dict(),
            "spatial": None if self.spatial is None else self.spatial.to_dict(),
            "component": self.component,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Term":
        extra = set(d) - {"gradient", "spatial", "component"}
        if extra:
            raise InvalidArgument(f"unknown keys in term: {sorted(extra)}")
        g = None if d.get("gradient") is None else GradientPart.from_dict(d["gradient"])
        s = None if d.get("spatial") is None else ScalarFunction.from_dict(d["spatial"])
        return cls(g, s, int(d["component"]))


@dataclass(frozen=True, eq=False)
class HamiltonianSpec:
    """``H(p, y, xi) = sum_terms G(p) V(y) xi[c]`` in dimension ``d`` with ``m`` noises.

    ``envelope`` optionally records radial bounds ``nu_lower(|p|) <= H <= nu_upper(|p|)``
    as real-line ScalarFunctions.  ``flags`` may claim ``{"coercive": true}``,
    which is checked numerically at construction.
    """

    d: int
    m: int
    terms: tuple[Term, ...]
    flags: dict = field(default_factory=dict)
    envelope: dict | None = None

    def __post_init__(self) -> None:
        if self.d not in (1, 2):
            raise InvalidArgument("dimension must be 1 or 2")
        if self.m < 1 or not self.terms:
            raise InvalidArgument("need at least one noise component and one term")
        object.__setattr__(self, "terms", tuple(self.terms))
        for t in self.terms:
            if not 0 <= t.component < self.m:
                raise InvalidArgument(f"term references noise component {t.component} outside 0..{self.m - 1}")
            if t.spatial is not None:
                want = "torus_1d" if self.d == 1 else "torus_2d"
                if t.spatial.domain != want and not t.spatial.is_constant:
                    raise InvalidArgument(f"spatial parts must live on {want}")
        if self.envelope is not None:
            if set(self.envelope) != {"lower", "upper"}:
                raise InvalidArgument("envelope needs exactly 'lower' and 'upper'")
        if self.flags.get("coercive"):
            info = self.classify_patterns()
            bad = [k for k, v in info.items() if v["coercivity"] == 0]
            if bad:
                raise InvalidArgument(f"claimed coercivity fails for sign patterns {bad}")

    # -- structure --------------------------------------------------------
    @property
    def x_independent(self) -> bool:
        return all(t.spatial is None or t.spatial.is_constant for t in self.terms)

    def patterns(self):
        return list(itertools.product((1.0, -1.0), repeat=self.m))

    def frozen(self, xi, coords=None, scale: float = 1.0) -> "FrozenHamiltonian":
        return FrozenHamiltonian(self, xi, coords, scale)

    def classify_patterns(self, R: float = 50.0, n_p: int = 401, n_y: int = 64) -> dict:
        """Per sign pattern: convexity in p (sampled) and coercivity sign (+1, -1, 0)."""
        if self.d == 1:
            ys = (np.arange(n_y) / n_y,)
        else:
            g = np.arange(16) / 16
            y1, y2 = np.meshgrid(g, g, indexing="ij")
            ys = (y1.ravel(), y2.ravel())
        ps = np.linspace(-R, R, n_p)
        out = {}
        for xi in self.patterns():
            fz = FrozenHamiltonian(self, xi, ys)
            if self.d == 1:
                Hv = np.array([np.broadcast_to(fz.H(np.full_like(ys[0], pv)), ys[0].shape) for pv in ps])
                far = np.concatenate([Hv[:3], Hv[-3:]])
            else:
                Hv = np.array([np.broadcast_to(fz.H(np.full_like(ys[0], pv), np.zeros_like(ys[0])), ys[0].shape) for pv in ps])
                Hv2 = np.array([np.broadcast_to(fz.H(np.zeros_like(ys[0]), np.full_like(ys[0], pv)), ys[0].shape) for pv in ps])
                far = np.concatenate([Hv[:3], Hv[-3:], Hv2[:3], Hv2[-3:]])
            d2 = np.diff(Hv, 2, axis=0)
            tol = 1e-9 * max(1.0, float(np.max(np.abs(Hv))))
            if np.all(d2 >= -tol):
                conv = "convex"
            elif np.all(d2 <= tol):
                conv = "concave"
            else:
                conv = "nonconvex"
            center = Hv[n_p // 2]
            if far.min() > center.max() + 1.0:
                coer = 1
            elif far.max() < center.min() - 1.0:
                coer = -1
            else:
                coer = 0
            out[tuple(int(v) for v in xi)] = {"convexity": conv, "coercivity": coer}
        return out

    # -- serialization ----------------------------------------------------
    def to_dict(self) -> dict:
        d = {"d": self.d, "m": self.m, "terms": [t.to_dict() for t in self.terms], "flags": dict(self.flags)}
        if self.envelope is not None:
            d["envelope"] = {k: v.to_dict() for k, v in self.envelope.items()}
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "HamiltonianSpec":
        extra = set(d) - {"d", "m", "terms", "flags", "envelope"}
        if extra:
            raise InvalidArgument(f"unknown keys in Hamiltonian spec: {sorted(extra)}")
        env = d.get("envelope")
        if env is not None:
            env = {k: ScalarFunction.from_dict(v) for k, v in env.items()}
        return cls(int(d["d"]), int(d["m"]), tuple(Term.from_dict(t) for t in d["terms"]), dict(d.get("flags", {})), env)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "HamiltonianSpec":
        return cls.from_dict(json.loads(text))


class FrozenHamiltonian:
    """``scale * H(p, y, xi)`` with the noise fixed and spatial parts sampled on a grid.

    Terms that share a gradient part are merged, so the frozen Hamiltonian is
    ``sum_g c_g(y) G_g(p) + w(y)``.
    """

    def __init__(self, spec: HamiltonianSpec, xi, coords=None, scale: float = 1.0):
        xi = np.asarray(xi, dtype=float).ravel()
        if xi.size != spec.m:
            raise InvalidArgument(f"noise vector must have {spec.m} entries")
        self.spec, self.xi, self.scale, self.d = spec, xi, float(scale), spec.d
        groups: dict[str, list] = {}
        potential: object = 0.0
        for t in spec.terms:
            if t.spatial is None or t.spatial.is_constant:
                v = 1.0 if t.spatial is None else float(np.ravel(t.spatial(*([np.zeros(1)] * spec.d)))[0])
            else:
                if coords is None:
                    raise InvalidArgument("coordinates are needed for spatially varying terms")
                v = np.asarray(t.spatial(*coords), dtype=float)
            coef = self.scale * xi[t.component] * v
            if t.gradient is None:
                potential = potential + coef
            else:
                k = t.gradient.key()
                if k in groups:
                    groups[k][1] = groups[k][1] + coef
                else:
                    groups[k] = [t.gradient, coef]
        self.groups = [(g, c) for g, c in groups.values()]
        self.potential = potential
        self._crit: list | None = None

    @property
    def x_independent(self) -> bool:
        return all(np.ndim(c) == 0 for _, c in self.groups) and np.ndim(self.potential) == 0

    @property
    def has_gradient(self) -> bool:
        return any(np.any(np.asarray(c) != 0) for _, c in self.groups)

    def H(self, *p):
        out = self.potential
        for g, c in self.groups:
            out = out + c * g.value(*p)
        return out

    def alpha(self, R: float) -> float:
        """Bound on |dH/dp_axis| for gradients of size <= R (no inflation)."""
        return float(sum(np.max(np.abs(c)) * g.slope_bound(R, self.d) for g, c in self.groups))

    @property
    def godunov_ready(self) -> bool:
        return self.d == 1 and len(self.groups) <= 1

    def godunov_flux(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Exact Godunov flux: min of H on [a, b] if a <= b, else max on [b, a]."""
        if not self.groups:
            return np.broadcast_to(self.potential, np.broadcast(a, b).shape) + 0.0
        g, c = self.groups[0]
        lo, hi = np.minimum(a, b), np.maximum(a, b)
        ga, gb = g.value(a), g.value(b)
        gmin, gmax = np.minimum(ga, gb), np.maximum(ga, gb)
        if self._crit is None:
            cps = np.asarray(g.critical_points, dtype=float)
            self._crit = [(float(cp), float(v)) for cp, v in zip(cps, np.atleast_1d(g.value(cps)))]
        for cp, gc in self._crit:
            inside = (lo <= cp) & (cp <= hi)
            if inside.any():
                np.minimum(gmin, gc, out=gmin, where=inside)
                np.maximum(gmax, gc, out=gmax, where=inside)
        c = np.asarray(c)
        up = a <= b
        use_min = up == (c >= 0)
        return c * np.where(use_min, gmin, gmax) + self.potential

    def as_function_of_p(self) -> Callable:
        if not self.x_independent:
            raise InvalidArgument("Hamiltonian depends on the spatial variable")
        return lambda p: self.H(np.asarray(p, dtype=float))

    def convexity_1d(self, R: float, n: int = 4001) -> str:
        """Sampled convexity of an x-independent 1-d frozen Hamiltonian on [-R, R]."""
        if self.d != 1 or not self.x_independent:
            return "nonconvex"
        signs = set()
        for g, c in self.groups:
            if c == 0:
                continue
            conv = g.convexity
            if conv == "linear":
                continue
            if conv == "nonconvex":
                return "nonconvex"
            signs.add(conv if c > 0 else ("concave" if conv == "convex" else "convex"))
        if len(signs) > 1:
            # mixed parts: fall back to sampling
            ps = np.linspace(-R, R, n)
            d2 = np.diff(self.H(ps), 2)
            tol = 1e-10 * max(1.0, float(np.max(np.abs(self.H(ps)))))
            if np.all(d2 >= -tol):
                return "convex"
            if np.all(d2 <= tol):
                return "concave"
            return "nonconvex"
        if not signs:
            return "linear"
        return signs.pop()


def eval_H(spec: HamiltonianSpec, p, y, xi) -> float:
    """Evaluate ``H(p, y, xi)`` at a single point."""
    p = np.atleast_1d(np.asarray(p, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if p.size != spec.d or y.size != spec.d:
        raise InvalidArgument(f"p and y must have {spec.d} components")
    fz = FrozenHamiltonian(spec, xi, tuple(y[i : i + 1] for i in range(spec.d)))
    return float(np.ravel(fz.H(*[p[i : i + 1] for i in range(spec.d)]))[0])
