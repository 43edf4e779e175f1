"""Numerical cell problems by the large-time method.

``w_t + H(p + Dw, y, xi) = 0`` is run on the unit torus from ``w = 0``.  Once
the corrector has settled, ``w(y, t) ~ v(y) - lambda t``, so the time slope
between two horizons gives ``lambda``.  The spread of that slope over ``y``
measures how far the profile is from settling and serves as the error
estimate.  Many values of ``p`` in one dimension are solved as one batch.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InvalidArgument
from ..hamiltonians import FrozenHamiltonian, GradientPart, HamiltonianSpec, ScalarFunction, Term
from ..hjsolver import GridFunction, solve_frozen

__all__ = ["CellResult", "cell_numeric", "effective_eikonal", "coercivity_sign", "harmonic_speed"]


@dataclass
class CellResult:
    """``lam`` is the slope estimate; ``lam1``, ``lam2`` are the plain ``-<w(T)>/T`` values."""

    lam: np.ndarray | float
    error: np.ndarray | float
    lam1: np.ndarray | float
    lam2: np.ndarray | float
    converged: bool
    n: int
    T1: float
    T2: float


def coercivity_sign(fz: FrozenHamiltonian, d: int, R: float = 50.0) -> int:
    """+1 if ``H -> +inf`` as ``|p| -> inf`` uniformly in y, -1 for ``-inf``, 0 otherwise."""
    zero = [np.zeros(1)] * d
    centre = np.asarray(fz.H(*zero))
    far = []
    for axis in range(d):
        for sgn in (1.0, -1.0):
            p = [np.zeros(1)] * d
            p[axis] = np.array([sgn * R])
            far.append(np.asarray(fz.H(*p)))
    far = np.concatenate([np.ravel(np.broadcast_to(f, np.broadcast(f, centre).shape)) for f in far])
    if far.min() > np.max(centre) + 1.0:
        return 1
    if far.max() < np.min(centre) - 1.0:
        return -1
    return 0


def cell_numeric(
    spec: HamiltonianSpec,
    xi,
    p,
    n: int = 256,
    T1: float = 20.0,
    T2: float = 40.0,
    *,
    scheme: str = "auto",
    tol: float | None = None,
) -> CellResult:
    """Effective Hamiltonian ``H(p, xi)`` from the large-time behaviour of the cell problem.

    In 1-d ``p`` may be an array; the values are solved together.  In 2-d ``p``
    is one vector.
    """
    if not 0 < T1 < T2:
        raise InvalidArgument("need 0 < T1 < T2")
    d = spec.d
    dx = 1.0 / n
    if d == 1:
        p_arr = np.atleast_1d(np.asarray(p, dtype=float))
        y = dx * np.arange(n)
        values = p_arr[:, None] * y[None, :]
        tilt = p_arr[:, None]
        gf = GridFunction(values, dx, (0.0,), "periodic", 1, tilt=tilt)
    else:
        p_arr = np.asarray(p, dtype=float).ravel()
        if p_arr.size != 2:
            raise InvalidArgument("in two dimensions p is a single 2-vector")
        y = dx * np.arange(n)
        Y1, Y2 = np.meshgrid(y, y, indexing="ij")
        values = p_arr[0] * Y1 + p_arr[1] * Y2
        gf = GridFunction(values, dx, (0.0, 0.0), "periodic", 2, tilt=(float(p_arr[0]), float(p_arr[1])))
    fz = FrozenHamiltonian(spec, xi, gf.coords(), 1.0)
    if not fz.x_independent and coercivity_sign(fz, d) == 0:
        raise InvalidArgument("frozen Hamiltonian is neither coercive nor anti-coercive")
    base = values
    u1, _ = solve_frozen(spec, xi, 1.0, gf, T1, scheme=scheme, frozen=fz)
    u2, _ = solve_frozen(spec, xi, 1.0, u1, T2 - T1, scheme=scheme, frozen=fz)
    w1 = u1.values - base
    w2 = u2.values - base
    axes = tuple(range(-d, 0))
    slope = (w2 - w1) / (T2 - T1)
    lam = -np.mean(slope, axis=axes)
    err = np.max(np.abs(slope + np.expand_dims(lam, axes)), axis=axes)
    lam1 = -np.mean(w1, axis=axes) / T1
    lam2 = -np.mean(w2, axis=axes) / T2
    converged = True if tol is None else bool(np.all(err <= tol))
    if d == 1 and np.ndim(p) == 0:
        lam, err, lam1, lam2 = float(lam[0]), float(err[0]), float(lam1[0]), float(lam2[0])
    elif d == 2:
        lam, err, lam1, lam2 = float(lam), float(err), float(lam1), float(lam2)
    return CellResult(lam, err, lam1, lam2, converged, n, T1, T2)


def harmonic_speed(a: ScalarFunction, n: int = 1 << 16) -> float:
    """``1 / <1/a>`` for a one-dimensional speed of fixed sign (midpoint rule)."""
    y = (np.arange(n) + 0.5) / n
    return float(1.0 / np.mean(1.0 / np.asarray(a(y))))


def effective_eikonal(a_list, xi, direction, n: int = 64, T1: float = 20.0, T2: float = 40.0) -> CellResult:
    """Effective front speed for the Hamiltonian ``(sum_i a_i(y) xi_i) |p|`` at ``p = direction``."""
    if len(a_list) != len(xi):
        raise InvalidArgument("one speed per noise component")
    d = 2 if any(a.domain == "torus_2d" for a in a_list) else 1
    terms = tuple(Term(GradientPart("eikonal"), a, i) for i, a in enumerate(a_list))
    spec = HamiltonianSpec(d, len(a_list), terms)
    g = (np.arange(128) + 0.5) / 128
    coords = (g,) if d == 1 else tuple(np.meshgrid(g, g, indexing="ij"))
    speed = sum(x * np.broadcast_to(np.asarray(a(*coords), dtype=float), coords[0].shape) for x, a in zip(xi, a_list))
    if not (np.all(speed > 0) or np.all(speed < 0)):
        raise InvalidArgument("frozen speed must keep one sign on the torus")
    p = np.asarray(direction, dtype=float)
    if d == 1:
        p = float(np.ravel(p)[0])
    return cell_numeric(spec, xi, p, n, T1, T2)
