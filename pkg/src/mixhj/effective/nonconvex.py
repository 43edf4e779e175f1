"""Effective Hamiltonian and explicit correctors for ``F(p) - V_s(y)``.

``F`` is the even nonconvex function of :func:`mixhj.hamiltonians.build_nonconvex_F`
and ``V_s`` the tent of height one peaking at ``y = s``.  The cell equation is
``F(w') - V_s(y) = lambda``; a corrector is described by its gradient ``f``,
which on each piece equals ``+-psi_b(lambda + V_s(y))`` for one of the three
inverse branches of ``F``:

* ``psi_1`` inverts ``F`` on ``[theta1, inf)``, defined for levels ``>= 1/3``;
* ``psi_2`` inverts ``F`` on ``[theta2, theta1]``, levels in ``[1/3, 1/2]``;
* ``psi_3`` inverts ``F`` on ``[0, theta2]``, levels in ``[0, 1/2]``.

Level integrals ``int psi_b`` are computed exactly by integrating by parts
against the antiderivative of ``F``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import integrate, optimize

from ..errors import InternalError, InvalidArgument
from ..hamiltonians import NonconvexFImpl, ScalarFunction, sawtooth

__all__ = [
    "psi",
    "psi_branches",
    "level_integral",
    "thresholds",
    "effective_Hs",
    "corrector_Hs",
    "CorrectorProfile",
    "Piece",
    "CorrectorReport",
    "verify_corrector",
    "nonconvex_relations",
    "ballistic_constant",
    "case_of",
    "case_mean",
]

THIRD = 1.0 / 3.0
RANGE_TOL = 1e-12
BRANCH_RANGE = {1: (THIRD, math.inf), 2: (THIRD, 0.5), 3: (0.0, 0.5)}


def _impl(F: ScalarFunction) -> NonconvexFImpl:
    if not isinstance(F, ScalarFunction) or F.kind != "nonconvex_F":
        raise InvalidArgument("F must come from build_nonconvex_F")
    return F.impl


# --------------------------------------------------------------------------
# branch inverses


def _bisect(fun, lo, hi, y, increasing: bool, iters: int = 64):
    lo = np.full_like(y, lo)
    hi = np.full_like(y, hi)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        below = fun(mid) < y
        go_right = below if increasing else ~below
        lo = np.where(go_right, mid, lo)
        hi = np.where(go_right, hi, mid)
    return 0.5 * (lo + hi)


def _psi_array(impl: NonconvexFImpl, b: int, y: np.ndarray) -> np.ndarray:
    lo, hi = BRANCH_RANGE[b]
    if np.any(y < lo - RANGE_TOL) or np.any(y > hi + RANGE_TOL):
        raise InvalidArgument(f"level outside the range of psi_{b}")
    y = np.clip(y, lo, hi)
    if b == 1:
        return impl.theta1 + np.sqrt((y - THIRD) / impl.k)
    if b == 2:
        return _bisect(impl, impl.theta2, impl.theta1, y, increasing=False)
    return _bisect(impl, 0.0, impl.theta2, y, increasing=True)


def _psi_scalar(impl: NonconvexFImpl, b: int, y: float) -> float:
    lo, hi = BRANCH_RANGE[b]
    y = min(max(y, lo), hi)
    if b == 1:
        return impl.theta1 + math.sqrt((y - THIRD) / impl.k)
    # safeguarded Newton on the monotone piece; bisection whenever Newton leaves the bracket
    a, c = (impl.theta2, impl.theta1) if b == 2 else (0.0, impl.theta2)
    inc = b == 3
    x = 0.5 * (a + c)
    for _ in range(200):
        fx, dfx = impl.scalar_with_slope(x)
        r = fx - y
        if r == 0.0:
            return x
        if (r < 0) == inc:
            a = x
        else:
            c = x
        if c - a <= 1e-15 * max(1.0, c):
            break
        x_new = x - r / dfx if dfx != 0.0 else a - 1.0
        if not a < x_new < c:
            x_new = 0.5 * (a + c)
        elif abs(x_new - x) <= 1e-16 * max(1.0, abs(x)):
            return x_new
        x = x_new
    return x


def psi(F: ScalarFunction, branch: int, y):
    """The inverse branch ``psi_branch`` of ``F`` at level ``y``."""
    if branch not in (1, 2, 3):
        raise InvalidArgument("branch must be 1, 2 or 3")
    impl = _impl(F)
    y_arr = np.asarray(y, dtype=float)
    out = _psi_array(impl, branch, np.atleast_1d(y_arr))
    return float(out[0]) if y_arr.ndim == 0 else out.reshape(y_arr.shape)


def psi_branches(F: ScalarFunction, y: float) -> tuple:
    """``(psi_1(y), psi_2(y), psi_3(y))`` with ``None`` where a branch is undefined."""
    out = []
    for b in (1, 2, 3):
        lo, hi = BRANCH_RANGE[b]
        out.append(psi(F, b, y) if lo - RANGE_TOL <= y <= hi + RANGE_TOL else None)
    if all(v is None for v in out):
        raise InvalidArgument("level lies outside every branch range")
    return tuple(out)


def level_integral(F: ScalarFunction, branch: int, y0: float, y1: float) -> float:
    """``int_{y0}^{y1} psi_branch(y) dy`` via ``y psi(y) - G(psi(y))`` with ``G' = F``."""
    impl = _impl(F)
    if y0 == y1:
        return 0.0
    a, b = _psi_scalar_checked(impl, branch, y0), _psi_scalar_checked(impl, branch, y1)
    G = impl.antiderivative
    return float((y1 * b - y0 * a) - (G(b) - G(a)))


def _psi_scalar_checked(impl: NonconvexFImpl, b: int, y: float) -> float:
    lo, hi = BRANCH_RANGE[b]
    if y < lo - RANGE_TOL or y > hi + RANGE_TOL:
        raise InvalidArgument(f"level {y} outside the range of psi_{b}")
    if b == 1:
        return impl.theta1 + math.sqrt(max(y - THIRD, 0.0) / impl.k)
    return _psi_scalar(impl, b, y)


# --------------------------------------------------------------------------
# thresholds


def _fkey(F: ScalarFunction) -> tuple:
    P = F.params
    return (P["theta1"], P["theta2"], P["theta3"], P.get("k", 1.0))


_F_REGISTRY: dict[tuple, ScalarFunction] = {}


def _reg(F: ScalarFunction) -> tuple:
    key = _fkey(F)
    _F_REGISTRY.setdefault(key, F)
    return key


@lru_cache(maxsize=256)
def _thresholds_cached(key: tuple, s: float) -> dict:
    F = _F_REGISTRY[key]
    I = lambda b, a, c: level_integral(F, b, a, c)
    mix_plus3 = s * I(1, THIRD, 0.5) + (1 - s) * I(3, THIRD, 0.5)
    mix_minus3 = s * I(1, THIRD, 0.5) - (1 - s) * I(3, THIRD, 0.5)
    mix_minus2 = s * I(1, THIRD, 0.5) - (1 - s) * I(2, THIRD, 0.5)
    mix_plus2 = s * I(1, THIRD, 0.5) + (1 - s) * I(2, THIRD, 0.5)
    i3 = I(3, 0.0, THIRD)
    i1_half_1 = I(1, 0.5, 1.0)
    out = {
        "p_plus": i3 + i1_half_1 + mix_plus3,
        "q_minus": I(1, 0.5, 4 / 3) + mix_plus3,
        "q_plus": I(1, THIRD, 4 / 3),
        "p0": (2 * s - 1) * i3 + (2 * s - 1) * I(1, THIRD, 1.0),
        "p1": (2 * s - 1) * i3 + i1_half_1 + mix_plus3,
        "p2": (2 * s - 1) * i3 + i1_half_1 + mix_minus3,
        "p3": (2 * s - 1) * i3 + i1_half_1 + mix_minus2,
        "p4": (2 * s - 1) * i3 + i1_half_1 + (2 * s - 1) * I(1, THIRD, 0.5),
        "q1": I(1, 0.5, 4 / 3) + mix_plus2,
    }
    return out


def _check_s(s: float) -> float:
    s = float(s)
    if not 0.0 < s < 1.0:
        raise InvalidArgument("s must lie in (0, 1)")
    return s


def thresholds(F: ScalarFunction, s: float) -> dict:
    """Gradients where the shape of the effective Hamiltonian changes.

    Keys ``p_plus, q_minus, q_plus, p0, p1, p2, p3, p4`` and the Case 7/8
    separator ``q1``.
    """
    return dict(_thresholds_cached(_reg(F), _check_s(s)))


# --------------------------------------------------------------------------
# effective Hamiltonian


def _solve_monotone(g, a: float, b: float, what: str) -> float:
    ga, gb = g(a), g(b)
    if ga == 0.0:
        return a
    if gb == 0.0:
        return b
    if ga * gb > 0:
        if min(abs(ga), abs(gb)) <= 1e-11:
            return a if abs(ga) < abs(gb) else b
        raise InternalError(f"{what}: bisection bracket lost ({ga}, {gb})")
    return optimize.brentq(g, a, b, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=200)


def _lambda_case6(F, s, p) -> float:
    I = lambda b, a, c: level_integral(F, b, a, c)
    mix = s * I(1, THIRD, 0.5) + (1 - s) * I(3, THIRD, 0.5)
    g = lambda lam: I(3, lam, THIRD) + I(1, 0.5, 1 + lam) + mix - p
    return _solve_monotone(g, 0.0, THIRD, "effective_Hs case (b)")


def _lambda_case9(F, p) -> float:
    g = lambda lam: level_integral(F, 1, lam, 1 + lam) - p
    hi = 1.0
    while g(hi) < 0:
        hi *= 2
        if hi > 1e8:
            raise InternalError("effective_Hs case (d): no bracket")
    return _solve_monotone(g, THIRD, hi, "effective_Hs case (d)")


def _effective_scalar(F, s, p) -> float:
    if p < 0:
        return _effective_scalar(F, 1 - s, -p)
    th = thresholds(F, s)
    if p <= th["p_plus"]:
        return 0.0
    if p < th["q_minus"]:
        return _lambda_case6(F, s, p)
    if p <= th["q_plus"]:
        return THIRD
    return _lambda_case9(F, p)


def effective_Hs(F: ScalarFunction, s: float, p):
    """Effective Hamiltonian of ``F(p) - V_s(y)``."""
    s = _check_s(s)
    _reg(F)
    p_arr = np.asarray(p, dtype=float)
    out = np.array([_effective_scalar(F, s, float(q)) for q in np.ravel(p_arr)])
    return float(out[0]) if p_arr.ndim == 0 else out.reshape(p_arr.shape)


# --------------------------------------------------------------------------
# correctors


@dataclass(frozen=True)
class Piece:
    x0: float
    x1: float
    branch: int
    sign: int


@dataclass(frozen=True, eq=False)
class CorrectorProfile:
    """Gradient ``f(y) = sign * psi_branch(lam + V_s(y))`` on each piece of ``[0, 1]``."""

    F: ScalarFunction
    s: float
    p: float
    lam: float
    case: int
    pieces: tuple
    tau: float | None = None
    mu: float | None = None
    reflected: bool = False
    meta: dict = field(default_factory=dict)

    @property
    def breakpoints(self) -> list[float]:
        return [pc.x0 for pc in self.pieces] + [self.pieces[-1].x1]

    def level(self, x):
        return self.lam + sawtooth(self.s)(x)

    def piece_index(self, x: np.ndarray) -> np.ndarray:
        starts = np.array([pc.x0 for pc in self.pieces])
        return np.clip(np.searchsorted(starts, x, side="right") - 1, 0, len(self.pieces) - 1)

    def __call__(self, x):
        x_arr = np.mod(np.asarray(x, dtype=float), 1.0)
        flat = np.atleast_1d(x_arr)
        idx = self.piece_index(flat)
        lev = self.level(flat)
        out = np.empty_like(flat)
        impl = self.F.impl
        for k, pc in enumerate(self.pieces):
            sel = idx == k
            if np.any(sel):
                out[sel] = pc.sign * _psi_array(impl, pc.branch, lev[sel])
        return float(out[0]) if x_arr.ndim == 0 else out.reshape(x_arr.shape)

    def one_sided(self, k: int, end: str) -> float:
        """Value of piece ``k`` at its left (``'start'``) or right (``'end'``) endpoint."""
        pc = self.pieces[k]
        x = pc.x0 if end == "start" else pc.x1
        lev = self.lam + float(sawtooth(self.s)(x))
        return pc.sign * _psi_scalar_checked(self.F.impl, pc.branch, lev)

    def to_csv(self, path, n: int = 1001) -> None:
        import json

        info = {
            "s": self.s, "p": self.p, "lambda": self.lam, "case": self.case, "tau": self.tau, "mu": self.mu,
            "reflected": self.reflected, "convention": "F(f) - V_s = lambda",
            "pieces": [[pc.x0, pc.x1, pc.branch, pc.sign] for pc in self.pieces], "F": self.F.params,
        }
        x = (np.arange(n) + 0.5) / n
        f = self(x)
        with open(path, "w") as fh:
            fh.write("# " + json.dumps(info, sort_keys=True) + "\n")
            fh.write("y,f,level\n")
            for a, b, c in zip(x, f, self.level(x)):
                fh.write(f"{a!r},{b!r},{c!r}\n")


def _mean_of_pieces(F, s, lam, pieces) -> float:
    """Exact ``int_0^1 f`` by mapping each piece to levels of ``V_s``."""
    total = 0.0
    for pc in pieces:
        # ascending part of V_s: x = s v
        a0, a1 = max(pc.x0, 0.0), min(pc.x1, s)
        if a1 > a0:
            total += pc.sign * s * level_integral(F, pc.branch, lam + a0 / s, lam + a1 / s)
        d0, d1 = max(pc.x0, s), min(pc.x1, 1.0)
        if d1 > d0:
            v_hi, v_lo = (1 - d0) / (1 - s), (1 - d1) / (1 - s)
            total += pc.sign * (1 - s) * level_integral(F, pc.branch, lam + v_lo, lam + v_hi)
    return total


def _pieces(case: int, s: float, t: float | None, lam: float) -> list[Piece]:
    if case in (1, 2):
        x = 1 - t * (1 - s)
        raw = [(0, s / 3, 3, 1), (s / 3, (1 + s) / 2, 1, 1), ((1 + s) / 2, x, 3, 1), (x, 1, 3, -1)]
    elif case == 3:
        x = 1 - t * (1 - s)
        raw = [(0, s / 3, 3, 1), (s / 3, (1 + s) / 2, 1, 1), ((1 + s) / 2, x, 2, -1), (x, 1, 3, -1)]
    elif case == 4:
        x = 1 - t * (1 - s)
        raw = [(0, s / 3, 3, 1), (s / 3, (1 + s) / 2, 1, 1), ((1 + s) / 2, x, 2, -1), (x, (2 + s) / 3, 1, -1), ((2 + s) / 3, 1, 3, -1)]
    elif case == 5:
        x = 1 - t * (1 - s)
        raw = [(0, s / 3, 3, 1), (s / 3, x, 1, 1), (x, (2 + s) / 3, 1, -1), ((2 + s) / 3, 1, 3, -1)]
    elif case == 6:
        x1, x2 = (1 - 3 * lam) * s / 3, (1 + s) / 2 + lam * (1 - s)
        raw = [(0, x1, 3, 1), (x1, x2, 1, 1), (x2, 1, 3, 1)]
    elif case == 7:
        mu = 1 - (1 - s) * (t - THIRD)
        raw = [(0, (5 + s) / 6, 1, 1), ((5 + s) / 6, mu, 3, 1), (mu, 1, 2, 1)]
    elif case == 8:
        mu = 1 - (1 - s) * (t - THIRD)
        raw = [(0, mu, 1, 1), (mu, 1, 2, 1)]
    elif case == 9:
        raw = [(0, 1, 1, 1)]
    else:
        raise InvalidArgument(f"unknown case {case}")
    return [Piece(float(a), float(b), br, sg) for a, b, br, sg in raw if b - a > 1e-15]


def case_mean(F: ScalarFunction, s: float, case: int, t: float) -> float:
    """Mean gradient of the Case ``case`` profile with parameter ``t`` (tau, or lambda in Cases 6 and 9)."""
    I = lambda b, a, c: level_integral(F, b, a, c)
    i3 = I(3, 0.0, THIRD)
    if case == 1:
        return (2 * s - 1) * I(3, 0, t) + I(3, t, THIRD) + s * I(1, THIRD, 0.5) + (1 - s) * I(3, THIRD, 0.5) + I(1, 0.5, 1)
    if case == 2:
        return (
            (2 * s - 1) * i3
            + s * I(1, THIRD, t) - (1 - s) * I(3, THIRD, t)
            + s * I(1, t, 0.5) + (1 - s) * I(3, t, 0.5)
            + I(1, 0.5, 1)
        )
    if case == 3:
        return (
            (2 * s - 1) * i3
            + s * I(1, THIRD, t) - (1 - s) * I(3, THIRD, t)
            + s * I(1, t, 0.5) - (1 - s) * I(2, t, 0.5)
            + I(1, 0.5, 1)
        )
    if case == 4:
        return (2 * s - 1) * i3 + (2 * s - 1) * I(1, THIRD, t) + s * I(1, t, 0.5) - (1 - s) * I(2, t, 0.5) + I(1, 0.5, 1)
    if case == 5:
        return (2 * s - 1) * i3 + (2 * s - 1) * I(1, THIRD, t) + I(1, t, 1)
    if case == 6:
        return I(3, t, THIRD) + I(1, 0.5, 1 + t) + s * I(1, THIRD, 0.5) + (1 - s) * I(3, THIRD, 0.5)
    if case == 7:
        return s * I(1, THIRD, t) + (1 - s) * I(2, THIRD, t) + s * I(1, t, 0.5) + (1 - s) * I(3, t, 0.5) + I(1, 0.5, 4 / 3)
    if case == 8:
        return s * I(1, THIRD, t) + (1 - s) * I(2, THIRD, t) + I(1, t, 4 / 3)
    if case == 9:
        return I(1, t, 1 + t)
    raise InvalidArgument(f"unknown case {case}")


CASE_PARAM_RANGE = {
    1: (0.0, THIRD), 2: (THIRD, 0.5), 3: (THIRD, 0.5), 4: (THIRD, 0.5),
    5: (0.5, 1.0), 6: (0.0, THIRD), 7: (THIRD, 0.5), 8: (THIRD, 0.5),
}


def case_of(F: ScalarFunction, s: float, p: float) -> int:
    """Case number (1-9) for ``p >= p0(s)``."""
    th = thresholds(F, s)
    if p < th["p0"] - 1e-12:
        raise InvalidArgument("p lies below p0(s); reduce with the (1-s, -p) symmetry")
    for case, key in ((5, "p4"), (4, "p3"), (3, "p2"), (2, "p1"), (1, "p_plus"), (6, "q_minus"), (7, "q1"), (8, "q_plus")):
        if p <= th[key]:
            return case
    return 9


def corrector_Hs(F: ScalarFunction, s: float, p: float, reduce: bool = False) -> CorrectorProfile:
    """Explicit corrector gradient for ``F(w') - V_s = H_s(p)`` with mean ``p``.

    For ``p < p0(s)`` pass ``reduce=True`` to build the profile for ``(1-s, -p)``
    and reflect it through ``y -> 1 - y``.
    """
    s = _check_s(s)
    _reg(F)
    th = thresholds(F, s)
    if p < th["p0"] - 1e-12:
        if not reduce:
            raise InvalidArgument("p lies below p0(s); use reduce=True")
        base = corrector_Hs(F, 1 - s, -p)
        pieces = tuple(Piece(1 - pc.x1, 1 - pc.x0, pc.branch, -pc.sign) for pc in reversed(base.pieces))
        return CorrectorProfile(F, s, p, base.lam, base.case, pieces, base.tau, base.mu, True)
    case = case_of(F, s, p)
    tau = mu = None
    if case == 9:
        lam = _lambda_case9(F, p)
        t = lam
    elif case == 6:
        lam = _lambda_case6(F, s, p)
        t = lam
    else:
        lam = 0.0 if case <= 5 else THIRD
        a, b = CASE_PARAM_RANGE[case]
        t = _solve_monotone(lambda x: case_mean(F, s, case, x) - p, a, b, f"corrector case {case}")
        tau = t
        if case in (7, 8):
            mu = 1 - (1 - s) * (t - THIRD)
    pieces = tuple(_pieces(case, s, t, lam))
    return CorrectorProfile(F, s, float(p), float(lam), case, pieces, tau, mu)


# --------------------------------------------------------------------------
# verification


@dataclass
class CorrectorReport:
    ode_residual: float
    jump_admissibility: bool
    mean_gradient_error: float
    convention: str
    jumps: list

    def passed(self, tol: float = 1e-8) -> bool:
        return self.ode_residual < tol and self.mean_gradient_error < tol and self.jump_admissibility


def _range_extremum(impl: NonconvexFImpl, lo: float, hi: float, kind: str) -> float:
    xs = np.concatenate([np.linspace(lo, hi, 2001), [c for c in impl.critical_points if lo <= c <= hi]])
    vals = impl(xs)
    return float(vals.min() if kind == "min" else vals.max())


def verify_corrector(profile: CorrectorProfile, F: ScalarFunction | None = None, s: float | None = None,
                     n_points: int = 1000, tol: float = 1e-8, lam: float | None = None) -> CorrectorReport:
    """Check the cell equation, the jump conditions and the mean of a profile.

    ``lam`` is the effective value the residual is measured against; it
    defaults to the profile's own ``lam``.

    Residuals use direct evaluation of ``F``; the mean uses adaptive
    quadrature in ``y`` over each piece, independent of the level integrals.
    """
    F = profile.F if F is None else F
    s = profile.s if s is None else s
    impl = F.impl
    V = sawtooth(s)
    # interior residual on points away from breakpoints
    x = (np.arange(n_points) + 0.5) / n_points
    bps = np.array(profile.breakpoints + [s])
    far = np.min(np.abs(x[:, None] - bps[None, :]), axis=1) > 1e-9
    x = x[far]
    f = profile(x)
    Fv = impl(f)
    lam = profile.lam if lam is None else float(lam)
    res_minus = float(np.max(np.abs(Fv - V(x) - lam)))
    res_plus = float(np.max(np.abs(Fv + V(x) - lam)))
    # jumps, including the wrap-around 1 -> 0
    jumps = []
    ok = True
    npc = len(profile.pieces)
    for k in range(npc):
        left_k, right_k = k, (k + 1) % npc
        y0 = profile.pieces[k].x1 % 1.0
        p1 = profile.one_sided(left_k, "end")
        p2 = profile.one_sided(right_k, "start")
        level = profile.lam + float(V(y0))
        entry = {"y": y0, "p1": p1, "p2": p2, "level": level}
        if abs(p1 - p2) <= 1e-10:
            entry["type"] = "continuous"
        else:
            cond = abs(impl.scalar(p1) - level) <= tol and abs(impl.scalar(p2) - level) <= tol
            if p1 < p2:
                cond = cond and _range_extremum(impl, p1, p2, "min") >= level - tol
                entry["type"] = "up"
            else:
                cond = cond and _range_extremum(impl, p2, p1, "max") <= level + tol
                entry["type"] = "down"
            entry["ok"] = bool(cond)
            ok = ok and cond
        jumps.append(entry)
    # mean gradient by quadrature in y
    total = 0.0
    for pc in profile.pieces:
        cuts = sorted({pc.x0, pc.x1, *(c for c in (s,) if pc.x0 < c < pc.x1)})
        for a, b in zip(cuts[:-1], cuts[1:]):
            g = lambda y, pc=pc: pc.sign * _psi_scalar(impl, pc.branch, profile.lam + float(V(y)))
            val, _ = integrate.quad(g, a, b, epsabs=1e-13, epsrel=1e-13, limit=200)
            total += val
    mean_err = abs(total - profile.p)
    if res_minus <= tol:
        convention = "minus"
    elif res_plus <= tol:
        convention = "plus"
    else:
        convention = "none"
    return CorrectorReport(res_minus, ok, mean_err, convention, jumps)


# --------------------------------------------------------------------------
# derived quantities


def nonconvex_relations(F: ScalarFunction, s: float, p) -> dict:
    """Walsh coefficients of the two-noise cube ``F(p) xi^1 + V_s(y) xi^2``."""
    hs = effective_Hs(F, s, p)
    h1s = effective_Hs(F, 1 - s, p)
    zero = 0.0 * np.asarray(hs)
    return {
        "H0": zero + 0.0,
        "H1": (np.asarray(hs) + np.asarray(h1s) + 1) / 2,
        "H2": zero + 0.5,
        "H12": (np.asarray(h1s) - np.asarray(hs)) / 2,
    }


def ballistic_constant(F: ScalarFunction, s: float, p0: float) -> float:
    """Drift ``(H_{1-s}(p0) - H_s(p0)) / 2`` of the centred single-noise problem."""
    return float((effective_Hs(F, 1 - s, p0) - effective_Hs(F, s, p0)) / 2)
