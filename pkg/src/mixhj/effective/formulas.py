"""Closed-form effective Hamiltonians for separable one-dimensional examples.

``simplecell`` gives the effective Hamiltonian of ``|p| + F(y)``.  The
two-noise example ``|p| xi^1 + f(y) xi^2`` and the correlated three-sign
variant have piecewise-linear Walsh coefficients, evaluated here by regime.
"""

from __future__ import annotations

import numpy as np

from ..errors import InvalidArgument
from ..hamiltonians import ScalarFunction

__all__ = ["simplecell", "skew", "onedexample_formulas", "fourpath_formulas"]


def simplecell(F: ScalarFunction, p):
    """``max(max F, |p| + <F>)``, the effective Hamiltonian of ``|p| + F(y)``."""
    mx, _, mean = F.stats()
    out = np.maximum(mx, np.abs(np.asarray(p, dtype=float)) + mean)
    return float(out) if out.ndim == 0 else out


def skew(f: ScalarFunction) -> str:
    """``up`` when ``max f - <f> < <f> - min f``, ``down`` when reversed, else ``balanced``."""
    mx, mn, g = f.stats()
    a, b = mx - g, g - mn
    if np.isclose(a, b, rtol=0, atol=1e-14):
        return "balanced"
    return "up" if a < b else "down"


def onedexample_formulas(f: ScalarFunction, p):
    """Walsh coefficients ``(H1, H2)`` of the cube ``+-|p| +- f(y)``."""
    mx, mn, g = f.stats()
    P = np.abs(np.asarray(p, dtype=float))
    first1, first2 = (mx - mn) / 2, (mx + mn) / 2
    if skew(f) in ("up", "balanced"):
        lo, hi = mx - g, g - mn
        mid1 = (P + g - mn) / 2
        mid2 = (P + g + mn) / 2
    else:
        lo, hi = g - mn, mx - g
        mid1 = (mx + P - g) / 2
        mid2 = (mx - P + g) / 2
    H1 = np.where(P <= lo, first1, np.where(P <= hi, mid1, P))
    H2 = np.where(P <= lo, first2, np.where(P <= hi, mid2, g))
    if np.ndim(H1) == 0:
        return float(H1), float(H2)
    return H1, H2


def fourpath_formulas(f: ScalarFunction, a: float, b: float, p, relaxed: bool = False) -> dict:
    """Walsh coefficients on subsets {0}, {1}, {2}, {0,1,2} for the correlated pair.

    The cube is ``X |p| + ((a+b)/2 Y + (a-b)/2 Z) f(y)`` over ``(X, Y, Z)``.
    ``relaxed`` admits ``a = b = 1``.
    """
    mx, mn, g = f.stats()
    ok = 0 < b < a and abs(a * a + b * b - 2) <= 1e-12 and a * (mx - g) < b * (g - mn)
    if relaxed:
        ok = ok or (a == b == 1.0 and (mx - g) <= (g - mn))
    if not ok:
        raise InvalidArgument("need 0 < b < a, a^2 + b^2 = 2 and a(max f - <f>) < b(<f> - min f)")
    P = np.abs(np.asarray(p, dtype=float))
    r = [b * (mx - g), a * (mx - g), b * (g - mn), a * (g - mn)]

    def pick(rows):
        out = rows[4]
        for k in (3, 2, 1, 0):
            out = np.where(P <= r[k], rows[k], out)
        return out

    H1 = pick([
        (a + b) / 4 * (mx - mn) + 0 * P,
        P / 4 + a / 4 * (mx - mn) + b / 4 * (g - mn),
        P / 2 + (a + b) / 4 * (g - mn),
        3 * P / 4 + a / 4 * (g - mn),
        P,
    ])
    H2 = pick([
        (a + b) / 4 * (mx + mn) + 0 * P,
        P / 4 + a / 4 * (mx + mn) + b / 4 * (g + mn),
        P / 2 + (a + b) / 4 * (g + mn),
        P / 4 + a / 4 * (g + mn) + b / 2 * g,
        (a + b) / 2 * g + 0 * P,
    ])
    H3 = pick([
        (a - b) / 4 * (mx + mn) + 0 * P,
        -P / 4 + a / 4 * (mx + mn) - b / 4 * (g + mn),
        (a - b) / 4 * (g + mn) + 0 * P,
        P / 4 + a / 4 * (g + mn) - b / 2 * g,
        (a - b) / 2 * g + 0 * P,
    ])
    H123 = pick([
        (a - b) / 4 * (mx - mn) + 0 * P,
        -P / 4 + a / 4 * (mx - mn) - b / 4 * (g - mn),
        (a - b) / 4 * (g - mn) + 0 * P,
        -P / 4 + a / 4 * (g - mn),
        0 * P,
    ])
    out = {"H_1": H1, "H_2": H2, "H_3": H3, "H_123": H123}
    if np.ndim(P) == 0:
        out = {k: float(v) for k, v in out.items()}
    return out
