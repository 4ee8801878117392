"""Adaptive Simpson quadrature.

Recursive interval halving with the standard Richardson correction: a
panel is accepted when the two-half Simpson sum differs from the whole
panel estimate by at most 15 times the local tolerance, and the error
estimate delta/15 is added back so accepted panels carry an extra order
of accuracy. Known breakpoints (for example the branch point of a
piecewise integrand) are inserted as panel boundaries so the refinement
never straddles a kink.
"""

from __future__ import annotations

import math
from typing import Callable, Iterable

from .errors import DomainError, NumericalError

DEFAULT_TOL = 1e-10
DEFAULT_MAX_DEPTH = 50


def _simpson(a: float, fa: float, m: float, fm: float, b: float, fb: float) -> float:
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb)


def _adapt(
    f: Callable[[float], float],
    a: float,
    fa: float,
    b: float,
    fb: float,
    m: float,
    fm: float,
    whole: float,
    tol: float,
    depth: int,
    max_depth: int,
) -> float:
    lm = 0.5 * (a + m)
    rm = 0.5 * (m + b)
    flm = f(lm)
    frm = f(rm)
    left = _simpson(a, fa, lm, flm, m, fm)
    right = _simpson(m, fm, rm, frm, b, fb)
    delta = left + right - whole
    if abs(delta) <= 15.0 * tol:
        return left + right + delta / 15.0
    if depth >= max_depth:
        raise NumericalError(
            f"adaptive Simpson did not converge on [{a}, {b}] "
            f"after depth {max_depth} (residual {abs(delta) / 15.0:.3e}, tol {tol:.3e})"
        )
    half = 0.5 * tol
    return _adapt(f, a, fa, m, fm, lm, flm, left, half, depth + 1, max_depth) + _adapt(
        f, m, fm, b, fb, rm, frm, right, half, depth + 1, max_depth
    )


def adaptive_simpson(
    f: Callable[[float], float],
    a: float,
    b: float,
    *,
    tol: float = DEFAULT_TOL,
    max_depth: int = DEFAULT_MAX_DEPTH,
    breakpoints: Iterable[float] = (),
) -> float:
    """Integrate f over [a, b] to absolute tolerance tol.

    Interior breakpoints are used as initial panel boundaries; the
    tolerance is apportioned to panels by width. Raises NumericalError
    if any panel fails to converge within max_depth halvings.
    """
    if not (tol > 0.0):
        raise DomainError(f"tol must be positive, got {tol}")
    if max_depth < 1:
        raise DomainError(f"max_depth must be at least 1, got {max_depth}")
    a = float(a)
    b = float(b)
    if not (math.isfinite(a) and math.isfinite(b)):
        raise DomainError(f"integration limits must be finite, got [{a}, {b}]")
    if a == b:
        return 0.0
    sign = 1.0
    if b < a:
        a, b = b, a
        sign = -1.0

    cuts = sorted({float(x) for x in breakpoints if a < float(x) < b})
    edges = [a, *cuts, b]
    width = b - a
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        flo = float(f(lo))
        fhi = float(f(hi))
        mid = 0.5 * (lo + hi)
        fmid = float(f(mid))
        whole = _simpson(lo, flo, mid, fmid, hi, fhi)
        panel_tol = tol * (hi - lo) / width
        total += _adapt(f, lo, flo, hi, fhi, mid, fmid, whole, panel_tol, 0, max_depth)
    return sign * total
