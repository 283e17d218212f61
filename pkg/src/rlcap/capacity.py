"""Combinatorial capacity of <W, L> as the root of (m-1) G_W(s) = 1."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .genfun import eval_gw, eval_gw_derivative
from .system import ConstrainedSystem

DEFAULT_TOL = 1e-10
MAX_DOUBLINGS = 1100
NEWTON_STEPS = 5


class CapacityError(ArithmeticError):
    pass


@dataclass(frozen=True)
class CapacityResult:
    capacity: float  # nats per unit weight
    bracket: tuple[float, float]
    residual: float
    residual_tol: float
    degenerate: bool = False

    @property
    def bits(self) -> float:
        return self.capacity / math.log(2.0)


def _F(sys: ConstrainedSystem, s: float, tol: float) -> float:
    g = eval_gw(sys.runs, s, tol)
    return (sys.m - 1) * (g.value + 0.5 * g.tail_bound) - 1.0


def _dF(sys: ConstrainedSystem, s: float, tol: float) -> float:
    d = eval_gw_derivative(sys.runs, s, tol)
    return (sys.m - 1) * (d.value + 0.5 * d.tail_bound)


def solve_capacity(sys: ConstrainedSystem, tol: float = DEFAULT_TOL) -> CapacityResult:
    """Bisect ``F(s) = (m-1) G_W(s) - 1`` to width ``tol``, then polish with Newton.

    ``F`` is continuous and strictly decreasing above the abscissa of ``G_W``.
    For a single run length with two labels ``F(0) = 0`` and the result is
    flagged degenerate with capacity 0.
    """
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol}")
    W, m = sys.runs, sys.m
    stol = tol / 100

    lo = 0.0
    if W.is_finite:
        f0 = _F(sys, 0.0, stol)
        if f0 == 0.0:
            return CapacityResult(0.0, (0.0, 0.0), 0.0, 0.0, degenerate=True)
        if f0 < 0:  # impossible for m >= 2 and nonempty W
            raise CapacityError(f"F(0) = {f0} < 0; no nonnegative root")

    hi = 1.0
    for _ in range(MAX_DOUBLINGS):
        if _F(sys, hi, stol) < 0:
            break
        lo, hi = hi, 2 * hi
    else:
        raise CapacityError("could not bracket the capacity: (m-1) G_W(s) stays >= 1")

    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if _F(sys, mid, stol) > 0:
            lo = mid
        else:
            hi = mid

    s = 0.5 * (lo + hi)
    for _ in range(NEWTON_STEPS):
        f = _F(sys, s, stol)
        if f == 0.0:
            break
        if f > 0:
            lo = max(lo, s)
        else:
            hi = min(hi, s)
        step = f / _dF(sys, s, stol)
        nxt = s - step
        if not lo <= nxt <= hi or nxt == s:
            break
        s = nxt

    residual = abs(_F(sys, s, stol))
    slope = abs(_dF(sys, s, stol))
    residual_tol = slope * (hi - lo) + (m - 1) * stol + 8 * math.ulp(1.0)
    return CapacityResult(s, (lo, hi), residual, residual_tol)


def capacity_residual_certificate(sys: ConstrainedSystem, c: float, tol: float = 1e-12) -> float:
    """``(m-1) G_W(c) - 1``, certified in sign when nonzero.

    The series interval gives ``F`` in ``[lo, lo + (m-1) tol]`` and ``lo`` is
    returned.  A positive return certifies ``c`` below the capacity.  A return
    below ``-(m-1) tol`` certifies ``c`` above it; anything in between is a
    root to within the tolerance.
    """
    if c < 0:
        raise ValueError("capacity candidates are nonnegative")
    W, m = sys.runs, sys.m
    if c == 0.0 and not W.is_finite:
        return math.inf
    g = eval_gw(W, c, tol)
    return (m - 1) * g.value - 1.0
