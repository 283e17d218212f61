"""Certified evaluation of run-length generating functions on the real axis.

Three series are provided:

* ``G_W(s) = sum_{nu in W} exp(-nu s)``, the run-length series;
* the system series ``m g / (1 - (m-1) g)`` with ``g = G_W(s)``;
* the support series ``(m-1) g^2 / (1 - (m-2) g)`` of blocks that open with
  an anchor-labelled run followed only by non-anchor runs.

Every evaluation returns a :class:`SeriesValue` whose interval
``[value, value + tail_bound]`` contains the true sum.  ``tail_bound``
accounts for truncation only; floating-point rounding (a few ulps) is not
included.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .system import Arithmetic, ConstrainedSystem, Explicit, FiniteUnion, Geometric, RunLengthSet

DEFAULT_TOL = 1e-12
MAX_TERMS = 10**6
# 1 - (m-1) g below this is indistinguishable from the pole in double precision
POLE_GUARD = 1e-14


class SeriesDivergenceError(ArithmeticError):
    """The series does not converge at the requested point."""


class SeriesToleranceError(ArithmeticError):
    """The tail could not be pushed below ``tol`` within ``MAX_TERMS`` terms."""


@dataclass(frozen=True)
class SeriesValue:
    value: float
    tail_bound: float = 0.0
    terms_used: int = 0  # 0 for closed forms

    @property
    def upper(self) -> float:
        return self.value + self.tail_bound

    def __add__(self, other: SeriesValue) -> SeriesValue:
        return SeriesValue(self.value + other.value, self.tail_bound + other.tail_bound,
                           self.terms_used + other.terms_used)


def _check_domain(W: RunLengthSet, s: float, tol: float) -> None:
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol}")
    if not s > W.abscissa:
        raise SeriesDivergenceError(
            f"series over run lengths diverges at s={s} (abscissa of convergence {W.abscissa})")


def eval_gw(W: RunLengthSet, s: float, tol: float = DEFAULT_TOL) -> SeriesValue:
    """Evaluate ``G_W(s)``; the result underestimates with ``tail_bound <= tol``."""
    _check_domain(W, s, tol)
    if isinstance(W, Explicit):
        return SeriesValue(math.fsum(math.exp(-w.value * s) for w in W.weights), 0.0, len(W))
    if isinstance(W, Arithmetic):
        a, d = W.first.value, W.step.value
        return SeriesValue(math.exp(-a * s) / -math.expm1(-d * s))
    if isinstance(W, Geometric):
        return _geometric_sum(W, s, tol, moment=0)
    if isinstance(W, FiniteUnion):
        share = tol / len(W.parts)
        out = SeriesValue(0.0)
        for p in W.parts:
            out = out + eval_gw(p, s, share)
        return out
    raise TypeError(f"unsupported run-length set {type(W).__name__}")


def eval_gw_derivative(W: RunLengthSet, s: float, tol: float = DEFAULT_TOL) -> SeriesValue:
    """Evaluate ``dG_W/ds = -sum nu exp(-nu s)``.

    As with :func:`eval_gw` the true derivative lies in
    ``[value, value + tail_bound]``, so for truncated families ``value`` is the
    negated partial sum minus the tail bound.
    """
    _check_domain(W, s, tol)
    if isinstance(W, Explicit):
        return SeriesValue(-math.fsum(w.value * math.exp(-w.value * s) for w in W.weights),
                           0.0, len(W))
    if isinstance(W, Arithmetic):
        a, d = W.first.value, W.step.value
        x, y1 = math.exp(-a * s), -math.expm1(-d * s)  # y1 = 1 - exp(-d s)
        return SeriesValue(-x * (a * y1 + d * (1.0 - y1)) / (y1 * y1))
    if isinstance(W, Geometric):
        part = _geometric_sum(W, s, tol, moment=1)
        return SeriesValue(-part.value - part.tail_bound, part.tail_bound, part.terms_used)
    if isinstance(W, FiniteUnion):
        share = tol / len(W.parts)
        out = SeriesValue(0.0)
        for p in W.parts:
            out = out + eval_gw_derivative(p, s, share)
        return out
    raise TypeError(f"unsupported run-length set {type(W).__name__}")


def _geometric_sum(W: Geometric, s: float, tol: float, moment: int) -> SeriesValue:
    """Partial sum of ``nu**moment * exp(-nu s)`` over ``a xi^k`` plus a certified tail.

    For k > K, ``xi^k >= xi^(K+1) (1 + (xi-1)(k-K-1))`` (Bernoulli), so the
    omitted terms are dominated by a geometric (moment 0) or
    arithmetico-geometric (moment 1) series starting at ``b = a xi^(K+1)``.
    The moment-1 bound needs ``b >= 1/s`` where ``nu exp(-nu s)`` decreases.
    """
    a, xi = W.first.value, float(W.ratio)
    terms = []
    nu = a
    for k in range(MAX_TERMS):
        terms.append(nu**moment * math.exp(-nu * s))
        b = nu * xi  # first omitted weight
        c = b * (xi - 1.0)
        one_minus_r = -math.expm1(-s * c)
        lead = math.exp(-s * b)
        if one_minus_r == 0.0:
            tail = math.inf
        elif moment == 0:
            tail = lead / one_minus_r
        elif b * s >= 1.0:
            tail = lead * (b / one_minus_r + c * (1.0 - one_minus_r) / one_minus_r**2)
        else:
            tail = math.inf
        if tail <= tol:
            return SeriesValue(math.fsum(terms), tail, k + 1)
        nu = b
    raise SeriesToleranceError(f"tail above {tol} after {MAX_TERMS} terms at s={s}")


def _gw_interval(W: RunLengthSet, s: float, tol: float) -> tuple[float, float]:
    g = eval_gw(W, s, tol)
    return g.value, g.upper


def eval_system_gf(sys: ConstrainedSystem, s: float, tol: float = DEFAULT_TOL) -> SeriesValue:
    """Generating function of all strings of ``<W, L>``: ``m g / (1 - (m-1) g)``."""
    m = sys.m
    g_lo, g_hi = _gw_interval(sys.runs, s, tol)
    if 1.0 - (m - 1) * g_hi <= POLE_GUARD:
        raise SeriesDivergenceError(
            f"beyond abscissa: (m-1) G_W(s) = {(m - 1) * g_lo:.17g} >= 1 at s={s}; "
            "the system series diverges for s <= capacity")

    def f(g):
        return m * g / (1.0 - (m - 1) * g)

    lo = f(g_lo)
    return SeriesValue(lo, f(g_hi) - lo)


def eval_support_gf(sys: ConstrainedSystem, s: float, tol: float = DEFAULT_TOL) -> SeriesValue:
    """Generating function of the block support: ``g (m-1) g / (1 - (m-2) g)``."""
    m = sys.m
    g_lo, g_hi = _gw_interval(sys.runs, s, tol)
    if (m - 2) * g_hi >= 1.0 - POLE_GUARD:
        raise SeriesDivergenceError(
            f"support series diverges: (m-2) G_W(s) = {(m - 2) * g_lo:.17g} >= 1 at s={s}")

    def f(g):
        return g * (m - 1) * g / (1.0 - (m - 2) * g)

    lo = f(g_lo)
    return SeriesValue(lo, f(g_hi) - lo)
