"""Acceptance criteria, one test per criterion.

Each test records a single PASS/FAIL line (see ``conftest.py``), shown in the
terminal summary under "acceptance criteria".
"""

import math
import sys as _sys
import time

import mpmath
import numpy as np

from rlcap.capacity import solve_capacity
from rlcap.enumeration import (
    count_delta_window,
    count_strings,
    delta_capacity_estimates,
    estimate_capacity_from_counts,
    grid_for,
)
from rlcap.genfun import eval_gw, eval_gw_derivative, eval_support_gf, eval_system_gf
from rlcap.maxent import (
    NORMALIZATION_TOL,
    SupportTooLargeError,
    build_maxent,
    canonical_support,
    entropy_rate_iid,
    markov_maxent_rate,
    monte_carlo_rate,
    validate_support,
)
from rlcap.system import Geometric, RunString, Weight
from oracles import mp_gw
from systems import (
    DEGENERATE,
    FIB,
    GRID_FIXTURES,
    LN2,
    LN_PHI,
    NATURALS,
    NONDEGENERATE,
    PI_SYSTEM,
    SINGLE_TERNARY,
    random_system,
)

EPS = _sys.float_info.epsilon


# -- 1 ------------------------------------------------------------------------


def test_criterion_1_closed_forms(verdict):
    worst_err, worst_ms, ok = 0.0, 0.0, True
    for sys, expected in [(NATURALS, LN2), (SINGLE_TERNARY, LN2), (FIB, LN_PHI)]:
        t0 = time.perf_counter()
        r = solve_capacity(sys)
        ms = 1e3 * (time.perf_counter() - t0)
        err = abs(r.capacity - expected)
        ok &= err <= 1e-9 and ms < 10 and not r.degenerate
        worst_err, worst_ms = max(worst_err, err), max(worst_ms, ms)
    t0 = time.perf_counter()
    r = solve_capacity(DEGENERATE)
    ms = 1e3 * (time.perf_counter() - t0)
    ok &= r.capacity == 0 and r.degenerate and ms < 10
    worst_ms = max(worst_ms, ms)
    assert verdict(1, ok, f"max |C - closed form| = {worst_err:.2e} (<= 1e-9), degenerate flagged, "
                          f"slowest {worst_ms:.2f} ms (< 10 ms)")


# -- 2 ------------------------------------------------------------------------

# recorded envelopes (nats), trailing 10 grid points ending at 200 grid units
ENVELOPES = {"fib": 0.02, "naturals": 0.01, "single_ternary": 0.01, "async2": 0.01,
             "ternary123": 0.01, "half_step": 0.015, "degenerate": 0.04}
GRID_UNITS = 200


def test_criterion_2_solver_oracle_agreement(verdict):
    fixtures = dict(GRID_FIXTURES, degenerate=DEGENERATE)
    ok, notes = True, []
    for name, sys in fixtures.items():
        C = solve_capacity(sys).capacity
        grid = grid_for(sys, GRID_UNITS * grid_for(sys, GRID_UNITS).unit)
        t0 = time.perf_counter()
        table = count_strings(sys, grid)
        dt = time.perf_counter() - t0
        est = estimate_capacity_from_counts(table)
        dev = max(abs(e - C) for _, e in est[-10:])
        last = abs(est[-1][1] - C)
        good = grid.max_index >= 60 and dt < 1 and last <= ENVELOPES[name] and dev <= ENVELOPES[name]
        ok &= good
        notes.append(f"{name} {dev:.4f}/{ENVELOPES[name]}")
    assert verdict(2, ok, "trailing-10 deviation/envelope: " + ", ".join(notes))


# -- 3 ------------------------------------------------------------------------


def test_criterion_3_support_series_at_capacity(verdict):
    rng = np.random.default_rng(2010)
    systems = [random_system(rng) for _ in range(100)]
    t0 = time.perf_counter()
    worst = 0.0
    for sys in systems:
        C = solve_capacity(sys).capacity
        worst = max(worst, abs(eval_support_gf(sys, C).value - 1))
    dt = time.perf_counter() - t0
    ok = worst <= 1e-6 and dt < 5
    assert verdict(3, ok, f"100 random systems: max |G_Y(C) - 1| = {worst:.2e} (<= 1e-6), {dt:.2f} s (< 5 s)")


# -- 4 ------------------------------------------------------------------------


def test_criterion_4_probabilistic_capacity(verdict):
    t0 = time.perf_counter()
    worst_iid = worst_markov = worst_mc = 0.0
    ok = True
    for i, (name, sys) in enumerate(NONDEGENERATE.items()):
        p = build_maxent(sys)
        C = solve_capacity(sys).capacity
        d_iid = abs(entropy_rate_iid(p) - C)
        d_markov = abs(markov_maxent_rate(sys) - C)
        mc = monte_carlo_rate(p, 10**6, np.random.default_rng(1000 + i))
        # sample sigma is at rounding level because -ln p = C w per block;
        # the floor is the tolerance to which the process is normalised
        ok &= d_iid <= 1e-6 and d_markov <= 1e-6 and mc.within(C, 4, NORMALIZATION_TOL * C)
        worst_iid, worst_markov = max(worst_iid, d_iid), max(worst_markov, d_markov)
        worst_mc = max(worst_mc, abs(mc.rate - C))
    dt = time.perf_counter() - t0
    ok &= dt < 30
    assert verdict(4, ok, f"{len(NONDEGENERATE)} fixtures incl. xi=2: |iid - C| <= {worst_iid:.1e}, "
                          f"|markov - C| <= {worst_markov:.1e}, 1e6-block MC |rate - C| <= {worst_mc:.1e} "
                          f"(4 sigma, floor 1e-9 C), {dt:.1f} s (< 30 s)")


# -- 5 ------------------------------------------------------------------------


def _small_canonical_support(sys, max_blocks=15):
    """Canonical support truncated at the largest weight giving at most ``max_blocks`` blocks."""
    ws = sys.runs.weights_upto(64 * sys.runs.min_weight.value)
    sums = sorted({(a.value + b.value) for a in ws for b in ws})
    best = None
    for bound in sums:
        try:
            cand = canonical_support(sys, None, bound, limit=max_blocks)
        except SupportTooLargeError:
            break
        best = cand
    return best


def test_criterion_5_validator(verdict):
    pi = Weight.symbol("pi")
    r = RunString([("red", pi)])
    rep1 = validate_support([r], PI_SYSTEM, depth=2)
    closure_ok = (not rep1.closed) and any(s.weight == pi.scale(2) for _, s in rep1.closure_violations)
    r1, r2 = RunString([("red", 1)]), RunString([("red", 2)])
    rep2 = validate_support([r1, r2], PI_SYSTEM, depth=2)
    ambig_ok = (not rep2.unambiguous) and any(s == r2 and {a, b} == {(0, 0), (1,)}
                                              for a, b, s in rep2.ambiguities)
    rng = np.random.default_rng(5)
    passed, sizes = 0, []
    for _ in range(20):
        sys = random_system(rng)
        cand = _small_canonical_support(sys)
        sizes.append(len(cand))
        passed += validate_support(cand, sys, depth=3).valid
    ok = closure_ok and ambig_ok and passed == 20
    assert verdict(5, ok, f"closure witness {rep1.lines([r])[0]!r}; ambiguity witness "
                          f"{next(ln for ln in rep2.lines([r1, r2]) if ln.startswith('ambiguity'))!r}; canonical supports valid at K=3: {passed}/20 "
                          f"(sizes {min(sizes)}..{max(sizes)})")


# -- 6 ------------------------------------------------------------------------


def test_criterion_6_delta_capacity(verdict):
    grid = grid_for(FIB, 200)
    table = count_strings(FIB, grid)
    est = estimate_capacity_from_counts(table)[-1][1]
    diffs = {}
    for delta in (1, 2):
        cd = delta_capacity_estimates(count_delta_window(FIB, grid, delta, table), table)[-1][1]
        diffs[delta] = abs(cd - est)
    ok = all(d < 0.02 for d in diffs.values())
    assert verdict(6, ok, "at weight 200: " + ", ".join(f"|C_delta - estimate| = {d:.4f} (delta={k})"
                                                         for k, d in diffs.items()) + " (< 0.02)")


# -- 7 ------------------------------------------------------------------------


def _reference(kind, sys, s, terms):
    """Extended-precision value; geometric parts get 4x the evaluator's term count."""
    W, m = sys.runs, sys.m
    n = 4 * terms if terms and _has_geometric(W) else None
    if kind == "W":
        return mp_gw(W, s, n)
    if kind == "dW":
        return -mp_gw(W, s, n, moment=1)
    g = mp_gw(W, s, n)
    if kind == "system":
        return m * g / (1 - (m - 1) * g)
    return (m - 1) * g * g / (1 - (m - 2) * g)


def _has_geometric(W):
    parts = getattr(W, "parts", (W,))
    return any(isinstance(p, Geometric) for p in parts)


def _slack(kind, sys, value, g):
    # rounding of the double-precision evaluation, not truncation
    m = sys.m
    if kind in ("W", "dW"):
        return 64 * EPS * abs(value)
    if kind == "system":
        deriv = m / (1 - (m - 1) * g) ** 2
    else:
        deriv = (m - 1) * g * (2 - (m - 2) * g) / (1 - (m - 2) * g) ** 2
    return 64 * EPS * (abs(value) + deriv * g)


def test_criterion_7_certified_series_bounds(verdict):
    rng = np.random.default_rng(7)
    evals = {"W": lambda sys, s: eval_gw(sys.runs, s), "dW": lambda sys, s: eval_gw_derivative(sys.runs, s), "system": eval_system_gf, "support": eval_support_gf}
    failures, checked, widest = 0, 0, 0.0
    with mpmath.workdps(40):
        while checked < 1000:
            sys = random_system(rng, allow_degenerate=True)
            kind = ["W", "dW", "system", "support"][checked % 4]
            C = solve_capacity(sys).capacity
            base = max(C, 0.05)
            s = float(base * (1 + rng.uniform(0.01, 2.0))) if kind in ("system", "support") \
                else float(base * rng.uniform(0.05, 3.0))
            v = evals[kind](sys, s)
            terms = eval_gw(sys.runs, s).terms_used if kind != "dW" else v.terms_used
            ref = float(_reference(kind, sys, s, terms))
            g = eval_gw(sys.runs, s).value
            slack = _slack(kind, sys, v.value, g)
            if not (v.value - slack <= ref <= v.value + v.tail_bound + slack):
                failures += 1
            widest = max(widest, v.tail_bound)
            checked += 1
    ok = failures == 0
    assert verdict(7, ok, f"{checked} random (system, s) pairs over G_W, G_W', system and support series: "
                          f"{failures} outside [value, value + tail_bound] (largest tail_bound {widest:.1e})")
