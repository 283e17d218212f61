"""Exact string counts of <W, L> by weight, and capacity estimates from them.

Counting happens on a rational grid ``u, 2u, ..., Tu``.  Weights that are
irrational or off the grid are refused rather than approximated.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import TextIO

from .system import ConstrainedSystem, RunLengthSet


class GridError(ValueError):
    """A run length does not lie on the counting grid."""


@dataclass(frozen=True)
class WeightGrid:
    unit: Fraction
    max_index: int

    def __post_init__(self):
        object.__setattr__(self, "unit", Fraction(self.unit))
        if self.unit <= 0:
            raise ValueError("grid unit must be positive")
        if self.max_index < 1:
            raise ValueError("grid needs at least one point")

    @property
    def max_weight(self) -> Fraction:
        return self.unit * self.max_index

    def weight(self, n: int) -> Fraction:
        return self.unit * n


def _grid_weights(W: RunLengthSet, bound: Fraction) -> list[Fraction]:
    out = []
    for w in W.weights_upto(bound):
        if not w.is_rational:
            raise GridError(f"run length {w} is irrational; exact enumeration needs rational weights")
        if w.rational <= bound:
            out.append(w.rational)
    return out


def grid_for(sys: ConstrainedSystem, max_weight) -> WeightGrid:
    """Coarsest grid containing every run length up to ``max_weight``."""
    bound = Fraction(max_weight)
    ws = _grid_weights(sys.runs, bound)
    if not ws:
        raise GridError(f"no run length is <= {max_weight}")
    den = math.lcm(*(w.denominator for w in ws))
    unit = Fraction(math.gcd(*(int(w * den) for w in ws)), den)
    return WeightGrid(unit, int(bound / unit))


@dataclass(frozen=True)
class CountTable:
    """``counts[n-1]`` is the number of strings of weight ``n * unit``."""

    grid: WeightGrid
    counts: tuple
    cumulative: tuple

    def count(self, n: int) -> int:
        return self.counts[n - 1]

    def rows(self):
        for n, (c, cum) in enumerate(zip(self.counts, self.cumulative), start=1):
            yield self.grid.weight(n), c, cum


def count_strings(sys: ConstrainedSystem, grid: WeightGrid) -> CountTable:
    """Count strings of every grid weight by dynamic programming over the last run.

    With ``T(n)`` the number of run compositions of weight ``n u`` weighted by
    ``(m-1)^(runs-1)``::

        T(n) = [n u in W] + (m-1) * sum_{nu in W, nu < n u} T(n - nu/u)

    and the string count is ``m T(n)``.
    """
    u, T, m = grid.unit, grid.max_index, sys.m
    steps = []
    for w in _grid_weights(sys.runs, grid.max_weight):
        k = w / u
        if k.denominator != 1:
            raise GridError(f"run length {w} is not a multiple of the grid unit {u}")
        steps.append(int(k))
    direct = set(steps)

    t = [0] * (T + 1)
    for n in range(1, T + 1):
        acc = 0
        for j in steps:
            if j >= n:
                break
            acc += t[n - j]
        t[n] = (1 if n in direct else 0) + (m - 1) * acc

    counts = tuple(m * x for x in t[1:])
    cumulative = []
    total = 0
    for c in counts:
        total += c
        cumulative.append(total)
    return CountTable(grid, counts, tuple(cumulative))


def estimate_capacity_from_counts(table: CountTable, grid: WeightGrid | None = None):
    """``ln(sum_{i<=k} N(nu_i)) / nu_k`` at every occupied grid weight ``nu_k``."""
    grid = grid or table.grid
    return [
        (grid.weight(n), math.log(cum) / float(grid.weight(n)))
        for n, (c, cum) in enumerate(zip(table.counts, table.cumulative), start=1)
        if c > 0
    ]


def count_delta_window(sys: ConstrainedSystem, grid: WeightGrid, delta, table: CountTable | None = None):
    """``N_delta(T)``: strings with ``w <= T`` and ``T - w < delta``, for every grid ``T``."""
    delta = Fraction(delta)
    if delta < grid.unit:
        raise ValueError(f"delta {delta} is below the grid unit {grid.unit}")
    table = table or count_strings(sys, grid)
    width = delta / grid.unit
    out = []
    for n in range(1, grid.max_index + 1):
        first = max(1, math.floor(n - width) + 1)
        lo = table.cumulative[first - 2] if first >= 2 else 0
        out.append((grid.weight(n), table.cumulative[n - 1] - lo))
    return out


def delta_capacity_estimates(window, table: CountTable):
    """``ln N_delta(nu_k) / nu_k`` at the occupied grid weights."""
    return [
        (T, math.log(nd) / float(T))
        for (T, nd), c in zip(window, table.counts)
        if c > 0
    ]


def write_counts_csv(table: CountTable, fh: TextIO, window=None) -> None:
    """Rows ``weight,count,cumulative,estimate`` (plus windowed columns if given)."""
    writer = csv.writer(fh, lineterminator="\n")
    header = ["weight", "count", "cumulative", "estimate"]
    if window is not None:
        header += ["n_delta", "c_delta"]
    writer.writerow(header)
    for i, (w, c, cum) in enumerate(table.rows()):
        est = math.log(cum) / float(w) if cum > 0 else ""
        row = [str(w), c, cum, f"{est:.12g}" if est != "" else ""]
        if window is not None:
            nd = window[i][1]
            row += [nd, f"{math.log(nd) / float(w):.12g}" if nd > 0 else ""]
        writer.writerow(row)
