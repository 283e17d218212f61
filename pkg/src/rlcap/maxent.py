"""Maxentropic input process of <W, L>: construction, sampling, entropy rates.

The process emits IID blocks.  A block opens with a run labelled by the
anchor, continues with a run carrying one of the other ``m - 1`` labels and
then, with probability ``(m-2)/(m-1)`` each time, appends one more run whose
label avoids both the anchor and the previous label.  Every run length is
drawn from ``q(nu) = (m-1) exp(-nu C)``.  The product of these factors is
``exp(-C w(block))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .capacity import solve_capacity
from .genfun import eval_gw, eval_gw_derivative
from .system import (
    Arithmetic,
    ConstrainedSystem,
    Explicit,
    FiniteUnion,
    Geometric,
    RunLengthSet,
    RunString,
    Weight,
    concat,
    is_member,
)

NORMALIZATION_TOL = 1e-9
# geometric-family tables stop once the omitted q-mass is below this
TABLE_TAIL = 1e-18


class DegenerateCapacityError(ValueError):
    """Capacity 0: only the two alternating strings exist and the entropy rate is 0."""


class TruncationError(ArithmeticError):
    pass


class SupportTooLargeError(ValueError):
    pass


# ---------------------------------------------------------------------------
# run-length sampler
# ---------------------------------------------------------------------------


class _TablePart:
    def __init__(self, weights: list[Weight], q: np.ndarray):
        self.weights = weights
        self.values = np.array([w.value for w in weights])
        self.mass = float(math.fsum(q))
        self.p = q / q.sum()
        self.cdf = np.cumsum(self.p)
        self.cdf[-1] = 1.0
        self.logp = np.log(self.p)
        self._index = {w: i for i, w in enumerate(weights)}

    def draw(self, rng, n):
        idx = np.searchsorted(self.cdf, rng.random(n), side="right")
        return np.minimum(idx, len(self.weights) - 1)

    def value(self, idx):
        return self.values[idx]

    def log_prob(self, idx):
        return self.logp[idx]

    def weight(self, i) -> Weight:
        return self.weights[i]

    def index_of(self, w: Weight) -> int | None:
        i = self._index.get(w)
        if i is not None:
            return i
        return next((i for i, x in enumerate(self.weights) if x.isclose(w)), None)


class _ArithmeticPart:
    """Conditional law of ``first + k step`` is geometric: ``P(k) = (1-r) r^k``."""

    def __init__(self, W: Arithmetic, C: float, m: int):
        self.W = W
        self.a, self.d = W.first.value, W.step.value
        self.log_r = -self.d * C
        self.log_1mr = math.log(-math.expm1(self.log_r))
        self.mass = (m - 1) * math.exp(-self.a * C) / -math.expm1(self.log_r)

    def draw(self, rng, n):
        u = 1.0 - rng.random(n)  # (0, 1]
        return np.floor(np.log(u) / self.log_r).astype(np.int64)

    def value(self, k):
        return self.a + k * self.d

    def log_prob(self, k):
        return self.log_1mr + k * self.log_r

    def weight(self, k) -> Weight:
        k = int(k)
        return self.W.first + self.W.step.scale(k) if k else self.W.first

    def index_of(self, w: Weight) -> int | None:
        if not self.W.contains(w):
            return None
        return round((w.value - self.a) / self.d)


def _table_for(W: RunLengthSet, C: float, m: int) -> _TablePart:
    if isinstance(W, Explicit):
        ws = list(W.weights)
    else:  # Geometric: superexponential decay keeps the table short
        ws = []
        for w in W.iter_weights():
            ws.append(w)
            if (m - 1) * math.exp(-w.value * C) * w.value < TABLE_TAIL:
                break
    q = np.array([(m - 1) * math.exp(-w.value * C) for w in ws])
    return _TablePart(ws, q)


class LengthSampler:
    """Draws run lengths from ``q``; a mixture over the components of ``W``."""

    def __init__(self, W: RunLengthSet, C: float, m: int):
        parts = W.parts if isinstance(W, FiniteUnion) else (W,)
        self.parts = []
        for p in parts:
            if isinstance(p, Arithmetic):
                self.parts.append(_ArithmeticPart(p, C, m))
            elif isinstance(p, (Explicit, Geometric)):
                self.parts.append(_table_for(p, C, m))
            else:
                raise TypeError(f"unsupported run-length set {type(p).__name__}")
        mass = np.array([p.mass for p in self.parts])
        self.mix = mass / mass.sum()
        self.mix_cdf = np.cumsum(self.mix)
        self.mix_cdf[-1] = 1.0
        self.log_mix = np.log(self.mix)

    def draw(self, rng, n: int):
        """Return ``(values, log_probs, components, indices)`` for ``n`` draws."""
        comp = np.searchsorted(self.mix_cdf, rng.random(n), side="right")
        comp = np.minimum(comp, len(self.parts) - 1)
        values = np.empty(n)
        logp = np.empty(n)
        idx = np.zeros(n, dtype=np.int64)
        for c, part in enumerate(self.parts):
            sel = comp == c
            k = int(sel.sum())
            if not k:
                continue
            i = part.draw(rng, k)
            idx[sel] = i
            values[sel] = part.value(i)
            logp[sel] = part.log_prob(i) + self.log_mix[c]
        return values, logp, comp, idx

    def weight(self, comp: int, idx: int) -> Weight:
        return self.parts[comp].weight(idx)

    def log_prob(self, w: Weight) -> float:
        for c, part in enumerate(self.parts):
            i = part.index_of(w)
            if i is not None:
                return float(part.log_prob(np.int64(i))) + float(self.log_mix[c])
        return -math.inf


# ---------------------------------------------------------------------------
# the process
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MaxentProcess:
    system: ConstrainedSystem
    capacity: float
    anchor: str
    continue_prob: float
    normalization: float  # sum of q over W, 1 up to series tolerance
    sampler: LengthSampler = field(repr=False, compare=False)

    @property
    def m(self) -> int:
        return self.system.m

    def q(self, nu) -> float:
        """Run-length PMF ``(m-1) exp(-nu C)`` (zero off ``W``)."""
        w = Weight.coerce(nu)
        if not self.system.runs.contains(w):
            return 0.0
        return (self.m - 1) * math.exp(-w.value * self.capacity)

    @property
    def other_labels(self) -> tuple:
        return tuple(x for x in self.system.labels if x != self.anchor)


def build_maxent(sys: ConstrainedSystem, anchor=None, tol: float = 1e-10) -> MaxentProcess:
    anchor = sys.labels.labels[0] if anchor is None else str(anchor)
    if anchor not in sys.labels:
        raise ValueError(f"anchor {anchor!r} is not a label of the system")
    res = solve_capacity(sys, tol)
    if res.degenerate or res.capacity <= 0:
        raise DegenerateCapacityError(
            "capacity is 0 (two labels, one run length): the only process is the "
            "deterministic alternating string with entropy rate 0")
    C, m = res.capacity, sys.m
    g = eval_gw(sys.runs, C, 1e-13)
    total = (m - 1) * (g.value + 0.5 * g.tail_bound)
    if abs(total - 1.0) > NORMALIZATION_TOL:
        raise ArithmeticError(f"run-length PMF sums to {total!r}, not 1; capacity is inconsistent")
    cp = (m - 2) / (m - 1)
    return MaxentProcess(sys, C, anchor, cp, total, LengthSampler(sys.runs, C, m))


def _rng(rng):
    return rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)


@dataclass(frozen=True)
class BlockDraws:
    """``n`` blocks in flat arrays; block ``i`` owns runs ``starts[i]:starts[i]+n_runs[i]``.

    ``labels`` indexes ``proc.system.labels``.  ``log_prob`` is per block.
    """

    n_runs: np.ndarray
    starts: np.ndarray
    values: np.ndarray
    comp: np.ndarray
    idx: np.ndarray
    labels: np.ndarray
    log_prob: np.ndarray

    @property
    def weights(self) -> np.ndarray:
        return np.add.reduceat(self.values, self.starts)


def draw_blocks(proc: MaxentProcess, n: int, rng) -> BlockDraws:
    """Draw ``n`` IID blocks at once, without rejection."""
    rng = _rng(rng)
    m, cp = proc.m, proc.continue_prob
    if cp > 0:
        n_runs = rng.geometric(1.0 - cp, size=n).astype(np.int64) + 1
    else:
        n_runs = np.full(n, 2, dtype=np.int64)
    starts = np.concatenate(([0], np.cumsum(n_runs)[:-1])).astype(np.int64)
    total = int(n_runs.sum())
    values, logp, comp, idx = proc.sampler.draw(rng, total)

    # labels as positions in ``others`` (the non-anchor labels); -1 marks the anchor
    pos = np.full(total, -1, dtype=np.int64)
    pos[starts + 1] = rng.integers(m - 1, size=n)
    for t in range(2, int(n_runs.max())):
        live = n_runs > t
        at = starts[live] + t
        j = rng.integers(m - 2, size=int(live.sum()))
        pos[at] = j + (j >= pos[at - 1])
    names = list(proc.system.labels)
    anchor_i = names.index(proc.anchor)
    others_i = np.array([i for i in range(m) if i != anchor_i], dtype=np.int64)
    labels = np.where(pos < 0, anchor_i, others_i[np.maximum(pos, 0)])

    lp = np.add.reduceat(logp, starts) - math.log(m - 1) + math.log1p(-cp)
    if cp > 0:
        lp = lp + (n_runs - 2) * math.log(cp / (m - 2))
    return BlockDraws(n_runs, starts, values, comp, idx, labels, lp)


def _blocks_of(proc: MaxentProcess, d: BlockDraws) -> list[RunString]:
    names = list(proc.system.labels)
    weight = proc.sampler.weight
    out = []
    for st, k in zip(d.starts.tolist(), d.n_runs.tolist()):
        out.append(RunString([(names[d.labels[j]], weight(int(d.comp[j]), int(d.idx[j])))
                              for j in range(st, st + k)]))
    return out


def sample_block(proc: MaxentProcess, rng) -> RunString:
    """One block of the support."""
    return _blocks_of(proc, draw_blocks(proc, 1, rng))[0]


def _label_log_prob(proc: MaxentProcess, n_runs: int) -> float:
    m, cp = proc.m, proc.continue_prob
    lp = -math.log(m - 1)
    if n_runs > 2:
        lp += (n_runs - 2) * math.log(cp / (m - 2))
    return lp + math.log1p(-cp)


def block_log_prob(proc: MaxentProcess, block: RunString) -> float:
    """Log-probability that the sampler emits ``block`` (``-inf`` off the support)."""
    runs = block.runs
    if len(runs) < 2 or runs[0][0] != proc.anchor:
        return -math.inf
    if any(lab == proc.anchor or lab not in proc.system.labels for lab, _ in runs[1:]):
        return -math.inf
    if proc.continue_prob == 0 and len(runs) > 2:
        return -math.inf
    lp = sum(proc.sampler.log_prob(w) for _, w in runs)
    return lp + _label_log_prob(proc, len(runs))


@dataclass(frozen=True)
class ProcessSample:
    blocks: tuple
    log_probs: tuple

    @property
    def concatenated(self) -> RunString:
        out = self.blocks[0]
        for b in self.blocks[1:]:
            out = concat(out, b)
        return out

    @property
    def total_weight(self) -> float:
        return math.fsum(b.weight.value for b in self.blocks)

    @property
    def log_prob(self) -> float:
        return math.fsum(self.log_probs)


def sample_process(proc: MaxentProcess, n_blocks: int, rng) -> ProcessSample:
    d = draw_blocks(proc, n_blocks, rng)
    return ProcessSample(tuple(_blocks_of(proc, d)), tuple(d.log_prob.tolist()))


@dataclass(frozen=True)
class MonteCarloRate:
    n_blocks: int
    sum_neg_log_prob: float
    sum_weight: float
    rate: float
    sigma: float  # delta-method standard error of ``rate``
    mean_weight: float
    weight_sigma: float  # standard error of ``mean_weight``

    def within(self, target: float, k: float = 4.0, floor: float = 0.0) -> bool:
        """``|rate - target| <= k * max(sigma, floor)``.

        Per-block ``-log p`` equals ``C w`` up to rounding for the maxentropic
        process, so ``sigma`` collapses to rounding level; ``floor`` supplies the
        numerical resolution of the process (its normalisation tolerance).
        """
        return abs(self.rate - target) <= k * max(self.sigma, floor)


def monte_carlo_rate(proc: MaxentProcess, n_blocks: int, rng, batch: int = 200_000) -> MonteCarloRate:
    """Empirical ``sum(-log p) / sum(w)`` over ``n_blocks`` sampled blocks.

    ``sigma`` is the delta-method standard error of the ratio.
    """
    rng = _rng(rng)
    nlp_all, w_all = [], []
    left = n_blocks
    while left > 0:
        n = min(batch, left)
        left -= n
        d = draw_blocks(proc, n, rng)
        nlp_all.append(-d.log_prob)
        w_all.append(d.weights)
    a = np.concatenate(nlp_all)
    b = np.concatenate(w_all)
    sa, sb = math.fsum(a), math.fsum(b)
    rate = sa / sb
    z = a - rate * b
    n = n_blocks
    sigma = math.sqrt(float(np.dot(z, z)) / (n * (n - 1))) / (sb / n)
    return MonteCarloRate(n, sa, sb, rate, sigma, sb / n, float(np.std(b, ddof=1)) / math.sqrt(n))


# ---------------------------------------------------------------------------
# entropy rates
# ---------------------------------------------------------------------------


def _length_sums(W: RunLengthSet, log_prob, C: float, m: int, truncation: float | None):
    """``(-sum P ln P, sum P nu, sum P)`` over run lengths, tail-corrected.

    Explicit sums run over ``W`` up to ``truncation`` (or until the remaining
    mass is negligible).  The omitted mass and mean come from the certified
    series ``G_W`` and ``G_W'`` at ``C``; the omitted entropy follows from
    ``-ln q(nu) = nu C - ln(m-1)``.
    """
    g = eval_gw(W, C, 1e-15)
    dg = eval_gw_derivative(W, C, 1e-15)
    mass_total = (m - 1) * (g.value + 0.5 * g.tail_bound)
    mean_total = -(m - 1) * (dg.value + 0.5 * dg.tail_bound)

    H = mass = mean = 0.0
    q_mass = q_mean = 0.0  # closed-form partial sums, used for stopping and tails
    for w in W.iter_weights():
        if truncation is not None and w.value > truncation:
            break
        lp = log_prob(w)
        if lp > -math.inf:
            p = math.exp(lp)
            H -= p * lp
            mass += p
            mean += p * w.value
        q = (m - 1) * math.exp(-w.value * C)
        q_mass += q
        q_mean += q * w.value
        if truncation is None and mass_total - q_mass < 1e-15 and mean_total - q_mean < 1e-13:
            break
    if q_mass < 1 - 1e-6:
        raise TruncationError(f"run lengths up to {truncation} carry q-mass {q_mass:.9f} < 1 - 1e-6")
    mean_tail = max(0.0, mean_total - q_mean)
    mass_tail = max(0.0, mass_total - q_mass)
    H += C * mean_tail - math.log(m - 1) * mass_tail
    return H, mean + mean_tail, mass + mass_tail


def entropy_rate_iid(proc: MaxentProcess, truncation: float | None = None) -> float:
    """``H(Y_1) / E[w(Y_1)]`` for IID blocks.

    ``-ln p(block)`` is a sum of per-run factors (length draw, label choice,
    continue/stop), so both the block entropy and the mean block weight are
    linear in the number of runs ``K`` with ``E[K] = 2 + cp/(1-cp)``.  Run-length
    factors use the sampler's own probabilities, not the closed form ``q``.
    ``truncation`` bounds the run lengths summed explicitly.
    """
    m, cp, C = proc.m, proc.continue_prob, proc.capacity
    H_len, mean_len, _ = _length_sums(proc.system.runs, proc.sampler.log_prob, C, m, truncation)
    extra = cp / (1.0 - cp)  # expected runs beyond the second
    H = (2 + extra) * H_len + math.log(m - 1) - math.log1p(-cp)
    if cp > 0:
        H -= extra * math.log(cp / (m - 2))
    return H / ((2 + extra) * mean_len)


def markov_maxent_rate(sys: ConstrainedSystem, tol: float = 1e-10, truncation: float | None = None) -> float:
    """Entropy rate of the run-level process: ``(H(q) + ln(m-1)) / E_q[nu]``.

    Runs are IID with law ``q`` and each label is uniform over the ``m-1``
    labels differing from the previous one.
    """
    res = solve_capacity(sys, tol)
    if res.degenerate or res.capacity <= 0:
        raise DegenerateCapacityError("capacity is 0; the run-level process is deterministic")
    C, m = res.capacity, sys.m
    log_m1 = math.log(m - 1)

    def log_q(w):
        return log_m1 - w.value * C

    H, mean, _ = _length_sums(sys.runs, log_q, C, m, truncation)
    return (H + log_m1) / mean


# ---------------------------------------------------------------------------
# support construction and validation
# ---------------------------------------------------------------------------


def canonical_support(sys: ConstrainedSystem, anchor=None, max_weight=None, limit: int = 10**5) -> list[RunString]:
    """All support blocks (anchor run, then non-anchor runs) of weight <= max_weight."""
    anchor = sys.labels.labels[0] if anchor is None else str(anchor)
    others = [x for x in sys.labels if x != anchor]
    ws = sys.runs.weights_upto(max_weight)
    out: list[RunString] = []

    def extend(runs, total):
        if len(runs) >= 2:
            out.append(RunString(runs))
            if len(out) > limit:
                raise SupportTooLargeError(f"more than {limit} blocks up to weight {max_weight}")
        prev = runs[-1][0]
        for lab in others:
            if lab == prev:
                continue
            for w in ws:
                if total + w.value > float(max_weight) * (1 + 1e-12):
                    break
                extend(runs + [(lab, w)], total + w.value)

    for w in ws:
        extend([(anchor, w)], w.value)
    out.sort(key=lambda b: (b.weight.value, str(b)))
    return out


@dataclass
class ValidationReport:
    closure_violations: list = field(default_factory=list)  # (tuple, string)
    ambiguities: list = field(default_factory=list)  # (tuple, tuple, string)
    tuples_checked: int = 0

    @property
    def closed(self) -> bool:
        return not self.closure_violations

    @property
    def unambiguous(self) -> bool:
        return not self.ambiguities

    @property
    def valid(self) -> bool:
        return self.closed and self.unambiguous

    def lines(self, candidate=None) -> list[str]:
        def show(t):
            return "(" + ", ".join(f"[{candidate[i]}]" if candidate else str(i) for i in t) + ")"

        out = []
        for t, s in self.closure_violations:
            out.append(f"closure: {show(t)} -> [{s}] (weight {s.weight}) is not a string of the system")
        for t1, t2, s in self.ambiguities:
            out.append(f"ambiguity: {show(t1)} and {show(t2)} both give [{s}]")
        return out


def validate_support(candidate, sys: ConstrainedSystem, depth: int = 3, cap: int = 10**6) -> ValidationReport:
    """Brute-force check of the input-process conditions on a finite support.

    Every concatenation of 1..depth candidate elements must be a string of the
    system, and distinct tuples must never concatenate to the same string.
    """
    cand = [c if isinstance(c, RunString) else RunString(c) for c in candidate]
    if not cand:
        raise ValueError("candidate support is empty")
    if depth < 2:
        raise ValueError("depth must be at least 2")
    if len(cand) ** depth > cap:
        raise SupportTooLargeError(f"{len(cand)}^{depth} tuples exceed the cap of {cap}")

    report = ValidationReport()
    seen: dict[RunString, tuple] = {}
    member_cache: dict[RunString, bool] = {}

    def visit(t: tuple, s: RunString):
        report.tuples_checked += 1
        ok = member_cache.get(s)
        if ok is None:
            ok = member_cache[s] = is_member(s, sys)
        if not ok:
            report.closure_violations.append((t, s))
        prev = seen.get(s)
        if prev is None:
            seen[s] = t
        else:
            report.ambiguities.append((prev, t, s))
        if len(t) < depth:
            for i, c in enumerate(cand):
                visit(t + (i,), concat(s, c))

    for i, c in enumerate(cand):
        visit((i,), c)
    return report
