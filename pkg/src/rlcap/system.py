"""Run-length sets, label alphabets, constrained systems and run strings.

Weights come in three flavours:

* exact rationals (``Fraction``), required by the enumeration oracle;
* symbolic weights, a rational plus rational multiples of named constants
  such as ``pi`` (so ``pi + pi == 2*pi`` is decided exactly);
* plain reals, for parametric families with an irrational ratio.
"""

from __future__ import annotations

import heapq
import math
import re
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import islice
from typing import Iterable, Iterator, Union

CONSTANTS = {
    "pi": math.pi,
    "e": math.e,
    "sqrt2": math.sqrt(2.0),
    "sqrt3": math.sqrt(3.0),
    "ln2": math.log(2.0),
}

# relative tolerance for deciding equality of real-valued weights
REAL_RTOL = 1e-12
# absolute tolerance on log_xi(x/a) for geometric membership of reals
LOG_ATOL = 1e-12

Number = Union[int, Fraction, float]


def _close(x: float, y: float) -> bool:
    return math.isclose(x, y, rel_tol=REAL_RTOL, abs_tol=0.0)


@dataclass(frozen=True, eq=False)
class Weight:
    """A positive run length.

    ``rational + sum(coef * CONSTANTS[name])`` when ``approx`` is None,
    otherwise the plain real ``approx``.  Use the ``exact``, ``real``,
    ``symbol`` and ``coerce`` constructors rather than the raw fields.
    """

    rational: Fraction = Fraction(0)
    symbols: tuple = ()
    approx: float | None = None
    value: float = field(init=False, repr=False)

    def __post_init__(self):
        if self.approx is not None:
            v = float(self.approx)
        else:
            v = float(self.rational) + sum(float(c) * CONSTANTS[n] for n, c in self.symbols)
        if not v > 0 or math.isinf(v):
            raise ValueError(f"run length must be a positive finite number, got {v!r}")
        object.__setattr__(self, "value", v)

    # -- constructors -----------------------------------------------------
    @classmethod
    def exact(cls, x) -> Weight:
        return cls(rational=Fraction(x))

    @classmethod
    def real(cls, x: float) -> Weight:
        return cls(approx=float(x))

    @classmethod
    def symbol(cls, name: str, coef=1, rational=0) -> Weight:
        if name not in CONSTANTS:
            raise ValueError(f"unknown constant {name!r}; known: {sorted(CONSTANTS)}")
        return cls._from_form({None: Fraction(rational), name: Fraction(coef)})

    @classmethod
    def coerce(cls, x) -> Weight:
        """Weight from a Weight, int, Fraction, float or string literal."""
        if isinstance(x, Weight):
            return x
        if isinstance(x, bool):
            raise TypeError("bool is not a run length")
        if isinstance(x, (int, Fraction)):
            return cls.exact(x)
        if isinstance(x, float):
            return cls.real(x)
        if isinstance(x, str):
            return cls.parse(x)
        raise TypeError(f"cannot interpret {x!r} as a run length")

    _TERM_RE = re.compile(r"^(?:([0-9]+(?:/[0-9]+)?)\s*\*?\s*)?([A-Za-z_][A-Za-z0-9_]*)$")

    @classmethod
    def parse(cls, text: str) -> Weight:
        """Parse ``"3"``, ``"3/2"``, ``"1.25"`` (exact) or symbolic sums such as
        ``"pi"``, ``"2*pi"``, ``"1/2 pi"``, ``"1+1/2*sqrt2"``, ``"pi-1"``."""
        try:
            return cls.exact(Fraction(text.strip()))
        except ValueError:
            pass
        terms = re.split(r"(?=[+-])", text.replace(" ", ""))
        form: dict = {}
        for term in terms:
            if not term:
                continue
            sign, body = (-1, term[1:]) if term[0] == "-" else (1, term.lstrip("+"))
            try:
                form[None] = form.get(None, 0) + sign * Fraction(body)
                continue
            except ValueError:
                pass
            m = cls._TERM_RE.match(body)
            if not m or m.group(2) not in CONSTANTS:
                raise ValueError(f"cannot parse run length {text!r}")
            coef = Fraction(m.group(1)) if m.group(1) else Fraction(1)
            form[m.group(2)] = form.get(m.group(2), 0) + sign * coef
        if not form:
            raise ValueError(f"cannot parse run length {text!r}")
        return cls._from_form(form)

    @classmethod
    def _from_form(cls, form: dict) -> Weight:
        syms = tuple(sorted((k, Fraction(v)) for k, v in form.items() if k is not None and v != 0))
        return cls(rational=Fraction(form.get(None, 0)), symbols=syms)

    # -- views ------------------------------------------------------------
    @property
    def is_real(self) -> bool:
        return self.approx is not None

    @property
    def is_rational(self) -> bool:
        return self.approx is None and not self.symbols

    def form(self) -> dict | None:
        """Linear form ``{None: rational, name: coef}``, or None for plain reals."""
        if self.approx is not None:
            return None
        f = {None: self.rational}
        f.update(self.symbols)
        return f

    def as_fraction(self) -> Fraction:
        if not self.is_rational:
            raise ValueError(f"{self} is not a rational weight")
        return self.rational

    # -- arithmetic -------------------------------------------------------
    def __add__(self, other) -> Weight:
        other = Weight.coerce(other)
        a, b = self.form(), other.form()
        if a is None or b is None:
            return Weight.real(self.value + other.value)
        return Weight._from_form(_lin_add(a, b))

    __radd__ = __add__

    def scale(self, factor) -> Weight:
        """Multiply by a positive scalar; stays exact for rational factors."""
        if isinstance(factor, (int, Fraction)) and not isinstance(factor, bool):
            f = self.form()
            if f is not None:
                return Weight._from_form({k: v * factor for k, v in f.items()})
        return Weight.real(self.value * float(factor))

    def ratio_to(self, other: Weight) -> Fraction | None:
        """Exact ``r`` with ``self == r * other``, or None if there is none or it is undecidable."""
        return _lin_ratio(self.form(), other.form())

    # -- comparison -------------------------------------------------------
    def __eq__(self, other):
        if not isinstance(other, Weight):
            try:
                other = Weight.coerce(other)
            except (TypeError, ValueError):
                return NotImplemented
        a, b = self.form(), other.form()
        if a is None or b is None:
            return self.value == other.value
        return _lin_sub(a, b) == {}

    def __hash__(self):
        return hash(self.value)

    def __lt__(self, other: Weight):
        other = Weight.coerce(other)
        if self == other:
            return False
        if self.value != other.value:
            return self.value < other.value
        # float tie between distinct exact forms; resolve with more digits
        return _hp_value(self) < _hp_value(other)

    def __le__(self, other):
        return self == other or self < other

    def __gt__(self, other):
        return Weight.coerce(other) < self

    def __ge__(self, other):
        return self == other or self > other

    def isclose(self, other: Weight) -> bool:
        a, b = self.form(), other.form()
        if a is None or b is None:
            return _close(self.value, other.value)
        return self == other

    def __float__(self):
        return self.value

    def __str__(self):
        if self.approx is not None:
            return repr(self.approx)
        parts = []
        if self.rational or not self.symbols:
            parts.append(str(self.rational))
        for name, c in self.symbols:
            parts.append(name if c == 1 else f"{c}*{name}")
        return "+".join(parts).replace("+-", "-")

    def __repr__(self):
        return f"Weight({self})"


def _hp_value(w: Weight):
    import mpmath

    with mpmath.workdps(50):
        if w.approx is not None:
            return mpmath.mpf(w.approx)
        consts = {"pi": mpmath.pi, "e": mpmath.e, "sqrt2": mpmath.sqrt(2),
                  "sqrt3": mpmath.sqrt(3), "ln2": mpmath.log(2)}
        v = mpmath.mpf(w.rational.numerator) / w.rational.denominator
        for n, c in w.symbols:
            v += mpmath.mpf(c.numerator) / c.denominator * consts[n]
        return v


def _lin_add(a: dict, b: dict) -> dict:
    out = dict(a)
    for k, v in b.items():
        out[k] = out.get(k, 0) + v
    return {k: v for k, v in out.items() if v != 0}


def _lin_sub(a: dict, b: dict) -> dict:
    return _lin_add(a, {k: -v for k, v in b.items()})


def _lin_ratio(a: dict | None, b: dict | None) -> Fraction | None:
    if a is None or b is None:
        return None
    a = {k: v for k, v in a.items() if v != 0}
    b = {k: v for k, v in b.items() if v != 0}
    if set(a) != set(b) or not b:
        return None
    ratios = {Fraction(a[k]) / b[k] for k in b}
    return ratios.pop() if len(ratios) == 1 else None


def _as_ratio(x) -> Fraction | float:
    if isinstance(x, (Fraction, int)) and not isinstance(x, bool):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x.strip())
    return float(x)


# ---------------------------------------------------------------------------
# run-length sets
# ---------------------------------------------------------------------------


class RunLengthSet(ABC):
    """A countable set of positive run lengths with a smallest element."""

    @abstractmethod
    def contains(self, x: Weight) -> bool: ...

    @abstractmethod
    def iter_weights(self) -> Iterator[Weight]:
        """Members in strictly increasing order (infinite for parametric families)."""

    @property
    @abstractmethod
    def is_finite(self) -> bool: ...

    @abstractmethod
    def scale(self, factor) -> RunLengthSet: ...

    @property
    def min_weight(self) -> Weight:
        return next(self.iter_weights())

    @property
    def abscissa(self) -> float:
        """Abscissa of convergence of sum exp(-nu s) over the set."""
        return -math.inf if self.is_finite else 0.0

    @property
    def is_rational(self) -> bool:
        """True when every member is an exact rational."""
        return False

    def weights_upto(self, bound) -> list[Weight]:
        bound = float(bound)
        out = []
        for w in self.iter_weights():
            if w.value > bound * (1 + REAL_RTOL):
                break
            out.append(w)
        return out


@dataclass(frozen=True)
class Explicit(RunLengthSet):
    weights: tuple

    def __init__(self, weights: Iterable):
        ws = sorted(Weight.coerce(w) for w in weights)
        if not ws:
            raise ValueError("explicit run-length set must be nonempty")
        for a, b in zip(ws, ws[1:]):
            if a == b or a.isclose(b):
                raise ValueError(f"duplicate run length {a}")
        object.__setattr__(self, "weights", tuple(ws))

    def contains(self, x: Weight) -> bool:
        return any(w.isclose(x) for w in self.weights)

    def iter_weights(self):
        return iter(self.weights)

    @property
    def is_finite(self):
        return True

    @property
    def is_rational(self):
        return all(w.is_rational for w in self.weights)

    def scale(self, factor):
        return Explicit(w.scale(factor) for w in self.weights)

    def __len__(self):
        return len(self.weights)


@dataclass(frozen=True)
class Arithmetic(RunLengthSet):
    """The progression ``{first + k*step : k >= 0}``."""

    first: Weight
    step: Weight

    def __init__(self, first, step):
        object.__setattr__(self, "first", Weight.coerce(first))
        object.__setattr__(self, "step", Weight.coerce(step))

    def contains(self, x: Weight) -> bool:
        if x.value < self.first.value and not _close(x.value, self.first.value):
            return False
        a, d, f = self.first.form(), self.step.form(), x.form()
        if a is not None and d is not None and f is not None:
            diff = _lin_sub(f, a)
            if not diff:
                return True
            k = _lin_ratio(diff, d)
            return k is not None and k > 0 and k.denominator == 1
        k = (x.value - self.first.value) / self.step.value
        return k >= -REAL_RTOL and abs(k - round(k)) <= REAL_RTOL * max(1.0, abs(k))

    def iter_weights(self):
        k = 0
        while True:
            yield self.first + self.step.scale(k) if k else self.first
            k += 1

    @property
    def is_finite(self):
        return False

    @property
    def is_rational(self):
        return self.first.is_rational and self.step.is_rational

    def scale(self, factor):
        return Arithmetic(self.first.scale(factor), self.step.scale(factor))


@dataclass(frozen=True)
class Geometric(RunLengthSet):
    """The set ``{first * ratio**k : k >= 0}`` with ``ratio > 1``."""

    first: Weight
    ratio: Fraction | float

    def __init__(self, first, ratio):
        r = _as_ratio(ratio)
        if not r > 1:
            raise ValueError(f"geometric ratio must exceed 1, got {ratio}")
        object.__setattr__(self, "first", Weight.coerce(first))
        object.__setattr__(self, "ratio", r)

    @property
    def exact_ratio(self) -> bool:
        return isinstance(self.ratio, Fraction)

    def contains(self, x: Weight) -> bool:
        if self.exact_ratio and not self.first.is_real and not x.is_real:
            t = x.ratio_to(self.first)
            if t is None or t < 1:
                return False
            p = Fraction(1)
            while p < t:
                p *= self.ratio
            return p == t
        k = math.log(x.value / self.first.value) / math.log(float(self.ratio))
        return k >= -LOG_ATOL and abs(k - round(k)) <= LOG_ATOL

    def element(self, k: int) -> Weight:
        if self.exact_ratio:
            return self.first.scale(self.ratio**k)
        return Weight.real(self.first.value * float(self.ratio) ** k)

    def iter_weights(self):
        k = 0
        while True:
            yield self.element(k)
            k += 1

    @property
    def is_finite(self):
        return False

    @property
    def is_rational(self):
        return self.exact_ratio and self.first.is_rational

    def scale(self, factor):
        return Geometric(self.first.scale(factor), self.ratio)


# enumerated prefix length used to check disjointness involving real families
DISJOINT_PREFIX = 10_000


@dataclass(frozen=True)
class FiniteUnion(RunLengthSet):
    parts: tuple

    def __init__(self, parts: Iterable[RunLengthSet]):
        flat = []
        for p in parts:
            flat.extend(p.parts if isinstance(p, FiniteUnion) else [p])
        if not flat:
            raise ValueError("union of no run-length sets")
        for i, p in enumerate(flat):
            for q in flat[i + 1:]:
                w = _overlap(p, q)
                if w is not None:
                    raise ValueError(f"union components overlap at run length {w}")
        object.__setattr__(self, "parts", tuple(flat))

    def contains(self, x):
        return any(p.contains(x) for p in self.parts)

    def iter_weights(self):
        return heapq.merge(*(p.iter_weights() for p in self.parts), key=lambda w: w.value)

    @property
    def is_finite(self):
        return all(p.is_finite for p in self.parts)

    @property
    def is_rational(self):
        return all(p.is_rational for p in self.parts)

    def scale(self, factor):
        return FiniteUnion(p.scale(factor) for p in self.parts)


def _overlap(p: RunLengthSet, q: RunLengthSet) -> Weight | None:
    """A common member of p and q, or None."""
    if isinstance(q, Explicit) and not isinstance(p, Explicit):
        p, q = q, p
    if isinstance(p, Explicit):
        return next((w for w in p.weights if q.contains(w)), None)
    if isinstance(p, Arithmetic) and isinstance(q, Arithmetic) and p.is_rational and q.is_rational:
        return _arith_overlap(p, q)
    # enumerate the sparser family and test the other; geometric prefixes are short
    if isinstance(q, Geometric):
        p, q = q, p
    bound = 1e12 * max(p.first.value, q.first.value)
    for w in islice(p.iter_weights(), DISJOINT_PREFIX):
        if w.value > bound:
            break
        if q.contains(w):
            return w
    return None


def _arith_overlap(p: Arithmetic, q: Arithmetic) -> Weight | None:
    # a1 + k d1 = a2 + j d2 with k, j >= 0 is solvable iff gcd(d1, d2) | (a2 - a1)
    a1, d1, a2, d2 = (x.as_fraction() for x in (p.first, p.step, q.first, q.step))
    den = math.lcm(a1.denominator, d1.denominator, a2.denominator, d2.denominator)
    A1, D1, A2, D2 = (int(x * den) for x in (a1, d1, a2, d2))
    g = math.gcd(D1, D2)
    if (A2 - A1) % g:
        return None
    # walk p's progression from max(A1, A2); a hit comes within D2/g steps
    x = A1 + max(0, -((A1 - A2) // D1)) * D1
    for _ in range(D2 // g + 1):
        if (x - A2) % D2 == 0:
            return Weight.exact(Fraction(x, den))
        x += D1
    raise AssertionError("unreachable: congruence is solvable")


def contains_weight(W: RunLengthSet, x) -> bool:
    """Membership of run length ``x`` in ``W``."""
    x = Weight.coerce(x)
    return W.contains(x)


# ---------------------------------------------------------------------------
# labels, systems, strings
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LabelSet:
    labels: tuple

    def __init__(self, labels: Iterable):
        labs = tuple(str(x) for x in labels)
        if len(set(labs)) != len(labs):
            raise ValueError(f"duplicate labels in {labs}")
        if len(labs) < 2:
            raise ValueError("a label set needs at least two labels")
        object.__setattr__(self, "labels", labs)

    @property
    def m(self) -> int:
        return len(self.labels)

    def __contains__(self, label) -> bool:
        return str(label) in self.labels

    def __iter__(self):
        return iter(self.labels)

    def __len__(self):
        return len(self.labels)


@dataclass(frozen=True)
class ConstrainedSystem:
    """The general run-length set <W, L>."""

    runs: RunLengthSet
    labels: LabelSet

    def __init__(self, runs: RunLengthSet | Iterable, labels: LabelSet | Iterable):
        if not isinstance(runs, RunLengthSet):
            runs = Explicit(runs)
        if not isinstance(labels, LabelSet):
            labels = LabelSet(labels)
        object.__setattr__(self, "runs", runs)
        object.__setattr__(self, "labels", labels)

    @property
    def m(self) -> int:
        return self.labels.m


@dataclass(frozen=True)
class RunString:
    """A nonempty string given by its runs ``(label, length)``; adjacent labels differ."""

    runs: tuple

    def __init__(self, runs: Iterable):
        rs = tuple((str(lab), Weight.coerce(w)) for lab, w in runs)
        if not rs:
            raise ValueError("a run string has at least one run")
        for (a, _), (b, _) in zip(rs, rs[1:]):
            if a == b:
                raise ValueError(f"adjacent runs share label {a!r}; merge them instead")
        object.__setattr__(self, "runs", rs)

    @property
    def weight(self) -> Weight:
        total = self.runs[0][1]
        for _, w in self.runs[1:]:
            total = total + w
        return total

    def __len__(self):
        return len(self.runs)

    def __str__(self):
        return " ".join(f"{lab}:{format_length(w)}" for lab, w in self.runs)


def format_length(w: Weight) -> str:
    """Exact or symbolic text when available, otherwise 17 significant digits."""
    if not w.is_real:
        return str(w)
    return f"{w.value:.17g}"


def concat(a: RunString, b: RunString) -> RunString:
    """Concatenate raw strings; equal boundary labels fuse into one run."""
    left, right = list(a.runs), list(b.runs)
    if left[-1][0] == right[0][0]:
        lab, w = left.pop()
        right[0] = (lab, w + right[0][1])
    return RunString(left + right)


def is_member(s: RunString, sys: ConstrainedSystem) -> bool:
    return all(lab in sys.labels and sys.runs.contains(w) for lab, w in s.runs)


def parse_runstring(line: str) -> RunString:
    """Inverse of ``str(RunString)``: ``"a:1 b:3/2 a:pi"``."""
    runs = []
    for tok in line.split():
        lab, _, length = tok.rpartition(":")
        if not lab:
            raise ValueError(f"bad run token {tok!r}; expected label:length")
        runs.append((lab, _parse_length(length)))
    return RunString(runs)


def _parse_length(text: str) -> Weight:
    try:
        return Weight.parse(text)
    except ValueError:
        return Weight.real(float(text))
