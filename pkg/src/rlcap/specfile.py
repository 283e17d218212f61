"""JSON system spec files and the two built-in presets.

Schema::

    {
      "name": "optional",
      "description": "optional",
      "labels": ["0", "1"],
      "runs": [
        {"kind": "explicit",   "weights": ["1", "3/2", "pi"]},
        {"kind": "arithmetic", "first": "1", "step": "1"},
        {"kind": "geometric",  "first": "2", "ratio": "2"}
      ]
    }

Several ``runs`` entries form a disjoint union.  Lengths written as strings
are exact (``"3"``, ``"3/2"``, ``"0.25"``) or symbolic (``"pi"``,
``"2*pi"``); JSON numbers with a fraction part are plain reals.  A geometric
``ratio`` follows the same rule.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from .system import (
    Arithmetic,
    ConstrainedSystem,
    Explicit,
    FiniteUnion,
    Geometric,
    LabelSet,
    RunLengthSet,
    Weight,
)


class SpecError(ValueError):
    pass


@dataclass(frozen=True)
class SystemSpec:
    system: ConstrainedSystem
    name: str | None = None
    description: str | None = None


def _weight(x) -> Weight:
    if isinstance(x, bool):
        raise SpecError(f"bad run length {x!r}")
    if isinstance(x, int):
        return Weight.exact(x)
    if isinstance(x, float):
        return Weight.real(x)
    if isinstance(x, str):
        return Weight.parse(x)
    raise SpecError(f"bad run length {x!r}")


def _ratio(x):
    if isinstance(x, int) and not isinstance(x, bool):
        return Fraction(x)
    if isinstance(x, float):
        return x
    if isinstance(x, str):
        return Fraction(x)
    raise SpecError(f"bad geometric ratio {x!r}")


def _runs_from(entry: dict) -> RunLengthSet:
    kind = entry.get("kind")
    try:
        if kind == "explicit":
            return Explicit(_weight(w) for w in entry["weights"])
        if kind == "arithmetic":
            return Arithmetic(_weight(entry["first"]), _weight(entry["step"]))
        if kind == "geometric":
            return Geometric(_weight(entry["first"]), _ratio(entry["ratio"]))
    except KeyError as e:
        raise SpecError(f"{kind} run set is missing field {e}") from None
    raise SpecError(f"unknown run set kind {kind!r}")


def system_from_dict(data: dict) -> SystemSpec:
    try:
        labels = LabelSet(data["labels"])
        entries = data["runs"]
    except KeyError as e:
        raise SpecError(f"spec is missing field {e}") from None
    if isinstance(entries, dict):
        entries = [entries]
    if not entries:
        raise SpecError("spec has no run sets")
    parts = [_runs_from(e) for e in entries]
    runs = parts[0] if len(parts) == 1 else FiniteUnion(parts)
    return SystemSpec(ConstrainedSystem(runs, labels), data.get("name"), data.get("description"))


def load_spec(path) -> SystemSpec:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as e:
            raise SpecError(f"{path}: invalid JSON: {e}") from None
    return system_from_dict(data)


def _dump_weight(w: Weight):
    return w.approx if w.is_real else str(w)


def _dump_runs(W: RunLengthSet) -> list[dict]:
    if isinstance(W, FiniteUnion):
        return [e for p in W.parts for e in _dump_runs(p)]
    if isinstance(W, Explicit):
        return [{"kind": "explicit", "weights": [_dump_weight(w) for w in W.weights]}]
    if isinstance(W, Arithmetic):
        return [{"kind": "arithmetic", "first": _dump_weight(W.first), "step": _dump_weight(W.step)}]
    if isinstance(W, Geometric):
        ratio = str(W.ratio) if W.exact_ratio else W.ratio
        return [{"kind": "geometric", "first": _dump_weight(W.first), "ratio": ratio}]
    raise TypeError(type(W).__name__)


def system_to_dict(spec: SystemSpec | ConstrainedSystem) -> dict:
    if isinstance(spec, ConstrainedSystem):
        spec = SystemSpec(spec)
    out = {}
    if spec.name is not None:
        out["name"] = spec.name
    if spec.description is not None:
        out["description"] = spec.description
    out["labels"] = list(spec.system.labels)
    out["runs"] = _dump_runs(spec.system.runs)
    return out


def dump_spec(spec, path) -> None:
    Path(path).write_text(json.dumps(system_to_dict(spec), indent=2) + "\n")


def rll_preset(kmax: int) -> SystemSpec:
    """Binary strings with run lengths 1..kmax."""
    if kmax < 1:
        raise SpecError("kmax must be at least 1")
    sys = ConstrainedSystem(Explicit(range(1, kmax + 1)), ["0", "1"])
    return SystemSpec(sys, f"rll-{kmax}", f"run lengths 1..{kmax}, binary labels")


def async_preset(xi, labels: int = 2) -> SystemSpec:
    """Asynchronous channel: run lengths xi, xi^2, ... with ``labels`` symbols."""
    r = _ratio(xi) if not isinstance(xi, Fraction) else xi
    first = Weight.exact(r) if isinstance(r, Fraction) else Weight.real(r)
    sys = ConstrainedSystem(Geometric(first, r), [str(i) for i in range(labels)])
    return SystemSpec(sys, f"async-{xi}-{labels}", f"run lengths {xi}^k (k >= 1), {labels} labels")
