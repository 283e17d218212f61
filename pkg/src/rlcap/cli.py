"""Command-line front end.

Every subcommand takes a SYSTEM argument: a JSON spec file, or one of the
presets ``rll`` (with ``--kmax``) and ``async`` (with ``--xi``/``--labels``).

Exit codes: 0 success, 1 error, 2 valid but degenerate or violating result.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction

from . import capacity as cap_mod
from . import enumeration, genfun, maxent
from .specfile import SpecError, async_preset, load_spec, rll_preset, system_to_dict
from .system import parse_runstring

DEFAULT_SEED = 20100401
EXIT_OK, EXIT_ERROR, EXIT_FLAGGED = 0, 1, 2


class CLIError(Exception):
    pass


def _resolve(source: str, args):
    if source == "rll":
        if args.kmax is None:
            raise CLIError("preset rll needs --kmax")
        return rll_preset(args.kmax)
    if source == "async":
        if args.xi is None:
            raise CLIError("preset async needs --xi")
        return async_preset(args.xi, args.labels)
    return load_spec(source)


def _emit_json(command, inputs, result, tolerances, seed=None):
    env = {"command": command, "inputs": inputs, "result": result,
           "tolerances": tolerances, "seed": seed}
    print(json.dumps(env, indent=2, default=str))


def _spec_inputs(spec):
    return system_to_dict(spec)


# -- capacity -----------------------------------------------------------------


def _capacity_job(payload):
    spec, tol = payload
    return spec, cap_mod.solve_capacity(spec.system, tol)


def cmd_capacity(args) -> int:
    specs = [_resolve(s, args) for s in args.system]
    jobs = [(s, args.tol) for s in specs]
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_capacity_job, jobs))
    else:
        results = [_capacity_job(j) for j in jobs]

    flagged = any(r.degenerate for _, r in results)
    unit = "bits" if args.bits else "nats"
    conv = 1 / math.log(2) if args.bits else 1.0
    if args.json:
        out = [{
            "system": spec.name,
            "capacity": r.capacity * conv,
            "unit": unit,
            "bracket": [r.bracket[0] * conv, r.bracket[1] * conv],
            "residual": r.residual,
            "degenerate": r.degenerate,
        } for spec, r in results]
        _emit_json("capacity", [_spec_inputs(s) for s, _ in results],
                   out if len(out) > 1 else out[0],
                   {"tol": args.tol, "residual_tol": [r.residual_tol for _, r in results]})
    else:
        for spec, r in results:
            prefix = f"{spec.name}: " if len(results) > 1 and spec.name else ""
            print(f"{prefix}{r.capacity * conv:.10f} {unit}")
            if args.verbose:
                print(f"  bracket [{r.bracket[0]:.17g}, {r.bracket[1]:.17g}]  residual {r.residual:.3g}")
            if r.degenerate:
                print("  degenerate: two labels and one run length, only alternating strings")
    return EXIT_FLAGGED if flagged else EXIT_OK


# -- genfun -------------------------------------------------------------------


def cmd_genfun(args) -> int:
    spec = _resolve(args.system[0], args)
    sys_ = spec.system
    if args.at.lower() in ("c", "capacity"):
        s = cap_mod.solve_capacity(sys_, min(args.tol, 1e-10)).capacity
    else:
        s = float(args.at)
    fn = {"W": lambda: genfun.eval_gw(sys_.runs, s, args.tol),
          "system": lambda: genfun.eval_system_gf(sys_, s, args.tol),
          "support": lambda: genfun.eval_support_gf(sys_, s, args.tol)}[args.which]
    val = fn()
    if args.json:
        _emit_json("genfun", {"system": _spec_inputs(spec), "s": s, "which": args.which},
                   {"value": val.value, "tail_bound": val.tail_bound, "terms_used": val.terms_used},
                   {"tol": args.tol})
    else:
        print(f"{val.value!r}")
        if args.verbose:
            print(f"  s={s!r} tail_bound={val.tail_bound:.3g} terms={val.terms_used}")
    return EXIT_OK


# -- enumerate ----------------------------------------------------------------


def cmd_enumerate(args) -> int:
    spec = _resolve(args.system[0], args)
    grid = enumeration.grid_for(spec.system, Fraction(args.max_weight))
    table = enumeration.count_strings(spec.system, grid)
    window = None
    if args.delta is not None:
        window = enumeration.count_delta_window(spec.system, grid, Fraction(args.delta), table)
    if args.json:
        est = enumeration.estimate_capacity_from_counts(table)
        _emit_json("enumerate", {"system": _spec_inputs(spec), "max_weight": args.max_weight,
                                 "delta": args.delta},
                   {"unit": str(grid.unit), "counts": [str(c) for c in table.counts],
                    "estimates": [[str(w), e] for w, e in est]},
                   {"exact": True})
        return EXIT_OK
    if args.csv and args.csv != "-":
        with open(args.csv, "w", newline="") as fh:
            enumeration.write_counts_csv(table, fh, window)
    else:
        enumeration.write_counts_csv(table, sys.stdout, window)
    return EXIT_OK


# -- sample -------------------------------------------------------------------


def cmd_sample(args) -> int:
    spec = _resolve(args.system[0], args)
    proc = maxent.build_maxent(spec.system, args.anchor)
    sample = maxent.sample_process(proc, args.blocks, args.seed)
    if args.json:
        _emit_json("sample", {"system": _spec_inputs(spec), "blocks": args.blocks, "anchor": proc.anchor},
                   {"capacity": proc.capacity, "blocks": [str(b) for b in sample.blocks],
                    "log_probs": list(sample.log_probs), "total_weight": sample.total_weight},
                   {"normalization": proc.normalization}, seed=args.seed)
    else:
        for b in sample.blocks:
            print(b)
    return EXIT_OK


# -- validate -----------------------------------------------------------------


def _read_support(path):
    with open(path) as fh:
        lines = [ln.split("#", 1)[0].strip() for ln in fh]
    return [parse_runstring(ln) for ln in lines if ln]


def cmd_validate(args) -> int:
    spec = _resolve(args.system[0], args)
    if args.support:
        cand = _read_support(args.support)
    elif args.canonical_weight is not None:
        cand = maxent.canonical_support(spec.system, args.anchor, float(Fraction(args.canonical_weight)))
    else:
        raise CLIError("validate needs --support FILE or --canonical-weight X")
    report = maxent.validate_support(cand, spec.system, args.depth, args.cap)
    if args.json:
        _emit_json("validate", {"system": _spec_inputs(spec), "support": [str(c) for c in cand],
                                "depth": args.depth},
                   {"valid": report.valid, "closed": report.closed, "unambiguous": report.unambiguous,
                    "witnesses": report.lines(cand), "tuples_checked": report.tuples_checked},
                   {"exact": True})
    else:
        if report.valid:
            print(f"valid ({len(cand)} blocks, {report.tuples_checked} tuples up to depth {args.depth})")
        else:
            print("invalid")
            for line in report.lines(cand):
                print("  " + line)
    return EXIT_OK if report.valid else EXIT_FLAGGED


# -- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("system", nargs="+", help="spec file, or preset 'rll' / 'async'")
    common.add_argument("--kmax", type=int, help="rll preset: run lengths 1..kmax")
    common.add_argument("--xi", type=str, help="async preset: ratio of run lengths xi^k")
    common.add_argument("--labels", type=int, default=2, help="async preset: number of labels")
    common.add_argument("--json", action="store_true", help="emit a JSON result envelope")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="rlcap", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("capacity", parents=[common], help="combinatorial capacity")
    c.add_argument("--tol", type=float, default=cap_mod.DEFAULT_TOL)
    c.add_argument("--bits", action="store_true", help="report bits instead of nats")
    c.add_argument("--jobs", type=int, default=1, help="parallel workers over spec files")
    c.set_defaults(func=cmd_capacity)

    g = sub.add_parser("genfun", parents=[common], help="evaluate a generating function")
    g.add_argument("--at", required=True, help="real s, or 'C' for the capacity")
    g.add_argument("--which", choices=["W", "system", "support"], default="W")
    g.add_argument("--tol", type=float, default=genfun.DEFAULT_TOL)
    g.set_defaults(func=cmd_genfun)

    e = sub.add_parser("enumerate", parents=[common], help="exact string counts by weight")
    e.add_argument("--max-weight", default="60")
    e.add_argument("--csv", default="-", help="output path ('-' for stdout)")
    e.add_argument("--delta", default=None, help="also emit windowed counts N_delta")
    e.set_defaults(func=cmd_enumerate)

    s = sub.add_parser("sample", parents=[common], help="sample maxentropic blocks")
    s.add_argument("--blocks", type=int, default=10)
    s.add_argument("--seed", type=int, default=DEFAULT_SEED)
    s.add_argument("--anchor", default=None)
    s.set_defaults(func=cmd_sample)

    v = sub.add_parser("validate", parents=[common], help="check a finite input-process support")
    v.add_argument("--support", help="file with one block per line, 'label:length ...'")
    v.add_argument("--canonical-weight", help="use canonical blocks up to this weight instead")
    v.add_argument("--anchor", default=None)
    v.add_argument("--depth", type=int, default=3)
    v.add_argument("--cap", type=int, default=10**6)
    v.set_defaults(func=cmd_validate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command != "capacity" and len(args.system) > 1:
        print(f"error: {args.command} takes a single system", file=sys.stderr)
        return EXIT_ERROR
    try:
        return args.func(args)
    except (CLIError, SpecError, ValueError, ArithmeticError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
