"""Command-line entry point ``diamond``.

Subcommands write CSV (``# schema=1`` header, 9 significant digits) or JSON
to ``--out`` or stdout; human-readable summaries go to stderr.  Exit codes:
0 success, 1 infeasible computation or tripped guard, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import fme
from .bounds_three_relay import sweep3
from .bounds_two_relay import (LinkCaps2, cut_set2, optimize_lower_bound2, sweep2,
                               upper_bound1, upper_bound2)
from .gaussian_model import ParameterDomainError
from .mc_typicality import ENGINES, ExperimentTooLarge, experiment_from_json, phase_scan
from .optimize import GridSpec

SCHEMA = "# schema=1"
EXIT_OK, EXIT_INFEASIBLE, EXIT_USAGE = 0, 1, 2


class UsageError(ValueError):
    pass


def fmt(x) -> str:
    if isinstance(x, str):
        return x
    if x is None:
        return ""
    return f"{float(x):.9g}"


def _floats(text: str, flag: str, count: int | None = None) -> list[float]:
    try:
        vals = [float(t) for t in text.split(",") if t.strip() != ""]
    except ValueError:
        raise UsageError(f"{flag}: expected comma-separated numbers, got {text!r}") from None
    if count is not None and len(vals) != count:
        raise UsageError(f"{flag}: expected {count} values, got {len(vals)}")
    if any(not np.isfinite(v) for v in vals):
        raise UsageError(f"{flag}: values must be finite")
    return vals


def _ints(text: str, flag: str) -> list[int]:
    try:
        vals = [int(t) for t in text.split(",") if t.strip() != ""]
    except ValueError:
        raise UsageError(f"{flag}: expected comma-separated integers, got {text!r}") from None
    if not vals or any(v < 1 for v in vals):
        raise UsageError(f"{flag}: need positive integers")
    return vals


def _workers() -> int:
    n = os.cpu_count() or 1
    cap = os.environ.get("DIAMOND_THREADS")
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            raise UsageError(f"DIAMOND_THREADS must be an integer, got {cap!r}") from None
    return n


def _grid(args) -> GridSpec:
    if args.grid < 2:
        raise UsageError(f"--grid must be >= 2, got {args.grid}")
    return GridSpec(resolution=args.grid)


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _csv(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    buf.write(SCHEMA + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    return buf.getvalue()


def _powers(text: str, count: int) -> list[float]:
    vals = _floats(text, "--power")
    if len(vals) == 1:
        vals = vals * count
    if len(vals) != count or any(v <= 0 for v in vals):
        raise UsageError(f"--power: expected {count} positive value(s), got {text!r}")
    return vals


# ---------------------------------------------------------------------------

def cmd_bounds2(args) -> int:
    caps_v = _floats(args.caps, "--caps", 4)
    if any(c < 0 for c in caps_v):
        raise UsageError(f"--caps: capacities must be nonnegative, got {args.caps}")
    p1, p2 = _powers(args.power, 2)
    caps = LinkCaps2.from_seq(caps_v)
    spec = _grid(args)
    lo = optimize_lower_bound2(caps, spec, p1, p2)
    u1 = upper_bound1(caps, spec, p1, p2, args.phi_variant)
    u2 = upper_bound2(caps, spec, p1, p2, args.phi_variant)
    cs = cut_set2(caps, p1, p2)
    for name, r in (("lower", lo), ("upper1", u1), ("upper2", u2)):
        args_txt = ", ".join(fmt(v) for v in r.argmax_params or ())
        n_txt = f" N={fmt(r.argmin_n)}" if r.argmin_n is not None else ""
        print(f"{name:7s} {fmt(r.value_bits):>12s} bits  binding: {r.binding_label}  "
              f"(rho, rho1, rho2) = ({args_txt}){n_txt}", file=sys.stderr)
    print(f"cutset  {fmt(cs):>12s} bits", file=sys.stderr)
    header = ["c11", "c22", "c12", "c21", "p1", "p2", "lower", "upper1", "upper2", "cutset",
              "binding_lower", "binding_upper1", "binding_upper2",
              "rho_lower", "rho1_lower", "rho2_lower", "rho_upper1", "rho1_upper1", "rho2_upper1",
              "rho_upper2", "rho1_upper2", "rho2_upper2", "n_upper2"]
    row = [*caps_v, p1, p2, lo.value_bits, u1.value_bits, u2.value_bits, cs,
           lo.binding_label, u1.binding_label, u2.binding_label,
           *lo.argmax_params, *u1.argmax_params, *u2.argmax_params, u2.argmin_n]
    _emit(_csv(header, [row]), args.out)
    return EXIT_OK


def _c_values(args) -> list[float]:
    if args.steps < 1:
        raise UsageError(f"--steps must be >= 1, got {args.steps}")
    if args.c_min < 0 or args.c_max < args.c_min:
        raise UsageError(f"need 0 <= --c-min <= --c-max, got {args.c_min}, {args.c_max}")
    if args.steps == 1:
        return [args.c_min]
    return [float(v) for v in np.linspace(args.c_min, args.c_max, args.steps)]


def _c0_values(args) -> list[float]:
    vals = _floats(args.c0, "--c0")
    if not vals:
        raise UsageError("--c0: empty list")
    if any(v < 0 for v in vals):
        raise UsageError("--c0: capacities must be nonnegative")
    return vals


SWEEP_HEADER = ["c0", "c", "lower", "upper", "cutset", "binding_lower", "binding_upper"]


def _sweep_rows(rows):
    return [[r.c0, r.c, r.lower, r.upper, r.cutset, r.binding_lower, r.binding_upper] for r in rows]


def cmd_sweep2(args) -> int:
    p1, p2 = _powers(args.power, 2)
    rows = sweep2(_c_values(args), _c0_values(args), p1, p2, _grid(args), _workers())
    _emit(_csv(SWEEP_HEADER, _sweep_rows(rows)), args.out)
    return EXIT_OK


def cmd_sweep3(args) -> int:
    (p,) = _powers(args.power, 1)
    rows = sweep3(_c_values(args), _c0_values(args), p, _grid(args), _workers())
    _emit(_csv(SWEEP_HEADER, _sweep_rows(rows)), args.out)
    return EXIT_OK


def _load_system(ref: str) -> fme.LinearInequalitySystem:
    if ref.startswith("@"):
        return fme.load_bundled(ref[1:])
    try:
        return fme.LinearInequalitySystem.from_json(Path(ref).read_text())
    except OSError as e:
        raise UsageError(f"cannot read system file {ref!r}: {e.strerror}") from None
    except json.JSONDecodeError as e:
        raise UsageError(f"{ref}: invalid JSON ({e})") from None


def cmd_fme(args) -> int:
    system = _load_system(args.system)
    victims = [v.strip() for v in args.eliminate.split(",") if v.strip()]
    if victims:
        report = fme.eliminate(system, victims, remove_redundant=not args.no_lp)
        result = report.result
        print(f"eliminated {len(victims)} symbol(s); {len(result.relations)} rows "
              f"({report.dropped_redundant} redundant dropped)", file=sys.stderr)
    else:
        result = fme.normalize(system)
    _emit(json.dumps(result.to_json(), indent=1) + "\n", args.out)
    if args.golden:
        golden = _load_system(args.golden)
        extra, missing = fme.row_difference(result, golden)
        if set(result.symbols) != set(golden.symbols) or extra or missing:
            order = list(result.symbols) + [s for s in golden.symbols if s not in result.symbols]
            print(f"MISMATCH vs golden: {len(extra)} row(s) only in result, "
                  f"{len(missing)} only in golden", file=sys.stderr)
            for r in extra:
                print(f"  + {r.pretty(order)}", file=sys.stderr)
            for r in missing:
                print(f"  - {r.pretty(order)}", file=sys.stderr)
            return EXIT_INFEASIBLE
        print("golden: match", file=sys.stderr)
    return EXIT_OK


MC_HEADER = ["n", "mean", "half_width", "trials", "seed", "engine"]


def cmd_mc(args) -> int:
    try:
        text = Path(args.spec).read_text()
    except OSError as e:
        raise UsageError(f"cannot read spec {args.spec!r}: {e.strerror}") from None
    try:
        exp = experiment_from_json(text, args.kind, seed=args.seed, trials=args.trials,
                                   engine=args.engine)
    except json.JSONDecodeError as e:
        raise UsageError(f"{args.spec}: invalid JSON ({e})") from None
    n_values = _ints(args.n_list, "--n-list") if args.n_list else [exp.config.n]
    rows = phase_scan(exp, n_values)
    out = [[n, est.mean, est.half_width_95, est.trials, seed, est.engine] for n, seed, est in rows]
    _emit(_csv(MC_HEADER, out), args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="diamond", description=(
        "Capacity bounds for Gaussian diamond relay networks with conferencing relays, "
        "exact Fourier-Motzkin projection and Monte Carlo typicality experiments."))
    sub = ap.add_subparsers(dest="command", required=True)

    def grid_flag(p):
        p.add_argument("--grid", type=int, default=41, help="grid points per correlation axis (default 41)")

    p = sub.add_parser("bounds2", help="two-relay lower/upper/cut-set bounds at one capacity vector")
    p.add_argument("--caps", required=True, help="c11,c22,c12,c21 (c12 carries relay 2 -> relay 1)")
    p.add_argument("--power", default="1,1", help="p1,p2 (default 1,1)")
    grid_flag(p)
    p.add_argument("--phi-variant", choices=("sq", "linear"), default="sq",
                   help="sq: 1 - rho_k^2 factor (matches log-det); linear: (1 - rho_k)^2")
    p.add_argument("--out", help="CSV output path (default stdout)")
    p.set_defaults(func=cmd_bounds2)

    for name, func, power_default in (("sweep2", cmd_sweep2, "1,1"), ("sweep3", cmd_sweep3, "1")):
        p = sub.add_parser(name, help=f"{name[-1]}-relay bounds over a (C0, C) grid")
        p.add_argument("--c0", required=True, help="comma list of conferencing capacities")
        p.add_argument("--c-min", type=float, default=0.0)
        p.add_argument("--c-max", type=float, default=3.0)
        p.add_argument("--steps", type=int, default=13)
        p.add_argument("--power", default=power_default)
        grid_flag(p)
        p.add_argument("--out", help="CSV output path (default stdout)")
        p.set_defaults(func=func)

    p = sub.add_parser("fme", help="Fourier-Motzkin projection of a JSON inequality system")
    p.add_argument("--system", required=True, help="system JSON path, or @split_rate_system for the bundled one")
    p.add_argument("--eliminate", required=True, help="comma list of symbols to eliminate (may be empty)")
    p.add_argument("--golden", help="expected result JSON (or @split_rate_projection); mismatch exits 1")
    p.add_argument("--no-lp", action="store_true", help="skip exact LP redundancy removal")
    p.add_argument("--out", help="result JSON path (default stdout)")
    p.set_defaults(func=cmd_fme)

    p = sub.add_parser("mc", help="Monte Carlo lemma experiments")
    p.add_argument("kind", choices=("cover", "pack", "dict"))
    p.add_argument("--spec", required=True, help="experiment JSON")
    p.add_argument("--seed", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--n-list", help="comma list of blocklengths (default: the n in the experiment file)")
    p.add_argument("--engine", choices=ENGINES)
    p.add_argument("--out", help="CSV output path (default stdout)")
    p.set_defaults(func=cmd_mc)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ExperimentTooLarge, fme.RowExplosionError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (UsageError, ParameterDomainError, fme.FMEError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
