"""Command-line front end.

Every subcommand writes a JSON report (see ``docs/report_schema.md``) in
which all numbers are decimal strings, and can emit one of the report's data
series as CSV.  Exit status: 0 on success, 2 for invalid input, 3 when a
numerical step fails.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from fractions import Fraction
from typing import Dict, List, Optional, Sequence

from flint import acb, arb

from . import __version__
from .asymptotics import (
    ExponentData,
    RegionLabel,
    StokesPair,
    CONJECTURE_CASES,
    a_E1,
    a_E2,
    a_E3,
    b_E1,
    b_E2,
    b_E3,
    classify_stokes_detail,
    conjecture_predict,
    exponent_data,
    fine_structure_predict,
    gamma_from_stokes,
    limit_constant,
    P3,
    P4,
    rho_pair,
    stokes_from_gamma,
)
from .glrk import IntegrationError, NonConvergence
from .mpsf import PoleError, to_acb, to_arb, to_decimal, workdps
from .pipelines import (
    ContourError,
    RunProfile,
    deviation_run,
    omega1_run,
    verify_fine_structure,
)

SCHEMA = "ttstar.report/1"
PREC_ENV = "TTSTAR_PREC"

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERIC = 3


class InputError(ValueError):
    pass


# -- serialization ----------------------------------------------------------


def dec(x, digits: int) -> str:
    """Decimal string of a number; exact rationals stay exact."""
    if isinstance(x, (int, Fraction)):
        return str(x)
    if isinstance(x, str):
        return x
    if isinstance(x, float):
        return repr(x)
    return to_decimal(x, digits)


def series_block(points, names: Sequence[str], digits: int) -> dict:
    """``{"columns": [...], "rows": [[...], ...]}`` with real and imaginary parts split."""
    columns = ["t.re", "t.im"]
    for n in names:
        columns += [f"{n}.re", f"{n}.im"]
    rows = []
    for t, y in points:
        t = to_acb(t)
        row = [dec(t.real, digits), dec(t.imag, digits)]
        for v in y:
            v = to_acb(v)
            row += [dec(v.real, digits), dec(v.imag, digits)]
        rows.append(row)
    return {"columns": columns, "rows": rows}


def error_table_block(tab, digits: int = 6) -> Optional[dict]:
    return None if tab is None else tab.to_dict(digits)


def new_report(command: str, args: argparse.Namespace, profile: Optional[RunProfile]) -> dict:
    return {
        "schema": SCHEMA,
        "command": command,
        "arguments": {k: (v if isinstance(v, (str, int, float, bool, type(None))) else str(v)) for k, v in sorted(vars(args).items()) if k not in ("func", "out", "csv", "series")},
        "profile": None if profile is None else profile.to_dict(),
        "results": {},
        "tables": {},
        "singularities": [],
        "series": {},
        "meta": {},
    }


def dump_report(report: dict, path: Optional[str]) -> str:
    text = json.dumps(report, indent=1, sort_keys=True)
    if path:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    return text


def load_report(path: str) -> dict:
    try:
        with open(path) as fh:
            rep = json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}")
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not JSON: {exc}")
    if rep.get("schema") != SCHEMA:
        raise InputError(f"{path} is not a {SCHEMA} report")
    return rep


def emit_series(report: dict, selector: str, path: Optional[str], lo: Optional[str] = None, hi: Optional[str] = None) -> int:
    """Write a series as CSV; returns the number of data rows.

    ``selector`` is a series name, optionally followed by ``:`` and a
    comma-separated list of columns.  ``lo``/``hi`` restrict the rows to
    ``lo <= t.re <= hi``.
    """
    name, _, cols = selector.partition(":")
    series = report.get("series", {})
    if name not in series:
        raise InputError(f"unknown series {name!r}; available: {sorted(series)}")
    block = series[name]
    columns = block["columns"]
    if cols:
        want = [c.strip() for c in cols.split(",")]
        for c in want:
            if c not in columns:
                raise InputError(f"series {name!r} has no column {c!r}; columns: {columns}")
        idx = [columns.index(c) for c in want]
    else:
        want, idx = columns, list(range(len(columns)))
    rows = block["rows"]
    if lo is not None or hi is not None:
        with workdps(30):
            lo_v = to_arb(lo) if lo is not None else None
            hi_v = to_arb(hi) if hi is not None else None
            kept = []
            for r in rows:
                t = arb(r[0])
                if lo_v is not None and t < lo_v:
                    continue
                if hi_v is not None and t > hi_v:
                    continue
                kept.append(r)
            rows = kept
    fh = open(path, "w", newline="") if path else sys.stdout
    try:
        w = csv.writer(fh)
        w.writerow(want)
        for r in rows:
            w.writerow([r[i] for i in idx])
    finally:
        if path:
            fh.close()
    return len(rows)


# -- argument helpers ------------------------------------------------------


def default_prec() -> Optional[int]:
    raw = os.environ.get(PREC_ENV)
    if raw is None or raw == "":
        return None
    try:
        val = int(raw)
    except ValueError:
        raise InputError(f"{PREC_ENV} must be an integer, got {raw!r}")
    if val < 10:
        raise InputError(f"{PREC_ENV} must be at least 10")
    return val


def number(text: str):
    """Exact rational or decimal string; also ``sqrt(q)``."""
    text = text.strip()
    try:
        if "/" in text or text.lstrip("+-").isdigit():
            return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    try:
        with workdps(30):
            to_arb(text)
    except Exception:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    return text


def build_profile(args, **kw) -> RunProfile:
    prec = args.prec if args.prec is not None else default_prec()
    extra = {}
    if prec is not None:
        extra["prec"] = prec
    if getattr(args, "r_start", None) is not None:
        extra["r_start"] = args.r_start
        extra["r_refined"] = args.r_start + 10 if args.r_refined is None else args.r_refined
    elif getattr(args, "r_refined", None) is not None:
        extra["r_refined"] = args.r_refined
    if getattr(args, "s_final", None) is not None:
        extra["s_final"] = args.s_final
    if getattr(args, "no_audit", False):
        extra["audit"] = False
    if getattr(args, "cauchy_n", None) is not None:
        extra["cauchy_n"] = args.cauchy_n
    extra.update(kw)
    return RunProfile.named(args.profile, **extra)


def stokes_args(args) -> StokesPair:
    if args.s1 is None or args.s2 is None:
        raise InputError("both --s1 and --s2 are required")
    return StokesPair(args.s1, args.s2)


# -- subcommands -----------------------------------------------------------


def cmd_verify(args) -> dict:
    case = RegionLabel.parse(args.case)
    if args.gamma0 is not None and args.gamma1 is not None:
        inputs = ExponentData(args.gamma0, args.gamma1)
    elif args.s1 is not None and args.s2 is not None:
        inputs = StokesPair(args.s1, args.s2)
    else:
        raise InputError("give --gamma0/--gamma1 or --s1/--s2")
    prof = build_profile(args, case=case, inputs=inputs)
    rep = new_report("verify", args, prof)
    out = verify_fine_structure(prof)
    d = prof.work_prec
    rep["results"] = {
        "stokes": [dec(v, d) for v in (out.stokes.s1, out.stokes.s2)],
        "s_final": out.s_final,
        "truncation_bound": out.bound,
        "values_r1": [dec(v.real, d) for v in out.r1_values],
        "values_s_final": [dec(v.real, d) for v in out.s_final_values],
    }
    rep["tables"] = {
        "seed_errors": error_table_block(out.seed_errors),
        "r1_errors": error_table_block(out.r1_errors),
        "s_final_errors": error_table_block(out.s_final_errors),
        "deviations": out.deviations.to_dict(),
    }
    rep["series"]["s_leg"] = series_block(out.series["s_leg"], ["u0", "u1", "du0", "du1"], d)
    return rep


def cmd_conjecture(args) -> dict:
    p = stokes_args(args)
    prec = args.prec or default_prec() or 60
    cls = classify_stokes_detail(p, prec)
    prof = None
    if cls.label is RegionLabel.OMEGA1 and not args.classify_only:
        prof = build_profile(args, inputs=p, case=RegionLabel.OMEGA1)
    rep = new_report("conjecture", args, prof)
    e = exponent_data(p, prec)
    rep["results"] = {
        "region": cls.label.value,
        "exact": cls.exact,
        "near_boundary": cls.near_boundary,
        "gamma0": dec(to_acb(e.gamma0), prec),
        "gamma1": dec(to_acb(e.gamma1), prec),
        # gamma0 is real here, so rho0 is real up to rounding
        "rho0": None if e.rho0 is None else dec(to_acb(e.rho0).real, prec),
        "rho1": None if e.rho1 is None else dec(e.rho1, prec),
    }
    if args.s is not None and cls.label in CONJECTURE_CASES:
        pred = conjecture_predict(cls.label, p, args.s, prec)
        rep["results"]["prediction"] = {"s": dec(args.s, prec), "labels": list(pred.labels), "values": [dec(v, prec) for v in pred.values]}
    if prof is None:
        return rep
    out = omega1_run(p, prof)
    d = prof.work_prec
    rep["results"].update(
        {
            "s_final": out.s_final,
            "zeros_v1": [dec(z, 12) for z in out.zeros],
            "zero_spacing": None if out.zero_spacing is None else dec(out.zero_spacing, 12),
            "pi_over_abs_im_gamma1": dec(out.predicted_spacing, 12),
            "skipped_samples": out.skipped,
            "circles": [
                {"center": dec(c.center, 20), "radius": dec(c.radius, 10), "closure": dec(c.closure, 6), "chord_check_digits": [dec(x, 6) for x in c.chord_check]}
                for c in out.circles
            ],
        }
    )
    rep["tables"] = {
        "deltas": out.deltas.to_dict(),
        "r1_errors": error_table_block(out.r1_errors),
        "s_final_errors": error_table_block(out.s_final_errors),
    }
    for name, pts in out.series.items():
        rep["series"][name] = series_block(pts, ["v0", "v1", "dv0", "dv1"], d)
    return rep


def _deviation_constants(args, prec):
    g0, g1 = args.gamma0, args.gamma1
    if g0 is None or g1 is None:
        raise InputError("--gamma0 and --gamma1 are required")
    if args.c0 is not None and args.c1 is not None:
        return g0, g1, args.c0, args.c1
    with workdps(prec + 10):
        r0, r1 = rho_pair(g0, g1, prec + 10)
        dc0 = to_arb(args.dc0 if args.dc0 is not None else 0)
        dc1 = to_arb(args.dc1 if args.dc1 is not None else 0)
        c0 = to_arb(r0).exp() + dc0
        c1 = to_arb(r1).exp() + dc1
    return g0, g1, c0, c1


def cmd_deviate(args) -> dict:
    prof = build_profile(args)
    g0, g1, c0, c1 = _deviation_constants(args, prof.work_prec)
    prof.deviation = (c0, c1)
    rep = new_report("deviate", args, prof)
    out = deviation_run(g0, g1, c0, c1, prof)
    d = prof.work_prec
    rep["results"] = {
        "c0": dec(c0, d),
        "c1": dec(c1, d),
        "seed_dropped": dec(out.seed_dropped, 6),
        "values_s0": [dec(v.real, d) for v in out.s0_values],
        "windings": {k: dec(v, 6) for k, v in out.windings.items()},
    }
    rep["singularities"] = [r.to_dict() for r in out.singularities]
    for name, pts in out.series.items():
        rep["series"][name] = series_block(pts, ["v0", "v1", "dv0", "dv1"], d)
    if out.circle is not None:
        rep["series"]["circle"] = series_block(out.circle.samples, ["v0", "v1", "dv0", "dv1"], d)
    return rep


SPECIAL_OPS = ("stokes", "gamma", "rho", "classify", "fine", "a_E1", "b_E1", "a_E2", "b_E2", "a_E3", "b_E3", "P3", "P4", "limit")


def cmd_special(args) -> dict:
    prec = args.prec or default_prec() or 60
    rep = new_report("special", args, None)
    op = args.op
    res: Dict[str, object] = {}
    if op == "stokes":
        p = stokes_from_gamma(_need(args.gamma0, "gamma0"), _need(args.gamma1, "gamma1"), prec)
        res = {"s1": dec(to_arb(p.s1), prec), "s2": dec(to_arb(p.s2), prec)}
    elif op == "gamma":
        e = gamma_from_stokes(stokes_args(args), prec)
        res = {"gamma0": dec(to_acb(e.gamma0), prec), "gamma1": dec(to_acb(e.gamma1), prec)}
    elif op == "rho":
        r0, r1 = rho_pair(_need(args.gamma0, "gamma0"), _need(args.gamma1, "gamma1"), prec)
        res = {"rho0": dec(r0, prec), "rho1": dec(r1, prec)}
    elif op == "classify":
        c = classify_stokes_detail(stokes_args(args), prec)
        res = {"region": c.label.value, "exact": c.exact, "near_boundary": c.near_boundary}
    elif op == "fine":
        case = RegionLabel.parse(_need(args.case, "case"))
        pred = fine_structure_predict(case, ExponentData(_need(args.gamma0, "gamma0"), _need(args.gamma1, "gamma1")), _need(args.s, "s"), prec)
        res = {"labels": list(pred.labels), "values": [dec(v, prec) for v in pred.values]}
    elif op in ("a_E1", "b_E1", "a_E3", "b_E3"):
        f = {"a_E1": a_E1, "b_E1": b_E1, "a_E3": a_E3, "b_E3": b_E3}[op]
        res = {op: dec(f(_need(args.gamma0, "gamma0"), prec), prec)}
    elif op in ("a_E2", "b_E2"):
        f = {"a_E2": a_E2, "b_E2": b_E2}[op]
        res = {op: dec(f(_need(args.gamma1, "gamma1"), prec), prec)}
    elif op in ("P3", "P4"):
        f = P3 if op == "P3" else P4
        res = {op: dec(f(_need(args.s, "s"), prec), prec)}
    elif op == "limit":
        name = _need(args.name, "name")
        val, agree = limit_constant(name, stokes_args(args), prec, digits=args.digits)
        res = {name: dec(val, prec), "digits_agreeing": agree}
    rep["results"] = res
    return rep


def _need(v, name):
    if v is None:
        raise InputError(f"--{name.replace('_', '-')} is required for this operation")
    return v


def _leaves(obj, path=()):
    if isinstance(obj, dict):
        for k in sorted(obj):
            yield from _leaves(obj[k], path + (k,))
    elif isinstance(obj, list):
        for i, v in enumerate(obj):
            yield from _leaves(v, path + (i,))
    else:
        yield path, obj


def cmd_audit(args) -> dict:
    a = load_report(args.reports[0])
    b = load_report(args.reports[1])
    rep = new_report("audit", args, None)
    la = dict(_leaves({k: a[k] for k in ("results", "tables", "series", "singularities")}))
    lb = dict(_leaves({k: b[k] for k in ("results", "tables", "series", "singularities")}))
    rows = []
    missing = sorted(set(map(str, la)) ^ set(map(str, lb)))
    worst_abs = arb(0)
    worst_rel = arb(0)
    compared = 0
    with workdps(args.prec or 200):
        for key in sorted(set(la) & set(lb), key=str):
            va, vb = la[key], lb[key]
            if not isinstance(va, str) or not isinstance(vb, str):
                continue
            try:
                x, y = _parse_num(va), _parse_num(vb)
            except ValueError:
                if va != vb:
                    rows.append({"path": "/".join(map(str, key)), "a": va, "b": vb})
                continue
            compared += 1
            diff = abs(x - y)
            ref = abs(y)
            rel = diff / ref if not ref.is_zero() else diff
            if diff > worst_abs:
                worst_abs = diff
            if rel > worst_rel:
                worst_rel = rel
    rep["results"] = {
        "compared": compared,
        "max_absolute": dec(worst_abs, 6),
        "max_relative": dec(worst_rel, 6),
        "mismatched_text": rows,
        "unpaired_fields": missing,
    }
    return rep


def _parse_num(text: str) -> acb:
    t = text.strip()
    if t.endswith("j"):
        body = t[:-1]
        for i in range(len(body) - 1, 0, -1):
            if body[i] in "+-" and body[i - 1] not in "eE":
                return acb(arb(body[:i]), arb(body[i:]))
        raise ValueError(text)
    if t in ("inf", "-inf", "nan"):
        raise ValueError(text)
    try:
        return acb(to_arb(t))
    except Exception:
        raise ValueError(text)


# -- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ttstar", description="High-precision numerics for the radial tt*-Toda equation.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--prec", type=int, default=None, help=f"target digits (default: profile, or ${PREC_ENV})")
    common.add_argument("--out", default=None, help="write the JSON report here (default: stdout)")
    common.add_argument("--series", default=None, help="series selector NAME[:col,col] to emit as CSV")
    common.add_argument("--csv", default=None, help="CSV destination for --series (default: stdout)")
    common.add_argument("--range", default=None, help="LO:HI bounds on t.re for --series")

    run = argparse.ArgumentParser(add_help=False)
    run.add_argument("--profile", choices=("desk", "paper"), default="desk")
    run.add_argument("--r-start", type=number, default=None)
    run.add_argument("--r-refined", type=number, default=None)
    run.add_argument("--no-audit", action="store_true", help="skip the refined run")

    sub = ap.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", parents=[common, run], help="fine-structure verification of a smooth case")
    v.add_argument("--case", required=True, help="Omega0 (or 'general'), E1, E2, E3, V1, V2, V3")
    v.add_argument("--gamma0", type=number)
    v.add_argument("--gamma1", type=number)
    v.add_argument("--s1", type=number)
    v.add_argument("--s2", type=number)
    v.add_argument("--s-final", type=number, default=None)
    v.set_defaults(func=cmd_verify)

    c = sub.add_parser("conjecture", parents=[common, run], help="classify Stokes data; run the Omega1 pipeline")
    c.add_argument("--s1", type=number, required=True)
    c.add_argument("--s2", type=number, required=True)
    c.add_argument("--s", type=number, default=None, help="evaluate the predicted asymptote at this s")
    c.add_argument("--s-final", type=number, default=None)
    c.add_argument("--cauchy-n", type=int, default=None)
    c.add_argument("--classify-only", action="store_true")
    c.set_defaults(func=cmd_conjecture)

    d = sub.add_parser("deviate", parents=[common, run], help="solution with deviated constants; locate singularities")
    d.add_argument("--gamma0", type=number, required=True)
    d.add_argument("--gamma1", type=number, required=True)
    d.add_argument("--c0", type=number)
    d.add_argument("--c1", type=number)
    d.add_argument("--dc0", type=number, help="c0 = exp(rho0) + dc0")
    d.add_argument("--dc1", type=number, help="c1 = exp(rho1) + dc1")
    d.add_argument("--cauchy-n", type=int, default=None)
    d.set_defaults(func=cmd_deviate)

    s = sub.add_parser("special", parents=[common], help="evaluate a closed-form quantity")
    s.add_argument("--op", choices=SPECIAL_OPS, required=True)
    s.add_argument("--gamma0", type=number)
    s.add_argument("--gamma1", type=number)
    s.add_argument("--s1", type=number)
    s.add_argument("--s2", type=number)
    s.add_argument("--s", type=number)
    s.add_argument("--case")
    s.add_argument("--name", choices=("d0", "d0_tilde", "theta0", "theta0_tilde"))
    s.add_argument("--digits", type=int, default=6)
    s.set_defaults(func=cmd_special)

    a = sub.add_parser("audit", parents=[common], help="compare two reports field by field")
    a.add_argument("reports", nargs=2)
    a.set_defaults(func=cmd_audit)
    return ap


def main(argv: Optional[List[str]] = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    t0 = time.time()
    try:
        rep = args.func(args)
        rep["meta"] = {
            "wall_seconds": round(time.time() - t0, 3),
            "version": __version__,
            "work_prec": None if rep["profile"] is None else rep["profile"]["integrator"]["prec"],
        }
        text = dump_report(rep, args.out)
        if args.series:
            lo = hi = None
            if args.range:
                lo, _, hi = args.range.partition(":")
                lo, hi = lo or None, hi or None
            emit_series(rep, args.series, args.csv, lo, hi)
        if not args.out and not (args.series and not args.csv):
            print(text)
    except (InputError, PoleError, ValueError, TypeError) as exc:
        print(f"ttstar: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (IntegrationError, NonConvergence, ContourError, ArithmeticError) as exc:
        where = getattr(exc, "position", None) or getattr(exc, "location", None)
        extra = f" (at {where})" if where is not None else ""
        print(f"ttstar: numerical failure: {type(exc).__name__}: {exc}{extra}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
