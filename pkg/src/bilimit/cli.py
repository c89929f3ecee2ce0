"""bilimit command-line driver.

Usage:
    bilimit list-fixtures
    bilimit analyze-series --fixture ex5 --eps 1e-2 --cap-m 128 --cap-n 128
    bilimit analyze-series --terms terms.csv
    bilimit analyze-integral --fixture ex7 --eps 0.1 --x-cap 1024 --y-cap 1024
    bilimit fubini-check --fixture ex6 --eps 1e-4 --csv-out curves/
    bilimit grid-export --fixture ex3 --what partial-sums --range 0:8 --out ex3.csv

JSON goes to stdout, diagnostics to stderr. Exit codes: 0 analysis
completed (whatever the verdict), 2 input error, 3 regular-convergence
hypothesis rejected by fubini-check.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import math
import os
import sys
import time
from typing import Optional

import numpy as np

from . import __version__
from .classify import ClassifierConfig, ConfigError, classify_absolute, classify_pringsheim, classify_regular, \
    row_col_verdicts, successive_sum_check
from .fubini import FubiniReport, HypothesisRejected, IntegralClassifierConfig, StripUniformity, \
    classify_integral_pringsheim, classify_integral_regular, fubini_check, ProbeGrid, theorem2_characterize
from .integrals import Integrand, IntegrationRangeError, QuadratureError, cell_embed, horizontal_strip
from .series import PrefixSumTable, from_array
from .verdict import PreconditionError, to_jsonable
from .zoo import FIXTURES, fixture

EXIT_OK, EXIT_INPUT, EXIT_REJECTED = 0, 2, 3


class InputError(Exception):
    pass


def _num(x) -> Optional[str]:
    return None if x is None else format(float(x), ".17g")


def _cnum(z):
    return None if z is None else {"re": _num(complex(z).real), "im": _num(complex(z).imag)}


def _echo(cfg) -> dict:
    out = {}
    for f in dataclasses.fields(cfg):
        v = getattr(cfg, f.name)
        if isinstance(v, bool) or v is None or isinstance(v, str):
            out[f.name] = v
        elif isinstance(v, int):
            out[f.name] = v
        elif isinstance(v, float):
            out[f.name] = _num(v)
        elif isinstance(v, tuple):
            out[f.name] = [_num(x) for x in v]
        else:
            out[f.name] = str(v)
    return out


def _emit(doc: dict) -> None:
    sys.stdout.write(json.dumps(doc, indent=2, sort_keys=False) + "\n")


def _envelope(source: str, cfg, started: float, timing: bool, **body) -> dict:
    doc = {"tool_version": __version__, "input": source, "config": _echo(cfg)}
    doc.update(body)
    # wall time breaks byte-identical output, so it is opt-in
    doc["timing"] = {"milliseconds": round((time.perf_counter() - started) * 1000, 3)} if timing else None
    return doc


# --- inputs ---------------------------------------------------------------------


def read_terms_csv(path: str) -> np.ndarray:
    """Sparse ``j,k,re,im`` rows into a dense array; unlisted terms are 0."""
    try:
        fh = open(path, newline="")
    except OSError as e:
        raise InputError(f"{path}: cannot open ({e.strerror})") from None
    entries = {}
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise InputError(f"{path}: empty file")
        cols = [h.strip().lower() for h in header]
        if cols[:3] != ["j", "k", "re"] or cols[3:] not in ([], ["im"]):
            raise InputError(f"{path}:1: header must be j,k,re,im")
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(cols):
                raise InputError(f"{path}:{line}: expected {len(cols)} fields, got {len(row)}")
            try:
                j, k = int(row[0]), int(row[1])
                z = complex(float(row[2]), float(row[3]) if len(row) > 3 else 0.0)
            except ValueError:
                raise InputError(f"{path}:{line}: malformed number") from None
            if j < 0 or k < 0:
                raise InputError(f"{path}:{line}: indices must be >= 0")
            if not (math.isfinite(z.real) and math.isfinite(z.imag)):
                raise InputError(f"{path}:{line}: non-finite value")
            if (j, k) in entries:
                raise InputError(f"{path}:{line}: duplicate entry ({j}, {k})")
            entries[(j, k)] = z
    if not entries:
        raise InputError(f"{path}: no terms")
    rows = 1 + max(j for j, _ in entries)
    ncols = 1 + max(k for _, k in entries)
    arr = np.zeros((rows, ncols), dtype=complex)
    for (j, k), z in entries.items():
        arr[j, k] = z
    return arr


def _series_source(args):
    if args.fixture:
        fx = _fixture(args.fixture)
        if fx.source is None:
            raise InputError(f"fixture {fx.id} is an integrand, not a series")
        return fx.source, fx.id
    return from_array(read_terms_csv(args.terms), os.path.basename(args.terms)), args.terms


def _integrand(args, cap: float) -> tuple[Integrand, str]:
    n = int(math.ceil(cap))
    if getattr(args, "fixture", None):
        fx = _fixture(args.fixture)
        return fx.embedded(n), fx.id
    path = args.cells
    return cell_embed(from_array(read_terms_csv(path), os.path.basename(path)), n), path


def _fixture(fid: str):
    try:
        return fixture(fid)
    except KeyError as e:
        raise InputError(e.args[0]) from None


# --- commands -------------------------------------------------------------------


def cmd_list_fixtures(args) -> int:
    out = []
    for fx in FIXTURES.values():
        exp = {k: (_cnum(v) if k == "limit" else v) for k, v in dataclasses.asdict(fx.expected).items()}
        out.append({"id": fx.id, "kind": fx.kind, "description": fx.description, "expected": exp,
                    "notes": list(fx.notes)})
    _emit({"tool_version": __version__, "fixtures": out})
    return EXIT_OK


def cmd_analyze_series(args) -> int:
    started = time.perf_counter()
    source, name = _series_source(args)
    cfg = ClassifierConfig(eps=args.eps, cap_m=args.cap_m, cap_n=args.cap_n, seed=args.seed,
                           sample_budget=args.sample_budget)
    table = PrefixSumTable(source, cfg.cap_m, cfg.cap_n)
    reg = classify_regular(table, cfg)
    rc = row_col_verdicts(table, cfg)
    verdicts = {
        "pringsheim": to_jsonable(classify_pringsheim(table, cfg)),
        "regular": to_jsonable(reg),
        "absolute": to_jsonable(classify_absolute(table, cfg)),
    }
    rows_cols = {**rc.summary(), "all_rows_converge": rc.all_rows_converge,
                 "all_cols_converge": rc.all_cols_converge, "judged_rows": len(rc.rows), "judged_cols": len(rc.cols)}
    successive = None
    if reg.converges:
        rep = successive_sum_check(table, cfg)
        successive = {"by_rows": _cnum(rep.by_rows), "by_cols": _cnum(rep.by_cols), "double": _cnum(rep.pringsheim),
                      "residuals": [_num(r) for r in rep.residuals], "passed": rep.passed}
    _emit(_envelope(name, cfg, started, args.timing, verdicts=verdicts, rows_cols=rows_cols,
                    successive_sums=successive))
    return EXIT_OK


def _icfg(args) -> IntegralClassifierConfig:
    levels = tuple(args.strip_c) if getattr(args, "strip_c", None) else None
    return IntegralClassifierConfig(eps=args.eps, x_cap=args.x_cap, y_cap=args.y_cap, grid=args.grid, seed=args.seed,
                                    hypothesis_eps=getattr(args, "hypothesis_eps", None), strip_levels=levels)


def _strip_json(s: StripUniformity) -> dict:
    return {"axis": s.axis, "c": _num(s.c), "rho": _num(s.rho), "uniform": s.uniform,
            "persistent_deviation": _num(s.persistent), "pointwise_gap": _num(s.pointwise_gap),
            "witness": None if s.witness is None else [_num(x) for x in s.witness],
            "deviations": [[_num(x), _num(d)] for x, d in s.deviations]}


def cmd_analyze_integral(args) -> int:
    started = time.perf_counter()
    cfg = _icfg(args)
    f, name = _integrand(args, max(cfg.x_cap, cfg.y_cap))
    g = ProbeGrid(f, cfg)
    t2 = theorem2_characterize(f, cfg)
    verdicts = {"pringsheim": to_jsonable(classify_integral_pringsheim(f, cfg, grid=g)),
                "regular": to_jsonable(classify_integral_regular(f, cfg, grid=g))}
    char = {"strips": [_strip_json(s) for s in t2.strips], "uniform": t2.uniform,
            "regular_by_characterization": t2.regular_by_characterization,
            "pointwise_strip_limits": t2.pointwise_strip_limits,
            "uniformity_fails_with_pointwise_limits": t2.example7_type}
    _emit(_envelope(name, cfg, started, args.timing, verdicts=verdicts, characterization=char))
    return EXIT_OK


def fubini_json(rep: FubiniReport) -> dict:
    return {
        "I1_curve": [[_num(a), _cnum(v)] for a, v in rep.I1_curve],
        "I2_curve": [[_num(b), _cnum(v)] for b, v in rep.I2_curve],
        "I1_limit": _cnum(rep.I1_limit),
        "I2_limit": _cnum(rep.I2_limit),
        "pringsheim_I": _cnum(rep.pringsheim_I),
        "residuals": [_num(r) for r in rep.residuals],
        "tolerance": _num(rep.tolerance),
        "passed": rep.passed,
        "uniformity": [_num(u) for u in rep.uniformity],
        "finite_rectangles": [{"rect": [_num(x) for x in c.rect], "direct": _cnum(c.direct),
                               "v_inner": _cnum(c.v_inner), "u_inner": _cnum(c.u_inner)} for c in rep.finite_checks],
        "finite_discrepancy": _num(rep.finite_discrepancy),
        "marginals": {k: [[_num(t), _num(v)] for t, v in vs] for k, vs in rep.marginals.items()},
        "regular": to_jsonable(rep.regular),
        "pringsheim": to_jsonable(rep.pringsheim),
    }


def _write_curve(path: str, label: str, curve) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([label, "value_re", "value_im"])
        for a, v in curve:
            w.writerow([repr(float(a)), "" if v is None else repr(v.real), "" if v is None else repr(v.imag)])


def cmd_fubini_check(args) -> int:
    started = time.perf_counter()
    cfg = _icfg(args)
    f, name = _integrand(args, max(cfg.x_cap, cfg.y_cap))
    try:
        rep = fubini_check(f, cfg)
    except HypothesisRejected as e:
        _emit(_envelope(name, cfg, started, args.timing, rejected=str(e), regular=to_jsonable(e.verdict), fubini=None))
        return EXIT_REJECTED
    if args.csv_out:
        try:
            os.makedirs(args.csv_out, exist_ok=True)
            _write_curve(os.path.join(args.csv_out, "I1.csv"), "A", rep.I1_curve)
            _write_curve(os.path.join(args.csv_out, "I2.csv"), "B", rep.I2_curve)
        except OSError as e:
            raise InputError(f"{args.csv_out}: cannot write curves ({e.strerror})") from None
    _emit(_envelope(name, cfg, started, args.timing, fubini=fubini_json(rep)))
    return EXIT_OK


def _parse_range(text: str) -> list[int]:
    try:
        lo, hi = (int(t) for t in text.split(":"))
    except ValueError:
        raise InputError(f"range must look like LO:HI, got {text!r}") from None
    if lo < 0 or hi < lo:
        raise InputError(f"bad range {text!r}")
    return list(range(lo, hi + 1))


def _parse_points(text: str) -> list[float]:
    try:
        pts = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise InputError(f"points must be comma-separated numbers, got {text!r}") from None
    if not pts or min(pts) < 0 or not all(math.isfinite(p) for p in pts):
        raise InputError("points must be finite and >= 0")
    return pts


def cmd_grid_export(args) -> int:
    if args.what == "partial-sums":
        source, _ = _series_source(args)
        idx = _parse_range(args.range)
        table = PrefixSumTable(source, idx[-1], idx[-1])
        header = ["m", "n", "value_re", "value_im"]
        rows = [(m, n, table.partial_sum(m, n)) for m in idx for n in idx]
    else:
        pts = _parse_points(args.points) if args.points else [float(i) for i in _parse_range(args.range)]
        fx_args = argparse.Namespace(fixture=args.fixture, cells=args.cells or args.terms)
        f, _ = _integrand(fx_args, max(max(pts), 1.0))
        if args.what == "partial-integrals":
            header = ["x", "y", "value_re", "value_im"]
            P = f.partial_integrals(pts, pts)
            rows = [(repr(x), repr(y), complex(P[i, j])) for i, x in enumerate(pts) for j, y in enumerate(pts)]
        else:
            header = ["x", "y", "y1", "value_re", "value_im"]
            rows = [(repr(x), repr(y), repr(y1), horizontal_strip(f, x, y, y1))
                    for x in pts for y in pts for y1 in pts if y < y1]
    try:
        fh = sys.stdout if args.out == "-" else open(args.out, "w", newline="")
    except OSError as e:
        raise InputError(f"{args.out}: cannot write ({e.strerror})") from None
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for *key, z in rows:
            z = complex(z)
            w.writerow([*key, repr(z.real + 0.0), repr(z.imag + 0.0)])
    finally:
        if fh is not sys.stdout:
            fh.close()
    return EXIT_OK


# --- argument parsing -----------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bilimit", description="Classify double series and double integrals",
                                formatter_class=argparse.RawDescriptionHelpFormatter, epilog=__doc__)
    p.add_argument("--version", action="version", version=f"bilimit {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("list-fixtures", help="list built-in fixtures with provenance notes")

    s = sub.add_parser("analyze-series", help="Pringsheim, regular and absolute verdicts for a series")
    src = s.add_mutually_exclusive_group(required=True)
    src.add_argument("--fixture")
    src.add_argument("--terms", help="CSV with header j,k,re,im (sparse; unlisted terms are 0)")
    s.add_argument("--eps", type=float, default=1e-2)
    s.add_argument("--cap-m", type=int, default=64)
    s.add_argument("--cap-n", type=int, default=64)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--sample-budget", type=int, default=256)
    s.add_argument("--timing", action="store_true", help="include wall time in the JSON (not reproducible)")

    def integral_flags(q, x_cap: float):
        src = q.add_mutually_exclusive_group(required=True)
        src.add_argument("--fixture")
        src.add_argument("--cells", help="cell values as CSV j,k,re,im; cell (j,k) is [j,j+1) x [k,k+1)")
        q.add_argument("--eps", type=float, default=1e-2)
        q.add_argument("--x-cap", type=float, default=x_cap)
        q.add_argument("--y-cap", type=float, default=x_cap)
        q.add_argument("--grid", type=float, default=2.0)
        q.add_argument("--seed", type=int, default=0)
        q.add_argument("--timing", action="store_true")

    a = sub.add_parser("analyze-integral", help="integral verdicts and the strip-uniformity characterization")
    integral_flags(a, 64.0)
    a.add_argument("--strip-c", type=float, nargs="+", help="strip heights c to probe (default 1 and y_cap/8)")

    fc = sub.add_parser("fubini-check", help="iterated limits against the double integral")
    integral_flags(fc, 64.0)
    fc.add_argument("--hypothesis-eps", type=float, default=0.1,
                    help="eps at which regular convergence must be established (default 0.1)")
    fc.add_argument("--csv-out", help="directory for I1.csv and I2.csv")

    g = sub.add_parser("grid-export", help="CSV of partial sums, partial integrals or strip integrals")
    src = g.add_mutually_exclusive_group(required=True)
    src.add_argument("--fixture")
    src.add_argument("--terms")
    src.add_argument("--cells")
    g.add_argument("--what", choices=["partial-sums", "partial-integrals", "strips"], default="partial-sums")
    g.add_argument("--range", default="0:8", help="index range LO:HI (inclusive)")
    g.add_argument("--points", help="comma-separated coordinates for integral grids")
    g.add_argument("--out", default="-")
    return p


COMMANDS = {
    "list-fixtures": cmd_list_fixtures,
    "analyze-series": cmd_analyze_series,
    "analyze-integral": cmd_analyze_integral,
    "fubini-check": cmd_fubini_check,
    "grid-export": cmd_grid_export,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_INPUT
    if args.command == "grid-export" and args.what == "partial-sums" and args.cells:
        print("bilimit: --cells describes an integrand; use --terms for partial sums", file=sys.stderr)
        return EXIT_INPUT
    try:
        return COMMANDS[args.command](args)
    except (InputError, ConfigError, ValueError, IntegrationRangeError) as e:
        print(f"bilimit: {e}", file=sys.stderr)
        return EXIT_INPUT
    except QuadratureError as e:
        print(f"bilimit: {e} (estimate {e.estimate})", file=sys.stderr)
        return EXIT_INPUT
    except PreconditionError as e:
        print(f"bilimit: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
