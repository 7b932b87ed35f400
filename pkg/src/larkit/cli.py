"""larkit command line.

Exit status: 0 success, 1 semantic failure (validation, gift wrapping), 2 usage
or I/O error.
"""

from __future__ import annotations

import argparse
import logging
import os
import re
import sys
from pathlib import Path

import numpy as np

from . import formats
from .arrange2d import DEFAULT_EPS, SegmentSoup, planar_arrangement
from .arrange3d import merge_complexes
from .generators import cuboidal_grid, random_segments, transform
from .model import CellTable, Complex, Geometry, euler_both, euler_characteristic, validate_operators
from .tgw import TGWError

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _default_eps() -> float:
    raw = os.environ.get("LARKIT_EPS")
    if raw is None:
        return DEFAULT_EPS
    try:
        return float(raw)
    except ValueError:
        raise UsageError(f"LARKIT_EPS={raw!r} is not a number") from None


_ANGLE = re.compile(r"^\s*(-?[\d.eE+-]*)\s*\*?\s*(pi)?\s*(?:/\s*([\d.]+))?\s*$")


def parse_number(text: str) -> float:
    """Float, or a multiple of pi such as ``pi/6``, ``-2pi/3``, ``0.5*pi``."""
    try:
        return float(text)
    except ValueError:
        pass
    m = _ANGLE.match(text)
    if not m or not (m.group(1) or m.group(2)):
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    coef = m.group(1)
    k = 1.0 if coef in ("", None) else (-1.0 if coef == "-" else float(coef))
    if m.group(2):
        k *= np.pi
    if m.group(3):
        k /= float(m.group(3))
    return k


def _triple(kind):
    def parse(text):
        parts = [p for p in text.split(",")]
        if len(parts) != 3:
            raise argparse.ArgumentTypeError(f"expected three comma-separated values, got {text!r}")
        return tuple(kind(p) for p in parts)

    return parse


def _load(path: str):
    if path == "-":
        return formats.parse_lar(sys.stdin.read()).to_complex()
    if not Path(path).is_file():
        raise UsageError(f"no such file: {path}")
    return formats.load_lar(path)


def _emit(text: str, output: str | None) -> None:
    if output in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(output).write_text(text)


def _print_counts(result) -> None:
    chi = euler_both(result)
    names = ["vertices", "edges", "faces", "cells"][: result.dim + 1]
    print("convention\t" + "\t".join(names) + "\teuler")
    for conv, ext in (("interior", False), ("with_exterior", True)):
        print(conv + "\t" + "\t".join(str(c) for c in result.counts(exterior=ext)) + f"\t{chi[conv]}")


def _finish(result, args) -> None:
    if args.output:
        formats.save_lar(result, args.output)
    if args.operators:
        formats.save_operators(result, args.operators)
    if getattr(args, "report", None):
        from .report import write_report

        write_report(result, args.report)
    _print_counts(result)


# ------------------------------------------------------------ commands
def cmd_arrange2(args) -> int:
    cpx = _load(args.input)
    if cpx.dim != 2 or 1 not in cpx.tables:
        raise UsageError("arrange2 needs a 2D document with cells['1']")
    ev = np.asarray(cpx.tables[1].cells, dtype=np.int64).reshape(-1, 2)
    arr = planar_arrangement(SegmentSoup(cpx.geometry.coords, ev), args.eps)
    result = arr.to_result()
    _finish(result, args)
    for k, (v, e, f) in enumerate(arr.component_counts or []):
        print(f"component\t{k + 1}\t{v}\t{e}\t{f}\teuler\t{v - e + f}")
    return EXIT_OK


def cmd_arrange3(args) -> int:
    inputs = [_load(p) for p in args.input]
    try:
        result = merge_complexes(inputs, args.eps, args.parallel)
    except TGWError as exc:
        print(f"larkit: gift wrapping failed: {exc}", file=sys.stderr)
        return EXIT_FAIL
    _finish(result, args)
    return EXIT_OK


def cmd_validate(args) -> int:
    if not Path(args.input).is_file():
        raise UsageError(f"no such file: {args.input}")
    try:
        doc = formats.read_lar(args.input)
    except formats.FormatError as exc:
        print(f"FAIL\tdocument\t{exc}")
        return EXIT_FAIL
    failed = False
    if args.operators:
        try:
            result = formats.load_result(args.input, args.operators)
        except formats.FormatError as exc:
            print(f"FAIL\toperators\t{exc}")
            return EXIT_FAIL
        report = validate_operators(result.operators, exterior_included=result.exterior_cell is not None)
        d = result.dim
        if len(result.geometry) != result.operators[1].nrows:
            report.add("shape[0]", False, f"{len(result.geometry)} vertices vs {result.operators[1].nrows} rows")
        for p, m in result.operators.items():
            if p in result.tables:
                n = m.ncols - (1 if p == d and result.exterior_cell is not None else 0)
                report.add(f"table_count[{p}]", len(result.tables[p]) == n, f"{len(result.tables[p])} cells vs {n} columns")
        for line in report.lines():
            print(line)
        failed = not report.ok
    else:
        print(f"PASS\tdocument\t{len(doc.V)} vertices, dims {sorted(doc.cells)}")
    return EXIT_FAIL if failed else EXIT_OK


def cmd_euler(args) -> int:
    doc = formats.read_lar(args.input) if args.input != "-" else formats.parse_lar(sys.stdin.read())
    counts = [len(doc.V)] + [len(doc.cells.get(p, [])) for p in range(1, doc.dim + 1)]
    chi = euler_characteristic(counts)
    print("counts\t" + "\t".join(map(str, counts)) + f"\teuler\t{chi}")
    if doc.metadata.get("exterior_cell") is not None:
        print(f"with_exterior\teuler\t{chi + (-1) ** doc.dim}")
    return EXIT_OK


def cmd_grid(args) -> int:
    cpx = cuboidal_grid(args.shape, args.size)
    if args.center:
        x = cpx.geometry.coords
        cpx = Complex(Geometry(x - x.mean(axis=0)), dict(cpx.tables))
    cpx = transform(cpx, args.rotate, args.translate)
    _emit(formats.dumps_lar(cpx), args.output)
    return EXIT_OK


def cmd_segments(args) -> int:
    soup = random_segments(args.n, args.bbox, args.seed)
    cpx = Complex(Geometry(soup.coords), {1: CellTable(1, soup.edges.tolist())})
    _emit(formats.dumps_lar(cpx), args.output)
    return EXIT_OK


def cmd_explode(args) -> int:
    if not Path(args.input).is_file():
        raise UsageError(f"no such file: {args.input}")
    result = formats.load_result(args.input, args.operators)
    _emit(formats.dumps_obj(formats.explode(result, args.scale)), args.output)
    return EXIT_OK


# -------------------------------------------------------------- parser
def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="larkit", description="Chain complexes and cellular arrangements.")
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True)
    eps_help = f"merge tolerance (default {DEFAULT_EPS:g}, or $LARKIT_EPS)"

    p = sub.add_parser("arrange2", help="arrangement of the plane by a segment soup")
    p.add_argument("--input", required=True, help="LAR JSON with V and cells['1']")
    p.add_argument("--eps", type=float, default=None, help=eps_help)
    p.add_argument("--output", help="write the arranged complex here")
    p.add_argument("--operators", help="folder for d1.mtx, d2.mtx")
    p.add_argument("--report", help="folder for counts.tsv and figures")
    p.set_defaults(func=cmd_arrange2)

    p = sub.add_parser("arrange3", help="arrangement of space by 2-complexes (Merge)")
    p.add_argument("--input", required=True, nargs="+", help="LAR JSON documents, '-' for stdin")
    p.add_argument("--eps", type=float, default=None, help=eps_help)
    p.add_argument("--output", help="write W, EW, FW, CW here")
    p.add_argument("--operators", help="folder for d1.mtx, d2.mtx, d3.mtx")
    p.add_argument("--parallel", type=int, default=1, help="face fragmentation workers (default 1)")
    p.add_argument("--report", help="folder for counts.tsv and figures")
    p.set_defaults(func=cmd_arrange3)

    p = sub.add_parser("validate", help="check a document and its operators")
    p.add_argument("--input", required=True)
    p.add_argument("--operators", help="folder with d*.mtx files")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("euler", help="cell counts and Euler characteristic")
    p.add_argument("--input", required=True)
    p.set_defaults(func=cmd_euler)

    p = sub.add_parser("grid", help="cuboidal grid complex")
    p.add_argument("--shape", type=_triple(int), default=(3, 3, 3), help="nx,ny,nz (default 3,3,3)")
    p.add_argument("--size", type=float, default=1.0, help="cube edge length (default 1)")
    p.add_argument("--center", action="store_true", help="move the vertex centroid to the origin")
    p.add_argument("--rotate", type=_triple(parse_number), default=(0.0, 0.0, 0.0), help="rx,ry,rz radians, 'pi/6' accepted")
    p.add_argument("--translate", type=_triple(float), default=(0.0, 0.0, 0.0), help="tx,ty,tz")
    p.add_argument("--output", help="file (default stdout)")
    p.set_defaults(func=cmd_grid)

    p = sub.add_parser("segments", help="random segment soup")
    p.add_argument("--n", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--bbox", type=lambda s: tuple(float(v) for v in s.split(",")), default=(0.0, 0.0, 1.0, 1.0), help="xmin,ymin,xmax,ymax")
    p.add_argument("--output", help="file (default stdout)")
    p.set_defaults(func=cmd_segments)

    p = sub.add_parser("explode", help="exploded cells as OBJ")
    p.add_argument("--input", required=True, help="arranged LAR JSON")
    p.add_argument("--operators", required=True, help="operator folder written with the arrangement")
    p.add_argument("--scale", type=float, default=1.2)
    p.add_argument("--output", help="file (default stdout)")
    p.set_defaults(func=cmd_explode)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        if hasattr(args, "eps") and args.eps is None:
            args.eps = _default_eps()
        return args.func(args)
    except UsageError as exc:
        print(f"larkit: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (formats.FormatError, OSError) as exc:
        print(f"larkit: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (TGWError, ValueError) as exc:
        print(f"larkit: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
