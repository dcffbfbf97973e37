"""Command-line front end: ``dehnfill info|check|solve|sweep|develop``."""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import sys
import time
import warnings
from pathlib import Path

from . import __version__
from .developer import cone_metric, develop_tetrahedra, develop_torus, tetra_volume
from .equations import build_system, check_system
from .polyhedral import validate_bigons
from .solver import (
    TOL,
    GeneralizedCoefficient,
    cusp_shape_tau,
    filling_map_g,
    make_target,
    solve,
    sweep,
    sweep_cells,
)
from .triangulation import ParseError, TriangulationError, check_euler, parse_triangulation

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

SWEEP_COLUMNS = ("p", "q", "r", "converged", "residual", "volume", "n_pos", "n_flat", "n_neg", "iters")


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# output formatting


def fmt_float(x: float) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return "%.16e" % x


def _plain(obj):
    """Complex numbers become [re, im]; tuples become lists."""
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if hasattr(obj, "item") and not isinstance(obj, (str, bytes)):
        return _plain(obj.item())
    return obj


def dumps(obj, indent: int = 2) -> str:
    """JSON with floats at 17 significant digits and insertion-ordered keys.

    Non-finite floats are written as ``null``.
    """
    out: list[str] = []

    def emit(o, level):
        pad = " " * (indent * (level + 1))
        end = " " * (indent * level)
        if o is None:
            out.append("null")
        elif isinstance(o, bool):
            out.append("true" if o else "false")
        elif isinstance(o, int):
            out.append(str(o))
        elif isinstance(o, float):
            out.append(fmt_float(o) if math.isfinite(o) else "null")
        elif isinstance(o, str):
            out.append(_json_str(o))
        elif isinstance(o, dict):
            if not o:
                out.append("{}")
                return
            out.append("{\n")
            for i, (k, v) in enumerate(o.items()):
                out.append(pad + _json_str(k) + ": ")
                emit(v, level + 1)
                out.append(",\n" if i < len(o) - 1 else "\n")
            out.append(end + "}")
        elif isinstance(o, list):
            if not o:
                out.append("[]")
            elif all(not isinstance(v, (dict, list)) for v in o):
                out.append("[")
                for i, v in enumerate(o):
                    emit(v, level + 1)
                    if i < len(o) - 1:
                        out.append(", ")
                out.append("]")
            else:
                out.append("[\n")
                for i, v in enumerate(o):
                    out.append(pad)
                    emit(v, level + 1)
                    out.append(",\n" if i < len(o) - 1 else "\n")
                out.append(end + "]")
        else:
            raise TypeError(f"cannot serialize {type(o).__name__}")

    emit(_plain(obj), 0)
    return "".join(out) + "\n"


def _json_str(s: str) -> str:
    return json.dumps(s, ensure_ascii=False)


# ---------------------------------------------------------------------------
# argument parsing


def parse_fill(text: str) -> tuple[int, GeneralizedCoefficient]:
    """``i:p,q[,r]`` with a 1-based cusp index; returns (0-based cusp, g)."""
    try:
        cusp_s, coeffs = text.split(":", 1)
        parts = coeffs.split(",")
        if len(parts) not in (2, 3):
            raise ValueError
        cusp = int(cusp_s)
        p, q = int(parts[0]), int(parts[1])
        r = float(parts[2]) if len(parts) == 3 else 1.0
    except ValueError:
        raise UsageError(f"bad --fill {text!r}: expected i:p,q or i:p,q,r") from None
    if cusp < 1:
        raise UsageError(f"bad --fill {text!r}: cusp indices start at 1")
    if not (r > 0 and math.isfinite(r)):
        raise UsageError(f"bad --fill {text!r}: r must be a positive number")
    if (p, q) == (0, 0):
        raise UsageError(f"bad --fill {text!r}: (p, q) = (0, 0)")
    return cusp - 1, GeneralizedCoefficient.normalized(p, q, r)


def parse_int_range(text: str) -> tuple[int, int]:
    try:
        a, b = text.split("..")
        lo, hi = int(a), int(b)
    except ValueError:
        raise UsageError(f"bad --pq-range {text!r}: expected a..b") from None
    if lo > hi:
        raise UsageError(f"bad --pq-range {text!r}: empty range")
    return lo, hi


def parse_cone_range(text: str) -> tuple[float, ...]:
    """``r1..r2:steps``: ``steps`` geometrically spaced values from r1 to r2."""
    try:
        span, steps_s = text.split(":")
        a, b = span.split("..")
        r1, r2, steps = float(a), float(b), int(steps_s)
    except ValueError:
        raise UsageError(f"bad --cone-r {text!r}: expected r1..r2:steps") from None
    if not (r1 > 0 and r2 > 0 and math.isfinite(r1) and math.isfinite(r2)) or steps < 1:
        raise UsageError(f"bad --cone-r {text!r}: need positive radii and steps >= 1")
    if steps == 1:
        return (r1,)
    ratio = (r2 / r1) ** (1.0 / (steps - 1))
    vals = [r1 * ratio**i for i in range(steps)]
    vals[-1] = r2
    # snap values that are integers up to roundoff
    return tuple(float(round(v)) if abs(v - round(v)) < 1e-9 * v else v for v in vals)


def _positive_float(s: str) -> float:
    try:
        x = float(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {s!r}") from None
    if not x > 0:
        raise argparse.ArgumentTypeError(f"must be positive: {s!r}")
    return x


def _positive_int(s: str) -> int:
    try:
        x = int(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {s!r}") from None
    if x < 1:
        raise argparse.ArgumentTypeError(f"must be at least 1: {s!r}")
    return x


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="dehnfill",
        description="Complete and Dehn-filled hyperbolic structures from ideal triangulations.",
    )
    ap.add_argument("--version", action="version", version=f"dehnfill {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, fmt_default="json", formats=("json",)):
        p.add_argument("file", help="triangulation file (JSON)")
        p.add_argument("--format", choices=formats, default=fmt_default)
        p.add_argument("--out", help="write output here instead of stdout")
        p.add_argument("--seed", type=int, default=0, help="recorded in the report; runs are deterministic")
        p.add_argument("--timings", action="store_true", help="print stage timings to stderr")

    def solving(p):
        p.add_argument("--fill", action="append", default=[], metavar="i:p,q[,r]")
        p.add_argument("--tol", type=_positive_float, default=TOL)
        p.add_argument("--max-iter", type=_positive_int, default=50)

    common(sub.add_parser("info", help="combinatorial summary"))
    common(sub.add_parser("check", help="verify the combinatorial identities"))
    p = sub.add_parser("solve", help="solve for a complete or filled structure")
    common(p, formats=("json", "csv"))
    solving(p)
    p = sub.add_parser("sweep", help="solve over a grid of filling coefficients")
    common(p, fmt_default="csv", formats=("csv", "json"))
    solving(p)
    p.add_argument("--cusp", type=_positive_int, default=1, help="swept cusp (1-based)")
    p.add_argument("--pq-range", help="box a..b for both p and q")
    p.add_argument("--cone-r", help="cone parameters r1..r2:steps, geometrically spaced")
    p.add_argument("--jobs", type=_positive_int, default=1)
    p = sub.add_parser("develop", help="develop cusp tori and tetrahedra")
    common(p)
    solving(p)
    return ap


# ---------------------------------------------------------------------------
# commands


class _Run:
    def __init__(self, args):
        self.args = args
        self.timings: list[tuple[str, float]] = []
        self.warnings: list[str] = []
        self._t = time.perf_counter()

    def stage(self, name: str):
        now = time.perf_counter()
        self.timings.append((name, now - self._t))
        self._t = now

    def header(self, data: bytes) -> dict:
        return {
            "tool": "dehnfill",
            "version": __version__,
            "input_sha256": hashlib.sha256(data).hexdigest(),
            "seed": self.args.seed,
        }


def _load(path: str):
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise UsageError(f"{path}: {exc.strerror or exc}") from None
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(f"not UTF-8: {exc}") from None
    return data, parse_triangulation(text)


def _fills(run: _Run, T) -> dict:
    fills = {}
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        for text in run.args.fill:
            cusp, g = parse_fill(text)
            if cusp >= T.k:
                raise UsageError(f"bad --fill {text!r}: cusp {cusp + 1} out of range 1..{T.k}")
            if cusp in fills:
                raise UsageError(f"cusp {cusp + 1} filled twice")
            fills[cusp] = g
    run.warnings.extend(str(w.message) for w in caught)
    return fills


def _coeff(g) -> dict | str:
    if g is None:
        return "inf"
    return {"p": g.p, "q": g.q, "r": float(g.r), "cone_angle": g.cone_angle}


def cmd_info(run: _Run):
    data, T = _load(run.args.file)
    report = run.header(data)
    report.update(
        {
            "name": T.name,
            "n": T.n,
            "k": T.k,
            "edges": len(T.edge_classes),
            "edge_valences": [e.valence for e in T.edge_classes],
            "cusp_triangles": [len(c.corners) for c in T.cusps],
            "flat_labels": sorted(T.flat_labels),
        }
    )
    return report, EXIT_OK


def cmd_check(run: _Run):
    try:
        data, T = _load(run.args.file)
    except TriangulationError as exc:
        # structurally invalid gluing data is a failed check, not a usage error
        report = run.header(Path(run.args.file).read_bytes())
        report.update({"ok": False, "error": str(exc)})
        return report, EXIT_FAIL
    report = run.header(data)
    euler = check_euler(T)
    run.stage("euler")
    lemmas = check_system(build_system(T))
    run.stage("lemmas")
    bigons = validate_bigons(T)
    run.stage("bigons")
    report.update({"name": T.name, "euler": euler, "lemmas": lemmas, "bigons": bigons})
    report["ok"] = bool(euler["ok"] and lemmas["ok"] and bigons["ok"])
    return report, EXIT_OK if report["ok"] else EXIT_FAIL


def _solve(run: _Run, T, fills):
    system = build_system(T)
    run.stage("assemble")
    target = make_target(T.k, fills)
    based, complete, res = solve(system, target, tol=run.args.tol, max_iter=run.args.max_iter)
    run.stage("solve")
    return based, complete, res


def _result_dict(based, complete, res) -> dict:
    out = {
        "converged": bool(res.converged),
        "residual": float(res.residual),
        "iterations": int(res.iterations),
        "message": res.message,
        "flags": list(res.flags),
        "volume": float(res.volume),
        "census": {"positive": res.census[0], "flat": res.census[1], "negative": res.census[2]},
        "dropped_residual": float(res.dropped_residual),
        "shapes": [complex(w) for w in res.z],
        "cusps": [],
    }
    for i, g in enumerate(res.target):
        entry = {"cusp": i + 1, "target": _coeff(g)}
        if res.u:
            entry["u"] = complex(res.u[i])
            entry["v"] = complex(res.v[i])
        if res.converged:
            if g is None:
                try:
                    entry["tau"] = complex(cusp_shape_tau(based, res.shape, i))
                except ValueError as exc:
                    entry["tau_error"] = str(exc)
            else:
                pq = filling_map_g(res, i)
                entry["recovered"] = None if pq is None else [pq[0], pq[1]]
        out["cusps"].append(entry)
    return out


def _csv_row(g, res) -> list[str]:
    p, q, r = ("inf", "inf", "inf") if g is None else (str(g.p), str(g.q), fmt_float(g.r))
    return [
        p,
        q,
        r,
        "true" if res.converged else "false",
        fmt_float(res.residual),
        fmt_float(res.volume),
        str(res.census[0]),
        str(res.census[1]),
        str(res.census[2]),
        str(res.iterations),
    ]


def _csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_COLUMNS)
    w.writerows(rows)
    return buf.getvalue()


def cmd_solve(run: _Run):
    data, T = _load(run.args.file)
    fills = _fills(run, T)
    based, complete, res = _solve(run, T, fills)
    ok = EXIT_OK if res.converged else EXIT_FAIL
    if run.args.format == "csv":
        g = next(iter(fills.values())) if len(fills) == 1 else None
        return _csv([_csv_row(g, res)]), ok
    report = run.header(data)
    report["name"] = T.name
    report.update(_result_dict(based, complete, res))
    report["warnings"] = run.warnings
    return report, ok


def cmd_sweep(run: _Run):
    args = run.args
    data, T = _load(args.file)
    fills = _fills(run, T)
    cusp = args.cusp - 1
    if cusp >= T.k:
        raise UsageError(f"--cusp {args.cusp} out of range 1..{T.k}")
    pq = parse_int_range(args.pq_range) if args.pq_range else None
    rs = parse_cone_range(args.cone_r) if args.cone_r else (1.0,)
    direction = None
    if cusp in fills:
        g = fills[cusp]
        direction = (g.p, g.q)
    if pq is None and direction is None:
        raise UsageError("sweep needs --pq-range or a --fill direction on the swept cusp")
    cells = sweep_cells(pq, rs, direction)
    fixed = {i: g for i, g in fills.items() if i != cusp}
    system = build_system(T)
    based, complete, base = solve(system, make_target(T.k, fixed), tol=args.tol, max_iter=args.max_iter)
    run.stage("base")
    if not base.converged:
        print(f"dehnfill: base solve failed: {base.message}", file=sys.stderr)
        if args.format == "csv":
            return _csv([_csv_row(None, base)]), EXIT_FAIL
        return {**run.header(data), "converged": False, "message": base.message}, EXIT_FAIL
    rows = sweep(based, base, cusp, cells, fixed, args.tol, args.max_iter, args.jobs)
    run.stage("sweep")
    if args.format == "csv":
        return _csv([_csv_row(r.coefficient, r.result) for r in rows]), EXIT_OK
    report = run.header(data)
    report.update({"name": T.name, "cusp": args.cusp, "warnings": run.warnings, "rows": []})
    for r in rows:
        entry = {"target": _coeff(r.coefficient), "seed": _coeff(r.seed) if r.coefficient else None}
        entry.update(
            {
                "converged": bool(r.result.converged),
                "residual": float(r.result.residual),
                "volume": float(r.result.volume),
                "census": list(r.result.census),
                "iterations": int(r.result.iterations),
                "flags": list(r.result.flags),
            }
        )
        report["rows"].append(entry)
    return report, EXIT_OK


def _affine(m) -> dict:
    return {"linear": complex(m.alpha), "translation": complex(m.beta)}


def cmd_develop(run: _Run):
    data, T = _load(run.args.file)
    fills = _fills(run, T)
    based, complete, res = _solve(run, T, fills)
    report = run.header(data)
    report["name"] = T.name
    report["converged"] = bool(res.converged)
    report["residual"] = float(res.residual)
    report["shapes"] = [complex(w) for w in res.z]
    if not res.converged:
        report["message"] = res.message
        return report, EXIT_FAIL
    z = res.z
    tori = []
    for i in range(T.k):
        dev = develop_torus(T, i, z)
        g = res.target[i]
        entry = {
            "cusp": i + 1,
            "target": _coeff(g),
            "root": list(dev.root),
            "positions": [
                {"tet": c[0], "vertex": c[1], "points": [[w, complex(p)] for w, p in sorted(pos.items())]}
                for c, pos in sorted(dev.positions.items())
            ],
            "holonomy_lambda": _affine(dev.holonomy_lambda),
            "holonomy_mu": _affine(dev.holonomy_mu),
            "edge_residual": dev.edge_residual,
            "vertex_residual": dev.vertex_residual,
            "commutation_residual": dev.commutation_residual(),
        }
        if g is None:
            entry["tau"] = complex(dev.tau)
        else:
            sample = cone_metric(1.0, 0.0, 0.0, g.cone_angle)
            entry["cone_angle"] = g.cone_angle
            entry["cone_circumference_at_r1"] = sample.circumference
        tori.append(entry)
    run.stage("tori")
    tets = develop_tetrahedra(T, z)
    run.stage("tetrahedra")
    report["tori"] = tori
    report["tetrahedra"] = {
        "vertices": [[[complex(x), complex(y)] for x, y in vs] for vs in tets.vertices],
        "tree": [list(tf) for tf in tets.tree],
        "pairings": [
            {"tet": t, "face": f, "matrix": [[complex(m[0][0]), complex(m[0][1])], [complex(m[1][0]), complex(m[1][1])]]}
            for (t, f), m in sorted(tets.pairings.items())
        ],
        "edge_residuals": list(tets.edge_residuals),
        "shape_residuals": list(tets.shape_residuals),
        "max_residual": tets.max_residual,
    }
    report["volumes"] = {
        "tetrahedra": [tetra_volume(complex(w)) for w in z],
        "total": float(res.volume),
    }
    report["warnings"] = run.warnings
    return report, EXIT_OK


COMMANDS = {
    "info": cmd_info,
    "check": cmd_check,
    "solve": cmd_solve,
    "sweep": cmd_sweep,
    "develop": cmd_develop,
}


# options whose values may start with "-" (negative ranges and coefficients)
_GLUED = ("--pq-range", "--fill", "--cone-r")


def _glue_values(argv: list[str]) -> list[str]:
    out, i = [], 0
    while i < len(argv):
        a = argv[i]
        if a in _GLUED and i + 1 < len(argv):
            out.append(f"{a}={argv[i + 1]}")
            i += 2
        else:
            out.append(a)
            i += 1
    return out


def main(argv=None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parser.parse_args(_glue_values(argv))
    except SystemExit as exc:
        return int(exc.code or 0)
    run = _Run(args)
    try:
        payload, code = COMMANDS[args.command](run)
    except UsageError as exc:
        print(f"dehnfill: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ParseError as exc:
        print(f"dehnfill: {args.file}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except TriangulationError as exc:
        print(f"dehnfill: {args.file}: invalid triangulation: {exc}", file=sys.stderr)
        return EXIT_USAGE
    for w in run.warnings:
        print(f"dehnfill: warning: {w}", file=sys.stderr)
    text = payload if isinstance(payload, str) else dumps(payload)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    if args.timings:
        for name, dt in run.timings:
            print(f"{name}: {dt:.3f}s", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
