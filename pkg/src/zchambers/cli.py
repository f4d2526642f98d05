"""``zc``: command-line front end.

Exit codes: 0 success, 1 mathematical infeasibility or a failed cross-check,
2 malformed input.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import dataclass
from fractions import Fraction
from math import factorial

from .chambers import ChamberCensus, ChamberSupport, census, classify_support
from .cones import DEFAULT_ORACLE_RANK, OracleInfeasible, chamber_volume_oracle, nef_volume_oracle
from .surfaces import (
    SurfaceError,
    SurfaceModel,
    contract_set,
    load_surface,
    make_surface,
    minus_one_curves,
    resolve_curve,
    surface_to_dict,
)
from .values import format_volume, is_infinite, volume_json
from .volumes import (
    NEF_MEMO,
    NotBig,
    PivotInfeasible,
    chamber_volume,
    is_anticanonical_big,
    nef_volume,
    zariski_decompose,
)

EXIT_OK, EXIT_MATH, EXIT_INPUT = 0, 1, 2

CHECK_FAMILIES = (
    ["p2", "p1xp1"]
    + [f"hirzebruch:{e}" for e in range(5)]
    + [f"del-pezzo:{r}" for r in range(1, 5)]
    + [f"line-blowup:{r}" for r in range(1, 6)]
    + [f"infinitely-near:{r}" for r in range(2, 6)]
)


class InputError(ValueError):
    pass


@dataclass
class OutputDocument:
    format: str
    payload: str

    def emit(self, stream=None):
        stream = stream or sys.stdout
        stream.write(self.payload if self.payload.endswith("\n") else self.payload + "\n")


# ---------------------------------------------------------------------------
# rendering


def _fmt_frac(x) -> str:
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def _fmt_class(surface: SurfaceModel, v) -> str:
    if all(Fraction(x).denominator == 1 for x in v):
        return surface.class_name(tuple(int(x) for x in v))
    return "(" + ", ".join(_fmt_frac(x) for x in v) + ")"


def _markdown(header, rows) -> str:
    lines = ["| " + " | ".join(header) + " |", "|" + "|".join("---" for _ in header) + "|"]
    lines += ["| " + " | ".join(str(c) for c in row) + " |" for row in rows]
    return "\n".join(lines)


def _csv(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _census_rows(cen: ChamberCensus, by_target: bool):
    rows = list(cen.rows)
    if by_target:
        rows.sort(key=lambda r: (r.target is None, r.target or "", r.size))
    return rows


def render_census(cen: ChamberCensus, fmt: str = "md", by_target: bool = False) -> OutputDocument:
    rows = _census_rows(cen, by_target)
    if fmt == "json":
        doc = {
            "surface": cen.label,
            "rank": cen.rank,
            "total": cen.total,
            "rows": [
                {
                    "size": r.size,
                    "target": r.target,
                    "count": r.count,
                    "volume": None if r.volume is None else volume_json(r.volume),
                }
                for r in rows
            ],
        }
        if by_target:
            doc["by_target"] = [{"target": t, "count": c} for t, c in cen.counts_by_target()]
        return OutputDocument("json", json.dumps(doc, indent=2))
    header = ["size", "target", "count", "volume"]
    table = [
        (r.size, r.target if r.target is not None else "-", r.count, "" if r.volume is None else format_volume(r.volume))
        for r in rows
    ]
    if fmt == "csv":
        return OutputDocument("csv", _csv(header, table))
    text = f"{cen.label} (rho = {cen.rank}): {cen.total} supports\n\n" + _markdown(header, table)
    if by_target:
        text += "\n\n" + _markdown(["target", "count"], [(t or "-", c) for t, c in cen.counts_by_target()])
    return OutputDocument("markdown", text)


# ---------------------------------------------------------------------------
# argument helpers


def _surface(args) -> SurfaceModel:
    if getattr(args, "file", None):
        return load_surface(args.file)
    if not args.spec:
        raise InputError("give a surface spec such as del-pezzo:3, or --file")
    return make_surface(args.spec)


def _support(surface: SurfaceModel, text: str) -> ChamberSupport:
    tokens = [t for t in text.split(",") if t.strip()]
    return ChamberSupport(tuple(resolve_curve(surface, t) for t in tokens))


def _parse_divisor(surface: SurfaceModel, text: str) -> tuple:
    try:
        values = [Fraction(x.strip()) for x in text.split(",")]
    except (ValueError, ZeroDivisionError):
        raise InputError(f"cannot parse class {text!r}; expected comma-separated numbers") from None
    if len(values) != surface.rank:
        raise InputError(f"class needs {surface.rank} entries, got {len(values)}")
    if surface.basis_names and surface.basis_names[0] == "L":
        # "d,m1,...,mr" stands for dL - m1 E1 - ... - mr Er
        return (values[0],) + tuple(-m for m in values[1:])
    return tuple(values)


def _configure(args):
    NEF_MEMO.enabled = not getattr(args, "no_memo", False)


# ---------------------------------------------------------------------------
# commands


def cmd_surface(args) -> tuple[int, OutputDocument]:
    X = _surface(args)
    big = is_anticanonical_big(X)
    minus = minus_one_curves(X)
    if args.json:
        data = surface_to_dict(X)
        data.update(K2=X.K2, minus_one_count=len(minus), anticanonical_big=big)
        return EXIT_OK, OutputDocument("json", json.dumps(data, indent=2))
    lines = [
        f"surface: {X.label}",
        f"rho = {X.rank}",
        f"K^2 = {X.K2}",
        f"-K big: {'yes' if big else 'no'}",
        f"(-1)-curves: {len(minus)}",
        f"negative curves ({len(X.negative_curves)}):",
    ]
    names = X.curve_names()
    for i, (name, sq, k) in enumerate(zip(names, X.squares, X.canonical_degrees)):
        lines.append(f"  [{i}] {name}   C^2 = {sq}   K.C = {k}")
    return EXIT_OK, OutputDocument("markdown", "\n".join(lines))


def _volume_report(X: SurfaceModel, support: ChamberSupport | None, oracle_rank: int, with_oracle: bool):
    report = {"surface": X.label, "rho": X.rank}
    if support is None or not len(support):
        trail: list = []
        vol = nef_volume(X, trail=trail)
        report["chamber"] = []
        report["volume"] = vol
        report["certificate"] = [
            {"surface": label, "pivot": [_fmt_frac(x) for x in piv.D],
             "terms": [{"curve": X.class_name(e), "weight": _fmt_frac(w), "target": t} for e, w, t in steps]}
            for label, piv, steps in trail
        ]
        if with_oracle:
            report["oracle"] = nef_volume_oracle(X, oracle_rank)
        return report
    finite, s, target = classify_support(X, support)
    report["chamber"] = support.names(X)
    report["volume"] = chamber_volume(X, support)
    if finite:
        path: list = []
        Y = contract_set(X, support.classes(X), trail=path)
        trail = []
        nef = nef_volume(Y, trail=trail)
        report["contractions"] = [step_surface.label for step_surface, _ in path] + [Y.identity]
        report["target"] = target
        report["pyramid_factor"] = _fmt_frac(Fraction(factorial(X.rank - s), factorial(X.rank)))
        report["target_nef_volume"] = nef
        report["certificate"] = [
            {"surface": label, "pivot": [_fmt_frac(x) for x in piv.D]} for label, piv, _ in trail
        ]
    else:
        report["reason"] = "support contains a curve that is not a (-1)-curve"
    if with_oracle:
        report["oracle"] = chamber_volume_oracle(X, support.classes(X), oracle_rank)
    return report


def cmd_volume(args) -> tuple[int, OutputDocument]:
    X = _surface(args)
    support = _support(X, args.chamber) if args.chamber else None
    rep = _volume_report(X, support, args.oracle_rank, args.oracle)
    code = EXIT_OK
    if args.oracle and rep["oracle"] != rep["volume"]:
        code = EXIT_MATH
    if args.format == "json":
        out = {k: (volume_json(v) if k in ("volume", "oracle", "target_nef_volume") else v) for k, v in rep.items()}
        return code, OutputDocument("json", json.dumps(out, indent=2))
    lines = [f"surface: {rep['surface']}"]
    if rep["chamber"]:
        lines.append(f"chamber: {{{', '.join(rep['chamber'])}}}")
    lines.append(f"volume: {format_volume(rep['volume'])}")
    if "reason" in rep:
        lines.append(f"infinite: {rep['reason']}")
    if "target" in rep:
        lines.append(f"contraction: {' -> '.join(rep['contractions'])}")
        lines.append(f"volume = {rep['pyramid_factor']} * Vol(Nef({rep['target']})) = "
                     f"{rep['pyramid_factor']} * {format_volume(rep['target_nef_volume'])}")
    for cert in rep.get("certificate", []):
        lines.append(f"pivot on {cert['surface']}: D = ({', '.join(cert['pivot'])})")
        for term in cert.get("terms", []):
            lines.append(f"  D.{term['curve']} = {term['weight']} -> {term['target']}")
    if "oracle" in rep:
        lines.append(f"oracle: {format_volume(rep['oracle'])} ({'match' if code == EXIT_OK else 'MISMATCH'})")
    return code, OutputDocument("markdown", "\n".join(lines))


def cmd_census(args) -> tuple[int, OutputDocument]:
    if args.paper_tables:
        return cmd_tables(args)
    X = _surface(args)
    cen = census(X, volumes=not args.no_volumes, workers=args.workers)
    return EXIT_OK, render_census(cen, args.format, args.by_target)


def cmd_tables(args) -> tuple[int, OutputDocument]:
    fmt = getattr(args, "format", "md")
    docs = []
    nef_rows = []
    for r in range(1, 9):
        X = make_surface("del-pezzo", r)
        nef_rows.append((f"S_{r}", format_volume(nef_volume(X))))
        docs.append(render_census(census(X, workers=args.workers), fmt))
    nef_rows += [("P2", format_volume(nef_volume(make_surface("p2")))),
                 ("P1xP1", format_volume(nef_volume(make_surface("p1xp1"))))]
    if fmt == "json":
        payload = json.dumps(
            {"nef_volumes": dict(nef_rows), "tables": [json.loads(d.payload) for d in docs]}, indent=2
        )
        return EXIT_OK, OutputDocument("json", payload)
    if fmt == "csv":
        return EXIT_OK, OutputDocument("csv", _csv(["surface", "nef_volume"], nef_rows) + "\n" +
                                       "\n".join(d.payload for d in docs))
    text = "Nef cone volumes\n\n" + _markdown(["surface", "volume"], nef_rows)
    return EXIT_OK, OutputDocument("markdown", text + "\n\n" + "\n\n".join(d.payload for d in docs))


def run_check(max_rank: int = DEFAULT_ORACLE_RANK, fault: bool = False, specs=CHECK_FAMILIES) -> list[dict]:
    """Recursion against oracle on the built-in families; one record per surface."""
    out = []
    for spec in specs:
        X = make_surface(spec)
        rec = {"surface": X.label, "spec": spec, "rho": X.rank}
        try:
            oracle = nef_volume_oracle(X, max_rank)
        except OracleInfeasible as exc:
            rec.update(status="skipped", reason=str(exc))
            out.append(rec)
            continue
        recursion = nef_volume(X, memo=not fault, fault=fault)
        rec.update(recursion=recursion, oracle=oracle, status="match" if recursion == oracle else "mismatch")
        out.append(rec)
    return out


def cmd_check(args) -> tuple[int, OutputDocument]:
    records = run_check(args.max_rank, fault=args.inject_fault)
    bad = [r for r in records if r["status"] == "mismatch"]
    code = EXIT_MATH if bad else EXIT_OK
    if args.format == "json":
        payload = [
            {k: (volume_json(v) if k in ("recursion", "oracle") else v) for k, v in r.items()} for r in records
        ]
        return code, OutputDocument("json", json.dumps(payload, indent=2))
    rows = [
        (r["surface"], r["rho"], format_volume(r["recursion"]) if "recursion" in r else "-",
         format_volume(r["oracle"]) if "oracle" in r else "-", r["status"])
        for r in records
    ]
    text = _markdown(["surface", "rho", "recursion", "oracle", "status"], rows)
    done = sum(1 for r in records if r["status"] != "skipped")
    text += f"\n\n{done - len(bad)}/{done} match, {len(records) - done} skipped"
    return code, OutputDocument("markdown", text)


def cmd_chamber_of(args) -> tuple[int, OutputDocument]:
    X = _surface(args)
    D = _parse_divisor(X, args.divisor)
    pair = zariski_decompose(X, D)
    problems = pair.certificate(X)
    if problems:
        raise NotBig("; ".join(problems))
    support = ChamberSupport(pair.support)
    finite, s, target = classify_support(X, support)
    vol = chamber_volume(X, support)
    names = X.curve_names()
    if args.format == "json":
        doc = {
            "surface": X.label,
            "D": [_fmt_frac(x) for x in D],
            "P": [_fmt_frac(x) for x in pair.P],
            "N": [{"curve": names[i], "coefficient": _fmt_frac(a)} for i, a in zip(pair.support, pair.coefficients)],
            "support": list(pair.support),
            "target": target,
            "volume": volume_json(vol),
        }
        return EXIT_OK, OutputDocument("json", json.dumps(doc, indent=2))
    neg = " + ".join(f"{_fmt_frac(a)}*({names[i]})" for i, a in zip(pair.support, pair.coefficients)) or "0"
    lines = [
        f"surface: {X.label}",
        f"D = {_fmt_class(X, D)}",
        f"P = {_fmt_class(X, pair.P)}   (P^2 = {_fmt_frac(X.dot(pair.P, pair.P))})",
        f"N = {neg}",
        f"chamber support: {{{', '.join(names[i] for i in pair.support)}}}",
        f"target: {target if finite else '- (infinite chamber)'}",
        f"chamber volume: {format_volume(vol)}",
    ]
    return EXIT_OK, OutputDocument("markdown", "\n".join(lines))


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--no-memo", action="store_true", help="disable the nef-volume memo table")
    common.add_argument("--workers", type=int, default=1, help="processes for census enumeration")
    common.add_argument("--oracle-rank", type=int, default=DEFAULT_ORACLE_RANK,
                        help="largest Picard number the polyhedral oracle accepts")
    fmt = argparse.ArgumentParser(add_help=False)
    fmt.add_argument("--format", choices=("md", "json", "csv"), default="md")

    def spec_args(p):
        p.add_argument("spec", nargs="?", help="del-pezzo:3, line-blowup:5, infinitely-near:4, hirzebruch:2, p2, p1xp1")
        p.add_argument("--file", help="custom surface JSON")

    parser = argparse.ArgumentParser(prog="zc", description="Zariski chambers and cone volumes on rational surfaces")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("surface", parents=[common], help="describe a surface")
    spec_args(p)
    p.add_argument("--json", action="store_true", help="emit the custom-surface JSON schema")
    p.set_defaults(func=cmd_surface)

    p = sub.add_parser("volume", parents=[common, fmt], help="nef cone or chamber volume")
    spec_args(p)
    p.add_argument("--chamber", help="support as indices or names, e.g. 0,2 or E1,L-E1-E2 or Ltilde")
    p.add_argument("--oracle", action="store_true", help="also compute the polyhedral oracle value")
    p.set_defaults(func=cmd_volume)

    p = sub.add_parser("census", parents=[common, fmt], help="chamber census")
    spec_args(p)
    p.add_argument("--by-target", action="store_true", help="order rows by contraction target, add totals")
    p.add_argument("--no-volumes", action="store_true", help="counts and targets only")
    p.add_argument("--paper-tables", action="store_true", help="all eight del Pezzo tables")
    p.set_defaults(func=cmd_census)

    p = sub.add_parser("tables", parents=[common, fmt], help="del Pezzo tables and nef volumes")
    p.add_argument("--paper", action="store_true", help="reproduce the reference tables (the only mode)")
    p.set_defaults(func=cmd_tables)

    p = sub.add_parser("check", parents=[common, fmt], help="recursion against the polyhedral oracle")
    p.add_argument("--max-rank", type=int, default=DEFAULT_ORACLE_RANK, help="skip surfaces above this rank")
    p.add_argument("--inject-fault", action="store_true", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("chamber-of", parents=[common, fmt], help="Zariski decomposition and containing chamber")
    spec_args(p)
    p.add_argument("--class", dest="divisor", required=True, help='"d,m1,...,mr" for dL - sum mi Ei')
    p.set_defaults(func=cmd_chamber_of)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    _configure(args)
    try:
        code, doc = args.func(args)
    except (InputError, SurfaceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (PivotInfeasible, OracleInfeasible, NotBig) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_MATH
    doc.emit()
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
