"""Command-line front end.

Exit codes: 0 when every check passes, 1 when checks ran and some failed, 2 on
input or usage errors.  A report document is always written.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .axioms import DEFAULT_TOL, AxiomFailure, StructureReport, check_cv, check_higgs_pair, check_saito, check_tep
from .bundle import MissingTensor
from .canonical import (
    DegenerateInducedMetric,
    NotPositiveDefinite,
    ZeroVector,
    canonical_data,
    check_canonical_props,
    curvature_F,
    sectional_curvature,
)
from .chartfile import InvariantViolation, SchemaError, dump_chart, load_chart
from .correspondences import build_cv_connection, build_saito_connection
from .fixtures import FIXTURES
from .formal_iso import SharedDataMismatch, solve_formal_iso
from .hyperbolicity import NotIrreducible, bound_k0, write_histogram
from .jets import MatrixJet
from .unfolding import (
    BadSection,
    NoUnfolding,
    build_frobenius,
    check_cdv,
    check_f_manifold,
    check_frobenius,
    classify_point,
    induce_f_structure,
    to_tangent_frame,
)

EXIT_OK, EXIT_FAILED, EXIT_INPUT = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _plain(obj):
    """JSON fallback for numpy scalars, arrays and complex numbers."""
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": float(obj.real), "im": float(obj.imag)}
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist()) if obj.dtype.kind == "c" else obj.tolist()
    if isinstance(obj, (list, tuple)):
        return [_plain(x) if not isinstance(x, (int, float, str, bool, type(None))) else x for x in obj]
    if hasattr(obj, "to_dict"):
        return obj.to_dict()
    return str(obj)


def _matrix(M: MatrixJet | np.ndarray) -> dict:
    c = M.constant_term if isinstance(M, MatrixJet) else np.asarray(M)
    return {"re": np.round(c.real, 12).tolist(), "im": np.round(c.imag, 12).tolist()}


def _render_text(doc: dict) -> str:
    lines = []

    def walk(prefix, val):
        if isinstance(val, dict):
            for k in sorted(val):
                walk(f"{prefix}.{k}" if prefix else str(k), val[k])
        elif isinstance(val, list) and val and isinstance(val[0], dict):
            for i, v in enumerate(val):
                walk(f"{prefix}[{i}]", v)
        else:
            lines.append(f"{prefix}: {json.dumps(val, default=_plain, sort_keys=True)}")

    walk("", doc)
    return "\n".join(lines) + "\n"


def _emit(doc: dict, args) -> None:
    fmt = getattr(args, "format", "json") or "json"
    if fmt == "text":
        text = _render_text(doc)
    else:
        text = json.dumps(doc, default=_plain, sort_keys=True, indent=2) + "\n"
    path = getattr(args, "report", None)
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def _load(path):
    b, f = load_chart(path)
    return b, f


def _structure(rep: StructureReport) -> tuple[dict, bool]:
    return rep.to_dict(), rep.passed


# -- subcommands --------------------------------------------------------------

def cmd_check(check):
    def run(args):
        b, _ = _load(args.chart)
        return _structure(check(b, args.tolerance))

    return run


def _connection(args):
    b, _ = _load(args.chart)
    builder = build_saito_connection if args.source == "saito" else build_cv_connection
    conn, P = builder(b, validate=False)
    return b, conn, P


def cmd_check_tep(args):
    b, conn, P = _connection(args)
    return _structure(check_tep(conn, P, b.w, args.tolerance, scale=b.input_scale()))


def cmd_build_connection(args):
    b, conn, P = _connection(args)
    rep = check_tep(conn, P, b.w, args.tolerance, scale=b.input_scale())
    coeffs = {
        "A": [{str(k): _matrix(A.coeff(k)) for k in A.powers()} for A in conn.A],
        "Az": {str(k): _matrix(conn.Az.coeff(k)) for k in conn.Az.powers()},
        "P": {str(k): _matrix(P.coeff(k)) for k in P.powers()},
    }
    if conn.Abar is not None:
        coeffs["Abar"] = [{str(k): _matrix(A.coeff(k)) for k in A.powers()} for A in conn.Abar]
    doc = {"source": args.source, "w": b.w, "coefficients_at_base": coeffs, "tep": rep.to_dict()}
    return doc, rep.passed


def cmd_formal_iso(args):
    saito, _ = _load(args.saito)
    cv, _ = _load(args.cv)
    iso = solve_formal_iso(saito, cv, K=args.order, tol=args.tolerance)
    doc = iso.to_dict()
    return doc, iso.achieved_order == iso.K


def _zeta(args):
    z = getattr(args, "zeta", None)
    if z is None or z == "sum":
        return z
    return int(z)


def _f_structure(b, f, args):
    return f if f is not None else induce_f_structure(b, _zeta(args))


def cmd_induce_f(args):
    b, f0 = _load(args.chart)
    f = induce_f_structure(b, _zeta(args))
    rep = check_f_manifold(f, args.tolerance)
    pt = classify_point(f, seed=args.seed)
    doc = rep.to_dict()
    doc["point_type"] = {"kind": pt.kind, "partition": [list(p) for p in pt.partition],
                         "eigenvalues": [complex(v) for v in pt.eigenvalues]}
    doc["unit_at_base"] = [complex(x) for x in f.e.column().constant_term[:, 0]]
    doc["euler_at_base"] = [complex(x) for x in f.E.column().constant_term[:, 0]]
    return doc, rep.passed


def cmd_check_frobenius(args):
    b, _ = _load(args.chart)
    f, gM, gamM = build_frobenius(b, _zeta(args), args.d, tol=args.tolerance)
    d = f.notes["fitted_d"] if args.d is None else args.d
    rep = check_frobenius(f, gM, d, gamM, tol=args.tolerance)
    rep.notes["d"] = float(d)
    return _structure(rep)


def cmd_check_cdv(args):
    b, f = _load(args.chart)
    f = _f_structure(b, f, args)
    b.require("g")
    # g^M is g read on coordinate fields, i.e. in the frame I d_i
    gM = to_tangent_frame(b)[0].g
    return _structure(check_cdv(b, f, gM, args.d, tol=args.tolerance))


def cmd_canonical(args):
    b, _ = _load(args.chart)
    cd = canonical_data(b, _zeta(args))
    rep = check_canonical_props(cd, args.tolerance)
    doc = {"canonical_data": cd.to_dict(), "properties": rep.to_dict()}
    passed = rep.passed
    if args.with_curvature:
        cc = curvature_F(b, cd.sub)
        ok = cc.relative_discrepancy < 1e-8
        doc["curvature"] = {"discrepancy": cc.discrepancy, "relative_discrepancy": cc.relative_discrepancy,
                            "scale": cc.scale, "agree": ok}
        passed = passed and ok
    return doc, passed


def _direction(text: str, m: int) -> np.ndarray:
    try:
        X = np.array([complex(s.strip().replace("i", "j")) for s in text.split(",")])
    except ValueError as exc:
        raise UsageError(f"cannot parse direction {text!r}") from exc
    if X.shape != (m,):
        raise UsageError(f"direction needs {m} components")
    return X


def cmd_sectional(args):
    b, _ = _load(args.chart)
    cd = canonical_data(b, _zeta(args))
    X = _direction(args.direction, cd.m) if args.direction else np.eye(cd.m)[0]
    sc = sectional_curvature(cd, X)
    ok = sc.discrepancy < 1e-8 * (1.0 + abs(sc.value))
    doc = {"direction": [complex(x) for x in X], "sectional_curvature": sc.value,
           "from_higgs": sc.from_higgs, "discrepancy": sc.discrepancy, "agree": ok}
    return doc, ok


def cmd_hyperbolicity(args):
    b, _ = _load(args.chart)
    est = bound_k0(b, count=args.samples, seed=args.seed, refine=args.refine)
    doc = {"seed": args.seed, "estimate": est.to_dict(),
           "note": "statistical estimate from samples, not a certified bound"}
    if args.figure:
        write_histogram(est, args.figure)
        doc["figure"] = str(args.figure)
    return doc, est.k0 > 0


def cmd_fixture(args):
    b = FIXTURES[args.name]()
    try:
        f = induce_f_structure(b)
    except (NoUnfolding, BadSection, MissingTensor):
        f = None
    dump_chart(b, args.out, f)
    return {"fixture": args.name, "out": str(args.out), "m": b.m, "n": b.n, "d": b.ctx.d,
            "f_structure": f is not None}, True


# -- parser -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--tolerance", type=float, default=DEFAULT_TOL)
    common.add_argument("--report", help="write the report here instead of stdout")
    common.add_argument("--format", choices=("json", "text"), default="json")

    p = _Parser(prog="cvforge", description="Numerical checks for tt*/CV and Saito structures on jet charts.")
    p.add_argument("--version", action="version", version=f"cvforge {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, func, help_, chart=True):
        sp = sub.add_parser(name, parents=[common], help=help_)
        if chart:
            sp.add_argument("chart", help="chart file (JSON, schema cvforge/1)")
        sp.set_defaults(func=func)
        return sp

    add("check-higgs", cmd_check(check_higgs_pair), "Higgs pair axioms")
    add("check-saito", cmd_check(check_saito), "Saito structure axioms")
    add("check-cv", cmd_check(check_cv), "CV structure axioms")
    for name, func, h in (("check-tep", cmd_check_tep, "flatness and pairing of the built connection"),
                          ("build-connection", cmd_build_connection, "meromorphic connection and pairing")):
        sp = add(name, func, h)
        sp.add_argument("--from", dest="source", choices=("saito", "cv"), default="saito")
    sp = add("formal-iso", cmd_formal_iso, "order-by-order gauge isomorphism", chart=False)
    sp.add_argument("saito")
    sp.add_argument("cv")
    sp.add_argument("--order", type=int, default=None)
    for name, func, h in (("induce-f", cmd_induce_f, "induced F-manifold and point type"),
                          ("check-frobenius", cmd_check_frobenius, "Frobenius structure through a primitive section"),
                          ("check-cdv", cmd_check_cdv, "CDV structure on a tangent chart"),
                          ("canonical", cmd_canonical, "canonical data and their identities"),
                          ("sectional", cmd_sectional, "holomorphic sectional curvature of h^M"),
                          ("hyperbolicity", cmd_hyperbolicity, "sampled estimate of k0")):
        sp = add(name, func, h)
        sp.add_argument("--zeta", default=None, help="frame index or 'sum' for the primitive section")
        if name == "induce-f":
            sp.add_argument("--seed", type=int, default=0)
        if name in ("check-frobenius",):
            sp.add_argument("--d", type=float, default=None)
        if name == "check-cdv":
            sp.add_argument("--d", type=float, default=0.0)
        if name == "canonical":
            sp.add_argument("--with-curvature", action="store_true")
        if name == "sectional":
            sp.add_argument("--direction", default=None, help="comma-separated complex components, e.g. 1,0.5+1j")
        if name == "hyperbolicity":
            sp.add_argument("--samples", type=int, default=200)
            sp.add_argument("--seed", type=int, default=0)
            sp.add_argument("--refine", action="store_true")
            sp.add_argument("--figure", default=None, help="write a histogram of rho and R^sect (needs matplotlib)")
    sp = add("fixture", cmd_fixture, "export a built-in chart", chart=False)
    sp.add_argument("--name", choices=sorted(FIXTURES), required=True)
    sp.add_argument("--out", required=True)
    return p


INPUT_ERRORS = (
    OSError,
    SchemaError,
    InvariantViolation,
    MissingTensor,
    UsageError,
    AxiomFailure,
    SharedDataMismatch,
    NoUnfolding,
    BadSection,
    DegenerateInducedMetric,
    NotPositiveDefinite,
    NotIrreducible,
    ZeroVector,
    ValueError,
    ArithmeticError,
)


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        _emit({"error": {"kind": "usage", "message": str(exc)}, "exit_code": EXIT_INPUT}, argparse.Namespace())
        return EXIT_INPUT
    try:
        body, passed = args.func(args)
    except INPUT_ERRORS as exc:
        doc = {"command": args.command, "error": {"kind": type(exc).__name__, "message": str(exc)},
               "exit_code": EXIT_INPUT}
        _emit(doc, args)
        return EXIT_INPUT
    code = EXIT_OK if passed else EXIT_FAILED
    doc = {"command": args.command, "passed": bool(passed), "exit_code": code, "result": body}
    _emit(doc, args)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
