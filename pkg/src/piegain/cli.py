"""``piegain`` command line.

Exit codes: 0 success / feasible, 2 no certificate at the requested degree,
3 solver failure (or a certificate that fails verification), 4 usage or
dimension error, 5 parse / validation error.
"""
import argparse
import hashlib
import json
import os
import sys
import time
import warnings
from importlib import resources

import numpy as np

from . import oracle, sdp
from .analysis import Certificate, check_passivity, gain_problem, min_gain, passivity_problem, verify_certificate
from .document import load_document
from .errors import (DimMismatch, ExportRejected, Infeasible, ParseError, PiegainError, ShapeMismatch,
                     SingularBT, SolverFailure, UnstableDiscretization)
from .positivity import DEFAULT_EPS
from .system_model import build_operators, validate

EXIT_OK, EXIT_INFEASIBLE, EXIT_SOLVER, EXIT_USAGE, EXIT_PARSE = 0, 2, 3, 4, 5


class UsageError(PiegainError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, "%s: error: %s\n" % (self.prog, message))


def builtin_systems():
    """Names of the system documents shipped with the package."""
    files = resources.files("piegain").joinpath("systems")
    return sorted(p.name[:-5] for p in files.iterdir() if p.name.endswith(".yaml"))


def resolve_document(path):
    """A filesystem path, or the name of a shipped system (``delay_c1``, ``examples/delay_c1``)."""
    if os.path.exists(path):
        return path
    name = os.path.basename(path)
    name = name[:-5] if name.endswith(".yaml") else name
    ref = resources.files("piegain").joinpath("systems", name + ".yaml")
    if ref.is_file():
        return str(ref)
    raise ParseError("no such document: %s (shipped systems: %s)" % (path, ", ".join(builtin_systems())))


def _read(path):
    real = resolve_document(path)
    with open(real, "rb") as fh:
        digest = hashlib.sha256(fh.read()).hexdigest()
    return load_document(real), digest


def _clean(obj):
    """JSON-safe copy (numpy scalars, NaN -> None)."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if np.isfinite(x) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


_TIMING_KEYS = ("solve_time", "assembly_time")


def _report(command, digest, args, result, t0, solver=None, degrees=None):
    """Report dictionary; all timings are collected under ``wall_time``."""
    solver = dict(solver or {})
    timing = {k: solver.pop(k) for k in _TIMING_KEYS if k in solver}
    timing["total"] = time.perf_counter() - t0
    flags = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "out", "cert_out")}
    return _clean({"command": command, "inputs": {"document_sha256": digest, "flags": flags},
                   "degrees": list(degrees) if degrees else None, "result": result,
                   "solver": solver, "wall_time": timing})


def _emit(report, args):
    text = json.dumps(report, indent=1, sort_keys=True)
    if getattr(args, "out", None):
        with open(args.out, "w") as fh:
            fh.write(text + "\n")


def _degrees(text):
    try:
        parts = [int(p) for p in text.replace(" ", "").split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError("degree must be 'd' or 'd1,d2'") from None
    if len(parts) == 1:
        parts = parts * 2
    if len(parts) != 2 or min(parts) < 0:
        raise argparse.ArgumentTypeError("degree must be 'd' or 'd1,d2' with non-negative integers")
    return tuple(parts)


def _solver_opts(args):
    opts = {}
    if getattr(args, "tol", None) is not None:
        opts["tol"] = args.tol
    if getattr(args, "max_iter", None) is not None:
        opts["max_iter"] = args.max_iter
    return opts


def _ops(system):
    report = validate(system)
    if not report.ok:
        raise ShapeMismatch(str(report))
    return build_operators(system, check=False)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_validate(args):
    t0 = time.perf_counter()
    system, digest = _read(args.document)
    report = validate(system)
    print("%s: %s" % (system.name or args.document, "valid" if report.ok else "INVALID"))
    for v in report.violations:
        print("  " + str(v))
    if report.ok:
        print("  dims: n1=%d n2=%d n3=%d nx=%d nw=%d ny=%d on [%g, %g], cond(BT) = %.3g" % (
            system.n1, system.n2, system.n3, system.nx, system.nw, system.ny, *system.domain,
            report.bt_condition))
    _emit(_report("validate", digest, args, {"valid": report.ok, "violations": [str(v) for v in report.violations],
                                             "bt_condition": report.bt_condition}, t0), args)
    return EXIT_OK if report.ok else EXIT_PARSE


def _export(args, system, digest, t0, kind):
    ops = _ops(system)
    d1, d2 = args.degree
    ap = (gain_problem if kind == "gain" else passivity_problem)(ops, d1, d2, args.eps)
    target = args.sdpa or (os.path.splitext(os.path.basename(args.document))[0] + ".dat-s")
    sdp.export_sdpa(ap.sdp, target)
    print("wrote %s (%d equalities, %d variables) and %s" % (
        target, ap.sdp.n_equalities, ap.sdp.n_vars, sdp.sidecar_path(target)))
    _emit(_report(kind, digest, args, {"exported": target, "sidecar": sdp.sidecar_path(target)}, t0,
                  degrees=args.degree), args)
    return EXIT_OK


def _finish_cert(args, cert, digest, t0, kind):
    passed = bool(cert.residuals.get("passed", False))
    result = {"status": cert.status, "verified": passed, "certified": cert.certified,
              "residuals": cert.residuals}
    if kind == "gain":
        result["gamma"] = cert.gamma
    if getattr(args, "cert_out", None):
        cert.save(args.cert_out)
        result["certificate"] = args.cert_out
    _emit(_report(kind, digest, args, result, t0, solver=cert.solver, degrees=cert.degrees), args)
    if kind == "gain":
        print("L2-gain bound gamma = %.6f  (degrees %s, status %s)" % (cert.gamma, cert.degrees, cert.status))
    else:
        print("passive: certificate found (degrees %s, status %s)" % (cert.degrees, cert.status))
    print("verification: %s (worst dissipation residual %.3e)" % (
        "PASS" if passed else "FAIL", cert.residuals.get("worst", float("nan"))))
    if not passed:
        print("error: the solver's certificate does not pass verification; the bound is not certified",
              file=sys.stderr)
        return EXIT_SOLVER
    if not cert.certified:
        print("error: the solver stopped at status %s (reduced accuracy); the bound is not certified"
              % cert.status, file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


def cmd_gain(args):
    t0 = time.perf_counter()
    system, digest = _read(args.document)
    if args.solver == "sdpa-export":
        return _export(args, system, digest, t0, "gain")
    ops = _ops(system)
    d1, d2 = args.degree
    cert = min_gain(system, d1, d2, args.eps, _solver_opts(args), ops=ops, bisection=args.bisection,
                    n_samples=args.samples)
    return _finish_cert(args, cert, digest, t0, "gain")


def cmd_passivity(args):
    t0 = time.perf_counter()
    system, digest = _read(args.document)
    if system.nw != system.ny:
        raise DimMismatch("passivity needs as many outputs as inputs (nw=%d, ny=%d)" % (system.nw, system.ny))
    if args.solver == "sdpa-export":
        return _export(args, system, digest, t0, "passivity")
    ops = _ops(system)
    d1, d2 = args.degree
    cert = check_passivity(system, d1, d2, args.eps, _solver_opts(args), ops=ops, n_samples=args.samples)
    return _finish_cert(args, cert, digest, t0, "passivity")


def cmd_verify(args):
    t0 = time.perf_counter()
    system, digest = _read(args.document)
    cert = Certificate.load(args.certificate)
    ops = _ops(system)
    if cert.storage.dims_in != (ops.nx, ops.nz):
        raise ParseError("certificate storage acts on %s, system state is %s" % (
            cert.storage.dims_in, (ops.nx, ops.nz)))
    rep = verify_certificate(ops, cert, args.samples)
    print("%s certificate, degrees %s%s" % (cert.kind, tuple(cert.degrees),
                                            ", gamma = %.6f" % cert.gamma if cert.kind == "gain" else ""))
    print(rep.table())
    _emit(_report("verify", digest, args, {"residuals": rep.as_dict(), "gamma": cert.gamma}, t0,
                  degrees=cert.degrees), args)
    return EXIT_OK if rep.passed else EXIT_SOLVER


def cmd_oracle(args):
    t0 = time.perf_counter()
    system, digest = _read(args.document)
    try:
        value = oracle.oracle_gain(system, args.method, args.grid)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    print("%s oracle estimate of the L2-gain: %.6f" % (args.method, value))
    _emit(_report("oracle", digest, args, {"method": args.method, "gain": value}, t0), args)
    return EXIT_OK


# ---------------------------------------------------------------------------

def build_parser():
    p = _Parser(prog="piegain", description="L2-gain and passivity certificates for coupled ODE-PDE systems")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, solve=True):
        sp.add_argument("document", help="system document (YAML) or the name of a shipped system")
        sp.add_argument("--out", help="write a JSON report here")
        if solve:
            sp.add_argument("--degree", type=_degrees, default=(2, 2), help="d or d1,d2 (default 2,2)")
            sp.add_argument("--eps", type=float, default=DEFAULT_EPS, help="coercivity margin")
            sp.add_argument("--solver", choices=("internal", "sdpa-export"), default="internal")
            sp.add_argument("--sdpa", help="SDPA file to write with --solver sdpa-export")
            sp.add_argument("--tol", type=float, help="solver tolerance (env PIEGAIN_SDP_TOL)")
            sp.add_argument("--max-iter", type=int, help="solver iterations (env PIEGAIN_SDP_MAXITER)")
            sp.add_argument("--samples", type=int, default=20, help="verification samples")
            sp.add_argument("--cert-out", help="write the certificate (JSON) here")

    sp = sub.add_parser("validate", help="check a system document")
    common(sp, solve=False)
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("gain", help="certified upper bound on the L2-gain")
    common(sp)
    sp.add_argument("--bisection", action="store_true", help="bisect on gamma^2 instead of minimizing")
    sp.set_defaults(func=cmd_gain)

    sp = sub.add_parser("passivity", help="passivity certificate")
    common(sp)
    sp.set_defaults(func=cmd_passivity)

    sp = sub.add_parser("verify", help="re-check a saved certificate")
    common(sp, solve=False)
    sp.add_argument("certificate")
    sp.add_argument("--samples", type=int, default=20)
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("oracle", help="independent numerical gain estimate")
    common(sp, solve=False)
    sp.add_argument("--method", choices=("tds", "fd"), default="tds")
    sp.add_argument("--grid", type=int, default=100, help="finite-difference intervals (fd)")
    sp.set_defaults(func=cmd_oracle)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    warnings.filterwarnings("ignore", module="cvxpy")
    try:
        return args.func(args)
    except Infeasible as exc:
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_INFEASIBLE
    except (SolverFailure, UnstableDiscretization) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_SOLVER
    except (DimMismatch, UsageError, ExportRejected) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_USAGE
    except (ParseError, ShapeMismatch, SingularBT) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
