"""Command line front end.

Every subcommand writes one JSON or CSV document (stdout or ``--out``) whose
header records the package version, a hash of the run configuration and the
seed.  Exit codes: 0 success, 2 domain error, 3 capacity error, 4
resummation or quadrature failure, 64 usage error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import sys
from fractions import Fraction

from lvelab import __version__
from lvelab.errors import LveLabError

EXIT_USAGE = 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


def _partition(text: str) -> tuple[int, ...]:
    try:
        parts = tuple(sorted(int(x) for x in text.replace(" ", "").split(",") if x))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad partition {text!r}")
    if not parts or min(parts) < 1:
        raise argparse.ArgumentTypeError(f"bad partition {text!r}")
    return parts


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="lvelab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"lvelab {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default="-", help="output file (default stdout)")
    common.add_argument("--format", choices=("json", "csv"), default=None)
    common.add_argument("--workers", type=int, default=None, help="process count (env LVELAB_WORKERS)")
    common.add_argument("--seed", type=int, default=0)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("census", parents=[common], help="ribbon map and LVE enumeration tables")
    s.add_argument("--nmax", type=int, default=4)
    s.add_argument("--kmax", type=int, default=1)
    s.add_argument("--lve", action="store_true", help="LVE tree counts instead of map classes")

    s = sub.add_parser("coeffs", parents=[common], help="perturbative coefficients a_{pi,n}(N)")
    s.add_argument("--partition", type=_partition, default=(1,))
    s.add_argument("--nmax", type=int, default=3)
    s.add_argument("--genus", type=int, default=None)

    s = sub.add_parser("planar", parents=[common], help="planar Schwinger-Dyson series")
    s.add_argument("--nmax", type=int, default=10)
    s.add_argument("--lambda", dest="lam", type=float, action="append", default=None)

    s = sub.add_parser("bounds", parents=[common], help="domain membership and bound values")
    s.add_argument("--lambda", dest="lam", type=float, default=None, help="modulus of the coupling")
    s.add_argument("--theta", type=float, default=0.0)
    s.add_argument("--domain", choices=("C", "C_tilde", "C_prime", "D_R"), default="C")
    s.add_argument("--R", type=float, default=None)
    s.add_argument("--N", type=float, default=1.0)
    s.add_argument("--k", type=int, default=1)
    s.add_argument("--p", type=int, default=1)
    s.add_argument("--n", type=int, default=3)
    s.add_argument("--g", type=int, default=0)
    s.add_argument("--Cg", type=float, default=1.0)
    s.add_argument("--grid", type=int, default=None, help="emit a rho x theta grid with this many rho steps")
    s.add_argument("--rho-max", type=float, default=0.25)

    s = sub.add_parser("borel", parents=[common], help="Borel-Pade resummation")
    s.add_argument("--series", choices=("planar", "geometric", "stieltjes", "file"), default="planar")
    s.add_argument("--coeffs-file", default=None, help="JSON list of rationals (with --series file)")
    s.add_argument("--ncoeffs", type=int, default=101)
    s.add_argument("--lambda", dest="lam", type=float, action="append", required=True)
    s.add_argument("--pade", type=int, nargs=2, default=None, metavar=("L", "M"))
    s.add_argument("--nodes", type=int, default=64)

    s = sub.add_parser("mc-check", parents=[common], help="Monte Carlo versus series versus bound")
    s.add_argument("--N", type=int, default=3)
    s.add_argument("--lambda", dest="lam", type=float, default=0.05)
    s.add_argument("--n", type=int, default=3, help="truncation order")
    s.add_argument("--steps", type=int, default=10 ** 7)
    s.add_argument("--target", type=float, default=None, help="stderr target (default 1e-3 N)")
    s.add_argument("--chains", type=int, default=1000)

    s = sub.add_parser("vector", parents=[common], help="vector model quadrature")
    s.add_argument("--N", type=int, default=5)
    s.add_argument("--lambda", dest="lam", type=float, default=0.05)
    s.add_argument("--theta", type=float, default=0.0)
    s.add_argument("--j", type=float, default=0.0)
    s.add_argument("--method", choices=("adaptive", "hermite"), default="adaptive")
    s.add_argument("--nodes", type=int, default=200)

    s = sub.add_parser("bkar", parents=[common], help="BKAR forest formula residuals")
    s.add_argument("--n", type=int, default=None)
    s.add_argument("--phi", action="append", default=None, help="polynomial in x12, x13, x23")
    return p


def config_hash(args: argparse.Namespace) -> str:
    cfg = {k: v for k, v in sorted(vars(args).items()) if k not in ("out", "workers")}
    blob = json.dumps(cfg, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _header(args) -> dict:
    return {"version": __version__, "command": args.command, "config_hash": config_hash(args), "seed": args.seed}


def _emit(args, data, rows=None, columns=None, default="json"):
    fmt = args.format or default
    if fmt == "csv":
        if rows is None:
            raise UsageError(f"{args.command} has no CSV form")
        buf = io.StringIO()
        h = _header(args)
        buf.write(f"# lvelab {h['version']} command={h['command']} config={h['config_hash']} seed={h['seed']}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([r.get(c, "") for c in columns])
        text = buf.getvalue()
    else:
        text = json.dumps({"header": _header(args), "data": data}, indent=2, sort_keys=True) + "\n"
    if args.out == "-":
        sys.stdout.write(text)
    else:
        with open(args.out, "w") as fh:
            fh.write(text)


def _cmd_census(args):
    if args.lve:
        from lvelab.lve_structures import count_lve_trees

        rows = [{"n": n, "k": k, "trees": count_lve_trees(n, k)}
                for n in range(args.nmax + 1) for k in range(min(args.kmax, n + 1) + 1)]
        _emit(args, rows, rows, ["n", "k", "trees"], default="csv")
        return
    from lvelab.ribbon_maps import census

    rows = census(args.nmax, args.kmax, workers=_workers(args))
    flat = [dict(r, partition=" ".join(map(str, r["partition"]))) for r in rows]
    _emit(args, rows, flat, ["n", "k", "g", "B", "partition", "count"], default="csv")


def _workers(args):
    from lvelab.oracle_integrators import resolve_workers

    return resolve_workers(args.workers)


def _cmd_coeffs(args):
    from lvelab.coefficients import genus_coefficients, perturbative_coefficients

    table = perturbative_coefficients(args.partition, args.nmax, workers=_workers(args))
    data = table.to_json()
    if args.genus is not None:
        data["genus"] = args.genus
        data["genus_coefficients"] = [str(c) for c in genus_coefficients(args.partition, args.genus, args.nmax)]
    rows = [{"n": o["n"], "exponent": e, "coefficient": c} for o in data["orders"] for e, c in o["laurent"].items()]
    _emit(args, data, rows, ["n", "exponent", "coefficient"])


def _cmd_planar(args):
    from lvelab.planar_sde import planar_closed_form, planar_count, sde_series

    series = sde_series(args.nmax)
    width = max(len(g.coeffs) for g in series)
    rows = []
    for n, g in enumerate(series):
        row = {"n": n, "planar_count": planar_count(n), "G_at_1": g(1)}
        row.update({f"q{i}": (g.coeffs[i] if i < len(g.coeffs) else 0) for i in range(width)})
        rows.append(row)
    data = {"series": [{"n": n, "count": planar_count(n), "G": list(g.coeffs)} for n, g in enumerate(series)]}
    if args.lam:
        data["closed_form"] = [{"lambda": x, "value": planar_closed_form(x)} for x in args.lam]
    _emit(args, data, rows, ["n", "planar_count", "G_at_1"] + [f"q{i}" for i in range(width)], default="csv")


def _cmd_bounds(args):
    from lvelab.analytic_bounds import ComplexCoupling, bound_report, in_domain

    if args.grid:
        rows = []
        thetas = [i * math.pi / 8 for i in range(-7, 8)]
        for i in range(1, args.grid + 1):
            rho = args.rho_max * i / args.grid
            for th in thetas:
                lam = ComplexCoupling(rho, th)
                r = bound_report(lam, args.N, args.k, args.p, args.n, args.g, args.Cg)
                rows.append({"rho": rho, "theta": th, "in_C": r["in_C"], "in_C_tilde": r["in_C_tilde"],
                             "in_C_prime": r["in_C_prime"], "tree_bound_E1": r["tree_bound_E1"],
                             "perturbative_remainder_bound": r["perturbative_remainder_bound"],
                             "topological_remainder_bound": r["topological_remainder_bound"]})
        _emit(args, rows, rows, list(rows[0]), default="csv")
        return
    if args.lam is None:
        raise UsageError("bounds needs --lambda or --grid")
    if args.lam < 0:
        raise UsageError("--lambda is the modulus; use --theta for the phase")
    lam = ComplexCoupling(args.lam, args.theta)
    data = {f"in_{args.domain}": in_domain(lam, args.domain, R=args.R)}
    data["report"] = bound_report(lam, args.N, args.k, args.p, args.n, args.g, args.Cg)
    _emit(args, data)


def _borel_coeffs(args):
    from lvelab.planar_sde import planar_count

    n = args.ncoeffs
    if args.series == "planar":
        return [planar_count(i) for i in range(n)]
    if args.series == "geometric":
        return [1] * n
    if args.series == "stieltjes":
        return [(-1) ** i * math.factorial(i) for i in range(n)]
    if not args.coeffs_file:
        raise UsageError("--series file needs --coeffs-file")
    with open(args.coeffs_file) as fh:
        return [Fraction(str(x)) for x in json.load(fh)]


def _cmd_borel(args):
    from lvelab.analytic_bounds import BorelConfig, borel_sum

    coeffs = _borel_coeffs(args)
    L, M = args.pade if args.pade else (None, None)
    cfg = BorelConfig(L, M, nodes=args.nodes)
    rows = [{"lambda": x, "borel_sum": borel_sum(coeffs, x, cfg)} for x in args.lam]
    _emit(args, {"series": args.series, "ncoeffs": len(coeffs), "results": rows}, rows, ["lambda", "borel_sum"])


def _cmd_mc_check(args):
    from lvelab.analytic_bounds import perturbative_remainder_bound
    from lvelab.coefficients import evaluate_series, perturbative_coefficients
    from lvelab.oracle_integrators import mc_matrix_cumulant_k1

    target = args.target if args.target is not None else 1e-3 * args.N
    est = mc_matrix_cumulant_k1(args.N, args.lam, steps=args.steps, seed=args.seed, chains=args.chains,
                                target_stderr=target, workers=_workers(args))
    table = perturbative_coefficients((1,), args.n)
    series = float(evaluate_series(table, args.lam, args.N, args.n))
    bound = perturbative_remainder_bound(args.n, 1, 1, args.lam, args.N)
    diff = abs(est.mean - series)
    data = {"estimate": est.to_json(), "series": series, "truncation_order": args.n, "remainder_bound": bound,
            "within_3sigma": diff <= 3 * est.stderr, "within_bound": diff <= bound + 3 * est.stderr,
            "stderr_target_met": est.stderr <= target}
    _emit(args, data)


def _cmd_vector(args):
    from lvelab.analytic_bounds import ComplexCoupling
    from lvelab.oracle_integrators import vector_cumulant_cs, vector_cumulant_fd, vector_logz

    lam = ComplexCoupling(args.lam, args.theta)
    kw = {"method": args.method, "quad_nodes": args.nodes}
    z = vector_logz(args.N, lam, args.j, **kw)
    data = {"logZ": [z.real, z.imag]}
    if args.theta == 0:
        data["cumulant_fd"] = vector_cumulant_fd(args.N, lam, **kw)
        data["cumulant_complex_step"] = vector_cumulant_cs(args.N, lam, **kw)
    _emit(args, data)


def _cmd_bkar(args):
    from lvelab.lve_structures import BKAR_SUITE, bkar_verify

    if args.phi:
        n = args.n or 3
        cases = [(n, phi) for phi in args.phi]
    else:
        cases = [c for c in BKAR_SUITE if args.n in (None, c[0])]
    rows = [{"n": n, "phi": phi, "residual": str(bkar_verify(n, phi))} for n, phi in cases]
    _emit(args, rows, rows, ["n", "phi", "residual"])


COMMANDS = {
    "census": _cmd_census,
    "coeffs": _cmd_coeffs,
    "planar": _cmd_planar,
    "bounds": _cmd_bounds,
    "borel": _cmd_borel,
    "mc-check": _cmd_mc_check,
    "vector": _cmd_vector,
    "bkar": _cmd_bkar,
}


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except LveLabError as exc:
        print(f"lvelab: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    return 0


def main(argv=None) -> int:
    return run(argv)
