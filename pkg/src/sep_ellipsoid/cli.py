"""Command-line front end.

Exit codes: 0 success (certified / threshold found), 1 inconclusive,
2 usage or input error, 3 scan interval does not bracket a verdict change.
Reports go to standard output; diagnostics about failures go to standard
error.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import asdict

import numpy as np

from . import __version__
from .criteria import ball_criterion, ellipsoid_criterion, trace_criterion
from .detect import NoBracketError, certify, criterion_for, natural_product_state, threshold_scan
from .io import FormatError, dumps_matrix, dumps_report, read_matrix, write_manifest
from .models import (
    REFERENCE_X_PARAMS,
    IsingSpec,
    XStateParams,
    dephase_x,
    ising_product_spectrum,
    ising_rdm,
    ising_single_site_spectrum,
    x_state,
)
from .optimize import OptimizerConfig, default_jobs
from .qmat import hermitian
from .volume import eigenvalue_spread, log_volume_ratio

EXIT_OK, EXIT_INCONCLUSIVE, EXIT_ERROR, EXIT_NO_BRACKET = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _complexes(text: str) -> list[complex]:
    try:
        return [complex(v.replace(" ", "")) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated complex numbers, got {text!r}") from exc


def _add_optimizer_flags(p):
    p.add_argument("--seed", type=int, default=0, help="seed for all randomness (default 0)")
    p.add_argument("--terms", type=int, default=8, help="product terms in the ansatz")
    p.add_argument("--restarts", type=int, default=3)
    p.add_argument("--max-iters", type=int, default=300, help="residual evaluations per local run")
    p.add_argument("--jobs", type=int, default=None, help="parallel workers (env SEP_ELLIPSOID_JOBS)")


def _config(args) -> OptimizerConfig:
    jobs = args.jobs if args.jobs is not None else default_jobs()
    return OptimizerConfig(
        terms=args.terms, restarts=args.restarts, max_iters=args.max_iters, seed=args.seed, jobs=max(1, jobs)
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sep-ellipsoid", description="Certify separability with separable ellipsoids.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a model state file")
    gen.add_argument("model", choices=["x-state", "ising-rdm"])
    gen.add_argument("-o", "--output", default="-", help="output path ('-' for stdout)")
    gen.add_argument("--preset", choices=["paper"], default=None)
    gen.add_argument("--a", type=_floats)
    gen.add_argument("--b", type=_floats)
    gen.add_argument("--c", type=_complexes)
    gen.add_argument("--p", type=float, default=0.0, help="dephasing parameter")
    gen.add_argument("--L", type=int, default=12)
    gen.add_argument("--h", type=float, default=1.0)
    gen.add_argument("--T", type=float, default=0.0)
    gen.add_argument("--sites", type=int, default=3, help="number of central sites")
    gen.add_argument("--open", action="store_true", help="open instead of periodic boundary")

    cert = sub.add_parser("certify", help="certify a state file")
    cert.add_argument("state")
    cert.add_argument("--k", type=int, default=None, help="target k-separability (default: full)")
    cert.add_argument("--criterion", choices=["pipeline", "trace", "ellipsoid", "ball"], default="pipeline")
    cert.add_argument("--format", choices=["json", "table"], default="json")
    cert.add_argument("--timing", action="store_true", help="include wall-clock timings in the report")
    cert.add_argument("--decomposition", action="store_true", help="include the reference decomposition")
    _add_optimizer_flags(cert)

    scan = sub.add_parser("scan", help="bisect a criterion along a state family")
    scan.add_argument("family", choices=["x-dephase", "ising-thermal"])
    scan.add_argument("--criterion", choices=["ellipsoid", "trace", "ball", "ppt", "pipeline", "bisep"], default="trace")
    scan.add_argument("--from", dest="lo", type=float, default=None)
    scan.add_argument("--to", dest="hi", type=float, default=None)
    scan.add_argument("--tol", type=float, default=0.005)
    scan.add_argument("--format", choices=["csv", "json", "table"], default="csv")
    scan.add_argument("--L", type=int, default=12)
    scan.add_argument("--h", type=float, default=1.0)
    _add_optimizer_flags(scan)

    vol = sub.add_parser("volume", help="ellipsoid-to-ball volume ratio")
    src = vol.add_mutually_exclusive_group(required=True)
    src.add_argument("--state", help="state file; uses its natural product state")
    src.add_argument("--spectrum", type=_floats, help="comma-separated reference eigenvalues")
    src.add_argument("--preset", choices=["ising-h1", "ising-h3", "x-state"])
    vol.add_argument("--format", choices=["json", "table"], default="json")
    return parser


# ---------------------------------------------------------------------------

def _x_params(args) -> XStateParams:
    if args.preset == "paper":
        base = REFERENCE_X_PARAMS
        if any(v is not None for v in (args.a, args.b, args.c)):
            raise UsageError("--preset paper cannot be combined with --a/--b/--c")
    else:
        if args.a is None or args.b is None:
            raise UsageError("x-state needs --preset paper or both --a and --b")
        c = args.c if args.c is not None else [0, 0, 0, 0]
        try:
            base = XStateParams(tuple(args.a), tuple(args.b), tuple(c))
        except ValueError as exc:
            raise UsageError(f"invalid X-state parameters: {exc}") from exc
    try:
        return dephase_x(base, args.p)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def cmd_gen(args) -> int:
    if args.model == "x-state":
        params = _x_params(args)
        rho, dims = x_state(params), (2, 2, 2)
        manifest = {"model": "x-state", "p": args.p, **{k: [str(v) for v in vs] for k, vs in asdict(params).items()}}
    else:
        try:
            spec = IsingSpec(args.L, args.h, not args.open, args.T)
            rho = ising_rdm(spec, args.sites)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        dims = (2,) * args.sites
        manifest = {"model": "ising-rdm", **asdict(spec), "sites": args.sites}
    # a Hermitian fixed point, so reading the file back reproduces it exactly
    text = dumps_matrix(hermitian(rho, dims), dims)
    if args.output == "-":
        sys.stdout.write(text)
    else:
        with open(args.output, "w") as fh:
            fh.write(text)
        write_manifest(args.output, manifest)
    return EXIT_OK


def _table(rows) -> str:
    width = max(len(k) for k, _ in rows)
    return "".join(f"{k:<{width}}  {v}\n" for k, v in rows)


def cmd_certify(args) -> int:
    try:
        rho, dims = read_matrix(args.state)
    except OSError as exc:
        raise UsageError(f"cannot read {args.state}: {exc}") from exc
    if args.criterion == "pipeline":
        try:
            rep = certify(rho, dims, args.k, _config(args))
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        doc = rep.to_dict(timing=args.timing, decomposition=args.decomposition)
        certified = rep.certified
        rows = [("verdict", rep.verdict), ("criterion", rep.criterion), ("k", rep.k), ("distance", rep.distance)]
        rows += [(f"negativity[{b}]", f"{v:.3e}") for b, v in rep.negativity.items()]
        rows += [(f"stage {s.name}", s.outcome.margin if s.outcome else s.note) for s in rep.stages]
    else:
        fn = {"trace": trace_criterion, "ellipsoid": ellipsoid_criterion, "ball": ball_criterion}[args.criterion]
        out = fn(rho, natural_product_state(rho, dims))
        doc = out.to_dict()
        certified = out.certified
        rows = [("verdict", out.verdict), ("criterion", out.criterion), ("margin", out.margin)]
        rows += sorted(out.diagnostics.items())
    sys.stdout.write(dumps_report(doc) if args.format == "json" else _table(rows))
    return EXIT_OK if certified else EXIT_INCONCLUSIVE


def cmd_scan(args) -> int:
    cfg = _config(args)
    if args.family == "x-dephase":
        dims = (2, 2, 2)
        lo = 0.0 if args.lo is None else args.lo
        hi = 1.0 if args.hi is None else args.hi

        def family(p):
            return x_state(dephase_x(REFERENCE_X_PARAMS, p))
    else:
        dims = (2, 2, 2)
        lo = 1.0 if args.lo is None else args.lo
        hi = 2.0 if args.hi is None else args.hi
        L, h = args.L, args.h

        def family(T):
            return ising_rdm(IsingSpec(L, h, True, T), 3)

    test = criterion_for(args.criterion, dims, cfg)
    try:
        res = threshold_scan(family, (lo, hi), test, args.tol, jobs=cfg.jobs)
    except NoBracketError as exc:
        if args.format == "json":
            sys.stdout.write(dumps_report({"threshold": None, "error": str(exc), "probes": [asdict(p) for p in exc.probes]}))
        else:
            sys.stdout.write("param,verdict,margin,criterion\n")
            for p in exc.probes:
                sys.stdout.write(f"{p.param!r},{p.verdict},{p.margin!r},{p.criterion}\n")
        print(f"no bracket: {exc}", file=sys.stderr)
        return EXIT_NO_BRACKET
    if args.format == "json":
        doc = {
            "threshold": res.threshold,
            "certified_side": res.certified_side,
            "monotone": res.monotone,
            "probes": [asdict(p) for p in sorted(res.probes, key=lambda p: p.param)],
        }
        sys.stdout.write(dumps_report(doc))
    elif args.format == "table":
        sys.stdout.write(_table([("threshold", res.threshold), ("certified_side", res.certified_side), ("monotone", res.monotone)]))
    else:
        sys.stdout.write(res.to_csv())
        sys.stdout.write(f"# threshold={res.threshold!r} certified_side={res.certified_side} monotone={res.monotone}\n")
    return EXIT_OK


def cmd_volume(args) -> int:
    if args.state:
        try:
            rho, dims = read_matrix(args.state)
        except OSError as exc:
            raise UsageError(f"cannot read {args.state}: {exc}") from exc
        spectrum = natural_product_state(rho, dims).eigensystem().eigenvalues
    elif args.spectrum:
        spectrum = np.array(args.spectrum)
    elif args.preset == "ising-h1":
        spectrum = ising_product_spectrum([0.5 - 1 / np.pi, 0.5 + 1 / np.pi])
    elif args.preset == "ising-h3":
        spectrum = ising_product_spectrum(ising_single_site_spectrum(14, 3.0))
    else:
        rho = x_state(REFERENCE_X_PARAMS)
        spectrum = natural_product_state(rho, (2, 2, 2)).eigensystem().eigenvalues
    try:
        rep = log_volume_ratio(spectrum)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    doc = rep.to_dict()
    doc["spread"] = eigenvalue_spread(spectrum)
    if args.format == "json":
        sys.stdout.write(dumps_report(doc))
    else:
        sys.stdout.write(_table([(k, v) for k, v in doc.items() if k != "eigenvalues"]))
    return EXIT_OK


COMMANDS = {"gen": cmd_gen, "certify": cmd_certify, "scan": cmd_scan, "volume": cmd_volume}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_ERROR if exc.code else EXIT_OK
    try:
        return COMMANDS[args.command](args)
    except (UsageError, FormatError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
