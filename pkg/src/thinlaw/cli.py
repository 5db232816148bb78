"""Command-line entry point: ``thinlaw <command> [flags]``.

Every command writes one JSON document (``{"command", "config", "result"}``)
or a CSV table whose leading ``#`` lines record the full configuration,
defaults included. Exit codes: 0 success, 2 invalid parameters,
3 degenerate conditioning or starved sampling, 4 Monte-Carlo disagreement.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile

import numpy as np

from . import __version__
from .convergence import DEFAULT_UPTO, run_convergence
from .dist import pgf
from .exceptions import (
    AcceptanceTooLow,
    DegenerateConditioning,
    InvalidParams,
    InvalidSequence,
    TailUnsampleable,
)
from .fixed_points import (
    FAMILIES,
    FixedPointParams,
    fixed_point,
    fixed_point_pgf,
    make_family,
    pareto_invariance_residual,
    regvar_family,
    yule_simon,
)
from .infdiv import decompose
from .mc_oracle import MC_WINDOW, mc_transform
from .thinning import TransformParams, thin, transform

EXIT_OK, EXIT_PARAMS, EXIT_DEGENERATE, EXIT_ORACLE = 0, 2, 3, 4
DEFAULT_TRUNCATION = 100_000
DEFAULT_Q = 0.5
PGF_GRID = [0.0, 0.1, 0.25, 0.5, 0.75, 0.9, 1.0]


class CommandError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


# -- output helpers -----------------------------------------------------------
def write_atomic(path, text):
    """Write UTF-8 text via a temp file in the target directory, then rename."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".thinlaw-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _config(args):
    skip = {"func", "out", "raw_out"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _csv_text(config, header, rows):
    buf = io.StringIO()
    for key, value in config.items():
        buf.write(f"# {key}={json.dumps(value)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(x) for x in row])
    return buf.getvalue()


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return x


def _json_text(command, config, result):
    return json.dumps({"command": command, "config": config, "result": result}, indent=2) + "\n"


def _emit(args, text):
    if args.out:
        write_atomic(args.out, text)
    else:
        sys.stdout.write(text)


def _dist_rows(dist):
    upper = [float(dist.tail_mass + dist.probs[i:].sum()) for i in range(dist.probs.size)]
    return [(int(k), float(p), u) for k, p, u in zip(dist.support, dist.probs, upper)]


def _emit_dist(args, command, dist, extra=None):
    config = _config(args)
    if args.format == "csv":
        _emit(args, _csv_text(config, ["k", "pmf", "cdf_tail"], _dist_rows(dist)))
    else:
        result = {"distribution": dist.to_dict()}
        result.update(extra or {})
        _emit(args, _json_text(command, config, result))


def _family(args):
    params = {}
    for item in args.param or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise InvalidParams(f"--param expects key=value, got {item!r}")
        try:
            params[key.strip()] = float(value)
        except ValueError as exc:
            raise InvalidParams(f"--param {key} needs a number, got {value!r}") from exc
    return make_family(args.family, args.truncation, **params)


# -- commands -----------------------------------------------------------------
def cmd_fixed_point(args):
    if args.alpha == args.m and not args.trivial:
        raise InvalidParams(
            f"alpha must satisfy 0 < alpha < m = {args.m} for a nontrivial fixed point; "
            "alpha = m (delta_m) needs --trivial"
        )
    params = FixedPointParams(args.m, args.alpha)
    dist = fixed_point(params, args.n)
    probs = dist.probs
    ratios = list(probs[1:] / probs[:-1]) + [None]
    grid = np.asarray(PGF_GRID)
    pgf_rows = {
        "s": PGF_GRID,
        "stored": pgf(dist, grid).tolist(),
        "closed_form": fixed_point_pgf(params, grid).tolist(),
    }
    config = _config(args)
    if args.format == "csv":
        rows = [(k, p, u, r) for (k, p, u), r in zip(_dist_rows(dist), ratios)]
        _emit(args, _csv_text(config, ["k", "pmf", "cdf_tail", "ratio"], rows))
    else:
        result = {
            "m": params.m,
            "alpha": params.alpha,
            "beta": params.beta,
            "distribution": dist.to_dict(),
            "ratios": ratios[:-1],
            "pgf": pgf_rows,
        }
        _emit(args, _json_text("fixed-point", config, result))


def cmd_yule(args):
    _emit_dist(args, "yule", yule_simon(args.beta, args.n))


def cmd_regvar(args):
    _emit_dist(args, "regvar", regvar_family(args.beta, args.gamma, args.n))


def cmd_thin(args):
    _emit_dist(args, "thin", thin(_family(args), args.p, args.upto))


def cmd_transform(args):
    _emit_dist(args, "transform", transform(_family(args), TransformParams(args.p, args.m), args.upto))


def cmd_converge(args):
    report = run_convergence(
        _family(args), args.q, args.m, args.steps, args.beta, upto=args.upto
    )
    config = _config(args)
    if args.format == "csv":
        text = report.to_csv()
        header, body = text.split("\n", 1)
        rows = list(csv.reader(io.StringIO(body)))
        _emit(args, _csv_text(config, header.split(","), rows))
    else:
        _emit(args, _json_text("converge", config, report.to_dict()))


def cmd_decompose(args):
    if args.alpha >= args.m:
        raise InvalidParams(f"alpha must satisfy 0 < alpha < m = {args.m}, got {args.alpha!r}")
    dist = fixed_point(FixedPointParams(args.m, args.alpha), args.n)
    dec = decompose(dist, args.m, compensated=args.compensated)
    config = _config(args)
    if args.format == "csv":
        text = dec.to_csv()
        header, body = text.split("\n", 1)
        _emit(args, _csv_text(config, header.split(","), list(csv.reader(io.StringIO(body)))))
    else:
        _emit(args, _json_text("decompose", config, dec.to_dict()))


def cmd_mc_check(args):
    report = mc_transform(
        _family(args), args.p, args.m, args.n_samples, args.seed,
        window=args.window, keep_samples=bool(args.raw_out),
    )
    config = _config(args)
    if args.format == "csv":
        emp, ex = report.empirical, report.exact
        rows = [(k, emp.pmf(k), ex.pmf(k)) for k in range(args.m, args.m + args.window)]
        rows.append(("overflow", emp.tail_mass, ex.tail_mass))
        summary = {"tv_vs_exact": report.tv_vs_exact, "bound": report.bound,
                   "n_accepted": report.n_accepted}
        config = {**config, **summary}
        _emit(args, _csv_text(config, ["k", "empirical", "exact"], rows))
    else:
        _emit(args, _json_text("mc-check", config, report.to_dict()))
    if args.raw_out:
        write_atomic(args.raw_out, report.raw_lines())
    if not report.within_bound:
        raise CommandError(
            f"Monte-Carlo TV {report.tv_vs_exact:.4g} exceeds bound {report.bound:.4g}", EXIT_ORACLE
        )


def cmd_pareto_check(args):
    residual = pareto_invariance_residual(args.alpha, args.c, args.x)
    x = np.asarray(args.x, dtype=float)
    lhs = (x / args.c) ** -args.alpha / (1 / args.c) ** -args.alpha
    config = _config(args)
    if args.format == "csv":
        rows = [(float(xi), float(li), float(xi**-args.alpha)) for xi, li in zip(x, lhs)]
        _emit(args, _csv_text({**config, "residual": residual}, ["x", "conditioned", "pareto"], rows))
    else:
        _emit(args, _json_text("pareto-check", config, {"residual": residual, "x": args.x}))


# -- parser -------------------------------------------------------------------
def _common(p):
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out", default=None, help="output path (default: stdout)")


def _family_flags(p):
    p.add_argument("--family", choices=sorted(FAMILIES), required=True)
    p.add_argument("--param", action="append", metavar="KEY=VALUE",
                   help="family parameter, repeatable; " + "; ".join(
                       f"{name}: {', '.join(sorted(d))}" for name, (_, d) in sorted(FAMILIES.items())))
    p.add_argument("--truncation", type=int, default=DEFAULT_TRUNCATION,
                   help="stored support size of the start law")


def build_parser():
    parser = argparse.ArgumentParser(prog="thinlaw", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"thinlaw {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fixed-point", help="tabulate a fixed point of the transform")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--n", type=int, default=DEFAULT_TRUNCATION, help="stored support size")
    p.add_argument("--trivial", action="store_true", help="admit alpha = m (delta_m)")
    _common(p)
    p.set_defaults(func=cmd_fixed_point)

    p = sub.add_parser("yule", help="tabulate a Yule-Simon law")
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--n", type=int, default=DEFAULT_TRUNCATION)
    _common(p)
    p.set_defaults(func=cmd_yule)

    p = sub.add_parser("regvar", help="tabulate a regularly varying test law")
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--gamma", type=float, default=0.0)
    p.add_argument("--n", type=int, default=DEFAULT_TRUNCATION)
    _common(p)
    p.set_defaults(func=cmd_regvar)

    for name, func, helptext in (("thin", cmd_thin, "p-thin a family"),
                                 ("transform", cmd_transform, "apply T_{p,m} to a family")):
        p = sub.add_parser(name, help=helptext)
        _family_flags(p)
        p.add_argument("--p", type=float, required=True)
        if name == "transform":
            p.add_argument("--m", type=int, default=1)
        p.add_argument("--upto", type=int, default=None, help="largest stored output point")
        _common(p)
        p.set_defaults(func=func)

    p = sub.add_parser("converge", help="diagnostics along p = q^j")
    _family_flags(p)
    p.add_argument("--q", type=float, default=DEFAULT_Q)
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--steps", type=int, default=12)
    p.add_argument("--beta", type=float, default=None, help="tail exponent (default: from the family)")
    p.add_argument("--upto", type=int, default=DEFAULT_UPTO, help="largest stored point per iterate")
    _common(p)
    p.set_defaults(func=cmd_converge)

    p = sub.add_parser("decompose", help="compound-Poisson decomposition of a fixed point")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--n", type=int, default=1000, help="stored support size")
    p.add_argument("--compensated", action="store_true", help="compensated summation")
    _common(p)
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("mc-check", help="Monte-Carlo check of the transform")
    _family_flags(p)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--n-samples", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--window", type=int, default=MC_WINDOW)
    p.add_argument("--raw-out", default=None, help="also dump accepted samples, one per line")
    _common(p)
    p.set_defaults(func=cmd_mc_check)

    p = sub.add_parser("pareto-check", help="continuous Pareto invariance residual")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--c", type=float, required=True)
    p.add_argument("--x", type=float, nargs="+", default=[1.0, 2.0, 4.0, 8.0, 16.0])
    _common(p)
    p.set_defaults(func=cmd_pareto_check)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except CommandError as exc:
        print(f"thinlaw: {exc}", file=sys.stderr)
        return exc.code
    except (DegenerateConditioning, AcceptanceTooLow, TailUnsampleable) as exc:
        print(f"thinlaw: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (InvalidParams, InvalidSequence) as exc:
        print(f"thinlaw: invalid parameters: {exc}", file=sys.stderr)
        return EXIT_PARAMS
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
