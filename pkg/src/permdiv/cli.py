"""Command-line entry point: ``permdiv <subcommand> [flags]``.

Exit codes: 0 success, 1 runtime or domain error, 2 usage error.
"""
from __future__ import annotations

import argparse
import io
import json
import math
import secrets
import sys

import numpy as np

from . import __version__
from . import enumexact, oracles, stats
from .rng import DEFAULT_SEED


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _fmt(x) -> str:
    return f"{float(x):.10g}"


def _metadata(cfg) -> dict:
    return {
        "seed": cfg.seed,
        "theta": cfg.theta,
        "n": cfg.n,
        "samples": cfg.samples,
        "grid": cfg.grid,
        "measure": "uniform" if cfg.ewens is None else f"ewens({cfg.ewens})",
        "version": __version__,
    }


def _csv_section(out, name, header, rows):
    out.write(f"# {name}\n")
    out.write(",".join(header) + "\n")
    for row in rows:
        out.write(",".join(row) + "\n")


def serialize_report(report: stats.EnsembleReport, fmt: str = "csv") -> bytes:
    """CSV (one section per table, 10 significant digits) or JSON bytes."""
    if fmt == "json":
        limit = oracles.mean_curve_limit(report.grid, report.config.theta)
        obj = {
            "metadata": _metadata(report.config),
            "mean_curve": [
                {"t": float(t), "mean": float(m), "std_error": float(s), "limit": float(b)}
                for t, m, s, b in zip(report.grid, report.mean_curve, report.mean_curve_se, limit)
            ],
            "moment_estimates": [
                {"l": l, "tvec": list(tv), "estimate": est, "std_error": se}
                for l, tv, est, se in report.moment_estimates
            ],
            "modulus_table": [{"a": a, "mean_q": q} for a, q in report.modulus_table],
            "increment_histogram": [
                {"value": v, "frequency": f} for v, f in report.increment_histogram.items()
            ],
            "oracle_distances": dict(report.oracle_distances),
            "mean_cycles": report.mean_cycles,
        }
        return (json.dumps(obj, indent=1) + "\n").encode()
    if fmt != "csv":
        raise ValueError(f"unknown format {fmt!r}")
    out = io.StringIO(newline="")
    _csv_section(out, "metadata", ["key", "value"],
                 [[k, str(v)] for k, v in _metadata(report.config).items()])
    limit = oracles.mean_curve_limit(report.grid, report.config.theta)
    _csv_section(out, "mean_curve", ["t", "mean", "std_error", "limit"],
                 [[_fmt(t), _fmt(m), _fmt(s), _fmt(b)] for t, m, s, b in
                  zip(report.grid, report.mean_curve, report.mean_curve_se, limit)])
    _csv_section(out, "moment_estimates", ["l", "tvec", "estimate", "std_error"],
                 [[str(l), " ".join(_fmt(t) for t in tv), _fmt(e), _fmt(s)]
                  for l, tv, e, s in report.moment_estimates])
    _csv_section(out, "modulus_table", ["a", "mean_q"],
                 [[_fmt(a), _fmt(q)] for a, q in report.modulus_table])
    _csv_section(out, "increment_histogram", ["value", "frequency"],
                 [[_fmt(v), _fmt(f)] for v, f in report.increment_histogram.items()])
    _csv_section(out, "oracle_distances", ["name", "value"],
                 [[k, _fmt(v)] for k, v in report.oracle_distances.items()]
                 + [["mean_cycles", _fmt(report.mean_cycles)]])
    return out.getvalue().encode()


def _seed(text: str) -> int:
    if text == "random":
        return secrets.randbits(64)
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer or 'random', got {text!r}") from None
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return value


def _build_parser() -> _Parser:
    parser = _Parser(prog="permdiv", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    def ensemble(p, samples=1000):
        p.add_argument("--n", type=int, required=True)
        p.add_argument("--samples", type=int, default=samples)
        p.add_argument("--theta", type=float, default=1.0)
        p.add_argument("--seed", type=_seed, default=DEFAULT_SEED)
        p.add_argument("--grid", type=int, default=200)
        p.add_argument("--ewens", type=float, default=None)
        p.add_argument("--workers", type=int, default=None)
        output(p)

    def output(p):
        p.add_argument("--out", default=None)
        p.add_argument("--format", choices=("csv", "json"), default="csv")

    p = sub.add_parser("simulate", help="run an ensemble and emit its report")
    ensemble(p)
    p.add_argument("--tvec", type=float, nargs="+", action="append", default=None)
    p.add_argument("--a", type=float, nargs="+", default=None)
    p.add_argument("--s", type=float, default=None)
    p.add_argument("--t", type=float, default=None)

    p = sub.add_parser("mean-curve", help="ensemble mean curve vs the beta limit")
    ensemble(p)

    p = sub.add_parser("moments", help="empirical mixed moment vs its limit")
    ensemble(p)
    p.add_argument("--l", type=int, required=True)
    p.add_argument("--tvec", type=float, nargs="+", required=True)
    p.add_argument("--oracle-samples", type=int, default=10**6)

    p = sub.add_parser("modulus", help="modulus of continuity scaling table")
    ensemble(p)
    p.add_argument("--a", type=float, nargs="+", required=True)

    p = sub.add_parser("increments", help="increment histogram and dyadic check")
    ensemble(p)
    p.add_argument("--s", type=float, required=True)
    p.add_argument("--t", type=float, required=True)

    p = sub.add_parser("beta", help="regularized incomplete beta")
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--b", type=float, required=True)

    p = sub.add_parser("dickman", help="Dickman rho")
    p.add_argument("--u", type=float, required=True)
    p.add_argument("--log", action="store_true", help="print log rho instead")

    p = sub.add_parser("buchstab", help="Buchstab omega")
    p.add_argument("--u", type=float, required=True)

    for name in ("friable", "free"):
        p = sub.add_parser(name, help=f"probability that a permutation is r-{name}")
        p.add_argument("--m", type=int, required=True)
        p.add_argument("--r", type=int, required=True)

    p = sub.add_parser("km-identity", help="both sides of the long-cycle second-moment identity")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--r", type=int, required=True)

    p = sub.add_parser("exact-mean", help="exact E prod X_n(t_i) by enumeration, n <= 60")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--theta", type=float, default=1.0)
    p.add_argument("--tvec", type=float, nargs="+", required=True)
    return parser


def _check(ok: bool, flag: str, why: str):
    if not ok:
        raise UsageError(f"argument {flag}: {why}")


def _validate(args):
    cmd = args.command
    if hasattr(args, "samples"):
        _check(args.n >= 1, "--n", "must be >= 1")
        _check(args.samples >= 1, "--samples", "must be >= 1")
        _check(args.theta > 0 and math.isfinite(args.theta), "--theta", "must be positive")
        _check(args.grid >= 1, "--grid", "must be >= 1")
        _check(args.ewens is None or args.ewens > 0, "--ewens", "must be positive")
        _check(args.workers is None or args.workers >= 1, "--workers", "must be >= 1")
    if cmd == "simulate":
        for tv in args.tvec or []:
            _check(all(0 <= t <= 1 for t in tv), "--tvec", "times must lie in [0, 1]")
        _check(all(a > 0 for a in args.a or []), "--a", "window sizes must be positive")
        _check((args.s is None) == (args.t is None), "--s", "--s and --t go together")
        if args.s is not None:
            _check(0 <= args.s <= args.t <= 1, "--s", "need 0 <= s <= t <= 1")
    elif cmd == "moments":
        _check(1 <= args.l <= 4, "--l", "must lie in 1..4")
        _check(len(args.tvec) == args.l, "--tvec", f"expected {args.l} times")
        _check(all(0 < t <= 1 for t in args.tvec), "--tvec", "times must lie in (0, 1]")
        _check(args.oracle_samples >= 1000, "--oracle-samples", "must be >= 1000")
    elif cmd == "modulus":
        _check(all(a > 0 for a in args.a), "--a", "window sizes must be positive")
    elif cmd == "increments":
        _check(0 < args.s <= args.t < 1, "--s", "need 0 < s <= t < 1")
    elif cmd == "beta":
        _check(0 <= args.t <= 1, "--t", "must lie in [0, 1]")
        _check(args.a > 0, "--a", "must be positive")
        _check(args.b > 0, "--b", "must be positive")
    elif cmd == "dickman":
        _check(0 <= args.u <= oracles.MAX_DICKMAN_U, "--u", f"must lie in [0, {oracles.MAX_DICKMAN_U}]")
    elif cmd == "buchstab":
        _check(args.u >= 1, "--u", "must be >= 1")
    elif cmd in ("friable", "free"):
        _check(0 <= args.m <= enumexact.TABLE_CAP, "--m", f"must lie in [0, {enumexact.TABLE_CAP}]")
        _check(args.r >= (1 if cmd == "friable" else 0), "--r",
               "must be >= 1" if cmd == "friable" else "must be >= 0")
    elif cmd == "km-identity":
        _check(args.n >= 1, "--n", "must be >= 1")
        _check(0 <= args.r < args.n, "--r", "must lie in [0, n)")
    elif cmd == "exact-mean":
        _check(1 <= args.n <= 60, "--n", "must lie in 1..60")
        _check(args.theta > 0, "--theta", "must be positive")
        _check(all(0 <= t <= 1 for t in args.tvec), "--tvec", "times must lie in [0, 1]")


def _config(args, **extra) -> stats.EnsembleConfig:
    return stats.EnsembleConfig(
        n=args.n, samples=args.samples, theta=args.theta, seed=args.seed,
        grid=args.grid, ewens=args.ewens, **extra)


def _table(header, rows) -> bytes:
    lines = [",".join(header)] + [",".join(r) for r in rows]
    return ("\n".join(lines) + "\n").encode()


def _run(args) -> bytes:
    cmd = args.command
    if cmd == "beta":
        return f"{oracles.regularized_incomplete_beta(args.t, args.a, args.b):.10f}\n".encode()
    if cmd == "dickman":
        v = oracles.log_dickman_rho(args.u) if args.log else oracles.dickman_rho(args.u)
        return f"{v:.10g}\n".encode()
    if cmd == "buchstab":
        return f"{oracles.buchstab_omega(args.u):.10f}\n".encode()
    if cmd == "friable":
        return f"{enumexact.friable_probability(args.m, args.r):.10g}\n".encode()
    if cmd == "free":
        return f"{enumexact.free_probability(args.m, args.r):.10g}\n".encode()
    if cmd == "km-identity":
        lhs, rhs = enumexact.second_moment_identity(args.n, args.r)
        h = enumexact.harmonic_tail(args.r, args.n)
        return _table(["n", "r", "lhs", "rhs", "harmonic_tail"],
                      [[str(args.n), str(args.r), _fmt(lhs), _fmt(rhs), _fmt(h)]])
    if cmd == "exact-mean":
        tv = args.tvec
        value = enumexact.exact_moments(args.n, args.theta, len(tv), tv)
        rows = [[str(args.n), " ".join(_fmt(t) for t in tv), _fmt(value)]]
        header = ["n", "tvec", "exact"]
        if len(tv) == 1:
            header.append("limit")
            rows[0].append(_fmt(oracles.mean_curve_limit(tv[0], args.theta)))
        return _table(header, rows)

    workers = stats.worker_count(args.workers)
    if cmd in ("simulate", "mean-curve"):
        extra = {}
        if cmd == "simulate":
            extra = {
                "moments": tuple(tuple(tv) for tv in args.tvec or ()),
                "windows": tuple(args.a or ()),
                "increment": None if args.s is None else (args.s, args.t),
            }
        report = stats.run_ensemble(_config(args, **extra), workers)
        return serialize_report(report, args.format)
    if cmd == "moments":
        cfg = _config(args, moments=(tuple(args.tvec),))
        report = stats.run_ensemble(cfg, workers)
        emp, orc, z = stats.verify_joint_moments(cfg, args.l, args.tvec, report, args.oracle_samples)
        return _emit_rows(args, ["l", "tvec", "empirical", "oracle", "z"],
                          [[args.l, " ".join(_fmt(t) for t in args.tvec), emp, orc, z]])
    if cmd == "modulus":
        cfg = _config(args, windows=tuple(args.a))
        report = stats.run_ensemble(cfg, workers)
        rows = stats.modulus_scaling_study(cfg, args.a, report)
        return _emit_rows(args, ["a", "mean_q", "ratio"], [list(r) for r in rows])
    if cmd == "increments":
        cfg = _config(args)
        study = stats.increment_atom_study(cfg, args.s, args.t)
        if args.format == "json":
            obj = {
                "metadata": _metadata(cfg),
                "s": study.s, "t": study.t,
                "dyadic_checked": study.dyadic_checked, "all_dyadic": study.all_dyadic,
                "top_atom_mass": study.top_atom_mass,
                "histogram": [{"value": v, "frequency": f} for v, f in study.histogram.items()],
            }
            return (json.dumps(obj, indent=1) + "\n").encode()
        out = io.StringIO(newline="")
        meta = _metadata(cfg)
        meta.update(all_dyadic=study.all_dyadic, top_atom_mass=_fmt(study.top_atom_mass))
        _csv_section(out, "metadata", ["key", "value"], [[k, str(v)] for k, v in meta.items()])
        _csv_section(out, "increment_histogram", ["value", "frequency"],
                     [[_fmt(v), _fmt(f)] for v, f in study.histogram.items()])
        return out.getvalue().encode()
    raise UsageError(f"unknown subcommand {cmd!r}")


def _emit_rows(args, header, rows) -> bytes:
    if args.format == "json":
        return (json.dumps([dict(zip(header, r)) for r in rows], indent=1) + "\n").encode()
    return _table(header, [[v if isinstance(v, str) else (str(v) if isinstance(v, int) else _fmt(v))
                            for v in r] for r in rows])


def dispatch(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("a subcommand is required")
        _validate(args)
    except UsageError as exc:
        print(f"permdiv: error: {exc}", file=sys.stderr)
        return 2
    try:
        payload = _run(args)
    except (ValueError, ArithmeticError, OSError) as exc:
        print(f"permdiv: {exc}", file=sys.stderr)
        return 1
    out_path = getattr(args, "out", None)
    if out_path:
        try:
            with open(out_path, "wb") as fh:
                fh.write(payload)
        except OSError as exc:
            print(f"permdiv: cannot write {out_path}: {exc}", file=sys.stderr)
            return 1
    else:
        sys.stdout.buffer.write(payload)
        sys.stdout.flush()
    return 0


def main():
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
