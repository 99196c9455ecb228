"""Command-line entry point: ``fidsid {fid,sid,embed,report,selftest}``.

Exit codes: 0 success, 1 selftest failure, 2 input/usage error, 3 numerical error.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor

from . import embed, fid, io, report, selftest, sid
from .core import FidConfig, InputError, NumericalError, Role, SidConfig

EXIT_OK, EXIT_FAILED, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3


def _dump(doc) -> str:
    return json.dumps(doc, sort_keys=True, indent=2, allow_nan=False)


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected an integer >= 1, got {text}")
    return value


def _load_pair(args, threads):
    with ThreadPoolExecutor(max_workers=min(2, threads or 2)) as pool:
        ref = pool.submit(io.load_features, args.ref, Role.REFERENCE)
        gen = pool.submit(io.load_features, args.gen, Role.GENERATED)
        return ref.result(), gen.result()


def cmd_fid(args, out) -> int:
    cfg = FidConfig(eps=args.eps, ddof=args.ddof)
    ref, gen = _load_pair(args, args.threads)
    score = fid.fid_from_features(ref, gen, cfg)
    if args.json:
        doc = {**score.to_dict(), "value_text": score.formatted(),
               "config": {"eps": cfg.eps, "ddof": cfg.ddof}}
        out.write(_dump(doc) + "\n")
    else:
        out.write(score.formatted() + "\n")
    return EXIT_OK


def cmd_sid(args, out) -> int:
    cfg = SidConfig(order_m=args.order_m, side_r=args.side_r, batches_n=args.batches,
                    test_points_mx=args.test_points, seed=args.seed,
                    kernel_eps=args.kernel_eps, standardize=not args.no_standardize)
    ref, gen = _load_pair(args, args.threads)
    diag = sid.sid_diagnostics(ref, gen, cfg, threads=args.threads)
    if args.json:
        doc = {**diag.score.to_dict(), "value_text": diag.score.formatted(),
               "partials": list(diag.partials), "std_error": diag.std_error,
               "config": {"order_m": cfg.order_m, "side_r": cfg.side_r,
                          "batches_n": cfg.batches_n, "test_points_mx": cfg.test_points_mx,
                          "seed": cfg.seed, "kernel_eps": cfg.kernel_eps,
                          "standardize": cfg.standardize}}
        out.write(_dump(doc) + "\n")
    else:
        out.write(diag.score.formatted() + "\n")
    return EXIT_OK


def cmd_embed(args, out) -> int:
    role = Role.REFERENCE if args.role == "ref" else Role.GENERATED
    fs = embed.embed_directory(args.input, role)
    io.write_features(fs, args.output, "float64")
    return EXIT_OK


def cmd_report(args, out) -> int:
    rows = report.evaluate_runs(report.load_manifest(args.manifest), threads=args.threads)
    if args.format == "structured":
        out.write(_dump(report.render_structured(rows)) + "\n")
    else:
        out.write(report.render_text(rows))
    return EXIT_OK


def cmd_selftest(args, out) -> int:
    results = selftest.run_checks(args.quick, emit=lambda line: out.write(line + "\n"))
    failed = [r.name for r in results if not r.ok]
    if failed:
        out.write(f"failed: {', '.join(failed)}\n")
        return EXIT_FAILED
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fidsid", description=(
        "Frechet and signed inception distances between feature sets."))
    sub = parser.add_subparsers(dest="command", required=True)

    def pair(p):
        p.add_argument("--ref", required=True, help="reference features (.fds or .csv)")
        p.add_argument("--gen", required=True, help="generated features (.fds or .csv)")
        p.add_argument("--json", action="store_true", help="structured output")
        p.add_argument("--threads", type=_positive_int, default=None,
                       help="worker cap (default: available cores)")

    p = sub.add_parser("fid", help="Frechet inception distance")
    pair(p)
    p.add_argument("--eps", type=float, default=1e-6)
    p.add_argument("--ddof", type=int, choices=(0, 1), default=1)
    p.set_defaults(func=cmd_fid)

    p = sub.add_parser("sid", help="signed inception distance")
    pair(p)
    p.add_argument("--order-m", type=int, default=2)
    p.add_argument("--side-r", type=float, default=1.0)
    p.add_argument("--batches", type=int, default=10)
    p.add_argument("--test-points", type=int, default=128)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--kernel-eps", type=float, default=1e-3)
    p.add_argument("--no-standardize", action="store_true")
    p.set_defaults(func=cmd_sid)

    p = sub.add_parser("embed", help="embed a directory of P6 images into an FDS1 file")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--role", choices=("ref", "gen"), default="ref")
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("report", help="render a model x dataset score grid")
    p.add_argument("--manifest", required=True)
    p.add_argument("--format", choices=("text", "structured"), default="text")
    p.add_argument("--threads", type=_positive_int, default=None)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("selftest", help="run the oracle checks")
    p.add_argument("--quick", action="store_true")
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args, out)
    except InputError as exc:
        err.write(f"fidsid {args.command}: error: {exc}\n")
        return EXIT_INPUT
    except NumericalError as exc:
        err.write(f"fidsid {args.command}: numerical error: {exc}\n")
        return EXIT_NUMERIC


def main_entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_entry()
