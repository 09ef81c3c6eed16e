"""``chowla-lab`` command line.

Exit codes: 0 success, 1 config or parameter diagnostics, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .config import ConfigParseError, from_dict, load_config, validate
from .errors import ChowlaLabError, ConfigError
from .io import Document

EXIT_OK, EXIT_DIAG, EXIT_FAIL = 0, 1, 2


def _num(s: str) -> float:
    return float(s)


def _int(s: str) -> int:
    x = float(s)
    if x != int(x):
        raise argparse.ArgumentTypeError(f"not an integer: {s}")
    return int(x)


def _list(conv):
    def parse(s: str):
        return [conv(x) for x in s.split(",") if x.strip()]
    return parse


def _windows(s: str):
    out = []
    for part in s.split(","):
        x, w = part.split(":")
        out.append([float(x), float(w)])
    return out


def _scales(args) -> dict:
    if getattr(args, "scales", None):
        return {"scales": args.scales}
    top = args.max
    lo = min(10.0, top)
    if lo == top:
        return {"scales": [top]}
    return {"grid": {"lo": lo, "hi": top, "ratio": 10**0.25}}


def _common(p, max_default=1e6):
    p.add_argument("--max", type=_num, default=max_default, help="largest scale / range end")
    p.add_argument("--threads", type=_int, default=None)
    p.add_argument("--segment-size", type=_int, default=None)
    p.add_argument("--seed", type=_int, default=0)
    p.add_argument("--out", default=None, help="write CSV/JSON and a manifest here instead of stdout")


def _corr_args(p):
    p.add_argument("--f", action="append", required=True, help="function spec, once per factor")
    p.add_argument("--shifts", type=_list(int), required=True)
    p.add_argument("--scales", type=_list(float))
    p.add_argument("--scheme", default="unweighted")
    p.add_argument("--a", type=_int, default=1)
    p.add_argument("--d", type=_num, default=1.0)


def _corr_exp(args) -> dict:
    e = {"functions": args.f, "shifts": args.shifts, "scheme": args.scheme, "a": args.a, "d": args.d}
    e.update(_scales(args))
    return e


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="chowla-lab", description="Correlations of multiplicative functions.")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run every experiment of a config file")
    p.add_argument("config")
    p.add_argument("--out", default=None)
    p = sub.add_parser("validate", help="report all problems in a config file")
    p.add_argument("config")

    p = sub.add_parser("correlate")
    _corr_args(p)
    _common(p)

    p = sub.add_parser("fd-table")
    p.add_argument("--f", action="append", required=True)
    p.add_argument("--shifts", type=_list(int), required=True)
    p.add_argument("--divisors", type=_list(float), required=True)
    p.add_argument("--a-values", type=_list(int), default=[1])
    p.add_argument("--t-max", type=_num, default=10.0)
    _common(p)

    p = sub.add_parser("isotopy-arch")
    _corr_args(p)
    p.add_argument("--q", type=_num, required=True)
    p.add_argument("--t", type=_num, required=True)
    _common(p)

    p = sub.add_parser("isotopy-nonarch")
    _corr_args(p)
    p.add_argument("--char", required=True)
    _common(p)

    p = sub.add_parser("equidist")
    _corr_args(p)
    p.add_argument("--cutoffs", type=_list(float), required=True)
    p.add_argument("--mode", choices=["all", "grid"], default="all")
    p.add_argument("--r0", type=_num, default=0.05)
    p.add_argument("--r1", type=_num, default=1.0)
    p.add_argument("--harmonic", type=_int, default=1)
    _common(p)

    p = sub.add_parser("pretense", help="distance profile, or 'pretense fit' for the best twist")
    p.add_argument("action", nargs="?", choices=["profile", "fit"], default="profile")
    p.add_argument("--f", default="liouville")
    p.add_argument("--g", required=True)
    p.add_argument("--scales", type=_list(float))
    p.add_argument("--qmax", type=_int, default=8)
    p.add_argument("--tmax", type=_num, default=10.0)
    p.add_argument("--scale", type=_num, default=1e6)
    _common(p)

    p = sub.add_parser("race")
    p.add_argument("--scales", type=_list(float))
    p.add_argument("--scheme", default="unweighted")
    _common(p, 1e7)

    p = sub.add_parser("smooth")
    p.add_argument("--alpha", required=True)
    p.add_argument("--beta", required=True)
    p.add_argument("--scales", type=_list(float))
    p.add_argument("--fixed-scale", action="store_true", help="also report the X^alpha version")
    _common(p, 1e7)

    p = sub.add_parser("patterns")
    p.add_argument("--k", type=_int, required=True)
    p.add_argument("--fn", default="liouville")
    p.add_argument("--growth", type=_list(int), default=[])
    _common(p, 1e7)

    p = sub.add_parser("straighten")
    p.add_argument("mode", choices=["dirichlet", "archimedean"])
    p.add_argument("--q", type=_int, default=None)
    p.add_argument("--index", type=_int, default=None)
    p.add_argument("--t0", type=_num, default=None)
    p.add_argument("--noise", type=_num, default=0.05)
    p.add_argument("--xmax", type=_num, default=1e4)
    p.add_argument("--trials", type=_int, default=1)
    _common(p)

    p = sub.add_parser("compare-avgs")
    p.add_argument("--f", required=True)
    p.add_argument("--a", type=_int, default=1)
    _common(p)

    p = sub.add_parser("three-point")
    p.add_argument("--fn", default="lambda_q(3)")
    p.add_argument("--shifts", type=_list(int), required=True)
    p.add_argument("--windows", type=_windows, required=True, help="x:omega,x:omega,...")
    _common(p, 1e7)

    p = sub.add_parser("sweep", help="benchmark a full sieve sweep over [1, max]")
    _common(p, 1e8)
    return ap


def _experiment(args) -> dict:
    c = args.command
    if c == "correlate":
        return {"kind": "correlate", **_corr_exp(args)}
    if c == "fd-table":
        return {"kind": "fd_table", "functions": args.f, "shifts": args.shifts, "divisors": args.divisors,
                "a_values": args.a_values, "X": args.max, "t_max": args.t_max}
    if c == "isotopy-arch":
        return {"kind": "isotopy_arch", **_corr_exp(args), "q": args.q, "t": args.t}
    if c == "isotopy-nonarch":
        return {"kind": "isotopy_nonarch", **_corr_exp(args), "character": args.char}
    if c == "equidist":
        return {"kind": "equidist", **_corr_exp(args), "cutoffs": args.cutoffs, "mode": args.mode,
                "r0": args.r0, "r1": args.r1, "harmonic": args.harmonic}
    if c == "pretense":
        if args.action == "fit":
            return {"kind": "fit", "g": args.g, "q_max": args.qmax, "t_max": args.tmax, "X": args.scale}
        return {"kind": "pretense", "f": args.f, "g": args.g, **_scales(args)}
    if c == "race":
        return {"kind": "race", "scheme": args.scheme, **_scales(args)}
    if c == "smooth":
        return {"kind": "smooth", "alpha": args.alpha, "beta": args.beta, "fixed_scale": args.fixed_scale,
                **_scales(args)}
    if c == "patterns":
        e = {"kind": "patterns", "K": args.k, "N": int(args.max), "function": args.fn}
        if args.growth:
            e["growth"] = args.growth
        return e
    if c == "straighten":
        e = {"kind": "straighten", "mode": args.mode, "noise": args.noise, "trials": args.trials}
        if args.mode == "dirichlet":
            e.update({k: v for k, v in (("q", args.q), ("index", args.index)) if v is not None})
        else:
            e["x_max"] = args.xmax
            if args.t0 is not None:
                e["t0"] = args.t0
        return e
    if c == "compare-avgs":
        return {"kind": "compare_avgs", "function": args.f, "a": args.a, "X": args.max}
    if c == "three-point":
        return {"kind": "three_point", "function": args.fn, "shifts": args.shifts, "windows": args.windows}
    raise AssertionError(c)


def _max_needed(args, e) -> int:
    vals = [args.max]
    for key in ("scales", "cutoffs"):
        vals += e.get(key, [])
    vals += [x for x, _ in e.get("windows", [])]
    if e.get("kind") == "fit":
        vals.append(e["X"])
    if e.get("kind") == "compare_avgs":
        vals.append(e["a"] * e["X"])
    shift = max((abs(h) * e.get("a", 1) for h in e.get("shifts", [])), default=0)
    return int(max(vals)) + 2 * shift + 2


def _global(args, max_n) -> dict:
    g = {"max_n": max_n, "seed": args.seed}
    if args.threads:
        g["threads"] = args.threads
    if args.segment_size:
        g["segment_size"] = args.segment_size
    if args.out:
        g["output_dir"] = args.out
    return g


def _report(man, out) -> int:
    for rec in man.experiments:
        if rec.status != "ok":
            print(f"error: {rec.name}: {rec.error}", file=sys.stderr)
        elif not out:
            for a in rec.artifacts:
                sys.stdout.write(a.text())
    if out:
        print(man.path)
    return EXIT_OK if man.ok else EXIT_FAIL


def _sweep(args) -> int:
    from .runner import sweep_benchmark
    from .sieve import DEFAULT_SEGMENT

    man, _ = sweep_benchmark(int(args.max), args.segment_size or DEFAULT_SEGMENT, args.threads, args.out)
    if args.out:
        print(man["path"])
    else:
        sys.stdout.write(Document("sweep", man).text())
    return EXIT_OK


def main(argv=None) -> int:
    from .runner import run

    args = build_parser().parse_args(argv)
    try:
        if args.command in ("run", "validate"):
            cfg = load_config(args.config)
            diags = validate(cfg)
            for d in diags:
                print(d, file=sys.stderr)
            if diags:
                return EXIT_DIAG
            if args.command == "validate":
                print(f"{args.config}: {len(cfg.experiments)} experiment(s), no problems")
                return EXIT_OK
            man = run(cfg, args.out)
            print(man.path)
            for rec in man.experiments:
                if rec.status != "ok":
                    print(f"error: {rec.name}: {rec.error}", file=sys.stderr)
            return EXIT_OK if man.ok else EXIT_FAIL
        if args.command == "sweep":
            return _sweep(args)
        e = {"name": args.command, **_experiment(args)}
        cfg = from_dict({"global": _global(args, _max_needed(args, e)), "experiment": [e]})
        diags = validate(cfg)
        for d in diags:
            print(d, file=sys.stderr)
        if diags:
            return EXIT_DIAG
        return _report(run(cfg, write=bool(args.out)), args.out)
    except (ConfigParseError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIAG
    except (ChowlaLabError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
