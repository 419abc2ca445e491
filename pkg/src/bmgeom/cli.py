"""The ``bm`` command line.

Exit codes: 0 when every assertion passed, 1 on a lemma or recovery failure,
2 on usage or I/O errors.
"""

from __future__ import annotations

import argparse
import sys
from fractions import Fraction
from math import pi
from pathlib import Path

from . import io
from .convex import hull, rasterize, resample
from .errors import BMError, FormatError
from .harness.exhaustive import interval_oracle
from .harness.generate import FAMILIES, ScenarioConfig, generate, rational_rotation
from .harness.lemmas import run_lemma_suite
from .harness.sweeps import DELETION_LEVELS, ROTATION_ANGLES, run_delta_sweep, run_rotation_sweep
from .recover import MODES, PipelineParams, recover_convex_pair
from .sumset import combo_sum, deficit_additive, deficit_combo, minkowski_sum
from .symmetrize import SymmetrizationMode, symmetrize

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _fraction(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}") from exc


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers: {text!r}") from exc


def _angle(text: str) -> float:
    """Radians, or a multiple of pi written as ``pi/8``, ``3pi/4``."""
    t = text.strip().replace(" ", "")
    if "pi" in t:
        num, _, den = t.partition("pi")
        num = float(num) if num else 1.0
        den = float(den.lstrip("/")) if den else 1.0
        return num * pi / den
    return float(t)


def _angles(text: str) -> list[float]:
    try:
        return [_angle(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad angle list {text!r}") from exc


def _schedule(text: str) -> dict:
    out = {}
    for part in text.split(","):
        key, _, val = part.partition("=")
        if key not in ("eps", "rho", "eta"):
            raise argparse.ArgumentTypeError(f"unknown schedule key {key!r}")
        out[key] = _fraction(val)
    return out


def _emit(args, data: dict, text: str) -> None:
    if args.json:
        sys.stdout.write(io.dumps_json(data))
    else:
        print(text)


def _load_grid(path):
    try:
        return io.load_grid(path)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from exc


def _config(args, **extra) -> ScenarioConfig:
    kw = dict(seed=args.seed, dim=args.dim, h=args.h, family=args.family, trials=args.trials,
              ratio=args.ratio, size=args.size, t=args.t)
    kw.update(extra)
    try:
        return ScenarioConfig(**kw)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


# -- subcommands --------------------------------------------------------------


def cmd_gen(args) -> int:
    cfg = _config(args, deletion=args.deletion, addition=args.addition)
    A, B = generate(cfg, args.trial)
    io.save_grid(A, args.out_a)
    io.save_grid(B, args.out_b)
    _emit(args, {"a": {"cells": A.ncells, "measure": str(A.measure())},
                 "b": {"cells": B.ncells, "measure": str(B.measure())}, "config": cfg.to_dict()},
          f"A: {A.ncells} cells -> {args.out_a}\nB: {B.ncells} cells -> {args.out_b}")
    return EXIT_OK


def cmd_sum(args) -> int:
    A, B = _load_grid(args.a), _load_grid(args.b)
    S = minkowski_sum(A, B) if args.t is None else combo_sum(A, B, args.t)
    io.save_grid(S, args.out)
    _emit(args, {"cells": S.ncells, "measure": str(S.measure()), "h": str(S.h)},
          f"{S.ncells} cells, measure {S.measure()} -> {args.out}")
    return EXIT_OK


def cmd_symmetrize(args) -> int:
    G = _load_grid(args.input)
    mode = SymmetrizationMode(args.mode, "raw" if args.raw_parity else "even-refined")
    S = symmetrize(G, mode)
    io.save_grid(S, args.out)
    _emit(args, {"cells": S.ncells, "measure": str(S.measure()), "h": str(S.h)},
          f"{args.mode}: {S.ncells} cells -> {args.out}")
    return EXIT_OK


def cmd_deficit(args) -> int:
    A, B = _load_grid(args.a), _load_grid(args.b)
    rep = deficit_additive(A, B) if args.t is None else deficit_combo(A, B, args.t)
    d = rep.to_dict()
    _emit(args, d, "\n".join(f"{k}: {v}" for k, v in sorted(d.items())))
    return EXIT_OK


def cmd_hull(args) -> int:
    P = hull(_load_grid(args.input))
    if args.out:
        io.save_poly(P, args.out)
    _emit(args, {"vertices": len(P.vertices), "volume": str(P.volume), "degenerate": P.degenerate},
          io.dumps_poly(P).rstrip() if not args.out else f"{len(P.vertices)} vertices -> {args.out}")
    return EXIT_OK


def cmd_rasterize(args) -> int:
    try:
        P = io.load_poly(args.input)
    except OSError as exc:
        raise UsageError(f"cannot read {args.input}: {exc.strerror}") from exc
    G = rasterize(P, args.h)
    io.save_grid(G, args.out)
    _emit(args, {"cells": G.ncells, "measure": str(G.measure()), "volume": str(P.volume)},
          f"{G.ncells} cells (measure {G.measure()}, volume {P.volume}) -> {args.out}")
    return EXIT_OK


def _params(args) -> PipelineParams:
    kw = {"t": args.t if args.t is not None else Fraction(1, 2)}
    if args.delta_schedule:
        kw.update(args.delta_schedule)
    return PipelineParams(**kw)


def cmd_recover(args) -> int:
    A, B = _load_grid(args.a), _load_grid(args.b)
    mode = "hull-baseline" if args.mode == "hull" else args.mode
    res = recover_convex_pair(A, B, _params(args), mode)
    if args.out:
        io.save_poly(res.body, args.out)
    d = res.to_dict(include_timings=args.timings)
    _emit(args, d, f"mode={res.mode} delta={res.delta:.6g} eps_a={float(res.eps_a):.6g} "
                   f"eps_b={float(res.eps_b):.6g} alpha={res.alpha} beta={res.beta}"
                   + (" (degraded)" if res.degraded else ""))
    return EXIT_OK


def cmd_lemmas(args) -> int:
    rep = run_lemma_suite(_config(args))
    if args.oracle:
        orc = interval_oracle(args.oracle_n)
        rep.check("interval_exhaustive").record(orc.ok, 0.0, 0.0, repr(orc.violations[:10]))
        rep.summary["interval_exhaustive"] = orc.to_dict()
    if args.out:
        io.save_report(rep.to_dict(), args.out)
    lines = [f"{'PASS' if s.failed == 0 else 'FAIL'} {name}: {s.passed} passed, {s.failed} failed"
             + ("" if s.exact else f", slack used {s.slack_used:.3f}")
             for name, s in sorted(rep.checks.items())]
    _emit(args, rep.to_dict(), "\n".join(lines))
    return EXIT_OK if rep.ok else EXIT_FAIL


def _write_sweep(args, rep) -> None:
    if args.csv:
        Path(args.csv).write_text(rep.to_csv())
    _emit(args, rep.to_dict(), rep.to_csv().rstrip())


def cmd_sweep(args) -> int:
    rep = run_delta_sweep(_config(args), args.levels, args.threads, timings=args.timings)
    _write_sweep(args, rep)
    return EXIT_OK


def cmd_rotate(args) -> int:
    if args.input:
        # cell-centre resampling of an existing grid
        G = _load_grid(args.input)
        rows = []
        for a in args.angles:
            R = resample(G, rational_rotation(a, G.dim))
            rows.append({"angle": a, "cells": R.ncells, "drift": float(R.measure() - G.measure())})
            if args.out and len(args.angles) == 1:
                io.save_grid(R, args.out)
        _emit(args, {"rows": rows}, "\n".join(f"angle={r['angle']:.6g} drift={r['drift']:.6g}" for r in rows))
        return EXIT_OK
    rep = run_rotation_sweep(_config(args), args.angles, args.threads)
    _write_sweep(args, rep)
    return EXIT_OK


# -- parser -------------------------------------------------------------------


def _globals(p: argparse.ArgumentParser, suppress: bool) -> None:
    dflt = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p.add_argument("--seed", type=int, default=dflt(0), help="master seed (default 0)")
    p.add_argument("--threads", type=int, default=dflt(None),
                   help="worker processes (default $BM_THREADS or 1)")
    p.add_argument("--json", action="store_true", default=dflt(False), help="print JSON to stdout")


def _scenario(p: argparse.ArgumentParser, trials: int = 1) -> None:
    p.add_argument("--dim", type=int, default=2, choices=(1, 2, 3))
    p.add_argument("--h", type=_fraction, default=Fraction(1, 32))
    p.add_argument("--family", default="ball", choices=FAMILIES)
    p.add_argument("--trials", type=int, default=trials)
    p.add_argument("--ratio", type=_fraction, default=Fraction(1))
    p.add_argument("--size", type=_fraction, default=Fraction(1))
    p.add_argument("--t", type=_fraction, default=Fraction(1, 2))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bm", description=__doc__.splitlines()[0])
    _globals(parser, False)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, help):
        p = sub.add_parser(name, help=help)
        _globals(p, True)
        p.set_defaults(func=fn)
        return p

    p = add("gen", cmd_gen, "generate a seeded pair of grid sets")
    _scenario(p)
    p.add_argument("--trial", type=int, default=0)
    p.add_argument("--deletion", type=float, default=0.0)
    p.add_argument("--addition", type=float, default=0.0)
    p.add_argument("--out-a", required=True)
    p.add_argument("--out-b", required=True)

    p = add("sum", cmd_sum, "Minkowski or weighted sum of two grids")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--t", type=_fraction, default=None)
    p.add_argument("--out", required=True)

    p = add("symmetrize", cmd_symmetrize, "Steiner, Schwarz or natural symmetrization")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--mode", default="natural", choices=("steiner", "schwarz", "natural"))
    p.add_argument("--raw-parity", action="store_true")
    p.add_argument("--out", required=True)

    p = add("deficit", cmd_deficit, "Brunn-Minkowski deficit of a pair")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--t", type=_fraction, default=None)

    p = add("hull", cmd_hull, "convex hull of a grid set")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out")

    p = add("rasterize", cmd_rasterize, "outer rasterization of a polytope")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--h", type=_fraction, required=True)
    p.add_argument("--out", required=True)

    p = add("recover", cmd_recover, "recover a homothetic convex pair")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--t", type=_fraction, default=None)
    p.add_argument("--mode", default="pipeline", choices=("pipeline", "hull") + MODES[1:])
    p.add_argument("--delta-schedule", type=_schedule, default=None, help="e.g. eps=1/16,rho=1/8,eta=1/4")
    p.add_argument("--timings", action="store_true", help="include stage timings (not deterministic)")
    p.add_argument("--out", help="write the body as BMPOLY")

    p = add("lemmas", cmd_lemmas, "run the lemma verification suite")
    _scenario(p, trials=20)
    p.add_argument("--oracle", action="store_true", help="also run the exhaustive 1D oracle")
    p.add_argument("--oracle-n", type=int, default=10)
    p.add_argument("--out", help="write the JSON report")

    p = add("sweep", cmd_sweep, "deletion-fraction sweep in both recovery modes")
    _scenario(p, trials=5)
    p.add_argument("--levels", type=_floats, default=list(DELETION_LEVELS))
    p.add_argument("--timings", action="store_true")
    p.add_argument("--csv", help="write rows as CSV")

    p = add("rotate", cmd_rotate, "rotation sweep, or resample one grid by rotation")
    _scenario(p)
    p.add_argument("--angles", type=_angles, default=list(ROTATION_ANGLES), help="e.g. 0,pi/8,pi/4")
    p.add_argument("--in", dest="input", help="resample this grid instead of generating")
    p.add_argument("--out")
    p.add_argument("--csv")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (UsageError, FormatError, OSError, ValueError) as exc:
        if isinstance(exc, BMError) and not isinstance(exc, FormatError):
            print(f"bm: {type(exc).__name__}: {exc}", file=sys.stderr)
            return EXIT_FAIL
        print(f"bm: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BMError as exc:
        print(f"bm: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
