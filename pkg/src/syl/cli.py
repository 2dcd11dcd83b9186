"""Command-line front end.

Exit codes: 0 ok, 1 acceptance failure, 2 bad input, 3 numeric failure.
Defaults can be overridden by a JSON file named in ``SYL_CONFIG``; explicit
flags win over both.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import acceptance, presets
from .core import Params
from .errors import InadmissibleInput, SylError
from .integrate import Tolerances
from .io import dumps, write_csv, write_json
from .linear import e_trace, mode_for, monodromy_batch, spectrum_record
from .match import tail_bound, _e2_of
from .radial import build_orbit, classify, hstar, orbit_metadata, orbit_table

EXIT_OK, EXIT_ACCEPT, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3
DET_TOL = 1e-6


class BadInput(Exception):
    pass


def _float_list(text: str) -> list[float]:
    items = [s for s in text.replace(" ", "").split(",") if s]
    try:
        return [float(s) for s in items]
    except ValueError as err:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from err


def _load_config() -> dict:
    path = os.environ.get("SYL_CONFIG")
    if not path:
        return {}
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as err:
        raise BadInput(f"cannot read SYL_CONFIG={path}: {err}") from err
    if not isinstance(cfg, dict):
        raise BadInput("SYL_CONFIG must hold a JSON object")
    return cfg


def _tol(args) -> Tolerances:
    if not (args.rtol > 0 and args.atol > 0):
        raise BadInput("tolerances must be positive")
    return Tolerances(rtol=args.rtol, atol=args.atol)


def _params(args) -> Params:
    return Params(args.n, args.k)


# ------------------------------------------------------------------ commands

def cmd_orbit(args) -> int:
    p = _params(args)
    if not args.tmax > 0:
        raise BadInput("--tmax must be positive")
    o = build_orbit(p, args.h, (0.0, args.tmax), _tol(args))
    out = Path(args.out)
    write_csv(out / f"{args.prefix}.csv", ["t", "xi", "xi_dot", "h_residual"], orbit_table(o))
    write_json(out / f"{args.prefix}.json", orbit_metadata(o))
    print(dumps(orbit_metadata(o)), end="")
    return EXIT_OK


def cmd_classify(args) -> int:
    p = _params(args)
    c = classify(p, args.h)
    record = {"n": p.n, "k": p.k, "h": args.h, "regime": p.regime.value,
              "class": c.kind.value, "exponent": c.exponent}
    print(dumps(record), end="")
    return EXIT_OK


def _spectrum_task(task):
    n, k, h, lams, rtol, atol, want_trace = task
    p = Params(n, k)
    o = build_orbit(p, h, tol=Tolerances(rtol, atol))
    records = [spectrum_record(o, m) for m in monodromy_batch(o, lams)]
    traces = []
    if want_trace:
        for lam in lams:
            if lam >= 2 * n and 2 * k <= n:
                traces.append((lam, e_trace(o, mode_for(p, lam))))
    return records, traces


def _pool_map(fn, tasks, jobs):
    if jobs <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, tasks))  # preserves input order


def cmd_spectrum(args) -> int:
    p = _params(args)
    _tol(args)
    hs = args.h_grid or []
    if not hs:
        raise BadInput("empty --h-grid")
    if not args.lambda_list:
        raise BadInput("empty --lambda-list")
    if args.relative:
        hs = [x * hstar(p) for x in hs]
    for lam in args.lambda_list:
        mode_for(p, lam)
    for h in hs:
        classify(p, h)
    tasks = [(p.n, p.k, h, list(args.lambda_list), args.rtol, args.atol, args.e_trace) for h in hs]
    results = _pool_map(_spectrum_task, tasks, args.jobs)
    records = [r for recs, _ in results for r in recs]
    out = Path(args.out)
    write_json(out / f"{args.prefix}.json", records)
    if args.e_trace:
        for h, (_, traces) in zip(hs, results):
            for lam, tr in traces:
                write_csv(out / f"{args.prefix}_E_h{h:.6g}_lam{lam:g}.csv", ["t", "E"], tr)
    print(dumps(records), end="")
    bad = [r for r in records if abs(r["det_M"] - 1.0) > DET_TOL]
    return EXIT_NUMERIC if bad else EXIT_OK


def _build_experiment(args):
    if args.preset == "sigma":
        return presets.sigma(args.n, args.k, args.h, args.e1_scale, args.e1_rate,
                             shift=args.shift, offset=args.offset, periods=args.periods)
    if args.preset == "k1":
        return presets.k1(args.n, args.h, args.e1_scale, args.e1_rate,
                          shift=args.shift, offset=args.offset, periods=args.periods)
    if args.preset == "constant":
        return presets.constant(args.n, args.k)
    return presets.adversarial(args.n, args.k, args.h, periods=args.periods)


def cmd_match(args) -> int:
    if args.preset in ("sigma", "k1", "adversarial") and args.h is None:
        raise BadInput(f"--h is required for preset {args.preset}")
    if args.preset == "k1":
        args.k = 1
    Params(args.n, args.k)
    exp = _build_experiment(args)
    res, chk, err = presets.run(exp)
    rep = presets.report(exp, res, chk, err)
    out = Path(args.out)
    write_json(out / f"{args.prefix}.json", rep)
    if res is not None:
        bound = tail_bound(exp.problem, _e2_of(exp.problem, exp.traj), res.env_t, exp.traj.span[1] + 60.0)
        write_csv(out / f"{args.prefix}_envelope.csv", ["t", "envelope", "bound"],
                  np.column_stack([res.env_t, res.envelope, bound]))
    print(dumps(rep), end="")
    if args.strict and not rep["ok"]:
        return EXIT_ACCEPT
    return EXIT_OK


def _sweep_task(task):
    n, k, h, tmax, rtol, atol = task
    o = build_orbit(Params(n, k), h, (0.0, tmax), Tolerances(rtol, atol))
    return [h, o.period if o.period is not None else math.nan, o.stats.max_drift]


def cmd_sweep(args) -> int:
    p = _params(args)
    _tol(args)
    hs = args.h_grid or []
    if not hs:
        raise BadInput("empty --h-grid")
    if args.relative:
        hs = [x * hstar(p) for x in hs]
    classes = [classify(p, h).kind.value for h in hs]
    rows = _pool_map(_sweep_task, [(p.n, p.k, h, args.tmax, args.rtol, args.atol) for h in hs], args.jobs)
    out = Path(args.out)
    write_csv(out / f"{args.prefix}.csv", ["h", "T", "max_drift"], rows)
    for (h, T, d), c in zip(rows, classes):
        print(f"{h:.15g},{c},{T:.15g},{d:.3g}")
    return EXIT_OK


def cmd_selftest(args) -> int:
    tol = Tolerances(1e-3, 1e-3) if args.corrupt_tolerance else Tolerances()
    results = acceptance.run_all(quick=args.quick, tol=tol, echo=print)
    passed = sum(r.passed for r in results)
    print(f"{passed}/{len(results)} criteria passed")
    return EXIT_OK if passed == len(results) else EXIT_ACCEPT


# -------------------------------------------------------------------- parser

def build_parser(defaults: dict | None = None) -> argparse.ArgumentParser:
    defaults = defaults or {}
    parser = argparse.ArgumentParser(prog="syl", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp, need_k=True):
        sp.add_argument("--n", type=int, required=True, help="dimension n >= 3")
        sp.add_argument("--k", type=int, required=need_k, default=1, help="index 1 <= k <= n")
        sp.add_argument("--rtol", type=float, default=1e-10)
        sp.add_argument("--atol", type=float, default=1e-12)
        sp.add_argument("--out", default=".", help="output directory")

    sp = sub.add_parser("orbit", help="canonical radial solution to CSV + JSON")
    common(sp)
    sp.add_argument("--h", type=float, required=True)
    sp.add_argument("--tmax", type=float, default=20.0)
    sp.add_argument("--prefix", default="orbit")
    sp.set_defaults(func=cmd_orbit)

    sp = sub.add_parser("classify", help="solution class for (n, k, h)")
    common(sp)
    sp.add_argument("--h", type=float, required=True)
    sp.set_defaults(func=cmd_classify)

    sp = sub.add_parser("spectrum", help="Floquet data over an h-grid and eigenvalue list")
    common(sp)
    sp.add_argument("--h-grid", type=_float_list, required=True)
    sp.add_argument("--lambda-list", type=_float_list, required=True)
    sp.add_argument("--relative", action="store_true", help="h-grid values are multiples of h*")
    sp.add_argument("--e-trace", action="store_true", help="also write E(t) traces for lambda >= 2n")
    sp.add_argument("--jobs", type=int, default=1)
    sp.add_argument("--prefix", default="spectrum")
    sp.set_defaults(func=cmd_spectrum)

    sp = sub.add_parser("match", help="phase matching of a perturbed trajectory")
    sp.add_argument("--preset", choices=["sigma", "k1", "constant", "adversarial"], required=True)
    common(sp, need_k=False)
    sp.add_argument("--h", type=float)
    sp.add_argument("--e1-scale", type=float, default=0.1)
    sp.add_argument("--e1-rate", type=float, default=1.0)
    sp.add_argument("--shift", type=float, default=1.0)
    sp.add_argument("--offset", type=float, default=0.0)
    sp.add_argument("--periods", type=int, default=12)
    sp.add_argument("--strict", action="store_true", help="exit 1 when the envelope check fails")
    sp.add_argument("--prefix", default="match")
    sp.set_defaults(func=cmd_match)

    sp = sub.add_parser("sweep", help="period and drift over an h-grid")
    common(sp)
    sp.add_argument("--h-grid", type=_float_list, required=True)
    sp.add_argument("--relative", action="store_true")
    sp.add_argument("--tmax", type=float, default=20.0)
    sp.add_argument("--jobs", type=int, default=1)
    sp.add_argument("--prefix", default="sweep")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("selftest", help="run the acceptance criteria")
    sp.add_argument("--quick", action="store_true")
    sp.add_argument("--corrupt-tolerance", action="store_true",
                    help="negative control: loose integration tolerances, expected to fail")
    sp.set_defaults(func=cmd_selftest)

    for action in sub.choices.values():
        known = {a.dest for a in action._actions}
        action.set_defaults(**{k: v for k, v in defaults.items() if k in known})
    return parser


def main(argv=None) -> int:
    try:
        cfg = _load_config()
    except BadInput as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INPUT
    parser = build_parser(cfg)
    try:
        args = parser.parse_args(argv)
    except SystemExit as err:
        return int(err.code) if err.code is not None else EXIT_OK
    try:
        return args.func(args)
    except (BadInput, InadmissibleInput) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INPUT
    except SylError as err:
        print(f"numeric failure: {type(err).__name__}: {err}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
