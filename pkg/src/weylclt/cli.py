"""Command-line front end.

Settings resolve in the order: command-line flag, ``WEYLCLT_<NAME>``
environment variable, ``--config`` JSON file (top level or a section named
after the subcommand), built-in default. Exit codes: 0 pass, 1 negative
mathematical verdict, 2 usage or input error.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .charfn import GridSpec, delta_pd_check, search_delta_pd_witness, write_grid_csv
from .clt import CLTRun, InadmissibleLimitError, ScaleRule, clt_convergence_report, lemma_L_diagnostic, s_n_char
from .fock import InvalidStateError
from .gaussian import admissibility_report
from .io import (SpecError, charfn_from_spec, covariance_from_json, load_json, measure_from_spec,
                 norming_from_spec, points_from_json, state_from_spec)
from .moments import mean_vector
from .symplectic import check_admissibility_bound

EXIT_PASS, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

DEFAULTS = {
    "seed": 0,
    "cutoff": None,
    "half_width": 2.0,
    "count": 21,
    "radius": None,
    "n": "25,100,400",
    "threshold": 0.05,
    "norming": "sqrt",
    "method": "exact",
    "trials": 10_000,
    "random": None,
    "scale": 1.5,
    "pd_tol": 1e-8,
    "max_grid_points": 250_000,
    "b_rule": "sqrt",
    "x": 1.0,
    "n_max": 1000,
}
COMMAND_DEFAULTS = {"clt-run": {"radius": 2.0}}
TYPES = {"seed": int, "cutoff": int, "half_width": float, "count": int, "radius": float, "n": str,
         "threshold": float, "norming": str, "method": str, "trials": int, "random": int, "scale": float,
         "pd_tol": float, "max_grid_points": int, "b_rule": str, "x": float, "n_max": int}


class UsageError(Exception):
    pass


def resolve_config(args: argparse.Namespace, keys) -> dict:
    """Fully explicit settings for one run."""
    file_cfg = {}
    path = args.config or os.environ.get("WEYLCLT_CONFIG")
    if path:
        data = load_json(path)
        if not isinstance(data, dict):
            raise SpecError("config file must hold a JSON object")
        file_cfg = {k: v for k, v in data.items() if not isinstance(v, dict)}
        file_cfg.update(data.get(args.command, {}))
    defaults = {**DEFAULTS, **COMMAND_DEFAULTS.get(args.command, {})}
    out = {}
    for key in keys:
        flag = getattr(args, key, None)
        env = os.environ.get("WEYLCLT_" + key.upper())
        if flag is not None:
            value = flag
        elif env is not None:
            try:
                value = TYPES[key](env)
            except ValueError:
                raise UsageError(f"WEYLCLT_{key.upper()}={env!r} is not a valid {TYPES[key].__name__}") from None
        elif key in file_cfg:
            value = file_cfg[key]
        else:
            value = defaults[key]
        out[key] = value
    return out


def _n_list(text) -> list[int]:
    if isinstance(text, list):
        return [int(n) for n in text]
    try:
        return [int(float(t)) for t in str(text).split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"bad n list {text!r}") from None


def _fill_cutoff(cfg: dict, f) -> None:
    T = getattr(f, "T", None)
    if T is not None:
        cfg["cutoff"] = T.space.cutoff


def _grid(cfg: dict, d: int) -> GridSpec:
    return GridSpec.box(d, cfg["half_width"], cfg["count"], cfg["radius"])


def _dump(obj, path=None) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if path:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_gauss_check(args) -> int:
    cfg = resolve_config(args, ["seed", "trials"])
    Q = covariance_from_json(load_json(args.qfile))
    report = admissibility_report(Q, cfg["trials"], cfg["seed"])
    report["seed"] = cfg["seed"]
    _dump(report, args.out)
    return EXIT_PASS if report["admissible"] else EXIT_FAIL


def cmd_bochner(args) -> int:
    cfg = resolve_config(args, ["seed", "cutoff", "method", "random", "scale", "trials", "pd_tol"])
    f = charfn_from_spec(load_json(args.spec), cfg["cutoff"], cfg["method"])
    _fill_cutoff(cfg, f)
    report = {"seed": cfg["seed"], "config": cfg}
    if args.points:
        pts = points_from_json(load_json(args.points), f.d)
    elif cfg["random"] is not None:
        if cfg["random"] < 1:
            raise SpecError("--random needs at least one point")
        rng = np.random.default_rng(cfg["seed"])
        pts = rng.standard_normal((cfg["random"], 2 * f.d)) * cfg["scale"]
    elif args.search:
        lam, pts = search_delta_pd_witness(f, cfg["trials"], cfg["seed"])
        report["search_trials"] = cfg["trials"]
    else:
        raise UsageError("give --points, --random K or --search")
    lam, ok = delta_pd_check(f, pts, cfg["pd_tol"])
    report.update({"min_eigenvalue": lam, "passed": ok, "n_points": len(pts)})
    if not ok:
        report["points"] = pts.tolist()
    _dump(report, args.out)
    return EXIT_PASS if ok else EXIT_FAIL


def cmd_charfn_grid(args) -> int:
    cfg = resolve_config(args, ["cutoff", "half_width", "count", "radius", "method", "max_grid_points"])
    f = charfn_from_spec(load_json(args.spec), cfg["cutoff"], cfg["method"])
    _fill_cutoff(cfg, f)
    raw = cfg["count"] ** (2 * f.d)
    if raw > cfg["max_grid_points"]:
        raise UsageError(f"grid has {raw} points, above the cap of {cfg['max_grid_points']}")
    grid = _grid(cfg, f.d)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            write_grid_csv(f, grid, fh)
    else:
        write_grid_csv(f, grid, sys.stdout)
    return EXIT_PASS


def cmd_clt_run(args) -> int:
    cfg = resolve_config(args, ["seed", "cutoff", "half_width", "count", "radius", "n", "threshold", "norming"])
    T = state_from_spec(load_json(args.spec), cfg["cutoff"])
    cfg["cutoff"] = T.space.cutoff
    norming = norming_from_spec(cfg["norming"], T.d)
    n_list = _n_list(cfg["n"])
    cfg["n"] = n_list
    grid = _grid(cfg, T.d)
    run = CLTRun(T, norming, grid, n_list, threshold=cfg["threshold"])
    try:
        report = clt_convergence_report(run)
    except InadmissibleLimitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    for w in report.warnings:
        print(f"warning: {w}", file=sys.stderr)
    out = report.to_dict()
    out.update({"seed": cfg["seed"], "config": cfg, "state": load_json(args.spec)})
    _dump(out, args.out)
    if args.csv_dir:
        _grid_dumps(run, Path(args.csv_dir))
    return EXIT_PASS if report.passed else EXIT_FAIL


def _grid_dumps(run: CLTRun, folder: Path) -> None:
    folder.mkdir(parents=True, exist_ok=True)
    pts = run.grid.points()
    m = mean_vector(run.T)
    d = run.T.d
    header = ",".join([f"{c}{k}" for k in range(1, d + 1) for c in ("x", "y")] + ["re", "im"])
    for n in run.n_list:
        a = run.norming(n)
        vals = s_n_char(run.T, a, -n * np.repeat(a, 2) * m, pts, n)
        lines = [header] + [",".join([repr(float(c)) for c in p] + [repr(float(v.real)), repr(float(v.imag))])
                            for p, v in zip(pts, np.atleast_1d(vals))]
        (folder / f"sn_{n}.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")


def cmd_lemma_l(args) -> int:
    cfg = resolve_config(args, ["b_rule", "x", "n"])
    if args.measure:
        nu = measure_from_spec(load_json(args.measure))
    elif args.family:
        spec = {"family": args.family}
        for item in args.param or []:
            key, _, value = item.partition("=")
            try:
                spec[key] = float(value)
            except ValueError:
                raise SpecError(f"bad --param {item!r}") from None
        nu = measure_from_spec(spec)
    else:
        raise UsageError("give --measure FILE or --family NAME")
    try:
        rule = ScaleRule.parse(cfg["b_rule"])
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if not cfg["x"] > 0:
        raise UsageError("--x must be positive")
    res = lemma_L_diagnostic(nu, rule, cfg["x"], _n_list(cfg["n"]))
    rows = ["n,value"] + [f"{n},{v!r}" for n, v in zip(res.n_list, res.values)]
    summary = f"# {res.regime}"
    if args.out:
        Path(args.out).write_text("\n".join(rows) + "\n", encoding="utf-8")
        print(summary)
    else:
        print("\n".join(rows))
        print(summary, file=sys.stderr)
    return EXIT_PASS if res.regime == "stabilized" else EXIT_FAIL


def cmd_admissible(args) -> int:
    cfg = resolve_config(args, ["norming", "n_max"])
    seq = norming_from_spec(cfg["norming"], args.d)
    viol = check_admissibility_bound(seq, cfg["n_max"])
    _dump({"norming": seq.name, "n_max": cfg["n_max"], "violation_count": len(viol),
           "violations": [list(v) for v in viol[:100]]}, args.out)
    return EXIT_PASS if not viol else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="weylclt", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, func, help):
        sp = sub.add_parser(name, help=help)
        sp.set_defaults(func=func)
        sp.add_argument("--config", help="JSON config file")
        sp.add_argument("--out", help="output file (default stdout)")
        return sp

    sp = add("gauss-check", cmd_gauss_check, "admissibility of a Gaussian covariance")
    sp.add_argument("qfile")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--trials", type=int)

    sp = add("bochner", cmd_bochner, "Delta-positive definiteness on a point set")
    sp.add_argument("spec")
    sp.add_argument("--points")
    sp.add_argument("--random", type=int, metavar="K")
    sp.add_argument("--search", action="store_true", help="random witness search (--trials sets)")
    for name, typ in [("seed", int), ("cutoff", int), ("scale", float), ("trials", int), ("pd_tol", float)]:
        sp.add_argument("--" + name.replace("_", "-"), dest=name, type=typ)
    sp.add_argument("--method", choices=["exact", "truncated"])

    sp = add("charfn-grid", cmd_charfn_grid, "characteristic function on a grid, as CSV")
    sp.add_argument("spec")
    for name, typ in [("cutoff", int), ("half_width", float), ("count", int), ("radius", float),
                      ("max_grid_points", int)]:
        sp.add_argument("--" + name.replace("_", "-"), dest=name, type=typ)
    sp.add_argument("--method", choices=["exact", "truncated"])

    sp = add("clt-run", cmd_clt_run, "convergence of S_n to the Gaussian limit")
    sp.add_argument("spec")
    sp.add_argument("--n", help="comma-separated increasing n values")
    sp.add_argument("--norming", help="sqrt, power:<p>[:<scale>] or a JSON file")
    for name, typ in [("seed", int), ("cutoff", int), ("half_width", float), ("count", int), ("radius", float),
                      ("threshold", float)]:
        sp.add_argument("--" + name.replace("_", "-"), dest=name, type=typ)
    sp.add_argument("--csv-dir", help="write per-n grid dumps here")

    sp = add("lemma-l", cmd_lemma_l, "truncated-second-moment diagnostic sequence")
    sp.add_argument("--measure", help="measure spec JSON")
    sp.add_argument("--family")
    sp.add_argument("--param", action="append", metavar="KEY=VALUE")
    sp.add_argument("--b-rule", dest="b_rule")
    sp.add_argument("--x", type=float)
    sp.add_argument("--n")

    sp = add("admissible", cmd_admissible, "check a_k^(n) >= 1/sqrt(n)")
    sp.add_argument("--norming")
    sp.add_argument("--n-max", dest="n_max", type=int)
    sp.add_argument("--d", type=int, default=1)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_PASS
    try:
        return args.func(args)
    except (UsageError, SpecError, InvalidStateError, ValueError, KeyError, IndexError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
