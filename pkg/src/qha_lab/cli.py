"""Command-line front end.

Commands: transform, optimize, op-optimize, gap, experiment, oracle.

Configuration comes from a JSON or YAML file given with ``--config``;
command-line flags override fields of the file, which override built-in
defaults.  Exit codes: 0 success, 1 experiment or oracle failure against
tolerance (report still written), 2 validation error.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np
import yaml

from . import gap_criteria, qha
from .concentration import ConcentrationProblem, optimize_concentration, strict_gap_check
from .experiments import EXPERIMENTS, run_experiment
from .operator_rep import optimize_operator_concentration, total_correlation
from .oracles import IDENTITY_TOL, identity_suite
from .phase_space import GridModel, Signal, make_region, special_signal
from .windows import OperatorWindow, build_window

FLOAT_FMT = "#.12g"


class ConfigError(ValueError):
    pass


def fmt(x) -> str:
    return format(float(x), FLOAT_FMT)


def _round12(x):
    """Floats rounded to 12 significant digits, recursively."""
    if isinstance(x, dict):
        return {k: _round12(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_round12(v) for v in x]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if not math.isfinite(x) else float(format(x, ".12g"))
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.ndarray):
        return _round12(x.tolist())
    if isinstance(x, complex):
        return [_round12(x.real), _round12(x.imag)]
    return x


def dump_json(obj, path: str | None):
    text = json.dumps(_round12(obj), indent=2, sort_keys=True) + "\n"
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def load_config(path: str | None) -> dict:
    if not path:
        return {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"config: cannot read {path}: {exc.strerror}") from exc
    try:
        data = yaml.safe_load(text)  # YAML is a superset of JSON
    except yaml.YAMLError as exc:
        raise ConfigError(f"config: cannot parse {path}") from exc
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError("config: top level must be a mapping")
    return data


def merged(args: argparse.Namespace, keys) -> dict:
    """File config overridden by any flag that was given."""
    cfg = load_config(getattr(args, "config", None))
    for k in keys:
        v = getattr(args, k.replace("-", "_"), None)
        if v is not None:
            cfg[k] = v
    return cfg


# ------------------------------------------------------------- builders

def make_grid(cfg: dict) -> GridModel:
    grid = cfg.get("grid", {})
    n = cfg.get("n", grid.get("n"))
    if n is None:
        raise ConfigError("n: grid size is required")
    return GridModel(int(n), cfg.get("mode", grid.get("mode", "continuum")))


def _inline(spec):
    """Flag values may be a bare kind or an inline JSON/YAML mapping."""
    if isinstance(spec, str) and spec.lstrip().startswith("{"):
        try:
            spec = yaml.safe_load(spec)
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse inline spec {spec!r}") from exc
    return {"kind": spec} if isinstance(spec, str) else spec


def make_signal(grid: GridModel, spec) -> Signal:
    spec = _inline(spec)
    spec = dict(spec)
    if "data" in spec:
        return Signal.from_dict({"n": grid.n, "mode": grid.mode, **spec})
    kind = spec.pop("kind", "gaussian")
    if "center" in spec and not np.isscalar(spec["center"]):
        spec["center"] = tuple(spec["center"])
    return special_signal(grid, kind, **spec)


def make_window(grid: GridModel, spec) -> OperatorWindow:
    if spec is None:
        raise ConfigError("window: a window spec is required")
    spec = _inline(spec)
    spec = dict(spec)
    kind = spec.pop("kind", None)
    if kind is None:
        raise ConfigError("window.kind: missing")
    kind = kind.replace("-", "_")
    for key in ("g", "h"):
        if key in spec and spec[key] is not None:
            spec[key] = make_signal(grid, spec[key])
    if "K" in spec and spec["K"] is not None:
        spec["K"] = make_window(grid, spec["K"])
    if "matrix" in spec:
        a = np.asarray(spec["matrix"], dtype=float)
        spec["matrix"] = a[..., 0] + 1j * a[..., 1] if a.ndim == 3 else a
    return build_window(grid, kind, **spec)


def make_problem_parts(cfg: dict):
    grid = make_grid(cfg)
    region_spec = cfg.get("region", {"kind": "ball", "radius": 1.0})
    if "radius" in cfg:
        region_spec = {"kind": "ball", "radius": float(cfg["radius"])}
    region = make_region(grid, region_spec)
    p = float(cfg.get("p", 2.0))
    return grid, region, p


# ------------------------------------------------------------- commands

def cmd_transform(args) -> int:
    cfg = merged(args, ["n", "mode", "what", "window", "signal"])
    grid = make_grid(cfg)
    what = cfg.get("what", "cohen")
    f = make_signal(grid, cfg.get("signal", "gaussian"))
    if what == "cohen":
        F = qha.cohen_transform(make_window(grid, cfg.get("window", "wigner")), f)
    elif what == "ambiguity":
        F = qha.ambiguity(f)
    elif what == "stft":
        F = qha.stft(f, make_signal(grid, cfg.get("g", "gaussian")))
    elif what == "weyl":
        F = qha.weyl_symbol(make_window(grid, cfg.get("window", "wigner")))
    elif what == "fourier-wigner":
        F = qha.fourier_wigner(make_window(grid, cfg.get("window", "wigner")))
    elif what == "total-correlation":
        F = total_correlation(make_window(grid, cfg.get("window", "wigner")))
    else:
        raise ConfigError(f"what: unknown transform {what!r}")
    if args.out:
        with open(args.out, "w", newline="") as fh:
            F.to_csv(fh)
    else:
        sys.stdout.write(F.to_csv())
    return 0


def _window_from(cfg, grid):
    S = make_window(grid, cfg.get("window"))
    if S.is_zero():
        raise ConfigError("window is zero")
    return S


def cmd_optimize(args) -> int:
    cfg = merged(args, ["n", "mode", "p", "radius", "window", "seed", "max-iter"])
    grid, region, p = make_problem_parts(cfg)
    S = _window_from(cfg, grid)
    budget = dict(cfg.get("budget", {}))
    if "seed" in cfg:
        budget["seed"] = int(cfg["seed"])
    if "max-iter" in cfg:
        budget["max_iter"] = int(cfg["max-iter"])
    prob = ConcentrationProblem(S, region, p)
    res = strict_gap_check(prob, budget) if cfg.get("gap_check", args.gap_check) else \
        optimize_concentration(prob, budget)
    ref = None
    if args.optimizer_out:
        dump_json(res.optimizer.to_dict(), args.optimizer_out)
        ref = args.optimizer_out
    dump_json(res.to_dict(ref), args.out)
    return 0


def cmd_op_optimize(args) -> int:
    cfg = merged(args, ["n", "mode", "p", "radius", "window", "kind", "seed", "max-iter"])
    grid, region, p = make_problem_parts(cfg)
    kind = cfg.get("kind", "hilbert-schmidt")
    S = None if kind == "total-correlation" else _window_from(cfg, grid)
    budget = dict(cfg.get("budget", {}))
    if "seed" in cfg:
        budget["seed"] = int(cfg["seed"])
    if "max-iter" in cfg:
        budget["max_iter"] = int(cfg["max-iter"])
    res = optimize_operator_concentration(S, region, p, kind, budget)
    dump_json(res.to_dict(), args.out)
    return 0


def cmd_gap(args) -> int:
    cfg = merged(args, ["d", "p", "R"])
    d, p = int(cfg.get("d", 1)), float(cfg.get("p", 2.0))
    Rs = cfg.get("R") or [0.25, 0.5, 1.0, 2.0, 4.0]
    rows = gap_criteria.gap_table([d], [p], Rs)
    cpp, md = gap_criteria.c_p_pow_p(p), gap_criteria.m_d(d)
    print(f"d = {d}  p = {fmt(p)}")
    print(f"C_p^p = {fmt(cpp)}")
    print(f"m_{d} = {fmt(md)}")
    print(f"p_threshold = {fmt(gap_criteria.p_threshold(d))}")
    print(f"{'R':>20} {'x':>20} {'A_d':>20} {'F_d':>20}  verdict")
    for r in rows:
        label = "certified-gap" if r.certified else "uncertified"
        print(f"{fmt(r.R):>20} {fmt(r.x):>20} {fmt(r.A_d):>20} {fmt(r.F_d):>20}  {label} ({r.verdict})")
    if args.csv:
        Path(args.csv).write_text(gap_criteria.table_to_csv(rows))
    return 0


def cmd_experiment(args) -> int:
    cfg = load_config(args.config)
    if args.n is not None:
        cfg["n"] = args.n
    if args.seed is not None:
        cfg["seed"] = args.seed
    rep = run_experiment(args.name, cfg)
    d = rep.to_dict()
    d.pop("runtime")  # keeps reports byte-identical across runs
    dump_json(d, args.out)
    if args.csv:
        Path(args.csv).write_text(rep.to_csv())
    status = "pass" if rep.passed else "FAIL"
    print(f"{rep.name}: {status} ({rep.runtime:.1f} s)", file=sys.stderr)
    return 0 if rep.passed else 1


def cmd_oracle(args) -> int:
    res = identity_suite(args.n, args.seed, args.mode)
    ok = True
    for k, v in res.items():
        good = v <= IDENTITY_TOL
        ok &= good
        print(f"{k:28s} {fmt(v)}  {'ok' if good else 'FAIL'}")
    return 0 if ok else 1


# --------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qha-lab", description=__doc__.split("\n")[0])
    ap.add_argument("--workers", type=int, help="worker count (also QHA_LAB_WORKERS)")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, grid=True):
        p.add_argument("--config", help="JSON or YAML config file")
        p.add_argument("--out", help="output path (default stdout)")
        if grid:
            p.add_argument("--n", type=int)
            p.add_argument("--mode", choices=("exact", "continuum"))

    p = sub.add_parser("transform", help="Q_S f, Af, STFT or symbols to CSV")
    common(p)
    p.add_argument("--what", choices=("cohen", "ambiguity", "stft", "weyl", "fourier-wigner", "total-correlation"))
    p.add_argument("--window", help="window kind, e.g. wigner, id_minus_gauss")
    p.add_argument("--signal", help="signal kind, e.g. gaussian, hermite")
    p.set_defaults(func=cmd_transform)

    for name, func in (("optimize", cmd_optimize), ("op-optimize", cmd_op_optimize)):
        p = sub.add_parser(name, help=f"{'signal' if name == 'optimize' else 'operator'}-level concentration")
        common(p)
        p.add_argument("--p", type=float)
        p.add_argument("--radius", type=float, help="ball region radius (overrides config region)")
        p.add_argument("--window", help="window kind")
        p.add_argument("--seed", type=int)
        p.add_argument("--max-iter", type=int, dest="max_iter")
        if name == "optimize":
            p.add_argument("--gap-check", action="store_true", help="run strict_gap_check")
            p.add_argument("--optimizer-out", help="write the optimizing signal here")
        else:
            p.add_argument("--kind", choices=("hilbert-schmidt", "density", "total-correlation"))
        p.set_defaults(func=func)

    p = sub.add_parser("gap", help="closed-form Wigner gap tables and verdicts")
    p.add_argument("--config")
    p.add_argument("--d", type=int)
    p.add_argument("--p", type=float)
    p.add_argument("--R", type=float, nargs="+")
    p.add_argument("--csv", help="write the table as CSV")
    p.set_defaults(func=cmd_gap)

    p = sub.add_parser("experiment", help="named reproductions")
    p.add_argument("name", choices=sorted(EXPERIMENTS))
    p.add_argument("--config")
    p.add_argument("--out", help="JSON report path (default stdout)")
    p.add_argument("--csv", help="flat CSV summary path")
    p.add_argument("--n", type=int)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("oracle", help="identity suite residuals")
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mode", choices=("exact", "continuum"), default="exact")
    p.set_defaults(func=cmd_oracle)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.workers is not None:
        os.environ["QHA_LAB_WORKERS"] = str(args.workers)
    try:
        return args.func(args)
    except (ValueError, KeyError, TypeError) as exc:
        msg = exc.args[0] if exc.args else str(exc)
        print(f"qha-lab {args.command}: error: {msg}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
