"""Command-line front end: closed-form solving, generator verification,
Monte Carlo evaluation, and regime sweeps.

Artifacts are flat files (JSON + CSV); stdout carries only their paths,
diagnostics go to stderr.  Exit codes: 0 ok, 2 invalid config or grid too
coarse, 3 regime gap/overlap, 4 verification failure, 5 time step too large.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import math
import sys

import numpy as np

from .errors import (
    CtrlStopError,
    GridTooCoarse,
    InvalidModel,
    RegimeGap,
    RegimeOverlap,
    StepTooLarge,
)
from .generator import (
    eval_u_array,
    generator_from_dict,
    generator_to_dict,
)
from .kink import KinkParams, classify_regime_II
from .model import GameModel
from .quadratic import QuadParams, classify_regime_I
from .simulate import (
    estimate_value,
    saddle_audit,
    simulate_path,
    strategy_from_generator,
)
from .verify import verify


class ConfigError(CtrlStopError):
    pass


# -- config file: flat `key = value` lines under [section] headers ----------

KNOWN_KEYS = {
    "model": ("case", "delta", "kappa", "lambda", "mu"),
    "numeric": ("dt", "paths", "seed", "grid_step", "extent", "x0",
                "flavor", "audit"),
    "output": ("format", "path"),
    "sweep": ("param", "lo", "hi", "count", "scale"),
}

_FLOAT_KEYS = {"delta", "kappa", "lambda", "mu", "dt", "grid_step", "extent",
               "x0", "lo", "hi"}
_INT_KEYS = {"paths", "seed", "count"}
_BOOL_KEYS = {"audit"}


def _parse_value(key, raw):
    if key in _FLOAT_KEYS:
        try:
            val = float(raw)
        except ValueError:
            raise ConfigError("key %r: %r is not a number" % (key, raw))
        if not math.isfinite(val):
            raise ConfigError("key %r: %r is not finite" % (key, raw))
        return val
    if key in _INT_KEYS:
        try:
            return int(raw)
        except ValueError:
            raise ConfigError("key %r: %r is not an integer" % (key, raw))
    if key in _BOOL_KEYS:
        if raw.lower() in ("true", "1", "yes"):
            return True
        if raw.lower() in ("false", "0", "no"):
            return False
        raise ConfigError("key %r: %r is not a boolean" % (key, raw))
    return raw


def parse_config(path):
    """Read a config file into a flat {key: value} dict, rejecting unknowns."""
    out = {}
    section = None
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError("cannot read config %s: %s" % (path, exc))
    for lineno, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section not in KNOWN_KEYS:
                raise ConfigError("%s:%d: unknown section [%s]"
                                  % (path, lineno, section))
            continue
        if "=" not in line:
            raise ConfigError("%s:%d: expected key = value" % (path, lineno))
        key, raw = (part.strip() for part in line.split("=", 1))
        if section is None:
            raise ConfigError("%s:%d: key %r outside any [section]"
                              % (path, lineno, key))
        if key not in KNOWN_KEYS[section]:
            raise ConfigError("%s:%d: unknown key %r in [%s]"
                              % (path, lineno, key, section))
        out[key] = _parse_value(key, raw)
    return out


def merge_config(args):
    """Config file values fill in flags the user did not pass."""
    cfg = dict(vars(args))
    if getattr(args, "config", None):
        file_vals = parse_config(args.config)
        for key, val in file_vals.items():
            dest = "lam" if key == "lambda" else key
            if cfg.get(dest) in (None, False):
                cfg[dest] = val
    return cfg


# -- model plumbing ----------------------------------------------------------

def model_to_dict(model: GameModel):
    return dataclasses.asdict(model)


def model_from_dict(d) -> GameModel:
    return GameModel(**d)


def _require(cfg, *keys):
    missing = [k for k in keys if cfg.get(k) is None]
    if missing:
        raise ConfigError("missing required parameter(s): %s"
                          % ", ".join("--" + k.replace("_", "-") for k in missing))


def _classify(cfg):
    """Dispatch on --case; returns (params, result)."""
    case = cfg.get("case")
    if case == "quadratic":
        _require(cfg, "delta", "kappa", "lam")
        p = QuadParams(cfg["delta"], cfg["kappa"], cfg["lam"], cfg.get("mu") or 0.0)
        return p, classify_regime_I(p)
    if case == "kink":
        _require(cfg, "delta", "lam")
        p = KinkParams(cfg["delta"], cfg["lam"])
        return p, classify_regime_II(p)
    if case == "general":
        raise ConfigError("no closed-form solver for the general case; "
                          "use the grid solver library API")
    raise ConfigError("--case must be quadratic or kink (got %r)" % (case,))


def _write_json(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def _out_base(cfg, default):
    out = cfg.get("out") or cfg.get("path") or default
    for ext in (".json", ".csv"):
        if out.endswith(ext):
            out = out[: -len(ext)]
    return out


# -- subcommands -------------------------------------------------------------

def cmd_solve(cfg):
    params, result = _classify(cfg)
    model = params.model()
    gen = result.generator

    base = _out_base(cfg, "solution")
    json_path, csv_path = base + ".json", base + ".csv"

    payload = {
        "model": model_to_dict(model),
        "regime": result.tag,
        "alpha": result.alpha,
        "beta": result.beta,
        "coeff_A": result.coeff_A,
        "residuals": dict(result.residuals),
        "generator": generator_to_dict(gen),
    }
    _write_json(json_path, payload)

    finite_bps = [abs(v) for v in gen.breakpoints.values() if math.isfinite(v)]
    extent = cfg.get("extent")
    if extent is None:
        extent = (max(finite_bps) if finite_bps else 0.0) + 3.0
    step = cfg.get("grid_step") or 1e-3
    n = int(round(2.0 * extent / step)) + 1
    xs = np.linspace(-extent, extent, n)
    u = eval_u_array(gen, xs)
    g = model.g(xs)
    v = np.maximum(u, g)
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "u", "g", "v"])
        for row in zip(xs, u, g, v):
            writer.writerow([repr(float(val)) for val in row])

    print(json_path)
    print(csv_path)
    return 0


def _load_generator(path):
    try:
        with open(path) as fh:
            d = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError("cannot load generator %s: %s" % (path, exc))
    try:
        model = model_from_dict(d["model"])
        gen = generator_from_dict(d["generator"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError("malformed generator file %s: %s" % (path, exc))
    return model, gen


def cmd_verify(cfg):
    model, gen = _load_generator(cfg["generator"])
    report = verify(gen, model, grid_step=cfg.get("grid_step") or 1e-4,
                    extent=cfg.get("extent"))
    out_path = _out_base(cfg, "verify_report") + ".json"
    _write_json(out_path, report.to_dict())
    print(out_path)
    if not report.verdict:
        for chk in report.failed():
            print("FAIL %s (%s): worst residual %.3g at x=%.6g"
                  % (chk.condition_id, chk.region, chk.worst_residual,
                     chk.worst_location), file=sys.stderr)
        return 4
    return 0


def _path_csv(path, rec):
    """One sample path; column `jumps` holds the jump size landed at that time."""
    jump_sizes = np.zeros(len(rec.times))
    for t, x_from, x_to in rec.jumps:
        idx = int(np.searchsorted(rec.times, t))
        idx = min(idx, len(jump_sizes) - 1)
        jump_sizes[idx] += abs(x_to - x_from)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "X", "xi_plus", "xi_minus", "jumps", "Lambda"])
        for row in zip(rec.times, rec.states, rec.dxi_plus, rec.dxi_minus,
                       jump_sizes, rec.Lambda):
            writer.writerow([repr(float(val)) for val in row])


def cmd_simulate(cfg):
    if cfg.get("generator"):
        model, gen = _load_generator(cfg["generator"])
    else:
        params, result = _classify(cfg)
        model, gen = params.model(), result.generator
    _require(cfg, "x0")
    flavor = cfg.get("flavor") or "V"
    if flavor not in ("V", "U"):
        raise ConfigError("--flavor must be V or U (got %r)" % (flavor,))
    x0 = cfg["x0"]
    dt = cfg.get("dt") or 1e-3
    n_paths = cfg.get("paths") or 10000
    seed = cfg.get("seed") or 0

    strat = strategy_from_generator(gen)
    est = estimate_value(strat, model, x0, flavor, n_paths=n_paths, dt=dt,
                         seed=seed)
    payload = est.to_dict()
    payload["seed"] = seed
    if cfg.get("audit"):
        payload["saddle_audit"] = saddle_audit(
            gen, model, x0, flavor=flavor, n_paths=n_paths, dt=dt, seed=seed)

    base = _out_base(cfg, "simulate")
    json_path = base + ".json"
    _write_json(json_path, payload)
    print(json_path)

    rec = simulate_path(strat, model, x0, dt, seed=seed, flavor=flavor)
    csv_path = base + "_path.csv"
    _path_csv(csv_path, rec)
    print(csv_path)
    return 0


_SWEEP_PARAMS = {
    "quadratic": ("delta", "kappa", "lambda", "mu"),
    "kink": ("delta", "lambda"),
}


def cmd_sweep(cfg):
    case = cfg.get("case")
    if case not in _SWEEP_PARAMS:
        raise ConfigError("--case must be quadratic or kink for sweep")
    names = _SWEEP_PARAMS[case]
    param = cfg.get("param") or "lambda"
    if param not in names:
        raise ConfigError("sweep param %r not in %s" % (param, names))

    fixed = {}
    for name in names:
        dest = "lam" if name == "lambda" else name
        val = cfg.get(dest)
        fixed[name] = 0.0 if (name == "mu" and val is None) else val
    for name in names:
        if name != param and fixed[name] is None:
            raise ConfigError("missing fixed parameter --%s" % name)

    lo, hi, count = cfg.get("lo"), cfg.get("hi"), cfg.get("count")
    if lo is None and hi is None:
        if fixed[param] is None:
            raise ConfigError("sweep needs lo/hi or a fixed --%s" % param)
        lo = hi = fixed[param]
        count = count or 1
    elif lo is None or hi is None:
        raise ConfigError("sweep needs both lo and hi")
    count = count or 100
    if count < 1:
        raise ConfigError("sweep count must be >= 1")
    if cfg.get("scale") == "log":
        if lo <= 0:
            raise ConfigError("log scale needs lo > 0")
        grid = np.geomspace(lo, hi, count)
    else:
        grid = np.linspace(lo, hi, count)

    rows, flagged = [], 0
    for val in grid:
        vals = dict(fixed)
        vals[param] = float(val)
        try:
            if case == "quadratic":
                p = QuadParams(vals["delta"], vals["kappa"], vals["lambda"],
                               vals["mu"])
                result = classify_regime_I(p)
            else:
                p = KinkParams(vals["delta"], vals["lambda"])
                result = classify_regime_II(p)
            resid = max(result.residuals.values()) if result.residuals else 0.0
            beta = result.beta if result.beta is not None else float("nan")
            rows.append([repr(vals[n]) for n in names]
                        + [result.tag, repr(result.alpha), repr(beta),
                           repr(float(resid))])
        except (RegimeGap, RegimeOverlap) as exc:
            flagged += 1
            tag = "GAP" if isinstance(exc, RegimeGap) else "OVERLAP"
            rows.append([repr(vals[n]) for n in names]
                        + [tag, "nan", "nan", "nan"])

    out_path = _out_base(cfg, "sweep") + ".csv"
    with open(out_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(names) + ["regime", "alpha", "beta", "residual"])
        writer.writerows(rows)
    print(out_path)
    if flagged:
        print("%d of %d rows hit a regime gap/overlap" % (flagged, len(rows)),
              file=sys.stderr)
        return 3
    return 0


# -- argument parsing --------------------------------------------------------

def _add_common(sub):
    sub.add_argument("--case", choices=("quadratic", "kink", "general"))
    sub.add_argument("--delta", type=float)
    sub.add_argument("--kappa", type=float)
    sub.add_argument("--lambda", dest="lam", type=float)
    sub.add_argument("--mu", type=float)
    sub.add_argument("--x0", type=float)
    sub.add_argument("--flavor", choices=("V", "U"))
    sub.add_argument("--dt", type=float)
    sub.add_argument("--paths", type=int)
    sub.add_argument("--seed", type=int)
    sub.add_argument("--grid-step", dest="grid_step", type=float)
    sub.add_argument("--extent", type=float)
    sub.add_argument("--audit", action="store_true", default=False)
    sub.add_argument("--out")
    sub.add_argument("--config")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="ctrlstop",
        description="Singular control vs discretionary stopping: solve, "
                    "verify, simulate, sweep.")
    subs = parser.add_subparsers(dest="subcommand", required=True)
    for name, fn in (("solve", cmd_solve), ("verify", cmd_verify),
                     ("simulate", cmd_simulate), ("sweep", cmd_sweep)):
        sub = subs.add_parser(name)
        _add_common(sub)
        if name == "verify":
            sub.add_argument("generator", help="generator JSON from solve")
        elif name == "simulate":
            sub.add_argument("generator", nargs="?",
                             help="generator JSON; omit to solve from --case")
        sub.set_defaults(func=fn)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = merge_config(args)
        return args.func(cfg)
    except (ConfigError, InvalidModel, GridTooCoarse, ValueError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2
    except (RegimeGap, RegimeOverlap) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 3
    except StepTooLarge as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 5


if __name__ == "__main__":
    sys.exit(main())
