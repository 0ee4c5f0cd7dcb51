"""Command-line front end.

Configuration is an INI file.  Keys may sit in any section; a section named
after the subcommand (for example ``[rate-study]``) overrides the others.
Exit codes: 0 success, 1 configuration error, 2 runtime or numeric error.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import json
import os
import sys

import numpy as np

from . import distributions as dists
from .errors import ConfigError, LPError, TvarError
from .estimator import estimate_curve, optimal_bandwidth, truncation_level
from .experiments import ExperimentConfig, _jsonable, run_experiment
from .prediction import plugin_grid, predict_next
from .process import parse_coefficient, read_path_csv, regression_transform, simulate_path, write_path_csv

STUDY_KINDS = {
    "rate-study": "rate",
    "concentration": "concentration",
    "prediction-study": "prediction",
    "sharpness": "sharpness",
    "pair-check": "pair_minimum",
    "lower-bound": "lower_bound",
}
SUBCOMMANDS = ("simulate", "estimate", "predict", *STUDY_KINDS)

FLOAT_KEYS = {"a", "beta", "x", "h", "pool_h", "b"}
INT_KEYS = {"reps", "seed", "threads", "pilot_reps", "position", "block", "moment_reps", "truncation_reps"}
LIST_FLOAT_KEYS = {"grid", "c_f"}
LIST_INT_KEYS = {"N", "lags"}
BOOL_KEYS = {"baseline", "noiseless"}
STR_KEYS = {"f", "dist", "input"}
OPTION_KEYS = {"baseline", "noiseless", "pilot_reps", "pool_h", "lags", "position", "block", "c_f", "b",
               "moment_reps", "truncation_reps"}
KNOWN_KEYS = FLOAT_KEYS | INT_KEYS | LIST_FLOAT_KEYS | LIST_INT_KEYS | BOOL_KEYS | STR_KEYS

DEFAULTS = {"f": "sine(0.5,0.3)", "dist": "gamma(1,1)", "beta": 1.0, "seed": 0, "threads": 1}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="irregular-tvar", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=SUBCOMMANDS, help="what to run")
    p.add_argument("--config", help="INI configuration file")
    p.add_argument("--out", default=".", help="output directory (default: current directory)")
    p.add_argument("--seed", type=int, help="master seed, overrides the config")
    p.add_argument("--threads", type=int, help="worker threads for replications")
    p.add_argument("--quiet", action="store_true", help="do not echo the resolved configuration")
    return p


def _convert(key: str, raw: str):
    try:
        if key in FLOAT_KEYS:
            return float(raw)
        if key in INT_KEYS:
            return int(raw)
        if key in LIST_FLOAT_KEYS:
            return [float(v) for v in raw.split(",") if v.strip()]
        if key in LIST_INT_KEYS:
            return [int(float(v)) for v in raw.split(",") if v.strip()]
        if key in BOOL_KEYS:
            low = raw.strip().lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {raw!r}") from None
    return raw.strip()


def load_config(path, command: str) -> dict:
    """Read ``path`` into a flat dict of typed values for ``command``."""
    if path is None:
        return {}
    if not os.path.isfile(path):
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        parser.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc
    raw = dict(parser.defaults())
    for section in parser.sections():
        if section not in SUBCOMMANDS:
            raw.update(parser[section])
    if parser.has_section(command):
        raw.update(parser[command])
    out = {}
    for key, value in raw.items():
        if key not in KNOWN_KEYS:
            raise ConfigError(f"{key}: unknown config key in {path}")
        out[key] = _convert(key, value)
    return out


def _resolve(args) -> dict:
    cfg = dict(DEFAULTS)
    cfg.update(load_config(args.config, args.command))
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.threads is not None:
        cfg["threads"] = args.threads
    if "a" in cfg and not cfg["a"] > 0:
        raise ConfigError(f"a: must be positive, got {cfg['a']}")
    if "beta" in cfg and not cfg["beta"] > 0:
        raise ConfigError(f"beta: must be positive, got {cfg['beta']}")
    return cfg


def _model(cfg):
    try:
        f = parse_coefficient(cfg["f"], beta=cfg["beta"])
    except ValueError as exc:
        raise ConfigError(f"f: {exc}") from exc
    try:
        dist = dists.parse_dist(cfg["dist"])
    except ValueError as exc:
        raise ConfigError(f"dist: {exc}") from exc
    return f, dist, cfg.get("a", dist.shape)


def _stem(kind: str, params: dict) -> str:
    blob = json.dumps(_jsonable(params), sort_keys=True, separators=(",", ":"))
    return f"{kind}_{hashlib.sha256(blob.encode()).hexdigest()[:12]}"


def _write_json(file, doc) -> None:
    with open(file, "w") as fh:
        fh.write(json.dumps(_jsonable(doc), sort_keys=True, indent=2) + "\n")


def _load_path(cfg):
    """The path named by ``input`` or a fresh simulation from the model keys."""
    f, dist, a = _model(cfg)
    if "input" in cfg:
        if not os.path.isfile(cfg["input"]):
            raise ConfigError(f"input: path file not found: {cfg['input']}")
        return read_path_csv(cfg["input"], dist), a
    N = cfg.get("N", [None])[0]
    if N is None:
        raise ConfigError("N: required when no input path is given")
    return simulate_path(f, dist, N, cfg["seed"]), a


def _params(cfg, keys):
    return {k: cfg[k] for k in sorted(keys) if k in cfg}


def cmd_simulate(cfg, out):
    f, dist, _ = _model(cfg)
    if "N" not in cfg:
        raise ConfigError("N: required for simulate")
    N = cfg["N"][0]
    path = simulate_path(f, dist, N, cfg["seed"])
    params = _params(cfg, ("f", "dist", "beta", "N", "seed"))
    stem = os.path.join(out, _stem("simulate", params))
    write_path_csv(path, stem + ".csv")
    resolved = {"N": N, "burn_in": path.burn_in, "rho": f.rho, "L": f.hoelder_L, "beta": f.hoelder_beta,
                "dist": dist.spec()}
    _write_json(stem + ".json", {"kind": "simulate", "params": params, "resolved": resolved})
    return resolved, [stem + ".csv", stem + ".json"]


def cmd_estimate(cfg, out):
    path, a = _load_path(cfg)
    sample = regression_transform(path)
    grid = np.array(cfg.get("grid", np.linspace(0, 1, 101)), dtype=float)
    curve = estimate_curve(sample, grid, a, cfg["beta"], h_override=cfg.get("h"))
    params = _params(cfg, ("f", "dist", "a", "beta", "N", "seed", "grid", "h", "input"))
    stem = os.path.join(out, _stem("estimate", params))
    curve.to_csv(stem + ".csv")
    resolved = {
        "N": path.N,
        "a": a,
        "h": curve.h,
        "h_star": optimal_bandwidth(path.N, a, cfg["beta"]),
        "degree": curve.degree,
        "per_x": [{"x": float(x), "n_local": int(n), "tau_n": truncation_level(int(n))}
                  for x, n in zip(curve.x, curve.n_local)],
    }
    _write_json(stem + ".json", {"kind": "estimate", "params": params, "resolved": resolved})
    return resolved, [stem + ".csv", stem + ".json"]


def cmd_predict(cfg, out):
    path, a = _load_path(cfg)
    sample = regression_transform(path)
    curve = estimate_curve(sample, plugin_grid(path.N), a, cfg["beta"], h_override=cfg.get("h"))
    res = predict_next(path, curve)
    params = _params(cfg, ("f", "dist", "a", "beta", "N", "seed", "h", "input"))
    stem = os.path.join(out, _stem("predict", params))
    with open(stem + ".csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["k", "f_hat", "residual"])
        for k, (fv, r) in enumerate(zip(curve.f_hat_truncated, res.residuals), start=2):
            w.writerow([k, format(fv, ".17g"), format(r, ".17g")])
    n1 = int(curve.n_local[-1])
    resolved = {"N": path.N, "a": a, "h": curve.h, "degree": curve.degree, "n_local_at_1": n1,
                "tau_n_at_1": truncation_level(n1), "x_hat_next": res.x_hat_next,
                "residual_mean": res.residual_mean}
    _write_json(stem + ".json", {"kind": "predict", "params": params, "resolved": resolved})
    return resolved, [stem + ".csv", stem + ".json"]


def experiment_config(command: str, cfg: dict, out) -> ExperimentConfig:
    kw = {k: cfg[k] for k in ("f", "dist", "reps", "seed", "a", "beta", "x", "threads") if k in cfg}
    if "N" in cfg:
        kw["N"] = tuple(cfg["N"])
    if "grid" in cfg:
        kw["grid"] = tuple(cfg["grid"])
    kw["options"] = {k: cfg[k] for k in OPTION_KEYS if k in cfg}
    return ExperimentConfig(kind=STUDY_KINDS[command], output=out, **kw)


def cmd_study(command, cfg, out):
    ecfg = experiment_config(command, cfg, out)
    report = run_experiment(ecfg)
    stem = os.path.join(out, report.file_stem())
    return {"kind": report.kind, "resolved": report.resolved, "fits": report.fits}, [stem + ".csv", stem + ".json"]


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _resolve(args)
        os.makedirs(args.out, exist_ok=True)
        if args.command == "simulate":
            echo, files = cmd_simulate(cfg, args.out)
        elif args.command == "estimate":
            echo, files = cmd_estimate(cfg, args.out)
        elif args.command == "predict":
            echo, files = cmd_predict(cfg, args.out)
        else:
            echo, files = cmd_study(args.command, cfg, args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (TvarError, LPError, ValueError, ArithmeticError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if not args.quiet:
        print(json.dumps(_jsonable(echo), sort_keys=True, indent=2))
        for name in files:
            print(f"wrote {name}")
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
