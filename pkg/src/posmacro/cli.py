"""Batch command-line front end.

Configuration is a flat UTF-8 file of ``key = value`` lines with ``#``
comments.  Economic keys have no defaults; solver, simulation and output
keys do.  Data goes to ``--output`` (standard output by default) and
diagnostics to standard error.

Exit codes: 0 success, 1 configuration or usage error, 2 solver error,
3 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import __version__
from .analysis import (
    CI_METHOD,
    delta_sweep,
    ensemble_seeds,
    fit_scaling_exponent,
    monte_carlo_ensemble,
    wealth_sweep,
)
from .dynamics import SimConfig, simulate
from .errors import ConfigError, DomainError, PosMacroError, SolverError
from .heterogeneous import from_supply, solve_heterogeneous
from .homogeneous import MarketParams, classify_regime, solve_equilibrium
from .rng import RNG_NAME, ReturnModel

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_SOLVER = 2
EXIT_IO = 3

ECONOMIC_KEYS = ("total_supply", "investor_share", "mu_r", "sigma_r", "c", "gamma")
OPTIONAL_ECONOMIC_KEYS = ("mu_F", "sigma_F")
DEFAULTS = {
    "horizon": 10000,
    "seed": 0,
    "return_model": "normal",
    "record_every": 1,
    "tol": 1e-10,
    "eps_critical": 1e-12,
    "format": "csv",
    "path": None,
    "precision": None,
}

SIMULATE_COLUMNS = ("t", "W_i", "W_c", "S", "S_i", "S_c", "L_c", "y", "alpha", "R_t", "corner")
ENSEMBLE_COLUMNS = ("run", "seed", "extinction_time", "log_growth_estimate", "yield_log_slope")


@dataclass(frozen=True)
class RunConfig:
    """Validated contents of a configuration file."""

    total_supply: float
    investor_share: float
    mu_r: float
    sigma_r: float
    c: float
    gamma: float
    mu_F: float = 0.0
    sigma_F: float = 0.0
    horizon: int = DEFAULTS["horizon"]
    seed: int = DEFAULTS["seed"]
    return_model: str = DEFAULTS["return_model"]
    record_every: int = DEFAULTS["record_every"]
    tol: float = DEFAULTS["tol"]
    eps_critical: float = DEFAULTS["eps_critical"]
    format: str = DEFAULTS["format"]
    path: Optional[str] = DEFAULTS["path"]
    precision: Optional[int] = DEFAULTS["precision"]

    def market_params(self) -> MarketParams:
        return MarketParams(self.mu_r, self.sigma_r**2, self.c, self.mu_F, self.sigma_F**2)

    def heterogeneous_params(self):
        return from_supply(self.total_supply, self.investor_share, self.gamma, self.c,
                           self.mu_r, self.sigma_r**2)

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def _finite_float(key, raw, line):
    try:
        value = float(raw)
    except ValueError:
        raise ConfigError(f"line {line}: {key} must be a number, got {raw!r}", key, line) from None
    if not math.isfinite(value):
        raise ConfigError(f"line {line}: {key} must be finite, got {raw!r}", key, line)
    return value


def _integer(key, raw, line):
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"line {line}: {key} must be an integer, got {raw!r}", key, line) from None


def _choice(options):
    def parse(key, raw, line):
        if raw not in options:
            raise ConfigError(
                f"line {line}: {key} must be one of {', '.join(options)}, got {raw!r}", key, line
            )
        return raw
    return parse


def _text(key, raw, line):
    return raw


def _positive(v):
    return v > 0


def _non_negative(v):
    return v >= 0


# key -> (parser, range check, description of the range)
_KEYS = {
    "total_supply": (_finite_float, _positive, "> 0"),
    "investor_share": (_finite_float, lambda v: 0 <= v <= 1, "in [0, 1]"),
    "mu_r": (_finite_float, None, ""),
    "sigma_r": (_finite_float, _positive, "> 0"),
    "c": (_finite_float, _positive, "> 0"),
    "gamma": (_finite_float, _positive, "> 0"),
    "mu_F": (_finite_float, _non_negative, ">= 0"),
    "sigma_F": (_finite_float, _non_negative, ">= 0"),
    "horizon": (_integer, lambda v: v >= 1, ">= 1"),
    "seed": (_integer, _non_negative, ">= 0"),
    "return_model": (_choice(("normal", "deterministic")), None, ""),
    "record_every": (_integer, lambda v: v >= 1, ">= 1"),
    "tol": (_finite_float, lambda v: 0 < v < 1, "in (0, 1)"),
    "eps_critical": (_finite_float, _non_negative, ">= 0"),
    "format": (_choice(("csv", "json")), None, ""),
    "path": (_text, None, ""),
    "precision": (_integer, lambda v: 1 <= v <= 17, "in [1, 17]"),
}


def parse_config(text) -> RunConfig:
    """Parse and validate a configuration file's contents (bytes or str)."""
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ConfigError(f"configuration is not valid UTF-8: {exc}") from None
    values = {}
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw_line.strip()!r}",
                              None, lineno)
        key, raw = (part.strip() for part in line.split("=", 1))
        if key not in _KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}", key, lineno)
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}", key, lineno)
        if not raw:
            raise ConfigError(f"line {lineno}: {key} has no value", key, lineno)
        parser, check, desc = _KEYS[key]
        value = parser(key, raw, lineno)
        if check is not None and not check(value):
            raise ConfigError(f"line {lineno}: {key} must be {desc}, got {raw}", key, lineno)
        values[key] = value
    missing = [k for k in ECONOMIC_KEYS if k not in values]
    if missing:
        raise ConfigError("missing economic parameters: " + ", ".join(missing), missing[0])
    return RunConfig(**values)


def read_config(path: str) -> RunConfig:
    with open(path, "rb") as fh:
        return parse_config(fh.read())


# -- output ------------------------------------------------------------------

class _Formatter:
    """Shortest round-trip floats by default, ``precision`` significant digits if set."""

    def __init__(self, precision: Optional[int]):
        self.precision = precision

    def scalar(self, v):
        if v is None:
            return None
        if isinstance(v, (bool, np.bool_)):
            return bool(v)
        if isinstance(v, (int, np.integer)):
            return int(v)
        if isinstance(v, (float, np.floating)):
            v = float(v)
            if not math.isfinite(v):
                return None
            if self.precision is not None:
                return float(format(v, f".{self.precision}g"))
            return v
        return v

    def cell(self, v) -> str:
        v = self.scalar(v)
        if v is None:
            return ""
        if isinstance(v, bool):
            return "true" if v else "false"
        if isinstance(v, float) and self.precision is not None:
            return format(v, f".{self.precision}g")
        return repr(v) if isinstance(v, float) else str(v)

    def tree(self, obj):
        if isinstance(obj, dict):
            return {k: self.tree(v) for k, v in obj.items()}
        if isinstance(obj, (list, tuple)):
            return [self.tree(v) for v in obj]
        return self.scalar(obj)


def _render(fmt: _Formatter, kind: str, meta: dict, columns, rows, extra=None) -> str:
    """``rows`` is a list of tuples in ``columns`` order."""
    if kind == "json":
        data = {"meta": meta, "columns": list(columns)}
        if extra:
            data.update(extra)
        data["data"] = {c: [row[i] for row in rows] for i, c in enumerate(columns)}
        return json.dumps(fmt.tree(data), indent=2, allow_nan=False) + "\n"
    buf = io.StringIO()
    for key, value in _flatten(fmt.tree({**meta, **(extra or {})})):
        buf.write(f"# {key}: {json.dumps(value)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([fmt.cell(v) for v in row])
    return buf.getvalue()


def _flatten(obj, prefix=""):
    for key, value in obj.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            yield from _flatten(value, name + ".")
        else:
            yield name, value


def _render_object(fmt: _Formatter, kind: str, meta: dict, result: dict) -> str:
    if kind == "json":
        return json.dumps(fmt.tree({"meta": meta, "result": result}), indent=2,
                          allow_nan=False) + "\n"
    columns = tuple(result)
    return _render(fmt, "csv", meta, columns, [tuple(result[c] for c in columns)])


# -- commands ----------------------------------------------------------------

def _meta(command: str, cfg: RunConfig, **extra) -> dict:
    meta = {
        "command": command,
        "version": __version__,
        "parameters": {k: getattr(cfg, k) for k in ECONOMIC_KEYS + OPTIONAL_ECONOMIC_KEYS},
        "seed": cfg.seed,
        "rng": RNG_NAME,
        "tolerances": {"tol": cfg.tol, "eps_critical": cfg.eps_critical},
    }
    meta.update(extra)
    return meta


def _wealth(args, cfg: RunConfig) -> float:
    return args.wealth if args.wealth is not None else cfg.total_supply


def cmd_solve_homogeneous(args, cfg, fmt, kind):
    params = cfg.market_params()
    W = _wealth(args, cfg)
    eq = solve_equilibrium(params, W, cfg.tol)
    regime = classify_regime(params, cfg.eps_critical)
    result = {
        "W": eq.W,
        "S_star": eq.S_star,
        "x_star": eq.x_star,
        "w_star": eq.w_star,
        "y_star": eq.y_star,
        "boundary": eq.boundary,
        "regime": regime.kind.value,
        "delta": regime.delta,
        "residual": eq.residual,
    }
    return _render_object(fmt, kind, _meta("solve-homogeneous", cfg), result)


def cmd_solve_heterogeneous(args, cfg, fmt, kind):
    eq = solve_heterogeneous(cfg.heterogeneous_params(), cfg.tol)
    result = {
        "S": eq.S,
        "S_i": eq.S_i,
        "S_c": eq.S_c,
        "L_c": eq.L_c,
        "y": eq.y,
        "corner": eq.corner,
        "investors_out": eq.investors_out,
        "residual_mrs": eq.residual_mrs,
        "residual_clearance": eq.residual_clearance,
    }
    return _render_object(fmt, kind, _meta("solve-heterogeneous", cfg), result)


def _sim_config(cfg: RunConfig) -> SimConfig:
    params = cfg.heterogeneous_params()
    if cfg.return_model == "deterministic":
        model = ReturnModel.deterministic(cfg.mu_r)
    else:
        model = ReturnModel.normal(cfg.mu_r, cfg.sigma_r)
    return SimConfig(params, cfg.horizon, cfg.seed, model, cfg.record_every, cfg.tol)


def cmd_simulate(args, cfg, fmt, kind):
    traj = simulate(_sim_config(cfg))
    rows = [
        (s.t, s.W_i, s.W_c, s.S, s.S_i, s.S_c, s.L_c, s.y, s.alpha, s.R_t, s.corner)
        for s in traj.states
    ]
    summary = {
        "extinction_time": traj.extinction_time,
        "log_growth_estimate": traj.log_growth_estimate,
        "yield_log_slope": traj.yield_log_slope,
        "consumer_bound": traj.consumer_bound,
        "truncations": traj.truncations,
        "reentered": traj.reentered,
    }
    meta = _meta("simulate", cfg, horizon=cfg.horizon, return_model=cfg.return_model,
                 record_every=cfg.record_every)
    _note(args, f"simulated {cfg.horizon} periods, {len(rows)} rows")
    return _render(fmt, kind, meta, SIMULATE_COLUMNS, rows, {"summary": summary})


def _grid(lo, hi, n, log):
    if n < 1:
        raise DomainError(f"--points must be >= 1, got {n}")
    if n == 1:
        return [lo]
    if log:
        if not (lo > 0 and hi > 0):
            raise DomainError("a wealth grid needs positive end points")
        return list(np.geomspace(lo, hi, n))
    return list(np.linspace(lo, hi, n))


def _sweep_rows(sweep):
    return [tuple(row[c] for c in sweep.columns) for row in sweep.rows]


def cmd_sweep_wealth(args, cfg, fmt, kind):
    grid = _grid(args.w_min, args.w_max, args.points or 7, log=True)
    sweep = wealth_sweep(cfg.market_params(), grid, cfg.tol)
    fit = {"tail_points": 3, "exponent": None}
    try:
        fit["exponent"] = fit_scaling_exponent(sweep, 3)
    except DomainError as exc:
        _note(args, f"no exponent fit: {exc}")
    if fit["exponent"] is not None:
        _note(args, f"fitted exponent over the last 3 points: {fit['exponent']:.6f}")
    meta = _meta("sweep-wealth", cfg)
    return _render(fmt, kind, meta, sweep.columns, _sweep_rows(sweep), {"fit": fit})


def cmd_sweep_delta(args, cfg, fmt, kind):
    grid = _grid(args.delta_min, args.delta_max, args.points or 21, log=False)
    W = _wealth(args, cfg)
    sweep = delta_sweep(cfg.market_params(), W, grid, tol=cfg.tol)
    meta = _meta("sweep-delta", cfg, W=W)
    return _render(fmt, kind, meta, sweep.columns, _sweep_rows(sweep))


def cmd_ensemble(args, cfg, fmt, kind):
    config = _sim_config(cfg)
    summary = monte_carlo_ensemble(config, args.n_seeds, workers=args.workers)
    stats = {
        "n_seeds": summary.n_seeds,
        "n_failed": summary.n_failed,
        "failure_flag": summary.failure_flag,
        "extinction_min": summary.extinction_min,
        "extinction_median": summary.extinction_median,
        "extinction_max": summary.extinction_max,
        "fraction_finite": summary.fraction_finite,
        "growth_mean": summary.growth_mean,
        "growth_ci_low": summary.growth_ci[0],
        "growth_ci_high": summary.growth_ci[1],
        "ci_method": CI_METHOD,
        "terminal_alpha_min": summary.terminal_alpha_min,
        "terminal_alpha_mean": summary.terminal_alpha_mean,
        "terminal_alpha_max": summary.terminal_alpha_max,
        "truncations": summary.truncations,
        "reentry_fraction": summary.reentry_fraction,
    }
    # per-run rows exist only for members that succeeded
    rows = []
    if summary.n_failed == 0:
        for i, seed in enumerate(ensemble_seeds(cfg.seed, args.n_seeds)):
            rows.append((i, seed, summary.extinction_times[i], summary.growth_estimates[i],
                         summary.yield_log_slopes[i]))
    meta = _meta("ensemble", cfg, horizon=cfg.horizon, return_model=cfg.return_model,
                 seed_rule="splitmix64(master + (run + 1) * 0x9E3779B97F4A7C15)")
    _note(args, f"ensemble of {args.n_seeds}: fraction extinct {summary.fraction_finite:.3f}, "
                f"mean log-growth {summary.growth_mean:.6f}")
    return _render(fmt, kind, meta, ENSEMBLE_COLUMNS, rows, {"summary": stats})


COMMANDS = {
    "solve-homogeneous": cmd_solve_homogeneous,
    "solve-heterogeneous": cmd_solve_heterogeneous,
    "simulate": cmd_simulate,
    "sweep-wealth": cmd_sweep_wealth,
    "sweep-delta": cmd_sweep_delta,
    "ensemble": cmd_ensemble,
}


def _note(args, message):
    if not args.quiet:
        print(message, file=sys.stderr)


class _Parser(argparse.ArgumentParser):
    # usage errors share exit code 1 with configuration errors
    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, metavar="PATH")
    common.add_argument("--output", metavar="PATH", help="default: standard output")
    common.add_argument("--format", choices=("csv", "json"))
    common.add_argument("--seed", type=int)
    common.add_argument("--deterministic", action="store_true",
                        help="use the deterministic return model R_t = mu_r")
    common.add_argument("--steps", type=int, help="override the simulation horizon")
    common.add_argument("--quiet", action="store_true", help="no diagnostics on stderr")
    common.add_argument("--wealth", type=float, help="W for solve-homogeneous and sweep-delta")
    common.add_argument("--w-min", type=float, default=1e8)
    common.add_argument("--w-max", type=float, default=1e14)
    common.add_argument("--delta-min", type=float, default=-0.04)
    common.add_argument("--delta-max", type=float, default=0.01)
    common.add_argument("--points", type=int)
    common.add_argument("--n-seeds", type=int, default=200)
    common.add_argument("--workers", type=int, default=1)

    parser = _Parser(prog="posmacro", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"posmacro {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def _apply_overrides(cfg: RunConfig, args) -> RunConfig:
    values = cfg.as_dict()
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError("--seed must be >= 0", "seed")
        values["seed"] = args.seed
    if args.steps is not None:
        if args.steps < 1:
            raise ConfigError("--steps must be >= 1", "horizon")
        values["horizon"] = args.steps
    if args.deterministic:
        values["return_model"] = "deterministic"
    if args.format is not None:
        values["format"] = args.format
    if args.output is not None:
        values["path"] = args.output
    return RunConfig(**values)


def run_command(argv=None) -> int:
    """Run one CLI invocation and return its exit code."""
    try:
        args = build_parser().parse_args(argv)
        cfg = _apply_overrides(read_config(args.config), args)
        fmt = _Formatter(cfg.precision)
        text = COMMANDS[args.command](args, cfg, fmt, cfg.format)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (DomainError, PosMacroError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if cfg.path is None:
            sys.stdout.write(text)
            sys.stdout.flush()
        else:
            with open(cfg.path, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


def main(argv=None) -> None:
    sys.exit(run_command(argv))
