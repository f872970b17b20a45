"""Command-line interface.

Subcommands: ``fidelity``, ``optimize``, ``map``, ``baseline``, ``validate``.
Options may also come from a JSON file given with ``--config``; explicit
flags override it.  Exit codes: 0 success, 1 validation failure, 2 bad
arguments, 3 partial sweep failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from typing import Any, Callable

import numpy as np

from . import checks
from .exact import N_MAX_SYMBOLIC, ExperimentParams, average_fidelity
from .optimize import GridSpec, optimize_cell, resolve_threads, sweep_grid
from .oracle import MonteCarloSpec, QuadratureSpec, monte_carlo_fidelity, quadrature_fidelity, single_qubit_fidelity
from .records import (
    MAP_COLUMNS,
    PER_N_COLUMNS,
    RECORD_COLUMNS,
    ResultRecord,
    map_rows,
    per_n_rows,
    record_row,
    records_to_json,
    result_to_dict,
    write_csv,
)

log = logging.getLogger("roqec")

EXIT_OK, EXIT_VALIDATION, EXIT_USAGE, EXIT_PARTIAL = 0, 1, 2, 3
ENGINES = ("auto", "exact", "quadrature", "montecarlo")
FORMATS = ("csv", "json")


class UsageError(Exception):
    pass


def _probability(v):
    return 0.0 <= v <= 1.0


def _non_negative(v):
    return v >= 0


def _at_least(m):
    return lambda v: v >= m


# name -> (type, validity check, help)
OPTIONS: dict[str, tuple[Callable, Callable[[Any], bool] | None, str]] = {
    "n": (int, _at_least(1), "number of recoveries in [0, dt]"),
    "pfb": (float, _probability, "feedback probability p_fb"),
    "pmeas": (float, _probability, "syndrome measurement error probability p_meas"),
    "dt": (float, _non_negative, "total time dt in units of T2* (dimensionless)"),
    "n_max": (int, lambda v: 1 <= v <= N_MAX_SYMBOLIC, f"largest n to optimize over (<= {N_MAX_SYMBOLIC})"),
    "engine": (str, lambda v: v in ENGINES, "fidelity engine: " + ", ".join(ENGINES)),
    "samples": (int, _at_least(1), "Monte Carlo samples"),
    "seed": (int, None, "Monte Carlo seed"),
    "format": (str, lambda v: v in FORMATS, "output format: csv or json"),
    "output": (str, None, "output file (default: stdout)"),
    "per_n": (str, None, "also write the per-n long table (x,pmeas,n,pfb_n,f_n) here"),
    "threads": (int, _at_least(1), "worker processes (fallback: $ROQEC_THREADS, then CPU count)"),
    "x_min": (float, _non_negative, "smallest dt/T2*"),
    "x_max": (float, _non_negative, "largest dt/T2*"),
    "x_steps": (int, _at_least(2), "number of dt/T2* points"),
    "pmeas_min": (float, _probability, "smallest p_meas"),
    "pmeas_max": (float, _probability, "largest p_meas"),
    "pmeas_steps": (int, _at_least(2), "number of p_meas points"),
}

_GRID = GridSpec()
DEFAULTS: dict[str, dict[str, Any]] = {
    "fidelity": dict(n=None, pfb=None, pmeas=None, dt=None, engine="auto", samples=100_000, seed=0,
                     format="csv", output=None),
    "optimize": dict(pmeas=None, dt=None, n_max=10, format="json", output=None),
    "map": dict(x_min=_GRID.x_min, x_max=_GRID.x_max, x_steps=_GRID.x_steps, pmeas_min=_GRID.pmeas_min,
                pmeas_max=_GRID.pmeas_max, pmeas_steps=_GRID.pmeas_steps, n_max=_GRID.n_max,
                output=None, per_n=None, threads=None),
    "baseline": dict(x_min=0.0, x_max=3.0, x_steps=61, format="csv", output=None),
    "validate": dict(),
}

HELP = {
    "fidelity": "average fidelity for one (n, p_fb, p_meas, dt)",
    "optimize": "optimal n and p_fb for one (dt, p_meas)",
    "map": "optimize over a (dt, p_meas) grid and write CSV",
    "baseline": "single-qubit fidelity over a dt range",
    "validate": "run the self-check suite",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="roqec",
        description="Robustness-optimized error correction for the three-qubit phase-flip code. "
        "All times (--dt, --x-*) are in units of T2*.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for command, defaults in DEFAULTS.items():
        p = sub.add_parser(command, help=HELP[command], description=HELP[command])
        p.add_argument("--config", help="JSON file with option values (flags take precedence)")
        for name, default in defaults.items():
            typ, _, text = OPTIONS[name]
            shown = f" (default: {default})" if default is not None else ""
            p.add_argument("--" + name.replace("_", "-"), dest=name, type=typ,
                           default=argparse.SUPPRESS, help=text + shown)
    return parser


def resolve_config(command: str, explicit: dict[str, Any], config_path: str | None) -> dict[str, Any]:
    """Defaults, overridden by the config file, overridden by explicit flags."""
    allowed = DEFAULTS[command]
    config = dict(allowed)
    if config_path:
        try:
            with open(config_path) as fh:
                loaded = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {config_path}: {exc}") from exc
        if not isinstance(loaded, dict):
            raise UsageError("config file must hold a JSON object")
        unknown = sorted(set(loaded) - set(allowed))
        if unknown:
            raise UsageError(f"unknown config key(s) for '{command}': {', '.join(unknown)}")
        for key, value in loaded.items():
            typ = OPTIONS[key][0]
            try:
                config[key] = None if value is None else typ(value)
            except (TypeError, ValueError) as exc:
                raise UsageError(f"invalid {key}: {value!r}") from exc
    config.update(explicit)
    for key, value in config.items():
        check = OPTIONS[key][1]
        if value is None:
            if key in ("n", "pfb", "pmeas", "dt"):
                raise UsageError(f"missing required parameter {key}")
            continue
        if check is not None and not check(value):
            raise UsageError(f"invalid {key}: {value!r} ({OPTIONS[key][2]})")
    return config


def _emit(text: str, path: str | None) -> None:
    if path:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _with_command(command: str, config: dict[str, Any]) -> dict[str, Any]:
    return {"command": command, **config}


def cmd_fidelity(config: dict[str, Any]) -> int:
    params = ExperimentParams(config["n"], config["pfb"], config["pmeas"], config["dt"])
    engine = config["engine"]
    if engine == "auto":
        engine = "exact" if params.n <= N_MAX_SYMBOLIC else "quadrature"
    if engine == "exact":
        if params.n > N_MAX_SYMBOLIC:
            raise UsageError(f"invalid n: exact engine supports n <= {N_MAX_SYMBOLIC}")
        value, flag = average_fidelity(params), "exact"
    elif engine == "quadrature":
        res = quadrature_fidelity(params, QuadratureSpec(), full_output=True)
        state = "converged" if res.converged else "unconverged"
        value, flag = res.value, f"{state}(K={res.nodes_per_dim},delta={res.delta:.1e})"
    else:
        value, se = monte_carlo_fidelity(params, MonteCarloSpec(config["samples"], config["seed"]))
        flag = f"stderr={se:.3e}"
    rec = ResultRecord(params.x, params.p_meas, params.n, params.p_fb, float(value), engine,
                       single_qubit_fidelity(params.x), flag)
    header = _with_command("fidelity", config)
    if config["format"] == "json":
        _emit(records_to_json([rec], header), config["output"])
    else:
        _emit(write_csv([record_row(rec)], RECORD_COLUMNS, header), config["output"])
    return EXIT_OK


def cmd_optimize(config: dict[str, Any]) -> int:
    result = optimize_cell(config["pmeas"], config["dt"], config["n_max"])
    header = _with_command("optimize", config)
    if config["format"] == "json":
        payload = {"config": header, "result": result_to_dict(result)}
        _emit(json.dumps(payload, indent=2, sort_keys=True) + "\n", config["output"])
    else:
        _emit(write_csv(per_n_rows([result]), PER_N_COLUMNS, header), config["output"])
    return EXIT_OK


def cmd_map(config: dict[str, Any]) -> int:
    try:
        grid = GridSpec(config["x_min"], config["x_max"], config["x_steps"], config["pmeas_min"],
                        config["pmeas_max"], config["pmeas_steps"], config["n_max"])
    except ValueError as exc:
        raise UsageError(f"invalid grid: {exc}") from exc
    threads = resolve_threads(config["threads"])
    header = _with_command("map", config)
    results = sweep_grid(grid, threads)
    _emit(write_csv(map_rows(results), MAP_COLUMNS, header), config["output"])
    if config["per_n"]:
        _emit(write_csv(per_n_rows(results), PER_N_COLUMNS, header), config["per_n"])
    good = sum(r.ok for r in results)
    if good < 0.99 * len(results):
        log.error("%d of %d cells failed", len(results) - good, len(results))
        return EXIT_PARTIAL
    return EXIT_OK


def cmd_baseline(config: dict[str, Any]) -> int:
    if config["x_min"] > config["x_max"]:
        raise UsageError("invalid x_min: exceeds x_max")
    xs = np.linspace(config["x_min"], config["x_max"], config["x_steps"])
    rows = [[float(x), single_qubit_fidelity(float(x))] for x in xs]
    header = _with_command("baseline", config)
    if config["format"] == "json":
        payload = {"config": header, "results": [{"x": x, "baseline": f} for x, f in rows]}
        _emit(json.dumps(payload, indent=2, sort_keys=True) + "\n", config["output"])
    else:
        _emit(write_csv(rows, ["x", "baseline"], header), config["output"])
    return EXIT_OK


def cmd_validate(config: dict[str, Any]) -> int:
    results = checks.run_checks()
    for check in results:
        print(check.line())
    failed = [c.name for c in results if not c.passed]
    if failed:
        print(f"validation failed: {', '.join(failed)}")
        return EXIT_VALIDATION
    print(f"all {len(results)} checks passed")
    return EXIT_OK


COMMANDS = {
    "fidelity": cmd_fidelity,
    "optimize": cmd_optimize,
    "map": cmd_map,
    "baseline": cmd_baseline,
    "validate": cmd_validate,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    explicit = {k: v for k, v in vars(args).items() if k in DEFAULTS[args.command]}
    try:
        config = resolve_config(args.command, explicit, getattr(args, "config", None))
        log.info("resolved configuration: %s", config)
        return COMMANDS[args.command](config)
    except UsageError as exc:
        print(f"roqec {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
