"""Command-line harness: point/weight emission and the benchmark studies.

    gpq points|weights|transform|moments|ungm|bot --config FILE
        [--out PATH] [--format csv|json] [--seed-offset N]

Every subcommand reads one JSON config document (schemas documented in
the repository README; ready-made configs live under configs/).  Exit
codes: 0 success, 1 configuration error, 2 numerical failure in every
requested method.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .experiments import (
    ConfigError,
    FLOAT_FORMAT,
    Report,
    build_rule,
    resolve_kernel_spec,
    resolve_point_spec,
    run_bot,
    run_moments,
    run_ungm,
)
from .models import moment_integrand, ungm_model
from .points import ClassicalRule
from .quadrature import gp_transform, gpq_weights

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2


def _fmt(value: float) -> str:
    return FLOAT_FORMAT % float(value)


def _load_config(path: str) -> dict:
    config_path = Path(path)
    if not config_path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        config = json.loads(config_path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(config, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    return config


def _apply_seed_offset(config: dict, offset: int) -> dict:
    if offset and isinstance(config.get("seeds"), list):
        config = dict(config)
        config["seeds"] = [int(s) + offset for s in config["seeds"]]
    return config


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _points_command(config: dict) -> str:
    n = int(config.get("dimension", 0))
    if n < 1:
        raise ConfigError("config: 'dimension' must be a positive integer")
    spec = config.get("points")
    if spec is None:
        raise ConfigError("config: missing 'points' spec")
    resolved = resolve_point_spec(spec, n)
    header = [f"xi{i + 1}" for i in range(n)]
    if isinstance(resolved, ClassicalRule):
        rows = np.column_stack([resolved.points.points, resolved.weights])
        header.append("weight")
    else:
        rows = resolved.points
    lines = [",".join(header)]
    lines += [",".join(_fmt(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def _weights_command(config: dict, fmt: str) -> str:
    n = int(config.get("dimension", 0))
    if n < 1:
        raise ConfigError("config: 'dimension' must be a positive integer")
    point_spec = config.get("points")
    kernel_spec = config.get("kernel")
    if point_spec is None or kernel_spec is None:
        raise ConfigError("config: 'points' and 'kernel' are both required")
    resolved = resolve_point_spec(point_spec, n)
    points = resolved.points if isinstance(resolved, ClassicalRule) else resolved
    kernel = resolve_kernel_spec(kernel_spec, n)
    if kernel is None:
        raise ConfigError("config: the weights command needs an explicit kernel")
    rule = gpq_weights(kernel, points, float(config.get("jitter", 0.0)))
    if fmt == "json":
        return json.dumps({
            "weights": [float(w) for w in rule.weights],
            "posterior_variance": float(rule.posterior_variance),
            "jitter": rule.jitter,
        }, indent=2) + "\n"
    lines = [f"# posterior_variance = {_fmt(rule.posterior_variance)}",
             "index,weight"]
    lines += [f"{i},{_fmt(w)}" for i, w in enumerate(rule.weights)]
    return "\n".join(lines) + "\n"


_TRANSFORM_FUNCTIONS = {
    "identity": lambda spec: (lambda x: x),
    "componentwise-square": lambda spec: (lambda x: np.asarray(x) ** 2),
    "radial-power": lambda spec: moment_integrand(int(spec.get("exponent", 1)))[0],
    "ungm-transition": lambda spec: (
        lambda x: ungm_model().transition(np.atleast_2d(x), int(spec.get("k", 1)))[0]
    ),
    "ungm-measurement": lambda spec: (
        lambda x: ungm_model().measurement(np.atleast_2d(x), 0)[0]
    ),
}


def _transform_command(config: dict, fmt: str) -> str:
    n = int(config.get("dimension", 0))
    if n < 1:
        raise ConfigError("config: 'dimension' must be a positive integer")
    method = config.get("method")
    if not isinstance(method, dict):
        raise ConfigError("config: 'method' must be an object")
    fn_spec = config.get("function", {"name": "identity"})
    if isinstance(fn_spec, str):
        fn_spec = {"name": fn_spec}
    name = fn_spec.get("name")
    if name not in _TRANSFORM_FUNCTIONS:
        raise ConfigError(
            f"config: unknown function '{name}'; "
            f"choose from {sorted(_TRANSFORM_FUNCTIONS)}")
    g = _TRANSFORM_FUNCTIONS[name](fn_spec)
    mean = np.asarray(config.get("mean", np.zeros(n)), dtype=float)
    cov = np.asarray(config.get("cov", np.eye(n).tolist()), dtype=float)
    rule = build_rule(method, n)
    probe = np.atleast_1d(np.asarray(g(mean), dtype=float))
    noise = np.asarray(config.get("noise_cov",
                                  np.zeros((probe.size, probe.size)).tolist()),
                       dtype=float)
    result = gp_transform(rule, g, mean, cov, noise)
    if fmt == "json":
        return json.dumps({
            "mean": result.mean.tolist(),
            "cov": result.cov.tolist(),
            "cross_cov": result.cross_cov.tolist(),
        }, indent=2) + "\n"
    lines = ["section,row,col,value"]
    lines += [f"mean,{j},0,{_fmt(v)}" for j, v in enumerate(result.mean)]
    lines += [f"cov,{i},{j},{_fmt(result.cov[i, j])}"
              for i in range(result.cov.shape[0])
              for j in range(result.cov.shape[1])]
    lines += [f"cross_cov,{i},{j},{_fmt(result.cross_cov[i, j])}"
              for i in range(result.cross_cov.shape[0])
              for j in range(result.cross_cov.shape[1])]
    return "\n".join(lines) + "\n"


_STUDIES = {"moments": run_moments, "ungm": run_ungm, "bot": run_bot}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="gpq",
        description="Gaussian process quadrature rules, transforms and "
                    "filtering benchmarks",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("points", "weights", "transform", "moments", "ungm", "bot"):
        cmd = sub.add_parser(name)
        cmd.add_argument("--config", required=True, help="JSON config file")
        cmd.add_argument("--out", default=None, help="output path (default stdout)")
        cmd.add_argument("--format", default="csv", choices=("csv", "json"))
        cmd.add_argument("--seed-offset", type=int, default=0,
                         help="added to every seed in the config")
    args = parser.parse_args(argv)

    try:
        config = _load_config(args.config)
        config = _apply_seed_offset(config, args.seed_offset)
        if args.command == "points":
            _emit(_points_command(config), args.out)
            return EXIT_OK
        if args.command == "weights":
            _emit(_weights_command(config, args.format), args.out)
            return EXIT_OK
        if args.command == "transform":
            _emit(_transform_command(config, args.format), args.out)
            return EXIT_OK
        report: Report = _STUDIES[args.command](config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (np.linalg.LinAlgError, ValueError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL

    _emit(report.to_csv() if args.format == "csv" else report.to_json(), args.out)
    if report.all_failed():
        print("every method failed; see the error column", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
