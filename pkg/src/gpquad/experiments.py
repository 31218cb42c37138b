"""Experiment harness behind the CLI: configs, methods, studies, reports.

A method is a (point-set spec, weighting spec, jitter) triple resolved
into a quadrature rule: ``"classical"`` keeps the classical weights of
the generator (uniform 1/N for random and Hammersley sets), a kernel
spec solves for GP-quadrature weights.  The studies are

* ``run_moments`` -- KL divergence of each method's (mean, variance)
  estimate of the radial integrands against a seeded Monte Carlo truth;
* ``run_ungm``    -- filter/smoother RMSE over seeded trajectories of the
  univariate growth model;
* ``run_bot``     -- position RMSE on the bearings-only tracking model.

Reports are deterministic: identical config and seeds give byte-identical
CSV (floats at 12 significant digits, metadata lives only in JSON).
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .filtering import GaussianState, run_filter, run_smoother
from .kernels import SquaredExponentialKernel, make_gh_kernel, make_ut_kernel
from .models import BotConfig, bot_model, moment_integrand, simulate, ungm_model
from .points import (
    ClassicalRule,
    UnitPointSet,
    cubature_points,
    gauss_hermite_points,
    hammersley_points,
    optimize_points,
    random_points,
    symmetric5_points,
    ut_points,
    OptimizerSettings,
)
from .quadrature import QuadratureRule, gpq_weights

__all__ = [
    "ConfigError",
    "Report",
    "kl_gauss",
    "resolve_point_spec",
    "resolve_kernel_spec",
    "build_rule",
    "run_moments",
    "run_ungm",
    "run_bot",
    "moments_ground_truth",
]

FLOAT_FORMAT = "%.12g"


class ConfigError(ValueError):
    """Invalid experiment configuration."""


@dataclass
class Report:
    experiment: str
    columns: list[str]
    rows: list[list] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def all_failed(self) -> bool:
        error_col = self.columns.index("error")
        return bool(self.rows) and all(r[error_col] != "" for r in self.rows)

    def _format_cell(self, cell) -> str:
        if isinstance(cell, str):
            return cell
        if isinstance(cell, (int, np.integer)):
            return str(int(cell))
        return FLOAT_FORMAT % float(cell)

    def to_csv(self) -> str:
        lines = [",".join(self.columns)]
        lines += [",".join(self._format_cell(c) for c in row) for row in self.rows]
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        payload = {
            "experiment": self.experiment,
            "columns": self.columns,
            "rows": [[c if isinstance(c, (str, int)) else float(c) for c in row]
                     for row in self.rows],
            "metadata": self.metadata,
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def kl_gauss(p: GaussianState, q: GaussianState) -> float:
    """KL(p || q) between Gaussians, 0.5 [tr(Sq^-1 Sp) + dm^T Sq^-1 dm
    - n + ln det Sq / det Sp]; both covariances must be PD."""
    n = p.dimension
    if q.dimension != n:
        raise ValueError("dimension mismatch")
    try:
        chol_q = np.linalg.cholesky(q.cov)
        chol_p = np.linalg.cholesky(p.cov)
    except np.linalg.LinAlgError as exc:
        raise ValueError("KL divergence requires positive definite covariances") from exc
    solved = np.linalg.solve(q.cov, p.cov)
    dm = q.mean - p.mean
    maha = dm @ np.linalg.solve(q.cov, dm)
    logdet = 2.0 * (np.log(np.diag(chol_q)).sum() - np.log(np.diag(chol_p)).sum())
    return float(0.5 * (np.trace(solved) + maha - n + logdet))


# ---------------------------------------------------------------------------
# method resolution


def _require(mapping, key, context):
    if key not in mapping:
        raise ConfigError(f"{context}: missing required field '{key}'")
    return mapping[key]


def _point_count(spec, n: int, context: str) -> int:
    raw = _require(spec, "count", context)
    if raw == "2n":
        return 2 * n
    if isinstance(raw, int) and raw >= 1:
        return raw
    raise ConfigError(f"{context}: count must be a positive integer or '2n'")


def resolve_point_spec(spec: dict, n: int):
    """Build a point set (or classical rule) from its JSON spec."""
    context = f"point spec {spec!r}"
    if not isinstance(spec, dict) or "type" not in spec:
        raise ConfigError(f"{context}: expected an object with a 'type' field")
    kind = spec["type"]
    if kind == "ut":
        return ut_points(n, float(spec.get("kappa", 2.0)))
    if kind == "cubature":
        return cubature_points(n)
    if kind == "symmetric5":
        return symmetric5_points(n)
    if kind == "gauss-hermite":
        return gauss_hermite_points(n, int(_require(spec, "order", context)))
    if kind == "hammersley":
        return hammersley_points(n, _point_count(spec, n, context))
    if kind == "random":
        return random_points(n, _point_count(spec, n, context),
                             int(spec.get("seed", 0)))
    if kind == "optimized":
        kernel = resolve_kernel_spec(
            spec.get("kernel", {"type": "se", "output_scale": 1.0, "length_scale": 1.0}),
            n)
        settings = OptimizerSettings(
            restarts=int(spec.get("restarts", 5)),
            jitter=float(spec.get("jitter", 0.0)),
        )
        return optimize_points(kernel, n, _point_count(spec, n, context),
                               int(spec.get("seed", 0)), settings)
    if kind == "csv":
        path = Path(_require(spec, "path", context))
        if not path.exists():
            raise ConfigError(f"{context}: no such file {path}")
        pts = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return UnitPointSet(pts[:, :n], f"csv({path.name})")
    raise ConfigError(f"{context}: unknown point set type '{kind}'")


def resolve_kernel_spec(spec, n: int):
    """Build a kernel from its JSON spec ('classical' returns None)."""
    if spec == "classical":
        return None
    context = f"kernel spec {spec!r}"
    if not isinstance(spec, dict) or "type" not in spec:
        raise ConfigError(f"{context}: expected 'classical' or an object with 'type'")
    kind = spec["type"]
    if kind == "se":
        return SquaredExponentialKernel(
            output_scale=float(spec.get("output_scale", 1.0)),
            length_scale=float(spec.get("length_scale", 1.0)),
        )
    if kind == "ut-hermite":
        return make_ut_kernel(n, int(spec.get("order", 3)))
    if kind == "gh-hermite":
        return make_gh_kernel(n, int(_require(spec, "order", context)))
    raise ConfigError(f"{context}: unknown kernel type '{kind}'")


def build_rule(method: dict, n: int) -> QuadratureRule:
    """Resolve one method spec into a quadrature rule for dimension n."""
    context = f"method {method.get('name', '?')!r}"
    point_spec = _require(method, "points", context)
    points = resolve_point_spec(point_spec, n)
    kernel = resolve_kernel_spec(method.get("kernel", "classical"), n)
    jitter = float(method.get("jitter", 0.0))
    if kernel is None:
        if isinstance(points, ClassicalRule):
            return QuadratureRule.from_classical(points)
        # plain Monte Carlo / quasi Monte Carlo weighting
        return QuadratureRule(points, np.full(points.count, 1.0 / points.count))
    point_set = points.points if isinstance(points, ClassicalRule) else points
    return gpq_weights(kernel, point_set, jitter)


def _validated_methods(config) -> list[dict]:
    methods = _require(config, "methods", "config")
    if not isinstance(methods, list) or not methods:
        raise ConfigError("config: 'methods' must be a non-empty list")
    for m in methods:
        if "name" not in m:
            raise ConfigError(f"method {m!r} has no 'name'")
    names = [m["name"] for m in methods]
    if len(set(names)) != len(names):
        raise ConfigError("method names must be unique")
    return methods


def _validated_seeds(config) -> list[int]:
    seeds = _require(config, "seeds", "config")
    if not isinstance(seeds, list) or not seeds:
        raise ConfigError("config: 'seeds' must be a non-empty list")
    return [int(s) for s in seeds]


# ---------------------------------------------------------------------------
# moments study


def moments_ground_truth(n: int, exponent: int, samples: int, seed: int,
                         cache_dir: Path | None = None) -> tuple[float, float]:
    """Monte Carlo (mean, variance) of (1 + ||x||^2)^(p/2), x ~ N(0, I).

    The integrand is radial, so ||x||^2 is sampled directly from the
    chi-squared distribution with n degrees of freedom.  Results are
    cached on disk keyed by (n, p, samples, seed).
    """
    cache_file = None
    key = f"n={n},p={exponent},samples={samples},seed={seed}"
    if cache_dir is not None:
        cache_dir = Path(cache_dir)
        cache_dir.mkdir(parents=True, exist_ok=True)
        cache_file = cache_dir / "moments_ground_truth.json"
        if cache_file.exists():
            cached = json.loads(cache_file.read_text())
            if key in cached:
                return tuple(cached[key])
    rng = np.random.default_rng(seed)
    mean_acc, second_acc, remaining = 0.0, 0.0, samples
    while remaining > 0:
        block = min(remaining, 2_000_000)
        radial = 1.0 + rng.chisquare(n, block)
        mean_acc += (radial ** (exponent / 2.0)).sum()
        second_acc += (radial ** float(exponent)).sum()
        remaining -= block
    mean = mean_acc / samples
    variance = second_acc / samples - mean**2
    if cache_file is not None:
        cached = json.loads(cache_file.read_text()) if cache_file.exists() else {}
        cached[key] = [mean, variance]
        cache_file.write_text(json.dumps(cached, indent=2, sort_keys=True))
    return mean, variance


def run_moments(config: dict) -> Report:
    """Per-method KL divergence of moment estimates across (n, p) cells."""
    methods = _validated_methods(config)
    dims = [int(d) for d in _require(config, "dimensions", "config")]
    exponents = [int(p) for p in _require(config, "exponents", "config")]
    samples = int(config.get("mc_samples", 10**7))
    mc_seed = int(config.get("mc_seed", 0))
    cache_dir = config.get("cache_dir")
    cache_dir = Path(cache_dir) if cache_dir else None

    start = time.time()
    report = Report(
        experiment="moments",
        columns=["method", "dimension", "exponent", "kl", "mean", "variance", "error"],
        metadata=_metadata(config),
    )
    for n in dims:
        rules = {}
        for method in methods:
            try:
                rules[method["name"]] = build_rule(method, n)
            except (ConfigError, np.linalg.LinAlgError, ValueError, RuntimeError) as exc:
                rules[method["name"]] = exc
        for exponent in exponents:
            truth_mean, truth_var = moments_ground_truth(
                n, exponent, samples, mc_seed, cache_dir)
            truth = GaussianState(np.array([truth_mean]),
                                  np.array([[truth_var]]))
            y_fn, y2_fn = moment_integrand(exponent)
            for method in methods:
                name = method["name"]
                rule = rules[name]
                if isinstance(rule, Exception):
                    report.rows.append([name, n, exponent, "", "", "", str(rule)])
                    continue
                pts = rule.points.points  # m = 0, P = I: sigma points = unit points
                est_mean = float(rule.weights @ y_fn(pts))
                est_var = float(rule.weights @ y2_fn(pts)) - est_mean**2
                if not np.isfinite(est_var) or est_var <= 0.0:
                    report.rows.append([
                        name, n, exponent, "", est_mean, est_var,
                        "non-positive variance estimate",
                    ])
                    continue
                divergence = kl_gauss(
                    GaussianState(np.array([est_mean]), np.array([[est_var]])),
                    truth)
                report.rows.append([name, n, exponent, divergence,
                                    est_mean, est_var, ""])
    report.metadata["wall_time_s"] = time.time() - start
    report.metadata["kl_direction"] = "KL(estimate || truth)"
    report.metadata["ground_truth"] = {
        "mc_samples": samples, "mc_seed": mc_seed,
        "reduction": "radial chi-squared",
    }
    return report


# ---------------------------------------------------------------------------
# filtering studies


def _rmse(estimates: np.ndarray, truth: np.ndarray, components) -> float:
    diff = estimates[:, components] - truth[:, components]
    return float(np.sqrt(np.mean(np.sum(diff**2, axis=1))))


def _filtering_study(experiment: str, config: dict, model,
                     components, default_steps: int = 500) -> Report:
    methods = _validated_methods(config)
    seeds = _validated_seeds(config)
    steps = int(config.get("steps", default_steps))
    n = model.state_dim

    start = time.time()
    report = Report(
        experiment=experiment,
        columns=["method", "filter_rmse_mean", "filter_rmse_std",
                 "smoother_rmse_mean", "smoother_rmse_std", "error"],
        metadata=_metadata(config),
    )
    trajectories = [simulate(model, steps, seed) for seed in seeds]
    for method in methods:
        name = method["name"]
        try:
            rule = build_rule(method, n)
            filter_rmses, smoother_rmses = [], []
            for trajectory in trajectories:
                out = run_filter(model, rule, trajectory.measurements)
                truth = trajectory.states[1:]
                filter_rmses.append(_rmse(out.filtered_means, truth, components))
                smoothed_means, _ = run_smoother(model, rule, out)
                smoother_rmses.append(_rmse(smoothed_means, truth, components))
            report.rows.append([
                name,
                float(np.mean(filter_rmses)), float(np.std(filter_rmses)),
                float(np.mean(smoother_rmses)), float(np.std(smoother_rmses)),
                "",
            ])
        except (ConfigError, np.linalg.LinAlgError, ValueError,
                RuntimeError, FloatingPointError) as exc:
            report.rows.append([name, "", "", "", "", str(exc)])
    report.metadata["wall_time_s"] = time.time() - start
    report.metadata["seeds"] = seeds
    report.metadata["steps"] = steps
    return report


def run_ungm(config: dict) -> Report:
    """Filter/smoother state RMSE study on the univariate growth model."""
    return _filtering_study("ungm", config, ungm_model(), components=[0])


def run_bot(config: dict) -> Report:
    """Position RMSE study on bearings-only coordinated-turn tracking."""
    bot_cfg = _bot_config(config.get("model", {}))
    return _filtering_study("bot", config, bot_model(bot_cfg),
                            components=[0, 2], default_steps=bot_cfg.steps)


def _bot_config(spec: dict) -> BotConfig:
    if not isinstance(spec, dict):
        raise ConfigError("config: 'model' must be an object")
    kwargs = {}
    if "sensors" in spec:
        kwargs["sensors"] = np.asarray(spec["sensors"], dtype=float)
    for key in ("bearing_noise_std", "dt", "q1", "q2"):
        if key in spec:
            kwargs[key] = float(spec[key])
    if "prior_mean" in spec:
        kwargs["prior_mean"] = np.asarray(spec["prior_mean"], dtype=float)
    if "prior_cov" in spec:
        kwargs["prior_cov"] = np.asarray(spec["prior_cov"], dtype=float)
    try:
        return BotConfig(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"config: invalid bearings-only model: {exc}") from exc


def _metadata(config: dict) -> dict:
    return {"config": config, "version": __version__}
