"""Sigma-point Gaussian filter and RTS smoother, generic over the rule.

Any ``QuadratureRule`` drives the recursions: classical unscented,
cubature or Gauss-Hermite weights give the familiar UKF/CKF/GHKF and
their smoothers, GP-quadrature weights give the GP-quadrature filter and
smoother.  The unit sigma-points and weights are fixed once per run; the
points are re-centered through m + sqrt(P) xi at every prediction,
update and smoothing step.

Model functions are vectorized over the leading axis: ``f(X, k)`` maps an
(N, n) batch of states at destination index k to (N, n), ``h(X, k)`` maps
(N, n) to (N, d).  Noise covariances may be constant matrices or
callables of the time index.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .quadrature import QuadratureRule, _match_moments, matrix_sqrt

__all__ = [
    "GaussianState",
    "AdditiveStateSpaceModel",
    "FilterOutput",
    "predict",
    "update",
    "run_filter",
    "run_smoother",
]


@dataclass(frozen=True)
class GaussianState:
    """Mean vector and symmetric PSD covariance."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        cov = np.atleast_2d(np.asarray(self.cov, dtype=float))
        n = mean.shape[0]
        if cov.shape != (n, n):
            raise ValueError(f"covariance shape {cov.shape} does not match mean of length {n}")
        scale = max(np.abs(cov).max(), 1.0)
        if np.abs(cov - cov.T).max() > 1e-10 * scale:
            raise ValueError("covariance asymmetric beyond 1e-10 relative tolerance")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def dimension(self) -> int:
        return self.mean.shape[0]


def _as_cov_fn(cov) -> Callable[[int], np.ndarray]:
    if callable(cov):
        return lambda k: np.atleast_2d(np.asarray(cov(k), dtype=float))
    fixed = np.atleast_2d(np.asarray(cov, dtype=float))
    return lambda k: fixed


@dataclass(frozen=True)
class AdditiveStateSpaceModel:
    """x_k = f(x_{k-1}, k) + q_{k-1},  y_k = h(x_k, k) + r_k.

    ``transition`` and ``measurement`` are vectorized over an (N, n)
    batch; ``process_cov`` / ``measurement_cov`` are (n, n) / (d, d)
    matrices or callables of k.  The time index passed to the transition
    is the destination index (x_k receives k).
    """

    transition: Callable[[np.ndarray, int], np.ndarray]
    measurement: Callable[[np.ndarray, int], np.ndarray]
    process_cov: object
    measurement_cov: object
    prior: GaussianState
    state_dim: int
    measurement_dim: int

    def q_cov(self, k: int) -> np.ndarray:
        return _as_cov_fn(self.process_cov)(k)

    def r_cov(self, k: int) -> np.ndarray:
        return _as_cov_fn(self.measurement_cov)(k)


@dataclass(frozen=True)
class FilterOutput:
    """Per-step filter quantities, index k = 1..T at array position k-1."""

    predicted_means: np.ndarray      # (T, n)
    predicted_covs: np.ndarray       # (T, n, n)
    filtered_means: np.ndarray       # (T, n)
    filtered_covs: np.ndarray        # (T, n, n)
    innovation_means: np.ndarray     # (T, d)
    innovation_covs: np.ndarray      # (T, d, d)

    def __len__(self) -> int:
        return self.filtered_means.shape[0]


def _propagate(state: GaussianState, rule: QuadratureRule, fn, k: int):
    root = matrix_sqrt(state.cov).factor
    sigma_pts = state.mean[None, :] + rule.points.points @ root.T
    values = np.atleast_2d(np.asarray(fn(sigma_pts, k), dtype=float))
    if not np.all(np.isfinite(values)):
        raise ValueError(f"model function returned non-finite values at step {k}")
    return sigma_pts, values


def predict(state: GaussianState, rule: QuadratureRule, transition,
            process_cov, k: int = 0) -> GaussianState:
    """One prediction step: moment-match f(x) + q through the rule."""
    sigma_pts, propagated = _propagate(state, rule, transition, k)
    moments = _match_moments(rule.weights, sigma_pts, state.mean, propagated,
                             process_cov)
    return GaussianState(moments.mean, moments.cov)


def update(pred: GaussianState, rule: QuadratureRule, measurement,
           measurement_cov, observation, k: int = 0):
    """One measurement update.

    Returns (filtered state, innovation mean, innovation covariance,
    cross covariance, gain).  The gain solves K S = C through an SPD
    factorization of S.
    """
    observation = np.atleast_1d(np.asarray(observation, dtype=float))
    sigma_pts, projected = _propagate(pred, rule, measurement, k)
    moments = _match_moments(rule.weights, sigma_pts, pred.mean, projected,
                             measurement_cov)
    innovation_mean, innovation_cov, cross = moments
    try:
        factor = cho_factor(innovation_cov, lower=True)
    except np.linalg.LinAlgError as exc:
        eigmin = np.linalg.eigvalsh(innovation_cov).min()
        raise np.linalg.LinAlgError(
            f"innovation covariance not positive definite at step {k} "
            f"(min eigenvalue {eigmin:.3e})"
        ) from exc
    gain = cho_solve(factor, cross.T).T
    mean = pred.mean + gain @ (observation - innovation_mean)
    cov = pred.cov - gain @ innovation_cov @ gain.T
    cov = 0.5 * (cov + cov.T)
    return GaussianState(mean, cov), innovation_mean, innovation_cov, cross, gain


def run_filter(model: AdditiveStateSpaceModel, rule: QuadratureRule,
               observations) -> FilterOutput:
    """Fold predict/update over a measurement sequence from the prior.

    ``observations`` is (T, d); a length-T vector is accepted for scalar
    measurements.
    """
    observations = np.asarray(observations, dtype=float)
    if observations.ndim == 1 and model.measurement_dim == 1:
        observations = observations[:, None]
    observations = np.atleast_2d(observations)
    if observations.size == 0:
        observations = observations.reshape(0, model.measurement_dim)
    if observations.shape[1] != model.measurement_dim:
        raise ValueError(
            f"observations of dimension {observations.shape[1]}, "
            f"model expects {model.measurement_dim}"
        )
    steps = observations.shape[0]
    n, d = model.state_dim, model.measurement_dim
    out = FilterOutput(
        predicted_means=np.empty((steps, n)),
        predicted_covs=np.empty((steps, n, n)),
        filtered_means=np.empty((steps, n)),
        filtered_covs=np.empty((steps, n, n)),
        innovation_means=np.empty((steps, d)),
        innovation_covs=np.empty((steps, d, d)),
    )
    state = model.prior
    for k in range(1, steps + 1):
        try:
            pred = predict(state, rule, model.transition, model.q_cov(k), k)
            state, mu, s_cov, _, _ = update(
                pred, rule, model.measurement, model.r_cov(k),
                observations[k - 1], k,
            )
        except (ValueError, np.linalg.LinAlgError) as exc:
            raise type(exc)(f"filter failed at time index {k}: {exc}") from exc
        out.predicted_means[k - 1] = pred.mean
        out.predicted_covs[k - 1] = pred.cov
        out.filtered_means[k - 1] = state.mean
        out.filtered_covs[k - 1] = state.cov
        out.innovation_means[k - 1] = mu
        out.innovation_covs[k - 1] = s_cov
    return out


def run_smoother(model: AdditiveStateSpaceModel, rule: QuadratureRule,
                 filter_out: FilterOutput) -> tuple[np.ndarray, np.ndarray]:
    """Backward RTS pass over a filter output.

    Re-forms the sigma points at every filtered state, recomputes the
    one-step prediction moments and the filtered-predicted cross
    covariance, and runs the gain recursion from the last filtered state
    (which the smoother leaves untouched).  Returns (means, covs) arrays
    of the same length as the filter output.
    """
    steps = len(filter_out)
    means = filter_out.filtered_means.copy()
    covs = filter_out.filtered_covs.copy()
    for k in range(steps - 1, 0, -1):
        # arrays are 0-based: position k-1 holds time index k
        state = GaussianState(filter_out.filtered_means[k - 1],
                              filter_out.filtered_covs[k - 1])
        sigma_pts, propagated = _propagate(state, rule, model.transition, k + 1)
        pred_mean, pred_cov, cross = _match_moments(
            rule.weights, sigma_pts, state.mean, propagated,
            model.q_cov(k + 1),
        )
        try:
            factor = cho_factor(pred_cov, lower=True)
        except np.linalg.LinAlgError as exc:
            raise np.linalg.LinAlgError(
                f"smoother predicted covariance not positive definite at "
                f"time index {k}"
            ) from exc
        gain = cho_solve(factor, cross.T).T
        means[k - 1] = state.mean + gain @ (means[k] - pred_mean)
        smoothed_cov = state.cov + gain @ (covs[k] - pred_cov) @ gain.T
        covs[k - 1] = 0.5 * (smoothed_cov + smoothed_cov.T)
    return means, covs
