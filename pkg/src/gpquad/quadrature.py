"""Gaussian process quadrature: weights, posterior variance, transform.

A rule is built by conditioning a zero-mean GP with covariance K on
function evaluations at unit sigma-points and integrating the posterior
mean against N(0, I).  The weights solve (K + sigma^2 I) W = q with
K_ij = K(xi_i, xi_j) and q_i the kernel mean embedding at xi_i; the
posterior variance of the integral is the double Gaussian integral of K
minus q^T W.  Weights may be negative; the variance is zero exactly when
the points resolve the kernel's function class, which is how the
classical unscented / cubature / Gauss-Hermite weights drop out.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .points import UnitPointSet

__all__ = [
    "QuadratureRule",
    "TransformResult",
    "MatrixSqrtResult",
    "gpq_weights",
    "gpq_variance",
    "apply_rule",
    "gp_transform",
    "matrix_sqrt",
    "gp_regression_mean",
]

# below this Gram-increment magnitude the kernel is treated as nearly
# constant over the point set and the solve deflates the ones-direction
FLAT_INCREMENT_THRESHOLD = 0.1

VARIANCE_CLAMP = 1e-9


@dataclass(frozen=True)
class QuadratureRule:
    """Unit sigma-points with integration weights.

    ``posterior_variance`` is the GP-model variance of the integral
    estimate (None for classical rules wrapped via ``from_classical``); it
    is shared across output components since the kernel is.
    """

    points: UnitPointSet
    weights: np.ndarray
    jitter: float = 0.0
    posterior_variance: float | None = None

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.shape != (self.points.count,):
            raise ValueError("one weight per point required")
        if not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite")
        if self.jitter < 0:
            raise ValueError("jitter must be >= 0")
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_classical(cls, rule) -> "QuadratureRule":
        """Wrap a ClassicalRule (points + weights) unchanged."""
        return cls(points=rule.points, weights=np.asarray(rule.weights, dtype=float))


class TransformResult(NamedTuple):
    """Moment-matched Gaussian approximation of y = g(x) + q."""

    mean: np.ndarray        # (d,)
    cov: np.ndarray         # (d, d), includes the additive noise covariance
    cross_cov: np.ndarray   # (n, d), input-output cross covariance


class MatrixSqrtResult(NamedTuple):
    factor: np.ndarray
    spd_fallback: bool


def matrix_sqrt(cov: np.ndarray) -> MatrixSqrtResult:
    """Lower-triangular Cholesky factor of a symmetric PSD matrix.

    Falls back to a symmetric eigendecomposition square root (negative
    eigenvalues clipped to zero) when Cholesky fails on a near-singular
    input; the fallback is reported through ``spd_fallback``.
    """
    cov = np.asarray(cov, dtype=float)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {cov.shape}")
    scale = max(np.abs(cov).max(), 1.0)
    if np.abs(cov - cov.T).max() > 1e-9 * scale:
        raise ValueError("matrix is asymmetric beyond 1e-9 relative tolerance")
    try:
        return MatrixSqrtResult(np.linalg.cholesky(cov), False)
    except np.linalg.LinAlgError:
        eigvals, eigvecs = np.linalg.eigh(0.5 * (cov + cov.T))
        norm = np.abs(eigvals).max()
        if eigvals.min() < -1e-10 * max(norm, 1.0):
            raise ValueError(
                f"matrix is not PSD: smallest eigenvalue {eigvals.min():.3e}"
            ) from None
        root = eigvecs @ np.diag(np.sqrt(np.clip(eigvals, 0.0, None))) @ eigvecs.T
        return MatrixSqrtResult(root, True)


def _cho_solve_spd(matrix: np.ndarray, rhs: np.ndarray, context: str) -> np.ndarray:
    try:
        factor = cho_factor(matrix, lower=True)
    except np.linalg.LinAlgError as exc:
        eigmin = np.linalg.eigvalsh(matrix).min()
        raise np.linalg.LinAlgError(
            f"{context}: matrix numerically singular (min eigenvalue {eigmin:.3e}); "
            "raise the jitter to regularize"
        ) from exc
    return cho_solve(factor, rhs)


def _flat_deflated_solve(gram_inc, emb_scale, emb_inc, output_scale2):
    """Solve (J + E) W = c (1 + delta) with the ones-direction eliminated.

    J = 11^T swamps E by up to sixteen decades when the kernel is almost
    flat; splitting W over span{1} and its orthogonal complement keeps the
    meaningful part of the system at the scale of E, which arrives with
    full relative precision.  The reduced Schur block is SPD and solved by
    Cholesky.  Returns (weights, q_dot_w).
    """
    n_pts = gram_inc.shape[0]
    # Householder basis: column 0 is 1/sqrt(N), the rest span its complement
    u = np.full(n_pts, 1.0 / np.sqrt(n_pts))
    v = -u
    v[0] += 1.0
    basis = np.eye(n_pts) - 2.0 * np.outer(v, v) / (v @ v)
    complement = basis[:, 1:]

    e_u = gram_inc @ u
    pivot = n_pts + u @ e_u
    coupling = complement.T @ e_u
    reduced = complement.T @ gram_inc @ complement
    schur = reduced - np.outer(coupling, coupling) / pivot

    rhs_scale = emb_scale  # the s^2 factor cancels between K and q
    b_u = rhs_scale * (np.sqrt(n_pts) + u @ emb_inc)
    b_c = rhs_scale * (complement.T @ emb_inc)
    beta = _cho_solve_spd(schur, b_c - coupling * (b_u / pivot),
                          "deflated weight system")
    alpha = (b_u - coupling @ beta) / pivot
    weights = u * alpha + complement @ beta
    q = output_scale2 * rhs_scale * (1.0 + emb_inc)
    return weights, float(q @ weights)


def _solve_weight_system(kernel, points: UnitPointSet, jitter: float):
    """Weights plus cached q^T W for the variance. Returns (W, qtw)."""
    pts = points.points
    if jitter == 0.0 and points.count > 1:
        increments = kernel.flat_increments(pts)
        if increments is not None:
            gram_inc, emb_scale, emb_inc = increments
            if np.abs(gram_inc).max() < FLAT_INCREMENT_THRESHOLD:
                s2 = kernel.eval(pts[:1], pts[:1])[0, 0]  # diagonal value s^2
                return _flat_deflated_solve(gram_inc, emb_scale, emb_inc, s2)
    gram = kernel.gram(pts)
    if jitter > 0.0:
        gram = gram + jitter * np.eye(points.count)
    q = kernel.mean_embedding(pts)
    weights = _cho_solve_spd(gram, q, "quadrature weight system")
    return weights, float(q @ weights)


def _clamped_variance(kernel, points: UnitPointSet, q_dot_w: float) -> float:
    variance = kernel.double_integral(points.dimension) - q_dot_w
    if variance < -VARIANCE_CLAMP:
        raise np.linalg.LinAlgError(
            f"posterior variance {variance:.3e} below the -1e-9 clamp; "
            "the weight system is numerically unreliable, raise the jitter"
        )
    return max(variance, 0.0)


def gpq_weights(kernel, points: UnitPointSet, jitter: float = 0.0) -> QuadratureRule:
    """Build the quadrature rule for a kernel over a unit point set.

    Solves (K + jitter I) W = q by symmetric positive-definite
    factorization; the posterior variance is computed once and cached on
    the rule.  A singular system at zero jitter raises with the offending
    conditioning rather than regularizing silently.
    """
    weights, q_dot_w = _solve_weight_system(kernel, points, jitter)
    return QuadratureRule(
        points=points,
        weights=weights,
        jitter=jitter,
        posterior_variance=_clamped_variance(kernel, points, q_dot_w),
    )


def gpq_variance(kernel, points: UnitPointSet, jitter: float = 0.0) -> float:
    """Posterior variance of the integral estimate for a point set."""
    _, q_dot_w = _solve_weight_system(kernel, points, jitter)
    return _clamped_variance(kernel, points, q_dot_w)


def _evaluate_at_sigma_points(g: Callable, sigma_pts: np.ndarray) -> np.ndarray:
    values = []
    for row in sigma_pts:
        val = np.atleast_1d(np.asarray(g(row), dtype=float))
        if not np.all(np.isfinite(val)):
            raise ValueError(f"integrand returned non-finite value at sigma-point {row}")
        values.append(val)
    return np.array(values)


def apply_rule(rule: QuadratureRule, g: Callable, mean, cov) -> np.ndarray:
    """Approximate integral g(x) N(x | mean, cov) dx as sum W_i g(x_i)."""
    mean = np.atleast_1d(np.asarray(mean, dtype=float))
    root = matrix_sqrt(np.atleast_2d(np.asarray(cov, dtype=float))).factor
    sigma_pts = mean[None, :] + rule.points.points @ root.T
    values = _evaluate_at_sigma_points(g, sigma_pts)
    return rule.weights @ values


def gp_transform(rule: QuadratureRule, g: Callable, mean, cov,
                 noise_cov) -> TransformResult:
    """Moment-matched Gaussian approximation of y = g(x) + q.

    x ~ N(mean, cov), q ~ N(0, noise_cov); returns the output mean, the
    output covariance (noise included) and the input-output cross
    covariance, each a weighted sigma-point sum.
    """
    mean = np.atleast_1d(np.asarray(mean, dtype=float))
    cov = np.atleast_2d(np.asarray(cov, dtype=float))
    root = matrix_sqrt(cov).factor
    sigma_pts = mean[None, :] + rule.points.points @ root.T
    values = _evaluate_at_sigma_points(g, sigma_pts)
    return _match_moments(rule.weights, sigma_pts, mean, values, noise_cov)


def _match_moments(weights, sigma_pts, mean, values, noise_cov) -> TransformResult:
    # shared by gp_transform and the filtering steps; values is (N, d)
    noise_cov = np.atleast_2d(np.asarray(noise_cov, dtype=float))
    out_mean = weights @ values
    dev = values - out_mean
    out_cov = (weights[:, None] * dev).T @ dev + noise_cov
    out_cov = 0.5 * (out_cov + out_cov.T)
    cross = (weights[:, None] * (sigma_pts - mean)).T @ dev
    return TransformResult(out_mean, out_cov, cross)


def gp_regression_mean(kernel, train_points, observations,
                       jitter: float, query) -> float:
    """GP posterior mean k(x*)^T (K + jitter I)^{-1} o at a query point."""
    train = np.atleast_2d(np.asarray(train_points, dtype=float))
    obs = np.asarray(observations, dtype=float)
    if obs.shape != (train.shape[0],):
        raise ValueError("one observation per training point required")
    gram = kernel.gram(train)
    if jitter > 0.0:
        gram = gram + jitter * np.eye(train.shape[0])
    coeffs = _cho_solve_spd(gram, obs, "regression system")
    cross = kernel.eval(np.atleast_2d(np.asarray(query, dtype=float)), train)
    return float((cross @ coeffs)[0])
