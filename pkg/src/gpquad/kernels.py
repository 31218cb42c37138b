"""Covariance functions with closed-form Gaussian integrals.

Two families are supported on the standardized N(0, I) domain:

* ``SquaredExponentialKernel`` -- s^2 exp(-||x - x'||^2 / (2 l^2)), whose
  mean embedding and double Gaussian integral are closed-form.
* ``HermitePolynomialKernel`` -- a finite Hermite expansion
  sum_{I,J} lambda_{I,J} / (I! J!) H_I(x) H_J(x') over a fixed index set
  with a symmetric PSD coefficient matrix.  By orthogonality its Gaussian
  integrals reduce to the zero-index row/entry of the coefficients.

Both expose ``eval`` / ``gram`` / ``mean_embedding`` / ``double_integral``,
the three quantities the quadrature weight and variance formulas consume.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .hermite import MultiIndex, enumerate_indices, hermite_design_matrix

__all__ = [
    "SquaredExponentialKernel",
    "HermitePolynomialKernel",
    "make_ut_kernel",
    "make_gh_kernel",
]

MAX_GH_KERNEL_TERMS = 20_000


def _as_points(x, dim: int | None = None) -> np.ndarray:
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    if dim is not None and pts.shape[1] != dim:
        raise ValueError(f"points of dimension {pts.shape[1]}, kernel expects {dim}")
    return pts


@dataclass(frozen=True)
class SquaredExponentialKernel:
    """Squared exponential (exponentiated quadratic) covariance function."""

    output_scale: float = 1.0   # s
    length_scale: float = 1.0   # l

    def __post_init__(self):
        if self.output_scale <= 0 or self.length_scale <= 0:
            raise ValueError("output_scale and length_scale must be positive")

    def eval(self, x, y) -> np.ndarray:
        """Pairwise kernel matrix between two point batches."""
        x = _as_points(x)
        y = _as_points(y, x.shape[1])
        d2 = ((x[:, None, :] - y[None, :, :]) ** 2).sum(axis=-1)
        return self.output_scale**2 * np.exp(-d2 / (2.0 * self.length_scale**2))

    def gram(self, points) -> np.ndarray:
        return self.eval(points, points)

    def mean_embedding(self, points) -> np.ndarray:
        """integral K(x, x_i) N(x | 0, I) dx for each point x_i."""
        pts = _as_points(points)
        n = pts.shape[1]
        l2 = self.length_scale**2
        scale = self.output_scale**2 * (l2 / (1.0 + l2)) ** (n / 2.0)
        return scale * np.exp(-(pts**2).sum(axis=1) / (2.0 * (1.0 + l2)))

    def double_integral(self, n: int) -> float:
        """double integral K(x, x') N(x|0,I) N(x'|0,I) dx dx'."""
        l2 = self.length_scale**2
        return self.output_scale**2 * (l2 / (l2 + 2.0)) ** (n / 2.0)

    def flat_increments(self, points):
        """Exact increments of the nearly-flat weight system.

        Writes the Gram matrix as ``s^2 (11^T + E)`` and the embedding as
        ``s^2 c (1 + delta)`` with E and delta computed through ``expm1``,
        so their tiny magnitudes keep full relative precision.  Used by the
        weight solver when the kernel is almost constant over the point
        set (large length scales), where the plain Gram matrix is
        numerically singular.

        Returns
        -------
        (E, c, delta) with E an (N, N) ndarray, c a float, delta (N,).
        """
        pts = _as_points(points)
        n = pts.shape[1]
        l2 = self.length_scale**2
        d2 = ((pts[:, None, :] - pts[None, :, :]) ** 2).sum(axis=-1)
        gram_inc = np.expm1(-d2 / (2.0 * l2))
        rho = (pts**2).sum(axis=1)
        rho0 = rho.mean()
        emb_inc = np.expm1(-(rho - rho0) / (2.0 * (1.0 + l2)))
        emb_scale = (l2 / (1.0 + l2)) ** (n / 2.0) * np.exp(-rho0 / (2.0 * (1.0 + l2)))
        return gram_inc, emb_scale, emb_inc


@dataclass(frozen=True)
class HermitePolynomialKernel:
    """Finite Hermite-expansion covariance function.

    ``coefficients`` is the symmetric PSD matrix indexed by ``index_set``
    (graded-lex order); identity reproduces the classical rules.
    """

    index_set: tuple[MultiIndex, ...]
    coefficients: np.ndarray | None = field(default=None)

    def __post_init__(self):
        index_set = tuple(self.index_set)
        if not index_set:
            raise ValueError("index set must be non-empty")
        dim = len(index_set[0])
        if any(len(ix) != dim for ix in index_set):
            raise ValueError("all multi-indices must share one dimension")
        if len(set(ix.exponents for ix in index_set)) != len(index_set):
            raise ValueError("index set contains duplicates")
        m = len(index_set)
        coeff = self.coefficients
        coeff = np.eye(m) if coeff is None else np.asarray(coeff, dtype=float)
        if coeff.shape != (m, m):
            raise ValueError(f"coefficient matrix must be {m}x{m}, got {coeff.shape}")
        if not np.allclose(coeff, coeff.T, atol=1e-12):
            raise ValueError("coefficient matrix must be symmetric")
        object.__setattr__(self, "index_set", index_set)
        object.__setattr__(self, "coefficients", coeff)

    @property
    def dimension(self) -> int:
        return len(self.index_set[0])

    def _features(self, points) -> np.ndarray:
        # phi_I(x) = H_I(x) / I!
        pts = _as_points(points, self.dimension)
        design = hermite_design_matrix(self.index_set, pts)
        inv_fact = np.array([1.0 / ix.factorial() for ix in self.index_set])
        return design * inv_fact

    def eval(self, x, y) -> np.ndarray:
        fx = self._features(x)
        fy = self._features(y)
        return fx @ self.coefficients @ fy.T

    def gram(self, points) -> np.ndarray:
        f = self._features(points)
        gram = f @ self.coefficients @ f.T
        return 0.5 * (gram + gram.T)

    def mean_embedding(self, points) -> np.ndarray:
        # integrating H_I against N(0, I) kills every row except I = 0
        zero = MultiIndex((0,) * self.dimension)
        row = self.index_set.index(zero)
        return self._features(points) @ self.coefficients[row]

    def double_integral(self, n: int | None = None) -> float:
        if n is not None and n != self.dimension:
            raise ValueError(f"kernel built for dimension {self.dimension}, got {n}")
        zero = MultiIndex((0,) * self.dimension)
        row = self.index_set.index(zero)
        return float(self.coefficients[row, row])

    def flat_increments(self, points):
        return None


def make_ut_kernel(n: int, order: int = 3) -> HermitePolynomialKernel:
    """Hermite kernel whose zero-variance point sets are the symmetric rules.

    Spans all multivariate Hermite polynomials of total degree <= order
    with identity coefficients; with order 3 the quadrature weights on the
    2n+1 canonical unscented points reduce to the unscented-transform
    weights, and higher odd orders correspond to the 5th/7th/9th-order
    symmetric rules.
    """
    if order not in (3, 5, 7, 9):
        raise ValueError(f"supported orders are 3, 5, 7, 9; got {order}")
    return HermitePolynomialKernel(tuple(enumerate_indices(n, total_degree=order)))


def make_gh_kernel(n: int, order: int) -> HermitePolynomialKernel:
    """Hermite kernel matched to the order-P Gauss-Hermite tensor rule.

    Spans per-dimension degrees <= 2P-1, i.e. (2P)^n terms, with identity
    coefficients; the quadrature weights on the P^n tensor grid reduce to
    the classical Gauss-Hermite product weights.
    """
    if order < 1:
        raise ValueError(f"order must be >= 1, got {order}")
    terms = (2 * order) ** n
    if terms > MAX_GH_KERNEL_TERMS:
        raise ValueError(
            f"index set of size {terms} exceeds cap {MAX_GH_KERNEL_TERMS}; "
            "reduce the order or dimension"
        )
    return HermitePolynomialKernel(
        tuple(enumerate_indices(n, per_dim_degree=2 * order - 1))
    )
