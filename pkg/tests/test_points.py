import math
from itertools import product

import numpy as np
import pytest
from scipy.special import erf, ndtri

from gpquad.hermite import enumerate_indices
from gpquad.kernels import SquaredExponentialKernel
from gpquad.points import (
    OptimizerSettings,
    UnitPointSet,
    cubature_points,
    gauss_hermite_points,
    hammersley_points,
    optimize_points,
    radical_inverse,
    random_points,
    symmetric5_points,
    ut_points,
)
from gpquad.quadrature import gpq_variance


def gaussian_monomial_moment(exponents) -> float:
    out = 1.0
    for a in exponents:
        if a % 2 == 1:
            return 0.0
        out *= math.prod(range(a - 1, 0, -2)) if a else 1.0
    return out


def rule_monomial(rule, exponents) -> float:
    pts = rule.points.points
    vals = np.prod(pts ** np.asarray(exponents), axis=1)
    return float(rule.weights @ vals)


class TestUnscentedPoints:
    def test_canonical_n2(self):
        rule = ut_points(2, 1.0)
        r = np.sqrt(3)
        expected = np.array([[0, 0], [r, 0], [0, r], [-r, 0], [0, -r]], dtype=float)
        np.testing.assert_allclose(rule.points.points, expected)
        np.testing.assert_allclose(rule.weights, [1 / 3, 1 / 6, 1 / 6, 1 / 6, 1 / 6])

    def test_weights_n1_kappa2(self):
        # W0 = kappa/(n+kappa) = 2/3, others 1/(2(n+kappa)) = 1/6
        rule = ut_points(1, 2.0)
        np.testing.assert_allclose(rule.weights, [2 / 3, 1 / 6, 1 / 6])

    def test_weights_n1_kappa1(self):
        rule = ut_points(1, 1.0)
        np.testing.assert_allclose(rule.weights, [1 / 2, 1 / 4, 1 / 4])

    def test_zero_kappa_n3(self):
        rule = ut_points(3, 0.0)
        assert rule.weights[0] == 0.0
        radii = np.linalg.norm(rule.points.points[1:], axis=1)
        np.testing.assert_allclose(radii, np.sqrt(3))

    def test_invalid_kappa(self):
        with pytest.raises(ValueError):
            ut_points(2, -2.0)

    def test_weights_sum_to_one(self):
        for n, kappa in product((1, 2, 3), (0.5, 1.0, 2.0)):
            assert ut_points(n, kappa).weights.sum() == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("n", [1, 2, 3])
    @pytest.mark.parametrize("kappa", [0.5, 1.0, 2.0])
    def test_degree_three_exactness(self, n, kappa):
        rule = ut_points(n, kappa)
        for ix in enumerate_indices(n, total_degree=3):
            got = rule_monomial(rule, ix.exponents)
            assert got == pytest.approx(
                gaussian_monomial_moment(ix.exponents), abs=1e-12)

    def test_sign_flip_closure(self):
        pts = ut_points(3, 1.0).points.points
        rows = {tuple(r) for r in pts.round(12)}
        for row in pts:
            if np.any(row):
                assert tuple((-row).round(12)) in rows


class TestCubaturePoints:
    def test_n1(self):
        rule = cubature_points(1)
        np.testing.assert_allclose(sorted(rule.points.points[:, 0]), [-1, 1])
        np.testing.assert_allclose(rule.weights, [0.5, 0.5])

    def test_n2(self):
        rule = cubature_points(2)
        np.testing.assert_allclose(np.linalg.norm(rule.points.points, axis=1),
                                   np.sqrt(2))
        np.testing.assert_allclose(rule.weights, 0.25)

    def test_second_moment(self):
        assert rule_monomial(cubature_points(2), (2, 0)) == pytest.approx(1.0)

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_degree_three_exactness_and_fourth_moment_bias(self, n):
        rule = cubature_points(n)
        for ix in enumerate_indices(n, total_degree=3):
            got = rule_monomial(rule, ix.exponents)
            assert got == pytest.approx(
                gaussian_monomial_moment(ix.exponents), abs=1e-12)
        # the known 3rd-order bias: rule gives E[x_i^4] = n instead of 3
        assert rule_monomial(rule, (4,) + (0,) * (n - 1)) == pytest.approx(float(n))

    def test_sign_flip_closure(self):
        pts = cubature_points(2).points.points
        rows = {tuple(r) for r in pts.round(12)}
        for row in pts:
            assert tuple((-row).round(12)) in rows


class TestSymmetric5Points:
    def test_counts(self):
        assert symmetric5_points(2).points.count == 9
        assert symmetric5_points(3).points.count == 19

    def test_fourth_moment(self):
        assert rule_monomial(symmetric5_points(2), (4, 0)) == pytest.approx(3.0)

    def test_mixed_moment(self):
        assert rule_monomial(symmetric5_points(2), (2, 2)) == pytest.approx(1.0)

    def test_rejects_n1(self):
        with pytest.raises(ValueError):
            symmetric5_points(1)

    @pytest.mark.parametrize("n", [2, 3])
    def test_degree_five_exactness(self, n):
        rule = symmetric5_points(n)
        for ix in enumerate_indices(n, total_degree=5):
            got = rule_monomial(rule, ix.exponents)
            assert got == pytest.approx(
                gaussian_monomial_moment(ix.exponents), abs=1e-10)

    def test_weights_sum_to_one(self):
        assert symmetric5_points(3).weights.sum() == pytest.approx(1.0, abs=1e-12)


class TestGaussHermitePoints:
    def test_n1_order3(self):
        rule = gauss_hermite_points(1, 3)
        np.testing.assert_allclose(rule.points.points[:, 0],
                                   [-np.sqrt(3), 0, np.sqrt(3)], atol=1e-14)
        np.testing.assert_allclose(rule.weights, [1 / 6, 2 / 3, 1 / 6], atol=1e-14)

    def test_n2_order3_center_weight(self):
        rule = gauss_hermite_points(2, 3)
        assert rule.points.count == 9
        center = np.flatnonzero(~rule.points.points.any(axis=1))
        assert rule.weights[center[0]] == pytest.approx(4 / 9)

    def test_n2_order2(self):
        rule = gauss_hermite_points(2, 2)
        assert rule.points.count == 4
        np.testing.assert_allclose(np.abs(rule.points.points), 1.0, atol=1e-14)
        np.testing.assert_allclose(rule.weights, 0.25, atol=1e-14)

    def test_cap(self):
        with pytest.raises(ValueError, match="cap"):
            gauss_hermite_points(10, 50)

    @pytest.mark.parametrize("n,order", [(1, 2), (1, 4), (2, 2), (2, 3), (2, 4)])
    def test_per_dimension_exactness(self, n, order):
        rule = gauss_hermite_points(n, order)
        for ix in enumerate_indices(n, per_dim_degree=2 * order - 1):
            got = rule_monomial(rule, ix.exponents)
            assert got == pytest.approx(
                gaussian_monomial_moment(ix.exponents), abs=1e-9)


class TestHammersleyPoints:
    def test_n1_two_points(self):
        pts = hammersley_points(1, 2).points
        np.testing.assert_allclose(pts[:, 0], [-0.6744897501960817, 0.6744897501960817],
                                   atol=1e-9)

    def test_van_der_corput_second_coordinate(self):
        assert [radical_inverse(i, 2) for i in range(4)] == [0.0, 0.5, 0.25, 0.75]
        pts = hammersley_points(2, 4).points
        clamped = np.clip([0.0, 0.5, 0.25, 0.75], 1e-12, 1 - 1e-12)
        np.testing.assert_allclose(pts[:, 1], ndtri(clamped), atol=1e-12)

    def test_single_point_at_origin(self):
        np.testing.assert_allclose(hammersley_points(1, 1).points, [[0.0]], atol=1e-15)

    @pytest.mark.parametrize("n,count", [(1, 1), (2, 16), (3, 7), (5, 40)])
    def test_all_finite(self, n, count):
        assert np.all(np.isfinite(hammersley_points(n, count).points))


class TestRandomPoints:
    def test_determinism(self):
        a = random_points(2, 50, seed=123).points
        b = random_points(2, 50, seed=123).points
        assert np.array_equal(a, b)

    def test_clt_mean(self):
        pts = random_points(2, 10**5, seed=1).points
        assert np.abs(pts.mean(axis=0)).max() < 0.02

    def test_clt_covariance(self):
        pts = random_points(2, 10**5, seed=2).points
        cov = np.cov(pts.T)
        assert np.abs(cov - np.eye(2)).max() < 0.03


class TestInverseNormalCdf:
    def test_against_bisection_oracle(self):
        # bisection on Phi(x) = (1 + erf(x/sqrt(2)))/2
        def bisect(u, lo=-10.0, hi=10.0):
            for _ in range(80):
                mid = 0.5 * (lo + hi)
                if 0.5 * (1 + erf(mid / np.sqrt(2))) < u:
                    lo = mid
                else:
                    hi = mid
            return 0.5 * (lo + hi)

        for u in np.linspace(0.01, 0.99, 25):
            assert abs(ndtri(u) - bisect(u)) < 1e-9


class TestOptimizePoints:
    def setup_method(self):
        self.kernel = SquaredExponentialKernel(1.0, 1.0)

    def test_single_point_minimizer_is_origin(self):
        result = optimize_points(self.kernel, 1, 1, seed=0)
        # grid-search oracle over [-3, 3]
        grid = np.linspace(-3, 3, 601)
        variances = [
            gpq_variance(self.kernel, UnitPointSet(np.array([[g]]), "grid"))
            for g in grid
        ]
        oracle = grid[int(np.argmin(variances))]
        assert abs(oracle) < 1e-8  # symmetric unimodal objective
        assert abs(result.points[0, 0]) < 1e-3

    def test_never_worse_than_first_initialization(self):
        settings = OptimizerSettings(restarts=1)
        seed = 42
        init = np.random.default_rng(seed).standard_normal(5 * 2).reshape(5, 2)
        init_var = gpq_variance(self.kernel, UnitPointSet(init, "init"))
        result = optimize_points(self.kernel, 2, 5, seed=seed, settings=settings)
        assert gpq_variance(self.kernel, result) <= init_var + 1e-15

    def test_beats_hammersley_five_points(self):
        result = optimize_points(self.kernel, 2, 5, seed=0)
        opt_var = gpq_variance(self.kernel, result)
        ham_var = gpq_variance(self.kernel, hammersley_points(2, 5))
        assert opt_var <= ham_var

    def test_coordinate_cap(self):
        with pytest.raises(ValueError, match="cap"):
            optimize_points(self.kernel, 10, 500, seed=0)


class TestUnitPointSetValidation:
    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            UnitPointSet(np.array([[np.nan, 0.0]]), "bad")

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            UnitPointSet(np.empty((0, 2)), "bad")
