import math

import numpy as np
import pytest
from _util import multiset_distance

from sdring.errors import ConfigError, NoRootError
from sdring.model import DisorderRealization, DistShape, ModelParams, rescale_field, sample_realization
from sdring.spectral import eigenvalues, pair_ids
from sdring.stochastic import (
    POLE,
    F_function,
    build_HW,
    build_W,
    build_W_leading_order,
    clean_spectrum_W,
    determinant_identity_residual,
    fc_analytic,
    geometric_mean,
    kappa_envelope,
    mu_exponent,
    mu_gaussian,
    transition_rates,
)


def uniform(N, f=0.0, nu=1.0):
    return DisorderRealization.from_arrays(np.full(N, nu), np.full(N, f))


def disordered(N=16, sigma_f=0.02, sigma_nu=0.1, f_bias=0.003, seed=0):
    return sample_realization(ModelParams(N=N, sigma_f=sigma_f, sigma_nu=sigma_nu, f_bias=f_bias, seed=seed))


class TestRates:
    def test_unit(self):
        wp, wm = transition_rates(uniform(3))
        assert np.all(wp == 1) and np.all(wm == 1)

    def test_field(self):
        wp, wm = transition_rates(uniform(3, f=0.02))
        assert wp[0] == pytest.approx(1.01005, abs=1e-5)
        assert wm[0] == pytest.approx(0.99005, abs=1e-5)
        assert wm[0] / wp[0] == pytest.approx(math.exp(-0.02), rel=1e-14)

    def test_scaled(self):
        wp, wm = transition_rates(uniform(3, nu=0.975))
        assert np.allclose([wp, wm], 0.975)


class TestW:
    def test_three_site_circulant(self):
        W = build_W(uniform(3))
        assert np.allclose(np.diag(W), -2) and W[1, 0] == 1 and W[0, 1] == 1
        lam = np.sort(np.linalg.eigvals(W).real)
        assert np.allclose(lam, [-3, -3, 0], atol=1e-12)

    def test_orientation(self):
        real = disordered(N=5)
        W = build_W(real)
        wp, wm = transition_rates(real)
        for x in range(5):
            assert W[(x + 1) % 5, x] == wp[x]
            assert W[x, (x + 1) % 5] == wm[x]

    def test_clean_biased_spectrum(self):
        wp, wm = math.exp(0.05), math.exp(-0.05)
        got = eigenvalues(build_W(uniform(4, f=0.1)))
        want = clean_spectrum_W(wp, wm, 4)
        assert multiset_distance(got, want) < 1e-12

    @pytest.mark.parametrize("seed", range(5))
    def test_columns_sum_to_zero(self, seed):
        W = build_W(disordered(seed=seed))
        assert np.abs(W.sum(axis=0)).max() < 1e-14
        off = W - np.diag(np.diag(W))
        assert np.all(off >= 0) and np.all(np.diag(W) <= 0)

    def test_single_zero_mode(self):
        W = build_W(disordered())
        lam = np.linalg.eigvals(W)
        assert np.sum(np.abs(lam) < 1e-12 * np.linalg.norm(W, 2)) == 1
        assert np.allclose(np.ones(16) @ W, 0, atol=1e-14)

    def test_conjugate_pairs(self):
        lam = eigenvalues(build_W(disordered(f_bias=0.05)))
        ids = pair_ids(lam)
        assert sum(i is not None for i in ids) > 0

    def test_detailed_balance_real(self):
        W = build_W(disordered(f_bias=0.0))
        lam = np.linalg.eigvals(W)
        assert np.abs(lam.imag).max() < 1e-10 * np.linalg.norm(W, 2)

    def test_gauge_shift(self):
        # shifting all f_x by a constant is the same as moving the bias
        real = disordered(f_bias=0.0)
        a = rescale_field(real, 0.01, 1.0)
        b = DisorderRealization.from_arrays(real.nu_x, real.f_x + 0.01)
        assert np.allclose(eigenvalues(build_W(a)), eigenvalues(build_W(b)), atol=1e-13)


class TestCleanSpectrum:
    def test_unbiased_four(self):
        lam = clean_spectrum_W(1.0, 1.0, 4)
        assert np.allclose(lam, [0, -2, -4, -2], atol=1e-15)
        assert np.all(lam.imag == pytest.approx(0, abs=1e-15))

    def test_two_sites(self):
        assert np.allclose(clean_spectrum_W(2.0, 1.0, 2), [0, -6])

    def test_matches_solver(self):
        wp, wm = math.exp(0.15), math.exp(-0.15)
        got = eigenvalues(build_W(uniform(7, f=0.3)))
        assert multiset_distance(got, clean_spectrum_W(wp, wm, 7)) < 1e-12


class TestHW:
    def test_clean_limit(self):
        H = build_HW(uniform(6))
        assert np.allclose(np.diag(H), 2) and H[1, 0] == -1
        eps = np.linalg.eigvalsh(H)
        q = 2 * np.pi * np.arange(6) / 6
        assert np.allclose(np.sort(eps), np.sort(2 * (1 - np.cos(q))))

    def test_bias_shift(self):
        d = np.diag(build_HW(uniform(5, f=0.1))) - np.diag(build_HW(uniform(5)))
        assert np.allclose(d, 0.0025)

    def test_symmetric(self):
        H = build_HW(disordered(N=4))
        assert np.array_equal(H, H.T)

    def test_band_bottom_non_negative_rate_disorder(self):
        H = build_HW(disordered(N=32, sigma_f=0.0, sigma_nu=0.05, f_bias=0.0))
        assert np.linalg.eigvalsh(H).min() >= -1e-10 * np.linalg.norm(H, 2)

    def test_band_bottom_field_disorder(self):
        # field gradients lower the band bottom only at second order in f_x
        real = disordered(N=32, sigma_f=0.01, sigma_nu=0.05, f_bias=0.0)
        H = build_HW(real)
        assert np.linalg.eigvalsh(H).min() >= -0.25 * np.max(real.f_x**2)


def _det_by_eigenvalues(M):
    return np.prod(np.linalg.eigvals(M))


class TestDeterminantIdentity:
    def test_unbiased(self):
        real = disordered(N=8, f_bias=0.0)
        for lam in (0.3, 1 + 1j, -2.5j):
            assert determinant_identity_residual(real, lam) < 1e-10

    def test_biased_unit_circle(self):
        real = disordered(N=4, sigma_f=0.02, sigma_nu=0.0, f_bias=0.01)
        rng = np.random.default_rng(3)
        for phase in rng.uniform(0, 2 * np.pi, 20):
            assert determinant_identity_residual(real, np.exp(1j * phase)) < 1e-8

    def test_two_sites_by_hand(self):
        real = DisorderRealization.from_arrays([1.0, 1.2], [0.03, 0.01])
        assert determinant_identity_residual(real, 0.7 + 0.2j) < 1e-13
        # the 2x2 expansion written out
        lam = 0.7 + 0.2j
        W, H = build_W_leading_order(real), build_HW(real)
        lhs = (lam + W[0, 0]) * (lam + W[1, 1]) - W[0, 1] * W[1, 0]
        rhs = (lam - H[0, 0]) * (lam - H[1, 1]) - H[0, 1] * H[1, 0]
        rhs -= 2 * (math.cosh(0.02) - 1) * (1.0 * 1.2)
        assert abs(lhs - rhs) < 1e-13 * abs(lhs)

    def test_against_eigenvalue_products(self):
        real = disordered(N=6, f_bias=0.02)
        lam = 0.4 - 0.3j
        lhs = _det_by_eigenvalues(lam * np.eye(6) + build_W_leading_order(real))
        rhs = _det_by_eigenvalues(lam * np.eye(6) - build_HW(real))
        rhs -= 2 * (math.cosh(real.f_x.sum() / 2) - 1) * np.prod(-real.nu_x)
        assert abs(lhs - rhs) / abs(lhs) < 1e-10

    def test_size_guard(self):
        with pytest.raises(ConfigError):
            determinant_identity_residual(disordered(N=16), 0.1)

    def test_overflow_guard(self):
        real = DisorderRealization.from_arrays(np.ones(4), np.full(4, 400.0))
        with pytest.raises(OverflowError):
            determinant_identity_residual(real, 0.1)


class TestF:
    def test_single(self):
        assert F_function([2.0], 1.0, 0.0) == pytest.approx(math.log(2))

    def test_pole(self):
        assert F_function([0, 2, 4, 2], 1.0, 0.0) == POLE

    def test_pair(self):
        assert F_function([1.0, 2.0], 1.0, -1.0) == pytest.approx((math.log(2) + math.log(3)) / 2)

    def test_skip_lowest(self):
        assert F_function([0, 2, 4, 2], 1.0, 0.0, skip_lowest=True) == pytest.approx(math.log(16) / 4)

    def test_geometric_mean(self):
        assert geometric_mean([1, 4, 16]) == pytest.approx(4)


class TestKappa:
    def test_at_threshold(self):
        assert kappa_envelope(0.5, 0.01, 0.01, 0.1, 1.0, 2.0, 3.0) == pytest.approx(0.02 + 0.01 / 8 * 0.5)

    def test_clean_origin(self):
        assert kappa_envelope(0.0, 0.02, 0.01, 0.0, 1.0, 1.5, 1.0) == pytest.approx(0.015)

    def test_arithmetic(self):
        s = 0.2
        assert kappa_envelope(1.0, 0.02, 0.01, s, 1.0, 1.0, 1.0) == pytest.approx(0.01 - 1 + s**2 / 8)


class TestFcAnalytic:
    def test_values(self):
        assert fc_analytic(0.0) == 0
        assert fc_analytic(0.02, DistShape.BOX) == pytest.approx(8.3333e-6, rel=1e-4)
        assert fc_analytic(0.02, "Gaussian") == pytest.approx(1e-4)


class TestMu:
    def test_gaussian_formula(self):
        assert mu_gaussian(0.005, 0.1) == pytest.approx(1.0)

    def test_gaussian_samples(self):
        f = np.random.default_rng(0).normal(0.005, 0.1, 400_000)
        assert mu_exponent(f) == pytest.approx(1.0, rel=0.05)

    def test_constant_samples(self):
        with pytest.raises(NoRootError):
            mu_exponent(np.full(5, 0.01))

    def test_negative_mean(self):
        with pytest.raises(NoRootError):
            mu_exponent([-0.02, 0.01])

    def test_two_point(self):
        # exp(-0.02 mu) + exp(0.01 mu) = 2 with y = exp(0.01 mu) gives y^3 - 2 y^2 + 1 = 0, y = golden ratio
        mu = mu_exponent([0.02, -0.01])
        assert mu == pytest.approx(100 * math.log((1 + math.sqrt(5)) / 2), rel=1e-12)
        grid = np.linspace(1, 100, 990_001)
        g = np.abs(np.exp(-0.02 * grid) + np.exp(0.01 * grid) - 2)
        assert abs(grid[np.argmin(g)] - mu) < 1e-4
        assert abs(np.mean(np.exp(-mu * np.array([0.02, -0.01]))) - 1) < 1e-12
