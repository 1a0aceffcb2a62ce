import math

import numpy as np
import pytest
from scipy import special as sp

from nomafbl.fblrate import (KernelParams, dispersion_root, ec_kernel,
                             ec_kernel_approx, fbl_rate, make_kernel_params)

LN2 = math.log(2.0)


class TestKernelParams:
    def test_reference_point(self):
        kp = make_kernel_params(0.01, 300, 1e-5)
        assert kp.zeta == -1.5                      # -theta * n / 2
        expected_beta = 0.01 * math.sqrt(300) * float(sp.ndtri(1 - 1e-5))
        assert kp.beta == pytest.approx(expected_beta, rel=1e-12)
        assert kp.beta == pytest.approx(0.73870075438071, rel=1e-10)
        assert kp.kappa == pytest.approx(kp.beta ** 2 / 2 + kp.beta,
                                         rel=1e-14)

    def test_half_eps_kills_dispersion_terms(self):
        kp = make_kernel_params(0.02, 500, 0.5)
        assert kp.beta == 0.0
        assert kp.kappa == 0.0

    def test_blocklength_scaling(self):
        kp1 = make_kernel_params(0.01, 250, 1e-4)
        kp4 = make_kernel_params(0.01, 1000, 1e-4)
        assert kp4.beta == pytest.approx(2.0 * kp1.beta, rel=1e-13)
        assert abs(kp4.zeta) == pytest.approx(4.0 * abs(kp1.zeta), rel=1e-13)

    def test_beta_sign_tracks_eps(self):
        assert make_kernel_params(0.01, 100, 0.1).beta > 0.0
        assert make_kernel_params(0.01, 100, 0.9).beta < 0.0

    @pytest.mark.parametrize("theta, n, eps", [
        (0.0, 100, 0.1), (0.01, 0, 0.1), (0.01, 100, 0.0), (0.01, 100, 1.0),
    ])
    def test_domain(self, theta, n, eps):
        with pytest.raises(ValueError):
            make_kernel_params(theta, n, eps)


class TestDispersionRoot:
    def test_examples(self):
        assert dispersion_root(0.0) == 0.0
        assert dispersion_root(1.0) == pytest.approx(math.sqrt(3.0) / 2.0,
                                                     rel=1e-14)
        assert dispersion_root(1e12) == pytest.approx(1.0, abs=1e-12)

    def test_algebraic_identity(self):
        g = np.random.default_rng(2).uniform(0.0, 200.0, 500)
        lhs = dispersion_root(g) ** 2 + (1.0 + g) ** -2.0
        assert np.all(np.abs(lhs - 1.0) < 1e-14)

    def test_monotone(self):
        g = np.linspace(0.0, 50.0, 400)
        assert np.all(np.diff(dispersion_root(g)) > 0.0)


class TestFblRate:
    def test_penalty_vanishes_at_half(self):
        assert fbl_rate(3.0, 200, 0.5) == pytest.approx(2.0, rel=1e-14)

    def test_zero_gamma(self):
        assert fbl_rate(0.0, 300, 1e-5) == 0.0

    def test_shannon_recovery(self):
        g = 7.0
        assert fbl_rate(g, 10 ** 12, 1e-5) == pytest.approx(math.log2(1 + g),
                                                            abs=1e-4)

    def test_negative_at_small_gamma(self):
        # dispersion penalty beats the log term near zero; no clamping here
        assert fbl_rate(1e-4, 300, 1e-5) < 0.0

    def test_bits_are_nats_over_ln2(self):
        g, n, eps = 2.5, 400, 1e-6
        nats = math.log(1 + g) - dispersion_root(g) * sp.ndtri(1 - eps) \
            / math.sqrt(n)
        assert fbl_rate(g, n, eps) == pytest.approx(nats / LN2, rel=1e-12)

    def test_domain(self):
        with pytest.raises(ValueError):
            fbl_rate(-1.0, 300, 1e-5)
        with pytest.raises(ValueError):
            fbl_rate(1.0, 300, 0.0)


class TestEcKernel:
    def test_degenerate_eps(self):
        kp = make_kernel_params(0.01, 300, 1e-5)
        for g in (0.0, 1.0, 50.0):
            assert ec_kernel(g, kp, 1.0) == 1.0

    def test_zero_gamma(self):
        kp = make_kernel_params(0.01, 300, 1e-5)
        assert ec_kernel(0.0, kp, 1e-5) == pytest.approx(1.0, rel=1e-14)

    def test_reference_value(self):
        # frozen from the definition at the quoted parameter point
        kp = KernelParams(zeta=-2.16404, beta=0.73872, kappa=1.0115)
        assert ec_kernel(3.0, kp, 1e-5) == pytest.approx(
            0.005078348094230605, rel=1e-12)

    def test_first_principles_recompute(self):
        # independent scalar-math recomputation at 100 random points
        rng = np.random.default_rng(7)
        for _ in range(100):
            theta = rng.uniform(1e-3, 0.05)
            n = int(rng.integers(50, 1000))
            eps = 10.0 ** rng.uniform(-8, -1)
            g = rng.uniform(0.0, 80.0)
            kp = make_kernel_params(theta, n, eps)
            delta = math.sqrt(1.0 - (1.0 + g) ** -2.0)
            direct = eps + (1 - eps) * (1 + g) ** (2 * kp.zeta) \
                * math.exp(kp.beta * delta)
            assert ec_kernel(g, kp, eps) == pytest.approx(direct, rel=1e-12)

    def test_limit_is_eps(self):
        kp = make_kernel_params(0.01, 300, 1e-5)
        assert ec_kernel(1e8, kp, 1e-5) == pytest.approx(1e-5, rel=1e-6)
        assert ec_kernel_approx(1e8, kp, 1e-5) == pytest.approx(1e-5,
                                                               rel=1e-6)

    def test_eventually_decreasing(self):
        # strictly decreasing above a small threshold until the value
        # saturates at the floating-point floor eps
        rng = np.random.default_rng(8)
        g = np.linspace(1.0, 150.0, 500)
        for _ in range(20):
            theta = rng.uniform(1e-3, 0.05)
            n = int(rng.integers(100, 800))
            eps = 10.0 ** rng.uniform(-7, -2)
            kp = make_kernel_params(theta, n, eps)
            if kp.beta > 2.0:
                continue
            for kern in (ec_kernel, ec_kernel_approx):
                vals = kern(g, kp, eps)
                diffs = np.diff(vals)
                assert np.all(diffs <= 0.0)
                live = vals[:-1] > eps * (1 + 1e-9)
                assert np.all(diffs[live] < 0.0)


class TestEcKernelApprox:
    def test_exact_when_beta_zero(self):
        kp = make_kernel_params(0.01, 300, 0.5)
        g = np.linspace(0.0, 60.0, 200)
        assert np.allclose(ec_kernel_approx(g, kp, 0.5),
                           ec_kernel(g, kp, 0.5), rtol=1e-14)

    def test_known_overshoot_at_zero(self):
        # the truncated expansion tends to eps + (1-eps)(1 + beta/2) at
        # gamma = 0 while the exact kernel tends to 1
        kp = make_kernel_params(0.01, 400, 1e-6)
        val = ec_kernel_approx(0.0, kp, 1e-6)
        assert val == pytest.approx(1e-6 + (1 - 1e-6) * (1 + kp.beta / 2),
                                    rel=1e-12)

    def test_relative_deviation_envelope(self):
        # second-order truncation quality away from the gamma -> 0 overshoot:
        # under 5% for beta <= 0.75 over gamma in [0.25, 100]
        g = np.linspace(0.25, 100.0, 4000)
        for beta in (0.1, 0.4, 0.75):
            kp = KernelParams(zeta=-1.5, beta=beta,
                              kappa=beta * beta / 2 + beta)
            exact = ec_kernel(g, kp, 1e-5)
            approx = ec_kernel_approx(g, kp, 1e-5)
            assert np.max(np.abs(approx - exact) / exact) < 0.05
