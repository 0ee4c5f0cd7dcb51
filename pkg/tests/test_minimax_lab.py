import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from irregular_tvar import minimax_lab as M
from irregular_tvar.errors import ConfigError, DomainError, OutOfRegimeError


def pair(**kw):
    base = dict(N=256, a=1.0, b=1.0, c_f=4.0, n_star=16, f_amp=0.1, beta=1.0, tau=10.0)
    base.update(kw)
    return M.HypothesisPair(**base)


class TestBuild:
    def test_example(self):
        hp = M.build_hypotheses(256, 1.0, 1.0, 1.0, 4.0)
        assert hp.n_star == 16
        assert hp.f_amp == 0.015625
        assert hp.tau == pytest.approx(math.log(256) ** 2)

    def test_coefficient_is_step(self):
        hp = M.build_hypotheses(256, 1.0, 1.0, 1.0, 4.0)
        f = hp.coefficient()
        assert f(16 / 256) == hp.f_amp and f(17 / 256) == 0.0

    def test_amplitude_shrinks_with_c_f(self):
        amps = [M.build_hypotheses(1024, 0.7, 1.0, 1.0, c).f_amp for c in (1, 10, 100, 1e4, 1e8)]
        assert np.all(np.diff(amps) < 0) and amps[-1] < 1e-8

    @pytest.mark.parametrize("N, a, beta, c_f", [(256, 1.0, 1.0, 4.0), (4096, 0.5, 1.0, 16.0), (1000, 1.5, 2.0, 3.0)])
    def test_separation_identity(self, N, a, beta, c_f):
        hp = M.build_hypotheses(N, a, 1.0, beta, c_f)
        exact = N ** (a * beta / (a * beta + 1))
        assert hp.f_amp == pytest.approx((c_f * hp.n_star) ** (-1 / a), rel=1e-15)
        # rounding n* moves the amplitude by at most a factor (1 + 1/(2 n*))**(1/a)
        ref = N ** (-beta / (a * beta + 1)) * c_f ** (-1 / a)
        assert abs(math.log(hp.f_amp / ref)) <= abs(math.log(hp.n_star / exact)) / a + 1e-12

    def test_round_half_up(self):
        assert M.local_sample_size(6.25, 1.0, 1.0) == 3  # 6.25**0.5 = 2.5
        assert M.local_sample_size(2, 1.0, 1.0) == 1

    @pytest.mark.parametrize("a", [0.0, 2.0, 3.5, -1.0])
    def test_out_of_regime(self, a):
        with pytest.raises(OutOfRegimeError):
            M.build_hypotheses(256, a, 1.0, 1.0, 4.0)

    def test_bad_parameters(self):
        with pytest.raises(DomainError):
            M.build_hypotheses(256, 1.0, 1.0, 1.0, 0.0)


class TestUStatistic:
    def test_example(self):
        hp = pair(a=1.5, f_amp=0.1, tau=10.0)
        # 0.5*log(0.9) + 0.1, evaluated directly
        assert M.u_statistic(1.0, 1.0, hp) == pytest.approx(0.047319742171086865, rel=1e-14)

    def test_example_matches_one_step_rn(self):
        hp = pair(a=1.5, f_amp=0.1, tau=10.0, n_star=1)
        ev = M.rn_derivative([1.0, 1.0], hp)
        assert ev.log_sum_u == pytest.approx(0.047319742171086865, rel=1e-14)
        assert ev.rn_value == pytest.approx(math.exp(0.047319742171086865), rel=1e-12)

    def test_zero_amplitude(self):
        hp = pair(a=0.5, f_amp=0.0)
        x = np.random.default_rng(0).gamma(0.5, size=(2, 100))
        assert np.all(M.u_statistic(x[0], x[1], hp) == 0.0)

    def test_shape_one(self):
        hp = pair(a=1.0, b=2.0, f_amp=0.3, tau=5.0)
        xp = np.array([0.5, 4.9, 6.0, 1.0])
        xc = np.array([2.0, 0.1, 3.0, 0.2])
        np.testing.assert_allclose(M.u_statistic(xp, xc, hp), 2.0 * 0.3 * xp * (xp <= 5.0), rtol=1e-15)

    def test_indicators(self):
        hp = pair(a=0.5, f_amp=0.5, tau=2.0)
        # x_cur below f*x_prev: only the linear term survives
        assert M.u_statistic(1.0, 0.4, hp) == pytest.approx(0.5)
        # x_prev above tau: both terms vanish
        assert M.u_statistic(3.0, 10.0, hp) == 0.0


class TestRnDerivative:
    def test_zero_amplitude(self):
        x = np.random.default_rng(1).gamma(1.0, size=17)
        ev = M.rn_derivative(x, pair(f_amp=0.0, a=0.7))
        assert ev.rn_value == 1.0 and ev.indicator_product == 1

    def test_violation_kills(self):
        x = np.ones(17)
        x[5] = 0.05
        ev = M.rn_derivative(x, pair(f_amp=0.1))
        assert ev.rn_value == 0.0 and ev.indicator_product == 0 and ev.rn_truncated == 0.0

    def test_shape_one_product(self):
        hp = pair(a=1.0, b=1.0, f_amp=0.01)
        x = np.random.default_rng(2).gamma(1.0, size=hp.n_star + 1)
        ev = M.rn_derivative(x, hp)
        assert ev.rn_value == pytest.approx(math.exp(hp.f_amp * x[:-1].sum()), rel=1e-12)

    def test_only_first_block_used(self):
        hp = pair(f_amp=0.01)
        x = np.random.default_rng(3).gamma(1.0, size=40)
        y = x.copy()
        y[hp.n_star + 1 :] = 7.0
        assert M.rn_derivative(x, hp) == M.rn_derivative(y, hp)

    def test_rejects_short_sample(self):
        with pytest.raises(DomainError):
            M.rn_derivative(np.ones(5), pair())

    @given(st.integers(0, 2**32 - 1), st.floats(0.2, 1.9), st.floats(1.0, 64.0))
    @settings(max_examples=60, deadline=None)
    def test_cross_form(self, seed, a, c_f):
        hp = M.build_hypotheses(1024, a, 1.0, 1.0, c_f)
        x = np.random.default_rng(seed).gamma(a, size=hp.n_star + 1)
        ev = M.rn_derivative(x, hp)
        if ev.indicator_product and ev.truncation_ok:
            assert ev.rn_truncated == pytest.approx(ev.rn_value, rel=1e-10)
            assert math.exp(ev.log_sum_u) == pytest.approx(ev.rn_value, rel=1e-10)


class TestMonteCarlo:
    def test_moment_precondition(self):
        with pytest.raises(ConfigError):
            M.moment_check(pair(f_amp=0.1, tau=10.0), 100, 0)

    def test_moments_zero_amplitude(self):
        rep = M.moment_check(pair(f_amp=0.0), 1000, 0)
        assert rep.mean_u == 0.0 and rep.mean_u2 == 0.0

    def test_shape_one_first_moment(self):
        hp = M.build_hypotheses(4096, 1.0, 1.0, 1.0, 16.0)
        rep = M.moment_check(hp, 100_000, 4)
        assert rep.ratio_1 <= 1.0 + 3 * rep.mean_u_se / rep.f_pow_a
        assert rep.ratio_1 == pytest.approx(1.0, abs=5 * rep.mean_u_se / rep.f_pow_a)

    def test_indicator_zero_amplitude(self):
        assert M.indicator_product_check(pair(f_amp=0.0), 500, 0) == 1.0

    def test_indicator_nonincreasing(self):
        freqs = [M.indicator_product_check(pair(a=1.0, f_amp=f, n_star=16), 4000, 9) for f in (0.001, 0.01, 0.05, 0.2)]
        assert all(x >= y for x, y in zip(freqs, freqs[1:]))

    def test_indicator_large_c_f(self):
        hp = M.build_hypotheses(4096, 1.0, 1.0, 1.0, 64.0)
        assert M.indicator_product_check(hp, 20_000, 1) >= 0.95

    def test_truncation(self):
        small = M.build_hypotheses(16, 1.0, 1.0, 1.0, 4.0)
        assert 0.0 < M.truncation_check(small, 2000, 0) < 1.0
        assert M.truncation_check(small, 10, 0, tau=math.inf) == 1.0

    def test_truncation_large_n(self):
        hp = M.build_hypotheses(4096, 1.0, 1.0, 1.0, 16.0)
        assert M.truncation_check(hp, 2000, 3) >= 0.99

    def test_risk_zero_amplitude(self):
        est = M.lr_test_risk(pair(f_amp=0.0, n_star=8), 5000, 0)
        assert abs(est.risk - 1.0) <= 2 * max(est.risk_se, 1e-12)

    def test_risk_large_separation(self):
        hp = pair(a=1.0, f_amp=0.9, n_star=200, tau=1e9)
        assert M.lr_test_risk(hp, 2000, 1).risk < 0.02

    def test_np_functional_range(self):
        est = M.lr_test_risk(M.build_hypotheses(256, 1.0, 1.0, 1.0, 16.0), 4000, 2)
        assert 0.0 <= est.np_functional <= 1.0
        assert est.np_argmax in est.np_grid
        assert len(est.np_grid) == 50

    def test_risk_deterministic(self):
        hp = M.build_hypotheses(256, 1.0, 1.0, 1.0, 16.0)
        r1, r2 = M.lr_test_risk(hp, 1000, 5), M.lr_test_risk(hp, 1000, 5)
        assert (r1.risk, r1.np_functional) == (r2.risk, r2.np_functional)

    def test_normalization(self):
        hp = M.build_hypotheses(4096, 1.0, 1.0, 1.0, 16.0)
        mean, se = M.rn_normalization(hp, 100_000, 11)
        assert abs(mean - 1.0) <= 3 * se

    def test_sample_h0_follows_recursion(self):
        hp = pair(f_amp=0.3, n_star=10)
        X = M.sample_h0(hp, np.random.default_rng(0), 5)
        assert X.shape == (5, 11)
        assert np.all(X[:, 1:] > hp.f_amp * X[:, :-1])

    def test_sweep_keys(self):
        out = M.lower_bound_sweep([(256, 1.0), (256, 16.0)], 1.0, 1.0, 1.0, 500, 0)
        for k in ("n_star", "f_amp", "risk", "np_functional", "moment_ratio_1", "moment_ratio_2",
                  "indicator_freq", "truncation_freq"):
            assert len(out[k]) == 2
        # 2 f tau > 1 at c_f = 1, N = 256
        assert out["moment_ratio_1"][0] is None
        assert out["moment_ratio_1"][1] is not None


def test_pair_is_frozen():
    with pytest.raises(dataclasses.FrozenInstanceError):
        pair().N = 3
