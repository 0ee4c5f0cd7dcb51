import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from irregular_tvar import distributions as D
from irregular_tvar import process as P
from irregular_tvar.errors import (
    DegeneratePathError,
    DiagnosticsUnavailableError,
    DomainError,
    EmptyWindowError,
)


class TestCoefficientFunctions:
    @pytest.mark.parametrize("beta, degree", [(0.5, 0), (1.0, 0), (1.5, 1), (2.0, 1), (2.01, 2), (3.0, 2)])
    def test_hoelder_degree(self, beta, degree):
        assert P.hoelder_degree(beta) == degree

    @pytest.mark.parametrize("text", ["const(0.5)", "affine(0.2,0.5)", "sine(0.5,0.3)", "ramp(0.1,0.8,0.2,0.6)"])
    def test_range_and_extension(self, text):
        f = P.parse_coefficient(text)
        u = np.linspace(0, 1, 2001)
        v = f(u)
        assert v.min() >= 0 and v.max() <= f.rho < 1
        assert f(-3.0) == f(0.0) and f(7.0) == f(1.0)

    def test_sine_lipschitz_on_pairs(self):
        f = P.sine(0.5, 0.3, beta=1.0)
        rng = np.random.default_rng(0)
        u, w = rng.uniform(0, 1, (2, 5000))
        assert np.all(np.abs(f(u) - f(w)) <= f.hoelder_L * np.abs(u - w) + 1e-15)
        assert f.hoelder_L == pytest.approx(2 * math.pi * 0.3)

    def test_sine_derivative_hoelder(self):
        f = P.sine(0.5, 0.3)  # beta = 2: derivative is Lipschitz
        d = lambda u: 0.3 * 2 * math.pi * np.cos(2 * math.pi * u)
        u = np.linspace(0, 1, 500)
        w = u[::-1]
        assert np.all(np.abs(d(u) - d(w)) <= f.hoelder_L * np.abs(u - w) + 1e-12)

    @pytest.mark.parametrize("bad", ["const(1.0)", "const(-0.1)", "sine(0.5,0.6)", "affine(0.5,0.6)"])
    def test_rejects_out_of_range(self, bad):
        with pytest.raises(DomainError):
            P.parse_coefficient(bad)

    def test_ramp_not_smooth(self):
        with pytest.raises(DomainError):
            P.ramp(0.1, 0.5, 0.2, 0.4, beta=2.0)

    def test_parse_errors(self):
        for text in ["cos(1)", "const(1,2)", "sine(x,1)"]:
            with pytest.raises(DomainError):
                P.parse_coefficient(text)


class TestSimulation:
    def test_zero_coefficient(self):
        path = P.simulate_path(P.constant(0.0), D.gamma(1, 1), 200, seed=3)
        np.testing.assert_array_equal(path.x_values[1:], path.innovations)

    def test_determinism(self):
        args = (P.sine(0.5, 0.3), D.gamma(1.5, 2.0), 500)
        p1, p2 = P.simulate_path(*args, seed=99), P.simulate_path(*args, seed=99)
        assert p1.x_values.tobytes() == p2.x_values.tobytes()
        assert p1.innovations.tobytes() == p2.innovations.tobytes()

    def test_stationary_mean(self):
        path = P.simulate_path(P.constant(0.5), D.gamma(1, 1), 100_000, seed=5)
        x = path.x_values[1:]
        assert x.mean() == pytest.approx(2.0, abs=0.05)

    def test_stationary_mean_five_standard_errors(self):
        rho = 0.7
        path = P.simulate_path(P.constant(rho), D.gamma(2, 1), 50_000, seed=8)
        x = path.x_values[1:]
        # AR(1) long-run variance of the sample mean: var/(1-rho)**2 per observation
        se = math.sqrt(D.variance(D.gamma(2, 1)) / (1 - rho) ** 2 / x.size)
        assert abs(x.mean() - 2.0 / (1 - rho)) <= 5 * se

    @given(
        st.integers(0, 2**31),
        st.sampled_from(["const(0.3)", "sine(0.5,0.3)", "affine(0.1,0.8)", "ramp(0.0,0.9,0.3,0.7)"]),
        st.sampled_from(["gamma(0.5,1)", "gamma(2,3)", "weibull(1.5)", "poweruniform(0.7)"]),
        st.integers(2, 300),
    )
    @settings(max_examples=40, deadline=None)
    def test_reconstruction_and_positivity(self, seed, ftext, dtext, N):
        path = P.simulate_path(P.parse_coefficient(ftext), D.parse_dist(dtext), N, seed)
        assert path.reconstruction_error() <= 1e-12
        assert np.all(path.x_values > 0)
        assert len(path.x_values) == N + 1

    def test_burn_in_length(self):
        assert P.burn_in_length(0.5) == math.ceil(math.log(1e-14) / math.log(0.5))
        assert 0.5 ** P.burn_in_length(0.5) < 1e-14
        assert P.burn_in_length(0.0) == 1

    def test_requires_two_steps(self):
        with pytest.raises(DomainError):
            P.simulate_path(P.constant(0.5), D.gamma(1, 1), 1, seed=0)

    def test_batch_matches_single(self):
        f, d = P.sine(0.5, 0.3), D.gamma(1, 1)
        x, eps, B = P.simulate_from_seeds(f, d, 64, [4, 5])
        p = P.simulate_path(f, d, 64, 5)
        np.testing.assert_array_equal(x[1, B:], p.x_values)


class TestRegressionTransform:
    def test_ratios(self):
        sample = P.regression_transform(P.Path(2, np.array([1.0, 2.0, 1.0])))
        np.testing.assert_array_equal(sample.y, [2.0, 0.5])
        np.testing.assert_array_equal(sample.t, [0.5, 1.0])

    def test_zero_coefficient(self):
        path = P.simulate_path(P.constant(0.0), D.gamma(1, 1), 100, seed=1)
        y = P.regression_transform(path).y
        eps = np.concatenate([[path.x_values[0]], path.innovations])
        np.testing.assert_allclose(y, eps[1:] / eps[:-1], rtol=1e-15)

    def test_one_sided(self):
        f = P.sine(0.5, 0.3)
        path = P.simulate_path(f, D.gamma(0.5, 1), 2000, seed=2)
        s = P.regression_transform(path)
        assert np.min(s.y - f(s.t)) >= 0

    def test_degenerate(self):
        with pytest.raises(DegeneratePathError):
            P.regression_transform(P.Path(2, np.array([1.0, 0.0, 1.0])))


class TestWindows:
    @pytest.mark.parametrize("N, x, h, lo, hi", [(100, 0.5, 0.1, 40, 60), (100, 0.0, 0.05, 1, 5), (100, 1.0, 0.05, 95, 100)])
    def test_examples(self, N, x, h, lo, hi):
        ks, n = P.window_indices(N, x, h)
        np.testing.assert_array_equal(ks, np.arange(lo, hi + 1))
        assert n == hi - lo + 1

    def test_empty(self):
        with pytest.raises(EmptyWindowError):
            P.window_indices(10, 0.55, 0.01)

    def test_point_on_grid_is_kept(self):
        ks, n = P.window_indices(10, 0.5, 0.01)
        assert list(ks) == [5] and n == 1

    @given(st.integers(1, 500), st.floats(0, 1), st.floats(1e-4, 1.0))
    @settings(max_examples=200, deadline=None)
    def test_matches_enumeration(self, N, x, h):
        k = np.arange(1, N + 1)
        # with a slack far below the grid spacing 1/N
        expected = k[np.abs(k / N - x) <= h + 1e-9 / N]
        lo, hi = P.window_bounds(N, x, h)
        got = np.arange(lo, hi + 1) if lo <= hi else np.array([], dtype=int)
        np.testing.assert_array_equal(got, expected)

    def test_rejects_bad_bandwidth(self):
        with pytest.raises(DomainError):
            P.window_bounds(10, 0.5, 0.0)


class TestDiagnostics:
    def test_modified_innovations(self):
        path = P.simulate_path(P.constant(0.0), D.gamma(1, 1), 50, seed=4)
        eps = np.concatenate([[path.x_values[0]], path.innovations])
        np.testing.assert_allclose(P.modified_innovations(path), eps[1:] / eps[:-1], rtol=1e-15)

    def test_modified_innovations_zero(self):
        path = P.Path(2, np.array([1.0, 1.0, 2.0]), innovations=np.array([0.0, 1.5]))
        assert P.modified_innovations(path)[0] == 0.0

    def test_modified_innovations_unavailable(self):
        with pytest.raises(DiagnosticsUnavailableError):
            P.modified_innovations(P.Path(2, np.array([1.0, 2.0, 1.0])))

    def test_modified_innovations_empirical_cdf_bounded(self):
        x, eps, B = P.simulate_from_seeds(P.sine(0.5, 0.3), D.gamma(1, 1), 4096, range(25))
        pooled = (eps[:, B + 1 :] / x[:, B:-1]).ravel()
        y = np.logspace(-3, -1, 7)
        ratio = np.array([(pooled <= v).mean() for v in y]) / y
        assert ratio.min() > 0.2 and ratio.max() < 5

    def test_tail_split_zero(self):
        path = P.simulate_path(P.constant(0.0), D.gamma(1, 1), 100, seed=0)
        assert P.tail_split_norm(path, 0) == 0.0

    def test_tail_split_lag_zero(self):
        path = P.simulate_path(P.sine(0.5, 0.3), D.gamma(1, 1), 300, seed=6)
        expected = np.mean(path.x_values[1:] - path.innovations)
        assert P.tail_split_norm(path, 0) == pytest.approx(expected, rel=1e-12)

    def test_tail_split_against_direct_sum(self):
        f = P.sine(0.5, 0.3)
        path = P.simulate_path(f, D.gamma(1, 1), 80, seed=12)
        lag, N, B = 3, path.N, path.burn_in
        eps = np.concatenate([path.prehistory_innovations, path.innovations])  # eps_{-B}..eps_N
        total = 0.0
        for k in range(1, N + 1):
            s, w = 0.0, 1.0
            for i in range(1, k + B + 1):
                w *= f((k - i + 1) / N)
                if i > lag:
                    s += w * eps[k - i + B]
            total += s
        assert P.tail_split_norm(path, lag) == pytest.approx(total / N, rel=1e-10)

    def test_tail_split_geometric_bound(self):
        rho = 0.6
        vals = []
        for seed in range(30):
            path = P.simulate_path(P.constant(rho), D.gamma(1, 1), 400, seed=seed)
            vals.append(P.tail_split_norm(path, 4))
        vals = np.array(vals)
        bound = rho**5 / (1 - rho)
        assert vals.mean() <= bound + 5 * vals.std(ddof=1) / math.sqrt(len(vals))

    def test_tail_split_decay_slope(self):
        rho = 0.8
        path = P.simulate_path(P.constant(rho), D.gamma(1, 1), 5000, seed=2)
        lags = np.arange(5, 41)
        logs = np.log([P.tail_split_norm(path, int(l)) for l in lags])
        slope = np.polyfit(lags, logs, 1)[0]
        assert slope <= math.log(rho) + 0.05

    def test_tail_split_needs_prehistory(self):
        path = P.simulate_path(P.constant(0.5), D.gamma(1, 1), 100, seed=0)
        with pytest.raises(DiagnosticsUnavailableError):
            P.tail_split_norm(path, path.burn_in + 1)
        with pytest.raises(DiagnosticsUnavailableError):
            P.tail_split_norm(P.Path(2, np.array([1.0, 2.0, 1.0])), 0)


class TestCsv:
    def test_round_trip(self, tmp_path):
        path = P.simulate_path(P.sine(0.5, 0.3), D.gamma(1, 1), 1000, seed=7)
        file = tmp_path / "p.csv"
        P.write_path_csv(path, file)
        lines = file.read_text().splitlines()
        assert lines[0] == "k,t,X,eps" and len(lines) == 1002
        back = P.read_path_csv(file)
        np.testing.assert_array_equal(back.x_values, path.x_values)
        np.testing.assert_array_equal(back.innovations, path.innovations)
        assert back.N == 1000
