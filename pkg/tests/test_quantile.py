import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fpqr import InvalidInputError, NumericalError, check_loss, qreg_fit, qreg_fit_multi
from fpqr.quantile import univariate_slopes


def total_loss(design, coef, response, tau, intercept=True):
    X = np.hstack([np.ones((design.shape[0], 1)), design]) if intercept else design
    return float(np.sum(check_loss(response - X @ coef, tau)))


class TestCheckLoss:
    @pytest.mark.parametrize(
        "x,tau,expected",
        [(0.0, 0.3, 0.0), (-2.0, 0.25, 1.5), (3.0, 0.9, 2.7), (1.0, 0.5, 0.5)],
    )
    def test_hand_values(self, x, tau, expected):
        assert check_loss(x, tau) == pytest.approx(expected, abs=1e-15)

    def test_vectorized(self):
        out = check_loss(np.array([-1.0, 0.0, 2.0]), 0.25)
        assert np.allclose(out, [0.75, 0.0, 0.5])

    def test_invalid_tau(self):
        with pytest.raises(InvalidInputError):
            check_loss(1.0, 1.0)

    @settings(max_examples=100, deadline=None)
    @given(
        st.floats(min_value=-1e6, max_value=1e6, allow_nan=False),
        st.floats(min_value=0.01, max_value=0.99),
    )
    def test_nonnegative_and_zero_only_at_zero(self, x, tau):
        loss = check_loss(x, tau)
        assert loss >= 0.0
        if abs(x) > 1e-9:
            assert loss > 0.0
        if x == 0.0:
            assert loss == 0.0


class TestQregFit:
    def test_intercept_only_median(self):
        y = np.array([1.0, 2.0, 3.0, 10.0])
        sol = qreg_fit(np.ones((4, 1)), y, 0.5, intercept=False)
        loss_at_median = float(np.sum(check_loss(y - np.median(y), 0.5)))
        assert float(sol.achieved_loss[0]) <= loss_at_median + 1e-8

    def test_noiseless_line(self):
        x = np.linspace(-1, 1, 15)[:, None]
        y = 2.0 * x[:, 0]
        for tau in (0.2, 0.5, 0.8):
            sol = qreg_fit(x, y, tau, intercept=True)
            assert sol.coefficients[0] == pytest.approx(0.0, abs=1e-6)
            assert sol.coefficients[1] == pytest.approx(2.0, abs=1e-6)

    def test_intercept_only_against_order_statistic_scan(self):
        rng = np.random.default_rng(8)
        y = rng.standard_normal(20)
        tau = 0.9
        sol = qreg_fit(np.ones((20, 1)), y, tau, intercept=False)
        # Brute-force oracle: the optimum sits at an order statistic.
        scan = min(float(np.sum(check_loss(y - v, tau))) for v in y)
        assert float(sol.achieved_loss[0]) <= scan + 1e-8

    def test_loss_dominates_ols(self):
        rng = np.random.default_rng(31)
        x = rng.standard_normal((60, 3))
        y = x @ np.array([1.0, -2.0, 0.5]) + rng.standard_normal(60)
        Xi = np.hstack([np.ones((60, 1)), x])
        ols = np.linalg.lstsq(Xi, y, rcond=None)[0]
        for tau in (0.25, 0.5, 0.75):
            sol = qreg_fit(x, y, tau, intercept=True)
            assert float(sol.achieved_loss[0]) <= float(
                np.sum(check_loss(y - Xi @ ols, tau))
            )

    def test_intercept_monotone_in_tau(self):
        rng = np.random.default_rng(12)
        y = rng.standard_normal(40)
        fits = [
            qreg_fit(np.ones((40, 1)), y, tau, intercept=False).coefficients[0]
            for tau in (0.1, 0.25, 0.5, 0.75, 0.9)
        ]
        assert np.all(np.diff(fits) >= -1e-10)

    def test_affine_design_equivariance(self):
        rng = np.random.default_rng(77)
        x = rng.standard_normal((50, 3))
        y = x @ np.array([1.0, 2.0, -1.0]) + rng.standard_normal(50)
        r = np.array([[2.0, 0.1, 0.0], [0.0, 1.0, -0.3], [0.5, 0.0, 1.0]])
        sol = qreg_fit(x, y, 0.3, intercept=True)
        sol_r = qreg_fit(x @ r, y, 0.3, intercept=True)
        fitted = np.hstack([np.ones((50, 1)), x]) @ sol.coefficients
        fitted_r = np.hstack([np.ones((50, 1)), x @ r]) @ sol_r.coefficients
        scale = np.max(np.abs(fitted))
        assert np.max(np.abs(fitted - fitted_r)) <= 1e-5 * scale

    def test_too_few_rows_raises(self):
        with pytest.raises(InvalidInputError):
            qreg_fit(np.ones((3, 3)), np.ones(3), 0.5, intercept=True)

    def test_singular_design_raises(self):
        with pytest.raises(NumericalError):
            qreg_fit(np.zeros((10, 2)), np.ones(10), 0.5, intercept=False)

    def test_deterministic(self):
        rng = np.random.default_rng(4)
        x = rng.standard_normal((30, 2))
        y = rng.standard_normal(30)
        a = qreg_fit(x, y, 0.4).coefficients
        b = qreg_fit(x, y, 0.4).coefficients
        assert np.array_equal(a, b)


class TestQregFitMulti:
    def test_single_column_matches_qreg_fit(self):
        rng = np.random.default_rng(1)
        x = rng.standard_normal((40, 2))
        y = rng.standard_normal(40)
        single = qreg_fit(x, y, 0.25)
        multi = qreg_fit_multi(x, y[:, None], 0.25)
        assert np.allclose(single.coefficients, multi.coefficients[:, 0])
        assert np.allclose(single.achieved_loss, multi.achieved_loss)

    def test_duplicated_response_columns(self):
        rng = np.random.default_rng(2)
        x = rng.standard_normal((30, 2))
        y = rng.standard_normal(30)
        sol = qreg_fit_multi(x, np.column_stack([y, y]), 0.6)
        assert np.array_equal(sol.coefficients[:, 0], sol.coefficients[:, 1])

    def test_exact_recovery(self):
        rng = np.random.default_rng(3)
        x = rng.standard_normal((50, 3))
        coef = rng.standard_normal((3, 4))
        sol = qreg_fit_multi(x, x @ coef, 0.5, intercept=True)
        assert np.max(np.abs(sol.coefficients[1:, :] - coef)) <= 1e-6
        assert np.max(np.abs(sol.coefficients[0, :])) <= 1e-6


class TestUnivariateSlopes:
    def test_identity_and_scaled(self):
        rng = np.random.default_rng(10)
        x = rng.standard_normal((80, 1))
        assert univariate_slopes(x, x, 0.5)[0, 0] == pytest.approx(1.0, abs=1e-6)
        assert univariate_slopes(x, 3 * x, 0.25)[0, 0] == pytest.approx(3.0, abs=1e-6)

    def test_shape(self):
        rng = np.random.default_rng(11)
        s = univariate_slopes(rng.standard_normal((30, 4)), rng.standard_normal((30, 3)), 0.5)
        assert s.shape == (4, 3)

    def test_needs_three_rows(self):
        with pytest.raises(InvalidInputError):
            univariate_slopes(np.ones((2, 1)), np.ones((2, 1)), 0.5)
