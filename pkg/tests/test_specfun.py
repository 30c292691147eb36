import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special

from fracplankton.errors import DegenerateOrderError, DomainError, NumericalFailure
from fracplankton.specfun import (
    FractionalOrder,
    SampledFunction,
    caputo_derivative,
    fractional_integral,
    ml_evaluate,
    mittag_leffler,
    mittag_leffler2,
    zeta_density,
    zeta_kernel_transform,
    zeta_moment,
)


def ml_reference(alpha, beta, z):
    """Power series in high precision; only for moderate |z|^(1/alpha)."""
    a, b, zz = mp.mpf(alpha), mp.mpf(beta), mp.mpf(z)
    with mp.workdps(40 + int(abs(z) ** (1.0 / alpha) / 2.0)):
        s = mp.mpf(0)
        k = 0
        while True:
            t = zz ** k * mp.rgamma(a * k + b)
            s += t
            if k > 10 and abs(t) < mp.mpf(10) ** -40 and abs(t) < abs(s) * mp.mpf(10) ** -30:
                return float(s)
            k += 1


# values of the power series summed with 500-1000 significant digits
# (34000 terms for alpha = 0.1, 22000 for alpha = 0.3)
BRUTE_FORCE = [
    (0.1, 1.0, -2.0, 0.3200153359597273993745297),
    (0.1, 0.5, -2.0, 0.16318500422722145662),
    (0.3, 0.5, -10.0, 0.02247280492110130624729),
    (0.3, 1.0, -10.0, 0.07264972907277208535628),
]


class TestFractionalOrder:
    @pytest.mark.parametrize("a", [1e-9, 0.5, 1.0])
    def test_accepts(self, a):
        assert FractionalOrder(a).alpha == a

    @pytest.mark.parametrize("a", [0.0, -0.1, 1.0000001, float("nan"), float("inf")])
    def test_rejects(self, a):
        with pytest.raises(DomainError):
            FractionalOrder(a)


class TestSampledFunction:
    def test_must_start_at_zero(self):
        with pytest.raises(DomainError):
            SampledFunction(np.array([0.1, 1.0]), np.array([1.0, 2.0]))

    def test_strictly_increasing(self):
        with pytest.raises(DomainError):
            SampledFunction(np.array([0.0, 1.0, 1.0]), np.zeros(3))

    def test_length(self):
        with pytest.raises(DomainError):
            SampledFunction(np.array([0.0]), np.array([1.0]))
        with pytest.raises(DomainError):
            SampledFunction(np.array([0.0, 1.0]), np.array([1.0]))

    def test_interpolates(self):
        f = SampledFunction.from_callable(lambda s: 2 * s, np.linspace(0, 1, 11))
        assert f(0.55) == pytest.approx(1.1)
        assert f.horizon == 1.0


class TestMittagLeffler:
    def test_exp(self):
        assert mittag_leffler(1.0, 1.0) == 2.718281828459045
        assert mittag_leffler2(1.0, 1.0, 2.0) == pytest.approx(7.389056098930650, abs=1e-14)

    def test_zero_argument(self):
        for a in (0.1, 0.3, 0.7, 1.0, 1.5, 2.0):
            assert mittag_leffler(a, 0.0) == 1.0

    def test_beta_one_reduction(self):
        assert mittag_leffler2(0.6, 1.0, -0.5) == mittag_leffler(0.6, -0.5)

    def test_e12(self):
        assert mittag_leffler2(1.0, 2.0, 1.0) == pytest.approx(math.e - 1.0, abs=1e-14)
        for z in (-30.0, -3.0, -0.2, 0.4, 5.0):
            assert mittag_leffler2(1.0, 2.0, z) == pytest.approx(math.expm1(z) / z, rel=1e-13)

    def test_half_against_erfc_quadrature(self):
        # E_{1/2}(z) = exp(z^2) erfc(-z); erfc by quadrature of its defining integral
        erfc1 = 2.0 / mp.sqrt(mp.pi) * mp.quad(lambda t: mp.exp(-t * t), [1, mp.inf])
        expected = float(mp.e * erfc1)
        assert mittag_leffler(0.5, -1.0) == pytest.approx(expected, abs=1e-13)

    def test_half_large_negative(self):
        x = np.linspace(0.0, 50.0, 201)
        got = mittag_leffler(0.5, -x)
        np.testing.assert_allclose(got, special.erfcx(x), rtol=0, atol=1e-12)

    def test_exp_range(self):
        z = np.linspace(-10.0, 3.0, 131)
        np.testing.assert_allclose(mittag_leffler(1.0, z), np.exp(z), rtol=1e-13, atol=1e-13)

    def test_order_two(self):
        for x in (0.5, 2.0, 4.0):
            assert mittag_leffler(2.0, -x * x) == pytest.approx(math.cos(x), abs=1e-12)
            assert mittag_leffler(2.0, x * x) == pytest.approx(math.cosh(x), rel=1e-12)

    @pytest.mark.parametrize("alpha,beta,z,expected", BRUTE_FORCE)
    def test_brute_force_series(self, alpha, beta, z, expected):
        assert mittag_leffler2(alpha, beta, z) == pytest.approx(expected, abs=1e-12)

    @pytest.mark.parametrize("alpha", [0.3, 0.5, 0.7, 0.9, 1.3, 1.7])
    @pytest.mark.parametrize("beta_shift", [0.0, 1.0, 2.0])
    def test_branches_against_reference(self, alpha, beta_shift):
        beta = alpha + beta_shift if beta_shift else 1.0
        for z in (-20.0, -6.0, -1.0, 2.0, 10.0):
            if abs(z) ** (1.0 / alpha) > 400:
                continue
            ref = ml_reference(alpha, beta, z)
            got = mittag_leffler2(alpha, beta, z)
            assert abs(got - ref) <= 1e-12 * max(1.0, abs(ref)), (alpha, beta, z)

    def test_branch_reported(self):
        assert ml_evaluate(0.5, 1.0, -1.0).branch == "series"
        assert ml_evaluate(0.5, 1.0, -30.0).branch == "integral"
        assert ml_evaluate(1.0, 2.0, -30.0).branch == "closed_form"
        res = ml_evaluate(0.8, 1.0, -0.5)
        assert res.terms > 0 and 0.0 <= res.remainder < 1e-14

    def test_nonconvergence_reports_partial(self):
        with pytest.raises(NumericalFailure) as info:
            ml_evaluate(0.5, 1.0, -1.0, max_terms=5)
        assert info.value.partial is not None and info.value.bound is not None

    @pytest.mark.parametrize("alpha", [0.0, -1.0, 2.5])
    def test_domain(self, alpha):
        with pytest.raises(DomainError):
            mittag_leffler(alpha, 1.0)
        with pytest.raises(DomainError):
            mittag_leffler2(0.5, 0.0, 1.0)
        with pytest.raises(DomainError):
            mittag_leffler(0.5, float("nan"))

    def test_array_shape(self):
        z = np.array([[0.0, -1.0], [-10.0, 2.0]])
        out = mittag_leffler(0.5, z)
        assert out.shape == (2, 2)
        for i in range(2):
            for j in range(2):
                assert out[i, j] == pytest.approx(mittag_leffler(0.5, float(z[i, j])), rel=1e-14)

    @pytest.mark.parametrize("alpha", [0.3, 0.5, 0.8, 1.0])
    def test_completely_monotone_on_negative_axis(self, alpha):
        x = np.linspace(0.0, 50.0, 100)
        v = mittag_leffler(alpha, -x)
        assert np.all(v > 0.0) and np.all(v <= 1.0)
        assert np.all(np.diff(v) <= 0.0)

    @settings(max_examples=60, deadline=None)
    @given(alpha=st.floats(0.3, 1.0), z=st.floats(-5.0, 3.0))
    def test_matches_reference_property(self, alpha, z):
        ref = ml_reference(alpha, 1.0, z)
        assert abs(mittag_leffler(alpha, z) - ref) <= 1e-12 * max(1.0, abs(ref))


class TestZeta:
    def test_half_is_gaussian(self):
        th = np.linspace(0.01, 8.0, 60)
        np.testing.assert_allclose(zeta_density(0.5, th), np.exp(-th ** 2 / 4) / math.sqrt(math.pi),
                                   rtol=1e-12, atol=1e-300)

    def test_scalar_matches_array(self):
        th = np.array([0.2, 0.9, 1.0, 1.1, 3.0, 7.0])
        arr = zeta_density(0.7, th)
        for t, v in zip(th, arr):
            assert zeta_density(0.7, float(t)) == pytest.approx(v, rel=1e-8, abs=1e-300)

    def test_large_theta_against_mpmath(self):
        # Zolotarev-Kanter integral evaluated independently at 40 digits
        a, th = mp.mpf("0.7"), mp.mpf(3)
        with mp.workdps(40):
            A = lambda p: (mp.sin(a * p) ** a * mp.sin((1 - a) * p) ** (1 - a) / mp.sin(p)) ** (1 / (1 - a))
            sc = th ** (1 / (1 - a))
            ref = th ** (a / (1 - a)) / (mp.pi * (1 - a)) * mp.quad(lambda p: A(p) * mp.exp(-sc * A(p)),
                                                                    [0, 0.5, 1, 2, mp.pi])
        assert zeta_density(0.7, 3.0) == pytest.approx(float(ref), rel=1e-10)

    @pytest.mark.parametrize("alpha", [0.3, 0.6, 0.9])
    def test_continuous_across_representations(self, alpha):
        left = zeta_density(alpha, 1.0)
        right = zeta_density(alpha, 1.0 + 1e-12)
        assert right == pytest.approx(left, rel=1e-9)

    def test_degenerate(self):
        with pytest.raises(DegenerateOrderError):
            zeta_density(1.0, 0.5)
        with pytest.raises(DomainError):
            zeta_density(0.5, 0.0)
        with pytest.raises(DomainError):
            zeta_density(0.5, -1.0)

    def test_nonnegative(self):
        for a in (0.2, 0.5, 0.95):
            assert np.all(zeta_density(a, np.geomspace(1e-3, 30, 80)) >= 0.0)

    @pytest.mark.parametrize("alpha", [0.3, 0.5, 0.8])
    def test_second_moment(self, alpha):
        assert zeta_moment(alpha, 2.0) == pytest.approx(2.0 / special.gamma(1 + 2 * alpha), abs=1e-6)

    @pytest.mark.parametrize("alpha", [0.4, 0.6, 0.9])
    @pytest.mark.parametrize("z", [0.25, 1.0, 4.0])
    def test_kernel_identity(self, alpha, z):
        assert zeta_kernel_transform(alpha, z) == pytest.approx(mittag_leffler2(alpha, alpha, -z), abs=1e-5)


class TestFractionalIntegral:
    def test_constant_beta_one(self):
        f = SampledFunction.constant(3.0, 2.0)
        assert fractional_integral(1.0, f, 1.5) == pytest.approx(4.5, rel=1e-14)

    def test_constant(self):
        f = SampledFunction.constant(1.0, 1.0)
        for t in (0.3, 1.0):
            assert fractional_integral(0.5, f, t) == pytest.approx(t ** 0.5 / special.gamma(1.5), rel=1e-13)

    def test_linear(self):
        f = SampledFunction.from_callable(lambda s: s, np.linspace(0.0, 1.0, 1000))
        assert fractional_integral(0.5, f, 1.0) == pytest.approx(0.7522527780, abs=1e-4)

    def test_beta_one_is_trapezoid(self):
        grid = np.linspace(0.0, 2.0, 41)
        f = SampledFunction.from_callable(np.sin, grid)
        assert fractional_integral(1.0, f, 2.0) == pytest.approx(integrate.trapezoid(np.sin(grid), grid), rel=1e-13)

    def test_between_nodes_and_origin(self):
        f = SampledFunction.from_callable(lambda s: s, np.linspace(0.0, 1.0, 11))
        assert fractional_integral(0.5, f, 0.0) == 0.0
        exact = special.gamma(2) / special.gamma(2.5) * 0.55 ** 1.5
        assert fractional_integral(0.5, f, 0.55) == pytest.approx(exact, rel=1e-12)

    def test_outside_range(self):
        f = SampledFunction.constant(1.0, 1.0)
        with pytest.raises(DomainError):
            fractional_integral(0.5, f, 1.5)
        with pytest.raises(DomainError):
            fractional_integral(0.0, f, 0.5)


class TestCaputo:
    def test_constant(self):
        f = SampledFunction.constant(5.0, 1.0, n=20)
        for b in (0.2, 0.7, 1.0):
            assert caputo_derivative(b, f, 0.8) == 0.0

    def test_linear(self):
        f = SampledFunction.from_callable(lambda s: s, np.linspace(0.0, 1.0, 101))
        assert caputo_derivative(0.5, f, 1.0) == pytest.approx(1.1283791671, abs=1e-3)

    def test_square_tends_to_derivative(self):
        f = SampledFunction.from_callable(lambda s: s * s, np.linspace(0.0, 1.0, 2001))
        errs = [abs(caputo_derivative(b, f, 1.0) - 2.0) for b in (0.9, 0.99, 0.999, 1.0)]
        assert errs == sorted(errs, reverse=True)
        assert errs[-1] < 1e-3

    def test_origin_rejected(self):
        f = SampledFunction.constant(1.0, 1.0)
        with pytest.raises(DomainError):
            caputo_derivative(0.5, f, 0.0)
        with pytest.raises(DomainError):
            caputo_derivative(1.5, f, 0.5)

    @pytest.mark.parametrize("beta", [0.3, 0.6, 0.9])
    def test_integral_inverts_derivative(self, beta):
        grid = np.linspace(0.0, 1.0, 1001)
        phi = SampledFunction.from_callable(lambda s: np.sin(2 * s) + s * s, grid)
        d = np.array([0.0] + [caputo_derivative(beta, phi, t) for t in grid[1:]])
        d[0] = d[1]
        back = fractional_integral(beta, SampledFunction(grid, d), 1.0)
        assert back == pytest.approx(phi(1.0) - phi(0.0), abs=5e-3)
