import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special

from conftest import fixed_point_oracle, linear_params, random_params
from fracplankton.analysis import (
    CORRECTIONS,
    GronwallProblem,
    StateBox,
    empirical_lipschitz,
    gronwall_bound_constant_q,
    gronwall_bound_general,
    gronwall_bound_ml,
    lipschitz_constants,
)
from fracplankton.errors import DomainError, NumericalFailure, PreconditionError
from fracplankton.model import ModelParams, rhs_nonlinear
from fracplankton.specfun import SampledFunction


class TestStateBox:
    def test_positive(self):
        with pytest.raises(DomainError):
            StateBox(1.0, 0.0, 1.0)
        with pytest.raises(DomainError):
            StateBox.from_sequence([1.0, 1.0])

    def test_contains(self):
        b = StateBox(1, 2, 3)
        assert b.contains([1, 2, 3]) and b.contains([0, -1e-13, 0])
        assert not b.contains([1.01, 0, 0]) and not b.contains([0, -1e-9, 0])


class TestLipschitz:
    def test_all_ones_table(self, ones):
        rep = lipschitz_constants(ones, StateBox(1, 1, 1))
        assert rep.K == (1, 2, 1, 2, 1, 2, 1, 3, 1, 1, 2, 1, 1)
        assert (rep.L1, rep.L2, rep.L3, rep.L) == (6, 9, 4, 9)
        assert rep.corrections == CORRECTIONS

    def test_uncorrected_variant_agrees_at_unit_constants(self, ones):
        rep = lipschitz_constants(ones, StateBox(1, 1, 1), uncorrected=True)
        assert rep.L == 9 and rep.corrections == ()

    def test_k11_power(self, ones):
        p = ones.replace(c4=2.0)
        assert lipschitz_constants(p, StateBox(1, 1, 1)).k(11) == 0.5
        assert lipschitz_constants(p, StateBox(1, 1, 1), uncorrected=True).k(11) == 0.125

    def test_k8_keeps_gamma(self, ones):
        p = ones.replace(gamma=0.25)
        assert lipschitz_constants(p, StateBox(1, 1, 1)).k(8) == 1.5
        assert lipschitz_constants(p, StateBox(1, 1, 1), uncorrected=True).k(8) == 3.0

    def test_k12_carries_zooplankton_bound(self, ones):
        assert lipschitz_constants(ones, StateBox(1, 1, 3)).k(12) == 3.0
        assert lipschitz_constants(ones, StateBox(1, 1, 3), uncorrected=True).k(12) == 1.0

    def test_zero_nonlinearity(self):
        rep = lipschitz_constants(linear_params(), StateBox(3, 3, 3))
        assert all(k == 0 for k in rep.K) and rep.L == 0

    def test_assembly_identities(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            p = random_params(rng)
            rep = lipschitz_constants(p, StateBox(*rng.uniform(0.1, 3, 3)))
            K = (None,) + rep.K
            assert rep.L1 == K[1] + K[3] + K[5] + K[7] + K[11]
            assert rep.L2 == K[2] + K[4] + K[8] + K[9] + K[12]
            assert rep.L3 == K[6] + K[10] + K[13]
            assert rep.L == max(rep.L1, rep.L2, rep.L3)

    def test_monotone_in_box(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            p = random_params(rng)
            box = StateBox(*rng.uniform(0.1, 3, 3))
            small, big = lipschitz_constants(p, box), lipschitz_constants(p, box.scaled(2.0))
            assert all(b >= s for s, b in zip(small.K, big.K))

    def test_to_dict(self, ones):
        d = lipschitz_constants(ones, StateBox(1, 1, 1)).to_dict()
        assert d["K8"] == 3 and d["L"] == 9 and d["box"] == {"M1": 1.0, "M2": 1.0, "M3": 1.0}
        assert len(d["corrections_applied"]) == 3


class TestEmpirical:
    def test_zero(self):
        assert empirical_lipschitz(linear_params(), StateBox(1, 1, 1), 1000, 0) == 0.0

    def test_all_ones(self, ones):
        emp = empirical_lipschitz(ones, StateBox(1, 1, 1), 100_000, 7)
        assert 0 < emp <= 9

    def test_deterministic(self, ones):
        a = empirical_lipschitz(ones, StateBox(1, 2, 1), 5000, 42)
        b = empirical_lipschitz(ones, StateBox(1, 2, 1), 5000, 42)
        assert a == b
        assert a == empirical_lipschitz(ones, StateBox(1, 2, 1), 5000, 42, chunk=5000)

    def test_tiny_box_near_jacobian(self, ones):
        box = StateBox(1e-6, 1e-6, 1e-6)
        emp = empirical_lipschitz(ones, box, 20000, 3)
        # largest column 1-norm of the Jacobian of f at the origin, by forward differences
        h = 1e-7
        cols = []
        for i in range(3):
            e = np.zeros((3, 1))
            e[i] = h
            cols.append(np.abs(rhs_nonlinear(ones, e)).sum() / h)
        assert emp <= max(cols) * (1 + 1e-3)
        assert emp <= lipschitz_constants(ones, box).L

    def test_rejects_small_n(self, ones):
        with pytest.raises(DomainError):
            empirical_lipschitz(ones, StateBox(1, 1, 1), 1, 0)

    @settings(max_examples=15, deadline=None)
    @given(seed=st.integers(0, 2 ** 31), scale=st.floats(0.2, 3.0))
    def test_certificate_property(self, seed, scale):
        rng = np.random.default_rng(seed)
        p = random_params(rng)
        box = StateBox(*(rng.uniform(0.2, 1.0, 3) * scale))
        assert empirical_lipschitz(p, box, 5000, seed) <= lipschitz_constants(p, box).L


class TestGronwall:
    def test_b_zero(self):
        prob = GronwallProblem(2.5, 0.0, 0.5, 1.0)
        assert gronwall_bound_constant_q(prob, 0.7).value == 2.5

    @pytest.mark.parametrize("b,t", [(0.5, 1.0), (2.0, 1.0), (3.0, 2.0)])
    def test_classical_exponential(self, b, t):
        prob = GronwallProblem(1.5, b, 1.0, t)
        assert gronwall_bound_constant_q(prob, t).value == pytest.approx(1.5 * math.exp(b * t), rel=1e-8)

    def test_half_order_unit(self):
        prob = GronwallProblem(1.0, 1.0, 0.5, 1.0)
        bound = gronwall_bound_constant_q(prob, 1.0)
        ml = gronwall_bound_ml(1.0, 1.0, 0.5, 1.0)
        assert abs(bound.value - ml) <= bound.remainder + 1e-13 * ml
        assert ml == pytest.approx(special.erfcx(-math.sqrt(math.pi)), rel=1e-12)

    def test_ml_closed_forms(self):
        assert gronwall_bound_ml(3.0, 0.0, 0.7, 2.0) == 3.0
        assert gronwall_bound_ml(0.0, 5.0, 0.7, 2.0) == 0.0
        assert gronwall_bound_ml(2.0, 3.0, 1.0, 1.0) == pytest.approx(40.171073846375336, rel=1e-14)
        with pytest.raises(DomainError):
            gronwall_bound_ml(-1.0, 1.0, 0.5, 1.0)

    def test_truncation_error_raised(self):
        prob = GronwallProblem(1.0, 2.0, 0.5, 1.0)
        with pytest.raises(NumericalFailure) as info:
            gronwall_bound_constant_q(prob, 1.0, n_terms=10)
        assert "n_terms" in str(info.value)
        assert gronwall_bound_constant_q(prob, 1.0, n_terms=200).remainder < 1e-6

    def test_sampled_h_matches_constant(self):
        grid = np.linspace(0.0, 1.0, 201)
        h = SampledFunction.constant(1.0, 1.0, n=201)
        a = gronwall_bound_constant_q(GronwallProblem(h, 1.0, 0.6, 1.0), 1.0)
        b = gronwall_bound_constant_q(GronwallProblem(1.0, 1.0, 0.6, 1.0), 1.0)
        assert a.value == pytest.approx(b.value, rel=1e-12)
        del grid

    def test_bounds_dominate_forcing(self):
        grid = np.linspace(0.0, 1.0, 101)
        h = SampledFunction.from_callable(lambda s: 1.0 + s, grid)
        prob = GronwallProblem(h, 0.8, 0.7, 1.0)
        for t in (0.0, 0.3, 1.0):
            assert gronwall_bound_constant_q(prob, t).value >= h(t)

    def test_general_reduces_to_constant(self):
        prob = GronwallProblem(1.0, 0.8, 0.7, 1.0)
        assert gronwall_bound_general(prob, 0.9).value == gronwall_bound_constant_q(prob, 0.9).value

    def test_general_zero_forcing(self):
        q = SampledFunction.from_callable(lambda s: s, np.linspace(0, 1, 11))
        assert gronwall_bound_general(GronwallProblem(0.0, q, 0.5, 1.0), 1.0).value == 0.0

    def test_general_against_fixed_point(self):
        grid = np.linspace(0.0, 1.0, 2001)
        q = SampledFunction.from_callable(lambda s: s, grid)
        prob = GronwallProblem(1.0, q, 0.5, 1.0)
        bound = gronwall_bound_general(prob, 1.0)
        _, p = fixed_point_oracle(lambda s: np.ones_like(s), q(1.0), 0.5, 1.0)
        assert bound.value == pytest.approx(p[-1], abs=1e-4)

    def test_general_dominates_unfrozen_solution(self):
        # the solution with q inside the integral sits below the frozen-q bound
        grid = np.linspace(0.0, 1.0, 401)
        q = SampledFunction.from_callable(lambda s: s, grid)
        bound = gronwall_bound_general(GronwallProblem(1.0, q, 0.5, 1.0), 1.0).value
        _, p = fixed_point_oracle(lambda s: np.ones_like(s), lambda s: s, 0.5, 1.0, n=400)
        assert p[-1] <= bound

    def test_general_rejects_decreasing_q(self):
        q = SampledFunction.from_callable(lambda s: 1.0 - s, np.linspace(0, 1, 11))
        with pytest.raises(PreconditionError):
            gronwall_bound_general(GronwallProblem(1.0, q, 0.5, 1.0), 0.5)

    def test_problem_validation(self):
        with pytest.raises(DomainError):
            GronwallProblem(1.0, 1.0, 0.0, 1.0)
        with pytest.raises(PreconditionError):
            GronwallProblem(-1.0, 1.0, 0.5, 1.0)
        with pytest.raises(DomainError):
            gronwall_bound_constant_q(GronwallProblem(1.0, 1.0, 0.5, 1.0), 2.0)

    @pytest.mark.parametrize("beta", [0.5, 0.8])
    @pytest.mark.parametrize("b", [0.5, 2.0])
    def test_series_vs_closed_form(self, beta, b):
        prob = GronwallProblem(1.0, b, beta, 1.0)
        s = gronwall_bound_constant_q(prob, 1.0, n_terms=200)
        ml = gronwall_bound_ml(1.0, b, beta, 1.0)
        assert abs(s.value - ml) <= s.remainder + 4 * np.finfo(float).eps * ml
