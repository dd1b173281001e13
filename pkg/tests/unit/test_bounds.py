"""
Unit tests for the inequality toolkit and the bound calculators.
"""

import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import settings as hypothesis_settings
from hypothesis.strategies import floats, just, lists, one_of, tuples

from qrom_lib.bounds import (
    Application,
    BoundReport,
    Decision,
    General,
    WeightedValues,
    application_bound,
    bound_sweep,
    doubling_inequality,
    empirical_vs_bound,
    jensen_bound,
    main_theorem_bound,
    moment_ratio_sequence,
    owf_nu,
    reweight_check,
)
from qrom_lib.errors import ConfigError, EmptyGrid, MissingParam, ZeroMean

distributions = lists(
    tuples(floats(min_value=1e-3, max_value=1.0), one_of(just(0.0), floats(min_value=0.01, max_value=1.0))),
    min_size=1,
    max_size=8,
)


def _weighted(pairs):
    return WeightedValues.normalized([w for w, _ in pairs], [p for _, p in pairs])


class TestWeightedValues:
    """Test class for the scalar inequalities on fixed inputs."""

    def setup_method(self):
        self.cp = WeightedValues((0.5, 0.5), (0.2, 0.8))

    def test_reweight(self):
        mu, reweighted = reweight_check(self.cp)
        assert mu == pytest.approx(0.5)
        assert reweighted == pytest.approx(0.68)

    def test_jensen(self):
        mean, root = jensen_bound(self.cp, 2)
        assert mean == pytest.approx(0.5)
        assert root == pytest.approx(math.sqrt(0.34))

    def test_jensen_needs_g_at_least_one(self):
        with pytest.raises(ConfigError):
            jensen_bound(self.cp, 0.5)

    def test_moment_ratios(self):
        ratios = moment_ratio_sequence(WeightedValues((0.5, 0.5), (0.25, 0.75)), 3)
        assert ratios == pytest.approx((1 / 2, 5 / 8, 7 / 10))

    def test_zero_mean(self):
        zero = WeightedValues((0.5, 0.5), (0.0, 0.0))
        with pytest.raises(ZeroMean):
            reweight_check(zero)
        with pytest.raises(ZeroMean):
            moment_ratio_sequence(zero, 3)

    @pytest.mark.parametrize("weights, values", [
        ((0.5, 0.6), (0.1, 0.1)),
        ((1.0,), (0.1, 0.2)),
        ((), ()),
        ((1.0,), (-0.1,)),
    ])
    def test_invalid_inputs(self, weights, values):
        with pytest.raises(ConfigError):
            WeightedValues(weights, values)


class TestInequalityProperties:
    """Property checks over random distributions."""

    @hypothesis_settings(max_examples=1000, deadline=None)
    @given(distributions)
    def test_reweighting_never_lowers_the_mean(self, pairs):
        cp = _weighted(pairs)
        assume(cp.moment(1) > 0)
        mu, reweighted = reweight_check(cp)
        assert reweighted >= mu - 1e-12

    @hypothesis_settings(max_examples=1000, deadline=None)
    @given(distributions)
    def test_moment_ratios_are_nondecreasing(self, pairs):
        cp = _weighted(pairs)
        assume(cp.moment(1) > 0)
        ratios = moment_ratio_sequence(cp, 6)
        assert all(b >= a - 1e-12 for a, b in zip(ratios, ratios[1:]))

    @hypothesis_settings(max_examples=1000, deadline=None)
    @given(distributions, floats(min_value=1.0, max_value=8.0))
    def test_jensen(self, pairs, g):
        mean, root = jensen_bound(_weighted(pairs), g)
        assert mean <= root + 1e-12

    def test_doubling(self):
        frame = doubling_inequality(np.linspace(0.01, 1.0, 1000))
        assert frame["holds"].all()
        assert frame["power"].iloc[-1] == pytest.approx(2.0)

    def test_doubling_domain(self):
        with pytest.raises(ConfigError):
            doubling_inequality([0.0, 0.5])


class TestApplicationBounds:
    """Closed-form bounds with c = 1."""

    def test_owf(self):
        # P = 4 * (2 + 1 + 2) = 20, so 2 * (20 + 4) / 1024
        report = application_bound("owf", {"s": 4, "t": 2, "n": 1024, "m": 1024})
        assert report.value == pytest.approx(0.046875)
        assert report.parameters["t_samp"] == 1 and report.parameters["t_verify"] == 2
        assert not report.trusted

    def test_prg(self):
        report = application_bound(Application.PRG, {"s": 4, "t": 2, "n": 1024})
        assert report.value == pytest.approx(0.76093, abs=1e-5)

    def test_salt_general(self):
        params = {"nu": 0.1, "s": 8, "t": 2, "t_samp": 1, "t_verify": 1, "k": 256}
        assert application_bound("salt-general", params).value == pytest.approx(0.525)

    def test_salt_decision(self):
        params = {"nu": 0.1, "s": 8, "t": 2, "t_samp": 1, "t_verify": 1, "k": 256}
        assert application_bound("salt-decision", params).value == pytest.approx(0.6)

    def test_salt_decision_without_sampling_cost(self):
        # P = S T here, so the term is (ST/K)^{1/3} = (16/256)^{1/3}
        params = {"nu": 0.1, "s": 8, "t": 2, "t_samp": 0, "t_verify": 0, "k": 256}
        report = application_bound("salt-decision", params)
        assert report.value == pytest.approx(0.1 + (16 / 256) ** (1 / 3))
        assert report.value == pytest.approx(0.496850, abs=1e-6)

    def test_classical_general(self):
        params = {"nu": 0.2, "s": 1, "t": 1, "t_samp": 1, "t_verify": 1}
        assert application_bound("classical-general", params).value == pytest.approx(0.4)

    def test_clamped(self):
        report = application_bound("owf", {"s": 100, "t": 10, "n": 2, "m": 2})
        assert report.value == 1.0
        assert report.raw > 1.0

    def test_missing_parameter(self):
        with pytest.raises(MissingParam):
            application_bound("prg", {"s": 1, "t": 1, "n": None})

    def test_unknown_bound(self):
        with pytest.raises(ConfigError):
            application_bound("sha3", {"s": 1, "t": 1})

    def test_constant_scales_the_formula(self):
        base = application_bound("owf", {"s": 1, "t": 1, "n": 4096, "m": 4096})
        doubled = application_bound("owf", {"s": 1, "t": 1, "n": 4096, "m": 4096}, c=2.0)
        assert doubled.raw == pytest.approx(2 * base.raw)

    def test_sweep(self):
        frame = bound_sweep("prg", {"s": [1, 4], "t": [1, 2], "n": 1024})
        assert len(frame) == 4
        assert {"bound", "s", "t", "n", "value", "raw", "trusted"} <= set(frame.columns)
        assert (frame["bound"] == "prg").all()


class TestMainTheorem:
    """Test class for main_theorem_bound."""

    def test_general_matches_owf(self):
        report = main_theorem_bound(lambda P, T: owf_nu(P, T, 1024, 1024), 4, 2, 1, 2, General())
        assert report.value == pytest.approx(0.046875)
        assert report.parameters["P"] == 20

    def test_decision_grid_minimum(self):
        # nu(P / g) + g = 0.01 / g + g with P = 10, minimized at g = 0.1
        report = main_theorem_bound(lambda P, T: P / 1000, 10, 0, 1, 0, Decision())
        assert report.value == pytest.approx(0.2)
        assert report.gamma == pytest.approx(0.1)

    def test_decision_refinement(self):
        coarse = Decision(gamma_grid=(0.05, 0.5))
        plain = main_theorem_bound(lambda P, T: P / 1000, 10, 0, 1, 0, coarse)
        refined = main_theorem_bound(lambda P, T: P / 1000, 10, 0, 1, 0,
                                     Decision(gamma_grid=(0.05, 0.5), refine=True))
        assert plain.value == pytest.approx(0.25)
        assert refined.value == pytest.approx(0.2, abs=1e-6)
        assert refined.gamma == pytest.approx(0.1, abs=1e-3)

    def test_empty_grid(self):
        with pytest.raises(EmptyGrid):
            main_theorem_bound(lambda P, T: 0.0, 1, 1, 1, 1, Decision(gamma_grid=()))

    def test_gamma_outside_unit_interval(self):
        with pytest.raises(ConfigError):
            main_theorem_bound(lambda P, T: 0.0, 1, 1, 1, 1, Decision(gamma_grid=(0.5, 1.5)))


class TestEmpiricalComparison:
    """Test class for empirical_vs_bound."""

    def test_untrusted_excess_is_informational(self):
        bound = BoundReport("owf", {}, 0.1, 0.1)
        comparison = empirical_vs_bound("owf", 0.75, bound)
        assert comparison.informational_excess and not comparison.violation
        assert comparison.slack == pytest.approx(-0.65)

    def test_trusted_excess_is_a_violation(self):
        bound = BoundReport("owf", {}, 0.1, 0.1, trusted=True)
        assert empirical_vs_bound("owf", 0.75, bound).violation

    def test_within_bound(self):
        comparison = empirical_vs_bound("owf", 0.05, BoundReport("owf", {}, 0.1, 0.1, trusted=True))
        assert not comparison.violation and not comparison.informational_excess

    def test_not_a_probability(self):
        with pytest.raises(ConfigError):
            empirical_vs_bound("owf", 1.5, BoundReport("owf", {}, 0.1, 0.1))
