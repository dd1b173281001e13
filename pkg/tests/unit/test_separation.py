"""
Unit tests for list recovery, classical advice coverage and the quantum contrast.
"""

import itertools
import math
from unittest.mock import patch

import numpy as np
import pytest

from qrom_lib.adversary import default_layout, identity_strategy
from qrom_lib.bfqrom import ClassicalFixing
from qrom_lib.config import Settings
from qrom_lib.errors import CapExceeded, ConfigError, DimensionMismatch, OracleError
from qrom_lib.game import YzCode, owf_game
from qrom_lib.oracle import enumerate_oracles
from qrom_lib.separation import (
    GREEDY_RATIO,
    CoverageInstance,
    ListRecoveryInstance,
    best_classical_advice,
    build_coverage_instance,
    counting_bound,
    fixing_regime_check,
    good_set,
    lookup_strategy,
    optimal_classical_advice,
    quantum_vs_classical_report,
    readout_coverage_instance,
)
from qrom_lib.spectral import optimal_nonuniform_value


class TestListRecovery:
    """Test class for the Good set and the counting bound."""

    def setup_method(self):
        self.code = YzCode(2, 2, ((0, 0), (1, 1)))

    def test_exact_lists(self):
        good, count = good_set(ListRecoveryInstance(self.code, ({0}, {0}), 0.0))
        assert good == ((0, 0),) and count == 1

    def test_full_lists(self):
        _, count = good_set(ListRecoveryInstance(self.code, ({0, 1}, {0, 1}), 0.0))
        assert count == 2

    def test_full_slack(self):
        _, count = good_set(ListRecoveryInstance(self.code, (set(), set()), 1.0))
        assert count == 2

    def test_counting_bound(self):
        assert counting_bound(1, 2, 0.5) == pytest.approx(0.75)
        assert counting_bound(8, 2, 0.0) == 1.0

    @pytest.mark.parametrize("seed", range(12))
    def test_good_set_matches_subset_search(self, seed):
        rng = np.random.default_rng(seed)
        n, sigma = int(rng.integers(1, 5)), int(rng.integers(1, 4))
        words = list(itertools.product(range(sigma), repeat=n))
        picked = rng.choice(len(words), size=int(rng.integers(1, len(words) + 1)), replace=False)
        code = YzCode(n, sigma, tuple(words[i] for i in sorted(picked)))
        lists = tuple(frozenset(int(c) for c in range(sigma) if rng.random() < 0.5) for _ in range(n))
        zeta = float(rng.choice([0.0, 0.25, 0.5, 0.75, 1.0]))

        # w is good when some Z of size zeta*n covers every coordinate outside the lists
        size = math.floor(zeta * n + 1e-12)
        expected = tuple(
            w for w in code.codewords
            if any(all(w[i] in lists[i] for i in range(n) if i not in Z)
                   for Z in itertools.combinations(range(n), size))
        )

        good, count = good_set(ListRecoveryInstance(code, lists, zeta))
        assert good == expected
        assert count == len(expected)

    @pytest.mark.parametrize("lists, zeta, ell", [
        (({0},), 0.5, None),
        (({0}, {0}), 1.5, None),
        (({0, 1}, {0}), 0.5, 1),
    ])
    def test_invalid_instances(self, lists, zeta, ell):
        with pytest.raises(ConfigError):
            ListRecoveryInstance(self.code, lists, zeta, ell)


class TestCoverage:
    """Test class for weighted max-coverage over response maps."""

    def setup_method(self):
        self.cov = CoverageInstance(
            np.full(4, 0.25),
            np.array([[1, 0], [1, 0], [0, 1], [0, 1]], dtype=float),
            ("A", "B"),
        )

    def test_zero_bits(self):
        assert optimal_classical_advice(self.cov, 0).value == pytest.approx(0.5)

    def test_one_bit(self):
        result = optimal_classical_advice(self.cov, 1)
        assert result.value == pytest.approx(1.0)
        assert sorted(result.chosen) == [0, 1]

    @pytest.mark.parametrize("seed", range(12))
    def test_greedy_ratio(self, seed):
        rng = np.random.default_rng(seed)
        oracles, maps = int(rng.integers(2, 13)), int(rng.integers(2, 11))
        win = rng.random((oracles, maps))
        # 0/1 columns make coverage overlap the way response maps do
        if seed % 2:
            win = (win < 0.4).astype(float)
        cov = CoverageInstance(rng.dirichlet(np.ones(oracles)), win, tuple(range(maps)))
        # S = 4 buys 16 >= maps strings
        for S in (0, 1, 2, 4):
            exact = optimal_classical_advice(cov, S, "exact")
            greedy = optimal_classical_advice(cov, S, "greedy")
            assert greedy.value >= GREEDY_RATIO * exact.value - 1e-12
            assert greedy.value <= exact.value + 1e-12
        assert greedy.value == pytest.approx(exact.value)
        assert exact.value == pytest.approx(float(cov.weights @ win.max(axis=1)))

    def test_zero_bits_greedy_is_exact(self):
        assert optimal_classical_advice(self.cov, 0, "greedy").value == pytest.approx(
            optimal_classical_advice(self.cov, 0, "exact").value)

    def test_single_map(self):
        cov = CoverageInstance(np.array([0.5, 0.3, 0.2]), np.array([[1.0], [0.0], [0.5]]), ("only",))
        for S in (0, 3):
            for method in ("exact", "greedy"):
                result = optimal_classical_advice(cov, S, method)
                assert result.chosen == (0,)
                assert result.value == pytest.approx(0.6)

    def test_subset_cap(self):
        with pytest.raises(CapExceeded):
            optimal_classical_advice(self.cov, 1, "exact", cap=0)

    def test_fallback_to_greedy(self):
        with patch("qrom_lib.separation.get_settings", return_value=Settings(subset_cap=0)):
            result = best_classical_advice(self.cov, 1)
        assert result.method == "greedy"
        assert result.value == pytest.approx(1.0)

    def test_unknown_method(self):
        with pytest.raises(ConfigError):
            optimal_classical_advice(self.cov, 1, "annealing")

    def test_shape_mismatch(self):
        with pytest.raises(DimensionMismatch):
            CoverageInstance(np.full(3, 1 / 3), np.zeros((4, 2)), ("A", "B"))


class TestOwfAdvice:
    """Classical and quantum advice on OWF with N = M = 2."""

    def setup_method(self):
        self.game = owf_game(2, 2)
        self.ensemble = enumerate_oracles(2, 2)

    def test_response_maps(self):
        cov = build_coverage_instance(self.game, self.ensemble)
        assert cov.num_maps == 4
        assert optimal_classical_advice(cov, 0).value == pytest.approx(0.75)
        assert optimal_classical_advice(cov, 1).value == pytest.approx(1.0)

    def test_map_cap(self):
        with pytest.raises(CapExceeded):
            build_coverage_instance(self.game, self.ensemble, cap=3)

    def test_explicit_maps(self):
        cov = build_coverage_instance(self.game, self.ensemble, maps=[{0: 0, 1: 1}])
        assert cov.labels == ((0, 1),)
        assert cov.value([0]) == pytest.approx(0.75)

    def test_lookup_strategy_realizes_the_choice(self):
        cov = build_coverage_instance(self.game, self.ensemble)
        result = optimal_classical_advice(cov, 1)
        strat, layout = lookup_strategy(cov, result.chosen, self.game)
        assert strat.query_count == 0
        assert layout.advice_dimension == 2
        value = optimal_nonuniform_value(self.game, strat, self.ensemble, layout)
        assert value == pytest.approx(result.value)

    def test_lookup_needs_response_maps(self):
        layout = default_layout(self.game)
        cov = readout_coverage_instance(self.game, identity_strategy(), self.ensemble, layout)
        with pytest.raises(ConfigError):
            lookup_strategy(cov, (0,), self.game)

    def test_report(self):
        layout = default_layout(self.game)
        report = quantum_vs_classical_report(self.game, identity_strategy(), self.ensemble, layout, 1)
        assert report["quantum_value"] == pytest.approx(0.75)
        assert report["classical_value"] == pytest.approx(0.75)
        assert report["gap"] == pytest.approx(0.0, abs=1e-12)
        assert report["classical_unrestricted_value"] == pytest.approx(1.0)
        assert report["classical_method"] == "exact"

    def test_report_needs_enough_qubits(self):
        layout = default_layout(self.game)
        with pytest.raises(DimensionMismatch):
            quantum_vs_classical_report(self.game, identity_strategy(), self.ensemble, layout, 0)


class TestFixingRegime:
    """Test class for the fixing-regime counting check."""

    def setup_method(self):
        self.code = YzCode(3, 2, ((0, 0, 0), (1, 1, 1), (0, 1, 1), (1, 0, 0)))

    def test_no_fixing(self):
        check = fixing_regime_check(self.code, ClassicalFixing(()), 0.5)
        assert check.best_value == pytest.approx(1 / 8)
        assert check.good_count == 0
        assert check.holds

    def test_two_fixed_points(self):
        # H(0, 0) = H(1, 0) = 0 pins the first two bits of codeword (0, 0, 0)
        check = fixing_regime_check(self.code, ClassicalFixing(((0, 0), (2, 0))), 0.5)
        assert check.best_value == pytest.approx(0.28125)
        assert check.good_count == 1
        assert check.bound == pytest.approx(1 / 8 + 2 ** -1.5)
        assert check.holds

    def test_fixing_outside_the_oracle(self):
        with pytest.raises(OracleError):
            fixing_regime_check(self.code, ClassicalFixing(((6, 0),)), 0.5)
