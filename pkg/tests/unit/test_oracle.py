"""
Unit tests for oracle tables, ensembles and the oracle unitary.
"""

import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import settings as hypothesis_settings
from hypothesis.strategies import floats, integers, lists

from qrom_lib.errors import CapExceeded, DimensionMismatch, OracleError, SaltOutOfRange
from qrom_lib.oracle import (
    CountingOracle,
    EnsembleMode,
    LazyOracle,
    OracleSlice,
    OracleTable,
    SaltedOracleTable,
    ensemble_from_tables,
    enumerate_oracles,
    lazy_query,
    oracle_unitary_step,
    sample_oracles,
    salted_view,
)
from qrom_lib.registers import RegisterLayout


class TestOracleTable:
    """Test class for OracleTable."""

    def test_evaluation(self):
        H = OracleTable.from_values([1, 0, 2], 3)
        assert (H(0), H(1), H(2)) == (1, 0, 2)

    def test_entry_out_of_range(self):
        with pytest.raises(OracleError):
            OracleTable(2, 2, (0, 2))

    def test_query_out_of_domain(self):
        H = OracleTable(2, 2, (0, 1))
        with pytest.raises(OracleError):
            H(2)

    def test_json_file(self, tmp_path):
        H = OracleTable(3, 4, (3, 0, 2))
        path = tmp_path / "oracle.json"
        H.save_json(str(path))
        assert OracleTable.load_json(str(path)) == H

    def test_from_dict_missing_field(self):
        with pytest.raises(OracleError):
            OracleTable.from_dict({"n": 2, "m": 2})


class TestCountingAndSlices:
    """Test class for CountingOracle and OracleSlice."""

    def setup_method(self):
        self.H = OracleTable(4, 3, (2, 1, 0, 1))

    def test_counting(self):
        counter = CountingOracle(self.H)
        counter(0)
        counter(3)
        assert counter.calls == 2
        assert counter.reset() == 2
        assert counter.calls == 0

    def test_slice_queries_are_counted_by_parent(self):
        counter = CountingOracle(self.H)
        view = OracleSlice(counter, 2, 2)
        assert (view(0), view(1)) == (0, 1)
        assert counter.calls == 2
        assert view.domain_size == 2 and view.range_size == 3

    def test_slice_outside_parent(self):
        with pytest.raises(SaltOutOfRange):
            OracleSlice(self.H, 3, 2)

    def test_salted_view(self):
        salted = SaltedOracleTable(2, self.H)
        assert salted_view(salted, 1).entries == (0, 1)
        with pytest.raises(SaltOutOfRange):
            salted_view(salted, 2)


class TestLazyOracle:
    """Test class for LazyOracle."""

    def test_consistent_answers(self):
        o = LazyOracle(8, 5, seed=3)
        first = lazy_query(o, 4)
        assert lazy_query(o, 4) == first
        assert o.is_sampled(4) and not o.is_sampled(5)

    def test_replay_is_deterministic(self):
        a, b = LazyOracle(8, 5, seed=11), LazyOracle(8, 5, seed=11)
        assert [a(x) for x in (3, 1, 3, 7)] == [b(x) for x in (3, 1, 3, 7)]


class TestEnsembles:
    """Test class for oracle ensembles."""

    def test_exhaustive_count_and_order(self):
        ensemble = enumerate_oracles(2, 3)
        assert len(ensemble) == 9
        assert ensemble.mode is EnsembleMode.EXHAUSTIVE
        assert [H.entries for H in ensemble.tables] == list(itertools.product(range(3), repeat=2))
        assert sum(ensemble.weights) == pytest.approx(1.0)

    def test_single_point_domain(self):
        assert len(enumerate_oracles(1, 4)) == 4

    def test_cap(self):
        with pytest.raises(CapExceeded):
            enumerate_oracles(4, 4, cap=100)

    def test_sampled_is_reproducible(self):
        a = sample_oracles(5, 3, 10, seed=42)
        b = sample_oracles(5, 3, 10, seed=42)
        assert a.tables == b.tables
        assert a.to_dict() == {"mode": "sampled", "n": 5, "m": 3, "count": 10, "seed": 42}

    def test_custom_weights_are_normalized(self):
        tables = [OracleTable(2, 2, (0, 0)), OracleTable(2, 2, (1, 1))]
        ensemble = ensemble_from_tables(tables, [1, 3])
        assert ensemble.weights == pytest.approx((0.25, 0.75))

    def test_mixed_shapes_rejected(self):
        with pytest.raises(OracleError):
            ensemble_from_tables([OracleTable(2, 2, (0, 0)), OracleTable(3, 2, (0, 0, 0))])


class TestOracleUnitary:
    """Test class for the oracle-access unitary."""

    def setup_method(self):
        self.layout = RegisterLayout.build([("x", 3), ("y", 4)], [], "y")
        self.H = OracleTable(3, 4, (1, 3, 0))

    def _matrix(self, adjoint=False):
        D = self.layout.total_dimension
        return oracle_unitary_step(self.H, np.eye(D), self.layout, "x", "y", adjoint=adjoint)

    def test_basis_action(self):
        U = self._matrix()
        for x, y in itertools.product(range(3), range(4)):
            column = U[:, x * 4 + y]
            assert column[x * 4 + (y + self.H(x)) % 4] == 1
            assert np.count_nonzero(column) == 1

    def test_adjoint_inverts(self):
        U, U_dag = self._matrix(), self._matrix(adjoint=True)
        np.testing.assert_allclose(U_dag @ U, np.eye(12))
        np.testing.assert_allclose(U_dag, U.T)

    def test_register_mismatch(self):
        with pytest.raises(DimensionMismatch):
            oracle_unitary_step(self.H, np.zeros(12), self.layout, "y", "x")

    @hypothesis_settings(max_examples=100, deadline=None)
    @given(lists(integers(min_value=0, max_value=3), min_size=3, max_size=3),
           lists(floats(min_value=-1.0, max_value=1.0), min_size=24, max_size=24))
    def test_norm_preserved(self, entries, amplitudes):
        H = OracleTable(3, 4, tuple(entries))
        state = np.array(amplitudes[:12]) + 1j * np.array(amplitudes[12:])
        out = oracle_unitary_step(H, state, self.layout, "x", "y")
        assert np.linalg.norm(out) == pytest.approx(np.linalg.norm(state), abs=1e-12)
