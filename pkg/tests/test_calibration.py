import warnings
from functools import reduce

import numpy as np
import pytest
from hypothesis import given, settings

from qgem.calibration import (
    CalibrationMatrix,
    LinearDependenceWarning,
    MatrixKind,
    build_direct_matrix,
    build_matrix,
    combine,
    direct_calibration_circuits,
    gem_calibration_circuits,
    ideal_output_states,
    qem_calibration_circuits,
    reduced_matrix,
)
from qgem.circuits import Circuit, Gate, depth, rx_ladder_circuit, strip_gates, transpile
from qgem.simulator import Distribution, NoiseModel, exact_probabilities, sample_counts
from test_circuits import circuits

REFERENCE_4X4 = np.array(
    [
        [0.5526123, 0.1893310, 0.1623535, 0.1437988],
        [0.1372070, 0.5322266, 0.1494141, 0.1748047],
        [0.1693115, 0.1330566, 0.5349121, 0.1687012],
        [0.1408691, 0.1453857, 0.1533203, 0.5126953],
    ]
)
A = np.array([[0.9, 0.2], [0.1, 0.8]])
B = np.array([[0.7, 0.4], [0.3, 0.6]])


def measured(*gates, n=1):
    return Circuit(n, tuple(gates)).measured()


def H(q=0):
    return Gate("H", (q,))


def Y(q=0):
    return Gate("Y", (q,))


def X(q=0):
    return Gate("X", (q,))


def exact_matrix(circs, noise=None):
    return build_matrix([exact_probabilities(c, noise) for c in circs])


class TestQEMCircuits:
    def test_one_qubit(self):
        assert qem_calibration_circuits(1) == [measured(), measured(X())]

    def test_two_qubits_order(self):
        circs = qem_calibration_circuits(2)
        assert [c.without_measurements().gates for c in circs] == [
            (),
            (X(1),),
            (X(0),),
            (X(0), X(1)),
        ]

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_noiseless_identity(self, n):
        m = exact_matrix(qem_calibration_circuits(n))
        np.testing.assert_array_equal(m.entries, np.eye(2**n))


class TestGEMCircuits:
    def test_one_qubit_worked_example(self):
        first, second = gem_calibration_circuits(measured(H(), Y()))
        assert first == [measured(H(), H()), measured(X(), H(), H())]
        assert second == [measured(Y(), Y()), measured(X(), Y(), Y())]

    def test_empty_circuit_reduces_to_qem(self):
        first, second = gem_calibration_circuits(Circuit(2))
        assert first == second == qem_calibration_circuits(2)

    def test_circuit_count(self):
        c = Circuit(3, (H(0), Gate("CNOT", (0, 1)), X(2), Y(1)))
        first, second = gem_calibration_circuits(c)
        assert len(first) + len(second) == 2 ** (3 + 1)

    @settings(max_examples=40, deadline=None)
    @given(circuits(max_gates=16))
    def test_noiseless_matrices_are_identity(self, c):
        dim = 2**c.num_qubits
        for half in gem_calibration_circuits(c):
            np.testing.assert_allclose(exact_matrix(half).entries, np.eye(dim), atol=1e-12)

    @settings(max_examples=100, deadline=None)
    @given(circuits(max_gates=25))
    def test_depth_tracks_target(self, c):
        # half of depth k composed with its inverse has depth 2k; preparation adds at most one layer
        d = depth(c)
        first, second = gem_calibration_circuits(c)
        for circs, k in ((first, d // 2), (second, d - d // 2)):
            for cc in circs:
                assert 2 * k <= depth(cc) <= 2 * k + 1
        if d % 2 == 0:
            for cc in first + second:
                assert abs(depth(cc) - d) <= 1


class TestBuildMatrix:
    def test_identity_columns(self):
        cols = [Distribution.basis(k, 2) for k in range(4)]
        np.testing.assert_array_equal(build_matrix(cols).entries, np.eye(4))

    def test_layout_columns_by_prepared_state(self):
        v1, v2 = Distribution([0.8, 0.2]), Distribution([0.3, 0.7])
        m = build_matrix([v1, v2], MatrixKind.GEM_HALF1)
        np.testing.assert_array_equal(m.entries, [[0.8, 0.3], [0.2, 0.7]])

    def test_reference_matrix_columns_near_stochastic(self):
        np.testing.assert_allclose(REFERENCE_4X4.sum(axis=0), 1.0, atol=1e-4)

    def test_wrong_count(self):
        with pytest.raises(ValueError):
            build_matrix([Distribution([1.0, 0.0])])

    def test_wrong_width(self):
        with pytest.raises(ValueError):
            build_matrix([Distribution([1.0, 0.0]), Distribution([1.0, 0, 0, 0])])

    def test_rejects_non_stochastic(self):
        with pytest.raises(ValueError):
            CalibrationMatrix(np.array([[0.9, 0.2], [0.2, 0.8]]), 1)

    def test_json_round_trip(self):
        m = CalibrationMatrix(A, 1, MatrixKind.GEM_COMBINED)
        d = m.to_dict()
        assert d["kind"] == "GEM_combined" and d["entries"] == A.tolist()
        back = CalibrationMatrix.from_dict(d)
        np.testing.assert_array_equal(back.entries, A)
        assert back.kind is MatrixKind.GEM_COMBINED


class TestCombine:
    def test_examples(self):
        eye = CalibrationMatrix(np.eye(2), 1)
        np.testing.assert_array_equal(combine(eye, eye).entries, np.eye(2))
        a = CalibrationMatrix(A, 1)
        np.testing.assert_array_equal(combine(a, a).entries, A)
        m = combine(a, CalibrationMatrix(B, 1))
        assert m.entries[0, 0] == pytest.approx(0.8, abs=1e-15)
        assert m.kind is MatrixKind.GEM_COMBINED

    def test_commutative_and_bounded(self):
        a, b = CalibrationMatrix(A, 1), CalibrationMatrix(B, 1)
        np.testing.assert_array_equal(combine(a, b).entries, combine(b, a).entries)
        c = combine(a, b).entries
        assert np.all(c >= np.minimum(A, B)) and np.all(c <= np.maximum(A, B))
        np.testing.assert_allclose(c.sum(axis=0), 1, atol=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            combine(CalibrationMatrix(A, 1), CalibrationMatrix(np.eye(4), 2))


class TestReduced:
    def test_no_columns_is_identity(self):
        m = reduced_matrix({}, 2)
        np.testing.assert_array_equal(m.entries, np.eye(4))
        assert m.kind is MatrixKind.REDUCED

    def test_all_columns_equals_full(self):
        cols = [Distribution(A[:, j]) for j in range(2)]
        np.testing.assert_array_equal(
            reduced_matrix(dict(enumerate(cols)), 1).entries, build_matrix(cols).entries
        )

    def test_fill_rule(self):
        m = reduced_matrix({0: Distribution([0.9, 0.1])}, 1)
        np.testing.assert_array_equal(m.entries, [[0.9, 0.0], [0.1, 1.0]])


class TestDirect:
    def test_permutation_circuit(self):
        c = Circuit(1, (X(),))
        assert ideal_output_states(c) == [1, 0]
        cols = [exact_probabilities(cc) for cc in direct_calibration_circuits(c)]
        m = build_direct_matrix(cols, ideal_output_states(c))
        np.testing.assert_array_equal(m.entries, np.eye(2))

    def test_empty_reduces_to_qem(self):
        assert direct_calibration_circuits(Circuit(2)) == qem_calibration_circuits(2)

    def test_rx_ladder_needs_stripping(self):
        c = rx_ladder_circuit()
        with pytest.warns(LinearDependenceWarning):
            ideal_output_states(c)
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            outputs = ideal_output_states(strip_gates(c, ["Rx"]))
        assert sorted(outputs) == [0, 1, 2, 3]

    def test_non_permutation_rejected(self):
        cols = [Distribution.basis(0, 1)] * 2
        with pytest.raises(ValueError):
            build_direct_matrix(cols, [0, 0])


def test_worked_example_after_transpilation():
    first, second = gem_calibration_circuits(measured(H(), Y()))
    expected = [
        measured(H(), H()),
        measured(X(), H(), H()),
        measured(Y(), Y()),
        measured(X(), Y(), Y()),
    ]
    assert [transpile(c) for c in first + second] == [transpile(c) for c in expected]


def test_readout_only_qem_matrix_is_tensor_product():
    conf = np.array([[0.95, 0.08], [0.05, 0.92]])
    noise = NoiseModel(readout=(conf,))
    shots = 8192
    cols = [sample_counts(c, shots, noise, seed=k) for k, c in enumerate(qem_calibration_circuits(2))]
    m = build_matrix(cols).entries
    expected = reduce(np.kron, [conf, conf])
    np.testing.assert_allclose(exact_matrix(qem_calibration_circuits(2), noise).entries, expected, atol=1e-15)
    sigma = np.sqrt(expected * (1 - expected) / shots)
    assert np.all(np.abs(m - expected) <= 3 * sigma)
