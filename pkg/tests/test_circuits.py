import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qgem.circuits import (
    PI,
    Circuit,
    CircuitError,
    CouplingMap,
    Gate,
    circuit_unitary,
    depth,
    gate_matrix,
    inverse,
    inverse_gate,
    prepare_state,
    split_halves,
    transpile,
)
from qgem.simulator import exact_probabilities


def equal_up_to_phase(a, b, atol=1e-12):
    k = np.argmax(np.abs(b))
    k = np.unravel_index(k, b.shape)
    phase = a[k] / b[k]
    return abs(abs(phase) - 1) < atol and np.allclose(a, phase * b, atol=atol, rtol=0)


angles = st.floats(-2 * PI, 2 * PI, allow_nan=False)


@st.composite
def gates(draw, num_qubits=3, allow=None):
    names = allow or ["Id", "U1", "U2", "U3", "X", "Y", "Z", "H", "S", "Sdg", "T", "Tdg", "Rx", "Ry", "CNOT"]
    name = draw(st.sampled_from(names))
    if name == "CNOT":
        qubits = tuple(draw(st.permutations(range(num_qubits)))[:2])
    else:
        qubits = (draw(st.integers(0, num_qubits - 1)),)
    n_params = {"U1": 1, "U2": 2, "U3": 3, "Rx": 1, "Ry": 1}.get(name, 0)
    params = tuple(draw(angles) for _ in range(n_params))
    return Gate(name, qubits, params)


@st.composite
def circuits(draw, max_qubits=3, max_gates=12):
    n = draw(st.integers(1, max_qubits))
    allow = None if n >= 2 else ["Id", "U1", "U2", "U3", "X", "Y", "Z", "H", "S", "Sdg", "T", "Tdg", "Rx", "Ry"]
    gs = draw(st.lists(gates(n, allow), max_size=max_gates))
    return Circuit(n, tuple(gs))


class TestGate:
    def test_param_count_enforced(self):
        with pytest.raises(CircuitError):
            Gate("U1", (0,))
        with pytest.raises(CircuitError):
            Gate("X", (0,), (1.0,))

    def test_cnot_needs_distinct_qubits(self):
        with pytest.raises(CircuitError):
            Gate("CNOT", (1, 1))
        with pytest.raises(CircuitError):
            Gate("CNOT", (0,))

    def test_qubit_out_of_range(self):
        with pytest.raises(CircuitError):
            Circuit(2, (Gate("X", (2,)),))

    def test_measure_only_as_suffix(self):
        Circuit(1, (Gate("H", (0,)), Gate("Measure", (0,))))
        with pytest.raises(CircuitError):
            Circuit(1, (Gate("Measure", (0,)), Gate("H", (0,))))


class TestInverse:
    def test_examples(self):
        assert inverse_gate(Gate("S", (0,))) == Gate("Sdg", (0,))
        assert inverse_gate(Gate("U1", (0,), (PI / 4,))) == Gate("U1", (0,), (-PI / 4,))
        h = Gate("H", (0,))
        assert inverse_gate(h) == h
        np.testing.assert_allclose(gate_matrix("H") @ gate_matrix("H"), np.eye(2), atol=1e-15)

    @pytest.mark.parametrize("name", ["X", "Y", "Z", "Id"])
    def test_self_inverse(self, name):
        assert inverse_gate(Gate(name, (0,))) == Gate(name, (0,))
        assert inverse_gate(Gate("CNOT", (0, 1))) == Gate("CNOT", (0, 1))

    def test_parameterized_forms(self):
        assert inverse_gate(Gate("U2", (0,), (0.3, 0.7))) == Gate("U3", (0,), (-PI / 2, -0.7, -0.3))
        assert inverse_gate(Gate("U3", (0,), (0.1, 0.2, 0.3))) == Gate("U3", (0,), (-0.1, -0.3, -0.2))
        assert inverse_gate(Gate("Rx", (0,), (0.4,))) == Gate("Rx", (0,), (-0.4,))
        assert inverse_gate(Gate("T", (1,))) == Gate("Tdg", (1,))

    def test_measure_has_no_inverse(self):
        with pytest.raises(CircuitError, match="no inverse"):
            inverse_gate(Gate("Measure", (0,)))

    @settings(max_examples=200, deadline=None)
    @given(gates(num_qubits=2))
    def test_product_is_identity(self, g):
        c = Circuit(2, (g, inverse_gate(g)))
        assert equal_up_to_phase(circuit_unitary(c), np.eye(4))

    @settings(max_examples=50, deadline=None)
    @given(circuits())
    def test_circuit_inverse(self, c):
        u = circuit_unitary(c + inverse(c))
        assert equal_up_to_phase(u, np.eye(2**c.num_qubits))


class TestTranspile:
    def test_table_examples(self):
        c = Circuit(2, (Gate("X", (0,)), Gate("H", (1,)), Gate("CNOT", (0, 1))))
        t = transpile(c)
        assert t.gates[0] == Gate("U3", (0,), (PI, 0.0, PI))
        assert t.gates[1] == Gate("U2", (1,), (0.0, PI))
        assert t.gates[2] == Gate("CNOT", (0, 1))

    def test_full_table(self):
        expected = {
            "Id": ("Id", ()),
            "X": ("U3", (PI, 0, PI)),
            "Y": ("U3", (PI, PI / 2, PI / 2)),
            "Z": ("U1", (PI,)),
            "H": ("U2", (0, PI)),
            "S": ("U1", (PI / 2,)),
            "Sdg": ("U1", (-PI / 2,)),
            "T": ("U1", (PI / 4,)),
            "Tdg": ("U1", (-PI / 4,)),
        }
        for name, (bname, params) in expected.items():
            (g,) = transpile(Circuit(1, (Gate(name, (0,)),))).gates
            assert g == Gate(bname, (0,), params)
        (g,) = transpile(Circuit(1, (Gate("U1", (0,), (0.3,)),))).gates
        assert g == Gate("U1", (0,), (0.3,))

    def test_only_basis_gates_remain(self):
        c = Circuit(1, tuple(Gate(n, (0,)) for n in ["X", "Y", "Z", "H", "S", "Sdg", "T", "Tdg"]))
        assert {g.name for g in transpile(c).gates} <= {"U1", "U2", "U3"}

    @settings(max_examples=100, deadline=None)
    @given(circuits())
    def test_unitary_preserved(self, c):
        assert equal_up_to_phase(circuit_unitary(transpile(c)), circuit_unitary(c))


class TestDepth:
    def test_empty(self):
        assert depth(Circuit(1)) == 0

    def test_one_qubit_h_y_example(self):
        c = Circuit(1, (Gate("H", (0,)), Gate("Y", (0,)), Gate("Measure", (0,))))
        assert depth(c) == 2

    def test_two_qubit_layering(self):
        c = Circuit(2, (Gate("H", (0,)), Gate("X", (1,)), Gate("CNOT", (0, 1))))
        assert depth(c) == 2

    def test_parallel_gates_share_layer(self):
        c = Circuit(3, (Gate("X", (0,)), Gate("X", (1,)), Gate("X", (2,)), Gate("CNOT", (0, 1)), Gate("X", (2,))))
        assert depth(c) == 2


class TestSplitHalves:
    def test_even(self):
        h, y = Gate("H", (0,)), Gate("Y", (0,))
        a, b = split_halves(Circuit(1, (h, y)))
        assert a.gates == (h,) and b.gates == (y,)

    def test_odd_puts_extra_layer_second(self):
        g = [Gate("X", (0,)), Gate("Y", (0,)), Gate("Z", (0,))]
        a, b = split_halves(Circuit(1, tuple(g)))
        assert a.gates == (g[0],) and b.gates == (g[1], g[2])

    def test_empty(self):
        a, b = split_halves(Circuit(2))
        assert a.gates == () and b.gates == ()

    def test_rejects_measurement(self):
        with pytest.raises(CircuitError):
            split_halves(Circuit(1, (Gate("H", (0,)), Gate("Measure", (0,)))))

    @settings(max_examples=200, deadline=None)
    @given(circuits(max_gates=25))
    def test_concatenation_and_depths(self, c):
        a, b = split_halves(c)
        joined = a + b
        # gates on disjoint wires may swap places; each wire keeps its sequence
        assert sorted(joined.gates, key=repr) == sorted(c.gates, key=repr)
        for q in range(c.num_qubits):
            assert [g for g in joined.gates if q in g.qubits] == [g for g in c.gates if q in g.qubits]
        if c.num_qubits == 1:
            assert joined == c
        d = depth(c)
        assert depth(a) == d // 2
        assert depth(b) == d - d // 2


class TestPrepareState:
    def test_examples(self):
        assert prepare_state(1, "0").gates == ()
        assert prepare_state(1, "1").gates == (Gate("X", (0,)),)
        assert prepare_state(3, "101").gates == (Gate("X", (0,)), Gate("X", (2,)))

    def test_length_mismatch(self):
        with pytest.raises(CircuitError):
            prepare_state(2, "1")

    @pytest.mark.parametrize("bits", ["000", "011", "100", "111"])
    def test_noiseless_measurement_returns_label(self, bits):
        p = exact_probabilities(prepare_state(3, bits).measured()).probs
        assert p[int(bits, 2)] == pytest.approx(1.0, abs=1e-15)


class TestSerialization:
    def test_round_trip_keeps_angles(self):
        c = Circuit(2, (Gate("U1", (0,), (0.1234567890123456789,)), Gate("CNOT", (1, 0))), "01")
        back = Circuit.from_json(c.to_json())
        assert back == c
        assert back.gates[0].params[0] == c.gates[0].params[0]

    def test_schema_keys(self):
        d = Circuit(1, (Gate("H", (0,)),)).to_dict()
        assert d == {"num_qubits": 1, "initial_state": "0", "gates": [{"name": "H", "qubits": [0], "params": []}]}


def test_coupling_map_validation():
    CouplingMap.linear(3).validate(3)
    with pytest.raises(CircuitError):
        CouplingMap(frozenset({(0, 3)})).validate(3)
    assert CouplingMap.linear(2).edges == {(0, 1), (1, 0)}
    assert len(CouplingMap.full(3).edges) == 6
