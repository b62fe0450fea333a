"""Gate set, circuit container, inversion, basis transpilation and layering.

Bit order is fixed throughout the package: in a bitstring label the leftmost
character is qubit 0, and qubit 0 is the most significant bit of a basis-state
index.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

PI = np.pi

N_PARAMS = {
    "Id": 0,
    "U1": 1,
    "U2": 2,
    "U3": 3,
    "X": 0,
    "Y": 0,
    "Z": 0,
    "H": 0,
    "S": 0,
    "Sdg": 0,
    "T": 0,
    "Tdg": 0,
    "CNOT": 0,
    "Rx": 1,
    "Ry": 1,
    "Measure": 0,
}
GATE_NAMES = tuple(N_PARAMS)
TWO_QUBIT_GATES = frozenset({"CNOT"})
BASIS_GATES = frozenset({"Id", "U1", "U2", "U3", "CNOT"})
APPLIED_GATE_SET = ("Id", "U1", "X", "Y", "Z", "H", "S", "Sdg", "T", "Tdg", "CNOT")

_SELF_INVERSE = frozenset({"Id", "X", "Y", "Z", "H", "CNOT"})
_ADJOINT_NAME = {"S": "Sdg", "Sdg": "S", "T": "Tdg", "Tdg": "T"}


class CircuitError(ValueError):
    """Raised for malformed gates or circuits."""


@dataclass(frozen=True)
class Gate:
    name: str
    qubits: tuple[int, ...]
    params: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if self.name not in N_PARAMS:
            raise CircuitError(f"unknown gate {self.name!r}")
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        arity = 2 if self.name in TWO_QUBIT_GATES else 1
        if len(self.qubits) != arity:
            raise CircuitError(f"{self.name} acts on {arity} qubit(s), got {self.qubits}")
        if len(set(self.qubits)) != len(self.qubits):
            raise CircuitError(f"repeated qubit in {self.name}{self.qubits}")
        if any(q < 0 for q in self.qubits):
            raise CircuitError("qubit indices must be non-negative")
        if len(self.params) != N_PARAMS[self.name]:
            raise CircuitError(
                f"{self.name} takes {N_PARAMS[self.name]} parameter(s), got {len(self.params)}"
            )

    def to_dict(self) -> dict:
        return {"name": self.name, "qubits": list(self.qubits), "params": list(self.params)}

    @classmethod
    def from_dict(cls, d: dict) -> Gate:
        return cls(d["name"], tuple(d["qubits"]), tuple(d.get("params", ())))


@dataclass(frozen=True)
class Circuit:
    num_qubits: int
    gates: tuple[Gate, ...] = ()
    initial_state: str = ""

    def __post_init__(self) -> None:
        if self.num_qubits < 1:
            raise CircuitError("num_qubits must be positive")
        object.__setattr__(self, "gates", tuple(self.gates))
        if not self.initial_state:
            object.__setattr__(self, "initial_state", "0" * self.num_qubits)
        if len(self.initial_state) != self.num_qubits or set(self.initial_state) - {"0", "1"}:
            raise CircuitError(f"bad initial state {self.initial_state!r}")
        seen_measure = False
        for g in self.gates:
            if max(g.qubits) >= self.num_qubits:
                raise CircuitError(f"{g.name}{g.qubits} outside a {self.num_qubits}-qubit circuit")
            if g.name == "Measure":
                seen_measure = True
            elif seen_measure:
                raise CircuitError("Measure gates may only form a trailing suffix")

    def __len__(self) -> int:
        return len(self.gates)

    def __add__(self, other: Circuit) -> Circuit:
        if other.num_qubits != self.num_qubits:
            raise CircuitError("cannot concatenate circuits of different width")
        return Circuit(self.num_qubits, self.gates + other.gates, self.initial_state)

    @property
    def depth(self) -> int:
        return depth(self)

    def without_measurements(self) -> Circuit:
        return Circuit(
            self.num_qubits,
            tuple(g for g in self.gates if g.name != "Measure"),
            self.initial_state,
        )

    def measured(self) -> Circuit:
        """Copy with a terminal measurement on every qubit (idempotent)."""
        body = self.without_measurements()
        meas = tuple(Gate("Measure", (q,)) for q in range(self.num_qubits))
        return Circuit(self.num_qubits, body.gates + meas, self.initial_state)

    def to_dict(self) -> dict:
        return {
            "num_qubits": self.num_qubits,
            "initial_state": self.initial_state,
            "gates": [g.to_dict() for g in self.gates],
        }

    @classmethod
    def from_dict(cls, d: dict) -> Circuit:
        return cls(
            int(d["num_qubits"]),
            tuple(Gate.from_dict(g) for g in d.get("gates", [])),
            d.get("initial_state", ""),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> Circuit:
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class CouplingMap:
    edges: frozenset[tuple[int, int]] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        edges = frozenset((int(a), int(b)) for a, b in self.edges)
        if any(a == b for a, b in edges):
            raise CircuitError("coupling edges must join distinct qubits")
        object.__setattr__(self, "edges", edges)

    @classmethod
    def linear(cls, num_qubits: int) -> CouplingMap:
        """Nearest-neighbour chain, both directions."""
        pairs = set()
        for q in range(num_qubits - 1):
            pairs |= {(q, q + 1), (q + 1, q)}
        return cls(frozenset(pairs))

    @classmethod
    def full(cls, num_qubits: int) -> CouplingMap:
        return cls(
            frozenset((a, b) for a in range(num_qubits) for b in range(num_qubits) if a != b)
        )

    def validate(self, num_qubits: int) -> None:
        for a, b in self.edges:
            if a >= num_qubits or b >= num_qubits:
                raise CircuitError(f"coupling edge {(a, b)} outside {num_qubits} qubits")

    def sorted_edges(self) -> list[tuple[int, int]]:
        return sorted(self.edges)


def gate_matrix(name: str, params: Sequence[float] = ()) -> np.ndarray:
    """Unitary of a gate. CNOT is returned in the (control, target) basis."""
    if name == "Id":
        return np.eye(2, dtype=complex)
    if name == "U1":
        (lam,) = params
        return np.array([[1, 0], [0, np.exp(1j * lam)]], dtype=complex)
    if name == "U2":
        phi, lam = params
        return u3_matrix(PI / 2, phi, lam)
    if name == "U3":
        return u3_matrix(*params)
    if name == "Rx":
        (theta,) = params
        c, s = np.cos(theta / 2), np.sin(theta / 2)
        return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)
    if name == "Ry":
        (theta,) = params
        c, s = np.cos(theta / 2), np.sin(theta / 2)
        return np.array([[c, -s], [s, c]], dtype=complex)
    if name == "CNOT":
        return np.array(
            [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
        )
    fixed = _FIXED.get(name)
    if fixed is None:
        raise CircuitError(f"{name} has no unitary")
    return fixed.copy()


def u3_matrix(theta: float, phi: float, lam: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array(
        [
            [c, -np.exp(1j * lam) * s],
            [np.exp(1j * phi) * s, np.exp(1j * (phi + lam)) * c],
        ],
        dtype=complex,
    )


_FIXED = {
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
    "H": np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2),
    "S": np.diag([1, 1j]).astype(complex),
    "Sdg": np.diag([1, -1j]).astype(complex),
    "T": np.diag([1, np.exp(1j * PI / 4)]).astype(complex),
    "Tdg": np.diag([1, np.exp(-1j * PI / 4)]).astype(complex),
}


def inverse_gate(g: Gate) -> Gate:
    """Return the adjoint gate on the same qubits."""
    if g.name == "Measure":
        raise CircuitError("gate has no inverse")
    if g.name in _SELF_INVERSE:
        return g
    if g.name in _ADJOINT_NAME:
        return Gate(_ADJOINT_NAME[g.name], g.qubits)
    if g.name in ("U1", "Rx", "Ry"):
        return Gate(g.name, g.qubits, (-g.params[0],))
    if g.name == "U2":
        phi, lam = g.params
        return Gate("U3", g.qubits, (-PI / 2, -lam, -phi))
    theta, phi, lam = g.params
    return Gate("U3", g.qubits, (-theta, -lam, -phi))


def inverse(c: Circuit) -> Circuit:
    """Reverse-ordered inverses of every gate of ``c`` (measurements dropped)."""
    body = c.without_measurements().gates
    return Circuit(c.num_qubits, tuple(inverse_gate(g) for g in reversed(body)), c.initial_state)


_TRANSPILE_FIXED = {
    "X": ("U3", (PI, 0.0, PI)),
    "Y": ("U3", (PI, PI / 2, PI / 2)),
    "Z": ("U1", (PI,)),
    "H": ("U2", (0.0, PI)),
    "S": ("U1", (PI / 2,)),
    "Sdg": ("U1", (-PI / 2,)),
    "T": ("U1", (PI / 4,)),
    "Tdg": ("U1", (-PI / 4,)),
}


def transpile_gate(g: Gate) -> Gate:
    if g.name in _TRANSPILE_FIXED:
        name, params = _TRANSPILE_FIXED[g.name]
        return Gate(name, g.qubits, params)
    if g.name == "Rx":
        return Gate("U3", g.qubits, (g.params[0], -PI / 2, PI / 2))
    if g.name == "Ry":
        return Gate("U3", g.qubits, (g.params[0], 0.0, 0.0))
    return g


def transpile(c: Circuit) -> Circuit:
    """Rewrite every gate into the device basis {Id, U1, U2, U3, CNOT}.

    Gate order and qubit assignment are kept; no optimization is done.
    """
    return Circuit(c.num_qubits, tuple(transpile_gate(g) for g in c.gates), c.initial_state)


def gate_layers(c: Circuit) -> list[int]:
    """Greedy as-soon-as-possible layer (1-based) of each gate; 0 for Measure."""
    frontier = [0] * c.num_qubits
    layers = []
    for g in c.gates:
        if g.name == "Measure":
            layers.append(0)
            continue
        layer = max(frontier[q] for q in g.qubits) + 1
        for q in g.qubits:
            frontier[q] = layer
        layers.append(layer)
    return layers


def depth(c: Circuit) -> int:
    return max(gate_layers(c), default=0)


def split_halves(c: Circuit) -> tuple[Circuit, Circuit]:
    """Split into the gates of layers ``1..floor(D/2)`` and the remainder.

    Splitting on layers never cuts a two-qubit gate and keeps the two halves
    within one layer of each other in depth.
    """
    if any(g.name == "Measure" for g in c.gates):
        raise CircuitError("strip measurements before splitting")
    layers = gate_layers(c)
    cut = max(layers, default=0) // 2
    first = tuple(g for g, layer in zip(c.gates, layers) if layer <= cut)
    second = tuple(g for g, layer in zip(c.gates, layers) if layer > cut)
    return (
        Circuit(c.num_qubits, first, c.initial_state),
        Circuit(c.num_qubits, second, c.initial_state),
    )


def index_to_bits(index: int, num_qubits: int) -> str:
    return format(index, f"0{num_qubits}b")


def bits_to_index(bits: str) -> int:
    return int(bits, 2)


def prepare_state(num_qubits: int, bits: str) -> Circuit:
    """X on every qubit whose bit is ``1``."""
    if len(bits) != num_qubits or set(bits) - {"0", "1"}:
        raise CircuitError(f"bitstring {bits!r} does not label a {num_qubits}-qubit state")
    return Circuit(num_qubits, tuple(Gate("X", (q,)) for q, b in enumerate(bits) if b == "1"))


def strip_gates(c: Circuit, names: Iterable[str]) -> Circuit:
    drop = set(names)
    return Circuit(c.num_qubits, tuple(g for g in c.gates if g.name not in drop), c.initial_state)


def circuit_unitary(c: Circuit) -> np.ndarray:
    """Dense unitary of the non-measurement gates (small circuits only)."""
    n = c.num_qubits
    dim = 2**n
    u = np.eye(dim, dtype=complex).reshape((2,) * n + (dim,))
    for g in c.gates:
        if g.name == "Measure":
            continue
        u = apply_gate_tensor(u, gate_matrix(g.name, g.params), g.qubits)
    return u.reshape(dim, dim)


def apply_gate_tensor(psi: np.ndarray, matrix: np.ndarray, qubits: Sequence[int]) -> np.ndarray:
    """Apply ``matrix`` to the leading qubit axes ``qubits`` of tensor ``psi``."""
    k = len(qubits)
    op = matrix.reshape((2,) * (2 * k))
    out = np.tensordot(op, psi, axes=(list(range(k, 2 * k)), list(qubits)))
    return np.moveaxis(out, list(range(k)), list(qubits))


def rx_ladder_circuit(repeats: int = 30, angle: float = PI / 6) -> Circuit:
    """Two-qubit circuit: Rx(angle) on qubit 0, then ``repeats`` x [X(0), CNOT(0->1), Y(1)].

    Without the Rx the circuit maps basis states to basis states, so it can
    serve as its own calibration circuit.
    """
    gates = [Gate("Rx", (0,), (angle,))]
    for _ in range(repeats):
        gates += [Gate("X", (0,)), Gate("CNOT", (0, 1)), Gate("Y", (1,))]
    return Circuit(2, tuple(gates))


def save_circuit(c: Circuit, path: str | Path) -> None:
    Path(path).write_text(json.dumps(c.to_dict(), indent=1) + "\n", encoding="utf-8")


def load_circuit(path: str | Path) -> Circuit:
    return Circuit.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
