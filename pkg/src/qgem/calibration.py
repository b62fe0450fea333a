"""Calibration circuits and calibration matrices.

Column ``j`` of every calibration matrix is the measured distribution of the
circuit whose ideal output is basis state ``j`` (0-based), so a perfect device
produces the identity.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .circuits import Circuit, index_to_bits, inverse, prepare_state, split_halves
from .simulator import Distribution, exact_probabilities


class MatrixKind(str, Enum):
    QEM = "QEM"
    GEM_HALF1 = "GEM_half1"
    GEM_HALF2 = "GEM_half2"
    GEM_COMBINED = "GEM_combined"
    REDUCED = "Reduced"
    DIRECT = "Direct"


class LinearDependenceWarning(UserWarning):
    """A circuit does not map basis states onto distinct basis states."""


@dataclass(frozen=True, eq=False)
class CalibrationMatrix:
    entries: np.ndarray
    num_qubits: int
    kind: MatrixKind = MatrixKind.QEM

    def __post_init__(self) -> None:
        m = np.array(self.entries, dtype=float)
        dim = 2**self.num_qubits
        if m.shape != (dim, dim):
            raise ValueError(f"expected a {dim}x{dim} matrix, got {m.shape}")
        if np.any(m < -1e-12) or np.any(m > 1 + 1e-12):
            raise ValueError("calibration entries must lie in [0, 1]")
        if np.any(np.abs(m.sum(axis=0) - 1.0) > 1e-9):
            raise ValueError("calibration columns must sum to 1")
        m.flags.writeable = False
        object.__setattr__(self, "entries", m)
        object.__setattr__(self, "kind", MatrixKind(self.kind))

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape

    def column(self, j: int) -> Distribution:
        return Distribution(self.entries[:, j], self.num_qubits)

    def to_dict(self) -> dict:
        return {
            "num_qubits": self.num_qubits,
            "kind": self.kind.value,
            "entries": self.entries.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> CalibrationMatrix:
        return cls(np.asarray(d["entries"], dtype=float), int(d["num_qubits"]), d.get("kind", "QEM"))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> CalibrationMatrix:
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def qem_calibration_circuits(num_qubits: int) -> list[Circuit]:
    """State preparation plus measurement for every basis state, ascending."""
    if num_qubits < 1:
        raise ValueError("num_qubits must be positive")
    return [
        prepare_state(num_qubits, index_to_bits(k, num_qubits)).measured()
        for k in range(2**num_qubits)
    ]


def _identity_calibrations(half: Circuit) -> list[Circuit]:
    n = half.num_qubits
    echo = half + inverse(half)
    return [
        (prepare_state(n, index_to_bits(k, n)) + echo).measured() for k in range(2**n)
    ]


def gem_calibration_circuits(c: Circuit) -> tuple[list[Circuit], list[Circuit]]:
    """Two sets of ``2**N`` calibration circuits built from the halves of ``c``.

    Each circuit prepares a basis state, runs one half of ``c`` and then that
    half's inverse, so its ideal output is the prepared state.
    """
    body = c.without_measurements()
    body = Circuit(body.num_qubits, body.gates)
    first, second = split_halves(body)
    return _identity_calibrations(first), _identity_calibrations(second)


def direct_calibration_circuits(c: Circuit) -> list[Circuit]:
    """Basis-state preparation followed by the whole of ``c``.

    Only meaningful when ``c`` maps basis states to distinct basis states; see
    :func:`ideal_output_states`.
    """
    body = c.without_measurements()
    n = c.num_qubits
    body = Circuit(n, body.gates)
    return [(prepare_state(n, index_to_bits(k, n)) + body).measured() for k in range(2**n)]


def ideal_output_states(c: Circuit, *, atol: float = 1e-6) -> list[int]:
    """Noiseless output basis state of ``c`` for each basis input.

    Warns with :class:`LinearDependenceWarning` when some input does not map to a
    single basis state.
    """
    outputs = []
    for circ in direct_calibration_circuits(c):
        p = exact_probabilities(circ).probs
        k = int(np.argmax(p))
        if p[k] < 1 - atol:
            warnings.warn(
                f"input {len(outputs)} leaves a superposition (max probability {p[k]:.6f})",
                LinearDependenceWarning,
                stacklevel=2,
            )
        outputs.append(k)
    return outputs


def _check_columns(columns: Sequence[Distribution]) -> int:
    if not columns:
        raise ValueError("no calibration columns")
    n = columns[0].num_qubits
    if len(columns) != 2**n:
        raise ValueError(f"{len(columns)} columns given for a {n}-qubit matrix")
    for col in columns:
        if len(col) != 2**n:
            raise ValueError(f"column of width {len(col)} in a {2**n}-wide matrix")
    return n


def build_matrix(
    columns: Sequence[Distribution], kind: MatrixKind | str = MatrixKind.QEM
) -> CalibrationMatrix:
    """Stack measured distributions as columns, ordered by prepared basis state."""
    n = _check_columns(columns)
    return CalibrationMatrix(np.column_stack([np.asarray(col) for col in columns]), n, kind)


def build_direct_matrix(
    columns: Sequence[Distribution], outputs: Sequence[int]
) -> CalibrationMatrix:
    """Place the output of input ``k`` in column ``outputs[k]``."""
    n = _check_columns(columns)
    if sorted(outputs) != list(range(2**n)):
        raise ValueError("ideal outputs are not a permutation of the basis states")
    ordered = [None] * 2**n
    for col, out in zip(columns, outputs):
        ordered[out] = col
    return build_matrix(ordered, MatrixKind.DIRECT)


def combine(m1: CalibrationMatrix, m2: CalibrationMatrix) -> CalibrationMatrix:
    """Entrywise mean of the two half-circuit matrices."""
    if m1.shape != m2.shape:
        raise ValueError(f"cannot combine {m1.shape} with {m2.shape}")
    return CalibrationMatrix(
        (m1.entries + m2.entries) / 2, m1.num_qubits, MatrixKind.GEM_COMBINED
    )


def reduced_matrix(
    partial_columns: Mapping[int, Distribution], num_qubits: int
) -> CalibrationMatrix:
    """Matrix from a subset of measured columns; missing columns are identity columns."""
    dim = 2**num_qubits
    m = np.eye(dim)
    for k, col in partial_columns.items():
        if not 0 <= k < dim:
            raise ValueError(f"basis state {k} out of range for {num_qubits} qubits")
        if len(col) != dim:
            raise ValueError(f"column of width {len(col)} in a {dim}-wide matrix")
        m[:, k] = np.asarray(col)
    return CalibrationMatrix(m, num_qubits, MatrixKind.REDUCED)
