"""Exact density-matrix simulation with a synthetic device noise model.

The noisy device executes the basis-gate form of a circuit. Each gate is
followed by a depolarizing channel, parameterized gates carry a fixed additive
angle error, and the measured diagonal passes through per-qubit readout
confusion matrices.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .circuits import PI, Circuit, Gate, apply_gate_tensor, gate_matrix, transpile

MAX_QUBITS = 8
_IDEAL_READOUT = ((1.0, 0.0), (0.0, 1.0))


class SimulationResourceError(RuntimeError):
    """Circuit is too wide for dense density-matrix simulation."""


def _as_confusion(m) -> tuple[tuple[float, float], tuple[float, float]]:
    a = np.asarray(m, dtype=float)
    if a.shape != (2, 2):
        raise ValueError(f"confusion matrix must be 2x2, got shape {a.shape}")
    if np.any(a < 0) or np.any(a > 1):
        raise ValueError("confusion entries must lie in [0, 1]")
    if np.any(np.abs(a.sum(axis=0) - 1.0) > 1e-12):
        raise ValueError("confusion matrix columns must sum to 1")
    return (tuple(a[0]), tuple(a[1]))


@dataclass(frozen=True)
class NoiseModel:
    """Synthetic device errors.

    ``readout`` holds one column-stochastic 2x2 matrix per qubit (column j is
    the reported-bit distribution given true bit j). A single matrix is
    broadcast to every qubit; an empty tuple means perfect readout.
    """

    p1: float = 0.0
    p2: float = 0.0
    overrotation: float = 0.0
    readout: tuple = ()

    def __post_init__(self) -> None:
        for name in ("p1", "p2"):
            p = float(getattr(self, name))
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {p}")
            object.__setattr__(self, name, p)
        object.__setattr__(self, "overrotation", float(self.overrotation))
        object.__setattr__(self, "readout", tuple(_as_confusion(m) for m in self.readout))

    @classmethod
    def ideal(cls) -> NoiseModel:
        return cls()

    def readout_matrices(self, num_qubits: int) -> list[np.ndarray]:
        if not self.readout:
            mats = [_IDEAL_READOUT] * num_qubits
        elif len(self.readout) == 1:
            mats = [self.readout[0]] * num_qubits
        elif len(self.readout) >= num_qubits:
            mats = list(self.readout[:num_qubits])
        else:
            raise ValueError(
                f"noise model has {len(self.readout)} readout matrices for {num_qubits} qubits"
            )
        return [np.array(m, dtype=float) for m in mats]

    def to_dict(self) -> dict:
        return {
            "p1": self.p1,
            "p2": self.p2,
            "overrotation": self.overrotation,
            "readout": [[list(row) for row in m] for m in self.readout],
        }

    @classmethod
    def from_dict(cls, d: dict) -> NoiseModel:
        return cls(
            p1=d.get("p1", 0.0),
            p2=d.get("p2", 0.0),
            overrotation=d.get("overrotation", 0.0),
            readout=tuple(d.get("readout", ())),
        )


class Distribution:
    """Probability vector over the ``2**num_qubits`` computational basis states."""

    def __init__(self, probs, num_qubits: int | None = None, *, atol: float = 1e-9):
        p = np.asarray(probs, dtype=float).ravel()
        n = int(np.log2(p.size)) if num_qubits is None else int(num_qubits)
        if p.size != 2**n:
            raise ValueError(f"{p.size} probabilities cannot describe {n} qubits")
        if np.any(p < -atol) or np.any(p > 1 + atol):
            raise ValueError("probabilities must lie in [0, 1]")
        if abs(p.sum() - 1.0) > atol:
            raise ValueError(f"probabilities sum to {p.sum():.12g}, not 1")
        self.probs = p
        self.num_qubits = n

    def __len__(self) -> int:
        return self.probs.size

    def __array__(self, dtype=None, copy=None):
        return self.probs if dtype is None else self.probs.astype(dtype)

    def __repr__(self) -> str:
        return f"Distribution({np.array2string(self.probs, precision=6)})"

    def __eq__(self, other) -> bool:
        if not isinstance(other, Distribution):
            return NotImplemented
        return self.num_qubits == other.num_qubits and np.array_equal(self.probs, other.probs)

    def to_dict(self) -> dict:
        return {"num_qubits": self.num_qubits, "probs": self.probs.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> Distribution:
        return cls(d["probs"], d["num_qubits"])

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def basis(cls, index: int, num_qubits: int) -> Distribution:
        p = np.zeros(2**num_qubits)
        p[index] = 1.0
        return cls(p, num_qubits)


def _noisy_gate(g: Gate, overrotation: float) -> np.ndarray:
    if overrotation == 0.0 or g.name in ("Id", "CNOT"):
        return gate_matrix(g.name, g.params)
    if g.name == "U1":
        return gate_matrix("U1", (g.params[0] + overrotation,))
    if g.name == "U2":
        return gate_matrix("U3", (PI / 2 + overrotation, *g.params))
    theta, phi, lam = g.params
    return gate_matrix("U3", (theta + overrotation, phi, lam))


def _apply_unitary(rho: np.ndarray, u: np.ndarray, qubits: Sequence[int], n: int) -> np.ndarray:
    rho = apply_gate_tensor(rho, u, qubits)
    return apply_gate_tensor(rho, u.conj(), [q + n for q in qubits])


def _depolarize(rho: np.ndarray, p: float, qubits: Sequence[int], n: int) -> np.ndarray:
    """rho -> (1-p) rho + p * I/2^k (x) Tr_qubits(rho)."""
    if p == 0.0:
        return rho
    k = len(qubits)
    axes = list(qubits) + [q + n for q in qubits]
    moved = np.moveaxis(rho, axes, list(range(2 * k)))
    block = moved.reshape((2**k, 2**k) + moved.shape[2 * k :])
    traced = np.trace(block, axis1=0, axis2=1)
    mixed = np.multiply.outer(np.eye(2**k) / 2**k, traced).reshape(moved.shape)
    mixed = np.moveaxis(mixed, list(range(2 * k)), axes)
    return (1.0 - p) * rho + p * mixed


@lru_cache(maxsize=8192)
def _probabilities(c: Circuit, noise: NoiseModel | None) -> np.ndarray:
    n = c.num_qubits
    if n > MAX_QUBITS:
        raise SimulationResourceError(
            f"{n} qubits exceeds the density-matrix limit of {MAX_QUBITS}"
        )
    dim = 2**n
    rho = np.zeros((dim, dim), dtype=complex)
    init = int(c.initial_state, 2)
    rho[init, init] = 1.0
    rho = rho.reshape((2,) * (2 * n))
    body = transpile(c.without_measurements()) if noise is not None else c.without_measurements()
    for g in body.gates:
        if noise is None:
            rho = _apply_unitary(rho, gate_matrix(g.name, g.params), g.qubits, n)
            continue
        rho = _apply_unitary(rho, _noisy_gate(g, noise.overrotation), g.qubits, n)
        rho = _depolarize(rho, noise.p2 if len(g.qubits) == 2 else noise.p1, g.qubits, n)
    probs = np.real(np.diagonal(rho.reshape(dim, dim))).copy()
    if noise is not None:
        t = probs.reshape((2,) * n)
        for q, conf in enumerate(noise.readout_matrices(n)):
            t = np.moveaxis(np.tensordot(conf, t, axes=([1], [q])), 0, q)
        probs = t.reshape(dim)
    probs = np.clip(probs, 0.0, None)
    probs /= probs.sum()
    probs.flags.writeable = False
    return probs


def exact_probabilities(c: Circuit, noise: NoiseModel | None = None) -> Distribution:
    """Exact outcome distribution of ``c``; ``noise=None`` gives the ideal output."""
    return Distribution(_probabilities(c, noise).copy(), c.num_qubits)


def sample_counts(
    c: Circuit, shots: int, noise: NoiseModel | None = None, seed: int | None = 0
) -> Distribution:
    """Relative frequencies from ``shots`` multinomial draws of ``c``'s outcomes."""
    if shots < 1:
        raise ValueError("shots must be at least 1")
    p = _probabilities(c, noise)
    counts = np.random.default_rng(seed).multinomial(shots, p)
    return Distribution(counts / shots, c.num_qubits)
