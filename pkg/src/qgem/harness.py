"""Randomized mitigation experiments on the simulated device, and their reports."""

from __future__ import annotations

import csv
import io
import json
import sys
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Iterable, Protocol, Sequence

import numpy as np

from . import calibration as cal
from .circuits import (
    APPLIED_GATE_SET,
    N_PARAMS,
    PI,
    TWO_QUBIT_GATES,
    Circuit,
    CouplingMap,
    Gate,
    strip_gates,
)
from .metrics import Classification, MitigationOutcome, classification_counts, classify, rms_error
from .mitigation import SolverConfig, mitigate
from .simulator import Distribution, NoiseModel, sample_counts

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


class Method(str, Enum):
    GEM = "GEM"
    QEM = "QEM"
    REDUCED = "Reduced"
    DIRECT = "Direct"


class ConfigError(ValueError):
    pass


# roles in derived seed keys
_CIRCUIT, _SIM, _DEVICE, _CALIB, _SUBSET, _SOLVER = range(6)


@dataclass(frozen=True)
class ExperimentConfig:
    num_qubits: int
    depth_min: int
    depth_max: int
    num_circuits: int = 100
    repetitions: int = 10
    shots_device: int = 8192
    shots_simulator: int = 819200
    gate_set: tuple[str, ...] = APPLIED_GATE_SET
    coupling: CouplingMap | None = None
    noise: NoiseModel = field(default_factory=NoiseModel)
    method: Method = Method.GEM
    seed: int = 0
    reduced_columns: int = 0
    direct_strip: tuple[str, ...] = ("Rx", "Ry")
    terminal_layer: str | None = None
    solver: SolverConfig = field(default_factory=SolverConfig)

    def __post_init__(self) -> None:
        object.__setattr__(self, "method", Method(self.method))
        object.__setattr__(self, "gate_set", tuple(self.gate_set))
        object.__setattr__(self, "direct_strip", tuple(self.direct_strip))
        if self.coupling is None:
            object.__setattr__(self, "coupling", CouplingMap.linear(self.num_qubits))
        if self.num_qubits < 1:
            raise ConfigError("num_qubits must be positive")
        if not 0 <= self.depth_min <= self.depth_max:
            raise ConfigError("need 0 <= depth_min <= depth_max")
        if self.repetitions < 1 or self.num_circuits < 1:
            raise ConfigError("repetitions and num_circuits must be at least 1")
        if not self.gate_set:
            raise ConfigError("gate_set is empty")
        bad = [g for g in self.gate_set if g not in N_PARAMS or g == "Measure"]
        if bad:
            raise ConfigError(f"unsupported gates in gate_set: {bad}")
        if not 0 <= self.reduced_columns <= 2**self.num_qubits:
            raise ConfigError("reduced_columns must lie in [0, 2**num_qubits]")
        self.coupling.validate(self.num_qubits)
        if "CNOT" in self.gate_set and self.num_qubits >= 2 and not self.coupling.edges:
            raise ConfigError("CNOT requested but the coupling map has no edges")

    @classmethod
    def from_dict(cls, d: dict) -> ExperimentConfig:
        d = dict(d)
        if "noise" in d:
            d["noise"] = NoiseModel.from_dict(d["noise"])
        if "solver" in d:
            d["solver"] = SolverConfig(**d["solver"])
        coupling = d.pop("coupling", None)
        if isinstance(coupling, str):
            d["coupling"] = {"linear": CouplingMap.linear, "full": CouplingMap.full}[coupling](
                int(d["num_qubits"])
            )
        elif isinstance(coupling, dict):
            d["coupling"] = CouplingMap(frozenset(tuple(e) for e in coupling["edges"]))
        elif coupling is not None:
            d["coupling"] = CouplingMap(frozenset(tuple(e) for e in coupling))
        return cls(**d)

    @classmethod
    def from_toml(cls, path: str | Path) -> ExperimentConfig:
        with open(path, "rb") as fh:
            return cls.from_dict(tomllib.load(fh))

    def to_dict(self) -> dict:
        return {
            "num_qubits": self.num_qubits,
            "depth_min": self.depth_min,
            "depth_max": self.depth_max,
            "num_circuits": self.num_circuits,
            "repetitions": self.repetitions,
            "shots_device": self.shots_device,
            "shots_simulator": self.shots_simulator,
            "gate_set": list(self.gate_set),
            "coupling": [list(e) for e in self.coupling.sorted_edges()],
            "noise": self.noise.to_dict(),
            "method": self.method.value,
            "seed": self.seed,
            "reduced_columns": self.reduced_columns,
            "direct_strip": list(self.direct_strip),
            "terminal_layer": self.terminal_layer,
            "solver": {
                "max_iterations": self.solver.max_iterations,
                "tolerance": self.solver.tolerance,
                "seed": self.solver.seed,
                "restarts": self.solver.restarts,
            },
        }


def derive_seed(seed: int, *key: int) -> np.random.SeedSequence:
    """Independent stream for one (circuit, role, repetition, ...) slot."""
    return np.random.SeedSequence(seed, spawn_key=tuple(key))


class Backend(Protocol):
    def run(self, circuit: Circuit, shots: int, seed) -> Distribution: ...


class SimulatorBackend:
    """Noisy density-matrix device; counts every execution."""

    def __init__(self, noise: NoiseModel | None = None):
        self.noise = noise
        self.executions = 0

    def run(self, circuit: Circuit, shots: int, seed) -> Distribution:
        self.executions += 1
        return sample_counts(circuit, shots, self.noise, seed)


def _random_params(name: str, rng: np.random.Generator) -> tuple[float, ...]:
    return tuple(rng.uniform(0.0, 2 * PI, size=N_PARAMS[name]))


def random_circuit(cfg: ExperimentConfig, rng: np.random.Generator) -> Circuit:
    """Append uniformly drawn gates until the circuit reaches a uniformly drawn depth.

    Two-qubit gates are placed on a uniformly drawn coupling-map edge.
    """
    n = cfg.num_qubits
    gate_set = [g for g in cfg.gate_set if n >= 2 or g not in TWO_QUBIT_GATES]
    if not gate_set:
        raise ConfigError(f"no gate in {cfg.gate_set} fits on {n} qubit(s)")
    if any(g in TWO_QUBIT_GATES for g in gate_set) and not cfg.coupling.edges:
        raise ConfigError("CNOT requested but the coupling map has no edges")
    edges = cfg.coupling.sorted_edges()
    target = int(rng.integers(cfg.depth_min, cfg.depth_max + 1))
    frontier = [0] * n
    gates: list[Gate] = []
    while max(frontier) < target:
        name = str(rng.choice(gate_set))
        if name in TWO_QUBIT_GATES:
            qubits = edges[int(rng.integers(len(edges)))]
        else:
            qubits = (int(rng.integers(n)),)
        gates.append(Gate(name, qubits, _random_params(name, rng)))
        layer = max(frontier[q] for q in qubits) + 1
        for q in qubits:
            frontier[q] = layer
    if cfg.terminal_layer:
        gates += [
            Gate(cfg.terminal_layer, (q,), _random_params(cfg.terminal_layer, rng))
            for q in range(n)
        ]
    return Circuit(n, tuple(gates))


def generate_circuits(cfg: ExperimentConfig) -> list[Circuit]:
    """The ``cfg.num_circuits`` random circuits an experiment with ``cfg`` runs on."""
    return [
        random_circuit(cfg, np.random.default_rng(derive_seed(cfg.seed, i, _CIRCUIT)))
        for i in range(cfg.num_circuits)
    ]


@dataclass
class ExperimentRecord:
    experiment_id: int
    circuit: Circuit
    delta_v: list[float]
    delta_x: list[float]
    matrices: list[cal.CalibrationMatrix] = field(default_factory=list)
    classification: Classification | None = None

    @property
    def num_qubits(self) -> int:
        return self.circuit.num_qubits

    @property
    def depth(self) -> int:
        return self.circuit.depth

    @property
    def avg_delta_v(self) -> float:
        return float(np.mean(self.delta_v))

    @property
    def avg_delta_x(self) -> float:
        return float(np.mean(self.delta_x))

    @property
    def delta_g(self) -> float:
        return self.avg_delta_v - self.avg_delta_x

    @property
    def per_repetition_delta_g(self) -> list[float]:
        return [v - x for v, x in zip(self.delta_v, self.delta_x)]

    def outcome(self) -> MitigationOutcome:
        return MitigationOutcome(self.avg_delta_v, self.avg_delta_x, self.classification)

    def to_dict(self) -> dict:
        return {
            "experiment_id": self.experiment_id,
            "circuit": self.circuit.to_dict(),
            "delta_v": list(self.delta_v),
            "delta_x": list(self.delta_x),
            "delta_g": self.per_repetition_delta_g,
            "avg_delta_v": self.avg_delta_v,
            "avg_delta_x": self.avg_delta_x,
            "min_delta_v": min(self.delta_v),
            "max_delta_v": max(self.delta_v),
            "min_delta_x": min(self.delta_x),
            "max_delta_x": max(self.delta_x),
            "classification": None if self.classification is None else self.classification.value,
            "matrices": [m.to_dict() for m in self.matrices],
        }

    @classmethod
    def from_dict(cls, d: dict) -> ExperimentRecord:
        label = d.get("classification")
        return cls(
            experiment_id=int(d["experiment_id"]),
            circuit=Circuit.from_dict(d["circuit"]),
            delta_v=[float(x) for x in d["delta_v"]],
            delta_x=[float(x) for x in d["delta_x"]],
            matrices=[cal.CalibrationMatrix.from_dict(m) for m in d.get("matrices", [])],
            classification=None if label is None else Classification(label),
        )


def _run_all(backend: Backend, circuits: Sequence[Circuit], shots: int, seed: int, *key) -> list[Distribution]:
    return [backend.run(c, shots, derive_seed(seed, *key, j)) for j, c in enumerate(circuits)]


def _calibration_matrix(
    cfg: ExperimentConfig,
    backend: Backend,
    circuit: Circuit,
    i: int,
    r: int,
    plan: dict,
) -> cal.CalibrationMatrix:
    shots, seed = cfg.shots_device, cfg.seed
    if cfg.method is Method.QEM:
        cols = _run_all(backend, plan["qem"], shots, seed, i, _CALIB, r)
        return cal.build_matrix(cols, cal.MatrixKind.QEM)
    if cfg.method is Method.GEM:
        first, second = plan["gem"]
        m1 = cal.build_matrix(_run_all(backend, first, shots, seed, i, _CALIB, r, 0), "GEM_half1")
        m2 = cal.build_matrix(_run_all(backend, second, shots, seed, i, _CALIB, r, 1), "GEM_half2")
        return cal.combine(m1, m2)
    if cfg.method is Method.REDUCED:
        first, second = plan["gem"]
        columns = {}
        for k in plan["subset"]:
            a = backend.run(first[k], shots, derive_seed(seed, i, _CALIB, r, 0, k))
            b = backend.run(second[k], shots, derive_seed(seed, i, _CALIB, r, 1, k))
            columns[k] = Distribution((a.probs + b.probs) / 2, circuit.num_qubits)
        return cal.reduced_matrix(columns, circuit.num_qubits)
    cols = _run_all(backend, plan["direct"], shots, seed, i, _CALIB, r)
    return cal.build_direct_matrix(cols, plan["outputs"])


def _plan(cfg: ExperimentConfig, circuit: Circuit, i: int) -> dict:
    n = circuit.num_qubits
    if cfg.method is Method.QEM:
        return {"qem": cal.qem_calibration_circuits(n)}
    if cfg.method is Method.DIRECT:
        stripped = strip_gates(circuit, cfg.direct_strip)
        return {
            "direct": cal.direct_calibration_circuits(stripped),
            "outputs": cal.ideal_output_states(stripped),
        }
    plan = {"gem": cal.gem_calibration_circuits(circuit)}
    if cfg.method is Method.REDUCED:
        order = np.random.default_rng(derive_seed(cfg.seed, i, _SUBSET)).permutation(2**n)
        plan["subset"] = sorted(int(k) for k in order[: cfg.reduced_columns])
    return plan


def run_experiment(
    cfg: ExperimentConfig,
    circuits: Iterable[Circuit] | None = None,
    backend: Backend | None = None,
) -> list[ExperimentRecord]:
    """Run ``cfg.num_circuits`` mitigation experiments, ``cfg.repetitions`` times each.

    Every random draw comes from a seed derived from ``cfg.seed`` and the slot it
    fills, so two configs differing only in ``method`` see the same circuits and
    the same device samples of the main circuit.

    Args:
        cfg: experiment configuration.
        circuits: fixed circuits to use instead of random ones.
        backend: device to execute on; defaults to the noisy simulator for
            ``cfg.noise``.

    Returns:
        One classified record per circuit, in generation order.
    """
    backend = backend or SimulatorBackend(cfg.noise)
    if circuits is None:
        circuits = generate_circuits(cfg)
    ideal = SimulatorBackend(None)
    records = []
    for i, circuit in enumerate(circuits):
        measured = circuit.measured()
        s = ideal.run(measured, cfg.shots_simulator, derive_seed(cfg.seed, i, _SIM))
        plan = _plan(cfg, circuit, i)
        dv, dx, mats = [], [], []
        for r in range(cfg.repetitions):
            v = backend.run(measured, cfg.shots_device, derive_seed(cfg.seed, i, _DEVICE, r))
            m = _calibration_matrix(cfg, backend, circuit, i, r, plan)
            solver_seed = int(derive_seed(cfg.seed, i, _SOLVER, r).generate_state(1)[0])
            x = mitigate(m, v, replace(cfg.solver, seed=solver_seed))
            dv.append(rms_error(v, s))
            dx.append(rms_error(x, s))
            mats.append(m)
        records.append(ExperimentRecord(i, circuit, dv, dx, mats))
    for rec, out in zip(records, classify([rec.outcome() for rec in records])):
        rec.classification = out.classification
    return records


def executions_per_repetition(cfg: ExperimentConfig) -> int:
    """Noisy circuit executions per repetition: the main circuit plus calibrations."""
    dim = 2**cfg.num_qubits
    calibrations = {
        Method.GEM: 2 * dim,
        Method.QEM: dim,
        Method.DIRECT: dim,
        Method.REDUCED: 2 * cfg.reduced_columns,
    }[cfg.method]
    return 1 + calibrations


def save_records(records: Sequence[ExperimentRecord], path: str | Path) -> None:
    payload = {"records": [r.to_dict() for r in records]}
    Path(path).write_text(json.dumps(payload) + "\n", encoding="utf-8")


def load_records(path: str | Path) -> list[ExperimentRecord]:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    return [ExperimentRecord.from_dict(d) for d in payload["records"]]


REPORT_COLUMNS = (
    "experiment_id",
    "num_qubits",
    "depth",
    "avg_delta_v",
    "min_delta_v",
    "max_delta_v",
    "avg_delta_x",
    "min_delta_x",
    "max_delta_x",
    "delta_g",
    "classification",
)


def _rows(records: Sequence[ExperimentRecord]) -> list[dict]:
    ordered = sorted(records, key=lambda r: (r.avg_delta_v, r.experiment_id))
    return [
        {
            "experiment_id": r.experiment_id,
            "num_qubits": r.num_qubits,
            "depth": r.depth,
            "avg_delta_v": r.avg_delta_v,
            "min_delta_v": min(r.delta_v),
            "max_delta_v": max(r.delta_v),
            "avg_delta_x": r.avg_delta_x,
            "min_delta_x": min(r.delta_x),
            "max_delta_x": max(r.delta_x),
            "delta_g": r.delta_g,
            "classification": None if r.classification is None else r.classification.value,
        }
        for r in ordered
    ]


def render_report(records: Sequence[ExperimentRecord], fmt: str = "csv") -> str:
    """Report text: one row per experiment by ascending average delta V, then counts."""
    if not records:
        raise ValueError("no records to report")
    rows = _rows(records)
    counts = classification_counts([r.outcome() for r in records])
    fmt = fmt.lower()
    if fmt == "json":
        return json.dumps({"experiments": rows, "summary": counts}, indent=1) + "\n"
    if fmt != "csv":
        raise ValueError(f"unknown report format {fmt!r}")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(REPORT_COLUMNS)
    for row in rows:
        writer.writerow([repr(v) if isinstance(v, float) else v for v in row.values()])
    writer.writerow([])
    writer.writerow(["classification", "count"])
    for label, count in counts.items():
        writer.writerow([label, count])
    return buf.getvalue()


def emit_report(records: Sequence[ExperimentRecord], path: str | Path, fmt: str = "csv") -> Path:
    path = Path(path)
    text = render_report(records, fmt)
    try:
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise OSError(f"could not write report to {path}: {exc}") from exc
    return path
