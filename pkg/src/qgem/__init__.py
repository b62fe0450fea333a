"""General error mitigation (GEM) for small quantum circuits.

Calibration circuits are built from each half of a target circuit followed by
its inverse; their measured outputs form calibration matrices that are averaged
and used to recover the output distribution by simplex-constrained least
squares. A density-matrix simulator with synthetic noise stands in for the
device.
"""

from .calibration import (
    CalibrationMatrix,
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
from .circuits import (
    Circuit,
    CouplingMap,
    Gate,
    depth,
    inverse_gate,
    prepare_state,
    split_halves,
    transpile,
)
from .estimator import SimplexMitigator
from .harness import ExperimentConfig, ExperimentRecord, Method, emit_report, random_circuit, run_experiment
from .metrics import Classification, MitigationOutcome, classify, column_distinguishability, rms_error
from .mitigation import SolverConfig, mitigate, objective, project_simplex, solve
from .simulator import Distribution, NoiseModel, exact_probabilities, sample_counts

__version__ = "0.1.0"
