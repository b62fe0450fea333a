"""scikit-learn compatible wrapper around calibration-matrix mitigation."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .calibration import CalibrationMatrix, MatrixKind
from .metrics import column_distinguishability
from .mitigation import SolverConfig, solve


def _check_distributions(X, n_features: int | None = None) -> np.ndarray:
    X = check_array(X, dtype=np.float64)
    if n_features is not None and X.shape[1] != n_features:
        raise ValueError(f"X has {X.shape[1]} states, the calibration has {n_features}")
    if np.any(X < -1e-9) or np.any(np.abs(X.sum(axis=1) - 1.0) > 1e-9):
        raise ValueError("every row of X must be a normalized probability vector")
    return X


class SimplexMitigator(TransformerMixin, BaseEstimator):
    """Mitigate measured distributions with a calibration matrix.

    ``fit`` takes calibration data with one row per calibration circuit: row
    ``k`` is the distribution measured for the circuit whose ideal output is
    basis state ``k``. A 3-D array of shape ``(n_sets, n_states, n_states)``
    holds several calibration sets (the two half-circuit sets of GEM, say),
    which are averaged.

    ``transform`` maps each row of observed frequencies to the closest
    probability vector in the least-squares sense.

    Parameters
    ----------
    max_iterations : int, default=10000
    tolerance : float, default=1e-12
        Stop once a projected-gradient step improves the objective by less.
    restarts : int, default=4
        Random simplex starts in addition to the observed vector.
    random_state : int, default=0

    Attributes
    ----------
    calibration_matrix_ : ndarray of shape (n_states, n_states)
        Column ``j`` is the response to ideal state ``j``.
    n_qubits_ : int
    distinguishability_ : float
    converged_ : ndarray of bool
        Solver convergence flag per row of the last ``transform`` call.
    """

    def __init__(self, max_iterations=10000, tolerance=1e-12, restarts=4, random_state=0):
        self.max_iterations = max_iterations
        self.tolerance = tolerance
        self.restarts = restarts
        self.random_state = random_state

    def fit(self, X, y=None):
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 3:
            X = X.mean(axis=0)
            kind = MatrixKind.GEM_COMBINED
        else:
            kind = MatrixKind.QEM
        X = _check_distributions(X)
        if X.shape[0] != X.shape[1]:
            raise ValueError(f"calibration data must be square, got {X.shape}")
        n_qubits = int(np.log2(X.shape[1]))
        if 2**n_qubits != X.shape[1]:
            raise ValueError(f"{X.shape[1]} states is not a power of two")
        matrix = CalibrationMatrix(X.T, n_qubits, kind)
        self.calibration_matrix_ = np.array(matrix.entries)
        self.n_qubits_ = n_qubits
        self.n_features_in_ = X.shape[1]
        self.distinguishability_ = column_distinguishability(matrix.entries)
        return self

    def _solver_config(self) -> SolverConfig:
        return SolverConfig(
            max_iterations=self.max_iterations,
            tolerance=self.tolerance,
            seed=self.random_state,
            restarts=self.restarts,
        )

    def transform(self, X):
        check_is_fitted(self, "calibration_matrix_")
        X = _check_distributions(X, self.n_features_in_)
        cfg = self._solver_config()
        results = [solve(self.calibration_matrix_, row, cfg) for row in X]
        self.converged_ = np.array([r.converged for r in results])
        return np.vstack([r.distribution.probs for r in results])

    def inverse_transform(self, X):
        """Push ideal distributions through the calibration matrix (the forward noise map)."""
        check_is_fitted(self, "calibration_matrix_")
        X = _check_distributions(X, self.n_features_in_)
        return X @ self.calibration_matrix_.T

    def score(self, X, y):
        """Mean decrease in Euclidean distance to the ideal rows ``y``."""
        X = _check_distributions(X, getattr(self, "n_features_in_", None))
        y = _check_distributions(y, X.shape[1])
        mitigated = self.transform(X)
        before = np.linalg.norm(X - y, axis=1)
        after = np.linalg.norm(mitigated - y, axis=1)
        return float(np.mean(before - after))
