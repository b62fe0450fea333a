"""Error measures, mitigation classification and calibration-matrix diagnostics."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace
from enum import Enum
from typing import Sequence

import numpy as np

from .calibration import CalibrationMatrix

THRESHOLD_FRACTION = 0.03


class Classification(str, Enum):
    POSITIVE = "Positive"
    NEGATIVE = "Negative"
    NONE = "None"


@dataclass(frozen=True)
class MitigationOutcome:
    delta_v: float
    delta_x: float
    classification: Classification | None = None

    @property
    def delta_g(self) -> float:
        return self.delta_v - self.delta_x


def rms_error(a, s) -> float:
    """Euclidean distance ``sqrt(sum_k (a_k - s_k)^2)`` between two distributions.

    The sum is not divided by the number of states.
    """
    a = np.asarray(a, dtype=float).ravel()
    s = np.asarray(s, dtype=float).ravel()
    if a.shape != s.shape:
        raise ValueError(f"cannot compare distributions of width {a.size} and {s.size}")
    return float(np.sqrt(np.sum((a - s) ** 2)))


def classify(outcomes: Sequence[MitigationOutcome]) -> list[MitigationOutcome]:
    """Label each experiment Positive, Negative or None.

    ``outcomes`` holds one entry per experiment with ``delta_v``/``delta_x``
    already averaged over repetitions. An experiment counts as unmitigated when
    ``|delta_g|`` is below 3% of the largest average ``delta_v`` in the batch.
    """
    if not outcomes:
        raise ValueError("nothing to classify")
    threshold = THRESHOLD_FRACTION * max(o.delta_v for o in outcomes)
    labelled = []
    for o in outcomes:
        if abs(o.delta_g) < threshold or o.delta_g == 0:
            label = Classification.NONE
        elif o.delta_g > 0:
            label = Classification.POSITIVE
        else:
            label = Classification.NEGATIVE
        labelled.append(replace(o, classification=label))
    return labelled


def classification_counts(outcomes: Sequence[MitigationOutcome]) -> dict[str, int]:
    counts = {c.value: 0 for c in Classification}
    for o in outcomes:
        counts[Classification(o.classification).value] += 1
    return counts


def column_distinguishability(M) -> float:
    """Smallest half-L1 distance between two columns of a calibration matrix.

    This is a proxy for how well the device separates the calibration states:
    1 for the identity, 0 when two columns coincide (for instance a matrix with
    every entry equal).
    """
    m = np.asarray(M.entries if isinstance(M, CalibrationMatrix) else M, dtype=float)
    if m.shape[1] < 2:
        return 1.0
    return float(
        min(
            0.5 * np.abs(m[:, i] - m[:, j]).sum()
            for i, j in itertools.combinations(range(m.shape[1]), 2)
        )
    )


def condition_number(M) -> float:
    m = np.asarray(M.entries if isinstance(M, CalibrationMatrix) else M, dtype=float)
    return float(np.linalg.cond(m))
