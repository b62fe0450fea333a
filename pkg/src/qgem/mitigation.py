"""Least-squares recovery of a probability vector through a calibration matrix.

Solves ``min_x ||v - M x||^2`` over the probability simplex with a monotone
accelerated projected-gradient method (exact sort-based projection) followed by
an equality-constrained polish on the detected support. The objective is a
convex quadratic, so any feasible point where a projected-gradient step no
longer improves the objective is a global minimizer.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .calibration import CalibrationMatrix
from .simulator import Distribution

NORMALIZATION_ATOL = 1e-6


@dataclass(frozen=True)
class SolverConfig:
    max_iterations: int = 10000
    tolerance: float = 1e-12
    seed: int = 0
    restarts: int = 4

    def __post_init__(self) -> None:
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.restarts < 1:
            raise ValueError("restarts must be at least 1")


@dataclass(frozen=True)
class MitigationResult:
    distribution: Distribution
    objective: float
    converged: bool
    iterations: int
    start: int  # 0 is the observed vector, 1.. are random starts


def project_simplex(y: np.ndarray) -> np.ndarray:
    """Euclidean projection of ``y`` onto ``{x >= 0, sum(x) = 1}``."""
    u = np.sort(y)[::-1]
    css = np.cumsum(u) - 1.0
    ind = np.arange(1, y.size + 1)
    rho = np.count_nonzero(u - css / ind > 0)
    theta = css[rho - 1] / rho
    return np.maximum(y - theta, 0.0)


def _as_arrays(M, V) -> tuple[np.ndarray, np.ndarray]:
    m = np.asarray(M.entries if isinstance(M, CalibrationMatrix) else M, dtype=float)
    v = np.asarray(V, dtype=float).ravel()
    if m.ndim != 2 or m.shape[0] != v.size or m.shape[1] != v.size:
        raise ValueError(f"matrix of shape {m.shape} does not match a vector of length {v.size}")
    return m, v


def objective(M, X, V) -> float:
    """Sum of squared residuals ``sum_i (v_i - (M X)_i)^2``."""
    m, v = _as_arrays(M, V)
    x = np.asarray(X, dtype=float).ravel()
    if x.size != m.shape[1]:
        raise ValueError(f"vector of length {x.size} does not match matrix {m.shape}")
    r = v - m @ x
    return float(r @ r)


class _Problem:
    def __init__(self, m: np.ndarray, v: np.ndarray):
        self.m = m
        self.v = v
        self.mt = m.T
        # Lipschitz constant of the gradient 2 M^T (M x - v)
        self.lip = max(2.0 * float(np.linalg.norm(m, 2)) ** 2, 1e-300)

    def f(self, x: np.ndarray) -> float:
        r = self.m @ x - self.v
        return float(r @ r)

    def grad(self, x: np.ndarray) -> np.ndarray:
        return 2.0 * (self.mt @ (self.m @ x - self.v))

    def pg_step(self, x: np.ndarray) -> np.ndarray:
        return project_simplex(x - self.grad(x) / self.lip)

    def polish(self, x: np.ndarray) -> np.ndarray | None:
        """Solve the equality-constrained problem on the support of ``x``."""
        support = np.flatnonzero(x > 1e-14)
        k = support.size
        ms = self.m[:, support]
        kkt = np.zeros((k + 1, k + 1))
        kkt[:k, :k] = ms.T @ ms
        kkt[:k, k] = 1.0
        kkt[k, :k] = 1.0
        rhs = np.append(ms.T @ self.v, 1.0)
        sol = np.linalg.lstsq(kkt, rhs, rcond=None)[0][:k]
        if np.any(sol < 0) or not np.all(np.isfinite(sol)):
            return None
        out = np.zeros_like(x)
        out[support] = sol
        return out / out.sum()


def _descend(prob: _Problem, x0: np.ndarray, cfg: SolverConfig) -> tuple[np.ndarray, float, bool, int]:
    """Monotone FISTA from ``x0``; returns (x, f(x), converged, iterations)."""
    x = project_simplex(x0)
    fx = prob.f(x)
    y, t = x.copy(), 1.0
    check_every = 25
    for it in range(1, cfg.max_iterations + 1):
        z = prob.pg_step(y)
        fz = prob.f(z)
        x_prev = x
        if fz <= fx:
            x, fx = z, fz
        t_next = (1.0 + np.sqrt(1.0 + 4.0 * t * t)) / 2.0
        y = x + (t / t_next) * (z - x) + ((t - 1.0) / t_next) * (x - x_prev)
        t = t_next
        if it % check_every and it not in (1, cfg.max_iterations):
            continue
        polished = prob.polish(x)
        if polished is not None:
            fp = prob.f(polished)
            if fp <= fx:
                x, fx = polished, fp
                y, t = x.copy(), 1.0
        step = prob.pg_step(x)
        fs = prob.f(step)
        if fx - fs <= cfg.tolerance:
            if fs < fx:
                x, fx = step, fs
            return x, fx, True, it
    return x, fx, False, cfg.max_iterations


def _starts(v: np.ndarray, cfg: SolverConfig) -> list[np.ndarray]:
    starts = [v.copy()]
    for child in np.random.SeedSequence(cfg.seed).spawn(cfg.restarts):
        e = np.random.default_rng(child).exponential(size=v.size)
        starts.append(e / e.sum())
    return starts


def solve(M, V, cfg: SolverConfig | None = None) -> MitigationResult:
    """Minimize the residual over the simplex from several starts; keep the best.

    Start 0 is the observed vector itself, so the result is never worse than
    reporting the raw data. Ties go to the lowest start index.
    """
    cfg = cfg or SolverConfig()
    m, v = _as_arrays(M, V)
    # 1e-6 admits calibration data quoted to 7 decimals
    observed = V if isinstance(V, Distribution) else Distribution(v, atol=NORMALIZATION_ATOL)
    prob = _Problem(m, v)
    best = None
    for i, x0 in enumerate(_starts(v, cfg)):
        x, fx, conv, iters = _descend(prob, x0, cfg)
        if best is None or fx < best[1]:
            best = (x, fx, conv, iters, i)
    x, fx, conv, iters, i = best
    x = np.clip(x, 0.0, 1.0)
    x /= x.sum()
    return MitigationResult(Distribution(x, observed.num_qubits), prob.f(x), conv, iters, i)


def mitigate(M, V, cfg: SolverConfig | None = None) -> Distribution:
    """Mitigated distribution for observed frequencies ``V`` under calibration ``M``."""
    return solve(M, V, cfg).distribution
