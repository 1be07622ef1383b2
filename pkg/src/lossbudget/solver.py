"""Linear-algebra kernel: constrained/unconstrained least squares and
condition-number diagnostics.

The nonnegative solver is a Lawson-Hanson active-set iteration.  It is
written out here (rather than delegated) because the surrounding
analysis depends on its exact-zero support, deterministic tie-breaking
and bounded iteration behavior.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, ValidationError
from .model import ParticipationMatrix

__all__ = [
    "LinearSystem",
    "ConditionReport",
    "nnls_solve",
    "least_squares",
    "condition_number",
]

# Singular values below RANK_TOL * s_max are treated as zero.
RANK_TOL = 1e-12


@dataclass(frozen=True)
class LinearSystem:
    """A least-squares system A x = b (rows = devices, b = 1/Q_TLS)."""

    matrix: np.ndarray
    rhs: np.ndarray

    def __post_init__(self) -> None:
        a = np.array(self.matrix, dtype=float)
        b = np.array(self.rhs, dtype=float)
        if a.ndim != 2 or a.size == 0:
            raise ValidationError("matrix must be 2-d and non-empty")
        if b.ndim != 1 or b.size != a.shape[0]:
            raise ValidationError(
                f"rhs has length {b.size}, matrix has {a.shape[0]} rows"
            )
        if not np.all(np.isfinite(a)) or not np.all(np.isfinite(b)):
            raise ValidationError("system entries must be finite")
        a.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "matrix", a)
        object.__setattr__(self, "rhs", b)


@dataclass(frozen=True)
class ConditionReport:
    """2-norm condition number and singular spectrum of a matrix."""

    kappa: float
    singular_values: tuple[float, ...]
    rank_estimate: int


def _lstsq(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # SVD-based minimum-norm solution; rcond=None uses machine-precision cutoff.
    return np.linalg.lstsq(a, b, rcond=None)[0]


def nnls_solve(system: LinearSystem) -> tuple[np.ndarray, float]:
    """Minimize ||A x - b||_2 subject to x >= 0 via an active-set iteration.

    Returns ``(x, residual_norm)``.  The passive set grows by the index
    with the largest (most positive) dual value w = A^T (b - A x); exact
    ties pick the lowest index.  Raises :class:`NumericalError` if more
    than ``3 n`` passive-set insertions occur without convergence.
    """
    a = system.matrix
    b = system.rhs
    if not np.any(a):
        raise ValidationError("matrix must be nonzero")
    m, n = a.shape

    x = np.zeros(n)
    passive = np.zeros(n, dtype=bool)
    # Dual feasibility cutoff, relative to the problem scale.
    tol = 1e-12 * float(np.linalg.norm(a.T @ b))

    passes = 0
    max_passes = 3 * n
    while True:
        w = a.T @ (b - a @ x)
        candidates = np.flatnonzero(~passive)
        if candidates.size == 0 or float(np.max(w[candidates])) <= tol:
            break
        if passes >= max_passes:
            raise NumericalError(
                f"NNLS did not converge after {max_passes} active-set passes "
                f"(passive set {np.flatnonzero(passive).tolist()}, "
                f"max dual {float(np.max(w[candidates])):.3e}, tol {tol:.3e})"
            )
        passes += 1
        # np.argmax returns the first maximizer, so exact ties go to the lowest index.
        j = candidates[int(np.argmax(w[candidates]))]
        passive[j] = True

        while True:
            z = np.zeros(n)
            z[passive] = _lstsq(a[:, passive], b)
            if float(np.min(z[passive])) > 0.0:
                x = z
                break
            # Step toward z until the first passive component hits zero,
            # then demote every component that reached the boundary.
            blocking = passive & (z <= 0.0)
            denom = x[blocking] - z[blocking]
            ratios = np.where(denom > 0.0, x[blocking] / np.where(denom > 0.0, denom, 1.0), 0.0)
            alpha = float(np.min(ratios))
            x = x + alpha * (z - x)
            passive &= x > 0.0
            x[~passive] = 0.0
            if not np.any(passive):
                x = np.zeros(n)
                break

    residual = float(np.linalg.norm(a @ x - b))
    return x, residual


def least_squares(system: LinearSystem) -> np.ndarray:
    """Minimum-norm unconstrained least-squares solution (SVD)."""
    return _lstsq(system.matrix, system.rhs)


def condition_number(matrix: "ParticipationMatrix | np.ndarray") -> ConditionReport:
    """2-norm condition number report for a participation matrix.

    kappa is scale invariant, so fraction-vs-percent storage does not
    change it.  A single-row matrix has one singular value and kappa 1;
    rank-deficient matrices report ``kappa = inf``.
    """
    if isinstance(matrix, ParticipationMatrix):
        a = matrix.values()
    else:
        a = np.asarray(matrix, dtype=float)
    if a.ndim == 1:
        a = a[np.newaxis, :]
    if a.ndim != 2 or a.size == 0:
        raise ValidationError("matrix must be 2-d and non-empty")
    if not np.all(np.isfinite(a)):
        raise ValidationError("matrix entries must be finite")
    if not np.any(a):
        raise ValidationError("matrix is identically zero")

    s = np.linalg.svd(a, compute_uv=False)
    s_max = float(s[0])
    s_min = float(s[-1])
    kappa = s_max / s_min if s_min > 0.0 else float("inf")
    rank = int(np.count_nonzero(s > RANK_TOL * s_max))
    return ConditionReport(
        kappa=kappa,
        singular_values=tuple(float(v) for v in s),
        rank_estimate=rank,
    )
