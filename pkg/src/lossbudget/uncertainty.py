"""Statistical layer: measurement summaries, Monte Carlo loss-factor
extraction with confidence intervals, and propagation of the trial
ensemble into predicted-Q confidence intervals.

Determinism contract: every random draw comes from a counter-based
Philox substream keyed by the master seed and indexed by (trial,
device), so results are bit-identical for a fixed seed no matter how
trials are scheduled or parallelized.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from .errors import NumericalError, ValidationError
from .model import LossBasis, LossVector, ParticipationMatrix, QtlsDistribution, q_tls_from_power_sweep
from .solver import LinearSystem, nnls_solve

__all__ = [
    "MeasurementSet",
    "ExtractionResult",
    "QPrediction",
    "summarize",
    "extract_mc",
    "predict_q_mc",
    "trial_device_rng",
]

_KEY_SPACE = 1 << 128
# Resampling cap for rejection of non-positive Gaussian draws.
MAX_RESAMPLES = 100


def trial_device_rng(seed: int, trial: int, device: int) -> np.random.Generator:
    """Independent, order-free substream for one (trial, device) cell.

    Distinct cells occupy disjoint Philox counter blocks under the same
    128-bit key, so draws do not depend on evaluation order.
    """
    key = seed % _KEY_SPACE
    return np.random.Generator(np.random.Philox(key=key, counter=[0, 0, device, trial]))


def _draw_positive(rng: np.random.Generator, mean: float, sd: float, what: str) -> float:
    """One Normal(mean, sd) draw, rejection-resampled to be positive."""
    for _ in range(MAX_RESAMPLES + 1):
        value = float(rng.normal(mean, sd))
        if value > 0.0:
            return value
    raise NumericalError(
        f"{what}: drew {MAX_RESAMPLES} consecutive non-positive samples "
        f"from Normal({mean:g}, {sd:g})"
    )


@dataclass(frozen=True)
class MeasurementSet:
    """Low/high-power intrinsic-Q samples for one device geometry.

    Sample lists are paired by index when their lengths match; otherwise
    the pooled mean of the high-power samples is used as the common
    power-independent reference for every low-power sample.
    """

    device_id: str
    q_low_samples: tuple[float, ...]
    q_high_samples: tuple[float, ...]

    def __post_init__(self) -> None:
        low = tuple(float(v) for v in self.q_low_samples)
        high = tuple(float(v) for v in self.q_high_samples)
        if not low or not high:
            raise ValidationError(
                f"device {self.device_id!r}: sample lists must be non-empty"
            )
        if min(low) <= 0.0 or min(high) <= 0.0:
            raise ValidationError(
                f"device {self.device_id!r}: all Q samples must be positive"
            )
        object.__setattr__(self, "q_low_samples", low)
        object.__setattr__(self, "q_high_samples", high)

    @property
    def n(self) -> int:
        return len(self.q_low_samples)


def summarize(measurements: MeasurementSet) -> QtlsDistribution:
    """Mean and standard error of 1/Q_TLS over a measurement set.

    Pairs with ``q_low >= q_high`` (no resolvable TLS loss) are excluded
    with a warning; if every pair is excluded a :class:`NumericalError`
    is raised.
    """
    low = measurements.q_low_samples
    high = measurements.q_high_samples
    if len(low) == len(high):
        pairs = list(zip(low, high))
    else:
        warnings.warn(
            f"device {measurements.device_id!r}: q_low/q_high lengths differ "
            f"({len(low)} vs {len(high)}); using the pooled mean q_high",
            stacklevel=2,
        )
        pooled = float(np.mean(high))
        pairs = [(q, pooled) for q in low]

    inv_q = []
    excluded = 0
    for q_low, q_high in pairs:
        try:
            inv_q.append(1.0 / q_tls_from_power_sweep(q_low, q_high))
        except ValidationError:
            excluded += 1
    if excluded:
        warnings.warn(
            f"device {measurements.device_id!r}: excluded {excluded} pair(s) "
            "with q_low >= q_high",
            stacklevel=2,
        )
    if not inv_q:
        raise NumericalError(
            f"device {measurements.device_id!r}: every measurement pair has "
            "q_low >= q_high; no TLS-dominated data"
        )

    arr = np.asarray(inv_q)
    n = arr.size
    if n == 1:
        warnings.warn(
            f"device {measurements.device_id!r}: single usable sample, stderr is 0",
            stacklevel=2,
        )
        stderr = 0.0
    else:
        stderr = float(np.std(arr, ddof=1) / np.sqrt(n))
    return QtlsDistribution(
        device_id=measurements.device_id,
        inv_q_mean=float(np.mean(arr)),
        inv_q_stderr=stderr,
        n_samples=int(n),
    )


@dataclass(frozen=True)
class ExtractionResult:
    """Point solution, Monte Carlo statistics and the trial ensemble."""

    regions: tuple[str, ...]
    point: LossVector
    point_residual_norm: float
    mean: tuple[float, ...]
    ci95: tuple[tuple[float, float], ...]
    ensemble: np.ndarray
    seed: int
    n_trials: int

    def ensemble_array(self) -> np.ndarray:
        return np.asarray(self.ensemble, dtype=float)


def _ordered_distributions(
    matrix: ParticipationMatrix, dists: Sequence[QtlsDistribution]
) -> list[QtlsDistribution]:
    by_id = {}
    for d in dists:
        if d.device_id in by_id:
            raise ValidationError(f"duplicate distribution for device {d.device_id!r}")
        by_id[d.device_id] = d
    ordered = []
    for device_id in matrix.device_ids:
        if device_id not in by_id:
            raise ValidationError(f"no Q_TLS distribution for device {device_id!r}")
        ordered.append(by_id.pop(device_id))
    if by_id:
        raise ValidationError(
            f"distributions reference unknown devices: {sorted(by_id)}"
        )
    return ordered


def _trial_rhs(
    seed: int,
    trial: int,
    means: np.ndarray,
    stderrs: np.ndarray,
    device_ids: Sequence[str],
    sample_space: str,
) -> np.ndarray:
    b = np.empty(means.size)
    for j in range(means.size):
        if stderrs[j] == 0.0:
            b[j] = means[j]
            continue
        rng = trial_device_rng(seed, trial, j)
        what = f"trial {trial}, device {device_ids[j]!r}"
        if sample_space == "inv_q":
            b[j] = _draw_positive(rng, means[j], stderrs[j], what)
        else:
            # Sample in Q space; the stderr is mapped through d(1/q)/dq.
            q_mean = 1.0 / means[j]
            q_sd = stderrs[j] / means[j] ** 2
            b[j] = 1.0 / _draw_positive(rng, q_mean, q_sd, what)
    return b


def extract_mc(
    matrix: ParticipationMatrix,
    dists: Sequence[QtlsDistribution],
    n_trials: int,
    seed: int,
    *,
    sample_space: Literal["inv_q", "q"] = "inv_q",
    workers: int = 1,
) -> ExtractionResult:
    """Monte Carlo loss-factor extraction.

    Each trial draws every device's 1/Q_TLS from Normal(mean, stderr)
    (or Q_TLS itself when ``sample_space="q"``), rejection-resampling
    non-positive values, and solves the nonnegative least-squares
    system.  Per-region means and 2.5/97.5 percentile confidence
    intervals are reported over the trial ensemble.
    """
    if n_trials < 1:
        raise ValidationError("n_trials must be >= 1")
    if sample_space not in ("inv_q", "q"):
        raise ValidationError(f"unknown sample space {sample_space!r}")
    if len(dists) != len(matrix.rows):
        raise ValidationError(
            f"{len(dists)} distributions for {len(matrix.rows)} matrix rows"
        )
    ordered = _ordered_distributions(matrix, dists)
    a = matrix.values()
    means = np.array([d.inv_q_mean for d in ordered])
    stderrs = np.array([d.inv_q_stderr for d in ordered])
    device_ids = matrix.device_ids
    n_regions = len(matrix.regions)

    point_x, point_res = nnls_solve(LinearSystem(a, means))

    ensemble = np.empty((n_trials, n_regions))

    def run_trial(trial: int) -> None:
        b = _trial_rhs(seed, trial, means, stderrs, device_ids, sample_space)
        ensemble[trial], _ = nnls_solve(LinearSystem(a, b))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run_trial, range(n_trials)))
    else:
        for trial in range(n_trials):
            run_trial(trial)

    mean = ensemble.mean(axis=0)
    lo, hi = np.percentile(ensemble, [2.5, 97.5], axis=0)
    ensemble.setflags(write=False)
    return ExtractionResult(
        regions=matrix.region_names,
        point=LossVector(matrix.region_names, tuple(point_x), LossBasis.LOSS_FACTOR),
        point_residual_norm=point_res,
        mean=tuple(float(v) for v in mean),
        ci95=tuple((float(l), float(h)) for l, h in zip(lo, hi)),
        ensemble=ensemble,
        seed=seed,
        n_trials=n_trials,
    )


@dataclass(frozen=True)
class QPrediction:
    """Monte Carlo Q_TLS prediction for one participation row."""

    q_mean: float
    ci95: tuple[float, float]
    n_trials_used: int
    n_trials_skipped: int


def predict_q_mc(p_row, result: ExtractionResult) -> QPrediction:
    """Propagate an extraction ensemble into a predicted Q_TLS with CI.

    Trials whose participation-loss products are all zero (infinite Q)
    are skipped with a warning; if every trial is skipped a
    :class:`NumericalError` is raised.
    """
    p = np.asarray(p_row, dtype=float)
    ensemble = result.ensemble_array()
    if ensemble.size == 0:
        raise ValidationError("extraction ensemble is empty")
    if p.ndim != 1 or p.size != ensemble.shape[1]:
        raise ValidationError(
            f"participation row has length {p.size}, ensemble has "
            f"{ensemble.shape[1]} regions"
        )

    inv_q = ensemble @ p
    usable = inv_q > 0.0
    n_skipped = int(np.count_nonzero(~usable))
    if n_skipped:
        warnings.warn(
            f"skipped {n_skipped} lossless trial(s) when predicting Q", stacklevel=2
        )
    if not np.any(usable):
        raise NumericalError("every trial predicts zero loss; cannot form Q statistics")

    q = 1.0 / inv_q[usable]
    lo, hi = np.percentile(q, [2.5, 97.5])
    return QPrediction(
        q_mean=float(np.mean(q)),
        ci95=(float(lo), float(hi)),
        n_trials_used=int(q.size),
        n_trials_skipped=n_skipped,
    )
