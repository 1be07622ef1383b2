"""Simulated loss-factor extraction experiments.

Answers the design question "how many devices must be measured before
the extraction pins every region's loss from both sides?".  A known
target loss-factor vector generates ideal per-design Q_TLS values; a
campaign of N devices is simulated by sampling Q_TLS with a realistic
device-to-device spread, the sampled statistics feed the Monte Carlo
extraction, and the most extreme 95% CI bounds over repeated campaigns
form the worst-case uncertainty curve versus N.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalError, ValidationError
from .model import LossBasis, LossVector, ParticipationMatrix, QtlsDistribution, q_tls_forward
from .uncertainty import MAX_RESAMPLES, extract_mc

__all__ = [
    "SimExpConfig",
    "RepetitionRecord",
    "WorstCaseCurve",
    "run_simulated_experiment",
    "sample_device_qs",
]

DEFAULT_GRID = (40, 80, 120, 240)


@dataclass(frozen=True)
class SimExpConfig:
    """Inputs for one simulated measurement campaign comparison.

    ``relative_sd`` is the device-to-device spread of Q_TLS as a
    fraction of its mean; the default 0.1 is representative of spreads
    observed across nominally identical resonators.
    """

    matrix: ParticipationMatrix
    target: LossVector
    n_devices_grid: tuple[int, ...] = DEFAULT_GRID
    relative_sd: float = 0.1
    n_repetitions: int = 20
    mc_trials: int = 1000
    seed: int = 0

    def __post_init__(self) -> None:
        if self.target.basis is not LossBasis.LOSS_FACTOR:
            raise ValidationError("target must be in the loss-factor basis")
        if self.target.regions != self.matrix.region_names:
            raise ValidationError(
                f"target regions {self.target.regions} do not match the "
                f"matrix regions {self.matrix.region_names}"
            )
        if self.relative_sd < 0.0:
            raise ValidationError("relative_sd must be >= 0")
        grid = tuple(int(n) for n in self.n_devices_grid)
        if not grid or any(n < 2 for n in grid):
            raise ValidationError("n_devices_grid entries must be >= 2")
        if self.n_repetitions < 1:
            raise ValidationError("n_repetitions must be >= 1")
        if self.mc_trials < 1:
            raise ValidationError("mc_trials must be >= 1")
        object.__setattr__(self, "n_devices_grid", grid)


@dataclass(frozen=True)
class RepetitionRecord:
    """95% CI of one simulated campaign, per region."""

    n_devices: int
    repetition: int
    ci_low: tuple[float, ...]
    ci_high: tuple[float, ...]


@dataclass(frozen=True)
class WorstCaseCurve:
    """Most extreme CI bounds over repetitions, per (region, N)."""

    regions: tuple[str, ...]
    n_devices_grid: tuple[int, ...]
    worst_low: np.ndarray
    worst_high: np.ndarray
    records: tuple[RepetitionRecord, ...] = field(repr=False)

    def bounds(self, region: str, n_devices: int) -> tuple[float, float]:
        i = self.regions.index(region)
        j = self.n_devices_grid.index(n_devices)
        return float(self.worst_low[j, i]), float(self.worst_high[j, i])


def sample_device_qs(
    mean_q: float, relative_sd: float, n: int, rng: np.random.Generator
) -> np.ndarray:
    """Draw ``n`` device Q_TLS values from Normal(mean_q, relative_sd * mean_q).

    Non-positive draws are rejection-resampled, preserving the mean for
    the small spreads used in practice.
    """
    if mean_q <= 0.0:
        raise ValidationError("mean_q must be positive")
    if relative_sd < 0.0:
        raise ValidationError("relative_sd must be >= 0")
    if n < 1:
        raise ValidationError("n must be >= 1")
    sd = relative_sd * mean_q
    samples = rng.normal(mean_q, sd, size=n)
    for _ in range(MAX_RESAMPLES):
        bad = samples <= 0.0
        if not bad.any():
            return samples
        samples[bad] = rng.normal(mean_q, sd, size=int(bad.sum()))
    raise NumericalError(
        f"could not draw {n} positive Q samples from Normal({mean_q:g}, {sd:g})"
    )


def _sampling_rng(seed: int, n_devices: int, repetition: int, design: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=(seed, 1, n_devices, repetition, design))
    return np.random.Generator(np.random.Philox(ss))


def _extraction_seed(seed: int, n_devices: int, repetition: int) -> int:
    ss = np.random.SeedSequence(entropy=(seed, 2, n_devices, repetition))
    return int.from_bytes(ss.generate_state(4).tobytes(), "little")


def _allocate(n_total: int, ids: tuple[str, ...]) -> list[int]:
    """Split a device budget evenly; remainders go to earlier ids."""
    rows = len(ids)
    base, extra = divmod(n_total, rows)
    counts = [base] * rows
    for rank, i in enumerate(sorted(range(rows), key=lambda i: ids[i])):
        if rank < extra:
            counts[i] += 1
    return counts


def run_simulated_experiment(config: SimExpConfig, *, workers: int = 1) -> WorstCaseCurve:
    """Worst-case extraction uncertainty versus number of measured devices.

    For each grid point N and each repetition: every design receives an
    even share of the N simulated devices, per-design Q_TLS samples are
    drawn around the ideal forward-model value, their 1/Q mean and
    standard error feed :func:`extract_mc`, and the per-region 95% CI is
    recorded.  Worst-case bounds are the extreme CI edges over all
    repetitions.  Fully deterministic for a fixed seed, independent of
    ``workers``.
    """
    matrix = config.matrix
    rows = len(matrix.rows)
    ids = matrix.device_ids
    n_regions = len(matrix.regions)
    for n in config.n_devices_grid:
        if n < 2 * rows:
            raise ValidationError(
                f"insufficient samples per design: N={n} gives fewer than 2 "
                f"samples for {rows} designs"
            )

    p = matrix.values()
    ideal_q = np.array([q_tls_forward(p[j], config.target) for j in range(rows)])

    grid = config.n_devices_grid
    tasks = [(gi, rep) for gi in range(len(grid)) for rep in range(config.n_repetitions)]
    ci_low = np.empty((len(grid), config.n_repetitions, n_regions))
    ci_high = np.empty_like(ci_low)

    def run_one(task: tuple[int, int]) -> None:
        gi, rep = task
        n_total = grid[gi]
        counts = _allocate(n_total, ids)
        dists = []
        for j in range(rows):
            rng = _sampling_rng(config.seed, n_total, rep, j)
            qs = sample_device_qs(float(ideal_q[j]), config.relative_sd, counts[j], rng)
            inv = 1.0 / qs
            stderr = float(np.std(inv, ddof=1) / np.sqrt(counts[j])) if counts[j] > 1 else 0.0
            dists.append(
                QtlsDistribution(ids[j], float(np.mean(inv)), stderr, counts[j])
            )
        result = extract_mc(
            matrix, dists, config.mc_trials, _extraction_seed(config.seed, n_total, rep)
        )
        ci_low[gi, rep] = [lo for lo, _ in result.ci95]
        ci_high[gi, rep] = [hi for _, hi in result.ci95]

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run_one, tasks))
    else:
        for task in tasks:
            run_one(task)

    records = tuple(
        RepetitionRecord(
            n_devices=grid[gi],
            repetition=rep,
            ci_low=tuple(float(v) for v in ci_low[gi, rep]),
            ci_high=tuple(float(v) for v in ci_high[gi, rep]),
        )
        for gi, rep in tasks
    )
    worst_low = ci_low.min(axis=1)
    worst_high = ci_high.max(axis=1)
    worst_low.setflags(write=False)
    worst_high.setflags(write=False)
    return WorstCaseCurve(
        regions=matrix.region_names,
        n_devices_grid=grid,
        worst_low=worst_low,
        worst_high=worst_high,
        records=records,
    )
