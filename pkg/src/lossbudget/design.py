"""Experimental-design diagnostics over a library of simulated devices.

Given a candidate library of participation vectors, find the device
subset whose participation matrix has the smallest 2-norm condition
number, and report how proportionally two regions' participations scale
across devices (the ratio diagnostic that separates isotropic from
anisotropic trenching).
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from itertools import combinations

from .errors import ValidationError
from .model import ParticipationMatrix
from .solver import condition_number

__all__ = [
    "SubsetScore",
    "DesignSearchResult",
    "ProportionalityRow",
    "search_min_condition",
    "proportionality_report",
]

# Exhaustive enumeration is refused above this subset count.
MAX_SUBSETS = 10_000_000


@dataclass(frozen=True)
class SubsetScore:
    device_ids: tuple[str, ...]
    kappa: float


@dataclass(frozen=True)
class DesignSearchResult:
    selected_ids: tuple[str, ...]
    kappa: float
    ranked_alternatives: tuple[SubsetScore, ...]


def search_min_condition(
    library: ParticipationMatrix, k: int, *, top_m: int = 10
) -> DesignSearchResult:
    """Exhaustively search all size-``k`` device subsets for minimal kappa.

    Ties are broken by lexicographic device-id order, so the result is
    independent of evaluation schedule.  ``ranked_alternatives`` holds
    the best ``top_m`` subsets including the winner.
    """
    n_rows = len(library.rows)
    if k < 1:
        raise ValidationError("k must be >= 1")
    if k > n_rows:
        raise ValidationError(f"k={k} exceeds the library size {n_rows}")
    n_subsets = math.comb(n_rows, k)
    if n_subsets > MAX_SUBSETS:
        raise ValidationError(
            f"C({n_rows}, {k}) = {n_subsets} subsets exceeds the enumeration "
            f"limit {MAX_SUBSETS}; prune the library before searching"
        )

    values = library.values()
    ids = library.device_ids
    # Iterate in id-lexicographic order so the first strict minimum seen
    # is also the tie-break winner.
    order = sorted(range(n_rows), key=lambda i: ids[i])

    def scored():
        for subset in combinations(order, k):
            sub_ids = tuple(ids[i] for i in subset)
            kappa = condition_number(values[list(subset), :]).kappa
            yield SubsetScore(sub_ids, kappa)

    best = heapq.nsmallest(top_m, scored(), key=lambda s: (s.kappa, s.device_ids))
    winner = best[0]
    return DesignSearchResult(
        selected_ids=winner.device_ids,
        kappa=winner.kappa,
        ranked_alternatives=tuple(best),
    )


@dataclass(frozen=True)
class ProportionalityRow:
    """One device's participation ratio between two regions."""

    device_id: str
    d: float | None
    ratio: float | None
    flagged: bool


def proportionality_report(
    matrix: ParticipationMatrix, region_a: str, region_b: str
) -> list[ProportionalityRow]:
    """Per-device participation ratio P_a / P_b, sorted by trench depth.

    Devices where the denominator participation is zero are flagged
    instead of divided.  Devices without a recorded trench depth sort
    after those with one.
    """
    ia = matrix.region_index(region_a)
    ib = matrix.region_index(region_b)
    rows = []
    for dev in matrix.rows:
        pa = dev.participation[ia]
        pb = dev.participation[ib]
        if pb == 0.0:
            rows.append(ProportionalityRow(dev.id, dev.d, None, True))
        else:
            rows.append(ProportionalityRow(dev.id, dev.d, pa / pb, False))
    rows.sort(key=lambda r: (r.d is None, r.d if r.d is not None else 0.0, r.device_id))
    return rows
