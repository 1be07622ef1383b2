"""Domain types and the deterministic participation-ratio loss model.

A resonator's TLS-limited inverse quality factor is modeled as a linear
combination of per-region energy participation ratios and per-region
"loss factors": 1/Q_TLS = sum_i P_i * x_i.  A loss factor is a loss
tangent rescaled by the ratio of the assumed interface thickness and
permittivity to the nominal values used when the participations were
simulated; for the bulk substrate the two coincide.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .errors import NumericalError, ValidationError

__all__ = [
    "RegionKind",
    "EtchStyle",
    "LossBasis",
    "RegionSpec",
    "DeviceGeometry",
    "ParticipationMatrix",
    "QtlsDistribution",
    "LossVector",
    "q_tls_from_power_sweep",
    "q_tls_forward",
    "decompose_losses",
    "loss_factor_from_tangent",
    "tangent_from_loss_factor",
    "convert_loss_vector",
    "default_region_set",
]


class RegionKind(Enum):
    """Field orientation relative to a dielectric region."""

    INTERFACE_PERPENDICULAR = "perpendicular"
    INTERFACE_PARALLEL = "parallel"
    BULK = "bulk"

    @property
    def is_interface(self) -> bool:
        return self is not RegionKind.BULK


class EtchStyle(Enum):
    ISOTROPIC = "isotropic"
    ANISOTROPIC = "anisotropic"
    PLANAR = "planar"
    SUSPENDED = "suspended"


class LossBasis(Enum):
    LOSS_FACTOR = "loss_factor"
    LOSS_TANGENT = "loss_tangent"


@dataclass(frozen=True)
class RegionSpec:
    """A named dielectric region with thickness/permittivity assumptions.

    Interface regions carry both the nominal values used in the field
    simulations (``t_nom``, ``eps_nom``) and the values assumed when
    ascribing loss tangents (``t_assumed``, ``eps_assumed``).  Thickness
    is in nanometers; permittivities are relative.  Bulk regions ignore
    thickness.
    """

    name: str
    kind: RegionKind
    eps_nom: float
    eps_assumed: float
    t_nom: float | None = None
    t_assumed: float | None = None

    def __post_init__(self) -> None:
        if not self.name:
            raise ValidationError("region name must be non-empty")
        if self.eps_nom < 1.0 or self.eps_assumed < 1.0:
            raise ValidationError(
                f"region {self.name!r}: relative permittivity must be >= 1"
            )
        if self.kind.is_interface:
            if self.t_nom is None or self.t_assumed is None:
                raise ValidationError(
                    f"region {self.name!r}: interface kinds require t_nom and t_assumed"
                )
            if self.t_nom <= 0.0 or self.t_assumed <= 0.0:
                raise ValidationError(
                    f"region {self.name!r}: thickness must be positive"
                )


@dataclass(frozen=True)
class DeviceGeometry:
    """A resonator cross-section and its simulated participation vector.

    ``w`` (center trace width), ``g`` (gap to ground) and ``d`` (trench
    depth) are in micrometers and optional: they document the geometry
    but only the participation vector enters the loss model.
    """

    id: str
    participation: tuple[float, ...]
    w: float | None = None
    g: float | None = None
    d: float | None = None
    etch_style: EtchStyle | None = None

    def __post_init__(self) -> None:
        if not self.id:
            raise ValidationError("device id must be non-empty")
        p = np.asarray(self.participation, dtype=float)
        if p.ndim != 1 or p.size == 0:
            raise ValidationError(f"device {self.id!r}: participation must be a non-empty vector")
        if not np.all(np.isfinite(p)):
            raise ValidationError(f"device {self.id!r}: participation entries must be finite")
        if np.any(p < 0.0) or np.any(p > 1.0):
            raise ValidationError(
                f"device {self.id!r}: participation entries must lie in [0, 1]"
            )
        # Residual energy may live in (lossless) vacuum, so the sum may be < 1.
        if float(p.sum()) > 1.0 + 1e-6:
            raise ValidationError(
                f"device {self.id!r}: participation sum {p.sum():.6g} exceeds 1"
            )
        object.__setattr__(self, "participation", tuple(float(v) for v in p))


@dataclass(frozen=True)
class ParticipationMatrix:
    """Ordered device rows over an ordered region set.

    Entry ``[j][i]`` is the energy fraction of device ``j`` in region
    ``i``, stored as a dimensionless fraction (not percent).
    """

    regions: tuple[RegionSpec, ...]
    rows: tuple[DeviceGeometry, ...]

    def __post_init__(self) -> None:
        regions = tuple(self.regions)
        rows = tuple(self.rows)
        if not regions or not rows:
            raise ValidationError("participation matrix needs >= 1 region and >= 1 device")
        names = [r.name for r in regions]
        if len(set(names)) != len(names):
            raise ValidationError(f"region names must be unique, got {names}")
        ids = [r.id for r in rows]
        if len(set(ids)) != len(ids):
            raise ValidationError(f"device ids must be unique, got {ids}")
        for row in rows:
            if len(row.participation) != len(regions):
                raise ValidationError(
                    f"device {row.id!r}: participation has {len(row.participation)} "
                    f"entries but the region set has {len(regions)}"
                )
        object.__setattr__(self, "regions", regions)
        object.__setattr__(self, "rows", rows)

    @property
    def region_names(self) -> tuple[str, ...]:
        return tuple(r.name for r in self.regions)

    @property
    def device_ids(self) -> tuple[str, ...]:
        return tuple(r.id for r in self.rows)

    @property
    def shape(self) -> tuple[int, int]:
        return (len(self.rows), len(self.regions))

    def values(self) -> np.ndarray:
        """Participation entries as a fresh (devices x regions) float array."""
        return np.array([r.participation for r in self.rows], dtype=float)

    def row(self, device_id: str) -> np.ndarray:
        for r in self.rows:
            if r.id == device_id:
                return np.asarray(r.participation, dtype=float)
        raise ValidationError(f"unknown device id {device_id!r}")

    def region_index(self, name: str) -> int:
        for i, r in enumerate(self.regions):
            if r.name == name:
                return i
        raise ValidationError(f"unknown region {name!r}")

    def submatrix(self, device_ids: Sequence[str]) -> "ParticipationMatrix":
        rows = tuple(self.rows[self.device_ids.index(d)] for d in device_ids)
        return ParticipationMatrix(self.regions, rows)


@dataclass(frozen=True)
class QtlsDistribution:
    """Mean and standard error of a device's measured 1/Q_TLS."""

    device_id: str
    inv_q_mean: float
    inv_q_stderr: float
    n_samples: int

    def __post_init__(self) -> None:
        if self.inv_q_mean <= 0.0:
            raise ValidationError(f"device {self.device_id!r}: inv_q_mean must be > 0")
        if self.inv_q_stderr < 0.0:
            raise ValidationError(f"device {self.device_id!r}: inv_q_stderr must be >= 0")
        if self.n_samples < 1:
            raise ValidationError(f"device {self.device_id!r}: n_samples must be >= 1")


@dataclass(frozen=True)
class LossVector:
    """Per-region nonnegative loss values in a declared basis."""

    regions: tuple[str, ...]
    values: tuple[float, ...]
    basis: LossBasis = LossBasis.LOSS_FACTOR

    def __post_init__(self) -> None:
        regions = tuple(self.regions)
        values = tuple(float(v) for v in self.values)
        if len(regions) != len(values):
            raise ValidationError(
                f"loss vector has {len(values)} values for {len(regions)} regions"
            )
        if any(not math.isfinite(v) or v < 0.0 for v in values):
            raise ValidationError("loss values must be finite and >= 0")
        object.__setattr__(self, "regions", regions)
        object.__setattr__(self, "values", values)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)


def q_tls_from_power_sweep(q_low: float, q_high: float) -> float:
    """TLS-limited Q from low-power and high-power intrinsic Q values.

    High-power loss is power-independent; subtracting it in inverse-Q
    space isolates the TLS contribution: Q_TLS = 1 / (1/q_low - 1/q_high).
    """
    if q_low <= 0.0 or q_high <= 0.0:
        raise ValidationError("quality factors must be positive")
    if q_low >= q_high:
        raise ValidationError(
            f"non-positive TLS loss: q_low={q_low:g} >= q_high={q_high:g} "
            "(device is not TLS-dominated)"
        )
    return 1.0 / (1.0 / q_low - 1.0 / q_high)


def _loss_factor_values(x: "LossVector | Sequence[float] | np.ndarray") -> np.ndarray:
    if isinstance(x, LossVector):
        if x.basis is not LossBasis.LOSS_FACTOR:
            raise ValidationError("expected a loss vector in the loss-factor basis")
        return x.as_array()
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1:
        raise ValidationError("loss values must be a 1-d vector")
    return arr


def _inv_q_terms(p_row, x) -> np.ndarray:
    p = np.asarray(p_row, dtype=float)
    xv = _loss_factor_values(x)
    if p.ndim != 1 or p.shape != xv.shape:
        raise ValidationError(
            f"participation row has length {p.size}, loss vector has length {xv.size}"
        )
    if not np.all(np.isfinite(p)) or not np.all(np.isfinite(xv)):
        raise ValidationError("inputs must be finite")
    if np.any(xv < 0.0):
        raise ValidationError("loss factors must be >= 0")
    return p * xv


def q_tls_forward(p_row, x) -> float:
    """Predicted Q_TLS of one device: 1 / sum_i(P_i * x_i)."""
    terms = _inv_q_terms(p_row, x)
    total = float(np.sum(terms))
    if total <= 0.0:
        raise NumericalError("lossless model: all participation-loss products are zero")
    return 1.0 / total

def decompose_losses(p_row, x) -> np.ndarray:
    """Per-region inverse-Q contributions [P_i * x_i] for one device.

    The terms sum (in index order) to exactly the inverse of
    :func:`q_tls_forward` for the same inputs.
    """
    terms = _inv_q_terms(p_row, x)
    if float(np.sum(terms)) <= 0.0:
        raise NumericalError("lossless model: all participation-loss products are zero")
    return terms


def _factor_scale(region: RegionSpec) -> float:
    """Loss-factor / loss-tangent ratio implied by the region assumptions."""
    if region.kind is RegionKind.BULK:
        return 1.0
    t_ratio = region.t_assumed / region.t_nom  # type: ignore[operator]
    if region.kind is RegionKind.INTERFACE_PARALLEL:
        return t_ratio * (region.eps_assumed / region.eps_nom)
    return t_ratio * (region.eps_nom / region.eps_assumed)


def loss_factor_from_tangent(region: RegionSpec, tan_delta: float) -> float:
    """Rescale a loss tangent into the loss factor of ``region``."""
    if not math.isfinite(tan_delta) or tan_delta < 0.0:
        raise ValidationError("loss tangent must be finite and >= 0")
    return _factor_scale(region) * tan_delta


def tangent_from_loss_factor(region: RegionSpec, x: float) -> float:
    """Exact inverse of :func:`loss_factor_from_tangent`."""
    if not math.isfinite(x) or x < 0.0:
        raise ValidationError("loss factor must be finite and >= 0")
    return x / _factor_scale(region)


def convert_loss_vector(
    regions: Sequence[RegionSpec], vector: LossVector, to_basis: LossBasis
) -> LossVector:
    """Convert a loss vector between the factor and tangent bases."""
    names = tuple(r.name for r in regions)
    if names != vector.regions:
        raise ValidationError(
            f"region mismatch: vector is over {vector.regions}, set is {names}"
        )
    if vector.basis is to_basis:
        return vector
    if to_basis is LossBasis.LOSS_FACTOR:
        values = [loss_factor_from_tangent(r, v) for r, v in zip(regions, vector.values)]
    else:
        values = [tangent_from_loss_factor(r, v) for r, v in zip(regions, vector.values)]
    return LossVector(names, tuple(values), to_basis)


def default_region_set() -> tuple[RegionSpec, ...]:
    """The four-region partition used throughout: MS, SA, MA and bulk Si.

    Nominal values match the thin-interface settings used when the bundled
    participation matrices were simulated (10 nm interfaces); the assumed
    values are those commonly adopted when quoting interface loss tangents
    (2 nm thickness, literature permittivities).
    """
    return (
        RegionSpec("MS", RegionKind.INTERFACE_PERPENDICULAR,
                   eps_nom=11.35, eps_assumed=11.4, t_nom=10.0, t_assumed=2.0),
        RegionSpec("SA", RegionKind.INTERFACE_PARALLEL,
                   eps_nom=4.0, eps_assumed=4.0, t_nom=10.0, t_assumed=2.0),
        RegionSpec("MA", RegionKind.INTERFACE_PERPENDICULAR,
                   eps_nom=10.0, eps_assumed=10.0, t_nom=10.0, t_assumed=2.0),
        RegionSpec("Si", RegionKind.BULK, eps_nom=11.35, eps_assumed=11.35),
    )
