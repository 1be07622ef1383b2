"""Dataset ingestion and validation.

A dataset is a single JSON document bundling a region set, the device
participation matrix and (optionally) raw Q measurements and/or
pre-summarized 1/Q_TLS statistics.  The file must declare its
participation units explicitly; percent entries are converted to
fractions on load.  Measurement sample lists may alternatively live in
a CSV file referenced from the dataset.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

from .errors import ValidationError
from .model import (
    DeviceGeometry,
    EtchStyle,
    LossBasis,
    LossVector,
    ParticipationMatrix,
    QtlsDistribution,
    RegionKind,
    RegionSpec,
)
from .simexp import SimExpConfig
from .uncertainty import MeasurementSet, summarize

__all__ = [
    "Dataset",
    "load_dataset",
    "write_dataset",
    "load_regions",
    "load_loss_vector",
    "load_simexp_config",
    "file_digest",
]

_KIND_NAMES = {k.value: k for k in RegionKind}
_ETCH_NAMES = {e.value: e for e in EtchStyle}
_BASIS_NAMES = {b.value: b for b in LossBasis}


@dataclass(frozen=True)
class Dataset:
    """A validated region set, device matrix and optional measurements."""

    matrix: ParticipationMatrix
    name: str = ""
    measurements: tuple[MeasurementSet, ...] = ()
    qtls: tuple[QtlsDistribution, ...] = ()
    metadata: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        ids = set(self.matrix.device_ids)
        for m in self.measurements:
            if m.device_id not in ids:
                raise ValidationError(
                    f"measurement references unknown device {m.device_id!r}"
                )
        for q in self.qtls:
            if q.device_id not in ids:
                raise ValidationError(
                    f"qtls entry references unknown device {q.device_id!r}"
                )

    @property
    def regions(self) -> tuple[RegionSpec, ...]:
        return self.matrix.regions

    def distributions(self) -> tuple[QtlsDistribution, ...]:
        """One 1/Q_TLS distribution per device row, in row order.

        Pre-summarized entries win over raw measurements for the same
        device; raw measurements are summarized on the fly.
        """
        explicit = {q.device_id: q for q in self.qtls}
        measured = {m.device_id: m for m in self.measurements}
        out = []
        for device_id in self.matrix.device_ids:
            if device_id in explicit:
                out.append(explicit[device_id])
            elif device_id in measured:
                out.append(summarize(measured[device_id]))
            else:
                raise ValidationError(
                    f"device {device_id!r} has neither measurements nor qtls statistics"
                )
        return tuple(out)


def file_digest(path: "str | Path") -> str:
    """SHA-256 hex digest of a file's bytes (for report traceability)."""
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _require(obj: Mapping[str, Any], key: str, where: str) -> Any:
    if key not in obj:
        raise ValidationError(f"{where}: missing required field {key!r}")
    return obj[key]


def _number(value: Any, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(f"{where}: expected a number, got {value!r}")
    return float(value)


def _parse_region(obj: Mapping[str, Any], index: int) -> RegionSpec:
    where = f"regions[{index}]"
    name = _require(obj, "name", where)
    kind_name = _require(obj, "kind", where)
    if kind_name not in _KIND_NAMES:
        raise ValidationError(
            f"{where}: unknown kind {kind_name!r}, expected one of {sorted(_KIND_NAMES)}"
        )
    kind = _KIND_NAMES[kind_name]
    eps_nom = _number(_require(obj, "eps_nom", where), f"{where}.eps_nom")
    eps_assumed = _number(_require(obj, "eps_assumed", where), f"{where}.eps_assumed")
    t_nom = t_assumed = None
    if kind.is_interface:
        t_nom = _number(_require(obj, "t_nom_nm", where), f"{where}.t_nom_nm")
        t_assumed = _number(_require(obj, "t_assumed_nm", where), f"{where}.t_assumed_nm")
    try:
        return RegionSpec(name, kind, eps_nom, eps_assumed, t_nom, t_assumed)
    except ValidationError as exc:
        raise ValidationError(f"{where}: {exc}") from None


def _parse_device(
    obj: Mapping[str, Any], index: int, n_regions: int, scale: float
) -> DeviceGeometry:
    device_id = obj.get("id")
    where = f"devices[{index}]" + (f" ({device_id!r})" if device_id else "")
    if not device_id:
        raise ValidationError(f"{where}: missing required field 'id'")
    raw = _require(obj, "participation", where)
    if not isinstance(raw, list):
        raise ValidationError(f"{where}: participation must be an array")
    if len(raw) != n_regions:
        raise ValidationError(
            f"{where}: participation has {len(raw)} entries but the dataset "
            f"defines {n_regions} regions"
        )
    participation = tuple(
        _number(v, f"{where}.participation[{i}]") * scale for i, v in enumerate(raw)
    )
    etch = obj.get("etch_style")
    if etch is not None and etch not in _ETCH_NAMES:
        raise ValidationError(
            f"{where}: unknown etch_style {etch!r}, expected one of {sorted(_ETCH_NAMES)}"
        )

    def opt(key: str) -> float | None:
        return _number(obj[key], f"{where}.{key}") if key in obj and obj[key] is not None else None

    try:
        return DeviceGeometry(
            id=str(device_id),
            participation=participation,
            w=opt("w_um"),
            g=opt("g_um"),
            d=opt("d_um"),
            etch_style=_ETCH_NAMES[etch] if etch is not None else None,
        )
    except ValidationError as exc:
        raise ValidationError(f"{where}: {exc}") from None


def _read_samples_csv(path: Path, where: str) -> tuple[list[float], list[float]]:
    if not path.exists():
        raise ValidationError(f"{where}: samples file {path} does not exist")
    q_low: list[float] = []
    q_high: list[float] = []
    with path.open(newline="") as fh:
        reader = csv.DictReader(row for row in fh if not row.startswith("#"))
        if reader.fieldnames is None or not {"q_low", "q_high"} <= set(reader.fieldnames):
            raise ValidationError(
                f"{where}: {path} must have 'q_low' and 'q_high' columns"
            )
        for i, row in enumerate(reader):
            for col, dest in (("q_low", q_low), ("q_high", q_high)):
                cell = (row.get(col) or "").strip()
                if cell:
                    try:
                        dest.append(float(cell))
                    except ValueError:
                        raise ValidationError(
                            f"{where}: {path} row {i + 1}: bad {col} value {cell!r}"
                        ) from None
    return q_low, q_high


def _parse_measurement(obj: Mapping[str, Any], index: int, base: Path) -> MeasurementSet:
    device_id = obj.get("device_id")
    where = f"measurements[{index}]" + (f" ({device_id!r})" if device_id else "")
    if not device_id:
        raise ValidationError(f"{where}: missing required field 'device_id'")
    if "samples_csv" in obj:
        q_low, q_high = _read_samples_csv(base / str(obj["samples_csv"]), where)
    else:
        q_low = [_number(v, f"{where}.q_low") for v in _require(obj, "q_low", where)]
        q_high = [_number(v, f"{where}.q_high") for v in _require(obj, "q_high", where)]
    try:
        return MeasurementSet(str(device_id), tuple(q_low), tuple(q_high))
    except ValidationError as exc:
        raise ValidationError(f"{where}: {exc}") from None


def _parse_qtls(obj: Mapping[str, Any], index: int) -> QtlsDistribution:
    device_id = obj.get("device_id")
    where = f"qtls[{index}]" + (f" ({device_id!r})" if device_id else "")
    if not device_id:
        raise ValidationError(f"{where}: missing required field 'device_id'")
    try:
        return QtlsDistribution(
            device_id=str(device_id),
            inv_q_mean=_number(_require(obj, "inv_q_mean", where), f"{where}.inv_q_mean"),
            inv_q_stderr=_number(_require(obj, "inv_q_stderr", where), f"{where}.inv_q_stderr"),
            n_samples=int(_require(obj, "n_samples", where)),
        )
    except ValidationError as exc:
        raise ValidationError(f"{where}: {exc}") from None


def _load_json(path: Path) -> dict[str, Any]:
    if not path.exists():
        raise ValidationError(f"{path}: file does not exist")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(doc, dict):
        raise ValidationError(f"{path}: top level must be a JSON object")
    return doc


def load_dataset(path: "str | Path") -> Dataset:
    """Load and fully validate a dataset file.

    The file must declare ``participation_units`` ("fraction" or
    "percent"); there is no silent default.
    """
    path = Path(path)
    doc = _load_json(path)

    units = doc.get("participation_units")
    if units is None:
        raise ValidationError(
            f"{path}: missing 'participation_units' (declare \"fraction\" or \"percent\")"
        )
    if units not in ("fraction", "percent"):
        raise ValidationError(
            f"{path}: participation_units must be 'fraction' or 'percent', got {units!r}"
        )
    scale = 0.01 if units == "percent" else 1.0

    regions_raw = _require(doc, "regions", str(path))
    devices_raw = _require(doc, "devices", str(path))
    if not isinstance(regions_raw, list) or not isinstance(devices_raw, list):
        raise ValidationError(f"{path}: 'regions' and 'devices' must be arrays")

    regions = tuple(_parse_region(r, i) for i, r in enumerate(regions_raw))
    devices = tuple(
        _parse_device(d, i, len(regions), scale) for i, d in enumerate(devices_raw)
    )
    matrix = ParticipationMatrix(regions, devices)

    measurements = tuple(
        _parse_measurement(m, i, path.parent)
        for i, m in enumerate(doc.get("measurements", []))
    )
    qtls = tuple(_parse_qtls(q, i) for i, q in enumerate(doc.get("qtls", [])))

    return Dataset(
        matrix=matrix,
        name=str(doc.get("name", "")),
        measurements=measurements,
        qtls=qtls,
        metadata=dict(doc.get("metadata", {})),
    )


def _region_to_json(r: RegionSpec) -> dict[str, Any]:
    out: dict[str, Any] = {
        "name": r.name,
        "kind": r.kind.value,
        "eps_nom": r.eps_nom,
        "eps_assumed": r.eps_assumed,
    }
    if r.kind.is_interface:
        out["t_nom_nm"] = r.t_nom
        out["t_assumed_nm"] = r.t_assumed
    return out


def _device_to_json(d: DeviceGeometry) -> dict[str, Any]:
    out: dict[str, Any] = {"id": d.id}
    for key, value in (("w_um", d.w), ("g_um", d.g), ("d_um", d.d)):
        if value is not None:
            out[key] = value
    if d.etch_style is not None:
        out["etch_style"] = d.etch_style.value
    out["participation"] = list(d.participation)
    return out


def dataset_to_json(dataset: Dataset) -> dict[str, Any]:
    """Canonical JSON form of a dataset (fractions, full precision)."""
    doc: dict[str, Any] = {
        "name": dataset.name,
        "participation_units": "fraction",
        "regions": [_region_to_json(r) for r in dataset.regions],
        "devices": [_device_to_json(d) for d in dataset.matrix.rows],
    }
    if dataset.measurements:
        doc["measurements"] = [
            {
                "device_id": m.device_id,
                "q_low": list(m.q_low_samples),
                "q_high": list(m.q_high_samples),
            }
            for m in dataset.measurements
        ]
    if dataset.qtls:
        doc["qtls"] = [
            {
                "device_id": q.device_id,
                "inv_q_mean": q.inv_q_mean,
                "inv_q_stderr": q.inv_q_stderr,
                "n_samples": q.n_samples,
            }
            for q in dataset.qtls
        ]
    if dataset.metadata:
        doc["metadata"] = dict(dataset.metadata)
    return doc


def write_dataset(dataset: Dataset, path: "str | Path") -> Path:
    path = Path(path)
    path.write_text(json.dumps(dataset_to_json(dataset), indent=2) + "\n")
    return path


def load_regions(path: "str | Path") -> tuple[RegionSpec, ...]:
    """Region set from a dataset file or a regions-only JSON file."""
    doc = _load_json(Path(path))
    regions_raw = _require(doc, "regions", str(path))
    if not isinstance(regions_raw, list):
        raise ValidationError(f"{path}: 'regions' must be an array")
    return tuple(_parse_region(r, i) for i, r in enumerate(regions_raw))


def load_loss_vector(path: "str | Path", regions: Sequence[RegionSpec]) -> LossVector:
    """Loss vector from JSON: {"basis": ..., "values": [...]} over ``regions``."""
    doc = _load_json(Path(path))
    basis_name = doc.get("basis", LossBasis.LOSS_FACTOR.value)
    if basis_name not in _BASIS_NAMES:
        raise ValidationError(
            f"{path}: unknown basis {basis_name!r}, expected one of {sorted(_BASIS_NAMES)}"
        )
    values = _require(doc, "values", str(path))
    if not isinstance(values, list):
        raise ValidationError(f"{path}: 'values' must be an array")
    names = tuple(r.name for r in regions)
    if "regions" in doc and isinstance(doc["regions"], list) and all(
        isinstance(x, str) for x in doc["regions"]
    ):
        if tuple(doc["regions"]) != names:
            raise ValidationError(
                f"{path}: vector regions {doc['regions']} do not match the "
                f"dataset regions {list(names)}"
            )
    if len(values) != len(names):
        raise ValidationError(
            f"{path}: {len(values)} values for {len(names)} regions"
        )
    return LossVector(
        names,
        tuple(_number(v, f"{path}: values[{i}]") for i, v in enumerate(values)),
        _BASIS_NAMES[basis_name],
    )


def load_simexp_config(
    path: "str | Path", *, seed: "int | None" = None
) -> tuple[SimExpConfig, Path]:
    """Simulated-experiment config plus the resolved dataset path.

    The config's ``dataset`` entry is resolved relative to the config
    file.  A ``seed`` argument overrides the config's seed.
    """
    from .model import convert_loss_vector  # local import keeps module load light

    path = Path(path)
    doc = _load_json(path)
    dataset_path = (path.parent / str(_require(doc, "dataset", str(path)))).resolve()
    dataset = load_dataset(dataset_path)

    target_doc = _require(doc, "target", str(path))
    if not isinstance(target_doc, dict):
        raise ValidationError(f"{path}: 'target' must be an object")
    basis_name = target_doc.get("basis", LossBasis.LOSS_FACTOR.value)
    if basis_name not in _BASIS_NAMES:
        raise ValidationError(f"{path}: unknown target basis {basis_name!r}")
    values = _require(target_doc, "values", f"{path}: target")
    names = dataset.matrix.region_names
    if not isinstance(values, list) or len(values) != len(names):
        raise ValidationError(
            f"{path}: target must list {len(names)} values (one per region)"
        )
    target = LossVector(
        names,
        tuple(_number(v, f"{path}: target.values[{i}]") for i, v in enumerate(values)),
        _BASIS_NAMES[basis_name],
    )
    target = convert_loss_vector(dataset.regions, target, LossBasis.LOSS_FACTOR)

    grid = doc.get("n_devices_grid", list(SimExpConfig.n_devices_grid))
    if not isinstance(grid, list) or not all(isinstance(n, int) for n in grid):
        raise ValidationError(f"{path}: n_devices_grid must be an array of integers")

    try:
        config = SimExpConfig(
            matrix=dataset.matrix,
            target=target,
            n_devices_grid=tuple(grid),
            relative_sd=_number(doc.get("relative_sd", 0.1), f"{path}: relative_sd"),
            n_repetitions=int(doc.get("n_repetitions", 20)),
            mc_trials=int(doc.get("mc_trials", 1000)),
            seed=int(seed if seed is not None else doc.get("seed", 0)),
        )
    except ValidationError as exc:
        raise ValidationError(f"{path}: {exc}") from None
    return config, dataset_path
