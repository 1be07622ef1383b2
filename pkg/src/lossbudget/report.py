"""Result serialization: JSON reports, plot-ready CSV, and re-loading.

JSON reports are the round-trippable form (an extraction report can be
fed back into ``predict``).  CSV reports are plot-ready: extraction
ensembles become per-region histograms, worst-case curves become one
row per (region, N).  Every report embeds the SHA-256 digest of its
input dataset so results stay traceable, and contains nothing
non-deterministic (no timestamps), so identical runs produce identical
bytes.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from .dataset import Dataset, dataset_to_json
from .design import DesignSearchResult
from .errors import ValidationError
from .model import LossBasis, LossVector, QtlsDistribution
from .simexp import WorstCaseCurve
from .solver import ConditionReport
from .uncertainty import ExtractionResult, QPrediction

__all__ = ["write_report", "to_payload", "load_extraction"]

HISTOGRAM_BINS = 60


def to_payload(result: Any, *, input_digest: "str | None" = None,
               params: "Mapping[str, Any] | None" = None,
               extra: "Mapping[str, Any] | None" = None) -> dict[str, Any]:
    """JSON-serializable payload for any supported result type."""
    payload: dict[str, Any] = {"kind": _kind_of(result)}
    if input_digest is not None:
        payload["input_sha256"] = input_digest
    if params:
        payload["params"] = dict(params)
    payload.update(_body_of(result))
    if extra:
        payload.update(extra)
    return payload


def _kind_of(result: Any) -> str:
    mapping = {
        ExtractionResult: "extraction",
        QPrediction: "prediction",
        WorstCaseCurve: "worst_case_curve",
        ConditionReport: "condition",
        DesignSearchResult: "design_search",
        LossVector: "loss_vector",
        Dataset: "dataset",
    }
    for cls, kind in mapping.items():
        if isinstance(result, cls):
            return kind
    if _is_qtls_table(result):
        return "qtls_table"
    if _is_decomposition(result):
        return "decomposition"
    raise ValidationError(f"cannot serialize result of type {type(result).__name__}")


def _is_qtls_table(result: Any) -> bool:
    return isinstance(result, (list, tuple)) and bool(result) and all(
        isinstance(r, QtlsDistribution) for r in result
    )


def _is_decomposition(result: Any) -> bool:
    return isinstance(result, (list, tuple)) and bool(result) and all(
        isinstance(r, dict) and {"device_id", "region", "inv_q"} <= set(r) for r in result
    )


def _body_of(result: Any) -> dict[str, Any]:
    if isinstance(result, ExtractionResult):
        return {
            "regions": list(result.regions),
            "point": list(result.point.values),
            "point_residual_norm": result.point_residual_norm,
            "mean": list(result.mean),
            "ci95": [list(ci) for ci in result.ci95],
            "basis": result.point.basis.value,
            "seed": result.seed,
            "n_trials": result.n_trials,
            "ensemble": [list(row) for row in result.ensemble_array()],
        }
    if isinstance(result, QPrediction):
        return {
            "q_mean": result.q_mean,
            "ci95": list(result.ci95),
            "n_trials_used": result.n_trials_used,
            "n_trials_skipped": result.n_trials_skipped,
        }
    if isinstance(result, WorstCaseCurve):
        return {
            "regions": list(result.regions),
            "n_devices_grid": list(result.n_devices_grid),
            "worst_low": [list(row) for row in np.asarray(result.worst_low)],
            "worst_high": [list(row) for row in np.asarray(result.worst_high)],
            "repetitions": [
                {
                    "n_devices": r.n_devices,
                    "repetition": r.repetition,
                    "ci_low": list(r.ci_low),
                    "ci_high": list(r.ci_high),
                }
                for r in result.records
            ],
        }
    if isinstance(result, ConditionReport):
        return {
            "kappa": result.kappa,
            "singular_values": list(result.singular_values),
            "rank_estimate": result.rank_estimate,
        }
    if isinstance(result, DesignSearchResult):
        return {
            "selected_ids": list(result.selected_ids),
            "kappa": result.kappa,
            "ranked_alternatives": [
                {"device_ids": list(s.device_ids), "kappa": s.kappa}
                for s in result.ranked_alternatives
            ],
        }
    if isinstance(result, LossVector):
        return {
            "regions": list(result.regions),
            "values": list(result.values),
            "basis": result.basis.value,
        }
    if isinstance(result, Dataset):
        return dataset_to_json(result)
    if _is_qtls_table(result):
        return {
            "devices": [
                {
                    "device_id": q.device_id,
                    "inv_q_mean": q.inv_q_mean,
                    "inv_q_stderr": q.inv_q_stderr,
                    "n_samples": q.n_samples,
                }
                for q in result
            ]
        }
    if _is_decomposition(result):
        return {"contributions": [dict(r) for r in result]}
    raise ValidationError(f"cannot serialize result of type {type(result).__name__}")


def _csv_rows(result: Any) -> tuple[list[str], list[list[Any]]]:
    if isinstance(result, ExtractionResult):
        # Per-region ensemble histograms, ready for plotting.
        header = ["region", "bin_left", "bin_right", "count"]
        rows: list[list[Any]] = []
        ensemble = result.ensemble_array()
        for i, region in enumerate(result.regions):
            column = ensemble[:, i]
            counts, edges = np.histogram(column, bins=HISTOGRAM_BINS)
            for b in range(counts.size):
                rows.append([region, repr(float(edges[b])), repr(float(edges[b + 1])), int(counts[b])])
        return header, rows
    if isinstance(result, WorstCaseCurve):
        header = ["region", "n_devices", "worst_low", "worst_high"]
        rows = []
        low = np.asarray(result.worst_low)
        high = np.asarray(result.worst_high)
        for i, region in enumerate(result.regions):
            for j, n in enumerate(result.n_devices_grid):
                rows.append([region, n, repr(float(low[j, i])), repr(float(high[j, i]))])
        return header, rows
    if isinstance(result, ConditionReport):
        header = ["index", "singular_value"]
        return header, [
            [i, repr(float(s))] for i, s in enumerate(result.singular_values)
        ]
    if isinstance(result, DesignSearchResult):
        header = ["rank", "device_ids", "kappa"]
        return header, [
            [i, ";".join(s.device_ids), repr(float(s.kappa))]
            for i, s in enumerate(result.ranked_alternatives)
        ]
    if isinstance(result, LossVector):
        header = ["region", "value", "basis"]
        return header, [
            [r, repr(float(v)), result.basis.value]
            for r, v in zip(result.regions, result.values)
        ]
    if isinstance(result, QPrediction):
        header = ["q_mean", "ci_low", "ci_high", "n_trials_used", "n_trials_skipped"]
        return header, [[
            repr(result.q_mean), repr(result.ci95[0]), repr(result.ci95[1]),
            result.n_trials_used, result.n_trials_skipped,
        ]]
    if _is_qtls_table(result):
        header = ["device_id", "inv_q_mean", "inv_q_stderr", "n_samples"]
        return header, [
            [q.device_id, repr(q.inv_q_mean), repr(q.inv_q_stderr), q.n_samples]
            for q in result
        ]
    if _is_decomposition(result):
        header = ["device_id", "region", "inv_q"]
        return header, [
            [r["device_id"], r["region"], repr(float(r["inv_q"]))] for r in result
        ]
    raise ValidationError(
        f"no CSV form for result of type {type(result).__name__}; use JSON"
    )


def write_report(
    result: Any,
    path: "str | Path",
    fmt: str = "json",
    *,
    input_digest: "str | None" = None,
    params: "Mapping[str, Any] | None" = None,
    extra: "Mapping[str, Any] | None" = None,
) -> Path:
    """Serialize ``result`` to ``path`` as JSON or plot-ready CSV.

    ``extra`` entries are merged into JSON payloads (ignored for CSV).
    """
    path = Path(path)
    if fmt == "json":
        payload = to_payload(result, input_digest=input_digest, params=params, extra=extra)
        text = json.dumps(payload, indent=2) + "\n"
    elif fmt == "csv":
        header, rows = _csv_rows(result)
        buf = io.StringIO()
        buf.write(f"# kind={_kind_of(result)}\n")
        if input_digest is not None:
            buf.write(f"# input_sha256={input_digest}\n")
        for key, value in (params or {}).items():
            buf.write(f"# {key}={value}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
        text = buf.getvalue()
    else:
        raise ValidationError(f"unknown report format {fmt!r} (expected json or csv)")
    try:
        path.write_text(text)
    except OSError as exc:
        raise ValidationError(f"cannot write report to {path}: {exc}") from None
    return path


def load_extraction(path: "str | Path") -> ExtractionResult:
    """Re-load an extraction report written as JSON."""
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"{path}: file does not exist")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc})") from None
    if doc.get("kind") != "extraction":
        raise ValidationError(f"{path}: not an extraction report")
    try:
        regions = tuple(str(r) for r in doc["regions"])
        ensemble = np.asarray(doc["ensemble"], dtype=float)
        return ExtractionResult(
            regions=regions,
            point=LossVector(regions, tuple(doc["point"]), LossBasis(doc["basis"])),
            point_residual_norm=float(doc["point_residual_norm"]),
            mean=tuple(float(v) for v in doc["mean"]),
            ci95=tuple((float(lo), float(hi)) for lo, hi in doc["ci95"]),
            ensemble=ensemble,
            seed=int(doc["seed"]),
            n_trials=int(doc["n_trials"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"{path}: malformed extraction report ({exc})") from None
