"""Command-line interface.

Subcommands cover the whole pipeline: dataset summaries, conditioning
diagnostics, Monte Carlo loss extraction, Q prediction, per-region loss
decomposition, basis conversion, design search and simulated
measurement campaigns.  Exit codes: 0 success, 2 validation error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__
from .dataset import (
    file_digest,
    load_dataset,
    load_loss_vector,
    load_regions,
    load_simexp_config,
)
from .design import search_min_condition
from .errors import NumericalError, ValidationError
from .model import (
    LossBasis,
    LossVector,
    convert_loss_vector,
    decompose_losses,
    q_tls_forward,
    tangent_from_loss_factor,
)
from .report import load_extraction, to_payload, write_report
from .simexp import run_simulated_experiment
from .solver import condition_number
from .uncertainty import extract_mc, predict_q_mc, summarize

__all__ = ["main", "cli"]


def _report_format(path: Path) -> str:
    return "csv" if path.suffix.lower() == ".csv" else "json"


def _figure_path(out: Path) -> Path:
    return out.with_suffix(".png")


def _emit(args, payload: dict[str, Any], text_lines: Sequence[str]) -> None:
    if args.format == "json":
        print(json.dumps(payload, indent=2))
    else:
        for line in text_lines:
            print(line)


def _parse_values(tokens: Sequence[str]) -> list[float]:
    flat: list[str] = []
    for token in tokens:
        flat.extend(t for t in token.split(",") if t)
    try:
        return [float(t) for t in flat]
    except ValueError as exc:
        raise ValidationError(f"bad numeric value in --values: {exc}") from None


def _si(value: float) -> str:
    return f"{value:.6g}"


def cmd_extract(args) -> int:
    dataset = load_dataset(args.dataset)
    digest = file_digest(args.dataset)
    result = extract_mc(
        dataset.matrix,
        dataset.distributions(),
        args.trials,
        args.seed,
        sample_space=args.sample_space,
        workers=args.workers,
    )
    tangents_point = convert_loss_vector(
        dataset.regions, result.point, LossBasis.LOSS_TANGENT
    )
    params = {
        "dataset": str(args.dataset),
        "trials": args.trials,
        "seed": args.seed,
        "sample_space": args.sample_space,
    }
    # Tangent conversion is a positive per-region rescaling, so means and
    # CI bounds map through directly.
    extra = {
        "point_loss_tangents": list(tangents_point.values),
        "mean_loss_tangents": [
            tangent_from_loss_factor(r, m) for r, m in zip(dataset.regions, result.mean)
        ],
        "ci95_loss_tangents": [
            [tangent_from_loss_factor(r, lo), tangent_from_loss_factor(r, hi)]
            for r, (lo, hi) in zip(dataset.regions, result.ci95)
        ],
    }
    payload = to_payload(result, input_digest=digest, params=params, extra=extra)

    if args.out:
        out = Path(args.out)
        write_report(result, out, _report_format(out), input_digest=digest,
                     params=params, extra=extra)
        if not args.no_figure:
            from .figures import render_extraction

            render_extraction(result, _figure_path(out))

    lines = [f"extraction over {len(dataset.matrix.rows)} devices, "
             f"{args.trials} trials, seed {args.seed}"]
    lines.append(f"{'region':<8}{'point x':>12}{'mean x':>12}{'ci95 low':>12}{'ci95 high':>12}{'tan(point)':>13}")
    for i, region in enumerate(result.regions):
        lo, hi = result.ci95[i]
        lines.append(
            f"{region:<8}{_si(result.point.values[i]):>12}{_si(result.mean[i]):>12}"
            f"{_si(lo):>12}{_si(hi):>12}{_si(tangents_point.values[i]):>13}"
        )
    stdout_payload = dict(payload)
    stdout_payload.pop("ensemble", None)  # full ensemble lives in the --out report
    _emit(args, stdout_payload, lines)
    return 0


def cmd_predict(args) -> int:
    dataset = load_dataset(args.dataset)
    extraction = load_extraction(args.extraction)
    if extraction.regions != dataset.matrix.region_names:
        raise ValidationError(
            f"extraction regions {extraction.regions} do not match dataset "
            f"regions {dataset.matrix.region_names}"
        )
    row = dataset.matrix.row(args.device)
    prediction = predict_q_mc(row, extraction)

    measured_q = None
    for q in dataset.qtls:
        if q.device_id == args.device:
            measured_q = 1.0 / q.inv_q_mean
    if measured_q is None:
        for m in dataset.measurements:
            if m.device_id == args.device:
                measured_q = 1.0 / summarize(m).inv_q_mean

    digest = file_digest(args.dataset)
    params = {
        "dataset": str(args.dataset),
        "extraction": str(args.extraction),
        "extraction_sha256": file_digest(args.extraction),
        "device": args.device,
    }
    payload = to_payload(prediction, input_digest=digest, params=params)
    if measured_q is not None:
        payload["measured_q"] = measured_q

    if args.out:
        out = Path(args.out)
        write_report(prediction, out, _report_format(out), input_digest=digest, params=params)
        if not args.no_figure:
            from .figures import render_prediction

            render_prediction(prediction, _figure_path(out),
                              device_id=args.device, measured_q=measured_q)

    lo, hi = prediction.ci95
    lines = [
        f"device {args.device}: predicted Q_TLS = {_si(prediction.q_mean)} "
        f"(95% CI [{_si(lo)}, {_si(hi)}], {prediction.n_trials_used} trials)"
    ]
    if measured_q is not None:
        lines.append(f"measured Q_TLS = {_si(measured_q)}")
    _emit(args, payload, lines)
    return 0


def cmd_decompose(args) -> int:
    dataset = load_dataset(args.dataset)
    vector = _loss_vector_argument(args.loss_vector, dataset)
    factors = convert_loss_vector(dataset.regions, vector, LossBasis.LOSS_FACTOR)

    contributions = []
    for device in dataset.matrix.rows:
        terms = decompose_losses(device.participation, factors)
        for region, term in zip(dataset.matrix.region_names, terms):
            contributions.append(
                {"device_id": device.id, "region": region, "inv_q": float(term)}
            )

    digest = file_digest(args.dataset)
    params = {"dataset": str(args.dataset)}
    payload = to_payload(contributions, input_digest=digest, params=params)

    if args.out:
        out = Path(args.out)
        write_report(contributions, out, _report_format(out), input_digest=digest, params=params)
        if not args.no_figure:
            from .figures import render_decomposition

            render_decomposition(contributions, _figure_path(out))

    lines = [f"{'device':<18}{'region':<8}{'1/Q contribution':>18}"]
    for row in contributions:
        lines.append(f"{row['device_id']:<18}{row['region']:<8}{_si(row['inv_q']):>18}")
    for device in dataset.matrix.rows:
        q = q_tls_forward(device.participation, factors)
        lines.append(f"{device.id:<18}{'total':<8}{_si(1.0 / q):>18}  (Q_TLS = {_si(q)})")
    _emit(args, payload, lines)
    return 0


def _loss_vector_argument(spec: str, dataset) -> LossVector:
    """Inline comma-separated loss factors, a loss-vector file, or the
    point solution of an extraction report."""
    try:
        values = _parse_values([spec])
    except ValidationError:
        path = Path(spec)
        if path.exists():
            try:
                doc = json.loads(path.read_text())
            except (OSError, json.JSONDecodeError):
                doc = None
            if isinstance(doc, dict) and doc.get("kind") == "extraction":
                extraction = load_extraction(path)
                if extraction.regions != dataset.matrix.region_names:
                    raise ValidationError(
                        f"extraction regions {extraction.regions} do not match "
                        f"dataset regions {dataset.matrix.region_names}"
                    )
                return extraction.point
        return load_loss_vector(spec, dataset.regions)
    names = dataset.matrix.region_names
    if len(values) != len(names):
        raise ValidationError(
            f"--loss-vector lists {len(values)} values for {len(names)} regions"
        )
    return LossVector(names, tuple(values), LossBasis.LOSS_FACTOR)


def cmd_condition(args) -> int:
    dataset = load_dataset(args.dataset)
    report = condition_number(dataset.matrix)
    digest = file_digest(args.dataset)
    payload = to_payload(report, input_digest=digest, params={"dataset": str(args.dataset)})
    if args.out:
        out = Path(args.out)
        write_report(report, out, _report_format(out), input_digest=digest)
    lines = [
        f"condition number kappa = {report.kappa:.6g}",
        f"singular values: {', '.join(f'{s:.6g}' for s in report.singular_values)}",
        f"rank estimate: {report.rank_estimate}",
    ]
    _emit(args, payload, lines)
    return 0


def cmd_design_search(args) -> int:
    dataset = load_dataset(args.library)
    result = search_min_condition(dataset.matrix, args.k, top_m=args.top)
    digest = file_digest(args.library)
    params = {"library": str(args.library), "k": args.k}
    payload = to_payload(result, input_digest=digest, params=params)
    if args.out:
        out = Path(args.out)
        write_report(result, out, _report_format(out), input_digest=digest, params=params)
    lines = [
        f"best subset (k={args.k}): {', '.join(result.selected_ids)}  "
        f"kappa = {result.kappa:.6g}",
        "alternatives:",
    ]
    for i, alt in enumerate(result.ranked_alternatives):
        lines.append(f"  {i + 1:>2}. kappa = {alt.kappa:<12.6g} {', '.join(alt.device_ids)}")
    _emit(args, payload, lines)
    return 0


def cmd_simulate(args) -> int:
    config, dataset_path = load_simexp_config(args.config, seed=args.seed)
    curve = run_simulated_experiment(config, workers=args.workers)
    digest = file_digest(args.config)
    params = {
        "config": str(args.config),
        "dataset": str(dataset_path),
        "dataset_sha256": file_digest(dataset_path),
        "seed": config.seed,
        "relative_sd": config.relative_sd,
        "n_repetitions": config.n_repetitions,
        "mc_trials": config.mc_trials,
    }
    payload = to_payload(curve, input_digest=digest, params=params)
    if args.out:
        out = Path(args.out)
        write_report(curve, out, _report_format(out), input_digest=digest, params=params)
        if not args.no_figure:
            from .figures import render_worst_case

            render_worst_case(curve, _figure_path(out), target=config.target.values)

    lines = [f"{'region':<8}{'N':>6}{'worst_low':>14}{'worst_high':>14}"]
    low = np.asarray(curve.worst_low)
    high = np.asarray(curve.worst_high)
    for i, region in enumerate(curve.regions):
        for j, n in enumerate(curve.n_devices_grid):
            lines.append(f"{region:<8}{n:>6}{_si(low[j, i]):>14}{_si(high[j, i]):>14}")
    stdout_payload = dict(payload)
    stdout_payload.pop("repetitions", None)
    _emit(args, stdout_payload, lines)
    return 0


def cmd_convert(args) -> int:
    regions = load_regions(args.regions)
    values = _parse_values(args.values)
    if len(values) != len(regions):
        raise ValidationError(
            f"--values lists {len(values)} numbers for {len(regions)} regions"
        )
    names = tuple(r.name for r in regions)
    if args.direction == "tangent-to-factor":
        source = LossVector(names, tuple(values), LossBasis.LOSS_TANGENT)
        converted = convert_loss_vector(regions, source, LossBasis.LOSS_FACTOR)
    else:
        source = LossVector(names, tuple(values), LossBasis.LOSS_FACTOR)
        converted = convert_loss_vector(regions, source, LossBasis.LOSS_TANGENT)

    digest = file_digest(args.regions)
    params = {"regions": str(args.regions), "direction": args.direction}
    payload = to_payload(converted, input_digest=digest, params=params)
    if args.out:
        out = Path(args.out)
        write_report(converted, out, _report_format(out), input_digest=digest, params=params)
    lines = [f"{'region':<8}{'input':>14}{'converted':>14}"]
    for name, vin, vout in zip(names, values, converted.values):
        lines.append(f"{name:<8}{_si(vin):>14}{_si(vout):>14}")
    _emit(args, payload, lines)
    return 0


def cmd_summarize(args) -> int:
    dataset = load_dataset(args.dataset)
    explicit = {q.device_id: q for q in dataset.qtls}
    table = []
    for device in dataset.matrix.rows:
        if device.id in explicit:
            table.append(explicit[device.id])
            continue
        for m in dataset.measurements:
            if m.device_id == device.id:
                table.append(summarize(m))
                break
    if not table:
        raise ValidationError("dataset has no measurements or qtls statistics")

    digest = file_digest(args.dataset)
    payload = to_payload(table, input_digest=digest, params={"dataset": str(args.dataset)})
    if args.out:
        out = Path(args.out)
        write_report(table, out, _report_format(out), input_digest=digest)
    lines = [f"{'device':<18}{'n':>5}{'inv_q_mean':>14}{'inv_q_stderr':>14}{'Q_TLS':>12}"]
    for q in table:
        lines.append(
            f"{q.device_id:<18}{q.n_samples:>5}{_si(q.inv_q_mean):>14}"
            f"{_si(q.inv_q_stderr):>14}{_si(1.0 / q.inv_q_mean):>12}"
        )
    _emit(args, payload, lines)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lossbudget",
        description="Per-region dielectric loss extraction for superconducting resonators.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, figure: bool = False) -> None:
        p.add_argument("--format", choices=["text", "json"], default="text",
                       help="stdout format (default: text)")
        p.add_argument("--out", help="write a report file (.json or .csv)")
        if figure:
            p.add_argument("--no-figure", action="store_true",
                           help="skip rendering the companion PNG figure")

    p = sub.add_parser("extract", help="Monte Carlo loss-factor extraction")
    p.add_argument("--dataset", required=True)
    p.add_argument("--trials", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sample-space", choices=["inv_q", "q"], default="inv_q",
                   help="Monte Carlo sampling space (default: inv_q)")
    p.add_argument("--workers", type=int, default=1)
    add_common(p, figure=True)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("predict", help="predict a device's Q_TLS from an extraction")
    p.add_argument("--dataset", required=True)
    p.add_argument("--extraction", required=True, help="extraction report (JSON)")
    p.add_argument("--device", required=True)
    add_common(p, figure=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("decompose", help="per-region 1/Q contributions per device")
    p.add_argument("--dataset", required=True)
    p.add_argument("--loss-vector", required=True,
                   help="JSON loss-vector file, or comma-separated loss factors")
    add_common(p, figure=True)
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("condition", help="participation-matrix conditioning report")
    p.add_argument("--dataset", required=True)
    add_common(p)
    p.set_defaults(func=cmd_condition)

    p = sub.add_parser("design-search", help="find the best-conditioned device subset")
    p.add_argument("--library", required=True)
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--top", type=int, default=10, help="alternatives to keep")
    add_common(p)
    p.set_defaults(func=cmd_design_search)

    p = sub.add_parser("simulate", help="simulated measurement campaign (worst-case CI vs N)")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=None,
                   help="override the config seed")
    p.add_argument("--workers", type=int, default=1)
    add_common(p, figure=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("convert", help="convert between loss factors and loss tangents")
    p.add_argument("--regions", required=True,
                   help="dataset or regions JSON file providing the region assumptions")
    p.add_argument("--direction", required=True,
                   choices=["factor-to-tangent", "tangent-to-factor"])
    p.add_argument("--values", required=True, nargs="+",
                   help="input values, space- or comma-separated, one per region")
    add_common(p)
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("summarize", help="per-device 1/Q_TLS statistics table")
    p.add_argument("--dataset", required=True)
    add_common(p)
    p.set_defaults(func=cmd_summarize)

    return parser


def main(argv: "Sequence[str] | None" = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


def cli() -> None:
    sys.exit(main())


if __name__ == "__main__":
    cli()
