import json

import numpy as np
import pytest

from lossbudget import (
    LossBasis,
    LossVector,
    QtlsDistribution,
    SimExpConfig,
    ValidationError,
    condition_number,
    extract_mc,
    run_simulated_experiment,
)
from lossbudget.report import load_extraction, to_payload, write_report


@pytest.fixture(scope="module")
def small_extraction(iso_dataset, x_star):
    matrix = iso_dataset.matrix
    b = matrix.values() @ x_star
    dists = [
        QtlsDistribution(d, float(v), 0.02 * float(v), 30)
        for d, v in zip(matrix.device_ids, b)
    ]
    return extract_mc(matrix, dists, 250, seed=3)


@pytest.fixture(scope="module")
def small_curve(iso_dataset, x_star_vector):
    config = SimExpConfig(
        matrix=iso_dataset.matrix, target=x_star_vector, n_devices_grid=(8, 12),
        relative_sd=0.05, n_repetitions=2, mc_trials=30, seed=4,
    )
    return run_simulated_experiment(config)


class TestExtractionReports:
    def test_json_round_trip(self, small_extraction, tmp_path):
        path = tmp_path / "extraction.json"
        write_report(small_extraction, path, "json", input_digest="ab" * 32)
        doc = json.loads(path.read_text())
        assert doc["kind"] == "extraction"
        assert doc["input_sha256"] == "ab" * 32
        assert doc["seed"] == 3
        assert doc["n_trials"] == 250
        loaded = load_extraction(path)
        assert loaded.regions == small_extraction.regions
        assert np.array_equal(loaded.ensemble_array(), small_extraction.ensemble_array())
        assert loaded.point.values == small_extraction.point.values
        assert loaded.ci95 == small_extraction.ci95

    def test_csv_histograms(self, small_extraction, tmp_path):
        path = tmp_path / "extraction.csv"
        write_report(small_extraction, path, "csv", input_digest="cd" * 32,
                     params={"trials": 250})
        lines = path.read_text().splitlines()
        assert lines[0] == "# kind=extraction"
        assert any(line.startswith("# input_sha256=cd") for line in lines)
        header_idx = next(i for i, l in enumerate(lines) if not l.startswith("#"))
        assert lines[header_idx] == "region,bin_left,bin_right,count"
        data = lines[header_idx + 1:]
        assert len(data) == 4 * 60  # regions x bins
        # Histogram counts per region sum to the number of trials.
        counts = {}
        for row in data:
            region, _, _, count = row.split(",")
            counts[region] = counts.get(region, 0) + int(count)
        assert set(counts.values()) == {250}

    def test_deterministic_bytes(self, small_extraction, tmp_path):
        p1 = tmp_path / "a.json"
        p2 = tmp_path / "b.json"
        write_report(small_extraction, p1, "json", input_digest="x")
        write_report(small_extraction, p2, "json", input_digest="x")
        assert p1.read_bytes() == p2.read_bytes()

    def test_load_extraction_rejects_other_kinds(self, tmp_path):
        path = tmp_path / "x.json"
        path.write_text(json.dumps({"kind": "condition"}))
        with pytest.raises(ValidationError, match="not an extraction"):
            load_extraction(path)


class TestCurveReports:
    def test_csv_rows(self, small_curve, tmp_path):
        path = tmp_path / "curve.csv"
        write_report(small_curve, path, "csv")
        lines = [l for l in path.read_text().splitlines() if not l.startswith("#")]
        assert lines[0] == "region,n_devices,worst_low,worst_high"
        assert len(lines) - 1 == 4 * 2  # regions x grid points
        for line in lines[1:]:
            region, n, lo, hi = line.split(",")
            assert float(lo) <= float(hi)

    def test_json_contains_repetitions(self, small_curve, tmp_path):
        path = tmp_path / "curve.json"
        write_report(small_curve, path, "json")
        doc = json.loads(path.read_text())
        assert doc["kind"] == "worst_case_curve"
        assert len(doc["repetitions"]) == 2 * 2
        assert doc["n_devices_grid"] == [8, 12]


class TestOtherPayloads:
    def test_condition_report(self, iso_dataset, tmp_path):
        report = condition_number(iso_dataset.matrix)
        payload = to_payload(report)
        assert payload["kind"] == "condition"
        assert payload["kappa"] == pytest.approx(2001.3, rel=1e-3)
        path = tmp_path / "cond.csv"
        write_report(report, path, "csv")
        assert "singular_value" in path.read_text()

    def test_loss_vector_payload(self):
        lv = LossVector(("MS", "Si"), (1e-4, 2.6e-7), LossBasis.LOSS_TANGENT)
        payload = to_payload(lv)
        assert payload["basis"] == "loss_tangent"
        assert payload["values"] == [1e-4, 2.6e-7]

    def test_qtls_table_payload(self):
        table = [QtlsDistribution("a", 1e-6, 1e-8, 30)]
        payload = to_payload(table)
        assert payload["kind"] == "qtls_table"
        assert payload["devices"][0]["device_id"] == "a"

    def test_decomposition_payload_and_csv(self, tmp_path):
        rows = [
            {"device_id": "a", "region": "MS", "inv_q": 1e-7},
            {"device_id": "a", "region": "Si", "inv_q": 2e-7},
        ]
        payload = to_payload(rows)
        assert payload["kind"] == "decomposition"
        path = tmp_path / "d.csv"
        write_report(rows, path, "csv")
        assert path.read_text().count("\n") >= 3

    def test_dataset_payload(self, iso_dataset):
        payload = to_payload(iso_dataset)
        assert payload["kind"] == "dataset"
        assert payload["participation_units"] == "fraction"

    def test_unknown_type_rejected(self):
        with pytest.raises(ValidationError, match="cannot serialize"):
            to_payload(object())

    def test_unknown_format_rejected(self, iso_dataset, tmp_path):
        report = condition_number(iso_dataset.matrix)
        with pytest.raises(ValidationError, match="format"):
            write_report(report, tmp_path / "x.yaml", "yaml")

    def test_full_precision_serialization(self, tmp_path):
        # Shortest-round-trip floats survive JSON exactly.
        lv = LossVector(("a",), (9.557894736842106e-05,))
        path = tmp_path / "lv.json"
        write_report(lv, path, "json")
        assert json.loads(path.read_text())["values"][0] == 9.557894736842106e-05
