import json

import pytest

from lossbudget import Dataset, ValidationError, load_dataset, write_dataset
from lossbudget.dataset import (
    file_digest,
    load_loss_vector,
    load_regions,
    load_simexp_config,
)
from lossbudget.fixtures import fixture_path
from lossbudget.model import LossBasis


def minimal_doc(**overrides):
    doc = {
        "name": "test",
        "participation_units": "fraction",
        "regions": [
            {"name": "MS", "kind": "perpendicular", "eps_nom": 11.35,
             "eps_assumed": 11.4, "t_nom_nm": 10.0, "t_assumed_nm": 2.0},
            {"name": "Si", "kind": "bulk", "eps_nom": 11.35, "eps_assumed": 11.35},
        ],
        "devices": [
            {"id": "a", "participation": [0.01, 0.9]},
            {"id": "b", "participation": [0.002, 0.8]},
        ],
    }
    doc.update(overrides)
    return doc


def write_doc(tmp_path, doc, name="ds.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return path


class TestLoadDataset:
    def test_bundled_isotropic_fixture(self):
        ds = load_dataset(fixture_path("p_iso.json"))
        assert len(ds.matrix.rows) == 4
        assert ds.matrix.region_names == ("MS", "SA", "MA", "Si")
        # Percent entries are converted to fractions on load.
        assert ds.matrix.values()[0][0] == pytest.approx(0.2738 / 100)
        assert ds.matrix.rows[0].d == pytest.approx(0.28)

    def test_missing_units_is_an_error(self, tmp_path):
        doc = minimal_doc()
        del doc["participation_units"]
        with pytest.raises(ValidationError, match="participation_units"):
            load_dataset(write_doc(tmp_path, doc))

    def test_bad_units_value(self, tmp_path):
        doc = minimal_doc(participation_units="permille")
        with pytest.raises(ValidationError, match="permille"):
            load_dataset(write_doc(tmp_path, doc))

    def test_percent_conversion(self, tmp_path):
        doc = minimal_doc(participation_units="percent")
        doc["devices"] = [{"id": "a", "participation": [1.0, 90.0]}]
        ds = load_dataset(write_doc(tmp_path, doc))
        assert ds.matrix.values()[0].tolist() == [0.01, 0.9]

    def test_wrong_participation_length_names_device(self, tmp_path):
        doc = minimal_doc()
        doc["devices"][1] = {"id": "b", "participation": [0.1, 0.2, 0.3]}
        with pytest.raises(ValidationError, match="'b'"):
            load_dataset(write_doc(tmp_path, doc))

    def test_unknown_kind_is_an_error(self, tmp_path):
        doc = minimal_doc()
        doc["regions"][0]["kind"] = "diagonal"
        with pytest.raises(ValidationError, match="diagonal"):
            load_dataset(write_doc(tmp_path, doc))

    def test_measurement_referencing_unknown_device(self, tmp_path):
        doc = minimal_doc(measurements=[
            {"device_id": "ghost", "q_low": [1e6], "q_high": [1e12]},
        ])
        with pytest.raises(ValidationError, match="ghost"):
            load_dataset(write_doc(tmp_path, doc))

    def test_measurements_and_qtls_parse(self, tmp_path):
        doc = minimal_doc(
            measurements=[{"device_id": "a", "q_low": [1e6, 1.1e6], "q_high": [1e12, 1e12]}],
            qtls=[{"device_id": "b", "inv_q_mean": 1e-6, "inv_q_stderr": 1e-8, "n_samples": 30}],
        )
        ds = load_dataset(write_doc(tmp_path, doc))
        dists = ds.distributions()
        assert dists[0].device_id == "a"
        assert dists[0].n_samples == 2
        assert dists[1].inv_q_mean == 1e-6

    def test_distributions_require_data_for_every_device(self, tmp_path):
        doc = minimal_doc(
            qtls=[{"device_id": "b", "inv_q_mean": 1e-6, "inv_q_stderr": 0.0, "n_samples": 3}],
        )
        ds = load_dataset(write_doc(tmp_path, doc))
        with pytest.raises(ValidationError, match="'a'"):
            ds.distributions()

    def test_samples_csv(self, tmp_path):
        csv_path = tmp_path / "samples.csv"
        csv_path.write_text("q_low,q_high\n1e6,1e12\n1.2e6,1e12\n")
        doc = minimal_doc(measurements=[{"device_id": "a", "samples_csv": "samples.csv"}])
        ds = load_dataset(write_doc(tmp_path, doc))
        assert ds.measurements[0].q_low_samples == (1e6, 1.2e6)

    def test_samples_csv_missing_column(self, tmp_path):
        (tmp_path / "samples.csv").write_text("q_low\n1e6\n")
        doc = minimal_doc(measurements=[{"device_id": "a", "samples_csv": "samples.csv"}])
        with pytest.raises(ValidationError, match="q_high"):
            load_dataset(write_doc(tmp_path, doc))

    def test_not_json(self, tmp_path):
        path = tmp_path / "junk.json"
        path.write_text("not json {")
        with pytest.raises(ValidationError, match="invalid JSON"):
            load_dataset(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ValidationError, match="does not exist"):
            load_dataset(tmp_path / "nope.json")


class TestRoundTrip:
    def test_load_write_load_identity(self, tmp_path):
        doc = minimal_doc(
            measurements=[{"device_id": "a", "q_low": [1e6, 1.1e6], "q_high": [1e12, 1e12]}],
            qtls=[{"device_id": "b", "inv_q_mean": 1e-6, "inv_q_stderr": 1e-8, "n_samples": 30}],
            metadata={"source": "unit-test"},
        )
        ds = load_dataset(write_doc(tmp_path, doc))
        out = tmp_path / "round.json"
        write_dataset(ds, out)
        again = load_dataset(out)
        assert again == ds

    def test_percent_dataset_round_trips_as_fractions(self, tmp_path):
        ds = load_dataset(fixture_path("p_ani.json"))
        out = tmp_path / "ani.json"
        write_dataset(ds, out)
        again = load_dataset(out)
        assert again.matrix == ds.matrix
        assert json.loads(out.read_text())["participation_units"] == "fraction"

    def test_digest_is_stable(self, tmp_path):
        path = write_doc(tmp_path, minimal_doc())
        assert file_digest(path) == file_digest(path)
        assert len(file_digest(path)) == 64


class TestAuxiliaryLoaders:
    def test_load_regions_from_regions_file(self):
        regions = load_regions(fixture_path("regions_default.json"))
        assert tuple(r.name for r in regions) == ("MS", "SA", "MA", "Si")

    def test_load_regions_from_dataset_file(self):
        regions = load_regions(fixture_path("p_iso.json"))
        assert len(regions) == 4

    def test_load_loss_vector(self, tmp_path):
        regions = load_regions(fixture_path("regions_default.json"))
        path = tmp_path / "lv.json"
        path.write_text(json.dumps({
            "basis": "loss_tangent",
            "regions": ["MS", "SA", "MA", "Si"],
            "values": [4.8e-4, 1.7e-3, 3.3e-3, 2.6e-7],
        }))
        lv = load_loss_vector(path, regions)
        assert lv.basis is LossBasis.LOSS_TANGENT
        assert lv.values[0] == 4.8e-4

    def test_load_loss_vector_region_mismatch(self, tmp_path):
        regions = load_regions(fixture_path("regions_default.json"))
        path = tmp_path / "lv.json"
        path.write_text(json.dumps({"values": [1, 2, 3, 4], "regions": ["a", "b", "c", "d"]}))
        with pytest.raises(ValidationError, match="do not match"):
            load_loss_vector(path, regions)

    def test_load_simexp_config_bundled(self):
        config, dataset_path = load_simexp_config(fixture_path("simulate_iso.json"))
        assert dataset_path.name == "p_iso.json"
        assert config.n_devices_grid == (40, 80, 120, 240)
        assert config.relative_sd == 0.1
        assert config.mc_trials == 1000
        # The tangent-basis target is converted to loss factors on load.
        assert config.target.basis is LossBasis.LOSS_FACTOR
        assert config.target.values[0] == pytest.approx(0.2 * (11.35 / 11.4) * 4.8e-4)

    def test_load_simexp_config_seed_override(self):
        config, _ = load_simexp_config(fixture_path("simulate_iso.json"), seed=77)
        assert config.seed == 77


class TestDatasetIntegrity:
    def test_direct_construction_checks_references(self, tmp_path):
        ds = load_dataset(write_doc(tmp_path, minimal_doc()))
        from lossbudget import QtlsDistribution

        with pytest.raises(ValidationError, match="unknown device"):
            Dataset(
                matrix=ds.matrix,
                qtls=(QtlsDistribution("ghost", 1e-6, 0.0, 3),),
            )
