import numpy as np
import pytest

from lossbudget import (
    DeviceGeometry,
    LossBasis,
    LossVector,
    ParticipationMatrix,
    SimExpConfig,
    ValidationError,
    default_region_set,
    run_simulated_experiment,
    sample_device_qs,
)
from lossbudget.simexp import _allocate, _sampling_rng

REGIONS = default_region_set()


def identity_matrix():
    rows = tuple(
        DeviceGeometry(f"dev-{i}", tuple(1.0 if j == i else 0.0 for j in range(4)))
        for i in range(4)
    )
    return ParticipationMatrix(REGIONS, rows)


def target_for(matrix, values):
    return LossVector(matrix.region_names, tuple(values), LossBasis.LOSS_FACTOR)


class TestSampleDeviceQs:
    def test_zero_spread(self):
        rng = np.random.default_rng(1)
        qs = sample_device_qs(1e6, 0.0, 5, rng)
        assert qs.tolist() == [1e6] * 5

    def test_spread_matches_request(self):
        rng = np.random.default_rng(2)
        qs = sample_device_qs(1e6, 0.1, 10_000, rng)
        assert np.all(qs > 0)
        ratio = qs.std(ddof=1) / qs.mean()
        assert 0.097 <= ratio <= 0.103

    def test_single_draw_deterministic(self):
        a = sample_device_qs(1e6, 0.1, 1, _sampling_rng(3, 40, 0, 0))
        b = sample_device_qs(1e6, 0.1, 1, _sampling_rng(3, 40, 0, 0))
        assert a.tolist() == b.tolist()

    def test_param_validation(self):
        rng = np.random.default_rng(4)
        with pytest.raises(ValidationError):
            sample_device_qs(-1.0, 0.1, 5, rng)
        with pytest.raises(ValidationError):
            sample_device_qs(1e6, -0.1, 5, rng)
        with pytest.raises(ValidationError):
            sample_device_qs(1e6, 0.1, 0, rng)


class TestAllocation:
    def test_even_split(self):
        assert _allocate(8, ("a", "b", "c", "d")) == [2, 2, 2, 2]

    def test_remainder_to_earlier_ids(self):
        assert _allocate(10, ("a", "b", "c", "d")) == [3, 3, 2, 2]
        # Allocation follows id order, not row order.
        assert _allocate(10, ("d", "c", "b", "a")) == [2, 2, 3, 3]


class TestRunSimulatedExperiment:
    def test_zero_spread_collapses_to_target(self, iso_dataset, x_star_vector):
        config = SimExpConfig(
            matrix=iso_dataset.matrix,
            target=x_star_vector,
            n_devices_grid=(8, 16),
            relative_sd=0.0,
            n_repetitions=2,
            mc_trials=20,
            seed=5,
        )
        curve = run_simulated_experiment(config)
        target = x_star_vector.as_array()
        for j in range(2):
            assert np.asarray(curve.worst_low)[j] == pytest.approx(target, rel=1e-9)
            assert np.asarray(curve.worst_high)[j] == pytest.approx(target, rel=1e-9)

    def test_determinism_and_parallel_equivalence(self, iso_dataset, x_star_vector):
        config = SimExpConfig(
            matrix=iso_dataset.matrix,
            target=x_star_vector,
            n_devices_grid=(12,),
            relative_sd=0.1,
            n_repetitions=3,
            mc_trials=60,
            seed=9,
        )
        c1 = run_simulated_experiment(config)
        c2 = run_simulated_experiment(config)
        c3 = run_simulated_experiment(config, workers=4)
        assert np.array_equal(np.asarray(c1.worst_low), np.asarray(c2.worst_low))
        assert np.array_equal(np.asarray(c1.worst_high), np.asarray(c2.worst_high))
        assert np.array_equal(np.asarray(c1.worst_low), np.asarray(c3.worst_low))
        assert np.array_equal(np.asarray(c1.worst_high), np.asarray(c3.worst_high))
        assert c1.records == c2.records == c3.records

        other = run_simulated_experiment(
            SimExpConfig(
                matrix=config.matrix, target=config.target,
                n_devices_grid=(12,), relative_sd=0.1, n_repetitions=3,
                mc_trials=60, seed=10,
            )
        )
        assert not np.array_equal(np.asarray(c1.worst_low), np.asarray(other.worst_low))

    def test_insufficient_samples_per_design(self, iso_dataset, x_star_vector):
        config = SimExpConfig(
            matrix=iso_dataset.matrix,
            target=x_star_vector,
            n_devices_grid=(6,),  # < 2 per design for 4 designs
            relative_sd=0.1,
            n_repetitions=1,
            mc_trials=10,
            seed=1,
        )
        with pytest.raises(ValidationError, match="insufficient samples"):
            run_simulated_experiment(config)

    def test_identity_matrix_tracks_input_uncertainty(self):
        # With the ideal matrix, worst-case fractional width matches the
        # sampling fractional width of 1/Q to within Monte Carlo noise.
        matrix = identity_matrix()
        target = target_for(matrix, [1e-6, 2e-6, 5e-7, 3e-6])
        n = 80
        config = SimExpConfig(
            matrix=matrix, target=target, n_devices_grid=(n,),
            relative_sd=0.1, n_repetitions=8, mc_trials=400, seed=21,
        )
        curve = run_simulated_experiment(config)
        low = np.asarray(curve.worst_low)[0]
        high = np.asarray(curve.worst_high)[0]
        frac_width = (high - low) / target.as_array()
        # Expected one-repetition width ~ 2*1.96*rel_sd/sqrt(n/4); the
        # worst-case over repetitions widens it somewhat.
        expected = 2 * 1.959963984540054 * 0.1 / np.sqrt(n / 4)
        assert np.all(frac_width >= 0.7 * expected)
        assert np.all(frac_width <= 3.0 * expected)

    def test_target_containment(self, iso_dataset, x_star_vector):
        config = SimExpConfig(
            matrix=iso_dataset.matrix, target=x_star_vector,
            n_devices_grid=(120,), relative_sd=0.1,
            n_repetitions=10, mc_trials=300, seed=31,
        )
        curve = run_simulated_experiment(config)
        target = x_star_vector.as_array()
        hits = 0
        total = 0
        for record in curve.records:
            for i in range(4):
                total += 1
                if record.ci_low[i] <= target[i] <= record.ci_high[i]:
                    hits += 1
        assert hits / total >= 0.90

    def test_config_validation(self, iso_dataset, x_star_vector):
        with pytest.raises(ValidationError, match="grid"):
            SimExpConfig(matrix=iso_dataset.matrix, target=x_star_vector,
                         n_devices_grid=(1,))
        with pytest.raises(ValidationError, match="relative_sd"):
            SimExpConfig(matrix=iso_dataset.matrix, target=x_star_vector,
                         relative_sd=-0.5)
        tangent_vector = LossVector(
            iso_dataset.matrix.region_names, x_star_vector.values, LossBasis.LOSS_TANGENT
        )
        with pytest.raises(ValidationError, match="loss-factor"):
            SimExpConfig(matrix=iso_dataset.matrix, target=tangent_vector)

    def test_bounds_accessor(self, iso_dataset, x_star_vector):
        config = SimExpConfig(
            matrix=iso_dataset.matrix, target=x_star_vector,
            n_devices_grid=(8,), relative_sd=0.0, n_repetitions=1,
            mc_trials=5, seed=2,
        )
        curve = run_simulated_experiment(config)
        lo, hi = curve.bounds("MS", 8)
        assert lo <= hi
        with pytest.raises(ValueError):
            curve.bounds("MS", 999)
